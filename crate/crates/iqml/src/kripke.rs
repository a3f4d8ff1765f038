//! IQML structures: finite Kripke models with a model-supplied index set.
//!
//! A model is `(W, R_I, rho)`: a finite nonempty set of worlds, a finite
//! nonempty set of indices, one accessibility relation per index (stored as
//! labelled edge triples), and a valuation. The file format is line based:
//!
//! ```text
//! # comment
//! world <id> [<prop> ...]
//! index <id>
//! edge <src> <idx> <dst>
//! ```
//!
//! Worlds and indices must be declared before the edges that use them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::syntax::is_valid_ident;

/// A finite IQML model. Immutable after construction; [`KripkeModel::new`]
/// enforces the invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    worlds: BTreeSet<String>,
    indices: BTreeSet<String>,
    edges: BTreeSet<(String, String, String)>,
    valuation: BTreeMap<String, BTreeSet<String>>,
}

/// A model with a distinguished world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointedModel {
    pub model: KripkeModel,
    pub point: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelViolation {
    #[error("model has no worlds")]
    EmptyWorlds,
    #[error("model has no indices")]
    EmptyIndices,
    #[error("duplicate world '{0}'")]
    DuplicateWorld(String),
    #[error("duplicate index '{0}'")]
    DuplicateIndex(String),
    #[error("edge endpoint '{0}' is not a declared world")]
    UndeclaredWorld(String),
    #[error("edge label '{0}' is not a declared index")]
    UndeclaredIndex(String),
    #[error("invalid identifier '{0}'")]
    BadIdentifier(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid model: {}", fmt_violations(.0))]
    Invalid(Vec<ModelViolation>),
    #[error("unknown world '{0}'")]
    UnknownWorld(String),
    #[error("unknown index '{0}'")]
    UnknownIndex(String),
    #[error("model is not a tree from '{point}': {reason}")]
    NotATree { point: String, reason: String },
    #[error(
        "enumeration space of {bits} bits exceeds the guard of {guard} bits \
         (set a higher guard to override)"
    )]
    GuardExceeded { bits: u32, guard: u32 },
}

fn fmt_violations(violations: &[ModelViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl KripkeModel {
    /// Builds a model from raw parts, returning every violation found
    /// (empty worlds or indices, duplicate declarations, undeclared edge
    /// endpoints or labels, malformed identifiers).
    pub fn new(
        worlds: Vec<String>,
        indices: Vec<String>,
        edges: Vec<(String, String, String)>,
        valuation: Vec<(String, Vec<String>)>,
    ) -> Result<KripkeModel, Vec<ModelViolation>> {
        let mut violations = Vec::new();
        let mut world_set = BTreeSet::new();
        for w in &worlds {
            if !is_valid_ident(w) {
                violations.push(ModelViolation::BadIdentifier(w.clone()));
            }
            if !world_set.insert(w.clone()) {
                violations.push(ModelViolation::DuplicateWorld(w.clone()));
            }
        }
        let mut index_set = BTreeSet::new();
        for i in &indices {
            if !is_valid_ident(i) {
                violations.push(ModelViolation::BadIdentifier(i.clone()));
            }
            if !index_set.insert(i.clone()) {
                violations.push(ModelViolation::DuplicateIndex(i.clone()));
            }
        }
        if world_set.is_empty() {
            violations.push(ModelViolation::EmptyWorlds);
        }
        if index_set.is_empty() {
            violations.push(ModelViolation::EmptyIndices);
        }
        for (src, idx, dst) in &edges {
            if !world_set.contains(src) {
                violations.push(ModelViolation::UndeclaredWorld(src.clone()));
            }
            if !world_set.contains(dst) {
                violations.push(ModelViolation::UndeclaredWorld(dst.clone()));
            }
            if !index_set.contains(idx) {
                violations.push(ModelViolation::UndeclaredIndex(idx.clone()));
            }
        }
        let mut val: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for w in &world_set {
            val.insert(w.clone(), BTreeSet::new());
        }
        for (w, props) in valuation {
            if !world_set.contains(&w) {
                violations.push(ModelViolation::UndeclaredWorld(w.clone()));
                continue;
            }
            for p in props {
                if !is_valid_ident(&p) {
                    violations.push(ModelViolation::BadIdentifier(p.clone()));
                } else {
                    val.get_mut(&w).unwrap().insert(p);
                }
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        Ok(KripkeModel {
            worlds: world_set,
            indices: index_set,
            edges: edges.into_iter().collect(),
            valuation: val,
        })
    }

    pub fn worlds(&self) -> impl Iterator<Item = &str> {
        self.worlds.iter().map(|s| s.as_str())
    }

    pub fn indices(&self) -> impl Iterator<Item = &str> {
        self.indices.iter().map(|s| s.as_str())
    }

    pub fn edges(&self) -> impl Iterator<Item = &(String, String, String)> {
        self.edges.iter()
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn index_count(&self) -> usize {
        self.indices.len()
    }

    pub fn has_world(&self, w: &str) -> bool {
        self.worlds.contains(w)
    }

    pub fn has_index(&self, i: &str) -> bool {
        self.indices.contains(i)
    }

    /// Propositions true at `w`.
    pub fn props_at(&self, w: &str) -> Result<&BTreeSet<String>, ModelError> {
        self.valuation
            .get(w)
            .ok_or_else(|| ModelError::UnknownWorld(w.to_string()))
    }

    /// All propositions mentioned anywhere in the valuation, sorted.
    pub fn all_props(&self) -> BTreeSet<String> {
        self.valuation.values().flatten().cloned().collect()
    }

    /// The i-successors of `w`.
    pub fn successors(&self, w: &str, i: &str) -> Result<BTreeSet<String>, ModelError> {
        if !self.worlds.contains(w) {
            return Err(ModelError::UnknownWorld(w.to_string()));
        }
        if !self.indices.contains(i) {
            return Err(ModelError::UnknownIndex(i.to_string()));
        }
        Ok(self
            .edges
            .iter()
            .filter(|(src, idx, _)| src == w && idx == i)
            .map(|(_, _, dst)| dst.clone())
            .collect())
    }

    /// Successors of `w` under any index.
    pub fn all_successors(&self, w: &str) -> BTreeSet<String> {
        self.edges
            .iter()
            .filter(|(src, _, _)| src == w)
            .map(|(_, _, dst)| dst.clone())
            .collect()
    }

    /// Tree of labelled paths from `w`, cut at the given depth. Worlds of
    /// the result are named `n0, n1, ...` in breadth-first order (the root
    /// is `n0`); an edge `(pi, i, pi')` exists iff `pi'` extends `pi` by an
    /// edge `(last(pi), i, v)` of the original model. The index set is
    /// preserved and each path node carries the valuation of its endpoint.
    pub fn unravel(&self, w: &str, depth: usize) -> Result<PointedModel, ModelError> {
        if !self.worlds.contains(w) {
            return Err(ModelError::UnknownWorld(w.to_string()));
        }
        let mut worlds = Vec::new();
        let mut edges = Vec::new();
        let mut valuation = Vec::new();
        let mut queue = VecDeque::new();
        // (path node name, endpoint in self, depth)
        let root = "n0".to_string();
        worlds.push(root.clone());
        valuation.push((root.clone(), self.valuation[w].iter().cloned().collect()));
        queue.push_back((root.clone(), w.to_string(), 0usize));
        let mut next_id = 1usize;
        while let Some((name, endpoint, d)) = queue.pop_front() {
            if d == depth {
                continue;
            }
            for (src, idx, dst) in &self.edges {
                if src != &endpoint {
                    continue;
                }
                let child = format!("n{next_id}");
                next_id += 1;
                worlds.push(child.clone());
                valuation.push((child.clone(), self.valuation[dst].iter().cloned().collect()));
                edges.push((name.clone(), idx.clone(), child.clone()));
                queue.push_back((child, dst.clone(), d + 1));
            }
        }
        let model = KripkeModel::new(
            worlds,
            self.indices.iter().cloned().collect(),
            edges,
            valuation,
        )
        .expect("unravelling preserves model invariants");
        Ok(PointedModel {
            model,
            point: root,
        })
    }

    /// Renders the model in the line-based file format, worlds first in the
    /// order given by `world_order` (remaining worlds follow sorted), then
    /// indices, then edges.
    fn render_with_order(&self, world_order: &[&str]) -> String {
        let mut out = String::new();
        let mut done: BTreeSet<&str> = BTreeSet::new();
        let world_line = |out: &mut String, w: &str| {
            out.push_str("world ");
            out.push_str(w);
            for p in &self.valuation[w] {
                out.push(' ');
                out.push_str(p);
            }
            out.push('\n');
        };
        for w in world_order {
            if done.insert(w) {
                world_line(&mut out, w);
            }
        }
        for w in &self.worlds {
            if done.insert(w) {
                world_line(&mut out, w);
            }
        }
        for i in &self.indices {
            out.push_str("index ");
            out.push_str(i);
            out.push('\n');
        }
        for (src, idx, dst) in &self.edges {
            out.push_str(&format!("edge {src} {idx} {dst}\n"));
        }
        out
    }

    /// Canonical text form, everything sorted.
    pub fn render(&self) -> String {
        self.render_with_order(&[])
    }

    /// Like [`KripkeModel::render`] but with the given world's line first.
    pub fn render_rooted(&self, root: &str) -> String {
        self.render_with_order(&[root])
    }

    /// A copy of the model with the edges of `idx` duplicated under the
    /// fresh index name `fresh`. Duplicating an index never changes the
    /// truth of any formula at any world.
    pub fn with_duplicated_index(&self, idx: &str, fresh: &str) -> Result<KripkeModel, ModelError> {
        if !self.indices.contains(idx) {
            return Err(ModelError::UnknownIndex(idx.to_string()));
        }
        if self.indices.contains(fresh) {
            return Err(ModelError::Invalid(vec![ModelViolation::DuplicateIndex(
                fresh.to_string(),
            )]));
        }
        let mut indices: Vec<String> = self.indices.iter().cloned().collect();
        indices.push(fresh.to_string());
        let mut edges: Vec<(String, String, String)> = self.edges.iter().cloned().collect();
        for (src, i, dst) in self.edges.iter() {
            if i == idx {
                edges.push((src.clone(), fresh.to_string(), dst.clone()));
            }
        }
        KripkeModel::new(
            self.worlds.iter().cloned().collect(),
            indices,
            edges,
            self.valuation
                .iter()
                .map(|(w, ps)| (w.clone(), ps.iter().cloned().collect()))
                .collect(),
        )
        .map_err(ModelError::Invalid)
    }
}

impl PointedModel {
    pub fn new(model: KripkeModel, point: &str) -> Result<PointedModel, ModelError> {
        if !model.has_world(point) {
            return Err(ModelError::UnknownWorld(point.to_string()));
        }
        Ok(PointedModel {
            model,
            point: point.to_string(),
        })
    }

    /// Depth of each world of a tree-shaped model below the point. Errors
    /// unless every non-root world has exactly one incoming edge, the root
    /// has none, and every world is reachable from the point.
    fn tree_depths(&self) -> Result<BTreeMap<String, usize>, ModelError> {
        let m = &self.model;
        let fail = |reason: &str| ModelError::NotATree {
            point: self.point.clone(),
            reason: reason.to_string(),
        };
        let mut incoming: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, _, dst) in &m.edges {
            *incoming.entry(dst).or_insert(0) += 1;
        }
        if incoming.get(self.point.as_str()).copied().unwrap_or(0) != 0 {
            return Err(fail("the point has an incoming edge"));
        }
        for w in &m.worlds {
            if w != &self.point && incoming.get(w.as_str()).copied().unwrap_or(0) != 1 {
                return Err(fail(&format!(
                    "world '{w}' does not have exactly one incoming edge"
                )));
            }
        }
        let mut depths = BTreeMap::new();
        depths.insert(self.point.clone(), 0usize);
        let mut queue = VecDeque::from([self.point.clone()]);
        while let Some(w) = queue.pop_front() {
            let d = depths[&w];
            for (src, _, dst) in &m.edges {
                if src == &w && !depths.contains_key(dst) {
                    depths.insert(dst.clone(), d + 1);
                    queue.push_back(dst.clone());
                }
            }
        }
        if depths.len() != m.worlds.len() {
            return Err(fail("some world is unreachable from the point"));
        }
        Ok(depths)
    }

    /// Restriction of a tree model to levels `<= n` below the point; deeper
    /// worlds and their incident edges are removed, the index set and the
    /// valuation of kept worlds are unchanged. Rejects non-tree input.
    pub fn restrict(&self, n: usize) -> Result<PointedModel, ModelError> {
        let depths = self.tree_depths()?;
        let m = &self.model;
        let keep: BTreeSet<&String> = depths.iter().filter(|(_, d)| **d <= n).map(|(w, _)| w).collect();
        let model = KripkeModel::new(
            keep.iter().map(|w| (*w).clone()).collect(),
            m.indices.iter().cloned().collect(),
            m.edges
                .iter()
                .filter(|(src, _, dst)| keep.contains(src) && keep.contains(dst))
                .cloned()
                .collect(),
            keep.iter()
                .map(|w| ((*w).clone(), m.valuation[*w].iter().cloned().collect()))
                .collect(),
        )
        .expect("restriction preserves model invariants");
        Ok(PointedModel {
            model,
            point: self.point.clone(),
        })
    }

    /// True iff the model is a tree rooted at the point.
    pub fn is_tree(&self) -> bool {
        self.tree_depths().is_ok()
    }
}

/// Parses the line-based model format. Lines of one kind may appear in any
/// order, but worlds and indices must be declared before the edges that
/// mention them.
pub fn parse_model(text: &str) -> Result<KripkeModel, ModelError> {
    let mut worlds = Vec::new();
    let mut indices = Vec::new();
    let mut edges = Vec::new();
    let mut valuation = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let kind = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let parse_err = |message: String| ModelError::Parse {
            line: lineno + 1,
            message,
        };
        match kind {
            "world" => {
                if rest.is_empty() {
                    return Err(parse_err("expected: world <id> [<prop> ...]".to_string()));
                }
                worlds.push(rest[0].to_string());
                valuation.push((
                    rest[0].to_string(),
                    rest[1..].iter().map(|s| s.to_string()).collect(),
                ));
            }
            "index" => {
                if rest.len() != 1 {
                    return Err(parse_err("expected: index <id>".to_string()));
                }
                indices.push(rest[0].to_string());
            }
            "edge" => {
                if rest.len() != 3 {
                    return Err(parse_err("expected: edge <src> <idx> <dst>".to_string()));
                }
                for endpoint in [rest[0], rest[2]] {
                    if !worlds.iter().any(|w| w == endpoint) {
                        return Err(parse_err(format!(
                            "edge references world '{endpoint}' before its declaration"
                        )));
                    }
                }
                if !indices.iter().any(|i| i == rest[1]) {
                    return Err(parse_err(format!(
                        "edge references index '{}' before its declaration",
                        rest[1]
                    )));
                }
                edges.push((rest[0].to_string(), rest[1].to_string(), rest[2].to_string()));
            }
            other => {
                return Err(parse_err(format!(
                    "unknown directive '{other}' (expected world/index/edge)"
                )));
            }
        }
    }
    KripkeModel::new(worlds, indices, edges, valuation).map_err(ModelError::Invalid)
}

/// Deterministic random model within the given bounds. World and index
/// counts are drawn from `1..=max`, names are `w1..`/`i1..`, each possible
/// edge is present with probability 1/3 and each proposition holds at each
/// world with probability 1/2.
pub fn random_model(
    seed: u64,
    max_worlds: usize,
    max_indices: usize,
    props: &[String],
) -> Result<KripkeModel, ModelError> {
    if max_worlds == 0 || max_indices == 0 {
        return Err(ModelError::Invalid(vec![if max_worlds == 0 {
            ModelViolation::EmptyWorlds
        } else {
            ModelViolation::EmptyIndices
        }]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=max_worlds);
    let j = rng.gen_range(1..=max_indices);
    let worlds: Vec<String> = (1..=k).map(|n| format!("w{n}")).collect();
    let indices: Vec<String> = (1..=j).map(|n| format!("i{n}")).collect();
    let mut edges = Vec::new();
    for src in &worlds {
        for idx in &indices {
            for dst in &worlds {
                if rng.gen_range(0..3) == 0 {
                    edges.push((src.clone(), idx.clone(), dst.clone()));
                }
            }
        }
    }
    let valuation = worlds
        .iter()
        .map(|w| {
            (
                w.clone(),
                props.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect(),
            )
        })
        .collect();
    Ok(KripkeModel::new(worlds, indices, edges, valuation)
        .expect("generated model satisfies the invariants"))
}

/// Default ceiling on the enumeration space, in bits of choice.
pub const DEFAULT_GUARD_BITS: u32 = 24;

/// One (world count, index count) layer of the canonical model enumeration.
/// Candidate models within a layer are indexed by a valuation mask and an
/// edge mask; the canonical order is (worlds, indices, valuation, edges),
/// all ascending.
#[derive(Debug, Clone)]
pub(crate) struct ModelLayer {
    pub worlds: usize,
    pub indices: usize,
    pub props: Vec<String>,
}

impl ModelLayer {
    /// Bit position of edge `(src, idx, dst)` in the edge mask.
    #[inline]
    pub fn edge_bit(&self, src: usize, idx: usize, dst: usize) -> u32 {
        ((src * self.indices + idx) * self.worlds + dst) as u32
    }

    pub fn edge_bits(&self) -> u32 {
        (self.worlds * self.worlds * self.indices) as u32
    }

    pub fn val_bits(&self) -> u32 {
        (self.worlds * self.props.len()) as u32
    }

    /// Bit position of proposition `p` at world `w` in the valuation mask.
    #[inline]
    pub fn val_bit(&self, w: usize, p: usize) -> u32 {
        (w * self.props.len() + p) as u32
    }

    /// World mask (bit w set iff `p` holds at world w) for proposition `p`.
    #[inline]
    pub fn prop_world_mask(&self, val_mask: u64, p: usize) -> u64 {
        let mut m = 0u64;
        for w in 0..self.worlds {
            m |= ((val_mask >> self.val_bit(w, p)) & 1) << w;
        }
        m
    }

    /// Successor mask (bit dst set iff edge (w, i, dst) present).
    #[inline]
    pub fn successor_mask(&self, edge_mask: u64, w: usize, i: usize) -> u64 {
        (edge_mask >> self.edge_bit(w, i, 0)) & ((1u64 << self.worlds) - 1)
    }

    pub fn world_name(&self, w: usize) -> String {
        format!("w{}", w + 1)
    }

    /// Materializes the candidate model for the given masks.
    pub fn build(&self, val_mask: u64, edge_mask: u64) -> KripkeModel {
        let worlds: Vec<String> = (0..self.worlds).map(|w| self.world_name(w)).collect();
        let indices: Vec<String> = (0..self.indices).map(|i| format!("i{}", i + 1)).collect();
        let mut edges = Vec::new();
        for src in 0..self.worlds {
            for idx in 0..self.indices {
                for dst in 0..self.worlds {
                    if (edge_mask >> self.edge_bit(src, idx, dst)) & 1 == 1 {
                        edges.push((worlds[src].clone(), indices[idx].clone(), worlds[dst].clone()));
                    }
                }
            }
        }
        let valuation = (0..self.worlds)
            .map(|w| {
                (
                    worlds[w].clone(),
                    self.props
                        .iter()
                        .enumerate()
                        .filter(|(p, _)| (val_mask >> self.val_bit(w, *p)) & 1 == 1)
                        .map(|(_, name)| name.clone())
                        .collect(),
                )
            })
            .collect();
        KripkeModel::new(worlds, indices, edges, valuation)
            .expect("enumerated model satisfies the invariants")
    }
}

/// The layers of the enumeration in canonical order, after checking the
/// guard: the largest layer must fit in `guard` bits of choice.
pub(crate) fn enumeration_layers(
    max_worlds: usize,
    max_indices: usize,
    props: &[String],
    guard: u32,
) -> Result<Vec<ModelLayer>, ModelError> {
    if max_worlds == 0 {
        return Err(ModelError::Invalid(vec![ModelViolation::EmptyWorlds]));
    }
    if max_indices == 0 {
        return Err(ModelError::Invalid(vec![ModelViolation::EmptyIndices]));
    }
    let mut props: Vec<String> = props.to_vec();
    props.sort();
    props.dedup();
    let bits = (max_worlds * max_worlds * max_indices + max_worlds * props.len()) as u32;
    if bits > guard {
        return Err(ModelError::GuardExceeded { bits, guard });
    }
    let mut layers = Vec::new();
    for worlds in 1..=max_worlds {
        for indices in 1..=max_indices {
            layers.push(ModelLayer {
                worlds,
                indices,
                props: props.clone(),
            });
        }
    }
    Ok(layers)
}

/// Streams every model with `|W| <= max_worlds`, `|I| <= max_indices`,
/// and valuations over `props`, with canonical names `w1..`/`i1..`, in the
/// canonical order: ascending world count, index count, valuation mask,
/// edge mask. Guarded by [`DEFAULT_GUARD_BITS`] bits of choice.
pub fn enumerate_models(
    max_worlds: usize,
    max_indices: usize,
    props: &[String],
) -> Result<impl Iterator<Item = KripkeModel>, ModelError> {
    enumerate_models_with_guard(max_worlds, max_indices, props, DEFAULT_GUARD_BITS)
}

/// [`enumerate_models`] with an explicit guard, in bits of choice.
pub fn enumerate_models_with_guard(
    max_worlds: usize,
    max_indices: usize,
    props: &[String],
    guard: u32,
) -> Result<impl Iterator<Item = KripkeModel>, ModelError> {
    let layers = enumeration_layers(max_worlds, max_indices, props, guard)?;
    Ok(layers.into_iter().flat_map(|layer| {
        let val_count = 1u64 << layer.val_bits();
        let edge_count = 1u64 << layer.edge_bits();
        (0..val_count).flat_map(move |val_mask| {
            let layer = layer.clone();
            (0..edge_count).map(move |edge_mask| layer.build(val_mask, edge_mask))
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_model() -> KripkeModel {
        KripkeModel::new(
            vec!["w".into(), "u".into(), "v".into(), "t".into()],
            vec!["i".into(), "j".into()],
            vec![
                ("w".into(), "i".into(), "u".into()),
                ("w".into(), "i".into(), "v".into()),
                ("w".into(), "j".into(), "t".into()),
            ],
            vec![("u".into(), vec!["p".into()])],
        )
        .unwrap()
    }

    #[test]
    fn validate_minimal_model() {
        let m = KripkeModel::new(vec!["w".into()], vec!["i".into()], vec![], vec![]);
        assert!(m.is_ok());
    }

    #[test]
    fn validate_rejects_empty_indices() {
        let err = KripkeModel::new(vec!["w".into()], vec![], vec![], vec![]).unwrap_err();
        assert!(err.contains(&ModelViolation::EmptyIndices));
    }

    #[test]
    fn validate_names_undeclared_world() {
        let err = KripkeModel::new(
            vec!["w".into()],
            vec!["i".into()],
            vec![("w".into(), "i".into(), "ghost".into())],
            vec![],
        )
        .unwrap_err();
        assert!(err.contains(&ModelViolation::UndeclaredWorld("ghost".into())));
    }

    #[test]
    fn validate_rejects_duplicates() {
        let err = KripkeModel::new(
            vec!["w".into(), "w".into()],
            vec!["i".into()],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(err.contains(&ModelViolation::DuplicateWorld("w".into())));
    }

    #[test]
    fn successor_queries() {
        let m = simple_model();
        assert_eq!(
            m.successors("w", "i").unwrap(),
            BTreeSet::from(["u".to_string(), "v".to_string()])
        );
        assert_eq!(
            m.successors("w", "j").unwrap(),
            BTreeSet::from(["t".to_string()])
        );
        assert!(m.successors("u", "i").unwrap().is_empty());
        assert!(matches!(
            m.successors("nope", "i"),
            Err(ModelError::UnknownWorld(_))
        ));
        assert!(matches!(
            m.successors("w", "nope"),
            Err(ModelError::UnknownIndex(_))
        ));
    }

    #[test]
    fn parse_and_render_round_trip() {
        let text = "# two worlds\nworld w p q\nworld u\nindex i\nedge w i u\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.world_count(), 2);
        assert_eq!(
            m.props_at("w").unwrap(),
            &BTreeSet::from(["p".to_string(), "q".to_string()])
        );
        let rendered = m.render();
        assert_eq!(parse_model(&rendered).unwrap(), m);
    }

    #[test]
    fn parse_reports_line_numbers() {
        match parse_model("world w\nedge w\n") {
            Err(ModelError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unravel_self_loop() {
        let m = KripkeModel::new(
            vec!["w".into()],
            vec!["i".into()],
            vec![("w".into(), "i".into(), "w".into())],
            vec![("w".into(), vec!["p".into()])],
        )
        .unwrap();
        let t = m.unravel("w", 2).unwrap();
        assert_eq!(t.model.world_count(), 3);
        assert!(t.is_tree());
        for w in ["n0", "n1", "n2"] {
            assert_eq!(t.model.props_at(w).unwrap().len(), 1);
        }
        assert_eq!(t.model.edges().count(), 2);
    }

    #[test]
    fn unravel_depth_zero() {
        let m = simple_model();
        let t = m.unravel("w", 0).unwrap();
        assert_eq!(t.model.world_count(), 1);
        assert_eq!(t.model.edges().count(), 0);
        assert_eq!(t.model.index_count(), 2);
    }

    #[test]
    fn unravel_tree_is_isomorphic_to_reachable_part() {
        // simple_model is already a tree of height 1 from w.
        let m = simple_model();
        let t = m.unravel("w", 5).unwrap();
        assert_eq!(t.model.world_count(), 4);
        assert_eq!(t.model.edges().count(), 3);
        assert!(t.is_tree());
    }

    #[test]
    fn restrict_levels() {
        // chain w -> u -> v
        let m = KripkeModel::new(
            vec!["w".into(), "u".into(), "v".into()],
            vec!["i".into()],
            vec![
                ("w".into(), "i".into(), "u".into()),
                ("u".into(), "i".into(), "v".into()),
            ],
            vec![],
        )
        .unwrap();
        let pm = PointedModel::new(m, "w").unwrap();
        let r0 = pm.restrict(0).unwrap();
        assert_eq!(r0.model.world_count(), 1);
        assert_eq!(r0.model.edges().count(), 0);
        let r1 = pm.restrict(1).unwrap();
        assert_eq!(r1.model.world_count(), 2);
        assert_eq!(r1.model.edges().count(), 1);
        let r5 = pm.restrict(5).unwrap();
        assert_eq!(r5.model, pm.model);
    }

    #[test]
    fn restrict_rejects_non_tree() {
        let m = KripkeModel::new(
            vec!["w".into()],
            vec!["i".into()],
            vec![("w".into(), "i".into(), "w".into())],
            vec![],
        )
        .unwrap();
        let pm = PointedModel::new(m, "w").unwrap();
        assert!(matches!(pm.restrict(1), Err(ModelError::NotATree { .. })));
        let disconnected = KripkeModel::new(
            vec!["w".into(), "u".into()],
            vec!["i".into()],
            vec![],
            vec![],
        )
        .unwrap();
        let pm = PointedModel::new(disconnected, "w").unwrap();
        assert!(matches!(pm.restrict(1), Err(ModelError::NotATree { .. })));
    }

    #[test]
    fn unravellings_are_trees() {
        for seed in 0..20 {
            let m = random_model(seed, 3, 2, &["p".to_string()]).unwrap();
            let w = m.worlds().next().unwrap().to_string();
            let t = m.unravel(&w, 3).unwrap();
            assert!(t.is_tree());
            // A depth-3 unravelling is untouched by restriction to 3.
            assert_eq!(t.restrict(3).unwrap().model, t.model);
        }
    }

    #[test]
    fn edges_must_follow_declarations() {
        match parse_model("world w\nedge w i w\nindex i\n") {
            Err(ModelError::Parse { line: 2, message }) => {
                assert!(message.contains("'i'"), "message: {message}")
            }
            other => panic!("expected declaration-order error, got {other:?}"),
        }
    }

    #[test]
    fn random_model_is_deterministic_and_valid() {
        let props = vec!["p".to_string()];
        let a = random_model(9, 3, 2, &props).unwrap();
        let b = random_model(9, 3, 2, &props).unwrap();
        assert_eq!(a, b);
        let tiny = random_model(5, 1, 1, &[]).unwrap();
        assert_eq!(tiny.world_count(), 1);
        assert_eq!(tiny.index_count(), 1);
        assert!(tiny.edges().count() <= 1);
        assert!(random_model(0, 0, 1, &[]).is_err());
    }

    #[test]
    fn enumeration_counts() {
        // Counts follow the closed form: sum over world counts k and index
        // counts j of 2^(k*k*j) * 2^(k*|P|).
        assert_eq!(enumerate_models(1, 1, &[]).unwrap().count(), 2);
        assert_eq!(
            enumerate_models(1, 1, &["p".to_string()]).unwrap().count(),
            4
        );
        assert_eq!(enumerate_models(2, 1, &[]).unwrap().count(), 2 + 16);
        assert_eq!(
            enumerate_models(2, 2, &["p".to_string()])
                .unwrap()
                .count(),
            4 + 8 + 64 + 1024
        );
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_models(5, 5, &[]),
            Err(ModelError::GuardExceeded { .. })
        ));
        assert!(enumerate_models_with_guard(3, 2, &["p".into(), "q".into()], 24).is_ok());
    }

    #[test]
    fn enumeration_is_exhaustive_and_valid() {
        let mut seen = BTreeSet::new();
        for m in enumerate_models(2, 1, &["p".to_string()]).unwrap() {
            assert!(m.world_count() <= 2);
            assert_eq!(m.index_count(), 1);
            assert!(seen.insert(m.render()), "duplicate model in enumeration");
        }
        // 1 world: 2 edge configs * 2 valuations; 2 worlds: 2^4 * 4.
        assert_eq!(seen.len(), 4 + 64);
    }
}
