//! Model checking and a bounded brute-force satisfiability oracle.
//!
//! Formulas are compiled to a hash-consed DAG once and then evaluated
//! bottom-up for every world of a model, which gives the per
//! (world, subformula) memoization the rest of the crate relies on. The
//! oracle walks the canonical model enumeration of [`crate::kripke`] with a
//! bit-mask representation of candidate models, so it can exhaust millions
//! of candidates in seconds; the first satisfying candidate in canonical
//! order is materialized and returned.

use rayon::prelude::*;
use thiserror::Error;

use crate::kripke::{
    enumeration_layers, KripkeModel, ModelError, ModelLayer, PointedModel, DEFAULT_GUARD_BITS,
};
use crate::syntax::Formula;

/// Bounds for the brute-force oracle: it searches all models with at most
/// `max_worlds` worlds and `max_indices` indices, valuations over `props`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleBounds {
    pub max_worlds: usize,
    pub max_indices: usize,
    pub props: Vec<String>,
}

impl OracleBounds {
    pub fn new(max_worlds: usize, max_indices: usize, props: &[&str]) -> OracleBounds {
        OracleBounds {
            max_worlds,
            max_indices,
            props: props.iter().map(|p| p.to_string()).collect(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("proposition '{0}' of the formula is not covered by the oracle bounds")]
    MissingProposition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Atom(usize),
    Top,
    Bot,
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    BoxE(usize),
    BoxA(usize),
    DiaE(usize),
    DiaA(usize),
}

/// A formula compiled to a DAG with structurally equal subformulas shared.
/// Node ids are topologically ordered (children precede parents).
#[derive(Debug, Clone)]
pub struct CompiledFormula {
    ops: Vec<Op>,
    root: usize,
    props: Vec<String>,
    /// Whether the node's value depends on the edge relation.
    modal_dep: Vec<bool>,
}

/// Compiles `f` against the propositions occurring in it.
pub fn compile(f: &Formula) -> CompiledFormula {
    let props: Vec<String> = f.propositions().into_iter().collect();
    compile_with_props(f, &props)
}

/// Compiles `f` against an explicit proposition universe; every atom of `f`
/// must be listed in `props`.
pub fn compile_with_props(f: &Formula, props: &[String]) -> CompiledFormula {
    let mut builder = Builder {
        ops: Vec::new(),
        modal_dep: Vec::new(),
        cons: std::collections::HashMap::new(),
        props: props.to_vec(),
    };
    let root = builder.intern(f);
    CompiledFormula {
        ops: builder.ops,
        root,
        props: builder.props,
        modal_dep: builder.modal_dep,
    }
}

struct Builder {
    ops: Vec<Op>,
    modal_dep: Vec<bool>,
    cons: std::collections::HashMap<Op, usize>,
    props: Vec<String>,
}

impl Builder {
    fn intern(&mut self, f: &Formula) -> usize {
        let op = match f {
            Formula::Atom(p) => {
                let idx = self
                    .props
                    .iter()
                    .position(|q| q == p)
                    .unwrap_or_else(|| panic!("proposition '{p}' missing from universe"));
                Op::Atom(idx)
            }
            Formula::Top => Op::Top,
            Formula::Bot => Op::Bot,
            Formula::Not(g) => Op::Not(self.intern(g)),
            Formula::And(l, r) => Op::And(self.intern(l), self.intern(r)),
            Formula::Or(l, r) => Op::Or(self.intern(l), self.intern(r)),
            Formula::Imp(l, r) => Op::Imp(self.intern(l), self.intern(r)),
            Formula::BoxE(g) => Op::BoxE(self.intern(g)),
            Formula::BoxA(g) => Op::BoxA(self.intern(g)),
            Formula::DiaE(g) => Op::DiaE(self.intern(g)),
            Formula::DiaA(g) => Op::DiaA(self.intern(g)),
        };
        if let Some(&id) = self.cons.get(&op) {
            return id;
        }
        let dep = match op {
            Op::Atom(_) | Op::Top | Op::Bot => false,
            Op::Not(a) => self.modal_dep[a],
            Op::And(a, b) | Op::Or(a, b) | Op::Imp(a, b) => self.modal_dep[a] || self.modal_dep[b],
            Op::BoxE(_) | Op::BoxA(_) | Op::DiaE(_) | Op::DiaA(_) => true,
        };
        let id = self.ops.len();
        self.ops.push(op);
        self.modal_dep.push(dep);
        self.cons.insert(op, id);
        id
    }
}

impl CompiledFormula {
    pub fn node_count(&self) -> usize {
        self.ops.len()
    }

    /// Evaluates the formula at every world of `m`; results are paired with
    /// the world names in the model's sorted order.
    pub fn eval_worlds(&self, m: &KripkeModel) -> Vec<(String, bool)> {
        let worlds: Vec<&str> = m.worlds().collect();
        let world_idx: std::collections::HashMap<&str, usize> =
            worlds.iter().enumerate().map(|(i, w)| (*w, i)).collect();
        let indices: Vec<&str> = m.indices().collect();
        let index_idx: std::collections::HashMap<&str, usize> =
            indices.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut succ: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); indices.len()]; worlds.len()];
        for (src, idx, dst) in m.edges() {
            succ[world_idx[src.as_str()]][index_idx[idx.as_str()]].push(world_idx[dst.as_str()]);
        }
        let prop_at: Vec<Vec<bool>> = self
            .props
            .iter()
            .map(|p| {
                worlds
                    .iter()
                    .map(|w| m.props_at(w).unwrap().contains(p))
                    .collect()
            })
            .collect();
        let n = worlds.len();
        let mut vals: Vec<Vec<bool>> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let row: Vec<bool> = match *op {
                Op::Atom(p) => prop_at[p].clone(),
                Op::Top => vec![true; n],
                Op::Bot => vec![false; n],
                Op::Not(a) => (0..n).map(|w| !vals[a][w]).collect(),
                Op::And(a, b) => (0..n).map(|w| vals[a][w] && vals[b][w]).collect(),
                Op::Or(a, b) => (0..n).map(|w| vals[a][w] || vals[b][w]).collect(),
                Op::Imp(a, b) => (0..n).map(|w| !vals[a][w] || vals[b][w]).collect(),
                Op::BoxE(a) => (0..n)
                    .map(|w| succ[w].iter().any(|us| us.iter().all(|&u| vals[a][u])))
                    .collect(),
                Op::BoxA(a) => (0..n)
                    .map(|w| succ[w].iter().all(|us| us.iter().all(|&u| vals[a][u])))
                    .collect(),
                Op::DiaE(a) => (0..n)
                    .map(|w| succ[w].iter().any(|us| us.iter().any(|&u| vals[a][u])))
                    .collect(),
                Op::DiaA(a) => (0..n)
                    .map(|w| succ[w].iter().all(|us| us.iter().any(|&u| vals[a][u])))
                    .collect(),
            };
            vals.push(row);
        }
        worlds
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), vals[self.root][i]))
            .collect()
    }

    /// Truth of the compiled formula at a single world.
    pub fn holds_at(&self, m: &KripkeModel, w: &str) -> Result<bool, ModelError> {
        if !m.has_world(w) {
            return Err(ModelError::UnknownWorld(w.to_string()));
        }
        Ok(self
            .eval_worlds(m)
            .into_iter()
            .find(|(name, _)| name == w)
            .map(|(_, v)| v)
            .unwrap())
    }
}

/// Truth of `f` at world `w` of `m`, per the IQML semantics: `[E]f` holds
/// iff some index has every successor satisfying `f` (vacuously true for a
/// successor-free index); `[A]f` iff all successors under all indices
/// satisfy `f`; `<E>`/`<A>` are the duals.
pub fn holds(m: &KripkeModel, w: &str, f: &Formula) -> Result<bool, ModelError> {
    compile(f).holds_at(m, w)
}

/// True iff `f` holds at every world of `m`.
pub fn valid_on_model(m: &KripkeModel, f: &Formula) -> bool {
    let compiled = compile(f);
    compiled.eval_worlds(m).into_iter().all(|(_, v)| v)
}

/// First pointed model within the bounds satisfying `f`, in the canonical
/// enumeration order (ascending world count, index count, valuation mask,
/// edge mask; the point is the first satisfying world of that model), or
/// `None` when no bounded model satisfies `f`.
pub fn sat_oracle(f: &Formula, bounds: &OracleBounds) -> Result<Option<PointedModel>, OracleError> {
    sat_oracle_with_guard(f, bounds, DEFAULT_GUARD_BITS)
}

/// [`sat_oracle`] with an explicit enumeration guard, in bits of choice.
pub fn sat_oracle_with_guard(
    f: &Formula,
    bounds: &OracleBounds,
    guard: u32,
) -> Result<Option<PointedModel>, OracleError> {
    let mut props = bounds.props.clone();
    props.sort();
    props.dedup();
    for p in f.propositions() {
        if !props.contains(&p) {
            return Err(OracleError::MissingProposition(p));
        }
    }
    let layers = enumeration_layers(bounds.max_worlds, bounds.max_indices, &props, guard)?;
    let compiled = compile_with_props(f, &props);
    for layer in layers {
        if let Some((val_mask, edge_mask, world)) = scan_layer(&compiled, &layer) {
            let model = layer.build(val_mask, edge_mask);
            let point = layer.world_name(world);
            debug_assert_eq!(holds(&model, &point, f), Ok(true));
            return Ok(Some(PointedModel { model, point }));
        }
    }
    Ok(None)
}

/// Scans one enumeration layer; returns the canonically first satisfying
/// (valuation mask, edge mask, world index) triple.
fn scan_layer(c: &CompiledFormula, layer: &ModelLayer) -> Option<(u64, u64, usize)> {
    debug_assert!(layer.worlds <= 63);
    let full = (1u64 << layer.worlds) - 1;
    let edge_count = 1u64 << layer.edge_bits();
    let mut base = vec![0u64; c.ops.len()];
    for val_mask in 0..(1u64 << layer.val_bits()) {
        // Edge-independent nodes are fixed for the whole edge scan.
        for (id, op) in c.ops.iter().enumerate() {
            if c.modal_dep[id] {
                continue;
            }
            base[id] = match *op {
                Op::Atom(p) => layer.prop_world_mask(val_mask, p),
                Op::Top => full,
                Op::Bot => 0,
                Op::Not(a) => !base[a] & full,
                Op::And(a, b) => base[a] & base[b],
                Op::Or(a, b) => base[a] | base[b],
                Op::Imp(a, b) => (!base[a] | base[b]) & full,
                _ => unreachable!("modal ops are edge-dependent"),
            };
        }
        if !c.modal_dep[c.root] {
            if base[c.root] != 0 {
                let world = base[c.root].trailing_zeros() as usize;
                return Some((val_mask, 0, world));
            }
            continue;
        }
        const CHUNK: u64 = 1 << 13;
        let hit = if edge_count <= 2 * CHUNK {
            scan_edges(c, layer, &base, full, 0..edge_count)
        } else {
            let chunks = edge_count.div_ceil(CHUNK);
            (0..chunks).into_par_iter().find_map_first(|chunk| {
                let lo = chunk * CHUNK;
                let hi = (lo + CHUNK).min(edge_count);
                scan_edges(c, layer, &base, full, lo..hi)
            })
        };
        if let Some((edge_mask, world)) = hit {
            return Some((val_mask, edge_mask, world));
        }
    }
    None
}

/// Sequentially scans a range of edge masks; returns the first satisfying
/// (edge mask, world index).
fn scan_edges(
    c: &CompiledFormula,
    layer: &ModelLayer,
    base: &[u64],
    full: u64,
    range: std::ops::Range<u64>,
) -> Option<(u64, usize)> {
    let k = layer.worlds;
    let j = layer.indices;
    let mut succ = vec![0u64; k * j];
    let mut scratch = vec![0u64; c.ops.len()];
    for edge_mask in range {
        for w in 0..k {
            for i in 0..j {
                succ[w * j + i] = layer.successor_mask(edge_mask, w, i);
            }
        }
        for (id, op) in c.ops.iter().enumerate() {
            if !c.modal_dep[id] {
                continue;
            }
            let get = |a: usize, scratch: &[u64]| if c.modal_dep[a] { scratch[a] } else { base[a] };
            scratch[id] = match *op {
                Op::Not(a) => !get(a, &scratch) & full,
                Op::And(a, b) => get(a, &scratch) & get(b, &scratch),
                Op::Or(a, b) => get(a, &scratch) | get(b, &scratch),
                Op::Imp(a, b) => (!get(a, &scratch) | get(b, &scratch)) & full,
                Op::BoxE(a) => {
                    let ca = get(a, &scratch);
                    let mut out = 0u64;
                    for w in 0..k {
                        if (0..j).any(|i| succ[w * j + i] & !ca == 0) {
                            out |= 1 << w;
                        }
                    }
                    out
                }
                Op::BoxA(a) => {
                    let ca = get(a, &scratch);
                    let mut out = 0u64;
                    for w in 0..k {
                        if (0..j).all(|i| succ[w * j + i] & !ca == 0) {
                            out |= 1 << w;
                        }
                    }
                    out
                }
                Op::DiaE(a) => {
                    let ca = get(a, &scratch);
                    let mut out = 0u64;
                    for w in 0..k {
                        if (0..j).any(|i| succ[w * j + i] & ca != 0) {
                            out |= 1 << w;
                        }
                    }
                    out
                }
                Op::DiaA(a) => {
                    let ca = get(a, &scratch);
                    let mut out = 0u64;
                    for w in 0..k {
                        if (0..j).all(|i| succ[w * j + i] & ca != 0) {
                            out |= 1 << w;
                        }
                    }
                    out
                }
                Op::Atom(_) | Op::Top | Op::Bot => unreachable!("constants are edge-independent"),
            };
        }
        let root = scratch[c.root];
        if root != 0 {
            return Some((edge_mask, root.trailing_zeros() as usize));
        }
    }
    None
}
