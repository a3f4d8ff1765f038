//! Bisimulation for IQML: greatest-fixpoint computation, depth-bounded
//! n-bisimulation, characteristic formulas, and distinguishing formulas.
//!
//! An IQML bisimulation relates worlds that carry equal valuations and
//! satisfy four back-and-forth conditions that also match indices: the
//! `[E]` conditions match an index of one model with an index of the other
//! whose successors are covered, the `<E>` conditions match individual
//! successors under any index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::kripke::{KripkeModel, ModelError};
use crate::syntax::Formula;

/// Default ceiling on `|Gamma^n|` for the subset-indexed clause of the
/// characteristic formula, which ranges over all subsets of `Gamma^n`.
pub const DEFAULT_GAMMA_GUARD: usize = 12;

/// A world relation between two models, closed under the bisimulation
/// conditions relative to itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimRelation {
    pairs: BTreeSet<(String, String)>,
}

impl BisimRelation {
    pub fn contains(&self, w1: &str, w2: &str) -> bool {
        self.pairs.contains(&(w1.to_string(), w2.to_string()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(String, String)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharError {
    #[error("valuation of world '{world}' contains '{prop}', which is outside the proposition list")]
    UncoveredProposition { world: String, prop: String },
    #[error("subset clause at depth {n} ranges over 2^{size} subsets, above the guard of 2^{guard}")]
    GammaGuard { n: usize, size: usize, guard: usize },
    #[error("depth {requested} exceeds the context depth {depth}")]
    DepthExceeded { requested: usize, depth: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Indexed view of a model pair used by the fixpoint and the recursion.
struct Paired {
    val_eq: Vec<Vec<bool>>,
    /// successors per world per index
    succ1: Vec<Vec<Vec<usize>>>,
    succ2: Vec<Vec<Vec<usize>>>,
    /// successors per world under any index
    union1: Vec<Vec<usize>>,
    union2: Vec<Vec<usize>>,
    names1: Vec<String>,
    names2: Vec<String>,
}

fn index_view(m: &KripkeModel) -> (Vec<String>, Vec<Vec<Vec<usize>>>, Vec<Vec<usize>>) {
    let worlds: Vec<String> = m.worlds().map(|w| w.to_string()).collect();
    let widx: HashMap<&str, usize> = worlds.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let indices: Vec<String> = m.indices().map(|i| i.to_string()).collect();
    let iidx: HashMap<&str, usize> = indices.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut succ = vec![vec![Vec::new(); indices.len()]; worlds.len()];
    let mut union = vec![BTreeSet::new(); worlds.len()];
    for (src, idx, dst) in m.edges() {
        let (s, i, d) = (widx[src.as_str()], iidx[idx.as_str()], widx[dst.as_str()]);
        succ[s][i].push(d);
        union[s].insert(d);
    }
    let union = union.into_iter().map(|s| s.into_iter().collect()).collect();
    (worlds, succ, union)
}

impl Paired {
    fn new(m1: &KripkeModel, m2: &KripkeModel) -> Paired {
        let (names1, succ1, union1) = index_view(m1);
        let (names2, succ2, union2) = index_view(m2);
        let val_eq = names1
            .iter()
            .map(|a| {
                names2
                    .iter()
                    .map(|b| m1.props_at(a).unwrap() == m2.props_at(b).unwrap())
                    .collect()
            })
            .collect();
        Paired {
            val_eq,
            succ1,
            succ2,
            union1,
            union2,
            names1,
            names2,
        }
    }

    /// The four back-and-forth conditions for pair `(a, b)` relative to `g`.
    fn conditions_hold(&self, a: usize, b: usize, g: &dyn Fn(usize, usize) -> bool) -> bool {
        // [E]forth: every index of M1 has a matching index of M2.
        let box_forth = self.succ1[a].iter().all(|s1| {
            self.succ2[b]
                .iter()
                .any(|s2| s2.iter().all(|&u2| s1.iter().any(|&u1| g(u1, u2))))
        });
        if !box_forth {
            return false;
        }
        // [E]back: every index of M2 has a matching index of M1.
        let box_back = self.succ2[b].iter().all(|s2| {
            self.succ1[a]
                .iter()
                .any(|s1| s1.iter().all(|&u1| s2.iter().any(|&u2| g(u1, u2))))
        });
        if !box_back {
            return false;
        }
        // <E>forth / <E>back: successors under any index are matched.
        self.union1[a]
            .iter()
            .all(|&u1| self.union2[b].iter().any(|&u2| g(u1, u2)))
            && self.union2[b]
                .iter()
                .all(|&u2| self.union1[a].iter().any(|&u1| g(u1, u2)))
    }
}

/// The greatest IQML bisimulation between `m1` and `m2`: starts from all
/// pairs with equal valuations and deletes pairs violating a condition
/// until a fixpoint is reached. May be empty.
pub fn max_bisimulation(m1: &KripkeModel, m2: &KripkeModel) -> BisimRelation {
    let p = Paired::new(m1, m2);
    let mut g = p.val_eq.clone();
    loop {
        let mut changed = false;
        for a in 0..p.names1.len() {
            for b in 0..p.names2.len() {
                if g[a][b] && !p.conditions_hold(a, b, &|x, y| g[x][y]) {
                    g[a][b] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let pairs = (0..p.names1.len())
        .flat_map(|a| {
            let g = &g;
            let p = &p;
            (0..p.names2.len())
                .filter(move |&b| g[a][b])
                .map(move |b| (p.names1[a].clone(), p.names2[b].clone()))
        })
        .collect();
    BisimRelation { pairs }
}

/// True iff `(w1, w2)` lies in the greatest bisimulation between the models.
pub fn bisimilar(
    m1: &KripkeModel,
    w1: &str,
    m2: &KripkeModel,
    w2: &str,
) -> Result<bool, ModelError> {
    check_world(m1, w1)?;
    check_world(m2, w2)?;
    Ok(max_bisimulation(m1, m2).contains(w1, w2))
}

fn check_world(m: &KripkeModel, w: &str) -> Result<(), ModelError> {
    if m.has_world(w) {
        Ok(())
    } else {
        Err(ModelError::UnknownWorld(w.to_string()))
    }
}

/// Memoizing n-bisimulation checker for a fixed model pair. Reuse one
/// checker when querying many world pairs or depths of the same models.
pub struct BisimChecker {
    paired: Paired,
    memo: HashMap<(usize, usize, usize), bool>,
}

impl BisimChecker {
    pub fn new(m1: &KripkeModel, m2: &KripkeModel) -> BisimChecker {
        BisimChecker {
            paired: Paired::new(m1, m2),
            memo: HashMap::new(),
        }
    }

    pub fn n_bisimilar(&mut self, w1: &str, w2: &str, n: usize) -> Result<bool, ModelError> {
        let a = self
            .paired
            .names1
            .iter()
            .position(|x| x == w1)
            .ok_or_else(|| ModelError::UnknownWorld(w1.to_string()))?;
        let b = self
            .paired
            .names2
            .iter()
            .position(|x| x == w2)
            .ok_or_else(|| ModelError::UnknownWorld(w2.to_string()))?;
        Ok(self.check(a, b, n))
    }

    fn check(&mut self, a: usize, b: usize, n: usize) -> bool {
        if let Some(&v) = self.memo.get(&(a, b, n)) {
            return v;
        }
        let result = if !self.paired.val_eq[a][b] {
            // Equal valuations are required at every depth; the four
            // step conditions are additionally required for n > 0.
            false
        } else if n == 0 {
            true
        } else {
            // Fill the depth n-1 table for every successor pair first, then
            // evaluate the conditions against the finished entries.
            let pairs_needed: Vec<(usize, usize)> = {
                let p = &self.paired;
                let mut need = Vec::new();
                for s1 in &p.succ1[a] {
                    for &u1 in s1 {
                        for s2 in &p.succ2[b] {
                            for &u2 in s2 {
                                need.push((u1, u2));
                            }
                        }
                    }
                }
                need
            };
            for (u1, u2) in pairs_needed {
                self.check(u1, u2, n - 1);
            }
            let memo = &self.memo;
            let g = |x: usize, y: usize| *memo.get(&(x, y, n - 1)).unwrap_or(&false);
            self.paired.conditions_hold(a, b, &g)
        };
        self.memo.insert((a, b, n), result);
        result
    }
}

/// Depth-bounded bisimilarity: at depth 0 the worlds must agree on all
/// propositions; at depth n they must additionally satisfy the four
/// back-and-forth conditions with (n-1)-bisimilar successors. Defined on
/// arbitrary finite models.
pub fn n_bisimilar(
    m1: &KripkeModel,
    w1: &str,
    m2: &KripkeModel,
    w2: &str,
    n: usize,
) -> Result<bool, ModelError> {
    BisimChecker::new(m1, m2).n_bisimilar(w1, w2, n)
}

/// Conjunction with true/false absorption; empty conjunction is `true`.
fn conj(items: impl IntoIterator<Item = Formula>) -> Formula {
    let mut kept = Vec::new();
    for f in items {
        match f {
            Formula::Top => {}
            Formula::Bot => return Formula::Bot,
            other => kept.push(other),
        }
    }
    match kept.len() {
        0 => Formula::Top,
        _ => {
            let mut it = kept.into_iter();
            let first = it.next().unwrap();
            it.fold(first, Formula::and)
        }
    }
}

/// Disjunction with true/false absorption; empty disjunction is `false`.
fn disj(items: impl IntoIterator<Item = Formula>) -> Formula {
    let mut kept = Vec::new();
    for f in items {
        match f {
            Formula::Bot => {}
            Formula::Top => return Formula::Top,
            other => kept.push(other),
        }
    }
    match kept.len() {
        0 => Formula::Bot,
        _ => {
            let mut it = kept.into_iter();
            let first = it.next().unwrap();
            it.fold(first, Formula::or)
        }
    }
}

/// Implication with true/false absorption.
fn imp(a: Formula, b: Formula) -> Formula {
    match (&a, &b) {
        (Formula::Top, _) => b,
        (Formula::Bot, _) => Formula::Top,
        (_, Formula::Top) => Formula::Top,
        _ => Formula::imp(a, b),
    }
}

/// Characteristic formulas of one model up to a fixed depth, over a finite
/// proposition list covering the model's valuation. `table[k][w]` is the
/// depth-k characteristic formula of world `w`; `gamma[k]` collects the
/// distinct formulas of depth k over all worlds.
#[derive(Debug)]
pub struct CharContext {
    model: KripkeModel,
    props: Vec<String>,
    depth: usize,
    table: Vec<BTreeMap<String, Formula>>,
    gamma: Vec<Vec<Formula>>,
}

impl CharContext {
    pub fn new(model: KripkeModel, props: &[String], depth: usize) -> Result<CharContext, CharError> {
        CharContext::with_guard(model, props, depth, DEFAULT_GAMMA_GUARD)
    }

    /// Like [`CharContext::new`], with an explicit ceiling on `|Gamma^n|`.
    pub fn with_guard(
        model: KripkeModel,
        props: &[String],
        depth: usize,
        guard: usize,
    ) -> Result<CharContext, CharError> {
        let mut props: Vec<String> = props.to_vec();
        props.sort();
        props.dedup();
        for w in model.worlds() {
            for p in model.props_at(w).unwrap() {
                if !props.contains(p) {
                    return Err(CharError::UncoveredProposition {
                        world: w.to_string(),
                        prop: p.clone(),
                    });
                }
            }
        }
        let mut ctx = CharContext {
            model,
            props,
            depth,
            table: Vec::new(),
            gamma: Vec::new(),
        };
        ctx.push_level_zero();
        for n in 0..depth {
            if ctx.gamma[n].len() > guard {
                return Err(CharError::GammaGuard {
                    n,
                    size: ctx.gamma[n].len(),
                    guard,
                });
            }
            ctx.push_level(n);
        }
        Ok(ctx)
    }

    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The distinct characteristic formulas of depth `n`, sorted.
    pub fn gamma(&self, n: usize) -> Result<&[Formula], CharError> {
        self.gamma
            .get(n)
            .map(|v| v.as_slice())
            .ok_or(CharError::DepthExceeded {
                requested: n,
                depth: self.depth,
            })
    }

    /// The depth-n characteristic formula of world `w`.
    pub fn char_formula(&self, w: &str, n: usize) -> Result<&Formula, CharError> {
        let level = self.table.get(n).ok_or(CharError::DepthExceeded {
            requested: n,
            depth: self.depth,
        })?;
        level
            .get(w)
            .ok_or_else(|| CharError::Model(ModelError::UnknownWorld(w.to_string())))
    }

    /// Depth 0: the full literal conjunction over the proposition list.
    fn push_level_zero(&mut self) {
        let mut level = BTreeMap::new();
        for w in self.model.worlds() {
            let val = self.model.props_at(w).unwrap();
            let literals = self.props.iter().filter(|p| val.contains(*p)).cloned().map(Formula::Atom)
                .chain(
                    self.props
                        .iter()
                        .filter(|p| !val.contains(*p))
                        .cloned()
                        .map(|p| Formula::not(Formula::Atom(p))),
                );
            level.insert(w.to_string(), conj(literals));
        }
        self.table.push(level);
        self.push_gamma();
    }

    fn push_gamma(&mut self) {
        let level = self.table.last().unwrap();
        let distinct: BTreeSet<Formula> = level.values().cloned().collect();
        self.gamma.push(distinct.into_iter().collect());
    }

    /// Depth n+1 from depth n, one conjunct family per bisimulation
    /// condition.
    fn push_level(&mut self, n: usize) {
        let gamma: Vec<Formula> = self.gamma[n].clone();
        let indices: Vec<String> = self.model.indices().map(|i| i.to_string()).collect();
        let mut level = BTreeMap::new();
        for w in self.model.worlds().map(|w| w.to_string()).collect::<Vec<_>>() {
            let chi_succ = |i: &str| -> BTreeSet<Formula> {
                self.model
                    .successors(&w, i)
                    .unwrap()
                    .iter()
                    .map(|u| self.table[n][u].clone())
                    .collect()
            };
            let union_chis: BTreeSet<Formula> = self
                .model
                .all_successors(&w)
                .iter()
                .map(|u| self.table[n][u].clone())
                .collect();

            let val = self.table[0][&w].clone();

            // For every index, some index of the other model must cover it:
            // [E] of the disjunction of successor formulas.
            let forth: BTreeSet<Formula> = indices
                .iter()
                .map(|i| Formula::box_e(disj(chi_succ(i))))
                .collect();

            // For every subset S of Gamma^n: if some index satisfies only
            // S-formulas, then some index of this model has all successors
            // inside S.
            let mut back: BTreeSet<Formula> = BTreeSet::new();
            for mask in 0..(1u64 << gamma.len()) {
                let s: Vec<Formula> = gamma
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| (mask >> k) & 1 == 1)
                    .map(|(_, f)| f.clone())
                    .collect();
                let s_disj = disj(s.clone());
                let witness = disj(indices.iter().map(|i| {
                    conj(
                        chi_succ(i)
                            .into_iter()
                            .map(|chi| Formula::box_a(imp(chi, s_disj.clone()))),
                    )
                }));
                back.insert(imp(Formula::box_e(s_disj), witness));
            }

            // Every successor is reachable in the other model.
            let dia_forth: BTreeSet<Formula> =
                union_chis.iter().cloned().map(Formula::dia_e).collect();

            // Every successor of the other model matches some successor here.
            let dia_back = Formula::box_a(disj(union_chis));

            let chi = conj(
                std::iter::once(val)
                    .chain(forth)
                    .chain(back)
                    .chain(dia_forth)
                    .chain(std::iter::once(dia_back)),
            );
            debug_assert!(chi.modal_depth() <= n + 1);
            level.insert(w, chi);
        }
        self.table.push(level);
        self.push_gamma();
    }
}

/// The characteristic formula of `(m1, w1)` at the first depth `n <= max_n`
/// where the pair is not n-bisimilar: it holds at `(m1, w1)` and fails at
/// `(m2, w2)`. Returns `None` when the pair is n-bisimilar for every
/// `n <= max_n`.
pub fn distinguishing_formula(
    m1: &KripkeModel,
    w1: &str,
    m2: &KripkeModel,
    w2: &str,
    max_n: usize,
) -> Result<Option<Formula>, CharError> {
    check_world(m1, w1)?;
    check_world(m2, w2)?;
    let props: BTreeSet<String> = m1.all_props().into_iter().chain(m2.all_props()).collect();
    let props: Vec<String> = props.into_iter().collect();
    let mut checker = BisimChecker::new(m1, m2);
    for n in 0..=max_n {
        if !checker.n_bisimilar(w1, w2, n)? {
            let ctx = CharContext::new(m1.clone(), &props, n)?;
            return Ok(Some(ctx.char_formula(w1, n)?.clone()));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{enumerate_models, parse_model, random_model};
    use crate::semantics::holds;
    use crate::syntax::parse_formula;

    fn m(text: &str) -> KripkeModel {
        parse_model(text).unwrap()
    }

    /// One index with a p-successor and a plain successor.
    fn merged() -> KripkeModel {
        m("world w1\nworld a p\nworld b\nindex i\nedge w1 i a\nedge w1 i b\n")
    }

    /// Two indices, each with one successor.
    fn split() -> KripkeModel {
        m("world w2\nworld c p\nworld d\nindex j1\nindex j2\nedge w2 j1 c\nedge w2 j2 d\n")
    }

    #[test]
    fn identity_is_a_bisimulation() {
        for seed in 0..20 {
            let model = random_model(seed, 3, 2, &["p".to_string()]).unwrap();
            let rel = max_bisimulation(&model, &model);
            for w in model.worlds() {
                assert!(rel.contains(w, w));
            }
        }
    }

    #[test]
    fn merged_and_split_points_differ() {
        let rel = max_bisimulation(&merged(), &split());
        assert!(!rel.contains("w1", "w2"));
        // The successor pairs with equal valuations survive.
        assert!(rel.contains("a", "c"));
        assert!(rel.contains("b", "d"));
        // [E]p separates the points.
        assert_eq!(holds(&split(), "w2", &parse_formula("[E]p").unwrap()), Ok(true));
        assert_eq!(holds(&merged(), "w1", &parse_formula("[E]p").unwrap()), Ok(false));
    }

    #[test]
    fn index_duplication_is_bisimilar() {
        for seed in 0..20 {
            let model = random_model(seed, 3, 2, &["p".to_string()]).unwrap();
            let idx = model.indices().next().unwrap().to_string();
            let doubled = model.with_duplicated_index(&idx, "zcopy").unwrap();
            let rel = max_bisimulation(&model, &doubled);
            for w in model.worlds() {
                assert!(rel.contains(w, w));
            }
        }
    }

    #[test]
    fn bisimilar_examples() {
        let model = merged();
        assert_eq!(bisimilar(&model, "w1", &model, "w1"), Ok(true));
        assert_eq!(bisimilar(&merged(), "w1", &split(), "w2"), Ok(false));
        // A p-world with a self-loop is bisimilar to a two-world p-cycle.
        let loop1 = m("world x p\nindex i\nedge x i x\n");
        let cycle2 = m("world x1 p\nworld x2 p\nindex i\nedge x1 i x2\nedge x2 i x1\n");
        assert_eq!(bisimilar(&loop1, "x", &cycle2, "x1"), Ok(true));
        assert!(matches!(
            bisimilar(&loop1, "ghost", &cycle2, "x1"),
            Err(ModelError::UnknownWorld(_))
        ));
    }

    #[test]
    fn n_bisimilar_base_and_step() {
        assert_eq!(n_bisimilar(&merged(), "w1", &split(), "w2", 0), Ok(true));
        assert_eq!(n_bisimilar(&merged(), "w1", &split(), "w2", 1), Ok(false));
        assert_eq!(n_bisimilar(&merged(), "a", &split(), "c", 4), Ok(true));
        // Full bisimilarity implies every finite approximant.
        let loop1 = m("world x p\nindex i\nedge x i x\n");
        let cycle2 = m("world x1 p\nworld x2 p\nindex i\nedge x1 i x2\nedge x2 i x1\n");
        for n in 0..=4 {
            assert_eq!(n_bisimilar(&loop1, "x", &cycle2, "x1", n), Ok(true));
        }
    }

    #[test]
    fn approximation_chain() {
        let props = vec!["p".to_string()];
        for seed in 0..30 {
            let m1 = random_model(seed, 3, 2, &props).unwrap();
            let m2 = random_model(seed + 1000, 3, 2, &props).unwrap();
            let mut checker = BisimChecker::new(&m1, &m2);
            for w1 in m1.worlds().map(|w| w.to_string()).collect::<Vec<_>>() {
                for w2 in m2.worlds().map(|w| w.to_string()).collect::<Vec<_>>() {
                    let mut prev = true;
                    for n in 0..=4 {
                        let cur = checker.n_bisimilar(&w1, &w2, n).unwrap();
                        assert!(
                            prev || !cur,
                            "chain broken at n={n} for ({w1},{w2})"
                        );
                        prev = cur;
                    }
                }
            }
        }
    }

    #[test]
    fn stabilization_matches_full_bisimulation() {
        // On finite models the approximants converge by n = |W1|*|W2|.
        let props = vec!["p".to_string()];
        let models: Vec<KripkeModel> = enumerate_models(2, 1, &props).unwrap().collect();
        for m1 in models.iter().step_by(7) {
            for m2 in models.iter().step_by(11) {
                let rel = max_bisimulation(m1, m2);
                let bound = m1.world_count() * m2.world_count();
                let mut checker = BisimChecker::new(m1, m2);
                for w1 in m1.worlds() {
                    for w2 in m2.worlds() {
                        assert_eq!(
                            checker.n_bisimilar(w1, w2, bound).unwrap(),
                            rel.contains(w1, w2),
                            "stabilization failed for ({w1},{w2})\n{}\n{}",
                            m1.render(),
                            m2.render()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn fixpoint_is_closed_and_maximal() {
        let props = vec!["p".to_string()];
        for seed in 0..25 {
            let m1 = random_model(seed, 3, 2, &props).unwrap();
            let m2 = random_model(seed + 77, 3, 2, &props).unwrap();
            let rel = max_bisimulation(&m1, &m2);
            let p = Paired::new(&m1, &m2);
            let g = |a: usize, b: usize| {
                rel.contains(&p.names1[a], &p.names2[b])
            };
            // Closure: every member pair satisfies all conditions.
            for a in 0..p.names1.len() {
                for b in 0..p.names2.len() {
                    if g(a, b) {
                        assert!(p.val_eq[a][b]);
                        assert!(p.conditions_hold(a, b, &g));
                    }
                }
            }
            // Maximality: no valuation-agreeing pair can be added back.
            for a in 0..p.names1.len() {
                for b in 0..p.names2.len() {
                    if !g(a, b) && p.val_eq[a][b] {
                        let extended = |x: usize, y: usize| (x, y) == (a, b) || g(x, y);
                        assert!(
                            !p.conditions_hold(a, b, &extended),
                            "pair ({},{}) could rejoin the fixpoint",
                            p.names1[a],
                            p.names2[b]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn char_formula_base_case() {
        let lonely = m("world w p\nindex i\n");
        let ctx = CharContext::new(lonely, &["p".to_string()], 0).unwrap();
        assert_eq!(ctx.char_formula("w", 0).unwrap(), &parse_formula("p").unwrap());
    }

    #[test]
    fn char_formula_lonely_world_depth_one() {
        let lonely = m("world w p\nindex i\n");
        let ctx = CharContext::new(lonely, &["p".to_string()], 1).unwrap();
        // All of the subset clauses absorb to true; what remains is the
        // valuation, [E] over the empty successor disjunction, and the
        // <E>back conjunct over the empty successor set.
        assert_eq!(
            ctx.char_formula("w", 1).unwrap(),
            &parse_formula("p & [E]false & [A]false").unwrap()
        );
    }

    #[test]
    fn char_formula_holds_at_its_own_world() {
        let props = vec!["p".to_string()];
        for seed in 0..25 {
            let model = random_model(seed, 3, 2, &props).unwrap();
            let ctx = CharContext::new(model.clone(), &props, 2).unwrap();
            for w in model.worlds() {
                for n in 0..=2 {
                    let chi = ctx.char_formula(w, n).unwrap();
                    assert_eq!(
                        holds(&model, w, chi),
                        Ok(true),
                        "chi^{n} of {w} fails at home in\n{}",
                        model.render()
                    );
                }
            }
        }
    }

    #[test]
    fn char_formula_captures_n_bisimilarity_small() {
        // Exhaustive over all pointed-model pairs with one world count up
        // to 2, one index, one proposition, and depths up to 2.
        let props = vec!["p".to_string()];
        let models: Vec<KripkeModel> = enumerate_models(2, 1, &props).unwrap().collect();
        let contexts: Vec<CharContext> = models
            .iter()
            .map(|model| CharContext::new(model.clone(), &props, 2).unwrap())
            .collect();
        for (m1, ctx1) in models.iter().zip(&contexts).step_by(3) {
            for m2 in models.iter().step_by(5) {
                let mut checker = BisimChecker::new(m1, m2);
                for w1 in m1.worlds() {
                    for w2 in m2.worlds() {
                        for n in 0..=2 {
                            let chi = ctx1.char_formula(w1, n).unwrap();
                            assert_eq!(
                                holds(m2, w2, chi).unwrap(),
                                checker.n_bisimilar(w1, w2, n).unwrap(),
                                "characteristic formula disagrees with n-bisimilarity at n={n} for ({w1},{w2})\n{}\n{}",
                                m1.render(),
                                m2.render()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_guard_reports_size() {
        let model = random_model(3, 3, 2, &["p".to_string(), "q".to_string()]).unwrap();
        match CharContext::with_guard(model, &["p".to_string(), "q".to_string()], 1, 0) {
            Err(CharError::GammaGuard { size, .. }) => assert!(size >= 1),
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn distinguishing_formula_examples() {
        let got = distinguishing_formula(&merged(), "w1", &split(), "w2", 2)
            .unwrap()
            .expect("the pair is distinguishable");
        assert_eq!(got.modal_depth(), 1);
        assert_eq!(holds(&merged(), "w1", &got), Ok(true));
        assert_eq!(holds(&split(), "w2", &got), Ok(false));
        // Bisimilar and identical pairs are indistinguishable.
        let loop1 = m("world x p\nindex i\nedge x i x\n");
        let cycle2 = m("world x1 p\nworld x2 p\nindex i\nedge x1 i x2\nedge x2 i x1\n");
        assert_eq!(distinguishing_formula(&loop1, "x", &cycle2, "x1", 3), Ok(None));
        assert_eq!(distinguishing_formula(&loop1, "x", &loop1, "x", 3), Ok(None));
    }

    #[test]
    fn random_unravellings_restrict_matches_n_bisim() {
        let props = vec!["p".to_string()];
        for seed in 0..15 {
            let m1 = random_model(seed, 2, 2, &props).unwrap();
            let m2 = random_model(seed + 31, 2, 2, &props).unwrap();
            let w1 = m1.worlds().next().unwrap().to_string();
            let w2 = m2.worlds().next().unwrap().to_string();
            let t1 = m1.unravel(&w1, 3).unwrap();
            let t2 = m2.unravel(&w2, 3).unwrap();
            let mut checker = BisimChecker::new(&t1.model, &t2.model);
            for n in 0..=3 {
                let r1 = t1.restrict(n).unwrap();
                let r2 = t2.restrict(n).unwrap();
                assert_eq!(
                    checker.n_bisimilar(&t1.point, &t2.point, n).unwrap(),
                    bisimilar(&r1.model, &r1.point, &r2.model, &r2.point).unwrap(),
                    "restriction equivalence failed at n={n} seed={seed}"
                );
            }
        }
    }

    #[test]
    fn unravelling_is_n_bisimilar_to_original() {
        let props = vec!["p".to_string()];
        for seed in 0..20 {
            let model = random_model(seed, 3, 2, &props).unwrap();
            let w = model.worlds().next().unwrap().to_string();
            for n in 0..=3 {
                let t = model.unravel(&w, n).unwrap();
                assert_eq!(
                    n_bisimilar(&model, &w, &t.model, &t.point, n),
                    Ok(true),
                    "unravelling to {n} lost behaviour, seed={seed}"
                );
            }
        }
    }
}
