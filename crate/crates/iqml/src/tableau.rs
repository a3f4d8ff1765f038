//! Tableau satisfiability for IQML with model extraction.
//!
//! The procedure works on negation normal form. A node's label is
//! propositionally saturated (conjunctions expanded, disjunctions branched
//! depth-first in canonical order, truth constants resolved), then the
//! modal branching rule fires once per node. With the label partitioned as
//! `A = <E>-bodies`, `B = [E]-bodies`, `C = <A>-bodies`, `D' = [A]-bodies`,
//! the children are:
//!
//! 1. `(c_alpha, {alpha} u D')` for each `alpha` in `A`;
//! 2. `(d_beta, {beta, phi} u D')` for each `beta` in `B` and `phi` in `C`;
//! 3. `(e, {phi} u D')` for each `phi` in `C` and each witness index `e`
//!    that is not an active `d_beta`.
//!
//! Every index therefore receives a successor for each `<A>`-obligation
//! (strengthened by `beta` along active `d_beta` edges), `<E>`-obligations
//! get dedicated witnesses, and `[E]`-obligations with no `<A>`-formulas
//! present are satisfied vacuously by an edge-free witness index. A node
//! with `A` and `C` both empty has no children.
//!
//! From an open tableau the satisfying model reads off directly: one world
//! per node, the full witness index set, one labelled edge per child, and
//! the positive atoms of each label as the valuation.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::kripke::{KripkeModel, PointedModel};
use crate::syntax::Formula;

/// Witness indices for a formula: one `c` index per `<E>`-subformula body,
/// one `d` index per `[E]`-subformula body, plus a default index `j` that
/// keeps the index set nonempty and absorbs obligations that need no
/// dedicated witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessIndexSet {
    c_witnesses: std::collections::BTreeMap<Formula, String>,
    d_witnesses: std::collections::BTreeMap<Formula, String>,
    default_index: String,
}

impl WitnessIndexSet {
    /// The names, sorted.
    pub fn all_indices(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.c_witnesses.values().cloned().collect();
        out.extend(self.d_witnesses.values().cloned());
        out.insert(self.default_index.clone());
        out
    }

    pub fn c_witness(&self, body: &Formula) -> Option<&str> {
        self.c_witnesses.get(body).map(|s| s.as_str())
    }

    pub fn d_witness(&self, body: &Formula) -> Option<&str> {
        self.d_witnesses.get(body).map(|s| s.as_str())
    }

    pub fn default_index(&self) -> &str {
        &self.default_index
    }

    pub fn len(&self) -> usize {
        self.c_witnesses.len() + self.d_witnesses.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// One node of a tableau: a saturated label, the index on the incoming
/// edge (`None` for the root), and the children produced by the branching
/// rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableauNode {
    pub id: String,
    pub label: BTreeSet<Formula>,
    pub incoming: Option<String>,
    pub children: Vec<TableauNode>,
}

impl TableauNode {
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }
}

/// Outcome of the satisfiability check. `Sat` carries a model on which the
/// input formula holds at the point, together with the open tableau it was
/// read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat {
        model: PointedModel,
        tableau: TableauNode,
    },
    Unsat,
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableauError {
    #[error("label is not propositionally saturated: contains '{0}'")]
    Unsaturated(String),
    #[error("label is closed")]
    ClosedLabel,
    #[error("closed node '{id}' encountered")]
    ClosedNode { id: String },
    #[error("no witness index for '{0}'")]
    MissingWitness(String),
    #[error("node '{id}' has no incoming edge label")]
    MissingEdgeLabel { id: String },
    #[error("tableau does not form a model: {0}")]
    InvalidTableau(String),
}

/// Witness indices of `f`, computed over the subformulas of its negation
/// normal form. `<E>`-bodies get `c1, c2, ...` in canonical body order,
/// `[E]`-bodies get `d1, d2, ...`, and the default index is `j`.
pub fn witness_index_set(f: &Formula) -> WitnessIndexSet {
    let nnf = f.to_nnf();
    let mut c_bodies = BTreeSet::new();
    let mut d_bodies = BTreeSet::new();
    for sub in nnf.subformulas() {
        match sub {
            Formula::DiaE(body) => {
                c_bodies.insert(*body);
            }
            Formula::BoxE(body) => {
                d_bodies.insert(*body);
            }
            _ => {}
        }
    }
    WitnessIndexSet {
        c_witnesses: c_bodies
            .into_iter()
            .enumerate()
            .map(|(n, body)| (body, format!("c{}", n + 1)))
            .collect(),
        d_witnesses: d_bodies
            .into_iter()
            .enumerate()
            .map(|(n, body)| (body, format!("d{}", n + 1)))
            .collect(),
        default_index: "j".to_string(),
    }
}

fn is_closed(label: &BTreeSet<Formula>) -> bool {
    if label.contains(&Formula::Bot) {
        return true;
    }
    label.iter().any(|f| match f {
        Formula::Not(inner) => label.contains(inner),
        _ => false,
    })
}

/// The modal branching rule on a saturated open label. Children are listed
/// clause by clause: `<E>`-witnesses, then `[E]x<A>` combinations, then
/// `<A>`-obligations along the remaining indices.
pub fn apply_br(
    label: &BTreeSet<Formula>,
    idx: &WitnessIndexSet,
) -> Result<Vec<(String, BTreeSet<Formula>)>, TableauError> {
    for f in label {
        let saturated = match f {
            Formula::Atom(_) => true,
            Formula::Not(inner) => matches!(**inner, Formula::Atom(_)),
            Formula::BoxE(_) | Formula::BoxA(_) | Formula::DiaE(_) | Formula::DiaA(_) => true,
            Formula::Top | Formula::Bot | Formula::And(_, _) | Formula::Or(_, _)
            | Formula::Imp(_, _) => false,
        };
        if !saturated {
            return Err(TableauError::Unsaturated(f.to_string()));
        }
    }
    if is_closed(label) {
        return Err(TableauError::ClosedLabel);
    }
    br_children(label, idx)
}

fn br_children(
    label: &BTreeSet<Formula>,
    idx: &WitnessIndexSet,
) -> Result<Vec<(String, BTreeSet<Formula>)>, TableauError> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let mut d_prime = BTreeSet::new();
    for f in label {
        match f {
            Formula::DiaE(body) => a.push((**body).clone()),
            Formula::BoxE(body) => b.push((**body).clone()),
            Formula::DiaA(body) => c.push((**body).clone()),
            Formula::BoxA(body) => {
                d_prime.insert((**body).clone());
            }
            _ => {}
        }
    }
    // With no <E>- and no <A>-obligations nothing forces a successor:
    // [E] and [A] hold vacuously at an edge-free world.
    if a.is_empty() && c.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for alpha in &a {
        let name = idx
            .c_witness(alpha)
            .ok_or_else(|| TableauError::MissingWitness(alpha.to_string()))?;
        let mut child = d_prime.clone();
        child.insert(alpha.clone());
        out.push((name.to_string(), child));
    }
    let mut active_d = BTreeSet::new();
    for beta in &b {
        let name = idx
            .d_witness(beta)
            .ok_or_else(|| TableauError::MissingWitness(beta.to_string()))?;
        active_d.insert(name.to_string());
        for phi in &c {
            let mut child = d_prime.clone();
            child.insert(beta.clone());
            child.insert(phi.clone());
            out.push((name.to_string(), child));
        }
    }
    for phi in &c {
        for e in idx.all_indices() {
            if active_d.contains(&e) {
                continue;
            }
            let mut child = d_prime.clone();
            child.insert(phi.clone());
            out.push((e, child));
        }
    }
    Ok(out)
}

struct Solved {
    label: BTreeSet<Formula>,
    children: Vec<(String, Solved)>,
}

/// Depth-first search for an open resolution. Disjunctions branch in
/// canonical label order, left disjunct first; the first fully open
/// resolution wins.
fn solve(mut label: BTreeSet<Formula>, idx: &WitnessIndexSet) -> Option<Solved> {
    loop {
        if is_closed(&label) {
            return None;
        }
        let expandable = label
            .iter()
            .find(|f| {
                matches!(
                    f,
                    Formula::Top | Formula::And(_, _) | Formula::Or(_, _)
                )
            })
            .cloned();
        match expandable {
            Some(Formula::Top) => {
                label.remove(&Formula::Top);
            }
            Some(f @ Formula::And(_, _)) => {
                let (l, r) = match &f {
                    Formula::And(l, r) => ((**l).clone(), (**r).clone()),
                    _ => unreachable!(),
                };
                label.remove(&f);
                label.insert(l);
                label.insert(r);
            }
            Some(f @ Formula::Or(_, _)) => {
                let (l, r) = match &f {
                    Formula::Or(l, r) => ((**l).clone(), (**r).clone()),
                    _ => unreachable!(),
                };
                let mut left = label.clone();
                left.remove(&f);
                left.insert(l);
                if let Some(node) = solve(left, idx) {
                    return Some(node);
                }
                label.remove(&f);
                label.insert(r);
                // tail-continue on the right branch
            }
            Some(_) => unreachable!(),
            None => break,
        }
    }
    let specs = br_children(&label, idx).expect("saturated open label");
    debug_assert!(
        {
            let node_md = label.iter().map(|f| f.modal_depth()).max().unwrap_or(0);
            specs.iter().all(|(_, child)| {
                child.iter().map(|f| f.modal_depth()).max().unwrap_or(0) < node_md
            })
        },
        "branching rule failed to reduce modal depth"
    );
    let mut children = Vec::new();
    for (index_name, child_label) in specs {
        let child = solve(child_label, idx)?;
        children.push((index_name, child));
    }
    Some(Solved { label, children })
}

fn assign_ids(node: Solved, incoming: Option<String>, next: &mut usize) -> TableauNode {
    let id = format!("w{}", *next);
    *next += 1;
    TableauNode {
        id,
        label: node.label,
        incoming,
        children: node
            .children
            .into_iter()
            .map(|(index_name, child)| assign_ids(child, Some(index_name), next))
            .collect(),
    }
}

/// Reads the satisfying model off an open tableau: worlds are the node
/// ids, indices the full witness set, each child contributes one edge
/// labelled with its incoming index, and each world makes exactly the
/// positive atoms of its label true. The point is the root.
pub fn extract_model(
    root: &TableauNode,
    idx: &WitnessIndexSet,
) -> Result<PointedModel, TableauError> {
    let mut worlds = Vec::new();
    let mut edges = Vec::new();
    let mut valuation = Vec::new();
    collect_model(root, &mut worlds, &mut edges, &mut valuation)?;
    let model = KripkeModel::new(
        worlds,
        idx.all_indices().into_iter().collect(),
        edges,
        valuation,
    )
    .map_err(|violations| {
        TableauError::InvalidTableau(
            violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; "),
        )
    })?;
    PointedModel::new(model, &root.id)
        .map_err(|e| TableauError::InvalidTableau(e.to_string()))
}

fn collect_model(
    node: &TableauNode,
    worlds: &mut Vec<String>,
    edges: &mut Vec<(String, String, String)>,
    valuation: &mut Vec<(String, Vec<String>)>,
) -> Result<(), TableauError> {
    if is_closed(&node.label) {
        return Err(TableauError::ClosedNode {
            id: node.id.clone(),
        });
    }
    worlds.push(node.id.clone());
    valuation.push((
        node.id.clone(),
        node.label
            .iter()
            .filter_map(|f| match f {
                Formula::Atom(p) => Some(p.clone()),
                _ => None,
            })
            .collect(),
    ));
    for child in &node.children {
        let index_name = child
            .incoming
            .clone()
            .ok_or_else(|| TableauError::MissingEdgeLabel {
                id: child.id.clone(),
            })?;
        edges.push((node.id.clone(), index_name, child.id.clone()));
        collect_model(child, worlds, edges, valuation)?;
    }
    Ok(())
}

/// Tableau satisfiability. `Unsat` iff every propositional branch of every
/// reachable node closes; otherwise `Sat` with the extracted model, on
/// which the formula is guaranteed to hold at the point.
pub fn decide_sat(f: &Formula) -> Verdict {
    let nnf = f.to_nnf();
    let idx = witness_index_set(f);
    let md = nnf.modal_depth();
    match solve(BTreeSet::from([nnf.clone()]), &idx) {
        None => Verdict::Unsat,
        Some(solved) => {
            let mut next = 0usize;
            let tableau = assign_ids(solved, None, &mut next);
            assert!(
                tableau.depth() <= md,
                "tableau depth {} exceeds modal depth {md}",
                tableau.depth()
            );
            let model = extract_model(&tableau, &idx).expect("open resolution extracts a model");
            let sf = nnf.subformulas().len() as u128;
            let index_count = idx.len() as u128;
            if let Some(bound) = (sf * (sf + index_count)).checked_pow(md as u32) {
                assert!(
                    (model.model.world_count() as u128) <= bound,
                    "extracted model exceeds the size bound"
                );
            }
            debug_assert_eq!(
                crate::semantics::holds(&model.model, &model.point, f),
                Ok(true),
                "extracted model does not satisfy the formula"
            );
            Verdict::Sat { model, tableau }
        }
    }
}

/// Validity through the tableau: `f` is valid iff its negation has no open
/// tableau.
pub fn is_valid(f: &Formula) -> bool {
    matches!(decide_sat(&Formula::not(f.clone())), Verdict::Unsat)
}
