//! Two-sorted first-order logic over worlds and indices, the standard
//! translation of IQML into it, and an Ehrenfeucht-Fraisse game solver.
//!
//! The signature has one monadic predicate `Q_p` per proposition over the
//! world sort and a single ternary predicate `R(x, tau, y)` taking a world,
//! an index, and a world. The translation of a modal formula needs only two
//! world variables (recycled by alternation) and one index variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::kripke::KripkeModel;
use crate::syntax::Formula;

/// A two-sorted first-order formula. World variables appear in `PredQ` and
/// the outer positions of `PredR`; index variables only in the middle
/// position of `PredR`. Binders carry the sort of the bound variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FOFormula {
    /// Q_p(x)
    PredQ(String, String),
    /// R(x, tau, y)
    PredR(String, String, String),
    Not(Box<FOFormula>),
    And(Box<FOFormula>, Box<FOFormula>),
    Or(Box<FOFormula>, Box<FOFormula>),
    Imp(Box<FOFormula>, Box<FOFormula>),
    ExistsW(String, Box<FOFormula>),
    ForallW(String, Box<FOFormula>),
    ExistsI(String, Box<FOFormula>),
    ForallI(String, Box<FOFormula>),
}

impl FOFormula {
    pub fn not(f: FOFormula) -> FOFormula {
        FOFormula::Not(Box::new(f))
    }

    pub fn and(l: FOFormula, r: FOFormula) -> FOFormula {
        FOFormula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: FOFormula, r: FOFormula) -> FOFormula {
        FOFormula::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: FOFormula, r: FOFormula) -> FOFormula {
        FOFormula::Imp(Box::new(l), Box::new(r))
    }

    pub fn exists_w(v: &str, f: FOFormula) -> FOFormula {
        FOFormula::ExistsW(v.to_string(), Box::new(f))
    }

    pub fn forall_w(v: &str, f: FOFormula) -> FOFormula {
        FOFormula::ForallW(v.to_string(), Box::new(f))
    }

    pub fn exists_i(v: &str, f: FOFormula) -> FOFormula {
        FOFormula::ExistsI(v.to_string(), Box::new(f))
    }

    pub fn forall_i(v: &str, f: FOFormula) -> FOFormula {
        FOFormula::ForallI(v.to_string(), Box::new(f))
    }
}

/// Finite interpretation of the two-sorted signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FOStructure {
    worlds: BTreeSet<String>,
    indices: BTreeSet<String>,
    r_interp: BTreeSet<(String, String, String)>,
    q_interp: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FOError {
    #[error("unbound {sort} variable '{name}'")]
    Unbound { sort: &'static str, name: String },
    #[error("'{element}' assigned to {sort} variable '{name}' is not in that sort")]
    NotInSort {
        sort: &'static str,
        name: String,
        element: String,
    },
    #[error("structure must have a nonempty {sort} sort")]
    EmptySort { sort: &'static str },
    #[error("relation triple ({0}, {1}, {2}) uses undeclared elements")]
    BadTriple(String, String, String),
    #[error("pebble sequences differ in length: {left} vs {right}")]
    PebbleLengthMismatch { left: usize, right: usize },
    #[error("pebble pair {position} mixes sorts")]
    PebbleSortMismatch { position: usize },
    #[error("pebble '{element}' is not an element of its structure")]
    UnknownPebble { element: String },
}

impl FOStructure {
    pub fn new(
        worlds: Vec<String>,
        indices: Vec<String>,
        r_interp: Vec<(String, String, String)>,
        q_interp: Vec<(String, Vec<String>)>,
    ) -> Result<FOStructure, FOError> {
        let worlds: BTreeSet<String> = worlds.into_iter().collect();
        let indices: BTreeSet<String> = indices.into_iter().collect();
        if worlds.is_empty() {
            return Err(FOError::EmptySort { sort: "world" });
        }
        if indices.is_empty() {
            return Err(FOError::EmptySort { sort: "index" });
        }
        for (x, t, y) in &r_interp {
            if !worlds.contains(x) || !indices.contains(t) || !worlds.contains(y) {
                return Err(FOError::BadTriple(x.clone(), t.clone(), y.clone()));
            }
        }
        let mut q: BTreeMap<String, BTreeSet<String>> =
            worlds.iter().map(|w| (w.clone(), BTreeSet::new())).collect();
        for (w, props) in q_interp {
            if !worlds.contains(&w) {
                return Err(FOError::UnknownPebble { element: w });
            }
            q.get_mut(&w).unwrap().extend(props);
        }
        Ok(FOStructure {
            worlds,
            indices,
            r_interp: r_interp.into_iter().collect(),
            q_interp: q,
        })
    }

    pub fn worlds(&self) -> impl Iterator<Item = &str> {
        self.worlds.iter().map(|s| s.as_str())
    }

    pub fn indices(&self) -> impl Iterator<Item = &str> {
        self.indices.iter().map(|s| s.as_str())
    }

    pub fn has_triple(&self, x: &str, t: &str, y: &str) -> bool {
        self.r_interp
            .contains(&(x.to_string(), t.to_string(), y.to_string()))
    }

    pub fn props_of(&self, w: &str) -> Option<&BTreeSet<String>> {
        self.q_interp.get(w)
    }
}

/// The canonical correspondence: `(w, i, v)` is in the relation iff it is
/// an edge of the model, and `Q_p` holds of `w` iff `p` is true at `w`.
pub fn to_fo_structure(m: &KripkeModel) -> FOStructure {
    FOStructure {
        worlds: m.worlds().map(|w| w.to_string()).collect(),
        indices: m.indices().map(|i| i.to_string()).collect(),
        r_interp: m.edges().cloned().collect(),
        q_interp: m
            .worlds()
            .map(|w| (w.to_string(), m.props_at(w).unwrap().clone()))
            .collect(),
    }
}

/// Standard translation parametrized by the free world variable `x`. Uses
/// exactly two world variables (`x` and its partner, alternating on modal
/// descent) and the single index variable `t`, deliberately shadowed.
///
/// `[E]f` becomes "some index relates only to f-worlds", `[A]f` "all
/// indices relate only to f-worlds"; the diamonds translate through the
/// dual clauses with conjunction in place of implication.
pub fn translate(f: &Formula, x: &str) -> FOFormula {
    let partner = if x == "y" { "x" } else { "y" };
    tr(f, x, partner)
}

fn tr(f: &Formula, cur: &str, other: &str) -> FOFormula {
    match f {
        Formula::Atom(p) => FOFormula::PredQ(p.clone(), cur.to_string()),
        // The signature has no truth constants; a self-implication is a
        // quantifier-free tautology and its negation a contradiction.
        Formula::Top => FOFormula::imp(
            FOFormula::PredQ("p".to_string(), cur.to_string()),
            FOFormula::PredQ("p".to_string(), cur.to_string()),
        ),
        Formula::Bot => FOFormula::not(tr(&Formula::Top, cur, other)),
        Formula::Not(g) => FOFormula::not(tr(g, cur, other)),
        Formula::And(l, r) => FOFormula::and(tr(l, cur, other), tr(r, cur, other)),
        Formula::Or(l, r) => FOFormula::or(tr(l, cur, other), tr(r, cur, other)),
        Formula::Imp(l, r) => FOFormula::imp(tr(l, cur, other), tr(r, cur, other)),
        Formula::BoxE(g) => FOFormula::exists_i(
            "t",
            FOFormula::forall_w(
                other,
                FOFormula::imp(step(cur, other), tr(g, other, cur)),
            ),
        ),
        Formula::BoxA(g) => FOFormula::forall_i(
            "t",
            FOFormula::forall_w(
                other,
                FOFormula::imp(step(cur, other), tr(g, other, cur)),
            ),
        ),
        Formula::DiaE(g) => FOFormula::exists_i(
            "t",
            FOFormula::exists_w(
                other,
                FOFormula::and(step(cur, other), tr(g, other, cur)),
            ),
        ),
        Formula::DiaA(g) => FOFormula::forall_i(
            "t",
            FOFormula::exists_w(
                other,
                FOFormula::and(step(cur, other), tr(g, other, cur)),
            ),
        ),
    }
}

fn step(cur: &str, other: &str) -> FOFormula {
    FOFormula::PredR(cur.to_string(), "t".to_string(), other.to_string())
}

/// A sort-respecting assignment of structure elements to free variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FOAssignment {
    pub worlds: BTreeMap<String, String>,
    pub indices: BTreeMap<String, String>,
}

impl FOAssignment {
    pub fn world(name: &str, element: &str) -> FOAssignment {
        FOAssignment {
            worlds: BTreeMap::from([(name.to_string(), element.to_string())]),
            indices: BTreeMap::new(),
        }
    }
}

/// Standard Tarskian truth over the finite structure; innermost bindings
/// shadow outer ones.
pub fn fo_eval(s: &FOStructure, env: &FOAssignment, f: &FOFormula) -> Result<bool, FOError> {
    let mut env = env.clone();
    for (name, element) in &env.worlds {
        if !s.worlds.contains(element) {
            return Err(FOError::NotInSort {
                sort: "world",
                name: name.clone(),
                element: element.clone(),
            });
        }
    }
    for (name, element) in &env.indices {
        if !s.indices.contains(element) {
            return Err(FOError::NotInSort {
                sort: "index",
                name: name.clone(),
                element: element.clone(),
            });
        }
    }
    eval(s, &mut env, f)
}

fn eval(s: &FOStructure, env: &mut FOAssignment, f: &FOFormula) -> Result<bool, FOError> {
    let world_of = |env: &FOAssignment, v: &String| {
        env.worlds.get(v).cloned().ok_or(FOError::Unbound {
            sort: "world",
            name: v.clone(),
        })
    };
    match f {
        FOFormula::PredQ(p, x) => {
            let w = world_of(env, x)?;
            Ok(s.q_interp[&w].contains(p))
        }
        FOFormula::PredR(x, t, y) => {
            let wx = world_of(env, x)?;
            let wt = env.indices.get(t).cloned().ok_or(FOError::Unbound {
                sort: "index",
                name: t.clone(),
            })?;
            let wy = world_of(env, y)?;
            Ok(s.has_triple(&wx, &wt, &wy))
        }
        FOFormula::Not(g) => Ok(!eval(s, env, g)?),
        FOFormula::And(l, r) => Ok(eval(s, env, l)? && eval(s, env, r)?),
        FOFormula::Or(l, r) => Ok(eval(s, env, l)? || eval(s, env, r)?),
        FOFormula::Imp(l, r) => Ok(!eval(s, env, l)? || eval(s, env, r)?),
        FOFormula::ExistsW(v, g) => quantify(s, env, v, g, false, true),
        FOFormula::ForallW(v, g) => quantify(s, env, v, g, true, true),
        FOFormula::ExistsI(v, g) => quantify(s, env, v, g, false, false),
        FOFormula::ForallI(v, g) => quantify(s, env, v, g, true, false),
    }
}

fn quantify(
    s: &FOStructure,
    env: &mut FOAssignment,
    v: &str,
    body: &FOFormula,
    universal: bool,
    world_sort: bool,
) -> Result<bool, FOError> {
    let domain: Vec<String> = if world_sort {
        s.worlds.iter().cloned().collect()
    } else {
        s.indices.iter().cloned().collect()
    };
    let map = if world_sort {
        &mut env.worlds
    } else {
        &mut env.indices
    };
    let saved = map.get(v).cloned();
    let mut result = universal;
    for element in domain {
        if world_sort {
            env.worlds.insert(v.to_string(), element);
        } else {
            env.indices.insert(v.to_string(), element);
        }
        let here = eval(s, env, body)?;
        if universal && !here {
            result = false;
            break;
        }
        if !universal && here {
            result = true;
            break;
        }
    }
    let map = if world_sort {
        &mut env.worlds
    } else {
        &mut env.indices
    };
    match saved {
        Some(old) => {
            map.insert(v.to_string(), old);
        }
        None => {
            map.remove(v);
        }
    }
    Ok(result)
}

/// Maximum nesting depth of world-sort quantifiers and, separately, of
/// index-sort quantifiers.
pub fn quantifier_ranks(f: &FOFormula) -> (usize, usize) {
    match f {
        FOFormula::PredQ(_, _) | FOFormula::PredR(_, _, _) => (0, 0),
        FOFormula::Not(g) => quantifier_ranks(g),
        FOFormula::And(l, r) | FOFormula::Or(l, r) | FOFormula::Imp(l, r) => {
            let (lx, lt) = quantifier_ranks(l);
            let (rx, rt) = quantifier_ranks(r);
            (lx.max(rx), lt.max(rt))
        }
        FOFormula::ExistsW(_, g) | FOFormula::ForallW(_, g) => {
            let (qx, qt) = quantifier_ranks(g);
            (qx + 1, qt)
        }
        FOFormula::ExistsI(_, g) | FOFormula::ForallI(_, g) => {
            let (qx, qt) = quantifier_ranks(g);
            (qx, qt + 1)
        }
    }
}

/// Parenthesized ASCII rendering; quantifiers print as `EXISTS-W y`,
/// `FORALL-I t`, etc.
pub fn render_fo(f: &FOFormula) -> String {
    match f {
        FOFormula::PredQ(p, x) => format!("Q{p}({x})"),
        FOFormula::PredR(x, t, y) => format!("R({x},{t},{y})"),
        FOFormula::Not(g) => format!("~{}", render_fo(g)),
        FOFormula::And(l, r) => format!("({} & {})", render_fo(l), render_fo(r)),
        FOFormula::Or(l, r) => format!("({} | {})", render_fo(l), render_fo(r)),
        FOFormula::Imp(l, r) => format!("({} -> {})", render_fo(l), render_fo(r)),
        FOFormula::ExistsW(v, g) => format!("EXISTS-W {v} {}", render_fo(g)),
        FOFormula::ForallW(v, g) => format!("FORALL-W {v} {}", render_fo(g)),
        FOFormula::ExistsI(v, g) => format!("EXISTS-I {v} {}", render_fo(g)),
        FOFormula::ForallI(v, g) => format!("FORALL-I {v} {}", render_fo(g)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Spoiler,
    Duplicator,
}

/// A pebbled element of one structure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Element {
    World(String),
    Index(String),
}

/// A game position: two structures with equally long pebble sequences (in
/// play order, sorts aligned), and the remaining pebble budgets per sort.
#[derive(Debug, Clone)]
pub struct GameConfig {
    pub left: FOStructure,
    pub right: FOStructure,
    pub left_pebbles: Vec<Element>,
    pub right_pebbles: Vec<Element>,
    pub budget_w: usize,
    pub budget_i: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
enum Sort {
    World,
    Index,
}

struct Game<'a> {
    left_worlds: Vec<&'a str>,
    left_indices: Vec<&'a str>,
    right_worlds: Vec<&'a str>,
    right_indices: Vec<&'a str>,
    left: &'a FOStructure,
    right: &'a FOStructure,
    memo: HashMap<(Vec<(Sort, usize, usize)>, usize, usize), bool>,
}

/// Exact winner of the Ehrenfeucht-Fraisse game under optimal play.
/// Spoiler picks a sort with remaining budget, a side, and an element;
/// Duplicator answers in the other structure with an element of the same
/// sort. Once both budgets are exhausted, Duplicator wins iff the pebble
/// correspondence is a partial isomorphism. A violated correspondence can
/// never recover (pebbles are permanent), so the search prunes eagerly.
pub fn ef_winner(cfg: &GameConfig) -> Result<Player, FOError> {
    if cfg.left_pebbles.len() != cfg.right_pebbles.len() {
        return Err(FOError::PebbleLengthMismatch {
            left: cfg.left_pebbles.len(),
            right: cfg.right_pebbles.len(),
        });
    }
    let mut game = Game {
        left_worlds: cfg.left.worlds().collect(),
        left_indices: cfg.left.indices().collect(),
        right_worlds: cfg.right.worlds().collect(),
        right_indices: cfg.right.indices().collect(),
        left: &cfg.left,
        right: &cfg.right,
        memo: HashMap::new(),
    };
    let mut pebbles = Vec::new();
    for (pos, (l, r)) in cfg.left_pebbles.iter().zip(&cfg.right_pebbles).enumerate() {
        let pair = match (l, r) {
            (Element::World(a), Element::World(b)) => {
                let la = game
                    .left_worlds
                    .iter()
                    .position(|w| w == a)
                    .ok_or_else(|| FOError::UnknownPebble { element: a.clone() })?;
                let rb = game
                    .right_worlds
                    .iter()
                    .position(|w| w == b)
                    .ok_or_else(|| FOError::UnknownPebble { element: b.clone() })?;
                (Sort::World, la, rb)
            }
            (Element::Index(a), Element::Index(b)) => {
                let la = game
                    .left_indices
                    .iter()
                    .position(|i| i == a)
                    .ok_or_else(|| FOError::UnknownPebble { element: a.clone() })?;
                let rb = game
                    .right_indices
                    .iter()
                    .position(|i| i == b)
                    .ok_or_else(|| FOError::UnknownPebble { element: b.clone() })?;
                (Sort::Index, la, rb)
            }
            _ => return Err(FOError::PebbleSortMismatch { position: pos }),
        };
        pebbles.push(pair);
    }
    Ok(if game.dup_wins(&pebbles, cfg.budget_w, cfg.budget_i) {
        Player::Duplicator
    } else {
        Player::Spoiler
    })
}

impl<'a> Game<'a> {
    fn partial_iso(&self, pebbles: &[(Sort, usize, usize)]) -> bool {
        for (i, &(s1, l1, r1)) in pebbles.iter().enumerate() {
            for &(s2, l2, r2) in &pebbles[i + 1..] {
                if s1 == s2 && ((l1 == l2) != (r1 == r2)) {
                    return false;
                }
            }
        }
        for &(sort, l, r) in pebbles {
            if sort == Sort::World
                && self.left.props_of(self.left_worlds[l]) != self.right.props_of(self.right_worlds[r])
            {
                return false;
            }
        }
        for &(s1, l1, r1) in pebbles {
            if s1 != Sort::World {
                continue;
            }
            for &(s2, l2, r2) in pebbles {
                if s2 != Sort::Index {
                    continue;
                }
                for &(s3, l3, r3) in pebbles {
                    if s3 != Sort::World {
                        continue;
                    }
                    let lt = self.left.has_triple(
                        self.left_worlds[l1],
                        self.left_indices[l2],
                        self.left_worlds[l3],
                    );
                    let rt = self.right.has_triple(
                        self.right_worlds[r1],
                        self.right_indices[r2],
                        self.right_worlds[r3],
                    );
                    if lt != rt {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn dup_wins(&mut self, pebbles: &[(Sort, usize, usize)], bw: usize, bi: usize) -> bool {
        if !self.partial_iso(pebbles) {
            return false;
        }
        if bw == 0 && bi == 0 {
            return true;
        }
        let mut key: Vec<(Sort, usize, usize)> = pebbles.to_vec();
        key.sort();
        key.dedup();
        if let Some(&v) = self.memo.get(&(key.clone(), bw, bi)) {
            return v;
        }
        let mut sorts = Vec::new();
        if bw > 0 {
            sorts.push(Sort::World);
        }
        if bi > 0 {
            sorts.push(Sort::Index);
        }
        let mut dup_survives = true;
        'spoiler: for sort in sorts {
            let (bw2, bi2) = match sort {
                Sort::World => (bw - 1, bi),
                Sort::Index => (bw, bi - 1),
            };
            let (left_n, right_n) = match sort {
                Sort::World => (self.left_worlds.len(), self.right_worlds.len()),
                Sort::Index => (self.left_indices.len(), self.right_indices.len()),
            };
            // Spoiler moves on the left: Duplicator answers on the right.
            for l in 0..left_n {
                let answered = (0..right_n).any(|r| {
                    let mut next = pebbles.to_vec();
                    next.push((sort, l, r));
                    self.dup_wins(&next, bw2, bi2)
                });
                if !answered {
                    dup_survives = false;
                    break 'spoiler;
                }
            }
            // Spoiler moves on the right: Duplicator answers on the left.
            for r in 0..right_n {
                let answered = (0..left_n).any(|l| {
                    let mut next = pebbles.to_vec();
                    next.push((sort, l, r));
                    self.dup_wins(&next, bw2, bi2)
                });
                if !answered {
                    dup_survives = false;
                    break 'spoiler;
                }
            }
        }
        self.memo.insert((key, bw, bi), dup_survives);
        dup_survives
    }
}
