//! Checker for Hilbert-style derivations over the IQML axiom system.
//!
//! The system has three axiom schemata and three rules:
//!
//! * `A0` — all instances of propositional validities;
//! * `A1` — `[A](f -> g) -> ([A]f -> [A]g)`;
//! * `A2` — `[A](f -> g) -> (<A>f -> <A>g)`;
//! * `MP` — from `f -> g` and `f` infer `g`;
//! * `NecA` — from `f` infer `[A]f`;
//! * `NecE` — from `f` infer `[E]f` (sound because the index set of every
//!   model is nonempty).
//!
//! Axiom matching is purely syntactic on the primitive constructors: `<A>`
//! must appear literally, never as an unfolded `~[E]~`.
//!
//! Proof file format, one step per line, `#` comments:
//!
//! ```text
//! <n>: <formula> ; <justification>
//! ```
//!
//! with justifications `A0`, `A1`, `A2`, `MP i j`, `NecA i`, `NecE i`,
//! where `MP i j` cites the implication line `i` and the antecedent line
//! `j`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{parse_formula, Formula};

/// Ceiling on the number of distinct non-boolean parts a formula may
/// abstract to when checked as a propositional tautology instance.
pub const TAUTOLOGY_WIDTH_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    A0,
    A1,
    A2,
    /// `Mp(i, j)`: line `i` is `line j -> this line`.
    Mp(usize, usize),
    NecA(usize),
    NecE(usize),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::A0 => write!(f, "A0"),
            Justification::A1 => write!(f, "A1"),
            Justification::A2 => write!(f, "A2"),
            Justification::Mp(i, j) => write!(f, "MP {i} {j}"),
            Justification::NecA(i) => write!(f, "NecA {i}"),
            Justification::NecE(i) => write!(f, "NecE {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub index: usize,
    pub formula: Formula,
    pub justification: Justification,
}

/// A numbered derivation; line indices run 1..n and justifications may
/// reference only strictly earlier lines.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Proof {
    pub lines: Vec<ProofLine>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("formula abstracts to {count} distinct non-boolean parts, above the guard of {guard}")]
    WidthExceeded { count: usize, guard: usize },
}

/// A failed check: the first offending line and why.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("rejected at line {line}: {reason}")]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomSchema {
    A1,
    A2,
}

/// True iff `f` is a substitution instance of a propositional tautology:
/// each maximal non-boolean subformula (atom or modal formula) is
/// abstracted to a variable and the boolean skeleton is truth-tabled.
pub fn is_tautology_instance(f: &Formula) -> Result<bool, ProofError> {
    let mut units = BTreeSet::new();
    collect_units(f, &mut units);
    let units: Vec<&Formula> = units.iter().collect();
    if units.len() > TAUTOLOGY_WIDTH_GUARD {
        return Err(ProofError::WidthExceeded {
            count: units.len(),
            guard: TAUTOLOGY_WIDTH_GUARD,
        });
    }
    for assignment in 0u64..(1 << units.len()) {
        let value = |unit: &Formula| {
            let pos = units.iter().position(|u| *u == unit).unwrap();
            (assignment >> pos) & 1 == 1
        };
        if !eval_skeleton(f, &value) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn collect_units(f: &Formula, out: &mut BTreeSet<Formula>) {
    match f {
        Formula::Top | Formula::Bot => {}
        Formula::Not(g) => collect_units(g, out),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
            collect_units(l, out);
            collect_units(r, out);
        }
        Formula::Atom(_)
        | Formula::BoxE(_)
        | Formula::BoxA(_)
        | Formula::DiaE(_)
        | Formula::DiaA(_) => {
            out.insert(f.clone());
        }
    }
}

fn eval_skeleton(f: &Formula, value: &dyn Fn(&Formula) -> bool) -> bool {
    match f {
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Not(g) => !eval_skeleton(g, value),
        Formula::And(l, r) => eval_skeleton(l, value) && eval_skeleton(r, value),
        Formula::Or(l, r) => eval_skeleton(l, value) || eval_skeleton(r, value),
        Formula::Imp(l, r) => !eval_skeleton(l, value) || eval_skeleton(r, value),
        unit => value(unit),
    }
}

/// Structural match against the two modal axiom schemata; any formulas may
/// instantiate the placeholders.
pub fn match_axiom(f: &Formula) -> Option<AxiomSchema> {
    let Formula::Imp(premise, conclusion) = f else {
        return None;
    };
    let Formula::BoxA(inner) = &**premise else {
        return None;
    };
    let Formula::Imp(phi, psi) = &**inner else {
        return None;
    };
    let Formula::Imp(from, to) = &**conclusion else {
        return None;
    };
    match (&**from, &**to) {
        (Formula::BoxA(f1), Formula::BoxA(f2)) if f1 == phi && f2 == psi => Some(AxiomSchema::A1),
        (Formula::DiaA(f1), Formula::DiaA(f2)) if f1 == phi && f2 == psi => Some(AxiomSchema::A2),
        _ => None,
    }
}

/// Verifies every line of the derivation against its justification; the
/// first failure is reported with its line number.
pub fn check_proof(proof: &Proof) -> Result<(), Rejection> {
    for (pos, line) in proof.lines.iter().enumerate() {
        let expected = pos + 1;
        if line.index != expected {
            return Err(Rejection {
                line: line.index,
                reason: format!("line numbered {} where {} was expected", line.index, expected),
            });
        }
        let reject = |reason: String| Rejection {
            line: line.index,
            reason,
        };
        let earlier = |i: usize| -> Result<&ProofLine, Rejection> {
            if i == 0 || i >= line.index {
                return Err(reject(format!(
                    "reference to line {i}, which is not strictly earlier"
                )));
            }
            Ok(&proof.lines[i - 1])
        };
        match &line.justification {
            Justification::A0 => match is_tautology_instance(&line.formula) {
                Ok(true) => {}
                Ok(false) => return Err(reject("not a propositional tautology instance".into())),
                Err(e) => return Err(reject(e.to_string())),
            },
            Justification::A1 => {
                if match_axiom(&line.formula) != Some(AxiomSchema::A1) {
                    return Err(reject("not an instance of axiom A1".into()));
                }
            }
            Justification::A2 => {
                if match_axiom(&line.formula) != Some(AxiomSchema::A2) {
                    return Err(reject("not an instance of axiom A2".into()));
                }
            }
            Justification::Mp(i, j) => {
                let imp_line = earlier(*i)?;
                let ant_line = earlier(*j)?;
                let wanted =
                    Formula::imp(ant_line.formula.clone(), line.formula.clone());
                if imp_line.formula != wanted {
                    return Err(reject(format!(
                        "line {i} is not 'line {j} -> this line'"
                    )));
                }
            }
            Justification::NecA(i) => {
                let prem = earlier(*i)?;
                if line.formula != Formula::box_a(prem.formula.clone()) {
                    return Err(reject(format!("not [A] applied to line {i}")));
                }
            }
            Justification::NecE(i) => {
                let prem = earlier(*i)?;
                if line.formula != Formula::box_e(prem.formula.clone()) {
                    return Err(reject(format!("not [E] applied to line {i}")));
                }
            }
        }
    }
    Ok(())
}

/// Parses the proof file format.
pub fn parse_proof(text: &str) -> Result<Proof, ProofError> {
    let mut lines = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ProofError::Parse {
            line: lineno + 1,
            message,
        };
        let (index_text, rest) = line
            .split_once(':')
            .ok_or_else(|| err("expected '<n>: <formula> ; <justification>'".into()))?;
        let index: usize = index_text
            .trim()
            .parse()
            .map_err(|_| err(format!("bad line number '{}'", index_text.trim())))?;
        let (formula_text, just_text) = rest
            .rsplit_once(';')
            .ok_or_else(|| err("missing ';' before the justification".into()))?;
        let formula = parse_formula(formula_text.trim())
            .map_err(|e| err(format!("bad formula: {e}")))?;
        let justification = parse_justification(just_text.trim())
            .ok_or_else(|| err(format!("bad justification '{}'", just_text.trim())))?;
        lines.push(ProofLine {
            index,
            formula,
            justification,
        });
    }
    Ok(Proof { lines })
}

fn parse_justification(text: &str) -> Option<Justification> {
    let mut parts = text.split_whitespace();
    let head = parts.next()?;
    let just = match head {
        "A0" => Justification::A0,
        "A1" => Justification::A1,
        "A2" => Justification::A2,
        "MP" => {
            let i = parts.next()?.parse().ok()?;
            let j = parts.next()?.parse().ok()?;
            Justification::Mp(i, j)
        }
        "NecA" => Justification::NecA(parts.next()?.parse().ok()?),
        "NecE" => Justification::NecE(parts.next()?.parse().ok()?),
        _ => return None,
    };
    if parts.next().is_some() {
        return None;
    }
    Some(just)
}

/// Renders a proof in the file format.
pub fn render_proof(proof: &Proof) -> String {
    proof
        .lines
        .iter()
        .map(|l| format!("{}: {} ; {}\n", l.index, l.formula, l.justification))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::random_formula;
    use crate::tableau::is_valid;
    use rand_chacha::ChaCha8Rng;
    use rand::{Rng, SeedableRng};

    fn f(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    #[test]
    fn tautology_instances() {
        assert_eq!(is_tautology_instance(&f("p -> (q -> p)")), Ok(true));
        assert_eq!(is_tautology_instance(&f("[E]p -> [E]p")), Ok(true));
        assert_eq!(is_tautology_instance(&f("[E]p -> [A]p")), Ok(false));
        assert_eq!(is_tautology_instance(&f("true")), Ok(true));
        assert_eq!(is_tautology_instance(&f("p | ~p")), Ok(true));
        assert_eq!(is_tautology_instance(&f("p")), Ok(false));
    }

    #[test]
    fn width_guard_fires() {
        // 21 distinct atoms exceed the abstraction width.
        let atoms: Vec<Formula> = (0..21).map(|n| Formula::atom(&format!("p{n}"))).collect();
        let mut big = atoms[0].clone();
        for a in &atoms[1..] {
            big = Formula::and(big, a.clone());
        }
        let wide = Formula::imp(big.clone(), big);
        assert!(matches!(
            is_tautology_instance(&wide),
            Err(ProofError::WidthExceeded { count: 21, .. })
        ));
    }

    #[test]
    fn axiom_matching() {
        assert_eq!(match_axiom(&f("[A](p->q) -> ([A]p -> [A]q)")), Some(AxiomSchema::A1));
        assert_eq!(match_axiom(&f("[A](p->q) -> (<A>p -> <A>q)")), Some(AxiomSchema::A2));
        assert_eq!(match_axiom(&f("[A](p->q) -> ([E]p -> [E]q)")), None);
        assert_eq!(match_axiom(&f("[A](p->q) -> ([A]q -> [A]p)")), None);
        assert_eq!(match_axiom(&f("[E](p->q) -> ([A]p -> [A]q)")), None);
        // Any instantiation is fine, including modal ones.
        assert_eq!(
            match_axiom(&f("[A]([E]p -> <A>q) -> ([A][E]p -> [A]<A>q)")),
            Some(AxiomSchema::A1)
        );
    }

    #[test]
    fn necessitation_accepted() {
        let proof = parse_proof("1: p -> (q -> p) ; A0\n2: [A](p -> (q -> p)) ; NecA 1\n").unwrap();
        assert_eq!(check_proof(&proof), Ok(()));
    }

    #[test]
    fn non_tautology_rejected() {
        let proof = parse_proof("1: p -> q ; A0\n").unwrap();
        let rej = check_proof(&proof).unwrap_err();
        assert_eq!(rej.line, 1);
        assert!(rej.reason.contains("tautology"));
    }

    #[test]
    fn forward_references_rejected() {
        let proof = parse_proof("1: [A]p ; NecA 1\n").unwrap();
        assert!(check_proof(&proof).is_err());
        let proof = parse_proof("1: p | ~p ; A0\n2: q ; MP 3 1\n").unwrap();
        assert!(check_proof(&proof).is_err());
    }

    #[test]
    fn bad_line_numbers_rejected() {
        let proof = parse_proof("1: p | ~p ; A0\n3: q | ~q ; A0\n").unwrap();
        let rej = check_proof(&proof).unwrap_err();
        assert!(rej.reason.contains("numbered"));
    }

    #[test]
    fn mp_shape_checked() {
        let text = "1: p | ~p ; A0\n2: (p | ~p) -> (q -> q) ; A0\n3: q -> q ; MP 2 1\n";
        assert_eq!(check_proof(&parse_proof(text).unwrap()), Ok(()));
        let bad = "1: p | ~p ; A0\n2: (p | ~p) -> (q -> q) ; A0\n3: q -> p ; MP 2 1\n";
        assert!(check_proof(&parse_proof(bad).unwrap()).is_err());
    }

    #[test]
    fn parse_errors_report_lines() {
        assert!(matches!(
            parse_proof("1: p | ~p\n"),
            Err(ProofError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_proof("1: p | ~p ; A9\n"),
            Err(ProofError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_proof("one: p ; A0\n"),
            Err(ProofError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn bundled_conjunction_distribution_proof() {
        let text = std::fs::read_to_string(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/conj_distribution.proof"),
        )
        .unwrap();
        let proof = parse_proof(&text).unwrap();
        assert_eq!(check_proof(&proof), Ok(()));
        let conclusion = &proof.lines.last().unwrap().formula;
        assert_eq!(conclusion, &f("([A]p & [A]q) -> [A](p & q)"));
        assert!(is_valid(conclusion));
    }

    #[test]
    fn proof_round_trip() {
        let text = "1: p -> (q -> p) ; A0\n2: [A](p -> (q -> p)) ; NecA 1\n3: [E](p -> (q -> p)) ; NecE 1\n";
        let proof = parse_proof(text).unwrap();
        assert_eq!(parse_proof(&render_proof(&proof)).unwrap(), proof);
    }

    /// Grows a random accepted proof and checks the soundness of the
    /// system: every accepted line must be tableau-valid.
    #[test]
    fn fuzzed_accepted_proofs_have_valid_conclusions() {
        let props = vec!["p".to_string(), "q".to_string()];
        for seed in 0..25 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut lines: Vec<ProofLine> = Vec::new();
            while lines.len() < 8 {
                let index = lines.len() + 1;
                let choice = rng.gen_range(0..5);
                let line = match choice {
                    0 => {
                        // A tautology template over random fillers.
                        let a = random_formula(rng.gen(), 1, &props).unwrap();
                        let b = random_formula(rng.gen(), 1, &props).unwrap();
                        let formula = match rng.gen_range(0..3) {
                            0 => Formula::imp(a.clone(), Formula::imp(b, a)),
                            1 => Formula::imp(Formula::and(a.clone(), b), a),
                            _ => Formula::or(a.clone(), Formula::not(a)),
                        };
                        ProofLine {
                            index,
                            formula,
                            justification: Justification::A0,
                        }
                    }
                    1 | 2 => {
                        let phi = random_formula(rng.gen(), 1, &props).unwrap();
                        let psi = random_formula(rng.gen(), 1, &props).unwrap();
                        let premise = Formula::box_a(Formula::imp(phi.clone(), psi.clone()));
                        if choice == 1 {
                            ProofLine {
                                index,
                                formula: Formula::imp(
                                    premise,
                                    Formula::imp(
                                        Formula::box_a(phi),
                                        Formula::box_a(psi),
                                    ),
                                ),
                                justification: Justification::A1,
                            }
                        } else {
                            ProofLine {
                                index,
                                formula: Formula::imp(
                                    premise,
                                    Formula::imp(
                                        Formula::dia_a(phi),
                                        Formula::dia_a(psi),
                                    ),
                                ),
                                justification: Justification::A2,
                            }
                        }
                    }
                    3 if !lines.is_empty() => {
                        let i = rng.gen_range(0..lines.len());
                        let prem = lines[i].formula.clone();
                        if prem.modal_depth() >= 2 {
                            continue;
                        }
                        if rng.gen_bool(0.5) {
                            ProofLine {
                                index,
                                formula: Formula::box_a(prem),
                                justification: Justification::NecA(i + 1),
                            }
                        } else {
                            ProofLine {
                                index,
                                formula: Formula::box_e(prem),
                                justification: Justification::NecE(i + 1),
                            }
                        }
                    }
                    _ => {
                        // Modus ponens on any matching earlier pair.
                        let mut found = None;
                        'search: for (i, imp_line) in lines.iter().enumerate() {
                            if let Formula::Imp(ant, cons) = &imp_line.formula {
                                for (j, ant_line) in lines.iter().enumerate() {
                                    if ant_line.formula == **ant {
                                        found = Some((i + 1, j + 1, (**cons).clone()));
                                        break 'search;
                                    }
                                }
                            }
                        }
                        match found {
                            Some((i, j, formula)) => ProofLine {
                                index,
                                formula,
                                justification: Justification::Mp(i, j),
                            },
                            None => continue,
                        }
                    }
                };
                lines.push(line);
            }
            let proof = Proof { lines };
            assert_eq!(check_proof(&proof), Ok(()));
            for line in &proof.lines {
                assert!(
                    is_valid(&line.formula),
                    "accepted line is not valid: {}",
                    line.formula
                );
            }
        }
    }
}
