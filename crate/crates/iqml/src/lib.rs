//! Implicitly quantified modal logic (IQML).
//!
//! IQML is a variable-free bi-modal logic interpreted over Kripke structures
//! that carry their own index set of accessibility relations. `[E]f` holds
//! when some index has every successor satisfying `f`; `[A]f` when every
//! successor under every index satisfies `f`; `<A>` and `<E>` are the duals.
//!
//! The crate provides:
//!
//! * [`syntax`] — formula AST, parser, printer, negation normal form,
//!   seeded random generation;
//! * [`kripke`] — models, file I/O, tree unravelling and restriction,
//!   random and exhaustive model generation;
//! * [`semantics`] — model checking and a bounded brute-force
//!   satisfiability oracle;
//! * [`bisim`] — greatest-fixpoint bisimulation, n-bisimulation,
//!   characteristic and distinguishing formulas;
//! * [`fo`] — two-sorted first-order logic, the standard translation,
//!   and an Ehrenfeucht-Fraisse game solver;
//! * [`tableau`] — a tableau satisfiability procedure with model
//!   extraction;
//! * [`proofcheck`] — a checker for Hilbert-style derivations in the
//!   axiom system for IQML validities.

pub mod bisim;
pub mod fo;
pub mod kripke;
pub mod proofcheck;
pub mod semantics;
pub mod syntax;
pub mod tableau;
