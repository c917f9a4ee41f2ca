//! The graded Fock algebra, its free-field super Virasoro representation,
//! the constraint operators of a curve, and the conjugate pairing.

mod element;
mod operator;

pub use element::{merge_grassmann, multiset_automorphisms, sort_grassmann, FockElement, FockMonomial};
pub use operator::{apply_atom, normal_order, Atom, OperatorExpr, Word};
mod virasoro;

pub use virasoro::{
    build_constraint, commutator_residual, conjugated_mode, d_tilde, relation_sweep, window, ConstraintKind,
    GeneratorKind, Mode, ModeError, RelationCheck, Representation,
};
mod pairing;

pub use pairing::{dagger_pair, monomial_norm};
