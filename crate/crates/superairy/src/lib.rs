//! Exact computation of the correlators of untwisted (Neveu-Schwarz) and
//! twisted (Ramond) super spectral curves.
//!
//! Two independent routes produce the same coefficient tables:
//!
//! * [`airy`] solves the super Virasoro constraints `H_i Z = F_i Z = 0` of the
//!   dual super Airy structure, level by level in `chi = 2g + n + 2m`;
//! * [`str_rec`] runs the residue recursion with the recursion kernels and
//!   the quadratic loop-equation terms.
//!
//! [`gaiotto`] specializes both to the Gaiotto (Whittaker) vectors of the
//! N=1 super Virasoro algebra and their norms. All arithmetic is exact.

pub mod airy;
pub mod cli;
pub mod curve;
pub mod fock;
pub mod gaiotto;
pub mod par;
pub mod ring;
pub mod str_rec;
