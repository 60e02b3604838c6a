//! Privacy amplification, error correction and data compression with quantum
//! side information, evaluated exactly on small explicitly represented states.
//!
//! The crate is layered bottom-up:
//!
//! - [`gf2`]: binary linear algebra, linear hash families and their exact
//!   universality certificates.
//! - [`quantum`]: dense operators on named registers, purification,
//!   dephasing, Pauli-string measurements and distance measures.
//! - [`sdp`]: a small primal-dual interior point solver for block-diagonal
//!   linear matrix inequalities.
//! - [`entropy`]: conditional min/max entropies, guessing probability and the
//!   collision-type quantities.
//! - [`algorithms`]: the three protocol indices and their equality.
//! - [`suite`]: leftover hashing lemmas, coding theorems and the QKD bound
//!   conversion, packaged as verification reports.

pub mod algorithms;
pub mod entropy;
pub mod error;
pub mod gf2;
pub mod quantum;
pub mod random;
pub mod sdp;
pub mod suite;

pub use error::{Error, Result};
