//! Dense operators on tensor products of named registers.
//!
//! Register order follows the bit-order convention of [`crate::gf2`]: the
//! first register is the most significant digit of a basis index, and inside
//! an `n`-qubit register qubit 0 is the most significant bit. The `x` basis is
//! `|x̃⟩ = H^{⊗n}|x⟩`.

mod layout;
pub mod linalg;
mod measures;
mod operator;
mod pure;
mod standard;

use serde::{Deserialize, Serialize};

pub use layout::{Register, RegisterLayout};
pub use measures::{
    generalized_fidelity, helstrom_success, l1_distance, purified_distance, trace_norm,
    uhlmann_fidelity,
};
pub use operator::{FunctionMode, QOperator};
pub use pure::{purify, PauliOutcome, PureState};
pub use standard::{standard_form_from, Given, StandardForm};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

/// Maximum entrywise deviation from Hermiticity or classicality accepted.
pub const TOL_HERM: f64 = 1e-10;
/// Most negative eigenvalue accepted in a state before clipping.
pub const TOL_PSD: f64 = 1e-10;
/// Eigenvalues below this are treated as zero by pseudo-inverses and ranks.
pub const EIG_CUTOFF: f64 = 1e-12;

/// Measurement basis of a qubit register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Z => "z",
            Basis::X => "x",
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "z" | "Z" => Ok(Basis::Z),
            "x" | "X" => Ok(Basis::X),
            other => Err(crate::Error::Precondition(format!(
                "unknown basis {other:?}"
            ))),
        }
    }
}
