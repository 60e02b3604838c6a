use super::linalg::{eigvalsh, sqrt_psd};
use super::{CMatrix, QOperator};
use crate::error::Result;

/// `‖M‖₁`, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

pub fn l1_distance(a: &QOperator, b: &QOperator) -> Result<f64> {
    a.same_layout(b)?;
    Ok(trace_norm(&(a.matrix() - b.matrix())))
}

/// `‖√a √b‖₁ + √((1 − Tr a)(1 − Tr b))`, clamped to `[0, 1 + 1e-9]`.
pub fn generalized_fidelity(a: &QOperator, b: &QOperator) -> Result<f64> {
    a.same_layout(b)?;
    let overlap = trace_norm(&(sqrt_psd(a.matrix()) * sqrt_psd(b.matrix())));
    let deficit = ((1.0 - a.trace()).max(0.0) * (1.0 - b.trace()).max(0.0)).sqrt();
    Ok((overlap + deficit).clamp(0.0, 1.0 + 1e-9))
}

/// `Tr √(√a b √a)`, computed from eigenvalues.
pub fn uhlmann_fidelity(a: &QOperator, b: &QOperator) -> Result<f64> {
    a.same_layout(b)?;
    let s = sqrt_psd(a.matrix());
    Ok(eigvalsh(&(&s * b.matrix() * &s))
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum())
}

pub fn purified_distance(a: &QOperator, b: &QOperator) -> Result<f64> {
    let f = generalized_fidelity(a, b)?.min(1.0);
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// Optimal success probability of discriminating the weighted states `a` and `b`.
pub fn helstrom_success(a: &QOperator, b: &QOperator) -> Result<f64> {
    Ok((a.trace() + b.trace() + l1_distance(a, b)?) / 2.0)
}
