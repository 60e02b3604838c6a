//! Conditional min- and max-entropies, guessing probability and the
//! collision-type quantities.
//!
//! All optimizations first split the state along side registers that are
//! classical in `z` and compress the remaining side system onto the support of
//! its marginal; both steps are exact. Targets classical in `z` or `x` are
//! handled block by block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::linalg::{
    c, eigh, eigvalsh, hadamard, kernel_projector, pinv_power, re_trace_product, sqrt_psd,
};
use crate::quantum::{
    purified_distance, purify, trace_norm, Basis, CMatrix, QOperator, EIG_CUTOFF,
};
use crate::sdp::{embed, HermitianBasis, LmiBlock, LmiProblem, Term};

/// Blocks whose trace falls below this are treated as absent.
const ZERO_WEIGHT: f64 = 1e-14;
/// Maximum disagreement tolerated between independent evaluation paths.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SdpPrimal,
    SdpDual,
    ClosedFormClassical,
    PurificationDuality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    /// Value in bits.
    pub value: f64,
    pub method: Method,
    /// Largest duality gap among the SDPs solved (0 for closed forms).
    pub gap: f64,
    /// Value from the second path, when one was run.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cross_check: Option<f64>,
}

/// One classical value of the side registers, with the quantum part of the
/// side compressed onto its support.
struct Component {
    rho: CMatrix,
    du: usize,
    dv: usize,
}

impl Component {
    /// `⟨u|ρ|u⟩` on the side.
    fn block(&self, u: usize) -> CMatrix {
        self.rho
            .view((u * self.dv, u * self.dv), (self.dv, self.dv))
            .into_owned()
    }

    fn target_marginal(&self) -> CMatrix {
        CMatrix::from_fn(self.du, self.du, |a, b| {
            (0..self.dv)
                .map(|v| self.rho[(a * self.dv + v, b * self.dv + v)])
                .sum()
        })
    }
}

struct Prepared {
    components: Vec<Component>,
    classical_target: bool,
}

fn check_split(s: &QOperator, target: &[&str], side: &[&str]) -> Result<()> {
    if target.is_empty() {
        return Err(Error::Register("target registers must be nonempty".into()));
    }
    let mut all: Vec<&str> = target.iter().chain(side).copied().collect();
    for name in &all {
        s.layout().position(name)?;
    }
    all.sort_unstable();
    all.dedup();
    if all.len() != target.len() + side.len() {
        return Err(Error::Register("target and side overlap".into()));
    }
    if all.len() != s.layout().len() {
        return Err(Error::Register(format!(
            "target and side must cover {:?}; trace out the rest first",
            s.layout().names()
        )));
    }
    Ok(())
}

fn prepare(s: &QOperator, target: &[&str], side: &[&str]) -> Result<Prepared> {
    check_split(s, target, side)?;
    s.validate_state()?;
    let mut op = s.reorder(&target.iter().chain(side).copied().collect::<Vec<_>>())?;

    let mut classical_target = true;
    for t in target {
        if op.is_classical(t, Basis::Z)? {
            continue;
        }
        match op.layout().qubit_count(t) {
            Ok(q) if op.is_classical(t, Basis::X)? => {
                op = op.conjugate_register(t, &hadamard(q))?
            }
            _ => classical_target = false,
        }
    }

    let mut classical_side = Vec::new();
    let mut quantum_side = Vec::new();
    for v in side {
        if op.is_classical(v, Basis::Z)? {
            classical_side.push(*v);
        } else {
            quantum_side.push(*v);
        }
    }
    let order: Vec<&str> = target
        .iter()
        .chain(&classical_side)
        .chain(&quantum_side)
        .copied()
        .collect();
    let op = op.reorder(&order)?;
    let du = op.layout().dim_of(target)?;
    let dc = op.layout().dim_of(&classical_side)?;
    let dr = op.layout().dim_of(&quantum_side)?;

    let m = op.matrix();
    let mut components = Vec::new();
    for cv in 0..dc {
        let index = |i: usize| {
            let (u, r) = (i / dr, i % dr);
            (u * dc + cv) * dr + r
        };
        let sub = CMatrix::from_fn(du * dr, du * dr, |i, j| m[(index(i), index(j))]);
        if sub.trace().re <= ZERO_WEIGHT {
            continue;
        }
        components.push(compress(sub, du, dr));
    }
    if components.is_empty() {
        return Err(Error::InvalidState("state has no weight".into()));
    }
    Ok(Prepared {
        components,
        classical_target,
    })
}

/// Restricts the side system to the support of its marginal.
fn compress(rho: CMatrix, du: usize, dv: usize) -> Component {
    if dv == 1 {
        return Component { rho, du, dv };
    }
    let side = CMatrix::from_fn(dv, dv, |a, b| {
        (0..du).map(|u| rho[(u * dv + a, u * dv + b)]).sum()
    });
    let (values, vectors) = eigh(&side);
    let keep: Vec<usize> = (0..dv).filter(|&k| values[k] > EIG_CUTOFF).collect();
    if keep.len() == dv {
        return Component { rho, du, dv };
    }
    let w = CMatrix::from_fn(dv, keep.len(), |a, k| vectors[(a, keep[k])]);
    let iso = CMatrix::identity(du, du).kronecker(&w);
    Component {
        rho: iso.adjoint() * rho * &iso,
        du,
        dv: keep.len(),
    }
}

/// Solution of `min Tr σ` subject to `ρ ⪯ I ⊗ σ` for one component.
fn min_trace_dominator(comp: &Component, classical: bool) -> Result<(f64, f64, bool)> {
    if comp.dv == 1 {
        let top = eigvalsh(&comp.target_marginal())
            .last()
            .copied()
            .unwrap_or(0.0);
        return Ok((top.max(0.0), 0.0, false));
    }
    let basis = HermitianBasis::new(comp.dv);
    let mut p = LmiProblem::new(basis.len());
    for i in 0..comp.dv {
        p.objective[i] = 1.0;
    }
    if classical {
        let blocks: Vec<CMatrix> = (0..comp.du)
            .map(|u| comp.block(u))
            .filter(|b| b.trace().re > ZERO_WEIGHT)
            .collect();
        if blocks.len() == 1 {
            return Ok((blocks[0].trace().re, 0.0, false));
        }
        for b in blocks {
            let mut block = LmiBlock::new(-b);
            for q in 0..basis.len() {
                block.push(q, Term::Sparse(basis.element(q)));
            }
            p.blocks.push(block);
        }
    } else {
        let mut block = LmiBlock::new(-&comp.rho);
        for q in 0..basis.len() {
            block.push(
                q,
                Term::Sparse(embed(&basis.element(q), comp.du, comp.dv, 0)),
            );
        }
        p.blocks.push(block);
    }
    let sol = p.solve()?;
    Ok((sol.value, sol.gap, true))
}

/// `H_min(U|V) = −log₂ min{Tr σ : ρ_UV ⪯ I_U ⊗ σ_V}`.
pub fn hmin(s: &QOperator, target: &[&str], side: &[&str]) -> Result<EntropyResult> {
    let prep = prepare(s, target, side)?;
    let mut total = 0.0;
    let mut gap = 0.0f64;
    let mut used_sdp = false;
    for comp in &prep.components {
        let (v, g, sdp) = min_trace_dominator(comp, prep.classical_target)?;
        total += v;
        gap = gap.max(g);
        used_sdp |= sdp;
    }
    Ok(EntropyResult {
        value: -total.log2(),
        method: if used_sdp {
            Method::SdpPrimal
        } else {
            Method::ClosedFormClassical
        },
        gap,
        cross_check: None,
    })
}

/// Optimal probability of guessing the classical `target` from `side`,
/// optimized over measurements.
pub fn pguess(s: &QOperator, target: &str, side: &[&str]) -> Result<f64> {
    let prep = prepare(s, &[target], side)?;
    if !prep.classical_target {
        let deviation = s.classical_deviation(target, Basis::Z)?;
        return Err(Error::NotClassical {
            register: target.to_string(),
            basis: "z or x",
            deviation,
        });
    }
    let mut total = 0.0;
    for comp in &prep.components {
        total += povm_success(comp)?;
    }
    Ok(total)
}

/// `max Σ_x Tr(ρ_x M_x)` over POVMs `{M_x}` on the compressed side.
fn povm_success(comp: &Component) -> Result<f64> {
    let blocks: Vec<CMatrix> = (0..comp.du)
        .map(|u| comp.block(u))
        .filter(|b| b.trace().re > ZERO_WEIGHT)
        .collect();
    if comp.dv == 1 {
        return Ok(blocks.iter().map(|b| b[(0, 0)].re).fold(0.0, f64::max));
    }
    if blocks.len() == 1 {
        return Ok(blocks[0].trace().re);
    }
    let basis = HermitianBasis::new(comp.dv);
    let per = basis.len();
    let free = blocks.len() - 1;
    let last = &blocks[free];
    let mut p = LmiProblem::new(free * per);
    let mut remainder = LmiBlock::new(CMatrix::identity(comp.dv, comp.dv));
    for (x, rho_x) in blocks[..free].iter().enumerate() {
        let weights = basis.pairings(&(rho_x - last));
        let mut block = LmiBlock::new(CMatrix::zeros(comp.dv, comp.dv));
        for (q, w) in weights.iter().enumerate() {
            let var = x * per + q;
            p.objective[var] = -w;
            let e = basis.element(q);
            block.push(var, Term::Sparse(e.clone()));
            remainder.push(
                var,
                Term::Sparse(e.into_iter().map(|(a, b, v)| (a, b, -v)).collect()),
            );
        }
        p.blocks.push(block);
    }
    p.blocks.push(remainder);
    let sol = p.solve()?;
    Ok(last.trace().re - sol.value)
}

/// `−log₂ pguess`, the min-entropy of a classical target through the
/// measurement formulation.
pub fn hmin_via_pguess(s: &QOperator, target: &str, side: &[&str]) -> Result<EntropyResult> {
    Ok(EntropyResult {
        value: -pguess(s, target, side)?.log2(),
        method: Method::SdpDual,
        gap: 0.0,
        cross_check: None,
    })
}

/// `H_max(U|V) = 2 log₂ max_σ ‖√ρ √(I ⊗ σ)‖₁` through the block fidelity SDP.
pub fn hmax_direct(s: &QOperator, target: &[&str], side: &[&str]) -> Result<EntropyResult> {
    let prep = prepare(s, target, side)?;
    let mut total = 0.0;
    let mut gap = 0.0f64;
    let mut used_sdp = false;
    for comp in &prep.components {
        let (f, g, sdp) = max_fidelity(comp, prep.classical_target)?;
        total += f * f;
        gap = gap.max(g);
        used_sdp |= sdp;
    }
    Ok(EntropyResult {
        value: total.log2(),
        method: if used_sdp {
            Method::SdpPrimal
        } else {
            Method::ClosedFormClassical
        },
        gap,
        cross_check: None,
    })
}

/// Columns `L` with `M = L L†`, dropping the kernel.
fn factor(m: &CMatrix) -> CMatrix {
    let (values, vectors) = eigh(m);
    let keep: Vec<usize> = (0..values.len())
        .filter(|&k| values[k] > EIG_CUTOFF)
        .collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |a, k| {
        vectors[(a, keep[k])] * values[keep[k]].sqrt()
    })
}

/// `max_σ ‖√ρ √(I ⊗ σ)‖₁` over normalized `σ` for one component.
fn max_fidelity(comp: &Component, classical: bool) -> Result<(f64, f64, bool)> {
    if comp.dv == 1 {
        return Ok((sqrt_psd(&comp.target_marginal()).trace().re, 0.0, false));
    }
    let dv = comp.dv;
    // each group holds the row slices L_u of one factor, ‖…‖₁ = Tr √(Σ_u L_u† σ L_u)
    let groups: Vec<Vec<CMatrix>> = if classical {
        (0..comp.du)
            .map(|u| factor(&comp.block(u)))
            .filter(|l| l.ncols() > 0)
            .map(|l| vec![l])
            .collect()
    } else {
        let l = factor(&comp.rho);
        vec![(0..comp.du)
            .map(|u| l.view((u * dv, 0), (dv, l.ncols())).into_owned())
            .collect()]
    };

    let basis = HermitianBasis::new(dv);
    let n_sigma = basis.traceless_len();
    let ranks: Vec<usize> = groups.iter().map(|g| g[0].ncols()).collect();
    let n_vars = n_sigma + ranks.iter().map(|r| r * r).sum::<usize>();
    let mut p = LmiProblem::new(n_vars);

    let centre = CMatrix::identity(dv, dv) * c(1.0 / dv as f64);
    let mut positivity = LmiBlock::new(centre.clone());
    let traceless: Vec<Vec<_>> = (0..n_sigma).map(|q| basis.traceless_element(q)).collect();
    for (q, e) in traceless.iter().enumerate() {
        positivity.push(q, Term::Sparse(e.clone()));
    }
    p.blocks.push(positivity);

    let mut offset = n_sigma;
    for (slices, &r) in groups.iter().zip(&ranks) {
        let pull = |m: &CMatrix| -> CMatrix {
            slices
                .iter()
                .fold(CMatrix::zeros(r, r), |acc, l| acc + l.adjoint() * m * l)
        };
        let mut constant = CMatrix::zeros(2 * r, 2 * r);
        constant.view_mut((0, 0), (r, r)).fill_with_identity();
        constant.view_mut((r, r), (r, r)).copy_from(&pull(&centre));
        let mut block = LmiBlock::new(constant);
        for (q, e) in traceless.iter().enumerate() {
            let mut t = CMatrix::zeros(dv, dv);
            for &(a, b, v) in e {
                t[(a, b)] += v;
            }
            let mut full = CMatrix::zeros(2 * r, 2 * r);
            full.view_mut((r, r), (r, r)).copy_from(&pull(&t));
            block.push(q, Term::Dense(full));
        }
        let ybasis = HermitianBasis::new(r);
        for q in 0..ybasis.len() {
            let var = offset + q;
            if q < r {
                p.objective[var] = -1.0;
            }
            let mut entries = Vec::new();
            for (a, b, v) in ybasis.element(q) {
                entries.push((a, r + b, v));
                entries.push((r + a, b, v));
            }
            block.push(var, Term::Sparse(entries));
        }
        offset += r * r;
        p.blocks.push(block);
    }
    let sol = p.solve()?;
    Ok((-sol.value, sol.gap, true))
}

fn fresh_name(s: &QOperator, base: &str) -> String {
    let mut name = base.to_string();
    while s.layout().contains(&name) {
        name.push('\'');
    }
    name
}

/// `H_max(U|V) = −H_min(U|W)` with `W` purifying `UV`.
pub fn hmax_dual(s: &QOperator, target: &[&str], side: &[&str]) -> Result<EntropyResult> {
    check_split(s, target, side)?;
    let w = fresh_name(s, "W");
    let pure = purify(s, &w)?;
    let mut keep: Vec<&str> = target.to_vec();
    keep.push(&w);
    let rho_uw = pure.density().marginal(&keep)?;
    let inner = hmin(&rho_uw, target, &[&w])?;
    Ok(EntropyResult {
        value: -inner.value,
        method: Method::PurificationDuality,
        gap: inner.gap,
        cross_check: None,
    })
}

/// Max-entropy by the fidelity SDP, cross-checked against purification
/// duality.
pub fn hmax(s: &QOperator, target: &[&str], side: &[&str]) -> Result<EntropyResult> {
    let direct = hmax_direct(s, target, side)?;
    let dual = hmax_dual(s, target, side)?;
    if (direct.value - dual.value).abs() > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck {
            quantity: "hmax".into(),
            a: direct.value,
            b: dual.value,
        });
    }
    Ok(EntropyResult {
        cross_check: Some(dual.value),
        gap: direct.gap.max(dual.gap),
        ..direct
    })
}

/// `ρ_KE` reordered with `key` first, and its side marginal.
fn key_split(rho: &QOperator, key: &str) -> Result<(QOperator, QOperator)> {
    let rest = rho.layout().complement(&[key]);
    let mut order = vec![key];
    order.extend(rest.iter().map(String::as_str));
    let ordered = rho.reorder(&order)?;
    let side = rho.partial_trace(&[key])?;
    Ok((ordered, side))
}

/// `I_K ⊗ σ^{−1/2}`, after checking that `σ` covers the support of `ρ_E`.
fn weighted_inverse_root(rho_e: &QOperator, sigma: &QOperator, dk: usize) -> Result<CMatrix> {
    if sigma.layout() != rho_e.layout() {
        return Err(Error::Register(format!(
            "σ lives on {:?}, the side is {:?}",
            sigma.layout().names(),
            rho_e.layout().names()
        )));
    }
    let kernel = kernel_projector(sigma.matrix());
    let leak = (&kernel * rho_e.matrix() * &kernel).trace().re;
    if leak > 1e-10 {
        return Err(Error::Support(format!(
            "ρ_E has weight {leak:e} on the kernel of σ"
        )));
    }
    Ok(CMatrix::identity(dk, dk).kronecker(&pinv_power(sigma.matrix(), -0.5)))
}

/// `d₂(ρ_KE|σ_E) = Tr((ρ_KE − 2^{−m} I ⊗ ρ_E)(I ⊗ σ^{−1/2}))²`.
pub fn d2(rho_ke: &QOperator, key: &str, sigma: &QOperator) -> Result<f64> {
    let (rho, rho_e) = key_split(rho_ke, key)?;
    let dk = rho_ke.layout().dim(key)?;
    let w = weighted_inverse_root(&rho_e, sigma, dk)?;
    let ideal = CMatrix::identity(dk, dk).kronecker(rho_e.matrix()) * c(1.0 / dk as f64);
    let m = (rho.matrix() - ideal) * w;
    Ok(re_trace_product(&m, &m))
}

/// `H₂(ρ_KE|σ_E) = −log₂ Tr(ρ_KE (I ⊗ σ^{−1/2}))²`.
pub fn h2(rho_ke: &QOperator, key: &str, sigma: &QOperator) -> Result<f64> {
    let (rho, rho_e) = key_split(rho_ke, key)?;
    let dk = rho_ke.layout().dim(key)?;
    let w = weighted_inverse_root(&rho_e, sigma, dk)?;
    let m = rho.matrix() * w;
    Ok(-re_trace_product(&m, &m).log2())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tilde {
    HalfDown,
    TwoDown,
}

/// Sandwiched conditional Rényi entropies with `σ_E = ρ_E`.
pub fn renyi_tilde(rho_ke: &QOperator, key: &str, which: Tilde) -> Result<f64> {
    let (rho, rho_e) = key_split(rho_ke, key)?;
    match which {
        Tilde::HalfDown => {
            let dk = rho_ke.layout().dim(key)?;
            let root = CMatrix::identity(dk, dk).kronecker(&sqrt_psd(rho_e.matrix()));
            Ok(2.0 * trace_norm(&(root * sqrt_psd(rho.matrix()))).log2())
        }
        Tilde::TwoDown => h2(rho_ke, key, &rho_e),
    }
}

/// Lower bound on `H_min^ε(U|V)`: the best `hmin` over `s` and the supplied
/// candidates, each verified to lie in the purified-distance ball.
pub fn hmin_smooth_lower(
    s: &QOperator,
    target: &[&str],
    side: &[&str],
    eps: f64,
    candidates: &[QOperator],
) -> Result<f64> {
    let mut best = hmin(s, target, side)?.value;
    for (index, cand) in candidates.iter().enumerate() {
        let distance = purified_distance(cand, s)?;
        if distance > eps + 1e-12 {
            return Err(Error::OutsideBall {
                index,
                distance,
                eps,
            });
        }
        best = best.max(hmin(cand, target, side)?.value);
    }
    Ok(best)
}

/// Spectral truncations of `s` (dropping all eigenvalues up to successive
/// thresholds) that stay within purified distance `eps`.
pub fn truncation_candidates(s: &QOperator, eps: f64) -> Result<Vec<QOperator>> {
    let (values, vectors) = eigh(s.matrix());
    let mut out = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &t in &values {
        if t <= last + 1e-15 || t <= EIG_CUTOFF {
            continue;
        }
        last = t;
        let kept: Vec<usize> = (0..values.len())
            .filter(|&k| values[k] > t + 1e-15)
            .collect();
        if kept.is_empty() {
            break;
        }
        let mut m = CMatrix::zeros(s.dim(), s.dim());
        for &k in &kept {
            let v = vectors.column(k);
            m += v * v.adjoint() * c(values[k]);
        }
        let cand = QOperator::new(s.layout().clone(), m)?;
        if purified_distance(&cand, s)? <= eps {
            out.push(cand);
        } else {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{CVector, RegisterLayout};
    use crate::random::{random_density, random_pure, rng_from_seed};

    fn layout(regs: &[(&str, usize)]) -> RegisterLayout {
        RegisterLayout::new(regs.iter().map(|&(n, d)| (n, d))).unwrap()
    }

    fn bell() -> QOperator {
        let s = 0.5f64.sqrt();
        let v = CVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        QOperator::from_vector(layout(&[("A", 2), ("B", 2)]), &v).unwrap()
    }

    #[test]
    fn uniform_without_side_information() {
        for n in 1..=3 {
            let u = QOperator::maximally_mixed(RegisterLayout::qubits(&[("A", n)]).unwrap());
            assert!((hmin(&u, &["A"], &[]).unwrap().value - n as f64).abs() < 1e-12);
            assert!((hmax(&u, &["A"], &[]).unwrap().value - n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn maximally_entangled() {
        let r = hmin(&bell(), &["A"], &["B"]).unwrap();
        assert!((r.value + 1.0).abs() < 1e-6, "{}", r.value);
        assert_eq!(r.method, Method::SdpPrimal);
        let r = hmax(&bell(), &["A"], &["B"]).unwrap();
        assert!((r.value + 1.0).abs() < 1e-6);
        assert!((r.cross_check.unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn perfectly_correlated_classical() {
        let s = QOperator::diagonal(layout(&[("A", 2), ("B", 2)]), &[0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = hmin(&s, &["A"], &["B"]).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert_eq!(r.method, Method::ClosedFormClassical);
        assert!((pguess(&s, "A", &["B"]).unwrap() - 1.0).abs() < 1e-12);
        assert!(hmax(&s, &["A"], &["B"]).unwrap().value.abs() < 1e-7);
    }

    #[test]
    fn pure_unentangled_target_has_zero_max_entropy() {
        let mut rng = rng_from_seed(30);
        let zero = QOperator::diagonal(layout(&[("A", 2)]), &[1.0, 0.0]).unwrap();
        let side = random_density(&layout(&[("B", 2)]), 2, &mut rng);
        let s = zero.tensor(&side).unwrap();
        assert!(hmax(&s, &["A"], &["B"]).unwrap().value.abs() < 1e-7);
    }

    #[test]
    fn trivial_side_guessing_is_uniform() {
        let u = QOperator::maximally_mixed(layout(&[("A", 8), ("B", 2)]));
        assert!((pguess(&u, "A", &["B"]).unwrap() - 0.125).abs() < 1e-8);
    }

    #[test]
    fn helstrom_two_states() {
        for theta in [0.3f64, 0.9, 1.4] {
            let psi = [
                CVector::from_vec(vec![c(1.0), c(0.0)]),
                CVector::from_vec(vec![c(theta.cos()), c(theta.sin())]),
            ];
            let blocks: Vec<QOperator> = psi
                .iter()
                .map(|v| {
                    QOperator::from_vector(layout(&[("B", 2)]), v)
                        .unwrap()
                        .scaled(0.5)
                })
                .collect();
            let reg = crate::quantum::Register {
                name: "X".into(),
                dim: 2,
            };
            let s = QOperator::from_classical_blocks(reg, Basis::Z, &blocks).unwrap();
            let oracle = (1.0 + theta.sin()) / 2.0;
            assert!((pguess(&s, "X", &["B"]).unwrap() - oracle).abs() < 1e-8);
            assert!((2f64.powf(-hmin(&s, &["X"], &["B"]).unwrap().value) - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn hmin_matches_pguess_on_random_cq_states() {
        let mut rng = rng_from_seed(31);
        for (dx, de) in [(2, 2), (4, 2), (4, 3), (8, 2)] {
            let s = random_density(&layout(&[("X", dx), ("E", de)]), 3, &mut rng)
                .dephase("X", Basis::Z)
                .unwrap();
            let a = hmin(&s, &["X"], &["E"]).unwrap().value;
            let b = hmin_via_pguess(&s, "X", &["E"]).unwrap().value;
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn classical_and_general_formulations_agree() {
        let mut rng = rng_from_seed(32);
        let s = random_density(&layout(&[("X", 2), ("E", 2)]), 4, &mut rng)
            .dephase("X", Basis::Z)
            .unwrap();
        let comp = Component {
            rho: s.matrix().clone(),
            du: 2,
            dv: 2,
        };
        let (a, _, _) = min_trace_dominator(&comp, true).unwrap();
        let (b, _, _) = min_trace_dominator(&comp, false).unwrap();
        assert!((a - b).abs() < 1e-8);
        let (a, _, _) = max_fidelity(&comp, true).unwrap();
        let (b, _, _) = max_fidelity(&comp, false).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn x_classical_targets_are_rotated() {
        let mut rng = rng_from_seed(33);
        let s = random_density(&layout(&[("X", 4), ("E", 2)]), 3, &mut rng)
            .dephase("X", Basis::X)
            .unwrap();
        let a = hmin(&s, &["X"], &["E"]).unwrap().value;
        let b = hmin_via_pguess(&s, "X", &["E"]).unwrap().value;
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn hmax_paths_agree_on_random_states() {
        let mut rng = rng_from_seed(34);
        for (da, db, rank) in [(2, 2, 1), (2, 2, 3), (2, 3, 2), (4, 2, 2)] {
            let s = random_density(&layout(&[("A", da), ("B", db)]), rank, &mut rng).scaled(0.8);
            let r = hmax(&s, &["A"], &["B"]).unwrap();
            assert!((r.value - r.cross_check.unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn data_processing_for_hmin() {
        let mut rng = rng_from_seed(35);
        for _ in 0..3 {
            let s = random_pure(&layout(&[("A", 2), ("B", 2), ("C", 2)]), &mut rng).density();
            let full = hmin(&s, &["A"], &["B", "C"]).unwrap().value;
            let reduced = hmin(&s.partial_trace(&["C"]).unwrap(), &["A"], &["B"])
                .unwrap()
                .value;
            assert!(reduced >= full - 1e-8);
        }
    }

    #[test]
    fn side_components_are_summed() {
        // E classical in z: the optimum splits into independent problems
        let mut rng = rng_from_seed(36);
        let l = layout(&[("A", 2), ("B", 2)]);
        let parts: Vec<QOperator> = (0..2)
            .map(|_| random_density(&l, 2, &mut rng).scaled(0.5))
            .collect();
        let reg = crate::quantum::Register {
            name: "C".into(),
            dim: 2,
        };
        let s = QOperator::from_classical_blocks(reg, Basis::Z, &parts).unwrap();
        let joint = 2f64.powf(-hmin(&s, &["A"], &["C", "B"]).unwrap().value);
        let sum: f64 = parts
            .iter()
            .map(|p| 2f64.powf(-hmin(p, &["A"], &["B"]).unwrap().value))
            .sum();
        assert!((joint - sum).abs() < 1e-8);
        let joint = 2f64.powf(hmax(&s, &["A"], &["C", "B"]).unwrap().value);
        let sum: f64 = parts
            .iter()
            .map(|p| 2f64.powf(hmax(p, &["A"], &["B"]).unwrap().value))
            .sum();
        assert!((joint - sum).abs() < 1e-6);
    }

    #[test]
    fn subnormalized_scaling() {
        let mut rng = rng_from_seed(37);
        let s = random_density(&layout(&[("A", 2), ("B", 2)]), 2, &mut rng);
        let half = s.scaled(0.5);
        let a = hmin(&s, &["A"], &["B"]).unwrap().value;
        let b = hmin(&half, &["A"], &["B"]).unwrap().value;
        assert!((b - a - 1.0).abs() < 1e-7);
        let a = hmax(&s, &["A"], &["B"]).unwrap().value;
        let b = hmax(&half, &["A"], &["B"]).unwrap().value;
        assert!((a - b - 1.0).abs() < 1e-7);
    }

    #[test]
    fn collision_quantities() {
        let mut rng = rng_from_seed(38);
        let e = layout(&[("E", 2)]);
        let sigma = random_density(&e, 2, &mut rng);
        let ideal = QOperator::maximally_mixed(layout(&[("K", 2)]))
            .tensor(&sigma)
            .unwrap();
        assert!(d2(&ideal, "K", &sigma).unwrap().abs() < 1e-12);
        assert!((renyi_tilde(&ideal, "K", Tilde::HalfDown).unwrap() - 1.0).abs() < 1e-9);
        assert!((renyi_tilde(&ideal, "K", Tilde::TwoDown).unwrap() - 1.0).abs() < 1e-9);
        assert!((h2(&ideal, "K", &sigma).unwrap() - 1.0).abs() < 1e-9);

        // K copied into classical E, m = 1: four diagonal terms of (1/2)²·(1/2)²·2
        let copy =
            QOperator::diagonal(layout(&[("K", 2), ("E", 2)]), &[0.5, 0.0, 0.0, 0.5]).unwrap();
        let rho_e = copy.partial_trace(&["K"]).unwrap();
        assert!((d2(&copy, "K", &rho_e).unwrap() - 0.5).abs() < 1e-12);

        let point =
            QOperator::diagonal(layout(&[("K", 2), ("E", 2)]), &[0.3, 0.7, 0.0, 0.0]).unwrap();
        let rho_e = point.partial_trace(&["K"]).unwrap();
        assert!(h2(&point, "K", &rho_e).unwrap().abs() < 1e-12);

        let pure_e = QOperator::diagonal(e, &[1.0, 0.0]).unwrap();
        assert!(matches!(d2(&copy, "K", &pure_e), Err(Error::Support(_))));
    }

    #[test]
    fn collision_orderings_on_random_states() {
        let mut rng = rng_from_seed(39);
        for _ in 0..5 {
            let s = random_density(&layout(&[("K", 2), ("E", 2)]), 3, &mut rng)
                .dephase("K", Basis::Z)
                .unwrap();
            let rho_e = s.partial_trace(&["K"]).unwrap();
            let half = renyi_tilde(&s, "K", Tilde::HalfDown).unwrap();
            let two = renyi_tilde(&s, "K", Tilde::TwoDown).unwrap();
            assert!(half >= two - 1e-9);
            assert!(hmax(&s, &["K"], &["E"]).unwrap().value >= half - 1e-7);
            assert!(hmin(&s, &["K"], &["E"]).unwrap().value <= h2(&s, "K", &rho_e).unwrap() + 1e-7);
            assert!(d2(&s, "K", &rho_e).unwrap() >= 0.0);
        }
    }

    #[test]
    fn smoothing_lower_bound() {
        let s =
            QOperator::diagonal(layout(&[("A", 2), ("E", 2)]), &[0.5, 0.01, 0.49, 0.0]).unwrap();
        let plain = hmin(&s, &["A"], &["E"]).unwrap().value;
        assert_eq!(
            hmin_smooth_lower(&s, &["A"], &["E"], 0.0, &[]).unwrap(),
            plain
        );
        let cands = truncation_candidates(&s, 0.2).unwrap();
        assert!(!cands.is_empty());
        let smooth = hmin_smooth_lower(&s, &["A"], &["E"], 0.2, &cands).unwrap();
        assert!(smooth > plain + 1e-3);
        let mut with_self = cands.clone();
        with_self.push(s.clone());
        assert!(hmin_smooth_lower(&s, &["A"], &["E"], 0.2, &with_self).unwrap() >= smooth);
        assert!(matches!(
            hmin_smooth_lower(&s, &["A"], &["E"], 0.01, &cands),
            Err(Error::OutsideBall { .. })
        ));
    }

    #[test]
    fn result_serializes_with_method_tag() {
        let r = EntropyResult {
            value: 1.0,
            method: Method::PurificationDuality,
            gap: 0.0,
            cross_check: None,
        };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"value":1.0,"method":"purification-duality","gap":0.0}"#
        );
    }
}
