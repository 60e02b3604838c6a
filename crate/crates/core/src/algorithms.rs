//! The three protocol indices `Q^PA`, `Q^EC`, `Q^DC`, the trace-distance
//! criteria `d₁`, `d₁′`, explicit decoders, and the equality between the
//! indices on standard-form states.
//!
//! States follow the register names of [`StandardForm`]: `A` is the `n`-bit
//! string, `B` the decoder's side information, `E` the adversary. Key and
//! syndrome registers are called `K` and `D`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{self, d2, hmax_direct, hmin, pguess};
use crate::error::{Error, Result};
use crate::gf2::{rational_to_f64, DualPair, HashFamily, LinearHash};
use crate::quantum::linalg::{c, pinv_power, re_trace_product};
use crate::quantum::{
    standard_form_from, trace_norm, Basis, CMatrix, FunctionMode, Given, PureState, QOperator,
    RegisterLayout, StandardForm,
};
use crate::random::{random_pure, random_surjective, SuiteRng};
use crate::sdp::{HermitianBasis, LmiBlock, LmiProblem, Term};

/// Largest spread accepted among the five expressions of the equality.
pub const EQUALITY_TOL: f64 = 1e-6;
/// Largest family averaged by [`expect_over_family`].
pub const FAMILY_CAP: usize = 1 << 10;
/// Largest `A` register handled by the instance generator.
pub const MAX_INSTANCE_QUBITS: usize = 3;

const ZERO_WEIGHT: f64 = 1e-14;

/// A standard-form state together with a dual pair `f ⟂ g`.
#[derive(Clone, Debug)]
pub struct AlgorithmInstance {
    pub standard_form: StandardForm,
    /// `None` when no key bit is extracted.
    pub f: Option<LinearHash>,
    /// `None` when `f` is a bijection and the syndrome is empty.
    pub g: Option<LinearHash>,
    pub n: usize,
    /// Key length, the rank of `f`.
    pub m: usize,
}

impl AlgorithmInstance {
    /// Pairs a standard form with a surjective `f` and its canonical dual.
    pub fn new(standard_form: StandardForm, f: LinearHash) -> Result<Self> {
        if !f.is_surjective() {
            return Err(Error::NotSurjective {
                rows: f.m(),
                rank: f.rank(),
            });
        }
        Self::from_pair(standard_form, DualPair::from_member(&f)?)
    }

    pub fn from_pair(standard_form: StandardForm, pair: DualPair) -> Result<Self> {
        let n = standard_form.n();
        for h in pair.f.iter().chain(&pair.g) {
            if h.n() != n {
                return Err(Error::Dimension(format!(
                    "hash takes {} bits, A holds {n}",
                    h.n()
                )));
            }
        }
        let m = pair.key_bits();
        let g_bits = pair.g.as_ref().map_or(0, LinearHash::m);
        let dual = match (&pair.f, &pair.g) {
            (Some(f), Some(g)) => f.is_dual_to(g),
            _ => m + g_bits == n,
        };
        if !dual {
            return Err(Error::Precondition("f and g are not a dual pair".into()));
        }
        if !standard_form.is_standard(1e-9)? {
            return Err(Error::Precondition(
                "state is not in the standard form".into(),
            ));
        }
        Ok(Self {
            standard_form,
            f: pair.f,
            g: pair.g,
            n,
            m,
        })
    }

    pub fn trace(&self) -> f64 {
        self.standard_form.trace()
    }

    pub fn q_pa(&self) -> Result<f64> {
        pa_index(&self.standard_form.rho_zae, self.f.as_ref())
    }

    pub fn q_ec_dc(&self) -> Result<f64> {
        ec_dc_index(&self.standard_form.rho_xab, self.g.as_ref())
    }

    pub fn d1(&self) -> Result<f64> {
        d1(&self.standard_form.rho_zae, self.f.as_ref())
    }

    pub fn d1_prime(&self) -> Result<f64> {
        d1_prime(&self.standard_form.rho_zae, self.f.as_ref())
    }

    pub fn decode_pgm(&self) -> Result<f64> {
        decode_pgm(&self.standard_form.rho_xab, self.g.as_ref())
    }
}

fn side_of(s: &QOperator, target: &str) -> Vec<String> {
    s.layout().complement(&[target])
}

fn names(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// `ρ^f_{KE} = Σ_k |k⟩⟨k|_K ⊗ Σ_{f(z)=k} ρ^z_E`, with `K` in place of `A`.
pub fn key_state(rho_zae: &QOperator, f: &LinearHash) -> Result<QOperator> {
    rho_zae.apply_classical_function("A", Basis::Z, f, "K", FunctionMode::TraceInput)
}

/// `τ = Σ_x |x̃⟩⟨x̃|_A ⊗ ρ̃^x ⊗ |g(x)⟩⟨g(x)|_D`.
pub fn syndrome_state(rho_xab: &QOperator, g: &LinearHash) -> Result<QOperator> {
    rho_xab.apply_classical_function("A", Basis::X, g, "D", FunctionMode::KeepInput)
}

/// `Q^PA = Tr ρ − 2^{H_max(f(Z^A)|E) − m}`. A hash with `m` output rows
/// produces an `m`-bit key even when its rank is lower.
pub fn pa_index(rho_zae: &QOperator, f: Option<&LinearHash>) -> Result<f64> {
    let Some(f) = f else { return Ok(0.0) };
    let ke = key_state(rho_zae, f)?;
    let side = side_of(&ke, "K");
    let h = hmax_direct(&ke, &["K"], &names(&side))?;
    Ok(rho_zae.trace() - (h.value - f.m() as f64).exp2())
}

/// `Tr ρ − p_guess(X^A | B, g(X^A))`, the common value of `Q^EC` and `Q^DC`.
pub fn ec_dc_index(rho_xab: &QOperator, g: Option<&LinearHash>) -> Result<f64> {
    let tau = match g {
        Some(g) => syndrome_state(rho_xab, g)?,
        None => rho_xab.clone(),
    };
    let side = side_of(&tau, "A");
    Ok(rho_xab.trace() - pguess(&tau, "A", &names(&side))?)
}

/// `Tr ρ − 2^{−H_min(X^A | B, g(X^A))}` through the dominating-operator form.
pub fn ec_via_hmin(rho_xab: &QOperator, g: Option<&LinearHash>) -> Result<f64> {
    let tau = match g {
        Some(g) => syndrome_state(rho_xab, g)?,
        None => rho_xab.clone(),
    };
    let side = side_of(&tau, "A");
    let h = hmin(&tau, &["A"], &names(&side))?;
    Ok(rho_xab.trace() - (-h.value).exp2())
}

/// `‖ρ^f_{KE} − 2^{−m} I_K ⊗ ρ_E‖₁`.
pub fn d1(rho_zae: &QOperator, f: Option<&LinearHash>) -> Result<f64> {
    let Some(f) = f else { return Ok(0.0) };
    let ke = key_state(rho_zae, f)?;
    let dk = 1usize << f.m();
    let rho_e = ke.partial_trace(&["K"])?;
    let ideal = CMatrix::identity(dk, dk).kronecker(rho_e.matrix()) * c(1.0 / dk as f64);
    Ok(trace_norm(&(ke.matrix() - ideal)))
}

/// `min_σ ‖ρ^f_{KE} − 2^{−m} I_K ⊗ σ_E‖₁` over normalized `σ`.
///
/// Both operators are block diagonal in `K`, so the trace norm splits into
/// `Σ_k ‖ρ_k − 2^{−m}σ‖₁ = Σ_k min{2 Tr P_k − Tr(ρ_k − 2^{−m}σ) : P_k ⪰ 0, P_k ⪰ ρ_k − 2^{−m}σ}`.
pub fn d1_prime(rho_zae: &QOperator, f: Option<&LinearHash>) -> Result<f64> {
    let Some(f) = f else { return Ok(0.0) };
    let ke = key_state(rho_zae, f)?;
    let blocks: Vec<CMatrix> = ke
        .classical_blocks("K", Basis::Z)?
        .into_iter()
        .map(QOperator::into_matrix)
        .collect();
    let de = blocks[0].nrows();
    let weight = 1.0 / blocks.len() as f64;
    let value = if de == 1 {
        blocks.iter().map(|b| (b[(0, 0)].re - weight).abs()).sum()
    } else {
        let sigma = HermitianBasis::new(de);
        let n_sigma = sigma.traceless_len();
        let per = sigma.len();
        let mut p = LmiProblem::new(n_sigma + blocks.len() * per);
        let centre = CMatrix::identity(de, de) * c(1.0 / de as f64);
        let mut positivity = LmiBlock::new(centre.clone());
        for q in 0..n_sigma {
            positivity.push(q, Term::Sparse(sigma.traceless_element(q)));
        }
        p.blocks.push(positivity);
        for (k, rho_k) in blocks.iter().enumerate() {
            let offset = n_sigma + k * per;
            let mut pos = LmiBlock::new(CMatrix::zeros(de, de));
            let mut dominates = LmiBlock::new(&centre * c(weight) - rho_k);
            for q in 0..per {
                if q < de {
                    p.objective[offset + q] = 2.0;
                }
                pos.push(offset + q, Term::Sparse(sigma.element(q)));
                dominates.push(offset + q, Term::Sparse(sigma.element(q)));
            }
            for q in 0..n_sigma {
                let scaled = sigma
                    .traceless_element(q)
                    .into_iter()
                    .map(|(a, b, v)| (a, b, v * weight))
                    .collect();
                dominates.push(q, Term::Sparse(scaled));
            }
            p.blocks.push(pos);
            p.blocks.push(dominates);
        }
        p.solve()?.value - ke.trace() + 1.0
    };
    if (ke.trace() - 1.0).abs() < 1e-9 {
        let upper = d1(rho_zae, Some(f))?;
        if value > upper + 1e-7 {
            return Err(Error::CrossCheck {
                quantity: "d1_prime <= d1".into(),
                a: value,
                b: upper,
            });
        }
    }
    Ok(value)
}

/// Success probability of the pretty-good measurement
/// `M_x = S^{−1/2} ρ_x S^{−1/2}`, `S = Σ_x ρ_x`.
pub fn pgm_success(states: &[CMatrix]) -> f64 {
    let Some(first) = states.first() else {
        return 0.0;
    };
    let total = states.iter().skip(1).fold(first.clone(), |acc, s| acc + s);
    let root = pinv_power(&total, -0.5);
    states
        .iter()
        .map(|s| {
            let m = &root * s * &root;
            re_trace_product(s, &m)
        })
        .sum()
}

/// Success probability of decoding `x` from `B` and the syndrome `g(x)`
/// with the pretty-good measurement of each syndrome class.
pub fn decode_pgm(rho_xab: &QOperator, g: Option<&LinearHash>) -> Result<f64> {
    rho_xab.require_classical("A", Basis::X)?;
    let blocks = rho_xab.classical_blocks("A", Basis::X)?;
    let classes = g.map_or(1, |g| 1usize << g.m());
    let mut grouped: Vec<Vec<CMatrix>> = vec![Vec::new(); classes];
    for (x, b) in blocks.into_iter().enumerate() {
        let s = g.map_or(0, |g| g.apply(x as u64) as usize);
        grouped[s].push(b.into_matrix());
    }
    Ok(grouped.iter().map(|states| pgm_success(states)).sum())
}

/// Unnormalized branches of a pure state after measuring the Pauli strings
/// of the rows of `h` on `reg`, indexed by the outcome string `h(·)`.
pub fn measure_rows(
    pure: &PureState,
    reg: &str,
    h: &LinearHash,
    basis: Basis,
) -> Result<Vec<Option<PureState>>> {
    let mut branches = vec![Some(pure.clone())];
    for &row in h.matrix().row_words() {
        let mut next = Vec::with_capacity(2 * branches.len());
        for branch in branches {
            match branch {
                Some(s) => {
                    for negative in [false, true] {
                        let p = s.project_pauli(reg, row, basis, negative)?;
                        next.push((p.norm_sqr() > ZERO_WEIGHT).then_some(p));
                    }
                }
                None => next.extend([None, None]),
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// `Q^EC` through the decoding pipeline: measure the syndrome with the
/// `X^{g_j}` strings, then guess `X^A` from `B` in each syndrome branch.
pub fn ec_pipeline(pure: &PureState, g: Option<&LinearHash>) -> Result<f64> {
    let branches = match g {
        Some(g) => measure_rows(pure, "A", g, Basis::X)?,
        None => vec![Some(pure.clone())],
    };
    let mut success = 0.0;
    for branch in branches.into_iter().flatten() {
        let rho = branch
            .density()
            .marginal(&["A", "B"])?
            .dephase("A", Basis::X)?;
        success += pguess(&rho, "A", &["B"])?;
    }
    Ok(pure.norm_sqr() - success)
}

/// `Tr ρ − 2^{H_max(f(Z^A)|E) − m}` through the measurement pipeline: the
/// `Z^{f_i}` branches `ψ_k` form the purification `Σ_k |k⟩_K |ψ_k⟩_{ABE}` of
/// `ρ^f_{KE}`, and `H_max(K|E) = −H_min(K|AB)` on it.
pub fn pa_via_duality(pure: &PureState, f: Option<&LinearHash>) -> Result<f64> {
    let Some(f) = f else { return Ok(0.0) };
    let pure = pure.reorder(&["A", "B", "E"])?;
    let de = pure.layout().dim("E")?;
    let dab = pure.layout().total_dim() / de;
    let dk = 1usize << f.m();
    let branches = measure_rows(&pure, "A", f, Basis::Z)?;
    // rows (k, ab), columns e
    let mut psi = CMatrix::zeros(dk * dab, de);
    for (k, branch) in branches.iter().enumerate() {
        if let Some(b) = branch {
            let v = b.amplitudes();
            for ab in 0..dab {
                for e in 0..de {
                    psi[(k * dab + ab, e)] = v[ab * de + e];
                }
            }
        }
    }
    let layout = RegisterLayout::new([("K", dk)])?.concat(&pure.layout().select(&["A", "B"])?)?;
    let rho = QOperator::new(layout, &psi * psi.adjoint())?;
    let h = hmin(&rho, &["K"], &["A", "B"])?;
    Ok(pure.norm_sqr() - (-h.value - f.m() as f64).exp2())
}

/// The five expressions of the equality between the three indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualityReport {
    pub q_pa: f64,
    pub q_ec: f64,
    pub q_dc: f64,
    pub via_hmax: f64,
    pub via_hmin: f64,
    pub max_spread: f64,
}

impl EqualityReport {
    pub fn values(&self) -> [f64; 5] {
        [
            self.q_pa,
            self.q_ec,
            self.q_dc,
            self.via_hmax,
            self.via_hmin,
        ]
    }

    pub fn pass(&self) -> bool {
        self.max_spread <= EQUALITY_TOL
    }
}

/// Evaluates every expression by its own path: `q_pa` by the fidelity SDP on
/// `ρ^f_{KE}`, `q_ec` by the syndrome-measurement pipeline, `q_dc` by the
/// guessing SDP on `τ`, `via_hmax` by purification duality on the
/// `Z^{f_i}` branches and `via_hmin` by the dominating-operator SDP on `τ`.
pub fn verify_theorem1(inst: &AlgorithmInstance) -> Result<EqualityReport> {
    let sf = &inst.standard_form;
    let q_pa = inst.q_pa()?;
    let q_ec = ec_pipeline(&sf.pure, inst.g.as_ref())?;
    let q_dc = inst.q_ec_dc()?;
    let via_hmax = pa_via_duality(&sf.pure, inst.f.as_ref())?;
    let via_hmin = ec_via_hmin(&sf.rho_xab, inst.g.as_ref())?;
    let values = [q_pa, q_ec, q_dc, via_hmax, via_hmin];
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EqualityReport {
        q_pa,
        q_ec,
        q_dc,
        via_hmax,
        via_hmin,
        max_spread: max - min,
    })
}

/// Quantity averaged over a family by [`expect_over_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `Q^PA` of each member as given, with its full output length.
    QPa,
    /// `Q^PA` of each member reduced to a surjective map.
    QPaReduced,
    /// `Q^EC = Q^DC` of the dual of each reduced member.
    QEcDc,
    D1,
    /// `d₂(ρ^f_{KE}|ρ_E)`.
    D2,
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Exact weighted average `Σ_i p_i · metric(f_i)`; members are evaluated in
/// parallel and summed in a fixed order.
pub fn expect_over_family(fam: &HashFamily, metric: Metric, sf: &StandardForm) -> Result<f64> {
    if fam.len() > FAMILY_CAP {
        return Err(Error::EnumerationCap {
            needed: fam.len() as u128,
            cap: FAMILY_CAP as u128,
        });
    }
    if fam.n() != sf.n() {
        return Err(Error::Dimension(format!(
            "family takes {} bits, A holds {}",
            fam.n(),
            sf.n()
        )));
    }
    let terms = fam
        .members()
        .par_iter()
        .zip(fam.probs().par_iter())
        .map(|(f, p)| Ok(rational_to_f64(p) * member_metric(f, metric, sf)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

fn member_metric(f: &LinearHash, metric: Metric, sf: &StandardForm) -> Result<f64> {
    match metric {
        Metric::QPa => pa_index(&sf.rho_zae, Some(f)),
        Metric::QPaReduced => pa_index(&sf.rho_zae, DualPair::from_member(f)?.f.as_ref()),
        Metric::QEcDc => ec_dc_index(&sf.rho_xab, DualPair::from_member(f)?.g.as_ref()),
        Metric::D1 => d1(&sf.rho_zae, Some(f)),
        Metric::D2 => {
            let ke = key_state(&sf.rho_zae, f)?;
            let rho_e = ke.partial_trace(&["K"])?;
            d2(&ke, "K", &rho_e)
        }
    }
}

/// Normalized random standard form with an `n`-qubit `A` and a one-qubit
/// `E`: a Haar-random pure state on `A ⊗ B₀ ⊗ E` is reduced to `AE`, measured
/// in `z` and purified again. `B₀` is a qubit for `n ≤ 2` and absent for
/// `n = 3`, which keeps the purifying `B` at no more than three qubits.
pub fn random_standard_form(n: usize, rng: &mut SuiteRng) -> Result<StandardForm> {
    if n == 0 || n > MAX_INSTANCE_QUBITS {
        return Err(Error::Precondition(format!(
            "A must hold 1 to {MAX_INSTANCE_QUBITS} qubits, got {n}"
        )));
    }
    let mut regs = vec![("A", 1usize << n)];
    if n <= 2 {
        regs.push(("B0", 2));
    }
    regs.push(("E", 2));
    let psi = random_pure(&RegisterLayout::new(regs)?, rng);
    let rho_zae = psi
        .density()
        .marginal(&["A", "E"])?
        .dephase("A", Basis::Z)?;
    standard_form_from(&rho_zae, Given::CqZ)
}

/// Random standard form paired with a random surjective `f: n → m` bits.
pub fn random_instance(n: usize, m: usize, rng: &mut SuiteRng) -> Result<AlgorithmInstance> {
    if m == 0 || m > n {
        return Err(Error::Precondition(format!(
            "key length {m} outside 1..={n}"
        )));
    }
    let sf = random_standard_form(n, rng)?;
    let f = random_surjective(n, m, rng);
    AlgorithmInstance::new(sf, f)
}

/// Guessing probability of `X^A` from `B` alone.
pub fn pguess_x_given_b(sf: &StandardForm) -> Result<f64> {
    entropy::pguess(&sf.rho_xab, "A", &["B"])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::HashFamily;
    use crate::quantum::{helstrom_success, CVector};
    use crate::random::{random_density, rng_from_seed};

    fn layout(regs: &[(&str, usize)]) -> RegisterLayout {
        RegisterLayout::new(regs.iter().copied()).unwrap()
    }

    fn hash(rows: &[&str]) -> LinearHash {
        LinearHash::parse_rows(rows).unwrap()
    }

    /// `Σ_z p_z |z⟩⟨z| ⊗ |e(z)⟩⟨e(z)|` on `[A, E]`.
    fn classical_ae(n: usize, de: usize, weights: &[(usize, usize, f64)]) -> QOperator {
        let mut diag = vec![0.0; (1 << n) * de];
        for &(z, e, p) in weights {
            diag[z * de + e] += p;
        }
        QOperator::diagonal(layout(&[("A", 1 << n), ("E", de)]), &diag).unwrap()
    }

    fn sf_from_zae(rho: &QOperator) -> StandardForm {
        standard_form_from(rho, Given::CqZ).unwrap()
    }

    #[test]
    fn ideal_key_has_zero_indices() {
        let mut rng = rng_from_seed(3);
        let sigma = random_density(&layout(&[("E", 2)]), 2, &mut rng);
        let uniform = QOperator::maximally_mixed(layout(&[("A", 4)]));
        let rho = uniform.tensor(&sigma).unwrap();
        let f = hash(&["10", "11"]);
        assert!(pa_index(&rho, Some(&f)).unwrap().abs() < 1e-7);
        assert!(d1(&rho, Some(&f)).unwrap().abs() < 1e-12);
        assert!(d1_prime(&rho, Some(&f)).unwrap().abs() < 1e-7);
    }

    #[test]
    fn correlated_classical_key() {
        // E holds z exactly; K = z_0 is fully known, H_max(K|E) = 0
        let rho = classical_ae(
            2,
            4,
            &[(0, 0, 0.25), (1, 1, 0.25), (2, 2, 0.25), (3, 3, 0.25)],
        );
        let f = hash(&["10"]);
        assert!((pa_index(&rho, Some(&f)).unwrap() - 0.5).abs() < 1e-7);
        // diagonal: four entries 1/4 and four zeros against 1/8 each
        assert!((d1(&rho, Some(&f)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn leaked_bit_has_unit_d1() {
        let rho = classical_ae(1, 2, &[(0, 0, 0.5), (1, 1, 0.5)]);
        let f = hash(&["1"]);
        assert!((d1(&rho, Some(&f)).unwrap() - 1.0).abs() < 1e-12);
        // |½ − s/2| + (1 − s)/2 + s/2 + |½ − (1 − s)/2| = 1 for diagonal σ = diag(s, 1 − s)
        assert!((d1_prime(&rho, Some(&f)).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn pa_index_scales_with_trace() {
        let mut rng = rng_from_seed(11);
        let sf = random_standard_form(2, &mut rng).unwrap();
        let f = hash(&["11"]);
        let q = pa_index(&sf.rho_zae, Some(&f)).unwrap();
        for c in [0.3, 0.75] {
            let qc = pa_index(&sf.rho_zae.scaled(c), Some(&f)).unwrap();
            assert!((qc - c * q).abs() < 1e-7, "{qc} vs {}", c * q);
        }
    }

    #[test]
    fn perfect_copy_decodes() {
        // ρ_{X^A B} = ½ Σ_x |x̃⟩⟨x̃| ⊗ |x⟩⟨x|
        let rho_z = classical_ae(1, 2, &[(0, 0, 0.5), (1, 1, 0.5)]);
        let h = crate::quantum::linalg::hadamard(1);
        let rho = QOperator::new(layout(&[("A", 2), ("B", 2)]), rho_z.matrix().clone())
            .unwrap()
            .conjugate_register("A", &h)
            .unwrap();
        assert!(ec_dc_index(&rho, None).unwrap().abs() < 1e-7);
        assert!((decode_pgm(&rho, None).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_side_leaves_coset_guess() {
        // uniform x on 3 bits, no B: knowing the 2-bit syndrome leaves 2 candidates
        let rho = QOperator::maximally_mixed(layout(&[("A", 8)]));
        let g = hash(&["110", "011"]);
        assert!((ec_dc_index(&rho, Some(&g)).unwrap() - 0.5).abs() < 1e-9);
        assert!((ec_via_hmin(&rho, Some(&g)).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pgm_matches_orthogonal_and_bounds_helstrom() {
        let mut rng = rng_from_seed(5);
        let e = layout(&[("B", 2)]);
        let a = random_density(&e, 1, &mut rng).scaled(0.4);
        let b = random_density(&e, 2, &mut rng).scaled(0.6);
        let optimal = helstrom_success(&a, &b).unwrap();
        let pgm = pgm_success(&[a.matrix().clone(), b.matrix().clone()]);
        assert!(pgm <= optimal + 1e-12 && pgm > 0.0);

        let p0 = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.3), c(0.0)]));
        let p1 = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0), c(0.7)]));
        assert!((pgm_success(&[p0, p1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theorem1_on_random_instances() {
        let mut rng = rng_from_seed(2024);
        for (n, m) in [(1, 1), (2, 1), (2, 2), (3, 1), (3, 2)] {
            let inst = random_instance(n, m, &mut rng).unwrap();
            let r = verify_theorem1(&inst).unwrap();
            assert!(r.pass(), "n={n} m={m}: {r:?}");
            assert!(inst.decode_pgm().unwrap() <= inst.trace() - r.q_dc + 1e-9);
        }
    }

    #[test]
    fn theorem1_on_subnormalized_instance() {
        let mut rng = rng_from_seed(8);
        let sf = random_standard_form(2, &mut rng)
            .unwrap()
            .scaled(0.6)
            .unwrap();
        let inst = AlgorithmInstance::new(sf, hash(&["01"])).unwrap();
        let r = verify_theorem1(&inst).unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn theorem1_trivial_and_leaked() {
        let mut rng = rng_from_seed(4);
        let sigma = random_density(&layout(&[("E", 2)]), 2, &mut rng);
        let uniform = QOperator::maximally_mixed(layout(&[("A", 2)]));
        let inst =
            AlgorithmInstance::new(sf_from_zae(&uniform.tensor(&sigma).unwrap()), hash(&["1"]))
                .unwrap();
        let r = verify_theorem1(&inst).unwrap();
        assert!(r.values().iter().all(|v| v.abs() < 1e-7), "{r:?}");

        let leaked = classical_ae(1, 2, &[(0, 0, 0.4), (1, 1, 0.4)]);
        let inst = AlgorithmInstance::new(sf_from_zae(&leaked), hash(&["1"])).unwrap();
        let r = verify_theorem1(&inst).unwrap();
        assert!(r.values().iter().all(|v| (v - 0.4).abs() < 1e-7), "{r:?}");
    }

    #[test]
    fn d1_sandwich_and_index_bound() {
        let mut rng = rng_from_seed(99);
        for n in 1..=3 {
            let inst = random_instance(n, 1, &mut rng).unwrap();
            let (q, a, b) = (
                inst.q_pa().unwrap(),
                inst.d1().unwrap(),
                inst.d1_prime().unwrap(),
            );
            assert!(b <= a + 1e-8 && a <= 2.0 * b + 1e-8, "{a} {b}");
            assert!(a <= 4.0 * q.sqrt() + 1e-8);
            assert!(1.0 - (1.0 - q).sqrt() <= b / 2.0 + 1e-8 && b / 2.0 <= q.sqrt() + 1e-8);
        }
    }

    #[test]
    fn guessing_bound_from_trace_distance() {
        // with f the identity, p_guess(X^A|B) = 1 − Q^PA ≥ 1 − d₁′
        let mut rng = rng_from_seed(17);
        for n in 1..=2 {
            let sf = random_standard_form(n, &mut rng).unwrap();
            let inst = AlgorithmInstance::new(sf, LinearHash::identity(n).unwrap()).unwrap();
            let p = pguess_x_given_b(&inst.standard_form).unwrap();
            let q = inst.q_pa().unwrap();
            assert!((p - (1.0 - q)).abs() < 1e-6);
            assert!(p >= 1.0 - inst.d1_prime().unwrap() - 1e-8);
            assert!(p >= 1.0 - 2.0 * q - 1e-8);
        }
    }

    #[test]
    fn family_expectations() {
        let mut rng = rng_from_seed(21);
        let sf = random_standard_form(3, &mut rng).unwrap();
        let f = hash(&["101"]);
        let single = HashFamily::uniform(3, 1, vec![f.clone()]).unwrap();
        let direct = pa_index(&sf.rho_zae, Some(&f)).unwrap();
        assert_eq!(
            expect_over_family(&single, Metric::QPa, &sf).unwrap(),
            direct
        );

        let toeplitz = HashFamily::toeplitz(3, 1).unwrap();
        let pa = expect_over_family(&toeplitz, Metric::QPaReduced, &sf).unwrap();
        let ec = expect_over_family(&toeplitz, Metric::QEcDc, &sf).unwrap();
        assert!((pa - ec).abs() < 1e-6, "{pa} vs {ec}");

        let product = sf_from_zae(
            &QOperator::maximally_mixed(layout(&[("A", 4)]))
                .tensor(&random_density(&layout(&[("E", 2)]), 1, &mut rng))
                .unwrap(),
        );
        let all = HashFamily::all_linear(2, 1).unwrap();
        assert!(
            expect_over_family(&all, Metric::QPaReduced, &product)
                .unwrap()
                .abs()
                < 1e-7
        );
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..37).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn instance_rejects_mismatched_pairs() {
        let mut rng = rng_from_seed(1);
        let sf = random_standard_form(2, &mut rng).unwrap();
        assert!(AlgorithmInstance::new(sf.clone(), hash(&["11", "11"])).is_err());
        let bad = DualPair {
            f: Some(hash(&["10"])),
            g: Some(hash(&["10"])),
        };
        assert!(AlgorithmInstance::from_pair(sf, bad).is_err());
        assert!(random_standard_form(0, &mut rng).is_err());
    }
}
