//! Verification harness for the leftover hashing lemmas, the coding
//! theorems, their equivalence and the QKD bound conversion.
//!
//! Every check evaluates both sides of an identity or inequality on seeded
//! random instances and emits one [`VerificationReport`] per relation and
//! instance. Instance `i` of a check draws from its own stream
//! `job_rng(seed, stream << 32 | i)`, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    ec_pipeline, expect_over_family, key_state, pairwise_sum, random_instance,
    random_standard_form, verify_theorem1, AlgorithmInstance, Metric,
};
use crate::entropy::{self, h2, hmax_direct, hmax_dual, hmin, pguess, renyi_tilde, Tilde};
use crate::error::{Error, Result};
use crate::gf2::{
    conversion_bound, rational_to_f64, FamilyCertificate, HashFamily, LinearHash,
    DEFAULT_ENUMERATION_CAP,
};
use crate::quantum::{
    helstrom_success, Basis, CMatrix, PureState, QOperator, Register, RegisterLayout, StandardForm,
    C64,
};
use crate::random::{job_rng, random_density, random_surjective, random_unit_vector, SuiteRng};

/// Classicality deviation below which a triple counts as a standard form.
pub const STANDARD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Inequalities between computed quantities.
    pub inequality: f64,
    /// Identities between independently computed quantities.
    pub equality: f64,
    /// Trace-distance sandwiches and the uncertainty inequality.
    pub sandwich: f64,
    /// SDP values against closed forms.
    pub closed_form: f64,
    /// Algebraic reductions between two bound expressions.
    pub reduction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            inequality: 1e-9,
            equality: 1e-6,
            sandwich: 1e-8,
            closed_form: 1e-8,
            reduction: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            inequality: tol,
            equality: tol,
            sandwich: tol,
            closed_form: tol,
            reduction: tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs ≤ rhs`
    AtMost,
    /// `lhs = rhs`
    Equal,
}

/// Where a report comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub seed: u64,
    pub instance: usize,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl Descriptor {
    pub fn new(seed: u64, instance: usize, n: usize, m: usize) -> Self {
        Self {
            seed,
            instance,
            n,
            m,
            family: None,
            delta: None,
        }
    }

    pub fn with_family(&self, name: &str, delta: Option<f64>) -> Self {
        Self {
            family: Some(name.to_string()),
            delta,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub descriptor: Descriptor,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    /// Intermediate quantities, by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationReport {
    fn build(name: &str, d: &Descriptor, relation: Relation, lhs: f64, rhs: f64, tol: f64) -> Self {
        if !lhs.is_finite() || !rhs.is_finite() {
            return Self::failed(name, d, &format!("non-finite side: lhs {lhs}, rhs {rhs}"));
        }
        let slack = rhs - lhs;
        let pass = match relation {
            Relation::AtMost => slack >= -tol,
            Relation::Equal => slack.abs() <= tol,
        };
        Self {
            check_name: name.to_string(),
            descriptor: d.clone(),
            relation,
            lhs,
            rhs,
            slack,
            tol,
            pass,
            flags: Vec::new(),
            values: BTreeMap::new(),
            error: None,
            runtime: Duration::ZERO,
        }
    }

    pub fn at_most(name: &str, d: &Descriptor, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::build(name, d, Relation::AtMost, lhs, rhs, tol)
    }

    pub fn equal(name: &str, d: &Descriptor, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::build(name, d, Relation::Equal, lhs, rhs, tol)
    }

    /// Decided in exact rational arithmetic; the reals are for display.
    pub fn exact(
        name: &str,
        d: &Descriptor,
        relation: Relation,
        lhs: &BigRational,
        rhs: &BigRational,
    ) -> Self {
        let mut r = Self::build(
            name,
            d,
            relation,
            rational_to_f64(lhs),
            rational_to_f64(rhs),
            0.0,
        );
        r.pass = match relation {
            Relation::AtMost => lhs <= rhs,
            Relation::Equal => lhs == rhs,
        };
        r.flags.push("exact".into());
        r
    }

    pub fn failed(name: &str, d: &Descriptor, error: &str) -> Self {
        Self {
            check_name: name.to_string(),
            descriptor: d.clone(),
            relation: Relation::AtMost,
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            tol: 0.0,
            pass: false,
            flags: Vec::new(),
            values: BTreeMap::new(),
            error: Some(error.to_string()),
            runtime: Duration::ZERO,
        }
    }

    pub fn with_value(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.values.insert(key.to_string(), value);
        } else {
            self.flags.push(format!("non-finite {key}"));
        }
        self
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.flags.push(flag.to_string());
        self
    }
}

/// Built-in universal₂ family constructions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    AllLinear,
    #[default]
    Toeplitz,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::AllLinear => "all-linear",
            FamilyKind::Toeplitz => "toeplitz",
        }
    }

    pub fn build(self, n: usize, m: usize) -> Result<HashFamily> {
        match self {
            FamilyKind::AllLinear => HashFamily::all_linear(n, m),
            FamilyKind::Toeplitz => HashFamily::toeplitz(n, m),
        }
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-linear" => Ok(FamilyKind::AllLinear),
            "toeplitz" => Ok(FamilyKind::Toeplitz),
            other => Err(Error::Format(format!("unknown family {other:?}"))),
        }
    }
}

/// A family together with its exact certificate.
#[derive(Clone, Debug)]
pub struct CertifiedFamily {
    pub name: String,
    pub family: HashFamily,
    pub certificate: FamilyCertificate,
}

impl CertifiedFamily {
    pub fn new(name: impl Into<String>, family: HashFamily) -> Result<Self> {
        let certificate = family.certify()?;
        Ok(Self {
            name: name.into(),
            family,
            certificate,
        })
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    pub fn m(&self) -> usize {
        self.family.m()
    }

    pub fn delta(&self) -> f64 {
        self.certificate.delta_universal_f64()
    }

    pub fn is_universal(&self) -> bool {
        self.certificate.delta_universal <= BigRational::one()
    }

    pub fn delta_dual(&self) -> Result<f64> {
        self.certificate.delta_dual_universal_f64().ok_or_else(|| {
            Error::Precondition(format!(
                "family {} has no dual parameter (rank-deficient members or m = n)",
                self.name
            ))
        })
    }

    fn require_universal(&self) -> Result<()> {
        if self.is_universal() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "family {} is {}-almost universal, not universal",
                self.name, self.certificate.delta_universal
            )))
        }
    }
}

/// The single member `f = [1 1]`, which maps both `01` and `10` to zero
/// with certainty and so is exactly 2-almost universal.
pub fn handcrafted_delta2_family() -> Result<CertifiedFamily> {
    let f = LinearHash::parse_rows(&["11"])?;
    CertifiedFamily::new("handcrafted-delta2", HashFamily::uniform(2, 1, vec![f])?)
}

/// Uniform family over `k` distinct random surjective maps.
pub fn random_subset_family(
    n: usize,
    m: usize,
    k: usize,
    rng: &mut SuiteRng,
) -> Result<CertifiedFamily> {
    let mut members: Vec<LinearHash> = Vec::new();
    let mut tries = 0;
    while members.len() < k && tries < 64 * k {
        let f = random_surjective(n, m, rng);
        if !members.iter().any(|g| g.matrix() == f.matrix()) {
            members.push(f);
        }
        tries += 1;
    }
    CertifiedFamily::new(
        format!("random-subset({n},{m})"),
        HashFamily::uniform(n, m, members)?,
    )
}

/// Bound function `r` of a leftover hashing lemma, by family type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundFn {
    Universal,
    AlmostUniversal { delta: f64 },
    AlmostDualUniversal { delta: f64 },
}

impl BoundFn {
    pub fn name(&self) -> &'static str {
        match self {
            BoundFn::Universal => "universal",
            BoundFn::AlmostUniversal { .. } => "almost-universal",
            BoundFn::AlmostDualUniversal { .. } => "almost-dual-universal",
        }
    }

    fn apply(&self, base: f64, trace: f64) -> f64 {
        match *self {
            BoundFn::Universal => base,
            BoundFn::AlmostUniversal { delta } => (delta - 1.0) * trace + base,
            BoundFn::AlmostDualUniversal { delta } => delta * base,
        }
    }

    /// `r(H_min)`, the bound on `E_F Q^PA`.
    pub fn pa_bound(&self, m: usize, h_min: f64, trace: f64) -> f64 {
        self.apply((m as f64 - h_min).exp2(), trace)
    }

    /// `r(n − H_max)`, the bound on `E_G Q^EC`, written in terms of `H_max`.
    pub fn coding_bound(&self, n: usize, m: usize, h_max: f64, trace: f64) -> f64 {
        self.apply((h_max - (n - m) as f64).exp2(), trace)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodingLemma {
    /// `G` dual universal₂.
    Lemma6,
    /// `G` δ-almost dual universal₂.
    Lemma8,
    /// `G` δ-almost universal₂.
    Lemma10,
}

fn h_min_ze(sf: &StandardForm) -> Result<f64> {
    Ok(hmin(&sf.rho_zae, &["A"], &["E"])?.value)
}

fn h_max_xb(sf: &StandardForm) -> Result<f64> {
    Ok(hmax_direct(&sf.rho_xab, &["A"], &["B"])?.value)
}

fn require_family_dims(sf: &StandardForm, fam: &CertifiedFamily) -> Result<()> {
    if sf.n() != fam.n() {
        return Err(Error::Dimension(format!(
            "family {} takes {} bits, A holds {}",
            fam.name,
            fam.n(),
            sf.n()
        )));
    }
    Ok(())
}

/// The five expressions of the three-index equality on one instance;
/// `lhs` and `rhs` are their maximum and minimum.
pub fn check_theorem1(
    inst: &AlgorithmInstance,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let eq = verify_theorem1(inst)?;
    let values = eq.values();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(
        VerificationReport::equal("theorem1", d, max, min, tol.equality)
            .with_value("q_pa", eq.q_pa)
            .with_value("q_ec", eq.q_ec)
            .with_value("q_dc", eq.q_dc)
            .with_value("via_hmax", eq.via_hmax)
            .with_value("via_hmin", eq.via_hmin),
    )
}

/// `H_max(X^A|B) + H_min(Z^A|E)` against `n`: equal on standard forms,
/// at least `n` otherwise.
pub fn check_lemma4(
    sf: &StandardForm,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let h_min = h_min_ze(sf)?;
    let h_max = h_max_xb(sf)?;
    let n = sf.n() as f64;
    let r = if sf.is_standard(STANDARD_TOL)? {
        VerificationReport::equal("lemma4.standard", d, h_max + h_min, n, tol.equality)
    } else {
        VerificationReport::at_most("lemma4.non-standard", d, n, h_max + h_min, tol.sandwich)
    };
    Ok(r.with_value("hmin", h_min).with_value("hmax", h_max))
}

/// `E_F Q^PA ≤ 2^{m − H_min(Z^A|E)}` for a universal₂ family, and the
/// equality of the averaged indices over the dual family.
pub fn check_lhl_universal2(
    sf: &StandardForm,
    fam: &CertifiedFamily,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    require_family_dims(sf, fam)?;
    fam.require_universal()?;
    let d = d.with_family(&fam.name, Some(fam.delta()));
    let h_min = h_min_ze(sf)?;
    let lhs = expect_over_family(&fam.family, Metric::QPa, sf)?;
    let rhs = (fam.m() as f64 - h_min).exp2();
    let pa = expect_over_family(&fam.family, Metric::QPaReduced, sf)?;
    let ec = expect_over_family(&fam.family, Metric::QEcDc, sf)?;
    Ok(vec![
        VerificationReport::at_most("lemma5", &d, lhs, rhs, tol.inequality)
            .with_value("hmin", h_min),
        VerificationReport::equal("corollary1", &d, pa, ec, tol.equality),
    ])
}

/// `E_F Q^PA ≤ (δ − 1) Tr ρ + 2^{m − H_min}` with the certified δ; flags the
/// bound as vacuous when it exceeds one, and at `δ = 1` compares it with the
/// universal₂ bound.
pub fn check_lhl_almost_universal2(
    sf: &StandardForm,
    fam: &CertifiedFamily,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    require_family_dims(sf, fam)?;
    let delta = fam.delta();
    let d = d.with_family(&fam.name, Some(delta));
    let h_min = h_min_ze(sf)?;
    let lhs = expect_over_family(&fam.family, Metric::QPa, sf)?;
    let bound = BoundFn::AlmostUniversal { delta };
    let rhs = bound.pa_bound(fam.m(), h_min, sf.trace());
    let mut r = VerificationReport::at_most("lemma7", &d, lhs, rhs, tol.inequality)
        .with_value("hmin", h_min);
    if rhs > 1.0 {
        r = r.with_flag("vacuous");
    }
    let mut out = vec![r];
    if fam.certificate.delta_universal == BigRational::one() {
        let lemma5 = BoundFn::Universal.pa_bound(fam.m(), h_min, sf.trace());
        out.push(VerificationReport::equal(
            "lemma7.reduction",
            &d,
            rhs,
            lemma5,
            tol.reduction,
        ));
    }
    Ok(out)
}

/// `E_F Q^PA ≤ 2^{m − H_min} δ` for a δ-almost dual universal₂ family.
pub fn check_lhl_dual_universal2(
    sf: &StandardForm,
    fam: &CertifiedFamily,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    require_family_dims(sf, fam)?;
    let delta = fam.delta_dual()?;
    let d = d.with_family(&fam.name, Some(delta));
    let h_min = h_min_ze(sf)?;
    let lhs = expect_over_family(&fam.family, Metric::QPa, sf)?;
    let rhs = BoundFn::AlmostDualUniversal { delta }.pa_bound(fam.m(), h_min, sf.trace());
    Ok(
        VerificationReport::at_most("lemma9", &d, lhs, rhs, tol.inequality)
            .with_value("hmin", h_min),
    )
}

/// `E_G Q^EC = E_G Q^DC` over the duals of `fam` against the coding bound
/// of `which`. For a universal₂ `G` on a normalized state, also the older
/// bound `4 √(2^{H_max − (n − m)})` and its comparison with the new one.
pub fn check_coding_theorem(
    sf: &StandardForm,
    fam: &CertifiedFamily,
    which: CodingLemma,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    require_family_dims(sf, fam)?;
    let (n, m, trace) = (fam.n(), fam.m(), sf.trace());
    let (name, bound, delta) = match which {
        CodingLemma::Lemma6 => {
            fam.require_universal()?;
            ("lemma6", BoundFn::Universal, fam.delta())
        }
        CodingLemma::Lemma8 => {
            let delta = fam.delta();
            ("lemma8", BoundFn::AlmostUniversal { delta }, delta)
        }
        CodingLemma::Lemma10 => {
            let delta = fam.delta_dual()?;
            ("lemma10", BoundFn::AlmostDualUniversal { delta }, delta)
        }
    };
    let d = d.with_family(&fam.name, Some(delta));
    let h_max = h_max_xb(sf)?;
    let lhs = expect_over_family(&fam.family, Metric::QEcDc, sf)?;
    let rhs = bound.coding_bound(n, m, h_max, trace);
    let mut out = vec![
        VerificationReport::at_most(name, &d, lhs, rhs, tol.inequality).with_value("hmax", h_max),
    ];
    let normalized = (trace - 1.0).abs() <= 1e-12;
    if which == CodingLemma::Lemma10 && delta <= 1.0 && normalized {
        let older = 4.0 * (h_max - (n - m) as f64).exp2().sqrt();
        out.push(VerificationReport::at_most(
            "coding.ref-form",
            &d,
            lhs,
            older,
            tol.inequality,
        ));
        out.push(VerificationReport::at_most(
            "coding.ref-looser",
            &d,
            rhs,
            older,
            tol.inequality,
        ));
    }
    Ok(out)
}

/// Average of the syndrome-measurement pipeline over the duals of a family.
fn pipeline_expectation(fam: &HashFamily, sf: &StandardForm) -> Result<f64> {
    let pairs = fam.dual_pairs()?;
    let terms = pairs
        .par_iter()
        .map(|(pair, p)| Ok(rational_to_f64(p) * ec_pipeline(&sf.pure, pair.g.as_ref())?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

/// Transfer between a leftover hashing lemma and a coding theorem on one
/// standard form: the entropies satisfy `H_min(Z^A|E) = n − H_max(X^A|B)`,
/// the averaged indices agree, and each bound function bounds both sides.
pub fn check_theorem2_transfer(
    sf: &StandardForm,
    fams: &[(CertifiedFamily, BoundFn)],
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    if !sf.is_standard(STANDARD_TOL)? {
        return Err(Error::Precondition(
            "transfer needs a standard-form state".into(),
        ));
    }
    let (n, trace) = (sf.n(), sf.trace());
    let h_min = h_min_ze(sf)?;
    let h_max = h_max_xb(sf)?;
    let mut out = vec![VerificationReport::equal(
        "theorem2.entropies",
        d,
        h_min,
        n as f64 - h_max,
        tol.equality,
    )
    .with_value("hmin", h_min)
    .with_value("hmax", h_max)];
    let mut indices: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (fam, bound) in fams {
        require_family_dims(sf, fam)?;
        let m = fam.m();
        let d = d.with_family(&fam.name, bound_delta(bound));
        let (pa, ec) = match indices.get(&fam.name) {
            Some(&v) => v,
            None => {
                let pa = expect_over_family(&fam.family, Metric::QPaReduced, sf)?;
                let ec = pipeline_expectation(&fam.family, sf)?;
                let dc = expect_over_family(&fam.family, Metric::QEcDc, sf)?;
                let max = pa.max(ec).max(dc);
                let min = pa.min(ec).min(dc);
                out.push(
                    VerificationReport::equal(
                        "theorem2.indices",
                        &d.with_family(&fam.name, None),
                        max,
                        min,
                        tol.equality,
                    )
                    .with_value("pa", pa)
                    .with_value("ec", ec)
                    .with_value("dc", dc),
                );
                indices.insert(fam.name.clone(), (pa, ec));
                (pa, ec)
            }
        };
        let tag = bound.name();
        out.push(VerificationReport::at_most(
            &format!("theorem3.{tag}.lhl"),
            &d,
            pa,
            bound.pa_bound(m, h_min, trace),
            tol.inequality,
        ));
        out.push(VerificationReport::at_most(
            &format!("theorem3.{tag}.coding"),
            &d,
            ec,
            bound.coding_bound(n, m, h_max, trace),
            tol.inequality,
        ));
    }
    Ok(out)
}

fn bound_delta(bound: &BoundFn) -> Option<f64> {
    match *bound {
        BoundFn::Universal => Some(1.0),
        BoundFn::AlmostUniversal { delta } | BoundFn::AlmostDualUniversal { delta } => Some(delta),
    }
}

/// `d₁ ≤ 4 √Tr √Q^PA`, `1 − √(1 − Q^PA) ≤ d₁′/2 ≤ √Q^PA` and
/// `d₁′ ≤ d₁ ≤ 2 d₁′` on one normalized instance.
pub fn check_distance_bounds(
    inst: &AlgorithmInstance,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    let trace = inst.trace();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "distance sandwich needs a normalized state, trace {trace}"
        )));
    }
    let q = inst.q_pa()?;
    let d1 = inst.d1()?;
    let d1p = inst.d1_prime()?;
    let qc = q.clamp(0.0, 1.0);
    let t = tol.sandwich;
    let tag = |r: VerificationReport| {
        r.with_value("q_pa", q)
            .with_value("d1", d1)
            .with_value("d1_prime", d1p)
    };
    Ok(vec![
        tag(VerificationReport::at_most(
            "d1-index",
            d,
            d1,
            4.0 * trace.sqrt() * qc.sqrt(),
            t,
        )),
        tag(VerificationReport::at_most(
            "d1-prime.lower",
            d,
            1.0 - (1.0 - qc).sqrt(),
            d1p / 2.0,
            t,
        )),
        tag(VerificationReport::at_most(
            "d1-prime.upper",
            d,
            d1p / 2.0,
            qc.sqrt(),
            t,
        )),
        tag(VerificationReport::at_most("d1-order.lower", d, d1p, d1, t)),
        tag(VerificationReport::at_most(
            "d1-order.upper",
            d,
            d1,
            2.0 * d1p,
            t,
        )),
    ])
}

/// The collision-entropy route to a leftover hashing lemma on one
/// normalized instance, with `fam` a universal₂ family of matching size.
pub fn check_theorem4_pipeline(
    inst: &AlgorithmInstance,
    fam: &CertifiedFamily,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    let sf = &inst.standard_form;
    require_family_dims(sf, fam)?;
    fam.require_universal()?;
    let f = inst
        .f
        .as_ref()
        .ok_or_else(|| Error::Precondition("instance extracts no key".into()))?;
    let m = f.m();
    if fam.m() != m {
        return Err(Error::Dimension(format!(
            "family outputs {} bits, key has {m}",
            fam.m()
        )));
    }
    let t = tol.inequality;
    let two_m = (m as f64).exp2();

    let ke = key_state(&sf.rho_zae, f)?;
    let rho_e = ke.partial_trace(&["K"])?;
    let q = inst.q_pa()?;
    let d2 = entropy::d2(&ke, "K", &rho_e)?;
    let h_min = h_min_ze(sf)?;
    let h2_ze = h2(&sf.rho_zae, "A", &sf.rho_zae.partial_trace(&["A"])?)?;
    let half = renyi_tilde(&ke, "K", Tilde::HalfDown)?;
    let two = renyi_tilde(&ke, "K", Tilde::TwoDown)?;
    let h_max_ke = hmax_direct(&ke, &["K"], &["E"])?.value;

    let fd = d.with_family(&fam.name, Some(fam.delta()));
    let e_q = expect_over_family(&fam.family, Metric::QPa, sf)?;
    let e_d2 = expect_over_family(&fam.family, Metric::D2, sf)?;
    let e_d1 = expect_over_family(&fam.family, Metric::D1, sf)?;
    Ok(vec![
        VerificationReport::at_most("lemma2", d, q, two_m * d2, t),
        VerificationReport::at_most("lemma2.family", &fd, e_q, two_m * e_d2, t),
        VerificationReport::at_most("lemma3", d, h_min, h2_ze, t),
        VerificationReport::at_most("tilde-order", d, two, half, t),
        VerificationReport::at_most("hmax-tilde", d, half, h_max_ke, t),
        VerificationReport::at_most("collision-average", &fd, e_d2, (-h2_ze).exp2(), t),
        VerificationReport::at_most(
            "conventional-lhl",
            &fd,
            e_d1,
            4.0 * (m as f64 - h_min).exp2().sqrt(),
            t,
        ),
    ])
}

/// Bound conversion between the two QKD proof approaches at `ε = 0`, with
/// `h_th` a threshold on `H_min(Z^A|E)`. Emits the four bounds on the
/// measured `E_F d₁`, the identity of the uncertainty-relation bound with
/// the hashing-lemma bound, and the threshold form of `E_G Q^EC`.
pub fn qkd_conversion_demo(
    sf: &StandardForm,
    fam: &CertifiedFamily,
    h_th: f64,
    d: &Descriptor,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    require_family_dims(sf, fam)?;
    fam.require_universal()?;
    let h_min = h_min_ze(sf)?;
    if h_min < h_th {
        return Err(Error::Precondition(format!(
            "H_min = {h_min} is below the threshold {h_th}"
        )));
    }
    let (n, m, trace) = (fam.n(), fam.m(), sf.trace());
    let d = d.with_family(&fam.name, Some(fam.delta()));
    let h_max = h_max_xb(sf)?;
    let e_d1 = expect_over_family(&fam.family, Metric::D1, sf)?;
    let e_ec = expect_over_family(&fam.family, Metric::QEcDc, sf)?;

    let q_th = (m as f64 - h_th).exp2();
    let lhl = q_th.sqrt();
    let pec = 2.0 * 2f64.sqrt() * q_th.sqrt();
    let reverse = 4.0 * q_th.sqrt();
    let ucr = trace.sqrt() * ((n as f64 - h_th) - (n - m) as f64).exp2().sqrt();
    let ucr_measured = trace.sqrt() * (h_max - (n - m) as f64).exp2().sqrt();

    let t = tol.inequality;
    let tag = |r: VerificationReport| {
        r.with_flag("eps=0")
            .with_value("hmin", h_min)
            .with_value("h_th", h_th)
            .with_value("hmax", h_max)
            .with_value("ucr_measured", ucr_measured)
    };
    Ok(vec![
        tag(VerificationReport::at_most("qkd.lhl", &d, e_d1, lhl, t)),
        tag(VerificationReport::at_most("qkd.pec", &d, e_d1, pec, t)),
        tag(VerificationReport::at_most(
            "qkd.reverse",
            &d,
            e_d1,
            reverse,
            t,
        )),
        tag(VerificationReport::at_most("qkd.ucr", &d, e_d1, ucr, t)),
        tag(VerificationReport::equal(
            "qkd.ucr-equals-lhl",
            &d,
            ucr,
            lhl,
            tol.reduction,
        )),
        tag(VerificationReport::at_most(
            "qkd.ucr-vs-pec",
            &d,
            ucr,
            pec,
            t,
        )),
        tag(VerificationReport::at_most(
            "qkd.ec-threshold",
            &d,
            e_ec,
            q_th,
            t,
        )),
    ])
}

/// Named groups of checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Theorem1,
    Lemma4,
    LhlUniversal2,
    LhlAlmostUniversal2,
    LhlDualUniversal2,
    CodingTheorems,
    Theorem2Transfer,
    DistanceBounds,
    Theorem4Pipeline,
    QkdDemo,
    Engine,
    Certification,
}

impl Check {
    pub const ALL: [Check; 12] = [
        Check::Theorem1,
        Check::Lemma4,
        Check::LhlUniversal2,
        Check::LhlAlmostUniversal2,
        Check::LhlDualUniversal2,
        Check::CodingTheorems,
        Check::Theorem2Transfer,
        Check::DistanceBounds,
        Check::Theorem4Pipeline,
        Check::QkdDemo,
        Check::Engine,
        Check::Certification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Theorem1 => "theorem1",
            Check::Lemma4 => "lemma4",
            Check::LhlUniversal2 => "lhl-universal2",
            Check::LhlAlmostUniversal2 => "lhl-almost-universal2",
            Check::LhlDualUniversal2 => "lhl-dual-universal2",
            Check::CodingTheorems => "coding-theorems",
            Check::Theorem2Transfer => "theorem2-transfer",
            Check::DistanceBounds => "distance-bounds",
            Check::Theorem4Pipeline => "theorem4-pipeline",
            Check::QkdDemo => "qkd-demo",
            Check::Engine => "engine",
            Check::Certification => "certification",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown check {s:?}")))
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Size of `A`. Pooled checks otherwise cycle through 1, 2, 3 and family
    /// checks use 3.
    pub n: Option<usize>,
    /// Key length. Pooled checks otherwise draw it per instance and family
    /// checks use 1.
    pub m: Option<usize>,
    pub family: FamilyKind,
    /// Replaces the built-in almost universal₂ families.
    pub delta_family: Option<HashFamily>,
    /// Overrides every per-check instance count.
    pub instances: Option<usize>,
    pub tolerances: Tolerances,
}

const DEFAULT_FAMILY_N: usize = 3;
const DEFAULT_FAMILY_M: usize = 1;
const SUBSET_SIZE: usize = 3;

#[derive(Clone, Copy)]
enum Stream {
    Pool = 1,
    NonStandard,
    Family,
    Subset,
    Coding,
    Transfer,
    Qkd,
    EngineHmin,
    EngineHelstrom,
    EngineEntangled,
    EngineDuality,
    EnginePgm,
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n {
            if n == 0 || n > crate::algorithms::MAX_INSTANCE_QUBITS {
                return Err(Error::Precondition(format!(
                    "n must lie in 1..={}, got {n}",
                    crate::algorithms::MAX_INSTANCE_QUBITS
                )));
            }
        }
        if self.m == Some(0) {
            return Err(Error::Precondition("m must be at least 1".into()));
        }
        if let (Some(n), Some(m)) = (self.n, self.m) {
            if m > n {
                return Err(Error::Precondition(format!("m = {m} exceeds n = {n}")));
            }
        }
        Ok(())
    }

    fn rng(&self, stream: Stream, i: usize) -> SuiteRng {
        job_rng(self.seed, ((stream as u64) << 32) | i as u64)
    }

    fn count(&self, default: usize) -> usize {
        self.instances.unwrap_or(default)
    }

    fn family_dims(&self) -> Result<(usize, usize)> {
        let n = self.n.unwrap_or(DEFAULT_FAMILY_N);
        let m = self.m.unwrap_or(DEFAULT_FAMILY_M);
        if m >= n {
            return Err(Error::Precondition(format!(
                "family checks need m < n, got n = {n}, m = {m}"
            )));
        }
        Ok((n, m))
    }

    fn primary_family(&self) -> Result<CertifiedFamily> {
        let (n, m) = self.family_dims()?;
        CertifiedFamily::new(
            format!("{}({n},{m})", self.family.name()),
            self.family.build(n, m)?,
        )
    }

    fn subset_family(&self) -> Result<CertifiedFamily> {
        if let Some(f) = &self.delta_family {
            return CertifiedFamily::new("delta-family", f.clone());
        }
        let (n, m) = self.family_dims()?;
        random_subset_family(n, m, SUBSET_SIZE, &mut self.rng(Stream::Subset, 0))
    }

    fn almost_family(&self) -> Result<CertifiedFamily> {
        match &self.delta_family {
            Some(f) => CertifiedFamily::new("delta-family", f.clone()),
            None => handcrafted_delta2_family(),
        }
    }

    fn full_rank_family(&self) -> Result<CertifiedFamily> {
        let (n, m) = self.family_dims()?;
        CertifiedFamily::new(format!("full-rank({n},{m})"), HashFamily::full_rank(n, m)?)
    }

    /// Instance `i` shared by the pooled checks.
    fn pooled_instance(&self, i: usize) -> Result<AlgorithmInstance> {
        let mut rng = self.rng(Stream::Pool, i);
        let n = self.n.unwrap_or(1 + i % 3);
        let m = match self.m {
            Some(m) => m.min(n),
            None => rng.random_range(1..=n),
        };
        random_instance(n, m, &mut rng)
    }

    fn state(&self, stream: Stream, i: usize, n: usize) -> Result<StandardForm> {
        random_standard_form(n, &mut self.rng(stream, i))
    }
}

/// Runs `job` for every instance index and keeps the results in index
/// order. A failed instance becomes a single failing report.
fn per_instance<F>(cfg: &SuiteConfig, check: Check, count: usize, job: F) -> Vec<VerificationReport>
where
    F: Fn(usize, &mut Descriptor) -> Result<Vec<VerificationReport>> + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let mut d = Descriptor::new(cfg.seed, i, 0, 0);
            let mut reports = match job(i, &mut d) {
                Ok(r) => r,
                Err(e) => vec![VerificationReport::failed(check.name(), &d, &e.to_string())],
            };
            let runtime = start.elapsed();
            for r in &mut reports {
                r.runtime = runtime;
            }
            reports
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn pooled<F>(cfg: &SuiteConfig, check: Check, count: usize, job: F) -> Vec<VerificationReport>
where
    F: Fn(&AlgorithmInstance, &Descriptor) -> Result<Vec<VerificationReport>> + Sync,
{
    per_instance(cfg, check, count, |i, d| {
        let inst = cfg.pooled_instance(i)?;
        d.n = inst.n;
        d.m = inst.m;
        job(&inst, d)
    })
}

/// Runs one check group.
pub fn run_check(cfg: &SuiteConfig, check: Check) -> Result<Vec<VerificationReport>> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let out = match check {
        Check::Theorem1 => pooled(cfg, check, cfg.count(50), |inst, d| {
            Ok(vec![check_theorem1(inst, d, tol)?])
        }),
        Check::Lemma4 => {
            let mut out = pooled(cfg, check, cfg.count(50), |inst, d| {
                Ok(vec![check_lemma4(&inst.standard_form, d, tol)?])
            });
            out.extend(per_instance(cfg, check, cfg.count(20), |i, d| {
                let n = cfg.n.unwrap_or(1 + i % 3);
                d.n = n;
                let layout = RegisterLayout::new([("A", 1usize << n), ("B", 2), ("E", 2)])?;
                let psi = crate::random::random_pure(&layout, &mut cfg.rng(Stream::NonStandard, i));
                let sf = StandardForm::from_tripartite(psi)?;
                let r = check_lemma4(&sf, d, tol)?;
                Ok(vec![r])
            }));
            out
        }
        Check::LhlUniversal2 => {
            let fam = cfg.primary_family()?;
            per_instance(cfg, check, cfg.count(20), |i, d| {
                (d.n, d.m) = (fam.n(), fam.m());
                check_lhl_universal2(&cfg.state(Stream::Family, i, fam.n())?, &fam, d, tol)
            })
        }
        Check::LhlAlmostUniversal2 => {
            let almost = cfg.almost_family()?;
            let primary = cfg.primary_family()?;
            let mut out = Vec::new();
            for fam in [&almost, &primary] {
                out.extend(per_instance(cfg, check, cfg.count(20), |i, d| {
                    (d.n, d.m) = (fam.n(), fam.m());
                    check_lhl_almost_universal2(
                        &cfg.state(Stream::Family, i, fam.n())?,
                        fam,
                        d,
                        tol,
                    )
                }));
            }
            out
        }
        Check::LhlDualUniversal2 => {
            let fam = cfg.subset_family()?;
            fam.delta_dual()?;
            per_instance(cfg, check, cfg.count(20), |i, d| {
                (d.n, d.m) = (fam.n(), fam.m());
                Ok(vec![check_lhl_dual_universal2(
                    &cfg.state(Stream::Family, i, fam.n())?,
                    &fam,
                    d,
                    tol,
                )?])
            })
        }
        Check::CodingTheorems => {
            let runs = [
                (cfg.primary_family()?, CodingLemma::Lemma6),
                (cfg.subset_family()?, CodingLemma::Lemma8),
                (cfg.subset_family()?, CodingLemma::Lemma10),
                (cfg.full_rank_family()?, CodingLemma::Lemma10),
            ];
            let mut out = Vec::new();
            for (fam, which) in &runs {
                out.extend(per_instance(cfg, check, cfg.count(20), |i, d| {
                    (d.n, d.m) = (fam.n(), fam.m());
                    check_coding_theorem(
                        &cfg.state(Stream::Coding, i, fam.n())?,
                        fam,
                        *which,
                        d,
                        tol,
                    )
                }));
            }
            out
        }
        Check::Theorem2Transfer => {
            let primary = cfg.primary_family()?;
            primary.require_universal()?;
            let subset = cfg.subset_family()?;
            let mut groups: BTreeMap<usize, Vec<(CertifiedFamily, BoundFn)>> = BTreeMap::new();
            groups
                .entry(primary.n())
                .or_default()
                .push((primary.clone(), BoundFn::Universal));
            let almost = BoundFn::AlmostUniversal {
                delta: subset.delta(),
            };
            let dual = BoundFn::AlmostDualUniversal {
                delta: subset.delta_dual()?,
            };
            groups
                .entry(subset.n())
                .or_default()
                .push((subset.clone(), almost));
            groups.entry(subset.n()).or_default().push((subset, dual));
            let mut out = Vec::new();
            for (n, fams) in &groups {
                out.extend(per_instance(cfg, check, cfg.count(10), |i, d| {
                    (d.n, d.m) = (*n, fams[0].0.m());
                    check_theorem2_transfer(&cfg.state(Stream::Transfer, i, *n)?, fams, d, tol)
                }));
            }
            out
        }
        Check::DistanceBounds => pooled(cfg, check, cfg.count(50), |inst, d| {
            check_distance_bounds(inst, d, tol)
        }),
        Check::Theorem4Pipeline => pooled(cfg, check, cfg.count(50), |inst, d| {
            let fam = CertifiedFamily::new(
                format!("{}({},{})", cfg.family.name(), inst.n, inst.m),
                cfg.family.build(inst.n, inst.m)?,
            )?;
            check_theorem4_pipeline(inst, &fam, d, tol)
        }),
        Check::QkdDemo => {
            let fam = cfg.primary_family()?;
            per_instance(cfg, check, cfg.count(10), |i, d| {
                (d.n, d.m) = (fam.n(), fam.m());
                let sf = cfg.state(Stream::Qkd, i, fam.n())?;
                let h_th = (h_min_ze(&sf)? * 1000.0).floor().max(0.0) / 1000.0;
                qkd_conversion_demo(&sf, &fam, h_th, d, tol)
            })
        }
        Check::Engine => run_engine(cfg, tol),
        Check::Certification => run_certification(cfg)?,
    };
    Ok(out)
}

fn cq_pair(a: &QOperator, b: &QOperator) -> Result<QOperator> {
    let reg = Register {
        name: "A".into(),
        dim: 2,
    };
    QOperator::from_classical_blocks(reg, Basis::Z, &[a.clone(), b.clone()])
}

/// `(I ⊗ U)|Φ⁺⟩` on two qubits with `U` Haar-random (identity for instance 0).
fn rotated_bell(i: usize, rng: &mut SuiteRng) -> Result<QOperator> {
    let u = if i == 0 {
        CMatrix::identity(2, 2)
    } else {
        let v = random_unit_vector(2, rng);
        CMatrix::from_row_slice(2, 2, &[v[0], -v[1].conj(), v[1], v[0].conj()])
    };
    let s = C64::new(0.5f64.sqrt(), 0.0);
    let amps = crate::quantum::CVector::from_fn(4, |k, _| u[(k % 2, k / 2)] * s);
    let layout = RegisterLayout::new([("A", 2), ("B", 2)])?;
    Ok(PureState::new(layout, amps)?.density())
}

fn run_engine(cfg: &SuiteConfig, tol: &Tolerances) -> Vec<VerificationReport> {
    let check = Check::Engine;
    let cycle = |i: usize| cfg.n.unwrap_or(1 + i % 3);
    let mut out = per_instance(cfg, check, cfg.count(10), |i, d| {
        d.n = cycle(i);
        let sf = cfg.state(Stream::EngineHmin, i, d.n)?;
        let h = hmin(&sf.rho_zae, &["A"], &["E"])?.value;
        let p = pguess(&sf.rho_zae, "A", &["E"])?;
        Ok(vec![VerificationReport::equal(
            "engine.hmin-pguess",
            d,
            h,
            -p.log2(),
            tol.equality,
        )])
    });
    out.extend(per_instance(cfg, check, cfg.count(10), |i, d| {
        d.n = 1;
        let mut rng = cfg.rng(Stream::EngineHelstrom, i);
        let side = RegisterLayout::new([("E", 2)])?;
        let p: f64 = rng.random_range(0.1..0.9);
        let a = random_density(&side, 2, &mut rng).scaled(p);
        let b = random_density(&side, 2, &mut rng).scaled(1.0 - p);
        let sdp = pguess(&cq_pair(&a, &b)?, "A", &["E"])?;
        let closed = helstrom_success(&a, &b)?;
        Ok(vec![VerificationReport::equal(
            "engine.helstrom",
            d,
            sdp,
            closed,
            tol.closed_form,
        )])
    }));
    out.extend(per_instance(cfg, check, cfg.count(5), |i, d| {
        d.n = 1;
        let rho = rotated_bell(i, &mut cfg.rng(Stream::EngineEntangled, i))?;
        let h = hmin(&rho, &["A"], &["B"])?.value;
        Ok(vec![VerificationReport::equal(
            "engine.max-entangled",
            d,
            h,
            -1.0,
            tol.equality,
        )])
    }));
    out.extend(per_instance(cfg, check, cfg.count(6), |i, d| {
        d.n = cycle(i);
        let sf = cfg.state(Stream::EngineDuality, i, d.n)?;
        let direct = hmax_direct(&sf.rho_xab, &["A"], &["B"])?;
        let dual = hmax_dual(&sf.rho_xab, &["A"], &["B"])?;
        Ok(vec![VerificationReport::equal(
            "engine.hmax-duality",
            d,
            direct.value,
            dual.value,
            tol.equality,
        )])
    }));
    out.extend(per_instance(cfg, check, cfg.count(10), |i, d| {
        let mut rng = cfg.rng(Stream::EnginePgm, i);
        let n = cycle(i);
        let m = rng.random_range(1..=n);
        let inst = random_instance(n, m, &mut rng)?;
        (d.n, d.m) = (n, m);
        let optimal = inst.trace() - inst.q_ec_dc()?;
        Ok(vec![VerificationReport::at_most(
            "engine.pgm",
            d,
            inst.decode_pgm()?,
            optimal,
            tol.inequality,
        )])
    }));
    out
}

/// Exact certificate relations of one family.
pub fn certify_reports(
    fam: &HashFamily,
    name: &str,
    d: &Descriptor,
    expect_universal: bool,
) -> Result<Vec<VerificationReport>> {
    let (n, m) = (fam.n(), fam.m());
    let delta = fam.delta_universal(DEFAULT_ENUMERATION_CAP)?;
    let d = d.with_family(name, Some(rational_to_f64(&delta)));
    let mut out = Vec::new();
    if expect_universal {
        out.push(VerificationReport::exact(
            "certification.universal",
            &d,
            Relation::Equal,
            &delta,
            &BigRational::one(),
        ));
    }
    out.push(VerificationReport::exact(
        "certification.counting-bound",
        &d,
        Relation::AtMost,
        &FamilyCertificate::universal_lower_bound(n, m),
        &delta,
    ));
    if fam.all_surjective() && m < n {
        let dual = fam.dual()?.delta_universal(DEFAULT_ENUMERATION_CAP)?;
        out.push(VerificationReport::exact(
            "certification.dual-counting-bound",
            &d,
            Relation::AtMost,
            &FamilyCertificate::dual_lower_bound(n, m),
            &dual,
        ));
        out.push(VerificationReport::exact(
            "certification.conversion",
            &d,
            Relation::AtMost,
            &dual,
            &conversion_bound(n, m, &delta),
        ));
        out.push(VerificationReport::exact(
            "certification.conversion-converse",
            &d,
            Relation::AtMost,
            &delta,
            &conversion_bound(n, n - m, &dual),
        ));
    }
    Ok(out)
}

fn run_certification(cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let mut jobs: Vec<(String, HashFamily, bool)> = Vec::new();
    for n in 2..=4 {
        for m in 1..n {
            jobs.push((
                format!("all-linear({n},{m})"),
                HashFamily::all_linear(n, m)?,
                true,
            ));
            jobs.push((
                format!("toeplitz({n},{m})"),
                HashFamily::toeplitz(n, m)?,
                true,
            ));
            jobs.push((
                format!("full-rank({n},{m})"),
                HashFamily::full_rank(n, m)?,
                false,
            ));
        }
    }
    let almost = cfg.almost_family()?;
    jobs.push((almost.name, almost.family, false));
    if cfg.delta_family.is_none() {
        if let Ok((n, m)) = cfg.family_dims() {
            let subset = random_subset_family(n, m, SUBSET_SIZE, &mut cfg.rng(Stream::Subset, 0))?;
            jobs.push((subset.name, subset.family, false));
        }
    }
    let per_job = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (name, fam, universal))| {
            let start = Instant::now();
            let d = Descriptor::new(cfg.seed, i, fam.n(), fam.m());
            let mut reports = certify_reports(fam, name, &d, *universal).unwrap_or_else(|e| {
                vec![VerificationReport::failed(
                    "certification",
                    &d,
                    &e.to_string(),
                )]
            });
            let runtime = start.elapsed();
            for r in &mut reports {
                r.runtime = runtime;
            }
            reports
        })
        .collect::<Vec<_>>();
    Ok(per_job.into_iter().flatten().collect())
}

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub check: String,
    pub instances: usize,
    pub passed: usize,
    /// Smallest slack among the inequality reports.
    pub min_slack: Option<f64>,
    /// Largest `|lhs − rhs|` among the equality reports.
    pub max_spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub summary: Vec<SummaryRow>,
    pub reports: Vec<VerificationReport>,
}

impl SuiteRun {
    pub fn failures(&self) -> impl Iterator<Item = &VerificationReport> {
        self.reports.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        for row in &self.summary {
            writer
                .serialize(row)
                .map_err(|e| Error::Format(format!("csv: {e}")))?;
        }
        writer
            .flush()
            .map_err(|e| Error::Format(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn total_runtime(&self) -> Duration {
        self.reports.iter().map(|r| r.runtime).sum()
    }
}

/// Summary rows in order of first appearance.
pub fn summarize(reports: &[VerificationReport]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    for r in reports {
        let row = match rows.iter_mut().position(|row| row.check == r.check_name) {
            Some(k) => &mut rows[k],
            None => {
                rows.push(SummaryRow {
                    check: r.check_name.clone(),
                    instances: 0,
                    passed: 0,
                    min_slack: None,
                    max_spread: None,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.instances += 1;
        row.passed += usize::from(r.pass);
        if r.error.is_some() {
            continue;
        }
        match r.relation {
            Relation::AtMost => {
                row.min_slack = Some(row.min_slack.map_or(r.slack, |s| s.min(r.slack)))
            }
            Relation::Equal => {
                let spread = r.slack.abs();
                row.max_spread = Some(row.max_spread.map_or(spread, |s| s.max(spread)));
            }
        }
    }
    rows
}

/// Runs the given checks in order.
pub fn run_all(cfg: &SuiteConfig, checks: &[Check]) -> Result<SuiteRun> {
    let mut reports = Vec::new();
    for &check in checks {
        reports.extend(run_check(cfg, check)?);
    }
    Ok(SuiteRun {
        config: cfg.clone(),
        checks: checks.to_vec(),
        passed: reports.iter().all(|r| r.pass),
        summary: summarize(&reports),
        reports,
    })
}
