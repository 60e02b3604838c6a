//! Primal-dual interior point solver for block-diagonal linear matrix
//! inequalities over complex Hermitian blocks.
//!
//! The primal problem is
//!
//! ```text
//! minimize   cᵀy
//! subject to F_k(y) = C_k + Σ_i y_i A_{k,i} ⪰ 0   for every block k
//! ```
//!
//! and its dual is `maximize −Σ_k Tr(C_k X_k)` over `X_k ⪰ 0` with
//! `Σ_k Tr(A_{k,i} X_k) = c_i`. Iterates follow the HKM search direction with
//! a Mehrotra predictor-corrector step from an infeasible start.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quantum::linalg::{c, eigvalsh, hermiticity_deviation, hermitize, re_trace_product};
use crate::quantum::{CMatrix, C64, TOL_HERM};

/// Coefficient matrix of one variable in one block.
#[derive(Clone, Debug)]
pub enum Term {
    /// `(row, col, value)` triplets; both halves of every off-diagonal pair
    /// must be listed.
    Sparse(Vec<(usize, usize, C64)>),
    Dense(CMatrix),
}

impl Term {
    fn to_dense(&self, d: usize) -> CMatrix {
        match self {
            Term::Dense(m) => m.clone(),
            Term::Sparse(t) => {
                let mut m = CMatrix::zeros(d, d);
                for &(a, b, v) in t {
                    m[(a, b)] += v;
                }
                m
            }
        }
    }

    /// `M += s · A`
    fn add_scaled_to(&self, m: &mut CMatrix, s: f64) {
        match self {
            Term::Dense(a) => *m += a * c(s),
            Term::Sparse(t) => {
                for &(a, b, v) in t {
                    m[(a, b)] += v * s;
                }
            }
        }
    }

    /// `Re Tr(A M)`
    fn re_trace_with(&self, m: &CMatrix) -> f64 {
        match self {
            Term::Dense(a) => re_trace_product(a, m),
            Term::Sparse(t) => t.iter().map(|&(a, b, v)| (v * m[(b, a)]).re).sum(),
        }
    }

    /// `X A S⁻¹`
    fn sandwich(&self, x: &CMatrix, s_inv: &CMatrix) -> CMatrix {
        match self {
            Term::Dense(a) => x * a * s_inv,
            Term::Sparse(t) => {
                let d = x.nrows();
                let mut g = CMatrix::zeros(d, d);
                for &(a, b, v) in t {
                    let col = x.column(a) * v;
                    let row = s_inv.row(b);
                    g.ger(c(1.0), &col, &row.transpose(), c(1.0));
                }
                g
            }
        }
    }

    fn frobenius(&self) -> f64 {
        match self {
            Term::Dense(a) => a.norm(),
            Term::Sparse(t) => t.iter().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt(),
        }
    }
}

/// One matrix inequality `C + Σ_i y_i A_i ⪰ 0`.
#[derive(Clone, Debug)]
pub struct LmiBlock {
    pub constant: CMatrix,
    pub terms: Vec<(usize, Term)>,
}

impl LmiBlock {
    pub fn new(constant: CMatrix) -> Self {
        Self {
            constant,
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn push(&mut self, var: usize, term: Term) {
        self.terms.push((var, term));
    }

    /// `F(y)` for this block.
    pub fn evaluate(&self, y: &[f64]) -> CMatrix {
        let mut m = self.constant.clone();
        for (i, t) in &self.terms {
            t.add_scaled_to(&mut m, y[*i]);
        }
        m
    }
}

#[derive(Clone, Debug, Default)]
pub struct LmiProblem {
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
}

const RETRY_STEP_FRACTIONS: [f64; 2] = [0.9, 0.8];

#[derive(Clone, Copy, Debug)]
pub struct SdpSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Relative gap and infeasibility accepted when progress stalls first.
    pub stall_gap: f64,
    pub step_fraction: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-9,
            feas_tol: 1e-9,
            max_iterations: 200,
            stall_gap: 1e-8,
            step_fraction: 0.97,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Primal objective `cᵀy`.
    pub value: f64,
    /// Dual objective `−Σ Tr(C_k X_k)`.
    pub dual_value: f64,
    pub gap: f64,
    pub y: Vec<f64>,
    /// Primal certificate: the blocks `F_k(y)`.
    pub slack: Vec<CMatrix>,
    /// Dual certificate `X_k`.
    pub dual: Vec<CMatrix>,
    pub iterations: usize,
}

impl LmiProblem {
    pub fn new(vars: usize) -> Self {
        Self {
            objective: vec![0.0; vars],
            blocks: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            let d = b.dim();
            if b.constant.ncols() != d {
                return Err(Error::Dimension(format!(
                    "block {k} constant is not square"
                )));
            }
            let dev = hermiticity_deviation(&b.constant);
            if dev > TOL_HERM {
                return Err(Error::NotHermitian(dev));
            }
            for (i, t) in &b.terms {
                if *i >= self.vars() {
                    return Err(Error::Dimension(format!(
                        "block {k} references variable {i}"
                    )));
                }
                if let Term::Dense(a) = t {
                    if a.nrows() != d || a.ncols() != d {
                        return Err(Error::Dimension(format!(
                            "block {k} term {i} has wrong shape"
                        )));
                    }
                }
                if let Term::Sparse(tr) = t {
                    if tr.iter().any(|&(r, s, _)| r >= d || s >= d) {
                        return Err(Error::Dimension(format!("block {k} term {i} out of range")));
                    }
                }
                let dev = hermiticity_deviation(&t.to_dense(d));
                if dev > TOL_HERM {
                    return Err(Error::NotHermitian(dev));
                }
            }
        }
        Ok(())
    }

    /// Solves with the default settings, retrying with shorter steps when
    /// the iteration stalls short of the tolerances.
    pub fn solve(&self) -> Result<SdpSolution> {
        let default = SdpSettings::default();
        let mut result = self.solve_with(&default);
        for step_fraction in RETRY_STEP_FRACTIONS {
            match result {
                Err(Error::Sdp { .. }) => {
                    result = self.solve_with(&SdpSettings {
                        step_fraction,
                        ..default
                    })
                }
                _ => break,
            }
        }
        result
    }

    pub fn solve_with(&self, settings: &SdpSettings) -> Result<SdpSolution> {
        self.validate()?;
        Solver::new(self).run(settings)
    }
}

struct Solver<'a> {
    p: &'a LmiProblem,
    patterns: Vec<Option<Pattern>>,
    y: Vec<f64>,
    x: Vec<CMatrix>,
    s: Vec<CMatrix>,
    total_dim: f64,
}

/// Entries of a block touched by its sparse terms. `Tr(A_i G)` only reads
/// `G` at the transposed positions of `A_i`, so the Schur products
/// `G_j = X A_j S⁻¹` are evaluated there alone.
struct Pattern {
    /// `(row, col)` of `G` that some term reads.
    positions: Vec<(usize, usize)>,
    /// Per term: `(position index, value)` for each entry `(a, b, v)`, at `(b, a)`.
    reads: Vec<Vec<(usize, C64)>>,
}

impl Pattern {
    fn of(block: &LmiBlock) -> Option<Self> {
        let mut index = std::collections::HashMap::new();
        let mut positions = Vec::new();
        let mut reads = Vec::with_capacity(block.terms.len());
        for (_, t) in &block.terms {
            let Term::Sparse(entries) = t else {
                return None;
            };
            let r = entries
                .iter()
                .map(|&(a, b, v)| {
                    let p = *index.entry((b, a)).or_insert_with(|| {
                        positions.push((b, a));
                        positions.len() - 1
                    });
                    (p, v)
                })
                .collect();
            reads.push(r);
        }
        Some(Self { positions, reads })
    }
}

struct Direction {
    dy: Vec<f64>,
    dx: Vec<CMatrix>,
    ds: Vec<CMatrix>,
}

fn identity(d: usize, scale: f64) -> CMatrix {
    CMatrix::from_diagonal_element(d, d, c(scale))
}

fn inverse_pd(m: &CMatrix) -> Option<CMatrix> {
    let chol = hermitize(m).cholesky()?;
    Some(hermitize(&chol.inverse()))
}

/// Largest `α` with `M + α D ⪰ 0`, for `M ≻ 0`.
fn max_step(m: &CMatrix, d: &CMatrix) -> f64 {
    let Some(chol) = hermitize(m).cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(l_inv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let q = &l_inv * d * l_inv.adjoint();
    let lo = eigvalsh(&q).first().copied().unwrap_or(0.0);
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

impl<'a> Solver<'a> {
    fn new(p: &'a LmiProblem) -> Self {
        let norm_c = p
            .blocks
            .iter()
            .map(|b| b.constant.norm())
            .fold(0.0, f64::max);
        let norm_a = p
            .blocks
            .iter()
            .flat_map(|b| b.terms.iter().map(|(_, t)| t.frobenius()))
            .fold(0.0, f64::max);
        let total: usize = p.blocks.iter().map(LmiBlock::dim).sum();
        let obj = p
            .objective
            .iter()
            .map(|v| (1.0 + v.abs()) / (1.0 + norm_a))
            .fold(0.0, f64::max);
        let root = (total as f64).sqrt();
        let xi = 10f64.max(root).max(total as f64 * obj);
        let eta = 10f64.max(root).max(norm_a).max(norm_c);
        Self {
            p,
            patterns: p.blocks.iter().map(Pattern::of).collect(),
            y: vec![0.0; p.vars()],
            x: p.blocks.iter().map(|b| identity(b.dim(), xi)).collect(),
            s: p.blocks.iter().map(|b| identity(b.dim(), eta)).collect(),
            total_dim: total.max(1) as f64,
        }
    }

    fn primal_residuals(&self) -> Vec<CMatrix> {
        self.p
            .blocks
            .iter()
            .zip(&self.s)
            .map(|(b, s)| b.evaluate(&self.y) - s)
            .collect()
    }

    fn dual_residual(&self) -> Vec<f64> {
        let mut r = self.p.objective.clone();
        for (b, x) in self.p.blocks.iter().zip(&self.x) {
            for (i, t) in &b.terms {
                r[*i] -= t.re_trace_with(x);
            }
        }
        r
    }

    fn mu(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.s)
            .map(|(x, s)| re_trace_product(x, s))
            .sum::<f64>()
            / self.total_dim
    }

    fn objectives(&self) -> (f64, f64) {
        let primal = self
            .p
            .objective
            .iter()
            .zip(&self.y)
            .map(|(a, b)| a * b)
            .sum();
        let dual = -self
            .p
            .blocks
            .iter()
            .zip(&self.x)
            .map(|(b, x)| re_trace_product(&b.constant, x))
            .sum::<f64>();
        (primal, dual)
    }

    /// Schur complement `M_ij = Re Tr(A_i X A_j S⁻¹)`.
    fn schur(&self, s_inv: &[CMatrix]) -> DMatrix<f64> {
        let n = self.p.vars();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (((b, x), si), pattern) in self
            .p
            .blocks
            .iter()
            .zip(&self.x)
            .zip(s_inv)
            .zip(&self.patterns)
        {
            let columns: Vec<Vec<(usize, f64)>> = match pattern {
                Some(pat) => b
                    .terms
                    .par_iter()
                    .map(|(_, tj)| {
                        let Term::Sparse(entries) = tj else {
                            unreachable!("pattern blocks are sparse")
                        };
                        let g: Vec<C64> = pat
                            .positions
                            .iter()
                            .map(|&(r, col)| {
                                entries
                                    .iter()
                                    .map(|&(a, bb, v)| x[(r, a)] * v * si[(bb, col)])
                                    .sum()
                            })
                            .collect();
                        b.terms
                            .iter()
                            .zip(&pat.reads)
                            .map(|((i, _), reads)| {
                                (*i, reads.iter().map(|&(p, v)| (v * g[p]).re).sum())
                            })
                            .collect()
                    })
                    .collect(),
                None => b
                    .terms
                    .par_iter()
                    .map(|(_, tj)| {
                        let g = tj.sandwich(x, si);
                        b.terms
                            .iter()
                            .map(|(i, ti)| (*i, ti.re_trace_with(&g)))
                            .collect()
                    })
                    .collect(),
            };
            for ((j, _), col) in b.terms.iter().zip(columns) {
                for (i, v) in col {
                    m[(i, *j)] += v;
                }
            }
        }
        (&m + m.transpose()) * 0.5
    }

    fn factor(m: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let scale = m
            .diagonal()
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1e-300);
        for shift in [0.0, 1e-14, 1e-12, 1e-10] {
            let mut t = m.clone();
            for i in 0..t.nrows() {
                t[(i, i)] += shift * scale;
            }
            if let Some(ch) = t.cholesky() {
                return Some(ch);
            }
        }
        None
    }

    /// Solves the Newton system for target `mu_target` with optional
    /// second-order correction `dX_a dS_a`.
    fn direction(
        &self,
        chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
        s_inv: &[CMatrix],
        rp: &[CMatrix],
        mu_target: f64,
        corr: Option<&Direction>,
    ) -> Direction {
        let blocks = &self.p.blocks;
        // H' = μ S⁻¹ − dX_a dS_a S⁻¹
        let h_prime: Vec<CMatrix> = (0..blocks.len())
            .map(|k| {
                let mut h = &s_inv[k] * c(mu_target);
                if let Some(a) = corr {
                    h -= &a.dx[k] * &a.ds[k] * &s_inv[k];
                }
                h
            })
            .collect();
        let mut rhs = DVector::from_iterator(self.p.vars(), self.p.objective.iter().map(|v| -v));
        for k in 0..blocks.len() {
            let h = &h_prime[k] - &self.x[k] * &rp[k] * &s_inv[k];
            for (i, t) in &blocks[k].terms {
                rhs[*i] += t.re_trace_with(&h);
            }
        }
        let dy = chol.solve(&rhs);
        let dy: Vec<f64> = dy.iter().copied().collect();
        let mut ds = Vec::with_capacity(blocks.len());
        let mut dx = Vec::with_capacity(blocks.len());
        for k in 0..blocks.len() {
            let mut d = rp[k].clone();
            for (i, t) in &blocks[k].terms {
                t.add_scaled_to(&mut d, dy[*i]);
            }
            let d = hermitize(&d);
            let step = &h_prime[k] - &self.x[k] - &self.x[k] * &d * &s_inv[k];
            dx.push(hermitize(&step));
            ds.push(d);
        }
        Direction { dy, dx, ds }
    }

    fn step_lengths(&self, dir: &Direction) -> (f64, f64) {
        let ap = self
            .x
            .iter()
            .zip(&dir.dx)
            .map(|(x, d)| max_step(x, d))
            .fold(f64::INFINITY, f64::min);
        let ad = self
            .s
            .iter()
            .zip(&dir.ds)
            .map(|(s, d)| max_step(s, d))
            .fold(f64::INFINITY, f64::min);
        (ap, ad)
    }

    fn run(mut self, settings: &SdpSettings) -> Result<SdpSolution> {
        let norm_c = 1.0
            + self
                .p
                .blocks
                .iter()
                .map(|b| b.constant.norm())
                .fold(0.0, f64::max);
        let norm_obj = 1.0 + self.p.objective.iter().map(|v| v * v).sum::<f64>().sqrt();
        // best iterate by max(relative gap, primal and dual infeasibility)
        let mut best: Option<(f64, SdpSolution)> = None;
        let mut since_best = 0;
        let mut iterations = 0;
        let mut reason = String::from("iteration limit reached");

        while iterations < settings.max_iterations {
            let rp = self.primal_residuals();
            let rd = self.dual_residual();
            let (primal, dual) = self.objectives();
            let gap = (primal - dual).abs();
            let feas_p = rp.iter().map(|r| r.norm()).fold(0.0, f64::max) / norm_c;
            let feas_d = rd.iter().map(|v| v * v).sum::<f64>().sqrt() / norm_obj;
            let scale = 1.0f64.max(primal.abs()).max(dual.abs());
            if !gap.is_finite() || !primal.is_finite() {
                reason = "non-finite iterate".into();
                break;
            }
            let merit = (gap / scale).max(feas_p).max(feas_d);
            if best.as_ref().is_none_or(|(m, _)| merit < *m) {
                best = Some((merit, self.snapshot(primal, dual, gap, iterations)));
                since_best = 0;
            } else {
                since_best += 1;
            }
            if feas_p <= settings.feas_tol
                && feas_d <= settings.feas_tol
                && gap <= settings.gap_tol * scale
            {
                return Ok(self.snapshot(primal, dual, gap, iterations));
            }
            if since_best > 15 {
                reason = "no progress".into();
                break;
            }

            let Some(s_inv) = self.s.iter().map(inverse_pd).collect::<Option<Vec<_>>>() else {
                reason = "slack lost positive definiteness".into();
                break;
            };
            let Some(chol) = Self::factor(self.schur(&s_inv)) else {
                reason = "singular Schur complement".into();
                break;
            };
            let mu = self.mu();
            let pred = self.direction(&chol, &s_inv, &rp, 0.0, None);
            let (ap, ad) = self.step_lengths(&pred);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mut mu_aff = 0.0;
            for k in 0..self.x.len() {
                let xa = &self.x[k] + &pred.dx[k] * c(ap);
                let sa = &self.s[k] + &pred.ds[k] * c(ad);
                mu_aff += re_trace_product(&xa, &sa);
            }
            mu_aff /= self.total_dim;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
            let dir = self.direction(&chol, &s_inv, &rp, sigma * mu, Some(&pred));
            let (ap, ad) = self.step_lengths(&dir);
            let ap = (settings.step_fraction * ap).min(1.0);
            let ad = (settings.step_fraction * ad).min(1.0);

            for k in 0..self.x.len() {
                self.x[k] = hermitize(&(&self.x[k] + &dir.dx[k] * c(ap)));
                self.s[k] = hermitize(&(&self.s[k] + &dir.ds[k] * c(ad)));
            }
            for (y, d) in self.y.iter_mut().zip(&dir.dy) {
                *y += ad * d;
            }
            iterations += 1;
        }

        match best {
            Some((merit, sol)) if merit <= settings.stall_gap => Ok(sol),
            other => Err(Error::Sdp {
                reason,
                best_gap: other.map_or(f64::INFINITY, |(_, s)| s.gap),
                iterations,
            }),
        }
    }

    fn snapshot(&self, primal: f64, dual: f64, gap: f64, iterations: usize) -> SdpSolution {
        SdpSolution {
            value: primal,
            dual_value: dual,
            gap,
            y: self.y.clone(),
            slack: self.p.blocks.iter().map(|b| b.evaluate(&self.y)).collect(),
            dual: self.x.clone(),
            iterations,
        }
    }
}

/// Real coordinates of a `d×d` Hermitian matrix: `d` diagonal entries, then
/// real and imaginary parts of each upper off-diagonal entry.
#[derive(Clone, Copy, Debug)]
pub struct HermitianBasis {
    pub dim: usize,
}

impl HermitianBasis {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn len(&self) -> usize {
        self.dim * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// Nonzero entries of basis element `p`.
    pub fn element(&self, p: usize) -> Vec<(usize, usize, C64)> {
        let d = self.dim;
        if p < d {
            return vec![(p, p, c(1.0))];
        }
        let q = (p - d) / 2;
        let imag = (p - d) % 2 == 1;
        // q-th pair (a, b) with a < b in row-major order
        let mut a = 0;
        let mut rest = q;
        while rest >= d - 1 - a {
            rest -= d - 1 - a;
            a += 1;
        }
        let b = a + 1 + rest;
        if imag {
            vec![(a, b, C64::new(0.0, 1.0)), (b, a, C64::new(0.0, -1.0))]
        } else {
            vec![(a, b, c(1.0)), (b, a, c(1.0))]
        }
    }

    /// Coordinates `Re Tr(B_p M)` of `M` against each basis element.
    pub fn pairings(&self, m: &CMatrix) -> Vec<f64> {
        (0..self.len())
            .map(|p| {
                self.element(p)
                    .iter()
                    .map(|&(a, b, v)| (v * m[(b, a)]).re)
                    .sum()
            })
            .collect()
    }

    pub fn assemble(&self, y: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (p, &v) in y.iter().enumerate().take(self.len()) {
            for (a, b, e) in self.element(p) {
                m[(a, b)] += e * v;
            }
        }
        m
    }

    /// Traceless basis: off-diagonal elements plus `E_aa − E_{d−1,d−1}`.
    pub fn traceless_element(&self, p: usize) -> Vec<(usize, usize, C64)> {
        let d = self.dim;
        if p < d - 1 {
            vec![(p, p, c(1.0)), (d - 1, d - 1, c(-1.0))]
        } else {
            self.element(p + 1)
        }
    }

    pub fn traceless_len(&self) -> usize {
        self.len() - 1
    }
}

/// Places the entries of `entries` at an offset inside a larger block,
/// tensored on the left with the identity of dimension `left`.
pub fn embed(
    entries: &[(usize, usize, C64)],
    left: usize,
    inner: usize,
    offset: usize,
) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::with_capacity(entries.len() * left);
    for u in 0..left {
        for &(a, b, v) in entries {
            out.push((offset + u * inner + a, offset + u * inner + b, v));
        }
    }
    out
}
