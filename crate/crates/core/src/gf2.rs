//! Linear algebra over GF(2) and the linear hash families used for privacy
//! amplification and syndrome coding.
//!
//! Bit order is fixed once: bit 0 of a string is its leftmost character and
//! the most significant bit of the packed word. Row `i` of a hash matrix
//! produces output bit `i`. A vector `x ∈ {0,1}^n` is packed the same way, so
//! its integer value equals the computational-basis index of an `n`-qubit
//! register holding `x`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of hash evaluations an enumeration may perform.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Widest supported bit string; rows are packed into one machine word.
pub const MAX_COLS: usize = 64;

fn parity(word: u64) -> u64 {
    u64::from(word.count_ones() & 1)
}

fn low_mask(bits: usize) -> u64 {
    if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Dense binary matrix, one packed word per row.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// Builds a matrix from row-major entries, each 0 or 1.
    pub fn new(rows: usize, cols: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::BitMatrix(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                bits.len()
            )));
        }
        let mut data = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut word = 0u64;
            for &b in &bits[r * cols..(r + 1) * cols] {
                if b > 1 {
                    return Err(Error::BitMatrix(format!("entry {b} is not a bit")));
                }
                word = (word << 1) | u64::from(b);
            }
            data.push(word);
        }
        Self::from_words(cols, data)
    }

    /// Builds a matrix from packed row words.
    pub fn from_words(cols: usize, data: Vec<u64>) -> Result<Self> {
        if data.is_empty() || cols == 0 {
            return Err(Error::BitMatrix(
                "a bit matrix needs at least one row and one column".into(),
            ));
        }
        if cols > MAX_COLS {
            return Err(Error::BitMatrix(format!(
                "{cols} columns exceed the {MAX_COLS}-bit limit"
            )));
        }
        if let Some(w) = data.iter().find(|w| **w & !low_mask(cols) != 0) {
            return Err(Error::BitMatrix(format!(
                "row word {w:#x} has bits beyond column {cols}"
            )));
        }
        Ok(Self {
            rows: data.len(),
            cols,
            data,
        })
    }

    /// Parses rows written as strings of `0`/`1`, e.g. `["110", "011"]`.
    pub fn parse_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::BitMatrix("rows of unequal length".into()));
            }
            let mut word = 0u64;
            for ch in row.chars() {
                let bit = match ch {
                    '0' => 0,
                    '1' => 1,
                    other => {
                        return Err(Error::BitMatrix(format!("unexpected character {other:?}")))
                    }
                };
                word = (word << 1) | bit;
            }
            data.push(word);
        }
        Self::from_words(cols, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_words(n, (0..n).map(|i| 1u64 << (n - 1 - i)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        (self.data[row] >> (self.cols - 1 - col)) & 1 == 1
    }

    /// Packed word of row `i`; column 0 is the most significant bit.
    pub fn row_word(&self, i: usize) -> u64 {
        self.data[i]
    }

    pub fn row_words(&self) -> &[u64] {
        &self.data
    }

    /// Row echelon form reduced above and below each pivot. Returns the
    /// nonzero rows and the pivot column of each.
    pub fn rref(&self) -> (Vec<u64>, Vec<usize>) {
        let mut rows = self.data.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.cols {
            let mask = 1u64 << (self.cols - 1 - col);
            let Some(p) = (r..rows.len()).find(|&i| rows[i] & mask != 0) else {
                continue;
            };
            rows.swap(r, p);
            let pivot_row = rows[r];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && *row & mask != 0 {
                    *row ^= pivot_row;
                }
            }
            pivots.push(col);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        rows.truncate(r);
        (rows, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Canonical basis of `{x : M xᵀ = 0}`, one vector per free column in
    /// increasing column order. `None` when the kernel is trivial.
    pub fn kernel_basis(&self) -> Option<BitMatrix> {
        let (reduced, pivots) = self.rref();
        let bit = |c: usize| 1u64 << (self.cols - 1 - c);
        let basis: Vec<u64> = (0..self.cols)
            .filter(|c| !pivots.contains(c))
            .map(|free| {
                let mut v = bit(free);
                for (row, &p) in reduced.iter().zip(&pivots) {
                    if row & bit(free) != 0 {
                        v |= bit(p);
                    }
                }
                v
            })
            .collect();
        if basis.is_empty() {
            None
        } else {
            Some(Self::from_words(self.cols, basis).expect("kernel vectors fit the column count"))
        }
    }

    /// Computes `M xᵀ` with output bit `i` at position `rows-1-i`.
    pub fn apply(&self, x: u64) -> u64 {
        self.data
            .iter()
            .fold(0u64, |acc, row| (acc << 1) | parity(row & x))
    }

    /// True when `self · otherᵀ = 0`.
    pub fn is_orthogonal_to(&self, other: &BitMatrix) -> bool {
        self.cols == other.cols
            && self
                .data
                .iter()
                .all(|a| other.data.iter().all(|b| parity(a & b) == 0))
    }

    /// Whether `x` lies in the row space.
    pub fn row_space_contains(&self, x: u64) -> bool {
        let (reduced, pivots) = self.rref();
        let mut rest = x;
        for (row, &p) in reduced.iter().zip(&pivots) {
            if rest & (1u64 << (self.cols - 1 - p)) != 0 {
                rest ^= row;
            }
        }
        rest == 0
    }

    pub fn to_hex_rows(&self) -> Vec<String> {
        let width = self.cols.div_ceil(4);
        self.data.iter().map(|w| format!("{w:0width$x}")).collect()
    }

    pub fn from_hex_rows<S: AsRef<str>>(cols: usize, rows: &[S]) -> Result<Self> {
        let data = rows
            .iter()
            .map(|r| {
                u64::from_str_radix(r.as_ref(), 16)
                    .map_err(|e| Error::Format(format!("bad hex row {:?}: {e}", r.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_words(cols, data)
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.data.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{:0width$b}", w, width = self.cols)?;
        }
        Ok(())
    }
}

/// A linear map `{0,1}^n → {0,1}^m` given by its `m×n` matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearHash {
    matrix: BitMatrix,
    surjective: bool,
}

impl LinearHash {
    pub fn new(matrix: BitMatrix) -> Self {
        let surjective = matrix.rank() == matrix.rows();
        Self { matrix, surjective }
    }

    pub fn parse_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        Ok(Self::new(BitMatrix::parse_rows(rows)?))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self::new(BitMatrix::identity(n)?))
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    /// Input length.
    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    /// Output length.
    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_surjective(&self) -> bool {
        self.surjective
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn apply(&self, x: u64) -> u64 {
        self.matrix.apply(x)
    }

    /// The canonical dual `g` with `f gᵀ = 0`, `g` of full rank `n − m`.
    pub fn dual_of(&self) -> Result<LinearHash> {
        if !self.surjective {
            return Err(Error::NotSurjective {
                rows: self.m(),
                rank: self.rank(),
            });
        }
        if self.m() == self.n() {
            return Err(Error::NoNontrivialDual { n: self.n() });
        }
        let kernel = self
            .matrix
            .kernel_basis()
            .expect("a surjective map with m < n has a nontrivial kernel");
        Ok(LinearHash::new(kernel))
    }

    /// Drops linearly dependent output rows, keeping the first maximal
    /// independent set. `None` when every row is zero.
    pub fn make_surjective(&self) -> Option<LinearHash> {
        if self.surjective {
            return Some(self.clone());
        }
        let mut kept: Vec<u64> = Vec::new();
        for &row in self.matrix.row_words() {
            let mut candidate = kept.clone();
            candidate.push(row);
            let m =
                BitMatrix::from_words(self.n(), candidate).expect("rows share the column count");
            if m.rank() == m.rows() {
                kept.push(row);
            }
        }
        if kept.is_empty() {
            return None;
        }
        Some(LinearHash::new(
            BitMatrix::from_words(self.n(), kept).expect("rows share the column count"),
        ))
    }

    /// Dual pair predicate: both surjective, same input length, `f gᵀ = 0`,
    /// output lengths summing to `n`.
    pub fn is_dual_to(&self, g: &LinearHash) -> bool {
        self.surjective
            && g.surjective
            && self.n() == g.n()
            && self.m() + g.m() == self.n()
            && self.matrix.is_orthogonal_to(&g.matrix)
    }
}

impl fmt::Display for LinearHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.matrix.fmt(f)
    }
}

/// A member of a family after surjective reduction, paired with its dual.
///
/// `f = None` means the member was identically zero (it outputs nothing);
/// `g = None` means the reduced `f` is a bijection, so no syndrome is sent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPair {
    pub f: Option<LinearHash>,
    pub g: Option<LinearHash>,
}

impl DualPair {
    /// Reduces `f` to a surjective map and pairs it with its canonical dual.
    pub fn from_member(f: &LinearHash) -> Result<Self> {
        let n = f.n();
        match f.make_surjective() {
            None => Ok(Self {
                f: None,
                g: Some(LinearHash::identity(n)?),
            }),
            Some(reduced) if reduced.m() == n => Ok(Self {
                f: Some(reduced),
                g: None,
            }),
            Some(reduced) => {
                let g = reduced.dual_of()?;
                Ok(Self {
                    f: Some(reduced),
                    g: Some(g),
                })
            }
        }
    }

    /// Output length of the reduced `f`.
    pub fn key_bits(&self) -> usize {
        self.f.as_ref().map_or(0, LinearHash::m)
    }
}

/// A finite, weighted set of linear hash functions with common `(n, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FamilyDoc", try_from = "FamilyDoc")]
pub struct HashFamily {
    n: usize,
    m: usize,
    members: Vec<LinearHash>,
    probs: Vec<BigRational>,
}

fn check_cap(needed: u128, cap: u128) -> Result<()> {
    if needed > cap {
        Err(Error::EnumerationCap { needed, cap })
    } else {
        Ok(())
    }
}

fn pow2(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

fn rational_pow2(exp: i64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(2));
    if exp >= 0 {
        num_traits::pow(base, exp as usize)
    } else {
        num_traits::pow(base, (-exp) as usize).recip()
    }
}

impl HashFamily {
    pub fn new(
        n: usize,
        m: usize,
        members: Vec<LinearHash>,
        probs: Vec<BigRational>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Family("family has no members".into()));
        }
        if members.len() != probs.len() {
            return Err(Error::Family(format!(
                "{} members but {} probabilities",
                members.len(),
                probs.len()
            )));
        }
        if let Some((i, f)) = members
            .iter()
            .enumerate()
            .find(|(_, f)| f.n() != n || f.m() != m)
        {
            return Err(Error::Family(format!(
                "member {i} maps {} -> {} bits, family is {n} -> {m}",
                f.n(),
                f.m()
            )));
        }
        if let Some(p) = probs.iter().find(|p| p.is_negative()) {
            return Err(Error::Family(format!("negative probability {p}")));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::Family(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            n,
            m,
            members,
            probs,
        })
    }

    pub fn uniform(n: usize, m: usize, members: Vec<LinearHash>) -> Result<Self> {
        let k = members.len();
        if k == 0 {
            return Err(Error::Family("family has no members".into()));
        }
        let p = BigRational::new(BigInt::one(), BigInt::from(k));
        Self::new(n, m, members, vec![p; k])
    }

    /// Every `m×n` binary matrix with equal weight.
    pub fn all_linear(n: usize, m: usize) -> Result<Self> {
        Self::all_linear_capped(n, m, DEFAULT_ENUMERATION_CAP)
    }

    pub fn all_linear_capped(n: usize, m: usize, cap: u128) -> Result<Self> {
        check_dims(n, m)?;
        check_cap(pow2(m * n), cap)?;
        let members = (0..(1u64 << (m * n)))
            .map(|code| {
                let rows = (0..m)
                    .map(|i| (code >> ((m - 1 - i) * n)) & low_mask(n))
                    .collect();
                LinearHash::new(BitMatrix::from_words(n, rows).expect("enumerated rows fit"))
            })
            .collect();
        Self::uniform(n, m, members)
    }

    /// Every `m×n` Toeplitz matrix with equal weight; the seed `s` of
    /// `n+m−1` bits fixes entry `(i, j) = s[j − i + m − 1]`.
    pub fn toeplitz(n: usize, m: usize) -> Result<Self> {
        Self::toeplitz_capped(n, m, DEFAULT_ENUMERATION_CAP)
    }

    pub fn toeplitz_capped(n: usize, m: usize, cap: u128) -> Result<Self> {
        check_dims(n, m)?;
        if m > n {
            return Err(Error::Family(format!(
                "Toeplitz family needs m <= n, got m={m}, n={n}"
            )));
        }
        let seed_bits = n + m - 1;
        check_cap(pow2(seed_bits), cap)?;
        let members = (0..(1u64 << seed_bits))
            .map(|seed| {
                let seed_bit = |k: usize| (seed >> (seed_bits - 1 - k)) & 1;
                let rows = (0..m)
                    .map(|i| (0..n).fold(0u64, |acc, j| (acc << 1) | seed_bit(j + m - 1 - i)))
                    .collect();
                LinearHash::new(BitMatrix::from_words(n, rows).expect("Toeplitz rows fit"))
            })
            .collect();
        Self::uniform(n, m, members)
    }

    /// Every surjective `m×n` matrix with equal weight.
    pub fn full_rank(n: usize, m: usize) -> Result<Self> {
        Self::all_linear(n, m)?.surjective_part()
    }

    /// The family conditioned on its surjective members.
    pub fn surjective_part(&self) -> Result<Self> {
        let (members, probs): (Vec<_>, Vec<_>) = self
            .iter()
            .filter(|(f, _)| f.is_surjective())
            .map(|(f, p)| (f.clone(), p.clone()))
            .unzip();
        let total: BigRational = probs.iter().sum();
        if total.is_zero() {
            return Err(Error::Family("no surjective member carries weight".into()));
        }
        let probs = probs.into_iter().map(|p| p / &total).collect();
        Self::new(self.n, self.m, members, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[LinearHash] {
        &self.members
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LinearHash, &BigRational)> {
        self.members.iter().zip(&self.probs)
    }

    pub fn all_surjective(&self) -> bool {
        self.members.iter().all(LinearHash::is_surjective)
    }

    /// Member-by-member dual family with the same weights.
    pub fn dual(&self) -> Result<HashFamily> {
        let members = self
            .members
            .iter()
            .enumerate()
            .map(|(index, f)| {
                f.dual_of().map_err(|e| Error::FamilyMember {
                    index,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, self.n - self.m, members, self.probs.clone())
    }

    /// Surjective reduction of every member, paired with its dual. Unlike
    /// [`HashFamily::dual`] this accepts rank-deficient members.
    pub fn dual_pairs(&self) -> Result<Vec<(DualPair, BigRational)>> {
        self.iter()
            .enumerate()
            .map(|(index, (f, p))| {
                DualPair::from_member(f)
                    .map(|pair| (pair, p.clone()))
                    .map_err(|e| Error::FamilyMember {
                        index,
                        source: Box::new(e),
                    })
            })
            .collect()
    }

    /// `2^m · max_{x≠0} Pr[F(x) = 0]`, exactly.
    pub fn delta_universal(&self, cap: u128) -> Result<BigRational> {
        check_cap((self.len() as u128).saturating_mul(pow2(self.n)), cap)?;
        let max = max_zero_probability(&self.members, &self.probs, self.n);
        Ok(max * rational_pow2(self.m as i64))
    }

    pub fn certify(&self) -> Result<FamilyCertificate> {
        self.certify_capped(DEFAULT_ENUMERATION_CAP)
    }

    /// Exhaustive certification of the universality parameters. The dual
    /// parameter is only defined when every member is surjective and `m < n`.
    pub fn certify_capped(&self, cap: u128) -> Result<FamilyCertificate> {
        let delta_universal = self.delta_universal(cap)?;
        let lower = FamilyCertificate::universal_lower_bound(self.n, self.m);
        if delta_universal < lower {
            return Err(Error::Certificate(format!(
                "delta_universal {delta_universal} below the counting bound {lower}"
            )));
        }
        let delta_dual_universal = if self.all_surjective() && self.m < self.n {
            let dual = self.dual()?;
            let delta_dual = dual.delta_universal(cap)?;
            let lower = FamilyCertificate::dual_lower_bound(self.n, self.m);
            if delta_dual < lower {
                return Err(Error::Certificate(format!(
                    "delta_dual_universal {delta_dual} below the counting bound {lower}"
                )));
            }
            let bound = conversion_bound(self.n, self.m, &delta_universal);
            if delta_dual > bound {
                return Err(Error::Certificate(format!(
                    "dual family is {delta_dual}-almost universal, above the conversion bound {bound}"
                )));
            }
            let bound = conversion_bound(self.n, self.n - self.m, &delta_dual);
            if delta_universal > bound {
                return Err(Error::Certificate(format!(
                    "family is {delta_universal}-almost universal, above the conversion bound {bound}"
                )));
            }
            Some(delta_dual)
        } else {
            None
        };
        Ok(FamilyCertificate {
            delta_universal,
            delta_dual_universal,
            family_size: self.len(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&FamilyDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<FamilyDoc>(text)?.try_into()
    }
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 || n > MAX_COLS {
        Err(Error::Family(format!(
            "unsupported dimensions n={n}, m={m}"
        )))
    } else {
        Ok(())
    }
}

fn max_zero_probability(members: &[LinearHash], probs: &[BigRational], n: usize) -> BigRational {
    // common denominator keeps the inner loop on integers
    let denom = probs
        .iter()
        .fold(BigInt::one(), |acc, p| num_integer_lcm(&acc, p.denom()));
    let weights: Vec<BigInt> = probs
        .iter()
        .map(|p| p.numer() * (&denom / p.denom()))
        .collect();
    let small: Option<Vec<u128>> = weights.iter().map(|w| w.to_u128()).collect();
    let best = match small {
        Some(w) if w.iter().try_fold(0u128, |a, b| a.checked_add(*b)).is_some() => {
            let mut best = 0u128;
            for x in 1..(1u64 << n) {
                let hits: u128 = members
                    .iter()
                    .zip(&w)
                    .filter(|(f, _)| f.apply(x) == 0)
                    .map(|(_, w)| *w)
                    .sum();
                best = best.max(hits);
            }
            BigInt::from(best)
        }
        _ => {
            let mut best = BigInt::zero();
            for x in 1..(1u64 << n) {
                let hits: BigInt = members
                    .iter()
                    .zip(&weights)
                    .filter(|(f, _)| f.apply(x) == 0)
                    .map(|(_, w)| w.clone())
                    .sum();
                if hits > best {
                    best = hits;
                }
            }
            best
        }
    };
    BigRational::new(best, denom)
}

fn num_integer_lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

/// `2(1 − 2^{−m}δ) + (δ − 1)2^{n−m}`: if a linear family with `m` output bits
/// is δ-almost universal₂, its dual family is almost universal₂ with at most
/// this parameter.
pub fn conversion_bound(n: usize, m: usize, delta: &BigRational) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    let one = BigRational::one();
    two * (&one - rational_pow2(-(m as i64)) * delta)
        + (delta - &one) * rational_pow2((n - m) as i64)
}

/// Exact universality parameters of an enumerated family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyCertificate {
    pub delta_universal: BigRational,
    /// `None` when the family has rank-deficient members or `m = n`.
    pub delta_dual_universal: Option<BigRational>,
    pub family_size: usize,
}

impl FamilyCertificate {
    /// `(2ⁿ − 2ᵐ)/(2ⁿ − 1)`
    pub fn universal_lower_bound(n: usize, m: usize) -> BigRational {
        let num = rational_pow2(n as i64) - rational_pow2(m as i64);
        num / (rational_pow2(n as i64) - BigRational::one())
    }

    /// `(2ⁿ − 2^{n−m})/(2ⁿ − 1)`
    pub fn dual_lower_bound(n: usize, m: usize) -> BigRational {
        Self::universal_lower_bound(n, n - m)
    }

    pub fn delta_universal_f64(&self) -> f64 {
        rational_to_f64(&self.delta_universal)
    }

    pub fn delta_dual_universal_f64(&self) -> Option<f64> {
        self.delta_dual_universal.as_ref().map(rational_to_f64)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl Serialize for FamilyCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateDoc {
            delta_universal: self.delta_universal.to_string(),
            delta_dual_universal: self.delta_dual_universal.as_ref().map(ToString::to_string),
            family_size: self.family_size,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FamilyCertificate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = CertificateDoc::deserialize(d)?;
        let parse = |s: &str| s.parse::<BigRational>().map_err(D::Error::custom);
        Ok(Self {
            delta_universal: parse(&doc.delta_universal)?,
            delta_dual_universal: doc.delta_dual_universal.as_deref().map(parse).transpose()?,
            family_size: doc.family_size,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateDoc {
    delta_universal: String,
    delta_dual_universal: Option<String>,
    family_size: usize,
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    n: usize,
    m: usize,
    members: Vec<Vec<String>>,
    probs: Vec<String>,
}

impl From<&HashFamily> for FamilyDoc {
    fn from(fam: &HashFamily) -> Self {
        Self {
            n: fam.n,
            m: fam.m,
            members: fam.members.iter().map(|f| f.matrix.to_hex_rows()).collect(),
            probs: fam.probs.iter().map(ToString::to_string).collect(),
        }
    }
}

impl From<HashFamily> for FamilyDoc {
    fn from(fam: HashFamily) -> Self {
        Self::from(&fam)
    }
}

impl TryFrom<FamilyDoc> for HashFamily {
    type Error = Error;

    fn try_from(doc: FamilyDoc) -> Result<Self> {
        let members = doc
            .members
            .iter()
            .map(|rows| BitMatrix::from_hex_rows(doc.n, rows).map(LinearHash::new))
            .collect::<Result<Vec<_>>>()?;
        let probs = doc
            .probs
            .iter()
            .map(|p| {
                p.parse::<BigRational>()
                    .map_err(|e| Error::Format(format!("bad probability {p:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        HashFamily::new(doc.n, doc.m, members, probs)
    }
}
