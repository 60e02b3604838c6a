use std::fmt;

use serde::{Deserialize, Serialize};

use super::linalg::{
    self, c, eigvalsh, hadamard, hermiticity_deviation, hermitize, is_positive_definite,
};
use super::{Basis, CMatrix, CVector, Register, RegisterLayout, C64, TOL_HERM, TOL_PSD};
use crate::error::{Error, Result};
use crate::gf2::LinearHash;

/// Hermitian operator on a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    layout: RegisterLayout,
    matrix: CMatrix,
}

/// What happens to the input register of a classical function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionMode {
    /// Keep the input and append the output register at the end.
    KeepInput,
    /// Replace the input by the output register at the same position.
    TraceInput,
}

impl QOperator {
    /// Checks shape and Hermiticity, then stores the exact Hermitian part.
    pub fn new(layout: RegisterLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::Dimension(format!(
                "layout has dimension {d}, matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermiticity_deviation(&matrix);
        if dev > TOL_HERM {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            layout,
            matrix: hermitize(&matrix),
        })
    }

    /// A sub-normalized positive semidefinite operator.
    pub fn state(layout: RegisterLayout, matrix: CMatrix) -> Result<Self> {
        let s = Self::new(layout, matrix)?;
        s.validate_state()?;
        Ok(s)
    }

    pub(crate) fn from_parts(layout: RegisterLayout, matrix: CMatrix) -> Self {
        debug_assert_eq!(layout.total_dim(), matrix.nrows());
        Self {
            layout,
            matrix: hermitize(&matrix),
        }
    }

    pub fn validate_state(&self) -> Result<()> {
        let d = self.dim();
        let shifted = &self.matrix + CMatrix::identity(d, d) * c(TOL_PSD);
        if !is_positive_definite(&shifted) {
            let min = eigvalsh(&self.matrix).first().copied().unwrap_or(0.0);
            if min < -TOL_PSD {
                return Err(Error::InvalidState(format!(
                    "eigenvalue {min:e} is negative"
                )));
            }
        }
        let t = self.trace();
        if !(t > 0.0 && t <= 1.0 + TOL_PSD) {
            return Err(Error::InvalidState(format!("trace {t} outside (0, 1]")));
        }
        Ok(())
    }

    pub fn diagonal(layout: RegisterLayout, diag: &[f64]) -> Result<Self> {
        let v = CVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x)));
        Self::new(layout, CMatrix::from_diagonal(&v))
    }

    /// `|v⟩⟨v|`
    pub fn from_vector(layout: RegisterLayout, v: &CVector) -> Result<Self> {
        Self::new(layout, v * v.adjoint())
    }

    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.total_dim();
        Self::from_parts(layout, CMatrix::identity(d, d) * c(1.0 / d as f64))
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * c(s),
        }
    }

    pub fn add(&self, other: &QOperator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self::from_parts(
            self.layout.clone(),
            &self.matrix + &other.matrix,
        ))
    }

    pub fn sub(&self, other: &QOperator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self::from_parts(
            self.layout.clone(),
            &self.matrix - &other.matrix,
        ))
    }

    pub(crate) fn same_layout(&self, other: &QOperator) -> Result<()> {
        if self.layout == other.layout {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "layouts differ: {:?} vs {:?}",
                self.layout.names(),
                other.layout.names()
            )))
        }
    }

    pub fn tensor(&self, other: &QOperator) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Self::from_parts(
            layout,
            self.matrix.kronecker(&other.matrix),
        ))
    }

    /// Same operator with registers permuted into `names`, which must list
    /// every register exactly once.
    pub fn reorder(&self, names: &[&str]) -> Result<Self> {
        if names.len() != self.layout.len() {
            return Err(Error::Register(format!(
                "reorder needs all {} registers, got {}",
                self.layout.len(),
                names.len()
            )));
        }
        let order = names
            .iter()
            .map(|n| self.layout.position(n))
            .collect::<Result<Vec<_>>>()?;
        let layout = self.layout.select(names)?;
        if order.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let perm = self.layout.permutation(&order);
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(perm[i], perm[j])] = self.matrix[(i, j)];
            }
        }
        Ok(Self { layout, matrix: m })
    }

    /// Reduced operator on `keep`, registers in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<Self> {
        let rest = self.layout.complement(keep);
        let mut order: Vec<&str> = keep.to_vec();
        order.extend(rest.iter().map(String::as_str));
        let full = self.reorder(&order)?;
        let kept = self.layout.select(keep)?;
        let dk = kept.total_dim();
        let dr = self.dim() / dk;
        let m = CMatrix::from_fn(dk, dk, |i, j| {
            (0..dr).map(|r| full.matrix[(i * dr + r, j * dr + r)]).sum()
        });
        Ok(Self {
            layout: kept,
            matrix: m,
        })
    }

    /// Traces out the named registers.
    pub fn partial_trace(&self, drop: &[&str]) -> Result<Self> {
        for name in drop {
            self.layout.position(name)?;
        }
        let keep = self.layout.complement(drop);
        let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
        self.marginal(&keep)
    }

    /// Dimensions before and after a register.
    fn split(&self, reg: &str) -> Result<(usize, usize, usize)> {
        let pos = self.layout.position(reg)?;
        let dims = self.layout.dims();
        let left = dims[..pos].iter().product();
        let right = dims[pos + 1..].iter().product();
        Ok((left, dims[pos], right))
    }

    /// `(I ⊗ U ⊗ I) ρ (I ⊗ U ⊗ I)†` with `U` acting on `reg`.
    pub fn conjugate_register(&self, reg: &str, u: &CMatrix) -> Result<Self> {
        let (left, d, right) = self.split(reg)?;
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::Dimension(format!(
                "unitary is {}x{}, register has {d}",
                u.nrows(),
                u.ncols()
            )));
        }
        let half = apply_on_register(&self.matrix, left, u, right).adjoint();
        let full = apply_on_register(&half, left, u, right).adjoint();
        Ok(Self::from_parts(self.layout.clone(), full))
    }

    fn to_z_frame(&self, reg: &str, basis: Basis) -> Result<Self> {
        match basis {
            Basis::Z => {
                self.layout.position(reg)?;
                Ok(self.clone())
            }
            Basis::X => self.conjugate_register(reg, &hadamard(self.layout.qubit_count(reg)?)),
        }
    }

    /// Pinching in the `z` or `x` product basis of `reg`.
    pub fn dephase(&self, reg: &str, basis: Basis) -> Result<Self> {
        let rotated = self.to_z_frame(reg, basis)?;
        let (_, d, right) = self.split(reg)?;
        let mut m = rotated.matrix;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if (i / right) % d != (j / right) % d {
                    m[(i, j)] = C64::new(0.0, 0.0);
                }
            }
        }
        let out = Self::from_parts(self.layout.clone(), m);
        out.to_z_frame(reg, basis)
    }

    /// Largest entry coupling different basis values of `reg`.
    pub fn classical_deviation(&self, reg: &str, basis: Basis) -> Result<f64> {
        let rotated = self.to_z_frame(reg, basis)?;
        let (_, d, right) = self.split(reg)?;
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if (i / right) % d != (j / right) % d {
                    worst = worst.max(rotated.matrix[(i, j)].norm());
                }
            }
        }
        Ok(worst)
    }

    pub fn is_classical(&self, reg: &str, basis: Basis) -> Result<bool> {
        Ok(self.classical_deviation(reg, basis)? <= TOL_HERM)
    }

    pub(crate) fn require_classical(&self, reg: &str, basis: Basis) -> Result<()> {
        let deviation = self.classical_deviation(reg, basis)?;
        if deviation > TOL_HERM {
            return Err(Error::NotClassical {
                register: reg.to_string(),
                basis: basis.name(),
                deviation,
            });
        }
        Ok(())
    }

    /// Conditional operators `⟨x|ρ|x⟩` on the remaining registers, one per
    /// basis value of `reg`. Off-diagonal blocks are ignored.
    pub fn classical_blocks(&self, reg: &str, basis: Basis) -> Result<Vec<QOperator>> {
        let rotated = self.to_z_frame(reg, basis)?;
        let (_, d, right) = self.split(reg)?;
        let rest = self.layout.complement(&[reg]);
        let rest_layout = self
            .layout
            .select(&rest.iter().map(String::as_str).collect::<Vec<_>>())?;
        let dr = rest_layout.total_dim();
        let full_index = |x: usize, r: usize| ((r / right) * d + x) * right + r % right;
        Ok((0..d)
            .map(|x| {
                let m = CMatrix::from_fn(dr, dr, |i, j| {
                    rotated.matrix[(full_index(x, i), full_index(x, j))]
                });
                Self::from_parts(rest_layout.clone(), m)
            })
            .collect())
    }

    /// `Σ_x |x⟩⟨x| ⊗ blocks[x]` with the new register first.
    pub fn from_classical_blocks(
        reg: Register,
        basis: Basis,
        blocks: &[QOperator],
    ) -> Result<Self> {
        if blocks.len() != reg.dim {
            return Err(Error::Dimension(format!(
                "{} blocks for a register of dimension {}",
                blocks.len(),
                reg.dim
            )));
        }
        let rest = blocks[0].layout.clone();
        if blocks.iter().any(|b| b.layout != rest) {
            return Err(Error::Dimension("blocks have different layouts".into()));
        }
        let name = reg.name.clone();
        let layout = RegisterLayout::new([(reg.name, reg.dim)])?.concat(&rest)?;
        let dr = rest.total_dim();
        let mut m = CMatrix::zeros(reg.dim * dr, reg.dim * dr);
        for (x, b) in blocks.iter().enumerate() {
            m.view_mut((x * dr, x * dr), (dr, dr)).copy_from(&b.matrix);
        }
        let out = Self::from_parts(layout, m);
        out.to_z_frame(&name, basis)
    }

    /// Applies a linear function to the value of a register classical in
    /// `basis`, writing the output into a new `z`-basis register.
    pub fn apply_classical_function(
        &self,
        reg: &str,
        basis: Basis,
        h: &LinearHash,
        out_name: &str,
        mode: FunctionMode,
    ) -> Result<Self> {
        let n = self.layout.qubit_count(reg)?;
        if n != h.n() {
            return Err(Error::Dimension(format!(
                "register {reg} holds {n} bits, hash takes {}",
                h.n()
            )));
        }
        self.require_classical(reg, basis)?;
        let blocks = self.classical_blocks(reg, basis)?;
        let k_dim = 1usize << h.m();
        let out_reg = Register {
            name: out_name.to_string(),
            dim: k_dim,
        };
        match mode {
            FunctionMode::TraceInput => {
                let rest = blocks[0].layout.clone();
                let zero = Self::from_parts(
                    rest.clone(),
                    CMatrix::zeros(rest.total_dim(), rest.total_dim()),
                );
                let mut sums = vec![zero; k_dim];
                for (x, b) in blocks.iter().enumerate() {
                    let k = h.apply(x as u64) as usize;
                    sums[k].matrix += &b.matrix;
                }
                let out = Self::from_classical_blocks(out_reg, Basis::Z, &sums)?;
                let mut names: Vec<String> =
                    self.layout.names().iter().map(|s| s.to_string()).collect();
                names[self.layout.position(reg)?] = out_name.to_string();
                out.reorder(&names.iter().map(String::as_str).collect::<Vec<_>>())
            }
            FunctionMode::KeepInput => {
                let tagged = blocks
                    .iter()
                    .enumerate()
                    .map(|(x, b)| {
                        let mut tag = CMatrix::zeros(k_dim, k_dim);
                        let k = h.apply(x as u64) as usize;
                        tag[(k, k)] = c(1.0);
                        b.tensor(&Self::from_parts(
                            RegisterLayout::new([(out_name, k_dim)])?,
                            tag,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let input = self.layout.registers()[self.layout.position(reg)?].clone();
                let out = Self::from_classical_blocks(input, basis, &tagged)?;
                let mut names: Vec<&str> = self.layout.names();
                names.push(out_name);
                out.reorder(&names)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&OperatorDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<OperatorDoc>(text)?.try_into()
    }
}

/// `(I_left ⊗ U ⊗ I_right) M` without forming the Kronecker product.
fn apply_on_register(m: &CMatrix, left: usize, u: &CMatrix, right: usize) -> CMatrix {
    let d = u.nrows();
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for l in 0..left {
            for r in 0..right {
                let row = |x: usize| (l * d + x) * right + r;
                for x in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in 0..d {
                        acc += u[(x, a)] * m[(row(a), j)];
                    }
                    out[(row(x), j)] = acc;
                }
            }
        }
    }
    out
}

impl fmt::Display for QOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# {:?}",
            self.layout
                .registers()
                .iter()
                .map(|r| (&r.name, r.dim))
                .collect::<Vec<_>>()
        )?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Serialized operator: layout plus row-major `[re, im]` entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct OperatorDoc {
    pub layout: RegisterLayout,
    pub entries: Vec<[f64; 2]>,
}

impl From<&QOperator> for OperatorDoc {
    fn from(op: &QOperator) -> Self {
        let d = op.dim();
        Self {
            layout: op.layout.clone(),
            entries: (0..d * d)
                .map(|k| {
                    let z = op.matrix[(k / d, k % d)];
                    [z.re, z.im]
                })
                .collect(),
        }
    }
}

impl TryFrom<OperatorDoc> for QOperator {
    type Error = Error;

    fn try_from(doc: OperatorDoc) -> Result<Self> {
        let d = doc.layout.total_dim();
        if doc.entries.len() != d * d {
            return Err(Error::Format(format!(
                "expected {} entries, found {}",
                d * d,
                doc.entries.len()
            )));
        }
        let m = CMatrix::from_fn(d, d, |i, j| {
            let [re, im] = doc.entries[i * d + j];
            C64::new(re, im)
        });
        QOperator::new(doc.layout, m)
    }
}

impl Serialize for QOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        OperatorDoc::deserialize(d)?
            .try_into()
            .map_err(D::Error::custom)
    }
}
