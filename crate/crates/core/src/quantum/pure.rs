use serde::{Deserialize, Serialize};

use super::linalg::{c, eigh, hadamard};
use super::{Basis, CMatrix, CVector, QOperator, RegisterLayout, C64, EIG_CUTOFF, TOL_PSD};
use crate::error::{Error, Result};

/// Vector state `|ψ⟩` on a register layout, possibly sub-normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: RegisterLayout,
    amplitudes: CVector,
}

/// One outcome of a two-valued Pauli-string measurement.
#[derive(Clone, Debug)]
pub struct PauliOutcome {
    /// `+1` or `-1`.
    pub eigenvalue: i8,
    pub probability: f64,
    /// Post-measurement state rescaled to the input norm; `None` for an
    /// outcome of probability zero.
    pub state: Option<PureState>,
}

impl PureState {
    pub fn new(layout: RegisterLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::Dimension(format!(
                "layout has dimension {}, got {} amplitudes",
                layout.total_dim(),
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm_squared();
        if !(norm > 0.0 && norm <= 1.0 + TOL_PSD) {
            return Err(Error::InvalidState(format!(
                "squared norm {norm} outside (0, 1]"
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn density(&self) -> QOperator {
        QOperator::from_parts(
            self.layout.clone(),
            &self.amplitudes * self.amplitudes.adjoint(),
        )
    }

    /// Same vector with registers permuted into `names`.
    pub fn reorder(&self, names: &[&str]) -> Result<Self> {
        let order = names
            .iter()
            .map(|n| self.layout.position(n))
            .collect::<Result<Vec<_>>>()?;
        if order.len() != self.layout.len() {
            return Err(Error::Register("reorder needs every register".into()));
        }
        let perm = self.layout.permutation(&order);
        let mut v = CVector::zeros(self.amplitudes.len());
        for (i, &p) in perm.iter().enumerate() {
            v[p] = self.amplitudes[i];
        }
        Ok(Self {
            layout: self.layout.select(names)?,
            amplitudes: v,
        })
    }

    fn split(&self, reg: &str) -> Result<(usize, usize)> {
        let pos = self.layout.position(reg)?;
        let dims = self.layout.dims();
        Ok((dims[pos], dims[pos + 1..].iter().product()))
    }

    /// `(I ⊗ U ⊗ I)|ψ⟩` with `U` acting on `reg`.
    pub fn apply_register(&self, reg: &str, u: &CMatrix) -> Result<Self> {
        let (d, right) = self.split(reg)?;
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, register has {d}",
                u.nrows(),
                u.ncols()
            )));
        }
        let mut v = CVector::zeros(self.amplitudes.len());
        for i in 0..v.len() {
            let (block, a, r) = (i / (d * right), (i / right) % d, i % right);
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..d {
                acc += u[(a, b)] * self.amplitudes[(block * d + b) * right + r];
            }
            v[i] = acc;
        }
        Ok(Self {
            layout: self.layout.clone(),
            amplitudes: v,
        })
    }

    /// Unnormalized projection onto the `outcome` eigenspace of `Z^s` (or
    /// `X^s`) on `reg`, where `s` is an `n`-bit string.
    pub fn project_pauli(
        &self,
        reg: &str,
        string: u64,
        basis: Basis,
        negative: bool,
    ) -> Result<Self> {
        let n = self.layout.qubit_count(reg)?;
        if n < 64 && string >> n != 0 {
            return Err(Error::Dimension(format!(
                "Pauli string {string:#b} longer than {n} qubits"
            )));
        }
        let rotated = match basis {
            Basis::Z => self.clone(),
            Basis::X => self.apply_register(reg, &hadamard(n))?,
        };
        let (d, right) = self.split(reg)?;
        let mut v = rotated.amplitudes;
        for i in 0..v.len() {
            let z = ((i / right) % d) as u64;
            let odd = (z & string).count_ones() % 2 == 1;
            if odd != negative {
                v[i] = C64::new(0.0, 0.0);
            }
        }
        let projected = Self {
            layout: self.layout.clone(),
            amplitudes: v,
        };
        match basis {
            Basis::Z => Ok(projected),
            Basis::X => projected.apply_register(reg, &hadamard(n)),
        }
    }

    /// Projective measurement of `Z^{s_1}⊗…⊗Z^{s_n}` (or the `X` version) on `reg`.
    pub fn pauli_string_measure(
        &self,
        reg: &str,
        string: u64,
        basis: Basis,
    ) -> Result<[PauliOutcome; 2]> {
        let total = self.norm_sqr();
        let outcome = |negative: bool| -> Result<PauliOutcome> {
            let p = self.project_pauli(reg, string, basis, negative)?;
            let weight = p.norm_sqr();
            let probability = weight / total;
            let state = (probability > 1e-15).then(|| Self {
                layout: p.layout.clone(),
                amplitudes: p.amplitudes.scale((total / weight).sqrt()),
            });
            Ok(PauliOutcome {
                eigenvalue: if negative { -1 } else { 1 },
                probability,
                state,
            })
        };
        Ok([outcome(false)?, outcome(true)?])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
struct PureDoc {
    layout: RegisterLayout,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureDoc {
            layout: self.layout.clone(),
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PureDoc::deserialize(d)?;
        let v = CVector::from_iterator(
            doc.amplitudes.len(),
            doc.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)),
        );
        PureState::new(doc.layout, v).map_err(D::Error::custom)
    }
}

/// Purification with the ancilla appended last. The ancilla dimension is the
/// rank padded to a power of two (at least 2); eigenvectors are phased so
/// their largest-modulus entry is real and positive.
pub fn purify(s: &QOperator, ancilla: &str) -> Result<PureState> {
    s.validate_state()?;
    let (values, vectors) = eigh(s.matrix());
    let kept: Vec<usize> = (0..values.len())
        .rev()
        .filter(|&k| values[k] > EIG_CUTOFF)
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidState(
            "cannot purify the zero operator".into(),
        ));
    }
    let anc_dim = kept.len().next_power_of_two().max(2);
    let layout = s
        .layout()
        .concat(&RegisterLayout::new([(ancilla, anc_dim)])?)?;
    let d = s.dim();
    let mut psi = CVector::zeros(d * anc_dim);
    for (slot, &k) in kept.iter().enumerate() {
        let col = vectors.column(k);
        let lead = (0..d).fold(0, |best, i| {
            if col[i].norm() > col[best].norm() + 1e-12 {
                i
            } else {
                best
            }
        });
        let phase = col[lead].conj() / col[lead].norm();
        let weight = c(values[k].sqrt()) * phase;
        for i in 0..d {
            psi[i * anc_dim + slot] = col[i] * weight;
        }
    }
    PureState::new(layout, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_pure, rng_from_seed};

    #[test]
    fn purify_examples() {
        let layout = RegisterLayout::new([("A", 2)]).unwrap();
        let pure = QOperator::diagonal(layout.clone(), &[1.0, 0.0]).unwrap();
        let p = purify(&pure, "R").unwrap();
        assert_eq!(p.layout().dim("R").unwrap(), 2);
        assert!((p.amplitudes()[0].re - 1.0).abs() < 1e-15);

        let p = purify(&QOperator::maximally_mixed(layout), "R").unwrap();
        let rho = p.density();
        for reduced in [
            rho.partial_trace(&["R"]).unwrap(),
            rho.partial_trace(&["A"]).unwrap(),
        ] {
            let mut schmidt = reduced.eigenvalues();
            schmidt.iter_mut().for_each(|l| *l = l.sqrt());
            assert!(schmidt.iter().all(|s| (s - 0.5f64.sqrt()).abs() < 1e-12));
        }
    }

    #[test]
    fn purify_round_trip_rank_three() {
        let mut rng = rng_from_seed(21);
        let layout = RegisterLayout::new([("A", 2), ("B", 2)]).unwrap();
        let rho = random_density(&layout, 3, &mut rng).scaled(0.9);
        let p = purify(&rho, "R").unwrap();
        assert_eq!(p.layout().dim("R").unwrap(), 4);
        let back = p.density().partial_trace(&["R"]).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-9);
        assert!(purify(
            &QOperator::diagonal(layout, &[0.5, 0.6, 0.0, -0.1]).unwrap(),
            "R"
        )
        .is_err());
    }

    #[test]
    fn pauli_examples() {
        let layout = RegisterLayout::new([("A", 2)]).unwrap();
        let zero = PureState::new(layout, CVector::from_vec(vec![c(1.0), c(0.0)])).unwrap();
        let [plus, minus] = zero.pauli_string_measure("A", 1, Basis::Z).unwrap();
        assert_eq!(plus.eigenvalue, 1);
        assert!((plus.probability - 1.0).abs() < 1e-15 && minus.state.is_none());

        let s = 0.5f64.sqrt();
        let phi = PureState::new(
            RegisterLayout::new([("A", 4)]).unwrap(),
            CVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]),
        )
        .unwrap();
        let [plus, _] = phi.pauli_string_measure("A", 0b11, Basis::Z).unwrap();
        assert!((plus.probability - 1.0).abs() < 1e-15);
        let [plus, _] = phi.pauli_string_measure("A", 0b11, Basis::X).unwrap();
        assert!((plus.probability - 1.0).abs() < 1e-14);
    }

    fn joint(psi: &PureState, first: (u64, Basis), second: (u64, Basis)) -> [f64; 4] {
        let mut out = [0.0; 4];
        for a in 0..2 {
            let p = psi.project_pauli("A", first.0, first.1, a == 1).unwrap();
            for b in 0..2 {
                let q = p.project_pauli("A", second.0, second.1, b == 1).unwrap();
                let (i, j) = if first.1 == Basis::Z { (a, b) } else { (b, a) };
                out[i * 2 + j] = q.norm_sqr();
            }
        }
        out
    }

    #[test]
    fn dual_pauli_measurements_commute() {
        // f = 110 and g = 111 satisfy f·g = 0 mod 2
        let mut rng = rng_from_seed(4);
        let psi = random_pure(
            &RegisterLayout::new([("A", 8), ("B", 2)]).unwrap(),
            &mut rng,
        );
        let zx = joint(&psi, (0b110, Basis::Z), (0b111, Basis::X));
        let xz = joint(&psi, (0b111, Basis::X), (0b110, Basis::Z));
        for (a, b) in zx.iter().zip(&xz) {
            assert!((a - b).abs() < 1e-12);
        }
        // anticommuting strings give order-dependent statistics in general
        let zx = joint(&psi, (0b100, Basis::Z), (0b111, Basis::X));
        let xz = joint(&psi, (0b111, Basis::X), (0b100, Basis::Z));
        assert!(zx.iter().zip(&xz).any(|(a, b)| (a - b).abs() > 1e-6));
    }

    #[test]
    fn reorder_matches_operator_reorder() {
        let mut rng = rng_from_seed(8);
        let psi = random_pure(
            &RegisterLayout::new([("A", 2), ("B", 3), ("E", 2)]).unwrap(),
            &mut rng,
        );
        let a = psi.reorder(&["E", "A", "B"]).unwrap().density();
        let b = psi.density().reorder(&["E", "A", "B"]).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = rng_from_seed(2);
        let psi = random_pure(&RegisterLayout::new([("A", 2)]).unwrap(), &mut rng);
        assert_eq!(PureState::from_json(&psi.to_json().unwrap()).unwrap(), psi);
    }
}
