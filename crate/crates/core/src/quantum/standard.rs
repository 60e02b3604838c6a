use serde::{Deserialize, Serialize};

use super::{purify, Basis, PureState, QOperator};
use crate::error::{Error, Result};

/// Which of the two classical-quantum states a standard form is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Given {
    /// `ρ_{Z^A E}` on registers `[A, E]`, classical in `z` on `A`.
    CqZ,
    /// `ρ_{X^A B}` on registers `[A, B]`, classical in `x` on `A`.
    CqX,
}

/// A pure `|ρ⟩_{ABE}` together with its two measured marginals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StandardForm {
    /// Registers `[A, B, E]`.
    pub pure: PureState,
    /// Registers `[A, E]`.
    pub rho_zae: QOperator,
    /// Registers `[A, B]`.
    pub rho_xab: QOperator,
}

/// Builds the standard form linking `ρ_{Z^A E}` and `ρ_{X^A B}`: purify the
/// given state, then measure `A` of the complementary marginal in the other basis.
pub fn standard_form_from(s: &QOperator, given: Given) -> Result<StandardForm> {
    s.validate_state()?;
    let (basis, side, missing) = match given {
        Given::CqZ => (Basis::Z, "E", "B"),
        Given::CqX => (Basis::X, "B", "E"),
    };
    if s.layout().names() != ["A", side] {
        return Err(Error::Register(format!(
            "expected registers [A, {side}], got {:?}",
            s.layout().names()
        )));
    }
    s.require_classical("A", basis)?;
    let pure = purify(s, missing)?.reorder(&["A", "B", "E"])?;
    let complement = pure
        .density()
        .marginal(&["A", missing])?
        .dephase("A", basis.other())?;
    let (rho_zae, rho_xab) = match given {
        Given::CqZ => (s.clone(), complement),
        Given::CqX => (complement, s.clone()),
    };
    Ok(StandardForm {
        pure,
        rho_zae,
        rho_xab,
    })
}

impl StandardForm {
    /// Treats an arbitrary pure `[A, B, E]` state as a (generally
    /// non-standard) triple by measuring both marginals.
    pub fn from_tripartite(pure: PureState) -> Result<Self> {
        let pure = pure.reorder(&["A", "B", "E"])?;
        let rho = pure.density();
        Ok(Self {
            rho_zae: rho.marginal(&["A", "E"])?.dephase("A", Basis::Z)?,
            rho_xab: rho.marginal(&["A", "B"])?.dephase("A", Basis::X)?,
            pure,
        })
    }

    /// Number of qubits in `A`.
    pub fn n(&self) -> usize {
        self.pure
            .layout()
            .qubit_count("A")
            .expect("A is a qubit register")
    }

    pub fn trace(&self) -> f64 {
        self.pure.norm_sqr()
    }

    /// Max entrywise deviations of the stored measured states from the
    /// measured marginals of `pure`: `(‖Δ_z(ρ_AE) − ρ_{Z^A E}‖, ‖Δ_x(ρ_AB) − ρ_{X^A B}‖)`.
    pub fn measured_deviations(&self) -> Result<(f64, f64)> {
        let rho = self.pure.density();
        let dev = |a: &QOperator, b: &QOperator| -> f64 {
            (a.matrix() - b.matrix())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        };
        Ok((
            dev(
                &rho.marginal(&["A", "E"])?.dephase("A", Basis::Z)?,
                &self.rho_zae,
            ),
            dev(
                &rho.marginal(&["A", "B"])?.dephase("A", Basis::X)?,
                &self.rho_xab,
            ),
        ))
    }

    /// Classicality deviations `(ρ_AE in z, ρ_AB in x)`; the state is in the
    /// standard form when either vanishes.
    pub fn definition1_deviations(&self) -> Result<(f64, f64)> {
        let rho = self.pure.density();
        Ok((
            rho.marginal(&["A", "E"])?
                .classical_deviation("A", Basis::Z)?,
            rho.marginal(&["A", "B"])?
                .classical_deviation("A", Basis::X)?,
        ))
    }

    pub fn is_standard(&self, tol: f64) -> Result<bool> {
        let (z, x) = self.definition1_deviations()?;
        Ok(z.min(x) <= tol)
    }

    /// The same triple with every state multiplied by `c ∈ (0, 1]`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Precondition(format!("scale {c} outside (0, 1]")));
        }
        Ok(Self {
            pure: PureState::new(
                self.pure.layout().clone(),
                self.pure.amplitudes().scale(c.sqrt()),
            )?,
            rho_zae: self.rho_zae.scaled(c),
            rho_xab: self.rho_xab.scaled(c),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::RegisterLayout;
    use crate::random::{random_density, random_pure, rng_from_seed};

    fn ae(n_a: usize) -> RegisterLayout {
        RegisterLayout::new([("A", 1 << n_a), ("E", 2)]).unwrap()
    }

    #[test]
    fn point_mass_gives_uniform_x() {
        let mut rng = rng_from_seed(1);
        let sigma = random_density(&RegisterLayout::new([("E", 2)]).unwrap(), 2, &mut rng);
        let zero =
            QOperator::diagonal(RegisterLayout::new([("A", 2)]).unwrap(), &[1.0, 0.0]).unwrap();
        let s = zero.tensor(&sigma).unwrap();
        let sf = standard_form_from(&s, Given::CqZ).unwrap();
        let blocks = sf.rho_xab.classical_blocks("A", Basis::X).unwrap();
        assert!((blocks[0].trace() - 0.5).abs() < 1e-12 && (blocks[1].trace() - 0.5).abs() < 1e-12);
        let (dz, dx) = sf.measured_deviations().unwrap();
        assert!(dz < 1e-9 && dx < 1e-9);
        assert!(sf.is_standard(1e-9).unwrap());
    }

    #[test]
    fn product_input_round_trips() {
        let mut rng = rng_from_seed(2);
        let sigma = random_density(&RegisterLayout::new([("E", 2)]).unwrap(), 2, &mut rng);
        let mixed = QOperator::maximally_mixed(RegisterLayout::new([("A", 2)]).unwrap());
        let s = mixed.tensor(&sigma).unwrap();
        let sf = standard_form_from(&s, Given::CqZ).unwrap();
        assert!((sf.rho_zae.matrix() - s.matrix()).norm() < 1e-15);
        assert!(sf.is_standard(1e-9).unwrap());
        let back = standard_form_from(&sf.rho_xab, Given::CqX).unwrap();
        let (dz, dx) = back.measured_deviations().unwrap();
        assert!(dz < 1e-9 && dx < 1e-9);
        assert!((back.trace() - s.trace()).abs() < 1e-9);
    }

    #[test]
    fn conversion_is_not_an_involution() {
        // B purifies A alone, so ρ_{X^A B} is a rank-2 cq state and its
        // purification spreads E over four dimensions
        let zero =
            QOperator::diagonal(RegisterLayout::new([("E", 2)]).unwrap(), &[1.0, 0.0]).unwrap();
        let s = QOperator::maximally_mixed(RegisterLayout::new([("A", 2)]).unwrap())
            .tensor(&zero)
            .unwrap();
        let sf = standard_form_from(&s, Given::CqZ).unwrap();
        assert_eq!(crate::quantum::linalg::rank(sf.rho_xab.matrix()), 2);
        let back = standard_form_from(&sf.rho_xab, Given::CqX).unwrap();
        let eig = back.rho_zae.eigenvalues();
        assert!(eig.iter().all(|l| (l - 0.25).abs() < 1e-12));
    }

    #[test]
    fn maximally_correlated_satisfies_both_predicates() {
        let layout = ae(1);
        let s = QOperator::diagonal(layout, &[0.5, 0.0, 0.0, 0.5]).unwrap();
        let sf = standard_form_from(&s, Given::CqZ).unwrap();
        let (dz, dx) = sf.measured_deviations().unwrap();
        assert!(dz < 1e-9 && dx < 1e-9);
        assert!(sf.is_standard(1e-9).unwrap());
        let rho = sf.pure.density();
        assert!(rho
            .marginal(&["A", "E"])
            .unwrap()
            .is_classical("A", Basis::Z)
            .unwrap());
    }

    #[test]
    fn random_classical_inputs_from_both_sides() {
        let mut rng = rng_from_seed(3);
        for n in 1..=2 {
            let s = random_density(&ae(n), 3, &mut rng)
                .dephase("A", Basis::Z)
                .unwrap()
                .scaled(0.9);
            let sf = standard_form_from(&s, Given::CqZ).unwrap();
            let (dz, dx) = sf.measured_deviations().unwrap();
            assert!(dz < 1e-9 && dx < 1e-9);
            assert_eq!(sf.n(), n);
            assert!((sf.trace() - 0.9).abs() < 1e-9);

            let t = sf.rho_xab.clone();
            let again = standard_form_from(&t, Given::CqX).unwrap();
            let (dz, dx) = again.measured_deviations().unwrap();
            assert!(dz < 1e-9 && dx < 1e-9);
            let (_, cx) = again.definition1_deviations().unwrap();
            assert!(cx < 1e-9);
        }
    }

    #[test]
    fn rejects_non_classical_input() {
        let mut rng = rng_from_seed(4);
        let s = random_density(&ae(1), 4, &mut rng);
        assert!(matches!(
            standard_form_from(&s, Given::CqZ),
            Err(Error::NotClassical { .. })
        ));
    }

    #[test]
    fn tripartite_of_standard_is_standard() {
        let mut rng = rng_from_seed(5);
        let layout = RegisterLayout::new([("A", 2), ("B", 2), ("E", 2)]).unwrap();
        let psi = random_pure(&layout, &mut rng);
        let t = StandardForm::from_tripartite(psi).unwrap();
        let (dz, dx) = t.measured_deviations().unwrap();
        assert!(dz < 1e-12 && dx < 1e-12);
        // a random pure state is not in the standard form
        assert!(!t.is_standard(1e-6).unwrap());
    }
}
