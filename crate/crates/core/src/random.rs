//! Seeded generators for states, hashes and instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gf2::{BitMatrix, LinearHash};
use crate::quantum::{CMatrix, CVector, PureState, QOperator, RegisterLayout, C64};

pub type SuiteRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for job `index` of a run seeded with `master`.
pub fn job_rng(master: u64, index: u64) -> SuiteRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

fn gaussian(rng: &mut SuiteRng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn random_unit_vector(d: usize, rng: &mut SuiteRng) -> CVector {
    let v = CVector::from_fn(d, |_, _| gaussian(rng));
    let norm = v.norm();
    v.unscale(norm)
}

pub fn random_pure(layout: &RegisterLayout, rng: &mut SuiteRng) -> PureState {
    let v = random_unit_vector(layout.total_dim(), rng);
    PureState::new(layout.clone(), v).expect("unit vector is a valid pure state")
}

/// Normalized density operator `G G† / Tr` with `G` a `d×rank` Gaussian matrix.
pub fn random_density(layout: &RegisterLayout, rank: usize, rng: &mut SuiteRng) -> QOperator {
    let d = layout.total_dim();
    let g = CMatrix::from_fn(d, rank.max(1), |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    QOperator::new(layout.clone(), m.unscale(t)).expect("Gram matrix is Hermitian")
}

/// Uniformly random matrix with independent rows, by rejection.
pub fn random_surjective(n: usize, m: usize, rng: &mut SuiteRng) -> LinearHash {
    assert!(m >= 1 && m <= n && n <= 63);
    loop {
        let rows = (0..m).map(|_| rng.random_range(0..(1u64 << n))).collect();
        let h = LinearHash::new(BitMatrix::from_words(n, rows).expect("rows fit"));
        if h.is_surjective() {
            return h;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = job_rng(42, 1).random();
        let b: u64 = job_rng(42, 1).random();
        let c: u64 = job_rng(42, 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_objects_are_valid() {
        let mut rng = rng_from_seed(0);
        let layout = RegisterLayout::new([("A", 2), ("B", 3)]).unwrap();
        let rho = random_density(&layout, 2, &mut rng);
        rho.validate_state().unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!((random_pure(&layout, &mut rng).norm_sqr() - 1.0).abs() < 1e-12);
        for _ in 0..20 {
            let f = random_surjective(3, 2, &mut rng);
            assert!(f.is_surjective() && f.m() == 2);
        }
    }
}
