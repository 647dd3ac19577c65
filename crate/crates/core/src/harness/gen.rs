//! Seeded random instances.
//!
//! Generator: ChaCha8 seeded with `seed_from_u64(seed)`, one stream per
//! derived index. Gaussian draws use the ziggurat sampler of `rand_distr`.
//! Orthogonal factors come from modified Gram–Schmidt on a Gaussian matrix,
//! with one re-orthogonalization pass, which fixes the diagonal of R
//! positive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Mat;
use crate::meansm::MeanProblem;
use crate::pdcore::{SpdMatrix, WeightVector};

/// Largest condition number used for generated instances.
pub const MAX_COND: f64 = 1e6;

/// Deterministic generator for (seed, stream).
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Mat {
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    for j in 0..n {
        for k in (0..j).chain(0..j) {
            let (done, rest) = cols.split_at_mut(j);
            let d: f64 = done[k].iter().zip(&rest[0]).map(|(a, b)| a * b).sum();
            for (x, q) in rest[0].iter_mut().zip(&done[k]) {
                *x -= d * q;
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut cols[j] {
            *x /= norm;
        }
    }
    let mut q = Mat::zeros(n);
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            q[(i, j)] = v;
        }
    }
    q
}

/// Q diag(λ) Qᵀ with λ log-uniform in [lo, hi].
pub fn random_spd_in(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> SpdMatrix {
    let (a, b) = (lo.ln(), hi.ln());
    let lam: Vec<f64> = (0..n)
        .map(|_| if b > a { rng.gen_range(a..=b).exp() } else { lo })
        .collect();
    let q = random_orthogonal(n, rng);
    let d = SpdMatrix::diag(&lam).expect("positive eigenvalues");
    d.congruence_by(&q).expect("orthogonal congruence")
}

/// SPD matrix with eigenvalues log-uniform in [1/√cond, √cond].
pub fn random_spd(n: usize, cond: f64, seed: u64) -> SpdMatrix {
    assert!(n >= 1 && cond >= 1.0, "random_spd needs n >= 1 and cond >= 1");
    let c = cond.min(MAX_COND).sqrt();
    random_spd_in(n, 1.0 / c, c, &mut rng_for(seed, 0))
}

/// Weights drawn uniformly from the simplex.
pub fn random_weights(m: usize, rng: &mut impl Rng) -> WeightVector {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    WeightVector::new(e).expect("positive weights")
}

/// Random problem with the given shape; each matrix has condition number
/// at most `cond`.
pub fn random_problem(n: usize, m: usize, cond: f64, seed: u64) -> MeanProblem {
    let mut rng = rng_for(seed, 1);
    let c = cond.clamp(1.0, MAX_COND).sqrt();
    let w = random_weights(m, &mut rng);
    let a = (0..m).map(|_| random_spd_in(n, 1.0 / c, c, &mut rng)).collect();
    MeanProblem::new(w, a).expect("consistent shapes")
}

/// Shape for trial `i`: n cycles through {2, 3, 5}, m through {2, 3, 4}.
pub fn trial_shape(i: usize) -> (usize, usize) {
    ([2, 3, 5][i % 3], [2, 3, 4][(i / 3) % 3])
}

/// Seed for trial `i` of a run started with `seed`.
pub fn trial_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(random_spd(4, 50.0, 9), random_spd(4, 50.0, 9));
        assert_ne!(random_spd(4, 50.0, 9), random_spd(4, 50.0, 10));
    }

    #[test]
    fn unit_condition_is_identity() {
        let a = random_spd(3, 1.0, 5);
        assert!((a.as_mat() - &Mat::identity(3)).frobenius() < 1e-14);
    }

    #[test]
    fn condition_respected() {
        for s in 0..20 {
            let a = random_spd(5, 100.0, s);
            assert!(a.max_eig() / a.min_eig() <= 100.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn orthogonal() {
        let q = random_orthogonal(5, &mut rng_for(3, 0));
        let e = &q.transpose().matmul(&q) - &Mat::identity(5);
        assert!(e.frobenius() < 1e-14);
    }
}
