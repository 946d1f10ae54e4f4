//! Seeded random matrices: Ginibre samples, Hilbert-Schmidt states, Haar
//! unitaries and isometries.
//!
//! All generators take an explicit RNG. Independent streams are obtained with
//! [`derive_seed`], which is the only seed-splitting rule used anywhere in the
//! workspace.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::math;
use crate::matops::{ComplexMatrix, C64};

pub type SeededRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` of `base`: `splitmix64(splitmix64(base) ^ index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index)
}

/// Standard complex normal: real and imaginary parts are N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// `G G^dagger / tr(G G^dagger)` with square Ginibre `G` (Hilbert-Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = ginibre(rng, dim, dim);
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    w.scale(1.0 / tr).hermitian_part()
}

/// Uniformly random unit vector.
pub fn random_pure_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn random_pure_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::ket_bra(&random_pure_vector(rng, dim))
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    math::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Haar-random isometry `rows x cols` (`rows >= cols`): Gram-Schmidt on a
/// Ginibre matrix. Gram-Schmidt leaves the implied R factor with a positive
/// diagonal, which is the phase fix that makes the result Haar distributed.
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = ginibre(rng, rows, cols);
    orthonormalize_columns(&g)
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    haar_isometry(rng, dim, dim)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
pub(crate) fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let rows = m.rows();
    let mut cols: Vec<Vec<C64>> = (0..m.cols()).map(|c| m.column_vec(c)).collect();
    for j in 0..cols.len() {
        for _pass in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let qk = &done[k];
                let cj = &mut rest[0];
                let proj: C64 = qk.iter().zip(cj.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, q) in cj.iter_mut().zip(qk) {
                    *x -= proj * q;
                }
            }
        }
        let n = norm(&cols[j]);
        for x in cols[j].iter_mut() {
            *x /= n;
        }
    }
    ComplexMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// Random probability vector with entries drawn uniformly then normalized,
/// bounded away from zero by `floor`.
pub fn random_probabilities<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_spreads_indices() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert!(a != b && a != c && b != c);
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
    }

    #[test]
    fn haar_isometry_is_isometric() {
        let mut rng = rng_from_seed(1);
        for (r, c) in [(2, 2), (4, 2), (8, 2), (16, 4)] {
            let v = haar_isometry(&mut rng, r, c);
            let vv = v.adjoint().matmul(&v);
            assert!(vv.max_abs_diff(&ComplexMatrix::identity(c)) < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let a = random_density(&mut rng_from_seed(99), 3);
        let b = random_density(&mut rng_from_seed(99), 3);
        assert_eq!(a, b);
    }
}
