//! Seeded generators for random states, unitaries, and channels. Used by
//! the test suites and by CLI sweeps; everything is deterministic in the
//! seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::KrausChannel;
use crate::linalg::{hermitian_eig, orthonormal_columns, ComplexMatrix};
use crate::quantum::{DensityOperator, Ket};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent entries uniform in the complex unit square.
pub fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, m, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    })
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    random_matrix(n, n, rng).hermitian_part()
}

/// Full-rank random density operator `G G^dagger / Tr`.
pub fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DensityOperator {
    let g = random_matrix(n, n, rng);
    let mut p = g.matmul(&g.adjoint());
    // keep it comfortably full rank
    for i in 0..n {
        p.add_to(i, i, Complex64::new(1e-3, 0.0));
    }
    let tr = p.trace().re;
    DensityOperator::from_matrix(p.scale_re(1.0 / tr)).expect("normalized Gram matrix is a state")
}

pub fn random_ket(n: usize, rng: &mut ChaCha8Rng) -> Ket {
    let mut amps: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= Complex64::new(norm, 0.0);
    }
    Ket::new(amps).expect("normalized amplitudes")
}

/// Random unitary: the eigenvector matrix of a random Hermitian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let h = random_hermitian(n, rng);
    hermitian_eig(&h, true)
        .expect("eig of random Hermitian")
        .vectors
        .unwrap()
}

/// Random CPTP channel with `n_kraus` Kraus operators from `din` to `dout`
/// dimensions: a random isometry column-orthonormalized on the stacked
/// Kraus block.
pub fn random_channel(
    din: usize,
    dout: usize,
    n_kraus: usize,
    rng: &mut ChaCha8Rng,
) -> KrausChannel {
    assert!(
        n_kraus * dout >= din,
        "stacked Kraus block must have at least din rows"
    );
    loop {
        let stacked = random_matrix(n_kraus * dout, din, rng);
        let cols = orthonormal_columns(&stacked, 1e-8);
        if cols.len() < din {
            continue;
        }
        let kraus: Vec<ComplexMatrix> = (0..n_kraus)
            .map(|k| {
                ComplexMatrix::from_fn(dout, din, |i, j| cols[j][k * dout + i])
            })
            .collect();
        return KrausChannel::new(din, dout, kraus).expect("isometry columns give a CPTP map");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rng_from_seed(42);
        let u = random_unitary(4, &mut rng);
        let gram = u.adjoint().matmul(&u);
        assert!(gram.sub(&ComplexMatrix::identity(4)).max_abs() < 1e-11);
    }

    #[test]
    fn random_density_is_a_state() {
        let mut rng = rng_from_seed(1);
        for n in [2, 3, 5] {
            let rho = random_density(n, &mut rng);
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }
}
