//! Hermitian eigendecomposition.
//!
//! Householder reduction of a complex Hermitian matrix to real symmetric
//! tridiagonal form, followed by the implicit-shift QL iteration. Adequate
//! and robust at the dimensions this crate works with.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Eigenvalues in ascending order plus, optionally, a unitary matrix whose
/// columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: Option<ComplexMatrix>,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds `sum_i f(lambda_i) v_i v_i^dagger`.
    pub fn rebuild_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self
            .vectors
            .as_ref()
            .expect("rebuild_with requires eigenvectors");
        let n = v.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let flam = f(lam);
            if flam == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = v.get(i, k);
                if vi.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add_to(i, j, vi * v.get(j, k).conj() * flam);
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a (near-)Hermitian matrix. The input is
/// symmetrized before reduction, so tiny Hermiticity violations from
/// accumulated arithmetic are absorbed rather than amplified.
pub fn hermitian_eig(a: &ComplexMatrix, with_vectors: bool) -> Result<HermitianEig> {
    assert!(a.is_square(), "hermitian_eig requires a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(HermitianEig {
            values: vec![],
            vectors: with_vectors.then(|| ComplexMatrix::zeros(0, 0)),
        });
    }
    let mut m = a.hermitian_part();

    // Householder reduction to Hermitian tridiagonal form. `q` accumulates
    // the product of reflectors so that m_original = q T q^dagger.
    let mut q = with_vectors.then(|| ComplexMatrix::identity(n));
    for k in 0..n.saturating_sub(2) {
        let sigma: f64 = (k + 1..n)
            .map(|i| m.get(i, k).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if sigma == 0.0 {
            continue;
        }
        let x0 = m.get(k + 1, k);
        let phase = if x0.norm() > 0.0 {
            x0 / Complex64::new(x0.norm(), 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * Complex64::new(sigma, 0.0);
        // v = x - alpha e1, restricted to rows k+1..n
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for i in k + 1..n {
            v[i] = m.get(i, k);
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // p = beta * M v over the trailing block, then rank-two update.
        let mut p = vec![Complex64::new(0.0, 0.0); n];
        for i in k + 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                acc += m.get(i, j) * v[j];
            }
            p[i] = acc * beta;
        }
        let vtp: Complex64 = v.iter().zip(p.iter()).map(|(a, b)| a.conj() * b).sum();
        let half = vtp * beta * 0.5;
        let w: Vec<Complex64> = p
            .iter()
            .zip(v.iter())
            .map(|(pi, vi)| pi - half * vi)
            .collect();
        for i in k + 1..n {
            for j in k + 1..n {
                let delta = w[i] * v[j].conj() + v[i] * w[j].conj();
                let cur = m.get(i, j);
                m.set(i, j, cur - delta);
            }
        }
        m.set(k + 1, k, alpha);
        m.set(k, k + 1, alpha.conj());
        for i in k + 2..n {
            m.set(i, k, Complex64::new(0.0, 0.0));
            m.set(k, i, Complex64::new(0.0, 0.0));
        }
        if let Some(qm) = q.as_mut() {
            // q <- q (I - beta v v^dagger)
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in k + 1..n {
                    acc += qm.get(r, i) * v[i];
                }
                acc *= beta;
                for i in k + 1..n {
                    let cur = qm.get(r, i);
                    qm.set(r, i, cur - acc * v[i].conj());
                }
            }
        }
    }

    // Phase-rotate so the subdiagonal becomes real and nonnegative:
    // conj(dphase[i+1]) * sub_i * dphase[i] = |sub_i * dphase[i]|.
    let mut d: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    let mut e = vec![0.0_f64; n];
    let mut dphase = vec![Complex64::new(1.0, 0.0); n];
    for i in 0..n - 1 {
        let sub = m.get(i + 1, i);
        let target = sub * dphase[i];
        let mag = target.norm();
        e[i] = mag;
        dphase[i + 1] = if mag > 0.0 {
            target / Complex64::new(mag, 0.0)
        } else {
            dphase[i]
        };
    }
    if let Some(qm) = q.as_mut() {
        for j in 0..n {
            for r in 0..n {
                let cur = qm.get(r, j);
                qm.set(r, j, cur * dphase[j]);
            }
        }
    }

    tql_implicit(&mut d, &mut e, q.as_mut())?;

    // Sort ascending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = q.map(|qm| {
        ComplexMatrix::from_fn(n, n, |r, c_| qm.get(r, order[c_]))
    });
    Ok(HermitianEig { values, vectors })
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix, rotating the
/// columns of `z` along. `e[i]` couples rows `i` and `i+1`; `e[n-1]` unused.
fn tql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigFailed);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + r.copysign(if g == 0.0 { 1.0 } else { g });
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0_f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    let rows = zm.rows();
                    for k in 0..rows {
                        f = zm.get(k, i + 1).re;
                        let fi = zm.get(k, i + 1).im;
                        let zi = zm.get(k, i);
                        zm.set(
                            k,
                            i + 1,
                            Complex64::new(s * zi.re + c * f, s * zi.im + c * fi),
                        );
                        zm.set(
                            k,
                            i,
                            Complex64::new(c * zi.re - s * f, c * zi.im - s * fi),
                        );
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        g.hermitian_part()
    }

    #[test]
    fn pauli_matrices_have_unit_eigenvalues() {
        let y = ComplexMatrix::from_parts(2, 2, &[0.0, 0.0, 0.0, 0.0], &[0.0, -1.0, 1.0, 0.0])
            .unwrap();
        let eig = hermitian_eig(&y, true).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        // residual check A v = lambda v
        let v = eig.vectors.as_ref().unwrap();
        for k in 0..2 {
            let col: Vec<Complex64> = (0..2).map(|i| v.get(i, k)).collect();
            let av = y.matvec(&col);
            for i in 0..2 {
                assert!((av[i] - col[i] * eig.values[k]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn identity_is_degenerate_but_orthonormal() {
        let eye = ComplexMatrix::identity(5);
        let eig = hermitian_eig(&eye, true).unwrap();
        for v in &eig.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let v = eig.vectors.unwrap();
        let gram = v.adjoint().matmul(&v);
        assert!(gram.sub(&ComplexMatrix::identity(5)).max_abs() < 1e-12);
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1, 2, 3, 5, 8, 13, 21] {
            let a = random_hermitian(n, &mut rng);
            let eig = hermitian_eig(&a, true).unwrap();
            let rebuilt = eig.rebuild_with(|x| x);
            assert!(
                rebuilt.sub(&a).max_abs() < 1e-11 * (1.0 + a.max_abs()),
                "reconstruction failed at n={n}"
            );
            let v = eig.vectors.as_ref().unwrap();
            let gram = v.adjoint().matmul(v);
            assert!(gram.sub(&ComplexMatrix::identity(n)).max_abs() < 1e-11);
            let mut sorted = eig.values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sorted, eig.values);
        }
    }

    #[test]
    fn values_only_path_matches_full_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(9, &mut rng);
        let full = hermitian_eig(&a, true).unwrap();
        let vals = hermitian_eig(&a, false).unwrap();
        for (x, y) in full.values.iter().zip(vals.values.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(vals.vectors.is_none());
    }

    #[test]
    fn clustered_spectrum_is_resolved() {
        // diag(1, 1, 1+1e-9, 4) conjugated by a random unitary
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(4, &mut rng);
        let u = hermitian_eig(&h, true).unwrap().vectors.unwrap();
        let lam = [1.0, 1.0, 1.0 + 1e-9, 4.0];
        let d = ComplexMatrix::from_diag(&lam);
        let a = u.matmul(&d).matmul(&u.adjoint());
        let eig = hermitian_eig(&a, false).unwrap();
        for (got, want) in eig.values.iter().zip(lam.iter()) {
            assert!((got - want).abs() < 1e-10);
        }
    }
}
