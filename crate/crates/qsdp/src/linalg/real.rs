//! Real dense kernels for the interior-point solver: symmetric matrices,
//! Cholesky factorization, eigenvalue bounds, and a pivoted-QR nullspace
//! used to eliminate equality constraints.

use num_complex::Complex64;

use super::{hermitian_eig, ComplexMatrix};
use crate::error::Result;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, s);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = k * other.cols;
                let srow = i * other.cols;
                for j in 0..other.cols {
                    out.data[srow + j] += a * other.data[orow + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            out[i] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product of two real matrices.
    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            Complex64::new(self.get(i, j), 0.0)
        })
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    l: RealMat,
}

impl Cholesky {
    /// Returns `None` when a pivot drops below `1e-300` (numerically not PD).
    pub fn new(a: &RealMat) -> Option<Cholesky> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mut l = RealMat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if sum <= 1e-300 || !sum.is_finite() {
                        return None;
                    }
                    l.set(i, i, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(Cholesky { l })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l.get(k, i) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        y
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &RealMat) -> RealMat {
        let n = self.l.rows();
        assert_eq!(b.rows(), n);
        let mut out = RealMat::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col: Vec<f64> = (0..n).map(|i| b.get(i, j)).collect();
            let sol = self.solve_vec(&col);
            for i in 0..n {
                out.set(i, j, sol[i]);
            }
        }
        out
    }

    pub fn inverse(&self) -> RealMat {
        let n = self.l.rows();
        self.solve_mat(&RealMat::identity(n))
    }

    /// Maximum step `alpha` keeping `A + alpha * D` positive semidefinite,
    /// where `A` is the factored matrix. Returns `f64::INFINITY` when `D`
    /// causes no boundary crossing.
    pub fn max_step(&self, d: &RealMat) -> Result<f64> {
        // lambda_min of L^-1 D L^-T
        let n = self.l.rows();
        // forward-solve columns of D, then forward-solve rows of the result
        let mut w = RealMat::zeros(n, n);
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| d.get(i, j)).collect();
            let sol = self.forward_solve(&col);
            for i in 0..n {
                w.set(i, j, sol[i]);
            }
        }
        let mut t = RealMat::zeros(n, n);
        for i in 0..n {
            let row: Vec<f64> = (0..n).map(|j| w.get(i, j)).collect();
            let sol = self.forward_solve(&row);
            for j in 0..n {
                t.set(i, j, sol[j]);
            }
        }
        t.symmetrize();
        let eigs = sym_eigenvalues(&t)?;
        let lam_min = eigs.first().copied().unwrap_or(0.0);
        if lam_min >= 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(-1.0 / lam_min)
        }
    }

    fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        y
    }
}

/// Factors a symmetric matrix in place, leaving the lower triangle as L.
/// Convenience wrapper used by tests.
pub fn cholesky_in_place(a: &RealMat) -> Option<Cholesky> {
    Cholesky::new(a)
}

/// Eigenvalues of a real symmetric matrix, ascending. Delegates to the
/// Hermitian path; at solver scales the conversion cost is negligible.
pub fn sym_eigenvalues(a: &RealMat) -> Result<Vec<f64>> {
    Ok(hermitian_eig(&a.to_complex(), false)?.values)
}

/// Affine solution set of `E v = d` computed with column-pivoted
/// Householder QR.
pub struct Nullspace {
    /// One particular solution (basic least-squares solution).
    pub particular: Vec<f64>,
    /// Orthonormal basis of the nullspace, one column per free direction.
    pub basis: RealMat,
    /// Numerical rank of `E`.
    pub rank: usize,
    /// `max |E v0 - d|`; large values signal an inconsistent system.
    pub residual: f64,
}

/// Computes a particular solution and an orthonormal nullspace basis for
/// `E v = d`. `rank_tol` is relative to the largest pivot.
pub fn nullspace(e: &RealMat, d: &[f64], rank_tol: f64) -> Nullspace {
    let m = e.rows();
    let n = e.cols();
    assert_eq!(d.len(), m);
    if m == 0 {
        return Nullspace {
            particular: vec![0.0; n],
            basis: RealMat::identity(n),
            rank: 0,
            residual: 0.0,
        };
    }

    let mut a = e.clone();
    let mut rhs = d.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let kmax = m.min(n);
    let mut col_norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| a.get(i, j).powi(2)).sum::<f64>())
        .collect();

    let mut rank = 0;
    let mut first_pivot = 0.0_f64;
    for k in 0..kmax {
        // pivot: column with the largest remaining norm
        let (jmax, &nmax) = col_norms[k..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(off, v)| (k + off, v))
            .unwrap();
        if jmax != k {
            for i in 0..m {
                let tmp = a.get(i, k);
                a.set(i, k, a.get(i, jmax));
                a.set(i, jmax, tmp);
            }
            perm.swap(k, jmax);
            col_norms.swap(k, jmax);
        }
        let _ = nmax;
        // Householder on column k below row k
        let sigma: f64 = (k..m).map(|i| a.get(i, k).powi(2)).sum::<f64>().sqrt();
        if k == 0 {
            first_pivot = sigma;
        }
        if sigma <= rank_tol * first_pivot.max(1e-300) {
            break;
        }
        rank += 1;
        let akk = a.get(k, k);
        let alpha = if akk >= 0.0 { -sigma } else { sigma };
        let mut v: Vec<f64> = (k..m).map(|i| a.get(i, k)).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let beta = 2.0 / vnorm2;
            for j in k..n {
                let dotv: f64 = (k..m).map(|i| v[i - k] * a.get(i, j)).sum();
                let f = beta * dotv;
                for i in k..m {
                    let cur = a.get(i, j);
                    a.set(i, j, cur - f * v[i - k]);
                }
            }
            let dotv: f64 = (k..m).map(|i| v[i - k] * rhs[i]).sum();
            let f = beta * dotv;
            for i in k..m {
                rhs[i] -= f * v[i - k];
            }
        }
        a.set(k, k, alpha);
        for i in k + 1..m {
            a.set(i, k, 0.0);
        }
        // downdate column norms
        for j in k + 1..n {
            col_norms[j] = (k + 1..m).map(|i| a.get(i, j).powi(2)).sum::<f64>();
        }
    }

    // Basic solution: R11 w = Q' d (first `rank` rows)
    let mut w = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for j in i + 1..rank {
            s -= a.get(i, j) * w[j];
        }
        w[i] = s / a.get(i, i);
    }
    let mut particular = vec![0.0; n];
    for (j, &wj) in w.iter().enumerate() {
        particular[perm[j]] = wj;
    }
    let ev = e.matvec(&particular);
    let residual = ev
        .iter()
        .zip(d.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    // Nullspace columns: for each free column f, solve R11 z = -R[:, f]
    let nfree = n - rank;
    let mut basis = RealMat::zeros(n, nfree);
    for (col, f) in (rank..n).enumerate() {
        let mut z = vec![0.0; rank];
        for i in (0..rank).rev() {
            let mut s = -a.get(i, f);
            for j in i + 1..rank {
                s -= a.get(i, j) * z[j];
            }
            z[i] = s / a.get(i, i);
        }
        for (j, &zj) in z.iter().enumerate() {
            basis.set(perm[j], col, zj);
        }
        basis.set(perm[f], col, 1.0);
    }
    // Orthonormalize the basis columns (modified Gram-Schmidt).
    for j in 0..nfree {
        for prev in 0..j {
            let inner: f64 = (0..n).map(|i| basis.get(i, prev) * basis.get(i, j)).sum();
            for i in 0..n {
                let cur = basis.get(i, j);
                basis.set(i, j, cur - inner * basis.get(i, prev));
            }
        }
        let norm: f64 = (0..n)
            .map(|i| basis.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for i in 0..n {
                let cur = basis.get(i, j);
                basis.set(i, j, cur / norm);
            }
        }
    }

    Nullspace {
        particular,
        basis,
        rank,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = RealMat::from_fn(6, 6, |_, _| rng.gen::<f64>() - 0.5);
        let mut a = g.matmul(&g.transpose());
        for i in 0..6 {
            a.add_to(i, i, 0.5);
        }
        let ch = Cholesky::new(&a).unwrap();
        let rebuilt = ch.l.matmul(&ch.l.transpose());
        assert!(rebuilt.sub(&a).max_abs() < 1e-12);
        let b: Vec<f64> = (0..6).map(|i| i as f64 - 2.0).collect();
        let x = ch.solve_vec(&b);
        let ax = a.matvec(&x);
        for (u, v) in ax.iter().zip(b.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = RealMat::identity(3);
        a.set(2, 2, -1.0);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn max_step_matches_direct_search() {
        let a = RealMat::identity(3);
        let ch = Cholesky::new(&a).unwrap();
        let mut d = RealMat::zeros(3, 3);
        d.set(0, 0, -2.0);
        d.set(1, 1, 1.0);
        d.set(2, 2, -0.5);
        // I + alpha D singular first at alpha = 1/2 (from the -2 direction)
        let step = ch.max_step(&d).unwrap();
        assert!((step - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nullspace_spans_kernel_and_solves() {
        // E: 3x5 with one dependent row
        let mut e = RealMat::zeros(3, 5);
        for j in 0..5 {
            e.set(0, j, (j + 1) as f64);
            e.set(1, j, if j % 2 == 0 { 1.0 } else { -1.0 });
            e.set(2, j, (j + 1) as f64 * 2.0); // dependent on row 0
        }
        let d = vec![3.0, 1.0, 6.0];
        let ns = nullspace(&e, &d, 1e-10);
        assert_eq!(ns.rank, 2);
        assert!(ns.residual < 1e-12);
        assert_eq!(ns.basis.cols(), 3);
        // E * basis columns = 0, basis orthonormal
        for c in 0..3 {
            let col: Vec<f64> = (0..5).map(|i| ns.basis.get(i, c)).collect();
            for r in &e.matvec(&col) {
                assert!(r.abs() < 1e-10);
            }
            for c2 in 0..3 {
                let col2: Vec<f64> = (0..5).map(|i| ns.basis.get(i, c2)).collect();
                let inner: f64 = col.iter().zip(col2.iter()).map(|(a, b)| a * b).sum();
                let want = if c == c2 { 1.0 } else { 0.0 };
                assert!((inner - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn nullspace_flags_inconsistent_rhs() {
        let mut e = RealMat::zeros(2, 2);
        e.set(0, 0, 1.0);
        e.set(1, 0, 1.0);
        let d = vec![1.0, 2.0];
        let ns = nullspace(&e, &d, 1e-10);
        assert!(ns.residual > 0.4);
    }
}
