//! Quantum states, measurements, and the operator calculus on top of
//! [`crate::linalg`]: partial trace and transpose, swap and permutation
//! operators, Born-rule probabilities, the Bloch parametrization, norms,
//! and Schmidt-rank entanglement checks for pure states.

mod entropy;

pub use entropy::{
    binary_entropy, conditional_entropy, joint_entropy, mutual_information, relative_entropy,
    shannon_entropy, von_neumann_entropy, JointDistribution,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::tol::{Tolerances, DEFAULT_TOL};

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    dim: usize,
    amplitudes: Vec<Complex64>,
}

impl Ket {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new_with(amplitudes, &DEFAULT_TOL)
    }

    pub fn new_with(amplitudes: Vec<Complex64>, tol: &Tolerances) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol.unit {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Ket {
            dim: amplitudes.len(),
            amplitudes,
        })
    }

    /// Computational basis state `|i>` in dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Ket { dim, amplitudes }
    }

    /// `|+>` or `|->` depending on `sign`.
    pub fn hadamard(sign: bool) -> Self {
        let s = if sign { 1.0 } else { -1.0 };
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ket {
            dim: 2,
            amplitudes: vec![Complex64::new(r, 0.0), Complex64::new(s * r, 0.0)],
        }
    }

    /// Maximally entangled state on two `d`-dimensional systems.
    pub fn max_entangled(d: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); d * d];
        let c = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            amplitudes[i * d + i] = Complex64::new(c, 0.0);
        }
        Ket {
            dim: d * d,
            amplitudes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut amplitudes = Vec::with_capacity(self.dim * other.dim);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ket {
            dim: self.dim * other.dim,
            amplitudes,
        }
    }

    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Projector `|psi><psi|`.
    pub fn projector(&self) -> HermitianOperator {
        let m = ComplexMatrix::outer(&self.amplitudes, &self.amplitudes);
        HermitianOperator::new_unchecked(m)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::new(self.projector()).expect("projector of a unit ket is a state")
    }
}

/// JSON wire form for [`Ket`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KetLiteral {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&Ket> for KetLiteral {
    fn from(k: &Ket) -> Self {
        KetLiteral {
            dim: k.dim,
            re: k.amplitudes.iter().map(|z| z.re).collect(),
            im: k.amplitudes.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<&KetLiteral> for Ket {
    type Error = Error;

    fn try_from(lit: &KetLiteral) -> Result<Self> {
        if lit.re.len() != lit.dim || lit.im.len() != lit.dim {
            return Err(Error::DimMismatch(format!(
                "ket literal dim {} does not match amplitude count re={} im={}",
                lit.dim,
                lit.re.len(),
                lit.im.len()
            )));
        }
        let amps = lit
            .re
            .iter()
            .zip(lit.im.iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Ket::new(amps)
    }
}

/// Square matrix certified Hermitian at construction. The stored matrix is
/// exactly self-adjoint: the input is validated against `tol_herm` and then
/// symmetrized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermitianOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::new_with(matrix, &DEFAULT_TOL)
    }

    pub fn new_with(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let residual = matrix.hermiticity_residual();
        if residual > tol.herm {
            return Err(Error::NotHermitian {
                residual,
                tol: tol.herm,
            });
        }
        Ok(Self::new_unchecked(matrix))
    }

    /// Symmetrizes without validating; for matrices Hermitian by
    /// construction.
    pub fn new_unchecked(matrix: ComplexMatrix) -> Self {
        let dim = matrix.rows();
        HermitianOperator {
            dim,
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            dim,
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn eig(&self) -> Result<crate::linalg::HermitianEig> {
        hermitian_eig(&self.matrix, true)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eig(&self.matrix, false)?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// PSD square root via eigendecomposition; eigenvalues below zero are
    /// clamped.
    pub fn psd_sqrt(&self) -> Result<HermitianOperator> {
        let eig = self.eig()?;
        Ok(HermitianOperator::new_unchecked(
            eig.rebuild_with(|x| x.max(0.0).sqrt()),
        ))
    }

    pub fn add(&self, other: &Self) -> Self {
        HermitianOperator::new_unchecked(self.matrix.add(&other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Self {
        HermitianOperator::new_unchecked(self.matrix.sub(&other.matrix))
    }

    pub fn scale(&self, c: f64) -> Self {
        HermitianOperator::new_unchecked(self.matrix.scale_re(c))
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            matrix: ComplexMatrix,
        }
        let raw = Raw::deserialize(d)?;
        HermitianOperator::new(raw.matrix).map_err(serde::de::Error::custom)
    }
}

/// Unit-trace positive semidefinite operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        Self::new_with(op, &DEFAULT_TOL)
    }

    pub fn new_with(op: HermitianOperator, tol: &Tolerances) -> Result<Self> {
        let min_eig = op.min_eigenvalue()?;
        if min_eig < -tol.psd {
            return Err(Error::NotPsd { min_eig });
        }
        let trace = op.matrix().trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace {
                trace,
                expected: 1.0,
            });
        }
        Ok(DensityOperator { op })
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(m)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            op: HermitianOperator::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        self.op.matrix()
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityOperator::from_matrix(m).map_err(serde::de::Error::custom)
    }
}

/// General quantum measurement: PSD effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(effects: Vec<HermitianOperator>) -> Result<Self> {
        Self::new_with(effects, &DEFAULT_TOL)
    }

    pub fn new_with(effects: Vec<HermitianOperator>, tol: &Tolerances) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::BadDistribution("POVM needs at least one effect".into()));
        }
        let dim = effects[0].dim();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimMismatch("POVM effects differ in dimension".into()));
            }
            let min_eig = e.min_eigenvalue()?;
            if min_eig < -tol.psd {
                return Err(Error::NotPsd { min_eig });
            }
            sum = sum.add(e.matrix());
        }
        let residual = sum.sub(&ComplexMatrix::identity(dim)).max_abs();
        if residual > tol.povm {
            return Err(Error::IncompletePovm { residual });
        }
        Ok(Povm { effects })
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// Real three-vector of a qubit state inside the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = BlochVector { x, y, z };
        if v.norm_sqr() > 1.0 + DEFAULT_TOL.psd {
            return Err(Error::Domain(format!(
                "Bloch vector has length {} > 1",
                v.norm_sqr().sqrt()
            )));
        }
        Ok(v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// Ordered subsystem dimensions of a composite space; the rightmost
/// subsystem index varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    dims: Vec<usize>,
}

impl SystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Domain("subsystem dimensions must be >= 1".into()));
        }
        Ok(SystemDims { dims })
    }

    pub fn two(a: usize, b: usize) -> Self {
        SystemDims { dims: vec![a, b] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check_total(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimMismatch(format!(
                "subsystem dims {:?} have product {}, operator dimension is {}",
                self.dims,
                self.total(),
                dim
            )));
        }
        Ok(())
    }

    /// Multi-index of a composite basis index.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (s, &d) in self.dims.iter().enumerate().rev() {
            out[s] = idx % d;
            idx /= d;
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for (s, &d) in self.dims.iter().enumerate() {
            idx = idx * d + multi[s];
        }
        idx
    }
}

/// Probability vector: entries in `[0,1]` summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution {
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::new_with(probs, &DEFAULT_TOL)
    }

    pub fn new_with(probs: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        for &p in &probs {
            if !(-tol.trace..=1.0 + tol.trace).contains(&p) {
                return Err(Error::BadDistribution(format!(
                    "probability {p} outside [0,1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol.trace {
            return Err(Error::BadDistribution(format!("probabilities sum to {sum}")));
        }
        let probs = probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(ProbabilityDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        ProbabilityDistribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Pauli matrices in the standard basis.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_parts(2, 2, &[0.0, 1.0, 1.0, 0.0], &[0.0; 4]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_parts(2, 2, &[0.0; 4], &[0.0, -1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_parts(2, 2, &[1.0, 0.0, 0.0, -1.0], &[0.0; 4]).unwrap()
}

/// Hadamard gate.
pub fn hadamard_matrix() -> ComplexMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_parts(2, 2, &[r, r, r, -r], &[0.0; 4]).unwrap()
}

/// Kronecker product; the right factor's index varies fastest.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Traces out every subsystem not listed in `keep` (indices into `dims`,
/// strictly increasing order is not required but duplicates are).
pub fn partial_trace(
    m: &HermitianOperator,
    dims: &SystemDims,
    keep: &[usize],
) -> Result<HermitianOperator> {
    dims.check_total(m.dim())?;
    let out = partial_trace_matrix(m.matrix(), dims, keep)?;
    Ok(HermitianOperator::new_unchecked(out))
}

/// Partial trace on a raw matrix; shared by the channel and SDP layers
/// where inputs are Hermitian by construction.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dims: &SystemDims,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    let n = dims.len();
    for &k in keep {
        if k >= n {
            return Err(Error::DimMismatch(format!(
                "keep index {k} out of range for {n} subsystems"
            )));
        }
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let traced: Vec<usize> = (0..n).filter(|s| !keep_sorted.contains(s)).collect();
    let keep_dims: Vec<usize> = keep_sorted.iter().map(|&s| dims.dims()[s]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&s| dims.dims()[s]).collect();
    let dout: usize = keep_dims.iter().product();
    let dtr: usize = traced_dims.iter().product();
    let keep_sys = SystemDims::new(keep_dims)?;
    let tr_sys = SystemDims::new(if traced_dims.is_empty() {
        vec![1]
    } else {
        traced_dims
    })?;

    let mut out = ComplexMatrix::zeros(dout, dout);
    let mut full_row = vec![0usize; n];
    let mut full_col = vec![0usize; n];
    for r in 0..dout {
        let rk = keep_sys.unravel(r);
        for c in 0..dout {
            let ck = keep_sys.unravel(c);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..dtr {
                let tt = tr_sys.unravel(t);
                for (pos, &s) in keep_sorted.iter().enumerate() {
                    full_row[s] = rk[pos];
                    full_col[s] = ck[pos];
                }
                for (pos, &s) in traced.iter().enumerate() {
                    full_row[s] = tt[pos];
                    full_col[s] = tt[pos];
                }
                acc += m.get(dims.ravel(&full_row), dims.ravel(&full_col));
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// Transposes subsystem `which` in the standard basis.
pub fn partial_transpose(
    m: &HermitianOperator,
    dims: &SystemDims,
    which: usize,
) -> Result<HermitianOperator> {
    dims.check_total(m.dim())?;
    let out = partial_transpose_matrix(m.matrix(), dims, which)?;
    Ok(HermitianOperator::new_unchecked(out))
}

pub fn partial_transpose_matrix(
    m: &ComplexMatrix,
    dims: &SystemDims,
    which: usize,
) -> Result<ComplexMatrix> {
    if which >= dims.len() {
        return Err(Error::DimMismatch(format!(
            "subsystem index {which} out of range for {} subsystems",
            dims.len()
        )));
    }
    let d = m.rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for r in 0..d {
        let mut rm = dims.unravel(r);
        for c in 0..d {
            let mut cm = dims.unravel(c);
            std::mem::swap(&mut rm[which], &mut cm[which]);
            let v = m.get(dims.ravel(&rm), dims.ravel(&cm));
            std::mem::swap(&mut rm[which], &mut cm[which]);
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// Swap operator on two `d`-dimensional systems: `S |i>|j> = |j>|i>`.
pub fn swap_operator(d: usize) -> HermitianOperator {
    let dd = d * d;
    let mut m = ComplexMatrix::zeros(dd, dd);
    for i in 0..d {
        for j in 0..d {
            m.set(j * d + i, i * d + j, Complex64::new(1.0, 0.0));
        }
    }
    HermitianOperator::new_unchecked(m)
}

/// Permutation operator reordering subsystem slots: output slot `s` holds
/// what input slot `perm[s]` held.
pub fn permutation_operator(dims: &SystemDims, perm: &[usize]) -> Result<ComplexMatrix> {
    let n = dims.len();
    if perm.len() != n {
        return Err(Error::DimMismatch("permutation length mismatch".into()));
    }
    let out_dims = SystemDims::new(perm.iter().map(|&s| dims.dims()[s]).collect())?;
    let total = dims.total();
    let mut m = ComplexMatrix::zeros(total, total);
    for x in 0..total {
        let xm = dims.unravel(x);
        let ym: Vec<usize> = perm.iter().map(|&s| xm[s]).collect();
        m.set(out_dims.ravel(&ym), x, Complex64::new(1.0, 0.0));
    }
    Ok(m)
}

/// Born-rule outcome distribution `p_i = Tr(rho E_i)`.
pub fn born_probabilities(rho: &DensityOperator, povm: &Povm) -> Result<ProbabilityDistribution> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimMismatch(format!(
            "state dim {} vs POVM dim {}",
            rho.dim(),
            povm.dim()
        )));
    }
    let probs: Vec<f64> = povm
        .effects()
        .iter()
        .map(|e| rho.matrix().frobenius_inner(e.matrix()).re)
        .collect();
    ProbabilityDistribution::new(probs)
}

/// `rho(r) = (I + x X + y Y + z Z) / 2`.
pub fn bloch_to_density(r: &BlochVector) -> Result<DensityOperator> {
    if r.norm_sqr() > 1.0 + DEFAULT_TOL.psd {
        return Err(Error::Domain(format!(
            "Bloch vector length {} exceeds 1",
            r.norm()
        )));
    }
    let mut m = ComplexMatrix::identity(2);
    m = m.add(&pauli_x().scale_re(r.x));
    m = m.add(&pauli_y().scale_re(r.y));
    m = m.add(&pauli_z().scale_re(r.z));
    DensityOperator::from_matrix(m.scale_re(0.5))
}

pub fn density_to_bloch(rho: &DensityOperator) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimMismatch("Bloch parametrization needs a qubit".into()));
    }
    let m = rho.matrix();
    let x = m.frobenius_inner(&pauli_x()).re;
    let y = m.frobenius_inner(&pauli_y()).re;
    let z = m.frobenius_inner(&pauli_z()).re;
    BlochVector::new(x, y, z)
}

/// Sum of singular values. Hermitian inputs take the eigenvalue route;
/// general matrices go through the Gram matrix.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_square() && m.hermiticity_residual() <= 1e-12 * (1.0 + m.max_abs()) {
        let eig = hermitian_eig(m, false).expect("eig of a Hermitian matrix");
        return eig.values.iter().map(|x| x.abs()).sum();
    }
    // singular values from the smaller Gram matrix, with deflation of
    // negative round-off
    let gram = if m.rows() <= m.cols() {
        m.matmul(&m.adjoint())
    } else {
        m.adjoint().matmul(m)
    };
    let eig = hermitian_eig(&gram, false).expect("eig of a Gram matrix");
    eig.values.iter().map(|x| x.max(0.0).sqrt()).sum()
}

/// Largest eigenvalue: the least `mu` with `A <= mu I`.
pub fn infinity_norm(h: &HermitianOperator) -> f64 {
    h.eigenvalues().map(|v| v.last().copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
}

/// Schmidt data of a bipartite pure state.
#[derive(Debug, Clone)]
pub struct SchmidtInfo {
    pub entangled: bool,
    pub schmidt_rank: usize,
    pub coefficients: Vec<f64>,
}

/// Reshapes the amplitudes into a `d_a x d_b` matrix and counts singular
/// values above `tol_rank`; the state is entangled iff more than one
/// survives.
pub fn pure_state_is_entangled(psi: &Ket, dims: &SystemDims) -> Result<SchmidtInfo> {
    if dims.len() != 2 {
        return Err(Error::DimMismatch(
            "Schmidt decomposition needs a bipartite dimension list".into(),
        ));
    }
    dims.check_total(psi.dim())?;
    let (da, db) = (dims.dims()[0], dims.dims()[1]);
    let m = ComplexMatrix::from_fn(da, db, |i, j| psi.amplitudes()[i * db + j]);
    let gram = if da <= db {
        m.matmul(&m.adjoint())
    } else {
        m.adjoint().matmul(&m)
    };
    let eig = hermitian_eig(&gram, false)?;
    let mut coefficients: Vec<f64> = eig.values.iter().map(|x| x.max(0.0).sqrt()).collect();
    coefficients.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let schmidt_rank = coefficients
        .iter()
        .filter(|&&s| s > DEFAULT_TOL.rank)
        .count();
    Ok(SchmidtInfo {
        entangled: schmidt_rank > 1,
        schmidt_rank,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_gen::{random_density, random_hermitian, random_matrix, random_unitary, rng_from_seed};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn kron_of_basis_kets() {
        let zero = Ket::basis(2, 0);
        let one = Ket::basis(2, 1);
        let prod = zero.tensor(&one);
        let want = [0.0, 1.0, 0.0, 0.0];
        for (a, w) in prod.amplitudes().iter().zip(want.iter()) {
            assert!((a - re(*w)).norm() < 1e-15);
        }
        let plus = Ket::hadamard(true);
        let pp = plus.tensor(&plus);
        for a in pp.amplitudes() {
            assert!((a - re(0.5)).norm() < 1e-15);
        }
        let i4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert!(i4.sub(&ComplexMatrix::identity(4)).max_abs() < 1e-15);
    }

    #[test]
    fn kron_is_associative_and_bilinear() {
        let mut rng = rng_from_seed(101);
        for _ in 0..10 {
            let a = random_matrix(2, 2, &mut rng);
            let b = random_matrix(3, 2, &mut rng);
            let c = random_matrix(2, 3, &mut rng);
            let left = a.kron(&b).kron(&c);
            let right = a.kron(&b.kron(&c));
            assert!(left.sub(&right).max_abs() < 1e-12);
            let s = Complex64::new(0.7, -0.2);
            let lhs = a.scale(s).kron(&b);
            let rhs = a.kron(&b).scale(s);
            assert!(lhs.sub(&rhs).max_abs() < 1e-12);
            let a2 = random_matrix(2, 2, &mut rng);
            let dist = a.add(&a2).kron(&b);
            let split = a.kron(&b).add(&a2.kron(&b));
            assert!(dist.sub(&split).max_abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let chi = Ket::max_entangled(2);
        let rho = chi.projector();
        let dims = SystemDims::two(2, 2);
        let ra = partial_trace(&rho, &dims, &[0]).unwrap();
        assert!(
            ra.matrix()
                .sub(&ComplexMatrix::identity(2).scale_re(0.5))
                .max_abs()
                < 1e-12
        );
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut rng = rng_from_seed(7);
        let rho_a = random_density(2, &mut rng);
        let rho_b = random_density(3, &mut rng);
        let joint = HermitianOperator::new_unchecked(rho_a.matrix().kron(rho_b.matrix()));
        let dims = SystemDims::two(2, 3);
        let back = partial_trace(&joint, &dims, &[0]).unwrap();
        assert!(back.matrix().sub(rho_a.matrix()).max_abs() < 1e-12);
        // Tr_b(A (x) B) = Tr(B) A for non-state factors too
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let joint = HermitianOperator::new_unchecked(a.kron(&b));
        let got = partial_trace(&joint, &dims, &[0]).unwrap();
        let want = a.scale_re(b.trace().re);
        assert!(got.matrix().sub(&want).max_abs() < 1e-12);
    }

    /// Brute-force index-sum oracle for the partial trace over subsystem 0.
    fn partial_trace_oracle_first(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(db, db);
        for i in 0..db {
            for j in 0..db {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..da {
                    acc += m.get(t * db + i, t * db + j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    #[test]
    fn partial_trace_matches_brute_force_oracle() {
        let mut rng = rng_from_seed(13);
        let g = random_matrix(6, 6, &mut rng);
        let psd = HermitianOperator::new_unchecked(g.matmul(&g.adjoint()));
        let dims = SystemDims::two(2, 3);
        let got = partial_trace(&psd, &dims, &[1]).unwrap();
        let want = partial_trace_oracle_first(psd.matrix(), 2, 3);
        assert!(got.matrix().sub(&want).max_abs() < 1e-12);
        // trace preserved
        assert!((got.matrix().trace().re - psd.matrix().trace().re).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_inconsistent_dims() {
        let op = HermitianOperator::identity(6);
        let dims = SystemDims::two(2, 2);
        assert!(partial_trace(&op, &dims, &[0]).is_err());
    }

    #[test]
    fn partial_transpose_of_bell_state() {
        let chi = Ket::max_entangled(2);
        let rho = chi.projector();
        let dims = SystemDims::two(2, 2);
        let pt = partial_transpose(&rho, &dims, 1).unwrap();
        let mut want = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            want.set(i, j, re(0.5));
        }
        assert!(pt.matrix().sub(&want).max_abs() < 1e-12);
        let min = pt.min_eigenvalue().unwrap();
        assert!((min + 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_properties() {
        let mut rng = rng_from_seed(23);
        let dims = SystemDims::two(2, 3);
        let h = HermitianOperator::new_unchecked(random_hermitian(6, &mut rng));
        let pt = partial_transpose(&h, &dims, 1).unwrap();
        // involution, trace preserving, Hermiticity preserving
        let back = partial_transpose(&pt, &dims, 1).unwrap();
        assert!(back.matrix().sub(h.matrix()).max_abs() < 1e-13);
        assert!((pt.matrix().trace().re - h.matrix().trace().re).abs() < 1e-13);
        assert!(pt.matrix().hermiticity_residual() < 1e-13);
        // product case: T_b(A (x) B) = A (x) B^T
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let prod = HermitianOperator::new_unchecked(a.kron(&b));
        let got = partial_transpose(&prod, &dims, 1).unwrap();
        let want = a.kron(&b.transpose());
        assert!(got.matrix().sub(&want).max_abs() < 1e-13);
        assert!(partial_transpose(&h, &dims, 5).is_err());
    }

    #[test]
    fn swap_operator_acts_and_squares_to_identity() {
        let s = swap_operator(2);
        let mut want = ComplexMatrix::zeros(4, 4);
        want.set(0, 0, re(1.0));
        want.set(3, 3, re(1.0));
        want.set(1, 2, re(1.0));
        want.set(2, 1, re(1.0));
        assert!(s.matrix().sub(&want).max_abs() < 1e-15);
        let s3 = swap_operator(3);
        let sq = s3.matrix().matmul(s3.matrix());
        assert!(sq.sub(&ComplexMatrix::identity(9)).max_abs() < 1e-15);
        // S(|0> (x) |1>) = |1> (x) |0>
        let v = Ket::basis(2, 0).tensor(&Ket::basis(2, 1));
        let sv = s.matrix().matvec(v.amplitudes());
        let want_v = Ket::basis(2, 1).tensor(&Ket::basis(2, 0));
        for (a, b) in sv.iter().zip(want_v.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_projector_rank_is_d_times_d_plus_one_over_two() {
        let d = 3;
        let s = swap_operator(d);
        let proj = ComplexMatrix::identity(d * d).add(s.matrix()).scale_re(0.5);
        let eig = hermitian_eig(&proj, false).unwrap();
        let rank = eig.values.iter().filter(|&&x| x > 0.5).count();
        assert_eq!(rank, d * (d + 1) / 2);
    }

    #[test]
    fn born_rule_on_computational_measurement() {
        let psi = Ket::new(vec![re(0.6), re(0.8)]).unwrap();
        let rho = psi.density();
        let povm = Povm::new(vec![
            Ket::basis(2, 0).projector(),
            Ket::basis(2, 1).projector(),
        ])
        .unwrap();
        let p = born_probabilities(&rho, &povm).unwrap();
        assert!((p.probs()[0] - 0.36).abs() < 1e-12);
        assert!((p.probs()[1] - 0.64).abs() < 1e-12);

        let trivial = Povm::new(vec![HermitianOperator::identity(2)]).unwrap();
        let p1 = born_probabilities(&rho, &trivial).unwrap();
        assert!((p1.probs()[0] - 1.0).abs() < 1e-12);

        let mixed = DensityOperator::maximally_mixed(2);
        let hadamard_povm = Povm::new(vec![
            Ket::hadamard(true).projector(),
            Ket::hadamard(false).projector(),
        ])
        .unwrap();
        let p2 = born_probabilities(&mixed, &hadamard_povm).unwrap();
        assert!((p2.probs()[0] - 0.5).abs() < 1e-12);
        assert!((p2.probs()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn born_probabilities_sum_to_one_for_random_povm_and_state() {
        let mut rng = rng_from_seed(31);
        // random POVM: {U E U^dag} from a random projective decomposition,
        // coarse-grained into two effects
        let u = random_unitary(3, &mut rng);
        let mut e1 = ComplexMatrix::zeros(3, 3);
        for k in 0..2 {
            let col: Vec<Complex64> = (0..3).map(|i| u.get(i, k)).collect();
            e1 = e1.add(&ComplexMatrix::outer(&col, &col));
        }
        let e2 = ComplexMatrix::identity(3).sub(&e1);
        let povm = Povm::new(vec![
            HermitianOperator::new_unchecked(e1),
            HermitianOperator::new_unchecked(e2),
        ])
        .unwrap();
        let rho = random_density(3, &mut rng);
        let p = born_probabilities(&rho, &povm).unwrap();
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn povm_validation_rejects_incomplete_sets() {
        let bad = Povm::new(vec![Ket::basis(2, 0).projector()]);
        assert!(matches!(bad, Err(Error::IncompletePovm { .. })));
    }

    #[test]
    fn bloch_poles_and_center() {
        let north = bloch_to_density(&BlochVector::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!(
            north
                .matrix()
                .sub(Ket::basis(2, 0).projector().matrix())
                .max_abs()
                < 1e-14
        );
        let center = bloch_to_density(&BlochVector::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(
            center
                .matrix()
                .sub(&ComplexMatrix::identity(2).scale_re(0.5))
                .max_abs()
                < 1e-14
        );
        assert!(BlochVector::new(0.8, 0.8, 0.8).is_err());
    }

    #[test]
    fn bloch_eigenvalues_follow_the_radius() {
        let r = BlochVector::new(0.1, 0.3, 0.2).unwrap();
        let rho = bloch_to_density(&r).unwrap();
        let eig = rho.op().eigenvalues().unwrap();
        let radius = 0.14_f64.sqrt();
        assert!((eig[0] - (1.0 - radius) / 2.0).abs() < 1e-12);
        assert!((eig[1] - (1.0 + radius) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn bloch_round_trip_on_random_vectors() {
        let mut rng = rng_from_seed(57);
        for _ in 0..100 {
            use rand::Rng;
            let mut v = [0.0; 3];
            loop {
                for x in &mut v {
                    *x = 2.0 * rng.gen::<f64>() - 1.0;
                }
                if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                    break;
                }
            }
            let r = BlochVector::new(v[0], v[1], v[2]).unwrap();
            let back = density_to_bloch(&bloch_to_density(&r).unwrap()).unwrap();
            assert!((back.x - r.x).abs() < 1e-12);
            assert!((back.y - r.y).abs() < 1e-12);
            assert!((back.z - r.z).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_norm_basics() {
        assert!((trace_norm(&pauli_z()) - 2.0).abs() < 1e-13);
        assert!((infinity_norm(&HermitianOperator::identity(5)) - 1.0).abs() < 1e-13);
        // orthogonal projectors with equal weights: eigenvalues +-1/2
        let p1 = Ket::basis(2, 0).projector();
        let p2 = Ket::basis(2, 1).projector();
        let diff = p1.scale(0.5).sub(&p2.scale(0.5));
        assert!((trace_norm(diff.matrix()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn trace_norm_is_unitarily_invariant() {
        let mut rng = rng_from_seed(71);
        for _ in 0..5 {
            let m = random_matrix(4, 4, &mut rng);
            let u = random_unitary(4, &mut rng);
            let v = random_unitary(4, &mut rng);
            let rotated = u.matmul(&m).matmul(&v);
            assert!((trace_norm(&rotated) - trace_norm(&m)).abs() < 1e-9);
        }
    }

    #[test]
    fn schmidt_rank_detects_entanglement() {
        let chi = Ket::max_entangled(2);
        let info = pure_state_is_entangled(&chi, &SystemDims::two(2, 2)).unwrap();
        assert!(info.entangled);
        assert_eq!(info.schmidt_rank, 2);

        let plus = Ket::hadamard(true);
        let prod = plus.tensor(&plus);
        let info = pure_state_is_entangled(&prod, &SystemDims::two(2, 2)).unwrap();
        assert!(!info.entangled);
        assert_eq!(info.schmidt_rank, 1);

        let phi3 = Ket::max_entangled(3);
        let info = pure_state_is_entangled(&phi3, &SystemDims::two(3, 3)).unwrap();
        assert!(info.entangled);
        assert_eq!(info.schmidt_rank, 3);

        assert!(pure_state_is_entangled(&chi, &SystemDims::new(vec![2, 2, 1]).unwrap()).is_err());
    }

    #[test]
    fn density_operator_validation() {
        // eigenvalues real, nonnegative, summing to one on random states
        let mut rng = rng_from_seed(3);
        for _ in 0..10 {
            let rho = random_density(4, &mut rng);
            let eig = rho.op().eigenvalues().unwrap();
            assert!(eig.iter().all(|&x| x >= -1e-10));
            assert!((eig.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        // non-unit trace rejected
        let bad = DensityOperator::from_matrix(ComplexMatrix::identity(2));
        assert!(matches!(bad, Err(Error::BadTrace { .. })));
        // negative operator rejected
        let neg = DensityOperator::from_matrix(ComplexMatrix::from_diag(&[1.5, -0.5]));
        assert!(matches!(neg, Err(Error::NotPsd { .. })));
    }

    #[test]
    fn hadamard_maps_computational_to_hadamard_basis() {
        let h = hadamard_matrix();
        let plus = h.matvec(Ket::basis(2, 0).amplitudes());
        for (a, b) in plus.iter().zip(Ket::hadamard(true).amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        // H |1> = |->
        let minus = h.matvec(Ket::basis(2, 1).amplitudes());
        for (a, b) in minus.iter().zip(Ket::hadamard(false).amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        // unitary and Hermitian, so H^2 = I
        let hh = h.matmul(&h);
        assert!(hh.sub(&ComplexMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn permutation_operator_reorders_slots() {
        let dims = SystemDims::new(vec![2, 3, 2]).unwrap();
        let perm = permutation_operator(&dims, &[2, 0, 1]).unwrap();
        // check action on a basis vector |1, 2, 0>
        let x = dims.ravel(&[1, 2, 0]);
        let out_dims = SystemDims::new(vec![2, 2, 3]).unwrap();
        let y = out_dims.ravel(&[0, 1, 2]);
        assert_eq!(perm.get(y, x), re(1.0));
        // permutation operators are unitary
        let gram = perm.adjoint().matmul(&perm);
        assert!(gram.sub(&ComplexMatrix::identity(12)).max_abs() < 1e-15);
    }
}
