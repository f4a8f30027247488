//! Quantum channels in three interchangeable representations — Kraus
//! operator lists, Choi matrices, and transfer matrices — plus the named
//! constructors, channel composition, complementary channels, and weighted
//! differences of channels (superoperators).
//!
//! Conventions, fixed once here and asserted by the validators:
//!
//! * Choi matrices live on `H_b (x) H_a` with the output factor `b` as the
//!   slow index: `J = sum_ij B(|i><j|) (x) |i><j|`.
//! * Transfer matrices act on row-major vectorizations:
//!   `T vec(X) = vec(B(X))`, with `T = sum_k K_k (x) conj(K_k)`.
//! * Two channels are considered equal when their Choi matrices agree to
//!   `1e-9`; Kraus lists are never compared directly.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, MatrixLiteral};
use crate::quantum::{
    partial_trace_matrix, pauli_x, pauli_y, pauli_z, HermitianOperator, SystemDims,
};
use crate::tol::{Tolerances, DEFAULT_TOL};

/// CPTP map held as a list of Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new_with(dim_in, dim_out, kraus, &DEFAULT_TOL)
    }

    pub fn new_with(
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<ComplexMatrix>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::Domain("channel needs at least one Kraus operator".into()));
        }
        for k in &kraus {
            if k.rows() != dim_out || k.cols() != dim_in {
                return Err(Error::DimMismatch(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.rows(),
                    k.cols(),
                    dim_out,
                    dim_in
                )));
            }
        }
        let ch = KrausChannel {
            dim_in,
            dim_out,
            kraus,
        };
        let residual = ch.completeness_residual();
        if residual > tol.cptp {
            return Err(Error::NotCptp { residual });
        }
        Ok(ch)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Max-abs residual of `sum_k K_k^dagger K_k - I`.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            sum = sum.add(&k.adjoint().matmul(k));
        }
        sum.sub(&ComplexMatrix::identity(self.dim_in)).max_abs()
    }

    /// `B(A) = sum_k K_k A K_k^dagger`.
    pub fn apply(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        Ok(HermitianOperator::new_unchecked(
            self.apply_matrix(a.matrix())?,
        ))
    }

    pub fn apply_matrix(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.rows() != self.dim_in || a.cols() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "channel input is {}-dimensional, state is {}x{}",
                self.dim_in,
                a.rows(),
                a.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = out.add(&k.matmul(a).matmul(&k.adjoint()));
        }
        Ok(out)
    }

    /// `J = sum_k vec(K_k) vec(K_k)^dagger` on `H_b (x) H_a`.
    pub fn choi(&self) -> ChoiMatrix {
        let d = self.dim_out * self.dim_in;
        let mut j = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            let v = k.vec();
            for (r, vr) in v.iter().enumerate() {
                if vr.norm_sqr() == 0.0 {
                    continue;
                }
                for (c, vc) in v.iter().enumerate() {
                    j.add_to(r, c, vr * vc.conj());
                }
            }
        }
        ChoiMatrix {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix: HermitianOperator::new_unchecked(j),
        }
    }

    /// `T = sum_k K_k (x) conj(K_k)`.
    pub fn transfer(&self) -> TransferMatrix {
        let mut t = ComplexMatrix::zeros(
            self.dim_out * self.dim_out,
            self.dim_in * self.dim_in,
        );
        for k in &self.kraus {
            t = t.add(&k.kron(&k.conj()));
        }
        TransferMatrix {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            matrix: t,
        }
    }

    /// Serial composition `self . other` (`other` acts first).
    pub fn compose(&self, other: &KrausChannel) -> Result<KrausChannel> {
        if self.dim_in != other.dim_out {
            return Err(Error::DimMismatch(format!(
                "compose: left input dim {} vs right output dim {}",
                self.dim_in, other.dim_out
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for kc in &self.kraus {
            for kb in &other.kraus {
                kraus.push(kc.matmul(kb));
            }
        }
        KrausChannel::new(other.dim_in, self.dim_out, kraus)
    }

    /// Complementary channel to the environment: with `n` Kraus operators
    /// `K_k`, the complement has `d_b` Kraus operators `L_j` of shape
    /// `n x d_a` with `[L_j]_{k,i} = [K_k]_{j,i}`.
    pub fn complementary(&self) -> KrausChannel {
        let n = self.kraus.len();
        let mut kraus = Vec::with_capacity(self.dim_out);
        for j in 0..self.dim_out {
            let l = ComplexMatrix::from_fn(n, self.dim_in, |k, i| self.kraus[k].get(j, i));
            kraus.push(l);
        }
        KrausChannel::new(self.dim_in, n, kraus)
            .expect("complement of a CPTP map is CPTP")
    }

    /// Choi-matrix distance to another channel (max-abs entry difference).
    pub fn choi_distance(&self, other: &KrausChannel) -> f64 {
        self.choi()
            .matrix()
            .matrix()
            .sub(other.choi().matrix().matrix())
            .max_abs()
    }
}

/// JSON wire form for a channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelLiteral {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixLiteral>,
}

impl From<&KrausChannel> for ChannelLiteral {
    fn from(ch: &KrausChannel) -> Self {
        ChannelLiteral {
            dim_in: ch.dim_in,
            dim_out: ch.dim_out,
            kraus: ch.kraus.iter().map(MatrixLiteral::from).collect(),
        }
    }
}

impl TryFrom<&ChannelLiteral> for KrausChannel {
    type Error = Error;

    fn try_from(lit: &ChannelLiteral) -> Result<Self> {
        let kraus = lit
            .kraus
            .iter()
            .map(ComplexMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(lit.dim_in, lit.dim_out, kraus)
    }
}

impl Serialize for KrausChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelLiteral::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let lit = ChannelLiteral::deserialize(d)?;
        KrausChannel::try_from(&lit).map_err(serde::de::Error::custom)
    }
}

/// Choi representation on `H_b (x) H_a`, `b` slow.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: HermitianOperator,
}

impl ChoiMatrix {
    /// Validates positivity and the trace-preservation condition
    /// `Tr_b J = I_a`.
    pub fn new(dim_in: usize, dim_out: usize, matrix: HermitianOperator) -> Result<Self> {
        Self::new_with(dim_in, dim_out, matrix, &DEFAULT_TOL)
    }

    pub fn new_with(
        dim_in: usize,
        dim_out: usize,
        matrix: HermitianOperator,
        tol: &Tolerances,
    ) -> Result<Self> {
        if matrix.dim() != dim_in * dim_out {
            return Err(Error::DimMismatch(format!(
                "Choi matrix dim {} != dim_out*dim_in = {}",
                matrix.dim(),
                dim_in * dim_out
            )));
        }
        let min_eig = matrix.min_eigenvalue()?;
        if min_eig < -tol.psd {
            return Err(Error::BadChoi(format!(
                "not PSD: min eigenvalue {min_eig:.3e}"
            )));
        }
        let j = ChoiMatrix {
            dim_in,
            dim_out,
            matrix,
        };
        let residual = j.trace_preservation_residual()?;
        if residual > tol.cptp {
            return Err(Error::BadChoi(format!(
                "partial trace over the output differs from identity by {residual:.3e}"
            )));
        }
        Ok(j)
    }

    /// Skips CPTP validation; used for intermediate algebra.
    pub fn new_unchecked(dim_in: usize, dim_out: usize, matrix: HermitianOperator) -> Self {
        ChoiMatrix {
            dim_in,
            dim_out,
            matrix,
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &HermitianOperator {
        &self.matrix
    }

    pub fn system_dims(&self) -> SystemDims {
        SystemDims::two(self.dim_out, self.dim_in)
    }

    /// Max-abs residual of `Tr_b J - I_a`.
    pub fn trace_preservation_residual(&self) -> Result<f64> {
        let tr_b = partial_trace_matrix(self.matrix.matrix(), &self.system_dims(), &[1])?;
        Ok(tr_b.sub(&ComplexMatrix::identity(self.dim_in)).max_abs())
    }

    /// Kraus operators from the eigendecomposition, discarding eigenvalues
    /// below `tol_rank`. Fails on negative eigenvalues or broken trace
    /// preservation, reporting the offending residual.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        self.to_kraus_with(&DEFAULT_TOL)
    }

    pub fn to_kraus_with(&self, tol: &Tolerances) -> Result<KrausChannel> {
        let eig = self.matrix.eig()?;
        if eig.min() < -tol.psd {
            return Err(Error::BadChoi(format!(
                "not PSD: min eigenvalue {:.3e}",
                eig.min()
            )));
        }
        let residual = self.trace_preservation_residual()?;
        if residual > tol.cptp {
            return Err(Error::BadChoi(format!(
                "partial trace over the output differs from identity by {residual:.3e}"
            )));
        }
        let v = eig.vectors.as_ref().unwrap();
        let mut kraus = Vec::new();
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam <= tol.rank {
                continue;
            }
            let s = lam.sqrt();
            let col: Vec<Complex64> = (0..v.rows())
                .map(|i| v.get(i, k) * Complex64::new(s, 0.0))
                .collect();
            kraus.push(ComplexMatrix::unvec(self.dim_out, self.dim_in, &col));
        }
        KrausChannel::new_with(self.dim_in, self.dim_out, kraus, tol)
    }

    /// Reshuffle to the transfer matrix: `<kl|T|ij> = <ki|J|lj>`.
    pub fn to_transfer(&self) -> TransferMatrix {
        let (da, db) = (self.dim_in, self.dim_out);
        let j = self.matrix.matrix();
        let t = ComplexMatrix::from_fn(db * db, da * da, |row, col| {
            let (k, l) = (row / db, row % db);
            let (i, jx) = (col / da, col % da);
            j.get(k * da + i, l * da + jx)
        });
        TransferMatrix {
            dim_in: da,
            dim_out: db,
            matrix: t,
        }
    }

    /// Normalized Choi state `J / d_a`.
    pub fn to_state(&self) -> Result<crate::quantum::DensityOperator> {
        crate::quantum::DensityOperator::from_matrix(
            self.matrix.matrix().scale_re(1.0 / self.dim_in as f64),
        )
    }
}

/// Matrix of a superoperator in the elementary-dyad basis, acting on
/// row-major vectorizations.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl TransferMatrix {
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != dim_out * dim_out || matrix.cols() != dim_in * dim_in {
            return Err(Error::DimMismatch(format!(
                "transfer matrix must be {}x{}, got {}x{}",
                dim_out * dim_out,
                dim_in * dim_in,
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(TransferMatrix {
            dim_in,
            dim_out,
            matrix,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(Error::DimMismatch(format!(
                "transfer input must be {0}x{0}",
                self.dim_in
            )));
        }
        let v = self.matrix.matvec(&x.vec());
        Ok(ComplexMatrix::unvec(self.dim_out, self.dim_out, &v))
    }

    /// Inverse reshuffle back to the Choi matrix.
    pub fn to_choi_matrix(&self) -> ComplexMatrix {
        let (da, db) = (self.dim_in, self.dim_out);
        ComplexMatrix::from_fn(db * da, db * da, |row, col| {
            let (k, i) = (row / da, row % da);
            let (l, jx) = (col / da, col % da);
            self.matrix.get(k * db + l, i * da + jx)
        })
    }

    pub fn compose(&self, inner: &TransferMatrix) -> Result<TransferMatrix> {
        if self.dim_in != inner.dim_out {
            return Err(Error::DimMismatch("transfer composition dims".into()));
        }
        TransferMatrix::new(
            inner.dim_in,
            self.dim_out,
            self.matrix.matmul(&inner.matrix),
        )
    }
}

/// Linear map between operator spaces with no CPTP requirement; in this
/// crate, weighted differences `t B1 - (1-t) B2` of channels. The transfer
/// and Choi-like forms are computed on demand and cached write-once.
#[derive(Debug)]
pub struct Superoperator {
    dim_in: usize,
    dim_out: usize,
    terms: Vec<(f64, KrausChannel)>,
    transfer: OnceLock<TransferMatrix>,
    choi_like: OnceLock<ComplexMatrix>,
}

impl Clone for Superoperator {
    fn clone(&self) -> Self {
        Superoperator {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            terms: self.terms.clone(),
            transfer: OnceLock::new(),
            choi_like: OnceLock::new(),
        }
    }
}

impl Superoperator {
    /// Weighted difference `t b1 - (1-t) b2`.
    pub fn difference(t: f64, b1: &KrausChannel, b2: &KrausChannel) -> Result<Self> {
        if b1.dim_in() != b2.dim_in() || b1.dim_out() != b2.dim_out() {
            return Err(Error::DimMismatch(
                "superoperator difference needs channels of equal shape".into(),
            ));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("prior t must lie in [0,1], got {t}")));
        }
        Ok(Superoperator {
            dim_in: b1.dim_in(),
            dim_out: b1.dim_out(),
            terms: vec![(t, b1.clone()), (-(1.0 - t), b2.clone())],
            transfer: OnceLock::new(),
            choi_like: OnceLock::new(),
        })
    }

    /// A single channel viewed as a superoperator.
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Superoperator {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            terms: vec![(1.0, ch.clone())],
            transfer: OnceLock::new(),
            choi_like: OnceLock::new(),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for (w, ch) in &self.terms {
            out = out.add(&ch.apply_matrix(x)?.scale_re(*w));
        }
        Ok(out)
    }

    pub fn transfer(&self) -> &TransferMatrix {
        self.transfer.get_or_init(|| {
            let mut t = ComplexMatrix::zeros(
                self.dim_out * self.dim_out,
                self.dim_in * self.dim_in,
            );
            for (w, ch) in &self.terms {
                t = t.add(&ch.transfer().matrix.scale_re(*w));
            }
            TransferMatrix {
                dim_in: self.dim_in,
                dim_out: self.dim_out,
                matrix: t,
            }
        })
    }

    /// Hermitian (not necessarily PSD) Choi-form matrix on `H_b (x) H_a`.
    pub fn choi_like(&self) -> &ComplexMatrix {
        self.choi_like.get_or_init(|| {
            let mut j = ComplexMatrix::zeros(
                self.dim_out * self.dim_in,
                self.dim_out * self.dim_in,
            );
            for (w, ch) in &self.terms {
                j = j.add(&ch.choi().matrix().matrix().scale_re(*w));
            }
            j.hermitian_part()
        })
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Identity channel on a `d`-dimensional system.
pub fn identity_channel(d: usize) -> KrausChannel {
    KrausChannel::new(d, d, vec![ComplexMatrix::identity(d)]).unwrap()
}

/// Erasure channel: the input passes untouched with probability `1 - p`,
/// otherwise the erased flag `|e>` (last output basis vector) is produced.
pub fn erasure(dim_in: usize, p: f64) -> Result<KrausChannel> {
    check_probability("erasure probability p", p)?;
    let dout = dim_in + 1;
    let mut kraus = Vec::with_capacity(dim_in + 1);
    let mut keep = ComplexMatrix::zeros(dout, dim_in);
    for i in 0..dim_in {
        keep.set(i, i, Complex64::new((1.0 - p).sqrt(), 0.0));
    }
    kraus.push(keep);
    for i in 0..dim_in {
        let mut k = ComplexMatrix::zeros(dout, dim_in);
        k.set(dim_in, i, Complex64::new(p.sqrt(), 0.0));
        kraus.push(k);
    }
    KrausChannel::new(dim_in, dout, kraus)
}

/// Qubit depolarizing channel with Pauli Kraus operators and
/// `p = 3 (1 - lambda) / 4`.
pub fn depolarizing_qubit(lambda: f64) -> Result<KrausChannel> {
    if !(-1.0 / 3.0 - 1e-12..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "qubit depolarizing parameter must lie in [-1/3, 1], got {lambda}"
        )));
    }
    let p = 3.0 * (1.0 - lambda) / 4.0;
    let p = p.clamp(0.0, 1.0);
    let kraus = vec![
        ComplexMatrix::identity(2).scale_re((1.0 - p).sqrt()),
        pauli_x().scale_re((p / 3.0).sqrt()),
        pauli_y().scale_re((p / 3.0).sqrt()),
        pauli_z().scale_re((p / 3.0).sqrt()),
    ];
    KrausChannel::new(2, 2, kraus)
}

/// Qubit depolarizing channel parametrized by the Pauli error probability
/// `p` in `[0, 1]` (`lambda = 1 - 4p/3`).
pub fn depolarizing_qubit_from_error(p: f64) -> Result<KrausChannel> {
    check_probability("depolarizing error probability p", p)?;
    depolarizing_qubit(1.0 - 4.0 * p / 3.0)
}

/// Qudit depolarizing channel `rho -> lambda rho + (1-lambda) Tr(rho) I/d`,
/// built from its Choi matrix. The lower bound `-1/(d^2-1)` is the
/// complete-positivity boundary.
pub fn depolarizing_qudit(d: usize, lambda: f64) -> Result<KrausChannel> {
    let lo = -1.0 / ((d * d - 1) as f64);
    if !(lo - 1e-12..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "qudit depolarizing parameter must lie in [{lo}, 1], got {lambda}"
        )));
    }
    let dd = d * d;
    // J = lambda |gamma><gamma| + (1-lambda)/d I
    let mut j = ComplexMatrix::zeros(dd, dd);
    for i in 0..d {
        for k in 0..d {
            j.set(i * d + i, k * d + k, Complex64::new(lambda, 0.0));
        }
    }
    for i in 0..dd {
        j.add_to(i, i, Complex64::new((1.0 - lambda) / d as f64, 0.0));
    }
    ChoiMatrix::new(d, d, HermitianOperator::new_unchecked(j))?.to_kraus()
}

/// Qubit dephasing channel `rho -> (1-q) rho + q Z rho Z`.
pub fn dephasing(q: f64) -> Result<KrausChannel> {
    check_probability("dephasing probability q", q)?;
    let kraus = vec![
        ComplexMatrix::identity(2).scale_re((1.0 - q).sqrt()),
        pauli_z().scale_re(q.sqrt()),
    ];
    KrausChannel::new(2, 2, kraus)
}

/// First Werner-Holevo channel: `rho -> (Tr(rho) I + rho^T) / (d + 1)`,
/// Choi matrix `(I + S) / (d + 1)`.
pub fn werner_holevo_1(d: usize) -> Result<KrausChannel> {
    let s = crate::quantum::swap_operator(d);
    let j = ComplexMatrix::identity(d * d)
        .add(s.matrix())
        .scale_re(1.0 / (d as f64 + 1.0));
    ChoiMatrix::new(d, d, HermitianOperator::new_unchecked(j))?.to_kraus()
}

/// Second Werner-Holevo channel: `rho -> (Tr(rho) I - rho^T) / (d - 1)`,
/// Choi matrix `(I - S) / (d - 1)`; needs `d >= 2`.
pub fn werner_holevo_2(d: usize) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::Domain("Werner-Holevo channel 2 needs d >= 2".into()));
    }
    let s = crate::quantum::swap_operator(d);
    let j = ComplexMatrix::identity(d * d)
        .sub(s.matrix())
        .scale_re(1.0 / (d as f64 - 1.0));
    ChoiMatrix::new(d, d, HermitianOperator::new_unchecked(j))?.to_kraus()
}

/// Entanglement-breaking measure-and-prepare channel with rank-one Kraus
/// operators `|0><0|` and `|1><1|`.
pub fn measure_computational() -> KrausChannel {
    let mut k0 = ComplexMatrix::zeros(2, 2);
    k0.set(0, 0, Complex64::new(1.0, 0.0));
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1.set(1, 1, Complex64::new(1.0, 0.0));
    KrausChannel::new(2, 2, vec![k0, k1]).unwrap()
}

/// `D := t B1 - (1 - t) B2`.
pub fn superop_difference(
    t: f64,
    b1: &KrausChannel,
    b2: &KrausChannel,
) -> Result<Superoperator> {
    Superoperator::difference(t, b1, b2)
}

/// Resolves a channel by name and parameter; the vocabulary the CLI and
/// sweep presets share.
pub fn named_channel(name: &str, param: f64, d: usize) -> Result<KrausChannel> {
    match name {
        "identity" => Ok(identity_channel(d)),
        "erasure" => erasure(d, param),
        "depolarizing" => {
            if d == 2 {
                depolarizing_qubit_from_error(param)
            } else {
                Err(Error::Domain(
                    "depolarizing by error probability is defined for qubits; use depolarizing-lambda for qudits".into(),
                ))
            }
        }
        "depolarizing-lambda" => {
            if d == 2 {
                depolarizing_qubit(param)
            } else {
                depolarizing_qudit(d, param)
            }
        }
        "dephasing" => dephasing(param),
        "werner-holevo-1" => werner_holevo_1(d),
        "werner-holevo-2" => werner_holevo_2(d),
        "measure" => Ok(measure_computational()),
        other => Err(Error::Domain(format!("unknown channel name `{other}`"))),
    }
}

/// Eigendecomposition-based check that two Choi spectra agree; used where
/// channels match only up to an output relabeling.
pub fn choi_spectra_match(a: &KrausChannel, b: &KrausChannel, tol: f64) -> Result<bool> {
    let ea = hermitian_eig(a.choi().matrix().matrix(), false)?;
    let eb = hermitian_eig(b.choi().matrix().matrix(), false)?;
    if ea.values.len() != eb.values.len() {
        return Ok(false);
    }
    Ok(ea
        .values
        .iter()
        .zip(eb.values.iter())
        .all(|(x, y)| (x - y).abs() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{
        bloch_to_density, density_to_bloch, partial_transpose_matrix, swap_operator,
        von_neumann_entropy, BlochVector, DensityOperator, Ket,
    };
    use crate::rand_gen::{random_channel, random_density, random_hermitian, rng_from_seed};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn erasure_kraus_operators_match_matrix_display() {
        let p = 0.3_f64;
        let ch = erasure(2, p).unwrap();
        assert_eq!(ch.kraus().len(), 3);
        let k1 = &ch.kraus()[0];
        for i in 0..2 {
            assert!((k1.get(i, i) - re((1.0 - p).sqrt())).norm() < 1e-15);
        }
        assert!((ch.kraus()[1].get(2, 0) - re(p.sqrt())).norm() < 1e-15);
        assert!((ch.kraus()[2].get(2, 1) - re(p.sqrt())).norm() < 1e-15);
        // block form of the output: (1-p) rho on the kept block, p on |e><e|
        let mut rng = rng_from_seed(2);
        let rho = random_density(2, &mut rng);
        let out = ch.apply(rho.op()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (out.matrix().get(i, j) - rho.matrix().get(i, j) * re(1.0 - p)).norm() < 1e-12
                );
                assert!(out.matrix().get(i, 2).norm() < 1e-12);
            }
        }
        assert!((out.matrix().get(2, 2) - re(p)).norm() < 1e-12);
    }

    #[test]
    fn identity_channel_leaves_states_unchanged() {
        let mut rng = rng_from_seed(5);
        let rho = random_density(3, &mut rng);
        let ch = identity_channel(3);
        let out = ch.apply(rho.op()).unwrap();
        assert!(out.matrix().sub(rho.matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn depolarizing_shrinks_the_bloch_sphere() {
        let lambda = 0.6;
        let ch = depolarizing_qubit(lambda).unwrap();
        let r = BlochVector::new(0.2, -0.4, 0.5).unwrap();
        let rho = bloch_to_density(&r).unwrap();
        let out = DensityOperator::new(ch.apply(rho.op()).unwrap()).unwrap();
        let rb = density_to_bloch(&out).unwrap();
        assert!((rb.x - lambda * r.x).abs() < 1e-12);
        assert!((rb.y - lambda * r.y).abs() < 1e-12);
        assert!((rb.z - lambda * r.z).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_at_lambda_one_is_identity() {
        let ch = depolarizing_qubit(1.0).unwrap();
        assert!(ch.choi_distance(&identity_channel(2)) < 1e-12);
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        assert!(matches!(depolarizing_qubit(-0.4), Err(Error::Domain(_))));
        assert!(matches!(depolarizing_qubit(1.1), Err(Error::Domain(_))));
        assert!(matches!(erasure(2, 1.5), Err(Error::Domain(_))));
        assert!(matches!(dephasing(-0.1), Err(Error::Domain(_))));
        assert!(matches!(depolarizing_qudit(3, -0.2), Err(Error::Domain(_))));
        // the qudit lower bound -1/(d^2-1) itself is accepted
        assert!(depolarizing_qudit(3, -1.0 / 8.0).is_ok());
    }

    #[test]
    fn choi_of_identity_is_unnormalized_max_entangled_projector() {
        let ch = identity_channel(2);
        let j = ch.choi();
        let gamma = ComplexMatrix::outer(
            &[re(1.0), re(0.0), re(0.0), re(1.0)],
            &[re(1.0), re(0.0), re(0.0), re(1.0)],
        );
        assert!(j.matrix().matrix().sub(&gamma).max_abs() < 1e-14);
        // equivalently 2 |phi_2><phi_2|
        let phi = Ket::max_entangled(2);
        let want = phi.projector().scale(2.0);
        assert!(j.matrix().matrix().sub(want.matrix()).max_abs() < 1e-14);
    }

    #[test]
    fn choi_of_werner_holevo_channels() {
        for d in [2, 3] {
            let s = swap_operator(d);
            let j1 = werner_holevo_1(d).unwrap().choi();
            let want1 = ComplexMatrix::identity(d * d)
                .add(s.matrix())
                .scale_re(1.0 / (d as f64 + 1.0));
            assert!(j1.matrix().matrix().sub(&want1).max_abs() < 1e-10);
            let j2 = werner_holevo_2(d).unwrap().choi();
            let want2 = ComplexMatrix::identity(d * d)
                .sub(s.matrix())
                .scale_re(1.0 / (d as f64 - 1.0));
            assert!(j2.matrix().matrix().sub(&want2).max_abs() < 1e-10);
        }
    }

    #[test]
    fn werner_holevo_2_applies_as_transpose_form() {
        let d = 3;
        let ch = werner_holevo_2(d).unwrap();
        let mut rng = rng_from_seed(9);
        let rho = random_density(d, &mut rng);
        let got = ch.apply(rho.op()).unwrap();
        let want = ComplexMatrix::identity(d)
            .scale_re(rho.matrix().trace().re)
            .sub(&rho.matrix().transpose())
            .scale_re(1.0 / (d as f64 - 1.0));
        assert!(got.matrix().sub(&want).max_abs() < 1e-10);
    }

    #[test]
    fn measure_channel_choi_is_diagonal() {
        let j = measure_computational().choi();
        let want = ComplexMatrix::from_diag(&[1.0, 0.0, 0.0, 1.0]);
        assert!(j.matrix().matrix().sub(&want).max_abs() < 1e-14);
    }

    #[test]
    fn choi_round_trip_preserves_the_channel() {
        let mut rng = rng_from_seed(17);
        for _ in 0..10 {
            let ch = random_channel(2, 3, 2, &mut rng);
            let back = ch.choi().to_kraus().unwrap();
            assert!(ch.choi_distance(&back) < 1e-9);
        }
    }

    #[test]
    fn random_channels_have_valid_choi() {
        let mut rng = rng_from_seed(19);
        for i in 0..50 {
            let (din, dout, nk) = match i % 4 {
                0 => (2, 2, 2),
                1 => (2, 3, 2),
                2 => (3, 2, 3),
                _ => (3, 3, 2),
            };
            let ch = random_channel(din, dout, nk, &mut rng);
            assert!(ch.completeness_residual() < 1e-10);
            let j = ch.choi();
            // validating constructor checks PSD and Tr_b J = I_a
            ChoiMatrix::new(din, dout, j.matrix().clone()).unwrap();
        }
    }

    #[test]
    fn transfer_of_identity_is_identity() {
        let t = identity_channel(2).transfer();
        assert!(t.matrix().sub(&ComplexMatrix::identity(4)).max_abs() < 1e-14);
    }

    #[test]
    fn reshuffle_is_an_involution_and_matches_entrywise_rule() {
        let mut rng = rng_from_seed(29);
        for _ in 0..8 {
            let ch = random_channel(2, 3, 2, &mut rng);
            let j = ch.choi();
            let t = j.to_transfer();
            // <kl|T|ij> = <ki|J|lj>
            let (da, db) = (2usize, 3usize);
            for k in 0..db {
                for l in 0..db {
                    for i in 0..da {
                        for jx in 0..da {
                            let lhs = t.matrix().get(k * db + l, i * da + jx);
                            let rhs = j.matrix().matrix().get(k * da + i, l * da + jx);
                            assert!((lhs - rhs).norm() < 1e-12);
                        }
                    }
                }
            }
            let back = t.to_choi_matrix();
            assert!(back.sub(j.matrix().matrix()).max_abs() < 1e-12);
            // and the kraus-built transfer agrees with the reshuffled one
            assert!(ch.transfer().matrix().sub(t.matrix()).max_abs() < 1e-12);
        }
    }

    /// Frobenius inner-product oracle for transfer-matrix entries:
    /// T_{kl,ij} = <|k><l|, B(|i><j|)>.
    fn transfer_oracle(ch: &KrausChannel) -> ComplexMatrix {
        let (da, db) = (ch.dim_in(), ch.dim_out());
        let mut t = ComplexMatrix::zeros(db * db, da * da);
        for i in 0..da {
            for j in 0..da {
                let mut eij = ComplexMatrix::zeros(da, da);
                eij.set(i, j, re(1.0));
                let out = ch.apply_matrix(&eij).unwrap();
                for k in 0..db {
                    for l in 0..db {
                        let mut ekl = ComplexMatrix::zeros(db, db);
                        ekl.set(k, l, re(1.0));
                        t.set(k * db + l, i * da + j, ekl.frobenius_inner(&out));
                    }
                }
            }
        }
        t
    }

    #[test]
    fn depolarizing_transfer_is_pauli_diagonal() {
        let lambda = 0.35;
        let ch = depolarizing_qubit(lambda).unwrap();
        let t = ch.transfer();
        assert!(t.matrix().sub(&transfer_oracle(&ch)).max_abs() < 1e-12);
        // diagonal entries (1, lambda, lambda, lambda) in the Pauli basis
        let paulis = [
            ComplexMatrix::identity(2),
            crate::quantum::pauli_x(),
            crate::quantum::pauli_y(),
            crate::quantum::pauli_z(),
        ];
        for (idx, sigma) in paulis.iter().enumerate() {
            let out = t.apply_matrix(sigma).unwrap();
            let want = if idx == 0 { 1.0 } else { lambda };
            assert!(out.sub(&sigma.scale_re(want)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn compose_with_identity_is_neutral() {
        let mut rng = rng_from_seed(37);
        let b = random_channel(2, 3, 2, &mut rng);
        let c = identity_channel(3).compose(&b).unwrap();
        assert!(c.choi_distance(&b) < 1e-12);
    }

    #[test]
    fn dephasing_composition_law() {
        let (q1, q2) = (0.2, 0.35);
        let composed = dephasing(q1).unwrap().compose(&dephasing(q2).unwrap()).unwrap();
        let expected = dephasing(q1 + q2 - 2.0 * q1 * q2).unwrap();
        assert!(composed.choi_distance(&expected) < 1e-12);
        // transfer matrices multiply
        let t = dephasing(q1)
            .unwrap()
            .transfer()
            .compose(&dephasing(q2).unwrap().transfer())
            .unwrap();
        assert!(t.matrix().sub(expected.transfer().matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn compose_choi_agrees_between_kraus_and_transfer_paths() {
        let mut rng = rng_from_seed(41);
        for _ in 0..6 {
            let b = random_channel(2, 3, 2, &mut rng);
            let c = random_channel(3, 2, 2, &mut rng);
            let composed = c.compose(&b).unwrap();
            let t_path = c.transfer().compose(&b.transfer()).unwrap().to_choi_matrix();
            assert!(
                composed.choi().matrix().matrix().sub(&t_path).max_abs() < 1e-10,
                "transfer and Kraus composition disagree"
            );
        }
    }

    #[test]
    fn complementary_of_dephasing_has_binary_entropy_output() {
        for q in [0.1, 0.25, 0.4] {
            let comp = dephasing(q).unwrap().complementary();
            assert!(comp.completeness_residual() < 1e-12);
            let mixed = DensityOperator::maximally_mixed(2);
            let out = DensityOperator::new(comp.apply(mixed.op()).unwrap()).unwrap();
            let s = von_neumann_entropy(&out).unwrap();
            let h = crate::quantum::binary_entropy(q).unwrap();
            assert!((s - h).abs() < 1e-10);
        }
    }

    #[test]
    fn complementary_channels_are_cptp_for_named_channels() {
        let named: Vec<KrausChannel> = vec![
            identity_channel(2),
            erasure(2, 0.3).unwrap(),
            depolarizing_qubit(0.4).unwrap(),
            depolarizing_qudit(3, 0.4).unwrap(),
            dephasing(0.25).unwrap(),
            werner_holevo_1(2).unwrap(),
            werner_holevo_2(3).unwrap(),
            measure_computational(),
        ];
        for ch in &named {
            let comp = ch.complementary();
            assert!(comp.completeness_residual() < 1e-10);
        }
    }

    #[test]
    fn double_complement_flips_the_entropy_bias() {
        let mut rng = rng_from_seed(43);
        let ch = random_channel(2, 2, 2, &mut rng);
        let comp = ch.complementary();
        let rho = random_density(2, &mut rng);
        let s_b = von_neumann_entropy(&DensityOperator::new(ch.apply(rho.op()).unwrap()).unwrap())
            .unwrap();
        let s_c =
            von_neumann_entropy(&DensityOperator::new(comp.apply(rho.op()).unwrap()).unwrap())
                .unwrap();
        // the complement of the complement has the original output entropy
        let cc = comp.complementary();
        let s_cc =
            von_neumann_entropy(&DensityOperator::new(cc.apply(rho.op()).unwrap()).unwrap())
                .unwrap();
        assert!((s_cc - s_b).abs() < 1e-10);
        // so I_c(B, rho) = -I_c(B^c, rho)
        assert!(((s_b - s_c) + (s_c - s_cc)).abs() < 1e-10);
    }

    #[test]
    fn erasure_complement_is_erasure_with_flipped_probability() {
        let p = 0.3;
        let comp = erasure(2, p).unwrap().complementary();
        let flipped = erasure(2, 1.0 - p).unwrap();
        assert!(choi_spectra_match(&comp, &flipped, 1e-9).unwrap());
    }

    #[test]
    fn apply_agrees_with_choi_contraction() {
        let mut rng = rng_from_seed(47);
        for _ in 0..10 {
            let ch = random_channel(3, 2, 2, &mut rng);
            let rho = random_density(3, &mut rng);
            let direct = ch.apply(rho.op()).unwrap();
            // Tr_a[ J (I_b (x) rho^T) ]
            let j = ch.choi();
            let contraction = j
                .matrix()
                .matrix()
                .matmul(&ComplexMatrix::identity(2).kron(&rho.matrix().transpose()));
            let got = crate::quantum::partial_trace_matrix(
                &contraction,
                &SystemDims::two(2, 3),
                &[0],
            )
            .unwrap();
            assert!(got.sub(direct.matrix()).max_abs() < 1e-10);
        }
    }

    #[test]
    fn superoperator_difference_examples() {
        // t=1/2 with equal channels: the zero map
        let ch = depolarizing_qubit(0.5).unwrap();
        let zero = superop_difference(0.5, &ch, &ch).unwrap();
        assert!(zero.transfer().matrix().max_abs() < 1e-14);
        assert!(zero.choi_like().max_abs() < 1e-14);

        // identity vs depolarizing: D(rho) = (1-lambda)/2 (rho - Tr(rho) I/2)
        let lambda = 0.3;
        let d = superop_difference(
            0.5,
            &identity_channel(2),
            &depolarizing_qubit(lambda).unwrap(),
        )
        .unwrap();
        let mut rng = rng_from_seed(53);
        let rho = random_hermitian(2, &mut rng);
        let got = d.apply_matrix(&rho).unwrap();
        let want = rho
            .sub(&ComplexMatrix::identity(2).scale_re(rho.trace().re / 2.0))
            .scale_re((1.0 - lambda) / 2.0);
        assert!(got.sub(&want).max_abs() < 1e-12);

        // Werner-Holevo pair: D(rho) = d/(d^2-1) (rho^T - Tr(rho) I/d)
        let dim = 3;
        let dwh = superop_difference(
            0.5,
            &werner_holevo_1(dim).unwrap(),
            &werner_holevo_2(dim).unwrap(),
        )
        .unwrap();
        let got = dwh.apply_matrix(&rho_embed(&rho, dim)).unwrap();
        let base = rho_embed(&rho, dim);
        let want = base
            .transpose()
            .sub(&ComplexMatrix::identity(dim).scale_re(base.trace().re / dim as f64))
            .scale_re(dim as f64 / ((dim * dim - 1) as f64));
        assert!(got.sub(&want).max_abs() < 1e-10);

        // transfer form is the weighted difference of the parts
        let t = d.transfer();
        let want_t = identity_channel(2)
            .transfer()
            .matrix()
            .scale_re(0.5)
            .sub(&depolarizing_qubit(lambda).unwrap().transfer().matrix().scale_re(0.5));
        assert!(t.matrix().sub(&want_t).max_abs() < 1e-12);
    }

    /// Pads a 2x2 Hermitian test matrix into dimension `d`.
    fn rho_embed(m: &ComplexMatrix, d: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(d, d, |i, j| {
            if i < 2 && j < 2 {
                m.get(i, j)
            } else if i == j {
                re(0.5)
            } else {
                re(0.0)
            }
        })
    }

    #[test]
    fn choi_like_of_difference_is_hermitian_not_psd() {
        let d = superop_difference(
            0.5,
            &identity_channel(2),
            &depolarizing_qubit(-1.0 / 3.0).unwrap(),
        )
        .unwrap();
        let j = d.choi_like();
        assert!(j.hermiticity_residual() < 1e-13);
        let eig = hermitian_eig(j, false).unwrap();
        assert!(eig.values[0] < -1e-3, "difference map should be indefinite");
    }

    #[test]
    fn partial_transpose_relates_werner_holevo_choi_matrices() {
        // J(B2) is proportional to the partial transpose of a projector
        // combination; sanity-check PT machinery against the swap identity
        // T_b(|gamma><gamma|) = S.
        let d = 3;
        let gamma = identity_channel(d).choi();
        let s = partial_transpose_matrix(
            gamma.matrix().matrix(),
            &SystemDims::two(d, d),
            1,
        )
        .unwrap();
        assert!(s.sub(swap_operator(d).matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn channel_json_round_trip_reports_residual() {
        let ch = erasure(2, 0.25).unwrap();
        let json = serde_json::to_string(&ch).unwrap();
        let back: KrausChannel = serde_json::from_str(&json).unwrap();
        assert!(ch.choi_distance(&back) < 1e-12);
        // corrupt one Kraus entry: loader must reject with the residual
        let mut lit: ChannelLiteral = serde_json::from_str(&json).unwrap();
        lit.kraus[0].re[0] = 0.9;
        let err = KrausChannel::try_from(&lit);
        assert!(matches!(err, Err(Error::NotCptp { .. })));
    }
}
