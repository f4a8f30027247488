//! Block-structured complex Hermitian semidefinite programs.
//!
//! A problem is a set of named variables (Hermitian matrix blocks,
//! optionally required PSD, and free real scalars), a real linear
//! objective, linear equality constraints between matrix expressions, and
//! affine expressions required positive semidefinite.
//!
//! Solving embeds every Hermitian block into a real symmetric block of
//! twice the dimension, expands equality constraints into independent real
//! scalar rows (eliminated through a pivoted-QR nullspace), and runs a
//! primal-dual interior-point iteration on the resulting linear-matrix-
//! inequality form; see [`embed`] and the solver module.

mod lower;
mod sdpa;
mod solver;

pub use lower::{embed, lower, LoweredSdp, RealEmbedding};
pub use sdpa::{export_sdpa, read_sdpa};
pub use solver::{CoefMat, LmiBlock, LmiProblem, RawSolution, SolveOptions, SolveStatus};

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::quantum::{
    partial_trace_matrix, partial_transpose_matrix, HermitianOperator, SystemDims,
};

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Handle to a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

/// Variable kinds: Hermitian matrix blocks (with or without a PSD
/// requirement) and free real scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    /// Hermitian and positive semidefinite.
    HermitianPsd(usize),
    /// Hermitian with no sign constraint.
    Hermitian(usize),
    /// Free real scalar.
    FreeReal,
}

#[derive(Debug, Clone)]
pub(crate) struct VarDecl {
    pub name: String,
    pub kind: VarKind,
}

/// Linear map applied to a matrix variable inside an expression.
#[derive(Debug, Clone)]
pub(crate) enum LinMap {
    /// `X -> c X`.
    Scale(Complex64),
    /// Transfer matrix acting on row-major vectorizations,
    /// `vec(L(X)) = T vec(X)`; shape `dim_out^2 x dim_in^2`.
    General(ComplexMatrix),
}

impl LinMap {
    fn add(self, other: LinMap, dim_in: usize, dim_out: usize) -> LinMap {
        match (self, other) {
            (LinMap::Scale(a), LinMap::Scale(b)) => LinMap::Scale(a + b),
            (a, b) => {
                let ta = a.into_transfer(dim_in, dim_out);
                let tb = b.into_transfer(dim_in, dim_out);
                LinMap::General(ta.add(&tb))
            }
        }
    }

    fn into_transfer(self, dim_in: usize, dim_out: usize) -> ComplexMatrix {
        match self {
            LinMap::Scale(c) => {
                assert_eq!(dim_in, dim_out);
                ComplexMatrix::identity(dim_in * dim_in).scale(c)
            }
            LinMap::General(t) => {
                debug_assert_eq!(t.rows(), dim_out * dim_out);
                debug_assert_eq!(t.cols(), dim_in * dim_in);
                t
            }
        }
    }

    fn scale(self, c: Complex64) -> LinMap {
        match self {
            LinMap::Scale(a) => LinMap::Scale(a * c),
            LinMap::General(t) => LinMap::General(t.scale(c)),
        }
    }

    /// Applies the map, exploiting sparsity of the input.
    pub(crate) fn apply(&self, x: &ComplexMatrix, dim_out: usize) -> ComplexMatrix {
        match self {
            LinMap::Scale(c) => x.scale(*c),
            LinMap::General(t) => {
                let din = x.rows();
                let mut out_vec = vec![Complex64::new(0.0, 0.0); dim_out * dim_out];
                for i in 0..din {
                    for j in 0..din {
                        let v = x.get(i, j);
                        if v.norm_sqr() == 0.0 {
                            continue;
                        }
                        let col = i * din + j;
                        for (r, acc) in out_vec.iter_mut().enumerate() {
                            *acc += t.get(r, col) * v;
                        }
                    }
                }
                ComplexMatrix::unvec(dim_out, dim_out, &out_vec)
            }
        }
    }

    /// Whether the map sends Hermitian matrices to Hermitian matrices:
    /// scale factors must be real, transfer matrices must reshuffle to a
    /// Hermitian (Choi-form) matrix.
    fn preserves_hermiticity(&self, dim_in: usize, dim_out: usize) -> bool {
        match self {
            LinMap::Scale(c) => c.im.abs() <= 1e-12 * (1.0 + c.re.abs()),
            LinMap::General(t) => {
                let (da, db) = (dim_in, dim_out);
                let mut residual = 0.0_f64;
                for k in 0..db {
                    for l in 0..db {
                        for i in 0..da {
                            for j in 0..da {
                                let a = t.get(k * db + l, i * da + j);
                                let b = t.get(l * db + k, j * da + i);
                                residual = residual.max((a - b.conj()).norm());
                            }
                        }
                    }
                }
                residual <= 1e-9 * (1.0 + t.max_abs())
            }
        }
    }
}

/// Affine matrix-valued expression over the variables of one problem:
/// `constant + sum_v L_v(X_v) + sum_j f_j D_j`.
#[derive(Debug, Clone)]
pub struct MatExpr {
    dim: usize,
    constant: ComplexMatrix,
    terms: BTreeMap<usize, (usize, LinMap)>, // var -> (var_dim, map)
    free_terms: BTreeMap<usize, ComplexMatrix>,
}

impl MatExpr {
    pub fn zero(dim: usize) -> Self {
        MatExpr {
            dim,
            constant: ComplexMatrix::zeros(dim, dim),
            terms: BTreeMap::new(),
            free_terms: BTreeMap::new(),
        }
    }

    pub fn constant(k: ComplexMatrix) -> Self {
        assert!(k.is_square());
        let dim = k.rows();
        MatExpr {
            dim,
            constant: k,
            terms: BTreeMap::new(),
            free_terms: BTreeMap::new(),
        }
    }

    /// The bare matrix variable.
    pub fn var(p: &SdpProblem, v: VarId) -> Self {
        let dim = p.matrix_dim(v).expect("MatExpr::var needs a matrix variable");
        let mut terms = BTreeMap::new();
        terms.insert(v.0, (dim, LinMap::Scale(Complex64::new(1.0, 0.0))));
        MatExpr {
            dim,
            constant: ComplexMatrix::zeros(dim, dim),
            terms,
            free_terms: BTreeMap::new(),
        }
    }

    /// `expr + f * D` for a free scalar `f` with coefficient matrix `D`.
    pub fn add_free(mut self, v: VarId, coeff: ComplexMatrix) -> Self {
        assert_eq!(coeff.rows(), self.dim);
        let entry = self
            .free_terms
            .entry(v.0)
            .or_insert_with(|| ComplexMatrix::zeros(self.dim, self.dim));
        *entry = entry.add(&coeff);
        self
    }

    /// `expr + mu * I`.
    pub fn add_free_identity(self, v: VarId) -> Self {
        let dim = self.dim;
        self.add_free(v, ComplexMatrix::identity(dim))
    }

    pub fn add_const(mut self, k: &ComplexMatrix) -> Self {
        assert_eq!(k.rows(), self.dim);
        self.constant = self.constant.add(k);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(mut self, c: f64) -> Self {
        let cc = Complex64::new(c, 0.0);
        self.constant = self.constant.scale(cc);
        for (_, (_, map)) in self.terms.iter_mut() {
            let taken = std::mem::replace(map, LinMap::Scale(Complex64::new(0.0, 0.0)));
            *map = taken.scale(cc);
        }
        for (_, d) in self.free_terms.iter_mut() {
            *d = d.scale(cc);
        }
        self
    }

    pub fn add(mut self, other: &MatExpr) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(format!(
                "adding expressions of dim {} and {}",
                self.dim, other.dim
            )));
        }
        self.constant = self.constant.add(&other.constant);
        for (&v, (vdim, map)) in &other.terms {
            match self.terms.remove(&v) {
                Some((d0, m0)) => {
                    debug_assert_eq!(d0, *vdim);
                    self.terms
                        .insert(v, (d0, m0.add(map.clone(), d0, self.dim)));
                }
                None => {
                    self.terms.insert(v, (*vdim, map.clone()));
                }
            }
        }
        for (&v, d) in &other.free_terms {
            let entry = self
                .free_terms
                .entry(v)
                .or_insert_with(|| ComplexMatrix::zeros(self.dim, self.dim));
            *entry = entry.add(d);
        }
        Ok(self)
    }

    pub fn sub(self, other: &MatExpr) -> Result<Self> {
        let negated = other.clone().scale(-1.0);
        self.add(&negated)
    }

    /// Post-composes a linear map given by its transfer matrix; the
    /// expression dimension becomes `dim_out`.
    pub fn apply_transfer(mut self, t: &ComplexMatrix, dim_out: usize) -> Self {
        assert_eq!(t.rows(), dim_out * dim_out);
        assert_eq!(t.cols(), self.dim * self.dim);
        let outer = LinMap::General(t.clone());
        self.constant = outer.apply(&self.constant, dim_out);
        let mut new_terms = BTreeMap::new();
        for (v, (vdim, map)) in std::mem::take(&mut self.terms) {
            let composed = match map {
                LinMap::Scale(c) => LinMap::General(t.scale(c)),
                LinMap::General(inner) => LinMap::General(t.matmul(&inner)),
            };
            new_terms.insert(v, (vdim, composed));
        }
        self.terms = new_terms;
        let mut new_free = BTreeMap::new();
        for (v, d) in std::mem::take(&mut self.free_terms) {
            new_free.insert(v, outer.apply(&d, dim_out));
        }
        self.free_terms = new_free;
        self.dim = dim_out;
        self
    }

    /// Partial trace over the subsystems not in `keep`.
    pub fn partial_trace(self, dims: &SystemDims, keep: &[usize]) -> Result<Self> {
        dims.check_total(self.dim)?;
        let keep_dim: usize = {
            let mut ks = keep.to_vec();
            ks.sort_unstable();
            ks.dedup();
            ks.iter().map(|&s| dims.dims()[s]).product()
        };
        let t = transfer_of_map(self.dim, keep_dim, |x| {
            partial_trace_matrix(x, dims, keep).expect("dims validated")
        });
        Ok(self.apply_transfer(&t, keep_dim))
    }

    /// Full trace as a 1x1 expression.
    pub fn trace(self) -> Result<Self> {
        let dim = self.dim;
        let dims = SystemDims::new(vec![dim])?;
        self.partial_trace(&dims, &[])
    }

    /// Partial transpose of subsystem `which`.
    pub fn partial_transpose(self, dims: &SystemDims, which: usize) -> Result<Self> {
        dims.check_total(self.dim)?;
        let dim = self.dim;
        let t = transfer_of_map(dim, dim, |x| {
            partial_transpose_matrix(x, dims, which).expect("dims validated")
        });
        Ok(self.apply_transfer(&t, dim))
    }

    /// Congruence `X -> M X M^dagger`.
    pub fn conjugate_by(self, m: &ComplexMatrix) -> Self {
        assert_eq!(m.cols(), self.dim);
        let t = m.kron(&m.conj());
        let dim_out = m.rows();
        self.apply_transfer(&t, dim_out)
    }

    /// Extracts the square sub-block of size `size` at `(r0, c0)`:
    /// `X -> P X Q^dagger` with selector matrices. The result is generally
    /// not Hermitian-valued.
    pub fn block(self, r0: usize, c0: usize, size: usize) -> Self {
        assert!(r0 + size <= self.dim && c0 + size <= self.dim);
        let dim = self.dim;
        let t = transfer_of_map(dim, size, |x| {
            ComplexMatrix::from_fn(size, size, |i, j| x.get(r0 + i, c0 + j))
        });
        self.apply_transfer(&t, size)
    }

    /// `X -> X (x) I_d`.
    pub fn kron_identity_right(self, d: usize) -> Self {
        let dim = self.dim;
        let t = transfer_of_map(dim, dim * d, |x| x.kron(&ComplexMatrix::identity(d)));
        self.apply_transfer(&t, dim * d)
    }

    /// `X -> I_d (x) X`.
    pub fn kron_identity_left(self, d: usize) -> Self {
        let dim = self.dim;
        let t = transfer_of_map(dim, dim * d, |x| ComplexMatrix::identity(d).kron(x));
        self.apply_transfer(&t, dim * d)
    }

    pub(crate) fn constant_part(&self) -> &ComplexMatrix {
        &self.constant
    }

    pub(crate) fn matrix_terms(&self) -> &BTreeMap<usize, (usize, LinMap)> {
        &self.terms
    }

    pub(crate) fn free_term_map(&self) -> &BTreeMap<usize, ComplexMatrix> {
        &self.free_terms
    }

    /// True when every term maps Hermitian inputs to Hermitian outputs and
    /// the constant is Hermitian.
    pub(crate) fn is_hermitian_valued(&self) -> bool {
        if self.constant.hermiticity_residual() > 1e-9 * (1.0 + self.constant.max_abs()) {
            return false;
        }
        for (_, (vdim, map)) in &self.terms {
            if !map.preserves_hermiticity(*vdim, self.dim) {
                return false;
            }
        }
        for (_, d) in &self.free_terms {
            if d.hermiticity_residual() > 1e-9 * (1.0 + d.max_abs()) {
                return false;
            }
        }
        true
    }

    /// Evaluates the expression at concrete variable values.
    pub fn evaluate(
        &self,
        matrices: &BTreeMap<usize, ComplexMatrix>,
        scalars: &BTreeMap<usize, f64>,
    ) -> ComplexMatrix {
        let mut out = self.constant.clone();
        for (v, (_, map)) in &self.terms {
            let x = matrices.get(v).expect("missing matrix value");
            out = out.add(&map.apply(x, self.dim));
        }
        for (v, d) in &self.free_terms {
            let f = scalars.get(v).copied().unwrap_or(0.0);
            out = out.add(&d.scale_re(f));
        }
        out
    }
}

/// Builds the transfer matrix of an arbitrary linear matrix map by
/// applying it to every elementary dyad.
pub fn transfer_of_map(
    dim_in: usize,
    dim_out: usize,
    f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> ComplexMatrix {
    let mut t = ComplexMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
    let mut e = ComplexMatrix::zeros(dim_in, dim_in);
    for i in 0..dim_in {
        for j in 0..dim_in {
            e.set(i, j, Complex64::new(1.0, 0.0));
            let out = f(&e);
            debug_assert_eq!(out.rows(), dim_out);
            for r in 0..dim_out {
                for c in 0..dim_out {
                    let v = out.get(r, c);
                    if v.norm_sqr() != 0.0 {
                        t.set(r * dim_out + c, i * dim_in + j, v);
                    }
                }
            }
            e.set(i, j, Complex64::new(0.0, 0.0));
        }
    }
    t
}

#[derive(Debug, Clone)]
pub(crate) struct EqConstraint {
    pub expr: MatExpr,
    pub rhs: ComplexMatrix,
}

/// Block-structured complex Hermitian SDP in variable/constraint form.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    sense: Sense,
    vars: Vec<VarDecl>,
    obj_matrix: BTreeMap<usize, ComplexMatrix>,
    obj_free: BTreeMap<usize, f64>,
    obj_offset: f64,
    eq_constraints: Vec<EqConstraint>,
    psd_constraints: Vec<MatExpr>,
}

impl SdpProblem {
    pub fn new(sense: Sense) -> Self {
        SdpProblem {
            sense,
            vars: Vec::new(),
            obj_matrix: BTreeMap::new(),
            obj_free: BTreeMap::new(),
            obj_offset: 0.0,
            eq_constraints: Vec::new(),
            psd_constraints: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_psd_var(&mut self, name: &str, dim: usize) -> VarId {
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::HermitianPsd(dim),
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_hermitian_var(&mut self, name: &str, dim: usize) -> VarId {
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::Hermitian(dim),
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_free_var(&mut self, name: &str) -> VarId {
        self.vars.push(VarDecl {
            name: name.to_string(),
            kind: VarKind::FreeReal,
        });
        VarId(self.vars.len() - 1)
    }

    pub(crate) fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    pub fn var_kind(&self, v: VarId) -> &VarKind {
        &self.vars[v.0].kind
    }

    pub fn matrix_dim(&self, v: VarId) -> Option<usize> {
        match self.vars[v.0].kind {
            VarKind::HermitianPsd(d) | VarKind::Hermitian(d) => Some(d),
            VarKind::FreeReal => None,
        }
    }

    /// Adds `Tr(C X_v)` to the objective; `C` must be Hermitian.
    pub fn objective_matrix(&mut self, v: VarId, c: &ComplexMatrix) -> Result<()> {
        let dim = self.matrix_dim(v).ok_or_else(|| {
            Error::BadExpression("matrix objective coefficient on a scalar variable".into())
        })?;
        if c.rows() != dim || c.cols() != dim {
            return Err(Error::DimMismatch("objective coefficient dimension".into()));
        }
        if c.hermiticity_residual() > 1e-9 * (1.0 + c.max_abs()) {
            return Err(Error::BadExpression(
                "objective coefficients must be Hermitian".into(),
            ));
        }
        let entry = self
            .obj_matrix
            .entry(v.0)
            .or_insert_with(|| ComplexMatrix::zeros(dim, dim));
        *entry = entry.add(c);
        Ok(())
    }

    /// Adds `w * f_v` to the objective for a free scalar variable.
    pub fn objective_scalar(&mut self, v: VarId, w: f64) -> Result<()> {
        if !matches!(self.vars[v.0].kind, VarKind::FreeReal) {
            return Err(Error::BadExpression(
                "scalar objective coefficient on a matrix variable".into(),
            ));
        }
        *self.obj_free.entry(v.0).or_insert(0.0) += w;
        Ok(())
    }

    pub fn objective_offset(&mut self, c: f64) {
        self.obj_offset += c;
    }

    pub(crate) fn objective_parts(
        &self,
    ) -> (&BTreeMap<usize, ComplexMatrix>, &BTreeMap<usize, f64>, f64) {
        (&self.obj_matrix, &self.obj_free, self.obj_offset)
    }

    /// Requires `expr == rhs` entrywise.
    pub fn add_eq(&mut self, expr: MatExpr, rhs: ComplexMatrix) -> Result<()> {
        if rhs.rows() != expr.dim() || rhs.cols() != expr.dim() {
            return Err(Error::DimMismatch(format!(
                "equality constraint: expression dim {} vs rhs {}x{}",
                expr.dim(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        self.check_vars(&expr)?;
        self.eq_constraints.push(EqConstraint { expr, rhs });
        Ok(())
    }

    /// Requires a 1x1 expression to equal a real scalar.
    pub fn add_eq_scalar(&mut self, expr: MatExpr, rhs: f64) -> Result<()> {
        if expr.dim() != 1 {
            return Err(Error::DimMismatch(
                "scalar equality needs a 1x1 expression".into(),
            ));
        }
        let mut k = ComplexMatrix::zeros(1, 1);
        k.set(0, 0, Complex64::new(rhs, 0.0));
        self.add_eq(expr, k)
    }

    /// Requires `expr >= 0`; the expression must be Hermitian-valued.
    pub fn add_psd(&mut self, expr: MatExpr) -> Result<()> {
        self.check_vars(&expr)?;
        if !expr.is_hermitian_valued() {
            return Err(Error::BadExpression(
                "PSD constraint on a non-Hermitian-valued expression".into(),
            ));
        }
        self.psd_constraints.push(expr);
        Ok(())
    }

    pub(crate) fn eq_constraints(&self) -> &[EqConstraint] {
        &self.eq_constraints
    }

    pub(crate) fn psd_constraints(&self) -> &[MatExpr] {
        &self.psd_constraints
    }

    fn check_vars(&self, expr: &MatExpr) -> Result<()> {
        for (&v, (vdim, _)) in expr.matrix_terms() {
            match self.vars.get(v).map(|d| &d.kind) {
                Some(VarKind::HermitianPsd(d)) | Some(VarKind::Hermitian(d)) if d == vdim => {}
                _ => {
                    return Err(Error::BadExpression(format!(
                        "expression references unknown or mismatched matrix variable #{v}"
                    )))
                }
            }
        }
        for &v in expr.free_term_map().keys() {
            if !matches!(self.vars.get(v).map(|d| &d.kind), Some(VarKind::FreeReal)) {
                return Err(Error::BadExpression(format!(
                    "expression references unknown free variable #{v}"
                )));
            }
        }
        Ok(())
    }

    /// Lowers, eliminates equalities, and runs the interior-point solver.
    pub fn solve(&self, opts: &SolveOptions) -> Result<SdpSolution> {
        let lowered = lower(self)?;
        let raw = solver::ipm_solve(&lowered.lmi, opts)?;
        lowered.interpret(self, raw)
    }
}

/// Typed variable value in a solution.
#[derive(Debug, Clone)]
pub enum VarValue {
    Matrix(HermitianOperator),
    Scalar(f64),
}

impl VarValue {
    pub fn as_matrix(&self) -> Option<&HermitianOperator> {
        match self {
            VarValue::Matrix(m) => Some(m),
            VarValue::Scalar(_) => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            VarValue::Scalar(s) => Some(*s),
            VarValue::Matrix(_) => None,
        }
    }
}

/// Solver verdict with matched primal/dual values and residuals.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    /// Absolute primal-dual gap `|primal - dual|` (sense-independent).
    pub gap: f64,
    pub iterations: usize,
    /// `(primal_feasibility, dual_feasibility)` max-abs residuals.
    pub residuals: (f64, f64),
    pub variable_values: BTreeMap<String, VarValue>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn matrix(&self, name: &str) -> Option<&HermitianOperator> {
        self.variable_values.get(name)?.as_matrix()
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.variable_values.get(name)?.as_scalar()
    }
}

/// Weak-duality report for a solved instance.
#[derive(Debug, Clone)]
pub struct DualityReport {
    pub sense: Sense,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub weak_duality_ok: bool,
    pub gap_consistent: bool,
}

/// Checks weak duality (min-sense primal >= dual - tol, reversed for max)
/// and that the reported gap equals `|primal - dual|`.
pub fn check_duality(sol: &SdpSolution, sense: Sense, tol: f64) -> DualityReport {
    let weak_duality_ok = match sense {
        Sense::Min => sol.primal_value >= sol.dual_value - tol,
        Sense::Max => sol.primal_value <= sol.dual_value + tol,
    };
    let gap_consistent = (sol.gap - (sol.primal_value - sol.dual_value).abs()).abs() <= tol;
    DualityReport {
        sense,
        primal_value: sol.primal_value,
        dual_value: sol.dual_value,
        gap: sol.gap,
        weak_duality_ok,
        gap_consistent,
    }
}
