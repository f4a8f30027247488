//! Lowering from the complex Hermitian model to the real LMI form the
//! interior-point solver consumes.
//!
//! Each matrix variable of dimension `d` becomes `d^2` real coordinates
//! (diagonal entries, then real/imaginary parts of the upper triangle).
//! PSD variables and PSD constraints become LMI blocks whose coefficient
//! matrices are the real symmetric embeddings of complex Hermitian
//! coefficients. Equality constraints expand into real scalar rows and are
//! eliminated through a pivoted-QR nullspace, so the solver always sees an
//! unconstrained-coordinate LMI problem.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::solver::{CoefMat, LmiBlock, LmiProblem, RawSolution, SolveStatus};
use super::{EqConstraint, LinMap, MatExpr, SdpProblem, SdpSolution, Sense, VarKind, VarValue};
use crate::error::{Error, Result};
use crate::linalg::{nullspace, ComplexMatrix, RealMat};
use crate::quantum::HermitianOperator;

/// Relative pivot threshold used when ranking equality rows.
const RANK_TOL: f64 = 1e-9;
/// Allowed inconsistency of the equality system before the problem is
/// declared infeasible.
const CONSISTENCY_TOL: f64 = 1e-7;

/// The real symmetric embedding `H -> [[Re H, -Im H], [Im H, Re H]]` of a
/// complex Hermitian block, together with its bookkeeping rules:
/// `Tr(embed(H)) = 2 Tr(H)`, so Frobenius pairings pick up a factor 1/2,
/// and `H >= 0` iff `embed(H) >= 0` (each eigenvalue appears twice).
#[derive(Debug, Clone)]
pub struct RealEmbedding {
    /// Complex dimension of each embedded block, in block order.
    pub block_dims: Vec<usize>,
}

impl RealEmbedding {
    /// Pairing compensation: `<scale * embed(G), embed(X)> = Tr(G X)`.
    pub const PAIRING_SCALE: f64 = 0.5;

    /// `[[Re H, -Im H], [Im H, Re H]]`.
    pub fn embed_matrix(h: &ComplexMatrix) -> RealMat {
        let n = h.rows();
        let mut out = RealMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = h.get(i, j);
                out.set(i, j, z.re);
                out.set(n + i, n + j, z.re);
                out.set(i, n + j, -z.im);
                out.set(n + i, j, z.im);
            }
        }
        out
    }

    /// Averages the two embedded copies back into a Hermitian matrix.
    pub fn reconstruct_matrix(y: &RealMat) -> ComplexMatrix {
        let n = y.rows() / 2;
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            let re = 0.5 * (y.get(i, j) + y.get(n + i, n + j));
            let im = 0.5 * (y.get(n + i, j) - y.get(i, n + j));
            Complex64::new(re, im)
        });
        m.hermitian_part()
    }
}

/// Coordinate layout of one matrix variable: diagonal first, then
/// real/imaginary pairs of the upper triangle in row-major order.
#[derive(Debug, Clone)]
pub(crate) struct CoordLayout {
    pub offset: usize,
    pub dim: usize,
}

impl CoordLayout {
    pub fn n_coords(&self) -> usize {
        self.dim * self.dim
    }

    /// Basis matrix of local coordinate `k` as sparse complex entries.
    pub fn basis_entries(&self, k: usize) -> Vec<(usize, usize, Complex64)> {
        let d = self.dim;
        if k < d {
            return vec![(k, k, Complex64::new(1.0, 0.0))];
        }
        let mut idx = k - d;
        // locate the (p, q) pair and whether this is the re or im coord
        let (pair, is_im) = (idx / 2, idx % 2 == 1);
        idx = pair;
        let mut p = 0;
        let mut remaining = idx;
        loop {
            let row_pairs = d - 1 - p;
            if remaining < row_pairs {
                break;
            }
            remaining -= row_pairs;
            p += 1;
        }
        let q = p + 1 + remaining;
        if is_im {
            vec![
                (p, q, Complex64::new(0.0, 1.0)),
                (q, p, Complex64::new(0.0, -1.0)),
            ]
        } else {
            vec![
                (p, q, Complex64::new(1.0, 0.0)),
                (q, p, Complex64::new(1.0, 0.0)),
            ]
        }
    }

    /// Local coordinate values of a Hermitian matrix.
    pub fn coords_of(&self, h: &ComplexMatrix) -> Vec<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        for p in 0..d {
            out.push(h.get(p, p).re);
        }
        for p in 0..d {
            for q in p + 1..d {
                out.push(h.get(p, q).re);
                out.push(h.get(p, q).im);
            }
        }
        out
    }

    /// Rebuilds the Hermitian matrix from local coordinates.
    pub fn matrix_of(&self, coords: &[f64]) -> ComplexMatrix {
        let d = self.dim;
        let mut m = ComplexMatrix::zeros(d, d);
        for p in 0..d {
            m.set(p, p, Complex64::new(coords[p], 0.0));
        }
        let mut k = d;
        for p in 0..d {
            for q in p + 1..d {
                let z = Complex64::new(coords[k], coords[k + 1]);
                m.set(p, q, z);
                m.set(q, p, z.conj());
                k += 2;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub(crate) enum VarLayout {
    Matrix(CoordLayout),
    Scalar { coord: usize },
}

/// Result of lowering: the solver-ready LMI problem plus everything needed
/// to map a raw solution back to named variables.
pub struct LoweredSdp {
    pub lmi: LmiProblem,
    pub embedding: RealEmbedding,
    pub(crate) layouts: Vec<VarLayout>,
    /// Original-coordinate affine parametrization `v = v0 + basis * u`.
    pub(crate) v0: Vec<f64>,
    pub(crate) basis: Option<RealMat>,
    /// Report-space transform: `reported = offset + sign * internal_min`.
    pub(crate) report_offset: f64,
    pub(crate) negate: bool,
    /// Full equality system kept for residual reporting.
    pub(crate) eq_matrix: RealMat,
    pub(crate) eq_rhs: Vec<f64>,
}

/// Spec'd entry point: lowers and returns the embedded real problem with
/// its embedding metadata.
pub fn embed(p: &SdpProblem) -> Result<(LmiProblem, RealEmbedding)> {
    let lowered = lower(p)?;
    Ok((lowered.lmi.clone(), lowered.embedding.clone()))
}

/// Lowers a problem to the reduced real LMI form.
pub fn lower(p: &SdpProblem) -> Result<LoweredSdp> {
    // 1. coordinate layout
    let mut layouts = Vec::with_capacity(p.vars().len());
    let mut n_coords = 0usize;
    for decl in p.vars() {
        match decl.kind {
            VarKind::HermitianPsd(d) | VarKind::Hermitian(d) => {
                layouts.push(VarLayout::Matrix(CoordLayout {
                    offset: n_coords,
                    dim: d,
                }));
                n_coords += d * d;
            }
            VarKind::FreeReal => {
                layouts.push(VarLayout::Scalar { coord: n_coords });
                n_coords += 1;
            }
        }
    }

    // 2. objective on coordinates (internal sense: minimize)
    let (obj_matrix, obj_free, obj_offset) = p.objective_parts();
    let sign = match p.sense() {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let mut c = vec![0.0; n_coords];
    for (&v, coeff) in obj_matrix {
        if let VarLayout::Matrix(layout) = &layouts[v] {
            let d = layout.dim;
            for p_ in 0..d {
                c[layout.offset + p_] += sign * coeff.get(p_, p_).re;
            }
            let mut k = d;
            for p_ in 0..d {
                for q in p_ + 1..d {
                    c[layout.offset + k] += sign * 2.0 * coeff.get(p_, q).re;
                    c[layout.offset + k + 1] += sign * 2.0 * coeff.get(p_, q).im;
                    k += 2;
                }
            }
        }
    }
    for (&v, &w) in obj_free {
        if let VarLayout::Scalar { coord } = layouts[v] {
            c[coord] += sign * w;
        }
    }

    // 3. LMI blocks: PSD-kind variables, then PSD constraints
    let mut blocks = Vec::new();
    for (v, decl) in p.vars().iter().enumerate() {
        if let VarKind::HermitianPsd(d) = decl.kind {
            if let VarLayout::Matrix(layout) = &layouts[v] {
                let mut coeffs = Vec::with_capacity(d * d);
                for k in 0..layout.n_coords() {
                    let entries = layout.basis_entries(k);
                    coeffs.push((layout.offset + k, embed_sparse(&entries, d)));
                }
                blocks.push(LmiBlock {
                    dim: 2 * d,
                    complex_dim: d,
                    f0: RealMat::zeros(2 * d, 2 * d),
                    coeffs,
                });
            }
        }
    }
    for expr in p.psd_constraints() {
        blocks.push(lower_psd_expr(expr, &layouts)?);
    }
    if blocks.is_empty() {
        return Err(Error::BadExpression(
            "problem has no PSD variable or constraint".into(),
        ));
    }

    // 4. equality rows
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for eq in p.eq_constraints() {
        expand_equality(eq, &layouts, &mut rows, &mut rhs);
    }
    let m = rows.len();
    let mut eq_matrix = RealMat::zeros(m, n_coords);
    for (r, row) in rows.iter().enumerate() {
        for &(cidx, val) in row {
            eq_matrix.add_to(r, cidx, val);
        }
    }

    // 5. eliminate equalities through the nullspace
    let (v0, basis) = if m == 0 {
        (vec![0.0; n_coords], None)
    } else {
        let ns = nullspace(&eq_matrix, &rhs, RANK_TOL);
        let scale = rhs.iter().map(|x| x.abs()).fold(1.0, f64::max);
        if ns.residual > CONSISTENCY_TOL * scale {
            return Err(Error::Solver(format!(
                "equality constraints are inconsistent (residual {:.3e})",
                ns.residual
            )));
        }
        (ns.particular, Some(ns.basis))
    };

    let (lmi, report_offset) = reduce(&blocks, &c, &v0, basis.as_ref(), obj_offset, sign)?;

    Ok(LoweredSdp {
        lmi,
        embedding: RealEmbedding {
            block_dims: blocks.iter().map(|b| b.complex_dim).collect(),
        },
        layouts,
        v0,
        basis,
        report_offset,
        negate: sign < 0.0,
        eq_matrix,
        eq_rhs: rhs,
    })
}

/// Substitutes `v = v0 + B u` into blocks and objective.
fn reduce(
    blocks: &[LmiBlock],
    c: &[f64],
    v0: &[f64],
    basis: Option<&RealMat>,
    obj_offset: f64,
    sign: f64,
) -> Result<(LmiProblem, f64)> {
    match basis {
        None => {
            let lmi = LmiProblem {
                n: c.len(),
                c: c.to_vec(),
                blocks: blocks.to_vec(),
            };
            Ok((lmi, obj_offset))
        }
        Some(b) => {
            let nu = b.cols();
            // objective: c~ = B' c; constant c . v0
            let mut c_red = vec![0.0; nu];
            for j in 0..nu {
                c_red[j] = (0..c.len()).map(|i| c[i] * b.get(i, j)).sum();
            }
            let internal_const: f64 = c.iter().zip(v0.iter()).map(|(a, b)| a * b).sum();
            let mut new_blocks = Vec::with_capacity(blocks.len());
            for blk in blocks {
                let n = blk.dim;
                let mut f0 = blk.f0.clone();
                for (coord, coef) in &blk.coeffs {
                    let w = v0[*coord];
                    if w != 0.0 {
                        coef.add_scaled_into(&mut f0, w);
                    }
                }
                let mut coeffs: Vec<(usize, CoefMat)> = Vec::with_capacity(nu);
                for j in 0..nu {
                    let mut fj = RealMat::zeros(n, n);
                    let mut any = false;
                    for (coord, coef) in &blk.coeffs {
                        let w = b.get(*coord, j);
                        if w != 0.0 {
                            coef.add_scaled_into(&mut fj, w);
                            any = true;
                        }
                    }
                    if any && fj.max_abs() > 1e-14 {
                        coeffs.push((j, CoefMat::dense_or_sparse(fj)));
                    }
                }
                new_blocks.push(LmiBlock {
                    dim: n,
                    complex_dim: blk.complex_dim,
                    f0,
                    coeffs,
                });
            }
            let lmi = LmiProblem {
                n: nu,
                c: c_red,
                blocks: new_blocks,
            };
            // reported = obj_offset + sign * (internal_min)
            //          = [obj_offset + sign * internal_const] + sign * (c~ . u)
            Ok((lmi, obj_offset + sign * internal_const))
        }
    }
}

/// Embeds sparse complex Hermitian entries into real symmetric triplets.
fn embed_sparse(entries: &[(usize, usize, Complex64)], d: usize) -> CoefMat {
    let mut triplets = Vec::with_capacity(entries.len() * 2);
    for &(i, j, z) in entries {
        if z.re != 0.0 {
            triplets.push((i, j, z.re));
            triplets.push((d + i, d + j, z.re));
        }
        if z.im != 0.0 {
            triplets.push((i, d + j, -z.im));
            triplets.push((d + i, j, z.im));
        }
    }
    CoefMat::Sparse(triplets)
}

fn embed_dense(h: &ComplexMatrix) -> CoefMat {
    CoefMat::dense_or_sparse(RealEmbedding::embed_matrix(h))
}

/// Lowers one PSD constraint expression into an LMI block.
fn lower_psd_expr(expr: &MatExpr, layouts: &[VarLayout]) -> Result<LmiBlock> {
    let d = expr.dim();
    let f0 = RealEmbedding::embed_matrix(expr.constant_part());
    let mut coeffs: Vec<(usize, CoefMat)> = Vec::new();
    for (&v, (_, map)) in expr.matrix_terms() {
        let layout = match &layouts[v] {
            VarLayout::Matrix(l) => l,
            VarLayout::Scalar { .. } => unreachable!("validated at add time"),
        };
        for k in 0..layout.n_coords() {
            let basis = layout.basis_entries(k);
            let coef = match map {
                LinMap::Scale(c) => {
                    debug_assert!(c.im.abs() < 1e-12);
                    let scaled: Vec<(usize, usize, Complex64)> = basis
                        .iter()
                        .map(|&(i, j, z)| (i, j, z * c))
                        .collect();
                    embed_sparse(&scaled, d)
                }
                LinMap::General(_) => {
                    let mut input = ComplexMatrix::zeros(layout.dim, layout.dim);
                    for &(i, j, z) in &basis {
                        input.set(i, j, z);
                    }
                    let out = map.apply(&input, d).hermitian_part();
                    if out.max_abs() <= 1e-14 {
                        continue;
                    }
                    embed_dense(&out)
                }
            };
            coeffs.push((layout.offset + k, coef));
        }
    }
    for (&v, dmat) in expr.free_term_map() {
        let coord = match &layouts[v] {
            VarLayout::Scalar { coord } => *coord,
            VarLayout::Matrix(_) => unreachable!("validated at add time"),
        };
        coeffs.push((coord, embed_dense(dmat)));
    }
    coeffs.sort_by_key(|(c, _)| *c);
    Ok(LmiBlock {
        dim: 2 * d,
        complex_dim: d,
        f0,
        coeffs,
    })
}

/// Expands a matrix equality into real scalar rows. Hermitian-valued
/// expressions use the upper triangle (real and imaginary parts
/// separately); general expressions use every entry.
fn expand_equality(
    eq: &EqConstraint,
    layouts: &[VarLayout],
    rows: &mut Vec<Vec<(usize, f64)>>,
    rhs: &mut Vec<f64>,
) {
    let d = eq.expr.dim();
    let hermitian = eq.expr.is_hermitian_valued()
        && eq.rhs.hermiticity_residual() <= 1e-9 * (1.0 + eq.rhs.max_abs());
    // target entries: (p, q, want_imaginary_part)
    let mut targets: Vec<(usize, usize, bool)> = Vec::new();
    if hermitian {
        for p in 0..d {
            targets.push((p, p, false));
            for q in p + 1..d {
                targets.push((p, q, false));
                targets.push((p, q, true));
            }
        }
    } else {
        for p in 0..d {
            for q in 0..d {
                targets.push((p, q, false));
                targets.push((p, q, true));
            }
        }
    }

    // per-variable evaluated basis images, gathered once
    let diff = eq.rhs.sub(eq.expr.constant_part());
    let mut row_data: Vec<Vec<(usize, f64)>> = vec![Vec::new(); targets.len()];
    for (&v, (_, map)) in eq.expr.matrix_terms() {
        let layout = match &layouts[v] {
            VarLayout::Matrix(l) => l,
            VarLayout::Scalar { .. } => unreachable!(),
        };
        for k in 0..layout.n_coords() {
            let basis = layout.basis_entries(k);
            let mut input = ComplexMatrix::zeros(layout.dim, layout.dim);
            for &(i, j, z) in &basis {
                input.set(i, j, z);
            }
            let image = map.apply(&input, d);
            if image.max_abs() <= 1e-14 {
                continue;
            }
            for (t, &(p, q, im)) in targets.iter().enumerate() {
                let z = image.get(p, q);
                let val = if im { z.im } else { z.re };
                if val.abs() > 1e-14 {
                    row_data[t].push((layout.offset + k, val));
                }
            }
        }
    }
    for (&v, dmat) in eq.expr.free_term_map() {
        let coord = match &layouts[v] {
            VarLayout::Scalar { coord } => *coord,
            VarLayout::Matrix(_) => unreachable!(),
        };
        for (t, &(p, q, im)) in targets.iter().enumerate() {
            let z = dmat.get(p, q);
            let val = if im { z.im } else { z.re };
            if val.abs() > 1e-14 {
                row_data[t].push((coord, val));
            }
        }
    }
    for (t, &(p, q, im)) in targets.iter().enumerate() {
        let z = diff.get(p, q);
        let want = if im { z.im } else { z.re };
        let row = std::mem::take(&mut row_data[t]);
        if row.is_empty() {
            // constant row: keep only if it pins an inconsistency
            if want.abs() > 1e-10 {
                rows.push(row);
                rhs.push(want);
            }
            continue;
        }
        rows.push(row);
        rhs.push(want);
    }
}

impl LoweredSdp {
    /// Maps a raw solver result back to named variable values and reported
    /// objective values.
    pub(crate) fn interpret(&self, p: &SdpProblem, raw: RawSolution) -> Result<SdpSolution> {
        // v = v0 + B u
        let mut v = self.v0.clone();
        if let Some(b) = &self.basis {
            for i in 0..v.len() {
                let row = b.row(i);
                v[i] += row
                    .iter()
                    .zip(raw.x.iter())
                    .map(|(bij, uj)| bij * uj)
                    .sum::<f64>();
            }
        } else {
            v = raw.x.clone();
        }

        let s = if self.negate { -1.0 } else { 1.0 };
        let primal_value = self.report_offset + s * raw.primal_internal;
        let dual_value = self.report_offset + s * raw.dual_internal;

        let mut variable_values = BTreeMap::new();
        for (decl, layout) in p.vars().iter().zip(self.layouts.iter()) {
            let value = match layout {
                VarLayout::Matrix(l) => {
                    let coords = &v[l.offset..l.offset + l.n_coords()];
                    VarValue::Matrix(HermitianOperator::new_unchecked(l.matrix_of(coords)))
                }
                VarLayout::Scalar { coord } => VarValue::Scalar(v[*coord]),
            };
            variable_values.insert(decl.name.clone(), value);
        }

        // primal residual: block residual from the solver plus the full
        // (pre-elimination) equality system evaluated at v
        let mut eq_res = 0.0_f64;
        if self.eq_matrix.rows() > 0 {
            let ev = self.eq_matrix.matvec(&v);
            for (a, b) in ev.iter().zip(self.eq_rhs.iter()) {
                eq_res = eq_res.max((a - b).abs());
            }
        }
        let status = if raw.status == SolveStatus::Optimal && eq_res > 1e-6 {
            SolveStatus::NumericalFailure
        } else {
            raw.status
        };

        Ok(SdpSolution {
            status,
            primal_value,
            dual_value,
            gap: raw.gap,
            iterations: raw.iterations,
            residuals: (raw.primal_residual.max(eq_res), raw.dual_residual),
            variable_values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;
    use crate::quantum::pauli_y;
    use crate::rand_gen::{random_hermitian, rng_from_seed};

    #[test]
    fn one_dimensional_block_embeds_to_scaled_identity() {
        let mut h = ComplexMatrix::zeros(1, 1);
        h.set(0, 0, Complex64::new(3.5, 0.0));
        let e = RealEmbedding::embed_matrix(&h);
        assert_eq!(e.rows(), 2);
        assert_eq!(e.get(0, 0), 3.5);
        assert_eq!(e.get(1, 1), 3.5);
        assert_eq!(e.get(0, 1), 0.0);
    }

    #[test]
    fn pauli_y_embedding_has_paired_unit_eigenvalues() {
        let e = RealEmbedding::embed_matrix(&pauli_y());
        // purely imaginary Hermitian: the real part vanishes entirely
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(e.get(i, j), 0.0);
                assert_eq!(e.get(2 + i, 2 + j), 0.0);
            }
        }
        let eigs = sym_eigenvalues(&e).unwrap();
        assert!((eigs[0] + 1.0).abs() < 1e-12);
        assert!((eigs[1] + 1.0).abs() < 1e-12);
        assert!((eigs[2] - 1.0).abs() < 1e-12);
        assert!((eigs[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_preserves_spectra_and_round_trips() {
        let mut rng = rng_from_seed(33);
        for n in [2, 3, 5] {
            let h = random_hermitian(n, &mut rng);
            let e = RealEmbedding::embed_matrix(&h);
            // trace doubles
            assert!((e.trace() - 2.0 * h.trace().re).abs() < 1e-12);
            // min eigenvalue matches
            let her = crate::linalg::hermitian_eig(&h, false).unwrap();
            let emb = sym_eigenvalues(&e).unwrap();
            assert!((her.values[0] - emb[0]).abs() < 1e-10);
            // round trip is exact
            let back = RealEmbedding::reconstruct_matrix(&e);
            assert!(back.sub(&h).max_abs() < 1e-12);
            // pairing rule <0.5 embed(G), embed(X)> = Tr(G X)
            let g = random_hermitian(n, &mut rng);
            let eg = RealEmbedding::embed_matrix(&g);
            let pair = RealEmbedding::PAIRING_SCALE * eg.dot(&e);
            let want = g.frobenius_inner(&h).re;
            assert!((pair - want).abs() < 1e-10);
        }
    }

    #[test]
    fn coordinate_layout_round_trips() {
        let mut rng = rng_from_seed(44);
        let layout = CoordLayout { offset: 0, dim: 4 };
        let h = random_hermitian(4, &mut rng);
        let coords = layout.coords_of(&h);
        assert_eq!(coords.len(), 16);
        let back = layout.matrix_of(&coords);
        assert!(back.sub(&h).max_abs() < 1e-14);
        // basis entries reproduce the same matrix via linear combination
        let mut rebuilt = ComplexMatrix::zeros(4, 4);
        for (k, &xk) in coords.iter().enumerate() {
            for (i, j, z) in layout.basis_entries(k) {
                rebuilt.add_to(i, j, z * Complex64::new(xk, 0.0));
            }
        }
        assert!(rebuilt.sub(&h).max_abs() < 1e-14);
    }
}
