//! Primal-dual interior-point solver for real symmetric LMI problems
//!
//!   minimize    c . x
//!   subject to  G_t(x) = F_t0 + sum_j x_j F_tj  >=  0   for each block t
//!
//! with free scalar variables `x`. Infeasible-start path following with
//! the HKM/KSH direction and Mehrotra's predictor-corrector; the Schur
//! complement `M_ij = sum_t Tr(F_ti S_t^-1 F_tj Y_t)` is assembled with
//! sparse/dense coefficient strategies and factored by dense Cholesky.

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, RealMat};

/// Coefficient matrix of one scalar variable inside one block. Sparse
/// triplets are kept for elementary coefficients; anything dense enough is
/// stored as a full matrix.
#[derive(Debug, Clone)]
pub enum CoefMat {
    Sparse(Vec<(usize, usize, f64)>),
    Dense(RealMat),
}

impl CoefMat {
    /// Chooses the representation by filling ratio.
    pub fn dense_or_sparse(m: RealMat) -> CoefMat {
        let n = m.rows();
        let nnz = m.data().iter().filter(|&&v| v.abs() > 1e-14).count();
        if nnz * 4 <= n {
            let mut triplets = Vec::with_capacity(nnz);
            for i in 0..n {
                for j in 0..n {
                    let v = m.get(i, j);
                    if v.abs() > 1e-14 {
                        triplets.push((i, j, v));
                    }
                }
            }
            CoefMat::Sparse(triplets)
        } else {
            CoefMat::Dense(m)
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, CoefMat::Sparse(_))
    }

    pub fn nnz(&self) -> usize {
        match self {
            CoefMat::Sparse(t) => t.len(),
            CoefMat::Dense(m) => m.rows() * m.cols(),
        }
    }

    /// `out += w * F`.
    pub fn add_scaled_into(&self, out: &mut RealMat, w: f64) {
        match self {
            CoefMat::Sparse(triplets) => {
                for &(i, j, v) in triplets {
                    out.add_to(i, j, w * v);
                }
            }
            CoefMat::Dense(m) => out.add_scaled(m, w),
        }
    }

    /// `Tr(F W)` for an arbitrary (not necessarily symmetric) `W`.
    pub fn dot_with(&self, w: &RealMat) -> f64 {
        match self {
            CoefMat::Sparse(triplets) => triplets
                .iter()
                .map(|&(i, j, v)| v * w.get(j, i))
                .sum(),
            CoefMat::Dense(m) => {
                let n = m.rows();
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += m.get(i, j) * w.get(j, i);
                    }
                }
                acc
            }
        }
    }

    /// Max-abs entry.
    pub fn max_abs(&self) -> f64 {
        match self {
            CoefMat::Sparse(t) => t.iter().map(|&(_, _, v)| v.abs()).fold(0.0, f64::max),
            CoefMat::Dense(m) => m.max_abs(),
        }
    }
}

/// One LMI block `F0 + sum_j x_j F_j >= 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    /// Real symmetric dimension (twice the complex dimension for embedded
    /// blocks).
    pub dim: usize,
    /// Complex dimension before embedding; equals `dim` for blocks read
    /// from SDPA files.
    pub complex_dim: usize,
    pub f0: RealMat,
    /// `(variable index, coefficient)`, sorted by variable index.
    pub coeffs: Vec<(usize, CoefMat)>,
}

/// Solver-level problem: free scalar variables under LMI blocks.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub n: usize,
    pub c: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
}

/// Termination status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

/// Options controlling one solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

/// Raw solver output in internal (minimization) convention.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub primal_internal: f64,
    pub dual_internal: f64,
    pub gap: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

struct Workspace {
    s: Vec<RealMat>,
    y: Vec<RealMat>,
    /// per-block present coefficients ordered sparse-first
    order: Vec<Vec<usize>>,
}

pub fn ipm_solve(prob: &LmiProblem, opts: &SolveOptions) -> Result<RawSolution> {
    let n = prob.n;

    // variables that appear in no block can only make the problem
    // unbounded (nonzero cost) or are irrelevant (zero cost)
    let mut present = vec![false; n];
    for blk in &prob.blocks {
        for (j, _) in &blk.coeffs {
            present[*j] = true;
        }
    }
    for j in 0..n {
        if !present[j] && prob.c[j].abs() > 1e-12 {
            return Ok(RawSolution {
                status: SolveStatus::Unbounded,
                x: vec![0.0; n],
                primal_internal: f64::NEG_INFINITY,
                dual_internal: f64::NEG_INFINITY,
                gap: f64::INFINITY,
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
            });
        }
    }
    let active: Vec<usize> = (0..n).filter(|&j| present[j]).collect();
    let na = active.len();
    let pos_of: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (p, &j) in active.iter().enumerate() {
            v[j] = Some(p);
        }
        v
    };

    if na == 0 {
        // pure feasibility of the constants
        let mut feasible = true;
        for blk in &prob.blocks {
            let eigs = crate::linalg::sym_eigenvalues(&blk.f0)?;
            if eigs.first().copied().unwrap_or(0.0) < -1e-9 {
                feasible = false;
            }
        }
        return Ok(RawSolution {
            status: if feasible {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            },
            x: vec![0.0; n],
            primal_internal: 0.0,
            dual_internal: 0.0,
            gap: 0.0,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
        });
    }

    // initialization: x = 0, S = tau I, Y = tau I
    let tau = prob
        .blocks
        .iter()
        .map(|b| b.f0.frobenius_norm())
        .fold(1.0_f64, f64::max);
    let mut ws = Workspace {
        s: prob
            .blocks
            .iter()
            .map(|b| RealMat::scaled_identity(b.dim, tau))
            .collect(),
        y: prob
            .blocks
            .iter()
            .map(|b| RealMat::scaled_identity(b.dim, tau))
            .collect(),
        order: prob
            .blocks
            .iter()
            .map(|b| {
                let mut idx: Vec<usize> = (0..b.coeffs.len()).collect();
                idx.sort_by_key(|&k| (!b.coeffs[k].1.is_sparse(), b.coeffs[k].0));
                idx
            })
            .collect(),
    };

    let mut x = vec![0.0; n];
    let nu: usize = prob.blocks.iter().map(|b| b.dim).sum();
    let mut best = RawSolution {
        status: SolveStatus::MaxIter,
        x: x.clone(),
        primal_internal: 0.0,
        dual_internal: 0.0,
        gap: f64::INFINITY,
        iterations: 0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
    };

    for iter in 0..opts.max_iter {
        // residuals
        let gx: Vec<RealMat> = prob
            .blocks
            .iter()
            .map(|b| {
                let mut g = b.f0.clone();
                for (j, coef) in &b.coeffs {
                    if x[*j] != 0.0 {
                        coef.add_scaled_into(&mut g, x[*j]);
                    }
                }
                g
            })
            .collect();
        let rp: Vec<RealMat> = gx
            .iter()
            .zip(ws.s.iter())
            .map(|(g, s)| g.sub(s))
            .collect();
        let mut rd = vec![0.0; na];
        for (t, blk) in prob.blocks.iter().enumerate() {
            for (j, coef) in &blk.coeffs {
                let p = pos_of[*j].unwrap();
                rd[p] -= coef.dot_with(&ws.y[t]);
            }
        }
        for (p, &j) in active.iter().enumerate() {
            rd[p] += prob.c[j];
        }

        let p_res = rp.iter().map(|m| m.max_abs()).fold(0.0, f64::max);
        let d_res = rd.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let pv: f64 = prob.c.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        let dv: f64 = -prob
            .blocks
            .iter()
            .enumerate()
            .map(|(t, b)| b.f0.dot(&ws.y[t]))
            .sum::<f64>();
        let gap = (pv - dv).abs();
        let mu: f64 = ws
            .s
            .iter()
            .zip(ws.y.iter())
            .map(|(s, y)| s.dot(y))
            .sum::<f64>()
            / nu as f64;

        if opts.verbose {
            eprintln!(
                "iter {iter:3}  primal {pv:+.9e}  dual {dv:+.9e}  gap {gap:.3e}  pres {p_res:.3e}  dres {d_res:.3e}  mu {mu:.3e}"
            );
        }

        best = RawSolution {
            status: best.status,
            x: x.clone(),
            primal_internal: pv,
            dual_internal: dv,
            gap,
            iterations: iter,
            primal_residual: p_res,
            dual_residual: d_res,
        };

        if p_res <= opts.tol_feas && d_res <= opts.tol_feas && gap <= opts.tol_gap {
            best.status = SolveStatus::Optimal;
            return Ok(best);
        }
        if !pv.is_finite() || !dv.is_finite() {
            best.status = SolveStatus::NumericalFailure;
            return Ok(best);
        }
        if pv < -1e12 && p_res <= 1e-6 {
            best.status = SolveStatus::Unbounded;
            return Ok(best);
        }
        if x.iter().any(|v| v.abs() > 1e13) {
            // primal iterates exploding while feasibility stalls
            best.status = if p_res > 1e-4 {
                SolveStatus::Infeasible
            } else {
                SolveStatus::Unbounded
            };
            return Ok(best);
        }

        // factorizations of the current iterates
        let chol_s: Vec<Cholesky> = match ws.s.iter().map(Cholesky::new).collect::<Option<_>>() {
            Some(v) => v,
            None => {
                best.status = SolveStatus::NumericalFailure;
                return Ok(best);
            }
        };
        let sinv: Vec<RealMat> = chol_s.iter().map(|c| c.inverse()).collect();

        // Schur complement M
        let mut m = RealMat::zeros(na, na);
        for (t, blk) in prob.blocks.iter().enumerate() {
            let order = &ws.order[t];
            for (ob, &kb) in order.iter().enumerate() {
                let (jb, coefb) = &blk.coeffs[kb];
                let pb = pos_of[*jb].unwrap();
                match coefb {
                    CoefMat::Dense(fb) => {
                        // W = S^-1 F_b Y
                        let w = sinv[t].matmul(fb).matmul(&ws.y[t]);
                        for &ka in order.iter().take(ob + 1) {
                            let (ja, coefa) = &blk.coeffs[ka];
                            let pa = pos_of[*ja].unwrap();
                            let val = coefa.dot_with(&w);
                            let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
                            m.add_to(lo, hi, val);
                        }
                    }
                    CoefMat::Sparse(tb) => {
                        for &ka in order.iter().take(ob + 1) {
                            let (ja, coefa) = &blk.coeffs[ka];
                            let pa = pos_of[*ja].unwrap();
                            let ta = match coefa {
                                CoefMat::Sparse(t) => t,
                                CoefMat::Dense(_) => unreachable!("sparse-first ordering"),
                            };
                            let mut val = 0.0;
                            for &(a, b, va) in ta {
                                for &(cc, dd, vb) in tb {
                                    val += va * vb * sinv[t].get(b, cc) * ws.y[t].get(dd, a);
                                }
                            }
                            let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
                            m.add_to(lo, hi, val);
                        }
                    }
                }
            }
        }
        for i in 0..na {
            for j in i + 1..na {
                let v = m.get(i, j);
                m.set(j, i, v);
            }
        }

        // factor M, escalating regularization on breakdown
        let mean_diag = (0..na).map(|i| m.get(i, i)).sum::<f64>() / na as f64;
        let mut chol_m = Cholesky::new(&m);
        let mut reg = 1e-14 * mean_diag.max(1.0);
        while chol_m.is_none() && reg < 1e-5 * mean_diag.max(1.0) {
            let mut mr = m.clone();
            for i in 0..na {
                mr.add_to(i, i, reg);
            }
            chol_m = Cholesky::new(&mr);
            reg *= 100.0;
        }
        let chol_m = match chol_m {
            Some(c) => c,
            None => {
                best.status = SolveStatus::NumericalFailure;
                return Ok(best);
            }
        };

        let solve_direction = |rc: &[RealMat]| -> (Vec<f64>, Vec<RealMat>, Vec<RealMat>) {
            // rhs_i = sum_t <F_ti, S^-1 (R_C - R_P Y)> - r_i
            let mut rhs = vec![0.0; na];
            let vmats: Vec<RealMat> = (0..prob.blocks.len())
                .map(|t| {
                    let inner = rc[t].sub(&rp[t].matmul(&ws.y[t]));
                    sinv[t].matmul(&inner)
                })
                .collect();
            for (t, blk) in prob.blocks.iter().enumerate() {
                for (j, coef) in &blk.coeffs {
                    let p = pos_of[*j].unwrap();
                    rhs[p] += coef.dot_with(&vmats[t]);
                }
            }
            for p in 0..na {
                rhs[p] -= rd[p];
            }
            let dx = chol_m.solve_vec(&rhs);
            let ds: Vec<RealMat> = prob
                .blocks
                .iter()
                .enumerate()
                .map(|(t, blk)| {
                    let mut d = rp[t].clone();
                    for (j, coef) in &blk.coeffs {
                        let w = dx[pos_of[*j].unwrap()];
                        if w != 0.0 {
                            coef.add_scaled_into(&mut d, w);
                        }
                    }
                    d
                })
                .collect();
            let dy: Vec<RealMat> = (0..prob.blocks.len())
                .map(|t| {
                    let inner = rc[t].sub(&ds[t].matmul(&ws.y[t]));
                    let mut d = sinv[t].matmul(&inner);
                    d.symmetrize();
                    d
                })
                .collect();
            (dx, ds, dy)
        };

        // predictor: R_C = -S Y
        let rc_aff: Vec<RealMat> = (0..prob.blocks.len())
            .map(|t| {
                let mut r = ws.s[t].matmul(&ws.y[t]);
                r.scale_in_place(-1.0);
                r
            })
            .collect();
        let (_dx_a, ds_a, dy_a) = solve_direction(&rc_aff);

        let chol_y: Vec<Cholesky> = match ws.y.iter().map(Cholesky::new).collect::<Option<_>>() {
            Some(v) => v,
            None => {
                best.status = SolveStatus::NumericalFailure;
                return Ok(best);
            }
        };
        let step_p_aff = step_length(&chol_s, &ds_a)?;
        let step_d_aff = step_length(&chol_y, &dy_a)?;

        // Mehrotra centering parameter
        let mut mu_aff = 0.0;
        for t in 0..prob.blocks.len() {
            let mut s_new = ws.s[t].clone();
            s_new.add_scaled(&ds_a[t], step_p_aff);
            let mut y_new = ws.y[t].clone();
            y_new.add_scaled(&dy_a[t], step_d_aff);
            mu_aff += s_new.dot(&y_new);
        }
        mu_aff = (mu_aff / nu as f64).max(0.0);
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-10, 1.0);

        // corrector: R_C = sigma mu I - S Y - dS_aff dY_aff
        let rc_corr: Vec<RealMat> = (0..prob.blocks.len())
            .map(|t| {
                let mut r = RealMat::scaled_identity(prob.blocks[t].dim, sigma * mu);
                let sy = ws.s[t].matmul(&ws.y[t]);
                r.add_scaled(&sy, -1.0);
                let cross = ds_a[t].matmul(&dy_a[t]);
                r.add_scaled(&cross, -1.0);
                r
            })
            .collect();
        let (dx, ds, dy) = solve_direction(&rc_corr);

        let alpha_p = (0.98 * step_length(&chol_s, &ds)?).min(1.0);
        let alpha_d = (0.98 * step_length(&chol_y, &dy)?).min(1.0);

        if opts.verbose {
            eprintln!("          sigma {sigma:.3e}  alpha_p {alpha_p:.3e}  alpha_d {alpha_d:.3e}");
        }
        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            best.status = SolveStatus::NumericalFailure;
            return Ok(best);
        }

        for (p, &j) in active.iter().enumerate() {
            x[j] += alpha_p * dx[p];
        }
        for t in 0..prob.blocks.len() {
            ws.s[t].add_scaled(&ds[t], alpha_p);
            ws.s[t].symmetrize();
            ws.y[t].add_scaled(&dy[t], alpha_d);
            ws.y[t].symmetrize();
        }
        best.iterations = iter + 1;
    }

    best.status = SolveStatus::MaxIter;
    Ok(best)
}

/// Largest multiple of the direction keeping every factored block PSD,
/// scaled by nothing (the fraction-to-boundary factor is applied by the
/// caller).
fn step_length(chols: &[Cholesky], dirs: &[RealMat]) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (c, d) in chols.iter().zip(dirs.iter()) {
        alpha = alpha.min(c.max_step(d)?);
    }
    if !alpha.is_finite() {
        return Ok(1.0e16);
    }
    Ok(alpha)
}

impl std::fmt::Display for LmiProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LMI problem: {} variables, {} blocks ({:?})",
            self.n,
            self.blocks.len(),
            self.blocks.iter().map(|b| b.dim).collect::<Vec<_>>()
        )
    }
}

impl LmiProblem {
    /// Errors unless every coefficient is symmetric and dimensions agree;
    /// used by the SDPA reader and by tests.
    pub fn validate(&self) -> Result<()> {
        for (t, blk) in self.blocks.iter().enumerate() {
            if blk.f0.rows() != blk.dim || blk.f0.cols() != blk.dim {
                return Err(Error::DimMismatch(format!(
                    "block {t}: constant is {}x{}, dim is {}",
                    blk.f0.rows(),
                    blk.f0.cols(),
                    blk.dim
                )));
            }
            for (j, coef) in &blk.coeffs {
                if *j >= self.n {
                    return Err(Error::BadExpression(format!(
                        "block {t}: coefficient references variable {j} out of {}",
                        self.n
                    )));
                }
                if let CoefMat::Dense(m) = coef {
                    if m.rows() != blk.dim || m.cols() != blk.dim {
                        return Err(Error::DimMismatch(format!(
                            "block {t}: coefficient matrix for variable {j} has wrong shape"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
