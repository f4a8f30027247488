//! SDPA sparse format (`.dat-s`) export and import.
//!
//! The file encodes `min c.x  s.t.  X = sum_i x_i F_i - F_0 >= 0` with
//! block-diagonal `X`; entries are quintuples `matno blkno i j value` with
//! 1-based upper-triangle indices, and negative block sizes mark diagonal
//! blocks. Two comment lines (`*SENSE`, `*OFFSET`) carry the affine
//! transform from the file's minimum back to the originating problem's
//! objective value; readers that ignore comments still solve the same
//! program.

use std::fmt::Write as _;
use std::path::Path;

use super::lower::lower;
use super::solver::{CoefMat, LmiBlock, LmiProblem};
use super::{SdpProblem, Sense};
use crate::error::{Error, Result};
use crate::linalg::RealMat;

/// Summary of one export.
#[derive(Debug, Clone)]
pub struct ExportInfo {
    /// Number of scalar variables in the file.
    pub n_vars: usize,
    /// Signed block sizes as written (negative = diagonal).
    pub block_sizes: Vec<i64>,
    pub offset: f64,
    pub sense: Sense,
}

/// Contents of a parsed file, solvable directly by the interior-point
/// core.
#[derive(Debug, Clone)]
pub struct ImportedSdp {
    pub lmi: LmiProblem,
    pub offset: f64,
    pub sense: Sense,
}

impl ImportedSdp {
    /// Maps an internal minimum value to the originating objective.
    pub fn reported_value(&self, internal: f64) -> f64 {
        match self.sense {
            Sense::Min => self.offset + internal,
            Sense::Max => self.offset - internal,
        }
    }
}

/// Lowers a problem and writes it in SDPA sparse format. Re-importing and
/// solving reproduces the original optimal value through the comment
/// metadata.
pub fn export_sdpa(p: &SdpProblem, path: &Path) -> Result<ExportInfo> {
    let lowered = lower(p)?;
    let info = write_lmi(
        &lowered.lmi,
        lowered.report_offset,
        if lowered.negate { Sense::Max } else { Sense::Min },
        path,
    )?;
    Ok(info)
}

/// Writes a solver-level LMI problem. `offset`/`sense` define the mapping
/// `reported = offset +/- internal_minimum`.
pub fn write_lmi(lmi: &LmiProblem, offset: f64, sense: Sense, path: &Path) -> Result<ExportInfo> {
    let mut out = String::new();
    let _ = writeln!(out, "*SENSE {}", if sense == Sense::Max { "MAX" } else { "MIN" });
    let _ = writeln!(out, "*OFFSET {offset:.17e}");
    let _ = writeln!(out, "{}", lmi.n);
    let _ = writeln!(out, "{}", lmi.blocks.len());

    let sizes: Vec<i64> = lmi
        .blocks
        .iter()
        .map(|b| {
            if block_is_diagonal(b) && b.dim > 1 {
                -(b.dim as i64)
            } else {
                b.dim as i64
            }
        })
        .collect();
    let _ = writeln!(
        out,
        "{}",
        sizes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(
        out,
        "{}",
        lmi.c
            .iter()
            .map(|v| format!("{v:.17e}"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    // F_0 = -f0 per the SDPA sign convention
    for (t, blk) in lmi.blocks.iter().enumerate() {
        for i in 0..blk.dim {
            for j in i..blk.dim {
                let v = -blk.f0.get(i, j);
                if v.abs() > 0.0 {
                    let _ = writeln!(out, "0 {} {} {} {v:.17e}", t + 1, i + 1, j + 1);
                }
            }
        }
    }
    for (t, blk) in lmi.blocks.iter().enumerate() {
        for (var, coef) in &blk.coeffs {
            match coef {
                CoefMat::Sparse(triplets) => {
                    for &(i, j, v) in triplets {
                        if i <= j && v.abs() > 0.0 {
                            let _ =
                                writeln!(out, "{} {} {} {} {v:.17e}", var + 1, t + 1, i + 1, j + 1);
                        }
                    }
                }
                CoefMat::Dense(m) => {
                    for i in 0..blk.dim {
                        for j in i..blk.dim {
                            let v = m.get(i, j);
                            if v.abs() > 0.0 {
                                let _ = writeln!(
                                    out,
                                    "{} {} {} {} {v:.17e}",
                                    var + 1,
                                    t + 1,
                                    i + 1,
                                    j + 1
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(ExportInfo {
        n_vars: lmi.n,
        block_sizes: sizes,
        offset,
        sense,
    })
}

fn block_is_diagonal(b: &LmiBlock) -> bool {
    let diag_ok = |m: &RealMat| {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if i != j && m.get(i, j).abs() > 0.0 {
                    return false;
                }
            }
        }
        true
    };
    if !diag_ok(&b.f0) {
        return false;
    }
    b.coeffs.iter().all(|(_, coef)| match coef {
        CoefMat::Sparse(t) => t.iter().all(|&(i, j, _)| i == j),
        CoefMat::Dense(m) => diag_ok(m),
    })
}

/// Parses an SDPA sparse file.
pub fn read_sdpa(path: &Path) -> Result<ImportedSdp> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_sdpa(&text)
}

pub fn parse_sdpa(text: &str) -> Result<ImportedSdp> {
    let mut offset = 0.0;
    let mut sense = Sense::Min;

    // token stream with line tracking; comment lines may carry metadata
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.starts_with('*') || trimmed.starts_with('"') {
            let body = trimmed.trim_start_matches(['*', '"']).trim();
            if let Some(rest) = body.strip_prefix("OFFSET") {
                offset = rest.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: "malformed OFFSET comment".into(),
                })?;
            } else if let Some(rest) = body.strip_prefix("SENSE") {
                sense = match rest.trim() {
                    "MAX" => Sense::Max,
                    _ => Sense::Min,
                };
            }
            continue;
        }
        // entries may be separated by commas, braces or parens in the wild
        for tok in trimmed
            .split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == '{' || c == '}')
            .filter(|t| !t.is_empty())
        {
            tokens.push((lineno + 1, tok));
        }
    }
    let mut pos = 0usize;
    fn take<'a>(
        tokens: &[(usize, &'a str)],
        pos: &mut usize,
        what: &str,
    ) -> Result<(usize, &'a str)> {
        if *pos >= tokens.len() {
            return Err(Error::Parse {
                line: tokens.last().map(|t| t.0).unwrap_or(1),
                message: format!("unexpected end of file while reading {what}"),
            });
        }
        let t = tokens[*pos];
        *pos += 1;
        Ok(t)
    }
    macro_rules! next {
        ($what:expr) => {
            take(&tokens, &mut pos, $what)
        };
    }

    let (line, tok) = next!("the number of variables")?;
    let n: usize = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected the number of variables, found `{tok}`"),
    })?;
    let (line, tok) = next!("the number of blocks")?;
    let nblocks: usize = tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected the number of blocks, found `{tok}`"),
    })?;
    let mut sizes = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let (line, tok) = next!("a block size")?;
        let s: i64 = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a block size, found `{tok}`"),
        })?;
        if s == 0 {
            return Err(Error::Parse {
                line,
                message: "zero block size".into(),
            });
        }
        sizes.push(s);
    }
    let mut c = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, tok) = next!("an objective coefficient")?;
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected an objective coefficient, found `{tok}`"),
        })?;
        c.push(v);
    }

    let mut f0: Vec<RealMat> = sizes
        .iter()
        .map(|&s| RealMat::zeros(s.unsigned_abs() as usize, s.unsigned_abs() as usize))
        .collect();
    let mut coeffs: Vec<std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>>> =
        vec![std::collections::BTreeMap::new(); nblocks];

    while pos < tokens.len() {
        let (line, tok) = next!("a matrix number")?;
        let matno: usize = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a matrix number, found `{tok}`"),
        })?;
        let (line, tok) = next!("a block number")?;
        let blkno: usize = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a block number, found `{tok}`"),
        })?;
        let (line, tok) = next!("a row index")?;
        let i: usize = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a row index, found `{tok}`"),
        })?;
        let (line, tok) = next!("a column index")?;
        let j: usize = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a column index, found `{tok}`"),
        })?;
        let (line, tok) = next!("an entry value")?;
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected an entry value, found `{tok}`"),
        })?;
        if matno > n || blkno == 0 || blkno > nblocks {
            return Err(Error::Parse {
                line,
                message: format!("entry references matrix {matno}, block {blkno} out of range"),
            });
        }
        let dim = sizes[blkno - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(Error::Parse {
                line,
                message: format!("index ({i},{j}) outside block of size {dim}"),
            });
        }
        let (i, j) = (i - 1, j - 1);
        if matno == 0 {
            // file F_0; our constant term is -F_0
            f0[blkno - 1].set(i, j, -v);
            f0[blkno - 1].set(j, i, -v);
        } else {
            coeffs[blkno - 1]
                .entry(matno - 1)
                .or_default()
                .push((i, j, v));
        }
    }

    let mut blocks = Vec::with_capacity(nblocks);
    for (b, size) in sizes.iter().enumerate() {
        let dim = size.unsigned_abs() as usize;
        let mut list: Vec<(usize, CoefMat)> = Vec::new();
        for (var, triplets) in &coeffs[b] {
            let mut full: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len() * 2);
            for &(i, j, v) in triplets {
                full.push((i, j, v));
                if i != j {
                    full.push((j, i, v));
                }
            }
            list.push((*var, CoefMat::Sparse(full)));
        }
        blocks.push(LmiBlock {
            dim,
            complex_dim: dim,
            f0: std::mem::replace(&mut f0[b], RealMat::zeros(0, 0)),
            coeffs: list,
        });
    }

    let lmi = LmiProblem { n, c, blocks };
    lmi.validate()?;
    Ok(ImportedSdp { lmi, offset, sense })
}
