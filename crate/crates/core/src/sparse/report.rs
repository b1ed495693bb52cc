use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::family::{sample_with_support, LocalFamily};
use super::stopping::LocalSparse;
use crate::czo::{apply, OperatorSpec};
use crate::error::{Error, Result};
use crate::field::{CellRange, GridFunction};
use crate::lattice::{ShiftedLatticeSet, SparseFamily, SparseFamilyRecord};
use crate::local_stats::{sharp_maximal_field, BoxIntegrator, NodeFunctions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// `Σ Ω(f;Q) χ_Q`.
    Oscillation,
    /// `Σ ⟨|f|⟩_Q χ_Q`.
    Average,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Oscillation => "oscillation",
            BoundKind::Average => "average",
        })
    }
}

/// Per-cube weights `Ω(f;Q)` or `⟨|f|⟩_Q`, with `f` zero off its grid.
pub fn cube_weights(fam: &SparseFamily, f: &GridFunction, kind: BoundKind) -> Result<Vec<f64>> {
    let support = f.support();
    let cubes: Vec<_> = fam.cubes().copied().collect();
    cubes
        .par_iter()
        .map(|q| {
            let s = sample_with_support(f, support.as_ref(), q)?;
            Ok(match kind {
                BoundKind::Oscillation => s.mean_oscillation(),
                BoundKind::Average => s.mean_abs(),
            })
        })
        .collect()
}

/// The bound on every grid cell; a cell belongs to a cube when its
/// midpoint does.
pub fn bound_field(fam: &SparseFamily, f: &GridFunction, kind: BoundKind) -> Result<Vec<f64>> {
    let grid = f.grid();
    let dim = grid.dim();
    let n = grid.cells_per_axis();
    let weights = cube_weights(fam, f, kind)?;
    // Difference array over the (n+1)^dim corners.
    let s = n + 1;
    let mut diff = vec![0.0; s.pow(dim as u32)];
    for (q, w) in fam.cubes().zip(&weights) {
        if *w == 0.0 {
            continue;
        }
        let r = grid.snap(q, 1)?.clip(grid);
        if r.is_empty() {
            continue;
        }
        let (a0, a1) = (r.lo[0] as usize, r.hi[0] as usize);
        if dim == 1 {
            diff[a0] += w;
            diff[a1] -= w;
        } else {
            let (b0, b1) = (r.lo[1] as usize, r.hi[1] as usize);
            diff[a0 * s + b0] += w;
            diff[a0 * s + b1] -= w;
            diff[a1 * s + b0] -= w;
            diff[a1 * s + b1] += w;
        }
    }
    let mut out = vec![0.0; grid.cell_count()];
    if dim == 1 {
        let mut acc = 0.0;
        for i in 0..n {
            acc += diff[i];
            out[i] = acc;
        }
    } else {
        let mut col = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += diff[i * s + j];
                col[j] += acc;
                out[i * n + j] = col[j];
            }
        }
    }
    Ok(out)
}

fn eval_bound(fam: &SparseFamily, f: &GridFunction, x: &[f64], kind: BoundKind) -> Result<f64> {
    let grid = f.grid();
    let idx = grid.locate(x);
    let weights = cube_weights(fam, f, kind)?;
    let mut total = 0.0;
    for (q, w) in fam.cubes().zip(weights) {
        let r = grid.snap(q, 1)?;
        if (0..grid.dim()).all(|a| r.lo[a] <= idx[a] && idx[a] < r.hi[a]) {
            total += w;
        }
    }
    Ok(total)
}

/// `Σ_{Q∈S} Ω(f;Q) χ_Q(x)`, membership decided on the cell holding `x`.
pub fn eval_oscillation_bound(fam: &SparseFamily, f: &GridFunction, x: &[f64]) -> Result<f64> {
    eval_bound(fam, f, x, BoundKind::Oscillation)
}

/// `Σ_{Q∈S} ⟨|f|⟩_Q χ_Q(x)`, membership decided on the cell holding `x`.
pub fn eval_average_bound(fam: &SparseFamily, f: &GridFunction, x: &[f64]) -> Result<f64> {
    eval_bound(fam, f, x, BoundKind::Average)
}

/// Pointwise comparison of `|Tf|` against a sparse bound on the grid.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DominationReport {
    pub kind: BoundKind,
    pub family: SparseFamilyRecord,
    #[serde(skip)]
    pub abs_tf: Vec<f64>,
    #[serde(skip)]
    pub bound: Vec<f64>,
    pub best_constant: f64,
    /// Cells with a zero bound and `|Tf| > 1e-8 ‖Tf‖_∞`.
    pub violations: Vec<usize>,
    pub violation_fraction: f64,
    /// Violations within one cell of a cube face.
    pub boundary_adjacent: usize,
    pub refinement_tag: String,
}

impl DominationReport {
    pub fn ratio(&self, cell: usize) -> Option<f64> {
        (self.bound[cell] > 0.0).then(|| self.abs_tf[cell] / self.bound[cell])
    }

    /// CSV with columns `cellIndex,|Tf|,bound,ratio`; the ratio is empty
    /// where the bound vanishes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cellIndex,|Tf|,bound,ratio")?;
        for c in 0..self.bound.len() {
            match self.ratio(c) {
                Some(r) => writeln!(w, "{c},{:e},{:e},{:e}", self.abs_tf[c], self.bound[c], r)?,
                None => writeln!(w, "{c},{:e},{:e},", self.abs_tf[c], self.bound[c])?,
            }
        }
        Ok(())
    }
}

fn near_face(range: &CellRange, idx: [i64; 2]) -> bool {
    let dim = range.dim;
    let inside = (0..dim).all(|a| range.lo[a] - 1 <= idx[a] && idx[a] <= range.hi[a]);
    inside && (0..dim).any(|a| (idx[a] - range.lo[a]).abs() <= 1 || (idx[a] - range.hi[a]).abs() <= 1)
}

/// Compares `|Tf|` with the sparse bound of an audited family at every
/// cell of `f`'s grid.
pub fn domination_report(t: &OperatorSpec, f: &GridFunction, fam: &SparseFamily, kind: BoundKind) -> Result<DominationReport> {
    if !fam.is_verified() {
        return Err(Error::UnauditedFamily);
    }
    let grid = f.grid();
    let abs_tf: Vec<f64> = apply(t, f)?.values().iter().map(|v| v.abs()).collect();
    let bound = bound_field(fam, f, kind)?;
    let peak = abs_tf.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut best_constant = 0.0f64;
    let mut violations = Vec::new();
    for (c, (v, b)) in abs_tf.iter().zip(&bound).enumerate() {
        if *b > 0.0 {
            best_constant = best_constant.max(v / b);
        } else if *v > 1e-8 * peak {
            violations.push(c);
        }
    }
    let ranges: Vec<CellRange> = fam.cubes().map(|q| grid.snap(q, 1)).collect::<Result<_>>()?;
    let boundary_adjacent = violations
        .iter()
        .filter(|&&c| {
            let m = grid.multi_index(c);
            let idx = [m[0] as i64, m[1] as i64];
            ranges.iter().any(|r| near_face(r, idx))
        })
        .count();
    Ok(DominationReport {
        kind,
        family: fam.to_record(),
        violation_fraction: violations.len() as f64 / grid.cell_count() as f64,
        abs_tf,
        bound,
        best_constant,
        violations,
        boundary_adjacent,
        refinement_tag: format!("N={}", grid.cells_per_axis()),
    })
}

/// Ratio `m_P^# f / M((f - m_f(P*)) χ_{P*})` over the cells of the
/// stopping cubes of one piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SharpDomination {
    pub constant: f64,
    pub evaluated: usize,
    /// Cells with `m_P^# f > 0` where the maximal function vanishes.
    pub violations: usize,
}

impl SharpDomination {
    pub fn merge(self, other: SharpDomination) -> SharpDomination {
        SharpDomination {
            constant: self.constant.max(other.constant),
            evaluated: self.evaluated + other.evaluated,
            violations: self.violations + other.violations,
        }
    }
}

/// Evaluates the sharp maximal domination on every stopping cube of
/// `local` (leaf cubes have no proper subcubes and are skipped).
pub fn sharp_domination(family: &LocalFamily, local: &LocalSparse, lattices: &ShiftedLatticeSet) -> Result<SharpDomination> {
    let f = family.source();
    let grid = *f.grid();
    let dim = grid.dim();
    let tree = family.tree();
    let mut out = SharpDomination {
        constant: 0.0,
        evaluated: 0,
        violations: 0,
    };
    for c in local.cubes.iter().filter(|c| c.depth < tree.max_depth()) {
        let sharp = sharp_maximal_field(family, c.node)?;
        let m = family.median(c.node)?;
        let star = family.dilated(c.node);
        let range = grid.snap(&star, 1)?;
        let inside = range.clip(&grid);
        let mut g = vec![0.0; grid.cell_count()];
        if !inside.is_empty() {
            for cell in inside.cells(&grid) {
                g[cell] = (f.value(cell) - m).abs();
            }
        }
        let integrator = BoxIntegrator::new(&g, grid).with_outer(grid.range_rect(&range), m.abs());
        let points = family.node_points(c.node);
        let scale = sharp.iter().fold(0.0f64, |a, v| a.max(*v));
        let part = points
            .par_iter()
            .zip(sharp.par_iter())
            .map(|(x, s)| {
                let idx = grid.locate(&x[..dim]);
                let in_star = (0..dim).all(|a| range.lo[a] <= idx[a] && idx[a] < range.hi[a]);
                let gx = if in_star { (f.lattice_value(idx) - m).abs() } else { 0.0 };
                let maximal = integrator.lattice_maximal_at(&x[..dim], lattices, gx);
                if maximal > 0.0 {
                    SharpDomination {
                        constant: s / maximal,
                        evaluated: 1,
                        violations: 0,
                    }
                } else {
                    SharpDomination {
                        constant: 0.0,
                        evaluated: 1,
                        violations: (*s > 1e-12 * scale.max(f64::MIN_POSITIVE)) as usize,
                    }
                }
            })
            .reduce(
                || SharpDomination {
                    constant: 0.0,
                    evaluated: 0,
                    violations: 0,
                },
                SharpDomination::merge,
            );
        out = out.merge(part);
    }
    Ok(out)
}
