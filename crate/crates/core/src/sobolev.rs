//! Pointwise Sobolev-type domination `|Tf| ≲ I_1(|∇f|)` in the plane: the
//! Riesz potential of order one, the (1,1) Poincaré ratio, the dyadic sum
//! comparison and the probes behind the two directions.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::czo::{apply, t1_probe, theta_r, OperatorSpec, ProbeConfig, ProbeResult, Verdict};
use crate::error::{Error, Result};
use crate::fft::convolve;
use crate::field::GridFunction;
use crate::lattice::{Cube, ShiftedLatticeSet};
use crate::local_stats::{BoxIntegrator, CubeSample, Extension};

fn require_plane(dim: usize) -> Result<()> {
    if dim != 2 {
        return Err(Error::DimensionUnsupported {
            expected: "2 (the Sobolev inequality needs n ≥ 2)",
            got: dim,
        });
    }
    Ok(())
}

/// `∫_{[0,u]×[0,v]} |y|^{-1} dy` for `u, v ≥ 0`.
fn quadrant(u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    let r = u.hypot(v);
    u * ((v + r) / u).ln() + v * ((u + r) / v).ln()
}

/// `∫_{[0,u]×[0,v]} |y|^{-1} dy` with orientation.
fn signed_quadrant(u: f64, v: f64) -> f64 {
    u.signum() * v.signum() * quadrant(u.abs(), v.abs())
}

/// `∫_{[a0,b0]×[a1,b1]} |y|^{-1} dy`, exact.
pub(crate) fn inverse_distance_box(a: [f64; 2], b: [f64; 2]) -> f64 {
    signed_quadrant(b[0], b[1]) - signed_quadrant(a[0], b[1]) - signed_quadrant(b[0], a[1]) + signed_quadrant(a[0], a[1])
}

/// `∫ |x - y|^{-1} dy` over the cell at lattice offset `d` from `x`'s cell.
fn offset_weight(d: [i64; 2], h: f64) -> f64 {
    let a = [(d[0] as f64 - 0.5) * h, (d[1] as f64 - 0.5) * h];
    let b = [(d[0] as f64 + 0.5) * h, (d[1] as f64 + 0.5) * h];
    inverse_distance_box(a, b)
}

/// `I_1 g(x) = ∫ g(y) |x - y|^{-1} dy` at every cell midpoint, with the
/// kernel integrated exactly over each cell.
pub fn riesz_potential(g: &GridFunction) -> Result<GridFunction> {
    let grid = *g.grid();
    require_plane(grid.dim())?;
    let h = grid.spacing();
    let values = convolve(g.values(), grid.cells_per_axis(), 2, |d| offset_weight(d, h));
    GridFunction::from_values(grid, values)
}

/// `I_1 g` at an arbitrary point, by direct summation.
pub fn riesz_potential_at(g: &GridFunction, x: &[f64]) -> Result<f64> {
    let grid = g.grid();
    require_plane(grid.dim())?;
    let mut s = 0.0;
    for (c, v) in g.values().iter().enumerate() {
        if *v != 0.0 {
            let r = grid.cell_rect(c);
            s += v * inverse_distance_box([r.lo[0] - x[0], r.lo[1] - x[1]], [r.hi[0] - x[0], r.hi[1] - x[1]]);
        }
    }
    Ok(s)
}

/// Outcome of [`poincare_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PoincareReport {
    /// `C_Q` per supplied cube, `None` where the gradient vanishes.
    pub constants: Vec<Option<f64>>,
    pub max_constant: f64,
    /// Indices of cubes skipped for a zero gradient.
    pub skipped: Vec<usize>,
}

/// `C_Q = Ω(f;Q) / (|Q|^{1/n} ⟨|∇f|⟩_Q)` on each cube.
pub fn poincare_check(f: &GridFunction, cubes: &[Cube]) -> Result<PoincareReport> {
    let grad = f.gradient_norm();
    let mut constants = Vec::with_capacity(cubes.len());
    let mut skipped = Vec::new();
    let mut max_constant = 0.0f64;
    for (i, q) in cubes.iter().enumerate() {
        let osc = CubeSample::new(f, q, Extension::Strict)?.mean_oscillation();
        let g = CubeSample::new(&grad, q, Extension::Strict)?.mean();
        if !(g > 0.0) {
            constants.push(None);
            skipped.push(i);
            continue;
        }
        let c = osc / (q.side() * g);
        max_constant = max_constant.max(c);
        constants.push(Some(c));
    }
    Ok(PoincareReport {
        constants,
        max_constant,
        skipped,
    })
}

/// Poincaré constant of a single cube; `ZeroGradient` if `∇f` vanishes on it.
pub fn poincare_constant(f: &GridFunction, q: &Cube) -> Result<f64> {
    poincare_check(f, std::slice::from_ref(q))?.constants[0].ok_or(Error::ZeroGradient)
}

/// `(Σ_{Q∈D_j, x∈Q} |Q|^{-1/2} ∫_Q g, I_1 g(x))` for the lattice `j`.
///
/// Scales with cubes below the cell size contribute `g(x)·side` each;
/// scales above the data extent contribute `∫g / side`. Both tails are
/// summed in closed form.
pub fn dyadic_riesz_bound(g: &GridFunction, lattices: &ShiftedLatticeSet, lattice: usize, x: &[f64]) -> Result<(f64, f64)> {
    let grid = *g.grid();
    require_plane(grid.dim())?;
    if g.values().iter().any(|v| *v < 0.0) {
        return Err(Error::config("g", "must be non-negative"));
    }
    let integrator = BoxIntegrator::new(g.values(), grid);
    let h = grid.spacing();
    let extent = grid.bbox().side();
    let k_fine = (-(h / 64.0).log2()).ceil() as i32;
    let k_coarse = (-(4.0 * extent).log2()).floor() as i32;
    let mut lhs = 0.0;
    for k in k_coarse..=k_fine {
        let q = lattices.cube_containing(lattice, k, x);
        lhs += integrator.integral(&q.to_rect()) / q.side();
    }
    let gx = g.value_at(x);
    lhs += gx * (-(k_fine as f64)).exp2();
    let total = integrator.integral(&grid.bbox().to_rect());
    lhs += total / (-(k_coarse as f64)).exp2();
    Ok((lhs, riesz_potential_at(g, x)?))
}

/// Pointwise comparison of `|Tf|` with `I_1(|∇f|)`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SobolevReport {
    pub operator: String,
    #[serde(skip)]
    pub abs_tf: Vec<f64>,
    #[serde(skip)]
    pub potential: Vec<f64>,
    pub best_constant: f64,
    pub violations: Vec<usize>,
    pub violation_fraction: f64,
}

impl SobolevReport {
    pub fn ratio(&self, cell: usize) -> Option<f64> {
        (self.potential[cell] > 0.0).then(|| self.abs_tf[cell] / self.potential[cell])
    }

    /// CSV with columns `cellIndex,|Tf|,I1|∇f|,ratio`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cellIndex,|Tf|,I1|∇f|,ratio")?;
        for c in 0..self.abs_tf.len() {
            match self.ratio(c) {
                Some(r) => writeln!(w, "{c},{:e},{:e},{:e}", self.abs_tf[c], self.potential[c], r)?,
                None => writeln!(w, "{c},{:e},{:e},", self.abs_tf[c], self.potential[c])?,
            }
        }
        Ok(())
    }
}

pub fn sobolev_check(t: &OperatorSpec, f: &GridFunction) -> Result<SobolevReport> {
    require_plane(f.grid().dim())?;
    let abs_tf: Vec<f64> = apply(t, f)?.values().iter().map(|v| v.abs()).collect();
    let potential = riesz_potential(&f.gradient_norm())?.into_values();
    let peak = abs_tf.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut best_constant = 0.0f64;
    let mut violations = Vec::new();
    for (c, (v, p)) in abs_tf.iter().zip(&potential).enumerate() {
        if *p > 0.0 {
            best_constant = best_constant.max(v / p);
        } else if *v > 1e-8 * peak {
            violations.push(c);
        }
    }
    Ok(SobolevReport {
        operator: t.label().to_string(),
        violation_fraction: violations.len() as f64 / abs_tf.len() as f64,
        abs_tf,
        potential,
        best_constant,
        violations,
    })
}

/// Outcome of [`necessity_probe`].
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NecessityReport {
    pub probe: ProbeResult,
    /// `sup I_1(|∇θ_R|)` per radius.
    pub potential_sups: Vec<f64>,
    pub potential_variation: f64,
    /// The potentials stay within 10% of each other.
    pub premise_holds: bool,
    /// The probe is consistent with `T(1) ∈ L^∞`.
    pub consistent: bool,
}

/// Runs the `T θ_R` probe and checks that `I_1(|∇θ_R|)` stays bounded
/// independently of `R`.
pub fn necessity_probe(t: &OperatorSpec, probe: &ProbeConfig) -> Result<NecessityReport> {
    require_plane(probe.dim)?;
    let result = t1_probe(t, probe)?;
    let potential_sups = probe
        .radii
        .par_iter()
        .map(|&r| {
            let theta = GridFunction::from_fn(probe.grid(r), |p| theta_r(p, r));
            Ok(riesz_potential(&theta.gradient_norm())?.max_abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let potential_variation = crate::czo::relative_variation(&potential_sups);
    let premise_holds = potential_variation < 0.1;
    Ok(NecessityReport {
        consistent: premise_holds && result.verdict == Verdict::Bounded,
        probe: result,
        potential_sups,
        potential_variation,
        premise_holds,
    })
}
