use std::fmt;
use std::io::Write;

use serde::Serialize;

use super::operator::{apply, OperatorSpec};
use crate::error::{Error, Result};
use crate::field::{Grid, GridFunction};
use crate::lattice::Cube;

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` on `[0, 1]`, clamped outside.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Radial cutoff: 1 on `|x| ≤ 1`, 0 on `|x| ≥ 2`, C² in between.
pub fn theta(x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    1.0 - smoothstep(r - 1.0)
}

/// `θ_R(x) = θ(x / R)`.
pub fn theta_r(x: &[f64], radius: f64) -> f64 {
    let mut y = [0.0; 2];
    for (a, v) in x.iter().enumerate() {
        y[a] = v / radius;
    }
    theta(&y[..x.len()])
}

/// Where `sup |T θ_R|` is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationRegion {
    /// A fixed cube, independent of `R`.
    Fixed(Cube),
    /// The ball `|x| ≤ c R`.
    Scaled(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub dim: usize,
    pub radii: Vec<f64>,
    pub observation: ObservationRegion,
    /// Cells per axis of each computation grid.
    pub cells_per_axis: usize,
    /// The computation box for radius `R` is `[-cR, cR]^n`.
    pub box_factor: f64,
}

impl ProbeConfig {
    pub fn new(dim: usize, radii: Vec<f64>) -> Self {
        ProbeConfig {
            dim,
            radii,
            observation: ObservationRegion::Scaled(3.0),
            cells_per_axis: if dim == 1 { 4096 } else { 256 },
            box_factor: 3.0,
        }
    }

    pub fn grid(&self, radius: f64) -> Grid {
        Grid::new(Cube::centered(self.dim, 2.0 * self.box_factor * radius), self.cells_per_axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Unbounded,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbePoint {
    pub radius: f64,
    #[serde(rename = "supNorm")]
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub points: Vec<ProbePoint>,
    pub verdict: Verdict,
}

impl ProbeResult {
    /// CSV with columns `R,supNorm,verdict`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "R,supNorm,verdict")?;
        for p in &self.points {
            writeln!(w, "{},{:e},{}", p.radius, p.sup_norm, self.verdict)?;
        }
        Ok(())
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sup_norm).collect()
    }
}

/// Relative spread `(max - min) / max` of a sequence.
pub fn relative_variation(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi <= 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

/// Bounded when the sequence peaks before its last radius and does not
/// increase afterwards, or when the last three values vary by under 10%.
pub fn probe_verdict(sups: &[f64]) -> Verdict {
    if sups.is_empty() {
        return Verdict::Bounded;
    }
    let tail = &sups[sups.len().saturating_sub(3)..];
    if relative_variation(tail) < 0.1 {
        return Verdict::Bounded;
    }
    let peak = sups
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > sups[best] { i } else { best });
    let settles = sups[peak..].windows(2).all(|w| w[1] <= w[0]);
    if peak + 1 < sups.len() && settles {
        Verdict::Bounded
    } else {
        Verdict::Unbounded
    }
}

/// `sup |T θ_R|` over the observation region for each radius.
pub fn t1_probe(t: &OperatorSpec, probe: &ProbeConfig) -> Result<ProbeResult> {
    if t.dim() != probe.dim {
        return Err(Error::DimensionMismatch(t.dim(), probe.dim));
    }
    if probe.box_factor < 2.0 {
        return Err(Error::DomainTooSmall(format!(
            "box factor {} does not hold the support |x| ≤ 2R",
            probe.box_factor
        )));
    }
    let mut points = Vec::with_capacity(probe.radii.len());
    for &radius in &probe.radii {
        let grid = probe.grid(radius);
        let half = probe.box_factor * radius;
        let inside: Box<dyn Fn(&[f64]) -> bool> = match probe.observation {
            ObservationRegion::Fixed(c) => {
                if (0..c.dim()).any(|a| c.lo(a) < -half || c.hi(a) > half) {
                    return Err(Error::DomainTooSmall(format!("observation cube leaves the box at R = {radius}")));
                }
                Box::new(move |p| c.contains_point(p))
            }
            ObservationRegion::Scaled(s) => {
                if s > probe.box_factor * (probe.dim as f64).sqrt() + 1e-12 {
                    return Err(Error::DomainTooSmall(format!("observation radius {s}R exceeds the box")));
                }
                Box::new(move |p| p.iter().map(|v| v * v).sum::<f64>().sqrt() <= s * radius)
            }
        };
        let f = GridFunction::from_fn(grid, |p| theta_r(p, radius));
        let tf = apply(t, &f)?;
        let sup = (0..grid.cell_count())
            .filter(|&c| inside(&grid.cell_center(c)[..probe.dim]))
            .map(|c| tf.value(c).abs())
            .fold(0.0, f64::max);
        points.push(ProbePoint { radius, sup_norm: sup });
    }
    let sups: Vec<f64> = points.iter().map(|p| p.sup_norm).collect();
    Ok(ProbeResult {
        verdict: probe_verdict(&sups),
        points,
    })
}
