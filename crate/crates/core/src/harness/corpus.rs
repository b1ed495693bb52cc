use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::rng::stream;
use crate::czo::smoothstep;
use crate::error::{Error, Result};
use crate::field::{Grid, GridFunction};
use crate::lattice::Cube;

/// Side of the computation box `[-4, 4]^n` used for every member.
pub const BOX_SIDE: f64 = 8.0;

/// Ripple amplitude of the plateau members.
pub const RIPPLE: f64 = 0.05;

type Profile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named test function, compactly supported inside `[-2, 2]^n`.
#[derive(Clone)]
pub struct CorpusMember {
    pub name: String,
    /// Generator family: plateau, bump, trig, random or zero.
    pub family: &'static str,
    /// Continuously differentiable, so usable for gradient checks.
    pub c1: bool,
    profile: Profile,
}

impl fmt::Debug for CorpusMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusMember")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("c1", &self.c1)
            .finish()
    }
}

impl CorpusMember {
    fn new(name: impl Into<String>, family: &'static str, c1: bool, profile: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CorpusMember {
            name: name.into(),
            family,
            c1,
            profile: Arc::new(profile),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.profile)(x)
    }

    pub fn sample(&self, grid: Grid) -> GridFunction {
        let mut f = GridFunction::from_fn(grid, |p| self.eval(p));
        f.compute_support();
        f
    }
}

/// The computation grid of the corpus.
pub fn corpus_grid(dim: usize, cells_per_axis: usize) -> Grid {
    Grid::new(Cube::centered(dim, BOX_SIDE), cells_per_axis)
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// 1 on `r ≤ a`, 0 on `r ≥ a + w`, C² in between.
fn cutoff(r: f64, a: f64, w: f64) -> f64 {
    1.0 - smoothstep((r - a) / w)
}

fn plateau(dim: usize, k: f64) -> CorpusMember {
    CorpusMember::new(format!("plateau-{k}"), "plateau", true, move |x| {
        let env = cutoff(radius(x), 1.0, 0.5);
        let ripple = if dim == 1 { (k * x[0]).sin() } else { (k * x[0]).sin() * (k * x[1]).cos() };
        env * (1.0 + RIPPLE * ripple)
    })
}

fn bump(name: &str, center: [f64; 2], rho: f64) -> CorpusMember {
    CorpusMember::new(name, "bump", true, move |x| {
        let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        let t = 1.0 - d2 / (rho * rho);
        if t > 0.0 {
            t * t * t
        } else {
            0.0
        }
    })
}

fn trig(name: &str, degree: usize) -> CorpusMember {
    CorpusMember::new(name, "trig", true, move |x| {
        let env = cutoff(radius(x), 0.8, 0.9);
        if env == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for k in 1..=degree {
            let kf = k as f64;
            let phase: f64 = x.iter().enumerate().map(|(a, v)| v * kf * (1.0 + 0.25 * a as f64)).sum();
            s += (phase + 0.3 * kf).cos() / kf;
        }
        env * s
    })
}

/// Piecewise quadratic on random breakpoints inside `[-1.8, 1.8]`.
fn random_pieces(rng: &mut impl Rng) -> Vec<(f64, [f64; 3])> {
    let pieces = rng.gen_range(6..=10);
    let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(-1.8..1.8)).collect();
    cuts.push(-1.8);
    cuts.push(1.8);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|w| (w[1], [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5)]))
        .collect()
}

fn eval_pieces(pieces: &[(f64, [f64; 3])], t: f64) -> f64 {
    if !(-1.8..1.8).contains(&t) {
        return 0.0;
    }
    let (_, c) = pieces.iter().find(|(end, _)| t < *end).unwrap_or(&pieces[pieces.len() - 1]);
    c[0] + c[1] * t + c[2] * t * t
}

fn random(name: String, dim: usize, seed: u64, index: u64) -> CorpusMember {
    let mut rng = stream(seed, "corpus", index);
    let a = random_pieces(&mut rng);
    let b = random_pieces(&mut rng);
    CorpusMember::new(name, "random", false, move |x| {
        let u = eval_pieces(&a, x[0]);
        if dim == 1 {
            u
        } else {
            u * eval_pieces(&b, x[1])
        }
    })
}

/// The twelve nonzero members and the zero function.
pub fn corpus(dim: usize, seed: u64) -> Vec<CorpusMember> {
    let mut out = vec![plateau(dim, 8.0), plateau(dim, 12.0), plateau(dim, 16.0)];
    out.push(bump("bump-wide", [0.0, 0.0], 1.5));
    out.push(bump("bump-offset", [0.4, -0.3], 1.0));
    out.push(bump("bump-narrow", [-0.6, 0.5], 0.6));
    out.push(trig("trig-3", 3));
    out.push(trig("trig-5", 5));
    out.push(trig("trig-7", 7));
    for i in 0..3u64 {
        out.push(random(format!("random-{}", i + 1), dim, seed, i));
    }
    out.push(CorpusMember::new("zero", "zero", true, |_| 0.0));
    out
}

/// Members named by `selector`: `"all"`, a family name, or a
/// comma-separated list of member names.
pub fn select(members: Vec<CorpusMember>, selector: &str) -> Result<Vec<CorpusMember>> {
    if selector == "all" {
        return Ok(members);
    }
    let wanted: Vec<&str> = selector.split(',').map(str::trim).collect();
    let picked: Vec<CorpusMember> = members
        .into_iter()
        .filter(|m| wanted.iter().any(|w| *w == m.name || *w == m.family))
        .collect();
    if picked.is_empty() {
        return Err(Error::config("corpus", format!("no member matches {selector:?}")));
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_are_supported_inside_the_start_cube() {
        for dim in [1, 2] {
            let grid = corpus_grid(dim, if dim == 1 { 1024 } else { 64 });
            let members = corpus(dim, 7);
            assert_eq!(members.len(), 13);
            for m in &members {
                let f = m.sample(grid);
                for c in 0..grid.cell_count() {
                    let p = grid.cell_center(c);
                    if p[..dim].iter().any(|v| v.abs() > 1.8) {
                        assert_eq!(f.value(c), 0.0, "{} at {p:?}", m.name);
                    }
                }
                if m.name != "zero" {
                    assert!(f.max_abs() > 0.0, "{}", m.name);
                }
            }
        }
    }

    #[test]
    fn seeded_members_are_reproducible() {
        let a = corpus(1, 3);
        let b = corpus(1, 3);
        let c = corpus(1, 4);
        for x in [-1.2, 0.1, 0.9] {
            assert_eq!(a[9].eval(&[x]), b[9].eval(&[x]));
        }
        assert!([-1.2, 0.1, 0.9].iter().any(|x| a[9].eval(&[*x]) != c[9].eval(&[*x])));
    }

    #[test]
    fn selection() {
        let m = select(corpus(1, 1), "plateau").unwrap();
        assert_eq!(m.len(), 3);
        let m = select(corpus(1, 1), "zero, bump-wide").unwrap();
        assert_eq!(m.len(), 2);
        assert!(select(corpus(1, 1), "nothing").is_err());
    }
}
