//! Local statistics of cell-constant functions on cubes: averages,
//! non-increasing rearrangements, medians and mean oscillations, together
//! with the lattice Hardy–Littlewood maximal function and the sharp maximal
//! function of a cube-indexed family.
//!
//! All statistics work on a [`CubeSample`]: the cell values inside a snapped
//! cube, optionally extended by zero cells where the cube leaves the grid.
//! Measures are counted in cells, which keeps every comparison against
//! `|Q|/2` or `λ|Q|` exact.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Grid, GridFunction};
use crate::lattice::{Cube, DyadicTree, NodeId, Rect, ShiftedLatticeSet};

/// How a cube that leaves the grid is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// The cube must lie inside the grid.
    Strict,
    /// The function is zero outside the grid.
    Zero,
}

/// Cell values of a function on a snapped cube.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSample {
    pub values: Vec<f64>,
    /// Cells of the snapped cube outside the grid (value zero).
    pub zero_cells: usize,
}

impl CubeSample {
    pub fn new(f: &GridFunction, q: &Cube, ext: Extension) -> Result<Self> {
        let grid = f.grid();
        let range = grid.snap(q, 1)?;
        let inside = match ext {
            Extension::Strict => grid.clip_strict(&range, q)?,
            Extension::Zero => range.clip(grid),
        };
        let values: Vec<f64> = if inside.is_empty() {
            Vec::new()
        } else {
            inside.cells(grid).map(|c| f.value(c)).collect()
        };
        let zero_cells = range.count() - values.len();
        Ok(CubeSample { values, zero_cells })
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        CubeSample {
            values,
            zero_cells: 0,
        }
    }

    /// Measure in cells.
    pub fn total(&self) -> usize {
        self.values.len() + self.zero_cells
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.total() as f64
    }

    pub fn mean_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.total() as f64
    }

    /// `|Q|^{-1} ∫_Q |f - c|`.
    pub fn deviation(&self, c: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| (v - c).abs()).sum();
        (s + self.zero_cells as f64 * c.abs()) / self.total() as f64
    }

    /// Smallest `α ≥ 0` with `|{|f| > α}| ≤ λ |Q|`.
    pub fn rearrangement(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::LambdaOutOfRange(lambda));
        }
        let total = self.total();
        let budget = lambda * total as f64;
        let mut mags: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        // Largest k with k <= λ|Q|: up to k cells may exceed the level.
        let mut k = budget.floor() as usize;
        while k > 0 && k as f64 > budget {
            k -= 1;
        }
        while k < total && (k + 1) as f64 <= budget {
            k += 1;
        }
        // Zero-extension cells sort last.
        Ok(mags.get(k).copied().unwrap_or(0.0))
    }

    /// Lower median: the smallest sample value `m` with `|{f < m}| ≤ |Q|/2`
    /// and `|{f > m}| ≤ |Q|/2`.
    pub fn median(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut vals = self.values.clone();
        vals.sort_by(f64::total_cmp);
        // Runs of equal values, with the extension zeros merged in.
        let mut runs: Vec<(f64, usize)> = Vec::new();
        let mut zeros_done = self.zero_cells == 0;
        let mut i = 0usize;
        while i < vals.len() || !zeros_done {
            let next = vals.get(i).copied();
            let (v, mut n) = match next {
                Some(v) if zeros_done || v < 0.0 => (v, 0),
                _ => {
                    zeros_done = true;
                    (0.0, self.zero_cells)
                }
            };
            while i < vals.len() && vals[i] == v {
                n += 1;
                i += 1;
            }
            runs.push((v, n));
        }
        let mut below = 0usize;
        for (v, n) in runs {
            let above = total - below - n;
            if 2 * below <= total && 2 * above <= total {
                return v;
            }
            below += n;
        }
        unreachable!("a median always exists")
    }

    pub fn mean_oscillation(&self) -> f64 {
        self.deviation(self.mean())
    }

    pub fn median_oscillation(&self) -> f64 {
        self.deviation(self.median())
    }
}

/// Kind of a recorded local statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StatKind {
    Average,
    Median,
    Oscillation,
    MedianOscillation,
    Rearrangement(f64),
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatKind::Average => write!(f, "average"),
            StatKind::Median => write!(f, "median"),
            StatKind::Oscillation => write!(f, "oscillation"),
            StatKind::MedianOscillation => write!(f, "median_oscillation"),
            StatKind::Rearrangement(l) => write!(f, "rearrangement({l})"),
        }
    }
}

/// A statistic evaluated on a cube.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStat {
    pub cube: Cube,
    pub kind: StatKind,
    pub value: f64,
}

impl LocalStat {
    pub fn compute(f: &GridFunction, cube: &Cube, kind: StatKind) -> Result<Self> {
        let value = match kind {
            StatKind::Average => average_of(f, cube)?,
            StatKind::Median => median(f, cube)?,
            StatKind::Oscillation => mean_oscillation(f, cube)?,
            StatKind::MedianOscillation => median_oscillation(f, cube)?,
            StatKind::Rearrangement(l) => rearrangement(f, cube, l)?,
        };
        Ok(LocalStat {
            cube: *cube,
            kind,
            value,
        })
    }

    /// CSV row `cubeId,kind,value`.
    pub fn csv_row(&self, cube_id: usize) -> String {
        format!("{cube_id},{},{:e}", self.kind, self.value)
    }
}

fn average_of(f: &GridFunction, q: &Cube) -> Result<f64> {
    Ok(CubeSample::new(f, q, Extension::Strict)?.mean())
}

/// `(f χ_Q)^*(λ |Q|)`.
pub fn rearrangement(f: &GridFunction, q: &Cube, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    CubeSample::new(f, q, Extension::Strict)?.rearrangement(lambda)
}

/// Lower median of `f` over `q`.
pub fn median(f: &GridFunction, q: &Cube) -> Result<f64> {
    Ok(CubeSample::new(f, q, Extension::Strict)?.median())
}

/// `Ω(f; Q) = |Q|^{-1} ∫_Q |f - ⟨f⟩_Q|`.
pub fn mean_oscillation(f: &GridFunction, q: &Cube) -> Result<f64> {
    Ok(CubeSample::new(f, q, Extension::Strict)?.mean_oscillation())
}

/// `|Q|^{-1} ∫_Q |f - m_f(Q)|`.
pub fn median_oscillation(f: &GridFunction, q: &Cube) -> Result<f64> {
    Ok(CubeSample::new(f, q, Extension::Strict)?.median_oscillation())
}

/// Exact integrals of a non-negative cell-constant function over arbitrary
/// boxes, through a summed-area table.
///
/// The function is zero outside its grid, except for an optional constant
/// carried on a box that extends past the grid.
#[derive(Debug, Clone)]
pub struct BoxIntegrator {
    grid: Grid,
    /// Prefix sums at the `(N+1)^n` cell corners, in cell-measure units.
    table: Vec<f64>,
    outer: Option<(Rect, f64)>,
}

impl BoxIntegrator {
    pub fn new(values: &[f64], grid: Grid) -> Self {
        let n = grid.cells_per_axis();
        let cm = grid.cell_measure();
        let table = if grid.dim() == 1 {
            let mut t = vec![0.0; n + 1];
            for i in 0..n {
                t[i + 1] = t[i] + values[i] * cm;
            }
            t
        } else {
            let w = n + 1;
            let mut t = vec![0.0; w * w];
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    row += values[i * n + j] * cm;
                    t[(i + 1) * w + j + 1] = t[i * w + j + 1] + row;
                }
            }
            t
        };
        BoxIntegrator {
            grid,
            table,
            outer: None,
        }
    }

    /// Adds the constant `c` on the part of `region` outside the grid box.
    pub fn with_outer(mut self, region: Rect, c: f64) -> Self {
        self.outer = Some((region, c));
        self
    }

    /// Cumulative integral from the lower grid corner to `u` (cell units).
    fn cumulative(&self, u: [f64; 2]) -> f64 {
        let n = self.grid.cells_per_axis();
        let split = |x: f64| -> (usize, f64) {
            let x = x.clamp(0.0, n as f64);
            let i = (x.floor() as usize).min(n.saturating_sub(1));
            (i, x - i as f64)
        };
        if self.grid.dim() == 1 {
            let (i, a) = split(u[0]);
            self.table[i] + a * (self.table[i + 1] - self.table[i])
        } else {
            let w = n + 1;
            let (i, a) = split(u[0]);
            let (j, b) = split(u[1]);
            let t = |p: usize, q: usize| self.table[p * w + q];
            (1.0 - a) * (1.0 - b) * t(i, j)
                + a * (1.0 - b) * t(i + 1, j)
                + (1.0 - a) * b * t(i, j + 1)
                + a * b * t(i + 1, j + 1)
        }
    }

    pub fn integral(&self, r: &Rect) -> f64 {
        let h = self.grid.spacing();
        let bx = self.grid.bbox();
        let dim = self.grid.dim();
        let mut inner = 0.0;
        if let Some(c) = r.intersect(&bx.to_rect()) {
            let mut lo = [0.0; 2];
            let mut hi = [0.0; 2];
            for a in 0..dim {
                lo[a] = (c.lo[a] - bx.lo(a)) / h;
                hi[a] = (c.hi[a] - bx.lo(a)) / h;
            }
            inner = if dim == 1 {
                self.cumulative(hi) - self.cumulative(lo)
            } else {
                self.cumulative(hi) - self.cumulative([lo[0], hi[1]]) - self.cumulative([hi[0], lo[1]])
                    + self.cumulative(lo)
            };
        }
        if let Some((region, c)) = &self.outer {
            if let Some(part) = r.intersect(region) {
                let in_box = part.intersect(&bx.to_rect()).map_or(0.0, |p| p.measure());
                inner += c * (part.measure() - in_box);
            }
        }
        inner
    }

    pub fn average(&self, q: &Cube) -> f64 {
        self.integral(&q.to_rect()) / q.measure()
    }

    /// Side of a cube beyond which averages can only decrease.
    fn extent(&self) -> f64 {
        let mut r = self.grid.bbox().to_rect();
        if let Some((region, _)) = &self.outer {
            for a in 0..r.dim {
                r.lo[a] = r.lo[a].min(region.lo[a]);
                r.hi[a] = r.hi[a].max(region.hi[a]);
            }
        }
        (0..r.dim).map(|a| r.hi[a] - r.lo[a]).fold(0.0, f64::max)
    }

    /// Maximal average over the lattice cubes containing `p`, at every scale
    /// from below the cell size up to twice the extent of the data.
    pub fn lattice_maximal_at(&self, p: &[f64], lattices: &ShiftedLatticeSet, floor: f64) -> f64 {
        let h = self.grid.spacing();
        let k_fine = (-(h / 2.0).log2()).ceil() as i32;
        let k_coarse = (-(2.0 * self.extent()).log2()).floor() as i32;
        let mut best = floor;
        for j in 0..lattices.len() {
            for k in k_coarse..=k_fine {
                let q = lattices.cube_containing(j, k, p);
                best = best.max(self.average(&q));
            }
        }
        best
    }
}

/// Lattice Hardy–Littlewood maximal function of `|f|`, evaluated at every
/// cell midpoint.
pub fn hl_maximal(f: &GridFunction, lattices: &ShiftedLatticeSet) -> GridFunction {
    let grid = *f.grid();
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let integrator = BoxIntegrator::new(&abs, grid);
    let dim = grid.dim();
    let values = (0..grid.cell_count())
        .map(|c| integrator.lattice_maximal_at(&grid.cell_center(c)[..dim], lattices, abs[c]))
        .collect();
    GridFunction::from_values(grid, values).expect("maximal function is finite")
}

/// A cube-indexed family of functions `Q ↦ f_Q` over the nodes of a dyadic
/// tree, each sampled on the cells of its own node.
///
/// Node values are laid out row-major over the node's cells on the tree's
/// grid (`resolution() / 2^depth` cells per axis).
pub trait NodeFunctions {
    fn tree(&self) -> &DyadicTree;

    /// Cells per axis of the grid under the root.
    fn resolution(&self) -> usize;

    fn node_values(&self, node: NodeId) -> Result<Arc<Vec<f64>>>;
}

/// Cells per axis of a node at `depth`.
pub(crate) fn node_width(resolution: usize, depth: usize) -> usize {
    resolution >> depth
}

/// `m_P^# f` on every cell of `top`: the largest oscillation (max − min over
/// cells) of `f_P − f_R` over the nodes `R ⊆ P` containing the cell.
pub fn sharp_maximal_field<F: NodeFunctions + ?Sized>(family: &F, top: NodeId) -> Result<Vec<f64>> {
    let tree = family.tree();
    if tree.max_depth() == 0 {
        return Err(Error::DepthExhausted);
    }
    let dim = tree.dim();
    let (d0, idx0) = tree.locate(top);
    let w0 = node_width(family.resolution(), d0);
    let f_top = family.node_values(top)?;
    let mut out = vec![0.0f64; w0.pow(dim as u32)];
    for depth in d0 + 1..=tree.max_depth() {
        let w = node_width(family.resolution(), depth);
        let (lo, hi) = tree.descendants_at(top, depth);
        for i0 in lo[0]..hi[0] {
            for i1 in lo[1]..hi[1] {
                let node = tree.id(depth, [i0, i1]);
                let f_r = family.node_values(node)?;
                // Offset of R's cells inside P's local layout.
                let off0 = (i0 - idx0[0] * (1 << (depth - d0))) * w;
                let off1 = if dim == 2 { (i1 - idx0[1] * (1 << (depth - d0))) * w } else { 0 };
                let local = |a: usize, b: usize| {
                    if dim == 1 {
                        off0 + a
                    } else {
                        (off0 + a) * w0 + off1 + b
                    }
                };
                let rows = if dim == 1 { 1 } else { w };
                let mut lo_v = f64::INFINITY;
                let mut hi_v = f64::NEG_INFINITY;
                for a in 0..w {
                    for b in 0..rows {
                        let r_local = if dim == 1 { a } else { a * w + b };
                        let d = f_top[local(a, b)] - f_r[r_local];
                        lo_v = lo_v.min(d);
                        hi_v = hi_v.max(d);
                    }
                }
                let osc = hi_v - lo_v;
                for a in 0..w {
                    for b in 0..rows {
                        let slot = &mut out[local(a, b)];
                        *slot = slot.max(osc);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `m_Q^# f(x)` at a single cell of the tree grid, with `Q` the tree root.
///
/// `cell` is a multi-index on the grid under the root.
pub fn sharp_maximal<F: NodeFunctions + ?Sized>(family: &F, tree: &DyadicTree, cell: [usize; 2]) -> Result<f64> {
    if tree.max_depth() == 0 {
        return Err(Error::DepthExhausted);
    }
    let dim = tree.dim();
    let res = family.resolution();
    let f_root = family.node_values(NodeId(0))?;
    let root_index = |c: [usize; 2]| if dim == 1 { c[0] } else { c[0] * res + c[1] };
    let mut best: f64 = 0.0;
    for depth in 1..=tree.max_depth() {
        let w = node_width(res, depth);
        let node_idx = [cell[0] / w, if dim == 2 { cell[1] / w } else { 0 }];
        let node = tree.id(depth, node_idx);
        let f_r = family.node_values(node)?;
        let rows = if dim == 1 { 1 } else { w };
        let mut lo_v = f64::INFINITY;
        let mut hi_v = f64::NEG_INFINITY;
        for a in 0..w {
            for b in 0..rows {
                let g = [node_idx[0] * w + a, node_idx[1] * w + b];
                let r_local = if dim == 1 { a } else { a * w + b };
                let d = f_root[root_index(g)] - f_r[r_local];
                lo_v = lo_v.min(d);
                hi_v = hi_v.max(d);
            }
        }
        best = best.max(hi_v - lo_v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn unit(n: usize) -> Grid {
        Grid::new(Cube::from_corner(&[0.0], 1.0), n)
    }

    fn q01() -> Cube {
        Cube::from_corner(&[0.0], 1.0)
    }

    /// Brute-force rearrangement: smallest candidate level meeting the
    /// measure condition.
    fn rearrangement_oracle(s: &CubeSample, lambda: f64) -> f64 {
        let total = s.total();
        let mut candidates = vec![0.0];
        candidates.extend(s.values.iter().map(|v| v.abs()));
        candidates
            .into_iter()
            .filter(|&a| {
                let above = s.values.iter().filter(|v| v.abs() > a).count();
                above as f64 <= lambda * total as f64
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn rearrangement_examples() {
        let g = unit(100);
        let c = GridFunction::constant(g, -2.5);
        for l in [0.1, 0.5, 0.99] {
            assert_eq!(rearrangement(&c, &q01(), l).unwrap(), 2.5);
        }
        // At λ = 1 every level α > 0 qualifies.
        assert_eq!(rearrangement(&c, &q01(), 1.0).unwrap(), 0.0);
        let chi = GridFunction::from_fn(g, |p| if p[0] < 0.3 { 1.0 } else { 0.0 });
        assert_eq!(rearrangement(&chi, &q01(), 0.5).unwrap(), 0.0);
        let x = GridFunction::from_fn(g, |p| p[0]);
        let r = rearrangement(&x, &q01(), 0.25).unwrap();
        assert!((r - 0.75).abs() <= 0.01, "{r}");
        assert!(matches!(rearrangement(&x, &q01(), 0.0), Err(Error::LambdaOutOfRange(_))));
        assert!(matches!(rearrangement(&x, &q01(), 1.5), Err(Error::LambdaOutOfRange(_))));
    }

    #[test]
    fn rearrangement_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..40);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-8i32..8) as f64 / 4.0).collect();
            let s = CubeSample {
                values,
                zero_cells: rng.gen_range(0..5),
            };
            let lambda = rng.gen_range(1..=16) as f64 / 16.0;
            assert_eq!(s.rearrangement(lambda).unwrap(), rearrangement_oracle(&s, lambda));
        }
    }

    #[test]
    fn median_examples() {
        let g = unit(64);
        assert_eq!(median(&GridFunction::constant(g, 4.0), &q01()).unwrap(), 4.0);
        let chi = GridFunction::from_fn(g, |p| if p[0] < 0.4 { 1.0 } else { 0.0 });
        assert_eq!(median(&chi, &q01()).unwrap(), 0.0);
        let x = GridFunction::from_fn(g, |p| p[0]);
        let m = median(&x, &q01()).unwrap();
        assert!((m - 0.5).abs() <= 1.0 / 64.0);
        // lower median of an even sample
        assert_eq!(CubeSample::from_values(vec![3.0, 1.0, 2.0, 4.0]).median(), 2.0);
    }

    #[test]
    fn median_with_zero_extension() {
        let s = CubeSample {
            values: vec![5.0, 5.0],
            zero_cells: 3,
        };
        assert_eq!(s.median(), 0.0);
        assert_eq!(s.mean(), 2.0);
    }

    #[test]
    fn oscillation_examples() {
        let g = unit(64);
        assert_eq!(mean_oscillation(&GridFunction::constant(g, 1.5), &q01()).unwrap(), 0.0);
        let chi = GridFunction::from_fn(g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        assert_eq!(mean_oscillation(&chi, &q01()).unwrap(), 0.5);
        assert_eq!(median_oscillation(&chi, &q01()).unwrap(), 0.5);
        let x = GridFunction::from_fn(g, |p| p[0]);
        assert!((mean_oscillation(&x, &q01()).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(median_oscillation(&GridFunction::constant(g, 2.0), &q01()).unwrap(), 0.0);
    }

    #[test]
    fn stat_rows() {
        let g = unit(8);
        let s = LocalStat::compute(&GridFunction::constant(g, 1.0), &q01(), StatKind::Rearrangement(0.25)).unwrap();
        assert_eq!(s.csv_row(3), "3,rearrangement(0.25),1e0");
    }

    #[test]
    fn box_integrator_is_exact_for_cell_constant_data() {
        let grid = Grid::new(Cube::centered(2, 2.0), 8);
        let f = GridFunction::from_fn(grid, |p| 1.0 + p[0] * p[0] + 0.5 * p[1]);
        let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
        let bi = BoxIntegrator::new(&abs, grid);
        // A box made of whole cells equals the cell sum.
        let q = Cube::from_corner(&[-0.75, -0.5], 1.0);
        let exact = f.integrate(&q).unwrap();
        assert!((bi.integral(&q.to_rect()) - exact).abs() < 1e-12);
        // Half a cell contributes half its mass.
        let cell = grid.cell_rect(10);
        let half = Rect::new(&[cell.lo[0], cell.lo[1]], &[0.5 * (cell.lo[0] + cell.hi[0]), cell.hi[1]]);
        assert!((bi.integral(&half) - 0.5 * abs[10] * grid.cell_measure()).abs() < 1e-14);
        // Outside the grid the integrand vanishes.
        let far = Rect::new(&[5.0, 5.0], &[6.0, 6.0]);
        assert_eq!(bi.integral(&far), 0.0);
        let with = bi.with_outer(Rect::new(&[0.0, 0.0], &[3.0, 1.0]), 2.0);
        assert!((with.integral(&far) - 0.0).abs() < 1e-15);
        let strip = Rect::new(&[1.0, 0.0], &[3.0, 1.0]);
        assert!((with.integral(&strip) - 4.0).abs() < 1e-12);
    }

    /// Brute-force maximal function over every interval with endpoints on
    /// cell boundaries or at `x` itself.
    fn brute_maximal(f: &GridFunction, x: f64) -> f64 {
        let grid = f.grid();
        let h = grid.spacing();
        let lo = grid.bbox().lo(0);
        let n = grid.cells_per_axis();
        let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
        let bi = BoxIntegrator::new(&abs, *grid);
        let mut ends: Vec<f64> = (0..=n).map(|i| lo + i as f64 * h).collect();
        ends.push(x);
        let mut best: f64 = 0.0;
        for &a in ends.iter().filter(|&&a| a <= x) {
            for &b in ends.iter().filter(|&&b| b >= x && b > a) {
                best = best.max(bi.integral(&Rect::new(&[a], &[b])) / (b - a));
            }
        }
        best
    }

    #[test]
    fn lattice_maximal_against_brute_force() {
        let grid = Grid::new(Cube::from_corner(&[-1.0], 5.0), 40);
        let chi = GridFunction::from_fn(grid, |p| if (0.0..1.0).contains(&p[0]) { 1.0 } else { 0.0 });
        let lat = ShiftedLatticeSet::new(1);
        let m = hl_maximal(&chi, &lat);
        for c in 0..grid.cell_count() {
            let x = grid.cell_center(c)[0];
            let brute = brute_maximal(&chi, x);
            assert!(m.value(c) <= brute + 1e-12, "x={x}: {} > {brute}", m.value(c));
            assert!(brute <= 6.0 * m.value(c) + 1e-12);
            assert!(m.value(c) >= chi.value(c));
        }
        // f = χ_[0,1] at x ≈ 3: the best interval is [0, x].
        let c3 = grid.cell_of(&[3.0]).unwrap();
        let x3 = grid.cell_center(c3)[0];
        assert!((brute_maximal(&chi, x3) - 1.0 / x3).abs() < 1e-12);
        assert!(m.value(c3) > 0.0);
        for c in grid.snap(&Cube::from_corner(&[0.0], 1.0), 1).unwrap().cells(&grid) {
            assert_eq!(m.value(c), 1.0);
        }
    }

    struct MapFamily {
        tree: DyadicTree,
        res: usize,
        values: HashMap<NodeId, Arc<Vec<f64>>>,
    }

    impl NodeFunctions for MapFamily {
        fn tree(&self) -> &DyadicTree {
            &self.tree
        }
        fn resolution(&self) -> usize {
            self.res
        }
        fn node_values(&self, node: NodeId) -> Result<Arc<Vec<f64>>> {
            Ok(self.values[&node].clone())
        }
    }

    fn family(depth: usize, res: usize, f: impl Fn(NodeId, usize) -> f64) -> MapFamily {
        let tree = DyadicTree::new(Cube::from_corner(&[0.0], 1.0), depth);
        let values = (0..tree.node_count())
            .map(|id| {
                let node = NodeId(id);
                let w = node_width(res, tree.depth(node));
                (node, Arc::new((0..w).map(|c| f(node, c)).collect()))
            })
            .collect();
        MapFamily { tree, res, values }
    }

    #[test]
    fn sharp_maximal_examples() {
        // identical f_R everywhere
        let fam = family(3, 16, |_, _| 1.0);
        assert!(sharp_maximal_field(&fam, NodeId(0)).unwrap().iter().all(|&v| v == 0.0));

        // one level: f_Q - f_child = χ_leftHalf(child) on the first child
        let fam = family(1, 8, |node, c| {
            if node == NodeId(1) && c < 2 {
                -1.0
            } else {
                0.0
            }
        });
        let m = sharp_maximal_field(&fam, NodeId(0)).unwrap();
        assert_eq!(&m[..4], &[1.0; 4]);
        assert_eq!(&m[4..], &[0.0; 4]);
        assert_eq!(sharp_maximal(&fam, &fam.tree, [0, 0]).unwrap(), 1.0);
        assert_eq!(sharp_maximal(&fam, &fam.tree, [6, 0]).unwrap(), 0.0);

        let flat = family(0, 8, |_, _| 0.0);
        assert!(matches!(sharp_maximal_field(&flat, NodeId(0)), Err(Error::DepthExhausted)));
    }

    #[test]
    fn sharp_maximal_monotone_in_depth() {
        let val = |node: NodeId, c: usize| ((node.0 * 31 + c * 7) % 11) as f64;
        let res = 32;
        let mut prev = vec![0.0; res];
        for depth in 1..=4 {
            let fam = family(depth, res, val);
            let m = sharp_maximal_field(&fam, NodeId(0)).unwrap();
            for (a, b) in prev.iter().zip(&m) {
                assert!(b >= a);
            }
            for c in 0..res {
                assert_eq!(m[c], sharp_maximal(&fam, &fam.tree, [c, 0]).unwrap());
            }
            prev = m;
        }
    }
}
