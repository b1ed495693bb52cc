//! Uniform grids and cell-constant grid functions.
//!
//! A [`GridFunction`] holds one value per cell (the midpoint sample) and is
//! treated as constant on each cell. Cubes are resolved on a grid by snapping
//! each face to the nearest cell boundary: a cell belongs to the snapped cube
//! iff its midpoint lies in the half-open cube `[lo, hi)` on every axis.
//! Essential suprema are maxima over cell midpoints.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::lattice::{Cube, Rect};

/// Tolerance, in cell units, applied when snapping faces onto cell
/// boundaries.
const SNAP_TOL: f64 = 1e-9;

/// A uniform grid of `N^n` cells over a bounding cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    bbox: Cube,
    cells_per_axis: usize,
}

/// A half-open rectangle of cell indices on the infinite lattice that
/// extends a grid. Indices may be negative or exceed the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRange {
    pub lo: [i64; 2],
    pub hi: [i64; 2],
    pub dim: usize,
}

impl CellRange {
    pub fn count(&self) -> usize {
        (0..self.dim)
            .map(|a| (self.hi[a] - self.lo[a]).max(0) as usize)
            .product()
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|a| self.hi[a] <= self.lo[a])
    }

    /// Intersection with the cells of `grid`.
    pub fn clip(&self, grid: &Grid) -> CellRange {
        let n = grid.cells_per_axis() as i64;
        let mut r = *self;
        for a in 0..self.dim {
            r.lo[a] = r.lo[a].clamp(0, n);
            r.hi[a] = r.hi[a].clamp(0, n);
        }
        r
    }

    pub fn within(&self, grid: &Grid) -> bool {
        let n = grid.cells_per_axis() as i64;
        (0..self.dim).all(|a| self.lo[a] >= 0 && self.hi[a] <= n)
    }

    /// Linear indices of the cells, in row-major order. The range must lie
    /// inside the grid.
    pub fn cells<'a>(&'a self, grid: &'a Grid) -> impl Iterator<Item = usize> + 'a {
        debug_assert!(self.within(grid));
        let n = grid.cells_per_axis();
        let (lo0, hi0) = (self.lo[0] as usize, self.hi[0] as usize);
        let (lo1, hi1) = if self.dim == 2 {
            (self.lo[1] as usize, self.hi[1] as usize)
        } else {
            (0, 1)
        };
        let dim = self.dim;
        (lo0..hi0).flat_map(move |i| {
            (lo1..hi1).map(move |j| if dim == 2 { i * n + j } else { i })
        })
    }
}

impl Grid {
    pub fn new(bbox: Cube, cells_per_axis: usize) -> Self {
        assert!(cells_per_axis > 0, "a grid needs at least one cell per axis");
        Grid {
            bbox,
            cells_per_axis,
        }
    }

    pub fn bbox(&self) -> &Cube {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.bbox.side() / self.cells_per_axis as f64
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.dim() as u32)
    }

    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    /// Row-major multi-index `[i0, i1]` of a linear cell index (axis 0 is the
    /// slow axis).
    pub fn multi_index(&self, cell: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [cell, 0]
        } else {
            [cell / self.cells_per_axis, cell % self.cells_per_axis]
        }
    }

    pub fn linear_index(&self, idx: [usize; 2]) -> usize {
        if self.dim() == 1 {
            idx[0]
        } else {
            idx[0] * self.cells_per_axis + idx[1]
        }
    }

    /// Midpoint of a cell on the infinite extension of the grid.
    pub fn lattice_center(&self, idx: [i64; 2]) -> [f64; 2] {
        let h = self.spacing();
        let mut c = [0.0; 2];
        for a in 0..self.dim() {
            c[a] = self.bbox.lo(a) + (idx[a] as f64 + 0.5) * h;
        }
        c
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        let idx = self.multi_index(cell);
        self.lattice_center([idx[0] as i64, idx[1] as i64])
    }

    pub fn cell_rect(&self, cell: usize) -> Rect {
        let idx = self.multi_index(cell);
        self.lattice_rect([idx[0] as i64, idx[1] as i64])
    }

    pub fn lattice_rect(&self, idx: [i64; 2]) -> Rect {
        let h = self.spacing();
        let mut r = Rect {
            lo: [0.0; 2],
            hi: [0.0; 2],
            dim: self.dim(),
        };
        for a in 0..self.dim() {
            r.lo[a] = self.bbox.lo(a) + idx[a] as f64 * h;
            r.hi[a] = r.lo[a] + h;
        }
        r
    }

    /// Rectangle covered by a range of lattice cells.
    pub fn range_rect(&self, range: &CellRange) -> Rect {
        let h = self.spacing();
        let mut r = Rect {
            lo: [0.0; 2],
            hi: [0.0; 2],
            dim: self.dim(),
        };
        for a in 0..self.dim() {
            r.lo[a] = self.bbox.lo(a) + range.lo[a] as f64 * h;
            r.hi[a] = self.bbox.lo(a) + range.hi[a] as f64 * h;
        }
        r
    }

    /// Lattice cell containing a point (faces go to the upper cell).
    pub fn locate(&self, p: &[f64]) -> [i64; 2] {
        let h = self.spacing();
        let mut idx = [0i64; 2];
        for a in 0..self.dim() {
            idx[a] = ((p[a] - self.bbox.lo(a)) / h).floor() as i64;
        }
        idx
    }

    /// Grid cell containing a point, if the point is inside the grid.
    pub fn cell_of(&self, p: &[f64]) -> Option<usize> {
        let idx = self.locate(p);
        let n = self.cells_per_axis as i64;
        if (0..self.dim()).all(|a| (0..n).contains(&idx[a])) {
            Some(self.linear_index([idx[0] as usize, idx[1] as usize]))
        } else {
            None
        }
    }

    /// Snaps a cube to the lattice cells whose midpoints it contains.
    ///
    /// Fails with `CubeBelowResolution` when fewer than `min_cells` cells
    /// remain on some axis.
    pub fn snap(&self, q: &Cube, min_cells: usize) -> Result<CellRange> {
        if q.dim() != self.dim() {
            return Err(Error::DimensionMismatch(q.dim(), self.dim()));
        }
        let h = self.spacing();
        let mut r = CellRange {
            lo: [0; 2],
            hi: [0; 2],
            dim: self.dim(),
        };
        for a in 0..self.dim() {
            let lo = (q.lo(a) - self.bbox.lo(a)) / h - 0.5;
            let hi = (q.hi(a) - self.bbox.lo(a)) / h - 0.5;
            r.lo[a] = (lo - SNAP_TOL).ceil() as i64;
            r.hi[a] = (hi - SNAP_TOL).ceil() as i64;
            if r.hi[a] - r.lo[a] < min_cells.max(1) as i64 {
                return Err(Error::CubeBelowResolution {
                    side: q.side(),
                    spacing: h,
                    required: min_cells.max(1),
                });
            }
        }
        Ok(r)
    }

    /// Checks that a snapped range lies inside the grid.
    pub fn clip_strict(&self, range: &CellRange, q: &Cube) -> Result<CellRange> {
        if range.within(self) {
            Ok(*range)
        } else {
            Err(Error::CubeOutsideDomain {
                center: q.center().to_vec(),
                side: q.side(),
            })
        }
    }

    /// Snapped cell range of `q`, required to lie inside the grid.
    pub fn resolve(&self, q: &Cube) -> Result<CellRange> {
        let r = self.snap(q, 1)?;
        self.clip_strict(&r, q)
    }

    /// All cells of the grid as a range.
    pub fn full_range(&self) -> CellRange {
        let n = self.cells_per_axis as i64;
        CellRange {
            lo: [0; 2],
            hi: [n, if self.dim() == 2 { n } else { 1 }],
            dim: self.dim(),
        }
    }
}

/// Cell-constant function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    support_hint: Option<CellRange>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            values: vec![0.0; grid.cell_count()],
            grid,
            support_hint: None,
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            values: vec![c; grid.cell_count()],
            grid,
            support_hint: None,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::Format(format!(
                "expected {} values, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("grid function values must be finite".into()));
        }
        Ok(GridFunction {
            grid,
            values,
            support_hint: None,
        })
    }

    /// Samples `f` at every cell midpoint.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.cell_count())
            .map(|c| f(&grid.cell_center(c)[..dim]))
            .collect();
        GridFunction {
            grid,
            values,
            support_hint: None,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.support_hint = None;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    /// Value at an arbitrary point; zero outside the grid.
    pub fn value_at(&self, p: &[f64]) -> f64 {
        self.grid.cell_of(p).map_or(0.0, |c| self.values[c])
    }

    /// Value of a lattice cell; zero outside the grid.
    pub fn lattice_value(&self, idx: [i64; 2]) -> f64 {
        let n = self.grid.cells_per_axis() as i64;
        if (0..self.grid.dim()).all(|a| (0..n).contains(&idx[a])) {
            self.values[self.grid.linear_index([idx[0] as usize, idx[1] as usize])]
        } else {
            0.0
        }
    }

    pub fn support_hint(&self) -> Option<&CellRange> {
        self.support_hint.as_ref()
    }

    /// Smallest cell range holding every nonzero value (`None` for the zero
    /// function). Recomputed from the values and cached as the support hint.
    pub fn compute_support(&mut self) -> Option<CellRange> {
        let dim = self.grid.dim();
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        let mut any = false;
        for (c, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                any = true;
                let idx = self.grid.multi_index(c);
                for a in 0..dim {
                    lo[a] = lo[a].min(idx[a] as i64);
                    hi[a] = hi[a].max(idx[a] as i64 + 1);
                }
            }
        }
        if dim == 1 {
            lo[1] = 0;
            hi[1] = 1;
        }
        self.support_hint = any.then_some(CellRange { lo, hi, dim });
        self.support_hint
    }

    /// Support range, from the hint when present.
    pub fn support(&self) -> Option<CellRange> {
        match self.support_hint {
            Some(r) => Some(r),
            None => self.clone().compute_support(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_measure()
    }

    /// `a * self + b * other`, cellwise.
    pub fn linear_combination(&self, a: f64, other: &GridFunction, b: f64) -> GridFunction {
        assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFunction {
            grid: self.grid,
            values,
            support_hint: None,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            support_hint: None,
        }
    }

    /// Midpoint-rule integral over the snapped cube.
    pub fn integrate(&self, q: &Cube) -> Result<f64> {
        let range = self.grid.resolve(q)?;
        let sum: f64 = range.cells(&self.grid).map(|c| self.values[c]).sum();
        Ok(sum * self.grid.cell_measure())
    }

    /// Integral over the snapped cube divided by its (snapped) measure.
    pub fn average(&self, q: &Cube) -> Result<f64> {
        let range = self.grid.resolve(q)?;
        let sum: f64 = range.cells(&self.grid).map(|c| self.values[c]).sum();
        Ok(sum / range.count() as f64)
    }

    /// `f * χ_q`: unchanged on the snapped cube, zero elsewhere.
    pub fn restrict(&self, q: &Cube) -> Result<GridFunction> {
        let range = self.grid.snap(q, 1)?.clip(&self.grid);
        let mut out = GridFunction::zeros(self.grid);
        if !range.is_empty() {
            for c in range.cells(&self.grid) {
                out.values[c] = self.values[c];
            }
            out.support_hint = Some(range);
        }
        Ok(out)
    }

    /// Discrete gradient: central differences in the interior, second-order
    /// one-sided differences on the boundary cells.
    pub fn gradient(&self) -> Vec<GridFunction> {
        let n = self.grid.cells_per_axis();
        let h = self.grid.spacing();
        let dim = self.grid.dim();
        (0..dim)
            .map(|axis| {
                let mut out = vec![0.0; self.values.len()];
                let stride = if dim == 2 && axis == 0 { n } else { 1 };
                for (c, o) in out.iter_mut().enumerate() {
                    let i = self.grid.multi_index(c)[axis];
                    let v = |k: isize| self.values[(c as isize + k * stride as isize) as usize];
                    *o = if n < 3 {
                        if n == 1 {
                            0.0
                        } else if i == 0 {
                            (v(1) - v(0)) / h
                        } else {
                            (v(0) - v(-1)) / h
                        }
                    } else if i == 0 {
                        (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
                    } else if i == n - 1 {
                        (3.0 * v(0) - 4.0 * v(-1) + v(-2)) / (2.0 * h)
                    } else {
                        (v(1) - v(-1)) / (2.0 * h)
                    };
                }
                GridFunction {
                    grid: self.grid,
                    values: out,
                    support_hint: None,
                }
            })
            .collect()
    }

    /// Euclidean norm of the discrete gradient.
    pub fn gradient_norm(&self) -> GridFunction {
        let parts = self.gradient();
        let values = (0..self.values.len())
            .map(|c| parts.iter().map(|g| g.values[c] * g.values[c]).sum::<f64>().sqrt())
            .collect();
        GridFunction {
            grid: self.grid,
            values,
            support_hint: None,
        }
    }

    /// Writes `cell,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell,value")?;
        for (c, v) in self.values.iter().enumerate() {
            writeln!(w, "{c},{v:e}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`write_csv`](Self::write_csv) onto a
    /// known grid.
    pub fn read_csv<R: BufRead>(grid: Grid, r: R) -> Result<Self> {
        let mut values = vec![0.0; grid.cell_count()];
        let mut seen = vec![false; grid.cell_count()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let (c, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: expected 'cell,value'", lineno + 1)))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad cell index", lineno + 1)))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad value", lineno + 1)))?;
            if c >= values.len() {
                return Err(Error::Format(format!("line {}: cell {c} out of range", lineno + 1)));
            }
            values[c] = v;
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("missing cells in CSV".into()));
        }
        GridFunction::from_values(grid, values)
    }

    /// Binary layout, all little-endian: `dim: u64`, `N: u64`, box center
    /// (`dim` × f64), box side (f64), then the `N^dim` values row-major as
    /// f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dim = self.grid.dim();
        let mut out = Vec::with_capacity(16 + 8 * (dim + 1) + 8 * self.values.len());
        out.extend_from_slice(&(dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.grid.cells_per_axis() as u64).to_le_bytes());
        for c in self.grid.bbox().center() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.grid.bbox().side().to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes
                .get(pos..pos + n)
                .ok_or_else(|| Error::Format("truncated grid function".into()))?;
            pos += n;
            Ok(s)
        };
        let word = |s: &[u8]| <[u8; 8]>::try_from(s).expect("8-byte slice");
        let dim = u64::from_le_bytes(word(take(8)?)) as usize;
        let n = u64::from_le_bytes(word(take(8)?)) as usize;
        if !(1..=2).contains(&dim) || n == 0 {
            return Err(Error::Format(format!("bad header dim={dim} N={n}")));
        }
        let mut center = [0.0; 2];
        for c in center.iter_mut().take(dim) {
            *c = f64::from_le_bytes(word(take(8)?));
        }
        let side = f64::from_le_bytes(word(take(8)?));
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::Format(format!("bad box side {side}")));
        }
        let count = n
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::Format("grid too large".into()))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(f64::from_le_bytes(word(take(8)?)));
        }
        if pos != bytes.len() {
            return Err(Error::Format("trailing bytes after grid function".into()));
        }
        GridFunction::from_values(Grid::new(Cube::new(&center[..dim], side), n), values)
    }
}

/// Free-function forms of the grid operations.
pub fn integrate(f: &GridFunction, q: &Cube) -> Result<f64> {
    f.integrate(q)
}

pub fn average(f: &GridFunction, q: &Cube) -> Result<f64> {
    f.average(q)
}

pub fn restrict(f: &GridFunction, q: &Cube) -> Result<GridFunction> {
    f.restrict(q)
}

pub fn gradient(f: &GridFunction) -> Vec<GridFunction> {
    f.gradient()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize, n: usize) -> Grid {
        Grid::new(Cube::from_corner(&[0.0, 0.0][..dim], 1.0), n)
    }

    #[test]
    fn integrate_examples() {
        let g = unit(1, 100);
        let one = GridFunction::constant(g, 1.0);
        let q = Cube::from_corner(&[0.0], 1.0);
        assert!((one.integrate(&q).unwrap() - 1.0).abs() < 1e-14);
        let x = GridFunction::from_fn(g, |p| p[0]);
        // Midpoint rule is exact for linear functions.
        assert!((x.integrate(&q).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(GridFunction::zeros(g).integrate(&q).unwrap(), 0.0);
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        let q = Cube::from_corner(&[0.0], 1.0);
        let err = |n| {
            let f = GridFunction::from_fn(unit(1, n), |p| p[0] * p[0]);
            (f.integrate(&q).unwrap() - 1.0 / 3.0).abs()
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn average_examples() {
        let g = unit(1, 64);
        let q = Cube::from_corner(&[0.0], 1.0);
        assert_eq!(GridFunction::constant(g, 3.5).average(&q).unwrap(), 3.5);
        let chi = GridFunction::from_fn(g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        assert_eq!(chi.average(&q).unwrap(), 0.5);
        let f = GridFunction::from_fn(g, |p| p[0].sin());
        let h = GridFunction::from_fn(g, |p| p[0] * p[0]);
        let lhs = f.linear_combination(2.0, &h, -3.0).average(&q).unwrap();
        let rhs = 2.0 * f.average(&q).unwrap() - 3.0 * h.average(&q).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    /// Dyadic-rational samples make every partial sum exact, so additivity
    /// is checked with equality.
    #[test]
    fn integrate_is_additive_over_halves() {
        for dim in 1..=2 {
            let g = unit(dim, 32);
            let f = GridFunction::from_fn(g, |p| {
                (p.iter().map(|x| (7.0 * x).cos()).sum::<f64>() * 64.0).round() / 64.0
            });
            let q = Cube::from_corner(&[0.25, 0.25][..dim], 0.5);
            let whole = f.integrate(&q).unwrap();
            let parts: f64 = q.children().iter().map(|c| f.integrate(c).unwrap()).sum();
            assert_eq!(whole, parts);
        }
    }

    #[test]
    fn resolution_and_domain_errors() {
        let g = unit(1, 10);
        let f = GridFunction::constant(g, 1.0);
        assert!(matches!(
            f.integrate(&Cube::from_corner(&[0.5], 0.04)),
            Err(Error::CubeBelowResolution { .. })
        ));
        assert!(matches!(
            f.integrate(&Cube::from_corner(&[0.5], 1.0)),
            Err(Error::CubeOutsideDomain { .. })
        ));
    }

    #[test]
    fn restrict_examples() {
        let g = unit(1, 64);
        let f = GridFunction::from_fn(g, |p| 1.0 + p[0]);
        let bx = *g.bbox();
        assert_eq!(f.restrict(&bx).unwrap().values(), f.values());
        let one = GridFunction::constant(g, 1.0);
        let half = one.restrict(&Cube::from_corner(&[0.0], 0.5)).unwrap();
        assert_eq!(half.integrate(&bx).unwrap(), 0.5);
        let outer = Cube::from_corner(&[0.0], 0.75);
        let inner = Cube::from_corner(&[0.25], 0.25);
        let twice = f.restrict(&outer).unwrap().restrict(&inner).unwrap();
        assert_eq!(twice, f.restrict(&inner).unwrap());
    }

    #[test]
    fn gradient_examples() {
        let g = unit(2, 32);
        let c = GridFunction::constant(g, 2.0);
        assert!(c.gradient().iter().all(|d| d.max_abs() == 0.0));
        let x1 = GridFunction::from_fn(g, |p| p[0]);
        let d = x1.gradient();
        assert!(d[0].values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(d[1].max_abs() < 1e-12);
    }

    /// Radial bump `(1 - r^2)^3` against its analytic gradient norm
    /// `6 r (1 - r^2)^2`, checked for O(h^2) convergence on the interior.
    #[test]
    fn gradient_second_order_on_interior() {
        let bump = |p: &[f64]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2 < 1.0 {
                (1.0 - r2).powi(3)
            } else {
                0.0
            }
        };
        let exact = |p: &[f64]| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2 < 1.0 {
                6.0 * r2.sqrt() * (1.0 - r2).powi(2)
            } else {
                0.0
            }
        };
        let err = |n: usize| {
            let g = Grid::new(Cube::centered(2, 4.0), n);
            let f = GridFunction::from_fn(g, bump);
            let norm = f.gradient_norm();
            (0..g.cell_count())
                .map(|c| {
                    let p = g.cell_center(c);
                    (norm.value(c) - exact(&p)).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 / e2 >= 3.0, "ratio {}", e1 / e2);
        // symmetric: gradient norm invariant under x -> -x
        let g = Grid::new(Cube::centered(2, 4.0), 64);
        let norm = GridFunction::from_fn(g, bump).gradient_norm();
        for c in 0..g.cell_count() {
            let [i, j] = g.multi_index(c);
            let mirror = g.linear_index([63 - i, j]);
            assert!((norm.value(c) - norm.value(mirror)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_and_binary_formats() {
        let g = Grid::new(Cube::new(&[0.5, -0.25], 2.0), 4);
        let f = GridFunction::from_fn(g, |p| p[0] - 3.0 * p[1]);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cell,value\n0,"));
        let back = GridFunction::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back, f);

        let bytes = f.to_bytes();
        assert_eq!(bytes.len(), 16 + 24 + 16 * 8);
        assert_eq!(&bytes[..8], &2u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &4u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &0.5f64.to_le_bytes());
        assert_eq!(&bytes[32..40], &2.0f64.to_le_bytes());
        assert_eq!(&bytes[40..48], &f.value(0).to_le_bytes());
        assert_eq!(GridFunction::from_bytes(&bytes).unwrap(), f);
        assert!(GridFunction::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
