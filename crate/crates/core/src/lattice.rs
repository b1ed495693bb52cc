//! Axis-aligned cubes, dyadic trees, the shifted dyadic lattices and sparse
//! families.
//!
//! Everything here lives in dimension one or two. Cubes are closed; the
//! containment tests accept a relative slack of `1e-12 * side` so that cubes
//! built by repeated bisection or dilation compare as expected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;

/// Relative tolerance for containment and overlap tests.
pub const CONTAINMENT_TOL: f64 = 1e-12;

/// A closed axis-aligned cube in dimension 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubeRecord", into = "CubeRecord")]
pub struct Cube {
    center: [f64; 2],
    side: f64,
    dim: usize,
}

/// Wire form of a cube: `{"center": [...], "side": s, "dim": n}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeRecord {
    pub center: Vec<f64>,
    pub side: f64,
    pub dim: usize,
}

impl From<Cube> for CubeRecord {
    fn from(q: Cube) -> Self {
        CubeRecord {
            center: q.center().to_vec(),
            side: q.side,
            dim: q.dim,
        }
    }
}

impl TryFrom<CubeRecord> for Cube {
    type Error = Error;

    fn try_from(r: CubeRecord) -> Result<Self> {
        if r.dim != r.center.len() || !(1..=2).contains(&r.dim) {
            return Err(Error::Format(format!(
                "cube dim {} does not match center of length {}",
                r.dim,
                r.center.len()
            )));
        }
        if !(r.side > 0.0 && r.side.is_finite()) || r.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Format(format!("invalid cube side {}", r.side)));
        }
        Ok(Cube::new(&r.center, r.side))
    }
}

impl Cube {
    /// Builds a cube from its center and side length.
    ///
    /// Panics if the dimension is not 1 or 2 or the side is not a positive
    /// finite number.
    pub fn new(center: &[f64], side: f64) -> Self {
        let dim = center.len();
        assert!((1..=2).contains(&dim), "only dimensions 1 and 2 are supported");
        assert!(side > 0.0 && side.is_finite(), "cube side must be positive, got {side}");
        let mut c = [0.0; 2];
        c[..dim].copy_from_slice(center);
        Cube { center: c, side, dim }
    }

    /// The cube `[lo, lo + side]^n` with the same lower corner on every axis.
    pub fn from_corner(lo: &[f64], side: f64) -> Self {
        let center: Vec<f64> = lo.iter().map(|l| l + side / 2.0).collect();
        Cube::new(&center, side)
    }

    /// Cube centered at the origin.
    pub fn centered(dim: usize, side: f64) -> Self {
        Cube::new(&[0.0, 0.0][..dim], side)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim]
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn measure(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn diam(&self) -> f64 {
        self.side * (self.dim as f64).sqrt()
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.center[axis] - self.side / 2.0
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center[axis] + self.side / 2.0
    }

    /// Same center, side multiplied by `factor`.
    pub fn dilate(&self, factor: f64) -> Cube {
        assert!(factor > 0.0, "dilation factor must be positive");
        Cube::new(self.center(), self.side * factor)
    }

    /// The dilation by `5 * sqrt(n)` used throughout the sparse machinery.
    pub fn star(&self) -> Cube {
        self.dilate(star_factor(self.dim))
    }

    /// The `2^n` cubes of half side obtained by bisecting every axis.
    ///
    /// Child `c` lies in the upper half along axis `a` iff bit `a` of `c` is
    /// set.
    pub fn children(&self) -> Vec<Cube> {
        let quarter = self.side / 4.0;
        (0..1usize << self.dim)
            .map(|c| {
                let mut center = self.center;
                for (a, x) in center.iter_mut().enumerate().take(self.dim) {
                    *x += if c >> a & 1 == 1 { quarter } else { -quarter };
                }
                Cube::new(&center[..self.dim], self.side / 2.0)
            })
            .collect()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        let tol = CONTAINMENT_TOL * self.side;
        (0..self.dim).all(|a| p[a] >= self.lo(a) - tol && p[a] <= self.hi(a) + tol)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        let tol = CONTAINMENT_TOL * self.side.max(other.side);
        (0..self.dim)
            .all(|a| other.lo(a) >= self.lo(a) - tol && other.hi(a) <= self.hi(a) + tol)
    }

    /// True when the interiors overlap.
    pub fn overlaps(&self, other: &Cube) -> bool {
        let tol = CONTAINMENT_TOL * self.side.max(other.side);
        (0..self.dim).all(|a| other.lo(a) < self.hi(a) - tol && other.hi(a) > self.lo(a) + tol)
    }

    pub fn to_rect(&self) -> Rect {
        let mut r = Rect {
            lo: [0.0; 2],
            hi: [0.0; 2],
            dim: self.dim,
        };
        for a in 0..self.dim {
            r.lo[a] = self.lo(a);
            r.hi[a] = self.hi(a);
        }
        r
    }
}

/// The factor `5 * sqrt(n)`.
pub fn star_factor(dim: usize) -> f64 {
    5.0 * (dim as f64).sqrt()
}

/// Same center, side multiplied by `factor`.
pub fn dilate(q: &Cube, factor: f64) -> Cube {
    q.dilate(factor)
}

/// The `2^n` dyadic children of `q`.
pub fn children(q: &Cube) -> Vec<Cube> {
    q.children()
}

/// An axis-aligned box, used for cells and clipped integration regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub dim: usize,
}

impl Rect {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        let dim = lo.len();
        assert_eq!(dim, hi.len());
        let mut r = Rect {
            lo: [0.0; 2],
            hi: [0.0; 2],
            dim,
        };
        r.lo[..dim].copy_from_slice(lo);
        r.hi[..dim].copy_from_slice(hi);
        r
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| (self.hi[a] - self.lo[a]).max(0.0)).product()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let mut r = *self;
        for a in 0..self.dim {
            r.lo[a] = self.lo[a].max(other.lo[a]);
            r.hi[a] = self.hi[a].min(other.hi[a]);
            if r.hi[a] <= r.lo[a] {
                return None;
            }
        }
        Some(r)
    }

    pub fn center(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for a in 0..self.dim {
            c[a] = 0.5 * (self.lo[a] + self.hi[a]);
        }
        c
    }
}

/// Identifier of a node in a [`DyadicTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// The dyadic cubes of a root cube down to a fixed depth.
///
/// Nodes are addressed by `(depth, multi-index)`; the multi-index counts
/// sub-cubes from the lower corner of the root, axis 0 first. Node ids are
/// laid out level by level, so the root is `NodeId(0)` and ids of a level are
/// contiguous.
#[derive(Debug, Clone)]
pub struct DyadicTree {
    root: Cube,
    max_depth: usize,
    level_offsets: Vec<usize>,
}

impl DyadicTree {
    pub fn new(root: Cube, max_depth: usize) -> Self {
        let per_level = 1usize << root.dim();
        let mut level_offsets = Vec::with_capacity(max_depth + 2);
        let mut acc = 0usize;
        let mut width = 1usize;
        for _ in 0..=max_depth {
            level_offsets.push(acc);
            acc += width;
            width *= per_level;
        }
        level_offsets.push(acc);
        DyadicTree {
            root,
            max_depth,
            level_offsets,
        }
    }

    pub fn root(&self) -> &Cube {
        &self.root
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    pub fn node_count(&self) -> usize {
        self.level_offsets[self.max_depth + 1]
    }

    /// Number of sub-cubes per axis at `depth`.
    pub fn per_axis(depth: usize) -> usize {
        1usize << depth
    }

    pub fn id(&self, depth: usize, index: [usize; 2]) -> NodeId {
        debug_assert!(depth <= self.max_depth);
        let w = Self::per_axis(depth);
        let linear = if self.dim() == 1 { index[0] } else { index[0] + w * index[1] };
        NodeId(self.level_offsets[depth] + linear)
    }

    /// `(depth, multi-index)` of a node.
    pub fn locate(&self, node: NodeId) -> (usize, [usize; 2]) {
        let depth = match self.level_offsets.binary_search(&node.0) {
            Ok(d) => d,
            Err(d) => d - 1,
        };
        let linear = node.0 - self.level_offsets[depth];
        let w = Self::per_axis(depth);
        if self.dim() == 1 {
            (depth, [linear, 0])
        } else {
            (depth, [linear % w, linear / w])
        }
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.locate(node).0
    }

    pub fn cube(&self, node: NodeId) -> Cube {
        let (depth, idx) = self.locate(node);
        let side = self.root.side() / Self::per_axis(depth) as f64;
        let dim = self.dim();
        let mut center = [0.0; 2];
        for a in 0..dim {
            center[a] = self.root.lo(a) + (idx[a] as f64 + 0.5) * side;
        }
        Cube::new(&center[..dim], side)
    }

    pub fn children(&self, node: NodeId) -> Vec<NodeId> {
        let (depth, idx) = self.locate(node);
        if depth == self.max_depth {
            return Vec::new();
        }
        (0..1usize << self.dim())
            .map(|c| {
                let mut child = [0usize; 2];
                for a in 0..self.dim() {
                    child[a] = 2 * idx[a] + (c >> a & 1);
                }
                self.id(depth + 1, child)
            })
            .collect()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        let (depth, idx) = self.locate(node);
        if depth == 0 {
            return None;
        }
        Some(self.id(depth - 1, [idx[0] / 2, idx[1] / 2]))
    }

    /// All node ids at `depth`.
    pub fn level(&self, depth: usize) -> std::ops::Range<usize> {
        self.level_offsets[depth]..self.level_offsets[depth + 1]
    }

    /// Node ids in the subtree rooted at `node` (the node included), level by
    /// level.
    pub fn subtree(&self, node: NodeId) -> Vec<NodeId> {
        let mut out = vec![node];
        let mut frontier = vec![node];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for n in frontier {
                next.extend(self.children(n));
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }

    /// Nodes at depth `depth` that lie inside `node`, as a rectangle of
    /// multi-indices `[lo, hi)`.
    pub fn descendants_at(&self, node: NodeId, depth: usize) -> ([usize; 2], [usize; 2]) {
        let (d0, idx) = self.locate(node);
        assert!(depth >= d0);
        let scale = 1usize << (depth - d0);
        let mut lo = [0; 2];
        let mut hi = [1; 2];
        for a in 0..self.dim() {
            lo[a] = idx[a] * scale;
            hi[a] = (idx[a] + 1) * scale;
        }
        (lo, hi)
    }
}

/// The `3^n` shifted dyadic lattices.
///
/// Lattice `j` is built from the shift vector `t_j` in `{0, 1/3, 2/3}^n`
/// (digit `a` of `j` in base 3 gives the shift on axis `a`); its cubes at
/// scale `k` are `2^{-k} ([0,1)^n + m + (-1)^k t_j)` for integer `m`.
#[derive(Debug, Clone)]
pub struct ShiftedLatticeSet {
    dim: usize,
    shifts: Vec<[f64; 2]>,
}

impl ShiftedLatticeSet {
    pub fn new(dim: usize) -> Self {
        assert!((1..=2).contains(&dim));
        let count = 3usize.pow(dim as u32);
        let shifts = (0..count)
            .map(|j| {
                let mut t = [0.0; 2];
                let mut rest = j;
                for x in t.iter_mut().take(dim) {
                    *x = (rest % 3) as f64 / 3.0;
                    rest /= 3;
                }
                t
            })
            .collect();
        ShiftedLatticeSet { dim, shifts }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shift(&self, lattice: usize) -> &[f64] {
        &self.shifts[lattice][..self.dim]
    }

    /// Signed offset of lattice `lattice` at scale `k` along axis `a`, in
    /// units of the cube side.
    fn offset(&self, lattice: usize, k: i32, a: usize) -> f64 {
        let t = self.shifts[lattice][a];
        if k.rem_euclid(2) == 0 {
            t
        } else {
            -t
        }
    }

    /// The cube of lattice `lattice` at scale `k` (side `2^{-k}`) containing
    /// the point `p`. Points on a face go to the cube above the face.
    pub fn cube_containing(&self, lattice: usize, k: i32, p: &[f64]) -> Cube {
        let side = (-(k as f64)).exp2();
        let mut lo = [0.0; 2];
        for a in 0..self.dim {
            let s = self.offset(lattice, k, a);
            let m = (p[a] / side - s).floor();
            lo[a] = (m + s) * side;
        }
        Cube::from_corner(&lo[..self.dim], side)
    }

    /// Smallest cube (over all lattices and scales) that contains `q`.
    ///
    /// The returned cube satisfies `q ⊆ R` and `side(R) ≤ 6 side(q)`.
    pub fn containing_dyadic(&self, q: &Cube) -> Result<(usize, Cube)> {
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch(q.dim(), self.dim));
        }
        // Smallest scale whose side is at least side(q).
        let k_start = (-q.side().log2()).floor() as i32;
        let mut best: Option<(usize, Cube)> = None;
        for j in 0..self.len() {
            for step in 0..8 {
                let k = k_start - step;
                let r = self.cube_containing(j, k, &q.center()[..]);
                if r.contains_cube(q) {
                    if best.as_ref().map_or(true, |(_, b)| r.side() < b.side()) {
                        best = Some((j, r));
                    }
                    break;
                }
            }
        }
        match best {
            Some((j, r)) if r.side() <= 6.0 * q.side() * (1.0 + CONTAINMENT_TOL) => Ok((j, r)),
            _ => Err(Error::LatticeCover {
                center: q.center().to_vec(),
                side: q.side(),
            }),
        }
    }
}

/// Free-function form of [`ShiftedLatticeSet::containing_dyadic`].
pub fn containing_dyadic(q: &Cube, lattices: &ShiftedLatticeSet) -> Result<(usize, Cube)> {
    lattices.containing_dyadic(q)
}

/// One cube of a sparse family with its (possibly unassigned) disjoint
/// portion, given as cell indices of the audit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEntry {
    pub cube: Cube,
    pub e_portion: Vec<usize>,
}

/// A family of cubes claimed to be `eta`-sparse.
#[derive(Debug, Clone, Default)]
pub struct SparseFamily {
    pub entries: Vec<SparseEntry>,
    pub eta: f64,
    verified_eta: Option<f64>,
}

/// JSON form of a family: the cube records plus the audited sparseness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseFamilyRecord {
    pub cubes: Vec<Cube>,
    pub eta: f64,
    #[serde(rename = "achievedEta")]
    pub achieved_eta: Option<f64>,
}

impl SparseFamily {
    pub fn new(eta: f64) -> Self {
        SparseFamily {
            entries: Vec::new(),
            eta,
            verified_eta: None,
        }
    }

    pub fn from_cubes(cubes: impl IntoIterator<Item = Cube>, eta: f64) -> Self {
        let mut fam = SparseFamily::new(eta);
        for q in cubes {
            fam.push(q);
        }
        fam
    }

    pub fn push(&mut self, cube: Cube) {
        self.entries.push(SparseEntry {
            cube,
            e_portion: Vec::new(),
        });
        self.verified_eta = None;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cubes(&self) -> impl Iterator<Item = &Cube> + '_ {
        self.entries.iter().map(|e| &e.cube)
    }

    /// Sparseness achieved by the last audit, if any.
    pub fn verified_eta(&self) -> Option<f64> {
        self.verified_eta
    }

    pub fn is_verified(&self) -> bool {
        self.verified_eta.is_some()
    }

    pub fn to_record(&self) -> SparseFamilyRecord {
        SparseFamilyRecord {
            cubes: self.cubes().copied().collect(),
            eta: self.eta,
            achieved_eta: self.verified_eta,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: SparseFamilyRecord = serde_json::from_str(text)?;
        let mut fam = SparseFamily::from_cubes(rec.cubes, rec.eta);
        fam.verified_eta = None;
        Ok(fam)
    }
}

/// Outcome of [`audit_sparseness`].
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// `min_Q |E_Q| / |Q|`; 1 for an empty family.
    pub achieved_eta: f64,
    /// Per-entry ratio `|E_Q| / |Q|`, in family order.
    pub ratios: Vec<f64>,
    /// Owning entry of every audit-grid cell (`None` when unclaimed).
    pub assignments: Vec<Option<u32>>,
    /// Spacing of the audit grid.
    pub spacing: f64,
}

impl AuditReport {
    /// The loss allowed for a one-cell boundary layer on the smallest cube.
    pub fn one_cell_slack(&self, fam: &SparseFamily) -> f64 {
        let min_side = fam
            .cubes()
            .map(|q| q.side())
            .fold(f64::INFINITY, f64::min);
        if !min_side.is_finite() {
            return 0.0;
        }
        let dim = fam.entries[0].cube.dim() as i32;
        1.0 - (1.0 - (self.spacing / min_side).min(1.0)).powi(dim)
    }
}

/// Assigns disjoint cell sets `E_Q` greedily, smallest cubes first, and
/// records the achieved sparseness on the family.
///
/// Each cube claims every still-free grid cell whose midpoint it contains.
/// Ties in measure keep family order.
pub fn audit_sparseness(fam: &mut SparseFamily, grid: &Grid) -> Result<AuditReport> {
    let mut order: Vec<usize> = (0..fam.len()).collect();
    order.sort_by(|&a, &b| {
        fam.entries[a]
            .cube
            .measure()
            .total_cmp(&fam.entries[b].cube.measure())
    });
    let mut assignments: Vec<Option<u32>> = vec![None; grid.cell_count()];
    let mut ratios = vec![0.0; fam.len()];
    let cell_measure = grid.cell_measure();
    for &e in &order {
        let cube = fam.entries[e].cube;
        let range = grid.snap(&cube, 2)?;
        let range = grid.clip_strict(&range, &cube)?;
        let mut claimed = Vec::new();
        for cell in range.cells(grid) {
            if assignments[cell].is_none() {
                assignments[cell] = Some(e as u32);
                claimed.push(cell);
            }
        }
        ratios[e] = claimed.len() as f64 * cell_measure / cube.measure();
        fam.entries[e].e_portion = claimed;
    }
    let achieved_eta = ratios.iter().copied().fold(1.0, f64::min);
    fam.verified_eta = Some(achieved_eta);
    Ok(AuditReport {
        achieved_eta,
        ratios,
        assignments,
        spacing: grid.spacing(),
    })
}

/// Exact variant of [`audit_sparseness`] on the arrangement of cube faces.
///
/// The breakpoints of every axis are the cube faces, so each cube is an
/// exact union of arrangement cells and no discretization slack arises.
/// `E_Q` portions and `assignments` index arrangement cells (row-major over
/// the breakpoint intervals); `spacing` is reported as 0.
pub fn audit_sparseness_exact(fam: &mut SparseFamily) -> AuditReport {
    if fam.is_empty() {
        fam.verified_eta = Some(1.0);
        return AuditReport {
            achieved_eta: 1.0,
            ratios: Vec::new(),
            assignments: Vec::new(),
            spacing: 0.0,
        };
    }
    let dim = fam.entries[0].cube.dim();
    let mut cuts: Vec<Vec<f64>> = (0..dim)
        .map(|a| fam.cubes().flat_map(|q| [q.lo(a), q.hi(a)]).collect())
        .collect();
    for c in &mut cuts {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    let widths: Vec<Vec<f64>> = cuts.iter().map(|c| c.windows(2).map(|w| w[1] - w[0]).collect()).collect();
    let cols = if dim == 2 { widths[1].len() } else { 1 };
    let rows = widths[0].len();
    let locate = |a: usize, v: f64| cuts[a].binary_search_by(|c| c.total_cmp(&v)).expect("face is a breakpoint");

    let mut order: Vec<usize> = (0..fam.len()).collect();
    order.sort_by(|&a, &b| fam.entries[a].cube.measure().total_cmp(&fam.entries[b].cube.measure()));
    // next[r][c]: first free column ≥ c in row r (path-compressed).
    let mut next: Vec<u32> = (0..rows * (cols + 1)).map(|i| (i % (cols + 1)) as u32).collect();
    fn find(next: &mut [u32], row: usize, stride: usize, c: usize) -> usize {
        let mut root = c;
        while next[row * stride + root] as usize != root {
            root = next[row * stride + root] as usize;
        }
        let mut cur = c;
        while next[row * stride + cur] as usize != root {
            let n = next[row * stride + cur] as usize;
            next[row * stride + cur] = root as u32;
            cur = n;
        }
        root
    }
    let mut assignments: Vec<Option<u32>> = vec![None; rows * cols];
    let mut ratios = vec![0.0; fam.len()];
    for &e in &order {
        let q = fam.entries[e].cube;
        let (r0, r1) = (locate(0, q.lo(0)), locate(0, q.hi(0)));
        let (c0, c1) = if dim == 2 { (locate(1, q.lo(1)), locate(1, q.hi(1))) } else { (0, 1) };
        let mut claimed = Vec::new();
        let mut mass = 0.0;
        for r in r0..r1 {
            let mut c = find(&mut next, r, cols + 1, c0);
            while c < c1 {
                let cell = r * cols + c;
                assignments[cell] = Some(e as u32);
                claimed.push(cell);
                mass += widths[0][r] * if dim == 2 { widths[1][c] } else { 1.0 };
                next[r * (cols + 1) + c] = (c + 1) as u32;
                c = find(&mut next, r, cols + 1, c + 1);
            }
        }
        ratios[e] = mass / q.measure();
        fam.entries[e].e_portion = claimed;
    }
    let achieved_eta = ratios.iter().copied().fold(1.0, f64::min);
    fam.verified_eta = Some(achieved_eta);
    AuditReport {
        achieved_eta,
        ratios,
        assignments,
        spacing: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dilate_examples() {
        let q = Cube::from_corner(&[0.0], 1.0);
        let s = q.dilate(5.0);
        assert_eq!(s.center(), &[0.5]);
        assert_eq!(s.side(), 5.0);
        assert_eq!((s.lo(0), s.hi(0)), (-2.0, 3.0));
        assert_eq!(q.dilate(1.0), q);
        let sq = Cube::from_corner(&[0.0, 0.0], 1.0).star();
        assert!((sq.side() - 7.0710678118654755).abs() < 1e-12);
    }

    #[test]
    fn children_partition_parent() {
        let q = Cube::from_corner(&[0.0], 1.0);
        let kids = q.children();
        assert_eq!((kids[0].lo(0), kids[0].hi(0)), (0.0, 0.5));
        assert_eq!((kids[1].lo(0), kids[1].hi(0)), (0.5, 1.0));
        let sq = Cube::from_corner(&[0.0, 0.0], 1.0);
        let kids = sq.children();
        assert_eq!(kids.len(), 4);
        assert!(kids.iter().all(|k| k.side() == 0.5 && sq.contains_cube(k)));
        let total: f64 = kids.iter().map(Cube::measure).sum();
        assert_eq!(total, sq.measure());
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(!kids[i].overlaps(&kids[j]));
            }
        }
    }

    #[test]
    fn tree_addressing_round_trips() {
        for dim in 1..=2 {
            let tree = DyadicTree::new(Cube::centered(dim, 2.0), 4);
            for id in 0..tree.node_count() {
                let node = NodeId(id);
                let (d, idx) = tree.locate(node);
                assert_eq!(tree.id(d, idx), node);
                let q = tree.cube(node);
                assert!(tree.root().contains_cube(&q));
                let kids = tree.children(node);
                if d < 4 {
                    assert_eq!(kids.len(), 1 << dim);
                    let total: f64 = kids.iter().map(|&k| tree.cube(k).measure()).sum();
                    assert_eq!(total, q.measure());
                    for k in kids {
                        assert_eq!(tree.parent(k), Some(node));
                        assert!(q.contains_cube(&tree.cube(k)));
                    }
                } else {
                    assert!(kids.is_empty());
                }
            }
        }
    }

    #[test]
    fn aligned_cube_found_in_unshifted_lattice() {
        let lat = ShiftedLatticeSet::new(1);
        let q = Cube::from_corner(&[0.25], 0.25);
        let (j, r) = lat.containing_dyadic(&q).unwrap();
        assert_eq!(j, 0);
        assert_eq!(r, q);
    }

    /// Exhaustive oracle: scan all three lattices over a range of scales and
    /// keep the smallest containing interval.
    #[test]
    fn interval_point_four_to_point_nine() {
        let lat = ShiftedLatticeSet::new(1);
        let q = Cube::from_corner(&[0.4], 0.5);
        let mut best = f64::INFINITY;
        for j in 0..3 {
            for k in -6i32..6 {
                let side = (-(k as f64)).exp2();
                let s = if k.rem_euclid(2) == 0 { lat.shift(j)[0] } else { -lat.shift(j)[0] };
                for m in -64..64 {
                    let lo = (m as f64 + s) * side;
                    if lo <= 0.4 && lo + side >= 0.9 {
                        best = best.min(side);
                    }
                }
            }
        }
        let (_, r) = lat.containing_dyadic(&q).unwrap();
        assert!(r.contains_cube(&q));
        assert!(r.side() <= 3.0);
        assert_eq!(r.side(), best);
    }

    #[test]
    fn three_lattice_cover_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=2 {
            let lat = ShiftedLatticeSet::new(dim);
            assert_eq!(lat.len(), 3usize.pow(dim as u32));
            for _ in 0..1000 {
                let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-50.0..50.0)).collect();
                let side = rng.gen_range(-12.0f64..6.0).exp2();
                let q = Cube::new(&c, side);
                let (_, r) = lat.containing_dyadic(&q).unwrap();
                assert!(r.contains_cube(&q));
                assert!(r.side() <= 6.0 * q.side());
            }
        }
    }

    #[test]
    fn cube_json_shape() {
        let q = Cube::new(&[0.5, -1.0], 2.0);
        let v: serde_json::Value = serde_json::to_value(q).unwrap();
        assert_eq!(v, serde_json::json!({"center": [0.5, -1.0], "side": 2.0, "dim": 2}));
        let back: Cube = serde_json::from_value(v).unwrap();
        assert_eq!(back, q);
        let bad = serde_json::json!({"center": [0.5], "side": 2.0, "dim": 2});
        assert!(serde_json::from_value::<Cube>(bad).is_err());
    }

    fn unit_grid(dim: usize, n: usize) -> Grid {
        Grid::new(Cube::from_corner(&[0.0, 0.0][..dim], 1.0), n)
    }

    #[test]
    fn audit_disjoint_cubes_is_one() {
        let grid = unit_grid(1, 64);
        let mut fam = SparseFamily::from_cubes(
            [Cube::from_corner(&[0.0], 0.25), Cube::from_corner(&[0.5], 0.5)],
            0.5,
        );
        let rep = audit_sparseness(&mut fam, &grid).unwrap();
        assert_eq!(rep.achieved_eta, 1.0);
        assert_eq!(fam.verified_eta(), Some(1.0));
    }

    #[test]
    fn audit_cube_and_child() {
        for dim in 1..=2 {
            let grid = unit_grid(dim, 32);
            let q = Cube::from_corner(&[0.0, 0.0][..dim], 1.0);
            let child = q.children()[0];
            let mut fam = SparseFamily::from_cubes([q, child], 0.5);
            let rep = audit_sparseness(&mut fam, &grid).unwrap();
            let expected = 1.0 - (0.5f64).powi(dim as i32);
            assert!((rep.achieved_eta - expected).abs() < 1e-12, "{dim}: {}", rep.achieved_eta);
            assert_eq!(rep.ratios[1], 1.0);
        }
    }

    #[test]
    fn audit_rejects_unresolved_cubes() {
        let grid = unit_grid(1, 8);
        let mut fam = SparseFamily::from_cubes([Cube::from_corner(&[0.0], 0.1)], 0.5);
        assert!(matches!(
            audit_sparseness(&mut fam, &grid),
            Err(Error::CubeBelowResolution { .. })
        ));
    }

    #[test]
    fn audit_monotone_under_removal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = unit_grid(1, 256);
        for _ in 0..50 {
            let cubes: Vec<Cube> = (0..8)
                .map(|_| {
                    let side = rng.gen_range(0.05..0.5);
                    let lo = rng.gen_range(0.0..1.0 - side);
                    Cube::from_corner(&[lo], side)
                })
                .collect();
            let mut full = SparseFamily::from_cubes(cubes.clone(), 0.1);
            let eta_full = audit_sparseness(&mut full, &grid).unwrap().achieved_eta;
            let drop = rng.gen_range(0..cubes.len());
            let fewer: Vec<Cube> = cubes
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, q)| *q)
                .collect();
            let mut part = SparseFamily::from_cubes(fewer, 0.1);
            let eta_part = audit_sparseness(&mut part, &grid).unwrap().achieved_eta;
            assert!(eta_part >= eta_full);
        }
    }

    #[test]
    fn exact_audit_matches_grid_audit() {
        let q = Cube::from_corner(&[0.0, 0.0], 1.0);
        let mut fam = SparseFamily::from_cubes([q, q.children()[3]], 0.5);
        let r = audit_sparseness_exact(&mut fam);
        assert!((r.achieved_eta - 0.75).abs() < 1e-15);
        let mut fam = SparseFamily::from_cubes(
            [Cube::from_corner(&[0.0], 1.0), Cube::from_corner(&[2.0], 1.0)],
            0.5,
        );
        assert_eq!(audit_sparseness_exact(&mut fam).achieved_eta, 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let cubes: Vec<Cube> = (0..12)
                .map(|_| {
                    let side = rng.gen_range(1..6) as f64 / 8.0;
                    Cube::from_corner(&[rng.gen_range(0..24) as f64 / 8.0, rng.gen_range(0..24) as f64 / 8.0], side)
                })
                .collect();
            let mut a = SparseFamily::from_cubes(cubes.clone(), 0.1);
            let mut b = SparseFamily::from_cubes(cubes, 0.1);
            let grid = Grid::new(Cube::from_corner(&[0.0, 0.0], 4.0), 64);
            let ga = audit_sparseness(&mut a, &grid).unwrap();
            let gb = audit_sparseness_exact(&mut b);
            for (x, y) in ga.ratios.iter().zip(&gb.ratios) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
            assert!(b.is_verified());
        }
    }
}
