use std::sync::{Arc, OnceLock};

use crate::czo::{apply_lattice, OperatorSpec};
use crate::error::{Error, Result};
use crate::field::{CellRange, Grid, GridFunction};
use crate::lattice::{star_factor, Cube, DyadicTree, NodeId};
use crate::local_stats::{CubeSample, NodeFunctions};

/// A partition cube sampled on a sub-lattice of the source grid.
///
/// The piece carries `cells` cells per axis of width `stride · h`. The
/// stride is odd, so every piece cell midpoint is a midpoint of the source
/// lattice, namely `origin + stride · index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub cube: Cube,
    /// 0 for the starting cube, `k` for the `k`-th ring.
    pub ring: usize,
    pub cells: usize,
    pub stride: usize,
    pub origin: [i64; 2],
}

impl Piece {
    pub fn aligned(cube: Cube, grid: &Grid, cells: usize, ring: usize) -> Result<Piece> {
        let h = grid.spacing();
        let dim = grid.dim();
        let ratio = cube.side() / (cells as f64 * h);
        let stride = ratio.round() as usize;
        if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio || stride % 2 == 0 {
            return Err(Error::config(
                "piece",
                format!("side {} is not an odd multiple of {cells} cells of width {h}", cube.side()),
            ));
        }
        let mut origin = [0i64; 2];
        for a in 0..dim {
            let lo = (cube.lo(a) - grid.bbox().lo(a)) / h;
            if (lo - lo.round()).abs() > 1e-6 {
                return Err(Error::config("piece", format!("cube face {} is off the lattice", cube.lo(a))));
            }
            origin[a] = lo.round() as i64 + (stride as i64 - 1) / 2;
        }
        Ok(Piece {
            cube,
            ring,
            cells,
            stride,
            origin,
        })
    }

    /// Source-lattice index of a piece cell.
    pub fn lattice_index(&self, idx: [usize; 2]) -> [i64; 2] {
        let s = self.stride as i64;
        [self.origin[0] + s * idx[0] as i64, self.origin[1] + s * idx[1] as i64]
    }

    /// Piece cells inside a node, as source-lattice output geometry
    /// `(origin, shape)`.
    fn node_geometry(&self, tree: &DyadicTree, node: NodeId) -> ([i64; 2], [usize; 2], usize) {
        let (depth, idx) = tree.locate(node);
        let w = self.cells >> depth;
        let dim = tree.dim();
        let o = self.lattice_index([idx[0] * w, if dim == 2 { idx[1] * w } else { 0 }]);
        let origin = if dim == 2 { o } else { [o[0], 0] };
        (origin, [w, if dim == 2 { w } else { 1 }], w)
    }
}

/// Intersection of two lattice ranges.
pub(super) fn intersect(a: &CellRange, b: &CellRange) -> CellRange {
    let mut r = *a;
    for ax in 0..a.dim {
        r.lo[ax] = a.lo[ax].max(b.lo[ax]);
        r.hi[ax] = a.hi[ax].min(b.hi[ax]).max(r.lo[ax]);
    }
    r
}

/// Sample of `f` on `q` with `f` zero off its grid. `support` must cover
/// every nonzero cell; only cells inside it are read.
pub(super) fn sample_with_support(f: &GridFunction, support: Option<&CellRange>, q: &Cube) -> Result<CubeSample> {
    let grid = f.grid();
    let range = grid.snap(q, 1)?;
    let values: Vec<f64> = match support {
        Some(s) => {
            let inside = intersect(&range, s);
            if inside.is_empty() {
                Vec::new()
            } else {
                inside.cells(grid).map(|c| f.value(c)).collect()
            }
        }
        None => Vec::new(),
    };
    let zero_cells = range.count() - values.len();
    Ok(CubeSample { values, zero_cells })
}

fn median_with_support(f: &GridFunction, support: Option<&CellRange>, q: &Cube) -> Result<f64> {
    Ok(sample_with_support(f, support, q)?.median())
}

/// `m_f(q)` with `f` extended by zero outside its grid.
pub fn median_zero_extended(f: &GridFunction, q: &Cube) -> Result<f64> {
    median_with_support(f, f.support().as_ref(), q)
}

/// The assignment `Q ↦ f_Q = T((f - m_f(Q*)) χ_{Q*})` over the dyadic
/// subcubes of one piece, evaluated lazily at the piece cells and memoized.
pub struct LocalFamily {
    f: Arc<GridFunction>,
    op: OperatorSpec,
    piece: Piece,
    tree: DyadicTree,
    dilation: f64,
    support: Option<CellRange>,
    values: Vec<OnceLock<Arc<Vec<f64>>>>,
    medians: Vec<OnceLock<f64>>,
}

impl LocalFamily {
    pub fn new(f: Arc<GridFunction>, op: OperatorSpec, piece: Piece, max_depth: usize, dilation: f64) -> Result<Self> {
        let grid = *f.grid();
        if op.dim() != grid.dim() {
            return Err(Error::DimensionMismatch(op.dim(), grid.dim()));
        }
        if piece.cells >> max_depth == 0 || piece.cells % (1 << max_depth) != 0 {
            return Err(Error::config(
                "max_depth",
                format!("{} cells per axis do not split {max_depth} times", piece.cells),
            ));
        }
        let support = f.support();
        if let Some(s) = &support {
            let n = grid.cells_per_axis() as i64;
            if (0..grid.dim()).any(|a| s.lo[a] == 0 || s.hi[a] == n) {
                return Err(Error::DomainTooSmall("the support of f reaches the edge of its grid".into()));
            }
        }
        let tree = DyadicTree::new(piece.cube, max_depth);
        let nodes = tree.node_count();
        Ok(LocalFamily {
            f,
            op,
            piece,
            tree,
            dilation,
            support,
            values: (0..nodes).map(|_| OnceLock::new()).collect(),
            medians: (0..nodes).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn source(&self) -> &GridFunction {
        &self.f
    }

    pub fn operator(&self) -> &OperatorSpec {
        &self.op
    }

    pub fn piece(&self) -> &Piece {
        &self.piece
    }

    /// `Q*` for a node.
    pub fn dilated(&self, node: NodeId) -> Cube {
        self.tree.cube(node).dilate(self.dilation)
    }

    /// `m_f(Q*)`.
    pub fn median(&self, node: NodeId) -> Result<f64> {
        if let Some(m) = self.medians[node.0].get() {
            return Ok(*m);
        }
        let m = median_with_support(&self.f, self.support.as_ref(), &self.dilated(node))?;
        Ok(*self.medians[node.0].get_or_init(|| m))
    }

    /// Midpoints of the piece cells inside a node, in node layout.
    pub fn node_points(&self, node: NodeId) -> Vec<[f64; 2]> {
        let (origin, shape, _) = self.piece.node_geometry(&self.tree, node);
        let grid = self.f.grid();
        let s = self.piece.stride as i64;
        (0..shape[0] * shape[1])
            .map(|o| grid.lattice_center([origin[0] + s * (o / shape[1]) as i64, origin[1] + s * (o % shape[1]) as i64]))
            .collect()
    }

    fn compute(&self, node: NodeId) -> Result<Vec<f64>> {
        let grid = *self.f.grid();
        let dim = grid.dim();
        let (origin, shape, _) = self.piece.node_geometry(&self.tree, node);
        let s = self.piece.stride as i64;
        let out_len = shape[0] * shape[1];
        let star = self.dilated(node);
        let range = grid.snap(&star, 1)?;
        let m = self.median(node)?;
        let lattice_of = |o: usize| [origin[0] + s * (o / shape[1]) as i64, origin[1] + s * (o % shape[1]) as i64];
        let mut out = vec![0.0; out_len];

        if let Some(k) = self.op.kernel() {
            if let Some(support) = &self.support {
                let input = intersect(&range, support);
                if !input.is_empty() {
                    let g: Vec<f64> = input.cells(&grid).map(|c| self.f.value(c)).collect();
                    if k.is_convolution() {
                        out = apply_lattice(k, &grid, &g, &input, origin, self.piece.stride, shape)?;
                    } else {
                        let h = grid.spacing();
                        let cells: Vec<usize> = input.cells(&grid).collect();
                        for (o, slot) in out.iter_mut().enumerate() {
                            let x = grid.lattice_center(lattice_of(o));
                            let mut acc = 0.0;
                            for (c, v) in cells.iter().zip(&g) {
                                if *v != 0.0 {
                                    acc += v * k.cell_weight(&x[..dim], &grid.cell_center(*c)[..dim], h)?;
                                }
                            }
                            *slot = acc;
                        }
                    }
                }
            }
            if m != 0.0 {
                let rect = grid.range_rect(&range);
                for (o, slot) in out.iter_mut().enumerate() {
                    let x = grid.lattice_center(lattice_of(o));
                    *slot -= m * k.rect_integral(&x[..dim], &rect)?;
                }
            }
        }
        if let Some(b) = self.op.diagonal() {
            for (o, slot) in out.iter_mut().enumerate() {
                let idx = lattice_of(o);
                let x = grid.lattice_center(idx);
                *slot += b.eval(&x[..dim]) * (self.f.lattice_value(idx) - m);
            }
        }
        Ok(out)
    }
}

impl std::fmt::Debug for LocalFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalFamily")
            .field("operator", &self.op.label())
            .field("piece", &self.piece)
            .field("max_depth", &self.tree.max_depth())
            .finish()
    }
}

impl NodeFunctions for LocalFamily {
    fn tree(&self) -> &DyadicTree {
        &self.tree
    }

    fn resolution(&self) -> usize {
        self.piece.cells
    }

    fn node_values(&self, node: NodeId) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.values[node.0].get() {
            return Ok(v.clone());
        }
        let v = Arc::new(self.compute(node)?);
        Ok(self.values[node.0].get_or_init(|| v).clone())
    }
}

/// Local family over `tree`, whose root must be a union of source cells.
pub fn build_local_family(f: Arc<GridFunction>, t: &OperatorSpec, tree: &DyadicTree) -> Result<LocalFamily> {
    let grid = *f.grid();
    let cells = (tree.root().side() / grid.spacing()).round() as usize;
    let piece = Piece::aligned(*tree.root(), &grid, cells, 0)?;
    LocalFamily::new(f, t.clone(), piece, tree.max_depth(), star_factor(grid.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::czo::apply;

    fn indicator_setup(n: usize) -> (Arc<GridFunction>, DyadicTree) {
        let grid = Grid::new(Cube::centered(1, 16.0), n);
        let f = GridFunction::from_fn(grid, |p| if p[0].abs() < 1.0 { 1.0 } else { 0.0 });
        (Arc::new(f), DyadicTree::new(Cube::centered(1, 2.0), 3))
    }

    #[test]
    fn zero_source_gives_zero_family() {
        let grid = Grid::new(Cube::centered(1, 8.0), 256);
        let f = Arc::new(GridFunction::zeros(grid));
        let tree = DyadicTree::new(Cube::centered(1, 2.0), 3);
        let fam = build_local_family(f, &OperatorSpec::from_label("hilbert", 1).unwrap(), &tree).unwrap();
        for node in 0..tree.node_count() {
            assert!(fam.node_values(NodeId(node)).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn constant_on_star_gives_zero() {
        let grid = Grid::new(Cube::centered(1, 32.0), 512);
        let f = Arc::new(GridFunction::from_fn(grid, |p| if p[0].abs() < 10.0 { 3.0 } else { 0.0 }));
        let tree = DyadicTree::new(Cube::centered(1, 2.0), 2);
        let op = OperatorSpec::from_label("sum:hilbert+diag:0.5", 1).unwrap();
        let fam = build_local_family(f, &op, &tree).unwrap();
        assert_eq!(fam.median(NodeId(0)).unwrap(), 3.0);
        let v = fam.node_values(NodeId(0)).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-9), "{:?}", &v[..4]);
    }

    #[test]
    fn root_values_match_tf_when_median_vanishes() {
        let (f, tree) = indicator_setup(2048);
        let op = OperatorSpec::from_label("hilbert", 1).unwrap();
        let fam = build_local_family(f.clone(), &op, &tree).unwrap();
        assert_eq!(fam.median(NodeId(0)).unwrap(), 0.0);
        let tf = apply(&op, &f).unwrap();
        let v = fam.node_values(NodeId(0)).unwrap();
        let grid = f.grid();
        for (x, val) in fam.node_points(NodeId(0)).iter().zip(v.iter()) {
            let c = grid.cell_of(&x[..1]).unwrap();
            assert!((tf.value(c) - val).abs() < 1e-9);
        }
    }

    #[test]
    fn strided_piece_matches_direct() {
        let grid = Grid::new(Cube::centered(1, 16.0), 512);
        let f = Arc::new(GridFunction::from_fn(grid, |p| (1.0 - p[0] * p[0]).max(0.0)));
        let op = OperatorSpec::from_label("sum:hilbert+diag:log", 1).unwrap();
        let piece = Piece::aligned(Cube::new(&[4.0], 6.0), &grid, 64, 1).unwrap();
        assert_eq!(piece.stride, 3);
        let fam = LocalFamily::new(f.clone(), op.clone(), piece, 3, star_factor(1)).unwrap();
        let tree = fam.tree().clone();
        for node in [NodeId(0), NodeId(5), tree.id(3, [7, 0])] {
            let star = fam.dilated(node);
            let m = fam.median(node).unwrap();
            let restricted = GridFunction::from_fn(grid, |p| if star.contains_point(p) { 1.0 } else { 0.0 });
            let g = GridFunction::from_values(
                grid,
                f.values().iter().zip(restricted.values()).map(|(a, c)| (a - m) * c).collect(),
            )
            .unwrap();
            let tg = apply(&op, &g).unwrap();
            let v = fam.node_values(node).unwrap();
            for (x, val) in fam.node_points(node).iter().zip(v.iter()) {
                let c = grid.cell_of(&x[..1]).unwrap();
                assert!((tg.value(c) - val).abs() < 1e-6, "{node:?} {x:?}: {} vs {val}", tg.value(c));
            }
        }
    }

    #[test]
    fn support_on_the_edge_is_rejected() {
        let grid = Grid::new(Cube::centered(1, 4.0), 64);
        let f = Arc::new(GridFunction::constant(grid, 1.0));
        let tree = DyadicTree::new(Cube::centered(1, 2.0), 2);
        let r = build_local_family(f, &OperatorSpec::from_label("hilbert", 1).unwrap(), &tree);
        assert!(matches!(r, Err(Error::DomainTooSmall(_))));
    }
}
