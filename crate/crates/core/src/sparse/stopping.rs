use std::collections::VecDeque;

use serde::Serialize;

use super::family::LocalFamily;
use super::EngineConfig;
use crate::error::Result;
use crate::lattice::{audit_sparseness_exact, Cube, NodeId, SparseFamily};
use crate::local_stats::{node_width, sharp_maximal_field, CubeSample, NodeFunctions};

/// One cube of the stopping family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StoppingCube {
    #[serde(skip)]
    pub node: NodeId,
    pub cube: Cube,
    pub depth: usize,
    /// Index of the selecting cube in [`LocalSparse::cubes`].
    pub parent: Option<usize>,
    /// `(f_P χ_P)^*(λ|P|)`.
    pub alpha_f: f64,
    /// `(m_P^# f)^*(λ|P|)`.
    pub alpha_sharp: f64,
    /// Cells of the exceptional set.
    pub exceptional: usize,
    /// Cells of the selected children.
    pub selected: usize,
    pub cells: usize,
}

impl StoppingCube {
    pub fn alpha(&self) -> f64 {
        self.alpha_f + self.alpha_sharp
    }
}

/// Output of [`local_sparse`] on one piece.
#[derive(Debug, Clone)]
pub struct LocalSparse {
    pub root: Cube,
    pub cubes: Vec<StoppingCube>,
    /// Some leaf cube kept a nonempty exceptional set.
    pub incomplete: bool,
    /// Cubes whose selected children exceed `2^{-n-1}|P|`.
    pub selection_violations: Vec<usize>,
    /// Audited sparseness of the cubes themselves.
    pub achieved_eta: f64,
    /// `max |f_{Q0}| / Σ α_P χ_P` over root cells where the sum is positive.
    pub pointwise_constant: f64,
    /// Root cells with a zero sum but `|f_{Q0}| > 1e-8 max |f_{Q0}|`.
    pub pointwise_violations: usize,
}

impl LocalSparse {
    pub fn family(&self) -> SparseFamily {
        SparseFamily::from_cubes(self.cubes.iter().map(|c| c.cube), 0.5)
    }
}

/// Inclusive prefix counts of a mask in node layout.
struct MaskCounts {
    w: usize,
    dim: usize,
    table: Vec<u32>,
}

impl MaskCounts {
    fn new(mask: &[bool], w: usize, dim: usize) -> Self {
        let table = if dim == 1 {
            let mut t = vec![0u32; w + 1];
            for i in 0..w {
                t[i + 1] = t[i] + mask[i] as u32;
            }
            t
        } else {
            let s = w + 1;
            let mut t = vec![0u32; s * s];
            for i in 0..w {
                let mut row = 0u32;
                for j in 0..w {
                    row += mask[i * w + j] as u32;
                    t[(i + 1) * s + j + 1] = t[i * s + j + 1] + row;
                }
            }
            t
        };
        MaskCounts { w, dim, table }
    }

    /// Count over `[lo, lo + len)` per axis.
    fn count(&self, lo: [usize; 2], len: usize) -> usize {
        if self.dim == 1 {
            (self.table[lo[0] + len] - self.table[lo[0]]) as usize
        } else {
            let s = self.w + 1;
            let t = |i: usize, j: usize| self.table[i * s + j] as i64;
            let (i0, j0, i1, j1) = (lo[0], lo[1], lo[0] + len, lo[1] + len);
            (t(i1, j1) - t(i0, j1) - t(i1, j0) + t(i0, j0)) as usize
        }
    }
}

/// Stopping-time construction on the tree of `family`.
///
/// At each cube `P` the level `α_P` is the sum of the rearrangements of
/// `f_P` and of `m_P^# f` at `λ|P|`. Cells where either exceeds
/// `C₁ α_P` form the exceptional set, and the maximal dyadic `R ⊊ P` in
/// which it takes more than the selection fraction are selected and
/// processed in turn.
pub fn local_sparse(family: &LocalFamily, cfg: &EngineConfig) -> Result<LocalSparse> {
    let tree = family.tree();
    let dim = tree.dim();
    let res = family.resolution();
    let mut cubes: Vec<StoppingCube> = Vec::new();
    let mut queue: VecDeque<(NodeId, Option<usize>)> = VecDeque::from([(NodeId(0), None)]);
    let mut incomplete = false;
    let mut selection_violations = Vec::new();
    while let Some((node, parent)) = queue.pop_front() {
        let (depth, idx) = tree.locate(node);
        let w = node_width(res, depth);
        let f_p = family.node_values(node)?;
        let sharp = if depth < tree.max_depth() {
            sharp_maximal_field(family, node)?
        } else {
            vec![0.0; f_p.len()]
        };
        let alpha_f = CubeSample::from_values(f_p.to_vec()).rearrangement(cfg.lambda)?;
        let alpha_sharp = CubeSample::from_values(sharp.clone()).rearrangement(cfg.lambda)?;
        let level = cfg.stopping_slack * (alpha_f + alpha_sharp);
        let mask: Vec<bool> = f_p.iter().zip(&sharp).map(|(v, s)| v.abs() > level || *s > level).collect();
        let exceptional = mask.iter().filter(|b| **b).count();
        let index = cubes.len();
        let mut selected_cells = 0usize;
        if exceptional > 0 && depth == tree.max_depth() {
            incomplete = true;
        }
        if exceptional > 0 && depth < tree.max_depth() {
            let counts = MaskCounts::new(&mask, w, dim);
            let mut stack = tree.children(node);
            while let Some(r) = stack.pop() {
                let (rd, ridx) = tree.locate(r);
                let rw = node_width(res, rd);
                let scale = 1usize << (rd - depth);
                let lo = [
                    (ridx[0] - idx[0] * scale) * rw,
                    if dim == 2 { (ridx[1] - idx[1] * scale) * rw } else { 0 },
                ];
                let hit = counts.count(lo, rw);
                if hit == 0 {
                    continue;
                }
                let cells = rw.pow(dim as u32);
                if hit as f64 > cfg.selection_fraction * cells as f64 {
                    selected_cells += cells;
                    queue.push_back((r, Some(index)));
                } else {
                    stack.extend(tree.children(r));
                }
            }
        }
        let cells = w.pow(dim as u32);
        if selected_cells << (dim + 1) > cells {
            selection_violations.push(index);
        }
        cubes.push(StoppingCube {
            node,
            cube: tree.cube(node),
            depth,
            parent,
            alpha_f,
            alpha_sharp,
            exceptional,
            selected: selected_cells,
            cells,
        });
    }

    let mut fam = SparseFamily::from_cubes(cubes.iter().map(|c| c.cube), 0.5);
    let achieved_eta = audit_sparseness_exact(&mut fam).achieved_eta;

    // Pointwise comparison on the root cells.
    let root_vals = family.node_values(NodeId(0))?;
    let mut bound = vec![0.0; root_vals.len()];
    for c in &cubes {
        let (d, ci) = tree.locate(c.node);
        let cw = node_width(res, d);
        let rows = if dim == 2 { cw } else { 1 };
        for a in 0..cw {
            for b in 0..rows {
                let cell = if dim == 1 { ci[0] * cw + a } else { (ci[0] * cw + a) * res + ci[1] * cw + b };
                bound[cell] += c.alpha();
            }
        }
    }
    let peak = root_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pointwise_constant = 0.0f64;
    let mut pointwise_violations = 0;
    for (v, b) in root_vals.iter().zip(&bound) {
        if *b > 0.0 {
            pointwise_constant = pointwise_constant.max(v.abs() / b);
        } else if v.abs() > 1e-8 * peak {
            pointwise_violations += 1;
        }
    }
    Ok(LocalSparse {
        root: *tree.root(),
        cubes,
        incomplete,
        selection_violations,
        achieved_eta,
        pointwise_constant,
        pointwise_violations,
    })
}
