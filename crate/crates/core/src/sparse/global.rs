use std::sync::Arc;

use rayon::prelude::*;

use super::family::{median_zero_extended, LocalFamily, Piece};
use super::stopping::{local_sparse, LocalSparse};
use super::EngineConfig;
use crate::czo::{apply, OperatorSpec};
use crate::error::{Error, Result};
use crate::field::GridFunction;
use crate::lattice::{audit_sparseness_exact, AuditReport, Cube, SparseFamily};

/// The central half of the grid box.
pub fn default_start(f: &GridFunction) -> Cube {
    let b = f.grid().bbox();
    Cube::new(b.center(), b.side() / 2.0)
}

/// `S` followed by the rings `3^k S ∖ 3^{k-1} S`, `k = 1..=rings`, each
/// covered by `3^n - 1` cubes of side `3^{k-1} side(S)`. Pairs are
/// `(cube, ring)`.
pub fn ring_partition(start: &Cube, rings: usize) -> Vec<(Cube, usize)> {
    let dim = start.dim();
    let mut out = vec![(*start, 0)];
    for k in 1..=rings {
        let side = 3f64.powi(k as i32 - 1) * start.side();
        let offsets: Vec<[i32; 2]> = if dim == 1 {
            vec![[-1, 0], [1, 0]]
        } else {
            (-1..=1)
                .flat_map(|a| (-1..=1).map(move |b| [a, b]))
                .filter(|e| *e != [0, 0])
                .collect()
        };
        for e in offsets {
            let mut c = [0.0; 2];
            for a in 0..dim {
                c[a] = start.center()[a] + e[a] as f64 * side;
            }
            out.push((Cube::new(&c[..dim], side), k));
        }
    }
    out
}

/// Result of [`assemble_global`].
#[derive(Debug, Clone)]
pub struct GlobalAssembly {
    pub start: Cube,
    pub pieces: Vec<Piece>,
    /// Local families, with their memoized node values.
    pub families: Vec<Arc<LocalFamily>>,
    pub locals: Vec<LocalSparse>,
    /// Dilated stopping cubes of every piece, audited.
    pub family: SparseFamily,
    pub audit: AuditReport,
    /// Bound on `|Tf|` outside the covered region.
    pub tail_bound: f64,
    pub tail_allowance: f64,
    /// Failed partition checks, by piece.
    pub invariant_failures: Vec<String>,
}

impl GlobalAssembly {
    pub fn incomplete(&self) -> bool {
        self.locals.iter().any(|l| l.incomplete)
    }
}

/// Runs the local construction on every partition piece and collects the
/// dilated stopping cubes.
pub fn assemble_global(f: &GridFunction, t: &OperatorSpec, cfg: &EngineConfig, rings: usize) -> Result<GlobalAssembly> {
    cfg.validate()?;
    let grid = *f.grid();
    let dim = grid.dim();
    if t.dim() != dim || cfg.dim != dim {
        return Err(Error::DimensionMismatch(t.dim(), dim));
    }
    if rings < 1 {
        return Err(Error::config("rings", "must be at least 1"));
    }
    let start = cfg.start.unwrap_or_else(|| default_start(f));
    let mut f = f.clone();
    let support = f.compute_support();
    let s_range = grid.snap(&start, 1)?;
    if let Some(s) = support {
        if (0..dim).any(|a| s.lo[a] < s_range.lo[a] || s.hi[a] > s_range.hi[a]) {
            return Err(Error::SupportNotContained);
        }
    }
    let cells = (start.side() / grid.spacing()).round() as usize;
    if !cells.is_power_of_two() {
        return Err(Error::config("start", format!("{cells} cells per axis is not a power of two")));
    }
    // Leaves keep at least four cells per axis.
    let depth = cfg.max_depth.min(cells.trailing_zeros().saturating_sub(2) as usize).max(1);

    let f = Arc::new(f);
    let pieces = ring_partition(&start, rings)
        .into_iter()
        .map(|(cube, ring)| Piece::aligned(cube, &grid, cells, ring))
        .collect::<Result<Vec<_>>>()?;

    let mut invariant_failures = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        let star = p.cube.dilate(cfg.dilation_factor);
        let triple = p.cube.dilate(3.0);
        if p.ring > 0 && !(triple.contains_cube(&start) && star.contains_cube(&triple)) {
            invariant_failures.push(format!("piece {i}: S ⊄ 3Q or 3Q ⊄ Q*"));
        }
        let m = median_zero_extended(&f, &star)?;
        if m != 0.0 {
            invariant_failures.push(format!("piece {i}: median over Q* is {m}, not 0"));
        }
    }

    let built = pieces
        .par_iter()
        .map(|p| {
            let fam = LocalFamily::new(f.clone(), t.clone(), *p, depth, cfg.dilation_factor)?;
            let local = local_sparse(&fam, cfg)?;
            Ok((Arc::new(fam), local))
        })
        .collect::<Result<Vec<_>>>()?;
    let (families, locals): (Vec<_>, Vec<_>) = built.into_iter().unzip();

    let mut family = SparseFamily::new(cfg.target_eta);
    for l in &locals {
        for c in &l.cubes {
            family.push(c.cube.dilate(cfg.dilation_factor));
        }
    }
    let audit = audit_sparseness_exact(&mut family);

    let kernel_tail = t.kernel().is_some();
    let reach = (3f64.powi(rings as i32) - 1.0) * start.side() / 2.0;
    let tail_bound = if kernel_tail {
        f.l1_norm() / reach.powi(dim as i32)
    } else {
        0.0
    };
    let tf_peak = apply(t, &f)?.max_abs();
    let tail_allowance = cfg.tail_tolerance * tf_peak;
    if tail_bound > tail_allowance {
        return Err(Error::RingBudgetExceeded {
            bound: tail_bound,
            tolerance: tail_allowance,
        });
    }
    Ok(GlobalAssembly {
        start,
        pieces,
        families,
        locals,
        family,
        audit,
        tail_bound,
        tail_allowance,
        invariant_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    #[test]
    fn ring_counts() {
        let s1 = Cube::centered(1, 2.0);
        let p = ring_partition(&s1, 3);
        assert_eq!(p.len(), 1 + 2 * 3);
        let s2 = Cube::centered(2, 2.0);
        let p = ring_partition(&s2, 2);
        assert_eq!(p.len(), 1 + 8 * 2);
        // The pieces tile 3^k S.
        let total: f64 = p.iter().map(|(c, _)| c.measure()).sum();
        assert!((total - s2.dilate(9.0).measure()).abs() < 1e-9);
        for (c, k) in &p[1..] {
            assert!(c.dilate(3.0).contains_cube(&s2), "ring {k}");
        }
    }

    #[test]
    fn zero_function_assembles() {
        let grid = Grid::new(Cube::centered(1, 4.0), 512);
        let f = GridFunction::zeros(grid);
        let out = assemble_global(&f, &OperatorSpec::from_label("hilbert", 1).unwrap(), &EngineConfig::new(1), 2).unwrap();
        assert_eq!(out.pieces.len(), 5);
        assert!(out.invariant_failures.is_empty());
        assert_eq!(out.family.len(), 5);
    }

    #[test]
    fn support_outside_start_is_rejected() {
        let grid = Grid::new(Cube::centered(1, 4.0), 512);
        let f = GridFunction::from_fn(grid, |p| if (p[0] - 1.5).abs() < 0.2 { 1.0 } else { 0.0 });
        let r = assemble_global(&f, &OperatorSpec::from_label("hilbert", 1).unwrap(), &EngineConfig::new(1), 2);
        assert!(matches!(r, Err(Error::SupportNotContained)));
    }

    #[test]
    fn short_ring_budget_is_reported() {
        let grid = Grid::new(Cube::centered(1, 4.0), 512);
        let f = GridFunction::from_fn(grid, |p| if p[0].abs() < 0.9 { 1.0 } else { 0.0 });
        let mut cfg = EngineConfig::new(1);
        cfg.tail_tolerance = 1e-6;
        let r = assemble_global(&f, &OperatorSpec::from_label("hilbert", 1).unwrap(), &cfg, 1);
        assert!(matches!(r, Err(Error::RingBudgetExceeded { .. })));
    }
}
