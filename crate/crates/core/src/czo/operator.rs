use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::kernel::KernelSpec;
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{CellRange, Grid, GridFunction};

/// Bounded multiplier `b` of the diagonal part `b I`.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagonal {
    Constant(f64),
    /// `ln(2 + |x|)`: unbounded, used as a negative control.
    Log,
    Field(Arc<GridFunction>),
    Sum(Box<Diagonal>, Box<Diagonal>),
}

impl Diagonal {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Diagonal::Constant(c) => *c,
            Diagonal::Log => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                (2.0 + r).ln()
            }
            Diagonal::Field(g) => g.value_at(x),
            Diagonal::Sum(a, b) => a.eval(x) + b.eval(x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Diagonal::Constant(c) if *c == 1.0 => "one".into(),
            Diagonal::Constant(c) if *c == 0.0 => "zero".into(),
            Diagonal::Constant(c) => format!("{c}"),
            Diagonal::Log => "log".into(),
            Diagonal::Field(_) => "field".into(),
            Diagonal::Sum(a, b) => format!("{}+{}", a.name(), b.name()),
        }
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "one" => Ok(Diagonal::Constant(1.0)),
            "zero" => Ok(Diagonal::Constant(0.0)),
            "log" => Ok(Diagonal::Log),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite())
                .map(Diagonal::Constant)
                .ok_or_else(|| Error::UnknownOperator(format!("diag:{other}"))),
        }
    }
}

/// `T = T̃ + b I`: an optional kernel part and an optional diagonal part.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    label: String,
    dim: usize,
    kernel: Option<KernelSpec>,
    diagonal: Option<Diagonal>,
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl OperatorSpec {
    pub fn from_kernel(kernel: KernelSpec) -> Self {
        OperatorSpec {
            label: kernel.name().to_string(),
            dim: kernel.dim(),
            kernel: Some(kernel),
            diagonal: None,
        }
    }

    pub fn diagonal_only(dim: usize, b: Diagonal) -> Self {
        OperatorSpec {
            label: format!("diag:{}", b.name()),
            dim,
            kernel: None,
            diagonal: Some(b),
        }
    }

    pub fn new(label: impl Into<String>, dim: usize, kernel: Option<KernelSpec>, diagonal: Option<Diagonal>) -> Result<Self> {
        if kernel.is_none() && diagonal.is_none() {
            return Err(Error::config("operator", "needs a kernel or a diagonal part"));
        }
        if let Some(k) = &kernel {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch(k.dim(), dim));
            }
        }
        Ok(OperatorSpec {
            label: label.into(),
            dim,
            kernel,
            diagonal,
        })
    }

    /// Looks up an operator by registry label: `hilbert`, `riesz1`,
    /// `riesz2`, `diag:<one|zero|log|number>` or `sum:<a>+<b>`.
    pub fn from_label(label: &str, dim: usize) -> Result<Self> {
        let need = |want: usize| {
            if dim == want {
                Ok(())
            } else {
                Err(Error::DimensionUnsupported {
                    expected: if want == 1 { "1" } else { "2" },
                    got: dim,
                })
            }
        };
        let op = match label {
            "hilbert" => {
                need(1)?;
                OperatorSpec::from_kernel(KernelSpec::hilbert())
            }
            "riesz1" | "riesz2" => {
                need(2)?;
                OperatorSpec::from_kernel(KernelSpec::riesz(if label == "riesz1" { 0 } else { 1 }))
            }
            _ => {
                if let Some(name) = label.strip_prefix("diag:") {
                    OperatorSpec::diagonal_only(dim, Diagonal::parse(name)?)
                } else if let Some(rest) = label.strip_prefix("sum:") {
                    let (a, b) = split_sum(rest).ok_or_else(|| Error::UnknownOperator(label.into()))?;
                    let a = OperatorSpec::from_label(a, dim)?;
                    let b = OperatorSpec::from_label(b, dim)?;
                    a.plus(&b)?
                } else {
                    return Err(Error::UnknownOperator(label.into()));
                }
            }
        };
        Ok(OperatorSpec {
            label: label.to_string(),
            ..op
        })
    }

    /// Operator sum, label `sum:<a>+<b>`.
    pub fn plus(&self, other: &OperatorSpec) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let kernel = match (&self.kernel, &other.kernel) {
            (Some(a), Some(b)) => Some(KernelSpec::sum(vec![a.clone(), b.clone()])?),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        let diagonal = match (&self.diagonal, &other.diagonal) {
            (Some(a), Some(b)) => Some(Diagonal::Sum(Box::new(a.clone()), Box::new(b.clone()))),
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        Ok(OperatorSpec {
            label: format!("sum:{}+{}", self.label, other.label),
            dim: self.dim,
            kernel,
            diagonal,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        self.kernel.as_ref()
    }

    pub fn diagonal(&self) -> Option<&Diagonal> {
        self.diagonal.as_ref()
    }

    /// `Tf` at every cell midpoint of `f`'s grid.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        apply(self, f)
    }
}

/// Splits `a+b` at the first `+` that is not inside a nested `sum:`.
fn split_sum(s: &str) -> Option<(&str, &str)> {
    if let Some(inner) = s.strip_prefix("sum:") {
        // left operand is itself a sum: skip its two operands
        let (_, rest) = split_sum(inner)?;
        let (_, tail) = split_sum(rest).or(Some((rest, "")))?;
        let cut = s.len() - tail.len() - 1;
        return (!tail.is_empty()).then(|| (&s[..cut], tail));
    }
    let i = s.find('+')?;
    Some((&s[..i], &s[i + 1..]))
}

/// `T = T̃ + bI  ↦  (T̃, b)`. `T̃` keeps the kernel (the zero kernel when
/// `T` is purely diagonal).
pub fn decompose(t: &OperatorSpec) -> Result<(OperatorSpec, Diagonal)> {
    let b = t.diagonal.clone().ok_or_else(|| Error::NoDiagonalPart(t.label.clone()))?;
    let kernel = t.kernel.clone().unwrap_or_else(|| KernelSpec::zero(t.dim));
    Ok((OperatorSpec::from_kernel(kernel), b))
}

/// `(T̃, b) ↦ T̃ + bI`.
pub fn compose(t: &OperatorSpec, b: Diagonal) -> OperatorSpec {
    let diagonal = match &t.diagonal {
        Some(d) => Diagonal::Sum(Box::new(d.clone()), Box::new(b)),
        None => b,
    };
    OperatorSpec {
        label: format!("sum:{}+diag:{}", t.label, diagonal.name()),
        dim: t.dim,
        kernel: t.kernel.clone(),
        diagonal: Some(diagonal),
    }
}

/// `Tf` at every cell midpoint: the exact per-cell `y`-integrals of the
/// kernel against the cell values, plus `b(x) f(x)`.
///
/// Convolution kernels go through an FFT with exact cell weights; other
/// kernels are summed directly.
pub fn apply(t: &OperatorSpec, f: &GridFunction) -> Result<GridFunction> {
    let grid = *f.grid();
    if grid.dim() != t.dim {
        return Err(Error::DimensionMismatch(grid.dim(), t.dim));
    }
    let n = grid.cells_per_axis();
    let h = grid.spacing();
    let mut out = match &t.kernel {
        None => vec![0.0; grid.cell_count()],
        Some(k) if k.is_convolution() => {
            let w = offset_table(k, n, n, grid.dim(), h)?;
            fft::convolve(f.values(), n, grid.dim(), |d| w.get(d))
        }
        Some(k) => {
            let centers: Vec<[f64; 2]> = (0..grid.cell_count()).map(|c| grid.cell_center(c)).collect();
            direct_sum(k, f, &centers)?
        }
    };
    if let Some(b) = &t.diagonal {
        for (c, v) in out.iter_mut().enumerate() {
            *v += b.eval(&grid.cell_center(c)[..grid.dim()]) * f.value(c);
        }
    }
    GridFunction::from_values(grid, out)
}

/// `Tf` at arbitrary points, by direct summation over the nonzero cells.
pub fn apply_at(t: &OperatorSpec, f: &GridFunction, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let grid = f.grid();
    if grid.dim() != t.dim {
        return Err(Error::DimensionMismatch(grid.dim(), t.dim));
    }
    let mut out = match &t.kernel {
        None => vec![0.0; points.len()],
        Some(k) => direct_sum(k, f, points)?,
    };
    if let Some(b) = &t.diagonal {
        for (v, p) in out.iter_mut().zip(points) {
            *v += b.eval(&p[..grid.dim()]) * f.value_at(&p[..grid.dim()]);
        }
    }
    Ok(out)
}

fn direct_sum(k: &KernelSpec, f: &GridFunction, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    let grid = f.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    let cells: Vec<(usize, f64)> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(c, v)| (c, *v))
        .collect();
    points
        .par_iter()
        .map(|p| {
            let mut s = 0.0;
            for &(c, v) in &cells {
                s += v * k.cell_weight(&p[..dim], &grid.cell_center(c)[..dim], h)?;
            }
            Ok(s)
        })
        .collect()
}

/// Cell weights of a convolution kernel for offsets in a box, tabulated
/// once.
pub(crate) struct OffsetTable {
    lo: [i64; 2],
    width: [usize; 2],
    values: Vec<f64>,
}

impl OffsetTable {
    pub(crate) fn get(&self, d: [i64; 2]) -> f64 {
        let i = (d[0] - self.lo[0]) as usize;
        let j = (d[1] - self.lo[1]) as usize;
        self.values[i * self.width[1] + j]
    }
}

/// Weights for offsets `d` with `-(m_in - 1) ≤ d_a ≤ m_out - 1`.
pub(crate) fn offset_table(k: &KernelSpec, m_in: usize, m_out: usize, dim: usize, h: f64) -> Result<OffsetTable> {
    let lo = -(m_in as i64 - 1);
    let hi = m_out as i64 - 1;
    offset_table_range(k, [lo, if dim == 2 { lo } else { 0 }], [hi, if dim == 2 { hi } else { 0 }], h)
}

pub(crate) fn offset_table_range(k: &KernelSpec, lo: [i64; 2], hi: [i64; 2], h: f64) -> Result<OffsetTable> {
    let width = [(hi[0] - lo[0] + 1) as usize, (hi[1] - lo[1] + 1) as usize];
    let values = (0..width[0] * width[1])
        .into_par_iter()
        .map(|idx| {
            let d = [lo[0] + (idx / width[1]) as i64, lo[1] + (idx % width[1]) as i64];
            k.offset_weight(d, h)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OffsetTable { lo, width, values })
}

/// `Σ_j g_j ∫_{cell j} K(x_o, y) dy` for a convolution kernel, where `g`
/// lives on the lattice cells `input` of `grid` and the output points are
/// the lattice midpoints `origin + stride·o`, `o` ranging over `shape`.
///
/// Picks between direct summation and one FFT correlation per residue
/// class of the input modulo `stride`, whichever is cheaper.
pub fn apply_lattice(
    k: &KernelSpec,
    grid: &Grid,
    g: &[f64],
    input: &CellRange,
    origin: [i64; 2],
    stride: usize,
    shape: [usize; 2],
) -> Result<Vec<f64>> {
    lattice_sum(k, grid, g, input, origin, stride, shape, None)
}

/// `prefer_fft` overrides the cost model.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lattice_sum(
    k: &KernelSpec,
    grid: &Grid,
    g: &[f64],
    input: &CellRange,
    origin: [i64; 2],
    stride: usize,
    shape: [usize; 2],
    prefer_fft: Option<bool>,
) -> Result<Vec<f64>> {
    assert!(k.is_convolution(), "lattice evaluation needs a convolution kernel");
    let dim = grid.dim();
    let h = grid.spacing();
    let in_shape = [
        (input.hi[0] - input.lo[0]).max(0) as usize,
        if dim == 2 { (input.hi[1] - input.lo[1]).max(0) as usize } else { 1 },
    ];
    let out_len = shape[0] * shape[1];
    let nnz = g.iter().filter(|v| **v != 0.0).count();
    if nnz == 0 || out_len == 0 {
        return Ok(vec![0.0; out_len]);
    }
    let s = stride as i64;
    // offset of output o from input i: origin + s·o - (input.lo + i)
    let base = [origin[0] - input.lo[0], if dim == 2 { origin[1] - input.lo[1] } else { 0 }];

    let axes = dim as u32;
    let per_class = |a: usize| shape[a] + in_shape[a].div_ceil(stride);
    let fft_cost: f64 = {
        let len: f64 = (0..dim).map(|a| per_class(a) as f64).product();
        (stride.pow(axes) as f64) * len * (len.log2() + 1.0) * 4.0
    };
    let direct_cost = (out_len * nnz) as f64;

    if !prefer_fft.unwrap_or(fft_cost < direct_cost) {
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        let mut nz = Vec::with_capacity(nnz);
        for (idx, &v) in g.iter().enumerate() {
            if v != 0.0 {
                let i = [(idx / in_shape[1]) as i64, (idx % in_shape[1]) as i64];
                nz.push((i, v));
            }
        }
        for a in 0..2 {
            let outs = [0i64, (shape[a] as i64 - 1) * s];
            let ins = nz.iter().map(|(i, _)| i[a]);
            let (imin, imax) = ins.fold((i64::MAX, i64::MIN), |(l, u), x| (l.min(x), u.max(x)));
            lo[a] = base[a] + outs[0] - imax;
            hi[a] = base[a] + outs[1] - imin;
        }
        if dim == 1 {
            lo[1] = 0;
            hi[1] = 0;
        }
        // Tabulating the full offset window only pays off when it is small.
        let window = ((hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1)) as usize;
        let table = if window <= 4 * out_len.max(nnz) {
            Some(offset_table_range(k, lo, hi, h)?)
        } else {
            None
        };
        return (0..out_len)
            .into_par_iter()
            .map(|o| {
                let oi = [(o / shape[1]) as i64 * s, (o % shape[1]) as i64 * s];
                let mut acc = 0.0;
                for (i, v) in &nz {
                    let d = [base[0] + oi[0] - i[0], base[1] + oi[1] - i[1]];
                    let w = match &table {
                        Some(t) => t.get(d),
                        None => k.offset_weight(d, h)?,
                    };
                    acc += v * w;
                }
                Ok(acc)
            })
            .collect();
    }

    let mut out = vec![0.0; out_len];
    let r1_range = if dim == 2 { stride } else { 1 };
    for r0 in 0..stride.min(in_shape[0]) {
        for r1 in 0..r1_range.min(in_shape[1]) {
            let q_shape = [
                (in_shape[0] - r0).div_ceil(stride),
                if dim == 2 { (in_shape[1] - r1).div_ceil(stride) } else { 1 },
            ];
            let mut sub = Vec::with_capacity(q_shape[0] * q_shape[1]);
            for q0 in 0..q_shape[0] {
                for q1 in 0..q_shape[1] {
                    let i0 = r0 + q0 * stride;
                    let i1 = r1 + q1 * stride;
                    sub.push(g[i0 * in_shape[1] + i1]);
                }
            }
            if sub.iter().all(|v| *v == 0.0) {
                continue;
            }
            // offset = base - r + s·(o - q)
            let shift = [base[0] - r0 as i64, base[1] - r1 as i64];
            let lo = [shift[0] - s * (q_shape[0] as i64 - 1), shift[1] - s * (q_shape[1] as i64 - 1)];
            let table = (0..=(shape[0] + q_shape[0] - 2))
                .flat_map(|a| (0..=(shape[1] + q_shape[1] - 2)).map(move |b| (a, b)))
                .map(|(a, b)| {
                    let d = [lo[0] + s * a as i64, if dim == 2 { lo[1] + s * b as i64 } else { 0 }];
                    k.offset_weight(d, h)
                })
                .collect::<Result<Vec<f64>>>()?;
            let tw = shape[1] + q_shape[1] - 1;
            let part = fft::correlate(&sub, q_shape, shape, [0, 0], dim, |d| {
                let a = (d[0] + q_shape[0] as i64 - 1) as usize;
                let b = if dim == 2 { (d[1] + q_shape[1] as i64 - 1) as usize } else { 0 };
                table[a * tw + b]
            });
            for (o, v) in out.iter_mut().zip(part) {
                *o += v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Cube;

    fn line(n: usize) -> Grid {
        Grid::new(Cube::centered(1, 4.0), n)
    }

    #[test]
    fn identity_diagonal() {
        let g = line(64);
        let f = GridFunction::from_fn(g, |p| (3.0 * p[0]).sin());
        let id = OperatorSpec::from_label("diag:one", 1).unwrap();
        assert_eq!(apply(&id, &f).unwrap(), f);
    }

    #[test]
    fn hilbert_of_indicator() {
        let g = line(4096);
        let f = GridFunction::from_fn(g, |p| if p[0].abs() < 1.0 { 1.0 } else { 0.0 });
        let hil = OperatorSpec::from_label("hilbert", 1).unwrap();
        let tf = apply(&hil, &f).unwrap();
        let at = apply_at(&hil, &f, &[[2.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(odd_check(&tf) < 1e-9);
        assert!((at[0] - 3f64.ln()).abs() < 1e-3);
        // with an odd cell count, 0 is a cell midpoint
        let odd = GridFunction::from_fn(line(4095), |p| if p[0].abs() < 1.0 { 1.0 } else { 0.0 });
        let at0 = apply(&hil, &odd).unwrap();
        assert!(at0.value(2047).abs() < 1e-12);
        assert!(at[1].is_nan() || at[1].is_infinite() || at[1].abs() < 1e-12);
        let mut worst: f64 = 0.0;
        for c in 0..g.cell_count() {
            let x = g.cell_center(c)[0];
            if x.abs() > 1.0 {
                worst = worst.max((tf.value(c) - ((x + 1.0) / (x - 1.0)).abs().ln()).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
    }

    /// Largest |Tf(x) + Tf(-x)| over mirrored cells.
    fn odd_check(tf: &GridFunction) -> f64 {
        let v = tf.values();
        let n = v.len();
        (0..n).map(|i| (v[i] + v[n - 1 - i]).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn registry() {
        assert!(OperatorSpec::from_label("riesz1", 1).is_err());
        assert!(matches!(OperatorSpec::from_label("nope", 1), Err(Error::UnknownOperator(_))));
        let s = OperatorSpec::from_label("sum:hilbert+diag:0.7", 1).unwrap();
        assert_eq!(s.diagonal(), Some(&Diagonal::Constant(0.7)));
        assert_eq!(s.kernel().unwrap().name(), "hilbert");
        let nested = OperatorSpec::from_label("sum:sum:riesz1+riesz2+diag:log", 2).unwrap();
        assert_eq!(nested.kernel().unwrap().name(), "riesz1+riesz2");
        assert_eq!(nested.diagonal(), Some(&Diagonal::Log));
    }

    #[test]
    fn compose_decompose_round_trip() {
        let hil = OperatorSpec::from_label("hilbert", 1).unwrap();
        assert!(matches!(decompose(&hil), Err(Error::NoDiagonalPart(_))));
        let t = compose(&hil, Diagonal::Constant(1.0));
        let (k, b) = decompose(&t).unwrap();
        assert_eq!(k.kernel(), hil.kernel());
        assert_eq!(b, Diagonal::Constant(1.0));

        let g = line(256);
        let f = GridFunction::from_fn(g, |p| (-(p[0] * p[0]) * 4.0).exp() * (p[0].abs() < 1.5) as i32 as f64);
        let hf = apply(&hil, &f).unwrap();
        let tf = apply(&t, &f).unwrap();
        for c in 0..g.cell_count() {
            assert_eq!(tf.value(c), hf.value(c) + f.value(c));
        }
        let t0 = compose(&hil, Diagonal::Constant(0.0));
        assert_eq!(apply(&t0, &f).unwrap(), hf);
    }

    #[test]
    fn broken_kernel_has_no_singular_rule() {
        let g = line(32);
        let f = GridFunction::constant(g, 1.0);
        let t = OperatorSpec::from_kernel(KernelSpec::broken());
        assert!(matches!(apply(&t, &f), Err(Error::SingularCellUnhandled)));
    }

    #[test]
    fn riesz_fft_matches_direct() {
        let g = Grid::new(Cube::centered(2, 2.0), 24);
        let f = GridFunction::from_fn(g, |p| (1.0 - p[0] * p[0] - p[1] * p[1]).max(0.0) + 0.3 * p[0]);
        for label in ["riesz1", "riesz2"] {
            let t = OperatorSpec::from_label(label, 2).unwrap();
            let fast = apply(&t, &f).unwrap();
            let pts: Vec<[f64; 2]> = (0..g.cell_count()).map(|c| g.cell_center(c)).collect();
            let slow = apply_at(&t, &f, &pts).unwrap();
            for (a, b) in fast.values().iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn lattice_evaluation_matches_direct() {
        for (dim, stride) in [(1, 1), (1, 3), (1, 9), (2, 1), (2, 3)] {
            let n = if dim == 1 { 64 } else { 16 };
            let grid = Grid::new(Cube::centered(dim, 4.0), n);
            let t = OperatorSpec::from_label(if dim == 1 { "hilbert" } else { "riesz2" }, dim).unwrap();
            let f = GridFunction::from_fn(grid, |p| 1.0 + p[0] - 0.2 * p.iter().map(|v| v * v).sum::<f64>());
            let full = grid.full_range();
            let origin = if dim == 1 { [-20, 0] } else { [-5, 7] };
            let shape = if dim == 1 { [40, 1] } else { [6, 5] };
            let k = t.kernel().unwrap();
            let got = apply_lattice(k, &grid, f.values(), &full, origin, stride, shape).unwrap();
            let via_fft = lattice_sum(k, &grid, f.values(), &full, origin, stride, shape, Some(true)).unwrap();
            let direct = lattice_sum(k, &grid, f.values(), &full, origin, stride, shape, Some(false)).unwrap();
            for ((a, b), c) in got.iter().zip(&via_fft).zip(&direct) {
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()) && (a - c).abs() < 1e-10 * (1.0 + a.abs()));
            }
            let pts: Vec<[f64; 2]> = (0..shape[0] * shape[1])
                .map(|o| {
                    let i = [origin[0] + (stride * (o / shape[1])) as i64, origin[1] + (stride * (o % shape[1])) as i64];
                    grid.lattice_center(i)
                })
                .collect();
            let want = apply_at(&t, &f, &pts).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "dim {dim} stride {stride}: {a} vs {b}");
            }
        }
    }
}
