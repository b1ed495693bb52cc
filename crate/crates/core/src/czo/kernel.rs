use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Rect;

/// Modulus of continuity `ω` controlling kernel smoothness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiniModulus {
    /// `ω(t) = Λ t`.
    Lipschitz { lambda: f64 },
    /// `ω(t) = Λ t^δ`, `0 < δ ≤ 1`.
    Holder { lambda: f64, delta: f64 },
    /// `ω(t) = Λ / (1 + ln(1/t))`: continuous but not Dini.
    LogLipschitz { lambda: f64 },
}

impl DiniModulus {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DiniModulus::Lipschitz { lambda } => lambda * t,
            DiniModulus::Holder { lambda, delta } => lambda * t.powf(delta),
            DiniModulus::LogLipschitz { lambda } => {
                if t <= 0.0 {
                    0.0
                } else {
                    lambda / (1.0 + (1.0 / t).ln())
                }
            }
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            DiniModulus::Lipschitz { lambda }
            | DiniModulus::Holder { lambda, .. }
            | DiniModulus::LogLipschitz { lambda } => lambda,
        }
    }

    /// `∫_0^1 ω(t) dt / t`; infinite for the log modulus.
    pub fn dini_integral(&self) -> f64 {
        match *self {
            DiniModulus::Lipschitz { lambda } => lambda,
            DiniModulus::Holder { lambda, delta } => lambda / delta,
            DiniModulus::LogLipschitz { .. } => f64::INFINITY,
        }
    }

    pub fn is_dini(&self) -> bool {
        self.dini_integral().is_finite()
    }

    /// `Σ_{k > K} ω(2^{-k})`.
    pub fn dyadic_tail(&self, k: u32) -> f64 {
        match *self {
            DiniModulus::Lipschitz { lambda } => lambda * (-(k as f64)).exp2(),
            DiniModulus::Holder { lambda, delta } => {
                lambda * (-(delta * (k + 1) as f64)).exp2() / (1.0 - (-delta).exp2())
            }
            DiniModulus::LogLipschitz { .. } => f64::INFINITY,
        }
    }

    /// A modulus dominating `self + other` on `(0, 1]`.
    pub fn plus(&self, other: &DiniModulus) -> DiniModulus {
        use DiniModulus::*;
        let lambda = self.lambda() + other.lambda();
        match (*self, *other) {
            (Lipschitz { .. }, Lipschitz { .. }) => Lipschitz { lambda },
            (LogLipschitz { .. }, _) | (_, LogLipschitz { .. }) => {
                // t^δ (1 + ln(1/t)) ≤ max(1, e^{δ-1}/δ) on (0, 1]
                let d = self.delta().min(other.delta());
                LogLipschitz {
                    lambda: lambda * (1.0f64).max((d - 1.0).exp() / d),
                }
            }
            _ => Holder {
                lambda,
                delta: self.delta().min(other.delta()),
            },
        }
    }

    fn delta(&self) -> f64 {
        match *self {
            DiniModulus::Holder { delta, .. } => delta,
            _ => 1.0,
        }
    }
}

type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum KernelKind {
    Zero,
    /// `1 / (x - y)` in 1D.
    Hilbert,
    /// `(x_j - y_j) / |x - y|^3` in 2D, `j` the axis.
    Riesz(usize),
    Custom(KernelFn),
    Sum(Vec<KernelSpec>),
}

/// An off-diagonal kernel together with its smoothness modulus.
#[derive(Clone)]
pub struct KernelSpec {
    name: String,
    dim: usize,
    kind: KernelKind,
    modulus: DiniModulus,
    convolution: bool,
    odd: bool,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("modulus", &self.modulus)
            .field("convolution", &self.convolution)
            .field("odd", &self.odd)
            .finish()
    }
}

impl PartialEq for KernelSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.dim == other.dim && self.modulus == other.modulus
    }
}

impl KernelSpec {
    pub fn hilbert() -> Self {
        KernelSpec {
            name: "hilbert".into(),
            dim: 1,
            kind: KernelKind::Hilbert,
            modulus: DiniModulus::Lipschitz { lambda: 2.0 },
            convolution: true,
            odd: true,
        }
    }

    /// Riesz kernel along `axis` (0 or 1).
    pub fn riesz(axis: usize) -> Self {
        assert!(axis < 2, "riesz axis {axis}");
        KernelSpec {
            name: format!("riesz{}", axis + 1),
            dim: 2,
            kind: KernelKind::Riesz(axis),
            // |∇K| ≤ 2/r^3 and the segment [x, x'] stays at distance ≥ r/2
            modulus: DiniModulus::Lipschitz { lambda: 16.0 },
            convolution: true,
            odd: true,
        }
    }

    pub fn zero(dim: usize) -> Self {
        KernelSpec {
            name: "zero".into(),
            dim,
            kind: KernelKind::Zero,
            modulus: DiniModulus::Lipschitz { lambda: 0.0 },
            convolution: true,
            odd: true,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        modulus: DiniModulus,
        convolution: bool,
        odd: bool,
        k: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        KernelSpec {
            name: name.into(),
            dim,
            kind: KernelKind::Custom(Arc::new(k)),
            modulus,
            convolution,
            odd,
        }
    }

    /// `sign(x) / (x - y)`: jumps across `x = 0`, so no modulus can hold.
    pub fn broken() -> Self {
        KernelSpec::custom(
            "broken",
            1,
            DiniModulus::Lipschitz { lambda: 2.0 },
            false,
            false,
            |x, y| x[0].signum() / (x[0] - y[0]),
        )
    }

    pub fn sum(parts: Vec<KernelSpec>) -> Result<Self> {
        let dim = parts.first().map_or(1, |k| k.dim);
        if let Some(k) = parts.iter().find(|k| k.dim != dim) {
            return Err(Error::DimensionMismatch(dim, k.dim));
        }
        let modulus = parts
            .iter()
            .map(|k| k.modulus)
            .reduce(|a, b| a.plus(&b))
            .unwrap_or(DiniModulus::Lipschitz { lambda: 0.0 });
        Ok(KernelSpec {
            name: parts.iter().map(|k| k.name.as_str()).collect::<Vec<_>>().join("+"),
            dim,
            convolution: parts.iter().all(|k| k.convolution),
            odd: parts.iter().all(|k| k.odd),
            kind: KernelKind::Sum(parts),
            modulus,
        })
    }

    pub fn with_modulus(mut self, modulus: DiniModulus) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn modulus(&self) -> &DiniModulus {
        &self.modulus
    }

    pub fn is_convolution(&self) -> bool {
        self.convolution
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    /// Whether exact box integrals are available in closed form.
    pub fn has_antiderivative(&self) -> bool {
        match &self.kind {
            KernelKind::Zero | KernelKind::Hilbert | KernelKind::Riesz(_) => true,
            KernelKind::Custom(_) => false,
            KernelKind::Sum(parts) => parts.iter().all(|k| k.has_antiderivative()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.kind {
            KernelKind::Zero => 0.0,
            KernelKind::Hilbert => 1.0 / (x[0] - y[0]),
            KernelKind::Riesz(j) => {
                let u = [x[0] - y[0], x[1] - y[1]];
                let r2 = u[0] * u[0] + u[1] * u[1];
                u[*j] / (r2 * r2.sqrt())
            }
            KernelKind::Custom(k) => k(x, y),
            KernelKind::Sum(parts) => parts.iter().map(|k| k.eval(x, y)).sum(),
        }
    }

    /// `∫_rect K(x, y) dy`, as a principal value when `x` lies inside.
    ///
    /// Closed-form kernels are integrated exactly. Custom kernels use
    /// adaptive Gauss quadrature away from `x`; a custom kernel whose box
    /// contains `x` is only accepted when it is an odd convolution kernel.
    pub fn rect_integral(&self, x: &[f64], rect: &Rect) -> Result<f64> {
        match &self.kind {
            KernelKind::Zero => Ok(0.0),
            KernelKind::Hilbert => {
                let a = x[0] - rect.lo[0];
                let b = x[0] - rect.hi[0];
                Ok((a / b).abs().ln())
            }
            KernelKind::Riesz(_) => {
                if rect.contains_point(x) {
                    Ok(pv_remainder(x, rect)
                        .iter()
                        .map(|r| self.regular_closed_form(x, r))
                        .sum())
                } else {
                    Ok(self.regular_closed_form(x, rect))
                }
            }
            KernelKind::Custom(k) => {
                if rect.contains_point(x) {
                    if !(self.convolution && self.odd) {
                        return Err(Error::SingularCellUnhandled);
                    }
                    Ok(pv_remainder(x, rect)
                        .iter()
                        .map(|r| gauss_rect(&|y| k(x, y), x, r, 0))
                        .sum())
                } else {
                    Ok(gauss_rect(&|y| k(x, y), x, rect, 0))
                }
            }
            KernelKind::Sum(parts) => parts.iter().map(|k| k.rect_integral(x, rect)).sum(),
        }
    }

    /// Four-corner evaluation of the Riesz antiderivative; `x` must not lie
    /// in the open box.
    fn regular_closed_form(&self, x: &[f64], rect: &Rect) -> f64 {
        let KernelKind::Riesz(j) = self.kind else {
            unreachable!()
        };
        // In u = x - y the box is [x - hi, x - lo]; both axes flip, so the
        // orientation is preserved.
        let a = [x[0] - rect.hi[0], x[1] - rect.hi[1]];
        let b = [x[0] - rect.lo[0], x[1] - rect.lo[1]];
        let g = |u1: f64, u2: f64| {
            // G = -ln(u_k + r), k the axis other than j
            let (along, across) = if j == 0 { (u2, u1) } else { (u1, u2) };
            let r = (u1 * u1 + u2 * u2).sqrt();
            if along >= 0.0 {
                -(along + r).ln()
            } else {
                -(2.0 * across.abs().ln() - (r - along).ln())
            }
        };
        g(b[0], b[1]) - g(a[0], b[1]) - g(b[0], a[1]) + g(a[0], a[1])
    }

    /// Cell weight of the discretized operator: `∫_cell K(x, y) dy` where
    /// the cell has center `y_c` and side `h`, evaluated by the closed form
    /// when available and by the midpoint rule otherwise.
    pub(crate) fn cell_weight(&self, x: &[f64], y_c: &[f64], h: f64) -> Result<f64> {
        let dim = self.dim;
        let singular = (0..dim).all(|a| (x[a] - y_c[a]).abs() < 0.5 * h);
        match &self.kind {
            KernelKind::Custom(k) => {
                if singular {
                    if self.convolution && self.odd {
                        Ok(0.0)
                    } else {
                        Err(Error::SingularCellUnhandled)
                    }
                } else {
                    Ok(k(x, y_c) * h.powi(dim as i32))
                }
            }
            KernelKind::Sum(parts) => parts.iter().map(|k| k.cell_weight(x, y_c, h)).sum(),
            _ => {
                let mut lo = [0.0; 2];
                let mut hi = [0.0; 2];
                for a in 0..dim {
                    lo[a] = y_c[a] - 0.5 * h;
                    hi[a] = y_c[a] + 0.5 * h;
                }
                self.rect_integral(x, &Rect::new(&lo[..dim], &hi[..dim]))
            }
        }
    }

    /// Weight for a lattice offset `d` (in cells) of a convolution kernel.
    pub(crate) fn offset_weight(&self, d: [i64; 2], h: f64) -> Result<f64> {
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = d[a] as f64 * h;
        }
        self.cell_weight(&x[..self.dim], &[0.0, 0.0][..self.dim], h)
    }
}

/// Splits `rect ∋ x` into the largest box symmetric about `x` (on which an
/// odd convolution kernel has vanishing principal value) and the regular
/// remainder, returning the remainder boxes.
pub(crate) fn pv_remainder(x: &[f64], rect: &Rect) -> Vec<Rect> {
    let dim = rect.dim;
    let mut m = [0.0; 2];
    for a in 0..dim {
        m[a] = (x[a] - rect.lo[a]).min(rect.hi[a] - x[a]);
    }
    let mut out = Vec::new();
    let push = |out: &mut Vec<Rect>, r: Rect| {
        if (0..dim).all(|a| r.hi[a] > r.lo[a]) {
            out.push(r);
        }
    };
    if dim == 1 {
        push(&mut out, Rect::new(&[rect.lo[0]], &[x[0] - m[0]]));
        push(&mut out, Rect::new(&[x[0] + m[0]], &[rect.hi[0]]));
    } else {
        let (l0, h0) = (x[0] - m[0], x[0] + m[0]);
        push(&mut out, Rect::new(&[rect.lo[0], rect.lo[1]], &[l0, rect.hi[1]]));
        push(&mut out, Rect::new(&[h0, rect.lo[1]], &[rect.hi[0], rect.hi[1]]));
        push(&mut out, Rect::new(&[l0, rect.lo[1]], &[h0, x[1] - m[1]]));
        push(&mut out, Rect::new(&[l0, x[1] + m[1]], &[h0, rect.hi[1]]));
    }
    out
}

const GAUSS_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GAUSS_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

fn distance(x: &[f64], r: &Rect) -> f64 {
    (0..r.dim)
        .map(|a| {
            let d = (r.lo[a] - x[a]).max(x[a] - r.hi[a]).max(0.0);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Tensor Gauss–Legendre quadrature, bisecting until each box is small
/// relative to its distance from the singular point `x`.
pub(crate) fn gauss_rect(f: &dyn Fn(&[f64]) -> f64, x: &[f64], r: &Rect, depth: u32) -> f64 {
    let dim = r.dim;
    let (axis, size) = (0..dim)
        .map(|a| (a, r.hi[a] - r.lo[a]))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if size > 0.5 * distance(x, r) && depth < 40 {
        let mid = 0.5 * (r.lo[axis] + r.hi[axis]);
        let mut left = *r;
        let mut right = *r;
        left.hi[axis] = mid;
        right.lo[axis] = mid;
        return gauss_rect(f, x, &left, depth + 1) + gauss_rect(f, x, &right, depth + 1);
    }
    let half: Vec<f64> = (0..dim).map(|a| 0.5 * (r.hi[a] - r.lo[a])).collect();
    let mid: Vec<f64> = (0..dim).map(|a| 0.5 * (r.hi[a] + r.lo[a])).collect();
    let mut sum = 0.0;
    if dim == 1 {
        for (t, w) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            sum += w * f(&[mid[0] + half[0] * t]);
        }
    } else {
        for (t0, w0) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            for (t1, w1) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
                sum += w0 * w1 * f(&[mid[0] + half[0] * t0, mid[1] + half[1] * t1]);
            }
        }
    }
    sum * half.iter().product::<f64>()
}

/// Outcome of a randomized smoothness audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub kernel: String,
    pub samples: usize,
    #[serde(rename = "maxRatio")]
    pub max_ratio: f64,
    pub violations: usize,
    pub violated: bool,
}

/// Ratio threshold above which a sample counts as a violation.
pub const SMOOTHNESS_TOLERANCE: f64 = 1.0 + 1e-6;

/// Samples admissible triples `(x, x', y)` with `|x - x'| ≤ |x - y| / 2`
/// and compares `|K(x,y) - K(x',y)|` against `ω(|x-x'|/|x-y|) |x-y|^{-n}`.
pub fn kernel_smoothness_check(k: &KernelSpec, samples: usize) -> SmoothnessReport {
    kernel_smoothness_check_seeded(k, samples, 0)
}

pub fn kernel_smoothness_check_seeded(k: &KernelSpec, samples: usize, seed: u64) -> SmoothnessReport {
    assert!(samples >= 1, "at least one sample");
    let dim = k.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| -> [f64; 2] {
        if dim == 1 {
            [if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0]
        } else {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            [t.cos(), t.sin()]
        }
    };
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..samples {
        let mut x = [0.0; 2];
        for c in x.iter_mut().take(dim) {
            *c = rng.gen_range(-1.0..1.0);
        }
        let r = 10f64.powf(rng.gen_range(-2.0..1.0));
        let d = unit(&mut rng);
        let e = unit(&mut rng);
        let s = rng.gen_range(0.0..1.0f64).max(1e-6) * 0.5 * r;
        let mut y = [0.0; 2];
        let mut xp = [0.0; 2];
        for a in 0..dim {
            y[a] = x[a] + r * d[a];
            xp[a] = x[a] + s * e[a];
        }
        let lhs = (k.eval(&x[..dim], &y[..dim]) - k.eval(&xp[..dim], &y[..dim])).abs();
        let rhs = k.modulus().eval(s / r) * r.powi(-(dim as i32));
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > SMOOTHNESS_TOLERANCE {
            violations += 1;
        }
        max_ratio = max_ratio.max(ratio);
    }
    SmoothnessReport {
        kernel: k.name().to_string(),
        samples,
        max_ratio,
        violations,
        violated: violations > 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moduli() {
        let lip = DiniModulus::Lipschitz { lambda: 2.0 };
        assert_eq!(lip.dini_integral(), 2.0);
        assert_eq!(lip.dyadic_tail(3), 0.25);
        let h = DiniModulus::Holder { lambda: 1.0, delta: 0.5 };
        assert_eq!(h.dini_integral(), 2.0);
        let brute: f64 = (4..200).map(|k| h.eval((-(k as f64)).exp2())).sum();
        assert!((h.dyadic_tail(3) - brute).abs() < 1e-12);
        let log = DiniModulus::LogLipschitz { lambda: 1.0 };
        assert!(!log.is_dini());
        assert!(log.eval(0.5) < log.eval(0.9));
    }

    #[test]
    fn hilbert_cell_integrals() {
        let k = KernelSpec::hilbert();
        let r = Rect::new(&[-1.0], &[1.0]);
        assert!((k.rect_integral(&[2.0], &r).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(k.rect_integral(&[0.0], &r).unwrap(), 0.0);
    }

    /// Reference integral by brute-force subdivision for a box away from x.
    fn riesz_reference(j: usize, x: [f64; 2], r: &Rect) -> f64 {
        let n = 400;
        let hx = (r.hi[0] - r.lo[0]) / n as f64;
        let hy = (r.hi[1] - r.lo[1]) / n as f64;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                let y = [r.lo[0] + (a as f64 + 0.5) * hx, r.lo[1] + (b as f64 + 0.5) * hy];
                let u = [x[0] - y[0], x[1] - y[1]];
                let r2 = u[0] * u[0] + u[1] * u[1];
                s += u[j] / (r2 * r2.sqrt());
            }
        }
        s * hx * hy
    }

    #[test]
    fn riesz_closed_form_matches_quadrature() {
        let boxes = [
            Rect::new(&[1.0, -0.5], &[2.0, 0.7]),
            Rect::new(&[-3.0, -2.0], &[-1.5, -0.5]),
            Rect::new(&[-0.4, 0.8], &[0.9, 1.6]),
        ];
        for j in 0..2 {
            let k = KernelSpec::riesz(j);
            for b in &boxes {
                let exact = k.rect_integral(&[0.1, 0.05], b).unwrap();
                let approx = riesz_reference(j, [0.1, 0.05], b);
                assert!((exact - approx).abs() < 1e-5, "{exact} vs {approx}");
            }
        }
    }

    #[test]
    fn riesz_principal_value() {
        let k = KernelSpec::riesz(0);
        // symmetric box: zero
        let sym = Rect::new(&[-1.0, -2.0], &[1.0, 2.0]);
        assert!(k.rect_integral(&[0.0, 0.0], &sym).unwrap().abs() < 1e-14);
        // p.v. over [-1,3]x[-1,1] equals the regular part [1,3]x[-1,1]
        let r = Rect::new(&[-1.0, -1.0], &[3.0, 1.0]);
        let part = Rect::new(&[1.0, -1.0], &[3.0, 1.0]);
        let pv = k.rect_integral(&[0.0, 0.0], &r).unwrap();
        assert!((pv - k.rect_integral(&[0.0, 0.0], &part).unwrap()).abs() < 1e-14);
        // u = x - y: mass to the right pulls the value negative
        assert!(pv < 0.0);
    }

    #[test]
    fn custom_kernels_use_quadrature() {
        let odd = KernelSpec::custom("h", 1, DiniModulus::Lipschitz { lambda: 2.0 }, true, true, |x, y| {
            1.0 / (x[0] - y[0])
        });
        let r = Rect::new(&[-1.0], &[1.0]);
        let v = odd.rect_integral(&[2.0], &r).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-10, "{v}");
        let pv = odd.rect_integral(&[0.5], &r).unwrap();
        assert!((pv - 3f64.ln()).abs() < 1e-10, "{pv}");
        assert!(matches!(
            KernelSpec::broken().rect_integral(&[0.0], &r),
            Err(Error::SingularCellUnhandled)
        ));
    }

    #[test]
    fn smoothness_audit() {
        let hil = kernel_smoothness_check(&KernelSpec::hilbert(), 20_000);
        assert!(!hil.violated && hil.max_ratio <= 1.0, "{hil:?}");
        for j in 0..2 {
            let r = kernel_smoothness_check(&KernelSpec::riesz(j), 20_000);
            assert!(!r.violated, "{r:?}");
        }
        assert_eq!(kernel_smoothness_check(&KernelSpec::zero(2), 100).max_ratio, 0.0);
        assert!(kernel_smoothness_check(&KernelSpec::broken(), 20_000).violated);
    }
}
