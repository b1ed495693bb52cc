use super::kernel::KernelSpec;
use super::operator::OperatorSpec;
use crate::error::{Error, Result};
use crate::lattice::{Cube, Rect};

/// Largest annulus index summed by [`tail_integral_fq`].
const MAX_ANNULI: u32 = 60;

/// Boxes covering `outer ∖ inner` for concentric boxes.
pub(crate) fn annulus_boxes(inner: &Rect, outer: &Rect) -> Vec<Rect> {
    if inner.dim == 1 {
        return vec![
            Rect::new(&[outer.lo[0]], &[inner.lo[0]]),
            Rect::new(&[inner.hi[0]], &[outer.hi[0]]),
        ];
    }
    vec![
        Rect::new(&[outer.lo[0], outer.lo[1]], &[inner.lo[0], outer.hi[1]]),
        Rect::new(&[inner.hi[0], outer.lo[1]], &[outer.hi[0], outer.hi[1]]),
        Rect::new(&[inner.lo[0], outer.lo[1]], &[inner.hi[0], inner.lo[1]]),
        Rect::new(&[inner.lo[0], inner.hi[1]], &[inner.hi[0], outer.hi[1]]),
    ]
}

/// `∫_A (K(x_Q, y) - K(x, y)) dy` over the annulus `A = outer ∖ inner`.
fn annulus_integral(k: &KernelSpec, xq: &[f64], x: &[f64], inner: &Rect, outer: &Rect) -> Result<f64> {
    if k.has_antiderivative() {
        let at = |p: &[f64]| -> Result<f64> { Ok(k.rect_integral(p, outer)? - k.rect_integral(p, inner)?) };
        return Ok(at(xq)? - at(x)?);
    }
    let mut s = 0.0;
    for b in annulus_boxes(inner, outer) {
        s += k.rect_integral(xq, &b)? - k.rect_integral(x, &b)?;
    }
    Ok(s)
}

/// Bound on the annuli beyond `K`: `4^n Σ_{k>K} ω(2^{-k})`.
pub fn annulus_tail_bound(k: &KernelSpec, after: u32) -> f64 {
    4f64.powi(k.dim() as i32) * k.modulus().dyadic_tail(after)
}

/// Uniform bound `C_ω = 4^n Σ_{k≥1} ω(2^{-k})` on `|F_Q|` over `Q`.
pub fn tail_constant(k: &KernelSpec) -> f64 {
    annulus_tail_bound(k, 0)
}

/// `F_Q(x) = ∫_{ℝ^n ∖ Q*} (K(x_Q, y) - K(x, y)) dy`, accumulated over the
/// annuli `2^k Q* ∖ 2^{k-1} Q*` until the modulus certifies that the rest
/// is below `tol`.
pub fn tail_integral_fq(k: &KernelSpec, q: &Cube, x: &[f64], tol: f64) -> Result<f64> {
    if !k.modulus().is_dini() {
        return Err(Error::TailNotConvergent);
    }
    if q.dim() != k.dim() {
        return Err(Error::DimensionMismatch(q.dim(), k.dim()));
    }
    let xq = q.center();
    let star = q.star();
    let mut sum = 0.0;
    let mut inner = star.to_rect();
    for j in 1..=MAX_ANNULI {
        let outer = star.dilate((j as f64).exp2()).to_rect();
        sum += annulus_integral(k, xq, x, &inner, &outer)?;
        inner = outer;
        if annulus_tail_bound(k, j) < tol {
            return Ok(sum);
        }
    }
    Err(Error::TailNotConvergent)
}

/// Points at the midpoints of `q` cut into `m` pieces per axis.
pub(crate) fn subdivision_midpoints(q: &Cube, m: usize) -> Vec<[f64; 2]> {
    let dim = q.dim();
    let h = q.side() / m as f64;
    let coord = |a: usize, i: usize| q.lo(a) + (i as f64 + 0.5) * h;
    let rows = if dim == 2 { m } else { 1 };
    (0..m)
        .flat_map(|i| (0..rows).map(move |j| (i, j)))
        .map(|(i, j)| if dim == 2 { [coord(0, i), coord(1, j)] } else { [coord(0, i), 0.0] })
        .collect()
}

/// Resolution of [`indicator_oscillation`] per axis.
pub fn oscillation_resolution(dim: usize) -> usize {
    if dim == 1 {
        1024
    } else {
        128
    }
}

/// `max - min` over the cells of `q` of `T(χ_{Q*})`.
pub fn indicator_oscillation(t: &OperatorSpec, q: &Cube) -> Result<f64> {
    let star = q.star().to_rect();
    let dim = q.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in subdivision_midpoints(q, oscillation_resolution(dim)) {
        let p = &p[..dim];
        let mut v = match t.kernel() {
            Some(k) => k.rect_integral(p, &star)?,
            None => 0.0,
        };
        if let Some(b) = t.diagonal() {
            v += b.eval(p);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::czo::kernel::DiniModulus;

    fn closed(x: f64) -> f64 {
        ((5.0 + 2.0 * x) / (5.0 - 2.0 * x)).ln()
    }

    #[test]
    fn hilbert_tail_closed_form() {
        let k = KernelSpec::hilbert();
        let q = Cube::centered(1, 1.0);
        for x in [0.0, 0.25, 0.5, -0.375] {
            let v = tail_integral_fq(&k, &q, &[x], 1e-3).unwrap();
            assert!((v - closed(x)).abs() < 1e-3, "x={x}: {v}");
        }
        assert_eq!(tail_integral_fq(&k, &q, &[0.0], 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_path_agrees() {
        let k = KernelSpec::custom("h", 1, DiniModulus::Lipschitz { lambda: 2.0 }, true, true, |x, y| {
            1.0 / (x[0] - y[0])
        });
        let q = Cube::centered(1, 1.0);
        let v = tail_integral_fq(&k, &q, &[0.25], 1e-4).unwrap();
        assert!((v - closed(0.25)).abs() < 1e-4);
    }

    #[test]
    fn non_dini_modulus_diverges() {
        let k = KernelSpec::hilbert().with_modulus(DiniModulus::LogLipschitz { lambda: 1.0 });
        assert!(matches!(
            tail_integral_fq(&k, &Cube::centered(1, 1.0), &[0.1], 1e-3),
            Err(Error::TailNotConvergent)
        ));
    }

    #[test]
    fn riesz_tail_bounded_uniformly() {
        let k = KernelSpec::riesz(0);
        let c = tail_constant(&k);
        for side in [0.125, 1.0, 8.0] {
            let q = Cube::centered(2, side);
            for p in subdivision_midpoints(&q, 4) {
                let v = tail_integral_fq(&k, &q, &p, 1e-3).unwrap();
                assert!(v.abs() <= c);
            }
        }
    }

    #[test]
    fn indicator_oscillation_examples() {
        let hil = OperatorSpec::from_label("hilbert", 1).unwrap();
        let q = Cube::centered(1, 1.0);
        let v = indicator_oscillation(&hil, &q).unwrap();
        assert!((v - 2.0 * 1.5f64.ln()).abs() < 1e-2, "{v}");
        let id = OperatorSpec::from_label("diag:one", 1).unwrap();
        assert_eq!(indicator_oscillation(&id, &q).unwrap(), 0.0);
        for k in -3..=3 {
            let s = (k as f64).exp2();
            let w = indicator_oscillation(&hil, &Cube::new(&[0.3 * s], s)).unwrap();
            assert!((w / v - 1.0).abs() < 0.05);
        }
    }
}
