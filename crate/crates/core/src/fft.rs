//! Linear convolution of grid values with a translation-invariant stencil.
//!
//! Computes `out[i] = Σ_j f[j] w(i - j)` over an `N^n` grid, where the
//! offsets `i - j` range over `(-N, N)^n`. The stencil is laid out on a
//! circular buffer of length `2N` per axis, which is wide enough that no
//! wrap-around reaches the output window.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub fn convolve(values: &[f64], n: usize, dim: usize, weight: impl Fn([i64; 2]) -> f64) -> Vec<f64> {
    let shape = if dim == 1 { [n, 1] } else { [n, n] };
    correlate(values, shape, shape, [0, 0], dim, weight)
}

/// Rectangular variant: `values` has shape `input`, the output has shape
/// `output`, and `out[o] = Σ_i values[i] w(base + o - i)`.
///
/// Shapes are row-major `[rows, cols]`; in 1D the second entry is 1 and
/// the second offset component is ignored.
pub fn correlate(
    values: &[f64],
    input: [usize; 2],
    output: [usize; 2],
    base: [i64; 2],
    dim: usize,
    weight: impl Fn([i64; 2]) -> f64,
) -> Vec<f64> {
    let len = [input[0] + output[0], if dim == 2 { input[1] + output[1] } else { 1 }];
    let mut planner = FftPlanner::<f64>::new();
    let plans: Vec<_> = (0..dim)
        .map(|a| (planner.plan_fft_forward(len[a]), planner.plan_fft_inverse(len[a])))
        .collect();

    let mut a = vec![Complex64::default(); len[0] * len[1]];
    for i in 0..input[0] {
        for j in 0..input[1] {
            a[i * len[1] + j].re = values[i * input[1] + j];
        }
    }
    let mut w = vec![Complex64::default(); len[0] * len[1]];
    let span = |ax: usize| -(input[ax] as i64 - 1)..output[ax] as i64;
    for di in span(0) {
        if dim == 1 {
            w[wrap(di, len[0])].re = weight([base[0] + di, 0]);
            continue;
        }
        for dj in span(1) {
            w[wrap(di, len[0]) * len[1] + wrap(dj, len[1])].re = weight([base[0] + di, base[1] + dj]);
        }
    }
    let fwd: Vec<_> = plans.iter().map(|p| p.0.as_ref()).collect();
    let inv: Vec<_> = plans.iter().map(|p| p.1.as_ref()).collect();
    transform(&mut a, len, dim, &fwd);
    transform(&mut w, len, dim, &fwd);
    for (x, y) in a.iter_mut().zip(&w) {
        *x *= y;
    }
    transform(&mut a, len, dim, &inv);
    let scale = 1.0 / (len[0] * len[1]) as f64;
    let mut out = Vec::with_capacity(output[0] * output[1]);
    for i in 0..output[0] {
        for j in 0..output[1] {
            out.push(a[i * len[1] + j].re * scale);
        }
    }
    out
}

fn wrap(d: i64, len: usize) -> usize {
    d.rem_euclid(len as i64) as usize
}

/// In-place transform of a row-major `len[0] x len[1]` buffer: rows first,
/// then columns through a scratch column.
fn transform(buf: &mut [Complex64], len: [usize; 2], dim: usize, plans: &[&dyn rustfft::Fft<f64>]) {
    if dim == 1 {
        plans[0].process(buf);
        return;
    }
    plans[1].process(buf);
    let mut col = vec![Complex64::default(); len[0]];
    for j in 0..len[1] {
        for i in 0..len[0] {
            col[i] = buf[i * len[1] + j];
        }
        plans[0].process(&mut col);
        for i in 0..len[0] {
            buf[i * len[1] + j] = col[i];
        }
    }
}
