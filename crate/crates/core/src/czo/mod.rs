//! Calderón–Zygmund kernels and operators.
//!
//! An [`OperatorSpec`] carries an optional off-diagonal kernel and an
//! optional diagonal multiplier. Kernels with closed-form antiderivatives
//! (Hilbert, Riesz) are discretized with exact per-cell integrals, so
//! operators applied to cell-constant data make no quadrature error.

mod kernel;
mod operator;
mod probe;
mod tail;

pub use kernel::{
    kernel_smoothness_check, kernel_smoothness_check_seeded, DiniModulus, KernelKind, KernelSpec, SmoothnessReport,
    SMOOTHNESS_TOLERANCE,
};
pub use operator::{apply, apply_at, apply_lattice, compose, decompose, Diagonal, OperatorSpec};
pub use probe::{
    probe_verdict, relative_variation, smoothstep, t1_probe, theta, theta_r, ObservationRegion, ProbeConfig,
    ProbePoint, ProbeResult, Verdict,
};
pub use tail::{annulus_tail_bound, indicator_oscillation, oscillation_resolution, tail_constant, tail_integral_fq};
