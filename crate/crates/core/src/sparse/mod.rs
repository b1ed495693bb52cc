//! Sparse domination engine: the local family `f_Q`, the stopping-time
//! selection, the ring partition of space and the pointwise bound reports.

mod family;
mod global;
mod report;
mod stopping;

use serde::{Deserialize, Serialize};

pub use family::{build_local_family, median_zero_extended, LocalFamily, Piece};
pub use global::{assemble_global, default_start, ring_partition, GlobalAssembly};
pub use report::{
    bound_field, cube_weights, domination_report, eval_average_bound, eval_oscillation_bound, sharp_domination,
    BoundKind, DominationReport, SharpDomination,
};
pub use stopping::{local_sparse, LocalSparse, StoppingCube};

use crate::error::{Error, Result};
use crate::lattice::{star_factor, Cube};

/// Parameters of the engine. `Default` is not provided because every
/// default depends on the dimension; use [`EngineConfig::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EngineConfig {
    pub dim: usize,
    pub lambda: f64,
    pub dilation_factor: f64,
    pub target_eta: f64,
    pub max_depth: usize,
    pub selection_fraction: f64,
    pub stopping_slack: f64,
    pub rings: usize,
    /// Allowed `|Tf|` outside the covered region, relative to `max |Tf|`.
    pub tail_tolerance: f64,
    /// Starting cube `S`; defaults to the central half of the grid box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Cube>,
}

impl EngineConfig {
    pub fn new(dim: usize) -> Self {
        let dilation = star_factor(dim);
        EngineConfig {
            dim,
            lambda: (-(dim as f64) - 3.0).exp2(),
            dilation_factor: dilation,
            target_eta: 0.5 / dilation.powi(dim as i32),
            max_depth: if dim == 1 { 8 } else { 6 },
            selection_fraction: 0.5,
            stopping_slack: 1.0,
            rings: 6,
            tail_tolerance: 0.01,
            start: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::DimensionUnsupported {
                expected: "1 or 2",
                got: self.dim,
            });
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::LambdaOutOfRange(self.lambda));
        }
        if self.max_depth < 1 {
            return Err(Error::config("max_depth", "must be at least 1"));
        }
        if self.stopping_slack < 1.0 {
            return Err(Error::config("stopping_slack", "must be at least 1"));
        }
        if !(self.selection_fraction > 0.0 && self.selection_fraction < 1.0) {
            return Err(Error::config("selection_fraction", "must lie in (0, 1)"));
        }
        if !(self.target_eta > 0.0 && self.target_eta <= 1.0) {
            return Err(Error::config("target_eta", "must lie in (0, 1]"));
        }
        if self.rings < 1 {
            return Err(Error::config("rings", "must be at least 1"));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::config("tail_tolerance", "must be positive"));
        }
        Ok(())
    }
}
