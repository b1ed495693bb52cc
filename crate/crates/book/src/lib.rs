//! Guide chapters, compiled so their code listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/lattice.md")]
pub mod lattice {}

#[doc = include_str!("../../../book/src/local_stats.md")]
pub mod local_stats {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/sparse.md")]
pub mod sparse {}

#[doc = include_str!("../../../book/src/sobolev.md")]
pub mod sobolev {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
