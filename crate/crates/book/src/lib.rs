//! The chapters under `book/src`, compiled so their samples run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/fpn.md")]
pub mod fpn {}

#[doc = include_str!("../../../book/src/elementary.md")]
pub mod elementary {}

#[doc = include_str!("../../../book/src/circuits.md")]
pub mod circuits {}

#[doc = include_str!("../../../book/src/synthesis.md")]
pub mod synthesis {}

#[doc = include_str!("../../../book/src/crystals.md")]
pub mod crystals {}

#[doc = include_str!("../../../book/src/egnn.md")]
pub mod egnn {}

#[doc = include_str!("../../../book/src/depth.md")]
pub mod depth {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
