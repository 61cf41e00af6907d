//! Compiles the guide's listings as doctests, since mdbook cannot link
//! workspace crates on its own.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/preprocessing.md")]
pub mod preprocessing {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/integration.md")]
pub mod integration {}
#[doc = include_str!("../../../book/src/fitting.md")]
pub mod fitting {}
#[doc = include_str!("../../../book/src/forecasting.md")]
pub mod forecasting {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
