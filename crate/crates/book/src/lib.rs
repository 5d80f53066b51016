//! Guide chapters, included so their snippets run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/fockspace.md")]
pub mod fockspace {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/semiclassical.md")]
pub mod semiclassical {}
#[doc = include_str!("../../../book/src/ising.md")]
pub mod ising {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
