//! Runs every code snippet in `book/` as a doctest.
//!
//! mdbook cannot test snippets that use external crates, so each chapter is
//! included here as module documentation and `cargo test --doc` does the
//! work. One module per chapter keeps failures attributable to the file they
//! came from. `mdbook build book` renders the same sources; nothing is
//! duplicated.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/partitioning.md")]
pub mod partitioning {}

#[doc = include_str!("../../../book/src/wire-protocol.md")]
pub mod wire_protocol {}

#[doc = include_str!("../../../book/src/collectives.md")]
pub mod collectives {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/cost-models.md")]
pub mod cost_models {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
