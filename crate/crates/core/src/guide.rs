//! The book under `book/` doubles as this crate's long-form documentation;
//! including the chapters here makes `cargo test --doc` compile and run
//! every code snippet, so the guide can never drift from the API.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/groups-and-cohomology.md")]
pub mod groups_and_cohomology {}

#[doc = include_str!("../../../book/src/extensions.md")]
pub mod extensions {}

#[doc = include_str!("../../../book/src/towers.md")]
pub mod towers {}

#[doc = include_str!("../../../book/src/anomalous-actions.md")]
pub mod anomalous_actions {}

#[doc = include_str!("../../../book/src/decisions.md")]
pub mod decisions {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
