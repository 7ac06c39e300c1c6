//! Bulk-synchronous parallel sorting with oversampling.
//!
//! The crate provides:
//!
//! - [`bsp`]: a superstep execution engine for `p` logical processors with
//!   barrier-delimited message delivery and `max(L, x + g*h)` cost accounting;
//! - [`primitives`]: BSP collectives (pipelined broadcast, parallel prefix,
//!   bitonic sort of sorted blocks, count exchange);
//! - [`kernels`]: sequential building blocks (stable quicksort and radixsort,
//!   loser-tree multiway merge, sample selection, splitter search);
//! - [`algos`]: the parallel sorts — deterministic regular oversampling
//!   ([`algos::sort_det_bsp`]), randomized oversampling with the same
//!   sort-first structure ([`algos::sort_iran_bsp`]), and a traditional
//!   sample-sort baseline ([`algos::sort_ran_bsp`]) — all handling duplicate
//!   keys transparently via origin-tagged samples;
//! - [`benchgen`]: seedable generators for the seven benchmark input
//!   distributions;
//! - [`costmodel`]: analytic predictions (computation/communication time,
//!   pi, mu, efficiency) with machine presets;
//! - [`harness`]: run orchestration, verification, reports, and tables.
//!
//! Start with the `examples/` directory: each example is a runnable tour of
//! one capability. The `bspsort` binary wraps the harness in subcommands.

pub mod algos;
pub mod benchgen;
pub mod bsp;
pub mod costmodel;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod primitives;
pub mod record;
pub mod rng;

pub use error::{Error, Result};
pub use record::{Record, SampleRecord, TaggedKey};
