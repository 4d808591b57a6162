//! Bases of association rules of high confidence.
//!
//! The sector of implications `X -> b` of a binary table is mined by
//! dualizing a hypergraph built from the rows lacking `b`. Mining the same
//! sector on tables with a few rows removed finds rules that fail only on
//! those rows; measured on the full table they are rules of high confidence.
//! The union is aggregated against the single-attribute implications and used
//! to rank attributes by relevance to `b`.

pub mod basis;
pub mod bits;
pub mod cli;
pub mod dualizer;
pub mod error;
pub mod miner;
pub mod oracle;
pub mod parallel;
pub mod perturb;
pub mod relevance;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
pub use miner::{mine_sector, RuleSet, SectorRequest};
pub use table::{AttrSet, BinaryTable, Origin, RowId, Rule};
