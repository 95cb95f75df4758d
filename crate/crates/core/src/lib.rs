//! Qualitative composition of long-term IaaS requests.
//!
//! A provider describes time-varying preferences as a TempCP-net: one
//! CP-net and semantic table per interval. Requests are segmented onto the
//! intervals, aggregated, and ranked through exact-match k-d tree indexes.
//! Composers pick the subset of requests with the best total rank, either
//! exactly (brute force, dynamic programming), greedily, by reinforcement
//! learning, or by reusing policies learned on similar request sets.

pub mod compose;
pub mod error;
pub mod harness;
pub mod index;
pub mod library;
pub mod preference;
pub mod request;

pub use error::{Error, ModelError, Result};
pub use index::{IndexedTempCpNet, RankIndex};
pub use preference::{load_tempcp, TempCpNet};
pub use request::{Request, RequestSet, SegmentedRequest};
