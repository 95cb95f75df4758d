//! Rank lookup structures: exact-match k-d trees per interval and decision.

mod indexed;
mod kdtree;

pub use indexed::IndexedTempCpNet;
pub use kdtree::RankIndex;
