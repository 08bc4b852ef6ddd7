//! Duplicate graph clustering and keeper selection.
//!
//! Candidate pairs from [`crate::lsh`] are edges of an undirected graph; each
//! connected component is a duplicate cluster. The cluster keeps the member
//! from the best-ranked source and every other member is removed.

mod cluster;
mod engine;
mod histogram;
mod keeper;
mod removal;
mod union_find;

pub use cluster::{
    connected_components, read_clusters, write_clusters, ComponentBuilder, DuplicateCluster,
};
pub use engine::{deduplicate, DedupOutcome, DedupParams, DedupStats};
pub use histogram::{
    cluster_size_histogram, clustered_documents, histogram_svg, histogram_tsv, write_histogram_tsv,
    SizeHistogram,
};
pub use keeper::{select_keeper, KeeperPolicy, SourceLookup, ZYDA2_RANKING};
pub use removal::{apply_dedup, read_removal_log, write_removal_log, DedupPlan, RemovalRecord};
pub use union_find::UnionFind;
