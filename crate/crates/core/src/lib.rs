//! Hierarchical aggregation clustering driven by a bi-partial objective:
//! a parametrized blend of within-cluster cohesion and between-cluster
//! separation whose balance parameter doubles as the merge threshold, the
//! dendrogram height, and the stop rule.
//!
//! The crate provides:
//! - classical Lance-Williams linkage ([`linkage`]),
//! - the generic bi-partial merger engine and stop rule ([`engine`]),
//! - concrete objective families — additive, min/max, average-additive,
//!   and facility location ([`objective`]),
//! - the k-means track: classical runs, the mirrored bi-partial k-means
//!   merger, and the two-stage hybrid ([`kmeans`]),
//! - a brute-force partition-enumeration oracle ([`oracle`]),
//! - seeded synthetic data generation ([`synth`]).

pub mod engine;
pub mod error;
pub mod kmeans;
pub mod linkage;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod synth;

pub use engine::{
    envelope_report, merge_threshold, run_bipartial, select_partition, BipartialObjective,
    Deltas, EnvelopeReport, StopDecision, StopRule,
};
pub use error::{Error, Result};
pub use kmeans::{
    bipartial_kmeans_objective, hybrid_two_stage, kmeans_classic, run_bipartial_kmeans,
    BipartialKmeansConfig, CentroidModel, HybridObjective, HybridOutcome, KmeansConfig,
    KmeansMergeState, Seeding,
};
pub use linkage::{lw_update, run_linkage, LWCoefficients, LinkageScheme};
pub use model::{
    compute_distances, DataTable, DissimilarityStore, MergeHistory, MergeRecord, Metric,
    ObjectiveProfile, Orientation, Partition, ProximityTransform, ResolvedTransform,
};
pub use objective::{
    facility_merge_gain, run_facility, AdditiveObjective, AvgAdditiveObjective, FacilityCost,
    FacilityObjective, MinMaxObjective, ObjectiveFamily,
};
pub use oracle::{enumerate_partitions, oracle_best, oracle_switch_point, OracleSpec};
pub use synth::{nested_blobs, NestedBlobConfig};
