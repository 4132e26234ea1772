//! Mining of multi-granularity origin–destination–time (ODT) flow patterns.
//!
//! Trips are aggregated into atomic `(o, d, t)` triples over a region
//! neighborhood graph and a discretized day. The most heavily used atomic
//! triples are *atomic patterns*; generalized triples `(O, D, T)` with
//! connected region sets and contiguous slot ranges are *patterns* when a
//! large enough share of their atomic members are atomic patterns and they
//! are reachable from atomic patterns by one-element generalizations.
//!
//! Modules:
//! - [`model`]: graph, slot axis, triples and the generalization algebra
//! - [`ingest`]: file formats, aggregation, atomic pattern selection
//! - [`psindex`]: prefix-sum upper bounds
//! - [`exact`]: level-wise enumeration with switchable optimizations
//! - [`variants`]: size-bounded, constrained and rank-based mining
//! - [`approx`]: randomized fixed-size miners
//! - [`oracle`]: exhaustive reference enumeration for small instances
//! - [`synth`]: deterministic synthetic instances
//!
//! Thresholds are generic over [`Fraction`]; [`Params`] uses `f64` and
//! [`ExactParams`] exact rationals.

pub mod approx;
pub mod error;
pub mod exact;
pub mod fraction;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod psindex;
pub mod synth;
pub mod variants;

pub use error::{Error, Result};
pub use exact::{CostBreakdown, MiningContext, MiningRun, OptimizationFlags, RunOptions};
pub use fraction::{frac, Exact, Fraction};
pub use ingest::{AtomicPatternSet, TripsTable};
pub use model::{
    Constraints, Dim, Extension, MiningParams, OdtPattern, OdtTriple, RegionGraph, RegionId, RegionSet,
    SizeBounds, Slot, SlotRange, TimeDomain,
};
pub use psindex::PrefixSumIndex;

/// Mining parameters with `f64` thresholds.
pub type Params = MiningParams<f64>;
/// Mining parameters with exact rational thresholds.
pub type ExactParams = MiningParams<Exact>;
/// Mining parameters with `f32` thresholds.
pub type ParamsF32 = MiningParams<f32>;
