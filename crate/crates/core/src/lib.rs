//! cuspfuse: simulation and analysis toolkit for bistable binary choices.
//!
//! A population of simulated individuals makes a binary choice driven by the
//! occupied minimum of a cusp potential with two control indices: a
//! demographic index `a` and a behavior index `b`. Split across two
//! single-index databases, neither index reveals much on its own; joined on
//! the shared id, they expose both the choice and the individuals whose
//! choice a small change of `b` can flip.
//!
//! Module map:
//! - [`cusp`]: the potential, stability classification, analytic critical
//!   points, Nelder-Mead minimization.
//! - [`sampler`]: reproducible population generation.
//! - [`datastore`]: the two provider tables, split/join, exact CSV round
//!   trips.
//! - [`model`]: polynomial-feature logistic regression and probability
//!   grids.
//! - [`stats`]: metrics (log-loss, AUC, accuracy) and the chi-square
//!   independence test.
//! - [`influence`]: susceptibility classification, target ranking,
//!   interventions, and the fusion-gain report.
//! - [`config`] / [`pipeline`] / [`svg`]: batch front end, artifact
//!   emission, figure rendering.

pub mod config;
pub mod cusp;
pub mod datastore;
pub mod influence;
pub mod model;
pub mod pipeline;
pub mod sampler;
pub mod stats;
pub mod svg;

pub use config::{ConfigError, Overrides, RunConfig};
pub use cusp::{
    fold_boundary_b, CriticalPointSet, CuspError, CuspParams, MinimizerConfig, Stability,
};
pub use datastore::{
    export_csv, import_csv, join, split, DbTable, JoinedTable, StoreError, TableSchema,
};
pub use influence::{
    apply_intervention, fusion_gain, rank_targets, susceptibility, Branch, FlipDirection,
    FusionReport, InfluenceError, InterventionResult, SusceptibilityRecord,
};
pub use model::{
    evaluate, expand_features, fit, probability_grid, FeatureSpec, FittedModel, Inputs, ModelError,
    ProbabilityGrid,
};
pub use pipeline::{run_pipeline, Manifest, ManifestEntry, PipelineError};
pub use sampler::{sample_population, vote_probability, Person, SampleError, SamplerConfig};
pub use stats::{chi_square_independence, IndependenceTest, MetricsReport, StatsError};
pub use svg::{render_svg, Figure, RenderError, ScatterPoint};
