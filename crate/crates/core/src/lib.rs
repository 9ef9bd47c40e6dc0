//! Reconstruction of time-varying graph signals from partial samples with a
//! Sobolev-norm smoothness prior on temporal differences.
//!
//! The numerical core is generic over [`Real`] (`f32`/`f64`); the `*64`
//! aliases below are what the experiments and CLI use.

pub mod dense;
pub mod error;
pub mod experiments;
pub mod geo_graph;
pub mod ingest;
pub mod reconstruction;
pub mod sampling;
pub mod scalar;
pub mod sparse;
pub mod spectral;
pub mod tv_signal;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use experiments::{Experiment, ExperimentConfig, Method, ResultTable};
pub use geo_graph::{EdgeSet, GeoGraph, Metric, NodeTable};
pub use ingest::{Dataset, JhuLayout};
pub use reconstruction::{ReconProblem, SolveReport, Variant};
pub use sampling::SamplingPlan;
pub use scalar::Real;
pub use sparse::CsrMatrix;
pub use spectral::{PerturbationReport, ShiftedOperator, SpectralDecomp};
pub use tv_signal::{MseScope, SamplingMask, TemporalDiffOp, TvSignal};

pub type GeoGraph64 = GeoGraph<f64>;
pub type GeoGraph32 = GeoGraph<f32>;
pub type TvSignal64 = TvSignal<f64>;
pub type TvSignal32 = TvSignal<f32>;
pub type SamplingMask64 = SamplingMask<f64>;
pub type SamplingMask32 = SamplingMask<f32>;
pub type NodeTable64 = NodeTable<f64>;
pub type ReconProblem64<'a> = ReconProblem<'a, f64>;
pub type SolveReport64 = SolveReport<f64>;
