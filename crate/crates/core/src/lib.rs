//! Epidemics with heterogeneous susceptibility and infectivity on weighted
//! configuration-model networks.
//!
//! The crate has two halves that are meant to be checked against each other:
//!
//! * a stochastic side ([`netgen`], [`epidemic`]) that builds random weighted
//!   networks and runs generation-based SIR outbreaks or bond percolation on
//!   them, and
//! * an analytic side ([`analytics`]) that describes the early phase of the
//!   outbreak as a multitype branching process over (degree, susceptibility,
//!   infectivity) types: the mean offspring matrix, its Perron root `R0`, and
//!   the extinction-probability fixed point giving the outbreak probability.
//!
//! [`experiment`] ties both together into parameter sweeps with CSV output.

pub mod analytics;
pub mod distributions;
pub mod epidemic;
mod error;
pub mod experiment;
pub mod netgen;
pub mod rng;

pub use analytics::{ExtinctionSolution, NodeType, OffspringMatrix, TypeSpace};
pub use distributions::{
    DegreeDistribution, Moments, NegBinParams, TraitAtom, TraitDistribution, WeightKernel,
    WeightPmf,
};
pub use epidemic::{EpidemicResult, IndexCase, OutbreakStats, SimulationSetup, ThresholdRule};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, Mode, ResultTable};
pub use netgen::{BuildDiagnostics, NodeAttributes, WeightedGraph};
