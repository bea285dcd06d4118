//! Shared fixtures for the criterion benches.

use hetnet::analytics::{build_offspring_matrix, example4_traits};
use hetnet::distributions::{make_truncated_poisson, make_two_point_trait, NegBinParams};
use hetnet::netgen::{build_network, sample_node_attributes};
use hetnet::{DegreeDistribution, NodeAttributes, OffspringMatrix, TraitDistribution, WeightKernel, WeightedGraph};

/// Truncated Poisson degrees with negative binomial weights and correlated traits.
pub fn heterogeneous_scenario() -> (DegreeDistribution, WeightKernel, TraitDistribution) {
    let degrees = make_truncated_poisson(4.0, 15).unwrap();
    let weights = NegBinParams::from_mean(2, 6.0).unwrap().truncated_pmf(1e-12).unwrap();
    let traits = make_two_point_trait(0.3, 0.5, 0.3, 0.5, 0.5).unwrap();
    (degrees, WeightKernel::degree_independent(weights), traits)
}

pub fn attributes(n: usize) -> NodeAttributes {
    let (d, k, t) = heterogeneous_scenario();
    sample_node_attributes(n, &d, &k, &t, 1).unwrap()
}

pub fn network(n: usize) -> (NodeAttributes, WeightedGraph) {
    let attrs = attributes(n);
    let (g, _) = build_network(&attrs, 2);
    (attrs, g)
}

pub fn offspring_matrix() -> OffspringMatrix {
    let (d, k, t) = heterogeneous_scenario();
    build_offspring_matrix(&d, &k, &t).unwrap()
}

/// Fixed degree 5, unweighted, symmetric two-point traits.
pub fn symmetric_scenario(cv: f64) -> (DegreeDistribution, WeightKernel, TraitDistribution) {
    (
        DegreeDistribution::constant(5),
        WeightKernel::unweighted(),
        example4_traits(0.48, cv).unwrap(),
    )
}
