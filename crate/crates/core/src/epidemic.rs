//! Stochastic SIR epidemic on a built network, and the bond-percolation
//! shortcut for reciprocal transmission.
//!
//! Infection proceeds in generations. Every member of the current generation
//! makes one attempt along each incident edge towards a still-susceptible
//! neighbour, succeeding with probability [`transmission_prob`], and is then
//! removed. Self-loops never transmit; parallel edges each get their own
//! attempt.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::distributions::{DegreeDistribution, TraitDistribution, WeightKernel};
use crate::error::{Error, Result};
use crate::netgen::{build_network, sample_node_attributes, NodeAttributes, WeightedGraph};
use crate::rng::{derive_seed, rng_from_seed};

/// Probability that an infective with infectivity `y1` infects a susceptible
/// with susceptibility `x2` over an edge of `w` contacts: `1 - (1 - y1 x2)^w`.
pub fn transmission_prob(w: u32, y1: f64, x2: f64) -> f64 {
    1.0 - (1.0 - y1 * x2).powi(w as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexCase {
    Node(usize),
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpidemicResult {
    pub index_case: usize,
    pub final_size: usize,
    /// Ever-infected nodes, ascending.
    pub infected: Vec<usize>,
    /// Number of non-empty generations, the index case being generation 0.
    pub generations: usize,
    pub generation_sizes: Vec<usize>,
}

/// Source of transmission outcomes, keyed by adjacency slot.
trait Coins {
    fn flip(&mut self, slot: usize, p: f64) -> bool;
}

struct RngCoins<R>(R);

impl<R: Rng> Coins for RngCoins<R> {
    fn flip(&mut self, _slot: usize, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.0.random::<f64>() < p
        }
    }
}

struct SharedUniforms<'a>(&'a [f64]);

impl Coins for SharedUniforms<'_> {
    fn flip(&mut self, slot: usize, p: f64) -> bool {
        self.0[slot] < p
    }
}

fn check_consistent(graph: &WeightedGraph, attrs: &NodeAttributes) -> Result<()> {
    if graph.n() != attrs.len() {
        return Err(Error::config(format!(
            "graph has {} nodes but attributes describe {}",
            graph.n(),
            attrs.len()
        )));
    }
    Ok(())
}

fn run_generations(
    graph: &WeightedGraph,
    attrs: &NodeAttributes,
    index: usize,
    coins: &mut impl Coins,
) -> EpidemicResult {
    let x = attrs.susceptibility();
    let y = attrs.infectivity();
    let mut infected = vec![false; graph.n()];
    infected[index] = true;
    let mut ever = vec![index];
    let mut current = vec![index];
    let mut generation_sizes = vec![1];
    loop {
        let mut next = Vec::new();
        for &i in &current {
            let base = graph.slot_offset(i);
            for (k, nb) in graph.neighbors(i).iter().enumerate() {
                let j = nb.node;
                if j == i || infected[j] {
                    continue;
                }
                if coins.flip(base + k, transmission_prob(nb.weight, y[i], x[j])) {
                    infected[j] = true;
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        generation_sizes.push(next.len());
        ever.extend_from_slice(&next);
        current = next;
    }
    ever.sort_unstable();
    EpidemicResult {
        index_case: index,
        final_size: ever.len(),
        infected: ever,
        generations: generation_sizes.len(),
        generation_sizes,
    }
}

pub fn simulate_outbreak(
    graph: &WeightedGraph,
    attrs: &NodeAttributes,
    index_case: IndexCase,
    seed: u64,
) -> Result<EpidemicResult> {
    check_consistent(graph, attrs)?;
    let mut rng = rng_from_seed(seed);
    let index = match index_case {
        IndexCase::Node(i) if i < graph.n() => i,
        IndexCase::Node(i) => {
            return Err(Error::domain(format!(
                "index case {i} out of range for {} nodes",
                graph.n()
            )))
        }
        IndexCase::Uniform if graph.n() == 0 => return Err(Error::domain("empty graph")),
        IndexCase::Uniform => rng.random_range(0..graph.n()),
    };
    Ok(run_generations(graph, attrs, index, &mut RngCoins(rng)))
}

/// Outbreak driven by one pre-drawn uniform per directed adjacency slot
/// (slot `k` of node `i` is transmission `i -> neighbour k`). Two runs sharing
/// `uniforms` are coupled: larger traits can only enlarge the outbreak.
pub fn simulate_outbreak_with_uniforms(
    graph: &WeightedGraph,
    attrs: &NodeAttributes,
    index: usize,
    uniforms: &[f64],
) -> Result<EpidemicResult> {
    check_consistent(graph, attrs)?;
    if index >= graph.n() {
        return Err(Error::domain(format!("index case {index} out of range")));
    }
    if uniforms.len() != graph.slot_count() {
        return Err(Error::config(format!(
            "need {} uniforms, got {}",
            graph.slot_count(),
            uniforms.len()
        )));
    }
    Ok(run_generations(graph, attrs, index, &mut SharedUniforms(uniforms)))
}

// ---------------------------------------------------------------------------
// Percolation

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PercolationResult {
    pub n: usize,
    /// Component sizes of the retained subgraph, largest first.
    pub component_sizes: Vec<usize>,
}

impl PercolationResult {
    pub fn largest_fraction(&self) -> f64 {
        self.component_sizes.first().copied().unwrap_or(0) as f64 / self.n as f64
    }

    /// Expected relative size of the component containing a uniform node.
    pub fn mean_component_fraction(&self) -> f64 {
        let n = self.n as f64;
        self.component_sizes
            .iter()
            .map(|&s| (s as f64 / n) * (s as f64 / n))
            .sum()
    }
}

/// Keeps each edge `(i, j, w)` with probability `t(w, x_i, x_j)` and returns
/// the component sizes. Requires `x_i == y_i` for every node, which makes the
/// transmission network undirected.
pub fn percolate_symmetric(
    graph: &WeightedGraph,
    attrs: &NodeAttributes,
    seed: u64,
) -> Result<PercolationResult> {
    check_consistent(graph, attrs)?;
    let x = attrs.susceptibility();
    if let Some(i) = (0..attrs.len()).find(|&i| x[i] != attrs.infectivity()[i]) {
        return Err(Error::Contract(format!(
            "percolation needs susceptibility == infectivity; node {i} has ({}, {})",
            x[i],
            attrs.infectivity()[i]
        )));
    }
    let mut coins = RngCoins(rng_from_seed(seed));
    let mut sets = DisjointSets::new(graph.n());
    for (k, e) in graph.edges().iter().enumerate() {
        if e.a == e.b {
            continue;
        }
        if coins.flip(k, transmission_prob(e.weight, x[e.a], x[e.b])) {
            sets.union(e.a, e.b);
        }
    }
    let mut sizes = Vec::new();
    for i in 0..graph.n() {
        if sets.find(i) == i {
            sizes.push(sets.size[i]);
        }
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    Ok(PercolationResult {
        n: graph.n(),
        component_sizes: sizes,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo harness

/// What counts as a major outbreak.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdRule {
    /// `max(50, 0.01 n)`.
    #[default]
    Default,
    Absolute(usize),
    Fraction(f64),
    /// Multiple of the default threshold, for sensitivity checks.
    Scaled(f64),
}

impl ThresholdRule {
    pub fn threshold(&self, n: usize) -> usize {
        let default = 50usize.max((0.01 * n as f64).ceil() as usize);
        match *self {
            ThresholdRule::Default => default,
            ThresholdRule::Absolute(t) => t,
            ThresholdRule::Fraction(f) => (f * n as f64).ceil() as usize,
            ThresholdRule::Scaled(f) => (f * default as f64).ceil() as usize,
        }
    }
}

/// Population size and distributions for one simulated scenario.
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub n: usize,
    pub degrees: DegreeDistribution,
    pub kernel: WeightKernel,
    pub traits: TraitDistribution,
}

impl SimulationSetup {
    /// Fresh attributes and network, then one outbreak from a uniform index case.
    pub fn run_once(&self, seed: u64) -> Result<(EpidemicResult, NodeAttributes, WeightedGraph)> {
        let attrs = sample_node_attributes(
            self.n,
            &self.degrees,
            &self.kernel,
            &self.traits,
            derive_seed(seed, 0),
        )?;
        let (graph, _) = build_network(&attrs, derive_seed(seed, 1));
        let result = simulate_outbreak(&graph, &attrs, IndexCase::Uniform, derive_seed(seed, 2))?;
        Ok((result, attrs, graph))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub n: usize,
    pub final_size: usize,
    pub generations: usize,
    pub major: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutbreakStats {
    pub replicates: usize,
    pub majors: usize,
    pub threshold: usize,
    pub pi_hat: f64,
    /// 95% normal-approximation half-width of `pi_hat`.
    pub pi_half_width: f64,
    /// Mean relative final size among major outbreaks.
    pub tau_hat: Option<f64>,
    pub tau_half_width: Option<f64>,
    pub records: Vec<ReplicateRecord>,
}

const Z95: f64 = 1.959_963_984_540_054;

impl OutbreakStats {
    fn from_records(mut records: Vec<ReplicateRecord>, threshold: usize) -> Self {
        for r in &mut records {
            r.major = r.final_size >= threshold;
        }
        let replicates = records.len();
        let majors = records.iter().filter(|r| r.major).count();
        let pi_hat = majors as f64 / replicates as f64;
        let pi_half_width = Z95 * (pi_hat * (1.0 - pi_hat) / replicates as f64).sqrt();
        let fractions: Vec<f64> = records
            .iter()
            .filter(|r| r.major)
            .map(|r| r.final_size as f64 / r.n as f64)
            .collect();
        let (tau_hat, tau_half_width) = if fractions.is_empty() {
            (None, None)
        } else {
            let k = fractions.len() as f64;
            let mean = fractions.iter().sum::<f64>() / k;
            let hw = if fractions.len() > 1 {
                let var = fractions.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (k - 1.0);
                Z95 * (var / k).sqrt()
            } else {
                0.0
            };
            (Some(mean), Some(hw))
        };
        OutbreakStats {
            replicates,
            majors,
            threshold,
            pi_hat,
            pi_half_width,
            tau_hat,
            tau_half_width,
            records,
        }
    }

    /// Same replicates classified with a different major-outbreak threshold.
    pub fn reclassify(&self, threshold: usize) -> OutbreakStats {
        OutbreakStats::from_records(self.records.clone(), threshold)
    }

    /// Standard error of `pi_hat` under the binomial model.
    pub fn pi_std_error(&self) -> f64 {
        self.pi_half_width / Z95
    }

    /// CSV with columns `replicate,n,final_size,generations,major`, then a
    /// `summary` row holding n, the mean final size of major outbreaks, the
    /// mean number of generations and `pi_hat`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "replicate,n,final_size,generations,major")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.replicate,
                r.n,
                r.final_size,
                r.generations,
                u8::from(r.major)
            )?;
        }
        let n = self.records.first().map_or(0, |r| r.n);
        let mean_major_size = self
            .tau_hat
            .map(|t| format!("{}", t * n as f64))
            .unwrap_or_default();
        let mean_generations = self.records.iter().map(|r| r.generations as f64).sum::<f64>()
            / self.replicates.max(1) as f64;
        writeln!(out, "summary,{n},{mean_major_size},{mean_generations},{}", self.pi_hat)
    }
}

/// Independent replicates, each with its own network, attributes and
/// uniform index case. Replicate `k` uses seed `derive_seed(seed, k)`.
pub fn estimate_outbreak_stats(
    setup: &SimulationSetup,
    replicates: usize,
    threshold_rule: ThresholdRule,
    seed: u64,
) -> Result<OutbreakStats> {
    if replicates == 0 {
        return Err(Error::domain("need at least one replicate"));
    }
    let threshold = threshold_rule.threshold(setup.n);
    let records = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let (res, _, _) = setup.run_once(derive_seed(seed, k as u64))?;
            Ok(ReplicateRecord {
                replicate: k,
                n: setup.n,
                final_size: res.final_size,
                generations: res.generations,
                major: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutbreakStats::from_records(records, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::Edge;

    fn path(n: usize) -> WeightedGraph {
        let edges = (0..n - 1).map(|i| Edge { a: i, b: i + 1, weight: 1 }).collect();
        WeightedGraph::from_edges(n, edges).unwrap()
    }

    fn uniform_traits(n: usize, v: f64) -> NodeAttributes {
        NodeAttributes::new(vec![vec![]; n], vec![v; n], vec![v; n]).unwrap()
    }

    #[test]
    fn transmission_values() {
        assert_eq!(transmission_prob(3, 0.0, 0.7), 0.0);
        assert_eq!(transmission_prob(1, 1.0, 1.0), 1.0);
        assert!((transmission_prob(2, 0.5, 0.5) - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn transmission_monotone() {
        let grid = [0.0, 0.1, 0.35, 0.6, 0.9, 1.0];
        for w in 1..6 {
            for &a in &grid {
                for pair in grid.windows(2) {
                    assert!(transmission_prob(w, a, pair[0]) <= transmission_prob(w, a, pair[1]));
                    assert!(transmission_prob(w, pair[0], a) <= transmission_prob(w, pair[1], a));
                }
                assert!(transmission_prob(w, a, 0.5) <= transmission_prob(w + 1, a, 0.5));
            }
        }
    }

    #[test]
    fn isolated_index_case() {
        let g = WeightedGraph::from_edges(4, vec![]).unwrap();
        let r = simulate_outbreak(&g, &uniform_traits(4, 1.0), IndexCase::Uniform, 3).unwrap();
        assert_eq!(r.final_size, 1);
        assert_eq!(r.infected, vec![r.index_case]);
        assert_eq!(r.generations, 1);
    }

    #[test]
    fn certain_transmission_fills_component() {
        let mut edges: Vec<Edge> = (0..4).map(|i| Edge { a: i, b: i + 1, weight: 2 }).collect();
        edges.push(Edge { a: 6, b: 7, weight: 1 });
        let g = WeightedGraph::from_edges(8, edges).unwrap();
        let attrs = uniform_traits(8, 1.0);
        let r = simulate_outbreak(&g, &attrs, IndexCase::Node(2), 0).unwrap();
        assert_eq!(r.infected, vec![0, 1, 2, 3, 4]);
        assert_eq!(r.generation_sizes, vec![1, 2, 2]);
        let r = simulate_outbreak(&g, &attrs, IndexCase::Node(7), 0).unwrap();
        assert_eq!(r.infected, vec![6, 7]);
    }

    #[test]
    fn self_loops_never_transmit() {
        let g = WeightedGraph::from_edges(1, vec![Edge { a: 0, b: 0, weight: 5 }]).unwrap();
        let r = simulate_outbreak(&g, &uniform_traits(1, 1.0), IndexCase::Node(0), 0).unwrap();
        assert_eq!(r.final_size, 1);
    }

    #[test]
    fn index_out_of_range() {
        let g = path(3);
        assert!(matches!(
            simulate_outbreak(&g, &uniform_traits(3, 0.5), IndexCase::Node(3), 0),
            Err(Error::Domain(_))
        ));
        assert!(simulate_outbreak(&g, &uniform_traits(2, 0.5), IndexCase::Node(0), 0).is_err());
    }

    #[test]
    fn outbreak_is_deterministic() {
        let g = path(200);
        let attrs = uniform_traits(200, 0.9);
        let a = simulate_outbreak(&g, &attrs, IndexCase::Uniform, 17).unwrap();
        let b = simulate_outbreak(&g, &attrs, IndexCase::Uniform, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn percolation_extremes() {
        let g = path(10);
        let full = percolate_symmetric(&g, &uniform_traits(10, 1.0), 0).unwrap();
        assert_eq!(full.component_sizes, vec![10]);
        assert_eq!(full.largest_fraction(), 1.0);
        let none = percolate_symmetric(&g, &uniform_traits(10, 0.0), 0).unwrap();
        assert_eq!(none.component_sizes, vec![1; 10]);
        assert!((none.mean_component_fraction() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn percolation_requires_symmetric_traits() {
        let g = path(3);
        let attrs = NodeAttributes::new(vec![vec![]; 3], vec![0.5; 3], vec![0.5, 0.4, 0.5]).unwrap();
        assert!(matches!(percolate_symmetric(&g, &attrs, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn thresholds() {
        assert_eq!(ThresholdRule::Default.threshold(1000), 50);
        assert_eq!(ThresholdRule::Default.threshold(100_000), 1000);
        assert_eq!(ThresholdRule::Scaled(0.5).threshold(100_000), 500);
        assert_eq!(ThresholdRule::Fraction(0.05).threshold(1000), 50);
        assert_eq!(ThresholdRule::Absolute(7).threshold(1000), 7);
    }

    #[test]
    fn certain_spread_is_always_major() {
        let setup = SimulationSetup {
            n: 2000,
            degrees: DegreeDistribution::constant(4),
            kernel: WeightKernel::unweighted(),
            traits: TraitDistribution::constant(1.0, 1.0).unwrap(),
        };
        let stats = estimate_outbreak_stats(&setup, 20, ThresholdRule::Default, 1).unwrap();
        assert_eq!(stats.pi_hat, 1.0);
        assert!(stats.tau_hat.unwrap() > 0.95);
    }

    #[test]
    fn replicate_csv_layout() {
        let setup = SimulationSetup {
            n: 100,
            degrees: DegreeDistribution::constant(3),
            kernel: WeightKernel::unweighted(),
            traits: TraitDistribution::constant(0.9, 0.9).unwrap(),
        };
        let stats = estimate_outbreak_stats(&setup, 4, ThresholdRule::Absolute(10), 5).unwrap();
        let mut buf = Vec::new();
        stats.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "replicate,n,final_size,generations,major");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("0,100,"));
        assert!(lines[5].starts_with("summary,100,"));
        assert!(estimate_outbreak_stats(&setup, 0, ThresholdRule::Default, 5).is_err());
    }
}
