//! Weighted configuration model.
//!
//! Every node draws a degree, one weight per half-edge, and a
//! (susceptibility, infectivity) pair. Half-edges are then matched uniformly
//! at random within each weight class, so both ends of an edge always carry
//! the same weight. An odd class loses one uniformly chosen half-edge.
//! Self-loops and parallel edges are kept and counted.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;

use crate::distributions::{DegreeDistribution, TraitDistribution, WeightKernel};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Per-node degrees, half-edge weights and traits.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAttributes {
    offsets: Vec<usize>,
    half_edges: Vec<u32>,
    susceptibility: Vec<f64>,
    infectivity: Vec<f64>,
}

impl NodeAttributes {
    /// `half_edges[i]` lists the weights of node `i`'s half-edges.
    pub fn new(half_edges: Vec<Vec<u32>>, susceptibility: Vec<f64>, infectivity: Vec<f64>) -> Result<Self> {
        let n = half_edges.len();
        if susceptibility.len() != n || infectivity.len() != n {
            return Err(Error::config("attribute vectors differ in length"));
        }
        if half_edges.iter().flatten().any(|&w| w == 0) {
            return Err(Error::domain("half-edge weights must be >= 1"));
        }
        if susceptibility
            .iter()
            .chain(&infectivity)
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::domain("traits must lie in [0,1]"));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut flat = Vec::new();
        for row in half_edges {
            flat.extend(row);
            offsets.push(flat.len());
        }
        Ok(NodeAttributes {
            offsets,
            half_edges: flat,
            susceptibility,
            infectivity,
        })
    }

    pub fn len(&self) -> usize {
        self.susceptibility.len()
    }

    pub fn is_empty(&self) -> bool {
        self.susceptibility.is_empty()
    }

    /// Sampled degree `D_i` (before odd-class trimming).
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn weights(&self, node: usize) -> &[u32] {
        &self.half_edges[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn susceptibility(&self) -> &[f64] {
        &self.susceptibility
    }

    pub fn infectivity(&self) -> &[f64] {
        &self.infectivity
    }

    pub fn total_half_edges(&self) -> usize {
        self.half_edges.len()
    }

    /// Overwrites traits, keeping the network part.
    pub fn with_traits(&self, susceptibility: Vec<f64>, infectivity: Vec<f64>) -> Result<Self> {
        let n = self.len();
        if susceptibility.len() != n || infectivity.len() != n {
            return Err(Error::config("attribute vectors differ in length"));
        }
        Ok(NodeAttributes {
            susceptibility,
            infectivity,
            ..self.clone()
        })
    }
}

/// Draws iid node attributes. Traits are independent of degree and weights.
pub fn sample_node_attributes(
    n: usize,
    degrees: &DegreeDistribution,
    kernel: &WeightKernel,
    traits: &TraitDistribution,
    seed: u64,
) -> Result<NodeAttributes> {
    if n == 0 {
        return Err(Error::domain("population size must be >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let degree_values: Vec<u32> = degrees.support().iter().map(|&(d, _)| d).collect();
    let degree_index = WeightedIndex::new(degrees.support().iter().map(|&(_, p)| p))
        .map_err(|e| Error::domain(format!("degree distribution: {e}")))?;
    let trait_index = WeightedIndex::new(traits.atoms().iter().map(|a| a.prob))
        .map_err(|e| Error::domain(format!("trait distribution: {e}")))?;

    // per-degree weight samplers, built on first use
    let mut samplers: HashMap<u32, (Vec<u32>, WeightedIndex<f64>)> = HashMap::new();

    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut half_edges = Vec::new();
    let mut susceptibility = Vec::with_capacity(n);
    let mut infectivity = Vec::with_capacity(n);

    for _ in 0..n {
        let d = degree_values[degree_index.sample(&mut rng)];
        if d > 0 {
            if !samplers.contains_key(&d) {
                let row = kernel
                    .row(d)
                    .ok_or_else(|| Error::config(format!("weight kernel has no row for degree {d}")))?;
                let values = row.support().iter().map(|&(w, _)| w).collect();
                let index = WeightedIndex::new(row.support().iter().map(|&(_, p)| p))
                    .map_err(|e| Error::domain(format!("weight row for degree {d}: {e}")))?;
                samplers.insert(d, (values, index));
            }
            let (values, index) = &samplers[&d];
            for _ in 0..d {
                half_edges.push(values[index.sample(&mut rng)]);
            }
        }
        offsets.push(half_edges.len());
        let atom = traits.atoms()[trait_index.sample(&mut rng)];
        susceptibility.push(atom.x);
        infectivity.push(atom.y);
    }

    Ok(NodeAttributes {
        offsets,
        half_edges,
        susceptibility,
        infectivity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub weight: u32,
}

/// Undirected multigraph with integer edge weights and CSR adjacency.
///
/// A self-loop appears twice in its node's adjacency list.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<Neighbor>,
}

impl WeightedGraph {
    pub fn from_edges(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if let Some(e) = edges.iter().find(|e| e.a >= n || e.b >= n) {
            return Err(Error::domain(format!("edge {e:?} has an endpoint outside [0, {n})")));
        }
        if edges.iter().any(|e| e.weight == 0) {
            return Err(Error::domain("edge weights must be >= 1"));
        }
        let mut counts = vec![0usize; n + 1];
        for e in &edges {
            counts[e.a + 1] += 1;
            counts[e.b + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut adjacency = vec![Neighbor { node: 0, weight: 0 }; 2 * edges.len()];
        for e in &edges {
            adjacency[cursor[e.a]] = Neighbor { node: e.b, weight: e.weight };
            cursor[e.a] += 1;
            adjacency[cursor[e.b]] = Neighbor { node: e.a, weight: e.weight };
            cursor[e.b] += 1;
        }
        Ok(WeightedGraph {
            n,
            edges,
            offsets,
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[Neighbor] {
        &self.adjacency[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Number of adjacency slots of `node`; self-loops count twice.
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Start of `node`'s slots in the flat adjacency array.
    pub(crate) fn slot_offset(&self, node: usize) -> usize {
        self.offsets[node]
    }

    pub(crate) fn slot_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Edge list: header `# n=<n>`, then one `a b w` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# n={}", self.n)?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.a, e.b, e.weight)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuildDiagnostics {
    /// Half-edges discarded per weight class (0 or 1 each).
    pub dropped_half_edges: BTreeMap<u32, usize>,
    /// Node that lost the discarded half-edge of each odd class.
    pub dropped_owners: BTreeMap<u32, usize>,
    pub self_loops: usize,
    /// Edges beyond the first between the same pair of distinct nodes.
    pub multi_edges: usize,
    /// `degree_histogram[k]` = number of nodes with realized degree `k`.
    pub degree_histogram: Vec<usize>,
}

/// Pairs half-edges uniformly at random within each weight class.
pub fn build_network(attrs: &NodeAttributes, seed: u64) -> (WeightedGraph, BuildDiagnostics) {
    let mut rng = rng_from_seed(seed);
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for node in 0..attrs.len() {
        for &w in attrs.weights(node) {
            classes.entry(w).or_default().push(node);
        }
    }

    let mut diagnostics = BuildDiagnostics::default();
    let mut edges = Vec::with_capacity(attrs.total_half_edges() / 2);
    for (weight, mut stubs) in classes {
        stubs.shuffle(&mut rng);
        // after a uniform shuffle the last stub is a uniform choice
        if stubs.len() % 2 == 1 {
            let owner = stubs.pop().expect("odd class is non-empty");
            diagnostics.dropped_owners.insert(weight, owner);
            diagnostics.dropped_half_edges.insert(weight, 1);
        } else {
            diagnostics.dropped_half_edges.insert(weight, 0);
        }
        edges.extend(stubs.chunks_exact(2).map(|pair| Edge {
            a: pair[0],
            b: pair[1],
            weight,
        }));
    }

    diagnostics.self_loops = edges.iter().filter(|e| e.a == e.b).count();
    let mut pairs: Vec<(usize, usize)> = edges
        .iter()
        .filter(|e| e.a != e.b)
        .map(|e| (e.a.min(e.b), e.a.max(e.b)))
        .collect();
    pairs.sort_unstable();
    diagnostics.multi_edges = pairs.windows(2).filter(|p| p[0] == p[1]).count();

    let graph = WeightedGraph::from_edges(attrs.len(), edges).expect("endpoints come from attrs");
    let max_degree = (0..graph.n()).map(|i| graph.degree(i)).max().unwrap_or(0);
    let mut histogram = vec![0usize; max_degree + 1];
    for i in 0..graph.n() {
        histogram[graph.degree(i)] += 1;
    }
    diagnostics.degree_histogram = histogram;
    (graph, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{TraitDistribution, WeightPmf};

    fn homogeneous(n: usize, rows: Vec<Vec<u32>>) -> NodeAttributes {
        NodeAttributes::new(rows, vec![0.5; n], vec![0.5; n]).unwrap()
    }

    #[test]
    fn forced_matching() {
        let attrs = homogeneous(2, vec![vec![3], vec![3]]);
        let (g, diag) = build_network(&attrs, 1);
        assert_eq!(g.edges().len(), 1);
        let e = g.edges()[0];
        assert_eq!((e.a.min(e.b), e.a.max(e.b), e.weight), (0, 1, 3));
        assert_eq!(diag.dropped_half_edges[&3], 0);
    }

    #[test]
    fn odd_class_drops_one() {
        let attrs = homogeneous(3, vec![vec![2], vec![2], vec![2]]);
        let (g, diag) = build_network(&attrs, 9);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(diag.dropped_half_edges[&2], 1);
        let owner = diag.dropped_owners[&2];
        assert_eq!(g.degree(owner), 0);
    }

    #[test]
    fn odd_class_drop_is_uniform() {
        let attrs = homogeneous(3, vec![vec![2], vec![2], vec![2]]);
        let mut counts = [0usize; 3];
        for seed in 0..3000 {
            let (_, diag) = build_network(&attrs, seed);
            counts[diag.dropped_owners[&2]] += 1;
        }
        // expected 1000 each, sd ~ 26
        for c in counts {
            assert!((c as i64 - 1000).abs() < 130, "{counts:?}");
        }
    }

    #[test]
    fn matching_never_crosses_weight_classes() {
        let attrs = homogeneous(
            4,
            vec![vec![1, 2], vec![1, 2], vec![2, 2], vec![1]],
        );
        let (g, diag) = build_network(&attrs, 5);
        let ones = g.edges().iter().filter(|e| e.weight == 1).count();
        let twos = g.edges().iter().filter(|e| e.weight == 2).count();
        assert_eq!((ones, twos), (1, 2));
        assert_eq!(diag.dropped_half_edges[&1], 1);
    }

    #[test]
    fn deterministic_in_seed() {
        let deg = DegreeDistribution::constant(3);
        let kernel = WeightKernel::degree_independent(
            WeightPmf::new(vec![(1, 0.5), (4, 0.5)]).unwrap(),
        );
        let traits = TraitDistribution::constant(0.3, 0.6).unwrap();
        let a = sample_node_attributes(500, &deg, &kernel, &traits, 3).unwrap();
        let b = sample_node_attributes(500, &deg, &kernel, &traits, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(build_network(&a, 11), build_network(&b, 11));
        assert_ne!(build_network(&a, 11).0, build_network(&a, 12).0);
    }

    #[test]
    fn constant_degree_unit_weight() {
        let attrs = sample_node_attributes(
            100,
            &DegreeDistribution::constant(5),
            &WeightKernel::unweighted(),
            &TraitDistribution::constant(1.0, 1.0).unwrap(),
            0,
        )
        .unwrap();
        for i in 0..100 {
            assert_eq!(attrs.weights(i), &[1; 5]);
        }
    }

    #[test]
    fn missing_kernel_row_is_config_error() {
        let kernel = WeightKernel::from_rows(BTreeMap::new());
        let err = sample_node_attributes(
            10,
            &DegreeDistribution::constant(2),
            &kernel,
            &TraitDistribution::constant(0.1, 0.1).unwrap(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn self_loops_and_multi_edges_counted() {
        let attrs = homogeneous(2, vec![vec![1, 1, 1, 1], vec![1, 1, 1, 1]]);
        let mut any_loop = false;
        for seed in 0..50 {
            let (g, diag) = build_network(&attrs, seed);
            assert_eq!(g.edges().len(), 4);
            let loops = g.edges().iter().filter(|e| e.a == e.b).count();
            assert_eq!(diag.self_loops, loops);
            let cross = 4 - loops;
            assert_eq!(diag.multi_edges, cross.saturating_sub(1));
            assert_eq!(g.degree(0), 4);
            any_loop |= loops > 0;
        }
        assert!(any_loop);
    }

    #[test]
    fn edge_list_format() {
        let g = WeightedGraph::from_edges(
            3,
            vec![Edge { a: 0, b: 1, weight: 2 }, Edge { a: 1, b: 2, weight: 7 }],
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# n=3\n0 1 2\n1 2 7\n");
        assert!(WeightedGraph::from_edges(2, vec![Edge { a: 0, b: 2, weight: 1 }]).is_err());
    }

    #[test]
    fn rejects_inconsistent_attributes() {
        assert!(NodeAttributes::new(vec![vec![1]], vec![0.5, 0.5], vec![0.5]).is_err());
        assert!(NodeAttributes::new(vec![vec![0]], vec![0.5], vec![0.5]).is_err());
        assert!(NodeAttributes::new(vec![vec![1]], vec![1.5], vec![0.5]).is_err());
    }
}
