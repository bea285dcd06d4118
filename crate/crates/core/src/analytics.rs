//! Branching-process analytics.
//!
//! Early in an outbreak every infected individual is described by its type
//! `(degree, susceptibility, infectivity)`. An individual reached along an
//! edge has `d - 1` further edges, each leading independently to a type drawn
//! from the weight-specific edge-end law and infecting it with probability
//! `t(w, y, x)`. This gives the mean offspring matrix, whose Perron root is
//! `R0`, and the per-edge offspring pgf whose fixed point yields the outbreak
//! probability.

use std::collections::HashMap;

use crate::distributions::{
    negbin_pgf, DegreeDistribution, TraitDistribution, WeightKernel, WeightPmf,
};
use crate::epidemic::transmission_prob;
use crate::error::{Error, Result};

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 200_000;
pub const EXTINCTION_TOL: f64 = 1e-12;
pub const EXTINCTION_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeType {
    pub degree: u32,
    pub x: f64,
    pub y: f64,
    /// `p_D(d) p_{X,Y}(x, y)`
    pub prob: f64,
}

/// Every `(degree, trait atom)` combination with positive mass, degree-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeSpace {
    types: Vec<NodeType>,
}

impl TypeSpace {
    pub fn new(degrees: &DegreeDistribution, traits: &TraitDistribution) -> Self {
        let types = degrees
            .support()
            .iter()
            .filter(|&&(_, p)| p > 0.0)
            .flat_map(|&(degree, pd)| {
                traits.atoms().iter().map(move |a| NodeType {
                    degree,
                    x: a.x,
                    y: a.y,
                    prob: pd * a.prob,
                })
            })
            .collect();
        TypeSpace { types }
    }

    pub fn types(&self) -> &[NodeType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn index_of(&self, degree: u32, x: f64, y: f64) -> Option<usize> {
        self.types
            .iter()
            .position(|t| t.degree == degree && t.x == x && t.y == y)
    }

    /// Law of the type at the far end of an edge of weight `w`:
    /// `q(w|d) d p_D(d) p_{X,Y}(x,y) / sum_d q(w|d) d p_D(d)`.
    pub fn edge_end_distribution(&self, w: u32, kernel: &WeightKernel) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self
            .types
            .iter()
            .map(|t| kernel.q(w, t.degree) * f64::from(t.degree) * t.prob)
            .collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain(format!(
                "no half-edge carries weight {w}; edge-end law undefined"
            )));
        }
        Ok(raw.into_iter().map(|v| v / total).collect())
    }
}

/// Edge-end type law for weight `w`, indexed like `TypeSpace::new(degrees, traits)`.
pub fn edge_type_distribution(
    w: u32,
    degrees: &DegreeDistribution,
    kernel: &WeightKernel,
    traits: &TraitDistribution,
) -> Result<Vec<f64>> {
    TypeSpace::new(degrees, traits).edge_end_distribution(w, kernel)
}

/// Mean offspring matrix over a [`TypeSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringMatrix {
    space: TypeSpace,
    /// Probability that one edge of the row type infects the column type.
    edge_prob: Vec<f64>,
    entries: Vec<f64>,
}

impl OffspringMatrix {
    pub fn space(&self) -> &TypeSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim() + to]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn edge_infection_prob(&self, from: usize, to: usize) -> f64 {
        self.edge_prob[from * self.dim() + to]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }
}

/// `m[t1][t2] = (d1 - 1) sum_w q(w|d1) t(w, y1, x2) p~_w(t2)`.
pub fn build_offspring_matrix(
    degrees: &DegreeDistribution,
    kernel: &WeightKernel,
    traits: &TraitDistribution,
) -> Result<OffspringMatrix> {
    kernel.check_covers(degrees)?;
    let space = TypeSpace::new(degrees, traits);
    let dim = space.len();
    let mut edge_end: HashMap<u32, Vec<f64>> = HashMap::new();
    let mut edge_prob = vec![0.0; dim * dim];
    let mut entries = vec![0.0; dim * dim];
    for (i, from) in space.types().iter().enumerate() {
        if from.degree == 0 {
            continue;
        }
        let row = kernel.row(from.degree).expect("covered above");
        for &(w, qw) in row.support() {
            if !edge_end.contains_key(&w) {
                edge_end.insert(w, space.edge_end_distribution(w, kernel)?);
            }
            let ends = &edge_end[&w];
            for (j, to) in space.types().iter().enumerate() {
                edge_prob[i * dim + j] += qw * transmission_prob(w, from.y, to.x) * ends[j];
            }
        }
        let factor = f64::from(from.degree - 1);
        for j in 0..dim {
            entries[i * dim + j] = factor * edge_prob[i * dim + j];
        }
    }
    Ok(OffspringMatrix {
        space,
        edge_prob,
        entries,
    })
}

/// Perron root of a non-negative `dim x dim` row-major matrix.
///
/// Power iteration on `A + eps I` (`eps = 1e-9 max entry`) with
/// infinity-norm normalization; stops when successive Rayleigh quotients
/// differ by at most `tol` and the max-normalized iterate moves by at most
/// `tol` in the sup norm.
pub fn perron_root(entries: &[f64], dim: usize, tol: f64, max_iter: usize) -> Result<f64> {
    if entries.len() != dim * dim {
        return Err(Error::domain(format!(
            "{} entries do not form a {dim}x{dim} matrix",
            entries.len()
        )));
    }
    if entries.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::domain("matrix must be finite and non-negative"));
    }
    let max_entry = entries.iter().cloned().fold(0.0, f64::max);
    if dim == 0 || max_entry == 0.0 {
        return Ok(0.0);
    }
    let shift = 1e-9 * max_entry;
    let mut v = vec![1.0; dim];
    let mut next = vec![0.0; dim];
    let mut previous = f64::NAN;
    let mut estimate = f64::NAN;
    let mut residual = f64::NAN;
    for _ in 0..max_iter {
        for (i, out) in next.iter_mut().enumerate() {
            let row = &entries[i * dim..(i + 1) * dim];
            *out = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + shift * v[i];
        }
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let vav: f64 = v.iter().zip(&next).map(|(a, b)| a * b).sum();
        estimate = vav / vv;
        let norm = next.iter().cloned().fold(0.0, f64::max);
        let mut step: f64 = 0.0;
        for (a, b) in v.iter_mut().zip(&next) {
            step = step.max((b / norm - *a).abs());
            *a = b / norm;
        }
        residual = step.max((estimate - previous).abs());
        if residual <= tol {
            return Ok((estimate - shift).max(0.0));
        }
        previous = estimate;
    }
    Err(Error::NonConvergence {
        what: "power iteration",
        iterations: max_iter,
        residual,
        last: estimate - shift,
    })
}

/// `R0`, the largest eigenvalue of the mean offspring matrix.
pub fn spectral_radius(m: &OffspringMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    perron_root(m.entries(), m.dim(), tol, max_iter)
}

/// `R0` of the full model with default solver settings.
pub fn r0(degrees: &DegreeDistribution, kernel: &WeightKernel, traits: &TraitDistribution) -> Result<f64> {
    spectral_radius(
        &build_offspring_matrix(degrees, kernel, traits)?,
        SPECTRAL_TOL,
        SPECTRAL_MAX_ITER,
    )
}

// ---------------------------------------------------------------------------
// Closed forms

/// Unweighted network:
/// `mu_X mu_Y (1 + CV_X CV_Y rho) (mu_D + (sigma_D^2 - mu_D) / mu_D)`.
pub fn r0_unweighted_closed_form(
    mu_x: f64,
    cv_x: f64,
    mu_y: f64,
    cv_y: f64,
    rho: f64,
    mu_d: f64,
    var_d: f64,
) -> f64 {
    mu_x * mu_y * (1.0 + cv_x * cv_y * rho) * (mu_d + (var_d - mu_d) / mu_d)
}

/// [`r0_unweighted_closed_form`] evaluated at the moments of the given laws.
pub fn r0_unweighted_from(degrees: &DegreeDistribution, traits: &TraitDistribution) -> Result<f64> {
    let d = degrees.moments();
    if d.mean <= 0.0 {
        return Err(Error::domain("mean degree must be positive"));
    }
    let (mx, my) = (traits.x_moments(), traits.y_moments());
    Ok(r0_unweighted_closed_form(
        mx.mean,
        mx.cv()?,
        my.mean,
        my.cv()?,
        traits.correlation().unwrap_or(0.0),
        d.mean,
        d.variance,
    ))
}

/// Fixed degree `d`, per-contact probability `p`, iid weights:
/// `(d - 1)(1 - G(1 - p))`.
pub fn r0_fixed_degree_random_weight(d: u32, p: f64, weights: &WeightPmf) -> f64 {
    f64::from(d.saturating_sub(1)) * (1.0 - weights.pgf(1.0 - p))
}

/// Same with negative binomial weights of mean `mu_w`; `r` may be real.
pub fn r0_negbin(d: u32, p: f64, r: f64, mu_w: f64) -> f64 {
    f64::from(d.saturating_sub(1)) * (1.0 - negbin_pgf(1.0 - p, r, r / mu_w))
}

/// `dR0/dr = (d - 1) (1 + c/r)^(-r) g(c/r)` with `c = p mu_w / (1 - p)`.
pub fn r0_negbin_dr(d: u32, p: f64, r: f64, mu_w: f64) -> f64 {
    let c = p * mu_w / (1.0 - p);
    let z = c / r;
    f64::from(d.saturating_sub(1)) * (-r * z.ln_1p()).exp() * appendix_g(z)
}

/// `g(z) = log(1 + z) - z / (1 + z)`, non-negative with `g(0) = 0`.
pub fn appendix_g(z: f64) -> f64 {
    if z < 1e-2 {
        // sum_{k>=2} (-1)^k (k-1)/k z^k avoids the cancellation near zero
        let mut term = z;
        let mut sum = 0.0;
        for k in 2..20 {
            term *= -z;
            let kf = f64::from(k);
            sum -= term * (kf - 1.0) / kf;
        }
        return sum;
    }
    z.ln_1p() - z / (1.0 + z)
}

/// `g'(z) = 1/(1+z) - 1/(1+z)^2`.
pub fn appendix_g_prime(z: f64) -> f64 {
    z / ((1.0 + z) * (1.0 + z))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenGap {
    /// `R0` with the given random weights.
    pub random: f64,
    /// `R0` if every edge carried the mean weight, `(d-1)(1 - (1-p)^mu_W)`.
    pub fixed_mean: f64,
}

pub fn jensen_gap(d: u32, p: f64, weights: &WeightPmf) -> JensenGap {
    let mean = weights.moments().mean;
    JensenGap {
        random: r0_fixed_degree_random_weight(d, p, weights),
        fixed_mean: f64::from(d.saturating_sub(1)) * (1.0 - (1.0 - p).powf(mean)),
    }
}

// ---------------------------------------------------------------------------
// Extinction

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionSolution {
    /// Per type: probability that an individual of this type, infected along
    /// an edge, starts a major outbreak.
    pub pi_prime: Vec<f64>,
    /// Outbreak probability for a uniformly chosen index case.
    pub pi: f64,
    pub r0: f64,
    pub iterations: usize,
    /// `max_t |F(pi')_t - pi'_t|` at the returned vector.
    pub residual: f64,
}

/// Solves `1 - pi'_t = (1 - sum_u q_t(u) pi'_u)^(d_t - 1)` by fixed-point
/// iteration from `pi' = 1`, which converges monotonically to the relevant
/// (minimal extinction) solution. Index cases have `d` rather than `d - 1`
/// susceptible neighbours.
pub fn extinction_probabilities(
    degrees: &DegreeDistribution,
    kernel: &WeightKernel,
    traits: &TraitDistribution,
    tol: f64,
    max_iter: usize,
) -> Result<ExtinctionSolution> {
    let m = build_offspring_matrix(degrees, kernel, traits)?;
    let r0 = spectral_radius(&m, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
    solve_extinction(&m, r0, tol, max_iter)
}

/// Extinction fixed point for a prebuilt matrix with known Perron root.
pub fn solve_extinction(
    m: &OffspringMatrix,
    r0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ExtinctionSolution> {
    let dim = m.dim();
    let types = m.space().types();
    let escape = |pi_prime: &[f64], t: usize| -> f64 {
        // probability that one edge of type t does not seed a major outbreak
        let row = &m.edge_prob[t * dim..(t + 1) * dim];
        1.0 - row.iter().zip(pi_prime).map(|(q, p)| q * p).sum::<f64>()
    };
    let apply = |pi_prime: &[f64], out: &mut [f64]| {
        for (t, o) in out.iter_mut().enumerate() {
            let d = types[t].degree;
            *o = if d <= 1 {
                0.0
            } else {
                1.0 - escape(pi_prime, t).powi(d as i32 - 1)
            };
        }
    };

    if r0 <= 1.0 {
        return Ok(ExtinctionSolution {
            pi_prime: vec![0.0; dim],
            pi: 0.0,
            r0,
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut pi_prime = vec![1.0; dim];
    let mut next = vec![0.0; dim];
    let mut iterations = 0;
    let residual = loop {
        apply(&pi_prime, &mut next);
        let residual = pi_prime
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            break residual;
        }
        if iterations == max_iter {
            return Err(Error::NonConvergence {
                what: "extinction fixed point",
                iterations,
                residual,
                last: f64::NAN,
            });
        }
        std::mem::swap(&mut pi_prime, &mut next);
        iterations += 1;
    };

    let pi = types
        .iter()
        .enumerate()
        .map(|(t, ty)| ty.prob * (1.0 - escape(&pi_prime, t).powi(ty.degree as i32)))
        .sum();
    Ok(ExtinctionSolution {
        pi_prime,
        pi,
        r0,
        iterations,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Two symmetric types on a d-regular unweighted network

/// One term of a trinomial offspring law: `k` type-1 and `l` type-2 infections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrinomialTerm {
    pub k: u32,
    pub l: u32,
    pub prob: f64,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Law of the numbers `(k, l)` of type-1 and type-2 individuals infected by
/// a type-`i` infective with `n_edges` susceptible neighbours, each
/// neighbour being of either type with probability 1/2.
pub fn offspring_pmf_example4(i: u8, n_edges: u32, mu1: f64, mu2: f64) -> Result<Vec<TrinomialTerm>> {
    let mu_i = match i {
        1 => mu1,
        2 => mu2,
        _ => return Err(Error::domain(format!("type must be 1 or 2, got {i}"))),
    };
    let (pa, pb) = (mu_i * mu1 / 2.0, mu_i * mu2 / 2.0);
    if !(0.0..=1.0).contains(&pa) || !(0.0..=1.0).contains(&pb) || pa + pb > 1.0 {
        return Err(Error::domain(format!(
            "infection probabilities {pa}, {pb} do not form a trinomial law"
        )));
    }
    let rest = 1.0 - pa - pb;
    let mut terms = Vec::new();
    for k in 0..=n_edges {
        for l in 0..=(n_edges - k) {
            let coeff = binomial(n_edges, k) * binomial(n_edges - k, l);
            let prob = coeff * pa.powi(k as i32) * pb.powi(l as i32) * rest.powi((n_edges - k - l) as i32);
            terms.push(TrinomialTerm { k, l, prob });
        }
    }
    Ok(terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example4Solution {
    pub pi_prime: [f64; 2],
    /// Outbreak probability by type of the index case.
    pub pi_by_type: [f64; 2],
    pub pi: f64,
    pub r0: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Traits `x = y = mu -/+ mu cv` in equal proportions.
pub fn example4_traits(mu: f64, cv: f64) -> Result<TraitDistribution> {
    TraitDistribution::two_point(mu, cv, mu, cv, 1.0)
}

/// CV at which `(d - 1) mu^2 (1 + CV^2) = 1`.
pub fn example4_critical_cv(d: u32, mu: f64) -> f64 {
    (1.0 / (f64::from(d - 1) * mu * mu) - 1.0).max(0.0).sqrt()
}

/// Outbreak probability from the explicit trinomial sums over `k + l <= d - 1`
/// (edge-reached) and `k + l <= d` (index case).
pub fn example4_extinction(d: u32, mu: f64, cv: f64, tol: f64, max_iter: usize) -> Result<Example4Solution> {
    if d == 0 {
        return Err(Error::domain("degree must be >= 1"));
    }
    let delta = mu * cv;
    let (mu1, mu2) = (mu - delta, mu + delta);
    let r0 = f64::from(d - 1) * (mu1 * mu1 + mu2 * mu2) / 2.0;
    let later = [
        offspring_pmf_example4(1, d - 1, mu1, mu2)?,
        offspring_pmf_example4(2, d - 1, mu1, mu2)?,
    ];
    let first = [
        offspring_pmf_example4(1, d, mu1, mu2)?,
        offspring_pmf_example4(2, d, mu1, mu2)?,
    ];
    let pgf = |terms: &[TrinomialTerm], s: [f64; 2]| -> f64 {
        terms
            .iter()
            .map(|t| s[0].powi(t.k as i32) * s[1].powi(t.l as i32) * t.prob)
            .sum()
    };

    if r0 <= 1.0 {
        return Ok(Example4Solution {
            pi_prime: [0.0; 2],
            pi_by_type: [0.0; 2],
            pi: 0.0,
            r0,
            iterations: 0,
            residual: 0.0,
        });
    }

    // s = 1 - pi'
    let mut s = [0.0; 2];
    let mut iterations = 0;
    let residual = loop {
        let next = [pgf(&later[0], s), pgf(&later[1], s)];
        let residual = (next[0] - s[0]).abs().max((next[1] - s[1]).abs());
        if residual <= tol {
            break residual;
        }
        if iterations == max_iter {
            return Err(Error::NonConvergence {
                what: "trinomial extinction fixed point",
                iterations,
                residual,
                last: f64::NAN,
            });
        }
        s = next;
        iterations += 1;
    };
    let pi_by_type = [1.0 - pgf(&first[0], s), 1.0 - pgf(&first[1], s)];
    Ok(Example4Solution {
        pi_prime: [1.0 - s[0], 1.0 - s[1]],
        pi: (pi_by_type[0] + pi_by_type[1]) / 2.0,
        pi_by_type,
        r0,
        iterations,
        residual,
    })
}
