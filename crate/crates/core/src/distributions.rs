//! Degree, edge-weight and trait distributions.
//!
//! All distributions have finite support and are stored as explicit
//! probability tables, so every moment below is an exact finite sum.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance for a probability table to count as normalized.
pub const PMF_TOL: f64 = 1e-12;

/// Default tail mass discarded when truncating a negative binomial.
pub const DEFAULT_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    /// Moments of a finite `(value, probability)` table.
    pub fn from_table<I>(table: I) -> Self
    where
        I: IntoIterator<Item = (f64, f64)>,
        I::IntoIter: Clone,
    {
        let iter = table.into_iter();
        let mean: f64 = iter.clone().map(|(v, p)| v * p).sum();
        let variance: f64 = iter.map(|(v, p)| p * (v - mean) * (v - mean)).sum();
        Moments { mean, variance }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }

    /// Coefficient of variation. Zero for a point mass at zero.
    pub fn cv(&self) -> Result<f64> {
        if self.mean == 0.0 {
            if self.variance > 0.0 {
                return Err(Error::UndefinedCv {
                    variance: self.variance,
                });
            }
            return Ok(0.0);
        }
        Ok(self.std_dev() / self.mean.abs())
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::domain(format!("{what}: probability {p} outside [0,1]")));
    }
    Ok(())
}

fn check_normalized(total: f64, what: &str) -> Result<()> {
    if (total - 1.0).abs() > PMF_TOL {
        return Err(Error::domain(format!(
            "{what}: probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Sorts by value, rejects duplicates and checks normalization.
fn integer_table(mut table: Vec<(u32, f64)>, what: &str) -> Result<Vec<(u32, f64)>> {
    if table.is_empty() {
        return Err(Error::domain(format!("{what}: empty support")));
    }
    table.sort_by_key(|&(v, _)| v);
    for pair in table.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::domain(format!("{what}: duplicate value {}", pair[0].0)));
        }
    }
    for &(_, p) in &table {
        check_probability(p, what)?;
    }
    check_normalized(table.iter().map(|&(_, p)| p).sum(), what)?;
    Ok(table)
}

// ---------------------------------------------------------------------------
// Degrees

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    support: Vec<(u32, f64)>,
}

impl DegreeDistribution {
    pub fn new(support: Vec<(u32, f64)>) -> Result<Self> {
        Ok(DegreeDistribution {
            support: integer_table(support, "degree distribution")?,
        })
    }

    pub fn constant(degree: u32) -> Self {
        DegreeDistribution {
            support: vec![(degree, 1.0)],
        }
    }

    /// Poisson(`lambda`) conditioned on `D <= dmax`.
    ///
    /// `lambda` is the parameter before truncation; the realized mean is
    /// slightly smaller.
    pub fn truncated_poisson(lambda: f64, dmax: u32) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!("truncated Poisson: lambda={lambda} must be > 0")));
        }
        // log of lambda^d / d!, normalized against the largest term
        let mut log_terms = Vec::with_capacity(dmax as usize + 1);
        let mut acc = 0.0;
        log_terms.push(0.0);
        for d in 1..=dmax {
            acc += lambda.ln() - f64::from(d).ln();
            log_terms.push(acc);
        }
        let peak = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_terms.iter().map(|l| (l - peak).exp()).collect();
        let z: f64 = weights.iter().sum();
        let support = weights
            .into_iter()
            .enumerate()
            .map(|(d, w)| (d as u32, w / z))
            .collect();
        Ok(DegreeDistribution { support })
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn pmf(&self, degree: u32) -> f64 {
        self.support
            .binary_search_by_key(&degree, |&(d, _)| d)
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> u32 {
        self.support.last().map(|&(d, _)| d).unwrap_or(0)
    }

    pub fn moments(&self) -> Moments {
        Moments::from_table(self.support.iter().map(|&(d, p)| (f64::from(d), p)))
    }

    pub fn mean(&self) -> f64 {
        self.moments().mean
    }

    /// Law of the degree found at the end of a uniformly chosen edge,
    /// `d p(d) / mu_D`.
    pub fn size_biased(&self) -> Result<DegreeDistribution> {
        let mean = self.mean();
        if mean <= 0.0 {
            return Err(Error::domain("size biasing needs a positive mean degree"));
        }
        let support = self
            .support
            .iter()
            .filter(|&&(d, p)| d > 0 && p > 0.0)
            .map(|&(d, p)| (d, f64::from(d) * p / mean))
            .collect();
        Ok(DegreeDistribution { support })
    }
}

// ---------------------------------------------------------------------------
// Weights

/// Probability table over positive integer edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPmf {
    support: Vec<(u32, f64)>,
}

impl WeightPmf {
    pub fn new(support: Vec<(u32, f64)>) -> Result<Self> {
        let support: Vec<_> = support.into_iter().filter(|&(_, p)| p != 0.0).collect();
        if support.iter().any(|&(w, _)| w == 0) {
            return Err(Error::domain("edge weights must be >= 1"));
        }
        Ok(WeightPmf {
            support: integer_table(support, "weight distribution")?,
        })
    }

    pub fn constant(weight: u32) -> Result<Self> {
        WeightPmf::new(vec![(weight, 1.0)])
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn pmf(&self, weight: u32) -> f64 {
        self.support
            .binary_search_by_key(&weight, |&(w, _)| w)
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn moments(&self) -> Moments {
        Moments::from_table(self.support.iter().map(|&(w, p)| (f64::from(w), p)))
    }

    pub fn is_degenerate(&self) -> bool {
        self.support.len() == 1
    }

    /// Probability generating function `E[s^W]`.
    pub fn pgf(&self, s: f64) -> f64 {
        self.support
            .iter()
            .map(|&(w, p)| p * s.powi(w as i32))
            .sum()
    }
}

/// Negative binomial on `{r, r+1, ...}`: number of trials until the `r`-th
/// success with success probability `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegBinParams {
    pub r: u32,
    pub phi: f64,
}

impl NegBinParams {
    pub fn new(r: u32, phi: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::domain("negative binomial: r must be >= 1"));
        }
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(Error::domain(format!("negative binomial: phi={phi} outside (0,1]")));
        }
        Ok(NegBinParams { r, phi })
    }

    /// Parameterization by mean: `phi = r / mu_w`.
    pub fn from_mean(r: u32, mu_w: f64) -> Result<Self> {
        if f64::from(r) > mu_w {
            return Err(Error::domain(format!(
                "negative binomial: r={r} exceeds mean {mu_w}"
            )));
        }
        NegBinParams::new(r, f64::from(r) / mu_w)
    }

    pub fn mean(&self) -> f64 {
        f64::from(self.r) / self.phi
    }

    pub fn variance(&self) -> f64 {
        f64::from(self.r) * (1.0 - self.phi) / (self.phi * self.phi)
    }

    pub fn cv(&self) -> f64 {
        (1.0 / f64::from(self.r) - 1.0 / self.mean()).max(0.0).sqrt()
    }

    pub fn pgf(&self, s: f64) -> f64 {
        negbin_pgf(s, f64::from(self.r), self.phi)
    }

    /// Pmf truncated at the smallest weight whose cumulative mass reaches
    /// `1 - mass_tol`, then renormalized.
    pub fn truncated_pmf(&self, mass_tol: f64) -> Result<WeightPmf> {
        if !(mass_tol > 0.0 && mass_tol < 1.0) {
            return Err(Error::domain(format!("mass_tol={mass_tol} outside (0,1)")));
        }
        let r = self.r;
        let q = 1.0 - self.phi;
        let mut p = (f64::from(r) * self.phi.ln()).exp();
        let mut w = r;
        let mut cumulative = 0.0;
        let mut table = Vec::new();
        loop {
            table.push((w, p));
            cumulative += p;
            if cumulative >= 1.0 - mass_tol || q == 0.0 {
                break;
            }
            // P(w+1) / P(w) = w / (w - r + 1) * (1 - phi)
            p *= f64::from(w) / f64::from(w - r + 1) * q;
            w += 1;
        }
        let total: f64 = table.iter().map(|&(_, p)| p).sum();
        WeightPmf::new(table.into_iter().map(|(w, p)| (w, p / total)).collect())
    }
}

/// `(s phi / (1 - s (1 - phi)))^r`; accepts real `r > 0`.
pub fn negbin_pgf(s: f64, r: f64, phi: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    (s * phi / (1.0 - s * (1.0 - phi))).powf(r)
}

/// Negative binomial weights with mean `mu_w`, shared by every degree.
pub fn make_negbin_weight(r: u32, mu_w: f64, mass_tol: f64) -> Result<WeightKernel> {
    let pmf = NegBinParams::from_mean(r, mu_w)?.truncated_pmf(mass_tol)?;
    Ok(WeightKernel::degree_independent(pmf))
}

/// Conditional weight law `q(w | d)`.
///
/// Either one row shared by all degrees, or an explicit row per degree.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightKernel {
    shared: Option<WeightPmf>,
    rows: BTreeMap<u32, WeightPmf>,
}

impl WeightKernel {
    pub fn degree_independent(pmf: WeightPmf) -> Self {
        WeightKernel {
            shared: Some(pmf),
            rows: BTreeMap::new(),
        }
    }

    pub fn unweighted() -> Self {
        WeightKernel::degree_independent(WeightPmf {
            support: vec![(1, 1.0)],
        })
    }

    pub fn from_rows(rows: BTreeMap<u32, WeightPmf>) -> Self {
        WeightKernel { shared: None, rows }
    }

    /// Two weights `low < high` with `q(low | d) = p_low(d)` for every
    /// positive degree in `degrees`.
    pub fn two_point_conditional<F>(
        low: u32,
        high: u32,
        degrees: &DegreeDistribution,
        p_low: F,
    ) -> Result<Self>
    where
        F: Fn(u32) -> f64,
    {
        if low == high {
            return Err(Error::domain("two-point weights must differ"));
        }
        let mut rows = BTreeMap::new();
        for &(d, _) in degrees.support() {
            if d == 0 {
                continue;
            }
            let p = p_low(d);
            check_probability(p, &format!("q({low}|{d})"))?;
            rows.insert(d, WeightPmf::new(vec![(low, p), (high, 1.0 - p)])?);
        }
        Ok(WeightKernel::from_rows(rows))
    }

    pub fn row(&self, degree: u32) -> Option<&WeightPmf> {
        self.rows.get(&degree).or(self.shared.as_ref())
    }

    /// `q(w | d)`, zero when the row is missing.
    pub fn q(&self, weight: u32, degree: u32) -> f64 {
        self.row(degree).map_or(0.0, |row| row.pmf(weight))
    }

    /// Every weight with positive probability in some row.
    pub fn weights(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self
            .shared
            .iter()
            .chain(self.rows.values())
            .flat_map(|row| row.support().iter().map(|&(w, _)| w))
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Every positive degree carried by `degrees` must have a row.
    pub fn check_covers(&self, degrees: &DegreeDistribution) -> Result<()> {
        for &(d, p) in degrees.support() {
            if d > 0 && p > 0.0 && self.row(d).is_none() {
                return Err(Error::config(format!("weight kernel has no row for degree {d}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Traits

/// Susceptibility `x` and infectivity `y` of one atom of the trait law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraitAtom {
    pub x: f64,
    pub y: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraitDistribution {
    atoms: Vec<TraitAtom>,
}

impl TraitDistribution {
    /// Merges atoms at identical `(x, y)` and drops zero-mass atoms.
    pub fn new(atoms: Vec<TraitAtom>) -> Result<Self> {
        let mut merged: Vec<TraitAtom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            if !(0.0..=1.0).contains(&atom.x) || !(0.0..=1.0).contains(&atom.y) {
                return Err(Error::domain(format!(
                    "trait atom ({}, {}) outside [0,1]^2",
                    atom.x, atom.y
                )));
            }
            check_probability(atom.prob, "trait distribution")?;
            if atom.prob == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|a| a.x == atom.x && a.y == atom.y) {
                Some(existing) => existing.prob += atom.prob,
                None => merged.push(atom),
            }
        }
        if merged.is_empty() {
            return Err(Error::domain("trait distribution: no atom with positive mass"));
        }
        check_normalized(merged.iter().map(|a| a.prob).sum(), "trait distribution")?;
        Ok(TraitDistribution { atoms: merged })
    }

    pub fn constant(x: f64, y: f64) -> Result<Self> {
        TraitDistribution::new(vec![TraitAtom { x, y, prob: 1.0 }])
    }

    /// Four atoms `{mu_x ± delta_x} x {mu_y ± delta_y}` with `delta = mu cv`,
    /// mass `(1 + rho)/4` on the concordant corners and `(1 - rho)/4` on the
    /// discordant ones. Marginal means, CVs and the correlation come out equal
    /// to the inputs.
    pub fn two_point(mu_x: f64, cv_x: f64, mu_y: f64, cv_y: f64, rho: f64) -> Result<Self> {
        for (name, mu) in [("mu_x", mu_x), ("mu_y", mu_y)] {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::domain(format!("{name}={mu} outside (0,1)")));
            }
        }
        for (name, cv) in [("cv_x", cv_x), ("cv_y", cv_y)] {
            if !(cv >= 0.0) {
                return Err(Error::domain(format!("{name}={cv} must be >= 0")));
            }
        }
        if !(rho.abs() <= 1.0) {
            return Err(Error::domain(format!("correlation {rho} outside [-1,1]")));
        }
        let corners = |mu: f64, cv: f64, name: &str| -> Result<(f64, f64)> {
            let delta = mu * cv;
            let snap = |v: f64| {
                if v.abs() < PMF_TOL {
                    0.0
                } else if (v - 1.0).abs() < PMF_TOL {
                    1.0
                } else {
                    v
                }
            };
            let (lo, hi) = (snap(mu - delta), snap(mu + delta));
            if lo < 0.0 || hi > 1.0 {
                return Err(Error::domain(format!(
                    "{name}: atoms {lo} and {hi} outside [0,1] (mu={mu}, cv={cv})"
                )));
            }
            Ok((lo, hi))
        };
        let (x_lo, x_hi) = corners(mu_x, cv_x, "susceptibility")?;
        let (y_lo, y_hi) = corners(mu_y, cv_y, "infectivity")?;
        let same = (1.0 + rho) / 4.0;
        let cross = (1.0 - rho) / 4.0;
        TraitDistribution::new(vec![
            TraitAtom { x: x_lo, y: y_lo, prob: same },
            TraitAtom { x: x_hi, y: y_hi, prob: same },
            TraitAtom { x: x_lo, y: y_hi, prob: cross },
            TraitAtom { x: x_hi, y: y_lo, prob: cross },
        ])
    }

    pub fn atoms(&self) -> &[TraitAtom] {
        &self.atoms
    }

    pub fn x_moments(&self) -> Moments {
        Moments::from_table(self.atoms.iter().map(|a| (a.x, a.prob)))
    }

    pub fn y_moments(&self) -> Moments {
        Moments::from_table(self.atoms.iter().map(|a| (a.y, a.prob)))
    }

    pub fn mean_xy(&self) -> f64 {
        self.atoms.iter().map(|a| a.x * a.y * a.prob).sum()
    }

    /// Pearson correlation of `X` and `Y`; `None` if either is degenerate.
    pub fn correlation(&self) -> Option<f64> {
        let (mx, my) = (self.x_moments(), self.y_moments());
        if mx.variance <= 0.0 || my.variance <= 0.0 {
            return None;
        }
        let cov: f64 = self
            .atoms
            .iter()
            .map(|a| a.prob * (a.x - mx.mean) * (a.y - my.mean))
            .sum();
        Some(cov / (mx.std_dev() * my.std_dev()))
    }

    /// True when every atom has `x == y`, so transmission is reciprocal.
    pub fn is_symmetric(&self) -> bool {
        self.atoms.iter().all(|a| a.x == a.y)
    }
}

/// Shorthand for [`TraitDistribution::two_point`].
pub fn make_two_point_trait(
    mu_x: f64,
    cv_x: f64,
    mu_y: f64,
    cv_y: f64,
    rho: f64,
) -> Result<TraitDistribution> {
    TraitDistribution::two_point(mu_x, cv_x, mu_y, cv_y, rho)
}

/// Shorthand for [`DegreeDistribution::truncated_poisson`].
pub fn make_truncated_poisson(lambda: f64, dmax: u32) -> Result<DegreeDistribution> {
    DegreeDistribution::truncated_poisson(lambda, dmax)
}
