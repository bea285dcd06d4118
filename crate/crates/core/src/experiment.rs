//! Parameter sweeps over the model, with built-in presets for the six
//! reference figures and CSV / plot-script output.
//!
//! A configuration is one JSON document, e.g.
//!
//! ```json
//! {
//!   "id": "fig1",
//!   "degree": { "kind": "constant", "degree": 5 },
//!   "weight": { "kind": "constant", "weight": 1 },
//!   "traits": { "kind": "two_point", "mu_x": 0.2, "cv_x": 0.0, "mu_y": 0.2, "cv_y": 0.0, "rho": 0.7 },
//!   "sweep": { "parameter": "cv", "values": [0.0, 0.5, 1.0] },
//!   "mode": "analytic",
//!   "quantities": ["r0"],
//!   "simulation": { "n": 10000, "replicates": 200, "seed": 1 }
//! }
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    build_offspring_matrix, r0_unweighted_from, solve_extinction, spectral_radius,
    EXTINCTION_MAX_ITER, EXTINCTION_TOL, SPECTRAL_MAX_ITER, SPECTRAL_TOL,
};
use crate::distributions::{
    DegreeDistribution, NegBinParams, TraitAtom, TraitDistribution, WeightKernel, WeightPmf,
    DEFAULT_MASS_TOL,
};
use crate::epidemic::{estimate_outbreak_stats, SimulationSetup, ThresholdRule};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeSpec {
    Constant { degree: u32 },
    TruncatedPoisson { lambda: f64, dmax: u32 },
    ExplicitPmf { pmf: Vec<(u32, f64)> },
}

impl DegreeSpec {
    pub fn build(&self) -> Result<DegreeDistribution> {
        match self {
            DegreeSpec::Constant { degree } => Ok(DegreeDistribution::constant(*degree)),
            DegreeSpec::TruncatedPoisson { lambda, dmax } => {
                DegreeDistribution::truncated_poisson(*lambda, *dmax)
            }
            DegreeSpec::ExplicitPmf { pmf } => DegreeDistribution::new(pmf.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        weight: u32,
    },
    /// Negative binomial with integer `r` and mean `mean`, shared by all degrees.
    NegBinomial {
        r: u32,
        mean: f64,
        #[serde(default = "default_mass_tol")]
        mass_tol: f64,
    },
    /// `q(low | d) = a + b d^c`, `q(high | d) = 1 - q(low | d)`.
    TwoPointConditional {
        low: u32,
        high: u32,
        a: f64,
        b: f64,
        c: f64,
    },
    /// One row shared by all degrees.
    ExplicitPmf { pmf: Vec<(u32, f64)> },
}

fn default_mass_tol() -> f64 {
    DEFAULT_MASS_TOL
}

impl WeightSpec {
    pub fn build(&self, degrees: &DegreeDistribution) -> Result<WeightKernel> {
        let kernel = match self {
            WeightSpec::Constant { weight } => {
                WeightKernel::degree_independent(WeightPmf::constant(*weight)?)
            }
            WeightSpec::NegBinomial { r, mean, mass_tol } => WeightKernel::degree_independent(
                NegBinParams::from_mean(*r, *mean)?.truncated_pmf(*mass_tol)?,
            ),
            WeightSpec::TwoPointConditional { low, high, a, b, c } => {
                WeightKernel::two_point_conditional(*low, *high, degrees, |d| {
                    a + b * f64::from(d).powf(*c)
                })?
            }
            WeightSpec::ExplicitPmf { pmf } => {
                WeightKernel::degree_independent(WeightPmf::new(pmf.clone())?)
            }
        };
        kernel.check_covers(degrees)?;
        Ok(kernel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraitSpec {
    Constant { x: f64, y: f64 },
    TwoPoint { mu_x: f64, cv_x: f64, mu_y: f64, cv_y: f64, rho: f64 },
    /// Atoms `(x, y, probability)`.
    ExplicitPmf { atoms: Vec<(f64, f64, f64)> },
}

impl TraitSpec {
    pub fn build(&self) -> Result<TraitDistribution> {
        match self {
            TraitSpec::Constant { x, y } => TraitDistribution::constant(*x, *y),
            TraitSpec::TwoPoint { mu_x, cv_x, mu_y, cv_y, rho } => {
                TraitDistribution::two_point(*mu_x, *cv_x, *mu_y, *cv_y, *rho)
            }
            TraitSpec::ExplicitPmf { atoms } => TraitDistribution::new(
                atoms
                    .iter()
                    .map(|&(x, y, prob)| TraitAtom { x, y, prob })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `cv_x = cv_y`
    Cv,
    CvX,
    CvY,
    Rho,
    /// Negative binomial `r` at fixed mean weight.
    NegbinR,
}

impl SweepParameter {
    fn columns(&self) -> &'static [&'static str] {
        match self {
            SweepParameter::Cv => &["cv"],
            SweepParameter::CvX => &["cv_x"],
            SweepParameter::CvY => &["cv_y"],
            SweepParameter::Rho => &["rho"],
            SweepParameter::NegbinR => &["r", "cv_w"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    pub fn analytic(&self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn simulate(&self) -> bool {
        matches!(self, Mode::Simulate | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    R0,
    R0ClosedForm,
    Pi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            n: 10_000,
            replicates: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub degree: DegreeSpec,
    pub weight: WeightSpec,
    pub traits: TraitSpec,
    pub sweep: Sweep,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_quantities")]
    pub quantities: Vec<Quantity>,
    #[serde(default)]
    pub simulation: SimulationSettings,
    /// Output directory; the CLI `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_quantities() -> Vec<Quantity> {
    vec![Quantity::R0]
}

/// Distributions at one grid point.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub degrees: DegreeDistribution,
    pub kernel: WeightKernel,
    pub traits: TraitDistribution,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn wants(&self, q: Quantity) -> bool {
        self.quantities.contains(&q)
    }

    /// Trait and weight specs with the sweep value substituted.
    fn specs_at(&self, value: f64) -> Result<(WeightSpec, TraitSpec)> {
        let mut weight = self.weight.clone();
        let mut traits = self.traits.clone();
        match (self.sweep.parameter, &mut traits, &mut weight) {
            (SweepParameter::Cv, TraitSpec::TwoPoint { cv_x, cv_y, .. }, _) => {
                *cv_x = value;
                *cv_y = value;
            }
            (SweepParameter::CvX, TraitSpec::TwoPoint { cv_x, .. }, _) => *cv_x = value,
            (SweepParameter::CvY, TraitSpec::TwoPoint { cv_y, .. }, _) => *cv_y = value,
            (SweepParameter::Rho, TraitSpec::TwoPoint { rho, .. }, _) => *rho = value,
            (SweepParameter::NegbinR, _, WeightSpec::NegBinomial { r, .. }) => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::domain(format!("negative binomial r={value} must be a positive integer")));
                }
                *r = value as u32;
            }
            (SweepParameter::NegbinR, _, _) => {
                return Err(Error::config("sweep over negbin_r needs weight kind neg_binomial"))
            }
            (p, _, _) => {
                return Err(Error::config(format!("sweep over {p:?} needs trait kind two_point")))
            }
        }
        Ok((weight, traits))
    }

    pub fn scenario(&self, value: f64) -> Result<Scenario> {
        let (weight, traits) = self.specs_at(value)?;
        let degrees = self.degree.build()?;
        let kernel = weight.build(&degrees)?;
        Ok(Scenario {
            degrees,
            kernel,
            traits: traits.build()?,
        })
    }

    /// Checks everything that can be checked without running; collects
    /// every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            problems.push(format!("id: {:?} is not a usable file stem", self.id));
        }
        if self.sweep.values.is_empty() {
            problems.push("sweep.values: grid is empty".to_string());
        }
        if self.quantities.is_empty() && !self.mode.simulate() {
            problems.push("quantities: nothing to compute in analytic mode".to_string());
        }
        if self.mode.simulate() {
            if self.simulation.n == 0 {
                problems.push("simulation.n: must be >= 1".to_string());
            }
            if self.simulation.replicates == 0 {
                problems.push("simulation.replicates: must be >= 1".to_string());
            }
        }
        if let Err(e) = self.degree.build() {
            problems.push(format!("degree: {e}"));
        } else if self.degree.build().map(|d| d.mean()).unwrap_or(0.0) <= 0.0 {
            problems.push("degree: mean degree must be positive".to_string());
        }
        for (k, &v) in self.sweep.values.iter().enumerate() {
            if let Err(e) = self.scenario(v) {
                problems.push(format!("sweep.values[{k}]={v}: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }

    /// Output columns, fixed by the configuration alone.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self
            .sweep
            .parameter
            .columns()
            .iter()
            .map(|s| s.to_string())
            .collect();
        if self.wants(Quantity::R0) {
            cols.push("r0".into());
        }
        if self.wants(Quantity::R0ClosedForm) {
            cols.push("r0_closed_form".into());
        }
        if self.wants(Quantity::Pi) {
            cols.push("pi_analytic".into());
        }
        if self.mode.simulate() || self.wants(Quantity::Pi) {
            cols.push("pi_hat".into());
            cols.push("tau_hat".into());
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowDiagnostics {
    pub extinction_iterations: Option<usize>,
    pub extinction_residual: Option<f64>,
    pub majors: Option<usize>,
    pub pi_half_width: Option<f64>,
    pub tau_half_width: Option<f64>,
    pub realized_mean_degree: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// Values of the sweep columns.
    pub params: Vec<f64>,
    pub r0: Option<f64>,
    pub r0_closed_form: Option<f64>,
    pub pi_analytic: Option<f64>,
    pub pi_hat: Option<f64>,
    pub tau_hat: Option<f64>,
    pub diagnostics: RowDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub id: String,
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Values of a named column, `None` where missing.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let n_params = self.rows.first().map_or(0, |r| r.params.len());
        let index = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| {
                    if index < n_params {
                        Some(r.params[index])
                    } else {
                        match name {
                            "r0" => r.r0,
                            "r0_closed_form" => r.r0_closed_form,
                            "pi_analytic" => r.pi_analytic,
                            "pi_hat" => r.pi_hat,
                            "tau_hat" => r.tau_hat,
                            _ => None,
                        }
                    }
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        let cols: Vec<Vec<Option<f64>>> = self
            .columns
            .iter()
            .map(|c| self.column(c).expect("own column"))
            .collect();
        for i in 0..self.rows.len() {
            let cells: Vec<String> = cols
                .iter()
                .map(|c| c[i].map(|v| v.to_string()).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Gnuplot script drawing every non-sweep column against the first.
    pub fn plot_script(&self) -> String {
        let csv = format!("{}.csv", self.id);
        let n_params = self.rows.first().map_or(1, |r| r.params.len());
        let x_index = if self.columns.first().map(String::as_str) == Some("r") && n_params > 1 {
            2 // plot negative binomial sweeps against cv_w
        } else {
            1
        };
        let mut s = String::new();
        s.push_str("set datafile separator ','\n");
        s.push_str("set key autotitle columnhead\n");
        s.push_str(&format!("set xlabel '{}'\n", self.columns[x_index - 1]));
        s.push_str("set terminal pngcairo size 800,600\n");
        s.push_str(&format!("set output '{}.png'\n", self.id));
        let series: Vec<String> = (n_params + 1..=self.columns.len())
            .map(|c| format!("'{csv}' using {x_index}:{c} with linespoints"))
            .collect();
        s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
        s
    }
}

fn grid_row(config: &ExperimentConfig, index: usize, value: f64) -> Result<ResultRow> {
    let scenario = config.scenario(value)?;
    let mut row = ResultRow {
        params: vec![value],
        r0: None,
        r0_closed_form: None,
        pi_analytic: None,
        pi_hat: None,
        tau_hat: None,
        diagnostics: RowDiagnostics {
            realized_mean_degree: scenario.degrees.mean(),
            ..RowDiagnostics::default()
        },
    };
    if config.sweep.parameter == SweepParameter::NegbinR {
        let cv_w = scenario
            .kernel
            .row(scenario.degrees.max_degree())
            .expect("validated kernel")
            .moments()
            .cv()?;
        row.params.push(cv_w);
    }

    if config.mode.analytic() {
        let m = build_offspring_matrix(&scenario.degrees, &scenario.kernel, &scenario.traits)?;
        let r0 = spectral_radius(&m, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?;
        if config.wants(Quantity::R0) {
            row.r0 = Some(r0);
        }
        if config.wants(Quantity::R0ClosedForm) && scenario.kernel.weights() == [1] {
            row.r0_closed_form = Some(r0_unweighted_from(&scenario.degrees, &scenario.traits)?);
        }
        if config.wants(Quantity::Pi) {
            let sol = solve_extinction(&m, r0, EXTINCTION_TOL, EXTINCTION_MAX_ITER)?;
            row.pi_analytic = Some(sol.pi);
            row.diagnostics.extinction_iterations = Some(sol.iterations);
            row.diagnostics.extinction_residual = Some(sol.residual);
        }
    }

    if config.mode.simulate() {
        let setup = SimulationSetup {
            n: config.simulation.n,
            degrees: scenario.degrees,
            kernel: scenario.kernel,
            traits: scenario.traits,
        };
        let stats = estimate_outbreak_stats(
            &setup,
            config.simulation.replicates,
            ThresholdRule::Default,
            derive_seed(config.simulation.seed, index as u64),
        )?;
        row.pi_hat = Some(stats.pi_hat);
        row.tau_hat = stats.tau_hat;
        row.diagnostics.majors = Some(stats.majors);
        row.diagnostics.pi_half_width = Some(stats.pi_half_width);
        row.diagnostics.tau_half_width = stats.tau_half_width;
    }
    Ok(row)
}

/// Evaluates every grid point; rows come back in grid order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let rows = config
        .sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(k, &v)| grid_row(config, k, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable {
        id: config.id.clone(),
        columns: config.columns(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub plot: PathBuf,
}

/// Writes `<dir>/<id>.csv` and `<dir>/<id>.plot`.
pub fn emit_outputs(table: &ResultTable, dir: &Path) -> Result<EmittedFiles> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(format!("{}.csv", table.id));
    let plot = dir.join(format!("{}.plot", table.id));
    fs::File::create(&csv)
        .and_then(|mut f| f.write_all(table.to_csv().as_bytes()))
        .map_err(io_err(&csv))?;
    fs::File::create(&plot)
        .and_then(|mut f| f.write_all(table.plot_script().as_bytes()))
        .map_err(io_err(&plot))?;
    Ok(EmittedFiles { csv, plot })
}

// ---------------------------------------------------------------------------
// Presets

pub const PRESET_IDS: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

/// `points` evenly spaced values on `[lo, hi]`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Largest CV keeping `mu (1 +/- cv)` inside `[0, 1]`.
pub fn max_feasible_cv(mu: f64) -> f64 {
    1.0f64.min((1.0 - mu) / mu)
}

const GRID_POINTS: usize = 21;

fn two_point(mu: f64, rho: f64, cv_y: f64) -> TraitSpec {
    TraitSpec::TwoPoint {
        mu_x: mu,
        cv_x: 0.0,
        mu_y: mu,
        cv_y,
        rho,
    }
}

fn truncated_poisson_4_15() -> DegreeSpec {
    DegreeSpec::TruncatedPoisson {
        lambda: 4.0,
        dmax: 15,
    }
}

fn preset_base(id: &str, degree: DegreeSpec, weight: WeightSpec, traits: TraitSpec, sweep: Sweep) -> ExperimentConfig {
    ExperimentConfig {
        id: id.to_string(),
        degree,
        weight,
        traits,
        sweep,
        mode: Mode::Analytic,
        quantities: vec![Quantity::R0],
        simulation: SimulationSettings::default(),
        output: None,
    }
}

pub fn preset(id: &str) -> Option<ExperimentConfig> {
    let cv_sweep = |parameter, mu: f64| Sweep {
        parameter,
        values: linspace(0.0, max_feasible_cv(mu), GRID_POINTS),
    };
    let config = match id {
        // D = 5, W = 1, mu_X = mu_Y = 0.2, rho = 0.7, CV_X = CV_Y swept
        "fig1" => preset_base(
            id,
            DegreeSpec::Constant { degree: 5 },
            WeightSpec::Constant { weight: 1 },
            two_point(0.2, 0.7, 0.0),
            cv_sweep(SweepParameter::Cv, 0.2),
        ),
        // D = 5, negative binomial weights with mean 10, X = Y = sqrt(0.5)
        "fig2" => preset_base(
            id,
            DegreeSpec::Constant { degree: 5 },
            WeightSpec::NegBinomial {
                r: 1,
                mean: 10.0,
                mass_tol: DEFAULT_MASS_TOL,
            },
            TraitSpec::Constant {
                x: 0.5f64.sqrt(),
                y: 0.5f64.sqrt(),
            },
            Sweep {
                parameter: SweepParameter::NegbinR,
                values: (1..=10).map(f64::from).collect(),
            },
        ),
        // degree and weight negatively correlated: q(1|d) = 1 - d^-2
        "fig3" => preset_base(
            id,
            truncated_poisson_4_15(),
            WeightSpec::TwoPointConditional {
                low: 1,
                high: 10,
                a: 1.0,
                b: -1.0,
                c: -2.0,
            },
            two_point(0.5, 0.8, 0.0),
            cv_sweep(SweepParameter::Cv, 0.5),
        ),
        // independent weights q(1) = q(10) = 1/2, CV_Y = 0.3 fixed
        "fig4" => preset_base(
            id,
            truncated_poisson_4_15(),
            WeightSpec::TwoPointConditional {
                low: 1,
                high: 10,
                a: 0.5,
                b: 0.0,
                c: 0.0,
            },
            two_point(0.5, 0.8, 0.3),
            cv_sweep(SweepParameter::CvX, 0.5),
        ),
        // degree and weight positively correlated: q(1|d) = d^-2
        "fig5" => preset_base(
            id,
            truncated_poisson_4_15(),
            WeightSpec::TwoPointConditional {
                low: 1,
                high: 10,
                a: 0.0,
                b: 1.0,
                c: -2.0,
            },
            two_point(0.5, 0.8, 0.0),
            cv_sweep(SweepParameter::Cv, 0.5),
        ),
        // two symmetric types x = y = mu -/+ delta on a 5-regular graph
        "fig6" => ExperimentConfig {
            quantities: vec![Quantity::R0, Quantity::Pi],
            ..preset_base(
                id,
                DegreeSpec::Constant { degree: 5 },
                WeightSpec::Constant { weight: 1 },
                two_point(0.48, 1.0, 0.0),
                cv_sweep(SweepParameter::Cv, 0.48),
            )
        },
        _ => return None,
    };
    Some(config)
}

pub fn presets() -> Vec<ExperimentConfig> {
    PRESET_IDS.iter().map(|id| preset(id).expect("known preset")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analytic(id: &str) -> ResultTable {
        run_experiment(&preset(id).unwrap()).unwrap()
    }

    fn values(table: &ResultTable, col: &str) -> Vec<f64> {
        table.column(col).unwrap().into_iter().map(|v| v.unwrap()).collect()
    }

    #[test]
    fn preset_parameterizations() {
        let fig3 = preset("fig3").unwrap();
        assert_eq!(fig3.degree, DegreeSpec::TruncatedPoisson { lambda: 4.0, dmax: 15 });
        let fig4 = preset("fig4").unwrap();
        assert!(matches!(fig4.traits, TraitSpec::TwoPoint { cv_y, rho, .. } if cv_y == 0.3 && rho == 0.8));
        assert_eq!(fig4.sweep.parameter, SweepParameter::CvX);
        let fig6 = preset("fig6").unwrap();
        let s = fig6.scenario(0.5).unwrap();
        assert!(s.traits.is_symmetric());
        assert_eq!(s.traits.atoms().len(), 2);
        for a in s.traits.atoms() {
            assert!((a.prob - 0.5).abs() < 1e-15);
            assert!((a.x - 0.24).abs() < 1e-15 || (a.x - 0.72).abs() < 1e-15);
        }
        assert!(preset("fig7").is_none());
        assert_eq!(presets().len(), 6);
    }

    #[test]
    fn fig1_schema_and_shape() {
        let t = analytic("fig1");
        assert_eq!(t.columns, vec!["cv", "r0"]);
        assert_eq!(t.rows.len(), 21);
        let r0 = values(&t, "r0");
        assert!(r0.windows(2).all(|w| w[1] > w[0]));
        assert!(t.to_csv().starts_with("cv,r0\n0,"));
    }

    #[test]
    fn fig2_decreasing_in_cv_w() {
        let t = analytic("fig2");
        assert_eq!(t.columns, vec!["r", "cv_w", "r0"]);
        let cv = values(&t, "cv_w");
        let r0 = values(&t, "r0");
        assert!(cv.windows(2).all(|w| w[1] < w[0]));
        assert!(r0.windows(2).all(|w| w[1] > w[0]));
        assert!(t.plot_script().contains("using 2:3"));
    }

    #[test]
    fn fig6_schema() {
        let t = analytic("fig6");
        assert_eq!(t.columns, vec!["cv", "r0", "pi_analytic", "pi_hat", "tau_hat"]);
        let line = t.to_csv().lines().nth(1).unwrap().to_string();
        assert!(line.ends_with(",0,,"), "{line}");
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut c = preset("fig1").unwrap();
        c.sweep.values.clear();
        c.mode = Mode::Simulate;
        c.simulation.replicates = 0;
        match c.validate() {
            Err(Error::InvalidConfig(list)) => {
                assert!(list.iter().any(|p| p.starts_with("sweep.values")));
                assert!(list.iter().any(|p| p.starts_with("simulation.replicates")));
            }
            other => panic!("{other:?}"),
        }
        let mut c = preset("fig1").unwrap();
        c.sweep.values = vec![0.5, 7.0];
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(v)) if v.len() == 1));
        let mut c = preset("fig1").unwrap();
        c.sweep.parameter = SweepParameter::NegbinR;
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_sweep_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = preset("fig1").unwrap();
        c.sweep.values.clear();
        assert!(run_experiment(&c).is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn json_round_trip() {
        for c in presets() {
            assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        }
        let minimal = r#"{
            "id": "x",
            "degree": {"kind": "explicit_pmf", "pmf": [[2, 0.5], [4, 0.5]]},
            "weight": {"kind": "neg_binomial", "r": 2, "mean": 4.0},
            "traits": {"kind": "explicit_pmf", "atoms": [[0.2, 0.3, 1.0]]},
            "sweep": {"parameter": "negbin_r", "values": [1, 2, 4]}
        }"#;
        let c = ExperimentConfig::from_json(minimal).unwrap();
        assert_eq!(c.mode, Mode::Analytic);
        assert_eq!(c.quantities, vec![Quantity::R0]);
        assert!(run_experiment(&c).is_ok());
        assert!(ExperimentConfig::from_json(r#"{"id": "x"}"#).is_err());
    }

    #[test]
    fn emit_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = analytic("fig1");
        let files = emit_outputs(&t, &dir.path().join("out")).unwrap();
        assert_eq!(fs::read_to_string(&files.csv).unwrap(), t.to_csv());
        let plot = fs::read_to_string(&files.plot).unwrap();
        assert!(plot.contains("'fig1.csv' using 1:2"));
    }

    #[test]
    fn closed_form_column_when_requested() {
        let mut c = preset("fig1").unwrap();
        c.quantities.push(Quantity::R0ClosedForm);
        let t = run_experiment(&c).unwrap();
        for row in &t.rows {
            assert!((row.r0.unwrap() - row.r0_closed_form.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 1.0, 21);
        assert_eq!((g[0], g[20], g.len()), (0.0, 1.0, 21));
        assert_eq!(max_feasible_cv(0.2), 1.0);
        assert!((max_feasible_cv(0.6) - 2.0 / 3.0).abs() < 1e-15);
    }
}
