//! Parameter sweeps producing one CSV row per grid point.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    asymptotic_gain, hidden_expected, mean_interference, success_prob_asappp, AnalysisOptions,
    KernelContext,
};
use crate::cli::config::config_hash;
use crate::pointprocess::{intensity, NetworkConfig, Thinning};
use crate::sim::{ccdf, hidden_mc, intensity_mc, interference_mc, sir_samples, InterferenceEstimator};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Intensity,
    Interference,
    Gain,
    Success,
    Throughput,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    LambdaP,
    SirThresholdDb,
}

/// The `[experiment]` table; omitted fields take [`ExperimentPlan::default_for`] values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub id: Option<String>,
    pub quantities: Option<Vec<Quantity>>,
    pub sweep: Option<SweepVar>,
    pub grid: Option<Vec<f64>>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub monte_carlo: Option<bool>,
    pub replications: Option<usize>,
    pub ccdf_replications: Option<usize>,
    pub seed: Option<u64>,
    pub window: Option<f64>,
    pub qmc_points: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub id: String,
    pub config: NetworkConfig,
    pub quantities: Vec<Quantity>,
    pub sweep: SweepVar,
    pub grid: Vec<f64>,
    pub monte_carlo: bool,
    /// Replications for intensity, interference and hidden-node estimates.
    pub replications: usize,
    /// Replications for SIR ccdf points.
    pub ccdf_replications: usize,
    pub seed: u64,
    /// Side of the square observation window for intensity estimates, m.
    pub window: f64,
    pub qmc_points: usize,
    pub output: Option<PathBuf>,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(Error::invalid("experiment.grid", "need 0 < min ≤ max and at least one point"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect())
}

impl ExperimentPlan {
    pub fn default_for(config: NetworkConfig) -> Self {
        Self {
            id: "sweep".into(),
            config,
            quantities: vec![Quantity::Intensity, Quantity::Interference, Quantity::Gain, Quantity::Success, Quantity::Throughput, Quantity::Hidden],
            sweep: SweepVar::LambdaP,
            grid: log_grid(1e-5, 1e-2, 13).expect("valid default grid"),
            monte_carlo: true,
            replications: 2000,
            ccdf_replications: 10_000,
            seed: 1,
            window: 2000.0,
            qmc_points: AnalysisOptions::default().qmc_points,
            output: None,
        }
    }

    pub fn from_section(config: NetworkConfig, s: &ExperimentSection) -> Result<Self> {
        let mut p = Self::default_for(config);
        if let Some(id) = &s.id {
            p.id = id.clone();
        }
        if let Some(q) = &s.quantities {
            p.quantities = q.clone();
        }
        if let Some(v) = s.sweep {
            p.sweep = v;
            if v == SweepVar::SirThresholdDb {
                p.grid = (-10..=10).step_by(5).map(|x| x as f64).collect();
            }
        }
        if let Some(g) = &s.grid {
            p.grid = g.clone();
        } else if s.grid_min.is_some() || s.grid_max.is_some() || s.grid_points.is_some() {
            p.grid = log_grid(s.grid_min.unwrap_or(1e-5), s.grid_max.unwrap_or(1e-2), s.grid_points.unwrap_or(13))?;
        }
        p.monte_carlo = s.monte_carlo.unwrap_or(p.monte_carlo);
        p.replications = s.replications.unwrap_or(p.replications);
        p.ccdf_replications = s.ccdf_replications.unwrap_or(p.ccdf_replications);
        p.seed = s.seed.unwrap_or(p.seed);
        p.window = s.window.unwrap_or(p.window);
        p.qmc_points = s.qmc_points.unwrap_or(p.qmc_points);
        p.output = s.output.clone();
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("experiment.grid", "must not be empty"));
        }
        if self.sweep == SweepVar::LambdaP && self.grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::invalid("experiment.grid", "intensities must be positive"));
        }
        if self.replications == 0 || self.ccdf_replications == 0 {
            return Err(Error::invalid("experiment.replications", "must be at least 1"));
        }
        if !(self.window > 0.0) {
            return Err(Error::invalid("experiment.window", "must be positive"));
        }
        self.config.validate()
    }
}

/// One grid point. Empty cells are quantities that were not requested or
/// failed; `error` names the first failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub label: String,
    pub config_hash: String,
    pub seed: u64,
    pub thinning: &'static str,
    pub lambda_p: f64,
    pub sir_threshold_db: f64,
    pub v_o: f64,
    pub intensity: Option<f64>,
    pub intensity_mc: Option<f64>,
    pub intensity_se: Option<f64>,
    pub interference: Option<f64>,
    pub interference_mc: Option<f64>,
    pub interference_se: Option<f64>,
    pub estimator: Option<&'static str>,
    pub gain: Option<f64>,
    pub success: Option<f64>,
    pub success_mc: Option<f64>,
    pub success_se: Option<f64>,
    pub throughput: Option<f64>,
    pub hidden: Option<f64>,
    pub hidden_mc: Option<f64>,
    pub hidden_se: Option<f64>,
    pub error: Option<String>,
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Evaluate the plan. Failures at a grid point are reported in that row's
/// `error` column and the sweep continues.
/// The interference estimators draw one candidate per sample instead of a
/// whole realization, so a replication buys this many samples.
const CANDIDATES_PER_REPLICATION: usize = 100;

pub fn run_experiment(plan: &ExperimentPlan) -> Result<Vec<Row>> {
    run_labeled(plan, "")
}

pub fn run_labeled(plan: &ExperimentPlan, label: &str) -> Result<Vec<Row>> {
    plan.validate()?;
    let options = AnalysisOptions { qmc_points: plan.qmc_points, ..AnalysisOptions::default() };
    let base = KernelContext::with_options(&plan.config, options)?;
    let wants = |q: Quantity| plan.quantities.contains(&q);
    let mut rows = Vec::with_capacity(plan.grid.len());
    for (i, &x) in plan.grid.iter().enumerate() {
        let (ctx, threshold) = match plan.sweep {
            SweepVar::LambdaP => (base.with_lambda(x), plan.config.sir_threshold),
            SweepVar::SirThresholdDb => (base.clone(), db_to_linear(x)),
        };
        let cfg = NetworkConfig { sir_threshold: threshold, ..ctx.cfg.clone() };
        let seed = plan.seed.wrapping_add(i as u64);
        let lb = intensity(cfg.thinning, cfg.lambda_p, ctx.v_o);
        let mut row = Row {
            experiment: plan.id.clone(),
            label: label.to_string(),
            config_hash: config_hash(&cfg),
            seed,
            thinning: cfg.thinning.label(),
            lambda_p: cfg.lambda_p,
            sir_threshold_db: linear_to_db(threshold),
            v_o: ctx.v_o,
            intensity: Some(lb),
            intensity_mc: None,
            intensity_se: None,
            interference: None,
            interference_mc: None,
            interference_se: None,
            estimator: None,
            gain: None,
            success: None,
            success_mc: None,
            success_se: None,
            throughput: None,
            hidden: None,
            hidden_mc: None,
            hidden_se: None,
            error: None,
        };
        let note = |e: Error, row: &mut Row| {
            row.error.get_or_insert_with(|| e.to_string());
        };
        if wants(Quantity::Interference) {
            match mean_interference(&ctx, cfg.los_radius) {
                Ok(v) => row.interference = Some(v),
                Err(e) => note(e, &mut row),
            }
        }
        if wants(Quantity::Gain) {
            match asymptotic_gain(&ctx) {
                Ok(v) => row.gain = Some(v),
                Err(e) => note(e, &mut row),
            }
        }
        if wants(Quantity::Success) || wants(Quantity::Throughput) {
            match success_prob_asappp(threshold, &ctx) {
                Ok(p) => {
                    row.success = Some(p);
                    if wants(Quantity::Throughput) {
                        row.throughput = Some(p * lb);
                    }
                }
                Err(e) => note(e, &mut row),
            }
        }
        if wants(Quantity::Hidden) {
            match hidden_expected(&ctx) {
                Ok(v) => row.hidden = Some(v),
                Err(e) => note(e, &mut row),
            }
        }
        if plan.monte_carlo {
            if wants(Quantity::Intensity) {
                match intensity_mc(&cfg, plan.window, plan.replications, seed) {
                    Ok(e) => {
                        row.intensity_mc = Some(e.mean);
                        row.intensity_se = Some(e.std_err);
                    }
                    Err(e) => note(e, &mut row),
                }
            }
            if wants(Quantity::Interference) {
                let est = InterferenceEstimator::auto(&cfg);
                match interference_mc(&cfg, plan.replications * CANDIDATES_PER_REPLICATION, seed, est) {
                    Ok(e) => {
                        row.interference_mc = Some(e.mean);
                        row.interference_se = Some(e.std_err);
                        row.estimator = Some(est.label());
                    }
                    Err(e) => note(e, &mut row),
                }
            }
            if wants(Quantity::Success) {
                match sir_samples(&cfg, plan.ccdf_replications, seed) {
                    Ok(s) => {
                        let e = ccdf(&s, threshold);
                        row.success_mc = Some(e.mean);
                        row.success_se = Some(e.std_err);
                    }
                    Err(e) => note(e, &mut row),
                }
            }
            if wants(Quantity::Hidden) {
                match hidden_mc(&cfg, plan.replications, seed) {
                    Ok(e) => {
                        row.hidden_mc = Some(e.mean);
                        row.hidden_se = Some(e.std_err);
                    }
                    Err(e) => note(e, &mut row),
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rows<W: std::io::Write>(rows: &[Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows_to(rows: &[Row], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_rows(rows, std::fs::File::create(path)?)
}

/// The same plan for both thinning rules.
pub fn both_thinnings(plan: &ExperimentPlan) -> [ExperimentPlan; 2] {
    [Thinning::TypeI, Thinning::TypeII].map(|t| ExperimentPlan { config: plan.config.with_thinning(t), ..plan.clone() })
}
