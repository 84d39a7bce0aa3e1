//! Monte Carlo estimators: retained intensity, mean interference, SIR
//! samples and hidden-node counts under Palm conditioning.
//!
//! Replication `i` of a run seeded with `s` always uses ChaCha stream `i`, so
//! results do not depend on the number of worker threads.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::hidden_count_sim;
use crate::channel::{aggregate_interference, interferer_gain, path_loss, sample_fading, sir_sample};
use crate::geometry::{exclusion_area, union_area, PairGeometry, Petal, Point};
use crate::pointprocess::{
    replication_rng, sample_bipolar_stream, sample_palm_parents, thin, NetworkConfig, Realization, Thinner, Thinning, Window,
};
use crate::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_err: f64::NAN, samples: 0 };
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self { mean, std_err: (var / n as f64).sqrt(), samples: n }
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        Err(Error::invalid("replications", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Retained intensity of the thinned process in a `side × side` window.
pub fn intensity_mc(cfg: &NetworkConfig, side: f64, reps: usize, seed: u64) -> Result<McEstimate> {
    check_reps(reps)?;
    let window = Window::centered(side, side);
    let values: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| sample_bipolar_stream(cfg, window, seed, i).map(|r| thin(&r, cfg).retained_intensity()))
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_samples(&values))
}

/// Palm parents around the typical pair with retention decided only for
/// transmitters within `radius` of `center`; all others are marked dropped.
/// Index 0 is the typical pair.
pub fn palm_local(cfg: &NetworkConfig, center: Point, radius: f64, seed: u64, stream: u64) -> Realization {
    let window = Window::new(
        (center[0] - radius).min(0.0),
        (center[1] - radius).min(0.0),
        (center[0] + radius).max(0.0),
        (center[1] + radius).max(0.0),
    );
    let margin = cfg.guard_margin();
    let mut rng = replication_rng(seed, stream);
    let mut pairs = sample_palm_parents(cfg, &window.expanded(margin), cfg.v_o(), &mut rng);
    let flags: Vec<bool> = {
        let thinner = Thinner::new(&pairs, cfg, cfg.thinning);
        pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                i == 0 || {
                    let t = p.geometry.tx;
                    (t[0] - center[0]).hypot(t[1] - center[1]) <= radius && thinner.is_retained(i)
                }
            })
            .collect()
    };
    for (p, f) in pairs.iter_mut().zip(flags) {
        p.retained = f;
    }
    Realization {
        window,
        margin,
        seed,
        stream,
        typical_mark: pairs[0].time_mark,
        pairs,
        thinning: Some(cfg.thinning),
        typical: Some(0),
    }
}

/// How the interference expectation is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceEstimator {
    /// Simulate the thinned Palm process and sum the retained interferers.
    Direct,
    /// One candidate interferer per sample, placed by importance sampling in
    /// `ln(1+ρ)` around the victim, with the joint retention of the typical
    /// pair and the candidate simulated against a fresh Poisson background.
    /// Normalized by the simulated retention rate of the typical pair.
    TwoPoint,
    /// The candidate is drawn as in `TwoPoint` but the background is
    /// integrated out through Poisson void probabilities of the rasterized
    /// regions; for Type II the two time marks are still sampled.
    Conditional,
}

impl InterferenceEstimator {
    /// `Conditional` when the typical pair survives too rarely for its
    /// retention to be observed directly, `TwoPoint` otherwise. Plain
    /// simulation (`Direct`) converges slowly: rare interferers close to the
    /// victim dominate its variance.
    pub fn auto(cfg: &NetworkConfig) -> Self {
        if cfg.lambda_p * cfg.v_o() > 2.0 {
            InterferenceEstimator::Conditional
        } else {
            InterferenceEstimator::TwoPoint
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InterferenceEstimator::Direct => "direct",
            InterferenceEstimator::TwoPoint => "two_point",
            InterferenceEstimator::Conditional => "conditional",
        }
    }
}

/// Raster cell for the brute-force area checks, m.
#[cfg(test)]
const RASTER_STEP: f64 = 0.5;

/// Axis-aligned box `[x0, x1] × [y0, y1]`.
type Rect = [f64; 4];

fn square_around(c: Point, b: f64) -> Rect {
    [c[0] - b, c[0] + b, c[1] - b, c[1] + b]
}

fn rect_contains(r: &Rect, z: Point) -> bool {
    z[0] >= r[0] && z[0] <= r[1] && z[1] >= r[2] && z[1] <= r[3]
}

/// Midpoint-rule area of `{z ∈ rect : pred(z)}`.
#[cfg(test)]
fn raster_area(rect: &Rect, h: f64, pred: impl Fn(Point) -> bool) -> f64 {
    if rect[1] <= rect[0] || rect[3] <= rect[2] {
        return 0.0;
    }
    let nx = ((rect[1] - rect[0]) / h).ceil() as usize;
    let ny = ((rect[3] - rect[2]) / h).ceil() as usize;
    let mut count = 0usize;
    for ix in 0..nx {
        let x = rect[0] + (ix as f64 + 0.5) * h;
        for iy in 0..ny {
            if pred([x, rect[2] + (iy as f64 + 0.5) * h]) {
                count += 1;
            }
        }
    }
    count as f64 * h * h
}

/// Both petals of one pair.
struct Region([Petal; 2]);

impl Region {
    fn of(pair: &PairGeometry, cfg: &NetworkConfig) -> Self {
        Region([Petal::tx(pair, &cfg.exclusion), Petal::rx(pair, &cfg.exclusion)])
    }

    fn contains(&self, z: Point) -> bool {
        self.0[0].contains(z) || self.0[1].contains(z)
    }
}

/// `|S(j) \ S(o)|` by rasterizing `S(j)` over its bounding square.
#[cfg(test)]
fn exclusive_area(other: &PairGeometry, typical: &PairGeometry, cfg: &NetworkConfig, h: f64) -> f64 {
    let (mine, theirs) = (Region::of(other, cfg), Region::of(typical, cfg));
    let b = cfg.exclusion.bounding_radius(cfg.link_distance);
    raster_area(&square_around(other.tx, b), h, |z| mine.contains(z) && !theirs.contains(z))
}

/// A candidate interferer with its importance weight folded into `factor`:
/// `λ_p · P0 N_t G l(ρ) / q`, `q` the sampling density per `dx dθ/2π`.
struct Candidate {
    pair: PairGeometry,
    factor: f64,
}

fn draw_candidate<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Candidate {
    let ant = &cfg.data_antenna;
    let half_u = if ant.is_omni() { PI } else { ant.half_beamwidth(ant.n_t).min(PI) };
    let span = cfg.los_radius.ln_1p();
    let rho = (span * rng.random::<f64>()).exp_m1();
    let gamma = 2.0 * PI * rng.random::<f64>();
    let u = half_u * (2.0 * rng.random::<f64>() - 1.0);
    let victim = [cfg.link_distance, 0.0];
    let tx = [victim[0] + rho * gamma.cos(), victim[1] + rho * gamma.sin()];
    let pair = PairGeometry::new(tx, gamma + PI + u, cfg.link_distance);
    let power = cfg.p0 * ant.n_t as f64 * interferer_gain(&pair, victim, ant) * path_loss(rho, cfg.alpha);
    let inv_q = span * (1.0 + rho) * rho * 2.0 * half_u;
    Candidate { pair, factor: cfg.lambda_p * power * inv_q }
}

/// Poisson transmitters with uniform marks on the union of two rectangles.
fn background<R: Rng + ?Sized>(lambda: f64, a: &Rect, b: &Rect, rng: &mut R) -> Vec<(Point, f64)> {
    let mut out = Vec::new();
    for (k, r) in [a, b].into_iter().enumerate() {
        let area = (r[1] - r[0]) * (r[3] - r[2]);
        let n = Poisson::new(lambda * area).map(|p| p.sample(rng) as usize).unwrap_or(0);
        for _ in 0..n {
            let z = [rng.random_range(r[0]..r[1]), rng.random_range(r[2]..r[3])];
            let t: f64 = rng.random();
            if k == 0 || !rect_contains(a, z) {
                out.push((z, t));
            }
        }
    }
    out
}

/// One two-point sample: `(joint numerator, typical-retained indicator)`.
fn two_point_sample<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R, fade: f64) -> (f64, f64) {
    let cand = draw_candidate(cfg, rng);
    let typical = PairGeometry::typical(cfg.link_distance);
    let (so, sj) = (Region::of(&typical, cfg), Region::of(&cand.pair, cfg));
    let b = cfg.exclusion.bounding_radius(cfg.link_distance);
    let type2 = cfg.thinning == Thinning::TypeII;
    let (t_o, t_j) = if type2 { (rng.random::<f64>(), rng.random::<f64>()) } else { (0.0, 0.0) };
    let kills = |region: &Region, z: Point, t: f64, own: f64| region.contains(z) && (!type2 || t < own);
    let (mut o_alive, mut j_alive) = (true, true);
    for (z, t) in background(cfg.lambda_p, &square_around(typical.tx, b), &square_around(cand.pair.tx, b), rng) {
        o_alive &= !kills(&so, z, t, t_o);
        j_alive &= !kills(&sj, z, t, t_j);
    }
    let den = if o_alive { 1.0 } else { 0.0 };
    let joint = o_alive && j_alive && !kills(&so, cand.pair.tx, t_j, t_o) && !kills(&sj, typical.tx, t_o, t_j);
    (if joint { cand.factor * fade } else { 0.0 }, den)
}

/// A time mark from the density `∝ e^{−x t}` on `[0, 1]`, which tracks the
/// survival of a pair, with its likelihood ratio against the uniform law.
fn draw_mark<R: Rng + ?Sized>(x: f64, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    if x < 1e-6 {
        return (u, 1.0);
    }
    let mass = -(-x).exp_m1();
    let t = (-(u * -mass).ln_1p() / x).clamp(0.0, 1.0);
    (t, mass / x * (x * t).exp())
}

/// One conditional sample: `(numerator, typical-retained weight)`.
fn conditional_sample<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R, fade: f64, own_area: f64, x: f64) -> (f64, f64) {
    let cand = draw_candidate(cfg, rng);
    let lambda = cfg.lambda_p;
    let type2 = cfg.thinning == Thinning::TypeII;
    let (t_o, w_o) = if type2 { draw_mark(x, rng) } else { (1.0, 1.0) };
    let den = w_o * (-lambda * t_o * own_area).exp();
    if cand.factor == 0.0 {
        return (0.0, den);
    }
    let (t_j, w_j) = if type2 { draw_mark(x, rng) } else { (1.0, 1.0) };
    let typical = PairGeometry::typical(cfg.link_distance);
    let (so, sj) = (Region::of(&typical, cfg), Region::of(&cand.pair, cfg));
    // Type I marks are all 1 and every conflict is fatal.
    if (so.contains(cand.pair.tx) && t_j <= t_o) || (sj.contains(typical.tx) && t_o <= t_j) {
        return (0.0, den);
    }
    // Both regions are congruent, so |S(o) ∩ S(j)| = 2|S(o)| − |S(o) ∪ S(j)|.
    let shared = (2.0 * own_area - union_area(&typical, &cand.pair, &cfg.exclusion)).max(0.0);
    let exposure = t_o * (own_area - shared) + t_j * (own_area - shared) + t_o.max(t_j) * shared;
    (cand.factor * fade * w_o * w_j * (-lambda * exposure.max(0.0)).exp(), den)
}

/// Ratio of sample means with its delta-method standard error.
fn ratio_estimate(num: &[f64], den: &[f64]) -> McEstimate {
    let n = num.len();
    let d = den.iter().sum::<f64>() / n as f64;
    if n == 0 || d == 0.0 {
        return McEstimate { mean: f64::NAN, std_err: f64::NAN, samples: n };
    }
    let r = num.iter().sum::<f64>() / n as f64 / d;
    let resid: Vec<f64> = num.iter().zip(den).map(|(a, b)| (a - r * b) / d).collect();
    McEstimate { mean: r, ..McEstimate::from_samples(&resid) }
}

/// Mean LOS-ball interference at the typical receiver with fresh fading.
pub fn interference_mc(
    cfg: &NetworkConfig,
    reps: usize,
    seed: u64,
    estimator: InterferenceEstimator,
) -> Result<McEstimate> {
    check_reps(reps)?;
    let victim = [cfg.link_distance, 0.0];
    let fade = |i: u64| {
        let mut rng = replication_rng(seed ^ 0x5eed_fade, i);
        sample_fading(cfg.nakagami_m, &mut rng).power_gain
    };
    Ok(match estimator {
        InterferenceEstimator::Direct => {
            let values: Vec<f64> = (0..reps as u64)
                .into_par_iter()
                .map(|i| {
                    let real = palm_local(cfg, victim, cfg.los_radius, seed, i);
                    let mut rng = replication_rng(seed ^ 0x5eed_fade, i);
                    aggregate_interference(&real, victim, cfg, &mut rng)
                })
                .collect();
            McEstimate::from_samples(&values)
        }
        InterferenceEstimator::TwoPoint => {
            let (num, den): (Vec<f64>, Vec<f64>) = (0..reps as u64)
                .into_par_iter()
                .map(|i| two_point_sample(cfg, &mut replication_rng(seed, i), fade(i)))
                .unzip();
            ratio_estimate(&num, &den)
        }
        InterferenceEstimator::Conditional => {
            let typical = PairGeometry::typical(cfg.link_distance);
            let own_area = exclusion_area(&typical, &cfg.exclusion);
            let x = cfg.lambda_p * own_area;
            let (num, den): (Vec<f64>, Vec<f64>) = (0..reps as u64)
                .into_par_iter()
                .map(|i| conditional_sample(cfg, &mut replication_rng(seed, i), fade(i), own_area, x))
                .unzip();
            ratio_estimate(&num, &den)
        }
    })
}

/// SIR at the typical receiver, one sample per replication.
pub fn sir_samples(cfg: &NetworkConfig, reps: usize, seed: u64) -> Result<Vec<f64>> {
    check_reps(reps)?;
    let victim = [cfg.link_distance, 0.0];
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let real = palm_local(cfg, victim, cfg.los_radius, seed, i);
            let mut rng = replication_rng(seed ^ 0x5eed_fade, i);
            sir_sample(&real, cfg, &mut rng)
        })
        .collect())
}

/// Fraction of samples strictly above `threshold`, with its standard error.
pub fn ccdf(samples: &[f64], threshold: f64) -> McEstimate {
    let x: Vec<f64> = samples.iter().map(|&s| if s > threshold { 1.0 } else { 0.0 }).collect();
    McEstimate::from_samples(&x)
}

/// Number of hidden nodes of the typical pair.
pub fn hidden_mc(cfg: &NetworkConfig, reps: usize, seed: u64) -> Result<McEstimate> {
    check_reps(reps)?;
    let victim = [cfg.link_distance, 0.0];
    let values: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| hidden_count_sim(&palm_local(cfg, victim, cfg.exclusion.r_t, seed, i), cfg) as f64)
        .collect();
    Ok(McEstimate::from_samples(&values))
}
