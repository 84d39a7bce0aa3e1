//! Expected number of hidden nodes: retained transmitters whose RTS region
//! covers the typical receiver.
//!
//! With the other transmitter at `y = r(cos β, sin β)` and `r_y = ‖y − x_o‖`,
//! the victim lies in `S_t(y)` iff `r_y ≤ R_t` and the boresight is within
//! `f(r_y) = (2W/π)·arccos(r_y/R_t)` of the direction `y → x_o`. Reflection
//! in the x-axis folds `β` onto `[0, π]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{weighted_kernel, Branch, KernelContext};
use crate::geometry::{in_tx_exclusion, pair_at};
use crate::pointprocess::{NetworkConfig, Realization, Thinning};
use crate::specfun::halton;
use crate::Result;

/// Orientation of the beam center relative to which the angular window
/// `[−f, f]` is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenShift {
    /// The direction from `y` to `x_o`, `atan2(−r sin β, d − r cos β)`.
    Geometric,
    /// `θ = u + arcsin((r cos β − d)/r_y)`.
    Arcsin,
    /// `θ = u − arccos((r cos β − d)/r_y)`.
    Arccos,
}

impl HiddenShift {
    fn angle(self, r: f64, beta: f64, d: f64, r_y: f64) -> f64 {
        let ratio = if r_y > 0.0 { ((r * beta.cos() - d) / r_y).clamp(-1.0, 1.0) } else { 0.0 };
        match self {
            HiddenShift::Geometric => (-r * beta.sin()).atan2(d - r * beta.cos()),
            HiddenShift::Arcsin => ratio.asin(),
            HiddenShift::Arccos => -ratio.acos(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    weight: f64,
    branch: Branch,
    v: f64,
}

/// λ-independent part of the hidden-node integral.
#[derive(Debug, Clone)]
pub struct HiddenIntegral {
    v_o: f64,
    samples: Vec<Sample>,
    half: usize,
}

impl HiddenIntegral {
    pub fn new(ctx: &KernelContext, shift: HiddenShift) -> Result<Self> {
        let cfg = &ctx.cfg;
        let d = cfg.link_distance;
        let r_t = cfg.exclusion.r_t;
        let ant = &cfg.exclusion.antenna;
        let w = ant.half_beamwidth(ant.n_t);
        let n = ctx.options.qmc_points.max(64);
        let tagged: Vec<(u64, Sample)> = (1..=n as u64)
            .into_par_iter()
            .filter_map(|i| {
                let beta = PI * halton(i, 2);
                let (sb, cb) = beta.sin_cos();
                let disc = r_t * r_t - d * d * sb * sb;
                if disc <= 0.0 {
                    return None;
                }
                let r_max = d * cb + disc.sqrt();
                if r_max <= 0.0 {
                    return None;
                }
                let r = r_max * halton(i, 3);
                let r_y = (r * r + d * d - 2.0 * r * d * cb).max(0.0).sqrt();
                let f = if ant.is_omni() {
                    PI
                } else {
                    (2.0 * w / PI * (r_y / r_t).min(1.0).acos()).min(PI)
                };
                if f <= 0.0 {
                    return None;
                }
                let u = f * (2.0 * halton(i, 5) - 1.0);
                let theta = u + shift.angle(r, beta, d, r_y);
                let weight = PI * r_max * 2.0 * f * r / n as f64;
                let (_, branch, v) = ctx.classify_pair(&pair_at(r, beta, theta, d));
                Some((i, Sample { weight, branch, v }))
            })
            .collect();
        let half = tagged.partition_point(|(i, _)| *i <= (n / 2) as u64);
        Ok(Self {
            v_o: ctx.v_o,
            samples: tagged.into_iter().map(|(_, s)| s).collect(),
            half,
        })
    }

    /// Expected count and an error indicator (full vs half point set).
    pub fn evaluate(&self, thinning: Thinning, lambda_p: f64) -> (f64, f64) {
        let k = |s: &Sample| s.weight * weighted_kernel(thinning, s.branch, s.v, self.v_o, lambda_p);
        let first: f64 = self.samples[..self.half].iter().map(k).sum();
        let second: f64 = self.samples[self.half..].iter().map(k).sum();
        let full = (first + second) / PI;
        (full, (full - 2.0 * first / PI).abs())
    }
}

/// Expected number of hidden nodes of the typical pair.
pub fn hidden_expected(ctx: &KernelContext) -> Result<f64> {
    let geometry = ctx.hidden_geometry()?;
    Ok(geometry.evaluate(ctx.cfg.thinning, ctx.cfg.lambda_p).0)
}

/// Retained non-typical transmitters whose RTS region contains `(d, 0)`.
pub fn hidden_count_sim(real: &Realization, cfg: &NetworkConfig) -> usize {
    let victim = [cfg.link_distance, 0.0];
    real.retained()
        .filter(|(i, _)| Some(*i) != real.typical)
        .filter(|(_, p)| in_tx_exclusion(victim, &p.geometry, &cfg.exclusion))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalysisOptions;
    use crate::geometry::PairGeometry;
    use crate::pointprocess::{MarkedPair, Window};

    fn real_with(pairs: Vec<MarkedPair>) -> Realization {
        Realization {
            window: Window::centered(1000.0, 1000.0),
            margin: 0.0,
            seed: 0,
            stream: 0,
            pairs,
            thinning: Some(Thinning::TypeI),
            typical: Some(0),
            typical_mark: 0.0,
        }
    }

    fn pair(tx: [f64; 2], orientation: f64, retained: bool) -> MarkedPair {
        MarkedPair {
            geometry: PairGeometry::new(tx, orientation, 20.0),
            time_mark: 0.5,
            retained,
        }
    }

    #[test]
    fn counting_by_hand() {
        let cfg = NetworkConfig::default();
        assert_eq!(hidden_count_sim(&real_with(vec![pair([0.0, 0.0], 0.0, true)]), &cfg), 0);
        // Aimed at the victim from 30 m east, inside R_t = 38.4 m.
        let one = real_with(vec![pair([0.0, 0.0], 0.0, true), pair([50.0, 0.0], PI, true)]);
        assert_eq!(hidden_count_sim(&one, &cfg), 1);
        // Same transmitter but not retained, or aimed away.
        let off = real_with(vec![pair([0.0, 0.0], 0.0, true), pair([50.0, 0.0], PI, false), pair([50.0, 5.0], 0.0, true)]);
        assert_eq!(hidden_count_sim(&off, &cfg), 0);
    }

    #[test]
    fn geometric_window_is_exact_membership() {
        // Every sampled (r, β, θ) must put x_o inside S_t(y).
        let cfg = NetworkConfig::default();
        let d = cfg.link_distance;
        let r_t = cfg.exclusion.r_t;
        let w = cfg.exclusion.antenna.half_beamwidth(16);
        for i in 1..2000u64 {
            let beta = PI * halton(i, 2);
            let r_max = d * beta.cos() + (r_t * r_t - (d * beta.sin()).powi(2)).sqrt();
            let r = r_max * halton(i, 3);
            let r_y = (r * r + d * d - 2.0 * r * d * beta.cos()).sqrt();
            let f = 2.0 * w / PI * (r_y / r_t).min(1.0).acos();
            let u = 0.999 * f * (2.0 * halton(i, 5) - 1.0);
            let theta = u + HiddenShift::Geometric.angle(r, beta, d, r_y);
            let p = pair_at(r, beta, theta, d);
            assert!(in_tx_exclusion([d, 0.0], &p, &cfg.exclusion));
        }
    }

    #[test]
    fn vanishes_at_low_density() {
        let options = AnalysisOptions { qmc_points: 1 << 12, ..AnalysisOptions::default() };
        let ctx = KernelContext::with_options(&NetworkConfig::default().with_lambda(1e-9), options).unwrap();
        assert!(hidden_expected(&ctx).unwrap() < 1e-4);
    }
}
