//! Mean interference at the typical receiver under LOS-ball truncation.
//!
//! The interferer at `y` is parametrized around the victim `x_o = (d, 0)` as
//! `y = x_o + ρ(cos γ, sin γ)` with boresight `θ = γ + π + u`, so `u` is the
//! offset of the victim from the interferer's boresight and the transmit gain
//! is simply `G(u)`. Beyond `ρ_far = d + 2B` (`B` the exclusion bounding
//! radius) the two pairs cannot interact and the kernel is constant; that
//! part is integrated in closed form. The near field is integrated by Halton
//! points in `(log ρ, γ, u)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{weighted_kernel, Branch, KernelContext};
use crate::channel::path_loss;
use crate::geometry::{gain_physical, AntennaConfig, PairGeometry};
use crate::pointprocess::Thinning;
use crate::specfun::{gauss_kronrod, halton, QuadratureSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Sample {
    weight: f64,
    branch: Branch,
    v: f64,
}

/// λ-independent part of the interference integral for one LOS radius.
#[derive(Debug, Clone)]
pub struct InterferenceIntegral {
    los_radius: f64,
    v_o: f64,
    near: Vec<Sample>,
    /// Samples in the first half of the point set (error estimate).
    half: usize,
    /// `∫G du · 2π · ∫_{ρ_near}^{R} l(ρ) ρ dρ`.
    far_factor: f64,
    /// `∫ G(u) du` over the data-beam support.
    gain_integral: f64,
    /// `P0 N_t / (2π)`.
    prefactor: f64,
}

/// Support half-width of the data beam, capped at π.
fn data_half_width(antenna: &AntennaConfig) -> f64 {
    antenna.half_beamwidth(antenna.n_t).min(PI)
}

/// `∫ G(u) du` over `[−L, L]`, `L` the capped support.
pub(crate) fn data_gain_integral(antenna: &AntennaConfig) -> f64 {
    if antenna.is_omni() {
        return 2.0 * PI;
    }
    let w = antenna.half_beamwidth(antenna.n_t);
    let l = w.min(PI);
    let k = PI / (2.0 * w);
    l + (2.0 * k * l).sin() / (2.0 * k)
}

/// `∫_a^b ρ l(ρ) dρ` for `0 ≤ a ≤ b ≤ ∞`.
pub(crate) fn radial_integral(a: f64, b: f64, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    // Finite part in s = ln(1+ρ), where the integrand is smooth and slowly varying.
    let finite = |lo: f64, hi: f64| -> Result<f64> {
        let f = |s: f64| {
            let rho = s.exp_m1();
            rho * (1.0 + rho) * path_loss(rho, alpha)
        };
        Ok(gauss_kronrod(f, lo.ln_1p(), hi.ln_1p(), quad)?.value)
    };
    if b.is_finite() {
        return finite(a, b);
    }
    let x = a.max(2.0);
    let head = if x > a { finite(a, x)? } else { 0.0 };
    // Σ_j (−1)^j X^{2−α−αj} / (α + αj − 2)
    let q = x.powf(-alpha);
    let mut term_pow = x.powf(2.0 - alpha);
    let mut tail = 0.0;
    for j in 0..400 {
        let t = term_pow / (alpha + alpha * j as f64 - 2.0);
        tail += if j % 2 == 0 { t } else { -t };
        if t < 1e-17 * tail.abs() {
            return Ok(head + tail);
        }
        term_pow *= q;
    }
    Err(Error::NoConvergence {
        what: "radial tail series",
        evals: 400,
        estimate: head + tail,
        error: term_pow,
    })
}

impl InterferenceIntegral {
    pub fn new(ctx: &KernelContext, los_radius: f64) -> Result<Self> {
        if !(los_radius > 0.0) {
            return Err(Error::invalid("los_radius", "must be positive"));
        }
        let cfg = &ctx.cfg;
        let d = cfg.link_distance;
        let ant = &cfg.data_antenna;
        let rho_far = d + 2.0 * ctx.bound;
        let rho_near = los_radius.min(rho_far);
        let half_u = if ant.is_omni() { PI } else { data_half_width(ant) };
        let n = ctx.options.qmc_points.max(64);
        let log_span = rho_near.ln_1p();
        let volume = log_span * 2.0 * PI * 2.0 * half_u;
        let tagged: Vec<(u64, Sample)> = (1..=n as u64)
            .into_par_iter()
            .filter_map(|i| {
                let rho = (halton(i, 2) * log_span).exp_m1();
                let gamma = 2.0 * PI * halton(i, 3);
                let u = half_u * (2.0 * halton(i, 5) - 1.0);
                let g = gain_physical(u, ant.n_t, ant);
                if g == 0.0 {
                    return None;
                }
                let weight = volume * g * path_loss(rho, cfg.alpha) * rho * (1.0 + rho) / n as f64;
                let tx = [d + rho * gamma.cos(), rho * gamma.sin()];
                let other = PairGeometry::new(tx, gamma + PI + u, d);
                let (_, branch, v) = ctx.classify_pair(&other);
                Some((i, Sample { weight, branch, v }))
            })
            .collect::<Vec<_>>();
        let half = tagged.partition_point(|(i, _)| *i <= (n / 2) as u64);
        let near: Vec<Sample> = tagged.into_iter().map(|(_, s)| s).collect();
        let gain_integral = data_gain_integral(ant);
        let far_factor = if los_radius > rho_near {
            gain_integral * 2.0 * PI * radial_integral(rho_near, los_radius, cfg.alpha, &ctx.options.quad)?
        } else {
            0.0
        };
        Ok(Self {
            los_radius,
            v_o: ctx.v_o,
            near,
            half,
            far_factor,
            gain_integral,
            prefactor: cfg.p0 * ant.n_t as f64 / (2.0 * PI),
        })
    }

    pub fn los_radius(&self) -> f64 {
        self.los_radius
    }

    /// `∫G du`, exposed for closed-form comparisons.
    pub fn gain_integral(&self) -> f64 {
        self.gain_integral
    }

    /// Mean interference and an error indicator (full vs half point set).
    pub fn evaluate(&self, thinning: Thinning, lambda_p: f64) -> (f64, f64) {
        let k = |s: &Sample| s.weight * weighted_kernel(thinning, s.branch, s.v, self.v_o, lambda_p);
        let first: f64 = self.near[..self.half].iter().map(k).sum();
        let second: f64 = self.near[self.half..].iter().map(k).sum();
        let near = first + second;
        let near_half = 2.0 * first;
        let far = self.far_factor * weighted_kernel(thinning, Branch::Free, 2.0 * self.v_o, self.v_o, lambda_p);
        let value = self.prefactor * (near + far);
        (value, self.prefactor * (near - near_half).abs())
    }
}

/// Mean LOS-ball interference at the typical receiver, W. `los_radius` may be
/// infinite.
pub fn mean_interference(ctx: &KernelContext, los_radius: f64) -> Result<f64> {
    let (value, _) = if los_radius == ctx.cfg.los_radius {
        ctx.interference_geometry()?.evaluate(ctx.cfg.thinning, ctx.cfg.lambda_p)
    } else {
        InterferenceIntegral::new(ctx, los_radius)?.evaluate(ctx.cfg.thinning, ctx.cfg.lambda_p)
    };
    Ok(value)
}

/// Mean interference of a PPP of intensity `λ_b` with the same data beams.
pub fn ppp_mean_interference(ctx: &KernelContext, los_radius: f64) -> Result<f64> {
    let cfg = &ctx.cfg;
    let ant = &cfg.data_antenna;
    let radial = radial_integral(0.0, los_radius, cfg.alpha, &ctx.options.quad)?;
    Ok(ctx.lambda_b() * cfg.p0 * ant.n_t as f64 * data_gain_integral(ant) * radial)
}
