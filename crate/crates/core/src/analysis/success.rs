//! MISR of the LOS-truncated PPP, the asymptotic gain, and the ASAPPP
//! success probability under Nakagami-M fading.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::KernelContext;
use crate::channel::path_loss;
use crate::geometry::{gain_physical, AntennaConfig};
use crate::specfun::{
    gamma_expectation, gauss_kronrod, gauss_legendre, gen_exp_integral, kummer_1f1,
    lt_toeplitz_first_column_sum, QuadratureSpec,
};
use crate::{Error, Result};

/// Law of the gain `g` inside the `c_k` expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainLaw {
    /// `g ~ Gamma(M, 1/M)`.
    Fading,
    /// Fading times the data-beam gain at a uniform random angle.
    PatternTimesFading,
}

/// How the signal power enters the asymptotic gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainFormula {
    /// `G = MISR_R · P0 N_t l(d) / E[I]`: interference and signal in the same units.
    PowerConsistent,
    /// `G = MISR_R · l(d) / E[I]`, signal normalized without `P0 N_t`.
    Verbatim,
}

/// `MISR_R` of a PPP of intensity `λ` with nearest-transmitter association
/// and LOS radius `R`.
pub fn misr_finite(lambda_p: f64, los_radius: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::domain("misr_finite", "path-loss exponent must exceed 2"));
    }
    if !(lambda_p >= 0.0 && los_radius >= 0.0) {
        return Err(Error::domain("misr_finite", "intensity and radius must be nonnegative"));
    }
    let n = lambda_p * PI * los_radius * los_radius;
    let inf = 2.0 / (alpha - 2.0);
    if n == 0.0 {
        return Ok(0.0);
    }
    if n.is_infinite() {
        return Ok(inf);
    }
    let f1 = kummer_1f1(alpha / 2.0, 1.0 + alpha / 2.0, -n)?;
    let f2 = kummer_1f1(alpha / 2.0, 2.0 + alpha / 2.0, -n)?;
    Ok(inf - alpha / (alpha - 2.0) * f1 - 4.0 * n / (alpha * alpha - 4.0) * f2 + (-n).exp())
}

/// Asymptotic gain `G = MISR_R / MISR_HCP` for the context's thinning.
pub fn asymptotic_gain(ctx: &KernelContext) -> Result<f64> {
    let cfg = &ctx.cfg;
    let misr = misr_finite(cfg.lambda_p, cfg.los_radius, cfg.alpha)?;
    let interference = super::mean_interference(ctx, cfg.los_radius)?;
    if interference.is_nan() || interference < 0.0 {
        return Err(Error::domain("asymptotic_gain", "mean interference is not a nonnegative number"));
    }
    // Interference below the floating-point range (Type I far past its peak)
    // gives G = ∞, which the success probability maps to 1.
    let signal = match ctx.options.gain_formula {
        GainFormula::PowerConsistent => cfg.p0 * cfg.data_antenna.n_t as f64,
        GainFormula::Verbatim => 1.0,
    } * path_loss(cfg.link_distance, cfg.alpha);
    Ok(misr * signal / interference)
}

/// Inputs of the `c_k` coefficients: the PPP surrogate and the law of `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessModel {
    pub lambda_p: f64,
    pub los_radius: f64,
    pub alpha: f64,
    pub m: u32,
    pub gain_law: GainLaw,
    pub data_antenna: AntennaConfig,
    pub quad: QuadratureSpec,
}

impl SuccessModel {
    pub fn from_context(ctx: &KernelContext) -> Self {
        Self {
            lambda_p: ctx.cfg.lambda_p,
            los_radius: ctx.cfg.los_radius,
            alpha: ctx.cfg.alpha,
            m: ctx.cfg.nakagami_m,
            gain_law: ctx.options.gain_law,
            data_antenna: ctx.cfg.data_antenna,
            quad: ctx.options.quad,
        }
    }

    fn delta(&self) -> f64 {
        2.0 / self.alpha
    }

    /// `E_g[f(g)]` under the configured law. `f(0)` must be finite.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match self.gain_law {
            GainLaw::Fading => gamma_expectation(f, self.m, &self.quad),
            GainLaw::PatternTimesFading => {
                let ant = &self.data_antenna;
                if ant.is_omni() {
                    return gamma_expectation(f, self.m, &self.quad);
                }
                let w = ant.half_beamwidth(ant.n_t).min(PI);
                let (x, wts) = gauss_legendre(32);
                let mut acc = 0.0;
                for (xi, wi) in x.iter().zip(&wts) {
                    let phi = 0.5 * w * (xi + 1.0);
                    let gp = gain_physical(phi, ant.n_t, ant);
                    acc += wi * gamma_expectation(|h| f(h * gp), self.m, &self.quad)?;
                }
                // Symmetric in φ: (1/2π)·2·(w/2)·Σ, plus the atom at g = 0.
                Ok(acc * w / (2.0 * PI) + (1.0 - w / PI) * f(0.0))
            }
        }
    }

    /// `E_g[e^{−zg} − 1 − zg E_δ(zg)]`.
    fn x_term(&self, z: f64) -> Result<f64> {
        let delta = self.delta();
        let err = RefCell::new(None);
        let v = self.expect(|g| {
            let y = z * g;
            if y <= 0.0 {
                return 0.0;
            }
            match gen_exp_integral(delta, y) {
                Ok(e) => (-y).exp_m1() - y * e,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => v,
        }
    }

    /// `E_g[g^k E_{1+δ−k}(zg)]`.
    fn ek_term(&self, k: u32, z: f64) -> Result<f64> {
        let p = 1.0 + self.delta() - k as f64;
        let err = RefCell::new(None);
        let v = self.expect(|g| {
            let y = z * g;
            if y <= 0.0 {
                return 0.0;
            }
            match gen_exp_integral(p, y) {
                Ok(e) => g.powi(k as i32) * e,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => v,
        }
    }

    /// `c_k(r)` for `a = Mθ/G`.
    pub fn ck(&self, k: u32, r: f64, a: f64) -> Result<f64> {
        let r_big = self.los_radius;
        if !(r > 0.0 && r <= r_big) {
            return Err(Error::domain("ck_coeff", format!("r = {r} outside (0, R]")));
        }
        if a == 0.0 {
            return Ok(0.0);
        }
        let ratio = (r / r_big).powf(self.alpha);
        let b = a * ratio;
        let lam = self.lambda_p;
        if k == 0 {
            return Ok(PI * lam * (r_big * r_big * self.x_term(b)? - r * r * self.x_term(a)?));
        }
        let kf = factorial(k);
        let outer = r_big * r_big * ratio.powi(k as i32) * self.ek_term(k, b)?;
        let inner = r * r * self.ek_term(k, a)?;
        Ok(PI * self.delta() * lam * a.powi(k as i32) / kf * (outer - inner))
    }

    /// `P ≈ 2πλ ∫_0^R e^{−πλr²} ‖exp C_M(r)‖₁ r dr`, clamped to `[0, 1]`.
    pub fn success(&self, a: f64) -> Result<f64> {
        let lam = self.lambda_p;
        let m = self.m.max(1);
        let mut err = None;
        let mut c = vec![0.0; m as usize];
        let integrand = |r: f64| {
            if r <= 0.0 {
                return 0.0;
            }
            for k in 0..m {
                match self.ck(k, r, a) {
                    Ok(v) => c[k as usize] = v,
                    Err(e) => {
                        err.get_or_insert(e);
                        return 0.0;
                    }
                }
            }
            2.0 * PI * lam * (-PI * lam * r * r).exp() * lt_toeplitz_first_column_sum(&c) * r
        };
        let est = gauss_kronrod(integrand, 0.0, self.los_radius, &self.quad)?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(est.value.clamp(0.0, 1.0))
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Coefficient `c_k(r)` at SIR threshold `sir_threshold` (linear).
pub fn ck_coeff(k: u32, r: f64, ctx: &KernelContext, sir_threshold: f64) -> Result<f64> {
    if k >= ctx.cfg.nakagami_m {
        return Err(Error::domain("ck_coeff", format!("k = {k} must be below M = {}", ctx.cfg.nakagami_m)));
    }
    let g = ctx.asymptotic_gain()?;
    if g.is_infinite() {
        return Ok(1.0);
    }
    let a = ctx.cfg.nakagami_m as f64 * sir_threshold / g;
    SuccessModel::from_context(ctx).ck(k, r, a)
}

/// ASAPPP success probability at `sir_threshold` (linear).
pub fn success_prob_asappp(sir_threshold: f64, ctx: &KernelContext) -> Result<f64> {
    if !(sir_threshold >= 0.0) {
        return Err(Error::domain("success_prob_asappp", "threshold must be nonnegative"));
    }
    let g = ctx.asymptotic_gain()?;
    if g.is_infinite() {
        return Ok(1.0);
    }
    let a = ctx.cfg.nakagami_m as f64 * sir_threshold / g;
    SuccessModel::from_context(ctx).success(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(m: u32, law: GainLaw) -> SuccessModel {
        SuccessModel {
            lambda_p: 4e-4,
            los_radius: 300.0,
            alpha: 2.1,
            m,
            gain_law: law,
            data_antenna: AntennaConfig::half_wavelength(16, 8, 60e9),
            quad: QuadratureSpec::with_tol(1e-9),
        }
    }

    #[test]
    fn misr_boundaries() {
        assert_eq!(misr_finite(1e-3, 0.0, 2.1).unwrap(), 0.0);
        let big = misr_finite(1.0, 100.0, 4.0).unwrap();
        assert!((big - 1.0).abs() < 1e-4, "{big}");
        assert!(misr_finite(1e-3, 10.0, 2.0).is_err());
        let mut last = 0.0;
        for r in [1.0, 10.0, 50.0, 100.0, 300.0, 1000.0] {
            let v = misr_finite(4e-4, r, 2.1).unwrap();
            assert!(v >= last && v <= 2.0 / 0.1);
            last = v;
        }
    }

    /// `E[y^k e^{−sy}]` with `y = g·x^{−α}`, integrated over `x ∈ [r, R]`.
    fn ck_oracle(m: &SuccessModel, k: u32, r: f64, a: f64) -> f64 {
        let s = a * r.powf(m.alpha);
        let q = QuadratureSpec::with_tol(1e-10);
        let inner = |x: f64| {
            let e = m
                .expect(|g| {
                    let y = g * x.powf(-m.alpha);
                    if k == 0 {
                        (-s * y).exp_m1()
                    } else {
                        y.powi(k as i32) * (-s * y).exp()
                    }
                })
                .unwrap();
            e * x
        };
        let integral = gauss_kronrod(inner, r, m.los_radius, &q).unwrap().value;
        2.0 * PI * m.lambda_p * s.powi(k as i32) / factorial(k) * integral
    }

    #[test]
    fn ck_matches_radial_oracle() {
        for law in [GainLaw::Fading, GainLaw::PatternTimesFading] {
            let m = model(3, law);
            for (r, a) in [(20.0, 0.01), (50.0, 0.3), (150.0, 2.0)] {
                for k in 0..3 {
                    let got = m.ck(k, r, a).unwrap();
                    let want = ck_oracle(&m, k, r, a);
                    assert!((got - want).abs() <= 1e-6 * want.abs().max(1e-12), "{law:?} k={k} r={r}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn c0_nonpositive_and_vanishing() {
        let m = model(2, GainLaw::Fading);
        for r in [1.0, 30.0, 299.0] {
            for a in [1e-3, 0.1, 1.0, 10.0] {
                assert!(m.ck(0, r, a).unwrap() <= 0.0);
            }
            assert!(m.ck(0, r, 1e-12).unwrap().abs() < 1e-6);
            assert!(m.ck(1, r, 1e-12).unwrap().abs() < 1e-6);
        }
    }

    #[test]
    fn success_limits_and_monotonicity() {
        let m = model(1, GainLaw::Fading);
        let ceiling = 1.0 - (-m.lambda_p * PI * 300.0f64.powi(2)).exp();
        assert!((m.success(1e-12).unwrap() - ceiling).abs() < 1e-6);
        let mut last = 1.0;
        for a in [1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let p = m.success(a).unwrap();
            assert!(p <= last + 1e-9);
            last = p;
        }
        let m2 = model(2, GainLaw::Fading);
        let p = m2.success(0.1).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}
