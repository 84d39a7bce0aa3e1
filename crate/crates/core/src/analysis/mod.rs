//! Numerical evaluation of the analytical model: pair-correlation kernels,
//! mean interference, MISR and the asymptotic gain, ASAPPP success
//! probability, and the expected number of hidden nodes.
//!
//! All triple integrals share one structure: a λ-independent geometric part
//! (which S-criteria hold and the union area `V`) evaluated once on a fixed
//! low-discrepancy point set, and a cheap λ-dependent kernel applied on top.
//! Sweeping `λ_p` therefore reuses the expensive geometry.

mod hidden;
mod interference;
mod success;

use std::sync::{Arc, OnceLock};

pub use hidden::{hidden_count_sim, hidden_expected, HiddenIntegral, HiddenShift};
pub use interference::{mean_interference, ppp_mean_interference, InterferenceIntegral};
pub use success::{
    asymptotic_gain, ck_coeff, misr_finite, success_prob_asappp, GainFormula, GainLaw,
    SuccessModel,
};

use crate::geometry::{pair_at, s_criteria_pairs, union_area, PairGeometry, SCriteria};
use crate::pointprocess::{intensity, NetworkConfig, Thinning};
use crate::specfun::QuadratureSpec;
use crate::{Error, Result};

/// Numerical settings of the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// One-dimensional integrals and Gamma expectations.
    pub quad: QuadratureSpec,
    /// Low-discrepancy points for the discontinuous triple integrals.
    pub qmc_points: usize,
    pub gain_law: GainLaw,
    pub gain_formula: GainFormula,
    pub hidden_shift: HiddenShift,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::with_tol(1e-7),
            qmc_points: 1 << 16,
            gain_law: GainLaw::Fading,
            gain_formula: GainFormula::PowerConsistent,
            hidden_shift: HiddenShift::Geometric,
        }
    }
}

#[derive(Default)]
struct GeometryCache {
    interference: OnceLock<Result<Arc<InterferenceIntegral>>>,
    hidden: OnceLock<Result<Arc<HiddenIntegral>>>,
}

/// Configuration plus memoized geometry (`V_o` and the λ-independent parts of
/// the triple integrals). Cheap to re-target to another `λ_p` or thinning rule.
#[derive(Clone)]
pub struct KernelContext {
    pub cfg: NetworkConfig,
    pub v_o: f64,
    pub options: AnalysisOptions,
    /// Radius around a transmitter containing its exclusion region.
    bound: f64,
    cache: Arc<GeometryCache>,
    gain: Arc<OnceLock<Result<f64>>>,
}

impl std::fmt::Debug for KernelContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelContext")
            .field("cfg", &self.cfg)
            .field("v_o", &self.v_o)
            .field("options", &self.options)
            .finish()
    }
}

/// Which of the two pairs is covered by the other's exclusion region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Neither pair covers the other.
    Free,
    /// Exactly one direction of coverage.
    OneSide,
    /// Mutual coverage.
    Both,
}

impl Branch {
    pub fn of(c: &SCriteria) -> Self {
        match (c.typical_covered(), c.other_covered()) {
            (false, false) => Branch::Free,
            (true, true) => Branch::Both,
            _ => Branch::OneSide,
        }
    }
}

impl KernelContext {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        Self::with_options(cfg, AnalysisOptions::default())
    }

    pub fn with_options(cfg: &NetworkConfig, options: AnalysisOptions) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            v_o: cfg.v_o(),
            options,
            bound: cfg.exclusion.bounding_radius(cfg.link_distance),
            cache: Arc::new(GeometryCache::default()),
            gain: Arc::new(OnceLock::new()),
        })
    }

    /// Same geometry, different parent intensity. Geometry caches are shared.
    pub fn with_lambda(&self, lambda_p: f64) -> Self {
        Self {
            cfg: self.cfg.with_lambda(lambda_p),
            gain: Arc::new(OnceLock::new()),
            ..self.clone()
        }
    }

    pub fn with_thinning(&self, thinning: Thinning) -> Self {
        Self {
            cfg: self.cfg.with_thinning(thinning),
            gain: Arc::new(OnceLock::new()),
            ..self.clone()
        }
    }

    /// Retained intensity `λ_b` for the configured thinning.
    pub fn lambda_b(&self) -> f64 {
        intensity(self.cfg.thinning, self.cfg.lambda_p, self.v_o)
    }

    /// Union area `V` of the typical pair and `other`.
    pub fn union_with(&self, other: &PairGeometry) -> f64 {
        let gap = other.tx[0].hypot(other.tx[1]);
        if gap > 2.0 * self.bound {
            return 2.0 * self.v_o;
        }
        union_area(&PairGeometry::typical(self.cfg.link_distance), other, &self.cfg.exclusion)
    }

    /// Union area `V(r, β, θ)`.
    pub fn union_area(&self, r: f64, beta: f64, theta: f64) -> f64 {
        self.union_with(&pair_at(r, beta, theta, self.cfg.link_distance))
    }

    /// S-criteria, branch and union area for another pair. `V` is only
    /// computed when some kernel needs it.
    pub fn classify_pair(&self, other: &PairGeometry) -> (SCriteria, Branch, f64) {
        let typical = PairGeometry::typical(self.cfg.link_distance);
        let gap = other.tx[0].hypot(other.tx[1]);
        if gap > 2.0 * self.bound {
            return (SCriteria::default(), Branch::Free, 2.0 * self.v_o);
        }
        let c = s_criteria_pairs(&typical, other, &self.cfg.exclusion);
        let b = Branch::of(&c);
        let v = if b == Branch::Both {
            f64::NAN
        } else {
            union_area(&typical, other, &self.cfg.exclusion)
        };
        (c, b, v)
    }

    pub(crate) fn interference_geometry(&self) -> Result<Arc<InterferenceIntegral>> {
        self.cache
            .interference
            .get_or_init(|| InterferenceIntegral::new(self, self.cfg.los_radius).map(Arc::new))
            .clone()
    }

    pub(crate) fn hidden_geometry(&self) -> Result<Arc<HiddenIntegral>> {
        self.cache
            .hidden
            .get_or_init(|| HiddenIntegral::new(self, self.options.hidden_shift).map(Arc::new))
            .clone()
    }

    /// Asymptotic gain `G`, computed once per context.
    pub fn asymptotic_gain(&self) -> Result<f64> {
        self.gain.get_or_init(|| asymptotic_gain(self)).clone()
    }
}

/// `p(V) = (V_o e^{−λV} − V e^{−λV_o} + V − V_o) / (λ² (V − V_o) V V_o)`.
///
/// Three evaluation routes: the power series in `λ` for `λV ≤ 1` (which
/// removes the catastrophic cancellation of the numerator at low density), a
/// second-order expansion in `V − V_o` near the removable singularity, and the
/// closed form elsewhere.
pub fn pair_prob_p(v: f64, v_o: f64, lambda_p: f64) -> Result<f64> {
    if !(v > 0.0 && v_o > 0.0) {
        return Err(Error::domain("pair_prob_p", format!("areas must be positive (V = {v}, V_o = {v_o})")));
    }
    if !(lambda_p > 0.0) {
        return Err(Error::domain("pair_prob_p", "intensity must be positive"));
    }
    // A union is never smaller than one of its parts; clip round-off.
    let v = v.max(v_o);
    let l = lambda_p;
    if l * v <= 1.0 {
        // Σ_{n≥1} (−1)^{n+1} λ^{n−1} h_n / (n+1)!, h_n = Σ_j V^j V_o^{n−1−j}
        let mut h = 1.0;
        let mut vo_pow = 1.0;
        let mut lam_pow = 1.0;
        let mut fact = 2.0;
        let mut sum = 0.5;
        for n in 2..200 {
            vo_pow *= v_o;
            h = h * v + vo_pow;
            lam_pow *= -l;
            fact *= (n + 1) as f64;
            let term = lam_pow * h / fact;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(sum);
    }
    let delta = v - v_o;
    let x = l * v_o;
    if delta.abs() < 1e-4 * v_o {
        let e = (-x).exp();
        let n1 = -(-x).exp_m1() - x * e;
        let n2 = l * l * v_o * e;
        let n3 = -l * l * l * v_o * e;
        return Ok((n1 + n2 * delta / 2.0 + n3 * delta * delta / 6.0) / (l * l * v * v_o));
    }
    let num = v_o * (-l * v).exp() - v * (-x).exp() + delta;
    Ok(num / (l * l * delta * v * v_o))
}

/// Kernel value `k` for one thinning rule given the branch and `V`.
pub fn kernel_value(thinning: Thinning, branch: Branch, v: f64, v_o: f64, lambda_p: f64) -> f64 {
    match (thinning, branch) {
        (Thinning::TypeI, Branch::Free) => (-lambda_p * v).exp(),
        (Thinning::TypeI, _) | (Thinning::TypeII, Branch::Both) => 0.0,
        (Thinning::TypeII, b) => {
            let p = pair_prob_p(v, v_o, lambda_p).unwrap_or(0.0);
            if b == Branch::Free {
                2.0 * p
            } else {
                p
            }
        }
    }
}

/// `λ_p² k / λ_b`, arranged to stay finite when `λ_p V_o` is large.
pub fn weighted_kernel(thinning: Thinning, branch: Branch, v: f64, v_o: f64, lambda_p: f64) -> f64 {
    match thinning {
        Thinning::TypeI => {
            if branch == Branch::Free {
                lambda_p * (-lambda_p * (v - v_o)).exp()
            } else {
                0.0
            }
        }
        Thinning::TypeII => {
            let lb = intensity(Thinning::TypeII, lambda_p, v_o);
            lambda_p * lambda_p * kernel_value(thinning, branch, v, v_o, lambda_p) / lb
        }
    }
}

/// Type I kernel: zero if either pair covers the other, else `e^{−λ_p V}`.
pub fn kernel_type1(r: f64, beta: f64, theta: f64, ctx: &KernelContext) -> f64 {
    let (_, b, v) = ctx.classify_pair(&pair_at(r, beta, theta, ctx.cfg.link_distance));
    kernel_value(Thinning::TypeI, b, v, ctx.v_o, ctx.cfg.lambda_p)
}

/// Type II kernel: `0` under mutual coverage, `2p(V)` with no coverage, `p(V)` otherwise.
pub fn kernel_type2(r: f64, beta: f64, theta: f64, ctx: &KernelContext) -> f64 {
    let (_, b, v) = ctx.classify_pair(&pair_at(r, beta, theta, ctx.cfg.link_distance));
    kernel_value(Thinning::TypeII, b, v, ctx.v_o, ctx.cfg.lambda_p)
}
