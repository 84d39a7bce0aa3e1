use std::cell::Cell;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Nested adaptive Gauss–Kronrod.
    Adaptive,
    /// Tensor-product Gauss–Legendre.
    FixedGrid,
    /// Halton points with sample doubling.
    QuasiRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub scheme: Scheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-300,
            max_evals: 4_000_000,
            scheme: Scheme::QuasiRandom,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    fn tol(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) || self.max_evals == 0 {
            return Err(Error::invalid("quadrature", "tolerances and budget must be positive"));
        }
        Ok(())
    }
}

/// Integral estimate with an error indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

// Gauss–Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Segment {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) on `[a, b]`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    quad.check()?;
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evals: 0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let (mut value, mut error) = (v, e);
    while error > quad.tol(value) {
        if evals + 30 > quad.max_evals {
            return Err(Error::NoConvergence { what: "gauss_kronrod", evals, estimate: value, error });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            // Interval exhausted at machine resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evals += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Resum to shed the drift of incremental updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Estimate { value, error, evals })
}

/// `∫_a^∞ f`, through `x = a + t/(1−t)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(mut f: F, a: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    gauss_kronrod(
        |t| {
            let u = 1.0 - t;
            f(a + t / u) / (u * u)
        },
        0.0,
        1.0,
        quad,
    )
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Generalized Gauss–Laguerre rule for the weight `x^a e^{−x}` by the
/// Golub–Welsch eigenvalue method. Weights are normalized to sum to one.
pub fn gauss_laguerre(n: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = 2.0 * i as f64 + a + 1.0;
        if i + 1 < n {
            let b = ((i + 1) as f64 * (i as f64 + 1.0 + a)).sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|p, q| p.0.total_cmp(&q.0));
    let total: f64 = rule.iter().map(|r| r.1).sum();
    rule.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn laguerre_cached(n: usize, m: u32) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&(n, m)) {
        return r.clone();
    }
    let rule = Arc::new(gauss_laguerre(n, m as f64 - 1.0));
    cache.lock().unwrap().insert((n, m), rule.clone());
    rule
}

/// `E[f(g)]` for `g ~ Gamma(m, 1/m)`.
///
/// Uses generalized Gauss–Laguerre of orders 64 and 128; if they disagree
/// beyond tolerance (non-smooth integrands, typically at `g → 0`), falls back
/// to adaptive Gauss–Kronrod on the density-weighted integrand.
pub fn gamma_expectation<F: Fn(f64) -> f64>(f: F, m: u32, quad: &QuadratureSpec) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain("gamma_expectation", "shape must be at least 1"));
    }
    let mf = m as f64;
    let apply = |rule: &Rule| -> f64 {
        rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(x / mf)).sum()
    };
    let lo = apply(&laguerre_cached(64, m));
    let hi = apply(&laguerre_cached(128, m));
    if (hi - lo).abs() <= quad.tol(hi) {
        return Ok(hi);
    }
    let log_norm = mf * mf.ln() - ln_gamma(mf);
    let weighted = |g: f64| {
        if g <= 0.0 {
            return 0.0;
        }
        let dens = (log_norm + (mf - 1.0) * g.ln() - mf * g).exp();
        if dens == 0.0 {
            0.0
        } else {
            f(g) * dens
        }
    };
    let inner = gauss_kronrod(weighted, 0.0, 1.0, quad)?;
    let outer = integrate_semi_infinite(weighted, 1.0, quad)?;
    Ok(inner.value + outer.value)
}

/// Radical inverse of `index` in `base` (the Halton coordinate).
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Integrate `f` over a box. Quasi-random is the default scheme because the
/// analytical kernels are discontinuous.
pub fn integrate_nd<F: Fn(&[f64]) -> f64>(f: F, domain: &[(f64, f64)], quad: &QuadratureSpec) -> Result<Estimate> {
    quad.check()?;
    let dim = domain.len();
    if dim == 0 || dim > PRIMES.len() {
        return Err(Error::domain("integrate_nd", format!("unsupported dimension {dim}")));
    }
    let volume: f64 = domain.iter().map(|(a, b)| b - a).product();
    match quad.scheme {
        Scheme::QuasiRandom => {
            let mut x = vec![0.0; dim];
            let mut sum = 0.0;
            let mut n: u64 = 0;
            let mut target: u64 = 1024;
            let mut prev: Option<f64> = None;
            let mut doublings = 0;
            loop {
                while n < target {
                    n += 1;
                    for (k, (a, b)) in domain.iter().enumerate() {
                        x[k] = a + (b - a) * halton(n, PRIMES[k]);
                    }
                    sum += f(&x);
                }
                let value = volume * sum / n as f64;
                if let Some(p) = prev {
                    let error = (value - p).abs();
                    doublings += 1;
                    if doublings >= 2 && error <= quad.tol(value) {
                        return Ok(Estimate { value, error, evals: n as usize });
                    }
                    if 2 * target as usize > quad.max_evals {
                        return Err(Error::NoConvergence { what: "integrate_nd", evals: n as usize, estimate: value, error });
                    }
                }
                prev = Some(value);
                target *= 2;
            }
        }
        Scheme::FixedGrid => {
            let per_dim = ((quad.max_evals as f64).powf(1.0 / dim as f64).floor() as usize).clamp(2, 256);
            let fine = tensor_gauss(&f, domain, per_dim);
            let coarse = tensor_gauss(&f, domain, (per_dim / 2).max(1));
            let error = (fine - coarse).abs();
            let evals = per_dim.pow(dim as u32) + (per_dim / 2).max(1).pow(dim as u32);
            if error <= quad.tol(fine) {
                Ok(Estimate { value: fine, error, evals })
            } else {
                Err(Error::NoConvergence { what: "integrate_nd", evals, estimate: fine, error })
            }
        }
        Scheme::Adaptive => {
            let evals = Cell::new(0usize);
            let mut x = vec![0.0; dim];
            let value = nested(&f, domain, 0, &mut x, quad, &evals)?;
            // `max_evals` bounds each 1-D rule; the whole tensor gets the same cap.
            if evals.get() > quad.max_evals {
                return Err(Error::NoConvergence { what: "integrate_nd", evals: evals.get(), estimate: value, error: f64::NAN });
            }
            Ok(Estimate { value, error: quad.tol(value), evals: evals.get() })
        }
    }
}

fn tensor_gauss<F: Fn(&[f64]) -> f64>(f: &F, domain: &[(f64, f64)], n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let dim = domain.len();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..dim {
            let (a, b) = domain[k];
            x[k] = 0.5 * (a + b) + 0.5 * (b - a) * nodes[idx[k]];
            w *= 0.5 * (b - a) * weights[idx[k]];
        }
        total += w * f(&x);
        let mut k = 0;
        loop {
            if k == dim {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    domain: &[(f64, f64)],
    k: usize,
    x: &mut [f64],
    quad: &QuadratureSpec,
    evals: &Cell<usize>,
) -> Result<f64> {
    let (a, b) = domain[k];
    let last = k + 1 == domain.len();
    let mut failure = None;
    let est = gauss_kronrod(
        |t| {
            x[k] = t;
            if last {
                evals.set(evals.get() + 1);
                f(x)
            } else {
                let mut inner = x.to_vec();
                match nested(f, domain, k + 1, &mut inner, quad, evals) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            }
        },
        a,
        b,
        quad,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_basics() {
        let q = QuadratureSpec::with_tol(1e-12);
        let e = gauss_kronrod(|x| x.sin(), 0.0, std::f64::consts::PI, &q).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        let e = gauss_kronrod(|x| x.sqrt(), 0.0, 1.0, &q).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-11);
        let e = integrate_semi_infinite(|x| (-x).exp(), 0.0, &q).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_rule_moments() {
        let (x, w) = gauss_laguerre(32, 2.0);
        // E[X^k] for X ~ Gamma(3, 1) is (k+2)!/2
        let m3: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((m3 - 60.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_expectation_moments() {
        let q = QuadratureSpec::with_tol(1e-7);
        for m in 1..=4u32 {
            assert!((gamma_expectation(|_| 1.0, m, &q).unwrap() - 1.0).abs() < 1e-12);
            assert!((gamma_expectation(|g| g, m, &q).unwrap() - 1.0).abs() < 1e-12);
        }
        let v = gamma_expectation(|g| g * g, 3, &q).unwrap();
        assert!((v - (1.0 + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn gamma_laplace_transform() {
        let q = QuadratureSpec::with_tol(1e-9);
        for m in 1..=3u32 {
            for t in [0.01, 0.5, 2.0, 10.0, 80.0] {
                let got = gamma_expectation(|g| (-t * g).exp(), m, &q).unwrap();
                let want = (1.0 + t / m as f64).powi(-(m as i32));
                assert!((got / want - 1.0).abs() < 1e-7, "m={m} t={t}");
            }
        }
    }

    #[test]
    fn gamma_expectation_singular_integrand_uses_fallback() {
        // E[g^{0.3}] = Γ(m+0.3) / (Γ(m) m^{0.3})
        let q = QuadratureSpec::with_tol(1e-9);
        for m in 1..=3u32 {
            let mf = m as f64;
            let want = (ln_gamma(mf + 0.3) - ln_gamma(mf) - 0.3 * mf.ln()).exp();
            let got = gamma_expectation(|g| g.powf(0.3), m, &q).unwrap();
            assert!((got / want - 1.0).abs() < 1e-8, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn halton_prefix() {
        let v: Vec<f64> = (1..=4).map(|i| halton(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
        assert!((halton(2, 3) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn nd_volume_and_half_indicator() {
        let dom = [(0.0, 2.0), (-1.0, 1.0), (0.0, 3.0)];
        let q = QuadratureSpec::with_tol(1e-3);
        let v = integrate_nd(|_| 1.0, &dom, &q).unwrap();
        assert!((v.value - 12.0).abs() < 1e-12);
        let h = integrate_nd(|x| if x[0] < 1.0 { 1.0 } else { 0.0 }, &dom, &q).unwrap();
        assert!((h.value - 6.0).abs() < 6.0 * 2e-3);
    }

    #[test]
    fn nd_gaussian_against_product_of_erfs() {
        use statrs::function::erf::erf;
        let dom = [(-1.0, 2.0), (0.0, 1.5), (-0.5, 0.5)];
        let f = |x: &[f64]| (-(x[0] * x[0] + 2.0 * x[1] * x[1] + 0.5 * x[2] * x[2])).exp();
        let one = |c: f64, a: f64, b: f64| {
            let s = c.sqrt();
            0.5 * (std::f64::consts::PI / c).sqrt() * (erf(s * b) - erf(s * a))
        };
        let want = one(1.0, -1.0, 2.0) * one(2.0, 0.0, 1.5) * one(0.5, -0.5, 0.5);
        let q = QuadratureSpec::with_tol(1e-9);
        for scheme in [Scheme::Adaptive, Scheme::FixedGrid] {
            let q = QuadratureSpec { max_evals: 100_000, ..q.scheme(scheme) };
            let got = integrate_nd(f, &dom, &q).unwrap().value;
            assert!((got / want - 1.0).abs() < 1e-6, "{scheme:?}: {got} vs {want}");
        }
        let q = QuadratureSpec { rel_tol: 1e-4, ..QuadratureSpec::default() };
        let got = integrate_nd(f, &dom, &q).unwrap().value;
        assert!((got / want - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nd_reports_exhaustion() {
        let q = QuadratureSpec { rel_tol: 1e-14, max_evals: 5000, ..QuadratureSpec::default() };
        let r = integrate_nd(|x| (x[0] + x[1]).sqrt(), &[(0.0, 1.0), (0.0, 1.0)], &q);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
