use crate::{Error, Result};

/// Kummer's confluent hypergeometric function `₁F₁(a; b; x)`.
///
/// Negative arguments go through Kummer's transformation
/// `₁F₁(a; b; x) = eˣ ₁F₁(b − a; b; −x)`, which turns the alternating series
/// into one of positive terms whenever `b > a`. The partial sum is rescaled as
/// it grows so that arguments in the thousands do not overflow before the
/// `eˣ` factor is applied.
pub fn kummer_1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 && b == b.round() {
        return Err(Error::domain("kummer_1f1", format!("b = {b} is a nonpositive integer")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if a == b {
        return Ok(x.exp());
    }
    if x < 0.0 {
        let (sum, log_scale) = series(b - a, b, -x)?;
        return Ok(sign_exp(sum, log_scale + x));
    }
    let (sum, log_scale) = series(a, b, x)?;
    Ok(sign_exp(sum, log_scale))
}

fn sign_exp(sum: f64, log_scale: f64) -> f64 {
    if sum == 0.0 {
        return 0.0;
    }
    sum.signum() * (sum.abs().ln() + log_scale).exp()
}

const RESCALE: f64 = 1e250;

/// Power series `Σ (a)_k xᵏ / ((b)_k k!)` returned as `(sum, log_scale)`
/// with value `sum · e^{log_scale}`.
pub(crate) fn series(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    let max_terms = 2000 + (10.0 * x.abs()) as usize;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log_scale = 0.0f64;
    for k in 0..max_terms {
        let kf = k as f64;
        term *= (a + kf) * x / ((b + kf) * (kf + 1.0));
        sum += term;
        if sum.abs() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += RESCALE.ln();
        }
        if term == 0.0 || (kf > x.abs() && term.abs() <= 1e-17 * sum.abs()) {
            return Ok((sum, log_scale));
        }
    }
    Err(Error::NoConvergence {
        what: "kummer_1f1 series",
        evals: max_terms,
        estimate: sign_exp(sum, log_scale),
        error: term.abs(),
    })
}
