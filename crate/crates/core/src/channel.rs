//! Path loss, Nakagami fading, and interference/SIR at the typical receiver.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::geometry::{gain_physical, AntennaConfig, PairGeometry, Point};
use crate::pointprocess::{NetworkConfig, Realization};

/// Bounded path loss `l(r) = 1 / (1 + r^α)`.
pub fn path_loss(r: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + r.powf(alpha))
}

/// Nakagami-`m` power gain, `Gamma(m, 1/m)` with unit mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSample {
    pub power_gain: f64,
}

pub fn sample_fading<R: Rng + ?Sized>(m: u32, rng: &mut R) -> FadingSample {
    let mf = m.max(1) as f64;
    let g = Gamma::new(mf, 1.0 / mf).expect("shape and scale are positive");
    FadingSample {
        power_gain: g.sample(rng),
    }
}

/// Transmit gain of `interferer` toward `victim`: the simplified pattern at
/// the angle between its boresight and the direction to the victim.
pub fn interferer_gain(interferer: &PairGeometry, victim: Point, antenna: &AntennaConfig) -> f64 {
    if antenna.is_omni() {
        return 1.0;
    }
    let dx = victim[0] - interferer.tx[0];
    let dy = victim[1] - interferer.tx[1];
    if dx == 0.0 && dy == 0.0 {
        return 1.0;
    }
    gain_physical(dy.atan2(dx) - interferer.orientation, antenna.n_t, antenna)
}

/// Mean received power from one interferer before fading.
fn interferer_power(p: &PairGeometry, victim: Point, cfg: &NetworkConfig) -> Option<f64> {
    let r = (p.tx[0] - victim[0]).hypot(p.tx[1] - victim[1]);
    if r > cfg.los_radius {
        return None;
    }
    let g = interferer_gain(p, victim, &cfg.data_antenna);
    if g == 0.0 {
        return None;
    }
    Some(cfg.p0 * cfg.data_antenna.n_t as f64 * g * path_loss(r, cfg.alpha))
}

/// Aggregate LOS-ball interference at `victim` with fresh fading per interferer.
///
/// Sums over retained transmitters within `los_radius` of the victim, skipping
/// the typical pair.
pub fn aggregate_interference<R: Rng + ?Sized>(
    real: &Realization,
    victim: Point,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> f64 {
    let mut total = 0.0;
    for (i, p) in real.retained() {
        if Some(i) == real.typical {
            continue;
        }
        if let Some(w) = interferer_power(&p.geometry, victim, cfg) {
            total += w * sample_fading(cfg.nakagami_m, rng).power_gain;
        }
    }
    total
}

/// Mean interference given positions, i.e. with every fading gain replaced by
/// its unit mean. Unbiased for the same expectation as
/// [`aggregate_interference`] and free of fading noise.
pub fn conditional_mean_interference(real: &Realization, victim: Point, cfg: &NetworkConfig) -> f64 {
    real.retained()
        .filter(|(i, _)| Some(*i) != real.typical)
        .filter_map(|(_, p)| interferer_power(&p.geometry, victim, cfg))
        .sum()
}

/// SIR at the typical receiver `(d, 0)`; `+∞` when there is no interference.
pub fn sir_sample<R: Rng + ?Sized>(real: &Realization, cfg: &NetworkConfig, rng: &mut R) -> f64 {
    let victim = [cfg.link_distance, 0.0];
    let h0 = sample_fading(cfg.nakagami_m, rng).power_gain;
    let signal = cfg.p0 * cfg.data_antenna.n_t as f64 * h0 * path_loss(cfg.link_distance, cfg.alpha);
    let interference = aggregate_interference(real, victim, cfg, rng);
    if interference == 0.0 {
        f64::INFINITY
    } else {
        signal / interference
    }
}
