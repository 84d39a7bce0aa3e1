//! Poisson bipolar parents and the two RTS/CTS thinning rules.
//!
//! A parent is a transmitter/receiver pair. Under Type I thinning a pair
//! survives iff no other parent transmitter lies in its exclusion region;
//! under Type II it survives iff every parent transmitter in its region has a
//! larger time mark. Both rules look at *all* parents, not only survivors.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::geometry::{
    exclusion_area, AntennaConfig, ExclusionSpec, PairGeometry, Petal, Point,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thinning {
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii")]
    TypeII,
}

impl Thinning {
    pub fn label(&self) -> &'static str {
        match self {
            Thinning::TypeI => "type_i",
            Thinning::TypeII => "type_ii",
        }
    }
}

/// Scalar model parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkConfig {
    /// Parent intensity, m⁻².
    pub lambda_p: f64,
    /// Transmitter-receiver distance `d`, m.
    pub link_distance: f64,
    /// LOS radius `R` around the receiver, m.
    pub los_radius: f64,
    /// RTS/CTS ranges and the array shaping the exclusion regions.
    pub exclusion: ExclusionSpec,
    /// Array used for mm-wave data. Differs from `exclusion.antenna` when the
    /// handshake runs omnidirectionally on a lower band.
    pub data_antenna: AntennaConfig,
    pub alpha: f64,
    pub nakagami_m: u32,
    /// Per-antenna transmit power, W.
    pub p0: f64,
    /// Linear SIR threshold.
    pub sir_threshold: f64,
    pub thinning: Thinning,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        crate::cli::config::directional_preset(60e9, 16, 8, 20.0)
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        fn pos(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
            }
        }
        pos("lambda_p", self.lambda_p)?;
        pos("link_distance", self.link_distance)?;
        pos("los_radius", self.los_radius)?;
        pos("exclusion.r_t", self.exclusion.r_t)?;
        pos("exclusion.r_r", self.exclusion.r_r)?;
        pos("p0", self.p0)?;
        pos("sir_threshold", self.sir_threshold)?;
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::invalid(
                "alpha",
                format!("path-loss exponent must exceed 2, got {}", self.alpha),
            ));
        }
        if self.nakagami_m < 1 {
            return Err(Error::invalid("nakagami_m", "must be at least 1"));
        }
        for (name, ant) in [("exclusion.antenna", &self.exclusion.antenna), ("data_antenna", &self.data_antenna)] {
            if ant.n_t < 1 || ant.n_r < 1 {
                return Err(Error::invalid(format!("{name}.n_t"), "element counts must be at least 1"));
            }
            if !(ant.d0.is_finite() && ant.d0 >= 0.0) {
                return Err(Error::invalid(format!("{name}.d0"), "spacing must be nonnegative"));
            }
            pos(&format!("{name}.wavelength"), ant.wavelength)?;
        }
        Ok(())
    }

    /// Area `V_o` of one pair's exclusion region.
    pub fn v_o(&self) -> f64 {
        exclusion_area(&PairGeometry::typical(self.link_distance), &self.exclusion)
    }

    /// Guard margin added around observation windows.
    pub fn guard_margin(&self) -> f64 {
        self.exclusion.r_t.max(self.exclusion.r_r) + self.link_distance
    }

    pub fn with_lambda(&self, lambda_p: f64) -> Self {
        Self {
            lambda_p,
            ..self.clone()
        }
    }

    pub fn with_thinning(&self, thinning: Thinning) -> Self {
        Self {
            thinning,
            ..self.clone()
        }
    }
}

/// `λ_p e^{−λ_p V_o}`.
pub fn intensity_type1(lambda_p: f64, v_o: f64) -> f64 {
    lambda_p * (-lambda_p * v_o).exp()
}

/// `(1 − e^{−λ_p V_o}) / V_o`, continuous at `V_o = 0`.
pub fn intensity_type2(lambda_p: f64, v_o: f64) -> f64 {
    let x = lambda_p * v_o;
    if x < 1e-8 {
        lambda_p * (1.0 - 0.5 * x)
    } else {
        -(-x).exp_m1() / v_o
    }
}

pub fn intensity(thinning: Thinning, lambda_p: f64, v_o: f64) -> f64 {
    match thinning {
        Thinning::TypeI => intensity_type1(lambda_p, v_o),
        Thinning::TypeII => intensity_type2(lambda_p, v_o),
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    /// `w × h` rectangle centred on the origin.
    pub fn centered(w: f64, h: f64) -> Self {
        Self::new(-w / 2.0, -h / 2.0, w / 2.0, h / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn expanded(&self, m: f64) -> Self {
        Self::new(self.x0 - m, self.y0 - m, self.x1 + m, self.y1 + m)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] < self.x1 && p[1] >= self.y0 && p[1] < self.y1
    }
}

/// One transceiver pair of the marked process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPair {
    pub geometry: PairGeometry,
    pub time_mark: f64,
    pub retained: bool,
}

/// A sampled window of pairs.
///
/// `pairs` holds every parent in the guard-expanded window; only pairs whose
/// transmitter lies inside `window` enter statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub window: Window,
    pub margin: f64,
    pub seed: u64,
    pub stream: u64,
    pub pairs: Vec<MarkedPair>,
    pub thinning: Option<Thinning>,
    /// Index of the typical pair, if one was inserted.
    pub typical: Option<usize>,
    /// Time mark reserved for a typical pair inserted later.
    pub typical_mark: f64,
}

impl Realization {
    pub fn sampling_window(&self) -> Window {
        self.window.expanded(self.margin)
    }

    pub fn retained(&self) -> impl Iterator<Item = (usize, &MarkedPair)> {
        self.pairs.iter().enumerate().filter(|(_, p)| p.retained)
    }

    /// Retained transmitters per unit area inside the observation window.
    pub fn retained_intensity(&self) -> f64 {
        let n = self
            .pairs
            .iter()
            .filter(|p| p.retained && self.window.contains(p.geometry.tx))
            .count();
        n as f64 / self.window.area()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "orientation", "mark", "retained"])?;
        for p in &self.pairs {
            w.write_record(&[
                p.geometry.tx[0].to_string(),
                p.geometry.tx[1].to_string(),
                p.geometry.orientation.to_string(),
                p.time_mark.to_string(),
                u8::from(p.retained).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generator for replication `stream` of a run seeded with `seed`.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Homogeneous PPP of pairs on `region` with uniform orientations and marks.
pub fn sample_parents<R: Rng + ?Sized>(
    lambda_p: f64,
    link_distance: f64,
    region: &Window,
    rng: &mut R,
) -> Vec<MarkedPair> {
    let mean = lambda_p * region.area();
    let n = if mean > 0.0 {
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    } else {
        0
    };
    (0..n)
        .map(|_| {
            let tx = [
                rng.random_range(region.x0..region.x1),
                rng.random_range(region.y0..region.y1),
            ];
            let orientation = rng.random_range(0.0..2.0 * PI);
            MarkedPair {
                geometry: PairGeometry::new(tx, orientation, link_distance),
                time_mark: rng.random::<f64>(),
                retained: true,
            }
        })
        .collect()
}

/// Unthinned Poisson bipolar realization for replication stream 0.
pub fn sample_bipolar(cfg: &NetworkConfig, window: Window, seed: u64) -> Result<Realization> {
    sample_bipolar_stream(cfg, window, seed, 0)
}

pub fn sample_bipolar_stream(
    cfg: &NetworkConfig,
    window: Window,
    seed: u64,
    stream: u64,
) -> Result<Realization> {
    if !(cfg.lambda_p.is_finite() && cfg.lambda_p > 0.0) {
        return Err(Error::invalid("lambda_p", "parent intensity must be positive"));
    }
    if window.area() <= 0.0 {
        return Err(Error::invalid("window", "observation window has no area"));
    }
    let mut rng = replication_rng(seed, stream);
    let margin = cfg.guard_margin();
    let typical_mark = rng.random::<f64>();
    let pairs = sample_parents(cfg.lambda_p, cfg.link_distance, &window.expanded(margin), &mut rng);
    Ok(Realization {
        window,
        margin,
        seed,
        stream,
        pairs,
        thinning: None,
        typical: None,
        typical_mark,
    })
}

/// Uniform bucket grid over transmitter positions.
///
/// With the cell side at least the radius of every exclusion region, all
/// transmitters that can fall into a region lie in the 3×3 cells around the
/// region's transmitter.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl SpatialGrid {
    pub fn build(points: &[Point], cell: f64) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        if let Some(p) = points.first() {
            (x0, y0, x1, y1) = (p[0], p[1], p[0], p[1]);
        }
        for p in points {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        let nx = ((x1 - x0) / cell).floor() as usize + 1;
        let ny = ((y1 - y0) / cell).floor() as usize + 1;
        let mut grid = Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|&p| grid.cell_of(p)).collect();
        for &c in &cells {
            grid.start[c + 1] += 1;
        }
        for c in 0..nx * ny {
            grid.start[c + 1] += grid.start[c];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn coords(&self, p: Point) -> (isize, isize) {
        (
            ((p[0] - self.x0) / self.cell).floor() as isize,
            ((p[1] - self.y0) / self.cell).floor() as isize,
        )
    }

    fn cell_of(&self, p: Point) -> usize {
        let (i, j) = self.coords(p);
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.ny as isize - 1) as usize;
        j * self.nx + i
    }

    /// Visit every stored index whose point may lie within one cell side of `p`.
    pub fn for_each_near(&self, p: Point, mut f: impl FnMut(usize)) {
        let (ci, cj) = self.coords(p);
        for j in cj - 1..=cj + 1 {
            if j < 0 || j >= self.ny as isize {
                continue;
            }
            for i in ci - 1..=ci + 1 {
                if i < 0 || i >= self.nx as isize {
                    continue;
                }
                let c = j as usize * self.nx + i as usize;
                for &k in &self.items[self.start[c] as usize..self.start[c + 1] as usize] {
                    f(k as usize);
                }
            }
        }
    }
}

/// Retention decisions on demand for a fixed parent set.
pub struct Thinner<'a> {
    pairs: &'a [MarkedPair],
    grid: SpatialGrid,
    spec: ExclusionSpec,
    thinning: Thinning,
}

impl<'a> Thinner<'a> {
    pub fn new(pairs: &'a [MarkedPair], cfg: &NetworkConfig, thinning: Thinning) -> Self {
        let pts: Vec<Point> = pairs.iter().map(|p| p.geometry.tx).collect();
        Self {
            pairs,
            grid: SpatialGrid::build(&pts, cfg.guard_margin()),
            spec: cfg.exclusion,
            thinning,
        }
    }

    /// Apply the thinning rule to pair `i` against all other parents.
    pub fn is_retained(&self, i: usize) -> bool {
        let me = &self.pairs[i];
        let st = Petal::tx(&me.geometry, &self.spec);
        let sr = Petal::rx(&me.geometry, &self.spec);
        let mut ok = true;
        self.grid.for_each_near(me.geometry.tx, |j| {
            if !ok || j == i {
                return;
            }
            let other = &self.pairs[j];
            if self.thinning == Thinning::TypeII
                && (other.time_mark, j) > (me.time_mark, i)
            {
                return;
            }
            let z = other.geometry.tx;
            if st.contains(z) || sr.contains(z) {
                ok = false;
            }
        });
        ok
    }
}

fn thin_with(real: &Realization, cfg: &NetworkConfig, thinning: Thinning) -> Realization {
    let flags: Vec<bool> = {
        let thinner = Thinner::new(&real.pairs, cfg, thinning);
        (0..real.pairs.len()).map(|i| thinner.is_retained(i)).collect()
    };
    let mut out = real.clone();
    for (p, f) in out.pairs.iter_mut().zip(flags) {
        p.retained = f;
    }
    out.thinning = Some(thinning);
    out
}

pub fn thin_type1(real: &Realization, cfg: &NetworkConfig) -> Realization {
    thin_with(real, cfg, Thinning::TypeI)
}

pub fn thin_type2(real: &Realization, cfg: &NetworkConfig) -> Realization {
    thin_with(real, cfg, Thinning::TypeII)
}

/// Thin according to `cfg.thinning`.
pub fn thin(real: &Realization, cfg: &NetworkConfig) -> Realization {
    thin_with(real, cfg, cfg.thinning)
}

/// Outcome of inserting the typical pair.
#[derive(Debug, Clone)]
pub struct PalmRealization {
    pub realization: Realization,
    pub typical_retained: bool,
}

/// Insert the typical pair (transmitter at the origin, receiver at `(d, 0)`)
/// into the parent set, thin, and report whether it survived.
///
/// Replications where it did not survive must be dropped from conditional
/// averages; see [`sample_palm`] for a sampler that never wastes them.
pub fn typical_pair_conditioning(real: &Realization, cfg: &NetworkConfig) -> PalmRealization {
    let mut parents = Vec::with_capacity(real.pairs.len() + 1);
    parents.push(MarkedPair {
        geometry: PairGeometry::typical(cfg.link_distance),
        time_mark: real.typical_mark,
        retained: true,
    });
    parents.extend(real.pairs.iter().map(|p| MarkedPair { retained: true, ..*p }));
    let base = Realization {
        pairs: parents,
        typical: Some(0),
        ..real.clone()
    };
    let thinned = thin(&base, cfg);
    let typical_retained = thinned.pairs[0].retained;
    PalmRealization {
        realization: thinned,
        typical_retained,
    }
}

/// Draw the parents of a realization conditioned on the typical pair being
/// retained, without rejection.
///
/// Type I: the parent PPP restricted to the complement of the typical
/// exclusion region. Type II: the typical mark has density proportional to
/// `e^{−λ_p V_o t}` on `[0, 1]` and parents in the typical region with smaller
/// marks are removed. The returned pairs are not thinned yet; index 0 is the
/// typical pair.
pub fn sample_palm_parents<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    window: &Window,
    v_o: f64,
    rng: &mut R,
) -> Vec<MarkedPair> {
    let typical = PairGeometry::typical(cfg.link_distance);
    let st = Petal::tx(&typical, &cfg.exclusion);
    let sr = Petal::rx(&typical, &cfg.exclusion);
    let t0 = match cfg.thinning {
        Thinning::TypeI => 0.0,
        Thinning::TypeII => {
            let x = cfg.lambda_p * v_o;
            let u: f64 = rng.random();
            if x < 1e-12 {
                u
            } else {
                (-(u * (-x).exp_m1()).ln_1p() / x).clamp(0.0, 1.0)
            }
        }
    };
    let mut pairs = Vec::new();
    pairs.push(MarkedPair {
        geometry: typical,
        time_mark: t0,
        retained: true,
    });
    for p in sample_parents(cfg.lambda_p, cfg.link_distance, window, rng) {
        let z = p.geometry.tx;
        let inside = st.contains(z) || sr.contains(z);
        let blocks = match cfg.thinning {
            Thinning::TypeI => inside,
            Thinning::TypeII => inside && p.time_mark < t0,
        };
        if !blocks {
            pairs.push(p);
        }
    }
    pairs
}

/// Palm realization with the typical pair at index 0, retained by construction.
pub fn sample_palm(cfg: &NetworkConfig, window: Window, seed: u64, stream: u64) -> Result<Realization> {
    if window.area() <= 0.0 {
        return Err(Error::invalid("window", "observation window has no area"));
    }
    if !window.contains([0.0, 0.0]) {
        return Err(Error::invalid("window", "must contain the typical transmitter"));
    }
    let mut rng = replication_rng(seed, stream);
    let margin = cfg.guard_margin();
    let pairs = sample_palm_parents(cfg, &window.expanded(margin), cfg.v_o(), &mut rng);
    let base = Realization {
        window,
        margin,
        seed,
        stream,
        typical_mark: pairs[0].time_mark,
        pairs,
        thinning: None,
        typical: Some(0),
    };
    let out = thin(&base, cfg);
    debug_assert!(out.pairs[0].retained);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_omni() -> NetworkConfig {
        crate::cli::config::cross_link_preset(0.02)
    }

    fn single(cfg: &NetworkConfig, tx: Point, orientation: f64, mark: f64) -> MarkedPair {
        MarkedPair {
            geometry: PairGeometry::new(tx, orientation, cfg.link_distance),
            time_mark: mark,
            retained: true,
        }
    }

    fn realization(pairs: Vec<MarkedPair>) -> Realization {
        Realization {
            window: Window::centered(1000.0, 1000.0),
            margin: 0.0,
            seed: 0,
            stream: 0,
            pairs,
            thinning: None,
            typical: None,
            typical_mark: 0.5,
        }
    }

    #[test]
    fn intensity_formulas() {
        let v = 130.0;
        assert!((intensity_type1(1.0 / v, v) - (-1.0f64).exp() / v).abs() < 1e-15);
        assert_eq!(intensity_type1(3e-4, 0.0), 3e-4);
        assert!((intensity_type1(2.0 / v, v) - 2.0 * (-2.0f64).exp() / v).abs() < 1e-15);
        assert!((intensity_type2(1e9, v) - 1.0 / v).abs() < 1e-15);
        assert!((intensity_type2(1.0 / v, v) - (1.0 - (-1.0f64).exp()) / v).abs() < 1e-15);
        let lp = 1e-12;
        assert!((intensity_type2(lp, v) / (lp * (1.0 - lp * v / 2.0)) - 1.0).abs() < 1e-10);
        assert_eq!(intensity_type2(5e-4, 0.0), 5e-4);
    }

    #[test]
    fn intensity_shapes() {
        let v = 200.0;
        let grid: Vec<f64> = (0..250).map(|i| 1e-5 * 1.03f64.powi(i)).collect();
        for w in grid.windows(2) {
            assert!(intensity_type2(w[1], v) > intensity_type2(w[0], v));
        }
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| intensity_type1(*a, v).total_cmp(&intensity_type1(*b, v)))
            .unwrap();
        assert!((best * v - 1.0).abs() < 0.03);
    }

    #[test]
    fn poisson_parent_count() {
        let cfg = NetworkConfig::default().with_lambda(4e-4);
        let region = Window::centered(1000.0, 1000.0);
        let n: Vec<usize> = (0..200)
            .map(|s| {
                let mut rng = replication_rng(9, s);
                sample_parents(cfg.lambda_p, cfg.link_distance, &region, &mut rng).len()
            })
            .collect();
        let mean = n.iter().sum::<usize>() as f64 / n.len() as f64;
        // 3σ of the mean of 200 Poisson(400) draws.
        assert!((mean - 400.0).abs() < 3.0 * (400.0f64 / 200.0).sqrt(), "{mean}");
        let mut rng = replication_rng(1, 0);
        assert!(sample_parents(1e-12, 20.0, &region, &mut rng).is_empty());
    }

    #[test]
    fn orientations_uniform_chi_square() {
        let mut rng = replication_rng(17, 0);
        let pairs = sample_parents(1e-2, 20.0, &Window::centered(500.0, 500.0), &mut rng);
        let bins = 20usize;
        let mut counts = vec![0f64; bins];
        for p in &pairs {
            counts[((p.geometry.orientation / (2.0 * PI)) * bins as f64) as usize % bins] += 1.0;
        }
        let e = pairs.len() as f64 / bins as f64;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        // 99th percentile of χ² with 19 degrees of freedom.
        assert!(chi2 < 36.19, "{chi2}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = NetworkConfig::default().with_lambda(0.0);
        assert!(sample_bipolar(&cfg, Window::centered(10.0, 10.0), 1).is_err());
        let cfg = NetworkConfig::default();
        assert!(sample_bipolar(&cfg, Window::centered(0.0, 10.0), 1).is_err());
    }

    #[test]
    fn single_pair_survives() {
        let cfg = cfg_omni();
        let r = realization(vec![single(&cfg, [0.0, 0.0], 0.0, 0.3)]);
        assert!(thin_type1(&r, &cfg).pairs[0].retained);
        assert!(thin_type2(&r, &cfg).pairs[0].retained);
    }

    #[test]
    fn mutual_cover_rules() {
        let cfg = cfg_omni();
        let r = realization(vec![
            single(&cfg, [0.0, 0.0], 0.0, 0.7),
            single(&cfg, [30.0, 10.0], 1.0, 0.2),
        ]);
        let t1 = thin_type1(&r, &cfg);
        assert!(!t1.pairs[0].retained && !t1.pairs[1].retained);
        let t2 = thin_type2(&r, &cfg);
        assert!(!t2.pairs[0].retained && t2.pairs[1].retained);
    }

    #[test]
    fn grid_finds_everything_in_range() {
        let cfg = NetworkConfig::default().with_lambda(5e-3);
        let mut rng = replication_rng(2, 0);
        let pairs = sample_parents(cfg.lambda_p, 20.0, &Window::centered(400.0, 400.0), &mut rng);
        let pts: Vec<Point> = pairs.iter().map(|p| p.geometry.tx).collect();
        let cell = cfg.guard_margin();
        let grid = SpatialGrid::build(&pts, cell);
        for (i, p) in pts.iter().enumerate().take(50) {
            let mut found = vec![];
            grid.for_each_near(*p, |j| found.push(j));
            for (j, q) in pts.iter().enumerate() {
                if (p[0] - q[0]).hypot(p[1] - q[1]) <= cell {
                    assert!(found.contains(&j), "{i} misses {j}");
                }
            }
        }
    }

    #[test]
    fn type2_removed_pairs_have_a_smaller_blocker() {
        let cfg = NetworkConfig::default().with_lambda(2e-3);
        let real = sample_bipolar(&cfg, Window::centered(400.0, 400.0), 5).unwrap();
        let t = thin_type2(&real, &cfg);
        assert!(t.pairs.iter().any(|p| p.retained));
        for (i, p) in t.pairs.iter().enumerate() {
            if p.retained {
                continue;
            }
            let blocked = t.pairs.iter().enumerate().any(|(j, q)| {
                j != i
                    && q.time_mark < p.time_mark
                    && crate::geometry::in_exclusion(q.geometry.tx, &p.geometry, &cfg.exclusion)
            });
            assert!(blocked);
        }
    }

    #[test]
    fn palm_insertion_retention_type1() {
        let cfg = cfg_omni().with_lambda(1e-5);
        let v_o = cfg.v_o();
        let reps = 3000;
        let mut kept = 0;
        for s in 0..reps {
            let real = sample_bipolar_stream(&cfg, Window::centered(200.0, 200.0), 4, s).unwrap();
            if typical_pair_conditioning(&real, &cfg).typical_retained {
                kept += 1;
            }
        }
        let p = (-cfg.lambda_p * v_o).exp();
        let sd = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((kept as f64 / reps as f64 - p).abs() < 3.0 * sd);
    }

    #[test]
    fn palm_insertion_retention_type2() {
        let cfg = cfg_omni().with_lambda(4e-5).with_thinning(Thinning::TypeII);
        let x = cfg.lambda_p * cfg.v_o();
        let reps = 3000;
        let mut kept = 0;
        for s in 0..reps {
            let real = sample_bipolar_stream(&cfg, Window::centered(200.0, 200.0), 8, s).unwrap();
            if typical_pair_conditioning(&real, &cfg).typical_retained {
                kept += 1;
            }
        }
        // ∫₀¹ e^{−x t} dt
        let p = -(-x).exp_m1() / x;
        let sd = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((kept as f64 / reps as f64 - p).abs() < 3.0 * sd);
    }

    #[test]
    fn exact_palm_sampler_keeps_typical() {
        for th in [Thinning::TypeI, Thinning::TypeII] {
            let cfg = cfg_omni().with_lambda(3e-4).with_thinning(th);
            for s in 0..20 {
                let r = sample_palm(&cfg, Window::centered(300.0, 300.0), 1, s).unwrap();
                assert!(r.pairs[0].retained);
            }
        }
    }

    #[test]
    fn csv_export() {
        let cfg = NetworkConfig::default().with_lambda(1e-4);
        let real = thin(&sample_bipolar(&cfg, Window::centered(300.0, 300.0), 3).unwrap(), &cfg);
        let mut buf = Vec::new();
        real.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,y,orientation,mark,retained\n"));
        assert_eq!(text.lines().count(), real.pairs.len() + 1);
    }
}
