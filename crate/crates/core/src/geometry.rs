//! Antenna gain patterns and the RTS/CTS exclusion regions they induce.
//!
//! Every exclusion region is a *petal*: a star-shaped set around an apex
//! (a transmitter or a receiver) whose radial reach in direction `φ` off the
//! boresight is `range · sqrt(G(φ))`, with `G` the simplified cosine gain.
//! For zero element spacing the gain is identically one and the petal is a
//! disk.
//!
//! Union areas are computed exactly by integrating `½∮(x dy − y dx)` over the
//! parts of each petal boundary that are not covered by another petal. The
//! line integral over a boundary sub-arc has a closed form, so the only
//! approximation is the location of boundary crossings, which are refined by
//! bisection to ~1e-11 rad.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::pointprocess::NetworkConfig;

/// A point in the plane, meters.
pub type Point = [f64; 2];

/// Uniform linear array parameters shared by transmitters and receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaConfig {
    /// Transmit elements.
    pub n_t: u32,
    /// Receive elements.
    pub n_r: u32,
    /// Element spacing in meters. Zero means omnidirectional.
    pub d0: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl AntennaConfig {
    /// Half-wavelength spaced array at the given carrier frequency.
    pub fn half_wavelength(n_t: u32, n_r: u32, carrier_hz: f64) -> Self {
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self {
            n_t,
            n_r,
            d0: wavelength / 2.0,
            wavelength,
        }
    }

    /// Omnidirectional antenna (all gains are one).
    pub fn omni(n_t: u32, n_r: u32, carrier_hz: f64) -> Self {
        Self {
            n_t,
            n_r,
            d0: 0.0,
            wavelength: SPEED_OF_LIGHT / carrier_hz,
        }
    }

    pub fn is_omni(&self) -> bool {
        self.d0 == 0.0
    }

    /// Support half-width `λ/(d0·n)` of the simplified gain, in radians.
    /// Infinite for the omnidirectional case.
    pub fn half_beamwidth(&self, n: u32) -> f64 {
        if self.is_omni() {
            f64::INFINITY
        } else {
            self.wavelength / (self.d0 * n as f64)
        }
    }
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// RTS and CTS ranges plus the array that shapes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionSpec {
    pub r_t: f64,
    pub r_r: f64,
    pub antenna: AntennaConfig,
}

impl ExclusionSpec {
    /// Radius around a transmitter that contains its whole exclusion region.
    pub fn bounding_radius(&self, link_distance: f64) -> f64 {
        self.r_t.max(link_distance + self.r_r)
    }
}

/// One transceiver pair: transmitter position and the direction of its receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    pub tx: Point,
    /// Angle of the vector tx -> rx, radians.
    pub orientation: f64,
    pub link_distance: f64,
}

impl PairGeometry {
    pub fn new(tx: Point, orientation: f64, link_distance: f64) -> Self {
        Self {
            tx,
            orientation,
            link_distance,
        }
    }

    /// The typical pair: transmitter at the origin, receiver at `(d, 0)`.
    pub fn typical(link_distance: f64) -> Self {
        Self::new([0.0, 0.0], 0.0, link_distance)
    }

    pub fn rx(&self) -> Point {
        [
            self.tx[0] + self.link_distance * self.orientation.cos(),
            self.tx[1] + self.link_distance * self.orientation.sin(),
        ]
    }
}

/// Which half of a pair's exclusion region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Array factor `sin²(πnϑ) / (n² sin²(πϑ))` of an `n`-element ULA steered to
/// broadside, as a function of the normalized spatial angle `ϑ = d0 sin φ / λ`.
pub fn gain_actual(theta: f64, n: u32) -> f64 {
    let nf = n as f64;
    let den = (PI * theta).sin();
    if den.abs() < 1e-12 {
        return 1.0;
    }
    let num = (PI * nf * theta).sin();
    (num * num) / (nf * nf * den * den)
}

/// Cosine approximation of [`gain_actual`]: `cos²(πnϑ/2)` on `|ϑ| ≤ 1/n`.
pub fn gain_cosine(theta: f64, n: u32) -> f64 {
    let nf = n as f64;
    if theta.abs() <= 1.0 / nf {
        let c = (PI * nf * theta / 2.0).cos();
        c * c
    } else {
        0.0
    }
}

/// Simplified directional gain in the physical angle `φ` off boresight.
pub fn gain_physical(phi: f64, n: u32, antenna: &AntennaConfig) -> f64 {
    if antenna.is_omni() {
        return 1.0;
    }
    let w = antenna.half_beamwidth(n);
    let phi = wrap_angle(phi).abs();
    if phi <= w {
        let c = (PI * phi / (2.0 * w)).cos();
        c * c
    } else {
        0.0
    }
}

/// A star-shaped exclusion region around `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Petal {
    pub center: Point,
    pub boresight: f64,
    pub range: f64,
    /// Support half-width of the gain; infinite for a disk.
    pub half_width: f64,
}

impl Petal {
    pub fn new(center: Point, boresight: f64, range: f64, half_width: f64) -> Self {
        Self {
            center,
            boresight,
            range,
            half_width,
        }
    }

    /// RTS-cleaned region `S_t` of a pair.
    pub fn tx(pair: &PairGeometry, spec: &ExclusionSpec) -> Self {
        Self::new(
            pair.tx,
            pair.orientation,
            spec.r_t,
            spec.antenna.half_beamwidth(spec.antenna.n_t),
        )
    }

    /// CTS-cleaned region `S_r` of a pair; its boresight points back at the transmitter.
    pub fn rx(pair: &PairGeometry, spec: &ExclusionSpec) -> Self {
        Self::new(
            pair.rx(),
            pair.orientation + PI,
            spec.r_r,
            spec.antenna.half_beamwidth(spec.antenna.n_r),
        )
    }

    pub fn is_disk(&self) -> bool {
        self.half_width.is_infinite()
    }

    /// Parameter range `[-W, W]` of the boundary curve.
    fn param_limit(&self) -> f64 {
        self.half_width.min(PI)
    }

    /// Radial reach `range · sqrt(G(φ))` at offset `φ` from boresight.
    pub fn reach(&self, phi: f64) -> f64 {
        if self.is_disk() {
            return self.range;
        }
        let phi = phi.abs();
        if phi > self.param_limit() {
            0.0
        } else {
            self.range * (PI * phi / (2.0 * self.half_width)).cos()
        }
    }

    /// Signed distance-like margin: negative strictly inside, positive outside.
    pub fn margin(&self, z: Point) -> f64 {
        let dx = z[0] - self.center[0];
        let dy = z[1] - self.center[1];
        let dist = dx.hypot(dy);
        if self.is_disk() || dist == 0.0 {
            return dist - self.range;
        }
        let phi = wrap_angle(dy.atan2(dx) - self.boresight);
        dist - self.reach(phi)
    }

    /// Closed membership test.
    pub fn contains(&self, z: Point) -> bool {
        let dx = z[0] - self.center[0];
        let dy = z[1] - self.center[1];
        let d2 = dx * dx + dy * dy;
        if d2 > self.range * self.range {
            return false;
        }
        if d2 == 0.0 || self.is_disk() {
            return true;
        }
        let phi = wrap_angle(dy.atan2(dx) - self.boresight);
        d2.sqrt() <= self.reach(phi)
    }

    /// Exact area `½∫ range² G(φ) dφ`.
    pub fn area(&self) -> f64 {
        self.rho2_integral(self.param_limit()) - self.rho2_integral(-self.param_limit())
    }

    /// Antiderivative of `½ρ(φ)²`.
    fn rho2_integral(&self, phi: f64) -> f64 {
        let r2 = self.range * self.range;
        if self.is_disk() {
            0.5 * r2 * phi
        } else {
            let k = PI / (2.0 * self.half_width);
            0.5 * r2 * (0.5 * phi + (2.0 * k * phi).sin() / (4.0 * k))
        }
    }

    fn boundary_point(&self, phi: f64) -> Point {
        let rho = self.reach(phi);
        let psi = self.boresight + phi;
        [
            self.center[0] + rho * psi.cos(),
            self.center[1] + rho * psi.sin(),
        ]
    }

    /// `½∫(x dy − y dx)` along the boundary for `φ ∈ [a, b]`.
    fn green(&self, a: f64, b: f64) -> f64 {
        let end_term = |phi: f64| {
            let rho = self.reach(phi);
            let psi = self.boresight + phi;
            0.5 * rho * (self.center[0] * psi.sin() - self.center[1] * psi.cos())
        };
        self.rho2_integral(b) - self.rho2_integral(a) + end_term(b) - end_term(a)
    }
}

/// `true` iff `z` lies in the transmitter's RTS-cleaned region.
pub fn in_tx_exclusion(z: Point, pair: &PairGeometry, spec: &ExclusionSpec) -> bool {
    Petal::tx(pair, spec).contains(z)
}

/// `true` iff `z` lies in the receiver's CTS-cleaned region.
pub fn in_rx_exclusion(z: Point, pair: &PairGeometry, spec: &ExclusionSpec) -> bool {
    Petal::rx(pair, spec).contains(z)
}

/// `true` iff `z` lies in `S_t(y) ∪ S_r(x)` of the pair.
pub fn in_exclusion(z: Point, pair: &PairGeometry, spec: &ExclusionSpec) -> bool {
    in_tx_exclusion(z, pair, spec) || in_rx_exclusion(z, pair, spec)
}

/// Area of one petal; `π r²` in the omnidirectional case.
pub fn region_area_single(spec: &ExclusionSpec, which: Side) -> f64 {
    let (range, n) = match which {
        Side::Tx => (spec.r_t, spec.antenna.n_t),
        Side::Rx => (spec.r_r, spec.antenna.n_r),
    };
    Petal::new([0.0, 0.0], 0.0, range, spec.antenna.half_beamwidth(n)).area()
}

/// Area of `S_t(A) ∪ S_r(A) ∪ S_t(B) ∪ S_r(B)`. With `a == b` this is `V_o`.
pub fn union_area(a: &PairGeometry, b: &PairGeometry, spec: &ExclusionSpec) -> f64 {
    union_area_petals(&[
        Petal::tx(a, spec),
        Petal::rx(a, spec),
        Petal::tx(b, spec),
        Petal::rx(b, spec),
    ])
}

/// Area of one pair's exclusion region `S_t ∪ S_r`.
pub fn exclusion_area(pair: &PairGeometry, spec: &ExclusionSpec) -> f64 {
    union_area_petals(&[Petal::tx(pair, spec), Petal::rx(pair, spec)])
}

const BOUNDARY_SAMPLES: usize = 128;
const BISECTION_STEPS: usize = 36;

/// Area of a union of petals by boundary integration.
pub fn union_area_petals(petals: &[Petal]) -> f64 {
    let mut total = 0.0;
    let mut neighbours = Vec::with_capacity(petals.len());
    for (i, p) in petals.iter().enumerate() {
        if p.range <= 0.0 {
            continue;
        }
        neighbours.clear();
        for (j, q) in petals.iter().enumerate() {
            if j == i || q.range <= 0.0 {
                continue;
            }
            let gap = (p.center[0] - q.center[0]).hypot(p.center[1] - q.center[1]);
            if gap <= p.range + q.range {
                neighbours.push(j);
            }
        }
        if neighbours.is_empty() {
            total += p.area();
            continue;
        }
        let tol = 1e-9 * p.range.max(1.0);
        // Ties on shared boundary pieces are counted once: earlier petals are
        // tested closed, later ones open.
        let covered = |phi: f64| {
            let z = p.boundary_point(phi);
            neighbours.iter().any(|&j| {
                let m = petals[j].margin(z);
                if j < i {
                    m <= tol
                } else {
                    m < -tol
                }
            })
        };
        let w = p.param_limit();
        let step = 2.0 * w / BOUNDARY_SAMPLES as f64;
        let mut prev_phi = -w;
        let mut prev_cov = covered(prev_phi);
        let mut open_at = if prev_cov { None } else { Some(-w) };
        for m in 1..=BOUNDARY_SAMPLES {
            let phi = if m == BOUNDARY_SAMPLES {
                w
            } else {
                -w + step * m as f64
            };
            let cov = covered(phi);
            if cov != prev_cov {
                let (mut lo, mut hi) = (prev_phi, phi);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if covered(mid) == prev_cov {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let cross = 0.5 * (lo + hi);
                match open_at.take() {
                    Some(start) => total += p.green(start, cross),
                    None => open_at = Some(cross),
                }
            }
            prev_phi = phi;
            prev_cov = cov;
        }
        if let Some(start) = open_at {
            total += p.green(start, w);
        }
    }
    total
}

/// Membership predicates of another pair at `(r, β, θ)` relative to the
/// typical pair (transmitter at the origin, receiver at `(d, 0)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SCriteria {
    /// Origin inside the other pair's RTS region.
    pub s1: bool,
    /// Origin inside the other pair's CTS region.
    pub s2: bool,
    /// Other transmitter inside the typical RTS region.
    pub s3: bool,
    /// Other transmitter inside the typical CTS region.
    pub s4: bool,
}

impl SCriteria {
    /// The typical pair is inside the other pair's region (`S1 ∪ S2`).
    pub fn typical_covered(&self) -> bool {
        self.s1 || self.s2
    }

    /// The other transmitter is inside the typical region (`S3 ∪ S4`).
    pub fn other_covered(&self) -> bool {
        self.s3 || self.s4
    }

    pub fn any(&self) -> bool {
        self.typical_covered() || self.other_covered()
    }
}

/// Pair at polar position `(r, β)` with orientation `θ`.
pub fn pair_at(r: f64, beta: f64, theta: f64, link_distance: f64) -> PairGeometry {
    PairGeometry::new([r * beta.cos(), r * beta.sin()], theta, link_distance)
}

/// Evaluate `S1..S4` by direct membership tests.
pub fn s_criteria(r: f64, beta: f64, theta: f64, cfg: &NetworkConfig) -> SCriteria {
    let d = cfg.link_distance;
    let spec = &cfg.exclusion;
    let typical = PairGeometry::typical(d);
    let other = pair_at(r, beta, theta, d);
    s_criteria_pairs(&typical, &other, spec)
}

pub(crate) fn s_criteria_pairs(
    typical: &PairGeometry,
    other: &PairGeometry,
    spec: &ExclusionSpec,
) -> SCriteria {
    SCriteria {
        s1: in_tx_exclusion(typical.tx, other, spec),
        s2: in_rx_exclusion(typical.tx, other, spec),
        s3: in_tx_exclusion(other.tx, typical, spec),
        s4: in_rx_exclusion(other.tx, typical, spec),
    }
}
