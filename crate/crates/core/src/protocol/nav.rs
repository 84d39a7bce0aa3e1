//! Dual-band network allocation vectors.

use serde::Serialize;

use super::frame::{ControlFrame, MacAddr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ap,
    Sta,
    Neighbor,
}

/// A reservation learned from an overheard frame. A `da` of `None` (from a
/// CTSx, which names only one party) matches any destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reservation {
    pub sa: MacAddr,
    pub da: Option<MacAddr>,
    pub sub7_until: u64,
    pub mmwave_until: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceState {
    pub id: MacAddr,
    pub role: Role,
    /// Expiry of the lower-band NAV, µs.
    pub nav_sub7: u64,
    /// Expiry of the mm-wave NAV, µs.
    pub nav_mmwave: u64,
    /// Deadline by which the mm-wave data must start (set at a CTSx sender).
    pub pending_timeout: Option<u64>,
    pub reservations: Vec<Reservation>,
}

impl DeviceState {
    pub fn new(id: MacAddr, role: Role) -> Self {
        Self { id, role, nav_sub7: 0, nav_mmwave: 0, pending_timeout: None, reservations: Vec::new() }
    }

    pub fn sub7_idle(&self, now: u64) -> bool {
        self.nav_sub7 <= now
    }

    pub fn mmwave_idle(&self, now: u64) -> bool {
        self.nav_mmwave <= now
    }
}

/// Apply an overheard frame at time `now`.
///
/// RTSx/CTSx extend each NAV to `max(current, now + duration)`; a zero
/// duration leaves that NAV unchanged. DTSx drops the reservations of the
/// named `(nav_sa, nav_da)` exchange and recomputes both NAVs from the rest,
/// never below `now`.
pub fn nav_update(device: &DeviceState, frame: &ControlFrame, now: u64) -> DeviceState {
    let mut out = device.clone();
    match *frame {
        ControlFrame::Rtsx { duration1, duration2, ra, ta } => {
            out.reserve(ta, Some(ra), duration1, duration2, now);
        }
        ControlFrame::Ctsx { duration1, duration2, ra } => {
            out.reserve(ra, None, duration1, duration2, now);
        }
        ControlFrame::Dtsx { nav_sa, nav_da, .. } => {
            out.reservations
                .retain(|r| !(r.sa == nav_sa && r.da.is_none_or(|d| d == nav_da)));
            out.nav_sub7 = out.reservations.iter().map(|r| r.sub7_until).max().unwrap_or(now).max(now);
            out.nav_mmwave = out.reservations.iter().map(|r| r.mmwave_until).max().unwrap_or(now).max(now);
        }
    }
    out
}

impl DeviceState {
    fn reserve(&mut self, sa: MacAddr, da: Option<MacAddr>, d1: u16, d2: u16, now: u64) {
        if d1 == 0 && d2 == 0 {
            return;
        }
        let sub7_until = if d1 > 0 { now + d1 as u64 } else { 0 };
        let mmwave_until = if d2 > 0 { now + d2 as u64 } else { 0 };
        self.nav_sub7 = self.nav_sub7.max(sub7_until);
        self.nav_mmwave = self.nav_mmwave.max(mmwave_until);
        self.reservations.push(Reservation { sa, da, sub7_until, mmwave_until });
    }
}
