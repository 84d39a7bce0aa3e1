//! Cross-link control frames and their wire format.
//!
//! ```text
//! kind:1 | duration1:2 | duration2:2 | ra:6 | [ta:6]          | fcs:4   RTSx
//! kind:1 | duration1:2 | duration2:2 | ra:6 |                  | fcs:4   CTSx
//! kind:1 | duration1:2 | duration2:2 | ra:6 | nav_sa:6 nav_da:6 | fcs:4  DTSx
//! ```
//!
//! Integers are little-endian; the FCS is the IEEE CRC-32 of all preceding bytes.

use std::fmt;

use serde::{Deserialize, Serialize};

pub type MacAddr = [u8; 6];

/// Parse `aa:bb:cc:dd:ee:ff`.
pub fn parse_mac(s: &str) -> Option<MacAddr> {
    let mut out = [0u8; 6];
    let mut parts = s.split(':');
    for b in out.iter_mut() {
        *b = u8::from_str_radix(parts.next()?, 16).ok()?;
    }
    parts.next().is_none().then_some(out)
}

pub fn format_mac(m: &MacAddr) -> String {
    m.iter().map(|b| format!("{b:02x}")).collect::<Vec<_>>().join(":")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    Rtsx,
    Ctsx,
    Dtsx,
}

impl FrameKind {
    pub fn code(self) -> u8 {
        match self {
            FrameKind::Rtsx => 0x01,
            FrameKind::Ctsx => 0x02,
            FrameKind::Dtsx => 0x03,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0x01 => Some(FrameKind::Rtsx),
            0x02 => Some(FrameKind::Ctsx),
            0x03 => Some(FrameKind::Dtsx),
            _ => None,
        }
    }

    /// Encoded length including the FCS.
    pub fn wire_len(self) -> usize {
        HEADER_LEN
            + match self {
                FrameKind::Rtsx => 6,
                FrameKind::Ctsx => 0,
                FrameKind::Dtsx => 12,
            }
            + 4
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Rtsx => "RTSx",
            FrameKind::Ctsx => "CTSx",
            FrameKind::Dtsx => "DTSx",
        }
    }
}

const HEADER_LEN: usize = 1 + 2 + 2 + 6;

/// A decoded control frame. `duration1` reserves the lower band and
/// `duration2` the mm-wave band, both in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlFrame {
    Rtsx { duration1: u16, duration2: u16, ra: MacAddr, ta: MacAddr },
    Ctsx { duration1: u16, duration2: u16, ra: MacAddr },
    Dtsx { duration1: u16, duration2: u16, ra: MacAddr, nav_sa: MacAddr, nav_da: MacAddr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameError {
    Truncated { needed: usize, got: usize },
    BadFcs { expected: u32, found: u32 },
    UnknownKind(u8),
    /// Bytes beyond the end of the frame.
    TrailingBytes(usize),
    /// A duration does not fit the 16-bit field.
    DurationOverflow(u64),
}

impl fmt::Display for FrameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameError::Truncated { needed, got } => write!(f, "truncated frame: need {needed} bytes, got {got}"),
            FrameError::BadFcs { expected, found } => write!(f, "bad FCS: computed {expected:08x}, found {found:08x}"),
            FrameError::UnknownKind(k) => write!(f, "unknown frame kind 0x{k:02x}"),
            FrameError::TrailingBytes(n) => write!(f, "{n} trailing bytes after frame"),
            FrameError::DurationOverflow(us) => write!(f, "duration {us} us exceeds 65535"),
        }
    }
}

impl std::error::Error for FrameError {}

/// Convert a duration to its 16-bit field.
pub fn duration_field(us: u64) -> Result<u16, FrameError> {
    u16::try_from(us).map_err(|_| FrameError::DurationOverflow(us))
}

impl ControlFrame {
    pub fn kind(&self) -> FrameKind {
        match self {
            ControlFrame::Rtsx { .. } => FrameKind::Rtsx,
            ControlFrame::Ctsx { .. } => FrameKind::Ctsx,
            ControlFrame::Dtsx { .. } => FrameKind::Dtsx,
        }
    }

    pub fn durations(&self) -> (u16, u16) {
        match *self {
            ControlFrame::Rtsx { duration1, duration2, .. }
            | ControlFrame::Ctsx { duration1, duration2, .. }
            | ControlFrame::Dtsx { duration1, duration2, .. } => (duration1, duration2),
        }
    }

    pub fn ra(&self) -> MacAddr {
        match *self {
            ControlFrame::Rtsx { ra, .. } | ControlFrame::Ctsx { ra, .. } | ControlFrame::Dtsx { ra, .. } => ra,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (d1, d2) = self.durations();
        let mut out = Vec::with_capacity(self.kind().wire_len());
        out.push(self.kind().code());
        out.extend_from_slice(&d1.to_le_bytes());
        out.extend_from_slice(&d2.to_le_bytes());
        out.extend_from_slice(&self.ra());
        match self {
            ControlFrame::Rtsx { ta, .. } => out.extend_from_slice(ta),
            ControlFrame::Ctsx { .. } => {}
            ControlFrame::Dtsx { nav_sa, nav_da, .. } => {
                out.extend_from_slice(nav_sa);
                out.extend_from_slice(nav_da);
            }
        }
        let fcs = crc32fast::hash(&out);
        out.extend_from_slice(&fcs.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        let Some(&code) = bytes.first() else {
            return Err(FrameError::Truncated { needed: 1, got: 0 });
        };
        let kind = FrameKind::from_code(code).ok_or(FrameError::UnknownKind(code))?;
        let len = kind.wire_len();
        if bytes.len() < len {
            return Err(FrameError::Truncated { needed: len, got: bytes.len() });
        }
        if bytes.len() > len {
            return Err(FrameError::TrailingBytes(bytes.len() - len));
        }
        let body = &bytes[..len - 4];
        let found = u32::from_le_bytes(bytes[len - 4..].try_into().expect("4 bytes"));
        let expected = crc32fast::hash(body);
        if found != expected {
            return Err(FrameError::BadFcs { expected, found });
        }
        let u16_at = |i: usize| u16::from_le_bytes([body[i], body[i + 1]]);
        let mac_at = |i: usize| -> MacAddr { body[i..i + 6].try_into().expect("6 bytes") };
        let (duration1, duration2, ra) = (u16_at(1), u16_at(3), mac_at(5));
        Ok(match kind {
            FrameKind::Rtsx => ControlFrame::Rtsx { duration1, duration2, ra, ta: mac_at(11) },
            FrameKind::Ctsx => ControlFrame::Ctsx { duration1, duration2, ra },
            FrameKind::Dtsx => ControlFrame::Dtsx { duration1, duration2, ra, nav_sa: mac_at(11), nav_da: mac_at(17) },
        })
    }
}
