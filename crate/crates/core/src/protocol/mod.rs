//! Cross-link RTS/CTS: control frames on the lower band reserve both the
//! lower band and the mm-wave band, data goes over mm-wave.

pub mod frame;
pub mod nav;
pub mod sim;

pub use frame::{duration_field, format_mac, parse_mac, ControlFrame, FrameError, FrameKind, MacAddr};
pub use nav::{nav_update, DeviceState, Reservation, Role};
pub use sim::{check_liveness, check_recovery, check_safety, run_handshake, EventKind, EventLog, LogEntry, Link, Scenario, Timing};
