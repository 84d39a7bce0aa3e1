//! Event simulation of the cross-link handshake.
//!
//! Per flow: the AP wins lower-band contention and sends RTSx to its STA; the
//! STA answers with CTSx if its mm-wave channel is idle; every other device in
//! lower-band range of a sender updates both NAVs; the AP starts mm-wave data
//! after an IFS plus a random backoff. If data has not started `T0` after the
//! CTSx, the STA broadcasts DTSx and listeners drop that reservation.
//!
//! There is no capture or collision model: a device defers while any
//! reception it overheard is in progress, and simultaneous contention ends
//! are resolved by flow order.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::frame::{duration_field, format_mac, parse_mac, ControlFrame, FrameKind, MacAddr};
use super::nav::{nav_update, DeviceState, Role};
use crate::pointprocess::replication_rng;
use crate::{Error, Result};

pub const BROADCAST: MacAddr = [0xff; 6];

/// Timing parameters, µs unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    pub slot_us: u64,
    pub sifs_us: u64,
    pub difs_us: u64,
    /// Lower-band backoff window, slots.
    pub cw_slots: u64,
    pub mm_slot_us: u64,
    pub mm_ifs_us: u64,
    /// mm-wave backoff window, slots.
    pub mm_cw_slots: u64,
    /// Data start deadline after CTSx. Defaults to three mm-wave backoff windows.
    pub t0_us: Option<u64>,
    pub sub7_rate_mbps: f64,
    pub mm_rate_mbps: f64,
    pub preamble_us: u64,
    pub data_bytes: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            slot_us: 9,
            sifs_us: 16,
            difs_us: 34,
            cw_slots: 15,
            mm_slot_us: 5,
            mm_ifs_us: 3,
            mm_cw_slots: 15,
            t0_us: None,
            sub7_rate_mbps: 6.0,
            mm_rate_mbps: 1000.0,
            preamble_us: 20,
            data_bytes: 1500,
        }
    }
}

impl Timing {
    pub fn t0(&self) -> u64 {
        self.t0_us.unwrap_or(3 * self.mm_cw_slots * self.mm_slot_us)
    }

    fn airtime(&self, bytes: u64, rate_mbps: f64) -> u64 {
        self.preamble_us + ((bytes * 8) as f64 / rate_mbps).ceil() as u64
    }

    pub fn control_airtime(&self, kind: FrameKind) -> u64 {
        self.airtime(kind.wire_len() as u64, self.sub7_rate_mbps)
    }

    pub fn data_airtime(&self) -> u64 {
        self.airtime(self.data_bytes, self.mm_rate_mbps)
    }

    /// Latest data start after the CTSx ends.
    pub fn max_data_delay(&self) -> u64 {
        self.mm_ifs_us + self.mm_cw_slots * self.mm_slot_us
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub name: String,
    pub mac: String,
    pub role: RoleSpec,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleSpec {
    Ap,
    Sta,
    Neighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub ap: String,
    pub sta: String,
    #[serde(default)]
    pub start_us: u64,
    /// The AP never occupies the mm-wave channel after CTSx.
    #[serde(default)]
    pub ap_fails: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Radio {
    /// Lower-band reception radius, m.
    pub sub7_range: f64,
    /// mm-wave sensing radius, m.
    pub mmwave_range: f64,
}

impl Default for Radio {
    fn default() -> Self {
        Self { sub7_range: 100.0, mmwave_range: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub radio: Radio,
    #[serde(rename = "device")]
    pub devices: Vec<DeviceSpec>,
    #[serde(rename = "flow", default)]
    pub flows: Vec<FlowSpec>,
    /// Failed handshakes are retried up to this many times.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_retries() -> u32 {
    3
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.timing;
        if t.sub7_rate_mbps <= 0.0 || t.mm_rate_mbps <= 0.0 {
            return Err(Error::invalid("timing.rate", "rates must be positive"));
        }
        if t.t0() <= t.max_data_delay() {
            return Err(Error::invalid("timing.t0_us", "must exceed the mm-wave IFS plus the backoff window"));
        }
        let mut seen = HashMap::new();
        for (i, d) in self.devices.iter().enumerate() {
            let mac = parse_mac(&d.mac).ok_or_else(|| Error::invalid(format!("device[{i}].mac"), format!("bad address {:?}", d.mac)))?;
            if seen.insert(d.name.clone(), mac).is_some() {
                return Err(Error::invalid(format!("device[{i}].name"), format!("duplicate name {:?}", d.name)));
            }
        }
        for (i, f) in self.flows.iter().enumerate() {
            for (field, name) in [("ap", &f.ap), ("sta", &f.sta)] {
                if !seen.contains_key(name) {
                    return Err(Error::invalid(format!("flow[{i}].{field}"), format!("unknown device {name:?}")));
                }
            }
            if f.ap == f.sta {
                return Err(Error::invalid(format!("flow[{i}]"), "AP and STA must differ"));
            }
        }
        // Reservation lengths must fit the 16-bit fields.
        let (_, d2) = self.rts_durations();
        duration_field(d2).map_err(|e| Error::invalid("timing", e.to_string()))?;
        Ok(())
    }

    /// Durations carried by RTSx: through the CTSx on the lower band, and
    /// through the latest possible end of data on mm-wave.
    fn rts_durations(&self) -> (u64, u64) {
        let t = &self.timing;
        let cts = t.sifs_us + t.control_airtime(FrameKind::Ctsx);
        (cts, cts + t.max_data_delay() + t.data_airtime())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Sub7,
    Mmwave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BackoffStart,
    TxStart,
    TxEnd,
    Rx,
    NavSet,
    NavReset,
    CtsTimeout,
    MmwaveBusy,
    DataStart,
    DataEnd,
    DtsTimeout,
    FlowFailed,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::BackoffStart => "backoff_start",
            EventKind::TxStart => "tx_start",
            EventKind::TxEnd => "tx_end",
            EventKind::Rx => "rx",
            EventKind::NavSet => "nav_set",
            EventKind::NavReset => "nav_reset",
            EventKind::CtsTimeout => "cts_timeout",
            EventKind::MmwaveBusy => "mmwave_busy",
            EventKind::DataStart => "data_start",
            EventKind::DataEnd => "data_end",
            EventKind::DtsTimeout => "dts_timeout",
            EventKind::FlowFailed => "flow_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub time_us: u64,
    pub device: String,
    pub event: EventKind,
    pub link: Option<Link>,
    pub frame: Option<ControlFrame>,
    /// Index of the flow this entry belongs to.
    pub flow: usize,
}

impl LogEntry {
    fn kind_label(&self) -> &'static str {
        match (&self.frame, self.event) {
            (Some(f), _) => f.kind().name(),
            (None, EventKind::DataStart | EventKind::DataEnd) => "DATA",
            (None, EventKind::TxStart | EventKind::TxEnd) if self.link == Some(Link::Mmwave) => "DATA",
            _ => "",
        }
    }
}

/// Ordered record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_us", "device", "event", "frame_kind", "dur1", "dur2"])?;
        for e in &self.entries {
            let (d1, d2) = e.frame.map(|f| f.durations()).map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
            w.write_record([e.time_us.to_string(), e.device.clone(), e.event.name().to_string(), e.kind_label().to_string(), d1, d2])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].time_us <= w[1].time_us)
    }
}

struct Node {
    spec: DeviceSpec,
    mac: MacAddr,
    state: DeviceState,
    /// End of the latest reception or own transmission on the lower band.
    busy_until: u64,
}

struct Engine<'a> {
    sc: &'a Scenario,
    nodes: Vec<Node>,
    by_name: HashMap<String, usize>,
    log: Vec<LogEntry>,
    /// mm-wave transmissions (device, start, end) for carrier sensing.
    mm_tx: Vec<(usize, u64, u64)>,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario) -> Self {
        let nodes: Vec<Node> = sc
            .devices
            .iter()
            .map(|d| {
                let mac = parse_mac(&d.mac).expect("validated");
                let role = match d.role {
                    RoleSpec::Ap => Role::Ap,
                    RoleSpec::Sta => Role::Sta,
                    RoleSpec::Neighbor => Role::Neighbor,
                };
                Node { spec: d.clone(), mac, state: DeviceState::new(mac, role), busy_until: 0 }
            })
            .collect();
        let by_name = nodes.iter().enumerate().map(|(i, n)| (n.spec.name.clone(), i)).collect();
        Self { sc, nodes, by_name, log: Vec::new(), mm_tx: Vec::new() }
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.nodes[a].spec.position, self.nodes[b].spec.position);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    fn push(&mut self, time_us: u64, dev: usize, event: EventKind, link: Option<Link>, frame: Option<ControlFrame>, flow: usize) {
        let device = self.nodes[dev].spec.name.clone();
        self.log.push(LogEntry { time_us, device, event, link, frame, flow });
    }

    /// Send a control frame on the lower band; everyone in range hears it at
    /// the end of the transmission. Non-addressees update their NAVs.
    fn send_control(&mut self, src: usize, frame: ControlFrame, start: u64, flow: usize) -> u64 {
        let end = start + self.sc.timing.control_airtime(frame.kind());
        // Only decodable frames are acted on.
        let frame = ControlFrame::decode(&frame.encode()).expect("self-encoded frame decodes");
        self.push(start, src, EventKind::TxStart, Some(Link::Sub7), Some(frame), flow);
        self.push(end, src, EventKind::TxEnd, Some(Link::Sub7), Some(frame), flow);
        self.nodes[src].busy_until = self.nodes[src].busy_until.max(end);
        for i in 0..self.nodes.len() {
            if i == src || self.dist(src, i) > self.sc.radio.sub7_range {
                continue;
            }
            self.nodes[i].busy_until = self.nodes[i].busy_until.max(end);
            self.push(end, i, EventKind::Rx, Some(Link::Sub7), Some(frame), flow);
            let addressed = frame.ra() == self.nodes[i].mac;
            if addressed {
                continue;
            }
            let before = (self.nodes[i].state.nav_sub7, self.nodes[i].state.nav_mmwave);
            self.nodes[i].state = nav_update(&self.nodes[i].state, &frame, end);
            let after = (self.nodes[i].state.nav_sub7, self.nodes[i].state.nav_mmwave);
            if frame.kind() == FrameKind::Dtsx {
                self.push(end, i, EventKind::NavReset, None, Some(frame), flow);
            } else if after != before {
                self.push(end, i, EventKind::NavSet, None, Some(frame), flow);
            }
        }
        end
    }

    fn mmwave_sensed_busy(&self, dev: usize, t: u64) -> bool {
        self.mm_tx
            .iter()
            .any(|&(src, s, e)| s <= t && t < e && self.dist(src, dev) <= self.sc.radio.mmwave_range)
    }

    fn run<R: Rng>(mut self, rng: &mut R) -> Result<EventLog> {
        let t = self.sc.timing.clone();
        let flows: Vec<(usize, usize, &FlowSpec)> = self
            .sc
            .flows
            .iter()
            .map(|f| (self.by_name[&f.ap], self.by_name[&f.sta], f))
            .collect();
        let mut ready: Vec<Option<u64>> = flows.iter().map(|f| Some(f.2.start_us)).collect();
        let mut retries = vec![0u32; flows.len()];
        let mut backoff: Vec<Option<u64>> = vec![None; flows.len()];
        loop {
            // Earliest end of contention among pending flows.
            let mut best: Option<(u64, usize, u64)> = None;
            for (k, &(ap, _, _)) in flows.iter().enumerate() {
                let Some(r) = ready[k] else { continue };
                let node = &self.nodes[ap];
                let free = r.max(node.state.nav_sub7).max(node.busy_until);
                let slots = *backoff[k].get_or_insert_with(|| rng.random_range(0..=t.cw_slots));
                let s = free + t.difs_us + slots * t.slot_us;
                if best.is_none_or(|(bs, _, _)| s < bs) {
                    best = Some((s, k, free));
                }
            }
            let Some((start, k, free)) = best else { break };
            backoff[k] = None;
            let (ap, sta, spec) = flows[k];
            self.push(free, ap, EventKind::BackoffStart, Some(Link::Sub7), None, k);
            let (rd1, rd2) = self.sc.rts_durations();
            let rts = ControlFrame::Rtsx {
                duration1: duration_field(rd1).map_err(|e| Error::invalid("timing", e.to_string()))?,
                duration2: duration_field(rd2).map_err(|e| Error::invalid("timing", e.to_string()))?,
                ra: self.nodes[sta].mac,
                ta: self.nodes[ap].mac,
            };
            let rts_end = self.send_control(ap, rts, start, k);
            let heard = self.dist(ap, sta) <= self.sc.radio.sub7_range;
            let sta_idle = heard && self.nodes[sta].state.mmwave_idle(rts_end) && !self.mmwave_sensed_busy(sta, rts_end);
            if !sta_idle {
                if heard {
                    self.push(rts_end, sta, EventKind::MmwaveBusy, Some(Link::Mmwave), None, k);
                }
                let timeout = rts_end + t.sifs_us + t.control_airtime(FrameKind::Ctsx) + t.slot_us;
                self.push(timeout, ap, EventKind::CtsTimeout, None, None, k);
                retries[k] += 1;
                if retries[k] > self.sc.max_retries {
                    self.push(timeout, ap, EventKind::FlowFailed, None, None, k);
                    ready[k] = None;
                } else {
                    ready[k] = Some(timeout);
                }
                continue;
            }
            let elapsed = t.sifs_us + t.control_airtime(FrameKind::Ctsx);
            let (d1, d2) = (rd1.saturating_sub(elapsed), rd2 - elapsed);
            let cts = ControlFrame::Ctsx {
                duration1: d1 as u16,
                duration2: d2 as u16,
                ra: self.nodes[ap].mac,
            };
            let cts_end = self.send_control(sta, cts, rts_end + t.sifs_us, k);
            let deadline = cts_end + t.t0();
            self.nodes[sta].state.pending_timeout = Some(deadline);
            let data_start = (cts_end + t.mm_ifs_us + rng.random_range(0..=t.mm_cw_slots) * t.mm_slot_us)
                .max(self.nodes[ap].state.nav_mmwave);
            if spec.ap_fails || data_start > deadline {
                self.push(deadline, sta, EventKind::DtsTimeout, None, None, k);
                let dts = ControlFrame::Dtsx {
                    duration1: 0,
                    duration2: 0,
                    ra: BROADCAST,
                    nav_sa: self.nodes[ap].mac,
                    nav_da: self.nodes[sta].mac,
                };
                let start = deadline.max(self.nodes[sta].busy_until);
                self.send_control(sta, dts, start, k);
                self.nodes[sta].state.pending_timeout = None;
                ready[k] = None;
                continue;
            }
            let data_end = data_start + t.data_airtime();
            self.nodes[sta].state.pending_timeout = None;
            self.mm_tx.push((ap, data_start, data_end));
            self.push(data_start, ap, EventKind::DataStart, Some(Link::Mmwave), None, k);
            self.push(data_end, ap, EventKind::DataEnd, Some(Link::Mmwave), None, k);
            self.push(data_end, sta, EventKind::Rx, Some(Link::Mmwave), None, k);
            ready[k] = None;
        }
        let mut entries = self.log;
        // Stable: same-time entries keep causal order.
        entries.sort_by_key(|e| e.time_us);
        Ok(EventLog { entries })
    }
}

/// Run every flow of `scenario` with backoffs drawn from `seed`.
pub fn run_handshake(scenario: &Scenario, seed: u64) -> Result<EventLog> {
    scenario.validate()?;
    let mut rng = replication_rng(seed, 0);
    let log = Engine::new(scenario).run(&mut rng)?;
    debug_assert!(log.is_sorted());
    Ok(log)
}

/// Lower-band and mm-wave transmission intervals `(device, link, start, end, flow)`.
fn transmissions(log: &EventLog) -> Vec<(String, Link, u64, u64, usize)> {
    let mut open: HashMap<(String, usize, bool), u64> = HashMap::new();
    let mut out = Vec::new();
    for e in &log.entries {
        match e.event {
            EventKind::TxStart | EventKind::DataStart => {
                open.insert((e.device.clone(), e.flow, e.link == Some(Link::Mmwave)), e.time_us);
            }
            EventKind::TxEnd | EventKind::DataEnd => {
                if let Some(s) = open.remove(&(e.device.clone(), e.flow, e.link == Some(Link::Mmwave))) {
                    out.push((e.device.clone(), e.link.unwrap_or(Link::Sub7), s, e.time_us, e.flow));
                }
            }
            _ => {}
        }
    }
    out
}

/// Safety: nobody starts a transmission on a link while a reservation it
/// overheard from another exchange is active. NAVs are rebuilt from the
/// logged receptions with their own bookkeeping.
pub fn check_safety(log: &EventLog, scenario: &Scenario) -> std::result::Result<(), String> {
    let macs: HashMap<&str, MacAddr> = scenario
        .devices
        .iter()
        .map(|d| (d.name.as_str(), parse_mac(&d.mac).unwrap_or([0; 6])))
        .collect();
    // (device) -> list of (flow, link, from, until, cleared_at)
    let mut reservations: HashMap<&str, Vec<(usize, Link, u64, u64)>> = HashMap::new();
    for e in &log.entries {
        if e.event != EventKind::Rx {
            continue;
        }
        let Some(frame) = e.frame else { continue };
        if frame.ra() == macs[e.device.as_str()] {
            continue;
        }
        let list = reservations.entry(e.device.as_str()).or_default();
        match frame {
            ControlFrame::Dtsx { .. } => {
                for r in list.iter_mut().filter(|r| r.0 == e.flow) {
                    r.3 = r.3.min(e.time_us);
                }
            }
            _ => {
                let (d1, d2) = frame.durations();
                if d1 > 0 {
                    list.push((e.flow, Link::Sub7, e.time_us, e.time_us + d1 as u64));
                }
                if d2 > 0 {
                    list.push((e.flow, Link::Mmwave, e.time_us, e.time_us + d2 as u64));
                }
            }
        }
    }
    for (dev, link, start, _, flow) in transmissions(log) {
        if let Some(list) = reservations.get(dev.as_str()) {
            for &(f, l, from, until) in list {
                if f != flow && l == link && from <= start && start < until {
                    return Err(format!("{dev} transmits on {link:?} at {start} inside a reservation of flow {f} until {until}"));
                }
            }
        }
    }
    Ok(())
}

/// Liveness: every flow that is not forced to fail delivers its data within
/// `contention + two control frames + IFS + maximal backoff` of its start,
/// provided it never found the channel busy.
pub fn check_liveness(log: &EventLog, scenario: &Scenario) -> std::result::Result<(), String> {
    let t = &scenario.timing;
    let bound = t.difs_us
        + t.cw_slots * t.slot_us
        + t.control_airtime(FrameKind::Rtsx)
        + t.sifs_us
        + t.control_airtime(FrameKind::Ctsx)
        + t.max_data_delay();
    for (k, f) in scenario.flows.iter().enumerate() {
        if f.ap_fails {
            continue;
        }
        let entries: Vec<&LogEntry> = log.entries.iter().filter(|e| e.flow == k).collect();
        if entries.iter().any(|e| matches!(e.event, EventKind::CtsTimeout | EventKind::MmwaveBusy)) {
            continue;
        }
        let Some(begin) = entries.iter().find(|e| e.event == EventKind::BackoffStart) else {
            return Err(format!("flow {k} never contended"));
        };
        let Some(data) = entries.iter().find(|e| e.event == EventKind::DataStart) else {
            return Err(format!("flow {k} never delivered"));
        };
        if data.time_us > begin.time_us + bound {
            return Err(format!("flow {k} took {} us, bound {bound}", data.time_us - begin.time_us));
        }
    }
    Ok(())
}

/// Recovery: a flow whose data is absent `T0` after its CTSx has a DTSx, and
/// every device that overheard that flow's reservation also received the
/// DTSx and logged a reset.
pub fn check_recovery(log: &EventLog, scenario: &Scenario) -> std::result::Result<(), String> {
    let t0 = scenario.timing.t0();
    for k in 0..scenario.flows.len() {
        let entries: Vec<&LogEntry> = log.entries.iter().filter(|e| e.flow == k).collect();
        let Some(cts_end) = entries
            .iter()
            .find(|e| e.event == EventKind::TxEnd && e.frame.is_some_and(|f| f.kind() == FrameKind::Ctsx))
            .map(|e| e.time_us)
        else {
            continue;
        };
        let data = entries.iter().find(|e| e.event == EventKind::DataStart).map(|e| e.time_us);
        if data.is_some_and(|d| d <= cts_end + t0) {
            continue;
        }
        let dts_tx = entries
            .iter()
            .find(|e| e.event == EventKind::TxStart && e.frame.is_some_and(|f| f.kind() == FrameKind::Dtsx));
        let Some(dts_tx) = dts_tx else {
            return Err(format!("flow {k}: no DTSx after missing data"));
        };
        if dts_tx.time_us < cts_end + t0 {
            return Err(format!("flow {k}: DTSx before T0"));
        }
        let setters: Vec<&str> = entries.iter().filter(|e| e.event == EventKind::NavSet).map(|e| e.device.as_str()).collect();
        for dev in setters {
            if !entries.iter().any(|e| e.event == EventKind::NavReset && e.device == dev) {
                return Err(format!("flow {k}: {dev} kept its NAV after DTSx"));
            }
        }
    }
    Ok(())
}

/// Display helper for CLI output.
pub fn describe(scenario: &Scenario) -> String {
    scenario
        .devices
        .iter()
        .map(|d| format!("{} {} {:?}", d.name, parse_mac(&d.mac).map(|m| format_mac(&m)).unwrap_or_default(), d.role))
        .collect::<Vec<_>>()
        .join(", ")
}
