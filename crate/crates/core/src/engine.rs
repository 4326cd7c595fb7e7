//! Discrete-event core: event queue, radio delivery, channel budgets and
//! metrics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{line_of_sight, GeoPosition, ObstructionSegment};
use crate::messages::{
    codec, decode, encode, CenterMessage, DenDraft, DenMessage, LdmParticipant, Message, MessageError, MessageId,
    StationId, Timestamp,
};
use crate::reception::PipelineConfig;
use crate::rsu::{Outbound, Rsu, SiteRole};
use crate::vehicle::VehicleState;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("codec: {0}")]
    Codec(#[from] MessageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ChannelKind {
    Safety,
    Infotainment,
}

impl ChannelKind {
    pub fn of(msg: &Message) -> Self {
        if msg.is_infotainment() || matches!(msg, Message::ServiceRequest(_)) {
            ChannelKind::Infotainment
        } else {
            ChannelKind::Safety
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Safety => "SAFETY",
            ChannelKind::Infotainment => "INFOTAINMENT",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelTotals {
    pub offered_bytes: u64,
    pub delivered_bytes: u64,
    pub dropped_bytes: u64,
    pub offered_msgs: u64,
    pub delivered_msgs: u64,
    pub dropped_msgs: u64,
}

impl ChannelTotals {
    fn add(&mut self, bytes: u64, delivered: bool) {
        self.offered_bytes += bytes;
        self.offered_msgs += 1;
        if delivered {
            self.delivered_bytes += bytes;
            self.delivered_msgs += 1;
        } else {
            self.dropped_bytes += bytes;
            self.dropped_msgs += 1;
        }
    }

    pub fn conserved(&self) -> bool {
        self.offered_bytes == self.delivered_bytes + self.dropped_bytes
            && self.offered_msgs == self.delivered_msgs + self.dropped_msgs
    }
}

/// Channel with a byte budget over a rolling one-second window.
#[derive(Debug, Clone)]
pub struct Channel {
    pub kind: ChannelKind,
    pub budget_bytes_per_s: u64,
    window: VecDeque<(Timestamp, u64)>,
    in_window: u64,
    pub totals: ChannelTotals,
    interval: ChannelTotals,
}

impl Channel {
    pub fn new(kind: ChannelKind, budget_bytes_per_s: u64) -> Self {
        Channel {
            kind,
            budget_bytes_per_s,
            window: VecDeque::new(),
            in_window: 0,
            totals: ChannelTotals::default(),
            interval: ChannelTotals::default(),
        }
    }

    /// Delivered bytes in the window (now - 1000, now].
    pub fn delivered_in_window(&mut self, now: Timestamp) -> u64 {
        while let Some((t, b)) = self.window.front() {
            if t + 1000 <= now {
                self.in_window -= b;
                self.window.pop_front();
            } else {
                break;
            }
        }
        self.in_window
    }

    /// Records an offered message; true if it fits the budget.
    pub fn offer(&mut self, now: Timestamp, bytes: u64) -> bool {
        let ok = self.delivered_in_window(now) + bytes <= self.budget_bytes_per_s;
        if ok {
            self.window.push_back((now, bytes));
            self.in_window += bytes;
        }
        self.totals.add(bytes, ok);
        self.interval.add(bytes, ok);
        ok
    }

    fn take_interval(&mut self) -> ChannelTotals {
        std::mem::take(&mut self.interval)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadioModel {
    pub range: i64,
    #[serde(default)]
    pub obstructions: Vec<ObstructionSegment>,
}

impl RadioModel {
    /// Inclusive range with line of sight.
    pub fn reachable(&self, a: &GeoPosition, b: &GeoPosition) -> bool {
        let r = i128::from(self.range);
        a.distance_sq(b) <= r * r && line_of_sight(a, b, &self.obstructions)
    }
}

/// A DEN a vehicle sends from wherever it is at `at`, repeated every
/// `repeat` ms until `until` if given.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedDen {
    pub at: Timestamp,
    pub source: StationId,
    pub draft: DenDraft,
    pub repeat: Option<u64>,
    pub until: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterEvent {
    pub at: Timestamp,
    pub rsu: StationId,
    pub msg: CenterMessage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub at: Timestamp,
    pub rsu: StationId,
    pub participant: LdmParticipant,
}

#[derive(Debug, Clone)]
pub struct EngineSetup {
    pub name: String,
    pub seed: u64,
    pub t_end: Timestamp,
    pub step: u64,
    pub radio: RadioModel,
    pub safety_budget: u64,
    pub infotainment_budget: u64,
    pub pipeline: PipelineConfig,
    pub rsu_cam_period: u64,
    pub service_request_period: u64,
    pub vehicles: Vec<VehicleState>,
    pub rsus: Vec<Rsu>,
    pub center_latency: BTreeMap<StationId, u64>,
    pub dens: Vec<ScriptedDen>,
    pub center: Vec<CenterEvent>,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub t_ms: Timestamp,
    pub channel: ChannelKind,
    pub offered_bytes: u64,
    pub delivered_bytes: u64,
    pub dropped_bytes: u64,
    pub offered_msgs: u64,
    pub delivered_msgs: u64,
    pub dropped_msgs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayEntry {
    pub t: Timestamp,
    pub source: StationId,
    pub seq: u32,
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningLatency {
    pub vehicle: StationId,
    pub source: StationId,
    pub seq: u32,
    pub event: String,
    pub latency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSummary {
    pub site_id: u32,
    pub rsu: StationId,
    pub role: SiteRole,
    pub expected_transit_time: u64,
    pub sample_count: u32,
    pub reports_held: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub t_end: Timestamp,
    pub channels: BTreeMap<ChannelKind, ChannelTotals>,
    pub samples: Vec<ChannelSample>,
    pub displays: BTreeMap<StationId, Vec<DisplayEntry>>,
    pub warning_latencies: Vec<WarningLatency>,
    pub measurement_loss: u32,
    pub reports_delivered: u32,
    pub gateway_rejections: u32,
    pub sites: Vec<SiteSummary>,
    pub rebroadcast_periods: BTreeMap<StationId, u64>,
}

pub const CSV_HEADER: &str =
    "t_ms,channel,offered_bytes,delivered_bytes,dropped_bytes,offered_msgs,delivered_msgs,dropped_msgs";

impl MetricsReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        if self.samples.is_empty() {
            w.write_record(CSV_HEADER.split(','))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_canonical(&self) -> Vec<u8> {
        codec::to_canonical_bytes(self)
    }
}

/// Hooks for instrumented runs.
pub trait Observer {
    fn on_broadcast(&mut self, _engine: &Engine, _sender: StationId, _msg: &Message, _recipients: &[StationId]) {}
    fn after_event(&mut self, _engine: &Engine) {}
}

struct NoObserver;
impl Observer for NoObserver {}

#[derive(Debug, Clone)]
enum EventKind {
    Step,
    Sample,
    VehicleCam(StationId),
    ServiceRequests(StationId),
    ScriptedDen(usize),
    RsuTick(StationId),
    RsuCam(StationId),
    CenterArrival(StationId, Vec<u8>),
    BackhaulArrival(StationId, Vec<u8>),
    Detection(usize),
}

const PRE: u64 = 0;
const POST: u64 = u64::MAX;

#[derive(Debug, Clone)]
struct Event {
    at: Timestamp,
    node: u64,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn key(&self) -> (Timestamp, u64, u64) {
        (self.at, self.node, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

pub struct Engine {
    now: Timestamp,
    t_end: Timestamp,
    step: u64,
    queue: BinaryHeap<Event>,
    seq: u64,
    rng: ChaCha8Rng,
    pub radio: RadioModel,
    pub pipeline: PipelineConfig,
    rsu_cam_period: u64,
    service_request_period: u64,
    vehicles: BTreeMap<StationId, VehicleState>,
    rsus: BTreeMap<StationId, Rsu>,
    center_latency: BTreeMap<StationId, u64>,
    dens: Vec<ScriptedDen>,
    emitted: BTreeMap<usize, DenMessage>,
    detections: Vec<Detection>,
    channels: [Channel; 2],
    metrics: MetricsReport,
    safety_offered_since_sample: u64,
}

impl Engine {
    pub fn new(setup: EngineSetup, rng: ChaCha8Rng) -> Self {
        let mut engine = Engine {
            now: 0,
            t_end: setup.t_end,
            step: setup.step,
            queue: BinaryHeap::new(),
            seq: 0,
            rng,
            radio: setup.radio,
            pipeline: setup.pipeline,
            rsu_cam_period: setup.rsu_cam_period,
            service_request_period: setup.service_request_period,
            vehicles: setup.vehicles.into_iter().map(|v| (v.id, v)).collect(),
            rsus: setup.rsus.into_iter().map(|r| (r.id, r)).collect(),
            center_latency: setup.center_latency,
            dens: setup.dens,
            emitted: BTreeMap::new(),
            detections: setup.detections,
            channels: [
                Channel::new(ChannelKind::Safety, setup.safety_budget),
                Channel::new(ChannelKind::Infotainment, setup.infotainment_budget),
            ],
            metrics: MetricsReport { scenario: setup.name, seed: setup.seed, t_end: setup.t_end, ..Default::default() },
            safety_offered_since_sample: 0,
        };
        engine.schedule_initial(setup.center);
        engine
    }

    fn push(&mut self, at: Timestamp, node: u64, kind: EventKind) {
        if at <= self.t_end {
            self.seq += 1;
            self.queue.push(Event { at, node, seq: self.seq, kind });
        }
    }

    fn phase(&mut self, period: u64) -> u64 {
        let slots = (period / self.step).max(1);
        self.rng.gen_range(0..slots) * self.step
    }

    fn schedule_initial(&mut self, center: Vec<CenterEvent>) {
        if self.vehicles.is_empty() && self.rsus.is_empty() {
            return;
        }
        self.push(self.step, PRE, EventKind::Step);
        self.push(1000, POST, EventKind::Sample);
        let vehicles: Vec<(StationId, Timestamp, u64, bool)> = self
            .vehicles
            .values()
            .map(|v| (v.id, v.start_at, v.cam_period, !v.service_requests(v.start_at).is_empty()))
            .collect();
        for (id, start, period, subscribes) in vehicles {
            let phase = self.phase(period);
            self.push(start + phase, u64::from(id.0), EventKind::VehicleCam(id));
            if subscribes {
                self.push(start, u64::from(id.0), EventKind::ServiceRequests(id));
            }
        }
        let rsus: Vec<StationId> = self.rsus.keys().copied().collect();
        for id in rsus {
            let phase = self.phase(self.rsu_cam_period);
            self.push(phase, u64::from(id.0), EventKind::RsuCam(id));
            self.push(0, u64::from(id.0), EventKind::RsuTick(id));
        }
        for i in 0..self.dens.len() {
            let (at, src) = (self.dens[i].at, self.dens[i].source);
            self.push(at, u64::from(src.0), EventKind::ScriptedDen(i));
        }
        for c in center {
            if !self.rsus.contains_key(&c.rsu) {
                continue;
            }
            let latency = self.center_latency.get(&c.rsu).copied().unwrap_or(0);
            let bytes = codec::frame(&Message::Center(c.msg));
            self.push(c.at + latency, u64::from(c.rsu.0), EventKind::CenterArrival(c.rsu, bytes));
        }
        for i in 0..self.detections.len() {
            let (at, rsu) = (self.detections[i].at, self.detections[i].rsu);
            self.push(at, u64::from(rsu.0), EventKind::Detection(i));
        }
    }

    pub fn now(&self) -> Timestamp {
        self.now
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &VehicleState> {
        self.vehicles.values()
    }

    pub fn vehicle(&self, id: StationId) -> Option<&VehicleState> {
        self.vehicles.get(&id)
    }

    pub fn rsus(&self) -> impl Iterator<Item = &Rsu> {
        self.rsus.values()
    }

    pub fn rsu(&self, id: StationId) -> Option<&Rsu> {
        self.rsus.get(&id)
    }

    pub fn channel(&self, kind: ChannelKind) -> &Channel {
        &self.channels[kind as usize]
    }

    pub fn metrics(&self) -> &MetricsReport {
        &self.metrics
    }

    /// Position of a node currently on the air.
    pub fn position_of(&self, id: StationId) -> Option<GeoPosition> {
        if let Some(v) = self.vehicles.get(&id) {
            return v.present(self.now).then(|| v.position());
        }
        self.rsus.get(&id).map(|r| r.position)
    }

    pub fn run(self) -> Result<MetricsReport, SimError> {
        self.run_observed(&mut NoObserver)
    }

    pub fn run_observed(mut self, obs: &mut dyn Observer) -> Result<MetricsReport, SimError> {
        self.run_until(self.t_end, obs)?;
        Ok(self.finish())
    }

    /// Stops the run early at `t_end` (never later than the configured end).
    pub fn truncate(mut self, t_end: Timestamp) -> Self {
        self.t_end = self.t_end.min(t_end);
        self.metrics.t_end = self.t_end;
        self
    }

    /// Executes every event with `at <= until`.
    pub fn run_until(&mut self, until: Timestamp, obs: &mut dyn Observer) -> Result<(), SimError> {
        while let Some(ev) = self.queue.peek() {
            if ev.at > until {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            if ev.at < self.now {
                return Err(SimError::Invariant(format!("clock moved back from {} to {}", self.now, ev.at)));
            }
            if ev.at > self.now {
                self.now = ev.at;
                self.evict_expired();
            }
            self.handle(ev, obs)?;
            obs.after_event(self);
        }
        Ok(())
    }

    fn evict_expired(&mut self) {
        let now = self.now;
        for v in self.vehicles.values_mut() {
            v.set_now(now);
        }
        for r in self.rsus.values_mut() {
            r.evict_expired(now);
        }
    }

    fn handle(&mut self, ev: Event, obs: &mut dyn Observer) -> Result<(), SimError> {
        let now = self.now;
        match ev.kind {
            EventKind::Step => {
                self.step_vehicles(obs)?;
                self.push(now + self.step, PRE, EventKind::Step);
            }
            EventKind::Sample => {
                self.sample();
                self.push(now + 1000, POST, EventKind::Sample);
            }
            EventKind::VehicleCam(id) => {
                let v = &self.vehicles[&id];
                if v.present(now) {
                    let (cam, pos, period) = (v.emit_cam(now), v.position(), v.cam_period);
                    self.broadcast(id, pos, Message::Cam(cam), obs)?;
                    self.push(now + period, ev.node, EventKind::VehicleCam(id));
                }
            }
            EventKind::ServiceRequests(id) => {
                let v = &self.vehicles[&id];
                if v.present(now) {
                    let pos = v.position();
                    let reqs = v.service_requests(now);
                    let more = !reqs.is_empty();
                    for r in reqs {
                        self.broadcast(id, pos, Message::ServiceRequest(r), obs)?;
                    }
                    if more {
                        self.push(now + self.service_request_period, ev.node, EventKind::ServiceRequests(id));
                    }
                }
            }
            EventKind::ScriptedDen(i) => self.scripted_den(i, ev.node, obs)?,
            EventKind::RsuTick(id) => {
                let out = self.rsus.get_mut(&id).expect("rsu").tick(now);
                self.dispatch(id, out, obs)?;
                self.push(now + self.step, ev.node, EventKind::RsuTick(id));
            }
            EventKind::RsuCam(id) => {
                let r = &self.rsus[&id];
                let (cam, pos) = (r.emit_cam(now), r.position);
                self.broadcast(id, pos, Message::Cam(cam), obs)?;
                self.push(now + self.rsu_cam_period, ev.node, EventKind::RsuCam(id));
            }
            EventKind::CenterArrival(id, bytes) => {
                let (msg, _) = codec::unframe(&bytes)?;
                let Message::Center(center) = msg else {
                    return Err(SimError::Invariant("center link carried a non-center record".into()));
                };
                match self.rsus.get_mut(&id).expect("rsu").on_center(&center, now) {
                    Ok(out) => self.dispatch(id, out, obs)?,
                    Err(_) => self.metrics.gateway_rejections += 1,
                }
            }
            EventKind::BackhaulArrival(id, bytes) => {
                let (msg, _) = codec::unframe(&bytes)?;
                if let Some(r) = self.rsus.get_mut(&id) {
                    r.on_backhaul(&msg);
                }
            }
            EventKind::Detection(i) => {
                let d = self.detections[i].clone();
                if let Some(r) = self.rsus.get_mut(&d.rsu) {
                    r.observe(d.participant);
                }
            }
        }
        Ok(())
    }

    fn scripted_den(&mut self, i: usize, node: u64, obs: &mut dyn Observer) -> Result<(), SimError> {
        let now = self.now;
        let script = self.dens[i].clone();
        let Some(v) = self.vehicles.get_mut(&script.source) else { return Ok(()) };
        if !v.present(now) {
            return Ok(());
        }
        let pos = v.position();
        let den = match self.emitted.get(&i) {
            Some(d) => d.clone(),
            None => {
                let mut draft = script.draft.clone();
                draft.message_id = MessageId { source: v.id, seq: v.next_den_seq() };
                draft.station_type = v.station_type;
                draft.generated_at = now;
                let den = draft.build()?;
                self.emitted.insert(i, den.clone());
                den
            }
        };
        if den.is_expired(now) {
            return Ok(());
        }
        self.broadcast(script.source, pos, Message::Den(den.clone()), obs)?;
        if let Some(period) = script.repeat {
            let next = now + period;
            if script.until.is_none_or(|u| next <= u) && next <= den.expires_at() {
                self.push(next, node, EventKind::ScriptedDen(i));
            }
        }
        Ok(())
    }

    fn step_vehicles(&mut self, obs: &mut dyn Observer) -> Result<(), SimError> {
        let now = self.now;
        let step = self.step;
        let ids: Vec<StationId> = self.vehicles.keys().copied().collect();
        for id in ids {
            let v = self.vehicles.get_mut(&id).expect("vehicle");
            if v.departed() || v.start_at >= now {
                continue;
            }
            v.advance(step, now);
            if let Some(report) = v.pending_report().cloned() {
                let pos = v.position();
                let outflows: Vec<StationId> = self
                    .rsus
                    .values()
                    .filter(|r| {
                        r.site().is_some_and(|s| s.role == SiteRole::Outflow && s.site_id() == report.site_id())
                            && self.radio.reachable(&pos, &r.position)
                    })
                    .map(|r| r.id)
                    .collect();
                if !outflows.is_empty() {
                    let got = self.broadcast(id, pos, Message::Report(report), obs)?;
                    if got.iter().any(|r| outflows.contains(r)) {
                        self.vehicles.get_mut(&id).expect("vehicle").clear_pending_report();
                        self.metrics.reports_delivered += 1;
                    }
                }
            }
            let v = self.vehicles.get_mut(&id).expect("vehicle");
            if v.departed() {
                self.metrics.measurement_loss += v.abandon_measurement();
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, from: StationId, out: Vec<Outbound>, obs: &mut dyn Observer) -> Result<(), SimError> {
        let pos = self.rsus[&from].position;
        for o in out {
            match o {
                Outbound::Air(msg) => {
                    self.broadcast(from, pos, msg, obs)?;
                }
                Outbound::Backhaul { to, msg } => {
                    let latency = self.rsus[&from].site().map_or(0, |s| s.config().backhaul_latency);
                    let bytes = codec::frame(&msg);
                    self.push(self.now + latency, u64::from(to.0), EventKind::BackhaulArrival(to, bytes));
                }
            }
        }
        Ok(())
    }

    /// Puts one message on the air. Returns the stations that received it.
    pub fn broadcast(
        &mut self,
        sender: StationId,
        pos: GeoPosition,
        msg: Message,
        obs: &mut dyn Observer,
    ) -> Result<Vec<StationId>, SimError> {
        let now = self.now;
        let bytes = encode(&msg);
        let kind = ChannelKind::of(&msg);
        if kind == ChannelKind::Safety {
            self.safety_offered_since_sample += bytes.len() as u64;
        }
        if !self.channels[kind as usize].offer(now, bytes.len() as u64) {
            obs.on_broadcast(self, sender, &msg, &[]);
            return Ok(Vec::new());
        }
        let mut recipients: Vec<StationId> = self
            .vehicles
            .values()
            .filter(|v| v.id != sender && v.present(now) && self.radio.reachable(&pos, &v.position()))
            .map(|v| v.id)
            .chain(
                self.rsus.values().filter(|r| r.id != sender && self.radio.reachable(&pos, &r.position)).map(|r| r.id),
            )
            .collect();
        recipients.sort();
        for id in &recipients {
            let received = decode(&bytes)?;
            if received != msg {
                return Err(SimError::Invariant(format!("codec round trip changed a {}", msg.msg_type())));
            }
            if let Some(v) = self.vehicles.get_mut(id) {
                let before = v.display_log().len();
                v.on_receive(&received, now, &self.pipeline);
                if v.display_log().len() > before {
                    let (_, den) = v.display_log().last().expect("just logged");
                    self.metrics.warning_latencies.push(WarningLatency {
                        vehicle: *id,
                        source: den.source(),
                        seq: den.seq(),
                        event: den.event().label(),
                        latency: now - den.generated_at(),
                    });
                }
            } else if let Some(r) = self.rsus.get_mut(id) {
                r.on_receive(&received, now);
            }
        }
        obs.on_broadcast(self, sender, &msg, &recipients);
        Ok(recipients)
    }

    fn sample(&mut self) {
        let now = self.now;
        for ch in &mut self.channels {
            let t = ch.take_interval();
            self.metrics.samples.push(ChannelSample {
                t_ms: now,
                channel: ch.kind,
                offered_bytes: t.offered_bytes,
                delivered_bytes: t.delivered_bytes,
                dropped_bytes: t.dropped_bytes,
                offered_msgs: t.offered_msgs,
                delivered_msgs: t.delivered_msgs,
                dropped_msgs: t.dropped_msgs,
            });
        }
        let budget = self.channels[ChannelKind::Safety as usize].budget_bytes_per_s.max(1);
        let load = self.safety_offered_since_sample as f64 / budget as f64;
        self.safety_offered_since_sample = 0;
        for r in self.rsus.values_mut() {
            r.adapt(load);
        }
    }

    /// Checks the conservation and buffer-safety invariants at this instant.
    pub fn check_invariants(&self) -> Result<(), SimError> {
        for ch in &self.channels {
            if !ch.totals.conserved() {
                return Err(SimError::Invariant(format!("{} channel totals not conserved", ch.kind.as_str())));
            }
        }
        for r in self.rsus.values() {
            if r.store().entries().iter().any(|e| e.den.is_expired(self.now)) {
                return Err(SimError::Invariant(format!("RSU {} holds an expired DEN", r.id.0)));
            }
        }
        for v in self.vehicles.values() {
            if v.ctx.known_messages().iter().any(|(d, _)| d.is_expired(self.now)) {
                return Err(SimError::Invariant(format!("vehicle {} knows an expired DEN", v.id.0)));
            }
        }
        Ok(())
    }

    fn finish(mut self) -> MetricsReport {
        for ch in &self.channels {
            self.metrics.channels.insert(ch.kind, ch.totals);
        }
        for v in self.vehicles.values() {
            let log = v
                .display_log()
                .iter()
                .map(|(t, d)| DisplayEntry { t: *t, source: d.source(), seq: d.seq(), event: d.event().label() })
                .collect();
            self.metrics.displays.insert(v.id, log);
        }
        for r in self.rsus.values() {
            self.metrics.rebroadcast_periods.insert(r.id, r.rebroadcast_period());
            if let Some(site) = r.site() {
                let est = site.current_estimate();
                self.metrics.sites.push(SiteSummary {
                    site_id: site.site_id(),
                    rsu: r.id,
                    role: site.role,
                    expected_transit_time: est.expected_transit_time(),
                    sample_count: est.sample_count(),
                    reports_held: site.reports().count() as u32,
                });
            }
        }
        self.metrics
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Area, Heading, Polyline};
    use crate::messages::{EventType, RelevanceZone, StationType};
    use crate::vehicle::{Body, SpeedChange};
    use rand::SeedableRng;

    fn p(x: i64, y: i64) -> GeoPosition {
        GeoPosition::new(x, y)
    }

    fn setup(vehicles: Vec<VehicleState>) -> EngineSetup {
        EngineSetup {
            name: "t".into(),
            seed: 1,
            t_end: 5000,
            step: 100,
            radio: RadioModel { range: 10_000, obstructions: vec![] },
            safety_budget: 100_000,
            infotainment_budget: 1000,
            pipeline: PipelineConfig::default(),
            rsu_cam_period: 1000,
            service_request_period: 1000,
            vehicles,
            rsus: vec![],
            center_latency: BTreeMap::new(),
            dens: vec![],
            center: vec![],
            detections: vec![],
        }
    }

    fn car(id: u32, at: GeoPosition, speed: u32) -> VehicleState {
        let route = Polyline::new(vec![at, at.translate(100_000, 0)]).unwrap();
        VehicleState::new(
            StationId(id),
            StationType::Car,
            route,
            vec![SpeedChange { from_arc: 0, speed }],
            Body { length: 450, width: 180, headlights_on: false },
            500,
            100,
        )
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn empty_scenario_terminates() {
        let report = Engine::new(setup(vec![]), rng()).run().unwrap();
        assert!(report.samples.is_empty());
        assert!(report.displays.is_empty());
        assert!(report.warning_latencies.is_empty());
    }

    #[test]
    fn channel_budget_and_conservation() {
        let mut ch = Channel::new(ChannelKind::Infotainment, 1000);
        assert!(ch.offer(0, 600));
        assert!(!ch.offer(500, 600));
        assert!(ch.offer(999, 400));
        assert!(ch.offer(1000, 600));
        assert!(ch.totals.conserved());
        assert_eq!(ch.totals.dropped_msgs, 1);
    }

    #[test]
    fn priority_between_channels() {
        let mut safety = Channel::new(ChannelKind::Safety, 1000);
        let mut info = Channel::new(ChannelKind::Infotainment, 1000);
        for i in 0..12 {
            info.offer(i * 10, 100);
        }
        for i in 0..5 {
            safety.offer(i * 10, 100);
        }
        assert_eq!(safety.totals.dropped_msgs, 0);
        assert_eq!(info.totals.dropped_bytes, 200);
    }

    #[test]
    fn range_boundary_and_wall() {
        let radio =
            RadioModel { range: 100, obstructions: vec![ObstructionSegment::new(p(50, -10), p(50, 10)).unwrap()] };
        assert!(radio.reachable(&p(0, 100), &p(0, 0)));
        assert!(!radio.reachable(&p(0, 101), &p(0, 0)));
        assert!(!radio.reachable(&p(0, 0), &p(100, 0)));
    }

    #[test]
    fn one_den_zero_latency() {
        let mut s = setup(vec![car(1, p(0, 0), 0), car(2, p(-2000, 0), 1000)]);
        s.dens.push(ScriptedDen {
            at: 1000,
            source: StationId(1),
            draft: DenDraft {
                message_id: MessageId { source: StationId(1), seq: 0 },
                station_type: StationType::Car,
                event: EventType::StrandedVehicle,
                event_position: p(0, 0),
                validity_area: Area::circle(p(0, 0), 20_000).unwrap(),
                relevance_zone: RelevanceZone::PointWithDirection {
                    point: p(0, 0),
                    radius: 10_000,
                    direction: Heading::EAST,
                },
                generated_at: 0,
                expires_at: 60_000,
                detail: None,
            },
            repeat: Some(1000),
            until: None,
        });
        let report = Engine::new(s, rng()).run().unwrap();
        assert_eq!(report.displays[&StationId(2)].len(), 1);
        assert!(report.displays[&StationId(1)].is_empty());
        assert_eq!(report.warning_latencies[0].latency, 0);
        assert!(report.channels[&ChannelKind::Safety].conserved());
    }

    #[test]
    fn deterministic_rerun() {
        let build = || {
            let s = setup((1..=5).map(|i| car(i, p(-1000 * i64::from(i), 0), 900)).collect());
            Engine::new(s, rng()).run().unwrap()
        };
        assert_eq!(build().to_canonical(), build().to_canonical());
    }

    #[test]
    fn csv_header_fixed() {
        let mut buf = Vec::new();
        MetricsReport::default().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER);
        let s = setup(vec![car(1, p(0, 0), 100)]);
        let report = Engine::new(s, rng()).run().unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().count(), 1 + 2 * 5);
    }
}
