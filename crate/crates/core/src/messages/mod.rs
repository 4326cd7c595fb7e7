//! CAM/DEN basic-service payloads and the auxiliary records exchanged
//! between vehicles, roadside units and traffic centers.
//!
//! Every message type has private fields and a validating constructor, so
//! a value that exists satisfies its invariants. Decoding goes through the
//! same validation (see [`codec`]).

pub mod codec;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{contains, Area, GeoError, GeoPosition, Heading, Polyline};

pub use codec::{decode, encode, encoded_len, to_canonical_bytes};

/// Simulation time in integer milliseconds.
pub type Timestamp = u64;

/// Sanity cap on reported vehicle speed, cm/s.
pub const MAX_SPEED: u32 = 7000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl From<GeoError> for MessageError {
    fn from(e: GeoError) -> Self {
        MessageError::InvariantViolation(e.to_string())
    }
}

fn violation(msg: impl Into<String>) -> MessageError {
    MessageError::InvariantViolation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(pub u32);

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RsuKind {
    Central,
    Standalone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StationType {
    Car,
    Truck,
    Bus,
    Motorcycle,
    Rsu(RsuKind),
}

impl StationType {
    pub fn is_rsu(self) -> bool {
        matches!(self, StationType::Rsu(_))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StationType::Car => "CAR",
            StationType::Truck => "TRUCK",
            StationType::Bus => "BUS",
            StationType::Motorcycle => "MOTORCYCLE",
            StationType::Rsu(RsuKind::Central) => "RSU_CENTRAL",
            StationType::Rsu(RsuKind::Standalone) => "RSU_STANDALONE",
        }
    }
}

impl TryFrom<String> for StationType {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Ok(match s.as_str() {
            "CAR" => StationType::Car,
            "TRUCK" => StationType::Truck,
            "BUS" => StationType::Bus,
            "MOTORCYCLE" => StationType::Motorcycle,
            "RSU_CENTRAL" => StationType::Rsu(RsuKind::Central),
            "RSU_STANDALONE" => StationType::Rsu(RsuKind::Standalone),
            other => return Err(format!("unknown station type {other:?}")),
        })
    }
}

impl From<StationType> for String {
    fn from(t: StationType) -> Self {
        t.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventType {
    Roadworks,
    Accident,
    StrandedVehicle,
    IceSlipperiness,
    Congestion,
    GeneralSlipperinessAdvisory,
    Infotainment { service: ServiceId },
}

impl EventType {
    pub fn is_infotainment(&self) -> bool {
        matches!(self, EventType::Infotainment { .. })
    }

    /// Whether two events describe the same hazard. A general slipperiness
    /// advisory matches an ice warning.
    pub fn matches(&self, other: &EventType) -> bool {
        use EventType::*;
        self == other
            || matches!(
                (self, other),
                (IceSlipperiness, GeneralSlipperinessAdvisory) | (GeneralSlipperinessAdvisory, IceSlipperiness)
            )
    }

    pub fn label(&self) -> String {
        match self {
            EventType::Roadworks => "ROADWORKS".into(),
            EventType::Accident => "ACCIDENT".into(),
            EventType::StrandedVehicle => "STRANDED_VEHICLE".into(),
            EventType::IceSlipperiness => "ICE_SLIPPERINESS".into(),
            EventType::Congestion => "CONGESTION".into(),
            EventType::GeneralSlipperinessAdvisory => "GENERAL_SLIPPERINESS_ADVISORY".into(),
            EventType::Infotainment { service } => format!("INFOTAINMENT_{}", service.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelevanceZone {
    TraceChain { chain: Polyline, lateral_max: i64 },
    PointWithDirection { point: GeoPosition, radius: i64, direction: Heading },
}

impl RelevanceZone {
    pub fn validate(&self) -> Result<(), MessageError> {
        match self {
            RelevanceZone::TraceChain { chain, lateral_max } => {
                chain.validate()?;
                if *lateral_max <= 0 {
                    return Err(violation("relevance_zone.lateral_max must be positive"));
                }
            }
            RelevanceZone::PointWithDirection { point, radius, direction } => {
                point.validate()?;
                direction.validate()?;
                if *radius <= 0 {
                    return Err(violation("relevance_zone.radius must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId {
    pub source: StationId,
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoadworksDetail {
    geometry: Polyline,
    expected_transit_time: u64,
    sample_count: u32,
}

impl RoadworksDetail {
    pub fn new(geometry: Polyline, expected_transit_time: u64, sample_count: u32) -> Result<Self, MessageError> {
        let d = RoadworksDetail { geometry, expected_transit_time, sample_count };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        self.geometry.validate()?;
        if self.sample_count > 0 && self.expected_transit_time == 0 {
            return Err(violation("detail.expected_transit_time must be positive when samples exist"));
        }
        Ok(())
    }

    pub fn geometry(&self) -> &Polyline {
        &self.geometry
    }

    pub fn expected_transit_time(&self) -> u64 {
        self.expected_transit_time
    }

    pub fn sample_count(&self) -> u32 {
        self.sample_count
    }
}

/// Field set for building a [`CamMessage`].
#[derive(Debug, Clone)]
pub struct CamDraft {
    pub source: StationId,
    pub station_type: StationType,
    pub position: GeoPosition,
    pub speed: u32,
    pub heading: Heading,
    pub length: u32,
    pub width: u32,
    pub headlights_on: bool,
    pub generated_at: Timestamp,
}

impl CamDraft {
    pub fn build(self) -> Result<CamMessage, MessageError> {
        let cam = CamMessage {
            source: self.source,
            station_type: self.station_type,
            position: self.position,
            speed: self.speed,
            heading: self.heading,
            length: self.length,
            width: self.width,
            headlights_on: self.headlights_on,
            generated_at: self.generated_at,
        };
        cam.validate()?;
        Ok(cam)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CamMessage {
    source: StationId,
    station_type: StationType,
    position: GeoPosition,
    speed: u32,
    heading: Heading,
    length: u32,
    width: u32,
    headlights_on: bool,
    generated_at: Timestamp,
}

impl CamMessage {
    pub fn validate(&self) -> Result<(), MessageError> {
        self.position.validate()?;
        self.heading.validate()?;
        if self.speed > MAX_SPEED {
            return Err(violation(format!("cam.speed {} exceeds {MAX_SPEED}", self.speed)));
        }
        if self.length == 0 || self.width == 0 {
            return Err(violation("cam.length and cam.width must be positive"));
        }
        Ok(())
    }

    pub fn source(&self) -> StationId {
        self.source
    }
    pub fn station_type(&self) -> StationType {
        self.station_type
    }
    pub fn position(&self) -> GeoPosition {
        self.position
    }
    pub fn speed(&self) -> u32 {
        self.speed
    }
    pub fn heading(&self) -> Heading {
        self.heading
    }
    pub fn length(&self) -> u32 {
        self.length
    }
    pub fn width(&self) -> u32 {
        self.width
    }
    pub fn headlights_on(&self) -> bool {
        self.headlights_on
    }
    pub fn generated_at(&self) -> Timestamp {
        self.generated_at
    }
}

/// Field set for building a [`DenMessage`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenDraft {
    pub message_id: MessageId,
    pub station_type: StationType,
    pub event: EventType,
    pub event_position: GeoPosition,
    pub validity_area: Area,
    pub relevance_zone: RelevanceZone,
    pub generated_at: Timestamp,
    pub expires_at: Timestamp,
    pub detail: Option<RoadworksDetail>,
}

impl DenDraft {
    pub fn build(self) -> Result<DenMessage, MessageError> {
        let den = DenMessage {
            message_id: self.message_id,
            station_type: self.station_type,
            event: self.event,
            event_position: self.event_position,
            validity_area: self.validity_area,
            relevance_zone: self.relevance_zone,
            generated_at: self.generated_at,
            expires_at: self.expires_at,
            detail: self.detail,
        };
        den.validate()?;
        Ok(den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DenMessage {
    message_id: MessageId,
    /// Type of the originating station.
    station_type: StationType,
    event: EventType,
    event_position: GeoPosition,
    validity_area: Area,
    relevance_zone: RelevanceZone,
    generated_at: Timestamp,
    expires_at: Timestamp,
    detail: Option<RoadworksDetail>,
}

impl DenMessage {
    pub fn validate(&self) -> Result<(), MessageError> {
        self.event_position.validate()?;
        self.validity_area.validate()?;
        self.relevance_zone.validate()?;
        if let Some(d) = &self.detail {
            d.validate()?;
        }
        if self.generated_at >= self.expires_at {
            return Err(violation(format!(
                "den.expires_at ({}) must be after generated_at ({})",
                self.expires_at, self.generated_at
            )));
        }
        if !contains(&self.validity_area, &self.event_position) {
            return Err(violation("den.event_position lies outside validity_area"));
        }
        if self.event == EventType::GeneralSlipperinessAdvisory && !self.station_type.is_rsu() {
            return Err(violation("general slipperiness advisories may only originate from an RSU"));
        }
        Ok(())
    }

    pub fn message_id(&self) -> MessageId {
        self.message_id
    }
    pub fn source(&self) -> StationId {
        self.message_id.source
    }
    pub fn seq(&self) -> u32 {
        self.message_id.seq
    }
    pub fn station_type(&self) -> StationType {
        self.station_type
    }
    pub fn event(&self) -> EventType {
        self.event
    }
    pub fn event_position(&self) -> GeoPosition {
        self.event_position
    }
    pub fn validity_area(&self) -> &Area {
        &self.validity_area
    }
    pub fn relevance_zone(&self) -> &RelevanceZone {
        &self.relevance_zone
    }
    pub fn generated_at(&self) -> Timestamp {
        self.generated_at
    }
    pub fn expires_at(&self) -> Timestamp {
        self.expires_at
    }
    pub fn detail(&self) -> Option<&RoadworksDetail> {
        self.detail.as_ref()
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        now > self.expires_at
    }

    /// Whether `newer` replaces this message: same source and event, higher seq.
    pub fn is_superseded_by(&self, newer: &DenMessage) -> bool {
        self.source() == newer.source() && self.event == newer.event && newer.seq() > self.seq()
    }

    pub fn to_draft(&self) -> DenDraft {
        DenDraft {
            message_id: self.message_id,
            station_type: self.station_type,
            event: self.event,
            event_position: self.event_position,
            validity_area: self.validity_area.clone(),
            relevance_zone: self.relevance_zone.clone(),
            generated_at: self.generated_at,
            expires_at: self.expires_at,
            detail: self.detail.clone(),
        }
    }
}

/// True iff both DENs report the same hazard and their validity areas overlap
/// (either contains the other's event position).
pub fn same_event(a: &DenMessage, b: &DenMessage) -> bool {
    a.event.matches(&b.event)
        && (contains(&a.validity_area, &b.event_position) || contains(&b.validity_area, &a.event_position))
}

/// A gate is a line segment vehicles cross.
pub type Gate = (GeoPosition, GeoPosition);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementInstruction {
    issuer: StationId,
    site_id: u32,
    entry_gate: Gate,
    exit_gate: Gate,
    sample_period: u64,
}

impl MeasurementInstruction {
    pub fn new(
        issuer: StationId,
        site_id: u32,
        entry_gate: Gate,
        exit_gate: Gate,
        sample_period: u64,
    ) -> Result<Self, MessageError> {
        let m = MeasurementInstruction { issuer, site_id, entry_gate, exit_gate, sample_period };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        for (name, (a, b)) in [("entry_gate", self.entry_gate), ("exit_gate", self.exit_gate)] {
            a.validate()?;
            b.validate()?;
            if a == b {
                return Err(violation(format!("instruction.{name} is degenerate")));
            }
        }
        if self.sample_period == 0 {
            return Err(violation("instruction.sample_period must be positive"));
        }
        Ok(())
    }

    pub fn issuer(&self) -> StationId {
        self.issuer
    }
    pub fn site_id(&self) -> u32 {
        self.site_id
    }
    pub fn entry_gate(&self) -> Gate {
        self.entry_gate
    }
    pub fn exit_gate(&self) -> Gate {
        self.exit_gate
    }
    pub fn sample_period(&self) -> u64 {
        self.sample_period
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementReport {
    reporter: StationId,
    site_id: u32,
    transit_time: u64,
    trace: Polyline,
}

impl MeasurementReport {
    pub fn new(reporter: StationId, site_id: u32, transit_time: u64, trace: Polyline) -> Result<Self, MessageError> {
        let r = MeasurementReport { reporter, site_id, transit_time, trace };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        self.trace.validate()?;
        if self.transit_time == 0 {
            return Err(violation("report.transit_time must be positive"));
        }
        Ok(())
    }

    pub fn reporter(&self) -> StationId {
        self.reporter
    }
    pub fn site_id(&self) -> u32 {
        self.site_id
    }
    pub fn transit_time(&self) -> u64 {
        self.transit_time
    }
    pub fn trace(&self) -> &Polyline {
        &self.trace
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ServiceRequest {
    requester: StationId,
    service: ServiceId,
    ttl: u64,
}

impl ServiceRequest {
    pub fn new(requester: StationId, service: ServiceId, ttl: u64) -> Result<Self, MessageError> {
        let r = ServiceRequest { requester, service, ttl };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        if self.ttl == 0 {
            return Err(violation("svcreq.ttl must be positive"));
        }
        Ok(())
    }

    pub fn requester(&self) -> StationId {
        self.requester
    }
    pub fn service(&self) -> ServiceId {
        self.service
    }
    pub fn ttl(&self) -> u64 {
        self.ttl
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CenterKind {
    RoadworksNotice,
    WeatherAdvisory,
    CongestionNotice,
    InfotainmentContent { service: ServiceId },
}

/// Verbose traffic-center record delivered to an RSU over the center link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CenterMessage {
    kind: CenterKind,
    payload_area: Area,
    relevance_zone: RelevanceZone,
    text_bytes: u64,
    expires_at: Timestamp,
}

impl CenterMessage {
    pub fn new(
        kind: CenterKind,
        payload_area: Area,
        relevance_zone: RelevanceZone,
        text_bytes: u64,
        expires_at: Timestamp,
    ) -> Result<Self, MessageError> {
        let m = CenterMessage { kind, payload_area, relevance_zone, text_bytes, expires_at };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        self.payload_area.validate()?;
        self.relevance_zone.validate()?;
        if self.text_bytes == 0 {
            return Err(violation("center.text_bytes must be positive"));
        }
        Ok(())
    }

    pub fn kind(&self) -> CenterKind {
        self.kind
    }
    pub fn payload_area(&self) -> &Area {
        &self.payload_area
    }
    pub fn relevance_zone(&self) -> &RelevanceZone {
        &self.relevance_zone
    }
    pub fn text_bytes(&self) -> u64 {
        self.text_bytes
    }
    pub fn expires_at(&self) -> Timestamp {
        self.expires_at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub id: StationId,
    pub position: GeoPosition,
    pub speed: u32,
    pub heading: Heading,
}

/// Per-approach digest of the CAMs an RSU heard from one quadrant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApproachSummary {
    rsu: StationId,
    sector: u8,
    vehicle_count: u32,
    nearest_distance: u64,
    max_speed: u32,
    snapshots: Vec<VehicleSnapshot>,
    generated_at: Timestamp,
}

impl ApproachSummary {
    pub fn new(
        rsu: StationId,
        sector: u8,
        vehicle_count: u32,
        nearest_distance: u64,
        max_speed: u32,
        snapshots: Vec<VehicleSnapshot>,
        generated_at: Timestamp,
    ) -> Result<Self, MessageError> {
        let s = ApproachSummary { rsu, sector, vehicle_count, nearest_distance, max_speed, snapshots, generated_at };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        if self.sector > 3 {
            return Err(violation(format!("summary.sector {} not in 0..=3", self.sector)));
        }
        if (self.vehicle_count as usize) < self.snapshots.len() {
            return Err(violation("summary.vehicle_count below snapshot count"));
        }
        for s in &self.snapshots {
            s.position.validate()?;
            s.heading.validate()?;
        }
        Ok(())
    }

    pub fn rsu(&self) -> StationId {
        self.rsu
    }
    pub fn sector(&self) -> u8 {
        self.sector
    }
    pub fn vehicle_count(&self) -> u32 {
        self.vehicle_count
    }
    pub fn nearest_distance(&self) -> u64 {
        self.nearest_distance
    }
    pub fn max_speed(&self) -> u32 {
        self.max_speed
    }
    pub fn snapshots(&self) -> &[VehicleSnapshot] {
        &self.snapshots
    }
    pub fn generated_at(&self) -> Timestamp {
        self.generated_at
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParticipantClass {
    EquippedVehicle,
    UnequippedVehicle,
    Pedestrian,
    Bicycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LdmParticipant {
    pub id: u32,
    pub class: ParticipantClass,
    pub position: GeoPosition,
    pub heading: Heading,
    pub speed: u32,
    pub observed_at: Timestamp,
}

/// Portion of an RSU's local dynamic map sent to one approach.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LdmExcerpt {
    rsu: StationId,
    sector: u8,
    reference_paths: Vec<Polyline>,
    participants: Vec<LdmParticipant>,
    generated_at: Timestamp,
}

impl LdmExcerpt {
    pub fn new(
        rsu: StationId,
        sector: u8,
        reference_paths: Vec<Polyline>,
        participants: Vec<LdmParticipant>,
        generated_at: Timestamp,
    ) -> Result<Self, MessageError> {
        let e = LdmExcerpt { rsu, sector, reference_paths, participants, generated_at };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        if self.sector > 3 {
            return Err(violation(format!("ldm_excerpt.sector {} not in 0..=3", self.sector)));
        }
        for p in &self.reference_paths {
            p.validate()?;
        }
        for p in &self.participants {
            p.position.validate()?;
            p.heading.validate()?;
        }
        Ok(())
    }

    pub fn rsu(&self) -> StationId {
        self.rsu
    }
    pub fn sector(&self) -> u8 {
        self.sector
    }
    pub fn reference_paths(&self) -> &[Polyline] {
        &self.reference_paths
    }
    pub fn participants(&self) -> &[LdmParticipant] {
        &self.participants
    }
    pub fn generated_at(&self) -> Timestamp {
        self.generated_at
    }
}

/// Outflow-to-inflow record carrying the refreshed site estimate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AggregateUpdate {
    source: StationId,
    site_id: u32,
    detail: RoadworksDetail,
}

impl AggregateUpdate {
    pub fn new(source: StationId, site_id: u32, detail: RoadworksDetail) -> Result<Self, MessageError> {
        let u = AggregateUpdate { source, site_id, detail };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        self.detail.validate()
    }

    pub fn source(&self) -> StationId {
        self.source
    }
    pub fn site_id(&self) -> u32 {
        self.site_id
    }
    pub fn detail(&self) -> &RoadworksDetail {
        &self.detail
    }
}

/// Any record the simulator puts on a wire: the air interface, the pair
/// backhaul or the center link.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Message {
    Cam(CamMessage),
    Den(DenMessage),
    Instruction(MeasurementInstruction),
    Report(MeasurementReport),
    ServiceRequest(ServiceRequest),
    Summary(ApproachSummary),
    LdmExcerpt(LdmExcerpt),
    Aggregate(AggregateUpdate),
    Center(CenterMessage),
}

impl Message {
    pub fn msg_type(&self) -> &'static str {
        match self {
            Message::Cam(_) => "CAM",
            Message::Den(_) => "DEN",
            Message::Instruction(_) => "INSTR",
            Message::Report(_) => "REPORT",
            Message::ServiceRequest(_) => "SVCREQ",
            Message::Summary(_) => "SUMMARY",
            Message::LdmExcerpt(_) => "LDM_EXCERPT",
            Message::Aggregate(_) => "AGGREGATE",
            Message::Center(_) => "CENTER",
        }
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        match self {
            Message::Cam(m) => m.validate(),
            Message::Den(m) => m.validate(),
            Message::Instruction(m) => m.validate(),
            Message::Report(m) => m.validate(),
            Message::ServiceRequest(m) => m.validate(),
            Message::Summary(m) => m.validate(),
            Message::LdmExcerpt(m) => m.validate(),
            Message::Aggregate(m) => m.validate(),
            Message::Center(m) => m.validate(),
        }
    }

    /// Infotainment DENs and service requests travel on the infotainment
    /// channel; everything else is safety traffic.
    pub fn is_infotainment(&self) -> bool {
        match self {
            Message::Den(d) => d.event().is_infotainment(),
            Message::ServiceRequest(_) => true,
            _ => false,
        }
    }
}
