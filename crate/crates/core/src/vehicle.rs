//! Vehicle behavior: route kinematics, CAM emission, reception and the
//! construction-site measurement task.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{on_segment, segments_intersect, GeoPosition, Heading, Polyline};
use crate::messages::{
    CamDraft, CamMessage, DenMessage, Gate, MeasurementInstruction, MeasurementReport, Message, MessageId, ServiceId,
    ServiceRequest, StationId, StationType, Timestamp,
};
use crate::reception::{process, PipelineConfig, ReceiverContext, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VehicleError {
    #[error("no active measurement")]
    NoActiveMeasurement,
    #[error("measurement trace or transit time degenerate")]
    DegenerateMeasurement,
}

/// Speed in effect from `from_arc` (cm along the route) onwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeedChange {
    pub from_arc: u64,
    pub speed: u32,
}

/// An infotainment service the vehicle keeps requesting until `until`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub service: ServiceId,
    pub ttl: u64,
    pub until: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Body {
    pub length: u32,
    pub width: u32,
    pub headlights_on: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveMeasurement {
    pub site_id: u32,
    pub entered_at: Timestamp,
    pub samples: Vec<(Timestamp, GeoPosition)>,
    pub sample_period: u64,
    pub exit_gate: Gate,
}

#[derive(Debug, Clone)]
pub struct VehicleState {
    pub id: StationId,
    pub station_type: StationType,
    pub route: Polyline,
    pub start_at: Timestamp,
    pub cam_period: u64,
    pub body: Body,
    profile: Vec<SpeedChange>,
    vertex_arcs: Vec<f64>,
    arc_position: u64,
    remainder: u64,
    departed: bool,
    pub ctx: ReceiverContext,
    subscriptions: Vec<Subscription>,
    armed: BTreeMap<u32, MeasurementInstruction>,
    completed_sites: BTreeSet<u32>,
    measurement: Option<ActiveMeasurement>,
    pending_report: Option<MeasurementReport>,
    display_log: Vec<(Timestamp, DenMessage)>,
    verdicts: BTreeMap<MessageId, Verdict>,
    next_den_seq: u32,
}

impl VehicleState {
    /// `profile` must start at arc 0; later entries are sorted by `from_arc`.
    pub fn new(
        id: StationId,
        station_type: StationType,
        route: Polyline,
        profile: Vec<SpeedChange>,
        body: Body,
        cam_period: u64,
        ambient_temp_decicelsius: i32,
    ) -> Self {
        let mut vertex_arcs = vec![0.0];
        for len in route.segment_lengths() {
            vertex_arcs.push(vertex_arcs.last().unwrap() + len);
        }
        let ctx = ReceiverContext::new(route.points()[0], route.heading_at(0.0), 0, ambient_temp_decicelsius);
        VehicleState {
            id,
            station_type,
            route,
            start_at: 0,
            cam_period,
            body,
            profile,
            vertex_arcs,
            arc_position: 0,
            remainder: 0,
            departed: false,
            ctx,
            subscriptions: Vec::new(),
            armed: BTreeMap::new(),
            completed_sites: BTreeSet::new(),
            measurement: None,
            pending_report: None,
            display_log: Vec::new(),
            verdicts: BTreeMap::new(),
            next_den_seq: 1,
        }
    }

    pub fn starting_at(mut self, start_at: Timestamp) -> Self {
        self.start_at = start_at;
        self
    }

    pub fn with_subscriptions(mut self, subs: Vec<Subscription>) -> Self {
        self.ctx.active_services = subs.iter().map(|s| s.service).collect();
        self.subscriptions = subs;
        self
    }

    pub fn position(&self) -> GeoPosition {
        self.ctx.position
    }

    pub fn heading(&self) -> Heading {
        self.ctx.heading
    }

    pub fn arc_position(&self) -> u64 {
        self.arc_position
    }

    pub fn departed(&self) -> bool {
        self.departed
    }

    /// On the road and not yet at the end of its route.
    pub fn present(&self, now: Timestamp) -> bool {
        now >= self.start_at && !self.departed
    }

    pub fn speed(&self) -> u32 {
        if self.departed {
            return 0;
        }
        self.profile.iter().take_while(|c| c.from_arc <= self.arc_position).last().map_or(0, |c| c.speed)
    }

    pub fn display_log(&self) -> &[(Timestamp, DenMessage)] {
        &self.display_log
    }

    pub fn verdict(&self, id: MessageId) -> Option<&Verdict> {
        self.verdicts.get(&id)
    }

    pub fn measurement(&self) -> Option<&ActiveMeasurement> {
        self.measurement.as_ref()
    }

    pub fn pending_report(&self) -> Option<&MeasurementReport> {
        self.pending_report.as_ref()
    }

    pub fn clear_pending_report(&mut self) {
        self.pending_report = None;
    }

    pub fn next_den_seq(&mut self) -> u32 {
        let seq = self.next_den_seq;
        self.next_den_seq += 1;
        seq
    }

    pub fn set_now(&mut self, now: Timestamp) {
        self.ctx.set_now(now);
    }

    /// Points swept while moving from `from` to `to` along the route.
    fn swept(&self, from: f64, to: f64) -> Vec<GeoPosition> {
        let mut pts = vec![self.route.position_at(from)];
        for (i, arc) in self.vertex_arcs.iter().enumerate() {
            if *arc > from && *arc < to {
                pts.push(self.route.points()[i]);
            }
        }
        pts.push(self.route.position_at(to));
        pts.dedup();
        pts
    }

    fn crosses(path: &[GeoPosition], gate: &Gate) -> bool {
        if path.len() < 2 || on_segment(&path[0], &gate.0, &gate.1) {
            return false;
        }
        path.windows(2).any(|w| segments_intersect(&w[0], &w[1], &gate.0, &gate.1))
    }

    /// Moves the vehicle by `dt` ms; `now` is the instant at the end of the
    /// step. Gate crossings and trace samples are attributed to `now`.
    pub fn advance(&mut self, dt: u64, now: Timestamp) {
        if self.departed {
            return;
        }
        let total = self.remainder + u64::from(self.speed()) * dt;
        let step = total / 1000;
        self.remainder = total % 1000;
        let length = self.route.length();
        let from = self.arc_position as f64;
        let target = self.arc_position + step;
        let reached_end = target as f64 >= length;
        self.arc_position = if reached_end { length.floor() as u64 } else { target };
        let to = if reached_end { length } else { self.arc_position as f64 };

        self.ctx.position = self.route.position_at(to);
        self.ctx.heading = self.route.heading_at(to.min(length));
        if step > 0 {
            let path = self.swept(from, to);
            self.check_gates(&path, now);
        }
        if reached_end {
            self.departed = true;
        }
    }

    fn check_gates(&mut self, path: &[GeoPosition], now: Timestamp) {
        let entered: Vec<u32> = self
            .armed
            .iter()
            .filter(|(_, instr)| Self::crosses(path, &instr.entry_gate()))
            .map(|(site, _)| *site)
            .collect();
        if self.measurement.is_none() {
            if let Some(site) = entered.first() {
                let instr = self.armed.remove(site).expect("armed site present");
                self.measurement = Some(ActiveMeasurement {
                    site_id: instr.site_id(),
                    entered_at: now,
                    samples: vec![(now, self.ctx.position)],
                    sample_period: instr.sample_period(),
                    exit_gate: instr.exit_gate(),
                });
                return;
            }
        }
        let Some(m) = &mut self.measurement else { return };
        if (now - m.entered_at).is_multiple_of(m.sample_period) {
            m.samples.push((now, self.ctx.position));
        }
        let exit = m.exit_gate;
        if Self::crosses(path, &exit) {
            if let Ok(report) = self.finish_measurement(now) {
                self.pending_report = Some(report);
            }
        }
    }

    /// Closes the active measurement at the exit gate.
    pub fn finish_measurement(&mut self, now: Timestamp) -> Result<MeasurementReport, VehicleError> {
        let mut m = self.measurement.take().ok_or(VehicleError::NoActiveMeasurement)?;
        self.completed_sites.insert(m.site_id);
        if m.samples.last().is_none_or(|(t, _)| *t < now) {
            m.samples.push((now, self.ctx.position));
        }
        let trace = Polyline::new_dedup(m.samples.iter().map(|(_, p)| *p).collect())
            .map_err(|_| VehicleError::DegenerateMeasurement)?;
        MeasurementReport::new(self.id, m.site_id, now.saturating_sub(m.entered_at), trace)
            .map_err(|_| VehicleError::DegenerateMeasurement)
    }

    /// Drops whatever measurement work is unfinished; returns how many
    /// reports are lost.
    pub fn abandon_measurement(&mut self) -> u32 {
        let lost = u32::from(self.measurement.take().is_some()) + u32::from(self.pending_report.take().is_some());
        self.armed.clear();
        lost
    }

    pub fn emit_cam(&self, now: Timestamp) -> CamMessage {
        CamDraft {
            source: self.id,
            station_type: self.station_type,
            position: self.ctx.position,
            speed: self.speed(),
            heading: self.ctx.heading,
            length: self.body.length,
            width: self.body.width,
            headlights_on: self.body.headlights_on,
            generated_at: now,
        }
        .build()
        .expect("vehicle state validated at load")
    }

    pub fn service_requests(&self, now: Timestamp) -> Vec<ServiceRequest> {
        self.subscriptions
            .iter()
            .filter(|s| now <= s.until)
            .filter_map(|s| ServiceRequest::new(self.id, s.service, s.ttl).ok())
            .collect()
    }

    /// Handles one air message. Returns the pipeline verdict for DENs.
    pub fn on_receive(&mut self, msg: &Message, now: Timestamp, cfg: &PipelineConfig) -> Option<Verdict> {
        self.ctx.set_now(now);
        match msg {
            Message::Den(den) => {
                if den.source() == self.id {
                    return None;
                }
                let verdict = process(den, &mut self.ctx, cfg);
                self.verdicts.insert(den.message_id(), verdict);
                if verdict.accepted && !self.display_log.iter().any(|(_, d)| d.message_id() == den.message_id()) {
                    self.display_log.push((now, den.clone()));
                }
                Some(verdict)
            }
            Message::Instruction(instr) => {
                let site = instr.site_id();
                let busy = self.measurement.as_ref().is_some_and(|m| m.site_id == site);
                if !busy && !self.completed_sites.contains(&site) {
                    self.armed.insert(site, instr.clone());
                }
                None
            }
            Message::Summary(s) => {
                self.ctx.merge_summary(s);
                None
            }
            Message::LdmExcerpt(e) => {
                self.ctx.merge_excerpt(e);
                None
            }
            _ => None,
        }
    }
}
