//! Receiver-side DEN pipeline: temporal validity, geographic validity,
//! relevance, plausibility, then accept or reject.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geo::{contains, distance_to_polyline, segment_heading_at_nearest, GeoPosition, Heading};
use crate::messages::{
    same_event, ApproachSummary, DenMessage, EventType, LdmExcerpt, MessageId, RelevanceZone, ServiceId, StationId,
    Timestamp,
};

/// Tunable constants of the plausibility rule table and relevance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub base: f64,
    pub rsu_base: f64,
    pub increment: f64,
    pub veto: f64,
    /// Ambient temperature (tenths of °C) above which an uncorroborated ice
    /// warning is vetoed.
    pub veto_temp: i32,
    pub threshold: f64,
    pub heading_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            base: 0.5,
            rsu_base: 0.8,
            increment: 0.2,
            veto: 0.2,
            veto_temp: 200,
            threshold: 0.5,
            heading_tol: 60.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("base", self.base),
            ("rsu_base", self.rsu_base),
            ("increment", self.increment),
            ("veto", self.veto),
            ("threshold", self.threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("pipeline.{name}: {v} not in [0, 1]"));
            }
        }
        if !(self.heading_tol > 0.0 && self.heading_tol < 180.0) {
            errs.push(format!("pipeline.heading_tol: {} not in (0, 180)", self.heading_tol));
        }
        errs
    }
}

/// Everything a receiving node knows when judging an incoming DEN.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverContext {
    pub position: GeoPosition,
    pub heading: Heading,
    pub now: Timestamp,
    pub ambient_temp_decicelsius: i32,
    pub active_services: BTreeSet<ServiceId>,
    known_messages: Vec<(DenMessage, Timestamp)>,
    summaries: BTreeMap<(StationId, u8), ApproachSummary>,
    excerpts: BTreeMap<(StationId, u8), LdmExcerpt>,
}

impl ReceiverContext {
    pub fn new(position: GeoPosition, heading: Heading, now: Timestamp, ambient_temp_decicelsius: i32) -> Self {
        ReceiverContext {
            position,
            heading,
            now,
            ambient_temp_decicelsius,
            active_services: BTreeSet::new(),
            known_messages: Vec::new(),
            summaries: BTreeMap::new(),
            excerpts: BTreeMap::new(),
        }
    }

    pub fn known_messages(&self) -> &[(DenMessage, Timestamp)] {
        &self.known_messages
    }

    /// Advances the context clock and drops every expired DEN.
    pub fn set_now(&mut self, now: Timestamp) {
        self.now = now;
        self.evict_expired();
    }

    pub fn evict_expired(&mut self) {
        let now = self.now;
        self.known_messages.retain(|(d, _)| !d.is_expired(now));
    }

    pub fn forget(&mut self, id: MessageId) {
        self.known_messages.retain(|(d, _)| d.message_id() != id);
    }

    /// Inserts or refreshes a DEN; an older seq for the same source and event
    /// is replaced, and a stale seq is ignored.
    pub fn remember(&mut self, den: &DenMessage, received_at: Timestamp) {
        if den.is_expired(self.now) {
            return;
        }
        if let Some(entry) = self.known_messages.iter_mut().find(|(d, _)| d.message_id() == den.message_id()) {
            entry.1 = received_at;
            return;
        }
        if self.known_messages.iter().any(|(d, _)| den.is_superseded_by(d)) {
            return;
        }
        self.known_messages.retain(|(d, _)| !d.is_superseded_by(den));
        self.known_messages.push((den.clone(), received_at));
    }

    pub fn merge_summary(&mut self, summary: &ApproachSummary) {
        let key = (summary.rsu(), summary.sector());
        match self.summaries.get(&key) {
            Some(old) if old.generated_at() > summary.generated_at() => {}
            _ => {
                self.summaries.insert(key, summary.clone());
            }
        }
    }

    pub fn merge_excerpt(&mut self, excerpt: &LdmExcerpt) {
        let key = (excerpt.rsu(), excerpt.sector());
        match self.excerpts.get(&key) {
            Some(old) if old.generated_at() > excerpt.generated_at() => {}
            _ => {
                self.excerpts.insert(key, excerpt.clone());
            }
        }
    }

    pub fn summaries(&self) -> impl Iterator<Item = &ApproachSummary> {
        self.summaries.values()
    }

    pub fn excerpts(&self) -> impl Iterator<Item = &LdmExcerpt> {
        self.excerpts.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub temporal: bool,
    pub geographic: bool,
    pub relevant: bool,
    pub plausibility: f64,
    pub accepted: bool,
}

impl Verdict {
    fn rejected() -> Self {
        Verdict { temporal: false, geographic: false, relevant: false, plausibility: 0.0, accepted: false }
    }
}

/// Valid up to and including `expires_at`.
pub fn check_temporal(den: &DenMessage, now: Timestamp) -> bool {
    now <= den.expires_at()
}

pub fn check_geographic(den: &DenMessage, pos: &GeoPosition) -> bool {
    contains(den.validity_area(), pos)
}

pub fn check_relevance(den: &DenMessage, ctx: &ReceiverContext, heading_tol_deg: f64) -> bool {
    let geometric = match den.relevance_zone() {
        RelevanceZone::TraceChain { chain, lateral_max } => {
            distance_to_polyline(&ctx.position, chain) <= *lateral_max as f64
                && ctx.heading.difference(segment_heading_at_nearest(&ctx.position, chain)) <= heading_tol_deg
        }
        RelevanceZone::PointWithDirection { point, radius, direction } => {
            let r = *radius as i128;
            ctx.position.distance_sq(point) <= r * r && ctx.heading.difference(*direction) <= heading_tol_deg
        }
    };
    let service_ok = match den.event() {
        EventType::Infotainment { service } => ctx.active_services.contains(&service),
        _ => true,
    };
    geometric && service_ok
}

/// Number of distinct other sources with an unexpired known DEN reporting the
/// same event.
pub fn corroboration_count(den: &DenMessage, ctx: &ReceiverContext) -> u32 {
    let sources: BTreeSet<StationId> = ctx
        .known_messages
        .iter()
        .filter(|(k, _)| !k.is_expired(ctx.now))
        .filter(|(k, _)| k.source() != den.source() && same_event(k, den))
        .map(|(k, _)| k.source())
        .collect();
    sources.len() as u32
}

pub fn plausibility(den: &DenMessage, ctx: &ReceiverContext, cfg: &PipelineConfig) -> f64 {
    let count = corroboration_count(den, ctx);
    let base = if den.station_type().is_rsu() { cfg.rsu_base } else { cfg.base };
    let score = (base + cfg.increment * f64::from(count)).clamp(0.0, 1.0);
    if den.event() == EventType::IceSlipperiness && ctx.ambient_temp_decicelsius > cfg.veto_temp && count == 0 {
        return cfg.veto;
    }
    score
}

/// Runs the staged pipeline against `ctx`, updating its knowledge: an expired
/// DEN is forgotten, an accepted one is remembered.
pub fn process(den: &DenMessage, ctx: &mut ReceiverContext, cfg: &PipelineConfig) -> Verdict {
    ctx.evict_expired();
    let mut v = Verdict::rejected();
    v.temporal = check_temporal(den, ctx.now);
    if !v.temporal {
        ctx.forget(den.message_id());
        return v;
    }
    v.geographic = check_geographic(den, &ctx.position);
    if !v.geographic {
        return v;
    }
    v.relevant = check_relevance(den, ctx, cfg.heading_tol);
    if !v.relevant {
        return v;
    }
    v.plausibility = plausibility(den, ctx, cfg);
    v.accepted = v.plausibility >= cfg.threshold;
    if v.accepted {
        let now = ctx.now;
        ctx.remember(den, now);
    }
    v
}
