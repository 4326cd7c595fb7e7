//! Scenario files, the built-in scenarios and the run harness that writes
//! metrics to disk.
//!
//! A scenario is one JSON object. Lines whose first non-blank characters are
//! `//` are comments and are stripped before parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{CenterEvent, Detection, Engine, EngineSetup, MetricsReport, RadioModel, ScriptedDen, SimError};
use crate::geo::{Area, GeoPosition, Polyline};
use crate::messages::{
    codec, CenterMessage, DenDraft, EventType, LdmParticipant, MessageId, RelevanceZone, RoadworksDetail, RsuKind,
    StationId, StationType, Timestamp, MAX_SPEED,
};
use crate::reception::PipelineConfig;
use crate::rsu::{CamHandling, Rsu, RsuParams, SiteConfig, SitePeriods, SiteRole, SiteState, StaticLayer};
use crate::vehicle::{Body, SpeedChange, Subscription, VehicleState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("unknown scenario {0:?}")]
    Unknown(String),
}

fn default_step() -> u64 {
    100
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBudgets {
    pub safety: u64,
    pub infotainment: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Periods {
    pub cam: u64,
    pub rebroadcast: u64,
    /// Upper bound for the adaptive rebroadcast period; 64 × `rebroadcast`
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rebroadcast_ceiling: Option<u64>,
    pub instruction: u64,
    pub aggregation: u64,
    pub summary: u64,
    pub ldm: u64,
    pub ldm_staleness: u64,
    pub service_request: u64,
    pub site_den: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregation {
    pub summary_snapshots: usize,
}

impl Default for Aggregation {
    fn default() -> Self {
        Aggregation { summary_snapshots: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub id: u32,
    pub station_type: StationType,
    pub route: Polyline,
    pub speed_profile: Vec<SpeedChange>,
    #[serde(default)]
    pub start_at: Timestamp,
    pub length: u32,
    pub width: u32,
    #[serde(default)]
    pub headlights_on: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cam_period: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subscriptions: Vec<Subscription>,
}

/// Probe vehicles driven through the construction site. Each probe's
/// in-site speed is chosen so its transit time is `transit_time` ± up to
/// `noise_pct` percent; its route is the reference path shifted sideways
/// by up to `lateral_jitter`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeFleet {
    pub first_id: u32,
    pub count: u32,
    #[serde(default)]
    pub first_start: Timestamp,
    pub headway: u64,
    pub transit_time: u64,
    pub noise_pct: u32,
    pub lateral_jitter: i64,
    /// Straight lead-in and lead-out length around the reference path.
    pub approach: i64,
    pub approach_speed: u32,
    pub station_type: StationType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SiteRoleConfig {
    Inflow,
    Outflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsuConfig {
    pub id: u32,
    pub kind: RsuKind,
    pub position: GeoPosition,
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default)]
    pub cam_mode: CamHandling,
    #[serde(default)]
    pub excerpts: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_role: Option<SiteRoleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_peer: Option<u32>,
    #[serde(default)]
    pub static_layer: StaticLayer,
    #[serde(default)]
    pub center_latency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenEvent {
    pub at: Timestamp,
    pub source: u32,
    pub event: EventType,
    pub event_position: GeoPosition,
    pub validity_area: Area,
    pub relevance_zone: RelevanceZone,
    pub expires_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<RoadworksDetail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterEventConfig {
    pub at: Timestamp,
    pub rsu: u32,
    pub message: CenterMessage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub at: Timestamp,
    pub rsu: u32,
    pub participant: LdmParticipant,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Events {
    #[serde(default)]
    pub dens: Vec<DenEvent>,
    #[serde(default)]
    pub center: Vec<CenterEventConfig>,
    #[serde(default)]
    pub detections: Vec<DetectionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub note: String,
    pub seed: u64,
    pub t_end: Timestamp,
    #[serde(default = "default_step")]
    pub step: u64,
    pub radio: RadioModel,
    pub channels: ChannelBudgets,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    pub periods: Periods,
    /// Tenths of a degree Celsius.
    #[serde(default)]
    pub ambient_temp: i32,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub vehicles: Vec<VehicleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_fleet: Option<ProbeFleet>,
    #[serde(default)]
    pub rsus: Vec<RsuConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<SiteConfig>,
    #[serde(default)]
    pub events: Events,
}

/// Built-in scenario sources, in listing order.
pub const BUILTIN: &[(&str, &str)] = &[
    ("fig1_divided_highway", include_str!("../scenarios/fig1_divided_highway.json")),
    ("sparse_store_forward", include_str!("../scenarios/sparse_store_forward.json")),
    ("icy_bridge", include_str!("../scenarios/icy_bridge.json")),
    ("urban_intersection", include_str!("../scenarios/urban_intersection.json")),
    ("construction_site", include_str!("../scenarios/construction_site.json")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let (_, text) = BUILTIN.iter().find(|(n, _)| *n == name).ok_or_else(|| ScenarioError::Unknown(name.into()))?;
    parse(text)
}

/// Loads a built-in scenario by name, or a scenario file by path. A bare
/// word that is neither is reported as an unknown scenario.
pub fn resolve(name_or_path: &str) -> Result<ScenarioConfig, ScenarioError> {
    let path = Path::new(name_or_path);
    if BUILTIN.iter().any(|(n, _)| *n == name_or_path) {
        builtin(name_or_path)
    } else if !path.exists() && path.extension().is_none() && path.components().count() == 1 {
        Err(ScenarioError::Unknown(name_or_path.into()))
    } else {
        load(path)
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.into(), source })?;
    parse(&text)
}

pub fn strip_comments(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("//")).collect::<Vec<_>>().join("\n")
}

pub fn parse(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig =
        serde_json::from_str(&strip_comments(text)).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let errors = config.validate();
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ScenarioError::Validation(errors))
    }
}

impl ScenarioConfig {
    pub fn to_canonical(&self) -> Vec<u8> {
        codec::to_canonical_bytes(self)
    }

    fn vehicle_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.vehicles.iter().map(|v| v.id).collect();
        if let Some(f) = &self.probe_fleet {
            ids.extend((0..f.count).map(|i| f.first_id + i));
        }
        ids
    }

    /// Every problem found, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut err = |s: String| errs.push(s);
        if self.t_end == 0 {
            err("t_end must be positive".into());
        }
        if self.step == 0 {
            err("step must be positive".into());
        }
        if self.radio.range <= 0 {
            err("radio.range must be positive".into());
        }
        for (i, o) in self.radio.obstructions.iter().enumerate() {
            if let Err(e) = o.validate() {
                err(format!("radio.obstructions[{i}]: {e}"));
            }
        }
        for e in self.pipeline.validate() {
            err(format!("pipeline.{e}"));
        }
        let p = &self.periods;
        let named = [
            ("cam", p.cam),
            ("rebroadcast", p.rebroadcast),
            ("instruction", p.instruction),
            ("aggregation", p.aggregation),
            ("summary", p.summary),
            ("ldm", p.ldm),
            ("ldm_staleness", p.ldm_staleness),
            ("service_request", p.service_request),
            ("site_den", p.site_den),
        ];
        for (name, v) in named {
            if v == 0 {
                err(format!("periods.{name} must be positive"));
            } else if self.step > 0 && v % self.step != 0 {
                err(format!("periods.{name} must be a multiple of step {}", self.step));
            }
        }
        if let Some(c) = p.rebroadcast_ceiling {
            if c < p.rebroadcast {
                err("periods.rebroadcast_ceiling must be at least periods.rebroadcast".into());
            }
        }

        let mut seen = BTreeSet::new();
        let vehicle_ids = self.vehicle_ids();
        for id in vehicle_ids.iter().chain(self.rsus.iter().map(|r| &r.id)) {
            if *id == 0 || *id == u32::MAX {
                err(format!("station id {id} is reserved"));
            }
            if !seen.insert(*id) {
                err(format!("station id {id} defined twice"));
            }
        }
        let vehicles: BTreeSet<u32> = vehicle_ids.iter().copied().collect();
        let rsus: BTreeMap<u32, &RsuConfig> = self.rsus.iter().map(|r| (r.id, r)).collect();

        for (i, v) in self.vehicles.iter().enumerate() {
            let at = format!("vehicles[{i}] (id {})", v.id);
            if v.station_type.is_rsu() {
                err(format!("{at}.station_type must not be an RSU type"));
            }
            if let Err(e) = v.route.validate() {
                err(format!("{at}.route: {e}"));
            }
            check_profile(&v.speed_profile, &at, &mut err);
            if v.length == 0 || v.width == 0 {
                err(format!("{at}: length and width must be positive"));
            }
            if v.start_at >= self.t_end {
                err(format!("{at}.start_at must be before t_end"));
            }
            if let Some(c) = v.cam_period {
                if c == 0 || (self.step > 0 && c % self.step != 0) {
                    err(format!("{at}.cam_period must be a positive multiple of step"));
                }
            }
            for (j, s) in v.subscriptions.iter().enumerate() {
                if s.ttl == 0 {
                    err(format!("{at}.subscriptions[{j}].ttl must be positive"));
                }
            }
        }

        if let Some(f) = &self.probe_fleet {
            if self.site.is_none() {
                err("probe_fleet requires a site".into());
            }
            if f.count == 0 || f.headway == 0 || f.transit_time == 0 {
                err("probe_fleet: count, headway and transit_time must be positive".into());
            }
            if f.noise_pct >= 100 {
                err("probe_fleet.noise_pct must be below 100".into());
            }
            if f.approach <= 0 || f.lateral_jitter < 0 {
                err("probe_fleet: approach must be positive and lateral_jitter non-negative".into());
            }
            if f.approach_speed == 0 || f.approach_speed > MAX_SPEED {
                err(format!("probe_fleet.approach_speed must be in 1..={MAX_SPEED}"));
            }
            if f.station_type.is_rsu() {
                err("probe_fleet.station_type must not be an RSU type".into());
            }
        }

        for (i, r) in self.rsus.iter().enumerate() {
            let at = format!("rsus[{i}] (id {})", r.id);
            if let Err(e) = r.position.validate() {
                err(format!("{at}.position: {e}"));
            }
            if r.site_role.is_some() && self.site.is_none() {
                err(format!("{at}.site_role requires a site"));
            }
            if let Some(peer) = r.site_peer {
                match rsus.get(&peer) {
                    None => err(format!("{at}.site_peer {peer} is not a defined RSU")),
                    Some(pr) if pr.site_role.is_none() => err(format!("{at}.site_peer {peer} has no site_role")),
                    _ => {}
                }
            }
            if let Some(a) = &r.static_layer.intersection_area {
                if let Err(e) = a.validate() {
                    err(format!("{at}.static_layer.intersection_area: {e}"));
                }
            }
        }

        if let Some(s) = &self.site {
            for (name, g) in [("entry_gate", s.entry_gate), ("exit_gate", s.exit_gate)] {
                if g.0 == g.1 {
                    err(format!("site.{name} is degenerate"));
                }
            }
            if let Err(e) = s.reference_path.validate() {
                err(format!("site.reference_path: {e}"));
            }
            if s.prior_transit_time == 0 || s.sample_period == 0 || s.den_validity == 0 {
                err("site: prior_transit_time, sample_period and den_validity must be positive".into());
            }
            if self.step > 0 && s.sample_period % self.step != 0 {
                err("site.sample_period must be a multiple of step".into());
            }
            if s.window == 0 {
                err("site.window must be positive".into());
            }
            if s.resample_points < 2 {
                err("site.resample_points must be at least 2".into());
            }
            if let Err(e) = s.validity_area.validate() {
                err(format!("site.validity_area: {e}"));
            }
            if let Err(e) = s.relevance_zone.validate() {
                err(format!("site.relevance_zone: {e}"));
            }
        }

        for (i, d) in self.events.dens.iter().enumerate() {
            let at = format!("events.dens[{i}]");
            if d.at >= self.t_end {
                err(format!("{at}.at must be before t_end"));
            }
            if !vehicles.contains(&d.source) {
                err(format!("{at}.source {} is not a defined vehicle", d.source));
            }
            if d.expires_at <= d.at {
                err(format!("{at}.expires_at must be after at"));
            }
            if d.repeat == Some(0) {
                err(format!("{at}.repeat must be positive"));
            }
            let draft = den_draft(d, StationType::Car);
            match draft.build() {
                Err(e) if d.expires_at > d.at => err(format!("{at}: {e}")),
                _ => {}
            }
        }
        for (i, c) in self.events.center.iter().enumerate() {
            let at = format!("events.center[{i}]");
            if c.at >= self.t_end {
                err(format!("{at}.at must be before t_end"));
            }
            match rsus.get(&c.rsu) {
                None => err(format!("{at}.rsu {} is not a defined RSU", c.rsu)),
                Some(r) if r.kind != RsuKind::Central => err(format!("{at}.rsu {} has no center link", c.rsu)),
                _ => {}
            }
            if let Err(e) = c.message.validate() {
                err(format!("{at}.message: {e}"));
            }
        }
        for (i, d) in self.events.detections.iter().enumerate() {
            let at = format!("events.detections[{i}]");
            if d.at >= self.t_end {
                err(format!("{at}.at must be before t_end"));
            }
            if !rsus.contains_key(&d.rsu) {
                err(format!("{at}.rsu {} is not a defined RSU", d.rsu));
            }
        }
        errs
    }
}

fn check_profile(profile: &[SpeedChange], at: &str, err: &mut impl FnMut(String)) {
    match profile.first() {
        None => err(format!("{at}.speed_profile is empty")),
        Some(c) if c.from_arc != 0 => err(format!("{at}.speed_profile must start at from_arc 0")),
        _ => {}
    }
    if profile.windows(2).any(|w| w[0].from_arc >= w[1].from_arc) {
        err(format!("{at}.speed_profile from_arc values must increase"));
    }
    if profile.iter().any(|c| c.speed > MAX_SPEED) {
        err(format!("{at}.speed_profile speed exceeds {MAX_SPEED}"));
    }
}

fn den_draft(d: &DenEvent, station_type: StationType) -> DenDraft {
    DenDraft {
        message_id: MessageId { source: StationId(d.source), seq: 1 },
        station_type,
        event: d.event,
        event_position: d.event_position,
        validity_area: d.validity_area.clone(),
        relevance_zone: d.relevance_zone.clone(),
        generated_at: d.at,
        expires_at: d.expires_at,
        detail: d.detail.clone(),
    }
}

/// Probe vehicles for the construction site, drawn from `rng`.
pub fn probe_vehicles(
    fleet: &ProbeFleet,
    site: &SiteConfig,
    cfg: &ScenarioConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<VehicleConfig> {
    let path = site.reference_path.points();
    let site_len = site.reference_path.length();
    (0..fleet.count)
        .map(|i| {
            let offset =
                if fleet.lateral_jitter > 0 { rng.gen_range(-fleet.lateral_jitter..=fleet.lateral_jitter) } else { 0 };
            let noise = i64::from(fleet.noise_pct);
            let permille = 1000 + rng.gen_range(-noise * 10..=noise * 10);
            let transit = (fleet.transit_time as i64 * permille / 1000) as f64;
            let first = path[0].translate(0, offset);
            let last = path[path.len() - 1].translate(0, offset);
            let mut points = vec![first.translate(-fleet.approach, 0)];
            points.extend(path.iter().map(|q| q.translate(0, offset)));
            points.push(last.translate(fleet.approach, 0));
            let route = Polyline::new_dedup(points).expect("reference path is valid");
            let site_speed = ((site_len * 1000.0 / transit).round() as u32).clamp(1, MAX_SPEED);
            let entry = fleet.approach as u64;
            let exit = (fleet.approach as f64 + site_len).ceil() as u64;
            VehicleConfig {
                id: fleet.first_id + i,
                station_type: fleet.station_type,
                route,
                speed_profile: vec![
                    SpeedChange { from_arc: 0, speed: fleet.approach_speed },
                    SpeedChange { from_arc: entry, speed: site_speed },
                    SpeedChange { from_arc: exit, speed: fleet.approach_speed },
                ],
                start_at: fleet.first_start + u64::from(i) * fleet.headway,
                length: 450,
                width: 180,
                headlights_on: false,
                cam_period: Some(cfg.periods.cam),
                subscriptions: Vec::new(),
            }
        })
        .collect()
}

/// Turns a validated config into an engine.
pub fn build(cfg: &ScenarioConfig) -> Result<Engine, ScenarioError> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(ScenarioError::Validation(errors));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vehicle_cfgs = cfg.vehicles.clone();
    if let (Some(fleet), Some(site)) = (&cfg.probe_fleet, &cfg.site) {
        vehicle_cfgs.extend(probe_vehicles(fleet, site, cfg, &mut rng));
    }
    let vehicles = vehicle_cfgs
        .iter()
        .map(|v| {
            VehicleState::new(
                StationId(v.id),
                v.station_type,
                v.route.clone(),
                v.speed_profile.clone(),
                Body { length: v.length, width: v.width, headlights_on: v.headlights_on },
                v.cam_period.unwrap_or(cfg.periods.cam),
                cfg.ambient_temp,
            )
            .starting_at(v.start_at)
            .with_subscriptions(v.subscriptions.clone())
        })
        .collect();

    let p = &cfg.periods;
    let mut rsus = Vec::new();
    let mut center_latency = BTreeMap::new();
    for r in cfg.rsus.iter().filter(|r| r.enabled) {
        let params = RsuParams {
            rebroadcast_period: p.rebroadcast,
            rebroadcast_ceiling: p.rebroadcast_ceiling.unwrap_or(64 * p.rebroadcast),
            cam_period: p.cam,
            summary_period: p.summary,
            summary_snapshots: cfg.aggregation.summary_snapshots,
            ldm_period: p.ldm,
            ldm_staleness: p.ldm_staleness,
            cam_handling: r.cam_mode,
            excerpts: r.excerpts,
        };
        let mut rsu = Rsu::new(StationId(r.id), r.kind, r.position, params, r.static_layer.clone());
        if let (Some(role), Some(site)) = (r.site_role, &cfg.site) {
            let role = match role {
                SiteRoleConfig::Inflow => SiteRole::Inflow,
                SiteRoleConfig::Outflow => SiteRole::Outflow,
            };
            let periods = SitePeriods { den: p.site_den, instruction: p.instruction, aggregation: p.aggregation };
            let state = SiteState::new(
                role,
                StationId(r.id),
                StationType::Rsu(r.kind),
                r.site_peer.map(StationId),
                site.clone(),
                periods,
            )
            .map_err(|e| ScenarioError::Validation(vec![format!("site: {e}")]))?;
            rsu = rsu.with_site(state);
        }
        center_latency.insert(StationId(r.id), r.center_latency);
        rsus.push(rsu);
    }

    let dens = cfg
        .events
        .dens
        .iter()
        .map(|d| ScriptedDen {
            at: d.at,
            source: StationId(d.source),
            draft: den_draft(d, StationType::Car),
            repeat: d.repeat,
            until: d.until,
        })
        .collect();
    let center = cfg
        .events
        .center
        .iter()
        .map(|c| CenterEvent { at: c.at, rsu: StationId(c.rsu), msg: c.message.clone() })
        .collect();
    let detections = cfg
        .events
        .detections
        .iter()
        .map(|d| Detection { at: d.at, rsu: StationId(d.rsu), participant: d.participant })
        .collect();

    let setup = EngineSetup {
        name: cfg.name.clone(),
        seed: cfg.seed,
        t_end: cfg.t_end,
        step: cfg.step,
        radio: cfg.radio.clone(),
        safety_budget: cfg.channels.safety,
        infotainment_budget: cfg.channels.infotainment,
        pipeline: cfg.pipeline.clone(),
        rsu_cam_period: p.cam,
        service_request_period: p.service_request,
        vehicles,
        rsus,
        center_latency,
        dens,
        center,
        detections,
    };
    Ok(Engine::new(setup, rng))
}

/// Runs a scenario and writes `metrics.csv`, `summary.json` and one
/// display log per vehicle under `displays/` into `out_dir`.
pub fn run(cfg: &ScenarioConfig, out_dir: impl AsRef<Path>) -> Result<MetricsReport, RunError> {
    run_until(cfg, None, out_dir)
}

/// Like [`run`], optionally stopping before the scenario's own `t_end`.
pub fn run_until(
    cfg: &ScenarioConfig,
    until: Option<Timestamp>,
    out_dir: impl AsRef<Path>,
) -> Result<MetricsReport, RunError> {
    let mut engine = build(cfg)?;
    if let Some(t) = until {
        engine = engine.truncate(t);
    }
    let report = engine.run()?;
    write_outputs(&report, out_dir.as_ref())?;
    Ok(report)
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl RunError {
    /// Process exit code: 2 for a bad scenario, 3 for an internal invariant
    /// violation, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(ScenarioError::Io { .. }) => 1,
            RunError::Scenario(_) => 2,
            RunError::Sim(SimError::Invariant(_) | SimError::Codec(_)) => 3,
            RunError::Sim(_) => 1,
        }
    }
}

pub fn write_outputs(report: &MetricsReport, out_dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(out_dir.join("displays"))?;
    report.write_csv(fs::File::create(out_dir.join("metrics.csv"))?)?;
    let mut summary = report.to_canonical();
    summary.push(b'\n');
    fs::write(out_dir.join("summary.json"), summary)?;
    for (vehicle, entries) in &report.displays {
        let mut w = csv::Writer::from_path(out_dir.join("displays").join(format!("vehicle_{}.csv", vehicle.0)))?;
        w.write_record(["t_ms", "source", "seq", "event"])?;
        for e in entries {
            w.write_record([e.t.to_string(), e.source.0.to_string(), e.seq.to_string(), e.event.clone()])?;
        }
        w.flush()?;
    }
    Ok(())
}
