//! Standalone construction-site pair. The inflow unit asks passing vehicles
//! to measure their transit and broadcasts the current estimate; the outflow
//! unit collects the reports at the site exit, aggregates them and hands the
//! result back to the inflow unit over the pair backhaul.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{Area, GeoPosition, Polyline};
use crate::messages::{
    AggregateUpdate, DenDraft, DenMessage, EventType, Gate, MeasurementInstruction, MeasurementReport, Message,
    MessageId, RelevanceZone, RoadworksDetail, StationId, StationType, Timestamp,
};

use super::Outbound;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SiteError {
    #[error("no reports to aggregate")]
    EmptyWindow,
    #[error("resampling needs at least two points, got {0}")]
    TooFewResamplePoints(usize),
    #[error("aggregated geometry is degenerate: {0}")]
    Degenerate(String),
}

/// Lower median of a non-empty slice.
pub fn lower_median(values: &[u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

/// Combines a window of reports: lower-median transit time and the
/// per-index mean of every trace resampled to `k` points by arc length.
pub fn aggregate_site(reports: &[MeasurementReport], k: usize) -> Result<RoadworksDetail, SiteError> {
    if reports.is_empty() {
        return Err(SiteError::EmptyWindow);
    }
    if k < 2 {
        return Err(SiteError::TooFewResamplePoints(k));
    }
    let times: Vec<u64> = reports.iter().map(|r| r.transit_time()).collect();
    let median = lower_median(&times).expect("window is non-empty");

    let mut sums = vec![(0.0f64, 0.0f64); k];
    for r in reports {
        for (acc, (x, y)) in sums.iter_mut().zip(r.trace().resample(k)) {
            acc.0 += x;
            acc.1 += y;
        }
    }
    let n = reports.len() as f64;
    let points: Vec<GeoPosition> =
        sums.into_iter().map(|(x, y)| GeoPosition::new((x / n).round() as i64, (y / n).round() as i64)).collect();
    let geometry = Polyline::new_dedup(points).map_err(|e| SiteError::Degenerate(e.to_string()))?;
    RoadworksDetail::new(geometry, median, reports.len() as u32).map_err(|e| SiteError::Degenerate(e.to_string()))
}

/// Static description of one construction site shared by both units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteConfig {
    pub site_id: u32,
    pub entry_gate: Gate,
    pub exit_gate: Gate,
    pub reference_path: Polyline,
    pub prior_transit_time: u64,
    pub sample_period: u64,
    pub validity_area: Area,
    pub relevance_zone: RelevanceZone,
    /// Lifetime of each roadworks DEN the inflow unit issues.
    pub den_validity: u64,
    pub backhaul_latency: u64,
    /// Reports kept in the aggregation window.
    pub window: usize,
    pub resample_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SiteRole {
    Inflow,
    Outflow,
}

/// Emission periods for the site loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SitePeriods {
    pub den: u64,
    pub instruction: u64,
    pub aggregation: u64,
}

#[derive(Debug, Clone)]
pub struct SiteState {
    pub role: SiteRole,
    pub rsu: StationId,
    rsu_type: StationType,
    /// Inflow: the outflow unit; outflow: the inflow unit.
    pub peer: Option<StationId>,
    config: SiteConfig,
    periods: SitePeriods,
    instruction: MeasurementInstruction,
    reports: VecDeque<MeasurementReport>,
    current_estimate: RoadworksDetail,
    unsent_reports: bool,
    estimate_changed: bool,
    current_den: Option<DenMessage>,
    next_seq: u32,
    last_den: Option<Timestamp>,
    last_instruction: Option<Timestamp>,
    last_aggregation: Option<Timestamp>,
}

impl SiteState {
    pub fn new(
        role: SiteRole,
        rsu: StationId,
        rsu_type: StationType,
        peer: Option<StationId>,
        config: SiteConfig,
        periods: SitePeriods,
    ) -> Result<Self, SiteError> {
        let instruction =
            MeasurementInstruction::new(rsu, config.site_id, config.entry_gate, config.exit_gate, config.sample_period)
                .map_err(|e| SiteError::Degenerate(e.to_string()))?;
        let prior = RoadworksDetail::new(config.reference_path.clone(), config.prior_transit_time, 0)
            .map_err(|e| SiteError::Degenerate(e.to_string()))?;
        Ok(SiteState {
            role,
            rsu,
            rsu_type,
            peer,
            config,
            periods,
            instruction,
            reports: VecDeque::new(),
            current_estimate: prior,
            unsent_reports: false,
            estimate_changed: false,
            current_den: None,
            next_seq: 1,
            last_den: None,
            last_instruction: None,
            last_aggregation: None,
        })
    }

    pub fn site_id(&self) -> u32 {
        self.config.site_id
    }

    pub fn config(&self) -> &SiteConfig {
        &self.config
    }

    pub fn current_estimate(&self) -> &RoadworksDetail {
        &self.current_estimate
    }

    pub fn reports(&self) -> impl Iterator<Item = &MeasurementReport> {
        self.reports.iter()
    }

    pub fn current_den(&self) -> Option<&DenMessage> {
        self.current_den.as_ref()
    }

    /// Outflow side: accept a vehicle's report into the window.
    pub fn on_report(&mut self, report: &MeasurementReport) -> bool {
        if self.role != SiteRole::Outflow || report.site_id() != self.config.site_id {
            return false;
        }
        self.reports.push_back(report.clone());
        while self.reports.len() > self.config.window {
            self.reports.pop_front();
        }
        self.unsent_reports = true;
        true
    }

    /// Inflow side: adopt the outflow unit's aggregate.
    pub fn on_aggregate(&mut self, update: &AggregateUpdate) -> bool {
        if self.role != SiteRole::Inflow || update.site_id() != self.config.site_id {
            return false;
        }
        if *update.detail() != self.current_estimate {
            self.current_estimate = update.detail().clone();
            self.estimate_changed = true;
        }
        true
    }

    fn due(last: Option<Timestamp>, period: u64, now: Timestamp) -> bool {
        last.is_none_or(|t| now.saturating_sub(t) >= period)
    }

    fn issue_den(&mut self, now: Timestamp) -> DenMessage {
        let reference = self.config.reference_path.points()[0];
        let event_position = if crate::geo::contains(&self.config.validity_area, &reference) {
            reference
        } else {
            self.config.validity_area.anchor()
        };
        let den = DenDraft {
            message_id: MessageId { source: self.rsu, seq: self.next_seq },
            station_type: self.rsu_type,
            event: EventType::Roadworks,
            event_position,
            validity_area: self.config.validity_area.clone(),
            relevance_zone: self.config.relevance_zone.clone(),
            generated_at: now,
            expires_at: now + self.config.den_validity,
            detail: Some(self.current_estimate.clone()),
        }
        .build()
        .expect("site configuration validated at load");
        self.next_seq += 1;
        den
    }

    pub fn site_tick(&mut self, now: Timestamp) -> Vec<Outbound> {
        let mut out = Vec::new();
        match self.role {
            SiteRole::Inflow => {
                if self.estimate_changed || Self::due(self.last_den, self.periods.den, now) {
                    let refresh = self.estimate_changed
                        || self.current_den.as_ref().is_none_or(|d| d.expires_at() < now + 2 * self.periods.den);
                    if refresh {
                        self.current_den = Some(self.issue_den(now));
                        self.estimate_changed = false;
                    }
                    let den = self.current_den.clone().expect("issued above");
                    out.push(Outbound::Air(Message::Den(den)));
                    self.last_den = Some(now);
                }
                if Self::due(self.last_instruction, self.periods.instruction, now) {
                    out.push(Outbound::Air(Message::Instruction(self.instruction.clone())));
                    self.last_instruction = Some(now);
                }
            }
            SiteRole::Outflow => {
                if Self::due(self.last_aggregation, self.periods.aggregation, now) {
                    self.last_aggregation = Some(now);
                    if self.unsent_reports {
                        let window: Vec<MeasurementReport> = self.reports.iter().cloned().collect();
                        if let Ok(detail) = aggregate_site(&window, self.config.resample_points) {
                            self.current_estimate = detail.clone();
                            self.unsent_reports = false;
                            if let Some(peer) = self.peer {
                                let update = AggregateUpdate::new(self.rsu, self.config.site_id, detail)
                                    .expect("aggregate detail is valid");
                                out.push(Outbound::Backhaul { to: peer, msg: Message::Aggregate(update) });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::RsuKind;

    fn p(x: i64, y: i64) -> GeoPosition {
        GeoPosition::new(x, y)
    }

    fn straight_report(id: u32, transit: u64) -> MeasurementReport {
        let trace = Polyline::new(vec![p(0, 0), p(1000, 0), p(3000, 0)]).unwrap();
        MeasurementReport::new(StationId(id), 1, transit, trace).unwrap()
    }

    fn config() -> SiteConfig {
        SiteConfig {
            site_id: 1,
            entry_gate: (p(0, -500), p(0, 500)),
            exit_gate: (p(40_000, -500), p(40_000, 500)),
            reference_path: Polyline::new(vec![p(0, 0), p(40_000, 0)]).unwrap(),
            prior_transit_time: 45_000,
            sample_period: 1000,
            validity_area: Area::circle(p(0, 0), 100_000).unwrap(),
            relevance_zone: RelevanceZone::TraceChain {
                chain: Polyline::new(vec![p(-60_000, 0), p(0, 0)]).unwrap(),
                lateral_max: 600,
            },
            den_validity: 30_000,
            backhaul_latency: 100,
            window: 20,
            resample_points: 50,
        }
    }

    const PERIODS: SitePeriods = SitePeriods { den: 1000, instruction: 2000, aggregation: 5000 };
    const STANDALONE: StationType = StationType::Rsu(RsuKind::Standalone);

    #[test]
    fn single_report_aggregate() {
        let r = straight_report(1, 60_000);
        let d = aggregate_site(std::slice::from_ref(&r), 5).unwrap();
        assert_eq!(d.expected_transit_time(), 60_000);
        assert_eq!(d.sample_count(), 1);
        let expect: Vec<GeoPosition> = [0, 750, 1500, 2250, 3000].iter().map(|&x| p(x, 0)).collect();
        assert_eq!(d.geometry().points(), expect.as_slice());
    }

    #[test]
    fn median_ignores_outlier() {
        let reports: Vec<_> =
            [100_000, 110_000, 400_000].iter().enumerate().map(|(i, &t)| straight_report(i as u32, t)).collect();
        assert_eq!(aggregate_site(&reports, 10).unwrap().expected_transit_time(), 110_000);
        assert_eq!(lower_median(&[4, 1, 3, 2]), Some(2));
    }

    #[test]
    fn empty_window_errors() {
        assert_eq!(aggregate_site(&[], 50), Err(SiteError::EmptyWindow));
    }

    #[test]
    fn inflow_cold_start_broadcasts_prior() {
        let mut s = SiteState::new(SiteRole::Inflow, StationId(50), STANDALONE, Some(StationId(51)), config(), PERIODS)
            .unwrap();
        let out = s.site_tick(0);
        let den = out.iter().find_map(|o| match o {
            Outbound::Air(Message::Den(d)) => Some(d.clone()),
            _ => None,
        });
        let den = den.expect("roadworks DEN on cold start");
        assert_eq!(den.event(), EventType::Roadworks);
        assert_eq!(den.detail().unwrap().sample_count(), 0);
        assert_eq!(den.detail().unwrap().expected_transit_time(), 45_000);
        assert!(out.iter().any(|o| matches!(o, Outbound::Air(Message::Instruction(_)))));
    }

    #[test]
    fn outflow_never_broadcasts_roadworks() {
        let mut s =
            SiteState::new(SiteRole::Outflow, StationId(51), STANDALONE, Some(StationId(50)), config(), PERIODS)
                .unwrap();
        for i in 0..10 {
            s.on_report(&straight_report(i, 50_000 + u64::from(i) * 1000));
        }
        for t in (0..20_000).step_by(100) {
            for o in s.site_tick(t) {
                assert!(matches!(o, Outbound::Backhaul { .. }));
            }
        }
    }

    #[test]
    fn outflow_update_reaches_inflow_den() {
        let mut inflow =
            SiteState::new(SiteRole::Inflow, StationId(50), STANDALONE, Some(StationId(51)), config(), PERIODS)
                .unwrap();
        let mut outflow =
            SiteState::new(SiteRole::Outflow, StationId(51), STANDALONE, Some(StationId(50)), config(), PERIODS)
                .unwrap();
        inflow.site_tick(0);
        for i in 0..10u32 {
            outflow.on_report(&straight_report(i, 55_000 + u64::from(i) * 1000));
        }
        let out = outflow.site_tick(0);
        let Some(Outbound::Backhaul { to, msg: Message::Aggregate(update) }) = out.first() else {
            panic!("expected aggregate update, got {out:?}");
        };
        assert_eq!(*to, StationId(50));
        assert!(inflow.on_aggregate(update));
        let out = inflow.site_tick(100);
        let den = out
            .iter()
            .find_map(|o| match o {
                Outbound::Air(Message::Den(d)) => Some(d),
                _ => None,
            })
            .unwrap();
        assert_eq!(den.detail().unwrap().expected_transit_time(), 59_000);
        assert_eq!(den.detail().unwrap().sample_count(), 10);
        assert_eq!(den.seq(), 2);
    }

    #[test]
    fn window_is_bounded() {
        let mut s = SiteState::new(SiteRole::Outflow, StationId(51), STANDALONE, None, config(), PERIODS).unwrap();
        for i in 0..25 {
            s.on_report(&straight_report(i, 1000 + u64::from(i)));
        }
        assert_eq!(s.reports().count(), 20);
        assert_eq!(s.reports().next().unwrap().reporter(), StationId(5));
    }
}
