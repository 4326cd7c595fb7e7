//! Roadside unit behavior.
//!
//! An [`Rsu`] is a single actor driven by the engine: it hears air
//! messages, receives center records and backhaul updates, and on every
//! tick returns the messages it wants to send.

pub mod gateway;
pub mod ldm;
pub mod services;
pub mod site;
pub mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::GeoPosition;
use crate::messages::{
    CamDraft, CamMessage, CenterMessage, DenMessage, EventType, LdmParticipant, Message, RsuKind, StationId,
    StationType, Timestamp,
};
use crate::reception::{check_geographic, check_temporal};

pub use gateway::{translate_center, GatewayError};
pub use ldm::{sector_of, LocalDynamicMap, StaticLayer};
pub use services::ServiceRegistry;
pub use site::{aggregate_site, lower_median, SiteConfig, SiteError, SitePeriods, SiteRole, SiteState};
pub use store::{AdaptivePeriod, MessageStore, StoreError, Stored, StoredMessage};

/// A message an RSU wants sent.
#[derive(Debug, Clone, PartialEq)]
pub enum Outbound {
    Air(Message),
    Backhaul { to: StationId, msg: Message },
}

/// What an RSU does with the CAMs it hears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CamHandling {
    /// Only feeds the local dynamic map.
    #[default]
    Off,
    /// Rebroadcasts every vehicle CAM unchanged.
    Relay,
    /// Broadcasts one approach summary per occupied sector.
    Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RsuParams {
    pub rebroadcast_period: u64,
    pub rebroadcast_ceiling: u64,
    pub cam_period: u64,
    pub summary_period: u64,
    pub summary_snapshots: usize,
    pub ldm_period: u64,
    pub ldm_staleness: u64,
    pub cam_handling: CamHandling,
    /// Send local dynamic map excerpts to occupied approaches.
    pub excerpts: bool,
}

#[derive(Debug, Clone)]
pub struct Rsu {
    pub id: StationId,
    pub kind: RsuKind,
    pub position: GeoPosition,
    params: RsuParams,
    store: MessageStore,
    adaptive: AdaptivePeriod,
    registry: ServiceRegistry,
    ldm: LocalDynamicMap,
    site: Option<SiteState>,
    next_seq: u32,
    relay_queue: Vec<CamMessage>,
    relayed: BTreeMap<StationId, Timestamp>,
    last_summary: Option<Timestamp>,
    last_excerpt: Option<Timestamp>,
}

impl Rsu {
    pub fn new(
        id: StationId,
        kind: RsuKind,
        position: GeoPosition,
        params: RsuParams,
        static_layer: StaticLayer,
    ) -> Self {
        Rsu {
            id,
            kind,
            position,
            store: MessageStore::new(params.rebroadcast_period),
            adaptive: AdaptivePeriod::new(params.rebroadcast_period, params.rebroadcast_ceiling),
            registry: ServiceRegistry::new(),
            ldm: LocalDynamicMap::new(static_layer, params.ldm_staleness),
            site: None,
            next_seq: 1,
            relay_queue: Vec::new(),
            relayed: BTreeMap::new(),
            last_summary: None,
            last_excerpt: None,
            params,
        }
    }

    pub fn with_site(mut self, site: SiteState) -> Self {
        self.site = Some(site);
        self
    }

    pub fn station_type(&self) -> StationType {
        StationType::Rsu(self.kind)
    }

    pub fn params(&self) -> &RsuParams {
        &self.params
    }

    pub fn store(&self) -> &MessageStore {
        &self.store
    }

    pub fn registry(&self) -> &ServiceRegistry {
        &self.registry
    }

    pub fn ldm(&self) -> &LocalDynamicMap {
        &self.ldm
    }

    pub fn site(&self) -> Option<&SiteState> {
        self.site.as_ref()
    }

    pub fn rebroadcast_period(&self) -> u64 {
        self.store.period()
    }

    pub fn emit_cam(&self, now: Timestamp) -> CamMessage {
        CamDraft {
            source: self.id,
            station_type: self.station_type(),
            position: self.position,
            speed: 0,
            heading: crate::geo::Heading::NORTH,
            length: 100,
            width: 100,
            headlights_on: false,
            generated_at: now,
        }
        .build()
        .expect("RSU position validated at load")
    }

    /// An RSU keeps a DEN only while it is valid and the RSU sits inside
    /// its validity area.
    pub fn accepts_for_store(&self, den: &DenMessage, now: Timestamp) -> bool {
        check_temporal(den, now) && check_geographic(den, &self.position)
    }

    pub fn on_receive(&mut self, msg: &Message, now: Timestamp) {
        match msg {
            Message::Cam(cam) => {
                if cam.station_type().is_rsu() {
                    return;
                }
                self.ldm.ingest_cam(cam, now);
                if self.params.cam_handling == CamHandling::Relay {
                    let fresh = self.relayed.get(&cam.source()).is_none_or(|t| cam.generated_at() > *t);
                    if fresh {
                        self.relayed.insert(cam.source(), cam.generated_at());
                        self.relay_queue.push(cam.clone());
                    }
                }
            }
            Message::Den(den) => {
                if den.source() != self.id && self.accepts_for_store(den, now) {
                    let _ = self.store.store(den, now);
                }
            }
            Message::ServiceRequest(req) => self.registry.register(req, now),
            Message::Report(report) => {
                if let Some(site) = &mut self.site {
                    site.on_report(report);
                }
            }
            _ => {}
        }
    }

    fn on_air(&mut self, den: &DenMessage, now: Timestamp) -> bool {
        match den.event() {
            EventType::Infotainment { service } => self.registry.is_active(service, now),
            _ => true,
        }
    }

    /// Translates a center record, stores the DEN and sends it right away
    /// unless its infotainment service is paused.
    pub fn on_center(&mut self, msg: &CenterMessage, now: Timestamp) -> Result<Vec<Outbound>, GatewayError> {
        let den = translate_center(msg, self.id, self.station_type(), self.next_seq, now)?;
        self.next_seq += 1;
        let _ = self.store.store(&den, now);
        if self.on_air(&den, now) {
            self.store.mark_broadcast(den.message_id(), now);
            Ok(vec![Outbound::Air(Message::Den(den))])
        } else {
            Ok(Vec::new())
        }
    }

    pub fn on_backhaul(&mut self, msg: &Message) {
        if let (Message::Aggregate(update), Some(site)) = (msg, &mut self.site) {
            site.on_aggregate(update);
        }
    }

    pub fn observe(&mut self, participant: LdmParticipant) {
        self.ldm.observe(participant);
    }

    pub fn evict_expired(&mut self, now: Timestamp) {
        self.store.evict_expired(now);
        self.registry.evict_expired(now);
        self.ldm.evict_stale(now);
    }

    /// Adjusts the rebroadcast period from the safety channel's offered load.
    pub fn adapt(&mut self, load_fraction: f64) -> u64 {
        let period = self.adaptive.adapt(load_fraction);
        self.store.set_period(period);
        period
    }

    fn due(last: Option<Timestamp>, period: u64, now: Timestamp) -> bool {
        last.is_none_or(|t| now.saturating_sub(t) >= period)
    }

    pub fn tick(&mut self, now: Timestamp) -> Vec<Outbound> {
        let mut out = Vec::new();
        self.registry.evict_expired(now);
        let registry = &self.registry;
        let replay = self.store.replay_due_where(now, |den| match den.event() {
            EventType::Infotainment { service } => registry.registrations(service).is_some(),
            _ => true,
        });
        out.extend(replay.into_iter().map(|d| Outbound::Air(Message::Den(d))));

        out.extend(self.relay_queue.drain(..).map(|c| Outbound::Air(Message::Cam(c))));

        if self.params.cam_handling == CamHandling::Summary
            && Self::due(self.last_summary, self.params.summary_period, now)
        {
            self.last_summary = Some(now);
            for sector in self.ldm.occupied_sectors(&self.position, now) {
                let s =
                    self.ldm.summarize_approach(self.id, &self.position, sector, now, self.params.summary_snapshots);
                out.push(Outbound::Air(Message::Summary(s)));
            }
        }

        if self.params.excerpts && Self::due(self.last_excerpt, self.params.ldm_period, now) {
            self.last_excerpt = Some(now);
            for sector in self.ldm.occupied_sectors(&self.position, now) {
                let e = self.ldm.ldm_excerpt(self.id, &self.position, sector, now);
                out.push(Outbound::Air(Message::LdmExcerpt(e)));
            }
        }

        if let Some(site) = &mut self.site {
            out.extend(site.site_tick(now));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Area, Heading, Polyline};
    use crate::messages::{CenterKind, DenDraft, MessageId, RelevanceZone, ServiceId, ServiceRequest};

    fn p(x: i64, y: i64) -> GeoPosition {
        GeoPosition::new(x, y)
    }

    fn params(mode: CamHandling) -> RsuParams {
        RsuParams {
            rebroadcast_period: 1000,
            rebroadcast_ceiling: 8000,
            cam_period: 500,
            summary_period: 500,
            summary_snapshots: 3,
            ldm_period: 1000,
            ldm_staleness: 2000,
            cam_handling: mode,
            excerpts: false,
        }
    }

    fn rsu(mode: CamHandling) -> Rsu {
        Rsu::new(StationId(100), RsuKind::Central, p(0, 0), params(mode), StaticLayer::default())
    }

    fn zone() -> RelevanceZone {
        RelevanceZone::TraceChain { chain: Polyline::new(vec![p(-10_000, 0), p(10_000, 0)]).unwrap(), lateral_max: 500 }
    }

    fn accident(source: u32, expires_at: u64) -> DenMessage {
        DenDraft {
            message_id: MessageId { source: StationId(source), seq: 1 },
            station_type: StationType::Car,
            event: EventType::Accident,
            event_position: p(1000, 0),
            validity_area: Area::circle(p(0, 0), 50_000).unwrap(),
            relevance_zone: zone(),
            generated_at: 0,
            expires_at,
            detail: None,
        }
        .build()
        .unwrap()
    }

    fn vehicle_cam(id: u32, pos: GeoPosition, at: u64) -> Message {
        Message::Cam(
            CamDraft {
                source: StationId(id),
                station_type: StationType::Car,
                position: pos,
                speed: 800,
                heading: Heading::SOUTH,
                length: 450,
                width: 180,
                headlights_on: true,
                generated_at: at,
            }
            .build()
            .unwrap(),
        )
    }

    #[test]
    fn store_and_replay_received_den() {
        let mut r = rsu(CamHandling::Off);
        r.on_receive(&Message::Den(accident(1, 60_000)), 0);
        assert!(r.tick(500).is_empty());
        let out = r.tick(1000);
        assert_eq!(out, vec![Outbound::Air(Message::Den(accident(1, 60_000)))]);
        r.evict_expired(60_001);
        assert!(r.store().is_empty());
    }

    #[test]
    fn den_outside_validity_not_stored() {
        let mut r =
            Rsu::new(StationId(100), RsuKind::Central, p(90_000, 0), params(CamHandling::Off), StaticLayer::default());
        r.on_receive(&Message::Den(accident(1, 60_000)), 0);
        assert!(r.store().is_empty());
    }

    #[test]
    fn paused_infotainment_not_emitted() {
        let mut r = rsu(CamHandling::Off);
        let msg = CenterMessage::new(
            CenterKind::InfotainmentContent { service: ServiceId(7) },
            Area::circle(p(0, 0), 50_000).unwrap(),
            zone(),
            5000,
            100_000,
        )
        .unwrap();
        assert!(r.on_center(&msg, 0).unwrap().is_empty());
        assert!(r.tick(1000).is_empty());
        r.on_receive(&Message::ServiceRequest(ServiceRequest::new(StationId(3), ServiceId(7), 2000).unwrap()), 1000);
        let out = r.tick(1100);
        assert_eq!(out.len(), 1);
        assert!(matches!(&out[0], Outbound::Air(m) if m.is_infotainment()));
        // Registration lapses at 3000; nothing after that.
        assert!(r.tick(3100).is_empty());
        assert!(r.tick(5000).is_empty());
    }

    #[test]
    fn relay_and_summary_modes() {
        let mut relay = rsu(CamHandling::Relay);
        let mut summary = rsu(CamHandling::Summary);
        for i in 0..10u32 {
            let cam = vehicle_cam(i + 1, p(-175, 5000 + 3000 * i64::from(i)), 0);
            relay.on_receive(&cam, 0);
            relay.on_receive(&cam, 0);
            summary.on_receive(&cam, 0);
        }
        let relayed = relay.tick(100);
        assert_eq!(relayed.len(), 10);
        let summarized = summary.tick(100);
        assert_eq!(summarized.len(), 1);
        let Outbound::Air(Message::Summary(s)) = &summarized[0] else { panic!() };
        assert_eq!(s.vehicle_count(), 10);
        assert_eq!(s.snapshots().len(), 3);
        assert_eq!(s.sector(), 0);
    }

    #[test]
    fn adaptivity_updates_store_period() {
        let mut r = rsu(CamHandling::Off);
        assert_eq!(r.adapt(0.9), 2000);
        assert_eq!(r.rebroadcast_period(), 2000);
        assert_eq!(r.adapt(0.2), 1000);
    }
}
