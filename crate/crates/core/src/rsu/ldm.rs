//! Local dynamic map kept by an intersection RSU: a static layer (lanes,
//! signals, signs, reference paths) and a dynamic layer of participants,
//! both radio-equipped vehicles heard via CAM and non-equipped ones
//! injected as sensor detections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::{contains, Area, GeoPosition, Polyline};
use crate::messages::{
    ApproachSummary, CamMessage, LdmExcerpt, LdmParticipant, ParticipantClass, StationId, Timestamp, VehicleSnapshot,
};

/// Approach quadrant of `pos` as seen from `origin`: 0 for bearings in
/// [315°, 45°), 1 for [45°, 135°), 2 for [135°, 225°), 3 for [225°, 315°).
/// Evaluated with integer comparisons so boundaries are exact.
pub fn sector_of(origin: &GeoPosition, pos: &GeoPosition) -> u8 {
    let dx = pos.x - origin.x;
    let dy = pos.y - origin.y;
    if (dx == 0 && dy == 0) || (dy > 0 && -dy <= dx && dx < dy) {
        0
    } else if dx > 0 && -dx < dy && dy <= dx {
        1
    } else if dy < 0 && dy < dx && dx <= -dy {
        2
    } else {
        3
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticLayer {
    pub lanes: Vec<Polyline>,
    /// Lane count for each approach sector 0..=3.
    pub lane_count: [u8; 4],
    pub signal_positions: Vec<GeoPosition>,
    pub sign_positions: Vec<GeoPosition>,
    pub reference_paths: Vec<Polyline>,
    pub intersection_area: Option<Area>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalDynamicMap {
    pub static_layer: StaticLayer,
    dynamic: BTreeMap<u32, LdmParticipant>,
    staleness: u64,
}

impl LocalDynamicMap {
    pub fn new(static_layer: StaticLayer, staleness: u64) -> Self {
        LocalDynamicMap { static_layer, dynamic: BTreeMap::new(), staleness }
    }

    pub fn dynamic(&self) -> impl Iterator<Item = &LdmParticipant> {
        self.dynamic.values()
    }

    pub fn get(&self, id: u32) -> Option<&LdmParticipant> {
        self.dynamic.get(&id)
    }

    pub fn evict_stale(&mut self, now: Timestamp) {
        let bound = self.staleness;
        self.dynamic.retain(|_, p| p.observed_at + bound >= now);
    }

    /// Upserts the sender of a CAM; the newest CAM per station wins.
    pub fn ingest_cam(&mut self, cam: &CamMessage, now: Timestamp) {
        let entry = LdmParticipant {
            id: cam.source().0,
            class: ParticipantClass::EquippedVehicle,
            position: cam.position(),
            heading: cam.heading(),
            speed: cam.speed(),
            observed_at: now,
        };
        match self.dynamic.get(&entry.id) {
            Some(old) if old.observed_at > now => {}
            _ => {
                self.dynamic.insert(entry.id, entry);
            }
        }
    }

    /// Records a sensor detection of a participant.
    pub fn observe(&mut self, participant: LdmParticipant) {
        self.dynamic.insert(participant.id, participant);
    }

    fn equipped_in_sector(&self, origin: &GeoPosition, sector: u8) -> Vec<&LdmParticipant> {
        self.dynamic
            .values()
            .filter(|p| p.class == ParticipantClass::EquippedVehicle && sector_of(origin, &p.position) == sector)
            .collect()
    }

    /// Sectors holding at least one equipped vehicle.
    pub fn occupied_sectors(&mut self, origin: &GeoPosition, now: Timestamp) -> Vec<u8> {
        self.evict_stale(now);
        (0..4).filter(|s| !self.equipped_in_sector(origin, *s).is_empty()).collect()
    }

    /// Digest of the equipped vehicles in one approach; the `cap` nearest to
    /// the RSU are carried as snapshots.
    pub fn summarize_approach(
        &mut self,
        rsu: StationId,
        origin: &GeoPosition,
        sector: u8,
        now: Timestamp,
        cap: usize,
    ) -> ApproachSummary {
        self.evict_stale(now);
        let mut members = self.equipped_in_sector(origin, sector);
        members.sort_by_key(|p| (origin.distance_sq(&p.position), p.id));
        let nearest_distance = members.first().map(|p| origin.distance(&p.position).round() as u64).unwrap_or(0);
        let max_speed = members.iter().map(|p| p.speed).max().unwrap_or(0);
        let snapshots = members
            .iter()
            .take(cap)
            .map(|p| VehicleSnapshot { id: StationId(p.id), position: p.position, speed: p.speed, heading: p.heading })
            .collect();
        ApproachSummary::new(rsu, sector, members.len() as u32, nearest_distance, max_speed, snapshots, now)
            .expect("summary built from consistent members")
    }

    /// Reference paths touching the requesting approach plus the
    /// non-equipped participants inside the intersection area.
    pub fn ldm_excerpt(
        &mut self,
        rsu: StationId,
        origin: &GeoPosition,
        requestor_sector: u8,
        now: Timestamp,
    ) -> LdmExcerpt {
        self.evict_stale(now);
        let reference_paths = self
            .static_layer
            .reference_paths
            .iter()
            .filter(|path| path.points().iter().any(|pt| sector_of(origin, pt) == requestor_sector))
            .cloned()
            .collect();
        let area = self.static_layer.intersection_area.as_ref();
        let participants = self
            .dynamic
            .values()
            .filter(|p| p.class != ParticipantClass::EquippedVehicle)
            .filter(|p| area.is_none_or(|a| contains(a, &p.position)))
            .copied()
            .collect();
        LdmExcerpt::new(rsu, requestor_sector, reference_paths, participants, now)
            .expect("excerpt built from validated layers")
    }
}
