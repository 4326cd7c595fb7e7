//! Random generators and reference implementations shared by the
//! integration tests. The reference code is written from the definitions,
//! not from the library, and is deliberately naive.

#![allow(dead_code)]

use c2i_core::geo::{Area, GeoPosition, Heading, ObstructionSegment, Polyline};
use c2i_core::messages::{
    AggregateUpdate, ApproachSummary, CamDraft, CenterKind, CenterMessage, DenDraft, DenMessage, EventType, LdmExcerpt,
    LdmParticipant, MeasurementInstruction, MeasurementReport, Message, MessageId, ParticipantClass, RelevanceZone,
    RoadworksDetail, RsuKind, ServiceId, ServiceRequest, StationId, StationType, VehicleSnapshot,
};
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- generators

pub fn pos<R: Rng>(rng: &mut R, extent: i64) -> GeoPosition {
    GeoPosition::new(rng.gen_range(-extent..=extent), rng.gen_range(-extent..=extent))
}

pub fn heading<R: Rng>(rng: &mut R) -> Heading {
    Heading::from_decidegrees(rng.gen_range(0..3600)).unwrap()
}

pub fn polyline<R: Rng>(rng: &mut R, max_points: usize, extent: i64) -> Polyline {
    let n = rng.gen_range(2..=max_points.max(2));
    let mut pts = vec![pos(rng, extent)];
    while pts.len() < n {
        let p = pos(rng, extent);
        if Some(&p) != pts.last() {
            pts.push(p);
        }
    }
    Polyline::new(pts).unwrap()
}

/// Star-shaped polygon around `center`: vertices at sorted distinct angles,
/// which keeps the boundary simple.
pub fn star_polygon<R: Rng>(rng: &mut R, center: GeoPosition, max_radius: i64) -> Vec<GeoPosition> {
    loop {
        let n = rng.gen_range(3..=8);
        let mut angles: Vec<u32> = (0..360).collect();
        angles.shuffle(rng);
        let mut angles: Vec<u32> = angles.into_iter().take(n).collect();
        angles.sort_unstable();
        let verts: Vec<GeoPosition> = angles
            .iter()
            .map(|a| {
                let r = rng.gen_range(1..=max_radius) as f64;
                let t = (*a as f64).to_radians();
                GeoPosition::new(center.x + (r * t.cos()).round() as i64, center.y + (r * t.sin()).round() as i64)
            })
            .collect();
        if Area::polygon(verts.clone()).is_ok() {
            return verts;
        }
    }
}

pub fn area<R: Rng>(rng: &mut R, extent: i64) -> Area {
    let c = pos(rng, extent);
    if rng.gen_bool(0.5) {
        Area::circle(c, rng.gen_range(1..=extent)).unwrap()
    } else {
        Area::polygon(star_polygon(rng, c, extent)).unwrap()
    }
}

pub fn zone<R: Rng>(rng: &mut R, extent: i64) -> RelevanceZone {
    if rng.gen_bool(0.5) {
        RelevanceZone::TraceChain { chain: polyline(rng, 5, extent), lateral_max: rng.gen_range(1..=1000) }
    } else {
        RelevanceZone::PointWithDirection {
            point: pos(rng, extent),
            radius: rng.gen_range(1..=extent),
            direction: heading(rng),
        }
    }
}

pub fn station_type<R: Rng>(rng: &mut R) -> StationType {
    *[
        StationType::Car,
        StationType::Truck,
        StationType::Bus,
        StationType::Motorcycle,
        StationType::Rsu(RsuKind::Central),
        StationType::Rsu(RsuKind::Standalone),
    ]
    .choose(rng)
    .unwrap()
}

pub fn event<R: Rng>(rng: &mut R) -> EventType {
    match rng.gen_range(0..7) {
        0 => EventType::Roadworks,
        1 => EventType::Accident,
        2 => EventType::StrandedVehicle,
        3 => EventType::IceSlipperiness,
        4 => EventType::Congestion,
        5 => EventType::GeneralSlipperinessAdvisory,
        _ => EventType::Infotainment { service: ServiceId(rng.gen_range(0..20)) },
    }
}

pub fn detail<R: Rng>(rng: &mut R, extent: i64) -> RoadworksDetail {
    let count = rng.gen_range(0..30);
    let transit = if count == 0 { rng.gen_range(0..100_000) } else { rng.gen_range(1..100_000) };
    RoadworksDetail::new(polyline(rng, 8, extent), transit, count).unwrap()
}

pub fn den<R: Rng>(rng: &mut R, extent: i64) -> DenMessage {
    let event = event(rng);
    let station_type = if event == EventType::GeneralSlipperinessAdvisory {
        StationType::Rsu(RsuKind::Central)
    } else {
        station_type(rng)
    };
    let validity_area = area(rng, extent);
    let generated_at = rng.gen_range(0..1_000_000);
    DenDraft {
        message_id: MessageId { source: StationId(rng.gen_range(1..200)), seq: rng.gen_range(0..50) },
        station_type,
        event,
        event_position: validity_area.anchor(),
        validity_area,
        relevance_zone: zone(rng, extent),
        generated_at,
        expires_at: generated_at + rng.gen_range(1..200_000),
        detail: if rng.gen_bool(0.2) { Some(detail(rng, extent)) } else { None },
    }
    .build()
    .unwrap()
}

pub fn cam<R: Rng>(rng: &mut R, extent: i64) -> Message {
    Message::Cam(
        CamDraft {
            source: StationId(rng.gen()),
            station_type: station_type(rng),
            position: pos(rng, extent),
            speed: rng.gen_range(0..=7000),
            heading: heading(rng),
            length: rng.gen_range(1..3000),
            width: rng.gen_range(1..400),
            headlights_on: rng.gen(),
            generated_at: rng.gen_range(0..10_000_000),
        }
        .build()
        .unwrap(),
    )
}

fn participant<R: Rng>(rng: &mut R, extent: i64) -> LdmParticipant {
    LdmParticipant {
        id: rng.gen(),
        class: *[
            ParticipantClass::EquippedVehicle,
            ParticipantClass::UnequippedVehicle,
            ParticipantClass::Pedestrian,
            ParticipantClass::Bicycle,
        ]
        .choose(rng)
        .unwrap(),
        position: pos(rng, extent),
        heading: heading(rng),
        speed: rng.gen_range(0..3000),
        observed_at: rng.gen_range(0..1_000_000),
    }
}

fn gate<R: Rng>(rng: &mut R, extent: i64) -> (GeoPosition, GeoPosition) {
    let a = pos(rng, extent);
    loop {
        let b = pos(rng, extent);
        if b != a {
            return (a, b);
        }
    }
}

/// One random message of type `kind % 9`, in the order CAM, DEN, INSTR,
/// REPORT, SVCREQ, SUMMARY, LDM_EXCERPT, AGGREGATE, CENTER.
pub fn message<R: Rng>(rng: &mut R, kind: usize) -> Message {
    let e = 1_000_000;
    match kind % 9 {
        0 => cam(rng, e),
        1 => Message::Den(den(rng, e)),
        2 => Message::Instruction(
            MeasurementInstruction::new(
                StationId(rng.gen()),
                rng.gen(),
                gate(rng, e),
                gate(rng, e),
                rng.gen_range(1..5000),
            )
            .unwrap(),
        ),
        3 => Message::Report(
            MeasurementReport::new(StationId(rng.gen()), rng.gen(), rng.gen_range(1..1_000_000), polyline(rng, 30, e))
                .unwrap(),
        ),
        4 => Message::ServiceRequest(
            ServiceRequest::new(StationId(rng.gen()), ServiceId(rng.gen()), rng.gen_range(1..100_000)).unwrap(),
        ),
        5 => {
            let snaps: Vec<VehicleSnapshot> = (0..rng.gen_range(0..5))
                .map(|_| VehicleSnapshot {
                    id: StationId(rng.gen()),
                    position: pos(rng, e),
                    speed: rng.gen_range(0..7000),
                    heading: heading(rng),
                })
                .collect();
            let count = snaps.len() as u32 + rng.gen_range(0..5);
            Message::Summary(
                ApproachSummary::new(
                    StationId(rng.gen()),
                    rng.gen_range(0..4),
                    count,
                    rng.gen_range(0..100_000),
                    rng.gen_range(0..7000),
                    snaps,
                    rng.gen_range(0..1_000_000),
                )
                .unwrap(),
            )
        }
        6 => {
            let paths = (0..rng.gen_range(0..4)).map(|_| polyline(rng, 5, e)).collect();
            let parts = (0..rng.gen_range(0..4)).map(|_| participant(rng, e)).collect();
            Message::LdmExcerpt(
                LdmExcerpt::new(StationId(rng.gen()), rng.gen_range(0..4), paths, parts, rng.gen_range(0..1_000_000))
                    .unwrap(),
            )
        }
        7 => Message::Aggregate(AggregateUpdate::new(StationId(rng.gen()), rng.gen(), detail(rng, e)).unwrap()),
        _ => {
            let kind = match rng.gen_range(0..4) {
                0 => CenterKind::RoadworksNotice,
                1 => CenterKind::WeatherAdvisory,
                2 => CenterKind::CongestionNotice,
                _ => CenterKind::InfotainmentContent { service: ServiceId(rng.gen_range(0..20)) },
            };
            Message::Center(
                CenterMessage::new(
                    kind,
                    area(rng, e),
                    zone(rng, e),
                    rng.gen_range(1..50_000),
                    rng.gen_range(1..1_000_000),
                )
                .unwrap(),
            )
        }
    }
}

pub fn obstruction<R: Rng>(rng: &mut R, extent: i64) -> ObstructionSegment {
    let (a, b) = gate(rng, extent);
    ObstructionSegment::new(a, b).unwrap()
}

// ------------------------------------------------------------------- oracles

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    (a.0 - o.0) as i128 * (b.1 - o.1) as i128 - (a.1 - o.1) as i128 * (b.0 - o.0) as i128
}

fn xy(p: &GeoPosition) -> (i64, i64) {
    (p.x, p.y)
}

/// p lies on the closed segment a-b.
pub fn oracle_on_segment(p: &GeoPosition, a: &GeoPosition, b: &GeoPosition) -> bool {
    cross(xy(a), xy(b), xy(p)) == 0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Closed containment: boundary points count as inside. Polygons use
/// even-odd ray casting towards +x with exact rational comparisons.
pub fn oracle_contains(area: &Area, p: &GeoPosition) -> bool {
    match area {
        Area::Circle { center, radius } => {
            let dx = (p.x - center.x) as i128;
            let dy = (p.y - center.y) as i128;
            dx * dx + dy * dy <= (*radius as i128) * (*radius as i128)
        }
        Area::Polygon { vertices } => {
            let n = vertices.len();
            let mut inside = false;
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                if oracle_on_segment(p, &a, &b) {
                    return true;
                }
                if (a.y > p.y) != (b.y > p.y) {
                    // x of the edge at height p.y, compared with p.x without division
                    let num = (p.y - a.y) as i128 * (b.x - a.x) as i128;
                    let den = (b.y - a.y) as i128;
                    let lhs = (p.x - a.x) as i128 * den;
                    let left_of_edge = if den > 0 { lhs < num } else { lhs > num };
                    if left_of_edge {
                        inside = !inside;
                    }
                }
            }
            inside
        }
    }
}

/// Distance from p to segment a-b by clamped projection in f64.
pub fn oracle_segment_distance(p: &GeoPosition, a: &GeoPosition, b: &GeoPosition) -> f64 {
    let (px, py) = (p.x as f64, p.y as f64);
    let (ax, ay) = (a.x as f64, a.y as f64);
    let (bx, by) = (b.x as f64, b.y as f64);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

pub fn oracle_polyline_distance(p: &GeoPosition, line: &Polyline) -> f64 {
    line.points().windows(2).map(|w| oracle_segment_distance(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
}

/// Closed segments a-b and c-d share at least one point.
fn closed_intersect(a: &GeoPosition, b: &GeoPosition, c: &GeoPosition, d: &GeoPosition) -> bool {
    let d1 = cross(xy(c), xy(d), xy(a)).signum();
    let d2 = cross(xy(c), xy(d), xy(b)).signum();
    let d3 = cross(xy(a), xy(b), xy(c)).signum();
    let d4 = cross(xy(a), xy(b), xy(d)).signum();
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    oracle_on_segment(a, c, d) || oracle_on_segment(b, c, d) || oracle_on_segment(c, a, b) || oracle_on_segment(d, a, b)
}

/// Visibility along the open segment a-b: blocked when some obstruction
/// shares a point with it other than a or b themselves.
pub fn oracle_line_of_sight(a: &GeoPosition, b: &GeoPosition, obstructions: &[ObstructionSegment]) -> bool {
    if a == b {
        return true;
    }
    for o in obstructions {
        let (c, d) = (o.a, o.b);
        if !closed_intersect(a, b, &c, &d) {
            continue;
        }
        let collinear = cross(xy(a), xy(b), xy(&c)) == 0 && cross(xy(a), xy(b), xy(&d)) == 0;
        if collinear {
            // parameters of c and d along a-b, scaled by |ab|^2
            let (ux, uy) = ((b.x - a.x) as i128, (b.y - a.y) as i128);
            let l2 = ux * ux + uy * uy;
            let tc = (c.x - a.x) as i128 * ux + (c.y - a.y) as i128 * uy;
            let td = (d.x - a.x) as i128 * ux + (d.y - a.y) as i128 * uy;
            let (lo, hi) = (tc.min(td), tc.max(td));
            if lo < l2 && hi > 0 {
                return false;
            }
        } else if !oracle_on_segment(a, &c, &d) && !oracle_on_segment(b, &c, &d) {
            return false;
        }
    }
    true
}

pub fn oracle_lower_median(values: &[u64]) -> Option<u64> {
    let mut v = values.to_vec();
    v.sort();
    if v.is_empty() {
        None
    } else {
        Some(v[(v.len() - 1) / 2])
    }
}

/// `k` points at equal arc-length spacing along `pts`, by walking the
/// cumulative distance table.
pub fn oracle_resample(pts: &[GeoPosition], k: usize) -> Vec<(f64, f64)> {
    let mut cum = vec![0.0f64];
    for w in pts.windows(2) {
        let d = (((w[1].x - w[0].x) as f64).powi(2) + ((w[1].y - w[0].y) as f64).powi(2)).sqrt();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    (0..k)
        .map(|i| {
            let s = total * i as f64 / (k - 1) as f64;
            let j = (1..cum.len()).find(|&j| cum[j] >= s).unwrap_or(cum.len() - 1);
            let (a, b) = (pts[j - 1], pts[j]);
            let seg = cum[j] - cum[j - 1];
            let f = if seg == 0.0 { 0.0 } else { ((s - cum[j - 1]) / seg).clamp(0.0, 1.0) };
            (a.x as f64 + f * (b.x - a.x) as f64, a.y as f64 + f * (b.y - a.y) as f64)
        })
        .collect()
}

/// Per-index mean of the resampled traces, rounded to whole centimeters.
pub fn oracle_mean_geometry(traces: &[&Polyline], k: usize) -> Vec<(i64, i64)> {
    let n = traces.len() as f64;
    let mut sums = vec![(0.0, 0.0); k];
    for t in traces {
        for (s, p) in sums.iter_mut().zip(oracle_resample(t.points(), k)) {
            s.0 += p.0;
            s.1 += p.1;
        }
    }
    sums.into_iter().map(|(x, y)| ((x / n).round() as i64, (y / n).round() as i64)).collect()
}
