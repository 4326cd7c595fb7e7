//! Planar geometry on an integer centimeter grid.
//!
//! All scenario coordinates are local Cartesian offsets from a scenario
//! origin, so containment, on-segment and intersection tests are exact
//! integer predicates. Distances are returned as `f64` centimeters.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest absolute coordinate value accepted in a scenario.
pub const COORD_LIMIT: i64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("coordinate ({0}, {1}) outside the scenario extent")]
    OutOfExtent(i64, i64),
    #[error("polyline needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline repeats point at index {0}")]
    RepeatedPoint(usize),
    #[error("heading {0} decidegrees not in [0, 3600)")]
    HeadingRange(u32),
    #[error("circle radius must be positive, got {0}")]
    NonPositiveRadius(i64),
    #[error("polygon needs at least three vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon is not simple")]
    SelfIntersecting,
    #[error("degenerate segment at ({0}, {1})")]
    DegenerateSegment(i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct GeoPosition {
    pub x: i64,
    pub y: i64,
}

impl GeoPosition {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.x.abs() > COORD_LIMIT || self.y.abs() > COORD_LIMIT {
            return Err(GeoError::OutOfExtent(self.x, self.y));
        }
        Ok(())
    }

    pub fn distance_sq(&self, other: &GeoPosition) -> i128 {
        let dx = (other.x - self.x) as i128;
        let dy = (other.y - self.y) as i128;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &GeoPosition) -> f64 {
        (self.distance_sq(other) as f64).sqrt()
    }

    pub fn translate(&self, dx: i64, dy: i64) -> GeoPosition {
        GeoPosition::new(self.x + dx, self.y + dy)
    }
}

impl From<[i64; 2]> for GeoPosition {
    fn from(v: [i64; 2]) -> Self {
        GeoPosition::new(v[0], v[1])
    }
}

impl From<GeoPosition> for [i64; 2] {
    fn from(p: GeoPosition) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for GeoPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Direction clockwise from north, stored in tenths of a degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Heading(u16);

impl Heading {
    pub const NORTH: Heading = Heading(0);
    pub const EAST: Heading = Heading(900);
    pub const SOUTH: Heading = Heading(1800);
    pub const WEST: Heading = Heading(2700);

    pub fn from_decidegrees(d: u32) -> Result<Self, GeoError> {
        if d >= 3600 {
            return Err(GeoError::HeadingRange(d));
        }
        Ok(Heading(d as u16))
    }

    /// Normalizes any real angle into `[0, 360)` and rounds to a tenth.
    pub fn from_degrees(deg: f64) -> Self {
        let tenths = (deg * 10.0).round() as i64;
        Heading(tenths.rem_euclid(3600) as u16)
    }

    /// Heading of the vector (dx east, dy north).
    pub fn of_vector(dx: i64, dy: i64) -> Self {
        Heading::from_degrees((dx as f64).atan2(dy as f64).to_degrees())
    }

    pub fn between(from: &GeoPosition, to: &GeoPosition) -> Self {
        Heading::of_vector(to.x - from.x, to.y - from.y)
    }

    pub fn decidegrees(self) -> u16 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    /// Smallest angle between two headings, in `[0, 180]` degrees.
    pub fn difference(self, other: Heading) -> f64 {
        let d = (i32::from(self.0) - i32::from(other.0)).rem_euclid(3600);
        f64::from(d.min(3600 - d)) / 10.0
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.0 >= 3600 {
            return Err(GeoError::HeadingRange(u32::from(self.0)));
        }
        Ok(())
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}°", self.degrees())
    }
}

/// Ordered chain of at least two distinct consecutive points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polyline(Vec<GeoPosition>);

impl Polyline {
    pub fn new(points: Vec<GeoPosition>) -> Result<Self, GeoError> {
        let line = Polyline(points);
        line.validate()?;
        Ok(line)
    }

    /// Drops consecutive repeats before validating.
    pub fn new_dedup(mut points: Vec<GeoPosition>) -> Result<Self, GeoError> {
        points.dedup();
        Polyline::new(points)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.0.len() < 2 {
            return Err(GeoError::TooFewPoints(self.0.len()));
        }
        for p in &self.0 {
            p.validate()?;
        }
        if let Some(i) = self.0.windows(2).position(|w| w[0] == w[1]) {
            return Err(GeoError::RepeatedPoint(i + 1));
        }
        Ok(())
    }

    pub fn points(&self) -> &[GeoPosition] {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = (GeoPosition, GeoPosition)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.segments().map(|(a, b)| a.distance(&b)).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Point at arc length `s` along the chain, clamped to the ends.
    pub fn point_at(&self, s: f64) -> (f64, f64) {
        let (idx, frac) = self.locate(s);
        let a = self.0[idx];
        let b = self.0[idx + 1];
        (a.x as f64 + (b.x - a.x) as f64 * frac, a.y as f64 + (b.y - a.y) as f64 * frac)
    }

    /// Grid position at arc length `s`, rounded to the nearest centimeter.
    pub fn position_at(&self, s: f64) -> GeoPosition {
        let (x, y) = self.point_at(s);
        GeoPosition::new(x.round() as i64, y.round() as i64)
    }

    /// Heading of the segment containing arc length `s`.
    pub fn heading_at(&self, s: f64) -> Heading {
        let (idx, _) = self.locate(s);
        Heading::between(&self.0[idx], &self.0[idx + 1])
    }

    /// Segment index and fractional offset within it for arc length `s`.
    fn locate(&self, s: f64) -> (usize, f64) {
        let lengths = self.segment_lengths();
        let mut remaining = s.max(0.0);
        for (i, len) in lengths.iter().enumerate() {
            if remaining <= *len || i + 1 == lengths.len() {
                return (i, (remaining / len).min(1.0));
            }
            remaining -= len;
        }
        unreachable!("polyline has at least one segment")
    }

    /// `count` points equally spaced by arc length, endpoints included.
    pub fn resample(&self, count: usize) -> Vec<(f64, f64)> {
        assert!(count >= 2, "resample needs at least two points");
        let total = self.length();
        let lengths = self.segment_lengths();
        let mut out = Vec::with_capacity(count);
        let mut seg = 0usize;
        let mut seg_start = 0.0;
        for i in 0..count {
            let target = total * i as f64 / (count - 1) as f64;
            while seg + 1 < lengths.len() && target > seg_start + lengths[seg] {
                seg_start += lengths[seg];
                seg += 1;
            }
            let a = self.0[seg];
            let b = self.0[seg + 1];
            let frac = ((target - seg_start) / lengths[seg]).clamp(0.0, 1.0);
            out.push((a.x as f64 + (b.x - a.x) as f64 * frac, a.y as f64 + (b.y - a.y) as f64 * frac));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Area {
    Circle { center: GeoPosition, radius: i64 },
    Polygon { vertices: Vec<GeoPosition> },
}

impl Area {
    pub fn circle(center: GeoPosition, radius: i64) -> Result<Self, GeoError> {
        let a = Area::Circle { center, radius };
        a.validate()?;
        Ok(a)
    }

    pub fn polygon(vertices: Vec<GeoPosition>) -> Result<Self, GeoError> {
        let a = Area::Polygon { vertices };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        match self {
            Area::Circle { center, radius } => {
                center.validate()?;
                if *radius <= 0 {
                    return Err(GeoError::NonPositiveRadius(*radius));
                }
                Ok(())
            }
            Area::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(GeoError::TooFewVertices(vertices.len()));
                }
                for v in vertices {
                    v.validate()?;
                }
                if !polygon_is_simple(vertices) {
                    return Err(GeoError::SelfIntersecting);
                }
                Ok(())
            }
        }
    }

    /// A point guaranteed to lie in the area.
    pub fn anchor(&self) -> GeoPosition {
        match self {
            Area::Circle { center, .. } => *center,
            Area::Polygon { vertices } => {
                let n = vertices.len() as i64;
                let cx = vertices.iter().map(|v| v.x).sum::<i64>() / n;
                let cy = vertices.iter().map(|v| v.y).sum::<i64>() / n;
                let c = GeoPosition::new(cx, cy);
                if contains(self, &c) {
                    c
                } else {
                    vertices[0]
                }
            }
        }
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Area {
        match self {
            Area::Circle { center, radius } => Area::Circle { center: center.translate(dx, dy), radius: *radius },
            Area::Polygon { vertices } => {
                Area::Polygon { vertices: vertices.iter().map(|v| v.translate(dx, dy)).collect() }
            }
        }
    }
}

fn polygon_is_simple(vertices: &[GeoPosition]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if vertices[i] == vertices[j] {
                return false;
            }
        }
    }
    let edge = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges share one vertex; they must not fold back onto each other.
                let shared = if j == i + 1 { b } else { a };
                let other_a = if shared == a { b } else { a };
                let other_c = if shared == c { d } else { c };
                if orient(&shared, &other_a, &other_c) == 0 && dot(&shared, &other_a, &other_c) > 0 {
                    return false;
                }
            } else if segments_intersect(&a, &b, &c, &d) {
                return false;
            }
        }
    }
    true
}

/// Radio-blocking wall segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[GeoPosition; 2]", into = "[GeoPosition; 2]")]
pub struct ObstructionSegment {
    pub a: GeoPosition,
    pub b: GeoPosition,
}

impl ObstructionSegment {
    pub fn new(a: GeoPosition, b: GeoPosition) -> Result<Self, GeoError> {
        let s = ObstructionSegment { a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        self.a.validate()?;
        self.b.validate()?;
        if self.a == self.b {
            return Err(GeoError::DegenerateSegment(self.a.x, self.a.y));
        }
        Ok(())
    }
}

impl From<[GeoPosition; 2]> for ObstructionSegment {
    fn from(v: [GeoPosition; 2]) -> Self {
        ObstructionSegment { a: v[0], b: v[1] }
    }
}

impl From<ObstructionSegment> for [GeoPosition; 2] {
    fn from(s: ObstructionSegment) -> Self {
        [s.a, s.b]
    }
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
pub fn orient(a: &GeoPosition, b: &GeoPosition, c: &GeoPosition) -> i128 {
    let abx = (b.x - a.x) as i128;
    let aby = (b.y - a.y) as i128;
    let acx = (c.x - a.x) as i128;
    let acy = (c.y - a.y) as i128;
    abx * acy - aby * acx
}

/// Dot product of (b - a) and (c - a).
fn dot(a: &GeoPosition, b: &GeoPosition, c: &GeoPosition) -> i128 {
    let abx = (b.x - a.x) as i128;
    let aby = (b.y - a.y) as i128;
    let acx = (c.x - a.x) as i128;
    let acy = (c.y - a.y) as i128;
    abx * acx + aby * acy
}

/// Whether `p` lies on the closed segment a–b.
pub fn on_segment(p: &GeoPosition, a: &GeoPosition, b: &GeoPosition) -> bool {
    orient(a, b, p) == 0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test.
pub fn segments_intersect(a: &GeoPosition, b: &GeoPosition, c: &GeoPosition, d: &GeoPosition) -> bool {
    let o1 = orient(a, b, c).signum();
    let o2 = orient(a, b, d).signum();
    let o3 = orient(c, d, a).signum();
    let o4 = orient(c, d, b).signum();
    if o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0 {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

/// Euclidean distance from `p` to the closed segment a–b. Exactly zero iff
/// `p` lies on the segment.
pub fn point_segment_distance(p: &GeoPosition, a: &GeoPosition, b: &GeoPosition) -> f64 {
    if on_segment(p, a, b) {
        return 0.0;
    }
    let len_sq = a.distance_sq(b);
    let t = dot(a, b, p);
    if t <= 0 {
        return p.distance(a);
    }
    if t >= len_sq {
        return p.distance(b);
    }
    let cross = orient(a, b, p) as f64;
    cross.abs() / (len_sq as f64).sqrt()
}

/// Index of the nearest segment and the distance to it; ties go to the lowest index.
pub fn nearest_segment(p: &GeoPosition, line: &Polyline) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, (a, b)) in line.segments().enumerate() {
        let d = point_segment_distance(p, &a, &b);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn distance_to_polyline(p: &GeoPosition, line: &Polyline) -> f64 {
    nearest_segment(p, line).1
}

pub fn segment_heading_at_nearest(p: &GeoPosition, line: &Polyline) -> Heading {
    let (i, _) = nearest_segment(p, line);
    let pts = line.points();
    Heading::between(&pts[i], &pts[i + 1])
}

/// Boundary-inclusive point-in-area test.
pub fn contains(area: &Area, p: &GeoPosition) -> bool {
    match area {
        Area::Circle { center, radius } => {
            let r = *radius as i128;
            center.distance_sq(p) <= r * r
        }
        Area::Polygon { vertices } => polygon_contains(vertices, p),
    }
}

fn polygon_contains(vertices: &[GeoPosition], p: &GeoPosition) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            // Edge straddles the horizontal through p; is the crossing to the right of p?
            // p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y), multiplied through.
            let num = (p.y - a.y) as i128 * (b.x - a.x) as i128;
            let den = (b.y - a.y) as i128;
            let lhs = (p.x - a.x) as i128 * den;
            let right = if den > 0 { lhs < num } else { lhs > num };
            if right {
                inside = !inside;
            }
        }
    }
    inside
}

/// True iff the open segment a–b touches no obstruction (obstruction
/// endpoints count as blocking).
pub fn line_of_sight(a: &GeoPosition, b: &GeoPosition, obstructions: &[ObstructionSegment]) -> bool {
    if a == b {
        return true;
    }
    !obstructions.iter().any(|o| open_segment_hits(a, b, &o.a, &o.b))
}

fn open_segment_hits(a: &GeoPosition, b: &GeoPosition, c: &GeoPosition, d: &GeoPosition) -> bool {
    let o1 = orient(a, b, c).signum();
    let o2 = orient(a, b, d).signum();
    if o1 == 0 && o2 == 0 {
        // Collinear: does the closed interval [c, d] meet the open interval (a, b)?
        let len = a.distance_sq(b);
        let tc = dot(a, b, c);
        let td = dot(a, b, d);
        return tc.max(td) > 0 && tc.min(td) < len;
    }
    let o3 = orient(c, d, a).signum();
    let o4 = orient(c, d, b).signum();
    // A crossing exactly at a or b lies outside the open segment.
    o1 * o2 <= 0 && o3 * o4 < 0
}
