use std::f64::consts::{PI, TAU};

use thiserror::Error;

use super::MatchParams;

const MIN_SEGMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Shape of a point triple as seen from its first point: the directed angle
/// from segment p1->p2 to segment p1->p3, and |p1p2| / |p1p3|. Both are
/// unchanged by translation, rotation and uniform scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlrAttributes {
    /// Radians in `(-π, π]`.
    pub angle: f64,
    pub length_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("degenerate triple: a segment from the first point has zero length")]
pub struct DegenerateTriple;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

pub fn alr_attributes(p1: Point, p2: Point, p3: Point) -> Result<AlrAttributes, DegenerateTriple> {
    let (ax, ay) = (p2.x - p1.x, p2.y - p1.y);
    let (bx, by) = (p3.x - p1.x, p3.y - p1.y);
    let la = ax.hypot(ay);
    let lb = bx.hypot(by);
    if !(la > MIN_SEGMENT && lb > MIN_SEGMENT) {
        return Err(DegenerateTriple);
    }
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    let mut angle = cross.atan2(dot);
    if angle <= -PI {
        angle = PI;
    }
    Ok(AlrAttributes {
        angle,
        length_ratio: la / lb,
    })
}

pub fn triple_consistent(q: &AlrAttributes, g: &AlrAttributes, p: &MatchParams) -> bool {
    let angle_diff = wrap_angle(q.angle - g.angle).abs();
    let ratio_diff = (q.length_ratio - g.length_ratio).abs() / q.length_ratio.max(g.length_ratio);
    angle_diff <= p.angle_tolerance && ratio_diff <= p.ratio_tolerance
}
