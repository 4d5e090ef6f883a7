//! Geometric predicates and constructions.
//!
//! Orientation and in-circle decisions are exact (adaptive-precision
//! arithmetic). Constructions such as circumcenters are plain floating point;
//! the diametral-disk test therefore treats a thin relative band around the
//! circle as "on the boundary" so that constructed points which are on the
//! circle in exact arithmetic are classified consistently.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative half-width of the boundary band used by [`encroaches`], measured
/// against the squared radius of the diametral circle.
pub const DIAMETRAL_BOUNDARY_BAND: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Coordinate average; exact whenever the sum does not round.
    pub fn midpoint(&self, other: &Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    fn coord(&self) -> robust::Coord<f64> {
        robust::Coord { x: self.x, y: self.y }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    Collinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CirclePosition {
    Inside,
    Outside,
    On,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("degenerate triangle: the three points are collinear")]
    Degenerate,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// Exact sign of the doubled signed area of `pqr`.
pub fn orient2d(p: Point, q: Point, r: Point) -> Orientation {
    let det = robust::orient2d(p.coord(), q.coord(), r.coord());
    if det > 0.0 {
        Orientation::CounterClockwise
    } else if det < 0.0 {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

/// Exact position of `d` relative to the circle through `a`, `b`, `c`.
/// The triangle may be given in either orientation.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> Result<CirclePosition, GeomError> {
    let (b, c) = match orient2d(a, b, c) {
        Orientation::CounterClockwise => (b, c),
        Orientation::Clockwise => (c, b),
        Orientation::Collinear => return Err(GeomError::Degenerate),
    };
    let det = robust::incircle(a.coord(), b.coord(), c.coord(), d.coord());
    Ok(if det > 0.0 {
        CirclePosition::Inside
    } else if det < 0.0 {
        CirclePosition::Outside
    } else {
        CirclePosition::On
    })
}

/// Circumcenter, computed relative to `a`.
///
/// The formula is written so that swapping or negating coordinates of all
/// three inputs transforms the result exactly.
pub fn circumcenter(a: Point, b: Point, c: Point) -> Result<Point, GeomError> {
    if orient2d(a, b, c) == Orientation::Collinear {
        return Err(GeomError::Degenerate);
    }
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let d = 2.0 * (bx * cy - by * cx);
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Ok(Point::new(a.x + ux, a.y + uy))
}

/// Angle at `apex` between the rays toward `p` and `q`, in radians.
pub(crate) fn angle_at(apex: Point, p: Point, q: Point) -> f64 {
    let (ux, uy) = (p.x - apex.x, p.y - apex.y);
    let (vx, vy) = (q.x - apex.x, q.y - apex.y);
    let cross = ux * vy - uy * vx;
    let dot = ux * vx + uy * vy;
    cross.abs().atan2(dot)
}

/// The three interior angles in degrees, at `a`, `b`, `c` respectively.
pub fn angles_deg(a: Point, b: Point, c: Point) -> Result<[f64; 3], GeomError> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    if orient2d(a, b, c) == Orientation::Collinear {
        return Err(GeomError::Degenerate);
    }
    Ok([angle_at(a, b, c).to_degrees(), angle_at(b, c, a).to_degrees(), angle_at(c, a, b).to_degrees()])
}

/// Smallest interior angle of the triangle, in degrees.
pub fn min_angle_deg(a: Point, b: Point, c: Point) -> Result<f64, GeomError> {
    let [x, y, z] = angles_deg(a, b, c)?;
    Ok(x.min(y).min(z))
}

/// Does `p` lie in the diametral disk of the segment `a`–`b`?
///
/// With `closed == false` only points strictly inside count; with
/// `closed == true` points on the circle count as well. Points within
/// [`DIAMETRAL_BOUNDARY_BAND`] of the circle are on it.
pub fn encroaches(p: Point, a: Point, b: Point, closed: bool) -> bool {
    match diametral_position(p, a, b) {
        CirclePosition::Inside => true,
        CirclePosition::On => closed,
        CirclePosition::Outside => false,
    }
}

/// Position of `p` relative to the diametral circle of `a`–`b`, using the sign
/// of `(p - a) · (p - b)`.
pub fn diametral_position(p: Point, a: Point, b: Point) -> CirclePosition {
    let dot = (p.x - a.x) * (p.x - b.x) + (p.y - a.y) * (p.y - b.y);
    let band = DIAMETRAL_BOUNDARY_BAND * a.distance_squared(&b) / 4.0;
    if dot < -band {
        CirclePosition::Inside
    } else if dot > band {
        CirclePosition::Outside
    } else {
        CirclePosition::On
    }
}

/// Do the closed segments `p0`–`p1` and `q0`–`q1` share any point?
pub fn segments_intersect(p0: Point, p1: Point, q0: Point, q1: Point) -> bool {
    let o1 = orient2d(p0, p1, q0);
    let o2 = orient2d(p0, p1, q1);
    let o3 = orient2d(q0, q1, p0);
    let o4 = orient2d(q0, q1, p1);
    use Orientation::Collinear;
    if o1 != o2 && o3 != o4 && o1 != Collinear && o2 != Collinear && o3 != Collinear && o4 != Collinear {
        return true;
    }
    (o1 == Collinear && on_segment(p0, p1, q0))
        || (o2 == Collinear && on_segment(p0, p1, q1))
        || (o3 == Collinear && on_segment(q0, q1, p0))
        || (o4 == Collinear && on_segment(q0, q1, p1))
}

/// Do the segments cross at a single point interior to both?
pub fn segments_cross_properly(p0: Point, p1: Point, q0: Point, q1: Point) -> bool {
    let o1 = orient2d(p0, p1, q0);
    let o2 = orient2d(p0, p1, q1);
    let o3 = orient2d(q0, q1, p0);
    let o4 = orient2d(q0, q1, p1);
    use Orientation::Collinear;
    o1 != Collinear && o2 != Collinear && o3 != Collinear && o4 != Collinear && o1 != o2 && o3 != o4
}

/// `r` is known to be collinear with `p`–`q`; is it within the closed segment?
pub fn on_segment(p: Point, q: Point, r: Point) -> bool {
    r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_basics() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(orient2d(o, Point::new(1.0, 0.0), Point::new(0.0, 1.0)), Orientation::CounterClockwise);
        assert_eq!(orient2d(o, Point::new(1.0, 0.0), Point::new(2.0, 0.0)), Orientation::Collinear);
        assert_eq!(orient2d(o, Point::new(0.0, 1.0), Point::new(1.0, 0.0)), Orientation::Clockwise);
        // far below the naive determinant's resolution
        assert_eq!(orient2d(o, Point::new(1.0, 0.0), Point::new(0.5, 1e-300)), Orientation::CounterClockwise);
    }

    #[test]
    fn incircle_basics() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.0, 1.0);
        let cc = circumcenter(a, b, c).unwrap();
        assert_eq!(incircle(a, b, c, cc).unwrap(), CirclePosition::Inside);
        // clockwise input is normalized
        assert_eq!(incircle(a, c, b, cc).unwrap(), CirclePosition::Inside);
        let (p, q, r) = (Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 2.0));
        assert_eq!(incircle(p, q, r, Point::new(2.0, 2.0)).unwrap(), CirclePosition::On);
        assert_eq!(incircle(p, q, r, Point::new(3.0, 3.0)).unwrap(), CirclePosition::Outside);
        assert_eq!(incircle(p, q, Point::new(4.0, 0.0), Point::new(1.0, 1.0)), Err(GeomError::Degenerate));
    }

    #[test]
    fn circumcenter_of_right_triangle_is_hypotenuse_midpoint() {
        let leg = 2f64.powf(0.25);
        let cc = circumcenter(Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, leg)).unwrap();
        assert!((cc.x - 1.0).abs() < 1e-15);
        assert!((cc.y - 2f64.powf(-0.75)).abs() < 1e-15);
    }

    #[test]
    fn circumcenter_of_equilateral_is_centroid() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.5, 3f64.sqrt() / 2.0);
        let cc = circumcenter(a, b, c).unwrap();
        assert!((cc.x - 0.5).abs() < 1e-15);
        assert!((cc.y - 3f64.sqrt() / 6.0).abs() < 1e-15);
        assert!(circumcenter(a, b, Point::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn pav_circumcenter_sits_on_the_diametral_circle() {
        // sides 1 and sqrt 2 with 105 degrees between them
        let apex = Point::new(0.0, 0.0);
        let long_tip = Point::new(2f64.sqrt(), 0.0);
        let phi = 105f64.to_radians();
        let short_tip = Point::new(phi.cos(), phi.sin());
        let cc = circumcenter(apex, long_tip, short_tip).unwrap();
        let mid = apex.midpoint(&long_tip);
        assert!((cc.distance(&mid) - 2f64.sqrt() / 2.0).abs() < 1e-9);
        assert!(!encroaches(cc, apex, long_tip, false));
        assert!(encroaches(cc, apex, long_tip, true));
        let m = min_angle_deg(apex, long_tip, short_tip).unwrap();
        assert!((m - 30.0).abs() < 1e-12);
    }

    #[test]
    fn min_angle_values() {
        let leg = 2f64.powf(0.25);
        let m = min_angle_deg(Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, leg)).unwrap();
        assert!((m - 2f64.powf(-0.75).atan().to_degrees()).abs() < 1e-9);
        assert!((m - 30.73587).abs() < 1e-5);
        let eq = min_angle_deg(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 3f64.sqrt() / 2.0)).unwrap();
        assert!((eq - 60.0).abs() < 1e-12);
        assert_eq!(
            min_angle_deg(Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)),
            Err(GeomError::Degenerate)
        );
    }

    #[test]
    fn encroachment_cases() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(2.0, 0.0);
        // midpoint pushed half a radius off the segment
        let p = Point::new(1.0, 0.5);
        assert!(encroaches(p, a, b, false));
        assert!(encroaches(p, a, b, true));
        let cc = Point::new(1.0, -(2f64.powf(-0.75)));
        assert!(encroaches(cc, a, b, false));
        assert!((cc.distance(&Point::new(1.0, 0.0)) - 0.5946).abs() < 1e-4);
        assert!(!encroaches(Point::new(1.0, 1.5), a, b, true));
    }

    #[test]
    fn segment_intersection() {
        let p = |x, y| Point::new(x, y);
        assert!(segments_cross_properly(p(0., 0.), p(2., 2.), p(0., 2.), p(2., 0.)));
        assert!(!segments_cross_properly(p(0., 0.), p(1., 0.), p(1., 0.), p(1., 1.)));
        assert!(segments_intersect(p(0., 0.), p(1., 0.), p(1., 0.), p(1., 1.)));
        assert!(segments_intersect(p(0., 0.), p(2., 0.), p(1., 0.), p(1., 1.)));
        assert!(!segments_intersect(p(0., 0.), p(1., 0.), p(2., 0.), p(3., 0.)));
        assert!(segments_intersect(p(0., 0.), p(2., 0.), p(1., 0.), p(3., 0.)));
    }
}
