//! Exact rational-arithmetic oracles shared by the integration suites.
#![allow(dead_code)]

use num::{BigRational, Signed, Zero};

use refinelab::cdt::Triangulation;
use refinelab::geom::{self, CirclePosition, Orientation, Point};

pub fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn exact_orient(a: Point, b: Point, c: Point) -> Orientation {
    let det = (q(b.x) - q(a.x)) * (q(c.y) - q(a.y)) - (q(b.y) - q(a.y)) * (q(c.x) - q(a.x));
    if det.is_positive() {
        Orientation::CounterClockwise
    } else if det.is_negative() {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

/// Lifted determinant, positive when `d` is inside the circle through
/// `a, b, c` taken counterclockwise.
pub fn exact_incircle_det(a: Point, b: Point, c: Point, d: Point) -> BigRational {
    let row = |p: Point| {
        let (x, y) = (q(p.x) - q(d.x), q(p.y) - q(d.y));
        let w = &x * &x + &y * &y;
        (x, y, w)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    ax * (&by * &cw - &bw * &cy) - ay * (&bx * &cw - &bw * &cx) + aw * (bx * cy - by * cx)
}

pub fn exact_incircle(a: Point, b: Point, c: Point, d: Point) -> Option<CirclePosition> {
    let o = exact_orient(a, b, c);
    if o == Orientation::Collinear {
        return None;
    }
    let mut det = exact_incircle_det(a, b, c, d);
    if o == Orientation::Clockwise {
        det = -det;
    }
    Some(if det.is_positive() {
        CirclePosition::Inside
    } else if det.is_zero() {
        CirclePosition::On
    } else {
        CirclePosition::Outside
    })
}

/// Is `d` strictly inside the circumcircle of the CCW triangle `a, b, c`?
pub fn strictly_inside(a: Point, b: Point, c: Point, d: Point) -> bool {
    exact_incircle_det(a, b, c, d).is_positive()
}

/// Both predicates agree with the oracle on one case.
pub fn check_predicates(a: Point, b: Point, c: Point, d: Point) {
    assert_eq!(geom::orient2d(a, b, c), exact_orient(a, b, c), "orient {a:?} {b:?} {c:?}");
    match exact_incircle(a, b, c, d) {
        None => assert!(geom::incircle(a, b, c, d).is_err()),
        Some(pos) => assert_eq!(geom::incircle(a, b, c, d), Ok(pos), "incircle {a:?} {b:?} {c:?} {d:?}"),
    }
}

/// Checks the unconstrained-interior Delaunay property against every live vertex.
pub fn assert_delaunay(t: &Triangulation) {
    let live: Vec<usize> = (0..t.vertices().len()).filter(|&v| t.vertex(v).alive).collect();
    for (_, tri) in t.triangles() {
        let [a, b, c] = tri.map(|v| t.point(v));
        assert_eq!(geom::orient2d(a, b, c), Orientation::CounterClockwise);
        for &w in &live {
            if !tri.contains(&w) {
                assert!(!strictly_inside(a, b, c, t.point(w)), "vertex {w} inside circumcircle of {tri:?}");
            }
        }
    }
}
