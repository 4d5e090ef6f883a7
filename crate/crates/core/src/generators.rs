//! Configurations that send refinement into an endless cascade of splits, and
//! the enclosing square that gives each one a bounded domain.
//!
//! Every configuration is a fan of segments sharing one apex at the origin.
//! Vertex 0 is the apex, vertices `1..=n` the segment tips (segment `i` runs
//! from the apex to tip `i + 1`), and the enclosure corners come last.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, OptimumSolution};
use crate::geom::{self, Point};
use crate::pslg::Pslg;

pub const DEFAULT_ENCLOSURE_SCALE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Pav,
    Pinwheel,
    Example2,
    Example2Opt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleConfig {
    pub family: Family,
    /// Segment count (pinwheel only).
    pub n: usize,
    pub delta: f64,
    pub theta_deg: f64,
    pub a: f64,
    pub enclosure_scale: f64,
}

impl ExampleConfig {
    pub fn pav(delta: f64) -> Self {
        ExampleConfig {
            family: Family::Pav,
            n: 2,
            delta,
            theta_deg: 0.0,
            a: 0.0,
            enclosure_scale: DEFAULT_ENCLOSURE_SCALE,
        }
    }

    pub fn pinwheel(n: usize) -> Self {
        ExampleConfig {
            family: Family::Pinwheel,
            n,
            delta: 0.0,
            theta_deg: 0.0,
            a: 0.0,
            enclosure_scale: DEFAULT_ENCLOSURE_SCALE,
        }
    }

    pub fn example2(theta_deg: f64, a: f64, delta: f64) -> Self {
        ExampleConfig { family: Family::Example2, n: 4, delta, theta_deg, a, enclosure_scale: DEFAULT_ENCLOSURE_SCALE }
    }

    pub fn example2_optimized(delta: f64) -> Self {
        ExampleConfig {
            family: Family::Example2Opt,
            n: 4,
            delta,
            theta_deg: 0.0,
            a: 0.0,
            enclosure_scale: DEFAULT_ENCLOSURE_SCALE,
        }
    }

    pub fn with_scale(self, enclosure_scale: f64) -> Self {
        ExampleConfig { enclosure_scale, ..self }
    }

    /// The configuration's segments without the enclosure.
    pub fn fan(&self) -> Result<Pslg, GenError> {
        if !(self.delta >= 0.0) {
            return Err(GenError::NegativeDelta(self.delta));
        }
        match self.family {
            Family::Pav => Ok(pav_fan(self.delta)),
            Family::Pinwheel => pinwheel_fan(self.n),
            Family::Example2 => example2_fan(self.theta_deg, self.a, self.delta),
            Family::Example2Opt => {
                let s = analysis::solve_optimum(analysis::DEFAULT_GUESS)?;
                example2_fan(s.theta_deg, s.a, self.delta)
            }
        }
    }

    /// The enclosed configuration, ready for refinement.
    pub fn generate(&self) -> Result<Pslg, GenError> {
        enclose(&self.fan()?, self.enclosure_scale)
    }

    /// Smallest angles of the triangles that drive the cascade, in degrees.
    pub fn predicted_skinny_deg(&self) -> Result<Vec<f64>, GenError> {
        let fan = self.fan()?;
        let p = |i: usize| fan.vertices[i];
        let angle = |i: usize, j: usize| geom::min_angle_deg(p(0), p(i), p(j)).expect("fan tips are not collinear");
        Ok(match self.family {
            Family::Pav => vec![angle(1, 2)],
            Family::Pinwheel => vec![angle(1, self.n)],
            Family::Example2 | Family::Example2Opt => {
                // tips: 1 = U, 2 = X, 3 = S, 4 = W; the second triangle
                // forms once X has been halved
                let half_x = p(0).midpoint(&p(2));
                let second = geom::min_angle_deg(p(0), half_x, p(3)).expect("fan tips are not collinear");
                vec![angle(1, 2), second]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("pinwheel needs 3, 4 or 5 segments, got {0}")]
    InvalidN(usize),
    #[error("perturbation must be non-negative, got {0}")]
    NegativeDelta(f64),
    #[error("enclosure scale must be at least 3, got {0}")]
    InvalidScale(f64),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("enclosure would touch the configuration: {0}")]
    EnclosureTouches(String),
    #[error(transparent)]
    Solver(#[from] AnalysisError),
}

/// Unit vector at `deg` degrees, exact at multiples of 90.
fn direction(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r == 0.0 {
        (1.0, 0.0)
    } else if r == 90.0 {
        (0.0, 1.0)
    } else if r == 180.0 {
        (-1.0, 0.0)
    } else if r == 270.0 {
        (0.0, -1.0)
    } else {
        let t = r.to_radians();
        (t.cos(), t.sin())
    }
}

fn fan(arms: &[(f64, f64)]) -> Pslg {
    let mut p = Pslg::default();
    let apex = p.add_vertex(Point::new(0.0, 0.0));
    for &(deg, len) in arms {
        let (c, s) = direction(deg);
        let tip = p.add_vertex(Point::new(len * c, len * s));
        p.add_segment(apex, tip);
    }
    p
}

fn pav_fan(delta: f64) -> Pslg {
    // 105 degrees between a √2 arm and a unit arm: the triangle on their tips
    // has angles 105/45/30 and its circumcenter sits on the √2 arm's
    // diametral circle. Narrowing the apex angle pulls it strictly inside.
    fan(&[(0.0, 2f64.sqrt()), (105.0 * (1.0 - delta), 1.0)])
}

/// Enclosed two-segment configuration with a 30 degree skinny triangle.
pub fn pav(delta: f64) -> Result<Pslg, GenError> {
    ExampleConfig::pav(delta).generate()
}

fn pinwheel_fan(n: usize) -> Result<Pslg, GenError> {
    if !(3..=5).contains(&n) {
        return Err(GenError::InvalidN(n));
    }
    let arms: Vec<(f64, f64)> =
        (0..n).map(|i| (i as f64 * 360.0 / n as f64, 2f64.powf((n - i) as f64 / n as f64))).collect();
    Ok(fan(&arms))
}

/// Enclosed fan of `n` segments with lengths 2^((n-i)/n) at equal angles.
pub fn pinwheel(n: usize) -> Result<Pslg, GenError> {
    ExampleConfig::pinwheel(n).generate()
}

fn example2_fan(theta_deg: f64, a: f64, delta: f64) -> Result<Pslg, GenError> {
    if !(theta_deg > 60.0 && theta_deg < 120.0) {
        return Err(GenError::InvalidParameters(format!(
            "theta {theta_deg} leaves an input angle of at most 60 degrees"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(GenError::InvalidParameters(format!("a must be positive, got {a}")));
    }
    let a = a * (1.0 - delta);
    let r2 = 2f64.sqrt();
    // point-symmetric layout: U (1) and X (2a) open by theta; S (√2) and
    // W (√2 a) open by theta on the opposite side
    let p = fan(&[(90.0 - theta_deg, 1.0), (90.0, 2.0 * a), (270.0 - theta_deg, r2), (270.0, r2 * a)]);
    let v = |i: usize| p.vertices[i];
    let o = v(0);
    // the cascade alternates two kinds of steps; each must encroach
    let (u, x, s) = (v(1), v(2), v(3));
    let c1 = geom::circumcenter(o, u, x).map_err(|e| GenError::InvalidParameters(e.to_string()))?;
    if !geom::encroaches(c1, o, x, false) {
        return Err(GenError::InvalidParameters("circumcenter of the (U, X) triangle does not encroach X".into()));
    }
    let half_x = o.midpoint(&x);
    let c2 = geom::circumcenter(o, half_x, s).map_err(|e| GenError::InvalidParameters(e.to_string()))?;
    if !geom::encroaches(c2, o, s, true) {
        return Err(GenError::InvalidParameters(
            "circumcenter of the (X/2, S) triangle falls outside the diametral disk of S".into(),
        ));
    }
    Ok(p)
}

/// Enclosed four-segment spiral configuration parameterized by the opening
/// angle `theta_deg` and the half-length `a` of its upper segment.
pub fn example2(theta_deg: f64, a: f64, delta: f64) -> Result<Pslg, GenError> {
    ExampleConfig::example2(theta_deg, a, delta).generate()
}

/// [`example2`] at the parameters that balance its two skinny angles.
pub fn example2_optimized(delta: f64) -> Result<Pslg, GenError> {
    ExampleConfig::example2_optimized(delta).generate()
}

/// The balanced parameters used by [`example2_optimized`].
pub fn example2_optimum() -> Result<OptimumSolution, GenError> {
    Ok(analysis::solve_optimum(analysis::DEFAULT_GUESS)?)
}

/// Adds an axis-aligned square of side `scale` times the largest vertex
/// distance, centered on the vertex centroid, as four constraint segments.
pub fn enclose(p: &Pslg, scale: f64) -> Result<Pslg, GenError> {
    if !(scale >= 3.0) || !scale.is_finite() {
        return Err(GenError::InvalidScale(scale));
    }
    let n = p.vertices.len() as f64;
    let cx = p.vertices.iter().map(|q| q.x).sum::<f64>() / n;
    let cy = p.vertices.iter().map(|q| q.y).sum::<f64>() / n;
    let mut diameter: f64 = 0.0;
    for (i, a) in p.vertices.iter().enumerate() {
        for b in &p.vertices[i + 1..] {
            diameter = diameter.max(a.distance(b));
        }
    }
    let h = scale * diameter / 2.0;
    for (i, s) in p.segments.iter().enumerate() {
        let (a, b) = (p.vertices[s.endpoints[0]], p.vertices[s.endpoints[1]]);
        let m = a.midpoint(&b);
        let r = a.distance(&b) / 2.0;
        if !(m.x - r > cx - h && m.x + r < cx + h && m.y - r > cy - h && m.y + r < cy + h) {
            return Err(GenError::EnclosureTouches(format!("diametral disk of segment {i}")));
        }
    }
    let mut out = p.clone();
    let corners: Vec<usize> = [(-h, -h), (h, -h), (h, h), (-h, h)]
        .iter()
        .map(|&(dx, dy)| out.add_vertex(Point::new(cx + dx, cy + dy)))
        .collect();
    for i in 0..4 {
        out.add_segment(corners[i], corners[(i + 1) % 4]);
    }
    Ok(out)
}
