//! Planar straight-line graphs and the Triangle `.poly` format.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Orientation, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub endpoints: [usize; 2],
    /// Input segment this one descends from; `None` for input segments.
    pub parent: Option<usize>,
}

impl Segment {
    pub fn new(a: usize, b: usize) -> Self {
        Segment { endpoints: [a, b], parent: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pslg {
    pub vertices: Vec<Point>,
    pub segments: Vec<Segment>,
    /// Hole markers.
    pub holes: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonFiniteVertex { vertex: usize },
    DuplicateVertex { first: usize, second: usize },
    IndexOutOfRange { segment: usize, index: usize },
    ZeroLengthSegment { segment: usize },
    DuplicateSegment { first: usize, second: usize },
    ImproperIntersection { first: usize, second: usize },
    VertexOnSegment { vertex: usize, segment: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteVertex { vertex } => write!(f, "vertex {vertex} has a non-finite coordinate"),
            Violation::DuplicateVertex { first, second } => {
                write!(f, "duplicate vertex: {second} coincides with {first}")
            }
            Violation::IndexOutOfRange { segment, index } => {
                write!(f, "segment {segment} references missing vertex {index}")
            }
            Violation::ZeroLengthSegment { segment } => write!(f, "segment {segment} has zero length"),
            Violation::DuplicateSegment { first, second } => {
                write!(f, "segment {second} duplicates segment {first}")
            }
            Violation::ImproperIntersection { first, second } => {
                write!(f, "improper intersection between segments {first} and {second}")
            }
            Violation::VertexOnSegment { vertex, segment } => {
                write!(f, "vertex {vertex} lies in the interior of segment {segment}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PslgError {
    #[error("no two segments share an endpoint")]
    NoAdjacentSegments,
    #[error("invalid graph: {0:?}")]
    Invalid(Vec<Violation>),
}

impl Pslg {
    pub fn new(vertices: Vec<Point>, segments: Vec<Segment>) -> Self {
        Pslg { vertices, segments, holes: Vec::new() }
    }

    /// Adds a vertex and returns its index.
    pub fn add_vertex(&mut self, p: Point) -> usize {
        self.vertices.push(p);
        self.vertices.len() - 1
    }

    pub fn add_segment(&mut self, a: usize, b: usize) -> usize {
        self.segments.push(Segment::new(a, b));
        self.segments.len() - 1
    }

    /// Lineage id of segment `i`: its parent if it has one, else itself.
    pub fn lineage(&self, i: usize) -> usize {
        self.segments[i].parent.unwrap_or(i)
    }

    pub fn segment_points(&self, i: usize) -> (Point, Point) {
        let [a, b] = self.segments[i].endpoints;
        (self.vertices[a], self.vertices[b])
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        let (a, b) = self.segment_points(i);
        a.distance(&b)
    }

    /// Every violated invariant, each with the offending indices.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, p) in self.vertices.iter().enumerate() {
            if !p.is_finite() {
                out.push(Violation::NonFiniteVertex { vertex: i });
            }
        }
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&i, &j| {
            let (p, q) = (self.vertices[i], self.vertices[j]);
            p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(i.cmp(&j))
        });
        for w in order.windows(2) {
            if self.vertices[w[0]] == self.vertices[w[1]] {
                out.push(Violation::DuplicateVertex { first: w[0].min(w[1]), second: w[0].max(w[1]) });
            }
        }

        let n = self.vertices.len();
        let mut usable = Vec::new();
        for (s, seg) in self.segments.iter().enumerate() {
            let mut ok = true;
            for &idx in &seg.endpoints {
                if idx >= n {
                    out.push(Violation::IndexOutOfRange { segment: s, index: idx });
                    ok = false;
                }
            }
            if ok && self.vertices[seg.endpoints[0]] == self.vertices[seg.endpoints[1]] {
                out.push(Violation::ZeroLengthSegment { segment: s });
                ok = false;
            }
            if ok {
                usable.push(s);
            }
        }

        for (k, &s) in usable.iter().enumerate() {
            let [a, b] = self.segments[s].endpoints;
            for &t in &usable[k + 1..] {
                let [c, d] = self.segments[t].endpoints;
                if (a == c && b == d) || (a == d && b == c) {
                    out.push(Violation::DuplicateSegment { first: s, second: t });
                    continue;
                }
                let shared = [a, b].iter().filter(|v| **v == c || **v == d).count();
                let (p0, p1) = (self.vertices[a], self.vertices[b]);
                let (q0, q1) = (self.vertices[c], self.vertices[d]);
                let bad = if shared == 1 {
                    // only collinear overlap can go wrong at a shared endpoint
                    let (shv, oa, ob) = if a == c {
                        (a, b, d)
                    } else if a == d {
                        (a, b, c)
                    } else if b == c {
                        (b, a, d)
                    } else {
                        (b, a, c)
                    };
                    let (o, pa, pb) = (self.vertices[shv], self.vertices[oa], self.vertices[ob]);
                    geom::orient2d(o, pa, pb) == Orientation::Collinear
                        && (pa.x - o.x) * (pb.x - o.x) + (pa.y - o.y) * (pb.y - o.y) > 0.0
                } else {
                    geom::segments_intersect(p0, p1, q0, q1)
                };
                if bad {
                    out.push(Violation::ImproperIntersection { first: s, second: t });
                }
            }
        }

        for &s in &usable {
            let [a, b] = self.segments[s].endpoints;
            let (p, q) = (self.vertices[a], self.vertices[b]);
            for (v, &r) in self.vertices.iter().enumerate() {
                if v == a || v == b || r == p || r == q || !r.is_finite() {
                    continue;
                }
                if geom::orient2d(p, q, r) == Orientation::Collinear && geom::on_segment(p, q, r) {
                    out.push(Violation::VertexOnSegment { vertex: v, segment: s });
                }
            }
        }
        out
    }

    /// Smallest angle, in degrees, between two segments sharing an endpoint.
    pub fn min_input_angle_deg(&self) -> Result<f64, PslgError> {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.vertices.len()];
        for seg in &self.segments {
            let [a, b] = seg.endpoints;
            incident[a].push(b);
            incident[b].push(a);
        }
        let mut best: Option<f64> = None;
        for (v, others) in incident.iter().enumerate() {
            for (i, &p) in others.iter().enumerate() {
                for &q in &others[i + 1..] {
                    let ang = geom::angle_at(self.vertices[v], self.vertices[p], self.vertices[q]).to_degrees();
                    best = Some(best.map_or(ang, |b: f64| b.min(ang)));
                }
            }
        }
        best.ok_or(PslgError::NoAdjacentSegments)
    }

    /// Applies `f` to every vertex and hole marker.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Pslg {
        Pslg {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            segments: self.segments.clone(),
            holes: self.holes.iter().map(|&p| f(p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct PolyParseError {
    pub line: usize,
    pub kind: PolyErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("vertex index {index} out of range (valid {first}..{end})")]
    IndexOutOfRange { index: i64, first: i64, end: i64 },
    #[error("file ends early: expected {0}")]
    Truncated(String),
    #[error("unsupported dimension {0}, only 2 is allowed")]
    Dimension(i64),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-blank line with comments stripped, as tokens.
    fn next_record(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), PolyParseError> {
        let end = self.last + 1;
        self.next_record().ok_or_else(|| PolyParseError { line: end, kind: PolyErrorKind::Truncated(what.to_string()) })
    }
}

fn int(tok: &str, line: usize, header: bool) -> Result<i64, PolyParseError> {
    tok.parse::<i64>().map_err(|_| PolyParseError {
        line,
        kind: if header {
            PolyErrorKind::MalformedHeader(format!("expected an integer, found `{tok}`"))
        } else {
            PolyErrorKind::MalformedRecord(format!("expected an integer, found `{tok}`"))
        },
    })
}

fn real(tok: &str, line: usize) -> Result<f64, PolyParseError> {
    tok.parse::<f64>().map_err(|_| PolyParseError {
        line,
        kind: PolyErrorKind::MalformedRecord(format!("expected a number, found `{tok}`")),
    })
}

/// Parses Triangle's `.poly` format. Vertex numbering may start at 0 or 1
/// (taken from the first vertex record); attributes and boundary markers are
/// read and discarded.
pub fn parse_poly(text: &str) -> Result<Pslg, PolyParseError> {
    let mut lines = Lines::new(text);
    let (hl, header) = lines.expect("vertex header")?;
    if header.len() < 2 {
        return Err(PolyParseError {
            line: hl,
            kind: PolyErrorKind::MalformedHeader(
                "expected `<#vertices> <dimension> [<#attributes> <#markers>]`".into(),
            ),
        });
    }
    let nv = int(header[0], hl, true)?;
    let dim = int(header[1], hl, true)?;
    if dim != 2 {
        return Err(PolyParseError { line: hl, kind: PolyErrorKind::Dimension(dim) });
    }
    if nv == 0 {
        return Err(PolyParseError {
            line: hl,
            kind: PolyErrorKind::MalformedHeader("vertices listed in a separate .node file are not supported".into()),
        });
    }
    if nv < 0 {
        return Err(PolyParseError { line: hl, kind: PolyErrorKind::MalformedHeader("negative vertex count".into()) });
    }

    let mut pslg = Pslg::default();
    let mut first = 0i64;
    for k in 0..nv {
        let (l, toks) = lines.expect(&format!("vertex record {} of {nv}", k + 1))?;
        if toks.len() < 3 {
            return Err(PolyParseError {
                line: l,
                kind: PolyErrorKind::MalformedRecord("expected `<index> <x> <y>`".into()),
            });
        }
        let idx = int(toks[0], l, false)?;
        if k == 0 {
            first = idx;
        }
        if idx != first + k {
            return Err(PolyParseError {
                line: l,
                kind: PolyErrorKind::MalformedRecord(format!("vertex numbered {idx}, expected {}", first + k)),
            });
        }
        pslg.vertices.push(Point::new(real(toks[1], l)?, real(toks[2], l)?));
    }

    let (sl, sh) = lines.expect("segment header")?;
    let ns = int(sh[0], sl, true)?;
    if ns < 0 {
        return Err(PolyParseError { line: sl, kind: PolyErrorKind::MalformedHeader("negative segment count".into()) });
    }
    for k in 0..ns {
        let (l, toks) = lines.expect(&format!("segment record {} of {ns}", k + 1))?;
        if toks.len() < 3 {
            return Err(PolyParseError {
                line: l,
                kind: PolyErrorKind::MalformedRecord("expected `<index> <endpoint> <endpoint>`".into()),
            });
        }
        let mut ends = [0usize; 2];
        for (slot, tok) in ends.iter_mut().zip(&toks[1..3]) {
            let raw = int(tok, l, false)?;
            if raw < first || raw >= first + nv {
                return Err(PolyParseError {
                    line: l,
                    kind: PolyErrorKind::IndexOutOfRange { index: raw, first, end: first + nv },
                });
            }
            *slot = (raw - first) as usize;
        }
        pslg.segments.push(Segment::new(ends[0], ends[1]));
    }

    // the hole section is optional in practice, though Triangle writes it
    if let Some((l, toks)) = lines.next_record() {
        let nh = int(toks[0], l, true)?;
        for k in 0..nh.max(0) {
            let (l, toks) = lines.expect(&format!("hole record {} of {nh}", k + 1))?;
            if toks.len() < 3 {
                return Err(PolyParseError {
                    line: l,
                    kind: PolyErrorKind::MalformedRecord("expected `<index> <x> <y>`".into()),
                });
            }
            pslg.holes.push(Point::new(real(toks[1], l)?, real(toks[2], l)?));
        }
    }
    Ok(pslg)
}

/// 17 significant digits: enough to round-trip any `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes Triangle's `.poly` format with 1-based numbering.
pub fn write_poly(p: &Pslg) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} 2 0 0", p.vertices.len());
    for (i, v) in p.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, fmt_real(v.x), fmt_real(v.y));
    }
    let _ = writeln!(s, "{} 0", p.segments.len());
    for (i, seg) in p.segments.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, seg.endpoints[0] + 1, seg.endpoints[1] + 1);
    }
    let _ = writeln!(s, "{}", p.holes.len());
    for (i, h) in p.holes.iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, fmt_real(h.x), fmt_real(h.y));
    }
    s
}
