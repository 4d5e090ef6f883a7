//! Ruppert's algorithm and Chew's second algorithm, instrumented with an
//! event trace.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdt::{canonical, CdtError, ChangeSet, TriId, Triangulation, VertexId, VertexTag};
use crate::geom::{self, Point};
use crate::pslg::Pslg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ruppert,
    Chew2,
}

/// Order in which skinny triangles are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueuePolicy {
    /// Smallest minimum angle first, ties by creation order.
    WorstFirst,
    /// Creation order.
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub alpha_deg: f64,
    pub max_insertions: usize,
    /// Stop once the shortest subsegment falls below this fraction of the
    /// shortest input segment.
    pub min_length_ratio: f64,
    /// Whether a point on a diametral circle encroaches.
    pub closed_diametral: bool,
    pub queue_policy: QueuePolicy,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            alpha_deg: 20.0,
            max_insertions: 10_000,
            min_length_ratio: 2f64.powi(-12),
            closed_diametral: false,
            queue_policy: QueuePolicy::WorstFirst,
        }
    }
}

impl RefinementConfig {
    pub fn with_alpha(alpha_deg: f64) -> Self {
        RefinementConfig { alpha_deg, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        if !(self.alpha_deg > 0.0 && self.alpha_deg < 60.0) {
            return Err(RefineError::InvalidConfig(format!("alpha {} must lie in (0, 60)", self.alpha_deg)));
        }
        if self.max_insertions == 0 {
            return Err(RefineError::InvalidConfig("max_insertions must be at least 1".into()));
        }
        if !(self.min_length_ratio > 0.0 && self.min_length_ratio < 1.0) {
            return Err(RefineError::InvalidConfig(format!(
                "min_length_ratio {} must lie in (0, 1)",
                self.min_length_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    SegmentSplit,
    CircumcenterInsert,
    CircumcenterRejectedForEncroachment,
    VertexDeleted,
}

/// One refinement step. `length` is the length of the subsegment being split;
/// `min_angle_deg` is that of the skinny triangle behind a circumcenter event;
/// `(x, y)` is the inserted, rejected, or deleted point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub lineage: Option<usize>,
    pub length: Option<f64>,
    pub min_angle_deg: Option<f64>,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub events: Vec<TraceEvent>,
}

impl RefinementTrace {
    fn push(&mut self, kind: EventKind, lineage: Option<usize>, length: Option<f64>, angle: Option<f64>, p: Point) {
        let seq = self.events.len() as u64;
        self.events.push(TraceEvent { seq, kind, lineage, length, min_angle_deg: angle, x: p.x, y: p.y });
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn splits(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::SegmentSplit)
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events =
            text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(RefinementTrace { events })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Terminated,
    BudgetExhausted,
    DivergenceFloorHit,
}

#[derive(Debug, Clone)]
pub struct RefinementOutcome {
    pub algorithm: Algorithm,
    pub status: RunStatus,
    pub mesh: Triangulation,
    pub trace: RefinementTrace,
    /// Vertices added (splits plus circumcenters).
    pub insertions: usize,
    /// Length of each input segment, indexed by lineage.
    pub lineage_lengths: Vec<f64>,
    pub initial_shortest: f64,
}

impl RefinementOutcome {
    pub fn shortest_subsegment(&self) -> f64 {
        shortest_subsegment(&self.mesh)
    }

    pub fn final_min_angle_deg(&self) -> f64 {
        mesh_min_angle_deg(&self.mesh)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("triangulation failure: {0}")]
    Engine(#[from] CdtError),
}

pub fn shortest_subsegment(mesh: &Triangulation) -> f64 {
    mesh.constraints().keys().map(|&(a, b)| mesh.point(a).distance(&mesh.point(b))).fold(f64::INFINITY, f64::min)
}

pub fn mesh_min_angle_deg(mesh: &Triangulation) -> f64 {
    mesh.triangles()
        .filter_map(|(t, _)| {
            let [a, b, c] = mesh.triangle_points(t);
            geom::min_angle_deg(a, b, c).ok()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn refine(p: &Pslg, cfg: &RefinementConfig, alg: Algorithm) -> Result<RefinementOutcome, RefineError> {
    match alg {
        Algorithm::Ruppert => ruppert(p, cfg),
        Algorithm::Chew2 => chew2(p, cfg),
    }
}

/// Ruppert's algorithm: encroached subsegments are split first (FIFO); a
/// skinny triangle's circumcenter is inserted only if it encroaches no
/// subsegment and is visible from the triangle, otherwise the offending
/// subsegments are split instead.
pub fn ruppert(p: &Pslg, cfg: &RefinementConfig) -> Result<RefinementOutcome, RefineError> {
    Engine::new(p, cfg, Algorithm::Ruppert)?.run()
}

/// Chew's second algorithm on the constrained Delaunay triangulation: a
/// skinny triangle's circumcenter is inserted unless a subsegment separates
/// it from the triangle; then that subsegment is split after deleting the
/// free vertices in its closed diametral disk.
pub fn chew2(p: &Pslg, cfg: &RefinementConfig) -> Result<RefinementOutcome, RefineError> {
    Engine::new(p, cfg, Algorithm::Chew2)?.run()
}

#[derive(Debug, Clone, Copy)]
struct Skinny {
    key: f64,
    seq: u64,
    tri: TriId,
    verts: [VertexId; 3],
    angle: f64,
}

impl PartialEq for Skinny {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Skinny {}

impl PartialOrd for Skinny {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Skinny {
    // reversed: BinaryHeap pops the smallest key, then the oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct QueuedSegment {
    a: VertexId,
    b: VertexId,
    /// Split without re-checking encroachment (queued by a rejected circumcenter).
    force: bool,
}

struct Engine<'c> {
    cfg: &'c RefinementConfig,
    alg: Algorithm,
    mesh: Triangulation,
    trace: RefinementTrace,
    segments: VecDeque<QueuedSegment>,
    skinny: BinaryHeap<Skinny>,
    next_seq: u64,
    insertions: usize,
    shortest: f64,
    initial_shortest: f64,
    lineage_lengths: Vec<f64>,
}

enum Step {
    Continue,
    Stop(RunStatus),
}

impl<'c> Engine<'c> {
    fn new(p: &Pslg, cfg: &'c RefinementConfig, alg: Algorithm) -> Result<Self, RefineError> {
        cfg.validate()?;
        if p.segments.is_empty() {
            return Err(RefineError::InvalidInput("input has no segments".into()));
        }
        let violations = p.validate();
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(RefineError::InvalidInput(msg.join("; ")));
        }
        if let Ok(angle) = p.min_input_angle_deg() {
            if angle <= 60.0 {
                return Err(RefineError::InvalidInput(format!(
                    "smallest input angle {angle:.3} degrees is not above 60"
                )));
            }
        }
        let mesh = Triangulation::build(p).map_err(|e| RefineError::InvalidInput(e.to_string()))?;
        let lineage_lengths: Vec<f64> = (0..p.segments.len()).map(|i| p.segment_length(i)).collect();
        let initial_shortest = lineage_lengths.iter().copied().fold(f64::INFINITY, f64::min);
        let mut engine = Engine {
            cfg,
            alg,
            mesh,
            trace: RefinementTrace::default(),
            segments: VecDeque::new(),
            skinny: BinaryHeap::new(),
            next_seq: 0,
            insertions: 0,
            shortest: initial_shortest,
            initial_shortest,
            lineage_lengths,
        };
        let mut all: Vec<(TriId, [VertexId; 3])> = engine.mesh.triangles().collect();
        all.sort_by_key(|&(_, v)| canonical(v));
        for (t, _) in all {
            engine.consider_triangle(t);
        }
        if alg == Algorithm::Ruppert {
            let keys: Vec<(VertexId, VertexId)> = engine.mesh.constraints().keys().copied().collect();
            for (a, b) in keys {
                if engine.encroached_by_apex(a, b) {
                    engine.segments.push_back(QueuedSegment { a, b, force: false });
                }
            }
        }
        Ok(engine)
    }

    fn run(mut self) -> Result<RefinementOutcome, RefineError> {
        // Chew's deletions can undo insertions; bound total work as well
        let step_cap = self.cfg.max_insertions.saturating_mul(20).max(1000);
        let mut steps = 0usize;
        let status = loop {
            if self.insertions >= self.cfg.max_insertions || steps >= step_cap {
                break RunStatus::BudgetExhausted;
            }
            steps += 1;
            let step = match self.alg {
                Algorithm::Ruppert => self.ruppert_step()?,
                Algorithm::Chew2 => self.chew_step()?,
            };
            if let Step::Stop(s) = step {
                break s;
            }
        };
        Ok(RefinementOutcome {
            algorithm: self.alg,
            status,
            mesh: self.mesh,
            trace: self.trace,
            insertions: self.insertions,
            lineage_lengths: self.lineage_lengths,
            initial_shortest: self.initial_shortest,
        })
    }

    fn ruppert_step(&mut self) -> Result<Step, RefineError> {
        if let Some(q) = self.segments.pop_front() {
            if !self.mesh.is_constraint(q.a, q.b) || !(q.force || self.encroached_by_apex(q.a, q.b)) {
                return Ok(Step::Continue);
            }
            return self.split(q.a, q.b);
        }
        let Some(entry) = self.pop_skinny() else {
            return Ok(Step::Stop(RunStatus::Terminated));
        };
        let [a, b, c] = self.mesh.triangle_points(entry.tri);
        let cc = geom::circumcenter(a, b, c).map_err(|e| RefineError::Engine(CdtError::Internal(e.to_string())))?;
        let centroid = centroid(a, b, c);
        let closed = self.cfg.closed_diametral;
        let offending: Vec<(VertexId, VertexId)> = self
            .mesh
            .constraints()
            .keys()
            .copied()
            .filter(|&(s, e)| {
                let (ps, pe) = (self.mesh.point(s), self.mesh.point(e));
                geom::encroaches(cc, ps, pe, closed) || geom::segments_intersect(centroid, cc, ps, pe)
            })
            .collect();
        if !offending.is_empty() {
            self.trace.push(EventKind::CircumcenterRejectedForEncroachment, None, None, Some(entry.angle), cc);
            for (s, e) in offending {
                self.segments.push_back(QueuedSegment { a: s, b: e, force: true });
            }
            self.skinny.push(entry);
            return Ok(Step::Continue);
        }
        self.insert_circumcenter(entry, cc)
    }

    fn chew_step(&mut self) -> Result<Step, RefineError> {
        let Some(entry) = self.pop_skinny() else {
            return Ok(Step::Stop(RunStatus::Terminated));
        };
        let [a, b, c] = self.mesh.triangle_points(entry.tri);
        let cc = geom::circumcenter(a, b, c).map_err(|e| RefineError::Engine(CdtError::Internal(e.to_string())))?;
        let centroid = centroid(a, b, c);
        // the first subsegment met walking from the triangle toward c
        let blocker = self
            .mesh
            .constraints()
            .keys()
            .copied()
            .filter(|&(s, e)| geom::segments_intersect(centroid, cc, self.mesh.point(s), self.mesh.point(e)))
            .min_by(|&(s1, e1), &(s2, e2)| {
                let d1 = crossing_distance(centroid, cc, self.mesh.point(s1), self.mesh.point(e1));
                let d2 = crossing_distance(centroid, cc, self.mesh.point(s2), self.mesh.point(e2));
                d1.total_cmp(&d2).then((s1, e1).cmp(&(s2, e2)))
            });
        let Some((s, e)) = blocker else {
            return self.insert_circumcenter(entry, cc);
        };
        self.trace.push(EventKind::CircumcenterRejectedForEncroachment, None, None, Some(entry.angle), cc);
        let (ps, pe) = (self.mesh.point(s), self.mesh.point(e));
        let doomed: Vec<VertexId> = self
            .mesh
            .vertices()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.alive && v.tag == VertexTag::Circumcenter && geom::encroaches(v.point, ps, pe, true))
            .map(|(i, _)| i)
            .collect();
        for v in doomed {
            let at = self.mesh.point(v);
            match self.mesh.delete_vertex(v) {
                Ok(cs) => {
                    self.trace.push(EventKind::VertexDeleted, None, None, None, at);
                    self.after_change(&cs);
                }
                Err(CdtError::NotFree(..)) | Err(CdtError::OnBoundary(_)) => {}
                Err(err) => return Err(err.into()),
            }
        }
        if self.mesh.triangle(entry.tri) == Some(entry.verts) {
            self.skinny.push(entry);
        }
        self.split(s, e)
    }

    fn split(&mut self, a: VertexId, b: VertexId) -> Result<Step, RefineError> {
        let info = self.mesh.constraints()[&key(a, b)];
        let length = self.mesh.point(a).distance(&self.mesh.point(b));
        let (m, cs) = self.mesh.split_segment(a, b)?;
        self.insertions += 1;
        let pm = self.mesh.point(m);
        self.trace.push(EventKind::SegmentSplit, Some(info.lineage), Some(length), None, pm);
        let child = self.mesh.point(a).distance(&pm).min(pm.distance(&self.mesh.point(b)));
        self.shortest = self.shortest.min(child);
        self.after_change(&cs);
        if self.shortest < self.cfg.min_length_ratio * self.initial_shortest {
            return Ok(Step::Stop(RunStatus::DivergenceFloorHit));
        }
        Ok(Step::Continue)
    }

    fn insert_circumcenter(&mut self, entry: Skinny, cc: Point) -> Result<Step, RefineError> {
        let (_, cs) = self.mesh.insert_vertex_from(cc, VertexTag::Circumcenter, Some(entry.tri))?;
        self.insertions += 1;
        self.trace.push(EventKind::CircumcenterInsert, None, None, Some(entry.angle), cc);
        self.after_change(&cs);
        Ok(Step::Continue)
    }

    /// Queues new skinny triangles and (for Ruppert) subsegments encroached
    /// by the apex of a new triangle, in an order independent of slot ids.
    fn after_change(&mut self, cs: &ChangeSet) {
        let mut created: Vec<(TriId, [VertexId; 3])> =
            cs.created.iter().filter_map(|&t| self.mesh.triangle(t).map(|v| (t, v))).collect();
        created.sort_by_key(|&(_, v)| canonical(v));
        for &(t, v) in &created {
            self.consider_triangle(t);
            if self.alg != Algorithm::Ruppert {
                continue;
            }
            for i in 0..3 {
                let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                if self.mesh.is_constraint(a, b) {
                    let (pa, pb) = (self.mesh.point(a), self.mesh.point(b));
                    if geom::encroaches(self.mesh.point(v[i]), pa, pb, self.cfg.closed_diametral) {
                        self.segments.push_back(QueuedSegment { a, b, force: false });
                    }
                }
            }
        }
    }

    fn consider_triangle(&mut self, t: TriId) {
        let verts = self.mesh.triangle(t).expect("live triangle");
        let [a, b, c] = self.mesh.triangle_points(t);
        let Ok(angle) = geom::min_angle_deg(a, b, c) else { return };
        if angle < self.cfg.alpha_deg {
            let key = match self.cfg.queue_policy {
                QueuePolicy::WorstFirst => angle,
                QueuePolicy::Fifo => 0.0,
            };
            self.skinny.push(Skinny { key, seq: self.next_seq, tri: t, verts, angle });
            self.next_seq += 1;
        }
    }

    fn pop_skinny(&mut self) -> Option<Skinny> {
        while let Some(entry) = self.skinny.pop() {
            if self.mesh.triangle(entry.tri) == Some(entry.verts) {
                return Some(entry);
            }
        }
        None
    }

    fn encroached_by_apex(&self, a: VertexId, b: VertexId) -> bool {
        let (pa, pb) = (self.mesh.point(a), self.mesh.point(b));
        self.mesh
            .opposite_apexes(a, b)
            .into_iter()
            .any(|v| geom::encroaches(self.mesh.point(v), pa, pb, self.cfg.closed_diametral))
    }
}

fn key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    (a.min(b), a.max(b))
}

fn centroid(a: Point, b: Point, c: Point) -> Point {
    Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
}

/// Parameter along `p0 -> p1` where it meets the line through `q0`–`q1`.
fn crossing_distance(p0: Point, p1: Point, q0: Point, q1: Point) -> f64 {
    let (dx, dy) = (p1.x - p0.x, p1.y - p0.y);
    let (ex, ey) = (q1.x - q0.x, q1.y - q0.y);
    let den = dx * ey - dy * ex;
    if den == 0.0 {
        // collinear overlap: nearest endpoint
        let t = |q: Point| ((q.x - p0.x) * dx + (q.y - p0.y) * dy) / (dx * dx + dy * dy);
        return t(q0).min(t(q1)).max(0.0);
    }
    ((q0.x - p0.x) * ey - (q0.y - p0.y) * ex) / den
}

/// Checks a finished run: trace bookkeeping always, and for terminated
/// Ruppert runs the quality and conformity postconditions.
pub fn audit(outcome: &RefinementOutcome, cfg: &RefinementConfig) -> Vec<String> {
    let mut out = Vec::new();
    for (i, e) in outcome.trace.events.iter().enumerate() {
        if e.seq != i as u64 {
            out.push(format!("event {i} has seq {}", e.seq));
        }
        if e.kind != EventKind::SegmentSplit {
            continue;
        }
        let (Some(l), Some(len)) = (e.lineage, e.length) else {
            out.push(format!("split event {i} lacks lineage or length"));
            continue;
        };
        let Some(&l0) = outcome.lineage_lengths.get(l) else {
            out.push(format!("split event {i} names unknown lineage {l}"));
            continue;
        };
        let k = (l0 / len).log2().round();
        if k < 0.0 || ((l0 / 2f64.powf(k)) - len).abs() > 1e-9 * len {
            out.push(format!("split event {i}: length {len} is not {l0} halved a whole number of times"));
        }
    }
    if outcome.status != RunStatus::Terminated {
        return out;
    }
    let mesh = &outcome.mesh;
    for (t, _) in mesh.triangles() {
        let [a, b, c] = mesh.triangle_points(t);
        if let Ok(m) = geom::min_angle_deg(a, b, c) {
            if m < cfg.alpha_deg {
                out.push(format!("triangle {t} has min angle {m:.6} below {}", cfg.alpha_deg));
            }
        }
    }
    for v in mesh.audit() {
        out.push(format!("triangulation: {v:?}"));
    }
    // conformity is a Ruppert postcondition; Chew runs only promise quality
    if outcome.algorithm == Algorithm::Ruppert {
        for &(a, b) in mesh.constraints().keys() {
            let (pa, pb) = (mesh.point(a), mesh.point(b));
            let mid = pa.midpoint(&pb);
            for (w, v) in mesh.vertices().iter().enumerate() {
                if !v.alive || w == a || w == b || !geom::encroaches(v.point, pa, pb, cfg.closed_diametral) {
                    continue;
                }
                let hidden = mesh.constraints().keys().any(|&(p, q)| {
                    (p, q) != (a, b)
                        && p != w
                        && q != w
                        && geom::segments_cross_properly(mid, v.point, mesh.point(p), mesh.point(q))
                });
                if !hidden {
                    out.push(format!("subsegment {a}-{b} encroached by vertex {w}"));
                }
            }
        }
    }
    out
}
