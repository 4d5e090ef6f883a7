//! Constrained Delaunay triangulation with incremental insertion, segment
//! splitting and free-vertex deletion.
//!
//! Triangles are stored CCW with one neighbor slot per edge; neighbor `i` is
//! across the edge opposite vertex `i`. In-circle ties are broken by a
//! symbolic perturbation keyed on vertex ids, so the triangulation of a given
//! vertex and constraint set is unique. That makes insert-then-delete an
//! exact round trip and keeps runs on exactly transformed inputs identical.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Orientation, Point};
use crate::pslg::{Pslg, Violation};

pub type VertexId = usize;
pub type TriId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexTag {
    Input,
    SegmentMidpoint,
    Circumcenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Point,
    pub tag: VertexTag,
    pub alive: bool,
}

/// Bookkeeping for one constraint edge of the current subsegment set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsegment {
    /// Input segment this subsegment descends from.
    pub lineage: usize,
    /// Number of splits between the input segment and this subsegment.
    pub depth: u32,
}

#[derive(Debug, Clone)]
struct Tri {
    v: [VertexId; 3],
    nb: [Option<TriId>; 3],
    alive: bool,
}

/// Triangles removed (as vertex triples) and created (as ids) by one operation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChangeSet {
    pub removed: Vec<[VertexId; 3]>,
    pub created: Vec<TriId>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdtError {
    #[error("invalid input graph: {0:?}")]
    InvalidPslg(Vec<Violation>),
    #[error("input needs at least three non-collinear vertices")]
    TooFewVertices,
    #[error("segments do not enclose any region")]
    NotEnclosed,
    #[error("point coincides with existing vertex {0}")]
    DuplicateVertex(VertexId),
    #[error("point lies outside the triangulated domain")]
    OutsideDomain,
    #[error("non-finite point")]
    NonFinite,
    #[error("edge {0}-{1} is not a constraint subsegment")]
    NotAConstraint(VertexId, VertexId),
    #[error("vertex {0} is not a live free vertex (tag {1:?})")]
    NotFree(VertexId, VertexTag),
    #[error("vertex {0} lies on the domain boundary")]
    OnBoundary(VertexId),
    #[error("segment {0}-{1} passes through vertex {2}")]
    VertexOnSegment(VertexId, VertexId, VertexId),
    #[error("segment {0}-{1} crosses constraint {2}-{3}")]
    SegmentsCross(VertexId, VertexId, VertexId, VertexId),
    #[error("internal triangulation error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside(TriId),
    /// On the edge opposite vertex slot `usize` of the triangle.
    OnEdge(TriId, usize),
    OnVertex(VertexId),
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditViolation {
    NotCcw(TriId),
    AsymmetricAdjacency(TriId, usize),
    MissingConstraint(VertexId, VertexId),
    NotDelaunay { triangle: [VertexId; 3], vertex: VertexId },
}

fn key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Vertex>,
    tris: Vec<Tri>,
    free_slots: Vec<TriId>,
    constraints: BTreeMap<(VertexId, VertexId), Subsegment>,
    vertex_tri: Vec<Option<TriId>>,
    hint: TriId,
}

impl Triangulation {
    /// Constrained Delaunay triangulation of `pslg`. Triangles outside the
    /// region enclosed by segments, and inside holes, are removed. A graph
    /// with no segments yields the Delaunay triangulation of its points.
    pub fn build(pslg: &Pslg) -> Result<Self, CdtError> {
        let violations = pslg.validate();
        if !violations.is_empty() {
            return Err(CdtError::InvalidPslg(violations));
        }
        let pts = &pslg.vertices;
        let n = pts.len();
        let base = (0..n).find_map(|i| {
            (i + 1..n)
                .find_map(|j| (j + 1..n).find(|&k| geom::orient2d(pts[i], pts[j], pts[k]) != Orientation::Collinear))
        });
        if n < 3 || base.is_none() {
            return Err(CdtError::TooFewVertices);
        }

        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pts {
            lo_x = lo_x.min(p.x);
            lo_y = lo_y.min(p.y);
            hi_x = hi_x.max(p.x);
            hi_y = hi_y.max(p.y);
        }
        let (cx, cy) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);
        let s = 1e3 * (hi_x - lo_x).max(hi_y - lo_y).max(f64::MIN_POSITIVE);

        let mut t = Triangulation {
            vertices: Vec::with_capacity(n + 3),
            tris: Vec::new(),
            free_slots: Vec::new(),
            constraints: BTreeMap::new(),
            vertex_tri: Vec::new(),
            hint: 0,
        };
        for p in pts {
            t.push_vertex(*p, VertexTag::Input);
        }
        let sup = [
            t.push_vertex(Point::new(cx - 3.0 * s, cy - 2.0 * s), VertexTag::Input),
            t.push_vertex(Point::new(cx + 3.0 * s, cy - 2.0 * s), VertexTag::Input),
            t.push_vertex(Point::new(cx, cy + 4.0 * s), VertexTag::Input),
        ];
        t.tris.push(Tri { v: sup, nb: [None; 3], alive: true });
        for &v in &sup {
            t.vertex_tri[v] = Some(0);
        }

        for (v, &p) in pts.iter().enumerate().take(n) {
            match t.locate(p, None) {
                Location::Inside(tri) => {
                    t.cavity_insert(v, vec![tri], None)?;
                }
                Location::OnEdge(tri, i) => {
                    let mut seeds = vec![tri];
                    seeds.extend(t.tris[tri].nb[i]);
                    t.cavity_insert(v, seeds, None)?;
                }
                Location::OnVertex(_) | Location::Outside => {
                    return Err(CdtError::Internal(format!("could not place input vertex {v}")));
                }
            }
        }

        for (i, seg) in pslg.segments.iter().enumerate() {
            let [a, b] = seg.endpoints;
            let info = Subsegment { lineage: seg.parent.unwrap_or(i), depth: 0 };
            t.insert_constraint(a, b, info)?;
        }

        // carve away everything reachable from the super triangle or a hole
        // without crossing a constraint
        let mut doomed: HashSet<TriId> = HashSet::new();
        let mut stack: Vec<TriId> = Vec::new();
        for (id, tri) in t.tris.iter().enumerate() {
            if tri.alive && tri.v.iter().any(|v| sup.contains(v)) {
                stack.push(id);
            }
        }
        if !pslg.segments.is_empty() {
            for h in &pslg.holes {
                match t.locate(*h, None) {
                    Location::Inside(tri) | Location::OnEdge(tri, _) => stack.push(tri),
                    _ => {}
                }
            }
        }
        let flood = !pslg.segments.is_empty();
        while let Some(id) = stack.pop() {
            if !doomed.insert(id) || !flood {
                continue;
            }
            for i in 0..3 {
                let (a, b) = t.edge(id, i);
                if t.constraints.contains_key(&key(a, b)) {
                    continue;
                }
                if let Some(nb) = t.tris[id].nb[i] {
                    if !doomed.contains(&nb) {
                        stack.push(nb);
                    }
                }
            }
        }
        let mut doomed: Vec<TriId> = doomed.into_iter().collect();
        doomed.sort_unstable();
        for &id in &doomed {
            t.tris[id].alive = false;
        }
        for id in 0..t.tris.len() {
            if !t.tris[id].alive {
                continue;
            }
            for i in 0..3 {
                if let Some(nb) = t.tris[id].nb[i] {
                    if !t.tris[nb].alive {
                        t.tris[id].nb[i] = None;
                    }
                }
            }
        }
        t.free_slots = doomed.into_iter().rev().collect();
        for v in sup {
            t.vertices[v].alive = false;
        }
        t.rebuild_vertex_index();
        if t.num_triangles() == 0 {
            return Err(CdtError::NotEnclosed);
        }
        for v in 0..n {
            if t.vertex_tri[v].is_none() {
                t.vertices[v].alive = false;
            }
        }
        t.hint = t.tris.iter().position(|x| x.alive).unwrap_or(0);
        Ok(t)
    }

    fn push_vertex(&mut self, p: Point, tag: VertexTag) -> VertexId {
        self.vertices.push(Vertex { point: p, tag, alive: true });
        self.vertex_tri.push(None);
        self.vertices.len() - 1
    }

    fn rebuild_vertex_index(&mut self) {
        for slot in self.vertex_tri.iter_mut() {
            *slot = None;
        }
        for (id, tri) in self.tris.iter().enumerate() {
            if tri.alive {
                for &v in &tri.v {
                    self.vertex_tri[v] = Some(id);
                }
            }
        }
    }

    pub fn point(&self, v: VertexId) -> Point {
        self.vertices[v].point
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    /// All vertex slots, including deleted ones (`alive == false`).
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn num_live_vertices(&self) -> usize {
        self.vertices.iter().filter(|v| v.alive).count()
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.iter().filter(|t| t.alive).count()
    }

    /// Live triangles as `(id, CCW vertex triple)`.
    pub fn triangles(&self) -> impl Iterator<Item = (TriId, [VertexId; 3])> + '_ {
        self.tris.iter().enumerate().filter(|(_, t)| t.alive).map(|(i, t)| (i, t.v))
    }

    pub fn triangle(&self, t: TriId) -> Option<[VertexId; 3]> {
        self.tris.get(t).filter(|x| x.alive).map(|x| x.v)
    }

    pub fn triangle_points(&self, t: TriId) -> [Point; 3] {
        let v = self.tris[t].v;
        [self.point(v[0]), self.point(v[1]), self.point(v[2])]
    }

    pub fn neighbor(&self, t: TriId, i: usize) -> Option<TriId> {
        self.tris[t].nb[i]
    }

    /// Canonical triangle set: each triple rotated to start at its smallest id.
    pub fn triangle_set(&self) -> BTreeSet<[VertexId; 3]> {
        self.triangles().map(|(_, v)| canonical(v)).collect()
    }

    /// Current constraint subsegments keyed by (smaller id, larger id).
    pub fn constraints(&self) -> &BTreeMap<(VertexId, VertexId), Subsegment> {
        &self.constraints
    }

    pub fn is_constraint(&self, a: VertexId, b: VertexId) -> bool {
        self.constraints.contains_key(&key(a, b))
    }

    /// Endpoints of the edge opposite vertex slot `i`, in CCW order.
    fn edge(&self, t: TriId, i: usize) -> (VertexId, VertexId) {
        let v = self.tris[t].v;
        (v[(i + 1) % 3], v[(i + 2) % 3])
    }

    /// Live triangles incident to `v`, in rotational order.
    pub fn triangles_around(&self, v: VertexId) -> Vec<TriId> {
        let Some(start) = self.vertex_tri[v] else {
            return Vec::new();
        };
        let mut out = vec![start];
        let mut cur = start;
        loop {
            let k = slot_of(&self.tris[cur].v, v);
            match self.tris[cur].nb[(k + 1) % 3] {
                Some(n) if n == start => return out,
                Some(n) => {
                    out.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        // open fan: walk the other way from the start
        let mut cur = start;
        let mut back = Vec::new();
        loop {
            let k = slot_of(&self.tris[cur].v, v);
            match self.tris[cur].nb[(k + 2) % 3] {
                Some(n) => {
                    back.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        back.reverse();
        back.extend(out);
        back
    }

    /// Triangle having the directed edge `a -> b`, with the slot opposite it.
    pub fn find_directed_edge(&self, a: VertexId, b: VertexId) -> Option<(TriId, usize)> {
        self.triangles_around(a).into_iter().find_map(|t| {
            let v = self.tris[t].v;
            let k = slot_of(&v, a);
            (v[(k + 1) % 3] == b).then_some((t, (k + 2) % 3))
        })
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.find_directed_edge(a, b).is_some() || self.find_directed_edge(b, a).is_some()
    }

    /// Vertices opposite the edge `a`–`b` in its (one or two) triangles.
    pub fn opposite_apexes(&self, a: VertexId, b: VertexId) -> Vec<VertexId> {
        let mut out = Vec::new();
        for (p, q) in [(a, b), (b, a)] {
            if let Some((t, i)) = self.find_directed_edge(p, q) {
                out.push(self.tris[t].v[i]);
            }
        }
        out
    }

    /// In-circle test with symbolic perturbation: never reports "on".
    /// `tri` must be CCW.
    fn in_circumcircle(&self, tri: [VertexId; 3], d: VertexId) -> bool {
        let [a, b, c] = tri;
        let (pa, pb, pc, pd) = (self.point(a), self.point(b), self.point(c), self.point(d));
        match geom::incircle(pa, pb, pc, pd) {
            Ok(geom::CirclePosition::Inside) => return true,
            Ok(geom::CirclePosition::Outside) => return false,
            _ => {}
        }
        // Each vertex's lifted height is raised by an infinitesimal that
        // shrinks with its id; the first non-vanishing coefficient decides.
        let sign = |o: Orientation| match o {
            Orientation::CounterClockwise => 1,
            Orientation::Clockwise => -1,
            Orientation::Collinear => 0,
        };
        let mut terms = [
            (a, sign(geom::orient2d(pd, pb, pc))),
            (b, sign(geom::orient2d(pa, pd, pc))),
            (c, sign(geom::orient2d(pa, pb, pd))),
            (d, -sign(geom::orient2d(pa, pb, pc))),
        ];
        terms.sort_by_key(|&(id, _)| id);
        terms.iter().find(|(_, s)| *s != 0).is_some_and(|&(_, s)| s > 0)
    }

    /// Walks toward `p` from `start` (or the last touched triangle).
    pub fn locate(&self, p: Point, start: Option<TriId>) -> Location {
        let mut cur = start.filter(|&t| self.tris.get(t).is_some_and(|x| x.alive)).unwrap_or(self.hint);
        if !self.tris.get(cur).is_some_and(|x| x.alive) {
            match self.tris.iter().position(|x| x.alive) {
                Some(t) => cur = t,
                None => return Location::Outside,
            }
        }
        let limit = 4 * self.tris.len() + 16;
        'walk: for step in 0..limit {
            for k in 0..3 {
                let i = (k + step) % 3;
                let (a, b) = self.edge(cur, i);
                if geom::orient2d(self.point(a), self.point(b), p) == Orientation::Clockwise {
                    match self.tris[cur].nb[i] {
                        Some(n) => {
                            cur = n;
                            continue 'walk;
                        }
                        None => break 'walk,
                    }
                }
            }
            return self.classify_in(cur, p);
        }
        // boundary reached or walk did not settle: scan
        for (id, tri) in self.tris.iter().enumerate() {
            if !tri.alive {
                continue;
            }
            let inside = (0..3).all(|i| {
                let (a, b) = self.edge(id, i);
                geom::orient2d(self.point(a), self.point(b), p) != Orientation::Clockwise
            });
            if inside {
                return self.classify_in(id, p);
            }
        }
        Location::Outside
    }

    fn classify_in(&self, t: TriId, p: Point) -> Location {
        let v = self.tris[t].v;
        for &x in &v {
            if self.point(x) == p {
                return Location::OnVertex(x);
            }
        }
        for i in 0..3 {
            let (a, b) = self.edge(t, i);
            if geom::orient2d(self.point(a), self.point(b), p) == Orientation::Collinear {
                return Location::OnEdge(t, i);
            }
        }
        Location::Inside(t)
    }

    /// Inserts a vertex, restoring the constrained Delaunay property. A point
    /// landing exactly on a constraint edge splits that subsegment.
    pub fn insert_vertex(&mut self, p: Point, tag: VertexTag) -> Result<(VertexId, ChangeSet), CdtError> {
        self.insert_vertex_from(p, tag, None)
    }

    /// As [`insert_vertex`](Self::insert_vertex), starting the point walk at `start`.
    pub fn insert_vertex_from(
        &mut self,
        p: Point,
        tag: VertexTag,
        start: Option<TriId>,
    ) -> Result<(VertexId, ChangeSet), CdtError> {
        if !p.is_finite() {
            return Err(CdtError::NonFinite);
        }
        match self.locate(p, start) {
            Location::OnVertex(v) => Err(CdtError::DuplicateVertex(v)),
            Location::Outside => Err(CdtError::OutsideDomain),
            Location::Inside(t) => {
                let v = self.push_vertex(p, tag);
                let cs = self.cavity_insert(v, vec![t], None)?;
                Ok((v, cs))
            }
            Location::OnEdge(t, i) => {
                let (a, b) = self.edge(t, i);
                if self.is_constraint(a, b) {
                    return self.insert_on_constraint(a, b, p, tag);
                }
                let mut seeds = vec![t];
                seeds.extend(self.tris[t].nb[i]);
                let v = self.push_vertex(p, tag);
                let skip = self.tris[t].nb[i].is_none().then_some(key(a, b));
                let cs = self.cavity_insert(v, seeds, skip)?;
                Ok((v, cs))
            }
        }
    }

    /// Splits the constraint subsegment `a`–`b` at its midpoint. Returns the
    /// new vertex; the children inherit the lineage with depth + 1.
    pub fn split_segment(&mut self, a: VertexId, b: VertexId) -> Result<(VertexId, ChangeSet), CdtError> {
        if !self.is_constraint(a, b) {
            return Err(CdtError::NotAConstraint(a, b));
        }
        let m = self.point(a).midpoint(&self.point(b));
        self.insert_on_constraint(a, b, m, VertexTag::SegmentMidpoint)
    }

    fn insert_on_constraint(
        &mut self,
        a: VertexId,
        b: VertexId,
        p: Point,
        tag: VertexTag,
    ) -> Result<(VertexId, ChangeSet), CdtError> {
        let k = key(a, b);
        let info = *self.constraints.get(&k).ok_or(CdtError::NotAConstraint(a, b))?;
        for x in [a, b] {
            if self.point(x) == p {
                return Err(CdtError::DuplicateVertex(x));
            }
        }
        let mut seeds = Vec::new();
        for (s, e) in [(a, b), (b, a)] {
            if let Some((t, _)) = self.find_directed_edge(s, e) {
                seeds.push(t);
            }
        }
        if seeds.is_empty() {
            return Err(CdtError::Internal(format!("constraint {a}-{b} is not an edge")));
        }
        let v = self.push_vertex(p, tag);
        let cs = self.cavity_insert(v, seeds, Some(k))?;
        self.constraints.remove(&k);
        let child = Subsegment { lineage: info.lineage, depth: info.depth + 1 };
        self.constraints.insert(key(a, v), child);
        self.constraints.insert(key(v, b), child);
        Ok((v, cs))
    }

    /// Bowyer-Watson step: grows the cavity of triangles whose circumcircles
    /// contain `v` without crossing constraints, then fans it from `v`.
    /// `split` names an edge `v` lies on that is being removed.
    fn cavity_insert(
        &mut self,
        v: VertexId,
        seeds: Vec<TriId>,
        split: Option<(VertexId, VertexId)>,
    ) -> Result<ChangeSet, CdtError> {
        let mut in_cavity: HashSet<TriId> = seeds.iter().copied().collect();
        let mut cavity = seeds.clone();
        let mut stack = seeds;
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let Some(n) = self.tris[t].nb[i] else { continue };
                if in_cavity.contains(&n) {
                    continue;
                }
                let (a, b) = self.edge(t, i);
                if self.constraints.contains_key(&key(a, b)) && Some(key(a, b)) != split {
                    continue;
                }
                if self.in_circumcircle(self.tris[n].v, v) {
                    in_cavity.insert(n);
                    cavity.push(n);
                    stack.push(n);
                }
            }
        }
        let p = self.point(v);
        let mut fan = Vec::new();
        for &t in &cavity {
            for i in 0..3 {
                if self.tris[t].nb[i].is_some_and(|n| in_cavity.contains(&n)) {
                    continue;
                }
                let (a, b) = self.edge(t, i);
                if Some(key(a, b)) == split {
                    continue;
                }
                if geom::orient2d(self.point(a), self.point(b), p) != Orientation::CounterClockwise {
                    return Err(CdtError::Internal(format!("cavity for vertex {v} is not star-shaped")));
                }
                fan.push([a, b, v]);
            }
        }
        Ok(self.replace(&cavity, &fan))
    }

    /// Swaps a set of triangles for a new set covering the same region and
    /// relinks adjacency along the shared boundary.
    fn replace(&mut self, removed: &[TriId], new: &[[VertexId; 3]]) -> ChangeSet {
        let gone: HashSet<TriId> = removed.iter().copied().collect();
        let mut boundary: HashMap<(VertexId, VertexId), Option<TriId>> = HashMap::new();
        let mut removed_tris = Vec::with_capacity(removed.len());
        for &t in removed {
            for i in 0..3 {
                let n = self.tris[t].nb[i];
                if n.is_none_or(|n| !gone.contains(&n)) {
                    boundary.insert(self.edge(t, i), n);
                }
            }
            removed_tris.push(self.tris[t].v);
            for &x in &self.tris[t].v {
                self.vertex_tri[x] = None;
            }
            self.tris[t].alive = false;
            self.free_slots.push(t);
        }

        let mut created = Vec::with_capacity(new.len());
        for &v in new {
            let tri = Tri { v, nb: [None; 3], alive: true };
            let id = match self.free_slots.pop() {
                Some(id) => {
                    self.tris[id] = tri;
                    id
                }
                None => {
                    self.tris.push(tri);
                    self.tris.len() - 1
                }
            };
            created.push(id);
        }

        let mut edges: HashMap<(VertexId, VertexId), (TriId, usize)> = HashMap::new();
        for &id in &created {
            for i in 0..3 {
                edges.insert(self.edge(id, i), (id, i));
            }
        }
        for &id in &created {
            for i in 0..3 {
                let (a, b) = self.edge(id, i);
                if let Some(&(twin, _)) = edges.get(&(b, a)) {
                    self.tris[id].nb[i] = Some(twin);
                } else if let Some(&outside) = boundary.get(&(a, b)) {
                    self.tris[id].nb[i] = outside;
                    if let Some(o) = outside {
                        let ov = self.tris[o].v;
                        let j = (0..3).find(|&j| ov[(j + 1) % 3] == b && ov[(j + 2) % 3] == a);
                        if let Some(j) = j {
                            self.tris[o].nb[j] = Some(id);
                        }
                    }
                }
            }
            for &x in &self.tris[id].v {
                self.vertex_tri[x] = Some(id);
            }
        }
        if let Some(&last) = created.last() {
            self.hint = last;
        }
        // vertices left without a triangle (a deleted vertex) keep `None`;
        // others may point at a neighbor outside the replaced set
        for t in &removed_tris {
            for &x in t {
                if self.vertex_tri[x].is_none() && self.vertices[x].alive {
                    self.vertex_tri[x] = self.find_any_triangle(x, &boundary);
                }
            }
        }
        ChangeSet { removed: removed_tris, created }
    }

    fn find_any_triangle(&self, x: VertexId, boundary: &HashMap<(VertexId, VertexId), Option<TriId>>) -> Option<TriId> {
        boundary
            .iter()
            .filter(|((a, b), _)| *a == x || *b == x)
            .filter_map(|(_, n)| *n)
            .filter(|&n| self.tris[n].alive)
            .min()
    }

    /// Removes a free (circumcenter) vertex and retriangulates its star.
    pub fn delete_vertex(&mut self, v: VertexId) -> Result<ChangeSet, CdtError> {
        let vert = self.vertices.get(v).ok_or(CdtError::NotFree(v, VertexTag::Input))?;
        if !vert.alive || vert.tag != VertexTag::Circumcenter {
            return Err(CdtError::NotFree(v, vert.tag));
        }
        if self.constraints.keys().any(|&(a, b)| a == v || b == v) {
            return Err(CdtError::NotFree(v, vert.tag));
        }
        let start = self.vertex_tri[v].ok_or(CdtError::Internal(format!("vertex {v} has no triangle")))?;
        let mut star = Vec::new();
        let mut ring = Vec::new();
        let mut cur = start;
        loop {
            let k = slot_of(&self.tris[cur].v, v);
            star.push(cur);
            ring.push(self.tris[cur].v[(k + 1) % 3]);
            match self.tris[cur].nb[(k + 1) % 3] {
                Some(n) if n == start => break,
                Some(n) => cur = n,
                None => return Err(CdtError::OnBoundary(v)),
            }
        }
        let fill = self.triangulate_polygon(&ring)?;
        let cs = self.replace(&star, &fill);
        self.vertices[v].alive = false;
        self.vertex_tri[v] = None;
        Ok(cs)
    }

    /// Constrained Delaunay triangulation of a simple CCW polygon: ear
    /// clipping followed by Lawson flips of the interior diagonals.
    fn triangulate_polygon(&self, poly: &[VertexId]) -> Result<Vec<[VertexId; 3]>, CdtError> {
        let mut ring = poly.to_vec();
        let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
        while ring.len() > 3 {
            let n = ring.len();
            let ear = (0..n).find(|&i| {
                let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
                let (pa, pb, pc) = (self.point(a), self.point(b), self.point(c));
                if geom::orient2d(pa, pb, pc) != Orientation::CounterClockwise {
                    return false;
                }
                ring.iter().all(|&w| {
                    if w == a || w == b || w == c {
                        return true;
                    }
                    let pw = self.point(w);
                    !(geom::orient2d(pa, pb, pw) != Orientation::Clockwise
                        && geom::orient2d(pb, pc, pw) != Orientation::Clockwise
                        && geom::orient2d(pc, pa, pw) != Orientation::Clockwise)
                })
            });
            let Some(i) = ear else {
                return Err(CdtError::Internal("polygon has no ear".into()));
            };
            out.push([ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]]);
            ring.remove(i);
        }
        if ring.len() == 3 {
            let [a, b, c] = [ring[0], ring[1], ring[2]];
            if geom::orient2d(self.point(a), self.point(b), self.point(c)) != Orientation::CounterClockwise {
                return Err(CdtError::Internal("degenerate final ear".into()));
            }
            out.push([a, b, c]);
        }

        loop {
            let mut edges: HashMap<(VertexId, VertexId), (usize, usize)> = HashMap::new();
            for (ti, t) in out.iter().enumerate() {
                for i in 0..3 {
                    edges.insert((t[(i + 1) % 3], t[(i + 2) % 3]), (ti, i));
                }
            }
            let mut flip = None;
            'search: for (ti, t) in out.iter().enumerate() {
                for i in 0..3 {
                    let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                    let Some(&(tj, j)) = edges.get(&(b, a)) else { continue };
                    let (c, d) = (t[i], out[tj][j]);
                    if !self.in_circumcircle(*t, d) {
                        continue;
                    }
                    let (pc, pa, pd, pb) = (self.point(c), self.point(a), self.point(d), self.point(b));
                    if geom::orient2d(pc, pa, pd) == Orientation::CounterClockwise
                        && geom::orient2d(pd, pb, pc) == Orientation::CounterClockwise
                    {
                        flip = Some((ti, tj, [c, a, d], [d, b, c]));
                        break 'search;
                    }
                }
            }
            match flip {
                Some((ti, tj, x, y)) => {
                    out[ti] = x;
                    out[tj] = y;
                }
                None => break,
            }
        }
        Ok(out)
    }

    /// Forces `a`–`b` into the triangulation as a constraint edge.
    fn insert_constraint(&mut self, a: VertexId, b: VertexId, info: Subsegment) -> Result<(), CdtError> {
        if self.has_edge(a, b) {
            self.constraints.insert(key(a, b), info);
            return Ok(());
        }
        let (pa, pb) = (self.point(a), self.point(b));
        let ahead = |q: Point| (q.x - pa.x) * (pb.x - pa.x) + (q.y - pa.y) * (pb.y - pa.y) > 0.0;

        let mut start = None;
        for t in self.triangles_around(a) {
            let v = self.tris[t].v;
            let k = slot_of(&v, a);
            let (r, l) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            let (pr, pl) = (self.point(r), self.point(l));
            let or = geom::orient2d(pa, pr, pb);
            let ol = geom::orient2d(pa, pl, pb);
            for (x, o, px) in [(r, or, pr), (l, ol, pl)] {
                if o == Orientation::Collinear && ahead(px) {
                    return Err(CdtError::VertexOnSegment(a, b, x));
                }
            }
            if or == Orientation::CounterClockwise && ol == Orientation::Clockwise {
                start = Some((t, r, l));
                break;
            }
        }
        let (t0, mut right, mut left) =
            start.ok_or(CdtError::Internal(format!("no triangle at {a} faces toward {b}")))?;

        let mut crossed = vec![t0];
        let mut left_chain = vec![left];
        let mut right_chain = vec![right];
        let mut cur = t0;
        loop {
            if self.is_constraint(right, left) {
                return Err(CdtError::SegmentsCross(a, b, right, left));
            }
            let v = self.tris[cur].v;
            let i = (0..3)
                .find(|&i| v[(i + 1) % 3] == right && v[(i + 2) % 3] == left)
                .ok_or(CdtError::Internal("segment walk lost its edge".into()))?;
            let n = self.tris[cur].nb[i].ok_or(CdtError::Internal("segment walk left the mesh".into()))?;
            crossed.push(n);
            let nv = self.tris[n].v;
            let x = nv.iter().copied().find(|&x| x != right && x != left).unwrap();
            if x == b {
                break;
            }
            match geom::orient2d(pa, pb, self.point(x)) {
                Orientation::CounterClockwise => {
                    left_chain.push(x);
                    left = x;
                }
                Orientation::Clockwise => {
                    right_chain.push(x);
                    right = x;
                }
                Orientation::Collinear => return Err(CdtError::VertexOnSegment(a, b, x)),
            }
            cur = n;
        }

        let mut left_poly = vec![a, b];
        left_poly.extend(left_chain.iter().rev());
        let mut right_poly = vec![b, a];
        right_poly.extend(right_chain.iter());
        let mut fill = self.triangulate_polygon(&left_poly)?;
        fill.extend(self.triangulate_polygon(&right_poly)?);
        self.replace(&crossed, &fill);
        self.constraints.insert(key(a, b), info);
        Ok(())
    }

    /// Checks orientation, adjacency symmetry, constraint presence, and the
    /// constrained empty-circle property against every live vertex.
    pub fn audit(&self) -> Vec<AuditViolation> {
        let mut out = Vec::new();
        for (id, v) in self.triangles() {
            let [a, b, c] = v.map(|x| self.point(x));
            if geom::orient2d(a, b, c) != Orientation::CounterClockwise {
                out.push(AuditViolation::NotCcw(id));
            }
            for i in 0..3 {
                if let Some(n) = self.tris[id].nb[i] {
                    let (p, q) = self.edge(id, i);
                    let back = self.tris[n].alive
                        && (0..3).any(|j| self.tris[n].nb[j] == Some(id) && self.edge(n, j) == (q, p));
                    if !back {
                        out.push(AuditViolation::AsymmetricAdjacency(id, i));
                    }
                }
            }
        }
        for &(a, b) in self.constraints.keys() {
            if !self.has_edge(a, b) {
                out.push(AuditViolation::MissingConstraint(a, b));
            }
        }
        for (_, tri) in self.triangles() {
            let [a, b, c] = tri.map(|x| self.point(x));
            let centroid = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            for (w, vert) in self.vertices.iter().enumerate() {
                if !vert.alive || tri.contains(&w) {
                    continue;
                }
                if geom::incircle(a, b, c, vert.point) != Ok(geom::CirclePosition::Inside) {
                    continue;
                }
                if !self.blocked(centroid, w) {
                    out.push(AuditViolation::NotDelaunay { triangle: tri, vertex: w });
                }
            }
        }
        out
    }

    /// Is the segment from `from` to vertex `w` obstructed by a constraint?
    fn blocked(&self, from: Point, w: VertexId) -> bool {
        let pw = self.point(w);
        self.constraints
            .keys()
            .any(|&(p, q)| p != w && q != w && geom::segments_intersect(from, pw, self.point(p), self.point(q)))
    }

    /// V - E + F over the triangulated domain (1 for a disk-like domain).
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = HashSet::new();
        let mut edges = HashSet::new();
        let mut faces = 0i64;
        for (_, v) in self.triangles() {
            faces += 1;
            for i in 0..3 {
                used.insert(v[i]);
                edges.insert(key(v[i], v[(i + 1) % 3]));
            }
        }
        used.len() as i64 - edges.len() as i64 + faces
    }
}

fn slot_of(v: &[VertexId; 3], x: VertexId) -> usize {
    v.iter().position(|&y| y == x).expect("vertex not in triangle")
}

/// Rotates a CCW triple so that its smallest id comes first.
pub fn canonical(v: [VertexId; 3]) -> [VertexId; 3] {
    let k = (0..3).min_by_key(|&i| v[i]).unwrap();
    [v[k], v[(k + 1) % 3], v[(k + 2) % 3]]
}
