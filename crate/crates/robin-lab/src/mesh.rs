//! Conforming triangulations of convex domains with explicit oriented
//! boundary data.
//!
//! The meshing strategy is deterministic and dependency-free: sample the
//! boundary at the target spacing, add an interior lattice with a clearance
//! band, triangulate by incremental Delaunay (Bowyer-Watson with a walking
//! point locator), and run capped Laplacian smoothing passes with
//! re-triangulation. On convex domains the Delaunay triangulation of the
//! boundary ring plus interior points covers the boundary polygon exactly,
//! so no constraint enforcement step is needed.
//!
//! Every mesh keeps a [`BoundaryCurve`] and per-node boundary parameters so
//! that uniform (red) refinement can place new boundary nodes back on the
//! true domain boundary.

use crate::geometry::{ConvexPolygon, Domain};
use crate::util::{add, cross, dist, dot, norm, scale, sub, tri_area, unit, unit_perp, Pt};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Oriented boundary edge: from node `a` to node `b` along the loop, with
/// outward unit normal and chord length.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub normal: Pt,
    pub len: f64,
}

/// Description of the true domain boundary carried by a mesh, so that
/// refinement can project new boundary nodes onto it. The meaning of the
/// node parameter depends on the variant: arclength for polygons and
/// polygon offsets, support angle for trigonometric bodies.
#[derive(Clone, Debug)]
pub enum BoundaryCurve {
    Polygon { verts: Vec<Pt>, cum: Vec<f64> },
    PolygonOffset { pieces: Vec<OffsetPiece>, total: f64 },
    Trig { ac: Vec<f64>, as_: Vec<f64> },
}

/// One piece of an offset-polygon boundary: a straight edge segment or a
/// corner arc, with its arclength interval [s0, s0 + len).
#[derive(Clone, Debug)]
pub enum OffsetPiece {
    Seg { a: Pt, b: Pt, s0: f64, len: f64 },
    Arc { center: Pt, r: f64, ang0: f64, sweep: f64, s0: f64, len: f64 },
}

impl BoundaryCurve {
    /// Period of the boundary parameter.
    pub fn period(&self) -> f64 {
        match self {
            BoundaryCurve::Polygon { cum, .. } => *cum.last().unwrap(),
            BoundaryCurve::PolygonOffset { total, .. } => *total,
            BoundaryCurve::Trig { .. } => 2.0 * PI,
        }
    }

    /// Point on the true boundary at a given parameter.
    pub fn point(&self, t: f64) -> Pt {
        let period = self.period();
        let t = t.rem_euclid(period);
        match self {
            BoundaryCurve::Polygon { verts, cum } => {
                let i = match cum.binary_search_by(|c| c.partial_cmp(&t).unwrap()) {
                    Ok(i) => i.min(verts.len() - 1),
                    Err(i) => i - 1,
                };
                let a = verts[i];
                let b = verts[(i + 1) % verts.len()];
                let l = cum[i + 1] - cum[i];
                let s = if l > 0.0 { (t - cum[i]) / l } else { 0.0 };
                add(a, scale(sub(b, a), s))
            }
            BoundaryCurve::PolygonOffset { pieces, .. } => {
                for p in pieces {
                    let (s0, len) = match p {
                        OffsetPiece::Seg { s0, len, .. } => (*s0, *len),
                        OffsetPiece::Arc { s0, len, .. } => (*s0, *len),
                    };
                    if t < s0 + len || std::ptr::eq(p, pieces.last().unwrap()) {
                        let local = ((t - s0) / len).clamp(0.0, 1.0);
                        return match p {
                            OffsetPiece::Seg { a, b, .. } => add(*a, scale(sub(*b, *a), local)),
                            OffsetPiece::Arc { center, r, ang0, sweep, .. } => {
                                let ang = ang0 + local * sweep;
                                add(*center, scale(unit(ang), *r))
                            }
                        };
                    }
                }
                unreachable!("parameter within period must land in a piece")
            }
            BoundaryCurve::Trig { ac, as_ } => {
                let (h, hp) = eval_trig_h_hp(ac, as_, t);
                add(scale(unit(t), h), scale(unit_perp(t), hp))
            }
        }
    }

    /// Parameter midway between t1 and t2 walking forward from t1.
    pub fn mid_param(&self, t1: f64, t2: f64) -> f64 {
        let period = self.period();
        let mut d = t2 - t1;
        if d < 0.0 {
            d += period;
        }
        (t1 + 0.5 * d).rem_euclid(period)
    }

    /// Boundary curvature at a parameter; None for polygon boundaries
    /// (curvature is a corner measure there, not a function).
    pub fn curvature(&self, t: f64) -> Option<f64> {
        let period = self.period();
        let t = t.rem_euclid(period);
        match self {
            BoundaryCurve::Polygon { .. } => None,
            BoundaryCurve::PolygonOffset { pieces, .. } => {
                for p in pieces {
                    let (s0, len) = match p {
                        OffsetPiece::Seg { s0, len, .. } => (*s0, *len),
                        OffsetPiece::Arc { s0, len, .. } => (*s0, *len),
                    };
                    if t < s0 + len || std::ptr::eq(p, pieces.last().unwrap()) {
                        return Some(match p {
                            OffsetPiece::Seg { .. } => 0.0,
                            OffsetPiece::Arc { r, .. } => 1.0 / r,
                        });
                    }
                }
                unreachable!()
            }
            BoundaryCurve::Trig { ac, as_ } => {
                let mut h = 0.0;
                let mut hpp = 0.0;
                for k in 0..ac.len() {
                    let kf = k as f64;
                    let (s, c) = (kf * t).sin_cos();
                    h += ac[k] * c + as_[k] * s;
                    hpp += kf * kf * (-ac[k] * c - as_[k] * s);
                }
                Some(1.0 / (h + hpp))
            }
        }
    }
}

fn eval_trig_h_hp(ac: &[f64], as_: &[f64], theta: f64) -> (f64, f64) {
    let mut h = 0.0;
    let mut hp = 0.0;
    for k in 0..ac.len() {
        let kf = k as f64;
        let (s, c) = (kf * theta).sin_cos();
        h += ac[k] * c + as_[k] * s;
        hp += kf * (-ac[k] * s + as_[k] * c);
    }
    (h, hp)
}

/// Conforming triangulation with oriented boundary data.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub nodes: Vec<Pt>,
    /// Counterclockwise triangles.
    pub tris: Vec<[usize; 3]>,
    /// Boundary edges ordered along the loop; edge i connects
    /// `boundary_loop[i]` to `boundary_loop[(i+1) % nb]`.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Cyclic ordering of the boundary nodes (counterclockwise).
    pub boundary_loop: Vec<usize>,
    /// Boundary-curve parameter of each loop node.
    pub boundary_param: Vec<f64>,
    pub curve: BoundaryCurve,
    pub h_target: f64,
}

impl TriMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tris[t];
        tri_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.tris.len()).map(|t| self.tri_area(t)).sum()
    }

    /// Accumulated chord arclength at each loop node, with the total
    /// perimeter appended (length nb + 1).
    pub fn boundary_arclengths(&self) -> Vec<f64> {
        let nb = self.boundary_loop.len();
        let mut s = Vec::with_capacity(nb + 1);
        s.push(0.0);
        for e in 0..nb {
            s.push(s[e] + self.boundary_edges[e].len);
        }
        s
    }

    /// Full invariant check; used after construction and refinement and by
    /// the mesh-file reader.
    pub fn validate(&self) -> Result<()> {
        let nv = self.nodes.len();
        for (i, t) in self.tris.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::MeshInvariant(format!("triangle {i} has out-of-range node")));
            }
            if self.tri_area(i) <= 0.0 {
                return Err(Error::MeshInvariant(format!(
                    "triangle {i} has non-positive area {}",
                    self.tri_area(i)
                )));
            }
        }
        let nb = self.boundary_loop.len();
        if nb < 3 || self.boundary_edges.len() != nb || self.boundary_param.len() != nb {
            return Err(Error::MeshInvariant("boundary loop arrays inconsistent".into()));
        }
        // boundary edges of the triangulation (edges with exactly one
        // adjacent triangle) must be exactly the loop edges
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &self.tris {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *count.entry(key).or_insert(0) += 1;
            }
        }
        let mut tri_boundary: Vec<(usize, usize)> =
            count.iter().filter(|(_, &c)| c == 1).map(|(&k, _)| k).collect();
        if count.values().any(|&c| c > 2) {
            return Err(Error::MeshInvariant("non-manifold edge".into()));
        }
        let mut loop_edges: Vec<(usize, usize)> = (0..nb)
            .map(|e| {
                let a = self.boundary_loop[e];
                let b = self.boundary_loop[(e + 1) % nb];
                (a.min(b), a.max(b))
            })
            .collect();
        tri_boundary.sort_unstable();
        loop_edges.sort_unstable();
        if tri_boundary != loop_edges {
            return Err(Error::MeshInvariant(
                "triangulation boundary does not match the stored loop".into(),
            ));
        }
        // outward normals: against adjacent triangle centroid
        let mut edge_tri: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, t) in self.tris.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                edge_tri.insert((a.min(b), a.max(b)), i);
            }
        }
        for (e, be) in self.boundary_edges.iter().enumerate() {
            let key = (be.a.min(be.b), be.a.max(be.b));
            let t = edge_tri[&key];
            let [i, j, k] = self.tris[t];
            let centroid = scale(add(add(self.nodes[i], self.nodes[j]), self.nodes[k]), 1.0 / 3.0);
            let mid = scale(add(self.nodes[be.a], self.nodes[be.b]), 0.5);
            if dot(be.normal, sub(centroid, mid)) >= 0.0 {
                return Err(Error::MeshInvariant(format!("boundary edge {e} normal points inward")));
            }
            let want = dist(self.nodes[be.a], self.nodes[be.b]);
            if (be.len - want).abs() > 1e-9 * (1.0 + want) {
                return Err(Error::MeshInvariant(format!("boundary edge {e} length mismatch")));
            }
        }
        // boundary nodes lie on the stored curve
        for (i, &nidx) in self.boundary_loop.iter().enumerate() {
            let p = self.curve.point(self.boundary_param[i]);
            if dist(p, self.nodes[nidx]) > 1e-8 * (1.0 + norm(p)) {
                return Err(Error::MeshInvariant(format!(
                    "boundary node {nidx} off the boundary curve"
                )));
            }
        }
        Ok(())
    }

    /// Builds a mesh from raw arrays, validating all invariants. The curve
    /// is taken to be the boundary polyline itself.
    pub fn from_raw(nodes: Vec<Pt>, tris: Vec<[usize; 3]>, h_target: f64) -> Result<TriMesh> {
        // recover the boundary loop from edges with a single adjacent triangle
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &tris {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                if a >= nodes.len() || b >= nodes.len() {
                    return Err(Error::MeshInvariant("triangle node out of range".into()));
                }
                let key = (a.min(b), a.max(b));
                *count.entry(key).or_insert(0) += 1;
            }
        }
        let mut nbr: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&(a, b), &c) in &count {
            if c == 1 {
                nbr.entry(a).or_default().push(b);
                nbr.entry(b).or_default().push(a);
            }
        }
        if nbr.is_empty() {
            return Err(Error::MeshInvariant("no boundary edges found".into()));
        }
        if nbr.values().any(|v| v.len() != 2) {
            return Err(Error::MeshInvariant("boundary is not a single closed loop".into()));
        }
        let start = *nbr.keys().next().unwrap();
        let mut loop_nodes = vec![start];
        let mut prev = start;
        let mut cur = nbr[&start][0];
        while cur != start {
            loop_nodes.push(cur);
            let nn = &nbr[&cur];
            let next = if nn[0] == prev { nn[1] } else { nn[0] };
            prev = cur;
            cur = next;
            if loop_nodes.len() > nodes.len() {
                return Err(Error::MeshInvariant("boundary loop does not close".into()));
            }
        }
        if loop_nodes.len() != nbr.len() {
            return Err(Error::MeshInvariant("boundary has more than one loop".into()));
        }
        // orient the loop counterclockwise
        let area2: f64 = {
            let n = loop_nodes.len();
            (0..n)
                .map(|i| cross(nodes[loop_nodes[i]], nodes[loop_nodes[(i + 1) % n]]))
                .sum()
        };
        if area2 < 0.0 {
            loop_nodes.reverse();
        }
        let verts: Vec<Pt> = loop_nodes.iter().map(|&i| nodes[i]).collect();
        let mut cum = vec![0.0];
        for i in 0..verts.len() {
            let l = dist(verts[i], verts[(i + 1) % verts.len()]);
            cum.push(cum[i] + l);
        }
        let params: Vec<f64> = cum[..verts.len()].to_vec();
        let curve = BoundaryCurve::Polygon { verts, cum };
        let nb = loop_nodes.len();
        let boundary_edges: Vec<BoundaryEdge> = (0..nb)
            .map(|i| {
                let a = loop_nodes[i];
                let b = loop_nodes[(i + 1) % nb];
                make_boundary_edge(&nodes, a, b)
            })
            .collect();
        let mesh = TriMesh {
            nodes,
            tris,
            boundary_edges,
            boundary_loop: loop_nodes,
            boundary_param: params,
            curve,
            h_target,
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

fn make_boundary_edge(nodes: &[Pt], a: usize, b: usize) -> BoundaryEdge {
    let d = sub(nodes[b], nodes[a]);
    let len = norm(d);
    BoundaryEdge { a, b, normal: [d[1] / len, -d[0] / len], len }
}

// ---------------------------------------------------------------------------
// Delaunay triangulation (Bowyer-Watson)
// ---------------------------------------------------------------------------

struct Delaunay {
    pts: Vec<Pt>,
    tris: Vec<[usize; 3]>,
    /// neighbor across the edge opposite local vertex k; usize::MAX = none
    adj: Vec<[usize; 3]>,
    alive: Vec<bool>,
    last_alive: usize,
}

const NONE: usize = usize::MAX;

impl Delaunay {
    fn new(points: &[Pt]) -> Delaunay {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        let m = 20.0 * span;
        let mut pts = points.to_vec();
        let n = pts.len();
        pts.push([cx - 2.0 * m, cy - m]);
        pts.push([cx + 2.0 * m, cy - m]);
        pts.push([cx, cy + 2.0 * m]);
        let tris = vec![[n, n + 1, n + 2]];
        let adj = vec![[NONE; 3]];
        Delaunay { pts, tris, adj, alive: vec![true], last_alive: 0 }
    }

    fn orient(&self, a: usize, b: usize, p: Pt) -> f64 {
        cross(sub(self.pts[b], self.pts[a]), sub(p, self.pts[a]))
    }

    /// Strictly-inside-circumcircle predicate for triangle t and point p.
    fn in_circle(&self, t: usize, p: Pt) -> bool {
        let [a, b, c] = self.tris[t];
        let pa = sub(self.pts[a], p);
        let pb = sub(self.pts[b], p);
        let pc = sub(self.pts[c], p);
        let na = pa[0] * pa[0] + pa[1] * pa[1];
        let nb = pb[0] * pb[0] + pb[1] * pb[1];
        let nc = pc[0] * pc[0] + pc[1] * pc[1];
        let det = pa[0] * (pb[1] * nc - nb * pc[1]) - pa[1] * (pb[0] * nc - nb * pc[0])
            + na * (pb[0] * pc[1] - pb[1] * pc[0]);
        det > 0.0
    }

    /// Walks from the last created triangle to one containing p.
    fn locate(&self, p: Pt) -> usize {
        let mut t = self.last_alive;
        if !self.alive[t] {
            t = (0..self.tris.len()).rfind(|&i| self.alive[i]).expect("no alive triangle");
        }
        let cap = 4 * self.tris.len() + 16;
        let mut steps = 0;
        'walk: loop {
            steps += 1;
            if steps > cap {
                break;
            }
            let tri = self.tris[t];
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                if self.orient(a, b, p) < 0.0 {
                    let nb = self.adj[t][k];
                    if nb == NONE {
                        break 'walk;
                    }
                    t = nb;
                    continue 'walk;
                }
            }
            return t;
        }
        // fallback: linear scan for the best candidate; points that sit
        // exactly on shared edges can test marginally outside every
        // triangle, so take the least-negative orientation
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in 0..self.tris.len() {
            if !self.alive[i] {
                continue;
            }
            let tri = self.tris[i];
            let worst = (0..3)
                .map(|k| self.orient(tri[(k + 1) % 3], tri[(k + 2) % 3], p))
                .fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return i;
            }
            if worst > best.1 {
                best = (i, worst);
            }
        }
        assert!(best.0 != usize::MAX, "point location failed; no alive triangles");
        best.0
    }

    fn insert(&mut self, pi: usize) {
        let p = self.pts[pi];
        let t0 = self.locate(p);
        // grow the cavity of circumcircle-violating triangles by BFS;
        // cavities are tiny, so linear membership scans beat maps here
        let mut cavity = vec![t0];
        let mut stack = vec![t0];
        while let Some(t) = stack.pop() {
            for k in 0..3 {
                let nb = self.adj[t][k];
                if nb == NONE || cavity.contains(&nb) {
                    continue;
                }
                if self.in_circle(nb, p) {
                    cavity.push(nb);
                    stack.push(nb);
                }
            }
        }
        // cavity boundary: directed edges of cavity triangles whose neighbor
        // is outside the cavity
        let mut border: Vec<(usize, usize, usize)> = Vec::new(); // (a, b, outside tri)
        for &t in &cavity {
            let tri = self.tris[t];
            for k in 0..3 {
                let nb = self.adj[t][k];
                if nb == NONE || !cavity.contains(&nb) {
                    border.push((tri[(k + 1) % 3], tri[(k + 2) % 3], nb));
                }
            }
        }
        for &t in &cavity {
            self.alive[t] = false;
        }
        // create one new triangle [a, b, pi] per border edge; the border
        // edges form a closed loop around pi, so two new triangles are
        // adjacent exactly when one edge's head is the other's tail.
        // local edges of [a, b, pi]: opposite 0 = (b, pi), opposite 1 =
        // (pi, a), opposite 2 = (a, b) (the outside edge).
        let first_new = self.tris.len();
        for &(a, b, outside) in &border {
            let t_new = self.tris.len();
            self.tris.push([a, b, pi]);
            self.adj.push([NONE, NONE, outside]);
            self.alive.push(true);
            if outside != NONE {
                let otri = self.tris[outside];
                for k in 0..3 {
                    let oa = otri[(k + 1) % 3];
                    let ob = otri[(k + 2) % 3];
                    if (oa == b && ob == a) || (oa == a && ob == b) {
                        self.adj[outside][k] = t_new;
                    }
                }
            }
        }
        let created = first_new..self.tris.len();
        for t_new in created.clone() {
            let [a, b, _] = self.tris[t_new];
            for other in created.clone() {
                if self.tris[other][0] == b {
                    self.adj[t_new][0] = other; // across (b, pi)
                }
                if self.tris[other][1] == a {
                    self.adj[t_new][1] = other; // across (pi, a)
                }
            }
        }
        self.last_alive = self.tris.len() - 1;
    }

    fn finish(mut self, n_real: usize) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for i in 0..self.tris.len() {
            if !self.alive[i] {
                continue;
            }
            let t = self.tris[i];
            if t.iter().any(|&v| v >= n_real) {
                continue;
            }
            // enforce counterclockwise orientation
            if tri_area(self.pts[t[0]], self.pts[t[1]], self.pts[t[2]]) < 0.0 {
                out.push([t[0], t[2], t[1]]);
            } else {
                out.push(t);
            }
        }
        out.sort_unstable();
        self.tris.clear();
        out
    }
}

/// Delaunay triangulation of a point set; returns CCW triangles sorted by
/// node indices. Points are inserted in the order given, which makes the
/// result deterministic (including cocircular tie resolution).
pub fn delaunay(points: &[Pt]) -> Vec<[usize; 3]> {
    let mut d = Delaunay::new(points);
    for i in 0..points.len() {
        d.insert(i);
    }
    d.finish(points.len())
}

// ---------------------------------------------------------------------------
// Domain triangulation
// ---------------------------------------------------------------------------

/// Builds the boundary sampling chain: curve parameters and points, spaced
/// at most `h` apart along the boundary, including all structural corners.
fn boundary_chain(domain: &Domain, h: f64) -> Result<(BoundaryCurve, Vec<f64>, Vec<Pt>)> {
    match domain {
        Domain::Polygon(poly) => {
            let verts = poly.vertices().to_vec();
            let n = verts.len();
            let mut cum = vec![0.0];
            for i in 0..n {
                cum.push(cum[i] + dist(verts[i], verts[(i + 1) % n]));
            }
            let mut params = Vec::new();
            let mut points = Vec::new();
            for i in 0..n {
                let a = verts[i];
                let b = verts[(i + 1) % n];
                let len = cum[i + 1] - cum[i];
                let m = (len / h).ceil().max(1.0) as usize;
                for j in 0..m {
                    let s = j as f64 / m as f64;
                    params.push(cum[i] + s * len);
                    points.push(add(a, scale(sub(b, a), s)));
                }
            }
            Ok((BoundaryCurve::Polygon { verts, cum }, params, points))
        }
        Domain::Smooth(body) => {
            if let Some((verts, r)) = body.polygon_offset_parts() {
                let poly = ConvexPolygon::new(verts.to_vec())?;
                let pieces = offset_pieces(&poly, r);
                let total = match pieces.last().unwrap() {
                    OffsetPiece::Seg { s0, len, .. } => s0 + len,
                    OffsetPiece::Arc { s0, len, .. } => s0 + len,
                };
                let curve = BoundaryCurve::PolygonOffset { pieces, total };
                let mut params = Vec::new();
                let mut points = Vec::new();
                if let BoundaryCurve::PolygonOffset { pieces, .. } = &curve {
                    for p in pieces {
                        let (s0, len) = match p {
                            OffsetPiece::Seg { s0, len, .. } => (*s0, *len),
                            OffsetPiece::Arc { s0, len, .. } => (*s0, *len),
                        };
                        let m = (len / h).ceil().max(1.0) as usize;
                        for j in 0..m {
                            let t = s0 + len * j as f64 / m as f64;
                            params.push(t);
                            points.push(curve.point(t));
                        }
                    }
                }
                Ok((curve, params, points))
            } else {
                let (ac, as_) = body.trig_parts().expect("smooth body is trig or offset");
                let curve = BoundaryCurve::Trig { ac: ac.to_vec(), as_: as_.to_vec() };
                // equal-arclength placement: s'(θ) = h(θ) + h''(θ) > 0
                let ng = body.grid_size();
                let dth = 2.0 * PI / ng as f64;
                let mut s_cum = vec![0.0; ng + 1];
                for i in 0..ng {
                    let t0 = i as f64 * dth;
                    let t1 = (i + 1) as f64 * dth;
                    let sp0 = {
                        let (hh, _, hpp) = body.support_derivs(t0);
                        hh + hpp
                    };
                    let sp1 = {
                        let (hh, _, hpp) = body.support_derivs(t1);
                        hh + hpp
                    };
                    s_cum[i + 1] = s_cum[i] + 0.5 * (sp0 + sp1) * dth;
                }
                let per = s_cum[ng];
                let m = (per / h).ceil().max(8.0) as usize;
                let mut params = Vec::with_capacity(m);
                let mut points = Vec::with_capacity(m);
                for j in 0..m {
                    let target = per * j as f64 / m as f64;
                    let i = match s_cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                        Ok(i) => i.min(ng - 1),
                        Err(i) => i - 1,
                    };
                    let seg = s_cum[i + 1] - s_cum[i];
                    let frac = if seg > 0.0 { (target - s_cum[i]) / seg } else { 0.0 };
                    let theta = (i as f64 + frac) * dth;
                    params.push(theta);
                    points.push(curve.point(theta));
                }
                Ok((curve, params, points))
            }
        }
    }
}

/// Decomposes an offset polygon boundary into straight segments and corner
/// arcs, counterclockwise, starting at the outward offset of vertex 0's
/// outgoing edge.
fn offset_pieces(poly: &ConvexPolygon, r: f64) -> Vec<OffsetPiece> {
    let verts = poly.vertices();
    let n = verts.len();
    let mut pieces = Vec::with_capacity(2 * n);
    let mut s = 0.0;
    for i in 0..n {
        let ni = poly.edge_normal(i);
        let a = add(verts[i], scale(ni, r));
        let b = add(verts[(i + 1) % n], scale(ni, r));
        let len = dist(a, b);
        pieces.push(OffsetPiece::Seg { a, b, s0: s, len });
        s += len;
        // corner arc at vertex i+1, from this edge normal to the next
        let nn = poly.edge_normal((i + 1) % n);
        let ang0 = ni[1].atan2(ni[0]);
        let mut sweep = nn[1].atan2(nn[0]) - ang0;
        while sweep < 0.0 {
            sweep += 2.0 * PI;
        }
        while sweep >= 2.0 * PI {
            sweep -= 2.0 * PI;
        }
        let len = r * sweep;
        if len > 1e-15 {
            pieces.push(OffsetPiece::Arc {
                center: verts[(i + 1) % n],
                r,
                ang0,
                sweep,
                s0: s,
                len,
            });
            s += len;
        }
    }
    pieces
}

/// Triangulates a convex domain with target edge length `h_target`.
///
/// The result is quasi-uniform with max edge <= 1.5 h and min angle >= 20
/// degrees; boundary nodes lie on the domain boundary. Fails with
/// [`Error::TooCoarse`] when h is not below the inradius.
pub fn triangulate(domain: &Domain, h_target: f64) -> Result<TriMesh> {
    if !(h_target > 0.0) {
        return Err(Error::InvalidArgument("h_target must be positive".into()));
    }
    let (rho, _) = domain.inradius_incenter()?;
    if h_target > rho {
        return Err(Error::TooCoarse { h: h_target, rho });
    }
    let (curve, params, chain) = boundary_chain(domain, h_target)?;
    let nb = chain.len();

    // interior lattice with a clearance band against the boundary
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in &chain {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    // nearest kept lattice row sits within [0.45 h, 1.45 h] of the boundary,
    // which keeps pre-smoothing edges below the 1.5 h quality gate
    let g = h_target;
    let clearance = 0.45 * h_target;
    let mut pts = chain.clone();
    let i0 = (lo[0] / g).floor() as i64;
    let i1 = (hi[0] / g).ceil() as i64;
    let j0 = (lo[1] / g).floor() as i64;
    let j1 = (hi[1] / g).ceil() as i64;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let p = [i as f64 * g, j as f64 * g];
            if domain.contains(p, -clearance) && domain.boundary_distance(p) >= clearance {
                pts.push(p);
            }
        }
    }

    // Delaunay + capped smart Laplacian smoothing with re-triangulation,
    // plus a repair stage that splits the few over-long edges the fixed
    // lattice can leave against an arbitrarily offset boundary.
    let mut tris = delaunay(&pts);
    for _round in 0..4 {
        smooth_interior(domain, &mut pts, &mut tris, nb, h_target);
        // split edges above the repair threshold by inserting midpoints
        let mut long_edges: Vec<(usize, usize)> = Vec::new();
        for t in &tris {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                if dist(pts[a], pts[b]) > 1.42 * h_target {
                    long_edges.push((a.min(b), a.max(b)));
                }
            }
        }
        long_edges.sort_unstable();
        long_edges.dedup();
        if long_edges.is_empty() {
            break;
        }
        let mut inserted = 0usize;
        for (a, b) in long_edges {
            let mid = scale(add(pts[a], pts[b]), 0.5);
            if domain.boundary_distance(mid) < 0.4 * h_target {
                continue;
            }
            if pts.iter().any(|p| dist(*p, mid) < 0.5 * h_target) {
                continue;
            }
            pts.push(mid);
            inserted += 1;
        }
        if inserted == 0 {
            break;
        }
        tris = delaunay(&pts);
    }

    let boundary_loop: Vec<usize> = (0..nb).collect();
    let boundary_edges: Vec<BoundaryEdge> =
        (0..nb).map(|i| make_boundary_edge(&pts, i, (i + 1) % nb)).collect();
    let mesh = TriMesh {
        nodes: pts,
        tris,
        boundary_edges,
        boundary_loop,
        boundary_param: params,
        curve,
        h_target,
    };
    mesh.validate()?;
    let q = mesh_quality(&mesh);
    if q.max_edge > 1.5 * h_target * (1.0 + 1e-9) {
        return Err(Error::MeshInvariant(format!(
            "max edge {} exceeds 1.5 h_target = {}",
            q.max_edge,
            1.5 * h_target
        )));
    }
    if q.min_angle_deg < 20.0 {
        return Err(Error::MeshInvariant(format!(
            "min angle {} below 20 degrees",
            q.min_angle_deg
        )));
    }
    Ok(mesh)
}

/// Uniform red refinement: each triangle splits into four via edge
/// midpoints; midpoints of boundary edges are placed back on the true
/// boundary via the curve parameterization.
pub fn refine(mesh: &TriMesh) -> Result<TriMesh> {
    let mut nodes = mesh.nodes.clone();

    // boundary edge midpoints go on the curve; key by sorted node pair
    let nb = mesh.boundary_loop.len();
    let mut boundary_mid: BTreeMap<(usize, usize), (usize, f64)> = BTreeMap::new();
    let mut edge_mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    // collect edges in sorted order for deterministic numbering
    let mut all_edges: Vec<(usize, usize)> = Vec::with_capacity(3 * mesh.tris.len());
    for t in &mesh.tris {
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            all_edges.push((a.min(b), a.max(b)));
        }
    }
    all_edges.sort_unstable();
    all_edges.dedup();
    // mark boundary edges with their parameter midpoint
    let mut bparam: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in 0..nb {
        let a = mesh.boundary_loop[e];
        let b = mesh.boundary_loop[(e + 1) % nb];
        let t_mid = mesh.curve.mid_param(mesh.boundary_param[e], mesh.boundary_param[(e + 1) % nb]);
        bparam.insert((a.min(b), a.max(b)), t_mid);
    }
    for &(a, b) in &all_edges {
        let idx = nodes.len();
        if let Some(&tm) = bparam.get(&(a, b)) {
            nodes.push(mesh.curve.point(tm));
            boundary_mid.insert((a, b), (idx, tm));
        } else {
            nodes.push(scale(add(mesh.nodes[a], mesh.nodes[b]), 0.5));
        }
        edge_mid.insert((a, b), idx);
    }

    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut tris = Vec::with_capacity(4 * mesh.tris.len());
    for t in &mesh.tris {
        let [a, b, c] = *t;
        let mab = edge_mid[&key(a, b)];
        let mbc = edge_mid[&key(b, c)];
        let mca = edge_mid[&key(c, a)];
        tris.push([a, mab, mca]);
        tris.push([b, mbc, mab]);
        tris.push([c, mca, mbc]);
        tris.push([mab, mbc, mca]);
    }

    // interleave midpoints into the boundary loop
    let mut boundary_loop = Vec::with_capacity(2 * nb);
    let mut boundary_param = Vec::with_capacity(2 * nb);
    for e in 0..nb {
        let a = mesh.boundary_loop[e];
        let b = mesh.boundary_loop[(e + 1) % nb];
        let (mid, tm) = boundary_mid[&key(a, b)];
        boundary_loop.push(a);
        boundary_param.push(mesh.boundary_param[e]);
        boundary_loop.push(mid);
        boundary_param.push(tm);
    }
    let nb2 = boundary_loop.len();
    let boundary_edges: Vec<BoundaryEdge> = (0..nb2)
        .map(|i| make_boundary_edge(&nodes, boundary_loop[i], boundary_loop[(i + 1) % nb2]))
        .collect();
    let out = TriMesh {
        nodes,
        tris,
        boundary_edges,
        boundary_loop,
        boundary_param,
        curve: mesh.curve.clone(),
        h_target: 0.5 * mesh.h_target,
    };
    out.validate()?;
    Ok(out)
}

/// Smart Laplacian smoothing: every interior node moves to its neighbor
/// centroid only when that improves the worst angle of its triangle star,
/// so already-structured regions (e.g. axis-aligned lattices) stay put.
/// Re-triangulates between passes; capped at 20 passes.
fn smooth_interior(
    domain: &Domain,
    pts: &mut Vec<Pt>,
    tris: &mut Vec<[usize; 3]>,
    nb: usize,
    h_target: f64,
) {
    for _pass in 0..20 {
        let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); pts.len()];
        let mut star: Vec<Vec<usize>> = vec![Vec::new(); pts.len()];
        for (ti, t) in tris.iter().enumerate() {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                nbrs[a].push(b);
                nbrs[b].push(a);
                star[t[k]].push(ti);
            }
        }
        let mut max_move = 0.0f64;
        for v in nb..pts.len() {
            let mut list = nbrs[v].clone();
            list.sort_unstable();
            list.dedup();
            if list.is_empty() {
                continue;
            }
            let mut c = [0.0, 0.0];
            for &w in &list {
                c = add(c, pts[w]);
            }
            c = scale(c, 1.0 / list.len() as f64);
            if !domain.contains(c, -0.25 * h_target) {
                continue;
            }
            let before = star_min_angle(pts, tris, &star[v], v, pts[v]);
            let after = star_min_angle(pts, tris, &star[v], v, c);
            if after > before + 1e-12 {
                max_move = max_move.max(dist(c, pts[v]));
                pts[v] = c;
            }
        }
        if max_move < 1e-3 * h_target {
            break;
        }
        if _pass % 2 == 1 {
            *tris = delaunay(pts);
        }
    }
    *tris = delaunay(pts);
}

/// Smallest angle over the triangles of `star` with node `v` virtually
/// placed at `pos`; returns a negative value when a triangle inverts.
fn star_min_angle(pts: &[Pt], tris: &[[usize; 3]], star: &[usize], v: usize, pos: Pt) -> f64 {
    let mut worst = f64::INFINITY;
    for &ti in star {
        let p = |i: usize| if i == v { pos } else { pts[i] };
        let [a, b, c] = tris[ti];
        let (pa, pb, pc) = (p(a), p(b), p(c));
        if tri_area(pa, pb, pc) <= 0.0 {
            return -1.0;
        }
        for (x, y, z) in [(pa, pb, pc), (pb, pc, pa), (pc, pa, pb)] {
            let e1 = sub(y, x);
            let e2 = sub(z, x);
            worst = worst.min(cross(e1, e2).atan2(dot(e1, e2)).abs());
        }
    }
    worst
}

/// Mesh quality report.
#[derive(Clone, Copy, Debug)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub min_edge: f64,
    pub edge_ratio: f64,
    /// Largest distance between a boundary chord midpoint and the true
    /// boundary curve.
    pub boundary_chord_error: f64,
}

/// Pure inspection of angles, edge lengths and boundary chord error.
pub fn mesh_quality(mesh: &TriMesh) -> MeshQuality {
    let mut min_angle = f64::INFINITY;
    let mut max_edge = 0.0f64;
    let mut min_edge = f64::INFINITY;
    for t in &mesh.tris {
        for k in 0..3 {
            let a = mesh.nodes[t[k]];
            let b = mesh.nodes[t[(k + 1) % 3]];
            let c = mesh.nodes[t[(k + 2) % 3]];
            let e1 = sub(b, a);
            let e2 = sub(c, a);
            let ang = cross(e1, e2).atan2(dot(e1, e2));
            min_angle = min_angle.min(ang.abs());
            let l = norm(e1);
            max_edge = max_edge.max(l);
            min_edge = min_edge.min(l);
        }
    }
    let nb = mesh.boundary_loop.len();
    let mut chord_err = 0.0f64;
    for e in 0..nb {
        let a = mesh.nodes[mesh.boundary_loop[e]];
        let b = mesh.nodes[mesh.boundary_loop[(e + 1) % nb]];
        let tm = mesh.curve.mid_param(mesh.boundary_param[e], mesh.boundary_param[(e + 1) % nb]);
        let p = mesh.curve.point(tm);
        let mid = scale(add(a, b), 0.5);
        chord_err = chord_err.max(dist(p, mid));
    }
    MeshQuality {
        min_angle_deg: min_angle * 180.0 / PI,
        max_edge,
        min_edge,
        edge_ratio: max_edge / min_edge,
        boundary_chord_error: chord_err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexPolygon, Domain, SupportBody};

    fn euler_check(mesh: &TriMesh) {
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for t in &mesh.tris {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let v = mesh.num_nodes() as i64;
        let e = edges.len() as i64;
        let f = mesh.num_tris() as i64;
        assert_eq!(v - e + f, 1, "euler characteristic of a disk triangulation");
    }

    #[test]
    fn square_coarse_mesh() {
        let mesh = triangulate(&Domain::unit_square(), 0.5).unwrap();
        assert!(mesh.num_tris() >= 8);
        assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        euler_check(&mesh);
    }

    #[test]
    fn square_structured_mesh_has_45_degree_angles() {
        let mesh = triangulate(&Domain::unit_square(), 0.25).unwrap();
        let q = mesh_quality(&mesh);
        assert!((q.min_angle_deg - 45.0).abs() < 1e-9, "min angle = {}", q.min_angle_deg);
        assert!((mesh.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disk_mesh_area_converges_quadratically() {
        let disk = Domain::unit_disk();
        let a1 = triangulate(&disk, 0.2).unwrap().total_area();
        let mesh2 = triangulate(&disk, 0.1).unwrap();
        let a2 = mesh2.total_area();
        let e1 = (PI - a1).abs();
        let e2 = (PI - a2).abs();
        assert!(e1 < 0.05 && e2 < e1, "e1 = {e1}, e2 = {e2}");
        let rate = (e1 / e2).log2();
        assert!(rate > 1.5, "area convergence rate {rate} not ~2");
        euler_check(&mesh2);
    }

    #[test]
    fn refine_quadruples_and_preserves_area() {
        let mesh = triangulate(&Domain::unit_square(), 0.3).unwrap();
        let fine = refine(&mesh).unwrap();
        assert_eq!(fine.num_tris(), 4 * mesh.num_tris());
        assert!((fine.total_area() - 1.0).abs() < 1e-12);
        // red refinement of straight-edge meshes preserves the angle set
        let q0 = mesh_quality(&mesh);
        let q1 = mesh_quality(&fine);
        assert!((q0.min_angle_deg - q1.min_angle_deg).abs() < 1e-9);
        euler_check(&fine);
    }

    #[test]
    fn refined_disk_area_error_quarters() {
        let mesh = triangulate(&Domain::unit_disk(), 0.15).unwrap();
        let fine = refine(&mesh).unwrap();
        let e0 = (PI - mesh.total_area()).abs();
        let e1 = (PI - fine.total_area()).abs();
        let factor = e0 / e1;
        assert!(factor > 3.3 && factor < 4.7, "chord error factor {factor} not ~4");
    }

    #[test]
    fn boundary_loop_arclength_is_perimeter() {
        let mesh = triangulate(&Domain::unit_square(), 0.2).unwrap();
        let s = mesh.boundary_arclengths();
        assert!((s.last().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn closed_normal_integral_vanishes() {
        for dom in [Domain::unit_square(), Domain::unit_disk()] {
            let mesh = triangulate(&dom, 0.2).unwrap();
            let mut sum = [0.0, 0.0];
            for e in &mesh.boundary_edges {
                sum = add(sum, scale(e.normal, e.len));
            }
            assert!(norm(sum) < 1e-12, "sum = {sum:?}");
        }
    }

    #[test]
    fn too_coarse_is_rejected() {
        match triangulate(&Domain::unit_square(), 0.6) {
            Err(Error::TooCoarse { .. }) => {}
            other => panic!("expected TooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn parallel_body_mesh_is_valid() {
        let body = SupportBody::outer_parallel(&ConvexPolygon::unit_square(), 0.25).unwrap();
        let dom = Domain::Smooth(body);
        let mesh = triangulate(&dom, 0.12).unwrap();
        let steiner = 1.0 + 4.0 * 0.25 + PI * 0.0625;
        assert!((mesh.total_area() - steiner).abs() < 0.01);
        euler_check(&mesh);
        let fine = refine(&mesh).unwrap();
        assert!((fine.total_area() - steiner).abs() < 0.003);
    }

    #[test]
    fn quality_contract_on_various_domains() {
        let mut rng = crate::util::Rng::new(33);
        let mut domains = vec![Domain::unit_square(), Domain::unit_disk()];
        for _ in 0..3 {
            domains.push(Domain::Polygon(crate::geometry::random_convex_polygon(&mut rng, 7)));
        }
        for dom in &domains {
            let (rho, _) = dom.inradius_incenter().unwrap();
            let mesh = triangulate(dom, 0.3 * rho).unwrap();
            let q = mesh_quality(&mesh);
            assert!(q.min_angle_deg >= 20.0, "min angle {}", q.min_angle_deg);
            assert!(q.max_edge <= 1.5 * mesh.h_target * (1.0 + 1e-9));
        }
    }

    #[test]
    fn from_raw_single_triangle() {
        let mesh = TriMesh::from_raw(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            1.0,
        )
        .unwrap();
        assert_eq!(mesh.boundary_loop.len(), 3);
        assert!((mesh.total_area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn delaunay_of_grid_is_deterministic() {
        let mut pts = Vec::new();
        for j in 0..5 {
            for i in 0..5 {
                pts.push([i as f64 * 0.25, j as f64 * 0.25]);
            }
        }
        let t1 = delaunay(&pts);
        let t2 = delaunay(&pts);
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 32); // 2 per lattice cell
    }
}
