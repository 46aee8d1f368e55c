//! Convex domains of the plane and the geometric quantities the spectral
//! estimates consume: diameter D, inradius ρ and incenter, the boundary
//! support values x·ν, curvature of smooth bodies, Hausdorff distances and
//! outer parallel bodies Ω ⊕ B̄_r.
//!
//! Two representations are used. Polygons store their counterclockwise
//! vertex ring. Smooth bodies store support-function samples h(θ_i) on a
//! uniform angular grid together with first and second derivative samples;
//! bodies built from genuinely smooth data differentiate through the
//! trigonometric expansion of h, while outer parallel bodies of polygons
//! carry exact per-fan derivatives (the trigonometric route does not
//! converge pointwise across the support kinks at edge normals).

use crate::util::{add, cross, dist, dot, norm, scale, sub, unit, unit_perp, Pt, Rng};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Absolute tolerance for geometric predicates on unit-scale domains.
pub const GEOM_TOL: f64 = 1e-12;

/// Default angular grid size for support-function bodies.
pub const SUPPORT_GRID: usize = 2048;

// ---------------------------------------------------------------------------
// Convex polygon
// ---------------------------------------------------------------------------

/// A strictly convex polygon with counterclockwise vertex ring.
///
/// No three consecutive vertices are collinear after canonicalization and
/// the first vertex is not repeated in storage.
#[derive(Clone, Debug)]
pub struct ConvexPolygon {
    verts: Vec<Pt>,
}

impl ConvexPolygon {
    /// Builds a polygon from a vertex ring, canonicalizing orientation to
    /// counterclockwise and dropping duplicate or collinear vertices.
    pub fn new(verts: Vec<Pt>) -> Result<Self> {
        if verts.len() < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        for v in &verts {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::InvalidDomain("non-finite vertex coordinate".into()));
            }
        }
        let mut v = verts;
        // drop consecutive duplicates (including wrap-around)
        v.dedup_by(|a, b| dist(*a, *b) <= GEOM_TOL);
        while v.len() > 1 && dist(v[0], *v.last().unwrap()) <= GEOM_TOL {
            v.pop();
        }
        if v.len() < 3 {
            return Err(Error::InvalidDomain("degenerate polygon after deduplication".into()));
        }
        let area2: f64 = signed_area2(&v);
        if area2 < 0.0 {
            v.reverse();
        }
        if area2.abs() * 0.5 <= GEOM_TOL {
            return Err(Error::InvalidDomain("polygon area below tolerance".into()));
        }
        // drop collinear middle vertices; a removal re-tests the previous
        // vertex, so the scan stays amortized linear even for adversarial
        // inputs from the file parsers
        let mut i = 0usize;
        let mut since_last_drop = 0usize;
        while v.len() >= 3 && since_last_drop <= v.len() {
            let n = v.len();
            let a = v[(i + n - 1) % n];
            let b = v[i % n];
            let c = v[(i + 1) % n];
            let turn = cross(sub(b, a), sub(c, b));
            if turn < -GEOM_TOL {
                return Err(Error::InvalidDomain("polygon is not convex".into()));
            }
            if turn <= GEOM_TOL {
                v.remove(i % n);
                i = (i + v.len().max(1) - 1) % v.len().max(1);
                since_last_drop = 0;
            } else {
                i = (i + 1) % n;
                since_last_drop += 1;
            }
        }
        if v.len() < 3 {
            return Err(Error::InvalidDomain("degenerate polygon after canonicalization".into()));
        }
        Ok(ConvexPolygon { verts: v })
    }

    /// Axis-aligned rectangle [x0,x1] x [y0,y1].
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        ConvexPolygon::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    /// The unit square [0,1]^2.
    pub fn unit_square() -> Self {
        ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    pub fn vertices(&self) -> &[Pt] {
        &self.verts
    }

    pub fn num_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.verts)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.verts.len();
        (0..n).map(|i| dist(self.verts[i], self.verts[(i + 1) % n])).sum()
    }

    /// Unit outward normal of edge i (from vertex i to vertex i+1).
    pub fn edge_normal(&self, i: usize) -> Pt {
        let n = self.verts.len();
        let d = sub(self.verts[(i + 1) % n], self.verts[i]);
        let l = norm(d);
        [d[1] / l, -d[0] / l]
    }

    /// Offset of edge i: the edge lies on the line { x : n_i . x = b_i }.
    pub fn edge_offset(&self, i: usize) -> f64 {
        dot(self.edge_normal(i), self.verts[i])
    }

    /// Support value max_v v . u(theta).
    pub fn support(&self, theta: f64) -> f64 {
        self.support_argmax(theta).1
    }

    /// Index and value of the support-maximizing vertex; ties resolve to the
    /// lowest index so evaluation is deterministic.
    pub fn support_argmax(&self, theta: f64) -> (usize, f64) {
        let u = unit(theta);
        let mut best = (0usize, dot(self.verts[0], u));
        for (i, v) in self.verts.iter().enumerate().skip(1) {
            let s = dot(*v, u);
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }

    /// Largest pairwise vertex distance; equals the diameter of the polygon.
    pub fn diameter(&self) -> f64 {
        max_pairwise_dist(&self.verts)
    }

    /// Chebyshev center: the incircle radius and a deepest interior point,
    /// solved as the linear program max t s.t. n_e . c + t <= b_e.
    pub fn inradius_incenter(&self) -> Result<(f64, Pt)> {
        let m = self.verts.len();
        let normals: Vec<Pt> = (0..m).map(|i| self.edge_normal(i)).collect();
        let offsets: Vec<f64> = (0..m).map(|i| self.edge_offset(i)).collect();
        let (c, t) = chebyshev_center(&normals, &offsets)?;
        if t <= GEOM_TOL {
            return Err(Error::InvalidDomain("polygon inradius below tolerance".into()));
        }
        Ok((t, c))
    }

    /// True if p lies in the closed polygon (within tol of it).
    pub fn contains(&self, p: Pt, tol: f64) -> bool {
        let m = self.verts.len();
        (0..m).all(|i| dot(self.edge_normal(i), p) <= self.edge_offset(i) + tol)
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, p: Pt) -> f64 {
        let m = self.verts.len();
        (0..m)
            .map(|i| self.edge_offset(i) - dot(self.edge_normal(i), p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum of x . nu over the boundary with x measured from `origin`,
    /// which must be strictly interior. On a polygon x . nu is constant on
    /// each edge and equals the distance from the origin to the edge line.
    pub fn min_x_dot_nu(&self, origin: Pt) -> Result<f64> {
        let m = self.verts.len();
        let mut best = f64::INFINITY;
        for i in 0..m {
            let h = self.edge_offset(i) - dot(self.edge_normal(i), origin);
            if h <= GEOM_TOL {
                return Err(Error::InvalidArgument("origin not strictly interior".into()));
            }
            best = best.min(h);
        }
        Ok(best)
    }

    pub fn translate(&self, d: Pt) -> ConvexPolygon {
        ConvexPolygon { verts: self.verts.iter().map(|v| add(*v, d)).collect() }
    }

    pub fn scale(&self, s: f64) -> Result<ConvexPolygon> {
        if s <= 0.0 {
            return Err(Error::InvalidArgument("scale factor must be positive".into()));
        }
        Ok(ConvexPolygon { verts: self.verts.iter().map(|v| scale(*v, s)).collect() })
    }

    /// Inner parallel polygon at offset delta > 0: the intersection of the
    /// half-planes n_e . x <= b_e - delta. Fails when the offset swallows
    /// the polygon.
    pub fn inner_parallel(&self, delta: f64) -> Result<ConvexPolygon> {
        if delta <= 0.0 {
            return Err(Error::InvalidArgument("inner offset must be positive".into()));
        }
        let m = self.verts.len();
        let mut poly: Vec<Pt> = self.verts.clone();
        for i in 0..m {
            poly = clip_halfplane(&poly, self.edge_normal(i), self.edge_offset(i) - delta);
            if poly.len() < 3 {
                return Err(Error::InvalidDomain(format!(
                    "inner parallel body empty at offset {delta}"
                )));
            }
        }
        ConvexPolygon::new(poly)
    }

    /// Centroid of the vertex ring (not the area centroid; used as a cheap
    /// interior point).
    pub fn vertex_centroid(&self) -> Pt {
        let n = self.verts.len() as f64;
        let mut c = [0.0, 0.0];
        for v in &self.verts {
            c = add(c, *v);
        }
        scale(c, 1.0 / n)
    }
}

fn signed_area2(verts: &[Pt]) -> f64 {
    let n = verts.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        a += cross(p, q);
    }
    a
}

fn max_pairwise_dist(verts: &[Pt]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            let d = dist(verts[i], verts[j]);
            if d > best {
                best = d;
            }
        }
    }
    best
}

/// Clips a convex polygon against the half-plane a . x <= b
/// (Sutherland-Hodgman step).
fn clip_halfplane(poly: &[Pt], a: Pt, b: f64) -> Vec<Pt> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dp = dot(a, p) - b;
        let dq = dot(a, q) - b;
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq <= 0.0) {
            let s = dp / (dp - dq);
            out.push(add(p, scale(sub(q, p), s)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Chebyshev-center linear program
// ---------------------------------------------------------------------------

/// Solves max t s.t. a_i . c + t <= b_i over all constraints, returning the
/// center and the optimal t. Constraints must bound a nonempty region.
///
/// The solver enumerates active triples and keeps the best feasible basic
/// solution. For the constraint counts produced by polygons this exhaustive
/// active-set search is exact and free of degeneracy pitfalls.
pub fn chebyshev_center(normals: &[Pt], offsets: &[f64]) -> Result<(Pt, f64)> {
    let m = normals.len();
    if m < 3 {
        return Err(Error::InvalidArgument("chebyshev_center needs >= 3 constraints".into()));
    }
    let feas_tol = 1e-10;
    let mut best: Option<(Pt, f64)> = None;
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                // solve [a_i 1; a_j 1; a_k 1] (cx, cy, t) = (b_i, b_j, b_k)
                let (ai, aj, ak) = (normals[i], normals[j], normals[k]);
                let det = ai[0] * (aj[1] - ak[1]) - ai[1] * (aj[0] - ak[0])
                    + (aj[0] * ak[1] - aj[1] * ak[0]);
                if det.abs() < 1e-14 {
                    continue;
                }
                let (bi, bj, bk) = (offsets[i], offsets[j], offsets[k]);
                let dx = bi * (aj[1] - ak[1]) - ai[1] * (bj - bk) + (bj * ak[1] - aj[1] * bk);
                let dy = ai[0] * (bj - bk) - bi * (aj[0] - ak[0]) + (aj[0] * bk - bj * ak[0]);
                let dt = ai[0] * (aj[1] * bk - bj * ak[1]) - ai[1] * (aj[0] * bk - bj * ak[0])
                    + bi * (aj[0] * ak[1] - aj[1] * ak[0]);
                let c = [dx / det, dy / det];
                let t = dt / det;
                if let Some((_, tb)) = best {
                    if t <= tb + 1e-15 {
                        continue;
                    }
                }
                let feasible = (0..m).all(|e| dot(normals[e], c) + t <= offsets[e] + feas_tol);
                if feasible {
                    best = Some((c, t));
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidDomain("chebyshev LP infeasible or unbounded".into()))
}

/// Chebyshev center against a large angle-indexed constraint family,
/// solved by cutting planes over the exhaustive small solver: start from a
/// spread working set, repeatedly add the most violated constraint.
fn chebyshev_center_cutting(normals: &[Pt], offsets: &[f64]) -> Result<(Pt, f64)> {
    let m = normals.len();
    let mut work: Vec<usize> = (0..8).map(|q| q * m / 8).collect();
    work.dedup();
    for _round in 0..64 {
        let wn: Vec<Pt> = work.iter().map(|&i| normals[i]).collect();
        let wo: Vec<f64> = work.iter().map(|&i| offsets[i]).collect();
        let (c, t) = chebyshev_center(&wn, &wo)?;
        // most violated constraint over the full family
        let mut worst = (0usize, f64::INFINITY);
        for e in 0..m {
            let clearance = offsets[e] - dot(normals[e], c);
            if clearance < worst.1 {
                worst = (e, clearance);
            }
        }
        if worst.1 >= t - 1e-13 {
            // c satisfies every constraint with margin ~t: optimal to tolerance
            return Ok((c, worst.1.min(t)));
        }
        if work.contains(&worst.0) {
            // no progress possible; return the feasible value at c
            return Ok((c, worst.1));
        }
        work.push(worst.0);
    }
    Err(Error::NonConvergence { what: "chebyshev cutting-plane".into(), best_residual: f64::NAN })
}

// ---------------------------------------------------------------------------
// Smooth convex bodies via support functions
// ---------------------------------------------------------------------------

/// How off-grid support values and derivatives are produced.
#[derive(Clone, Debug)]
enum SupportEval {
    /// Truncated trigonometric expansion of h; coefficients of cos k
    /// and sin k for k = 0..=kmax.
    Trig { ac: Vec<f64>, as_: Vec<f64> },
    /// Outer parallel body of a polygon: h(t) = max_v v . u(t) + r with
    /// exact per-fan derivatives.
    PolygonOffset { verts: Vec<Pt>, r: f64 },
}

/// A smooth (at least C^{1,1}) convex body given by support samples
/// h(θ_i) > 0 on the uniform grid θ_i = 2πi/n, with derivative samples.
///
/// Invariants: h > 0 (origin interior) and curvature radius h + h'' > 0 at
/// every grid point (strict convexity).
#[derive(Clone, Debug)]
pub struct SupportBody {
    n: usize,
    h: Vec<f64>,
    hp: Vec<f64>,
    hpp: Vec<f64>,
    /// cached grid directions u(θ_i); support queries are hot in meshing
    us: Vec<Pt>,
    eval: SupportEval,
}

impl SupportBody {
    /// Builds a body from support samples on the uniform grid, using the
    /// trigonometric expansion for derivatives. The sample count must be
    /// even and at least 16.
    pub fn from_samples(h: Vec<f64>) -> Result<Self> {
        let n = h.len();
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidDomain("support grid must be even and >= 16".into()));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("non-finite support sample".into()));
        }
        // real DFT, O(n^2); bodies are built rarely and n is ~2k
        let kmax = n / 2;
        let mut ac = vec![0.0; kmax + 1];
        let mut as_ = vec![0.0; kmax + 1];
        for k in 0..=kmax {
            let mut sc = 0.0;
            let mut ss = 0.0;
            for (i, hi) in h.iter().enumerate() {
                let t = 2.0 * PI * (k * i % n) as f64 / n as f64;
                sc += hi * t.cos();
                ss += hi * t.sin();
            }
            let w = if k == 0 || k == kmax { 1.0 / n as f64 } else { 2.0 / n as f64 };
            ac[k] = sc * w;
            as_[k] = ss * w;
        }
        // trim negligible high modes so evaluation cost tracks smoothness
        let amax = ac.iter().chain(as_.iter()).fold(0.0f64, |m, &v| m.max(v.abs()));
        let mut keep = 1usize;
        for k in 0..=kmax {
            if ac[k].abs() > 1e-15 * amax || as_[k].abs() > 1e-15 * amax {
                keep = k + 1;
            }
        }
        ac.truncate(keep);
        as_.truncate(keep);
        let eval = SupportEval::Trig { ac, as_ };
        // the input samples stay the primary data (so files round-trip
        // bit-exactly); only the derivatives come from the expansion
        Self::finish(n, h, eval)
    }

    /// Disk of radius r centered at the origin (h ≡ r).
    pub fn disk(r: f64) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::InvalidDomain("disk radius must be positive".into()));
        }
        Self::from_samples(vec![r; SUPPORT_GRID])
    }

    /// Axis-aligned ellipse with semi-axes a, b; h(θ) = sqrt(a²cos²θ + b²sin²θ).
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidDomain("ellipse semi-axes must be positive".into()));
        }
        let n = SUPPORT_GRID;
        let h = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                ((a * t.cos()).powi(2) + (b * t.sin()).powi(2)).sqrt()
            })
            .collect();
        Self::from_samples(h)
    }

    /// Outer parallel body Ω ⊕ B̄_r of a polygon: support h_Ω + r. Contains
    /// Ω by construction, has Hausdorff distance exactly r from it, and its
    /// curvature is 1/r on the rounded corners and 0 across edge normals.
    pub fn outer_parallel(poly: &ConvexPolygon, r: f64) -> Result<Self> {
        if r <= 0.0 {
            return Err(Error::InvalidArgument("parallel body offset must be positive".into()));
        }
        let n = SUPPORT_GRID;
        let mut h = vec![0.0; n];
        let mut hp = vec![0.0; n];
        let mut hpp = vec![0.0; n];
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let (vi, hv) = poly.support_argmax(t);
            let v = poly.vertices()[vi];
            h[i] = hv + r;
            hp[i] = dot(v, unit_perp(t));
            hpp[i] = -hv; // so h + h'' = r exactly on vertex fans
        }
        let us = grid_directions(n);
        let body = SupportBody {
            n,
            h,
            hp,
            hpp,
            us,
            eval: SupportEval::PolygonOffset { verts: poly.vertices().to_vec(), r },
        };
        body.validate()?;
        Ok(body)
    }

    fn finish(n: usize, h: Vec<f64>, eval: SupportEval) -> Result<Self> {
        let (ac, as_) = match &eval {
            SupportEval::Trig { ac, as_ } => (ac.clone(), as_.clone()),
            _ => unreachable!(),
        };
        let mut hp = vec![0.0; n];
        let mut hpp = vec![0.0; n];
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let (_, vp, vpp) = eval_trig(&ac, &as_, t);
            hp[i] = vp;
            hpp[i] = vpp;
        }
        let us = grid_directions(n);
        let body = SupportBody { n, h, hp, hpp, us, eval };
        body.validate()?;
        Ok(body)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.h[i] <= 0.0 {
                return Err(Error::InvalidDomain(format!(
                    "support sample h({i}) = {} not positive (origin must be interior)",
                    self.h[i]
                )));
            }
            if self.h[i] + self.hpp[i] <= 0.0 {
                return Err(Error::InvalidDomain(format!(
                    "curvature radius h + h'' = {} not positive at grid index {i}",
                    self.h[i] + self.hpp[i]
                )));
            }
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn grid_angle(&self, i: usize) -> f64 {
        2.0 * PI * (i % self.n) as f64 / self.n as f64
    }

    pub fn h_samples(&self) -> &[f64] {
        &self.h
    }

    /// Support value at an arbitrary angle.
    pub fn support(&self, theta: f64) -> f64 {
        self.support_derivs(theta).0
    }

    /// (h, h', h'') at an arbitrary angle.
    pub fn support_derivs(&self, theta: f64) -> (f64, f64, f64) {
        match &self.eval {
            SupportEval::Trig { ac, as_ } => eval_trig(ac, as_, theta),
            SupportEval::PolygonOffset { verts, r } => {
                let u = unit(theta);
                let mut vi = 0usize;
                let mut hv = dot(verts[0], u);
                for (i, v) in verts.iter().enumerate().skip(1) {
                    let s = dot(*v, u);
                    if s > hv {
                        hv = s;
                        vi = i;
                    }
                }
                let v = verts[vi];
                (hv + r, dot(v, unit_perp(theta)), -hv)
            }
        }
    }

    /// Boundary point x(θ) = h u + h' u⊥.
    pub fn boundary_point(&self, theta: f64) -> Pt {
        let (h, hp, _) = self.support_derivs(theta);
        add(scale(unit(theta), h), scale(unit_perp(theta), hp))
    }

    /// Boundary curvature κ(θ) = 1/(h + h'').
    pub fn curvature(&self, theta: f64) -> Result<f64> {
        let (h, _, hpp) = self.support_derivs(theta);
        let rad = h + hpp;
        if rad <= 0.0 {
            return Err(Error::InvalidDomain(format!(
                "curvature radius {rad} not positive at theta = {theta}"
            )));
        }
        Ok(1.0 / rad)
    }

    /// Diameter: max over antipodal grid pairs of the width h(θ) + h(θ+π),
    /// followed by one local refinement pass. For polygon offsets the
    /// refinement is exact (vertex pair distance plus 2r).
    pub fn diameter(&self) -> f64 {
        if let SupportEval::PolygonOffset { verts, r } = &self.eval {
            return max_pairwise_dist(verts) + 2.0 * r;
        }
        let half = self.n / 2;
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..self.n {
            let w = self.h[i] + self.h[(i + half) % self.n];
            if w > best.1 {
                best = (i, w);
            }
        }
        // golden-section refinement of the width around the best grid angle
        let dt = 2.0 * PI / self.n as f64;
        let t0 = self.grid_angle(best.0);
        let width = |t: f64| self.support(t) + self.support(t + PI);
        let refined = golden_max(width, t0 - dt, t0 + dt, 80);
        best.1.max(refined)
    }

    /// Inradius and a deepest center: maximizes min_θ (h(θ) - c·u(θ)) over
    /// the grid directions. Polygon offsets reduce exactly to the polygon
    /// Chebyshev problem shifted by r.
    pub fn inradius_incenter(&self) -> Result<(f64, Pt)> {
        if let SupportEval::PolygonOffset { verts, r } = &self.eval {
            let poly = ConvexPolygon::new(verts.clone())?;
            let (rho, c) = poly.inradius_incenter()?;
            return Ok((rho + r, c));
        }
        let (c, t) = chebyshev_center_cutting(&self.us, &self.h)?;
        Ok((t, c))
    }

    /// Minimum of x . nu over the grid, with x measured from `origin`
    /// (x(θ) . ν(θ) = h(θ) - origin . u(θ)).
    pub fn min_x_dot_nu(&self, origin: Pt) -> Result<f64> {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            let v = self.h[i] - dot(origin, self.us[i]);
            if v <= GEOM_TOL {
                return Err(Error::InvalidArgument("origin not strictly interior".into()));
            }
            best = best.min(v);
        }
        Ok(best)
    }

    /// Area enclosed by the body.
    pub fn area(&self) -> f64 {
        match &self.eval {
            SupportEval::PolygonOffset { verts, r } => {
                let poly = ConvexPolygon { verts: verts.clone() };
                poly.area() + poly.perimeter() * r + PI * r * r
            }
            SupportEval::Trig { .. } => {
                // 1/2 ∮ (h² - h'²) dθ, spectrally exact on the periodic grid
                let dt = 2.0 * PI / self.n as f64;
                0.5 * dt
                    * (0..self.n)
                        .map(|i| self.h[i] * self.h[i] - self.hp[i] * self.hp[i])
                        .sum::<f64>()
            }
        }
    }

    /// Boundary length.
    pub fn perimeter(&self) -> f64 {
        match &self.eval {
            SupportEval::PolygonOffset { verts, r } => {
                let poly = ConvexPolygon { verts: verts.clone() };
                poly.perimeter() + 2.0 * PI * r
            }
            SupportEval::Trig { .. } => {
                // ∮ (h + h'') dθ = ∮ h dθ
                let dt = 2.0 * PI / self.n as f64;
                dt * self.h.iter().sum::<f64>()
            }
        }
    }

    /// True if p is inside the body within tol (support test on the grid).
    pub fn contains(&self, p: Pt, tol: f64) -> bool {
        (0..self.n).all(|i| dot(p, self.us[i]) <= self.h[i] + tol)
    }

    /// Distance from an interior point to the boundary, as seen by the
    /// grid directions (exact up to O((2π/n)²)).
    pub fn boundary_distance(&self, p: Pt) -> f64 {
        (0..self.n)
            .map(|i| self.h[i] - dot(p, self.us[i]))
            .fold(f64::INFINITY, f64::min)
    }

    /// The offset polygon pieces when this body is a polygon offset.
    pub(crate) fn polygon_offset_parts(&self) -> Option<(&[Pt], f64)> {
        match &self.eval {
            SupportEval::PolygonOffset { verts, r } => Some((verts, *r)),
            _ => None,
        }
    }

    /// Trigonometric coefficients when this body carries smooth data.
    pub(crate) fn trig_parts(&self) -> Option<(&[f64], &[f64])> {
        match &self.eval {
            SupportEval::Trig { ac, as_ } => Some((ac, as_)),
            _ => None,
        }
    }
}

fn grid_directions(n: usize) -> Vec<Pt> {
    (0..n).map(|i| unit(2.0 * PI * i as f64 / n as f64)).collect()
}

fn eval_trig(ac: &[f64], as_: &[f64], theta: f64) -> (f64, f64, f64) {
    let mut h = 0.0;
    let mut hp = 0.0;
    let mut hpp = 0.0;
    for k in 0..ac.len() {
        let kf = k as f64;
        let (s, c) = (kf * theta).sin_cos();
        h += ac[k] * c + as_[k] * s;
        hp += kf * (-ac[k] * s + as_[k] * c);
        hpp += kf * kf * (-ac[k] * c - as_[k] * s);
    }
    (h, hp, hpp)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

// ---------------------------------------------------------------------------
// Domain: polygon or smooth body
// ---------------------------------------------------------------------------

/// A convex computational domain.
#[derive(Clone, Debug)]
pub enum Domain {
    Polygon(ConvexPolygon),
    Smooth(SupportBody),
}

/// Diameter, inradius, incenter and min x·ν of a domain with the origin
/// placed at the incenter.
#[derive(Clone, Copy, Debug)]
pub struct GeometrySummary {
    pub diameter: f64,
    pub inradius: f64,
    pub incenter: Pt,
    pub min_x_dot_nu: f64,
}

impl Domain {
    pub fn unit_square() -> Domain {
        Domain::Polygon(ConvexPolygon::unit_square())
    }

    pub fn unit_disk() -> Domain {
        Domain::Smooth(SupportBody::disk(1.0).unwrap())
    }

    pub fn support(&self, theta: f64) -> f64 {
        match self {
            Domain::Polygon(p) => p.support(theta),
            Domain::Smooth(b) => b.support(theta),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Polygon(p) => p.diameter(),
            Domain::Smooth(b) => b.diameter(),
        }
    }

    pub fn inradius_incenter(&self) -> Result<(f64, Pt)> {
        match self {
            Domain::Polygon(p) => p.inradius_incenter(),
            Domain::Smooth(b) => b.inradius_incenter(),
        }
    }

    pub fn min_x_dot_nu(&self, origin: Pt) -> Result<f64> {
        match self {
            Domain::Polygon(p) => p.min_x_dot_nu(origin),
            Domain::Smooth(b) => b.min_x_dot_nu(origin),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Polygon(p) => p.area(),
            Domain::Smooth(b) => b.area(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Domain::Polygon(p) => p.perimeter(),
            Domain::Smooth(b) => b.perimeter(),
        }
    }

    pub fn contains(&self, p: Pt, tol: f64) -> bool {
        match self {
            Domain::Polygon(poly) => poly.contains(p, tol),
            Domain::Smooth(b) => b.contains(p, tol),
        }
    }

    pub fn boundary_distance(&self, p: Pt) -> f64 {
        match self {
            Domain::Polygon(poly) => poly.boundary_distance(p),
            Domain::Smooth(b) => b.boundary_distance(p),
        }
    }

    /// Computes D, ρ, the incenter, and min x·ν with the origin at the
    /// incenter, checking 0 < ρ <= D/2 and min x·ν >= ρ - tol.
    pub fn geometry_summary(&self) -> Result<GeometrySummary> {
        let diameter = self.diameter();
        let (inradius, incenter) = self.inradius_incenter()?;
        if !(inradius > 0.0 && inradius <= 0.5 * diameter + GEOM_TOL) {
            return Err(Error::InvalidDomain(format!(
                "inradius/diameter invariant violated: rho = {inradius}, D = {diameter}"
            )));
        }
        let min_x_dot_nu = self.min_x_dot_nu(incenter)?;
        if min_x_dot_nu < inradius - 1e-9 {
            return Err(Error::InvalidDomain(format!(
                "min x . nu = {min_x_dot_nu} fell below inradius {inradius}"
            )));
        }
        Ok(GeometrySummary { diameter, inradius, incenter, min_x_dot_nu })
    }
}

/// Hausdorff distance between convex domains: for convex bodies this is the
/// sup-norm distance of support functions, evaluated over `m` directions.
pub fn hausdorff_distance_with(a: &Domain, b: &Domain, m: usize) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m {
        let t = 2.0 * PI * j as f64 / m as f64;
        let d = (a.support(t) - b.support(t)).abs();
        if d > best {
            best = d;
        }
    }
    best
}

/// Hausdorff distance on the default direction grid.
pub fn hausdorff_distance(a: &Domain, b: &Domain) -> f64 {
    hausdorff_distance_with(a, b, 2 * SUPPORT_GRID)
}

/// Outer parallel body as a domain-level operation.
pub fn outer_parallel_body(poly: &ConvexPolygon, r: f64) -> Result<SupportBody> {
    SupportBody::outer_parallel(poly, r)
}

/// Deterministic random convex polygon generator for property checks:
/// a convex hull of radially sampled points, canonicalized, with short
/// edges rejected so meshes stay well conditioned.
pub fn random_convex_polygon(rng: &mut Rng, target_vertices: usize) -> ConvexPolygon {
    loop {
        let n = target_vertices.max(4);
        let mut angles: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0 * PI).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pts: Vec<Pt> = angles
            .iter()
            .map(|&t| {
                let r = rng.next_range(0.55, 1.0);
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let hull = convex_hull(&pts);
        if hull.len() < 4 {
            continue;
        }
        if let Ok(poly) = ConvexPolygon::new(hull) {
            let d = poly.diameter();
            let min_edge = {
                let v = poly.vertices();
                (0..v.len())
                    .map(|i| dist(v[i], v[(i + 1) % v.len()]))
                    .fold(f64::INFINITY, f64::min)
            };
            if poly.num_vertices() >= 4 && min_edge > 0.08 * d {
                if let Ok((rho, _)) = poly.inradius_incenter() {
                    if rho > 0.15 * d {
                        return poly;
                    }
                }
            }
        }
    }
}

/// Strict convex hull by monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut pts: Vec<Pt> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| dist(*a, *b) <= GEOM_TOL);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Pt> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(sub(lower[lower.len() - 1], lower[lower.len() - 2]), sub(p, lower[lower.len() - 1]))
                <= GEOM_TOL
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Pt> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(sub(upper[upper.len() - 1], upper[upper.len() - 2]), sub(p, upper[upper.len() - 1]))
                <= GEOM_TOL
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{dist, tri_area};

    #[test]
    fn square_diameter_is_diagonal() {
        let sq = ConvexPolygon::unit_square();
        assert!((sq.diameter() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn disk_diameter_is_twice_radius() {
        for r in [0.5, 1.0, 2.5] {
            let d = SupportBody::disk(r).unwrap();
            assert!((d.diameter() - 2.0 * r).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn parallel_body_diameter_and_dense_sampling_agree() {
        let sq = ConvexPolygon::unit_square();
        let r = 0.25;
        let body = SupportBody::outer_parallel(&sq, r).unwrap();
        let d = body.diameter();
        assert!((d - (2.0f64.sqrt() + 2.0 * r)).abs() < 1e-14);
        // dense boundary sampling oracle: scan antipodal windows
        let mut dense = 0.0f64;
        let m = 20000;
        let pts: Vec<Pt> = (0..m).map(|i| body.boundary_point(2.0 * PI * i as f64 / m as f64)).collect();
        for i in 0..m {
            for k in 0..16 {
                let q = pts[(i + m / 2 - 8 + k) % m];
                dense = dense.max(dist(pts[i], q));
            }
        }
        // window sampling undershoots slightly; it must never exceed d
        assert!(dense <= d + 1e-12);
        assert!(dense > d - 1e-3);
    }

    #[test]
    fn square_inradius_incenter() {
        let sq = ConvexPolygon::unit_square();
        let (rho, c) = sq.inradius_incenter().unwrap();
        assert!((rho - 0.5).abs() < 1e-12);
        assert!(dist(c, [0.5, 0.5]) < 1e-10);
    }

    #[test]
    fn disk_inradius_incenter() {
        let d = SupportBody::disk(2.0).unwrap();
        let (rho, c) = d.inradius_incenter().unwrap();
        assert!((rho - 2.0).abs() < 1e-10);
        assert!(norm(c) < 1e-9);
    }

    #[test]
    fn triangle_inradius_matches_incircle_formula() {
        // oracle: rho = 2 * Area / perimeter for triangles
        let tri = ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (rho, c) = tri.inradius_incenter().unwrap();
        let oracle = 2.0 * tri.area() / tri.perimeter();
        assert!((rho - oracle).abs() < 1e-12, "rho = {rho}, oracle = {oracle}");
        // incircle center of this right triangle is (rho, rho)
        assert!(dist(c, [rho, rho]) < 1e-9);
    }

    #[test]
    fn random_triangle_inradius_matches_incircle_formula() {
        let mut rng = Rng::new(991);
        for _ in 0..50 {
            let a = [rng.next_sym(), rng.next_sym()];
            let b = [rng.next_sym() + 3.0, rng.next_sym()];
            let c = [rng.next_sym(), rng.next_sym() + 3.0];
            if tri_area(a, b, c).abs() < 0.3 {
                continue;
            }
            let tri = ConvexPolygon::new(vec![a, b, c]).unwrap();
            let (rho, _) = tri.inradius_incenter().unwrap();
            let oracle = 2.0 * tri.area() / tri.perimeter();
            assert!((rho - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn hausdorff_identity_and_parallel() {
        let sq = Domain::unit_square();
        assert_eq!(hausdorff_distance(&sq, &sq), 0.0);
        let r = 1.0 / 8.0;
        let body = SupportBody::outer_parallel(&ConvexPolygon::unit_square(), r).unwrap();
        let d = hausdorff_distance(&sq, &Domain::Smooth(body));
        assert!((d - r).abs() < 1e-14, "d = {d}");
    }

    #[test]
    fn hausdorff_square_vs_disk_brute_force() {
        // disk of radius 1/2 centered at the square's incenter
        let sq = ConvexPolygon::unit_square();
        let disk = SupportBody::disk(0.5).unwrap();
        let a = Domain::Polygon(sq.translate([-0.5, -0.5]));
        let b = Domain::Smooth(disk);
        let coarse = hausdorff_distance(&a, &b);
        let dense = hausdorff_distance_with(&a, &b, 1_000_000);
        // exact value: the corner excess sqrt(2)/2 - 1/2
        let exact = 0.5f64.sqrt() - 0.5;
        assert!((dense - exact).abs() < 1e-9);
        assert!((coarse - dense).abs() < 1e-6);
    }

    #[test]
    fn hausdorff_triangle_inequality_on_grid() {
        let mut rng = Rng::new(17);
        for _ in 0..20 {
            let a = Domain::Polygon(random_convex_polygon(&mut rng, 6));
            let b = Domain::Polygon(random_convex_polygon(&mut rng, 5));
            let c = Domain::Polygon(random_convex_polygon(&mut rng, 7));
            let dab = hausdorff_distance(&a, &b);
            let dbc = hausdorff_distance(&b, &c);
            let dac = hausdorff_distance(&a, &c);
            assert!(dac <= dab + dbc + 1e-12);
        }
    }

    #[test]
    fn parallel_body_nesting_and_exact_rates() {
        let sq = ConvexPolygon::unit_square();
        let (rho, _) = sq.inradius_incenter().unwrap();
        let d0 = sq.diameter();
        let mut prev: Option<SupportBody> = None;
        for k in 1..=6 {
            let r = 1.0 / k as f64 * 0.4; // keep r < rho
            let body = SupportBody::outer_parallel(&sq, r).unwrap();
            let (rk, _) = body.inradius_incenter().unwrap();
            assert!((rk - (rho + r)).abs() < 1e-14, "inradius rate at k = {k}");
            assert!((body.diameter() - (d0 + 2.0 * r)).abs() < 1e-14, "diameter rate at k = {k}");
            let dh = hausdorff_distance(&Domain::Polygon(sq.clone()), &Domain::Smooth(body.clone()));
            assert!((dh - r).abs() < 1e-14);
            if let Some(p) = prev {
                // larger r from the previous iteration contains this one
                for i in 0..body.grid_size() {
                    assert!(body.h_samples()[i] <= p.h_samples()[i] + 1e-15);
                }
            }
            prev = Some(body);
        }
    }

    #[test]
    fn min_x_dot_nu_square_and_disk() {
        let sq = ConvexPolygon::unit_square();
        assert!((sq.min_x_dot_nu([0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        let disk = SupportBody::disk(1.5).unwrap();
        assert!((disk.min_x_dot_nu([0.0, 0.0]).unwrap() - 1.5).abs() < 1e-12);
        assert!(sq.min_x_dot_nu([1.5, 0.5]).is_err());
    }

    #[test]
    fn min_x_dot_nu_at_incenter_dominates_inradius() {
        let mut rng = Rng::new(2024);
        for _ in 0..100 {
            let nv = 4 + (rng.next_u64() % 8) as usize;
            let poly = random_convex_polygon(&mut rng, nv);
            let (rho, c) = poly.inradius_incenter().unwrap();
            let m = poly.min_x_dot_nu(c).unwrap();
            assert!(m >= rho - 1e-12, "m = {m}, rho = {rho}");
        }
    }

    #[test]
    fn curvature_disk_and_parallel_body() {
        let d = SupportBody::disk(2.0).unwrap();
        for i in 0..d.grid_size() {
            let k = d.curvature(d.grid_angle(i)).unwrap();
            assert!((k - 0.5).abs() < 1e-12);
        }
        let r = 0.3;
        let body = SupportBody::outer_parallel(&ConvexPolygon::unit_square(), r).unwrap();
        for i in 0..body.grid_size() {
            let k = body.curvature(body.grid_angle(i)).unwrap();
            assert!(k > 0.0 && k <= 1.0 / r + 1e-12, "kappa = {k}");
            // on vertex fans the parallel body is exactly the circle of radius r
            assert!((k - 1.0 / r).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_ellipse_matches_closed_form() {
        let (a, b) = (1.3, 0.8);
        let e = SupportBody::ellipse(a, b).unwrap();
        // support-form radius of curvature of an ellipse: h + h'' = a²b²/h³
        for i in (0..e.grid_size()).step_by(37) {
            let t = e.grid_angle(i);
            let h = e.support(t);
            let kappa = e.curvature(t).unwrap();
            let oracle = h.powi(3) / (a * a * b * b);
            assert!((kappa - oracle).abs() < 1e-9 * oracle.max(1.0), "t = {t}");
        }
    }

    #[test]
    fn geometry_summary_invariants() {
        for dom in [Domain::unit_square(), Domain::unit_disk()] {
            let g = dom.geometry_summary().unwrap();
            assert!(g.inradius > 0.0 && g.inradius <= g.diameter / 2.0 + 1e-12);
            assert!(g.min_x_dot_nu >= g.inradius - 1e-12);
        }
    }

    #[test]
    fn degenerate_polygon_is_rejected() {
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]).is_err());
        // non-convex
        assert!(ConvexPolygon::new(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 2.0],
            [1.0, 0.5],
            [0.0, 2.0]
        ])
        .is_err());
    }

    #[test]
    fn outer_parallel_rejects_nonpositive_r() {
        let sq = ConvexPolygon::unit_square();
        assert!(SupportBody::outer_parallel(&sq, 0.0).is_err());
        assert!(SupportBody::outer_parallel(&sq, -0.1).is_err());
    }

    #[test]
    fn parallel_body_contains_polygon() {
        let mut rng = Rng::new(5);
        for _ in 0..10 {
            let poly = random_convex_polygon(&mut rng, 7);
            let body = SupportBody::outer_parallel(&poly, 0.1).unwrap();
            for v in poly.vertices() {
                assert!(body.contains(*v, 1e-12));
            }
        }
    }

    #[test]
    fn inner_parallel_square() {
        let sq = ConvexPolygon::unit_square();
        let inner = sq.inner_parallel(0.25).unwrap();
        assert!((inner.area() - 0.25).abs() < 1e-12);
        assert!(sq.inner_parallel(0.6).is_err());
    }

    #[test]
    fn steiner_area_of_parallel_body() {
        let sq = ConvexPolygon::unit_square();
        let r = 0.2;
        let body = SupportBody::outer_parallel(&sq, r).unwrap();
        assert!((body.area() - (1.0 + 4.0 * r + PI * r * r)).abs() < 1e-12);
        assert!((body.perimeter() - (4.0 + 2.0 * PI * r)).abs() < 1e-12);
    }

    #[test]
    fn trig_area_and_perimeter_of_disk() {
        let d = SupportBody::disk(1.0).unwrap();
        assert!((d.area() - PI).abs() < 1e-10);
        assert!((d.perimeter() - 2.0 * PI).abs() < 1e-10);
    }
}
