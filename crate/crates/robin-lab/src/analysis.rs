//! Discrete verification of the quantitative identities and bounds
//! attached to the Robin problem on convex domains: the ε-trace
//! inequality and its sharp discrete constant, the coercivity bound for
//! β < 0, the Rellich-Pohozaev identity, Reilly's formula on smooth
//! bodies, the tangential-gradient bound on the boundary, and the
//! explicit Hessian bounds with their constant C(D, ρ, β, t).
//!
//! Boundary tangential operators act on the closed loop of boundary dofs
//! through arclength differencing chosen to be summation-by-parts
//! compatible: with segment derivatives (u_{i+1} - u_i)/Δ_i and node
//! weights (Δ_{i-1} + Δ_i)/2 the discrete identity
//! ∮ (Δ_∂Ω u) u = -∮ |∂u/∂s|² holds exactly (Abel summation on the loop),
//! mirroring the integration by parts used in the continuum argument.

use crate::eigensolve::{pencil_extreme, ExtremePair, SpectralResult, Which, EIG_TOL};
use crate::fem::{element_hessian, grad_in_tri, FemSpace, SymPencil};
use crate::geometry::GeometrySummary;
use crate::sparse::{combine, quad_form};
use crate::util::{add, dot, scale, sub, Json, Pt};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Per-term record of one verified identity or bound.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub name: String,
    /// labeled term values, in insertion order
    pub terms: Vec<(String, f64)>,
    /// sum of terms for identities; lhs - rhs for inequalities
    pub residual: f64,
    /// |residual| / max(scale, 1)
    pub relative_residual: f64,
    /// largest |term|
    pub scale: f64,
    pub h: f64,
    pub beta: f64,
    pub lambda: Option<f64>,
    pub domain: String,
    pub flags: Vec<String>,
}

impl IdentityReport {
    fn new(name: &str, domain: &str, h: f64, beta: f64, lambda: Option<f64>) -> Self {
        IdentityReport {
            name: name.into(),
            terms: Vec::new(),
            residual: 0.0,
            relative_residual: 0.0,
            scale: 0.0,
            h,
            beta,
            lambda,
            domain: domain.into(),
            flags: Vec::new(),
        }
    }

    fn push(&mut self, label: &str, value: f64) {
        self.terms.push((label.into(), value));
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|(l, _)| l == label).map(|&(_, v)| v)
    }

    fn finish(&mut self, residual: f64) {
        self.scale = self.terms.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        self.residual = residual;
        self.relative_residual = residual.abs() / self.scale.max(1.0);
    }

    pub fn to_json(&self) -> Json {
        let mut o = Json::obj();
        o.push("name", Json::Str(self.name.clone()));
        let mut terms = Json::obj();
        for (l, v) in &self.terms {
            terms.push(l, Json::Num(*v));
        }
        o.push("terms", terms);
        o.push("residual", Json::Num(self.residual));
        o.push("relative_residual", Json::Num(self.relative_residual));
        o.push("h", Json::Num(self.h));
        o.push("beta", Json::Num(self.beta));
        o.push(
            "lambda",
            match self.lambda {
                Some(l) => Json::Num(l),
                None => Json::Null,
            },
        );
        o.push("domain", Json::Str(self.domain.clone()));
        o.push("flags", Json::Arr(self.flags.iter().map(|f| Json::Str(f.clone())).collect()));
        o
    }
}

// ---------------------------------------------------------------------------
// Boundary trace operators
// ---------------------------------------------------------------------------

/// Boundary restriction of a finite element function together with its
/// discrete tangential and normal derivative data.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    /// boundary dofs in loop order
    pub dofs: Vec<usize>,
    /// arclength positions of the dofs along the chord polyline
    pub s: Vec<f64>,
    /// u at the boundary dofs
    pub u: Vec<f64>,
    /// segment lengths Δ_i between consecutive dofs
    pub seg_len: Vec<f64>,
    /// ∂u/∂s on each segment, (u_{i+1} - u_i)/Δ_i
    pub du_ds: Vec<f64>,
    /// ∂_ν u on each segment via the Robin relation -βu (the primary form)
    pub dn_robin: Vec<f64>,
    /// ∂_ν u on each segment from the one-sided element gradient
    pub dn_onesided: Vec<f64>,
    /// x·ν per segment (x from the chosen origin)
    pub x_dot_nu: Vec<f64>,
    /// x·t per segment
    pub x_dot_t: Vec<f64>,
    /// boundary Laplacian Δ_∂Ω u at the dofs
    pub lap: Vec<f64>,
    /// node quadrature weights (Δ_{i-1} + Δ_i)/2
    pub node_w: Vec<f64>,
    /// curvature per segment, when the boundary curve provides it
    pub kappa: Option<Vec<f64>>,
}

impl BoundaryTrace {
    /// ∮ ∂u/∂s ds (telescopes to zero on the closed loop).
    pub fn circulation(&self) -> f64 {
        self.du_ds.iter().zip(self.seg_len.iter()).map(|(d, l)| d * l).sum()
    }

    /// ∮ |∂u/∂s|² ds.
    pub fn tangential_energy(&self) -> f64 {
        self.du_ds.iter().zip(self.seg_len.iter()).map(|(d, l)| d * d * l).sum()
    }

    /// ∮ (Δ_∂Ω u) u ds with the node weights (exactly minus the
    /// tangential energy by summation by parts).
    pub fn laplacian_pairing(&self) -> f64 {
        (0..self.u.len()).map(|i| self.node_w[i] * self.lap[i] * self.u[i]).sum()
    }

    /// ∮ u² ds by the segment midpoint rule.
    pub fn boundary_mass_midpoint(&self) -> f64 {
        let nb = self.u.len();
        (0..nb)
            .map(|i| {
                let um = 0.5 * (self.u[i] + self.u[(i + 1) % nb]);
                um * um * self.seg_len[i]
            })
            .sum()
    }
}

/// Builds the boundary trace of `u` with x measured from `origin`. The
/// normal derivative is stored both through the Robin relation -βu and as
/// the one-sided element gradient.
pub fn boundary_trace(space: &FemSpace, u: &[f64], beta: f64, origin: Pt) -> BoundaryTrace {
    let nb = space.boundary_dofs.len();
    let dofs = space.boundary_dofs.clone();
    let uvals: Vec<f64> = dofs.iter().map(|&d| u[d]).collect();
    let mut seg_len = Vec::with_capacity(nb);
    let mut du_ds = Vec::with_capacity(nb);
    let mut dn_robin = Vec::with_capacity(nb);
    let mut dn_onesided = Vec::with_capacity(nb);
    let mut x_dot_nu = Vec::with_capacity(nb);
    let mut x_dot_t = Vec::with_capacity(nb);

    // adjacent triangle of each mesh boundary edge (for one-sided gradients)
    let mut edge_tri: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, tri) in space.mesh.tris.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            edge_tri.insert((a.min(b), a.max(b)), t);
        }
    }

    for (i, seg) in space.boundary_segs.iter().enumerate() {
        let next = (i + 1) % nb;
        seg_len.push(seg.len);
        du_ds.push((uvals[next] - uvals[i]) / seg.len);
        let p0 = space.dof_coords[dofs[i]];
        let p1 = space.dof_coords[dofs[next]];
        let mid = scale(add(p0, p1), 0.5);
        let x = sub(mid, origin);
        x_dot_nu.push(dot(x, seg.normal));
        x_dot_t.push(dot(x, seg.tangent));
        let umid = 0.5 * (uvals[i] + uvals[next]);
        dn_robin.push(-beta * umid);
        let be = &space.mesh.boundary_edges[seg.mesh_edge];
        let t = edge_tri[&(be.a.min(be.b), be.a.max(be.b))];
        let g = grad_in_tri(space, u, t, mid);
        dn_onesided.push(dot(g, seg.normal));
    }

    let mut node_w = Vec::with_capacity(nb);
    let mut lap = Vec::with_capacity(nb);
    for i in 0..nb {
        let prev = (i + nb - 1) % nb;
        let w = 0.5 * (seg_len[prev] + seg_len[i]);
        node_w.push(w);
        lap.push((du_ds[i] - du_ds[prev]) / w);
    }

    let kappa = {
        let per_seg: Option<Vec<f64>> = space
            .boundary_segs
            .iter()
            .map(|seg| space.mesh.curve.curvature(seg.curve_param))
            .collect();
        per_seg
    };

    BoundaryTrace {
        dofs,
        s: space.boundary_s.clone(),
        u: uvals,
        seg_len,
        du_ds,
        dn_robin,
        dn_onesided,
        x_dot_nu,
        x_dot_t,
        lap,
        node_w,
        kappa,
    }
}

// ---------------------------------------------------------------------------
// Trace constant and coercivity
// ---------------------------------------------------------------------------

/// Sharp discrete trace constant C(ε) with its extremal vector: the
/// largest eigenvalue of the pencil (B - εK, M), clamped at zero.
pub fn trace_constant(pencil: &SymPencil, eps: f64) -> Result<ExtremePair> {
    crate::eigensolve::trace_constant_value(pencil, eps)
}

/// Verifies the discrete coercivity bound for β < 0: with
/// c* = min{1 + βε, -βC(ε)} the matrix
/// K + βB - 2βC(ε)M - c*(K + M) must be positive semidefinite. Reports
/// the smallest pencil eigenvalue against M.
pub fn coercivity_check(
    pencil: &SymPencil,
    beta: f64,
    eps: f64,
    h: f64,
    domain: &str,
) -> Result<IdentityReport> {
    if !(beta < 0.0) {
        return Err(Error::InvalidArgument("coercivity_check requires beta < 0".into()));
    }
    if !(eps > 0.0 && eps < -1.0 / beta) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in (0, {}), got {eps}",
            -1.0 / beta
        )));
    }
    let c_eps = trace_constant(pencil, eps)?.value;
    let c_star = (1.0 + beta * eps).min(-beta * c_eps);
    let q = combine(&[
        (&pencil.k, 1.0 - c_star),
        (&pencil.b, beta),
        (&pencil.m, -2.0 * beta * c_eps - c_star),
    ]);
    let ext = pencil_extreme(&pencil.pattern, &q, &pencil.m, Which::Smallest, EIG_TOL)?;
    let mut rep = IdentityReport::new("coercivity", domain, h, beta, None);
    rep.push("c_eps", c_eps);
    rep.push("eps", eps);
    rep.push("c_star", c_star);
    rep.push("min_pencil_eigenvalue", ext.value);
    rep.push("solver_residual", ext.residual);
    rep.finish(ext.value.min(0.0));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Rellich-Pohozaev identity
// ---------------------------------------------------------------------------

/// Evaluates the Rellich-Pohozaev identity for an eigenpair (u, λ) with
/// the position vector x measured from `origin` (the incenter, so that
/// x·ν >= ρ on the boundary). All six terms are emitted (the volume
/// gradient term vanishes at n = 2 but is reported); the primary normal
/// derivative is the Robin relation -βu, with the one-sided discrete
/// variant emitted alongside.
pub fn rellich_pohozaev(
    space: &FemSpace,
    pencil: &SymPencil,
    u: &[f64],
    lambda: f64,
    beta: f64,
    origin: Pt,
    domain: &str,
) -> IdentityReport {
    let tr = boundary_trace(space, u, beta, origin);
    let nb = tr.u.len();
    let n_dim = 2.0;
    let mass = quad_form(&pencil.pattern, &pencil.m, u, u);
    let energy = quad_form(&pencil.pattern, &pencil.k, u, u);

    let mut t1 = 0.0; // (λ/2) ∮ u² x·ν
    let mut t3 = 0.0; // (1/2) ∮ (∂_ν u)² x·ν
    let mut t3o = 0.0;
    let mut t4 = 0.0; // -(1/2) ∮ |∇_∂Ω u|² x·ν
    let mut t5 = 0.0; // ∮ ∂_ν u (x · ∇_∂Ω u)
    let mut t5o = 0.0;
    for i in 0..nb {
        let next = (i + 1) % nb;
        let um = 0.5 * (tr.u[i] + tr.u[next]);
        let l = tr.seg_len[i];
        let xn = tr.x_dot_nu[i];
        t1 += 0.5 * lambda * um * um * xn * l;
        t3 += 0.5 * tr.dn_robin[i] * tr.dn_robin[i] * xn * l;
        t3o += 0.5 * tr.dn_onesided[i] * tr.dn_onesided[i] * xn * l;
        t4 -= 0.5 * tr.du_ds[i] * tr.du_ds[i] * xn * l;
        t5 += tr.dn_robin[i] * tr.x_dot_t[i] * tr.du_ds[i] * l;
        t5o += tr.dn_onesided[i] * tr.x_dot_t[i] * tr.du_ds[i] * l;
    }
    let t2 = -0.5 * lambda * n_dim * mass;
    let t6 = 0.5 * (n_dim - 2.0) * energy;

    let mut rep = IdentityReport::new("rellich_pohozaev", domain, space.mesh.h_target, beta, Some(lambda));
    rep.push("boundary_mass_term", t1);
    rep.push("volume_mass_term", t2);
    rep.push("normal_derivative_term", t3);
    rep.push("tangential_term", t4);
    rep.push("mixed_term", t5);
    rep.push("volume_gradient_term", t6);
    rep.push("normal_derivative_term_onesided", t3o);
    rep.push("mixed_term_onesided", t5o);
    let residual = t1 + t2 + t3 + t4 + t5 + t6;
    let residual_onesided = t1 + t2 + t3o + t4 + t5o + t6;
    rep.push("residual_onesided", residual_onesided);
    rep.finish(residual);
    rep
}

// ---------------------------------------------------------------------------
// Reilly's formula on smooth bodies
// ---------------------------------------------------------------------------

/// Evaluates Reilly's formula for an eigenpair on a smooth convex body
/// (in 2D the curvature κ plays both the mean-curvature and the second
/// fundamental form roles): the broken Hessian seminorm must balance
/// λ² ∫u² minus the boundary terms κ(∂_ν u)² + 2 Δ_∂Ω u ∂_ν u + κ|∇_∂Ω u|².
/// Fails on polygons, where curvature is a corner measure.
pub fn reilly_check(
    space: &FemSpace,
    pencil: &SymPencil,
    u: &[f64],
    lambda: f64,
    beta: f64,
    domain: &str,
) -> Result<IdentityReport> {
    if space.order != 2 {
        return Err(Error::Unsupported("reilly_check needs a P2 space".into()));
    }
    let tr = boundary_trace(space, u, beta, [0.0, 0.0]);
    let kappa = tr.kappa.clone().ok_or_else(|| {
        Error::Unsupported("reilly_check needs a smooth boundary (curvature on polygons is a corner measure)".into())
    })?;

    let mass = quad_form(&pencil.pattern, &pencil.m, u, u);
    let mut hess2 = 0.0;
    let mut lap2_broken = 0.0;
    for t in 0..space.mesh.num_tris() {
        let area = space.mesh.tri_area(t);
        let h = element_hessian(space, u, t)?;
        hess2 += area * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
        let lap = h[0] + h[2];
        lap2_broken += area * lap * lap;
    }
    let lap2_analytic = lambda * lambda * mass;

    let nb = tr.u.len();
    let mut b_curv = 0.0; // ∮ κ (∂_ν u)²
    let mut b_ii = 0.0; // ∮ κ |∇_∂Ω u|²
    for i in 0..nb {
        let l = tr.seg_len[i];
        b_curv += kappa[i] * tr.dn_robin[i] * tr.dn_robin[i] * l;
        b_ii += kappa[i] * tr.du_ds[i] * tr.du_ds[i] * l;
    }
    // 2 ∮ Δ_∂Ω u ∂_ν u with ∂_ν u = -βu, paired at the nodes
    let b_lap = -2.0 * beta * tr.laplacian_pairing();
    // equal form by exact discrete summation by parts
    let b_lap_parts = 2.0 * beta * tr.tangential_energy();

    let mut rep = IdentityReport::new("reilly", domain, space.mesh.h_target, beta, Some(lambda));
    rep.push("hessian_broken", hess2);
    rep.push("laplacian_sq_analytic", lap2_analytic);
    rep.push("laplacian_sq_broken", lap2_broken);
    rep.push("curvature_normal_term", b_curv);
    rep.push("laplacian_normal_term", b_lap);
    rep.push("laplacian_normal_term_by_parts", b_lap_parts);
    rep.push("second_fundamental_term", b_ii);
    let residual = hess2 - (lap2_analytic - (b_curv + b_lap + b_ii));
    rep.finish(residual);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Explicit bound constant and bound checks
// ---------------------------------------------------------------------------

/// Value of the explicit constant together with its radicand; a negative
/// radicand is flagged (and clamped to zero inside the square root), not
/// fatal: on true eigenpairs the discriminant is non-negative and discrete
/// perturbations may only graze below zero.
#[derive(Clone, Copy, Debug)]
pub struct BoundConstant {
    pub value: f64,
    pub radicand: f64,
    pub flagged: bool,
}

/// The constant
/// C(D, ρ, β, t) = (D|β|√t + √((D²β² - (β(n-2) - |λ+β²|D)ρ) t - 2λρ))² ρ⁻²
/// evaluated verbatim for dimension n.
pub fn bound_constant(d: f64, rho: f64, beta: f64, lambda: f64, t: f64, n: f64) -> BoundConstant {
    let radicand =
        (d * d * beta * beta - (beta * (n - 2.0) - (lambda + beta * beta).abs() * d) * rho) * t
            - 2.0 * lambda * rho;
    let flagged = radicand < 0.0;
    let root = radicand.max(0.0).sqrt();
    let s = d * beta.abs() * t.max(0.0).sqrt() + root;
    BoundConstant { value: s * s / (rho * rho), radicand, flagged }
}

/// Checks the tangential-gradient bound
/// ∮ |∇_∂Ω u|² <= C(D, ρ, β, λ_j, ∮u²) for the j-th eigenpair.
pub fn tangential_bound_check(
    space: &FemSpace,
    pencil: &SymPencil,
    result: &SpectralResult,
    j: usize,
    geom: &GeometrySummary,
    domain: &str,
) -> IdentityReport {
    let u = &result.vectors[j];
    let lambda = result.lambdas[j];
    let tr = boundary_trace(space, u, result.beta, geom.incenter);
    let lhs = tr.tangential_energy();
    let t = quad_form(&pencil.pattern, &pencil.b, u, u);
    let c = bound_constant(geom.diameter, geom.inradius, result.beta, lambda, t, 2.0);
    let mut rep = IdentityReport::new("tangential_bound", domain, space.mesh.h_target, result.beta, Some(lambda));
    rep.push("lhs_tangential_energy", lhs);
    rep.push("rhs_bound_constant", c.value);
    rep.push("boundary_mass_t", t);
    rep.push("radicand", c.radicand);
    rep.push("slack", c.value - lhs);
    if c.flagged {
        rep.flags.push(format!("negative_radicand:{:.3e}", c.radicand));
    }
    rep.finish(lhs - c.value);
    rep
}

/// Checks the Hessian bound for the j-th eigenpair: lhs is the broken P2
/// Hessian seminorm, rhs is λ² for β >= 0 and
/// λ² - 2β C(D, ρ, β, (ελ + C(ε))/(1 + εβ)) for β < 0 (ε in (0, -1/β)).
/// The Reilly chain value λ² - 2β ∮|∇_∂Ω u|² and the raw-trace variant of
/// the constant are emitted alongside.
pub fn hessian_bound_check(
    space: &FemSpace,
    pencil: &SymPencil,
    result: &SpectralResult,
    j: usize,
    geom: &GeometrySummary,
    eps: Option<f64>,
    domain: &str,
) -> Result<IdentityReport> {
    if space.order != 2 {
        return Err(Error::Unsupported(
            "hessian_bound_check needs P2 (the broken P1 Hessian vanishes identically)".into(),
        ));
    }
    let beta = result.beta;
    let u = &result.vectors[j];
    let lambda = result.lambdas[j];
    let mass = quad_form(&pencil.pattern, &pencil.m, u, u);
    let mut lhs = 0.0;
    for t in 0..space.mesh.num_tris() {
        let area = space.mesh.tri_area(t);
        let h = element_hessian(space, u, t)?;
        lhs += area * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
    }
    let tr = boundary_trace(space, u, beta, geom.incenter);
    let chain = lambda * lambda * mass - 2.0 * beta * tr.tangential_energy();
    let t_raw = quad_form(&pencil.pattern, &pencil.b, u, u);
    let c_raw = bound_constant(geom.diameter, geom.inradius, beta, lambda, t_raw, 2.0);

    let mut rep = IdentityReport::new("hessian_bound", domain, space.mesh.h_target, beta, Some(lambda));
    rep.push("lhs_hessian_broken", lhs);
    let rhs = if beta >= 0.0 {
        lambda * lambda * mass
    } else {
        let eps = eps.ok_or_else(|| {
            Error::InvalidArgument("hessian_bound_check with beta < 0 needs eps".into())
        })?;
        if !(eps > 0.0 && eps < -1.0 / beta) {
            return Err(Error::InvalidArgument(format!(
                "eps must lie in (0, {}), got {eps}",
                -1.0 / beta
            )));
        }
        let c_eps = trace_constant(pencil, eps)?.value;
        let t_trace = (eps * lambda + c_eps) / (1.0 + eps * beta);
        let c = bound_constant(geom.diameter, geom.inradius, beta, lambda, t_trace, 2.0);
        rep.push("c_eps", c_eps);
        rep.push("t_trace", t_trace);
        rep.push("radicand", c.radicand);
        if c.flagged {
            rep.flags.push(format!("negative_radicand:{:.3e}", c.radicand));
        }
        lambda * lambda * mass - 2.0 * beta * c.value
    };
    rep.push("rhs_bound", rhs);
    rep.push("rhs_reilly_chain", chain);
    rep.push("rhs_raw_trace_constant", lambda * lambda * mass - 2.0 * beta.min(0.0) * c_raw.value);
    rep.push("radicand_raw", c_raw.radicand);
    rep.push("slack", rhs - lhs);
    if c_raw.flagged {
        rep.flags.push(format!("negative_radicand_raw:{:.3e}", c_raw.radicand));
    }
    rep.finish(lhs - rhs);
    Ok(rep)
}

/// Broken Hessian seminorm over the triangles selected by `keep`.
pub fn hessian_norm2_subset(
    space: &FemSpace,
    u: &[f64],
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    let mut out = 0.0;
    for t in 0..space.mesh.num_tris() {
        if keep(t) {
            let h = element_hessian(space, u, t)?;
            out += space.mesh.tri_area(t) * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
        }
    }
    Ok(out)
}

/// Number of eigenvalues strictly below -1e-10. Errors when the window is
/// inconclusive (λ_J <= 0, so more eigenvalues might be negative).
pub fn negative_count(result: &SpectralResult) -> Result<usize> {
    let last = *result.lambdas.last().expect("nonempty spectrum");
    if last <= 0.0 {
        return Err(Error::InvalidArgument(
            "negative_count inconclusive: largest computed eigenvalue is not positive; increase J"
                .into(),
        ));
    }
    Ok(result.lambdas.iter().filter(|&&l| l < -1e-10).count())
}
