//! P1/P2 Lagrange spaces on triangle meshes and exact assembly of the
//! three quadratic forms of the weak Robin problem: stiffness
//! K = ∫ ∇u·∇v, mass M = ∫ uv, and boundary mass B = ∮ uv.
//!
//! Elements are affine; quadrature rules are exact for the polynomial
//! degree of every integrand (degree 2 for stiffness products of P2,
//! degree 4 for P2 mass), so no quadrature error enters the identity
//! residual budgets downstream. Symmetry holds by construction: element
//! matrices are computed symmetric and scattered whole.

use crate::mesh::TriMesh;
use crate::sparse::{combine, matvec, Pattern};
use crate::util::{dot, sub, Pt};
use crate::{Error, Result};
use std::sync::Arc;

/// One boundary integration segment between two consecutive boundary dofs
/// along the loop. For P1 these are the mesh boundary edges; for P2 each
/// mesh boundary edge splits at its edge dof into two half-segments.
#[derive(Clone, Copy, Debug)]
pub struct BoundarySeg {
    /// dof at the segment start (loop order)
    pub d0: usize,
    /// dof at the segment end
    pub d1: usize,
    pub len: f64,
    /// outward unit normal of the underlying mesh boundary edge
    pub normal: Pt,
    /// unit tangent along the loop direction
    pub tangent: Pt,
    /// index of the underlying mesh boundary edge
    pub mesh_edge: usize,
    /// boundary-curve parameter at the segment midpoint (for curvature)
    pub curve_param: f64,
}

/// A P1 or P2 Lagrange finite element space on a triangle mesh.
#[derive(Clone, Debug)]
pub struct FemSpace {
    pub mesh: Arc<TriMesh>,
    pub order: u8,
    pub ndof: usize,
    pub dof_coords: Vec<Pt>,
    /// sorted unique mesh edges; for P2 the dof of edge e is nv + e
    pub edges: Vec<(usize, usize)>,
    /// per-triangle dof lists: [v0,v1,v2] or [v0,v1,v2, m01, m12, m20]
    pub tri_dofs: Vec<Vec<usize>>,
    /// boundary dofs in loop order (nodes interleaved with edge dofs for P2)
    pub boundary_dofs: Vec<usize>,
    /// chord-polyline arclength position of each boundary dof
    pub boundary_s: Vec<f64>,
    /// integration segments between consecutive boundary dofs
    pub boundary_segs: Vec<BoundarySeg>,
}

/// The assembled symmetric forms on a shared sparsity pattern.
#[derive(Clone, Debug)]
pub struct SymPencil {
    pub pattern: Pattern,
    pub k: Vec<f64>,
    pub m: Vec<f64>,
    pub b: Vec<f64>,
    pub ndof: usize,
}

impl SymPencil {
    /// A = K + βB on the shared pattern.
    pub fn robin_matrix(&self, beta: f64) -> Vec<f64> {
        combine(&[(&self.k, 1.0), (&self.b, beta)])
    }

    pub fn apply(&self, vals: &[f64], x: &[f64], y: &mut [f64]) {
        matvec(&self.pattern, vals, x, y)
    }
}

/// Builds the dof layout for a mesh and order (1 or 2). Deterministic:
/// node dofs come first in mesh order, then edge dofs in sorted edge order.
pub fn build_space(mesh: &Arc<TriMesh>, order: u8) -> Result<FemSpace> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidArgument(format!("order must be 1 or 2, got {order}")));
    }
    let nv = mesh.num_nodes();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * mesh.num_tris());
    for t in &mesh.tris {
        for k in 0..3 {
            let a = t[k];
            let b = t[(k + 1) % 3];
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let edge_index = |a: usize, b: usize| -> usize {
        let key = (a.min(b), a.max(b));
        edges.binary_search(&key).expect("triangle edge must exist")
    };

    let ndof = if order == 1 { nv } else { nv + edges.len() };
    let mut dof_coords: Vec<Pt> = mesh.nodes.clone();
    if order == 2 {
        for &(a, b) in &edges {
            let pa = mesh.nodes[a];
            let pb = mesh.nodes[b];
            dof_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let tri_dofs: Vec<Vec<usize>> = mesh
        .tris
        .iter()
        .map(|t| {
            let mut d = vec![t[0], t[1], t[2]];
            if order == 2 {
                d.push(nv + edge_index(t[0], t[1]));
                d.push(nv + edge_index(t[1], t[2]));
                d.push(nv + edge_index(t[2], t[0]));
            }
            d
        })
        .collect();

    // boundary dofs along the loop with chord arclength positions
    let nb = mesh.boundary_loop.len();
    let arclen = mesh.boundary_arclengths();
    let mut boundary_dofs = Vec::new();
    let mut boundary_s = Vec::new();
    let mut boundary_segs = Vec::new();
    for e in 0..nb {
        let a = mesh.boundary_loop[e];
        let b = mesh.boundary_loop[(e + 1) % nb];
        let be = &mesh.boundary_edges[e];
        let tangent = {
            let d = sub(mesh.nodes[b], mesh.nodes[a]);
            [d[0] / be.len, d[1] / be.len]
        };
        boundary_dofs.push(a);
        boundary_s.push(arclen[e]);
        let t_a = mesh.boundary_param[e];
        let t_b = mesh.boundary_param[(e + 1) % nb];
        if order == 2 {
            let m = nv + edge_index(a, b);
            let t_m = mesh.curve.mid_param(t_a, t_b);
            boundary_segs.push(BoundarySeg {
                d0: a,
                d1: m,
                len: 0.5 * be.len,
                normal: be.normal,
                tangent,
                mesh_edge: e,
                curve_param: mesh.curve.mid_param(t_a, t_m),
            });
            boundary_segs.push(BoundarySeg {
                d0: m,
                d1: b,
                len: 0.5 * be.len,
                normal: be.normal,
                tangent,
                mesh_edge: e,
                curve_param: mesh.curve.mid_param(t_m, t_b),
            });
            boundary_dofs.push(m);
            boundary_s.push(arclen[e] + 0.5 * be.len);
        } else {
            boundary_segs.push(BoundarySeg {
                d0: a,
                d1: b,
                len: be.len,
                normal: be.normal,
                tangent,
                mesh_edge: e,
                curve_param: mesh.curve.mid_param(t_a, t_b),
            });
        }
    }

    Ok(FemSpace {
        mesh: Arc::clone(mesh),
        order,
        ndof,
        dof_coords,
        edges,
        tri_dofs,
        boundary_dofs,
        boundary_s,
        boundary_segs,
    })
}

// ---------------------------------------------------------------------------
// Reference element data
// ---------------------------------------------------------------------------

/// Degree-4 6-point rule on the reference triangle (barycentric points and
/// weights summing to 1); exact for quartics, used for P2 mass.
const DUNAVANT4: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const B: f64 = 0.091_576_213_509_771;
    const WB: f64 = 0.109_951_743_655_322;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

/// Degree-2 3-point edge-midpoint rule (exact for quadratics).
const MIDPOINT3: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// P2 shape values at a barycentric point, dof order
/// [v1, v2, v3, m12, m23, m31].
fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// P2 shape gradients in reference coordinates (ξ = λ2, η = λ3).
fn p2_ref_grads(l: [f64; 3]) -> [[f64; 2]; 6] {
    let (xi, eta) = (l[1], l[2]);
    [
        [4.0 * xi + 4.0 * eta - 3.0, 4.0 * xi + 4.0 * eta - 3.0],
        [4.0 * xi - 1.0, 0.0],
        [0.0, 4.0 * eta - 1.0],
        [4.0 - 8.0 * xi - 4.0 * eta, -4.0 * xi],
        [4.0 * eta, 4.0 * xi],
        [-4.0 * eta, 4.0 - 4.0 * xi - 8.0 * eta],
    ]
}

/// Constant reference Hessians [Nξξ, Nξη, Nηη] of the P2 shapes.
const P2_REF_HESS: [[f64; 3]; 6] = [
    [4.0, 4.0, 4.0],
    [4.0, 0.0, 0.0],
    [0.0, 0.0, 4.0],
    [-8.0, -4.0, 0.0],
    [0.0, 4.0, 0.0],
    [0.0, -4.0, -8.0],
];

/// Geometry of an affine triangle: inverse-transpose Jacobian columns and
/// the element area.
struct AffineTri {
    /// rows of J^{-T}: grad_x N = Jit * grad_ref N
    jit: [[f64; 2]; 2],
    area: f64,
}

fn affine_tri(p0: Pt, p1: Pt, p2: Pt) -> AffineTri {
    let j11 = p1[0] - p0[0];
    let j21 = p1[1] - p0[1];
    let j12 = p2[0] - p0[0];
    let j22 = p2[1] - p0[1];
    let det = j11 * j22 - j12 * j21;
    // J^{-1} = 1/det [j22 -j12; -j21 j11]; J^{-T} is its transpose
    let jit = [[j22 / det, -j21 / det], [-j12 / det, j11 / det]];
    AffineTri { jit, area: 0.5 * det }
}

impl AffineTri {
    fn phys_grad(&self, g: [f64; 2]) -> Pt {
        [
            self.jit[0][0] * g[0] + self.jit[0][1] * g[1],
            self.jit[1][0] * g[0] + self.jit[1][1] * g[1],
        ]
    }
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Assembles stiffness, mass and boundary mass with exact quadrature.
pub fn assemble(space: &FemSpace) -> SymPencil {
    let p = Pattern::from_elements(space.ndof, space.tri_dofs.iter().map(|d| d.as_slice()));
    let mut k = vec![0.0; p.nnz()];
    let mut m = vec![0.0; p.nnz()];
    let nl = if space.order == 1 { 3 } else { 6 };
    let mut ke = vec![0.0; nl * nl];
    let mut me = vec![0.0; nl * nl];
    for (t, dofs) in space.tri_dofs.iter().enumerate() {
        let [a, b, c] = space.mesh.tris[t];
        let tri = affine_tri(space.mesh.nodes[a], space.mesh.nodes[b], space.mesh.nodes[c]);
        ke.iter_mut().for_each(|v| *v = 0.0);
        me.iter_mut().for_each(|v| *v = 0.0);
        if space.order == 1 {
            // closed forms: constant gradients, quadratic mass integrand
            let g = [
                tri.phys_grad([-1.0, -1.0]),
                tri.phys_grad([1.0, 0.0]),
                tri.phys_grad([0.0, 1.0]),
            ];
            for i in 0..3 {
                for j in 0..3 {
                    ke[i * 3 + j] = tri.area * dot(g[i], g[j]);
                    me[i * 3 + j] = tri.area * if i == j { 1.0 / 6.0 } else { 1.0 / 12.0 };
                }
            }
        } else {
            // stiffness: degree-2 rule on linear gradients
            for (lam, w) in MIDPOINT3 {
                let gr = p2_ref_grads(lam);
                let g: Vec<Pt> = gr.iter().map(|&gi| tri.phys_grad(gi)).collect();
                for i in 0..6 {
                    for j in 0..6 {
                        ke[i * 6 + j] += w * tri.area * dot(g[i], g[j]);
                    }
                }
            }
            // mass: degree-4 rule on quartic products
            for (lam, w) in DUNAVANT4 {
                let n = p2_values(lam);
                for i in 0..6 {
                    for j in 0..6 {
                        me[i * 6 + j] += w * tri.area * n[i] * n[j];
                    }
                }
            }
        }
        for (il, &gi) in dofs.iter().enumerate() {
            for (jl, &gj) in dofs.iter().enumerate() {
                let idx = p.find(gi, gj).expect("element pair in pattern");
                k[idx] += ke[il * nl + jl];
                m[idx] += me[il * nl + jl];
            }
        }
    }

    // boundary mass, edge-wise exact 1D integration
    let mut bvals = vec![0.0; p.nnz()];
    let nb = space.mesh.boundary_loop.len();
    let nv = space.mesh.num_nodes();
    for e in 0..nb {
        let a = space.mesh.boundary_loop[e];
        let b = space.mesh.boundary_loop[(e + 1) % nb];
        let l = space.mesh.boundary_edges[e].len;
        if space.order == 1 {
            let local = p1_edge_mass(l);
            let dofs = [a, b];
            for i in 0..2 {
                for j in 0..2 {
                    let idx = p.find(dofs[i], dofs[j]).expect("boundary pair in pattern");
                    bvals[idx] += local[i][j];
                }
            }
        } else {
            let key = (a.min(b), a.max(b));
            let mid = nv + space.edges.binary_search(&key).expect("boundary edge exists");
            let local = p2_edge_mass(l);
            let dofs = [a, b, mid];
            for i in 0..3 {
                for j in 0..3 {
                    let idx = p.find(dofs[i], dofs[j]).expect("boundary pair in pattern");
                    bvals[idx] += local[i][j];
                }
            }
        }
    }

    SymPencil { pattern: p, k, m, b: bvals, ndof: space.ndof }
}

/// Exact P1 boundary mass on an edge of length l: l/6 [[2,1],[1,2]].
pub(crate) fn p1_edge_mass(l: f64) -> [[f64; 2]; 2] {
    [[l / 3.0, l / 6.0], [l / 6.0, l / 3.0]]
}

/// Exact 1D quadratic mass on an edge of length l, dofs (end, end, mid).
pub(crate) fn p2_edge_mass(l: f64) -> [[f64; 3]; 3] {
    let c = l / 30.0;
    [
        [4.0 * c, -c, 2.0 * c],
        [-c, 4.0 * c, 2.0 * c],
        [2.0 * c, 2.0 * c, 16.0 * c],
    ]
}

// ---------------------------------------------------------------------------
// Evaluation of finite element functions
// ---------------------------------------------------------------------------

/// Barycentric coordinates of p in triangle t.
pub fn barycentric(mesh: &TriMesh, t: usize, p: Pt) -> [f64; 3] {
    let [a, b, c] = mesh.tris[t];
    let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
    let area = crate::util::tri_area(pa, pb, pc);
    [
        crate::util::tri_area(p, pb, pc) / area,
        crate::util::tri_area(pa, p, pc) / area,
        crate::util::tri_area(pa, pb, p) / area,
    ]
}

/// Value of the FE function at a point inside triangle t.
pub fn eval_in_tri(space: &FemSpace, u: &[f64], t: usize, p: Pt) -> f64 {
    let lam = barycentric(&space.mesh, t, p);
    let dofs = &space.tri_dofs[t];
    if space.order == 1 {
        (0..3).map(|i| u[dofs[i]] * lam[i]).sum()
    } else {
        let n = p2_values(lam);
        (0..6).map(|i| u[dofs[i]] * n[i]).sum()
    }
}

/// Gradient of the FE function at a point inside triangle t.
pub fn grad_in_tri(space: &FemSpace, u: &[f64], t: usize, p: Pt) -> Pt {
    let [a, b, c] = space.mesh.tris[t];
    let tri = affine_tri(space.mesh.nodes[a], space.mesh.nodes[b], space.mesh.nodes[c]);
    let dofs = &space.tri_dofs[t];
    let mut g = [0.0, 0.0];
    if space.order == 1 {
        let grads = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 0..3 {
            let gi = tri.phys_grad(grads[i]);
            g[0] += u[dofs[i]] * gi[0];
            g[1] += u[dofs[i]] * gi[1];
        }
    } else {
        let lam = barycentric(&space.mesh, t, p);
        let grads = p2_ref_grads(lam);
        for i in 0..6 {
            let gi = tri.phys_grad(grads[i]);
            g[0] += u[dofs[i]] * gi[0];
            g[1] += u[dofs[i]] * gi[1];
        }
    }
    g
}

/// Element Hessian (uxx, uxy, uyy) of a P2 function; constant per element.
/// Errors for P1 spaces, whose broken Hessian is identically zero.
pub fn element_hessian(space: &FemSpace, u: &[f64], t: usize) -> Result<[f64; 3]> {
    if space.order != 2 {
        return Err(Error::Unsupported(
            "broken Hessian requires a P2 space (P1 second derivatives vanish)".into(),
        ));
    }
    let [a, b, c] = space.mesh.tris[t];
    let tri = affine_tri(space.mesh.nodes[a], space.mesh.nodes[b], space.mesh.nodes[c]);
    let dofs = &space.tri_dofs[t];
    // reference Hessian of u
    let mut hr = [0.0; 3];
    for i in 0..6 {
        for k in 0..3 {
            hr[k] += u[dofs[i]] * P2_REF_HESS[i][k];
        }
    }
    // H_x = J^{-T} H_ref J^{-1}; with jit = J^{-T} rows
    let jit = tri.jit;
    let href = [[hr[0], hr[1]], [hr[1], hr[2]]];
    let mut tmp = [[0.0; 2]; 2];
    for r in 0..2 {
        for s in 0..2 {
            tmp[r][s] = jit[r][0] * href[0][s] + jit[r][1] * href[1][s];
        }
    }
    let mut hx = [[0.0; 2]; 2];
    for r in 0..2 {
        for s in 0..2 {
            // multiply by J^{-1} = (J^{-T})^T on the right
            hx[r][s] = tmp[r][0] * jit[s][0] + tmp[r][1] * jit[s][1];
        }
    }
    Ok([hx[0][0], hx[0][1], hx[1][1]])
}

/// Interpolates a scalar function onto the dof coordinates.
pub fn interpolate(space: &FemSpace, f: impl Fn(Pt) -> f64) -> Vec<f64> {
    space.dof_coords.iter().map(|&p| f(p)).collect()
}

/// Bucket-grid point locator for evaluating FE functions at arbitrary
/// points of the meshed domain.
pub struct Locator {
    cell: f64,
    x0: Pt,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    pub fn new(mesh: &TriMesh) -> Locator {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cell = 2.0 * mesh.h_target.max(1e-12);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize + 1).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.tris.iter().enumerate() {
            let mut tlo = [f64::INFINITY; 2];
            let mut thi = [f64::NEG_INFINITY; 2];
            for &v in tri {
                for d in 0..2 {
                    tlo[d] = tlo[d].min(mesh.nodes[v][d]);
                    thi[d] = thi[d].max(mesh.nodes[v][d]);
                }
            }
            let i0 = (((tlo[0] - lo[0]) / cell).floor() as isize).max(0) as usize;
            let i1 = (((thi[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let j0 = (((tlo[1] - lo[1]) / cell).floor() as isize).max(0) as usize;
            let j1 = (((thi[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Locator { cell, x0: lo, nx, ny, buckets }
    }

    /// Triangle containing p (within tolerance), if any.
    pub fn find(&self, mesh: &TriMesh, p: Pt) -> Option<usize> {
        let i = (((p[0] - self.x0[0]) / self.cell).floor() as isize).clamp(0, self.nx as isize - 1)
            as usize;
        let j = (((p[1] - self.x0[1]) / self.cell).floor() as isize).clamp(0, self.ny as isize - 1)
            as usize;
        let mut best: Option<(f64, usize)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let lam = barycentric(mesh, t, p);
            let worst = lam.iter().fold(f64::INFINITY, |m, &l| m.min(l));
            if worst >= -1e-10 {
                return Some(t);
            }
            match best {
                None => best = Some((worst, t)),
                Some((w, _)) if worst > w => best = Some((worst, t)),
                _ => {}
            }
        }
        // tolerate slight bucket misses near edges
        best.filter(|&(w, _)| w > -1e-6).map(|(_, t)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::mesh::{triangulate, TriMesh};
    use crate::sparse::quad_form;
    use crate::util::Rng;

    fn one_tri() -> Arc<TriMesh> {
        Arc::new(
            TriMesh::from_raw(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0)
                .unwrap(),
        )
    }

    #[test]
    fn dof_counts() {
        let mesh = one_tri();
        assert_eq!(build_space(&mesh, 1).unwrap().ndof, 3);
        assert_eq!(build_space(&mesh, 2).unwrap().ndof, 6);
        let sq = Arc::new(triangulate(&Domain::unit_square(), 0.25).unwrap());
        let sp2 = build_space(&sq, 2).unwrap();
        assert_eq!(sp2.ndof, sq.num_nodes() + sp2.edges.len());
        assert!(build_space(&mesh, 3).is_err());
    }

    /// Exact integral of a barycentric monomial over a triangle:
    /// ∫ λ1^a λ2^b λ3^c = 2A a! b! c! / (a+b+c+2)!
    fn bary_integral(area: f64, a: u32, b: u32, c: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(|x| x as f64).product::<f64>().max(1.0);
        2.0 * area * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2)
    }

    #[test]
    fn quadrature_rules_integrate_monomials_exactly() {
        // rules integrate f over a triangle as area * Σ w f(λ); on the
        // reference triangle (area 1/2) compare against the formula
        for (a, b, c) in [(4, 0, 0), (2, 2, 0), (1, 1, 2), (3, 1, 0), (2, 1, 1)] {
            let mut q = 0.0;
            for (lam, w) in DUNAVANT4 {
                q += w * lam[0].powi(a as i32) * lam[1].powi(b as i32) * lam[2].powi(c as i32);
            }
            let exact = bary_integral(0.5, a, b, c);
            assert!((q * 0.5 - exact).abs() < 1e-15, "({a},{b},{c}): {q} vs {exact}");
        }
        for (a, b, c) in [(2, 0, 0), (1, 1, 0), (0, 0, 2)] {
            let mut q = 0.0;
            for (lam, w) in MIDPOINT3 {
                q += w * lam[0].powi(a as i32) * lam[1].powi(b as i32) * lam[2].powi(c as i32);
            }
            let exact = bary_integral(0.5, a, b, c);
            assert!((q * 0.5 - exact).abs() < 1e-15, "({a},{b},{c})");
        }
    }

    #[test]
    fn p1_mass_matches_closed_form() {
        let mesh = one_tri();
        let space = build_space(&mesh, 1).unwrap();
        let pen = assemble(&space);
        let area = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let v = pen.m[pen.pattern.find(i, j).unwrap()];
                let want = if i == j { area / 6.0 } else { area / 12.0 };
                assert!((v - want).abs() < 1e-15, "M[{i}][{j}] = {v}");
            }
        }
    }

    #[test]
    fn p1_stiffness_matches_closed_form() {
        let mesh = one_tri();
        let space = build_space(&mesh, 1).unwrap();
        let pen = assemble(&space);
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                let v = pen.k[pen.pattern.find(i, j).unwrap()];
                assert!((v - want[i][j]).abs() < 1e-15, "K[{i}][{j}] = {v}");
            }
        }
    }

    #[test]
    fn edge_mass_closed_forms_match_quadrature() {
        // 1D Gauss oracle on [0, L]
        let l = 0.73;
        let gauss = |f: &dyn Fn(f64) -> f64| {
            // 3-point Gauss-Legendre, exact to degree 5
            let xs = [0.5 * l * (1.0 - (0.6f64).sqrt()), 0.5 * l, 0.5 * l * (1.0 + (0.6f64).sqrt())];
            let ws = [5.0 / 18.0 * l, 8.0 / 18.0 * l, 5.0 / 18.0 * l];
            xs.iter().zip(ws.iter()).map(|(&x, &w)| w * f(x)).sum::<f64>()
        };
        let lin = |i: usize| move |x: f64| if i == 0 { 1.0 - x / l } else { x / l };
        let m1 = p1_edge_mass(l);
        for i in 0..2 {
            for j in 0..2 {
                let q = gauss(&|x| lin(i)(x) * lin(j)(x));
                assert!((m1[i][j] - q).abs() < 1e-15);
            }
        }
        let quad = |i: usize| {
            move |x: f64| {
                let t = x / l;
                match i {
                    0 => (1.0 - t) * (1.0 - 2.0 * t),
                    1 => t * (2.0 * t - 1.0),
                    _ => 4.0 * t * (1.0 - t),
                }
            }
        };
        let m2 = p2_edge_mass(l);
        for i in 0..3 {
            for j in 0..3 {
                let q = gauss(&|x| quad(i)(x) * quad(j)(x));
                assert!((m2[i][j] - q).abs() < 1e-14, "B2[{i}][{j}]");
            }
        }
    }

    #[test]
    fn partition_of_unity_and_kernel() {
        for order in [1u8, 2u8] {
            for dom in [Domain::unit_square(), Domain::unit_disk()] {
                let mesh = Arc::new(triangulate(&dom, 0.2).unwrap());
                let space = build_space(&mesh, order).unwrap();
                let pen = assemble(&space);
                let ones = vec![1.0; space.ndof];
                let vol = quad_form(&pen.pattern, &pen.m, &ones, &ones);
                let per = quad_form(&pen.pattern, &pen.b, &ones, &ones);
                assert!((vol - mesh.total_area()).abs() < 1e-12, "order {order}: vol {vol}");
                let chord_perimeter: f64 = mesh.boundary_edges.iter().map(|e| e.len).sum();
                assert!((per - chord_perimeter).abs() < 1e-12, "order {order}: per {per}");
                let mut k1 = vec![0.0; space.ndof];
                pen.apply(&pen.k, &ones, &mut k1);
                let worst = k1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(worst < 1e-12, "order {order}: |K 1| = {worst}");
            }
        }
    }

    #[test]
    fn forms_have_correct_signs() {
        let mesh = Arc::new(triangulate(&Domain::unit_square(), 0.25).unwrap());
        for order in [1u8, 2u8] {
            let space = build_space(&mesh, order).unwrap();
            let pen = assemble(&space);
            assert!(crate::sparse::symmetry_defect(&pen.pattern, &pen.k) < 1e-15);
            assert!(crate::sparse::symmetry_defect(&pen.pattern, &pen.m) < 1e-15);
            assert!(crate::sparse::symmetry_defect(&pen.pattern, &pen.b) < 1e-15);
            let mut rng = Rng::new(123);
            for _ in 0..50 {
                let v: Vec<f64> = (0..space.ndof).map(|_| rng.next_sym()).collect();
                assert!(quad_form(&pen.pattern, &pen.k, &v, &v) >= -1e-12);
                assert!(quad_form(&pen.pattern, &pen.m, &v, &v) > 0.0);
                assert!(quad_form(&pen.pattern, &pen.b, &v, &v) >= -1e-12);
            }
        }
    }

    #[test]
    fn boundary_mass_rank_is_boundary_dof_count() {
        let mesh = Arc::new(triangulate(&Domain::unit_square(), 0.25).unwrap());
        for order in [1u8, 2u8] {
            let space = build_space(&mesh, order).unwrap();
            let pen = assemble(&space);
            let on_boundary = {
                let mut f = vec![false; space.ndof];
                for &d in &space.boundary_dofs {
                    f[d] = true;
                }
                f
            };
            // rows of interior dofs vanish identically
            for i in 0..space.ndof {
                if on_boundary[i] {
                    continue;
                }
                for k in pen.pattern.row_ptr[i]..pen.pattern.row_ptr[i + 1] {
                    assert_eq!(pen.b[k], 0.0, "interior dof {i} touches B");
                }
            }
            // and B is positive definite on the boundary subspace
            let mut rng = Rng::new(61);
            for _ in 0..20 {
                let mut v = vec![0.0; space.ndof];
                for &d in &space.boundary_dofs {
                    v[d] = rng.next_sym();
                }
                let q = quad_form(&pen.pattern, &pen.b, &v, &v);
                assert!(q > 0.0, "order {order}: boundary-supported vector with vBv = {q}");
            }
        }
    }

    #[test]
    fn patch_test_linear_energy() {
        let mesh = Arc::new(triangulate(&Domain::unit_square(), 0.2).unwrap());
        for order in [1u8, 2u8] {
            let space = build_space(&mesh, order).unwrap();
            let pen = assemble(&space);
            let (alpha, gamma) = (0.7, -1.3);
            let u = interpolate(&space, |p| alpha * p[0] + gamma * p[1]);
            let energy = quad_form(&pen.pattern, &pen.k, &u, &u);
            let exact = (alpha * alpha + gamma * gamma) * 1.0;
            assert!((energy - exact).abs() < 1e-12, "order {order}: {energy}");
        }
    }

    #[test]
    fn robin_matrix_cases() {
        let mesh = Arc::new(triangulate(&Domain::unit_square(), 0.25).unwrap());
        let space = build_space(&mesh, 1).unwrap();
        let pen = assemble(&space);
        let a0 = pen.robin_matrix(0.0);
        assert_eq!(a0, pen.k);
        // on constants: A c = beta B c and the form is beta |dOmega| c^2
        let beta = -1.0;
        let a = pen.robin_matrix(beta);
        let c = 0.8;
        let ones: Vec<f64> = vec![c; space.ndof];
        let mut av = vec![0.0; space.ndof];
        let mut bv = vec![0.0; space.ndof];
        pen.apply(&a, &ones, &mut av);
        pen.apply(&pen.b, &ones, &mut bv);
        for i in 0..space.ndof {
            assert!((av[i] - beta * bv[i]).abs() < 1e-12);
        }
        let form = quad_form(&pen.pattern, &a, &ones, &ones);
        assert!((form - beta * 4.0 * c * c).abs() < 1e-12, "form = {form}");
        assert!(form < 0.0);
    }

    #[test]
    fn hessian_of_quadratic_is_exact() {
        let mesh = Arc::new(triangulate(&Domain::unit_square(), 0.25).unwrap());
        let space = build_space(&mesh, 2).unwrap();
        // u = x^2 + 3xy - 2y^2 has Hessian [2, 3; 3, -4]
        let u = interpolate(&space, |p| p[0] * p[0] + 3.0 * p[0] * p[1] - 2.0 * p[1] * p[1]);
        for t in (0..space.mesh.num_tris()).step_by(7) {
            let h = element_hessian(&space, &u, t).unwrap();
            assert!((h[0] - 2.0).abs() < 1e-10);
            assert!((h[1] - 3.0).abs() < 1e-10);
            assert!((h[2] + 4.0).abs() < 1e-10);
        }
        let space1 = build_space(&mesh, 1).unwrap();
        let u1 = interpolate(&space1, |p| p[0]);
        assert!(element_hessian(&space1, &u1, 0).is_err());
    }

    #[test]
    fn gradient_and_value_evaluation() {
        let mesh = Arc::new(triangulate(&Domain::unit_square(), 0.25).unwrap());
        let space = build_space(&mesh, 2).unwrap();
        let u = interpolate(&space, |p| p[0] * p[1]);
        let loc = Locator::new(&mesh);
        let mut rng = Rng::new(7);
        for _ in 0..100 {
            let p = [rng.next_f64(), rng.next_f64()];
            let t = loc.find(&mesh, p).expect("point inside the square");
            let v = eval_in_tri(&space, &u, t, p);
            assert!((v - p[0] * p[1]).abs() < 1e-10);
            let g = grad_in_tri(&space, &u, t, p);
            assert!((g[0] - p[1]).abs() < 1e-9 && (g[1] - p[0]).abs() < 1e-9);
        }
    }
}
