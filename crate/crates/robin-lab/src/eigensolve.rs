//! Generalized symmetric eigensolvers for the Robin pencil
//! (K + βB) u = λ M u.
//!
//! The solver always factors a shifted positive definite matrix A + C M:
//! for β >= 0 a unit shift suffices, for β < 0 the coercivity shift
//! C = -2 β C(ε) built from the discrete trace constant C(ε) makes the
//! form coercive, and positive definiteness is verified by the
//! factorization itself (with a retry bump if roundoff bites). Blocked
//! inverse iteration with M-orthonormalization and Rayleigh-Ritz then
//! yields the lowest eigenpairs; eigenvalues are Ritz values of the
//! shifted pencil minus the shift.
//!
//! Extreme eigenvalues of auxiliary pencils (trace constants, coercivity
//! checks) use the same machinery with an adaptive shift: probe Rayleigh
//! quotients give a starting guess, factorization failure walks the shift
//! outside the spectrum, and shift updates give fast local convergence.

use crate::dense::sym_eig;
use crate::fem::SymPencil;
use crate::sparse::{combine, matvec, quad_form, Pattern, SkylineChol};
use crate::util::Rng;
use crate::{Error, Result};

/// Default residual tolerance for eigenpairs.
pub const EIG_TOL: f64 = 1e-9;

/// Lowest eigenpairs of (K + βB, M).
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub beta: f64,
    /// total shift C used for the positive definite factorization
    pub shift: f64,
    /// ascending eigenvalues λ_1 ... λ_J
    pub lambdas: Vec<f64>,
    /// M-orthonormal eigenvectors aligned with `lambdas`
    pub vectors: Vec<Vec<f64>>,
    /// residuals ||(A - λM)u|| / ||Mu||
    pub residuals: Vec<f64>,
    /// max |u_i^T M u_j - δ_ij|
    pub ortho_defect: f64,
}

impl SpectralResult {
    /// Indices grouped into numerically degenerate clusters
    /// (|λ_i - λ_j| < tol (1 + |λ_j|)).
    pub fn clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for j in 0..self.lambdas.len() {
            if let Some(last) = out.last_mut() {
                let l0 = self.lambdas[last[0]];
                if (self.lambdas[j] - l0).abs() < tol * (1.0 + l0.abs()) {
                    last.push(j);
                    continue;
                }
            }
            out.push(vec![j]);
        }
        out
    }
}

/// Coercivity shift data for the factorization of A + C M.
#[derive(Clone, Copy, Debug)]
pub struct CoerciveShift {
    /// shift prescribed by the coercivity bound: 0 for β >= 0, -2βC(ε) else
    pub c: f64,
    /// extra unit shift so the β >= 0 factorization clears the kernel of K
    pub factor_extra: f64,
    /// discrete trace constant C(ε) used (β < 0 only)
    pub trace_c: Option<f64>,
    /// the ε the shift was built with
    pub eps: f64,
}

impl CoerciveShift {
    pub fn total(&self) -> f64 {
        self.c + self.factor_extra
    }
}

/// Computes the shift that makes K + βB + C M positive definite.
///
/// For β < 0 requires ε in (0, -1/β); the shift is C = -2 β C(ε) with the
/// discrete trace constant C(ε) = max(0, λ_max(B - εK, M)). For β >= 0 any
/// ε > 0 is accepted and C = 0 with a unit factorization shift.
pub fn coercive_shift(pencil: &SymPencil, beta: f64, eps: f64) -> Result<CoerciveShift> {
    if beta >= 0.0 {
        if eps <= 0.0 {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        return Ok(CoerciveShift { c: 0.0, factor_extra: 1.0, trace_c: None, eps });
    }
    if !(eps > 0.0 && eps < -1.0 / beta) {
        return Err(Error::InvalidArgument(format!(
            "for beta = {beta} eps must lie in (0, {}), got {eps}",
            -1.0 / beta
        )));
    }
    let tc = trace_constant_value(pencil, eps)?;
    Ok(CoerciveShift { c: -2.0 * beta * tc.value, factor_extra: 0.0, trace_c: Some(tc.value), eps })
}

/// Discrete trace constant: the smallest C(ε) with
/// ∮ v² <= ε ∫|∇v|² + C(ε) ∫ v² for all discrete v, i.e. the largest
/// eigenvalue of the pencil (B - εK, M), clamped at zero.
pub fn trace_constant_value(pencil: &SymPencil, eps: f64) -> Result<ExtremePair> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument("trace constant needs eps > 0".into()));
    }
    let pvals = combine(&[(&pencil.b, 1.0), (&pencil.k, -eps)]);
    let mut ext = pencil_extreme(&pencil.pattern, &pvals, &pencil.m, Which::Largest, EIG_TOL)?;
    if ext.value < 0.0 {
        ext.value = 0.0;
    }
    Ok(ext)
}

/// Lowest `j_count` eigenpairs with the default ε = -1/(2β) for β < 0.
pub fn lowest_eigenpairs(
    pencil: &SymPencil,
    beta: f64,
    j_count: usize,
    tol: f64,
) -> Result<SpectralResult> {
    let eps = if beta < 0.0 { -0.5 / beta } else { 0.5 };
    lowest_eigenpairs_with_eps(pencil, beta, j_count, tol, eps)
}

/// Lowest `j_count` eigenpairs of (K + βB, M) by blocked inverse iteration
/// on the shifted positive definite pencil.
pub fn lowest_eigenpairs_with_eps(
    pencil: &SymPencil,
    beta: f64,
    j_count: usize,
    tol: f64,
    eps: f64,
) -> Result<SpectralResult> {
    if j_count == 0 || j_count >= pencil.ndof {
        return Err(Error::InvalidArgument(format!(
            "j_count = {j_count} out of range for {} dofs",
            pencil.ndof
        )));
    }
    let shift = coercive_shift(pencil, beta, eps)?;
    let avals = pencil.robin_matrix(beta);
    let n = pencil.ndof;
    let p = &pencil.pattern;

    // factor A + C M, bumping C if roundoff spoils definiteness
    let mut c_total = shift.total();
    let mut chol = None;
    for _ in 0..8 {
        let shifted = combine(&[(&avals, 1.0), (&pencil.m, c_total)]);
        match SkylineChol::factor(p, &shifted) {
            Ok(f) => {
                chol = Some(f);
                break;
            }
            Err(_) => c_total = 1.5 * c_total + 0.5,
        }
    }
    let chol = chol.ok_or(Error::Factorization {
        pivot_index: 0,
        suggestion: format!("shifted Robin matrix stayed indefinite up to C = {c_total}"),
    })?;

    let block = (j_count + 5).min(n);
    let mut x: Vec<Vec<f64>> = deterministic_block(n, block, 0x1007);
    m_orthonormalize(p, &pencil.m, &mut x);

    let mut lambdas = vec![0.0; block];
    let mut residuals = vec![f64::INFINITY; j_count];
    let mut converged = false;
    let mut work = vec![0.0; n];
    for _iter in 0..500 {
        // Y = (A + CM)^{-1} M X, then M-orthonormalize and Rayleigh-Ritz
        let mut y: Vec<Vec<f64>> = Vec::with_capacity(block);
        for xi in &x {
            matvec(p, &pencil.m, xi, &mut work);
            y.push(chol.solve(&work));
        }
        m_orthonormalize(p, &pencil.m, &mut y);
        m_orthonormalize(p, &pencil.m, &mut y);
        // projected (shifted) operator; Ritz values minus shift are λ
        let mut s = vec![0.0; block * block];
        let mut ay: Vec<Vec<f64>> = Vec::with_capacity(block);
        for yi in &y {
            let mut ayi = vec![0.0; n];
            matvec(p, &avals, yi, &mut ayi);
            ay.push(ayi);
        }
        for i in 0..block {
            for j in i..block {
                let v = dot_vec(&y[i], &ay[j]);
                s[i * block + j] = v;
                s[j * block + i] = v;
            }
        }
        let eig = sym_eig(&s, block);
        let mut xnew: Vec<Vec<f64>> = Vec::with_capacity(block);
        for col in 0..block {
            let mut v = vec![0.0; n];
            for i in 0..block {
                let w = eig.vecs[col * block + i];
                if w != 0.0 {
                    for (vk, yk) in v.iter_mut().zip(y[i].iter()) {
                        *vk += w * yk;
                    }
                }
            }
            xnew.push(v);
        }
        x = xnew;
        lambdas.copy_from_slice(&eig.vals);
        // residuals of the leading j_count pairs
        let mut worst = 0.0f64;
        for j in 0..j_count {
            let mut ax = vec![0.0; n];
            matvec(p, &avals, &x[j], &mut ax);
            matvec(p, &pencil.m, &x[j], &mut work);
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let r = ax[i] - lambdas[j] * work[i];
                num += r * r;
                den += work[i] * work[i];
            }
            residuals[j] = (num / den).sqrt();
            worst = worst.max(residuals[j]);
        }
        if worst <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: format!("lowest_eigenpairs(beta = {beta}, J = {j_count})"),
            best_residual: residuals.iter().fold(0.0f64, |m, &r| m.max(r)),
        });
    }

    let mut vectors: Vec<Vec<f64>> = x.into_iter().take(j_count).collect();
    for v in &mut vectors {
        sign_fix(v);
    }
    let mut ortho_defect = 0.0f64;
    for i in 0..j_count {
        for j in i..j_count {
            matvec(p, &pencil.m, &vectors[j], &mut work);
            let g = dot_vec(&vectors[i], &work);
            let want = if i == j { 1.0 } else { 0.0 };
            ortho_defect = ortho_defect.max((g - want).abs());
        }
    }
    Ok(SpectralResult {
        beta,
        shift: c_total,
        lambdas: lambdas[..j_count].to_vec(),
        vectors,
        residuals,
        ortho_defect,
    })
}

// ---------------------------------------------------------------------------
// Extreme generalized eigenvalues
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
}

/// One extreme eigenpair of a symmetric pencil.
#[derive(Clone, Debug)]
pub struct ExtremePair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Extreme generalized eigenvalue of (P, M) with M positive definite.
pub fn pencil_extreme(
    pattern: &Pattern,
    pvals: &[f64],
    mvals: &[f64],
    which: Which,
    tol: f64,
) -> Result<ExtremePair> {
    match which {
        Which::Smallest => smallest_pencil(pattern, pvals, mvals, tol),
        Which::Largest => {
            let neg: Vec<f64> = pvals.iter().map(|v| -v).collect();
            let mut out = smallest_pencil(pattern, &neg, mvals, tol)?;
            out.value = -out.value;
            Ok(out)
        }
    }
}

/// Smallest eigenvalue of (S, M): inverse iteration on S - σM with the
/// shift σ walked outside the spectrum by factorization feedback, then
/// tightened toward the computed end.
fn smallest_pencil(p: &Pattern, s: &[f64], m: &[f64], tol: f64) -> Result<ExtremePair> {
    let n = p.n;
    // probe Rayleigh quotients seed the shift: constants plus random probes
    let mut theta_est = f64::INFINITY;
    let mut rng = Rng::new(0x0bad_cafe);
    for probe in 0..5 {
        let v: Vec<f64> =
            if probe == 0 { vec![1.0; n] } else { (0..n).map(|_| rng.next_sym()).collect() };
        let num = quad_form(p, s, &v, &v);
        let den = quad_form(p, m, &v, &v);
        if den > 0.0 {
            theta_est = theta_est.min(num / den);
        }
    }
    if !theta_est.is_finite() {
        return Err(Error::InvalidArgument("mass form is not positive definite".into()));
    }

    let mut sigma;
    let mut margin = 0.02 * (1.0 + theta_est.abs());
    let ordering = rcm_once(p);
    let mut chol = None;
    for _try in 0..40 {
        sigma = theta_est - margin;
        let shifted = combine(&[(s, 1.0), (m, -sigma)]);
        match SkylineChol::factor_with_perm(p, &shifted, ordering.clone()) {
            Ok(f) => {
                chol = Some((f, sigma));
                break;
            }
            Err(_) => margin *= 4.0,
        }
    }
    let (mut chol, mut sigma) =
        chol.ok_or_else(|| Error::NonConvergence {
            what: "pencil shift search".into(),
            best_residual: f64::NAN,
        })?;

    let block = 4.min(n);
    let mut x = deterministic_block(n, block, 0x2009);
    m_orthonormalize(p, m, &mut x);
    let mut work = vec![0.0; n];
    let mut best = ExtremePair { value: f64::NAN, vector: vec![0.0; n], residual: f64::INFINITY };
    let mut refactors = 0usize;
    for iter in 0..400 {
        let mut y: Vec<Vec<f64>> = Vec::with_capacity(block);
        for xi in &x {
            matvec(p, m, xi, &mut work);
            y.push(chol.solve(&work));
        }
        m_orthonormalize(p, m, &mut y);
        m_orthonormalize(p, m, &mut y);
        let mut sm = vec![0.0; block * block];
        for i in 0..block {
            let mut sy = vec![0.0; n];
            matvec(p, s, &y[i], &mut sy);
            for j in 0..block {
                let v = dot_vec(&y[j], &sy);
                sm[i * block + j] = v;
            }
        }
        // symmetrize roundoff
        for i in 0..block {
            for j in (i + 1)..block {
                let v = 0.5 * (sm[i * block + j] + sm[j * block + i]);
                sm[i * block + j] = v;
                sm[j * block + i] = v;
            }
        }
        let eig = sym_eig(&sm, block);
        let mut xnew: Vec<Vec<f64>> = Vec::with_capacity(block);
        for col in 0..block {
            let mut v = vec![0.0; n];
            for i in 0..block {
                let w = eig.vecs[col * block + i];
                if w != 0.0 {
                    for (vk, yk) in v.iter_mut().zip(y[i].iter()) {
                        *vk += w * yk;
                    }
                }
            }
            xnew.push(v);
        }
        x = xnew;
        let theta = eig.vals[0];
        // residual of the leading pair
        let mut sx = vec![0.0; n];
        matvec(p, s, &x[0], &mut sx);
        matvec(p, m, &x[0], &mut work);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let r = sx[i] - theta * work[i];
            num += r * r;
            den += work[i] * work[i];
        }
        let res = (num / den).sqrt();
        if res < best.residual {
            best = ExtremePair { value: theta, vector: x[0].clone(), residual: res };
        }
        if res <= tol {
            sign_fix(&mut best.vector);
            return Ok(best);
        }
        // tighten the shift toward the end for rapid local convergence
        if iter % 6 == 5 && refactors < 10 {
            let gap = (eig.vals[1.min(block - 1)] - theta).abs();
            let mut delta = (0.02 * gap).max(1e-8 * (1.0 + theta.abs()));
            for _ in 0..12 {
                let cand = theta - delta;
                if cand <= sigma {
                    break;
                }
                let shifted = combine(&[(s, 1.0), (m, -cand)]);
                match SkylineChol::factor_with_perm(p, &shifted, ordering.clone()) {
                    Ok(f) => {
                        chol = f;
                        sigma = cand;
                        break;
                    }
                    Err(_) => delta *= 4.0,
                }
            }
            refactors += 1;
        }
    }
    Err(Error::NonConvergence {
        what: "pencil_extreme".into(),
        best_residual: best.residual,
    })
}

fn rcm_once(p: &Pattern) -> Vec<usize> {
    crate::sparse::rcm_order(p)
}

// ---------------------------------------------------------------------------
// Block helpers
// ---------------------------------------------------------------------------

fn deterministic_block(n: usize, block: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Rng::new(seed);
    let mut x = Vec::with_capacity(block);
    // lead with the constant vector: it is the exact ground state at β = 0
    // and a good low-mode component otherwise
    let mut first = vec![1.0; n];
    for v in first.iter_mut() {
        *v += 1e-3 * rng.next_sym();
    }
    x.push(first);
    for _ in 1..block {
        x.push((0..n).map(|_| rng.next_sym()).collect());
    }
    x
}

/// Modified Gram-Schmidt in the M inner product.
fn m_orthonormalize(p: &Pattern, m: &[f64], x: &mut [Vec<f64>]) {
    let n = p.n;
    let mut mv = vec![0.0; n];
    for i in 0..x.len() {
        for j in 0..i {
            matvec(p, m, &x[j], &mut mv);
            let c = dot_vec(&x[i], &mv);
            let (xi, xj) = {
                let (a, b) = x.split_at_mut(i);
                (&mut b[0], &a[j])
            };
            for (v, w) in xi.iter_mut().zip(xj.iter()) {
                *v -= c * w;
            }
        }
        matvec(p, m, &x[i], &mut mv);
        let norm = dot_vec(&x[i], &mv).max(0.0).sqrt();
        if norm > 1e-300 {
            let inv = 1.0 / norm;
            for v in x[i].iter_mut() {
                *v *= inv;
            }
        }
    }
}

fn dot_vec(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Scales so the entry of largest magnitude is positive (reproducible
/// eigenvector signs).
fn sign_fix(v: &mut [f64]) {
    let mut besti = 0usize;
    let mut bestv = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > bestv {
            bestv = x.abs();
            besti = i;
        }
    }
    if v[besti] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Rayleigh quotient helper exposed for tests and analysis.
pub fn rayleigh(p: &Pattern, vals: &[f64], mvals: &[f64], x: &[f64]) -> f64 {
    quad_form(p, vals, x, x) / quad_form(p, mvals, x, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_space};
    use crate::geometry::Domain;
    use crate::mesh::triangulate;
    use crate::oracles::{disk_robin, rectangle_robin};
    use std::sync::Arc;

    fn pencil_for(dom: &Domain, h: f64, order: u8) -> SymPencil {
        let mesh = Arc::new(triangulate(dom, h).unwrap());
        let space = build_space(&mesh, order).unwrap();
        assemble(&space)
    }

    #[test]
    fn square_neumann_matches_tensor_oracle() {
        let pen = pencil_for(&Domain::unit_square(), 1.0 / 8.0, 2);
        let res = lowest_eigenpairs(&pen, 0.0, 4, EIG_TOL).unwrap();
        assert!(res.lambdas[0].abs() <= 1e-10, "lambda1 = {}", res.lambdas[0]);
        let oracle = rectangle_robin(0.0, 1.0, 1.0, 4).unwrap().expanded();
        for j in 1..4 {
            let rel = (res.lambdas[j] - oracle[j]).abs() / oracle[j];
            assert!(rel < 5e-3, "lambda_{j} = {} vs {}", res.lambdas[j], oracle[j]);
        }
        for r in &res.residuals {
            assert!(*r <= EIG_TOL);
        }
        assert!(res.ortho_defect < 1e-10);
        // degenerate pair lambda_2 = lambda_3
        assert!((res.lambdas[1] - res.lambdas[2]).abs() < 1e-6 * (1.0 + res.lambdas[1].abs()));
        // the Neumann ground state is the constant function
        let u1 = &res.vectors[0];
        let spread = u1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        assert!(
            spread.1 - spread.0 < 1e-8 * spread.1.abs().max(1e-300),
            "first eigenvector not constant: spread {spread:?}"
        );
    }

    #[test]
    fn square_robin_negative_beta() {
        let pen = pencil_for(&Domain::unit_square(), 1.0 / 8.0, 2);
        let res = lowest_eigenpairs(&pen, -1.0, 3, EIG_TOL).unwrap();
        let oracle = rectangle_robin(-1.0, 1.0, 1.0, 3).unwrap().expanded();
        assert!(res.lambdas[0] < 0.0);
        let rel = (res.lambdas[0] - oracle[0]).abs() / oracle[0].abs();
        assert!(rel < 5e-3, "lambda1 = {} vs {}", res.lambdas[0], oracle[0]);
        // spectrum bound λ > -C and Rayleigh identity
        for (j, &l) in res.lambdas.iter().enumerate() {
            assert!(l > -res.shift);
            let u = &res.vectors[j];
            let k = quad_form(&pen.pattern, &pen.k, u, u);
            let b = quad_form(&pen.pattern, &pen.b, u, u);
            assert!((k + res.beta * b - l).abs() < 1e-7 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn disk_neumann_degenerate_pair_hits_bessel_root() {
        // λ2 = λ3 = (j'_{1,1})², the square of the first zero of J1'
        let pen = pencil_for(&Domain::unit_disk(), 1.0 / 8.0, 2);
        let res = lowest_eigenpairs(&pen, 0.0, 3, EIG_TOL).unwrap();
        assert!(res.lambdas[0].abs() <= 1e-10);
        let jp11 = 1.841_183_781_340_659_3f64;
        let want = jp11 * jp11;
        for j in [1, 2] {
            let rel = (res.lambdas[j] - want).abs() / want;
            assert!(rel < 1e-2, "lambda_{} = {} vs {want}", j + 1, res.lambdas[j]);
        }
        assert!((res.lambdas[1] - res.lambdas[2]).abs() < 1e-5 * want);
    }

    #[test]
    fn disk_robin_positive_beta() {
        let pen = pencil_for(&Domain::unit_disk(), 1.0 / 8.0, 2);
        let res = lowest_eigenpairs(&pen, 1.0, 3, EIG_TOL).unwrap();
        let oracle = disk_robin(1.0, 1.0, 3, 3).unwrap().expanded();
        for j in 0..3 {
            let rel = (res.lambdas[j] - oracle[j]).abs() / (1.0 + oracle[j].abs());
            assert!(rel < 2e-2, "lambda_{j} = {} vs {}", res.lambdas[j], oracle[j]);
        }
    }

    #[test]
    fn min_max_monotone_in_beta() {
        let pen = pencil_for(&Domain::unit_square(), 1.0 / 6.0, 1);
        let betas = [-2.0, -1.0, -0.25, 0.0, 0.5, 1.5];
        let mut prev: Option<Vec<f64>> = None;
        for &b in &betas {
            let res = lowest_eigenpairs(&pen, b, 4, EIG_TOL).unwrap();
            if let Some(p) = prev {
                for j in 0..4 {
                    assert!(
                        p[j] <= res.lambdas[j] + 1e-10,
                        "monotonicity at beta = {b}, j = {j}"
                    );
                }
            }
            prev = Some(res.lambdas);
        }
    }

    #[test]
    fn pencil_extreme_trivial_cases() {
        let pen = pencil_for(&Domain::unit_square(), 0.25, 1);
        // P = M: every eigenvalue is 1
        let e1 =
            pencil_extreme(&pen.pattern, &pen.m, &pen.m, Which::Largest, EIG_TOL).unwrap();
        let e2 =
            pencil_extreme(&pen.pattern, &pen.m, &pen.m, Which::Smallest, EIG_TOL).unwrap();
        assert!((e1.value - 1.0).abs() < 1e-9);
        assert!((e2.value - 1.0).abs() < 1e-9);
        // P = 0
        let zeros = vec![0.0; pen.pattern.nnz()];
        let e3 = pencil_extreme(&pen.pattern, &zeros, &pen.m, Which::Largest, EIG_TOL).unwrap();
        assert!(e3.value.abs() < 1e-9);
        // P = K: smallest is 0 on the constants
        let e4 = pencil_extreme(&pen.pattern, &pen.k, &pen.m, Which::Smallest, EIG_TOL).unwrap();
        assert!(e4.value.abs() < 1e-8, "smallest K eigenvalue {}", e4.value);
    }

    #[test]
    fn trace_constant_dominates_isoperimetric_ratio() {
        let pen = pencil_for(&Domain::unit_square(), 0.2, 2);
        let t1 = trace_constant_value(&pen, 0.1).unwrap();
        let t2 = trace_constant_value(&pen, 0.5).unwrap();
        let t3 = trace_constant_value(&pen, 1.0).unwrap();
        // lower bound |∂Ω|/|Ω| = 4 from the constant test vector
        for t in [&t1, &t2, &t3] {
            assert!(t.value >= 4.0 - 1e-9, "C = {}", t.value);
        }
        // monotone nonincreasing in ε
        assert!(t1.value >= t2.value - 1e-9);
        assert!(t2.value >= t3.value - 1e-9);
        // extremal vector attains the constant
        let v = &t1.vector;
        let num = quad_form(&pen.pattern, &pen.b, v, v)
            - 0.1 * quad_form(&pen.pattern, &pen.k, v, v);
        let den = quad_form(&pen.pattern, &pen.m, v, v);
        assert!((num / den - t1.value).abs() < 1e-8 * (1.0 + t1.value));
    }

    #[test]
    fn coercive_shift_cases() {
        let pen = pencil_for(&Domain::unit_square(), 0.25, 1);
        let s0 = coercive_shift(&pen, 0.0, 0.5).unwrap();
        assert_eq!(s0.c, 0.0);
        assert_eq!(s0.total(), 1.0);
        let s1 = coercive_shift(&pen, -1.0, 0.5).unwrap();
        let tc = s1.trace_c.unwrap();
        assert!((s1.c - 2.0 * tc).abs() < 1e-12);
        assert!(coercive_shift(&pen, -1.0, 1.5).is_err());
        assert!(coercive_shift(&pen, -2.0, 0.5).is_err());
    }

    #[test]
    fn negative_count_on_fixed_mesh_nonincreasing_in_beta() {
        let pen = pencil_for(&Domain::unit_square(), 1.0 / 6.0, 2);
        let mut prev = usize::MAX;
        for b in [-3.0, -1.5, -0.5, 0.0] {
            let res = lowest_eigenpairs(&pen, b, 6, EIG_TOL).unwrap();
            let count = res.lambdas.iter().filter(|&&l| l < -1e-10).count();
            assert!(count <= prev, "count {count} at beta {b}");
            prev = count;
        }
    }
}
