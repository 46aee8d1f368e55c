//! Semi-analytic reference spectra for the Robin problem on intervals,
//! rectangles and disks. These are the ground truth the finite element
//! solver and the identity checks are validated against.
//!
//! Interval: -u'' = μu on (0, L) with -u'(0) + βu(0) = 0, u'(L) + βu(L) = 0.
//! By symmetry about the midpoint the eigenfunctions split into even and
//! odd families; positive eigenvalues μ = k² come from
//!   even: k tan(kL/2) = β,   odd: k cot(kL/2) = -β,
//! negative ones μ = -τ² from
//!   even: τ tanh(τL/2) = -β,   odd: τ coth(τL/2) = -β,
//! and μ = 0 occurs exactly when β (βL + 2) = 0.
//!
//! Disk of radius R: positive eigenvalues λ = k² solve
//! k J_m'(kR) + β J_m(kR) = 0, negative ones λ = -τ² solve
//! τ I_m'(τR) + β I_m(τR) = 0, and λ = 0 occurs for the harmonic mode r^m
//! exactly when m + βR = 0. Orders m >= 1 carry multiplicity two.
//!
//! Bessel functions are evaluated in-crate by their power series with
//! double-double accumulation, which holds the relative error near 1e-15
//! throughout the desk-scale argument range used here.

use crate::{Error, Result};
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Double-double helpers (Dekker/Knuth error-free transforms)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p1, p2 + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    fn mul_f64(self, c: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, c);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * c);
        Dd { hi, lo }
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let (p1, p2) = two_prod(q1, d);
        let r = (self.hi - p1) - p2 + self.lo;
        let (hi, lo) = quick_two_sum(q1, r / d);
        Dd { hi, lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn abs_value(self) -> f64 {
        self.value().abs()
    }
}

// ---------------------------------------------------------------------------
// Bessel functions J_m and modified I_m
// ---------------------------------------------------------------------------

/// J_m(z) by its power series with compensated accumulation. Intended for
/// 0 <= z <= ~40 and small orders, where ~200 terms suffice.
pub fn bessel_j(m: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    // t0 = (z/2)^m / m!
    let mut term = Dd::from(1.0);
    for s in 1..=m {
        term = term.mul_f64(half).div_f64(s as f64);
    }
    let q = Dd::from(half).mul(Dd::from(half));
    let mut sum = term;
    for s in 1..300 {
        term = term.mul(q).div_f64(-(s as f64)).div_f64((s + m as i32 as usize) as f64);
        sum = sum.add(term);
        if term.abs_value() <= 1e-34 * (sum.abs_value() + 1e-300) {
            break;
        }
    }
    sum.value()
}

/// d/dz J_m(z).
pub fn bessel_j_prime(m: u32, z: f64) -> f64 {
    if m == 0 {
        -bessel_j(1, z)
    } else {
        0.5 * (bessel_j(m - 1, z) - bessel_j(m + 1, z))
    }
}

/// Modified Bessel I_m(z) by its (all-positive) power series.
pub fn bessel_i(m: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    let mut term = Dd::from(1.0);
    for s in 1..=m {
        term = term.mul_f64(half).div_f64(s as f64);
    }
    let q = Dd::from(half).mul(Dd::from(half));
    let mut sum = term;
    for s in 1..400 {
        term = term.mul(q).div_f64(s as f64).div_f64((s + m as usize) as f64);
        sum = sum.add(term);
        if term.abs_value() <= 1e-34 * sum.abs_value() {
            break;
        }
    }
    sum.value()
}

/// d/dz I_m(z).
pub fn bessel_i_prime(m: u32, z: f64) -> f64 {
    if m == 0 {
        bessel_i(1, z)
    } else {
        0.5 * (bessel_i(m - 1, z) + bessel_i(m + 1, z))
    }
}

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Bisection on a bracketed sign change, 110 halvings (converges to the
/// floating-point limit). Returns the midpoint.
fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    debug_assert!(fa == 0.0 || fa.signum() != f(b).signum());
    if fa == 0.0 {
        return a;
    }
    for _ in 0..110 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Scans [lo, hi] with the given step, bisecting every sign change.
fn scan_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    let n = ((hi - lo) / step).ceil() as usize;
    for i in 1..=n {
        let x1 = (lo + i as f64 * step).min(hi);
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() {
            roots.push(bisect(f, x0, x1));
        }
        x0 = x1;
        f0 = f1;
        if x1 >= hi {
            break;
        }
    }
    roots
}

// ---------------------------------------------------------------------------
// Oracle spectra
// ---------------------------------------------------------------------------

/// One reference eigenvalue with its mode label and the residual of its
/// defining transcendental equation.
#[derive(Clone, Debug)]
pub struct OracleMode {
    pub lambda: f64,
    pub multiplicity: usize,
    pub label: String,
    pub residual: f64,
}

/// Sorted reference spectrum.
#[derive(Clone, Debug)]
pub struct OracleSpectrum {
    pub modes: Vec<OracleMode>,
}

impl OracleSpectrum {
    /// Eigenvalues expanded by multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in &self.modes {
            for _ in 0..m.multiplicity {
                out.push(m.lambda);
            }
        }
        out
    }

    fn sort_and_truncate(&mut self, count: usize) {
        self.modes.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        let mut total = 0usize;
        let mut keep = 0usize;
        for m in &self.modes {
            if total >= count {
                break;
            }
            total += m.multiplicity;
            keep += 1;
        }
        self.modes.truncate(keep);
    }

    /// Count of eigenvalues strictly below -1e-10 (by multiplicity).
    pub fn negative_count(&self) -> usize {
        self.expanded().iter().filter(|&&l| l < -1e-10).count()
    }
}

/// 1D Robin spectrum on an interval of length `l` (both endpoints carry the
/// same parameter β); the lowest `count` eigenvalues.
pub fn interval_robin(beta: f64, l: f64, count: usize) -> Result<OracleSpectrum> {
    if !(l > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument("interval_robin needs l > 0 and finite beta".into()));
    }
    let mut modes: Vec<OracleMode> = Vec::new();
    let res_scale = 1.0 + beta.abs();

    // negative eigenvalues
    if beta < 0.0 {
        let f_even = |t: f64| t * (t * l / 2.0).tanh() + beta;
        let mut hi = 1.0f64.max(-2.0 * beta);
        while f_even(hi) <= 0.0 {
            hi *= 2.0;
        }
        let t = bisect(&f_even, 1e-12, hi);
        modes.push(OracleMode {
            lambda: -t * t,
            multiplicity: 1,
            label: "neg-even#1".into(),
            residual: f_even(t).abs() / res_scale,
        });
        if beta < -2.0 / l {
            let f_odd = |t: f64| {
                // τ coth(τ l/2) + β, with the small-τ limit 2/l + β
                let x = t * l / 2.0;
                if x < 1e-8 {
                    2.0 / l + t * t * l / 6.0 + beta
                } else {
                    t / x.tanh() + beta
                }
            };
            let mut hi = 1.0f64.max(-2.0 * beta);
            while f_odd(hi) <= 0.0 {
                hi *= 2.0;
            }
            let t = bisect(&f_odd, 1e-12, hi);
            modes.push(OracleMode {
                lambda: -t * t,
                multiplicity: 1,
                label: "neg-odd#1".into(),
                residual: f_odd(t).abs() / res_scale,
            });
        }
    }

    // zero eigenvalue: β (βl + 2) = 0
    if beta == 0.0 || beta * l + 2.0 == 0.0 {
        let label = if beta == 0.0 { "zero-const" } else { "zero-linear" };
        modes.push(OracleMode { lambda: 0.0, multiplicity: 1, label: label.into(), residual: 0.0 });
    }

    // positive eigenvalues: even k sin(kl/2) = β cos(kl/2),
    // odd k cos(kl/2) = -β sin(kl/2); scan in k with step π/(4l)
    let f_even = |k: f64| k * (k * l / 2.0).sin() - beta * (k * l / 2.0).cos();
    let f_odd = |k: f64| k * (k * l / 2.0).cos() + beta * (k * l / 2.0).sin();
    let step = PI / (4.0 * l);
    let mut kmax = (count as f64 + 2.0) * PI / l + beta.abs().sqrt();
    loop {
        let mut pos: Vec<(f64, &str, f64)> = Vec::new();
        for k in scan_roots(&f_even, 1e-9, kmax, step) {
            pos.push((k, "even", f_even(k).abs() / (res_scale * (1.0 + k))));
        }
        for k in scan_roots(&f_odd, 1e-9, kmax, step) {
            pos.push((k, "odd", f_odd(k).abs() / (res_scale * (1.0 + k))));
        }
        // β = 0 makes k = 0 a scan artifact of the odd family (cos(0) = 1,
        // root k→0 is the constant handled above); drop near-zero roots
        pos.retain(|&(k, _, _)| k > 1e-7);
        if modes.len() + pos.len() >= count {
            pos.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut counters = std::collections::BTreeMap::new();
            for (k, fam, res) in pos {
                let c = counters.entry(fam).or_insert(0usize);
                *c += 1;
                modes.push(OracleMode {
                    lambda: k * k,
                    multiplicity: 1,
                    label: format!("{fam}#{c}"),
                    residual: res,
                });
            }
            break;
        }
        kmax *= 1.6;
    }

    let mut spec = OracleSpectrum { modes };
    spec.sort_and_truncate(count);
    spec.modes.truncate(count);
    Ok(spec)
}

/// Tensor spectrum of the rectangle (0,a) x (0,b): λ = μ_i(a) + μ_j(b),
/// with eigenvalues within 1e-9 relative of each other merged into one
/// mode of higher multiplicity.
pub fn rectangle_robin(beta: f64, a: f64, b: f64, count: usize) -> Result<OracleSpectrum> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument("rectangle sides must be positive".into()));
    }
    let n1 = count + 2;
    let sa = interval_robin(beta, a, n1)?;
    let sb = interval_robin(beta, b, n1)?;
    let mut sums: Vec<(f64, String, f64)> = Vec::new();
    for (i, ma) in sa.modes.iter().enumerate() {
        for (j, mb) in sb.modes.iter().enumerate() {
            sums.push((
                ma.lambda + mb.lambda,
                format!("({}x{})", i + 1, j + 1),
                ma.residual.max(mb.residual),
            ));
        }
    }
    sums.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut modes: Vec<OracleMode> = Vec::new();
    for (lam, label, res) in sums {
        if let Some(last) = modes.last_mut() {
            if (lam - last.lambda).abs() <= 1e-9 * (1.0 + lam.abs()) {
                last.multiplicity += 1;
                last.residual = last.residual.max(res);
                continue;
            }
        }
        modes.push(OracleMode { lambda: lam, multiplicity: 1, label, residual: res });
    }
    let mut spec = OracleSpectrum { modes };
    spec.sort_and_truncate(count);
    Ok(spec)
}

/// Robin spectrum of the disk of radius `r` using angular orders up to
/// `m_max`. Errors when `count` eigenvalues cannot be certified complete
/// with the given `m_max`.
pub fn disk_robin(beta: f64, r: f64, count: usize, m_max: u32) -> Result<OracleSpectrum> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("disk radius must be positive".into()));
    }
    let mut modes: Vec<OracleMode> = Vec::new();
    let res_scale = 1.0 + beta.abs();
    let mut kmax = ((count as f64 / 2.0 + 2.0) * PI + m_max as f64) / r + beta.abs().sqrt();
    loop {
        modes.clear();
        for m in 0..=m_max {
            collect_disk_order(beta, r, m, kmax, res_scale, &mut modes);
        }
        let expanded: Vec<f64> = {
            let mut sp = OracleSpectrum { modes: modes.clone() };
            sp.modes.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
            sp.expanded()
        };
        if expanded.len() >= count {
            // completeness guards: the count-th value must lie below both
            // the first mode of order m_max + 1 and the scan ceiling
            let lam_count = expanded[count - 1];
            let guard = first_disk_eigenvalue(beta, r, m_max + 1, kmax, res_scale);
            if let Some(g) = guard {
                if lam_count >= g {
                    return Err(Error::InvalidArgument(format!(
                        "disk oracle: eigenvalue {count} needs angular orders above m_max = {m_max}"
                    )));
                }
            }
            if lam_count < (0.9 * kmax / 1.0).powi(2) / (r * r) {
                break;
            }
        }
        kmax *= 1.5;
        if kmax > 1e4 {
            return Err(Error::NonConvergence {
                what: "disk oracle root scan".into(),
                best_residual: f64::NAN,
            });
        }
    }
    let mut spec = OracleSpectrum { modes };
    spec.sort_and_truncate(count);
    Ok(spec)
}

fn collect_disk_order(
    beta: f64,
    r: f64,
    m: u32,
    kmax: f64,
    res_scale: f64,
    modes: &mut Vec<OracleMode>,
) {
    let mult = if m == 0 { 1 } else { 2 };
    // zero mode: harmonic r^m, exactly when m + βr = 0
    if m as f64 + beta * r == 0.0 {
        modes.push(OracleMode {
            lambda: 0.0,
            multiplicity: mult,
            label: format!("m{m}-harmonic"),
            residual: 0.0,
        });
    }
    // negative mode: τ I_m'(τr) + β I_m(τr) = 0, present iff β < -m/r
    if (m as f64) + beta * r < 0.0 {
        let g = |t: f64| t * bessel_i_prime(m, t * r) + beta * bessel_i(m, t * r);
        let mut hi = 1.0f64.max(-2.0 * beta) + m as f64 / r;
        while g(hi) <= 0.0 {
            hi *= 2.0;
        }
        let t = bisect(&g, 1e-12, hi);
        let denom = res_scale * (1.0 + bessel_i(m, t * r)).max(1.0) * (1.0 + t);
        modes.push(OracleMode {
            lambda: -t * t,
            multiplicity: mult,
            label: format!("m{m}-neg"),
            residual: g(t).abs() / denom,
        });
    }
    // positive modes: k J_m'(kr) + β J_m(kr) = 0
    let f = |k: f64| k * bessel_j_prime(m, k * r) + beta * bessel_j(m, k * r);
    let roots = scan_roots(&f, 1e-9, kmax, PI / (4.0 * r));
    for (q, k) in roots.iter().copied().filter(|&k| k > 1e-7).enumerate() {
        modes.push(OracleMode {
            lambda: k * k,
            multiplicity: mult,
            label: format!("m{m}-q{}", q + 1),
            residual: f(k).abs() / (res_scale * (1.0 + k)),
        });
    }
}

/// Smallest eigenvalue carried by angular order m (used as a completeness
/// guard), or None if no mode below the scan ceiling exists.
fn first_disk_eigenvalue(beta: f64, r: f64, m: u32, kmax: f64, res_scale: f64) -> Option<f64> {
    let mut modes = Vec::new();
    collect_disk_order(beta, r, m, kmax, res_scale, &mut modes);
    modes
        .iter()
        .map(|md| md.lambda)
        .min_by(|a, b| a.partial_cmp(b).unwrap())
}
