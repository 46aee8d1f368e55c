//! Sparse symmetric matrices on a shared pattern, and a profile (skyline)
//! Cholesky factorization with reverse Cuthill-McKee ordering.
//!
//! All assembled forms (stiffness K, mass M, boundary mass B) live on one
//! union sparsity pattern, so linear combinations like K + βB + cM are
//! plain vector operations on the value arrays.

use crate::{Error, Result};

/// Shared full-symmetric sparsity pattern in CSR layout with sorted rows.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Union pattern of all dof pairs appearing together in an element.
    pub fn from_elements<'a>(n: usize, elements: impl Iterator<Item = &'a [usize]>) -> Pattern {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in elements {
            for &i in dofs {
                for &j in dofs {
                    rows[i].push(j);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        Pattern { n, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Index into the value array for entry (i, j), if present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }
}

/// y = A x for values on the pattern.
pub fn matvec(p: &Pattern, vals: &[f64], x: &[f64], y: &mut [f64]) {
    for i in 0..p.n {
        let mut acc = 0.0;
        for k in p.row_ptr[i]..p.row_ptr[i + 1] {
            acc += vals[k] * x[p.col_idx[k]];
        }
        y[i] = acc;
    }
}

/// x' A y for values on the pattern.
pub fn quad_form(p: &Pattern, vals: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.n {
        let mut row = 0.0;
        for k in p.row_ptr[i]..p.row_ptr[i + 1] {
            row += vals[k] * y[p.col_idx[k]];
        }
        acc += x[i] * row;
    }
    acc
}

/// Linear combination of aligned value arrays.
pub fn combine(terms: &[(&[f64], f64)]) -> Vec<f64> {
    let nnz = terms[0].0.len();
    let mut out = vec![0.0; nnz];
    for &(vals, c) in terms {
        if c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(vals.iter()) {
            *o += c * v;
        }
    }
    out
}

/// Largest absolute symmetry defect |A - A^T| relative to the largest entry.
pub fn symmetry_defect(p: &Pattern, vals: &[f64]) -> f64 {
    let mut scale = 0.0f64;
    for v in vals {
        scale = scale.max(v.abs());
    }
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..p.n {
        for k in p.row_ptr[i]..p.row_ptr[i + 1] {
            let j = p.col_idx[k];
            if j < i {
                continue;
            }
            let vt = p.find(j, i).map(|t| vals[t]).unwrap_or(0.0);
            worst = worst.max((vals[k] - vt).abs());
        }
    }
    worst / scale
}

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee ordering
// ---------------------------------------------------------------------------

/// RCM ordering; returns perm with perm[new] = old. Profile-reducing for
/// the planar mesh graphs produced here.
pub fn rcm_order(p: &Pattern) -> Vec<usize> {
    let n = p.n;
    let degree = |v: usize| p.row_ptr[v + 1] - p.row_ptr[v];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    loop {
        // next unvisited min-degree seed
        let mut seed = None;
        for v in 0..n {
            if !visited[v] {
                match seed {
                    None => seed = Some(v),
                    Some(s) => {
                        if degree(v) < degree(s) {
                            seed = Some(v)
                        }
                    }
                }
            }
        }
        let Some(mut seed) = seed else { break };
        // pseudo-peripheral refinement: jump to a farthest min-degree node
        for _ in 0..2 {
            let levels = bfs_levels(p, seed, &visited);
            let far = levels.last().unwrap();
            let best = *far.iter().min_by_key(|&&v| (degree(v), v)).unwrap();
            if best == seed {
                break;
            }
            seed = best;
        }
        // Cuthill-McKee from the seed
        let mut queue = std::collections::VecDeque::new();
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> =
                p.row(v).iter().copied().filter(|&w| w != v && !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree(w), w));
            for w in nbrs {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(p: &Pattern, root: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = blocked.to_vec();
    seen[root] = true;
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in p.row(v) {
                if w != v && !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        levels.push(next);
    }
    levels
}

// ---------------------------------------------------------------------------
// Skyline (profile) Cholesky
// ---------------------------------------------------------------------------

/// Profile Cholesky factorization L L^T of a symmetric positive definite
/// matrix, stored by row envelopes in a fill-reducing (RCM) ordering.
pub struct SkylineChol {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// first stored column of each permuted row
    start: Vec<usize>,
    /// offset of each row's data slice; row i occupies offs[i]..offs[i+1]
    offs: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineChol {
    /// Factors the values on the pattern. Fails with
    /// [`Error::Factorization`] at the first non-positive pivot, which
    /// callers use to adapt spectral shifts.
    pub fn factor(p: &Pattern, vals: &[f64]) -> Result<SkylineChol> {
        let perm = rcm_order(p);
        Self::factor_with_perm(p, vals, perm)
    }

    /// Factors with a caller-provided ordering (perm[new] = old). Reusing
    /// an ordering lets repeated factorizations of matrices on one pattern
    /// skip the RCM pass.
    pub fn factor_with_perm(p: &Pattern, vals: &[f64], perm: Vec<usize>) -> Result<SkylineChol> {
        let n = p.n;
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        // envelope: start[i] = min over pattern row of permuted columns <= i
        let mut start = vec![0usize; n];
        for new_i in 0..n {
            let old_i = perm[new_i];
            let mut lo = new_i;
            for &old_j in p.row(old_i) {
                let new_j = iperm[old_j];
                if new_j < lo {
                    lo = new_j;
                }
            }
            start[new_i] = lo;
        }
        let mut offs = Vec::with_capacity(n + 1);
        offs.push(0usize);
        for i in 0..n {
            offs.push(offs[i] + (i - start[i] + 1));
        }
        let mut data = vec![0.0; offs[n]];
        // scatter values into the envelope (permuted lower triangle)
        for new_i in 0..n {
            let old_i = perm[new_i];
            let lo = p.row_ptr[old_i];
            let hi = p.row_ptr[old_i + 1];
            for k in lo..hi {
                let new_j = iperm[p.col_idx[k]];
                if new_j <= new_i {
                    data[offs[new_i] + (new_j - start[new_i])] = vals[k];
                }
            }
        }
        // row-oriented profile Cholesky
        for i in 0..n {
            let si = start[i];
            // split data so row i is mutable while earlier rows are read
            let (head, tail) = data.split_at_mut(offs[i]);
            let row_i = &mut tail[..(i - si + 1)];
            for j in si..i {
                let sj = start[j];
                let lo = si.max(sj);
                let row_j = &head[offs[j]..offs[j + 1]];
                let mut sum = row_i[j - si];
                // dot of overlapping segments [lo, j)
                let a = &row_i[(lo - si)..(j - si)];
                let b = &row_j[(lo - sj)..(j - sj)];
                for (x, y) in a.iter().zip(b.iter()) {
                    sum -= x * y;
                }
                row_i[j - si] = sum / row_j[j - sj];
            }
            let mut d = row_i[i - si];
            for k in 0..(i - si) {
                d -= row_i[k] * row_i[k];
            }
            let scale = row_i[i - si].abs().max(1.0);
            if d <= 1e-14 * scale {
                return Err(Error::Factorization {
                    pivot_index: i,
                    suggestion: "matrix is not positive definite; increase the shift".into(),
                });
            }
            row_i[i - si] = d.sqrt();
        }
        Ok(SkylineChol { n, perm, start, offs, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = b[self.perm[i]];
        }
        // forward: L y' = y
        for i in 0..n {
            let si = self.start[i];
            let row = &self.data[self.offs[i]..self.offs[i + 1]];
            let mut sum = y[i];
            for (k, x) in row[..i - si].iter().enumerate() {
                sum -= x * y[si + k];
            }
            y[i] = sum / row[i - si];
        }
        // backward: L^T x = y', column sweep
        for i in (0..n).rev() {
            let si = self.start[i];
            let row = &self.data[self.offs[i]..self.offs[i + 1]];
            let xi = y[i] / row[i - si];
            y[i] = xi;
            for (k, x) in row[..i - si].iter().enumerate() {
                y[si + k] -= x * xi;
            }
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[self.perm[i]] = y[i];
        }
        out
    }

    /// The ordering used, for reuse in subsequent factorizations.
    pub fn ordering(&self) -> Vec<usize> {
        self.perm.clone()
    }

    /// Envelope storage size (for diagnostics).
    pub fn envelope_len(&self) -> usize {
        self.data.len()
    }
}
