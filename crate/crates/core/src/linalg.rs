//! Small dense helpers on top of nalgebra, plus a banded symmetric solver for
//! the generalized eigenproblems of the finite-element index form.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Mat, Vector};

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_sym_eig(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_abs_sym_eig(m: &Mat) -> f64 {
    sym_eigenvalues(m).iter().fold(0.0, |a, e| a.max(e.abs()))
}

/// Singular values, ascending.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

pub fn min_singular(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn inverse(m: &Mat) -> Option<Mat> {
    m.clone().try_inverse()
}

pub fn determinant(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

/// Orthonormal basis for the column span of `m`, dropping directions whose
/// singular value falls below `rel_tol` times the largest one.
pub fn orthonormal_basis(m: &Mat, rel_tol: f64) -> Mat {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Mat::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Mat::from_fn(n, idx.len(), |r, c| u[(r, idx[c])])
}

/// Orthonormal basis of the orthogonal complement of the column span of `m`.
///
/// Built by pivoted Gram-Schmidt on the projected unit vectors, so the basis
/// depends continuously on `m` away from ties in the pivot choice. An
/// eigenbasis of the projector would be arbitrary inside its repeated
/// eigenvalue.
pub fn orthogonal_complement(m: &Mat) -> Mat {
    let n = m.nrows();
    let q = orthonormal_basis(m, 1e-12);
    let k = q.ncols();
    if k == n {
        return Mat::zeros(n, 0);
    }
    let mut cand: Vec<Vector> = (0..n)
        .map(|i| {
            let e = Vector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 });
            &e - &q * (q.transpose() * &e)
        })
        .collect();
    let mut out = Mat::zeros(n, n - k);
    let mut used = vec![false; n];
    for c in 0..n - k {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (i, v) in cand.iter().enumerate() {
            if !used[i] && v.norm() > best_norm + 1e-12 {
                best = i;
                best_norm = v.norm();
            }
        }
        used[best] = true;
        let mut v = cand[best].clone();
        // Second pass against earlier columns for orthogonality to rounding.
        for j in 0..c {
            let col = out.column(j).into_owned();
            v -= &col * col.dot(&v);
        }
        v /= v.norm();
        out.set_column(c, &v);
        for (i, w) in cand.iter_mut().enumerate() {
            if !used[i] {
                let proj = v.dot(w);
                *w -= &v * proj;
            }
        }
    }
    out
}

/// Principal angles (radians, ascending) between the column spans of `a` and `b`.
pub fn principal_angles(a: &Mat, b: &Mat) -> Vec<f64> {
    let qa = orthonormal_basis(a, 1e-12);
    let qb = orthonormal_basis(b, 1e-12);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Vec::new();
    }
    let c = qa.transpose() * &qb;
    let mut angles: Vec<f64> = singular_values(&c)
        .iter()
        .map(|s| libm::acos(s.clamp(-1.0, 1.0)))
        .collect();
    // Small angles are poorly resolved by acos; recompute them from the residual.
    let proj = &qa * (qa.transpose() * &qb);
    let resid = &qb - proj;
    let sines = singular_values(&resid);
    for (ang, s) in angles.iter_mut().rev().zip(sines.iter()) {
        if *ang < 0.5 {
            *ang = libm::asin(s.clamp(0.0, 1.0));
        }
    }
    angles.sort_by(|x, y| x.total_cmp(y));
    angles
}

/// Largest principal angle: the gap between two subspaces of equal dimension.
pub fn subspace_gap(a: &Mat, b: &Mat) -> f64 {
    principal_angles(a, b).last().copied().unwrap_or(0.0)
}

/// Thin QR with a nonnegative diagonal in `R`.
pub fn qr_positive(m: &Mat) -> (Mat, Mat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)] < 0.0 {
            let mut row = r.row_mut(i);
            row *= -1.0;
            let mut col = q.column_mut(i);
            col *= -1.0;
        }
    }
    (q, r)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn vec_norm(v: &Vector) -> f64 {
    v.norm()
}

/// Symmetric banded matrix storing the lower band `A[i][i-k]` for `k <= w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, w: usize) -> Self {
        BandedSym { n, w, data: vec![0.0; n * (w + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.w
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            0.0
        } else {
            self.data[i * (self.w + 1) + (i - j)]
        }
    }

    /// Adds `x` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, x: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.w, "entry outside the band");
        self.data[i * (self.w + 1) + (i - j)] += x;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.w);
            for j in lo..=i {
                let a = self.get(i, j);
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Abs-max entry; used as the matrix scale for sign decisions.
    pub fn scale(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

/// `L D L^T` factorization of `K - sigma M` without pivoting.
pub struct BandedLdlt {
    n: usize,
    w: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl BandedLdlt {
    pub fn factor(k: &BandedSym, m: &BandedSym, sigma: f64) -> Self {
        let n = k.n;
        let w = k.w.max(m.w);
        let mut l = vec![0.0; n * (w + 1)];
        let mut d = vec![0.0; n];
        let at = |i: usize, j: usize| k.get(i, j) - sigma * m.get(i, j);
        let idx = |i: usize, j: usize| i * (w + 1) + (i - j);
        for i in 0..n {
            let lo = i.saturating_sub(w);
            for j in lo..i {
                let mut s = at(i, j);
                let lo_j = j.saturating_sub(w).max(lo);
                for q in lo_j..j {
                    s -= l[idx(i, q)] * d[q] * l[idx(j, q)];
                }
                l[idx(i, j)] = if d[j] != 0.0 { s / d[j] } else { 0.0 };
            }
            let mut s = at(i, i);
            for q in lo..i {
                s -= l[idx(i, q)] * l[idx(i, q)] * d[q];
            }
            d[i] = s;
            l[idx(i, i)] = 1.0;
        }
        BandedLdlt { n, w, l, d }
    }

    /// Number of negative pivots, which by Sylvester's law equals the number
    /// of generalized eigenvalues below the shift when `M` is positive definite.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.d.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let w = self.w;
        let idx = |i: usize, j: usize| i * (w + 1) + (i - j);
        let mut y = b.to_vec();
        for i in 0..n {
            for j in i.saturating_sub(w)..i {
                y[i] -= self.l[idx(i, j)] * y[j];
            }
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n.min(i + w + 1) {
                y[i] -= self.l[idx(j, i)] * y[j];
            }
        }
        y
    }
}

/// Smallest eigenpair of `K u = lambda M u` for symmetric `K` and positive
/// definite `M`: inertia bisection brackets the eigenvalue, shift-invert
/// iteration from a fixed start vector refines it and supplies the vector.
pub fn smallest_generalized_eig(k: &BandedSym, m: &BandedSym) -> (f64, Vec<f64>) {
    let n = k.n;
    assert!(n > 0, "empty eigenproblem");
    let count_below = |s: f64| BandedLdlt::factor(k, m, s).negative_count();

    // Any Rayleigh quotient is an upper bound; the diagonal ones are cheap.
    let mut hi = (0..n)
        .map(|i| k.get(i, i) / m.get(i, i))
        .fold(f64::INFINITY, f64::min);
    let mut step = hi.abs().max(1.0);
    while count_below(hi) == 0 {
        hi += step * 1e-6;
        step *= 2.0;
    }
    let mut lo = hi - step;
    while count_below(lo) > 0 {
        step *= 2.0;
        lo = hi - step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * hi.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // Shift strictly below the spectrum so the factorization is definite.
    let gap = (hi - lo).max(1e-10 * hi.abs().max(1.0));
    let sigma = lo - 10.0 * gap;
    let fac = BandedLdlt::factor(k, m, sigma);
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i % 7) as f64)).collect();
    let mut lambda = hi;
    for _ in 0..60 {
        let mx = m.mul_vec(&x);
        let mut y = fac.solve(&mx);
        let my = m.mul_vec(&y);
        let nrm = libm::sqrt(dot(&y, &my));
        for v in y.iter_mut() {
            *v /= nrm;
        }
        let ky = k.mul_vec(&y);
        let new_lambda = dot(&y, &ky);
        let done = (new_lambda - lambda).abs() <= 1e-15 * new_lambda.abs().max(1.0);
        lambda = new_lambda;
        x = y;
        if done {
            break;
        }
    }
    // Deterministic sign: largest-magnitude entry positive.
    let imax = (0..n).fold(0, |a, i| if x[i].abs() > x[a].abs() { i } else { a });
    if x[imax] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    (lambda, x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_matches_dense_eigen() {
        // 1D Laplacian against identity: lambda_min = 2 - 2 cos(pi/(n+1)).
        let n = 40;
        let mut k = BandedSym::zeros(n, 1);
        let mut m = BandedSym::zeros(n, 1);
        for i in 0..n {
            k.add(i, i, 2.0);
            m.add(i, i, 1.0);
            if i > 0 {
                k.add(i, i - 1, -1.0);
            }
        }
        let (l, v) = smallest_generalized_eig(&k, &m);
        let exact = 2.0 - 2.0 * libm::cos(core::f64::consts::PI / (n as f64 + 1.0));
        assert!((l - exact).abs() < 1e-12, "{l} vs {exact}");
        let kv = k.mul_vec(&v);
        for i in 0..n {
            assert!((kv[i] - l * v[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_inertia() {
        let mut k = BandedSym::zeros(3, 1);
        let m = {
            let mut m = BandedSym::zeros(3, 1);
            for i in 0..3 {
                m.add(i, i, 1.0);
            }
            m
        };
        k.add(0, 0, -1.0);
        k.add(1, 1, 2.0);
        k.add(2, 2, 3.0);
        assert_eq!(BandedLdlt::factor(&k, &m, 0.0).negative_count(), 1);
        assert_eq!(BandedLdlt::factor(&k, &m, 2.5).negative_count(), 2);
        let (l, _) = smallest_generalized_eig(&k, &m);
        assert!((l + 1.0).abs() < 1e-12);
    }

    #[test]
    fn angles_and_complement() {
        let a = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let b = Mat::from_column_slice(2, 1, &[1.0, 1e-8]);
        assert!((subspace_gap(&a, &b) - 1e-8).abs() < 1e-15);
        let c = orthogonal_complement(&a);
        assert!((c[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }
}
