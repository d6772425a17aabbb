//! Second variation of the action along an orbit.
//!
//! The index form is evaluated either directly from the Lagrangian Hessians or
//! in factorized form through a Jacobi frame. Positivity on the test space of
//! fields vanishing at both ends is estimated with P1 finite elements.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::conjugate::{find_conjugate_points, ConjugateReport};
use crate::error::{Error, Result};
use crate::flow::{integrate_orbit, FrameInit, JacobiFrame, OrbitSegment};
use crate::linalg::{self, BandedSym};
use crate::model::{Hamiltonian, Lagrangian, PhasePoint};
use crate::riccati::{self, solve_riccati, RANK_TOL};
use crate::{Mat, Vector};

/// Vector field along the projected orbit, piecewise `C¹`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn span(&self) -> (f64, f64);
    fn value(&self, t: f64) -> Vector;
    /// Derivative; at breakpoints either one-sided value may be returned.
    fn derivative(&self, t: f64) -> Vector;
    /// Interior points where the derivative may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Field given by closures for value and derivative.
pub struct FnField<F, G> {
    pub dim: usize,
    pub span: (f64, f64),
    pub value: F,
    pub derivative: G,
    pub breaks: Vec<f64>,
}

impl<F, G> VectorField for FnField<F, G>
where
    F: Fn(f64) -> Vector,
    G: Fn(f64) -> Vector,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn span(&self) -> (f64, f64) {
        self.span
    }
    fn value(&self, t: f64) -> Vector {
        (self.value)(t)
    }
    fn derivative(&self, t: f64) -> Vector {
        (self.derivative)(t)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Continuous piecewise-linear field through `(knots[i], values[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearField {
    pub knots: Vec<f64>,
    pub values: Vec<Vector>,
}

impl PiecewiseLinearField {
    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len();
        self.knots.partition_point(|&k| k <= t).clamp(1, n - 1) - 1
    }

    pub fn scaled_sum(&self, alpha: f64, other: &PiecewiseLinearField) -> PiecewiseLinearField {
        PiecewiseLinearField {
            knots: self.knots.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * alpha + b).collect(),
        }
    }
}

impl VectorField for PiecewiseLinearField {
    fn dim(&self) -> usize {
        self.values[0].len()
    }
    fn span(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().expect("nonempty knots"))
    }
    fn value(&self, t: f64) -> Vector {
        let i = self.segment(t);
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
        &self.values[i] * (1.0 - s) + &self.values[i + 1] * s
    }
    fn derivative(&self, t: f64) -> Vector {
        let i = self.segment(t);
        (&self.values[i + 1] - &self.values[i]) / (self.knots[i + 1] - self.knots[i])
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.knots[1..self.knots.len() - 1].to_vec()
    }
}

/// Piece `H(t) c` of a Jacobi frame on an interval.
#[derive(Clone)]
pub struct FramePiece {
    pub frame: JacobiFrame,
    pub coeff: Vector,
    pub interval: (f64, f64),
}

/// Field assembled from Jacobi-frame pieces and zero elsewhere on `span`:
/// Jacobi fields, broken Jacobi fields, and their zero extensions.
#[derive(Clone)]
pub struct FrameField {
    pub pieces: Vec<FramePiece>,
    pub span: (f64, f64),
}

impl FrameField {
    fn piece(&self, t: f64) -> Option<&FramePiece> {
        self.pieces.iter().find(|p| t >= p.interval.0 && t <= p.interval.1)
    }
}

impl VectorField for FrameField {
    fn dim(&self) -> usize {
        self.pieces[0].frame.dim()
    }
    fn span(&self) -> (f64, f64) {
        self.span
    }
    fn value(&self, t: f64) -> Vector {
        match self.piece(t) {
            Some(p) => p.frame.h(t) * &p.coeff,
            None => Vector::zeros(self.dim()),
        }
    }
    fn derivative(&self, t: f64) -> Vector {
        match self.piece(t) {
            Some(p) => p.frame.jacobi_rhs(t).0 * &p.coeff,
            None => Vector::zeros(self.dim()),
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::new();
        for p in &self.pieces {
            b.push(p.interval.0);
            b.push(p.interval.1);
        }
        b
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Composite Gauss–Legendre rule: `points` nodes on each of `subdivisions`
/// pieces of every smooth cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub points: usize,
    pub subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { points: 3, subdivisions: 1 }
    }
}

impl Quadrature {
    pub fn new(points: usize, subdivisions: usize) -> Self {
        Quadrature { points: points.max(1), subdivisions: subdivisions.max(1) }
    }

    /// `∫_a^b f`, splitting at the interior `cuts`.
    pub fn integrate(&self, a: f64, b: f64, cuts: &[f64], mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let rule = gauss_legendre(self.points);
        let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
        pts.push(a);
        pts.push(b);
        pts.sort_by(|x, y| x.total_cmp(y));
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));
        let mut total = 0.0;
        for w in pts.windows(2) {
            let h = (w[1] - w[0]) / self.subdivisions as f64;
            for s in 0..self.subdivisions {
                let lo = w[0] + h * s as f64;
                let (m, r) = (lo + 0.5 * h, 0.5 * h);
                for &(x, wt) in &rule {
                    total += wt * r * f(m + r * x)?;
                }
            }
        }
        Ok(total)
    }
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> Result<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    if hi <= lo {
        return Err(Error::DisjointSpans);
    }
    Ok((lo, hi))
}

fn common_domain(orbit: &OrbitSegment, xi: &dyn VectorField, eta: &dyn VectorField) -> Result<((f64, f64), Vec<f64>)> {
    let dom = overlap(overlap(xi.span(), eta.span())?, orbit.span())?;
    let mut cuts = xi.breakpoints();
    cuts.extend(eta.breakpoints());
    Ok((dom, cuts))
}

/// Lagrangian Hessian blocks at time `t` along the orbit: `(L_vv, L_vx, L_xv, L_xx)`.
fn lag_blocks(lag: &dyn Lagrangian, orbit: &OrbitSegment, t: f64) -> (Mat, Mat, Mat, Mat) {
    let pt = orbit.point(t);
    let v = orbit.hamiltonian().grad_p(&pt.x, &pt.p, t);
    let xv = lag.hess_xv(&pt.x, &v, t);
    (lag.hess_vv(&pt.x, &v, t), xv.transpose(), xv, lag.hess_xx(&pt.x, &v, t))
}

/// `∫ ξ̇ᵀL_vv η̇ + ξ̇ᵀL_vx η + ξᵀL_xv η̇ + ξᵀL_xx η dt` over the common span.
pub fn index_form_direct(
    lag: &dyn Lagrangian,
    orbit: &OrbitSegment,
    xi: &dyn VectorField,
    eta: &dyn VectorField,
    quad: &Quadrature,
) -> Result<f64> {
    let ((a, b), cuts) = common_domain(orbit, xi, eta)?;
    quad.integrate(a, b, &cuts, |t| {
        let (vv, vx, xv, xx) = lag_blocks(lag, orbit, t);
        let (x, dx) = (xi.value(t), xi.derivative(t));
        let (y, dy) = (eta.value(t), eta.derivative(t));
        Ok(dx.dot(&(&vv * &dy)) + dx.dot(&(&vx * &y)) + x.dot(&(&xv * &dy)) + x.dot(&(&xx * &y)))
    })
}

/// First variation `∫ L_x·ξ + L_v·ξ̇ dt` and the boundary term `[L_v·ξ]`.
pub fn first_variation(
    lag: &dyn Lagrangian,
    orbit: &OrbitSegment,
    xi: &dyn VectorField,
    quad: &Quadrature,
) -> Result<(f64, f64)> {
    let (a, b) = overlap(xi.span(), orbit.span())?;
    let lv_xi = |t: f64| {
        let pt = orbit.point(t);
        let v = orbit.hamiltonian().grad_p(&pt.x, &pt.p, t);
        (lag.grad_x(&pt.x, &v, t), lag.grad_v(&pt.x, &v, t))
    };
    let integral = quad.integrate(a, b, &xi.breakpoints(), |t| {
        let (lx, lv) = lv_xi(t);
        Ok(lx.dot(&xi.value(t)) + lv.dot(&xi.derivative(t)))
    })?;
    let boundary = lv_xi(b).1.dot(&xi.value(b)) - lv_xi(a).1.dot(&xi.value(a));
    Ok((integral, boundary))
}

/// Cell of a frame partition: `frame` is used on `interval`.
#[derive(Clone)]
pub struct PartitionCell {
    pub interval: (f64, f64),
    pub frame: usize,
}

#[derive(Clone)]
pub struct FactorizedValue {
    pub value: f64,
    pub cells: Vec<(f64, f64)>,
    /// Number of auxiliary frames started horizontally at blowups.
    pub auxiliary_frames: usize,
}

fn slope_of(frame: &JacobiFrame, t: f64) -> Option<Mat> {
    if riccati::verticality(frame, t) < RANK_TOL {
        return None;
    }
    let hinv = linalg::inverse(&frame.h(t))?;
    Some(linalg::symmetrize(&(frame.v(t) * hinv)))
}

/// `Σ_cells ∫ (ξ̇ − H_px ξ − H_pp S ξ)ᵀ H_pp⁻¹ (η̇ − H_px η − H_pp S η) dt + [ξᵀ S η]`
/// where each cell uses the best-conditioned of the supplied frame and
/// auxiliary frames started horizontally at its blowups.
pub fn index_form_factorized(
    orbit: &OrbitSegment,
    frame: &JacobiFrame,
    xi: &dyn VectorField,
    eta: &dyn VectorField,
    quad: &Quadrature,
) -> Result<FactorizedValue> {
    let ((a, b), cuts) = common_domain(orbit, xi, eta)?;
    let (fa, fb) = frame.span();
    if fa > a + 1e-12 || fb < b - 1e-12 {
        return Err(Error::invalid("frame does not cover the field span"));
    }
    let d = frame.dim();
    let ham = frame.hamiltonian().clone();
    let sol = solve_riccati(frame)?;
    let mut frames: Vec<JacobiFrame> = vec![frame.clone()];
    for &tau in sol.blowup_times.iter().filter(|&&t| t >= a - 1.0 && t <= b + 1.0) {
        let init = FrameInit::horizontal(tau, d);
        let g = JacobiFrame::integrate(ham.clone(), &frame.point(tau), &init.h, &init.v, (a.min(tau), b.max(tau)), orbit.tol(), false)?;
        frames.push(g);
    }
    // Choose frames on a fine grid with hysteresis.
    let n_grid = libm::ceil((b - a) / 0.01).max(16.0) as usize;
    let mut cells: Vec<PartitionCell> = Vec::new();
    let mut current = usize::MAX;
    for i in 0..=n_grid {
        let t = a + (b - a) * i as f64 / n_grid as f64;
        let kappa: Vec<f64> = frames.iter().map(|f| riccati::verticality(f, t)).collect();
        let best = (0..frames.len()).fold(0, |m, j| if kappa[j] > kappa[m] { j } else { m });
        if kappa[best] < RANK_TOL {
            return Err(Error::DegenerateFrame { t });
        }
        let keep = current != usize::MAX && kappa[current] >= 0.5 * kappa[best];
        if !keep {
            if let Some(last) = cells.last_mut() {
                // Switch halfway between grid points.
                let prev = a + (b - a) * (i - 1) as f64 / n_grid as f64;
                let mid = 0.5 * (prev + t);
                last.interval.1 = mid;
                cells.push(PartitionCell { interval: (mid, b), frame: best });
            } else {
                cells.push(PartitionCell { interval: (a, b), frame: best });
            }
            current = best;
        }
    }
    let mut total = 0.0;
    for cell in &cells {
        let f = &frames[cell.frame];
        let (c0, c1) = cell.interval;
        let integral = quad.integrate(c0, c1, &cuts, |t| {
            let s = slope_of(f, t).ok_or(Error::DegenerateFrame { t })?;
            let pt = orbit.point(t);
            let hpp = ham.hess_pp(&pt.x, &pt.p, t);
            let hpx = ham.hess_px(&pt.x, &pt.p, t);
            let hpp_inv = linalg::inverse(&hpp).ok_or(Error::DegenerateFrame { t })?;
            let (x, dx) = (xi.value(t), xi.derivative(t));
            let (y, dy) = (eta.value(t), eta.derivative(t));
            let zx = dx - &hpx * &x - &hpp * (&s * &x);
            let zy = dy - &hpx * &y - &hpp * (&s * &y);
            Ok(zx.dot(&(&hpp_inv * zy)))
        })?;
        let s1 = slope_of(f, c1).ok_or(Error::DegenerateFrame { t: c1 })?;
        let s0 = slope_of(f, c0).ok_or(Error::DegenerateFrame { t: c0 })?;
        let bdry = xi.value(c1).dot(&(s1 * eta.value(c1))) - xi.value(c0).dot(&(s0 * eta.value(c0)));
        total += integral + bdry;
    }
    Ok(FactorizedValue {
        value: total,
        cells: cells.iter().map(|c| c.interval).collect(),
        auxiliary_frames: frames.len() - 1,
    })
}

/// P1 finite-element space on `[t0, t0 + length]` with zero end values.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSpace {
    pub t0: f64,
    pub length: f64,
    pub n_elem: usize,
    pub d: usize,
    pub midpoint_constrained: bool,
    /// Basis of admissible nodal values for interior nodes `1..n_elem`.
    node_basis: Vec<Mat>,
    offsets: Vec<usize>,
    ndof: usize,
}

impl TestSpace {
    /// With `midpoint_constrained`, the value at `t0 + length/2` is restricted
    /// to the orthogonal complement of the projected velocity there.
    pub fn new(orbit: &OrbitSegment, t0: f64, length: f64, n_elem: usize, midpoint_constrained: bool) -> Result<Self> {
        if !(length > 0.0) || n_elem < 2 {
            return Err(Error::invalid("test space needs positive length and at least 2 elements"));
        }
        if midpoint_constrained && n_elem % 2 != 0 {
            return Err(Error::invalid("the midpoint constraint needs an even element count"));
        }
        let (a, b) = orbit.span();
        if t0 < a - 1e-12 || t0 + length > b + 1e-12 {
            return Err(Error::invalid("orbit does not cover the test-space window"));
        }
        let d = orbit.dim();
        let mut node_basis = Vec::with_capacity(n_elem + 1);
        let mut offsets = Vec::with_capacity(n_elem + 2);
        let mut ndof = 0;
        for m in 0..=n_elem {
            let basis = if m == 0 || m == n_elem {
                Mat::zeros(d, 0)
            } else if midpoint_constrained && 2 * m == n_elem {
                let vel = orbit.velocity(t0 + 0.5 * length);
                if vel.norm() <= 1e-12 {
                    Mat::identity(d, d)
                } else {
                    linalg::orthogonal_complement(&Mat::from_column_slice(d, 1, vel.as_slice()))
                }
            } else {
                Mat::identity(d, d)
            };
            offsets.push(ndof);
            ndof += basis.ncols();
            node_basis.push(basis);
        }
        offsets.push(ndof);
        Ok(TestSpace { t0, length, n_elem, d, midpoint_constrained, node_basis, offsets, ndof })
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..=self.n_elem).map(|m| self.t0 + self.length * m as f64 / self.n_elem as f64).collect()
    }

    /// Field with the given coefficient vector.
    pub fn field(&self, coeffs: &[f64]) -> PiecewiseLinearField {
        assert_eq!(coeffs.len(), self.ndof, "coefficient vector has wrong length");
        let values = (0..=self.n_elem)
            .map(|m| {
                let k = self.node_basis[m].ncols();
                let c = Vector::from_column_slice(&coeffs[self.offsets[m]..self.offsets[m] + k]);
                &self.node_basis[m] * c
            })
            .collect();
        PiecewiseLinearField { knots: self.knots(), values }
    }

    /// Stiffness (index form) and mass (L² Gram) matrices in banded storage.
    pub fn assemble(&self, lag: &dyn Lagrangian, orbit: &OrbitSegment, quad: &Quadrature) -> (BandedSym, BandedSym) {
        let d = self.d;
        let w = (2 * d).saturating_sub(1).max(1);
        let mut kmat = BandedSym::zeros(self.ndof, w);
        let mut mmat = BandedSym::zeros(self.ndof, w);
        let h = self.length / self.n_elem as f64;
        let rule = gauss_legendre(quad.points);
        for e in 0..self.n_elem {
            let ta = self.t0 + h * e as f64;
            let mut kl = Mat::zeros(2 * d, 2 * d);
            let mut ml = Mat::zeros(2 * d, 2 * d);
            let hs = h / quad.subdivisions as f64;
            for s in 0..quad.subdivisions {
                let lo = ta + hs * s as f64;
                for &(x, wt) in &rule {
                    let t = lo + 0.5 * hs * (1.0 + x);
                    let wq = wt * 0.5 * hs;
                    let (vv, vx, xv, xx) = lag_blocks(lag, orbit, t);
                    let phi = [(ta + h - t) / h, (t - ta) / h];
                    let dphi = [-1.0 / h, 1.0 / h];
                    for aa in 0..2 {
                        for bb in 0..2 {
                            for i in 0..d {
                                for j in 0..d {
                                    let val = dphi[aa] * dphi[bb] * vv[(i, j)]
                                        + dphi[aa] * phi[bb] * vx[(i, j)]
                                        + phi[aa] * dphi[bb] * xv[(i, j)]
                                        + phi[aa] * phi[bb] * xx[(i, j)];
                                    kl[(aa * d + i, bb * d + j)] += wq * val;
                                }
                                ml[(aa * d + i, bb * d + i)] += wq * phi[aa] * phi[bb];
                            }
                        }
                    }
                }
            }
            let nodes = [e, e + 1];
            for aa in 0..2 {
                for bb in 0..2 {
                    let (ba, bb_) = (&self.node_basis[nodes[aa]], &self.node_basis[nodes[bb]]);
                    if ba.ncols() == 0 || bb_.ncols() == 0 {
                        continue;
                    }
                    let kb = ba.transpose() * kl.view((aa * d, bb * d), (d, d)) * bb_;
                    let mb = ba.transpose() * ml.view((aa * d, bb * d), (d, d)) * bb_;
                    for al in 0..ba.ncols() {
                        for be in 0..bb_.ncols() {
                            let gi = self.offsets[nodes[aa]] + al;
                            let gj = self.offsets[nodes[bb]] + be;
                            // Off-diagonal pairs are visited twice; keep the lower one.
                            if gi >= gj {
                                kmat.add(gi, gj, kb[(al, be)]);
                                mmat.add(gi, gj, mb[(al, be)]);
                            }
                        }
                    }
                }
            }
        }
        (kmat, mmat)
    }
}

/// Smallest generalized eigenvalue of the index form against the L² Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AMin {
    pub a_min: f64,
    pub witness: Vec<f64>,
    /// Sign decisions use `1e-9 × scale`.
    pub scale: f64,
    pub ndof: usize,
}

impl AMin {
    pub fn floor(&self) -> f64 {
        SIGN_FLOOR * self.scale
    }
}

pub const SIGN_FLOOR: f64 = 1e-9;

pub fn a_min(lag: &dyn Lagrangian, orbit: &OrbitSegment, space: &TestSpace, quad: &Quadrature) -> Result<AMin> {
    if space.ndof() == 0 {
        return Err(Error::invalid("test space has no degrees of freedom"));
    }
    let (k, m) = space.assemble(lag, orbit, quad);
    let (a, witness) = linalg::smallest_generalized_eig(&k, &m);
    let mscale = (0..m.dim()).map(|i| m.get(i, i)).fold(f64::INFINITY, f64::min);
    let scale = k.scale() / mscale;
    Ok(AMin { a_min: a, witness, scale, ndof: space.ndof() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexVerdict {
    Disconjugate,
    Conjugate,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexDecision {
    pub verdict: IndexVerdict,
    pub a_min: f64,
    pub floor: f64,
    pub conjugate: ConjugateReport,
    /// Whether the conjugate-point search says the same.
    pub agrees: bool,
}

/// Sign of the index form on `[t0, t0 + length]`, cross-checked against the
/// conjugate-point search.
pub fn disconjugacy_via_index(
    lag: &dyn Lagrangian,
    orbit: &OrbitSegment,
    t0: f64,
    length: f64,
    n_elem: usize,
    midpoint_constrained: bool,
) -> Result<IndexDecision> {
    let space = TestSpace::new(orbit, t0, length, n_elem, midpoint_constrained)?;
    let am = a_min(lag, orbit, &space, &Quadrature::default())?;
    let floor = am.floor();
    let verdict = if am.a_min > floor {
        IndexVerdict::Disconjugate
    } else if am.a_min < -floor {
        IndexVerdict::Conjugate
    } else {
        IndexVerdict::Indeterminate
    };
    let conjugate = find_conjugate_points(orbit, (t0, t0 + length))?;
    let agrees = match verdict {
        IndexVerdict::Disconjugate => conjugate.disconjugate,
        IndexVerdict::Conjugate => !conjugate.disconjugate,
        IndexVerdict::Indeterminate => false,
    };
    Ok(IndexDecision { verdict, a_min: am.a_min, floor, conjugate, agrees })
}

/// Configuration of a positivity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub t_list: Vec<f64>,
    pub n_elem: usize,
    pub midpoint_constrained: bool,
    pub quadrature: Quadrature,
    pub integ_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            t_list: vec![5.0, 10.0, 20.0, 40.0],
            n_elem: 512,
            midpoint_constrained: false,
            quadrature: Quadrature::default(),
            integ_tol: crate::flow::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityCell {
    pub sample: usize,
    pub length: f64,
    pub a_min: f64,
    pub floor: f64,
    pub indeterminate: bool,
    pub witness: Vec<f64>,
}

/// One `(θ, T)` cell: `a_min` on the window `[clock, clock + T]` from `theta`.
pub fn positivity_cell(
    lag: &dyn Lagrangian,
    ham: &Arc<dyn Hamiltonian>,
    sample: usize,
    theta: &PhasePoint,
    length: f64,
    cfg: &ScanConfig,
) -> Result<PositivityCell> {
    let orbit = integrate_orbit(ham.clone(), theta, (theta.clock, theta.clock + length), cfg.integ_tol)?;
    let space = TestSpace::new(&orbit, theta.clock, length, cfg.n_elem, cfg.midpoint_constrained)?;
    let am = a_min(lag, &orbit, &space, &cfg.quadrature)?;
    let floor = am.floor();
    Ok(PositivityCell {
        sample,
        length,
        a_min: am.a_min,
        floor,
        indeterminate: am.a_min.abs() <= floor,
        witness: am.witness,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub cells: Vec<PositivityCell>,
    pub t_scanned: Vec<f64>,
    pub uniform_a: f64,
    /// Fit `min_θ a_min(T) ≈ a_inf + c / T²`.
    pub a_inf: f64,
    pub c: f64,
    /// `a_inf` keeps at least [`TREND_FRACTION`] of `uniform_a` and both are positive.
    pub trend_bounded_below: bool,
    pub indeterminate_cells: usize,
    /// Witness coefficients of the minimizing cell.
    pub witness: Vec<f64>,
}

/// Share of the scanned minimum the extrapolated value must retain.
pub const TREND_FRACTION: f64 = 0.1;

impl PositivityReport {
    /// Merges cells in the given order.
    pub fn from_cells(cells: Vec<PositivityCell>) -> Self {
        let mut ts: Vec<f64> = cells.iter().map(|c| c.length).collect();
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup();
        let per_t: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let m = cells.iter().filter(|c| c.length == t).map(|c| c.a_min).fold(f64::INFINITY, f64::min);
                (t, m)
            })
            .collect();
        let (a_inf, c) = fit_inverse_square(&per_t);
        let best = cells
            .iter()
            .enumerate()
            .fold(None::<usize>, |m, (i, c)| match m {
                Some(j) if cells[j].a_min <= c.a_min => Some(j),
                _ => Some(i),
            });
        let uniform_a = best.map_or(f64::NAN, |i| cells[i].a_min);
        let floor = cells.iter().map(|c| c.floor).fold(0.0, f64::max);
        PositivityReport {
            trend_bounded_below: uniform_a > floor && a_inf > floor.max(TREND_FRACTION * uniform_a),
            indeterminate_cells: cells.iter().filter(|c| c.indeterminate).count(),
            witness: best.map(|i| cells[i].witness.clone()).unwrap_or_default(),
            cells,
            t_scanned: ts,
            uniform_a,
            a_inf,
            c,
        }
    }
}

/// Least squares `y ≈ a + c / T²`; with one point, `c = 0`.
pub fn fit_inverse_square(data: &[(f64, f64)]) -> (f64, f64) {
    let n = data.len() as f64;
    if data.len() < 2 {
        return (data.first().map_or(f64::NAN, |p| p.1), 0.0);
    }
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, y) in data {
        let x = 1.0 / (t * t);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return (sy / n, 0.0);
    }
    let c = (n * sxy - sx * sy) / det;
    ((sy - c * sx) / n, c)
}

/// Scan over samples × lengths, sequential and in order.
pub fn uniform_positivity_scan(
    lag: &dyn Lagrangian,
    ham: &Arc<dyn Hamiltonian>,
    samples: &[PhasePoint],
    cfg: &ScanConfig,
) -> Result<PositivityReport> {
    let mut cells = Vec::new();
    for (i, theta) in samples.iter().enumerate() {
        for &t in &cfg.t_list {
            cells.push(positivity_cell(lag, ham, i, theta, t, cfg)?);
        }
    }
    Ok(PositivityReport::from_cells(cells))
}

/// Bump `f(t) = exp(1 − 1/(1 − 4t²))` on `|t| < 1/2`, zero outside.
pub fn bump(t: f64) -> f64 {
    let q = 1.0 - 4.0 * t * t;
    if q <= 0.0 {
        0.0
    } else {
        libm::exp(1.0 - 1.0 / q)
    }
}

pub fn bump_derivative(t: f64) -> f64 {
    let q = 1.0 - 4.0 * t * t;
    if q <= 0.0 {
        0.0
    } else {
        -8.0 * t / (q * q) * libm::exp(1.0 - 1.0 / q)
    }
}

/// `B = 4 ‖L‖_{C²} (‖f‖² + ‖f′‖²)` for the unit bump field.
pub fn bump_field_bound(l_c2: f64) -> f64 {
    let quad = Quadrature::new(20, 64);
    let f2 = quad.integrate(-0.5, 0.5, &[], |t| Ok(bump(t) * bump(t))).unwrap_or(f64::NAN);
    let g2 = quad.integrate(-0.5, 0.5, &[], |t| Ok(bump_derivative(t) * bump_derivative(t))).unwrap_or(f64::NAN);
    4.0 * l_c2 * (f2 + g2)
}

/// Boxed field, convenient for heterogeneous collections.
pub type DynField = Box<dyn VectorField>;
