//! Convex Lagrangians and Hamiltonians on flat configuration spaces.
//!
//! Coordinates live on a product of circles (period 2π) and lines, so all
//! derivatives are ordinary partial derivatives. Index convention for mixed
//! Hessians: `hess_xv[(i, j)] = ∂²L/∂x_i∂v_j`, likewise for `hess_xp`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, min_sym_eig};
use crate::{Mat, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigSpace {
    periodic: Vec<bool>,
}

impl ConfigSpace {
    pub fn new(periodic: Vec<bool>) -> Result<Self> {
        if periodic.is_empty() {
            return Err(Error::invalid("configuration space needs dimension >= 1"));
        }
        Ok(ConfigSpace { periodic })
    }

    pub fn torus(d: usize) -> Self {
        ConfigSpace { periodic: vec![true; d.max(1)] }
    }

    pub fn line(d: usize) -> Self {
        ConfigSpace { periodic: vec![false; d.max(1)] }
    }

    pub fn dim(&self) -> usize {
        self.periodic.len()
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    /// Reduces periodic coordinates to `[0, 2π)`.
    pub fn reduce(&self, x: &Vector) -> Vector {
        let mut y = x.clone();
        for (i, per) in self.periodic.iter().enumerate() {
            if *per {
                y[i] = wrap_angle(y[i]);
            }
        }
        y
    }

    /// Distance between two points, measured modulo 2π on periodic axes.
    pub fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let mut dx = a[i] - b[i];
            if self.periodic[i] {
                dx = wrap_angle(dx + PI) - PI;
            }
            acc += dx * dx;
        }
        libm::sqrt(acc)
    }
}

pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = x - two_pi * libm::floor(x / two_pi);
    if r >= two_pi {
        r -= two_pi;
    }
    if r < 0.0 {
        r = 0.0;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDependence {
    Autonomous,
    Periodic(f64),
    General,
}

impl TimeDependence {
    pub fn is_autonomous(&self) -> bool {
        matches!(self, TimeDependence::Autonomous)
    }
}

pub trait Lagrangian: Send + Sync {
    fn space(&self) -> &ConfigSpace;
    fn time_dependence(&self) -> TimeDependence;
    fn value(&self, x: &Vector, v: &Vector, t: f64) -> f64;
    fn grad_x(&self, x: &Vector, v: &Vector, t: f64) -> Vector;
    fn grad_v(&self, x: &Vector, v: &Vector, t: f64) -> Vector;
    fn hess_xx(&self, x: &Vector, v: &Vector, t: f64) -> Mat;
    /// `(i, j)` entry is `∂²L/∂x_i∂v_j`.
    fn hess_xv(&self, x: &Vector, v: &Vector, t: f64) -> Mat;
    fn hess_vv(&self, x: &Vector, v: &Vector, t: f64) -> Mat;

    /// `(i, j)` entry is `∂²L/∂v_i∂x_j`.
    fn hess_vx(&self, x: &Vector, v: &Vector, t: f64) -> Mat {
        self.hess_xv(x, v, t).transpose()
    }

    /// A lower bound for the eigenvalues of `L_vv`, when one is known.
    fn convexity_floor(&self) -> Option<f64> {
        None
    }

    fn dim(&self) -> usize {
        self.space().dim()
    }
}

pub trait Hamiltonian: Send + Sync {
    fn space(&self) -> &ConfigSpace;
    fn time_dependence(&self) -> TimeDependence;
    fn value(&self, x: &Vector, p: &Vector, t: f64) -> f64;
    fn grad_x(&self, x: &Vector, p: &Vector, t: f64) -> Vector;
    fn grad_p(&self, x: &Vector, p: &Vector, t: f64) -> Vector;
    fn hess_xx(&self, x: &Vector, p: &Vector, t: f64) -> Mat;
    /// `(i, j)` entry is `∂²H/∂x_i∂p_j`.
    fn hess_xp(&self, x: &Vector, p: &Vector, t: f64) -> Mat;
    fn hess_pp(&self, x: &Vector, p: &Vector, t: f64) -> Mat;

    /// `(i, j)` entry is `∂²H/∂p_i∂x_j`.
    fn hess_px(&self, x: &Vector, p: &Vector, t: f64) -> Mat {
        self.hess_xp(x, p, t).transpose()
    }

    fn dim(&self) -> usize {
        self.space().dim()
    }
}

/// Point `(x, p)` in phase space together with its clock time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vector,
    pub p: Vector,
    pub clock: f64,
}

impl PhasePoint {
    pub fn new(x: &[f64], p: &[f64], clock: f64) -> Self {
        PhasePoint { x: Vector::from_column_slice(x), p: Vector::from_column_slice(p), clock }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn reduced(&self, space: &ConfigSpace) -> PhasePoint {
        PhasePoint { x: space.reduce(&self.x), p: self.p.clone(), clock: self.clock }
    }
}

fn check_convex(lag: &dyn Lagrangian, vv: &Mat) -> Result<()> {
    let m = min_sym_eig(vv);
    let floor = lag.convexity_floor().unwrap_or(0.0);
    if !(m > 0.0) || m < floor {
        return Err(Error::ConvexityViolation { min_eigenvalue: m });
    }
    Ok(())
}

/// `(x, v, t) ↦ (x, L_v(x, v, t), t)`.
pub fn legendre_transform(lag: &dyn Lagrangian, x: &Vector, v: &Vector, t: f64) -> Result<PhasePoint> {
    check_convex(lag, &lag.hess_vv(x, v, t))?;
    Ok(PhasePoint { x: x.clone(), p: lag.grad_v(x, v, t), clock: t })
}

/// `E = L_v · v - L`.
pub fn energy(lag: &dyn Lagrangian, x: &Vector, v: &Vector, t: f64) -> f64 {
    lag.grad_v(x, v, t).dot(v) - lag.value(x, v, t)
}

pub const LEGENDRE_TOL: f64 = 1e-12;
pub const LEGENDRE_MAX_ITER: usize = 50;

/// Hamiltonian induced by a Lagrangian through the Legendre transform.
///
/// Velocities are recovered by damped Newton on `v ↦ L_v(x, v, t) = p`. When
/// the inversion fails inside a flow evaluation the derivatives are NaN, which
/// the integrator turns into an escape error.
pub struct LegendreHamiltonian {
    lag: Arc<dyn Lagrangian>,
    floor: f64,
}

pub fn hamiltonian_from_lagrangian(lag: Arc<dyn Lagrangian>) -> LegendreHamiltonian {
    let floor = lag.convexity_floor().unwrap_or(1e-8);
    LegendreHamiltonian { lag, floor }
}

impl LegendreHamiltonian {
    pub fn lagrangian(&self) -> &Arc<dyn Lagrangian> {
        &self.lag
    }

    /// Solves `L_v(x, v, t) = p` for `v`.
    pub fn velocity(&self, x: &Vector, p: &Vector, t: f64) -> Result<Vector> {
        let scale = p.norm().max(1.0);
        let mut v = p.clone();
        let mut r = self.lag.grad_v(x, &v, t) - p;
        let mut rn = r.norm();
        for _ in 0..LEGENDRE_MAX_ITER {
            if rn <= LEGENDRE_TOL * scale {
                return Ok(v);
            }
            let j = self.lag.hess_vv(x, &v, t);
            let eig = linalg::symmetrize(&j).symmetric_eigen();
            let mut inv_diag = eig.eigenvalues.clone();
            for e in inv_diag.iter_mut() {
                *e = 1.0 / e.max(self.floor);
            }
            let q = &eig.eigenvectors;
            let step = q * Mat::from_diagonal(&inv_diag) * q.transpose() * &r;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let trial = &v - &step * alpha;
                let rt = self.lag.grad_v(x, &trial, t) - p;
                let rtn = rt.norm();
                if rtn < rn || rtn <= LEGENDRE_TOL * scale {
                    v = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if rn <= LEGENDRE_TOL * scale {
            Ok(v)
        } else {
            Err(Error::TransformFailure { iterations: LEGENDRE_MAX_ITER, residual: rn })
        }
    }

    fn v_or_nan(&self, x: &Vector, p: &Vector, t: f64) -> Vector {
        self.velocity(x, p, t)
            .unwrap_or_else(|_| Vector::from_element(p.len(), f64::NAN))
    }

    fn blocks(&self, x: &Vector, p: &Vector, t: f64) -> (Mat, Mat, Mat) {
        let v = self.v_or_nan(x, p, t);
        let lvv = self.lag.hess_vv(x, &v, t);
        let hpp = lvv
            .clone()
            .try_inverse()
            .unwrap_or_else(|| Mat::from_element(lvv.nrows(), lvv.ncols(), f64::NAN));
        let lvx = self.lag.hess_vx(x, &v, t);
        let lxx = self.lag.hess_xx(x, &v, t);
        let hpx = -(&hpp * &lvx);
        let hxp = hpx.transpose();
        let hxx = -(lxx + &hxp * &lvx);
        (hpp, hpx, hxx)
    }
}

impl Hamiltonian for LegendreHamiltonian {
    fn space(&self) -> &ConfigSpace {
        self.lag.space()
    }
    fn time_dependence(&self) -> TimeDependence {
        self.lag.time_dependence()
    }
    fn value(&self, x: &Vector, p: &Vector, t: f64) -> f64 {
        let v = self.v_or_nan(x, p, t);
        p.dot(&v) - self.lag.value(x, &v, t)
    }
    fn grad_x(&self, x: &Vector, p: &Vector, t: f64) -> Vector {
        let v = self.v_or_nan(x, p, t);
        -self.lag.grad_x(x, &v, t)
    }
    fn grad_p(&self, x: &Vector, p: &Vector, t: f64) -> Vector {
        self.v_or_nan(x, p, t)
    }
    fn hess_xx(&self, x: &Vector, p: &Vector, t: f64) -> Mat {
        self.blocks(x, p, t).2
    }
    fn hess_xp(&self, x: &Vector, p: &Vector, t: f64) -> Mat {
        self.blocks(x, p, t).1.transpose()
    }
    fn hess_pp(&self, x: &Vector, p: &Vector, t: f64) -> Mat {
        self.blocks(x, p, t).0
    }
}

/// Compact box in chart coordinates times a clock interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub x: Vec<(f64, f64)>,
    pub p: Vec<(f64, f64)>,
    pub t: (f64, f64),
}

impl Region {
    /// Box `x ∈ [0, 2π)^d` or `[-x_max, x_max]^d`, `|p_i| ≤ p_max`, `t ∈ [0, period]`.
    pub fn standard(space: &ConfigSpace, x_max: f64, p_max: f64, t_span: (f64, f64)) -> Region {
        let x = space
            .periodic()
            .iter()
            .map(|&per| if per { (0.0, 2.0 * PI) } else { (-x_max, x_max) })
            .collect();
        Region { x, p: vec![(-p_max, p_max); space.dim()], t: t_span }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub safety: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points_per_axis: 9, safety: 1.1 }
    }
}

/// Heuristic (grid-sampled) bounded-Hamiltonian constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessCertificate {
    pub region: Region,
    pub b1_raw: f64,
    pub b2_raw: f64,
    /// `b1_raw * safety`.
    pub b1: f64,
    /// `b2_raw / safety`.
    pub b2: f64,
    pub safety: f64,
    pub points_per_axis: usize,
    pub samples: usize,
    pub heuristic: bool,
}

fn axis_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Full phase-space Hessian of `H` in `(x, p)` ordering.
pub fn phase_hessian(ham: &dyn Hamiltonian, x: &Vector, p: &Vector, t: f64) -> Mat {
    let d = x.len();
    let mut m = Mat::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&ham.hess_xx(x, p, t));
    let xp = ham.hess_xp(x, p, t);
    m.view_mut((0, d), (d, d)).copy_from(&xp);
    m.view_mut((d, 0), (d, d)).copy_from(&xp.transpose());
    m.view_mut((d, d), (d, d)).copy_from(&ham.hess_pp(x, p, t));
    m
}

/// Samples the region on a tensor grid and records derivative norms up to
/// third order (third derivatives from central differences of Hessians).
pub fn certify_bounded(
    ham: &dyn Hamiltonian,
    region: &Region,
    grid: &GridSpec,
) -> Result<BoundednessCertificate> {
    let d = ham.dim();
    if region.x.len() != d || region.p.len() != d {
        return Err(Error::invalid("region dimension does not match the system"));
    }
    if !(grid.safety >= 1.0) || grid.points_per_axis == 0 {
        return Err(Error::invalid("grid needs >= 1 point per axis and safety >= 1"));
    }
    let n = grid.points_per_axis;
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for &(a, b) in region.x.iter().chain(region.p.iter()) {
        axes.push(axis_points(a, b, n));
    }
    let time_dep = !ham.time_dependence().is_autonomous();
    let ts = if time_dep { axis_points(region.t.0, region.t.1, n) } else { vec![region.t.0] };
    axes.push(ts);

    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut b1: f64 = 0.0;
    let mut b2 = f64::INFINITY;
    let mut idx = vec![0usize; axes.len()];
    let step = 1e-4;
    for count in 0..total {
        let mut rem = count;
        for (k, ax) in axes.iter().enumerate() {
            idx[k] = rem % ax.len();
            rem /= ax.len();
        }
        let x = Vector::from_fn(d, |i, _| axes[i][idx[i]]);
        let p = Vector::from_fn(d, |i, _| axes[d + i][idx[d + i]]);
        let t = axes[2 * d][idx[2 * d]];

        let pp = ham.hess_pp(&x, &p, t);
        let m = min_sym_eig(&pp);
        if !(m > 0.0) {
            return Err(Error::NotConvex { min_eigenvalue: m, index: count });
        }
        b2 = b2.min(m);

        let mut grad = ham.grad_x(&x, &p, t).as_slice().to_vec();
        grad.extend_from_slice(ham.grad_p(&x, &p, t).as_slice());
        let gnorm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
        let hess = phase_hessian(ham, &x, &p, t);
        b1 = b1
            .max(ham.value(&x, &p, t).abs())
            .max(gnorm)
            .max(linalg::spectral_norm(&hess));

        let dirs = 2 * d + usize::from(time_dep);
        for k in 0..dirs {
            let (mut xa, mut pa, mut ta) = (x.clone(), p.clone(), t);
            let (mut xb, mut pb, mut tb) = (x.clone(), p.clone(), t);
            if k < d {
                xa[k] += step;
                xb[k] -= step;
            } else if k < 2 * d {
                pa[k - d] += step;
                pb[k - d] -= step;
            } else {
                ta += step;
                tb -= step;
            }
            let third = (phase_hessian(ham, &xa, &pa, ta) - phase_hessian(ham, &xb, &pb, tb))
                / (2.0 * step);
            b1 = b1.max(linalg::spectral_norm(&third));
        }
    }
    Ok(BoundednessCertificate {
        region: region.clone(),
        b1_raw: b1,
        b2_raw: b2,
        b1: b1 * grid.safety,
        b2: b2 / grid.safety,
        safety: grid.safety,
        points_per_axis: grid.points_per_axis,
        samples: total,
        heuristic: true,
    })
}

/// Grid estimate of `‖L‖_{C²}` on `x`-box × `v`-box × clock interval.
pub fn lagrangian_c2_norm(
    lag: &dyn Lagrangian,
    x_box: &[(f64, f64)],
    v_box: &[(f64, f64)],
    t_span: (f64, f64),
    points_per_axis: usize,
) -> f64 {
    let d = lag.dim();
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for &(a, b) in x_box.iter().chain(v_box.iter()) {
        axes.push(axis_points(a, b, points_per_axis));
    }
    let ts = if lag.time_dependence().is_autonomous() {
        vec![t_span.0]
    } else {
        axis_points(t_span.0, t_span.1, points_per_axis)
    };
    axes.push(ts);
    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut best: f64 = 0.0;
    for count in 0..total {
        let mut rem = count;
        let mut idx = vec![0usize; axes.len()];
        for (k, ax) in axes.iter().enumerate() {
            idx[k] = rem % ax.len();
            rem /= ax.len();
        }
        let x = Vector::from_fn(d, |i, _| axes[i][idx[i]]);
        let v = Vector::from_fn(d, |i, _| axes[d + i][idx[d + i]]);
        let t = axes[2 * d][idx[2 * d]];
        let mut g = lag.grad_x(&x, &v, t).as_slice().to_vec();
        g.extend_from_slice(lag.grad_v(&x, &v, t).as_slice());
        let gn = libm::sqrt(g.iter().map(|a| a * a).sum::<f64>());
        let mut h = Mat::zeros(2 * d, 2 * d);
        h.view_mut((0, 0), (d, d)).copy_from(&lag.hess_xx(&x, &v, t));
        let xv = lag.hess_xv(&x, &v, t);
        h.view_mut((0, d), (d, d)).copy_from(&xv);
        h.view_mut((d, 0), (d, d)).copy_from(&xv.transpose());
        h.view_mut((d, d), (d, d)).copy_from(&lag.hess_vv(&x, &v, t));
        best = best.max(lag.value(&x, &v, t).abs()).max(gn).max(linalg::spectral_norm(&h));
    }
    best
}
