//! Hamiltonian flow, Jacobi frames and monodromy.
//!
//! Orbits and frames share one augmented state `(x, p, H, V)`, integrated
//! together by [`crate::ode::integrate`]; a frame therefore lives on the same
//! step grid as its base orbit.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Hamiltonian, PhasePoint};
use crate::ode::{self, DenseSolution, OdeSystem, Options, StepAction};
use crate::{Mat, Vector};

/// Default local tolerance for orbit and frame integration.
pub const DEFAULT_TOL: f64 = 1e-11;
/// `|p|` beyond this aborts the integration.
pub const ESCAPE_BOUND: f64 = 1e8;
/// Phase-space gap accepted when checking that an orbit closes.
pub const CLOSURE_TOL: f64 = 1e-8;

struct Augmented<'a> {
    ham: &'a dyn Hamiltonian,
    d: usize,
    k: usize,
}

impl OdeSystem for Augmented<'_> {
    fn dim(&self) -> usize {
        2 * self.d + 2 * self.d * self.k
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.d;
        let x = Vector::from_column_slice(&y[..d]);
        let p = Vector::from_column_slice(&y[d..2 * d]);
        let hp = self.ham.grad_p(&x, &p, t);
        let hx = self.ham.grad_x(&x, &p, t);
        for i in 0..d {
            dy[i] = hp[i];
            dy[d + i] = -hx[i];
        }
        if self.k == 0 {
            return;
        }
        let k = self.k;
        let hm = Mat::from_column_slice(d, k, &y[2 * d..2 * d + d * k]);
        let vm = Mat::from_column_slice(d, k, &y[2 * d + d * k..]);
        let hpp = self.ham.hess_pp(&x, &p, t);
        let hxp = self.ham.hess_xp(&x, &p, t);
        let hxx = self.ham.hess_xx(&x, &p, t);
        let dh = hxp.transpose() * &hm + &hpp * &vm;
        let dv = -(&hxx * &hm) - &hxp * &vm;
        dy[2 * d..2 * d + d * k].copy_from_slice(dh.as_slice());
        dy[2 * d + d * k..].copy_from_slice(dv.as_slice());
    }
}

fn escape_hook(d: usize) -> impl FnMut(f64, &mut [f64]) -> StepAction {
    move |_t, y: &mut [f64]| {
        if y.iter().any(|v| !v.is_finite()) {
            return StepAction::Abort("non-finite state");
        }
        if y[d..2 * d].iter().any(|v| v.abs() > ESCAPE_BOUND) {
            return StepAction::Abort("momentum exceeded escape bound");
        }
        StepAction::Continue
    }
}

fn integrate_both_ways<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    span: (f64, f64),
    opts: &Options,
    mut hook: impl FnMut(f64, &mut [f64]) -> StepAction,
) -> Result<DenseSolution> {
    let (a, b) = span;
    if !(a <= t0 && t0 <= b) {
        return Err(Error::invalid("start time lies outside the requested span"));
    }
    let back = ode::integrate(sys, t0, y0, a, opts, &mut hook)?;
    let fwd = ode::integrate(sys, t0, y0, b, opts, &mut hook)?;
    Ok(if a < t0 { back.concat(fwd) } else { fwd })
}

/// Phase-space vector field `X = (H_p, −H_x)` at a point.
pub fn vector_field(ham: &dyn Hamiltonian, pt: &PhasePoint) -> Vector {
    let d = pt.dim();
    let hp = ham.grad_p(&pt.x, &pt.p, pt.clock);
    let hx = ham.grad_x(&pt.x, &pt.p, pt.clock);
    Vector::from_fn(2 * d, |i, _| if i < d { hp[i] } else { -hx[i - d] })
}

/// Densely sampled trajectory of the Hamiltonian flow.
#[derive(Clone)]
pub struct OrbitSegment {
    ham: Arc<dyn Hamiltonian>,
    sol: DenseSolution,
    d: usize,
    tol: f64,
    /// `max |H(θ(t)) − H(θ(t0))|` over the step grid; `None` for time-dependent systems.
    pub energy_drift: Option<f64>,
}

pub fn integrate_orbit(
    ham: Arc<dyn Hamiltonian>,
    start: &PhasePoint,
    t_span: (f64, f64),
    tol: f64,
) -> Result<OrbitSegment> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let d = ham.dim();
    if start.dim() != d {
        return Err(Error::invalid("start point has wrong dimension"));
    }
    let sys = Augmented { ham: ham.as_ref(), d, k: 0 };
    let mut y0: Vec<f64> = start.x.iter().copied().collect();
    y0.extend(start.p.iter().copied());
    let sol = integrate_both_ways(&sys, start.clock, &y0, t_span, &Options::with_tol(tol), escape_hook(d))?;
    let mut seg = OrbitSegment { ham, sol, d, tol, energy_drift: None };
    if seg.ham.time_dependence().is_autonomous() {
        let e0 = seg.energy(start.clock);
        let drift = seg
            .sol
            .grid()
            .iter()
            .map(|&t| (seg.energy(t) - e0).abs())
            .fold(0.0, f64::max);
        seg.energy_drift = Some(drift);
    }
    Ok(seg)
}

impl OrbitSegment {
    pub fn hamiltonian(&self) -> &Arc<dyn Hamiltonian> {
        &self.ham
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn span(&self) -> (f64, f64) {
        self.sol.span()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.sol.grid()
    }

    /// Point at time `t` with unwrapped coordinates.
    pub fn point(&self, t: f64) -> PhasePoint {
        let y = self.sol.eval(t);
        PhasePoint {
            x: Vector::from_column_slice(&y[..self.d]),
            p: Vector::from_column_slice(&y[self.d..2 * self.d]),
            clock: t,
        }
    }

    /// Point at time `t` with periodic coordinates reduced to `[0, 2π)`.
    pub fn point_reduced(&self, t: f64) -> PhasePoint {
        self.point(t).reduced(self.ham.space())
    }

    pub fn energy(&self, t: f64) -> f64 {
        let pt = self.point(t);
        self.ham.value(&pt.x, &pt.p, t)
    }

    /// Projected velocity `γ̇ = H_p`.
    pub fn velocity(&self, t: f64) -> Vector {
        let pt = self.point(t);
        self.ham.grad_p(&pt.x, &pt.p, t)
    }

    pub fn vector_field(&self, t: f64) -> Vector {
        vector_field(self.ham.as_ref(), &self.point(t))
    }
}

/// Initial data of a Jacobi frame: `(H0, V0)` placed at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameInit {
    pub t: f64,
    pub h: Mat,
    pub v: Mat,
}

impl FrameInit {
    pub fn vertical(t: f64, d: usize) -> Self {
        FrameInit { t, h: Mat::zeros(d, d), v: Mat::identity(d, d) }
    }

    pub fn horizontal(t: f64, d: usize) -> Self {
        FrameInit { t, h: Mat::identity(d, d), v: Mat::zeros(d, d) }
    }

    /// Full fundamental matrix: columns `(e_i, 0)` then `(0, e_i)`.
    pub fn full(t: f64, d: usize) -> Self {
        let mut h = Mat::zeros(d, 2 * d);
        let mut v = Mat::zeros(d, 2 * d);
        for i in 0..d {
            h[(i, i)] = 1.0;
            v[(i, d + i)] = 1.0;
        }
        FrameInit { t, h, v }
    }

    pub fn from_stacked(t: f64, m: &Mat) -> Self {
        let d = m.nrows() / 2;
        FrameInit { t, h: m.rows(0, d).into_owned(), v: m.rows(d, d).into_owned() }
    }
}

/// Matrix solution `(H(t), V(t))` of the Jacobi equations along an orbit.
#[derive(Clone)]
pub struct JacobiFrame {
    ham: Arc<dyn Hamiltonian>,
    sol: DenseSolution,
    d: usize,
    k: usize,
    pub initial: FrameInit,
    /// When set, columns were re-orthonormalized at every step: the span is
    /// exact, the individual columns (and Wronskians) are not.
    pub normalized: bool,
}

impl JacobiFrame {
    /// Co-integrates orbit and frame from `start` (at `start.clock`) over `span`.
    pub fn integrate(
        ham: Arc<dyn Hamiltonian>,
        start: &PhasePoint,
        h0: &Mat,
        v0: &Mat,
        span: (f64, f64),
        tol: f64,
        normalize: bool,
    ) -> Result<JacobiFrame> {
        let d = ham.dim();
        let k = h0.ncols();
        if h0.nrows() != d || v0.nrows() != d || v0.ncols() != k || k == 0 {
            return Err(Error::invalid("frame shape does not match the system"));
        }
        let mut stacked = Mat::zeros(2 * d, k);
        stacked.rows_mut(0, d).copy_from(h0);
        stacked.rows_mut(d, d).copy_from(v0);
        if linalg::singular_values(&stacked).len() < k || linalg::min_singular(&stacked) <= 1e-14 * linalg::spectral_norm(&stacked) {
            return Err(Error::invalid("initial frame must have full column rank"));
        }
        let sys = Augmented { ham: ham.as_ref(), d, k };
        let mut y0: Vec<f64> = start.x.iter().copied().collect();
        y0.extend(start.p.iter().copied());
        y0.extend(h0.iter().copied());
        y0.extend(v0.iter().copied());
        let mut esc = escape_hook(d);
        let hook = |t: f64, y: &mut [f64]| {
            let r = esc(t, y);
            if !matches!(r, StepAction::Continue) || !normalize {
                return r;
            }
            let hm = Mat::from_column_slice(d, k, &y[2 * d..2 * d + d * k]);
            let vm = Mat::from_column_slice(d, k, &y[2 * d + d * k..]);
            let mut st = Mat::zeros(2 * d, k);
            st.rows_mut(0, d).copy_from(&hm);
            st.rows_mut(d, d).copy_from(&vm);
            let (q, _) = linalg::qr_positive(&st);
            let qh = q.rows(0, d).into_owned();
            let qv = q.rows(d, d).into_owned();
            y[2 * d..2 * d + d * k].copy_from_slice(qh.as_slice());
            y[2 * d + d * k..].copy_from_slice(qv.as_slice());
            StepAction::Modified
        };
        let sol = integrate_both_ways(&sys, start.clock, &y0, span, &Options::with_tol(tol), hook)?;
        Ok(JacobiFrame {
            ham,
            sol,
            d,
            k,
            initial: FrameInit { t: start.clock, h: h0.clone(), v: v0.clone() },
            normalized: normalize,
        })
    }

    pub fn hamiltonian(&self) -> &Arc<dyn Hamiltonian> {
        &self.ham
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn columns(&self) -> usize {
        self.k
    }

    pub fn span(&self) -> (f64, f64) {
        self.sol.span()
    }

    pub fn grid(&self) -> Vec<f64> {
        self.sol.grid()
    }

    fn state(&self, t: f64) -> Vec<f64> {
        self.sol.eval(t)
    }

    pub fn point(&self, t: f64) -> PhasePoint {
        let y = self.state(t);
        PhasePoint {
            x: Vector::from_column_slice(&y[..self.d]),
            p: Vector::from_column_slice(&y[self.d..2 * self.d]),
            clock: t,
        }
    }

    pub fn h(&self, t: f64) -> Mat {
        let y = self.state(t);
        let (d, k) = (self.d, self.k);
        Mat::from_column_slice(d, k, &y[2 * d..2 * d + d * k])
    }

    pub fn v(&self, t: f64) -> Mat {
        let y = self.state(t);
        let (d, k) = (self.d, self.k);
        Mat::from_column_slice(d, k, &y[2 * d + d * k..])
    }

    /// `[H; V]` stacked into a `2d × k` matrix.
    pub fn stacked(&self, t: f64) -> Mat {
        let y = self.state(t);
        let (d, k) = (self.d, self.k);
        let mut m = Mat::zeros(2 * d, k);
        m.rows_mut(0, d).copy_from(&Mat::from_column_slice(d, k, &y[2 * d..2 * d + d * k]));
        m.rows_mut(d, d).copy_from(&Mat::from_column_slice(d, k, &y[2 * d + d * k..]));
        m
    }

    /// Derivative of the interpolated `(H, V)` at `t`.
    pub fn interpolant_derivative(&self, t: f64) -> (Mat, Mat) {
        let y = self.sol.eval_derivative(t);
        let (d, k) = (self.d, self.k);
        (
            Mat::from_column_slice(d, k, &y[2 * d..2 * d + d * k]),
            Mat::from_column_slice(d, k, &y[2 * d + d * k..]),
        )
    }

    /// Right-hand side of the Jacobi equations at `t`, as `(Ḣ, V̇)`.
    pub fn jacobi_rhs(&self, t: f64) -> (Mat, Mat) {
        let pt = self.point(t);
        let (h, v) = (self.h(t), self.v(t));
        let hpp = self.ham.hess_pp(&pt.x, &pt.p, t);
        let hxp = self.ham.hess_xp(&pt.x, &pt.p, t);
        let hxx = self.ham.hess_xx(&pt.x, &pt.p, t);
        (hxp.transpose() * &h + &hpp * &v, -(&hxx * &h) - &hxp * &v)
    }
}

/// Frame along `orbit` with the given initial data, covering the orbit span.
pub fn integrate_jacobi_frame(orbit: &OrbitSegment, initial: &FrameInit, tol: f64) -> Result<JacobiFrame> {
    let start = orbit.point(initial.t);
    JacobiFrame::integrate(orbit.ham.clone(), &start, &initial.h, &initial.v, orbit.span(), tol, false)
}

/// Wronskian `K = H₁ᵀV₂ − V₁ᵀH₂` of two frames at time `t`.
pub fn wronskian(a: &JacobiFrame, b: &JacobiFrame, t: f64) -> Mat {
    a.h(t).transpose() * b.v(t) - a.v(t).transpose() * b.h(t)
}

/// `H`-component at `t_to` of the frame started vertical at `t_from`.
pub fn vertical_frame(orbit: &OrbitSegment, t_from: f64, t_to: f64) -> Result<Mat> {
    let d = orbit.dim();
    let start = orbit.point(t_from);
    let span = (t_from.min(t_to), t_from.max(t_to));
    let f = JacobiFrame::integrate(
        orbit.ham.clone(),
        &start,
        &Mat::zeros(d, d),
        &Mat::identity(d, d),
        span,
        orbit.tol,
        false,
    )?;
    Ok(f.h(t_to))
}

/// Linearized flow `dψ_t` from `start.clock` to `start.clock + t` in
/// `(h, v)` coordinates (`2d × 2d`).
pub fn flow_derivative(ham: &Arc<dyn Hamiltonian>, start: &PhasePoint, t: f64, tol: f64) -> Result<Mat> {
    let d = ham.dim();
    let init = FrameInit::full(start.clock, d);
    let t1 = start.clock + t;
    let span = (start.clock.min(t1), start.clock.max(t1));
    let f = JacobiFrame::integrate(ham.clone(), start, &init.h, &init.v, span, tol, false)?;
    Ok(f.stacked(t1))
}

/// Full linearization over one period after checking that the orbit closes.
pub fn monodromy(ham: &Arc<dyn Hamiltonian>, start: &PhasePoint, period: f64, tol: f64) -> Result<Mat> {
    if !(period > 0.0) {
        return Err(Error::invalid("period must be positive"));
    }
    let d = ham.dim();
    let init = FrameInit::full(start.clock, d);
    let t1 = start.clock + period;
    let f = JacobiFrame::integrate(ham.clone(), start, &init.h, &init.v, (start.clock, t1), tol, false)?;
    let end = f.point(t1);
    let dx = ham.space().distance(&end.x, &start.x);
    let dp = (&end.p - &start.p).norm();
    let gap = libm::sqrt(dx * dx + dp * dp);
    if gap > CLOSURE_TOL {
        return Err(Error::NotPeriodic { gap });
    }
    Ok(f.stacked(t1))
}

/// Canonical form in `(h, v)` coordinates: `ω(ξ₁, ξ₂) = ξ₁ᵀ J ξ₂ = v₁·h₂ − v₂·h₁`.
pub fn symplectic_matrix(d: usize) -> Mat {
    let mut j = Mat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(d + i, i)] = 1.0;
        j[(i, d + i)] = -1.0;
    }
    j
}

pub fn omega(a: &Vector, b: &Vector) -> f64 {
    let d = a.len() / 2;
    (0..d).map(|i| a[d + i] * b[i] - b[d + i] * a[i]).sum()
}

/// Horizontal and vertical subspaces at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSplitting {
    pub at: PhasePoint,
    pub horizontal: Mat,
    pub vertical: Mat,
}

impl TangentSplitting {
    pub fn new(at: PhasePoint) -> Self {
        let d = at.dim();
        let mut horizontal = Mat::zeros(2 * d, d);
        let mut vertical = Mat::zeros(2 * d, d);
        for i in 0..d {
            horizontal[(i, i)] = 1.0;
            vertical[(d + i, i)] = 1.0;
        }
        TangentSplitting { at, horizontal, vertical }
    }
}

/// `max |ω(b_i, b_j)|` over the columns of `basis`; zero for Lagrangian spans.
pub fn lagrangian_defect(basis: &Mat) -> f64 {
    let d = basis.nrows() / 2;
    let g = basis.transpose() * symplectic_matrix(d) * basis;
    linalg::max_abs(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn splitting_is_lagrangian() {
        let s = TangentSplitting::new(PhasePoint::new(&[0.0, 1.0], &[0.0, 0.0], 0.0));
        assert_eq!(lagrangian_defect(&s.horizontal), 0.0);
        assert_eq!(lagrangian_defect(&s.vertical), 0.0);
        let both = Mat::from_fn(4, 4, |i, j| if j < 2 { s.horizontal[(i, j)] } else { s.vertical[(i, j - 2)] });
        assert!(lagrangian_defect(&both) > 0.5);
    }

    #[test]
    fn free_particle_wraps() {
        let e = catalog::get("free_particle(1)").unwrap();
        let o = integrate_orbit(e.hamiltonian(), &PhasePoint::new(&[0.0], &[1.0], 0.0), (0.0, 2.0 * core::f64::consts::PI), 1e-11).unwrap();
        let end = o.point_reduced(2.0 * core::f64::consts::PI);
        let x = end.x[0];
        assert!(x < 1e-9 || (2.0 * core::f64::consts::PI - x) < 1e-9);
        assert!((end.p[0] - 1.0).abs() < 1e-12);
    }
}
