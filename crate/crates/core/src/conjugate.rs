//! Conjugate points, Green bundles and the reconstruction of Jacobi frames
//! from one known frame.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{FrameInit, JacobiFrame, OrbitSegment};
use crate::linalg;
use crate::model::{Hamiltonian, PhasePoint};
use crate::riccati::{self, solve_riccati, RANK_TOL};
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateTime {
    pub time: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateReport {
    pub window: (f64, f64),
    /// Times in `(a, b]` conjugate to the window start.
    pub conjugate_times: Vec<ConjugateTime>,
    pub disconjugate: bool,
    /// First conjugate time after the window end, searched up to `searched_until`.
    pub next_after_window: Option<f64>,
    pub searched_until: f64,
}

impl ConjugateReport {
    /// Measured disconjugacy margin: gap between window end and the next
    /// conjugate time, or a lower bound when none was found.
    pub fn margin(&self) -> f64 {
        match self.next_after_window {
            Some(t) => t - self.window.1,
            None => self.searched_until - self.window.1,
        }
    }
}

/// Conjugate times to `window.0` along the orbit through `orbit.point(window.0)`.
pub fn find_conjugate_points(orbit: &OrbitSegment, window: (f64, f64)) -> Result<ConjugateReport> {
    let (a, b) = window;
    if !(b > a) {
        return Err(Error::invalid("window must have positive length"));
    }
    let (oa, ob) = orbit.span();
    if a < oa - 1e-12 || b > ob + 1e-12 {
        return Err(Error::invalid("orbit does not cover the window"));
    }
    let d = orbit.dim();
    let extra = (b - a).max(1.0);
    let init = FrameInit::vertical(a, d);
    let frame = JacobiFrame::integrate(
        orbit.hamiltonian().clone(),
        &orbit.point(a),
        &init.h,
        &init.v,
        (a, b + extra),
        orbit.tol(),
        true,
    )?;
    let sol = solve_riccati(&frame)?;
    let start_tol = 1e-7;
    let mut times = Vec::new();
    let mut next = None;
    for (&t, &m) in sol.blowup_times.iter().zip(&sol.blowup_multiplicity) {
        if t <= a + start_tol {
            continue;
        }
        if t <= b {
            times.push(ConjugateTime { time: t, multiplicity: m });
        } else if next.is_none() {
            next = Some(t);
        }
    }
    Ok(ConjugateReport {
        window,
        disconjugate: times.is_empty(),
        conjugate_times: times,
        next_after_window: next,
        searched_until: b + extra,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenOptions {
    /// Initial horizon `T`.
    pub horizon: f64,
    /// Cauchy tolerance on `‖S_T − S_{T/2}‖ + ‖U_T − U_{T/2}‖`.
    pub tol: f64,
    /// Largest horizon tried by doubling.
    pub cap: f64,
    /// Integration tolerance.
    pub integ_tol: f64,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions { horizon: 20.0, tol: 1e-8, cap: 160.0, integ_tol: crate::flow::DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonStep {
    pub horizon: f64,
    pub s: Mat,
    pub u: Mat,
    /// Cauchy gap to the previous (half) horizon; `None` for the first entry.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenBundles {
    pub at: PhasePoint,
    pub s_limit: Mat,
    pub u_limit: Mat,
    pub t_used: f64,
    pub convergence_gap: f64,
    pub converged: bool,
    pub history: Vec<HorizonStep>,
}

impl GreenBundles {
    /// Basis `[I; S]` of the stable Green bundle.
    pub fn stable_basis(&self) -> Mat {
        graph_basis(&self.s_limit)
    }

    /// Basis `[I; U]` of the unstable Green bundle.
    pub fn unstable_basis(&self) -> Mat {
        graph_basis(&self.u_limit)
    }
}

/// `[I; S]`.
pub fn graph_basis(s: &Mat) -> Mat {
    let d = s.nrows();
    let mut m = Mat::zeros(2 * d, d);
    m.rows_mut(0, d).copy_from(&Mat::identity(d, d));
    m.rows_mut(d, d).copy_from(s);
    m
}

/// Slack on `U_T − S_T ≥ 0`, relative to the slope scale.
const ORDER_TOL: f64 = 1e-8;

/// Finite-horizon slopes `(S_T, U_T)` at `at`.
///
/// `S_T` comes from a vertical frame at `ψ_T(at)` integrated backward;
/// `U_T` from a vertical frame at `ψ_{−T}(at)` integrated forward.
pub fn green_slopes_at(ham: &Arc<dyn Hamiltonian>, at: &PhasePoint, horizon: f64, tol: f64) -> Result<(Mat, Mat)> {
    let d = ham.dim();
    let c = at.clock;
    let orbit = crate::flow::integrate_orbit(ham.clone(), at, (c - horizon, c + horizon), tol)?;
    let vert = FrameInit::vertical(0.0, d);

    // Disconjugacy on the whole window is checked through the two halves
    // and the order `S ≤ U` at `c`, which is positivity of the index form on
    // broken fields. Continuing one frame across the window would need to
    // resolve `e^{-2T}` relative differences along orbits asymptotic to a
    // saddle.
    let fwd = JacobiFrame::integrate(ham.clone(), &orbit.point(c - horizon), &vert.h, &vert.v, (c - horizon, c), tol, true)?;
    if let Some(&t) = solve_riccati(&fwd)?.blowup_times.iter().find(|&&t| t > c - horizon + 1e-7) {
        return Err(Error::DisconjugacyViolation { time: t });
    }
    let back = JacobiFrame::integrate(ham.clone(), &orbit.point(c + horizon), &vert.h, &vert.v, (c, c + horizon), tol, true)?;
    if let Some(&t) = solve_riccati(&back)?.blowup_times.iter().find(|&&t| t < c + horizon - 1e-7) {
        return Err(Error::DisconjugacyViolation { time: t });
    }
    let slope = |f: &JacobiFrame| -> Result<Mat> {
        if riccati::verticality(f, c) < RANK_TOL {
            return Err(Error::DisconjugacyViolation { time: c });
        }
        let hinv = linalg::inverse(&f.h(c)).ok_or(Error::DisconjugacyViolation { time: c })?;
        Ok(linalg::symmetrize(&(f.v(c) * hinv)))
    };
    let (s, u) = (slope(&back)?, slope(&fwd)?);
    let scale = 1.0 + linalg::max_abs(&s).max(linalg::max_abs(&u));
    if linalg::min_sym_eig(&(&u - &s)) < -ORDER_TOL * scale {
        return Err(Error::DisconjugacyViolation { time: c });
    }
    Ok((s, u))
}

/// Green bundles at `at` by horizon doubling until the Cauchy gap drops below
/// `opts.tol` or the cap is reached (then reported as not converged).
pub fn green_bundles(ham: &Arc<dyn Hamiltonian>, at: &PhasePoint, opts: &GreenOptions) -> Result<GreenBundles> {
    if !(opts.horizon > 0.0 && opts.tol > 0.0 && opts.integ_tol > 0.0) {
        return Err(Error::invalid("horizon and tolerances must be positive"));
    }
    let mut t = 0.5 * opts.horizon;
    let (s0, u0) = green_slopes_at(ham, at, t, opts.integ_tol)?;
    let mut history = alloc::vec![HorizonStep { horizon: t, s: s0, u: u0, gap: None }];
    loop {
        t *= 2.0;
        let (s, u) = green_slopes_at(ham, at, t, opts.integ_tol)?;
        let prev = history.last().expect("nonempty history");
        let gap = linalg::spectral_norm(&(&s - &prev.s)) + linalg::spectral_norm(&(&u - &prev.u));
        history.push(HorizonStep { horizon: t, s, u, gap: Some(gap) });
        let converged = gap <= opts.tol;
        if converged || 2.0 * t > opts.cap.max(opts.horizon) {
            let last = history.last().expect("nonempty history");
            return Ok(GreenBundles {
                at: at.clone(),
                s_limit: last.s.clone(),
                u_limit: last.u.clone(),
                t_used: t,
                convergence_gap: gap,
                converged,
                history,
            });
        }
    }
}

/// Lower limit of the reconstruction integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralBase {
    At(f64),
    /// `+∞`, truncated at `cap`.
    Infinity { cap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedFrame {
    pub times: Vec<f64>,
    pub h: Vec<Mat>,
    pub v: Vec<Mat>,
    /// Estimated neglected tail when the base is at infinity.
    pub tail_bound: Option<f64>,
    /// `KᵀD` symmetric, i.e. the new frame spans a Lagrangian subspace.
    pub lagrangian: bool,
}

impl ReconstructedFrame {
    /// Node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            0
        } else if i >= self.times.len() {
            self.times.len() - 1
        } else if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }
}

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Rebuilds the frame `H₂ = H₁[D + ∫_{t0}^t H₁⁻¹ H_pp H₁⁻ᵀ ds · K]`,
/// `V₂ = H₁⁻ᵀ[K + V₁ᵀ H₂]` on `interval`, sampled on the base frame's grid.
pub fn jform_reconstruct(
    frame1: &JacobiFrame,
    k: &Mat,
    d: &Mat,
    base: IntegralBase,
    interval: (f64, f64),
) -> Result<ReconstructedFrame> {
    let n = frame1.dim();
    if frame1.columns() != n || k.shape() != (n, n) || d.shape() != (n, n) {
        return Err(Error::invalid("reconstruction needs square d x d data"));
    }
    let (a, b) = interval;
    let hi = match base {
        IntegralBase::At(t0) => b.max(t0),
        IntegralBase::Infinity { cap } => cap.max(b),
    };
    let lo = match base {
        IntegralBase::At(t0) => a.min(t0),
        IntegralBase::Infinity { .. } => a,
    };
    let (fa, fb) = frame1.span();
    if lo < fa - 1e-12 || hi > fb + 1e-12 {
        return Err(Error::invalid("base frame does not cover the reconstruction interval"));
    }
    let ham = frame1.hamiltonian().clone();
    let integrand = |t: f64| -> Result<Mat> {
        if riccati::verticality(frame1, t) < RANK_TOL {
            return Err(Error::ReconstructionDomain { t });
        }
        let h1 = frame1.h(t);
        let hinv = linalg::inverse(&h1).ok_or(Error::ReconstructionDomain { t })?;
        let pt = frame1.point(t);
        Ok(&hinv * ham.hess_pp(&pt.x, &pt.p, t) * hinv.transpose())
    };
    // Nodes: base grid refined 4x, plus the integral base and interval ends.
    let mut nodes: Vec<f64> = riccati::sample_times(frame1, 4).into_iter().filter(|&t| t >= lo && t <= hi).collect();
    nodes.push(lo);
    nodes.push(hi);
    nodes.push(a);
    nodes.push(b);
    if let IntegralBase::At(t0) = base {
        nodes.push(t0);
    }
    nodes.sort_by(|x, y| x.total_cmp(y));
    nodes.dedup_by(|x, y| (*x - *y).abs() < 1e-13);

    let gl5 = |s0: f64, s1: f64| -> Result<Mat> {
        let (m, r) = (0.5 * (s0 + s1), 0.5 * (s1 - s0));
        let mut acc = Mat::zeros(n, n);
        for &(x, w) in GL5.iter() {
            acc += integrand(m + r * x)? * (w * r);
        }
        Ok(acc)
    };
    // Halve each piece until the one- and two-panel rules agree.
    let piece = |s0: f64, s1: f64| -> Result<Mat> {
        let mut stack = alloc::vec![(s0, s1, gl5(s0, s1)?, 0u32)];
        let mut acc = Mat::zeros(n, n);
        while let Some((a0, b0, whole, depth)) = stack.pop() {
            let mid = 0.5 * (a0 + b0);
            let (left, right) = (gl5(a0, mid)?, gl5(mid, b0)?);
            let split = &left + &right;
            let err = linalg::max_abs(&(&split - &whole));
            if err <= 1e-13 * (1.0 + linalg::max_abs(&split)) || depth >= 20 {
                acc += split;
            } else {
                stack.push((a0, mid, left, depth + 1));
                stack.push((mid, b0, right, depth + 1));
            }
        }
        Ok(acc)
    };
    // Cumulative integral from the anchor node.
    let anchor = match base {
        IntegralBase::At(t0) => nodes.iter().position(|&t| (t - t0).abs() < 1e-13).unwrap_or(0),
        IntegralBase::Infinity { .. } => nodes.len() - 1,
    };
    let mut cum = alloc::vec![Mat::zeros(n, n); nodes.len()];
    for i in (anchor + 1)..nodes.len() {
        cum[i] = &cum[i - 1] + piece(nodes[i - 1], nodes[i])?;
    }
    for i in (0..anchor).rev() {
        cum[i] = &cum[i + 1] - piece(nodes[i], nodes[i + 1])?;
    }
    let tail_bound = match base {
        IntegralBase::At(_) => None,
        IntegralBase::Infinity { cap } => {
            let delta = 0.5;
            let f1 = linalg::spectral_norm(&integrand(cap)?);
            let f0 = linalg::spectral_norm(&integrand(cap - delta)?);
            let rate = -libm::log(f1 / f0) / delta;
            Some(if rate > 0.0 { f1 / rate } else { f64::INFINITY })
        }
    };
    let mut out = ReconstructedFrame { times: Vec::new(), h: Vec::new(), v: Vec::new(), tail_bound, lagrangian: false };
    for (i, &t) in nodes.iter().enumerate() {
        if t < a - 1e-13 || t > b + 1e-13 {
            continue;
        }
        let h1 = frame1.h(t);
        let h2 = &h1 * (d + &cum[i] * k);
        let h1inv_t = linalg::inverse(&h1).ok_or(Error::ReconstructionDomain { t })?.transpose();
        let v2 = h1inv_t * (k + frame1.v(t).transpose() * &h2);
        out.times.push(t);
        out.h.push(h2);
        out.v.push(v2);
    }
    let kd = k.transpose() * d;
    out.lagrangian = linalg::max_abs(&(&kd - kd.transpose())) <= 1e-12 * (1.0 + linalg::max_abs(&kd));
    Ok(out)
}
