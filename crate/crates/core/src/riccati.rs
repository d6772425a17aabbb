//! Riccati slopes `S = V H⁻¹` of Jacobi frames, the coth comparison function
//! and the uniform slope bound for bounded Hamiltonians.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{lagrangian_defect, JacobiFrame};
use crate::linalg::{self, singular_values};
use crate::model::{BoundednessCertificate, Hamiltonian};
use crate::{Mat, Vector};

/// Relative smallest singular value of `H` below which the frame counts as vertical.
pub const RANK_TOL: f64 = 1e-9;
/// Singular values of `H/‖[H;V]‖` below this count toward a blowup's multiplicity.
pub const MULTIPLICITY_TOL: f64 = 1e-6;
/// Blowup times are located to this accuracy.
pub const LOCATE_TOL: f64 = 1e-10;

/// `σ_min(H) / ‖[H; V]‖`, a scale-free measure of distance to the vertical.
pub fn verticality(frame: &JacobiFrame, t: f64) -> f64 {
    let st = frame.stacked(t);
    let nrm = linalg::spectral_norm(&st);
    if nrm == 0.0 {
        return 0.0;
    }
    linalg::min_singular(&frame.h(t)) / nrm
}

fn det_h(frame: &JacobiFrame, t: f64) -> f64 {
    let st = frame.stacked(t);
    let nrm = linalg::spectral_norm(&st).max(f64::MIN_POSITIVE);
    linalg::determinant(&(frame.h(t) / nrm))
}

#[derive(Clone)]
pub struct RiccatiSolution {
    pub frame: JacobiFrame,
    /// Times where `H(t)` is singular, ascending.
    pub blowup_times: Vec<f64>,
    /// Dimension of `ker H(t)` at each blowup.
    pub blowup_multiplicity: Vec<usize>,
    /// Maximal open intervals on which `S` is defined.
    pub intervals: Vec<(f64, f64)>,
}

/// Locates the blowups of `frame` on its span and splits the span there.
pub fn solve_riccati(frame: &JacobiFrame) -> Result<RiccatiSolution> {
    let d = frame.dim();
    if frame.columns() != d {
        return Err(Error::invalid("Riccati slopes need a square frame"));
    }
    let init = {
        let mut m = Mat::zeros(2 * d, d);
        m.rows_mut(0, d).copy_from(&frame.initial.h);
        m.rows_mut(d, d).copy_from(&frame.initial.v);
        m
    };
    if lagrangian_defect(&init) > 1e-10 * { let s = linalg::spectral_norm(&init); s * s } {
        return Err(Error::invalid("initial frame does not span a Lagrangian subspace"));
    }
    let (a, b) = frame.span();
    let times = sample_times(frame, 8);
    let g: Vec<f64> = times.iter().map(|&t| verticality(frame, t)).collect();
    let dets: Vec<f64> = times.iter().map(|&t| det_h(frame, t)).collect();

    let mut found: Vec<f64> = Vec::new();
    let n = times.len();
    for i in 0..n {
        if g[i] == 0.0 {
            found.push(times[i]);
        }
    }
    for i in 0..n.saturating_sub(1) {
        let (t0, t1) = (times[i], times[i + 1]);
        if dets[i] != 0.0 && dets[i + 1] != 0.0 && dets[i].signum() != dets[i + 1].signum() {
            found.push(bisect_sign(frame, t0, t1, dets[i]));
        }
    }
    // Even-multiplicity touches: local minima of the verticality measure.
    for i in 0..n {
        let left = if i > 0 { g[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { g[i + 1] } else { f64::INFINITY };
        if g[i] <= left && g[i] <= right && g[i] < 1e-2 {
            let lo = if i > 0 { times[i - 1] } else { times[i] };
            let hi = if i + 1 < n { times[i + 1] } else { times[i] };
            let (tm, gm) = golden_min(|t| verticality(frame, t), lo, hi);
            if gm < RANK_TOL.max(1e3 * LOCATE_TOL) {
                found.push(tm);
            }
        }
    }
    found.sort_by(|x, y| x.total_cmp(y));
    let mut blowups: Vec<f64> = Vec::new();
    for t in found {
        if blowups.last().map_or(true, |&l| (t - l).abs() > 1e3 * LOCATE_TOL) {
            blowups.push(t);
        } else if let Some(l) = blowups.last_mut() {
            // Keep the better-localized candidate.
            if verticality(frame, t) < verticality(frame, *l) {
                *l = t;
            }
        }
    }
    let multiplicity = blowups
        .iter()
        .map(|&t| {
            let st = frame.stacked(t);
            let nrm = linalg::spectral_norm(&st);
            singular_values(&frame.h(t))
                .iter()
                .filter(|&&s| s < MULTIPLICITY_TOL * nrm)
                .count()
                .max(1)
        })
        .collect();
    let mut cuts = alloc::vec![a];
    cuts.extend(blowups.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let intervals = cuts.windows(2).map(|w| (w[0], w[1])).filter(|w| w.1 > w.0).collect();
    Ok(RiccatiSolution { frame: frame.clone(), blowup_times: blowups, blowup_multiplicity: multiplicity, intervals })
}

/// Step grid refined by `sub` interior points per step.
pub(crate) fn sample_times(frame: &JacobiFrame, sub: usize) -> Vec<f64> {
    let grid = frame.grid();
    let mut out = Vec::with_capacity(grid.len() * (sub + 1));
    for w in grid.windows(2) {
        for j in 0..sub {
            out.push(w[0] + (w[1] - w[0]) * j as f64 / sub as f64);
        }
    }
    if let Some(&l) = grid.last() {
        out.push(l);
    }
    out
}

fn bisect_sign(frame: &JacobiFrame, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let s_lo = f_lo.signum();
    while hi - lo > LOCATE_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = det_h(frame, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > LOCATE_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let candidates = [(t, f(t)), (a, f(a)), (b, f(b))];
    candidates.into_iter().fold((t, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
}

impl RiccatiSolution {
    /// Interval of definition containing `t`, if any.
    pub fn interval_of(&self, t: f64) -> Option<(f64, f64)> {
        self.intervals.iter().copied().find(|&(a, b)| {
            let inside = t >= a && t <= b;
            let at_blowup = self.blowup_times.iter().any(|&c| (c - t).abs() <= 1e3 * LOCATE_TOL);
            inside && !at_blowup
        })
    }

    /// `S(t) = V(t) H(t)⁻¹`, or `None` at a blowup.
    pub fn s(&self, t: f64) -> Option<Mat> {
        self.interval_of(t)?;
        let h = self.frame.h(t);
        if verticality(&self.frame, t) < RANK_TOL {
            return None;
        }
        let hinv = linalg::inverse(&h)?;
        Some(linalg::symmetrize(&(self.frame.v(t) * hinv)))
    }

    /// Unsymmetrized slope, for checking symmetry.
    pub fn s_raw(&self, t: f64) -> Option<Mat> {
        self.interval_of(t)?;
        Some(self.frame.v(t) * linalg::inverse(&self.frame.h(t))?)
    }

    /// Residual `Ṡ + S H_pp S + S H_px + H_xp S + H_xx`, with `Ṡ` from the
    /// derivative of the interpolated frame.
    pub fn residual(&self, t: f64) -> Option<f64> {
        let s = self.s_raw(t)?;
        let h = self.frame.h(t);
        let hinv = linalg::inverse(&h)?;
        let (dh, dv) = self.frame.interpolant_derivative(t);
        let sdot = (dv - &s * dh) * hinv;
        let pt = self.frame.point(t);
        let ham = self.frame.hamiltonian();
        let hpp = ham.hess_pp(&pt.x, &pt.p, t);
        let hxp = ham.hess_xp(&pt.x, &pt.p, t);
        let hxx = ham.hess_xx(&pt.x, &pt.p, t);
        let r = sdot + &s * hpp * &s + &s * hxp.transpose() + &hxp * &s + hxx;
        Some(linalg::spectral_norm(&r))
    }
}

/// `w(t) = R coth(R t − d)`.
pub fn comparison_w(rate: f64, shift: f64, t: f64) -> Result<f64> {
    let z = rate * t - shift;
    if z.abs() < 1e-14 {
        return Err(Error::Pole { t: shift / rate });
    }
    Ok(rate / libm::tanh(z))
}

/// `ẇ(t) = −R² / sinh²(R t − d)`.
pub fn comparison_w_dot(rate: f64, shift: f64, t: f64) -> Result<f64> {
    let z = rate * t - shift;
    if z.abs() < 1e-14 {
        return Err(Error::Pole { t: shift / rate });
    }
    let s = libm::sinh(z);
    Ok(-rate * rate / (s * s))
}

/// Floor applied to the comparison rate when the curvature term vanishes.
pub const R_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    /// Worst case over all Hamiltonians with the given constants.
    Constants,
    /// `C` and `D` sampled on the certificate's grid.
    Grid,
}

/// Uniform bound `A` on Riccati slopes over trimmed windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiBound {
    pub b1: f64,
    pub b2: f64,
    /// `1/b2`.
    pub m: f64,
    pub r: f64,
    pub c_norm: f64,
    pub d_norm: f64,
    /// `M R coth R + ‖C‖`.
    pub a_raw: f64,
    /// `a_raw` times the safety factor.
    pub a: f64,
    pub safety: f64,
    pub source: BoundSource,
}

fn r_coth_r(r: f64) -> f64 {
    if r < 1e-4 {
        1.0 + r * r / 3.0
    } else {
        r / libm::tanh(r)
    }
}

impl RiccatiBound {
    fn assemble(b1: f64, b2: f64, c_norm: f64, d_norm: f64, safety: f64, source: BoundSource) -> Self {
        let m = 1.0 / b2;
        let r = libm::sqrt(d_norm / m).max(R_FLOOR);
        let a_raw = m * r_coth_r(r) + c_norm;
        RiccatiBound { b1, b2, m, r, c_norm, d_norm, a_raw, a: a_raw * safety, safety, source }
    }

    /// Bound valid for every Hamiltonian with `‖H‖_{C³} ≤ b1` and `H_pp ≥ b2`
    /// (requires `b2 ≤ b1`, which any such Hamiltonian satisfies).
    pub fn from_constants(b1: f64, b2: f64, safety: f64) -> Self {
        let s2 = core::f64::consts::SQRT_2;
        let c = b1 / b2;
        let cdot = s2 * b1 * b1 * b1 / (b2 * b2) + s2 * b1 * b1 / b2;
        let dn = b1 + b1 * b1 / b2 + cdot;
        Self::assemble(b1, b2, c, dn, safety, BoundSource::Constants)
    }
}

/// `C = H_pp⁻¹ H_px` at a point.
fn c_matrix(ham: &dyn Hamiltonian, x: &Vector, p: &Vector, t: f64) -> Mat {
    let hpp = ham.hess_pp(x, p, t);
    linalg::inverse(&hpp).unwrap_or_else(|| Mat::from_element(hpp.nrows(), hpp.ncols(), f64::NAN))
        * ham.hess_px(x, p, t)
}

/// Bound from `C` and `D = H_xx − Cᵀ H_pp C − Ċ` sampled on the certificate's
/// grid, `Ċ` by central differences along the flow.
pub fn riccati_bound(ham: &dyn Hamiltonian, cert: &BoundednessCertificate) -> RiccatiBound {
    let d = ham.dim();
    let region = &cert.region;
    let n = cert.points_per_axis.max(1);
    let pts = |lo: f64, hi: f64| -> Vec<f64> {
        if n == 1 || hi <= lo {
            alloc::vec![0.5 * (lo + hi)]
        } else {
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let mut axes: Vec<Vec<f64>> = region.x.iter().chain(region.p.iter()).map(|&(a, b)| pts(a, b)).collect();
    let time_dep = !ham.time_dependence().is_autonomous();
    axes.push(if time_dep { pts(region.t.0, region.t.1) } else { alloc::vec![region.t.0] });
    let total: usize = axes.iter().map(|a| a.len()).product();
    let eps = 1e-5;
    let mut c_norm: f64 = 0.0;
    let mut d_norm: f64 = 0.0;
    for count in 0..total {
        let mut rem = count;
        let mut idx = alloc::vec![0usize; axes.len()];
        for (k, ax) in axes.iter().enumerate() {
            idx[k] = rem % ax.len();
            rem /= ax.len();
        }
        let x = Vector::from_fn(d, |i, _| axes[i][idx[i]]);
        let p = Vector::from_fn(d, |i, _| axes[d + i][idx[d + i]]);
        let t = axes[2 * d][idx[2 * d]];
        let c = c_matrix(ham, &x, &p, t);
        let hp = ham.grad_p(&x, &p, t);
        let hx = ham.grad_x(&x, &p, t);
        let (xa, pa) = (&x + &hp * eps, &p - &hx * eps);
        let (xb, pb) = (&x - &hp * eps, &p + &hx * eps);
        let cdot = (c_matrix(ham, &xa, &pa, t + eps) - c_matrix(ham, &xb, &pb, t - eps)) / (2.0 * eps);
        let hpp = ham.hess_pp(&x, &p, t);
        let dm = ham.hess_xx(&x, &p, t) - c.transpose() * &hpp * &c - cdot;
        c_norm = c_norm.max(linalg::spectral_norm(&c));
        d_norm = d_norm.max(linalg::max_abs_sym_eig(&dm));
    }
    RiccatiBound::assemble(cert.b1_raw, cert.b2_raw, c_norm, d_norm, cert.safety, BoundSource::Grid)
}

/// Check on one maximal interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCheck {
    pub interval: (f64, f64),
    /// `None` when the interval is not longer than 2.
    pub max_norm: Option<f64>,
    pub argmax: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub intervals: Vec<IntervalCheck>,
    pub max_norm: f64,
    pub argmax: f64,
    pub a_raw: f64,
    pub a: f64,
    pub pass: bool,
    /// Set when the solution has interior blowups and the bound was applied
    /// per maximal interval of definition.
    pub per_interval_extension: bool,
}

/// Sample spacing on trimmed intervals.
const VERIFY_SPACING: f64 = 0.01;

/// Maximum of `‖S‖` over `]a + 1, b − 1[` for every maximal interval of
/// length greater than two, compared against the inflated bound.
pub fn verify_bound(sol: &RiccatiSolution, bound: &RiccatiBound) -> Result<BoundReport> {
    let mut checks = Vec::new();
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    let mut any = false;
    let grid = sol.frame.grid();
    for &(a, b) in &sol.intervals {
        if b - a <= 2.0 {
            checks.push(IntervalCheck { interval: (a, b), max_norm: None, argmax: None, pass: true });
            continue;
        }
        any = true;
        let (lo, hi) = (a + 1.0, b - 1.0);
        let n = libm::ceil((hi - lo) / VERIFY_SPACING) as usize;
        let mut ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        ts.extend(grid.iter().copied().filter(|&t| t > lo && t < hi));
        let mut local = (f64::NEG_INFINITY, f64::NAN);
        for t in ts {
            if let Some(s) = sol.s(t) {
                let nrm = linalg::spectral_norm(&s);
                if nrm > local.0 {
                    local = (nrm, t);
                }
            }
        }
        let pass = local.0 < bound.a;
        if local.0 > best.0 {
            best = local;
        }
        checks.push(IntervalCheck { interval: (a, b), max_norm: Some(local.0), argmax: Some(local.1), pass });
    }
    if !any {
        let length = sol.intervals.iter().map(|w| w.1 - w.0).fold(0.0, f64::max);
        return Err(Error::InsufficientWindow { length });
    }
    let (a0, b0) = sol.frame.span();
    let interior = sol.blowup_times.iter().any(|&t| t > a0 + 1e-8 && t < b0 - 1e-8);
    Ok(BoundReport {
        pass: checks.iter().all(|c| c.pass),
        intervals: checks,
        max_norm: best.0,
        argmax: best.1,
        a_raw: bound.a_raw,
        a: bound.a,
        per_interval_extension: interior,
    })
}
