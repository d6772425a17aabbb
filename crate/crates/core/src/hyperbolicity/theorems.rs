//! Deciders for hyperbolicity of sampled invariant sets.
//!
//! The Green-bundle decider compares the limiting slopes `S` and `U`: the set
//! is hyperbolic when `U − S` is uniformly positive on transversal
//! directions. The index-form pipeline first checks uniform positivity of the
//! second variation, then the broken Jacobi fields built from finite-horizon
//! frames, then hands over to the Green-bundle decider.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::{Framework, SetSpec};
use crate::conjugate::{find_conjugate_points, graph_basis, green_bundles, GreenOptions};
use crate::error::{Error, Result};
use crate::flow::{flow_derivative, integrate_orbit, vector_field, FrameInit, JacobiFrame};
use crate::hyperbolicity::cocycle::{exponential_fit, most_contracted, ExpFit};
use crate::hyperbolicity::transversal::transversal_projection;
use crate::index_form::{
    bump_field_bound, index_form_direct, uniform_positivity_scan, FramePiece, FrameField, PositivityReport, Quadrature,
    ScanConfig, VectorField,
};
use crate::linalg;
use crate::model::{Hamiltonian, Lagrangian, PhasePoint};
use crate::riccati::RiccatiBound;
use crate::{Mat, Vector};

/// Finite sample of an invariant set, equally spaced in time, and its spacing.
pub fn sample_invariant_set(
    ham: &Arc<dyn Hamiltonian>,
    set: &SetSpec,
    framework: &Framework,
    h: f64,
    max_samples: usize,
    tol: f64,
) -> Result<(Vec<PhasePoint>, f64)> {
    if !(h > 0.0) || max_samples == 0 {
        return Err(Error::invalid("sample spacing and count must be positive"));
    }
    let count = |period: f64| (libm::round(period / h) as usize).clamp(1, max_samples);
    match set {
        SetSpec::Equilibrium { point } => {
            let period = framework.clock_period().unwrap_or(1.0);
            let n = count(period);
            let step = period / n as f64;
            let pts = (0..n)
                .map(|k| PhasePoint { clock: point.clock + step * k as f64, ..point.clone() })
                .collect();
            Ok((pts, step))
        }
        SetSpec::PeriodicOrbit { start, period } => {
            let n = count(*period);
            let step = period / n as f64;
            let orbit = integrate_orbit(ham.clone(), start, (start.clock, start.clock + period), tol)?;
            let space = ham.space();
            let pts = (0..n).map(|k| orbit.point(start.clock + step * k as f64).reduced(&space)).collect();
            Ok((pts, step))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Hyperbolic,
    NotHyperbolic,
    Indeterminate,
}

/// Slopes at one sample together with the transversal directions
/// (`d × m`) on which `U − S` is tested.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSample {
    pub s: Mat,
    pub u: Mat,
    pub converged: bool,
    pub transversal: Mat,
    /// Smallest transversal eigenvalue of `U_T − S_T` along the horizon doubling.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeClassification {
    pub verdict: Verdict,
    pub floor: f64,
    pub min_eigs: Vec<f64>,
    /// Aitken extrapolation of each history, when it has three entries.
    pub extrapolated: Vec<Option<f64>>,
}

fn transversal_gap(s: &Mat, u: &Mat, t: &Mat) -> f64 {
    if t.ncols() == 0 {
        return f64::INFINITY;
    }
    linalg::min_sym_eig(&linalg::symmetrize(&(t.transpose() * (u - s) * t)))
}

fn aitken(h: &[f64]) -> Option<f64> {
    let n = h.len();
    if n < 3 {
        return None;
    }
    let (a, b, c) = (h[n - 3], h[n - 2], h[n - 1]);
    let den = (c - b) - (b - a);
    if den.abs() < 1e-300 {
        return Some(c);
    }
    Some(c - (c - b) * (c - b) / den)
}

/// Three-way verdict. A non-converged sample whose transversal gap decreases
/// and extrapolates to (nearly) zero is evidence of non-hyperbolicity; a
/// converged gap below the floor is indeterminate.
pub fn classify_slopes(samples: &[SlopeSample], floor_factor: f64) -> SlopeClassification {
    let scale = samples
        .iter()
        .map(|s| linalg::spectral_norm(&s.s).max(linalg::spectral_norm(&s.u)))
        .fold(1.0, f64::max);
    let floor = floor_factor * scale;
    let min_eigs: Vec<f64> = samples.iter().map(|s| transversal_gap(&s.s, &s.u, &s.transversal)).collect();
    let extrapolated: Vec<Option<f64>> = samples.iter().map(|s| aitken(&s.history)).collect();
    let collapsing = samples.iter().zip(&extrapolated).any(|(s, ex)| {
        let h = &s.history;
        let n = h.len();
        !s.converged
            && n >= 3
            && h[n - 1] < h[n - 2]
            && h[n - 2] < h[n - 3]
            && ex.is_some_and(|e| e.abs() <= floor.max(0.1 * h[n - 1]))
    });
    let verdict = if collapsing {
        Verdict::NotHyperbolic
    } else if samples.iter().all(|s| s.converged) && min_eigs.iter().all(|&e| e >= floor) {
        Verdict::Hyperbolic
    } else {
        Verdict::Indeterminate
    };
    SlopeClassification { verdict, floor, min_eigs, extrapolated }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCOptions {
    pub green: GreenOptions,
    /// Transversality floor relative to the slope scale.
    pub floor_factor: f64,
    /// Horizon for the dynamical identification of the bundles.
    pub angle_horizon: f64,
    pub fit_horizon: f64,
    pub fit_step: f64,
    pub integ_tol: f64,
}

impl Default for TheoremCOptions {
    fn default() -> Self {
        TheoremCOptions {
            green: GreenOptions::default(),
            floor_factor: 1e-6,
            angle_horizon: 15.0,
            fit_horizon: 10.0,
            fit_step: 0.1,
            integ_tol: crate::flow::DEFAULT_TOL,
        }
    }
}

/// Exponential fit of one bundle: the worst (largest `C`, smallest `λ`) over samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleFit {
    pub c: f64,
    pub lambda: f64,
    pub residual: f64,
    pub halving_time: Option<f64>,
}

impl BundleFit {
    fn merge(a: Option<BundleFit>, f: ExpFit) -> BundleFit {
        let b = BundleFit { c: f.c, lambda: f.lambda, residual: f.residual, halving_time: f.halving_time };
        match a {
            None => b,
            Some(a) => BundleFit {
                c: a.c.max(b.c),
                lambda: a.lambda.min(b.lambda),
                residual: a.residual.max(b.residual),
                halving_time: match (a.halving_time, b.halving_time) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    _ => None,
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicSplitting {
    /// Stable and unstable subspaces (`2d ×` dim) per sample, full coordinates.
    pub es: Vec<Mat>,
    pub eu: Vec<Mat>,
    pub stable_fit: BundleFit,
    pub unstable_fit: BundleFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CSample {
    pub min_transversal_eig: f64,
    pub converged: bool,
    pub t_used: f64,
    pub convergence_gap: f64,
    pub extrapolated: Option<f64>,
    pub s: Mat,
    pub u: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCReport {
    pub verdict: Verdict,
    pub floor: f64,
    pub samples: Vec<CSample>,
    /// Largest angle between the stable Green bundle and the dynamically
    /// contracted subspace (plus the flow direction for autonomous sets).
    pub angle_stable: f64,
    pub angle_unstable: f64,
    pub splitting: Option<HyperbolicSplitting>,
    pub note: Option<String>,
}

/// Directions `d × m` on which `U − S` must be positive.
fn transversal_directions(ham: &dyn Hamiltonian, pt: &PhasePoint, framework: &Framework) -> Result<Mat> {
    let d = ham.dim();
    if !framework.uses_transversal_reduction() {
        return Ok(Mat::identity(d, d));
    }
    let xdot = ham.grad_p(&pt.x, &pt.p, pt.clock);
    if xdot.norm() <= 1e-10 {
        return Err(Error::SingularProjection { sample: 0 });
    }
    Ok(linalg::orthogonal_complement(&Mat::from_column_slice(d, 1, xdot.as_slice())))
}

fn with_column(m: &Mat, v: &Vector) -> Mat {
    let mut out = Mat::zeros(m.nrows(), m.ncols() + 1);
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out.set_column(m.ncols(), v);
    out
}

/// `‖(restricted) dψ_{±t}‖` on `span(basis)` for `t = 0, step, …, horizon`.
fn restricted_norms(
    ham: &Arc<dyn Hamiltonian>,
    theta: &PhasePoint,
    basis: &Mat,
    autonomous: bool,
    horizon: f64,
    step: f64,
    forward: bool,
    tol: f64,
) -> Result<Vec<(f64, f64)>> {
    let d = ham.dim();
    let c = theta.clock;
    let span = if forward { (c, c + horizon) } else { (c - horizon, c) };
    let frame = JacobiFrame::integrate(
        ham.clone(),
        theta,
        &basis.rows(0, d).into_owned(),
        &basis.rows(d, d).into_owned(),
        span,
        tol,
        false,
    )?;
    let n = libm::round(horizon / step) as usize;
    (0..=n)
        .map(|j| {
            let dt = step * j as f64;
            let t = if forward { c + dt } else { c - dt };
            let mut m = frame.stacked(t);
            if autonomous {
                m = transversal_projection(ham.as_ref(), &frame.point(t)) * m;
            }
            Ok((dt, linalg::spectral_norm(&m)))
        })
        .collect()
}

/// Green-bundle decider on a finite sample of an invariant set.
pub fn decide_theorem_c(
    ham: &Arc<dyn Hamiltonian>,
    samples: &[PhasePoint],
    framework: &Framework,
    opts: &TheoremCOptions,
) -> Result<TheoremCReport> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let d = ham.dim();
    let autonomous = framework.uses_transversal_reduction();
    let mut slope_samples = Vec::with_capacity(samples.len());
    let mut bundles = Vec::with_capacity(samples.len());
    for theta in samples {
        let gb = green_bundles(ham, theta, &opts.green)?;
        let t = transversal_directions(ham.as_ref(), theta, framework)?;
        let history = gb.history.iter().map(|h| transversal_gap(&h.s, &h.u, &t)).collect();
        slope_samples.push(SlopeSample {
            s: gb.s_limit.clone(),
            u: gb.u_limit.clone(),
            converged: gb.converged,
            transversal: t,
            history,
        });
        bundles.push(gb);
    }
    let class = classify_slopes(&slope_samples, opts.floor_factor);
    let report_samples: Vec<CSample> = bundles
        .iter()
        .zip(&class.min_eigs)
        .zip(&class.extrapolated)
        .map(|((gb, &e), &ex)| CSample {
            min_transversal_eig: e,
            converged: gb.converged,
            t_used: gb.t_used,
            convergence_gap: gb.convergence_gap,
            extrapolated: ex,
            s: gb.s_limit.clone(),
            u: gb.u_limit.clone(),
        })
        .collect();
    let mut report = TheoremCReport {
        verdict: class.verdict,
        floor: class.floor,
        samples: report_samples,
        angle_stable: f64::NAN,
        angle_unstable: f64::NAN,
        splitting: None,
        note: None,
    };
    if class.verdict != Verdict::Hyperbolic {
        return Ok(report);
    }

    let k = if autonomous { d - 1 } else { d };
    let (mut angle_s, mut angle_u) = (0.0f64, 0.0f64);
    let (mut es_all, mut eu_all) = (Vec::new(), Vec::new());
    let (mut fit_s, mut fit_u) = (None, None);
    for (theta, gb) in samples.iter().zip(&bundles) {
        let x = vector_field(ham.as_ref(), theta);
        let fwd = flow_derivative(ham, theta, opts.angle_horizon, opts.integ_tol)?;
        let bwd = flow_derivative(ham, theta, -opts.angle_horizon, opts.integ_tol)?;
        let (mut dyn_s, mut dyn_u) = (most_contracted(&fwd, k), most_contracted(&bwd, k));
        if autonomous {
            dyn_s = with_column(&dyn_s, &x);
            dyn_u = with_column(&dyn_u, &x);
        }
        let (gs, gu) = (graph_basis(&gb.s_limit), graph_basis(&gb.u_limit));
        angle_s = angle_s.max(linalg::subspace_gap(&gs, &dyn_s));
        angle_u = angle_u.max(linalg::subspace_gap(&gu, &dyn_u));

        let (es, eu) = if autonomous {
            let p = transversal_projection(ham.as_ref(), theta);
            (linalg::orthonormal_basis(&(&p * &gs), 1e-8), linalg::orthonormal_basis(&(&p * &gu), 1e-8))
        } else {
            (linalg::orthonormal_basis(&gs, 1e-12), linalg::orthonormal_basis(&gu, 1e-12))
        };
        if es.ncols() > 0 && eu.ncols() > 0 {
            let fit = |basis: &Mat, forward: bool| -> Result<ExpFit> {
                let data = restricted_norms(ham, theta, basis, autonomous, opts.fit_horizon, opts.fit_step, forward, opts.integ_tol)?;
                exponential_fit(&data)
            };
            match (fit(&es, true), fit(&eu, false)) {
                (Ok(a), Ok(b)) => {
                    fit_s = Some(BundleFit::merge(fit_s, a));
                    fit_u = Some(BundleFit::merge(fit_u, b));
                }
                (Err(e), _) | (_, Err(e)) => {
                    report.verdict = Verdict::Indeterminate;
                    report.note = Some(alloc::format!("exponential fit failed: {e}"));
                    report.angle_stable = angle_s;
                    report.angle_unstable = angle_u;
                    return Ok(report);
                }
            }
        }
        es_all.push(es);
        eu_all.push(eu);
    }
    report.angle_stable = angle_s;
    report.angle_unstable = angle_u;
    if let (Some(stable_fit), Some(unstable_fit)) = (fit_s, fit_u) {
        report.splitting = Some(HyperbolicSplitting { es: es_all, eu: eu_all, stable_fit, unstable_fit });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremAOptions {
    pub scan: ScanConfig,
    pub theorem_c: TheoremCOptions,
    /// Quadrature for the broken-field index forms.
    pub broken_quadrature: Quadrature,
}

impl Default for TheoremAOptions {
    fn default() -> Self {
        TheoremAOptions {
            scan: ScanConfig::default(),
            theorem_c: TheoremCOptions::default(),
            broken_quadrature: Quadrature::new(8, 200),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremAVerdict {
    Hyperbolic,
    /// Uniform positivity of the index form could not be established.
    HypothesisNotSatisfied,
    NotHyperbolic,
    Indeterminate,
}

/// Broken Jacobi fields at one sample: vertical frames started at `∓T`,
/// spliced at the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenFieldSample {
    /// Smallest eigenvalue of `U_T − S_T` on transversal directions.
    pub slope_gap: f64,
    /// Smallest eigenvalue of the L² Gram matrix of the fields (per unit `|h|²`).
    pub l2_min: f64,
    /// `max |I(ξ_i, ξ_j) − h_iᵀ(U_T − S_T)h_j|`, relative.
    pub consistency: f64,
    /// Smallest eigenvalue of `(U_T − S_T) − a·Gram`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokenFieldReport {
    pub horizon: f64,
    pub samples: Vec<BrokenFieldSample>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremAReport {
    pub verdict: TheoremAVerdict,
    pub failed_stage: Option<&'static str>,
    pub positivity: PositivityReport,
    pub broken_fields: Option<BrokenFieldReport>,
    pub theorem_c: Option<TheoremCReport>,
    /// Conjugate times on the window of the first cell with negative `a_min`.
    pub conjugate_times: Vec<f64>,
}

fn broken_field_sample(
    lag: &dyn Lagrangian,
    ham: &Arc<dyn Hamiltonian>,
    theta: &PhasePoint,
    framework: &Framework,
    horizon: f64,
    a: f64,
    quad: &Quadrature,
    tol: f64,
) -> Result<BrokenFieldSample> {
    let d = ham.dim();
    let c = theta.clock;
    let orbit = integrate_orbit(ham.clone(), theta, (c - horizon, c + horizon), tol)?;
    let vert = FrameInit::vertical(0.0, d);
    let left = JacobiFrame::integrate(ham.clone(), &orbit.point(c - horizon), &vert.h, &vert.v, (c - horizon, c), tol, false)?;
    let right = JacobiFrame::integrate(ham.clone(), &orbit.point(c + horizon), &vert.h, &vert.v, (c, c + horizon), tol, false)?;
    let (h1, h2) = (left.h(c), right.h(c));
    let h1inv = linalg::inverse(&h1).ok_or(Error::DisconjugacyViolation { time: c })?;
    let h2inv = linalg::inverse(&h2).ok_or(Error::DisconjugacyViolation { time: c })?;
    let u = linalg::symmetrize(&(left.v(c) * &h1inv));
    let s = linalg::symmetrize(&(right.v(c) * &h2inv));
    let t = transversal_directions(ham.as_ref(), theta, framework)?;
    let m = t.ncols();
    let fields: Vec<FrameField> = (0..m)
        .map(|i| {
            let h = t.column(i).into_owned();
            FrameField {
                pieces: vec![
                    FramePiece { frame: left.clone(), coeff: &h1inv * &h, interval: (c - horizon, c) },
                    FramePiece { frame: right.clone(), coeff: &h2inv * &h, interval: (c, c + horizon) },
                ],
                span: (c - horizon, c + horizon),
            }
        })
        .collect();
    let q_s = linalg::symmetrize(&(t.transpose() * (&u - &s) * &t));
    let mut q_i = Mat::zeros(m, m);
    let mut gram = Mat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = index_form_direct(lag, &orbit, &fields[i], &fields[j], quad)?;
            let (fi, fj) = (&fields[i], &fields[j]);
            let g = quad.integrate(c - horizon, c + horizon, &[c], |tt| Ok(fi.value(tt).dot(&fj.value(tt))))?;
            q_i[(i, j)] = v;
            q_i[(j, i)] = v;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let scale = linalg::max_abs(&q_s).max(1.0);
    Ok(BrokenFieldSample {
        slope_gap: linalg::min_sym_eig(&q_s),
        l2_min: linalg::min_sym_eig(&gram),
        consistency: linalg::max_abs(&(&q_i - &q_s)) / scale,
        margin: linalg::min_sym_eig(&(&q_s - &gram * a)),
    })
}

/// Index-form pipeline: uniform positivity, broken fields, Green bundles.
pub fn decide_theorem_a(
    lag: &dyn Lagrangian,
    ham: &Arc<dyn Hamiltonian>,
    samples: &[PhasePoint],
    framework: &Framework,
    opts: &TheoremAOptions,
) -> Result<TheoremAReport> {
    let mut cfg = opts.scan.clone();
    cfg.midpoint_constrained = framework.uses_transversal_reduction();
    let positivity = uniform_positivity_scan(lag, ham, samples, &cfg)?;
    if !(positivity.trend_bounded_below && positivity.indeterminate_cells == 0) {
        let independent = decide_theorem_c(ham, samples, framework, &opts.theorem_c).ok();
        let mut conjugate_times = Vec::new();
        if let Some(cell) = positivity.cells.iter().find(|c| c.a_min < -c.floor) {
            let theta = &samples[cell.sample];
            let window = (theta.clock, theta.clock + cell.length);
            let orbit = integrate_orbit(ham.clone(), theta, window, cfg.integ_tol)?;
            conjugate_times = find_conjugate_points(&orbit, window)?.conjugate_times.iter().map(|c| c.time).collect();
        }
        return Ok(TheoremAReport {
            verdict: TheoremAVerdict::HypothesisNotSatisfied,
            failed_stage: Some("positivity"),
            positivity,
            broken_fields: None,
            theorem_c: independent,
            conjugate_times,
        });
    }
    let horizon = 0.5 * cfg.t_list.iter().copied().fold(0.0, f64::max);
    let a = positivity.uniform_a;
    let broken: Vec<BrokenFieldSample> = samples
        .iter()
        .map(|th| broken_field_sample(lag, ham, th, framework, horizon, a, &opts.broken_quadrature, cfg.integ_tol))
        .collect::<Result<_>>()?;
    let pass = broken.iter().all(|b| b.consistency <= 1e-6 && b.l2_min > 0.0 && b.margin >= -1e-6 * b.slope_gap.abs().max(1.0));
    let broken_fields = Some(BrokenFieldReport { horizon, samples: broken, pass });
    if !pass {
        return Ok(TheoremAReport {
            verdict: TheoremAVerdict::Indeterminate,
            failed_stage: Some("broken_fields"),
            positivity,
            broken_fields,
            theorem_c: None,
            conjugate_times: Vec::new(),
        });
    }
    let c = decide_theorem_c(ham, samples, framework, &opts.theorem_c)?;
    let (verdict, failed_stage) = match c.verdict {
        Verdict::Hyperbolic => (TheoremAVerdict::Hyperbolic, None),
        Verdict::NotHyperbolic => (TheoremAVerdict::NotHyperbolic, Some("green_bundles")),
        Verdict::Indeterminate => (TheoremAVerdict::Indeterminate, Some("green_bundles")),
    };
    Ok(TheoremAReport { verdict, failed_stage, positivity, broken_fields, theorem_c: Some(c), conjugate_times: Vec::new() })
}

/// Lower bound on the projected vertical Jacobi fields from a sample:
/// `σ_min(Y(t)) ≥ (2AB)^{-1/2}` for `1 < |t| ≤ T` on disconjugate windows.
#[derive(Debug, Clone, PartialEq)]
pub struct YbdReport {
    pub a: f64,
    pub b_const: f64,
    /// `(2AB)^{-1/2}`.
    pub lower_bound: f64,
    pub min_singular: f64,
    pub argmin: f64,
    /// Windows `[−1, T+2]` and `[−T−2, 1]` relative to the sample.
    pub disconjugate: bool,
    pub pass: bool,
}

pub fn ybd_check(
    ham: &Arc<dyn Hamiltonian>,
    l_c2: f64,
    bound: &RiccatiBound,
    theta: &PhasePoint,
    horizon: f64,
    tol: f64,
) -> Result<YbdReport> {
    let d = ham.dim();
    let c = theta.clock;
    let orbit = integrate_orbit(ham.clone(), theta, (c - horizon - 2.0, c + horizon + 2.0), tol)?;
    let fwd = find_conjugate_points(&orbit, (c - 1.0, c + horizon + 2.0))?;
    let bwd = find_conjugate_points(&orbit, (c - horizon - 2.0, c + 1.0))?;
    let vert = FrameInit::vertical(c, d);
    let y = JacobiFrame::integrate(ham.clone(), theta, &vert.h, &vert.v, (c - horizon, c + horizon), tol, false)?;
    let b_const = bump_field_bound(l_c2);
    let lower_bound = 1.0 / libm::sqrt(2.0 * bound.a * b_const);
    let n = libm::ceil((horizon - 1.0) / 0.01) as usize;
    let (mut min_singular, mut argmin) = (f64::INFINITY, f64::NAN);
    for j in 0..=n {
        let s = (1.0 + (horizon - 1.0) * j as f64 / n as f64).min(horizon);
        let s = if j == 0 { 1.0 + 1e-9 } else { s };
        for t in [s, -s] {
            let sv = linalg::min_singular(&y.h(c + t));
            if sv < min_singular {
                min_singular = sv;
                argmin = t;
            }
        }
    }
    let disconjugate = fwd.disconjugate && bwd.disconjugate;
    Ok(YbdReport {
        a: bound.a,
        b_const,
        lower_bound,
        min_singular,
        argmin,
        disconjugate,
        pass: disconjugate && min_singular >= lower_bound,
    })
}
