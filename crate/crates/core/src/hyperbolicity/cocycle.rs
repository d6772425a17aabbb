//! Linear cocycles over a finite sampled base and the quasi-hyperbolicity
//! test: every nonzero fiber vector must grow without bound in forward or
//! backward time.
//!
//! "Unbounded" is decided by a norm threshold at a finite horizon. Stable and
//! unstable subspaces are the right singular directions of the horizon map
//! whose singular values stay below the square root of the threshold.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::{Mat, Vector};

/// Linear maps `maps[k]` from the fiber over base point `k` to the fiber over
/// `next[k]`, one per time step. `prev[k]` is the base point reached by one
/// backward step; its map is inverted for that step.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCocycle {
    pub maps: Vec<Mat>,
    pub next: Vec<usize>,
    pub prev: Vec<usize>,
    pub fiber_dim: usize,
    pub step: f64,
    inverses: Vec<Mat>,
    pub condition: Vec<f64>,
}

impl SampledCocycle {
    pub fn new(maps: Vec<Mat>, next: Vec<usize>, prev: Vec<usize>, step: f64) -> Result<Self> {
        let n = maps.len();
        if n == 0 || next.len() != n || prev.len() != n {
            return Err(Error::invalid("cocycle needs one map, successor and predecessor per base point"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("cocycle step must be positive"));
        }
        let fiber_dim = maps[0].nrows();
        let mut inverses = Vec::with_capacity(n);
        let mut condition = Vec::with_capacity(n);
        for (k, m) in maps.iter().enumerate() {
            if m.nrows() != fiber_dim || m.ncols() != fiber_dim || next[k] >= n || prev[k] >= n {
                return Err(Error::invalid("inconsistent cocycle data"));
            }
            if fiber_dim == 0 {
                inverses.push(m.clone());
                condition.push(1.0);
                continue;
            }
            let inv = linalg::inverse(m).ok_or(Error::SingularProjection { sample: k })?;
            condition.push(linalg::spectral_norm(m) * linalg::spectral_norm(&inv));
            inverses.push(inv);
        }
        Ok(SampledCocycle { maps, next, prev, fiber_dim, step, inverses, condition })
    }

    /// Single base point mapped to itself by `m`.
    pub fn constant(m: Mat, step: f64) -> Result<Self> {
        SampledCocycle::new(vec![m], vec![0], vec![0], step)
    }

    pub fn base_len(&self) -> usize {
        self.maps.len()
    }

    /// One step from base point `k`; returns the new base point.
    fn step_vec(&self, k: usize, v: &Vector, forward: bool) -> (usize, Vector) {
        if forward {
            (self.next[k], &self.maps[k] * v)
        } else {
            let j = self.prev[k];
            (j, &self.inverses[j] * v)
        }
    }

    /// Matrix of the `n`-step map from base point `k` (backward if not `forward`).
    pub fn iterate(&self, k: usize, n: usize, forward: bool) -> Mat {
        let mut m = Mat::identity(self.fiber_dim, self.fiber_dim);
        let mut b = k;
        for _ in 0..n {
            if forward {
                m = &self.maps[b] * m;
                b = self.next[b];
            } else {
                b = self.prev[b];
                m = &self.inverses[b] * m;
            }
        }
        m
    }

    /// Norms `|Ψ_{±j} v|` for `j = 0..=n`.
    fn trajectory_norms(&self, k: usize, v: &Vector, n: usize, forward: bool) -> Vec<f64> {
        let mut out = Vec::with_capacity(n + 1);
        let (mut b, mut w) = (k, v.clone());
        out.push(w.norm());
        for _ in 0..n {
            let (nb, nw) = self.step_vec(b, &w, forward);
            b = nb;
            w = nw;
            out.push(w.norm());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleOptions {
    /// Time horizon; the step count is `horizon / step`.
    pub horizon: f64,
    pub threshold: f64,
    /// Directions on the fiber mesh (half circle for 2-dimensional fibers).
    pub mesh: usize,
}

impl Default for CocycleOptions {
    fn default() -> Self {
        CocycleOptions { horizon: 50.0, threshold: 1e3, mesh: 360 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhVerdict {
    QuasiHyperbolic,
    NotQuasiHyperbolic,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointReport {
    pub base: usize,
    /// `(dim E^s, dim E^u)`.
    pub dims: (usize, usize),
    pub es: Mat,
    pub eu: Mat,
    /// Smallest principal angle between `E^s` and `E^u` at the full and half horizon.
    pub angle: f64,
    pub angle_half: f64,
    pub intersection: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleReport {
    pub verdict: QhVerdict,
    /// Bounded fiber vector (base point, vector) when not quasi-hyperbolic.
    pub witness: Option<(usize, Vec<f64>)>,
    /// Vectors whose norm neither crossed the threshold nor saturated.
    pub indeterminate: Vec<(usize, Vec<f64>)>,
    /// `max |Ψ_t v| / (|v| + |Ψ_s v|)` over `0 ≤ t ≤ s ≤ horizon` (and the mirror in backward time).
    pub k33: f64,
    pub points: Vec<PointReport>,
    pub intersection_flagged: bool,
    /// `ln(n_H / n_{H/2}) / ln(n_{H/2} / n_{H/4})` with `n_T` the largest norm of the time-`T` maps.
    pub growth_ratio: f64,
    /// Growth ratio of at least 1.5; a ratio near 1 indicates polynomial growth.
    pub exponential_growth: bool,
    pub fiber_dim: usize,
    pub steps: usize,
}

impl CocycleReport {
    pub fn dims(&self) -> Vec<(usize, usize)> {
        self.points.iter().map(|p| p.dims).collect()
    }
}

/// Deterministic unit directions: a half circle in dimension 2, a Halton
/// sequence on the sphere otherwise.
fn fiber_mesh(n: usize, count: usize) -> Vec<Vector> {
    match n {
        0 => Vec::new(),
        1 => vec![Vector::from_element(1, 1.0)],
        2 => (0..count)
            .map(|j| {
                let a = PI * j as f64 / count as f64;
                Vector::from_column_slice(&[libm::cos(a), libm::sin(a)])
            })
            .collect(),
        _ => {
            const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
            let mut out: Vec<Vector> = (0..n)
                .map(|i| {
                    let mut e = Vector::zeros(n);
                    e[i] = 1.0;
                    e
                })
                .collect();
            let mut j = 1u32;
            while out.len() < count.max(n) {
                let v = Vector::from_fn(n, |i, _| 2.0 * halton(j, PRIMES[i % PRIMES.len()]) - 1.0);
                j += 1;
                let norm = v.norm();
                if norm > 1e-3 {
                    out.push(v / norm);
                }
            }
            out
        }
    }
}

fn halton(mut i: u32, base: u32) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Right singular directions of `m` with singular value at most `cut`.
fn small_directions(m: &Mat, cut: f64) -> Mat {
    let svd = m.clone().svd(false, true);
    let count = svd.singular_values.iter().filter(|&&s| s <= cut).count();
    most_contracted(m, count)
}

/// Right singular directions belonging to the `k` smallest singular values.
pub(crate) fn most_contracted(m: &Mat, k: usize) -> Mat {
    let n = m.ncols();
    if k == 0 {
        return Mat::zeros(n, 0);
    }
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let cols: Vec<Vector> = idx[..k].iter().map(|&i| vt.row(i).transpose()).collect();
    Mat::from_columns(&cols)
}

fn min_angle(a: &Mat, b: &Mat) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return PI / 2.0;
    }
    linalg::principal_angles(a, b).first().copied().unwrap_or(PI / 2.0)
}

/// Share of the full-horizon maximum the half-horizon maximum must reach
/// for a below-threshold vector to count as bounded.
const SATURATION: f64 = 0.95;

pub fn quasi_hyperbolicity_check(cocycle: &SampledCocycle, opts: &CocycleOptions) -> Result<CocycleReport> {
    if !(opts.horizon > 0.0 && opts.threshold > 1.0) {
        return Err(Error::invalid("horizon must be positive and threshold above 1"));
    }
    let n = cocycle.fiber_dim;
    let steps = libm::round(opts.horizon / cocycle.step).max(4.0) as usize;
    let half = steps / 2;
    let cut = libm::sqrt(opts.threshold);
    let mesh = fiber_mesh(n, opts.mesh.max(1));

    let mut witness = None;
    let mut indeterminate = Vec::new();
    let mut all_unbounded = true;
    let mut k33: f64 = 0.0;
    let mut points = Vec::with_capacity(cocycle.base_len());
    for k in 0..cocycle.base_len() {
        for v in &mesh {
            let fwd = cocycle.trajectory_norms(k, v, steps, true);
            let bwd = cocycle.trajectory_norms(k, v, steps, false);
            let max_full = fwd.iter().chain(&bwd).fold(0.0f64, |a, &x| a.max(x));
            let max_half = fwd[..=half].iter().chain(&bwd[..=half]).fold(0.0f64, |a, &x| a.max(x));
            for traj in [&fwd, &bwd] {
                let mut run = 0.0f64;
                for s in 0..traj.len() {
                    run = run.max(traj[s]);
                    k33 = k33.max(run / (traj[0] + traj[s]));
                }
            }
            if max_full > opts.threshold {
                continue;
            }
            all_unbounded = false;
            if max_half >= SATURATION * max_full {
                if witness.is_none() {
                    witness = Some((k, v.iter().copied().collect()));
                }
            } else {
                indeterminate.push((k, v.iter().copied().collect()));
            }
        }
        let fwd_full = cocycle.iterate(k, steps, true);
        let bwd_full = cocycle.iterate(k, steps, false);
        let es = small_directions(&fwd_full, cut);
        let eu = small_directions(&bwd_full, cut);
        // Same dimensions at half the horizon, so the angle trend is comparable.
        let es_h = most_contracted(&cocycle.iterate(k, half, true), es.ncols());
        let eu_h = most_contracted(&cocycle.iterate(k, half, false), eu.ncols());
        let angle = min_angle(&es, &eu);
        let angle_half = min_angle(&es_h, &eu_h);
        let intersection =
            es.ncols() + eu.ncols() > n || (es.ncols() > 0 && eu.ncols() > 0 && (angle < 1e-6 || angle < 0.75 * angle_half));
        points.push(PointReport { base: k, dims: (es.ncols(), eu.ncols()), es, eu, angle, angle_half, intersection });
    }

    let norm_at = |m: usize| {
        (0..cocycle.base_len())
            .flat_map(|k| [cocycle.iterate(k, m, true), cocycle.iterate(k, m, false)])
            .map(|a| if n == 0 { 1.0 } else { linalg::spectral_norm(&a) })
            .fold(0.0f64, f64::max)
    };
    let (n1, n2, n4) = (norm_at(steps), norm_at(half), norm_at(steps / 4));
    let den = libm::log(n2 / n4);
    let growth_ratio = if den.abs() > 1e-9 { libm::log(n1 / n2) / den } else { f64::NAN };

    let verdict = if witness.is_some() {
        QhVerdict::NotQuasiHyperbolic
    } else if all_unbounded {
        QhVerdict::QuasiHyperbolic
    } else {
        QhVerdict::Indeterminate
    };
    Ok(CocycleReport {
        verdict,
        witness,
        indeterminate,
        k33,
        intersection_flagged: points.iter().any(|p| p.intersection),
        points,
        growth_ratio,
        exponential_growth: growth_ratio >= 1.5,
        fiber_dim: n,
        steps,
    })
}

/// Dimensions at an α-limit point, a point `x`, and an ω-limit point of its orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimsTriple {
    pub alpha: (usize, usize),
    pub x: (usize, usize),
    pub omega: (usize, usize),
}

/// `dim E^u(ω) ≥ n − dim E^s(x)` and `dim E^s(α) ≥ n − dim E^u(x)` for every
/// triple, and `dim E^s` constant on each supplied minimal set.
pub fn sacker_sell_dims(fiber_dim: usize, triples: &[DimsTriple], minimal_sets: &[Vec<(usize, usize)>]) -> bool {
    let ineq = triples.iter().all(|t| {
        t.omega.1 + t.x.0 >= fiber_dim && t.alpha.0 + t.x.1 >= fiber_dim
    });
    let constant = minimal_sets.iter().all(|set| set.windows(2).all(|w| w[0].0 == w[1].0));
    ineq && constant
}

/// `‖restricted map‖ ≈ C e^{−λt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub c: f64,
    pub lambda: f64,
    /// RMS residual of the log fit.
    pub residual: f64,
    /// First sampled time with norm below 1/2.
    pub halving_time: Option<f64>,
}

/// Least squares of `ln n` against `t`. Non-decaying data is a fit failure
/// carrying the growth-rate estimate.
pub fn exponential_fit(data: &[(f64, f64)]) -> Result<ExpFit> {
    if data.len() < 2 || data.iter().any(|&(_, n)| !(n > 0.0) || !n.is_finite()) {
        return Err(Error::invalid("exponential fit needs at least two positive samples"));
    }
    let m = data.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, n) in data {
        let y = libm::log(n);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let slope = (m * sty - st * sy) / (m * stt - st * st);
    let intercept = (sy - slope * st) / m;
    let lambda = -slope;
    if !(lambda > 1e-6) {
        return Err(Error::FitFailure { growth_rate: slope });
    }
    let residual = libm::sqrt(
        data.iter().map(|&(t, n)| { let r = libm::log(n) - intercept - slope * t; r * r }).sum::<f64>() / m,
    );
    let halving_time = data.iter().find(|&&(_, n)| n < 0.5).map(|&(t, _)| t);
    Ok(ExpFit { c: libm::exp(intercept), lambda, residual, halving_time })
}

/// `‖Ψ_{±j}|_{span(basis)}‖` for `j = 0..=n` steps, paired with elapsed time.
pub fn bundle_norms(cocycle: &SampledCocycle, k: usize, basis: &Mat, n: usize, forward: bool) -> Vec<(f64, f64)> {
    let q = linalg::orthonormal_basis(basis, 1e-12);
    (0..=n)
        .map(|j| (j as f64 * cocycle.step, linalg::spectral_norm(&(cocycle.iterate(k, j, forward) * &q))))
        .collect()
}
