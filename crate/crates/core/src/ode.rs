//! Dormand–Prince 5(4) with Hairer's dense output of order 4.
//!
//! Integration runs forward or backward in time. Each accepted step keeps its
//! five interpolation coefficient vectors, so the whole trajectory can be
//! evaluated anywhere on its span.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Decision returned by the per-step hook.
pub enum StepAction {
    Continue,
    /// The hook rewrote the state in place; derivative caches are refreshed.
    Modified,
    Abort(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Options { rtol: tol, atol: tol, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl Default for Options {
    fn default() -> Self {
        Options::with_tol(1e-10)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct DenseStep {
    t: f64,
    h: f64,
    coef: Vec<f64>,
}

/// Continuous trajectory produced by [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    dim: usize,
    t_start: f64,
    t_end: f64,
    // Sorted by increasing lower endpoint whatever the integration direction.
    steps: Vec<DenseStep>,
    y_start: Vec<f64>,
}

impl DenseSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Span as `(min, max)`.
    pub fn span(&self) -> (f64, f64) {
        (self.t_start.min(self.t_end), self.t_start.max(self.t_end))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Step boundaries in increasing order.
    pub fn grid(&self) -> Vec<f64> {
        let mut g: Vec<f64> = Vec::with_capacity(self.steps.len() + 1);
        let (a, _) = self.span();
        g.push(a);
        for s in &self.steps {
            g.push(s.t.max(s.t + s.h));
        }
        g
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// State at `t`, clamped to the span.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.steps.is_empty() {
            out.copy_from_slice(&self.y_start);
            return;
        }
        let (a, b) = self.span();
        let t = t.clamp(a, b);
        let i = self
            .steps
            .partition_point(|s| s.t.min(s.t + s.h) <= t)
            .saturating_sub(1);
        let s = &self.steps[i];
        let theta = ((t - s.t) / s.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let n = self.dim;
        for j in 0..n {
            let r = |k: usize| s.coef[k * n + j];
            out[j] = r(0) + theta * (r(1) + th1 * (r(2) + theta * (r(3) + th1 * r(4))));
        }
    }

    /// Time derivative of the interpolant at `t`.
    pub fn eval_derivative(&self, t: f64) -> Vec<f64> {
        let n = self.dim;
        if self.steps.is_empty() {
            return vec![0.0; n];
        }
        let (a, b) = self.span();
        let t = t.clamp(a, b);
        let i = self
            .steps
            .partition_point(|s| s.t.min(s.t + s.h) <= t)
            .saturating_sub(1);
        let s = &self.steps[i];
        let theta = ((t - s.t) / s.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let mut out = vec![0.0; n];
        for j in 0..n {
            let r = |k: usize| s.coef[k * n + j];
            let a4 = r(3) + th1 * r(4);
            let b3 = r(2) + theta * a4;
            let c2 = r(1) + th1 * b3;
            let db = a4 - theta * r(4);
            let dc = -b3 + th1 * db;
            out[j] = (c2 + theta * dc) / s.h;
        }
        out
    }

    /// Joins two solutions that share an endpoint; `self` must lie to the left.
    pub fn concat(mut self, other: DenseSolution) -> DenseSolution {
        debug_assert_eq!(self.dim, other.dim);
        let (_, b) = self.span();
        let (_, b2) = other.span();
        self.steps.extend(other.steps);
        self.t_end = b2.max(b);
        self.t_start = self.span_min_of_steps();
        self
    }

    fn span_min_of_steps(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.t.min(s.t + s.h))
            .fold(f64::INFINITY, f64::min)
            .min(self.t_start.min(self.t_end))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates from `t0` to `t_end` (either direction). `hook` sees every
/// accepted state and may rewrite it or abort.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &Options,
    mut hook: F,
) -> Result<DenseSolution>
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &mut [f64]) -> StepAction,
{
    let n = sys.dim();
    assert_eq!(y0.len(), n, "initial state has wrong length");
    let mut sol = DenseSolution {
        dim: n,
        t_start: t0,
        t_end,
        steps: Vec::new(),
        y_start: y0.to_vec(),
    };
    if t_end == t0 {
        return Ok(sol);
    }
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    sys.rhs(t, &y, &mut k1);

    let mut h = initial_step(sys, t, &y, &k1, dir, opts).min(span).min(opts.h_max);
    let mut rejected_last = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::Escape { last_time: t, reason: "step budget exhausted" });
        }
        steps += 1;
        let remaining = (t_end - t).abs();
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Escape { last_time: t, reason: "step size underflow" });
        }
        let hs = dir * h;

        for i in 0..n {
            ytmp[i] = y[i] + hs * A21 * k1[i];
        }
        sys.rhs(t + C2 * hs, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * hs, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * hs, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * hs, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + hs };
        sys.rhs(t + hs, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t_new, &ynew, &mut k7);
        for i in 0..n {
            err[i] = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let mut acc = 0.0;
        for i in 0..n {
            let sk = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            let e = err[i] / sk;
            acc += e * e;
        }
        let enorm = libm::sqrt(acc / n as f64);

        if !enorm.is_finite() {
            rejected_last = true;
            h *= 0.2;
            continue;
        }
        let mut fac = 0.9 * libm::pow(enorm.max(1e-300), -0.2);
        fac = fac.clamp(0.2, 10.0);
        if enorm > 1.0 {
            rejected_last = true;
            h *= fac.min(1.0);
            continue;
        }

        let mut coef = vec![0.0; 5 * n];
        for i in 0..n {
            let dy = ynew[i] - y[i];
            let bspl = hs * k1[i] - dy;
            coef[i] = y[i];
            coef[n + i] = dy;
            coef[2 * n + i] = bspl;
            coef[3 * n + i] = dy - hs * k7[i] - bspl;
            coef[4 * n + i] = hs
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        sol.steps.push(DenseStep { t, h: t_new - t, coef });

        t = t_new;
        core::mem::swap(&mut y, &mut ynew);
        core::mem::swap(&mut k1, &mut k7);
        match hook(t, &mut y) {
            StepAction::Continue => {}
            StepAction::Modified => sys.rhs(t, &y, &mut k1),
            StepAction::Abort(reason) => return Err(Error::Escape { last_time: t, reason }),
        }
        if last {
            break;
        }
        if rejected_last {
            fac = fac.min(1.0);
        }
        rejected_last = false;
        h = (h * fac).min(opts.h_max);
    }
    if dir < 0.0 {
        sol.steps.reverse();
    }
    Ok(sol)
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    dir: f64,
    opts: &Options,
) -> f64 {
    let n = y.len();
    let sk: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let rms = |v: &[f64]| {
        libm::sqrt(v.iter().zip(&sk).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n as f64)
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, f)| a + dir * h0 * f).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        libm::pow(0.01 / d1.max(d2), 0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rot;
    impl OdeSystem for Rot {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    #[test]
    fn rotation_and_dense_output() {
        let opts = Options::with_tol(1e-11);
        let sol = integrate(&Rot, 0.0, &[1.0, 0.0], 10.0, &opts, |_, _| StepAction::Continue).unwrap();
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            let y = sol.eval(t);
            assert!((y[0] - libm::cos(t)).abs() < 1e-9, "t={t}");
            assert!((y[1] + libm::sin(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_direction() {
        let opts = Options::with_tol(1e-11);
        let sol = integrate(&Rot, 0.0, &[1.0, 0.0], -3.0, &opts, |_, _| StepAction::Continue).unwrap();
        assert_eq!(sol.span(), (-3.0, 0.0));
        let y = sol.eval(-2.5);
        assert!((y[0] - libm::cos(-2.5)).abs() < 1e-9);
        assert!((y[1] + libm::sin(-2.5)).abs() < 1e-9);
    }
}
