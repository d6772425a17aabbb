//! Transversal bundle along regular energy levels of autonomous systems.
//!
//! `ℕ(θ)` is the set of tangent vectors to the energy level whose projection
//! is orthogonal to the projected vector field. The induced action is
//! `Ψ_t = ℙ ∘ dψ_t`, with `ℙ` the projection onto `ℕ` along the flow
//! direction.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::{flow_derivative, integrate_orbit, vector_field};
use crate::hyperbolicity::cocycle::SampledCocycle;
use crate::linalg;
use crate::model::{Hamiltonian, PhasePoint, TimeDependence};
use crate::Mat;

/// Projected speeds below this make the transversal bundle undefined.
const MIN_SPEED: f64 = 1e-10;

/// Orthonormal basis (`2d × (2d−2)`) of `ℕ(θ)`; `sample` labels the error.
pub fn transversal_basis(ham: &dyn Hamiltonian, pt: &PhasePoint, sample: usize) -> Result<Mat> {
    let d = ham.dim();
    let xdot = ham.grad_p(&pt.x, &pt.p, pt.clock);
    if xdot.norm() <= MIN_SPEED {
        return Err(Error::SingularProjection { sample });
    }
    let mut c = Mat::zeros(2 * d, 2);
    c.view_mut((0, 0), (d, 1)).copy_from(&ham.grad_x(&pt.x, &pt.p, pt.clock));
    c.view_mut((d, 0), (d, 1)).copy_from(&xdot);
    c.view_mut((0, 1), (d, 1)).copy_from(&xdot);
    if linalg::min_singular(&c) <= 1e-12 * linalg::spectral_norm(&c) {
        return Err(Error::SingularProjection { sample });
    }
    Ok(linalg::orthogonal_complement(&c))
}

/// `ℙ = I − X (ẋ, 0)ᵀ / |ẋ|²`: removes the component along `X` measured by
/// the projected velocity.
pub fn transversal_projection(ham: &dyn Hamiltonian, pt: &PhasePoint) -> Mat {
    let d = ham.dim();
    let x = vector_field(ham, pt);
    let xdot = x.rows(0, d).into_owned();
    let mut row = Mat::zeros(1, 2 * d);
    row.view_mut((0, 0), (1, d)).copy_from(&xdot.transpose());
    Mat::identity(2 * d, 2 * d) - &x * row / xdot.norm_squared()
}

/// Transversal action on a finite sample of points.
pub struct TransversalAction {
    ham: Arc<dyn Hamiltonian>,
    tol: f64,
    pub samples: Vec<PhasePoint>,
    pub bases: Vec<Mat>,
    /// Smallest singular value of `[N, X/|X|]` at each sample.
    pub conditioning: Vec<f64>,
    pub fiber_dim: usize,
    pub notice: Option<&'static str>,
}

impl TransversalAction {
    pub fn build(ham: Arc<dyn Hamiltonian>, samples: Vec<PhasePoint>, tol: f64) -> Result<Self> {
        if ham.time_dependence() != TimeDependence::Autonomous {
            return Err(Error::invalid("the transversal reduction needs an autonomous system"));
        }
        let d = ham.dim();
        let mut bases = Vec::with_capacity(samples.len());
        let mut conditioning = Vec::with_capacity(samples.len());
        for (i, pt) in samples.iter().enumerate() {
            let n = transversal_basis(ham.as_ref(), pt, i)?;
            let x = vector_field(ham.as_ref(), pt);
            let mut comb = Mat::zeros(2 * d, n.ncols() + 1);
            comb.view_mut((0, 0), (2 * d, n.ncols())).copy_from(&n);
            comb.set_column(n.ncols(), &(x.clone() / x.norm()));
            conditioning.push(linalg::min_singular(&comb));
            bases.push(n);
        }
        let fiber_dim = 2 * d - 2;
        let notice = (fiber_dim == 0).then_some("one degree of freedom: the transversal bundle is trivial");
        Ok(TransversalAction { ham, tol, samples, bases, conditioning, fiber_dim, notice })
    }

    pub fn hamiltonian(&self) -> &Arc<dyn Hamiltonian> {
        &self.ham
    }

    /// Matrix of `Ψ_t` from `ℕ(θ)` to `ℕ(ψ_t θ)` in the orthonormal bases.
    pub fn psi(&self, theta: &PhasePoint, t: f64) -> Result<Mat> {
        let h = self.ham.as_ref();
        let n0 = transversal_basis(h, theta, 0)?;
        if self.fiber_dim == 0 {
            return Ok(Mat::zeros(0, 0));
        }
        let end = self.flow_point(theta, t)?;
        let n1 = transversal_basis(h, &end, 0)?;
        let dpsi = flow_derivative(&self.ham, theta, t, self.tol)?;
        Ok(n1.transpose() * transversal_projection(h, &end) * dpsi * n0)
    }

    pub fn flow_point(&self, theta: &PhasePoint, t: f64) -> Result<PhasePoint> {
        let t1 = theta.clock + t;
        let orbit = integrate_orbit(self.ham.clone(), theta, (theta.clock.min(t1), theta.clock.max(t1)), self.tol)?;
        Ok(orbit.point(t1))
    }

    /// Cocycle of time-`step` maps, assuming sample `k+1` is the time-`step`
    /// image of sample `k` and the last wraps to the first (a periodic orbit).
    pub fn sampled_cocycle(&self, step: f64) -> Result<SampledCocycle> {
        let n = self.samples.len();
        let maps = self.samples.iter().map(|s| self.psi(s, step)).collect::<Result<Vec<_>>>()?;
        let next = (0..n).map(|k| (k + 1) % n).collect();
        let prev = (0..n).map(|k| (k + n - 1) % n).collect();
        SampledCocycle::new(maps, next, prev, step)
    }
}
