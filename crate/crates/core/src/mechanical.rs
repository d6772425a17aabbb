//! Mechanical systems `L = ½ vᵀGv − U(x, t)` and a separable quartic-kinetic
//! variant used for exercising the Legendre machinery.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ConfigSpace, Hamiltonian, Lagrangian, TimeDependence};
use crate::{Mat, Vector};

/// `amplitude · cos(k·x + nu·t + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub k: Vec<f64>,
    pub nu: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// `coeff · Π x_i^{e_i}`; only allowed on non-periodic axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Potential {
    pub trig: Vec<TrigTerm>,
    pub poly: Vec<Monomial>,
}

fn powi(x: f64, e: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..e {
        r *= x;
    }
    r
}

impl Potential {
    pub fn validate(&self, space: &ConfigSpace) -> Result<()> {
        let d = space.dim();
        for term in &self.trig {
            if term.k.len() != d {
                return Err(Error::invalid("trig term frequency vector has wrong length"));
            }
            for (i, &per) in space.periodic().iter().enumerate() {
                if per && term.k[i] != libm::round(term.k[i]) {
                    return Err(Error::invalid("trig frequencies on periodic axes must be integers"));
                }
            }
        }
        for m in &self.poly {
            if m.exponents.len() != d {
                return Err(Error::invalid("monomial exponent vector has wrong length"));
            }
            for (i, &per) in space.periodic().iter().enumerate() {
                if per && m.exponents[i] != 0 {
                    return Err(Error::invalid("monomials may not involve periodic axes"));
                }
            }
        }
        Ok(())
    }

    pub fn is_autonomous(&self) -> bool {
        self.trig.iter().all(|t| t.nu == 0.0)
    }

    fn phase_of(term: &TrigTerm, x: &Vector, t: f64) -> f64 {
        term.k.iter().zip(x.iter()).map(|(k, xi)| k * xi).sum::<f64>() + term.nu * t + term.phase
    }

    pub fn value(&self, x: &Vector, t: f64) -> f64 {
        let mut u = 0.0;
        for term in &self.trig {
            u += term.amplitude * libm::cos(Self::phase_of(term, x, t));
        }
        for m in &self.poly {
            u += m.coeff * m.exponents.iter().zip(x.iter()).map(|(&e, &xi)| powi(xi, e)).product::<f64>();
        }
        u
    }

    pub fn grad(&self, x: &Vector, t: f64) -> Vector {
        let d = x.len();
        let mut g = Vector::zeros(d);
        for term in &self.trig {
            let s = libm::sin(Self::phase_of(term, x, t));
            for i in 0..d {
                g[i] -= term.amplitude * term.k[i] * s;
            }
        }
        for m in &self.poly {
            for i in 0..d {
                let e = m.exponents[i];
                if e == 0 {
                    continue;
                }
                let mut prod = m.coeff * e as f64 * powi(x[i], e - 1);
                for j in 0..d {
                    if j != i {
                        prod *= powi(x[j], m.exponents[j]);
                    }
                }
                g[i] += prod;
            }
        }
        g
    }

    pub fn hessian(&self, x: &Vector, t: f64) -> Mat {
        let d = x.len();
        let mut h = Mat::zeros(d, d);
        for term in &self.trig {
            let c = libm::cos(Self::phase_of(term, x, t));
            for i in 0..d {
                for j in 0..d {
                    h[(i, j)] -= term.amplitude * term.k[i] * term.k[j] * c;
                }
            }
        }
        for m in &self.poly {
            for i in 0..d {
                for j in 0..d {
                    let mut e = m.exponents.clone();
                    let mut c = m.coeff;
                    if e[i] == 0 {
                        continue;
                    }
                    c *= e[i] as f64;
                    e[i] -= 1;
                    if e[j] == 0 {
                        continue;
                    }
                    c *= e[j] as f64;
                    e[j] -= 1;
                    h[(i, j)] += c * e.iter().zip(x.iter()).map(|(&k, &xi)| powi(xi, k)).product::<f64>();
                }
            }
        }
        h
    }
}

/// `L = ½ vᵀGv − U(x, t)`, `H = ½ pᵀG⁻¹p + U(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalSystem {
    pub name: String,
    space: ConfigSpace,
    kinetic: Mat,
    kinetic_inv: Mat,
    kinetic_min_eig: f64,
    potential: Potential,
    time_dependence: TimeDependence,
}

impl MechanicalSystem {
    pub fn new(
        name: &str,
        space: ConfigSpace,
        kinetic: Mat,
        potential: Potential,
        time_dependence: TimeDependence,
    ) -> Result<Self> {
        let d = space.dim();
        if kinetic.nrows() != d || kinetic.ncols() != d {
            return Err(Error::invalid("kinetic matrix has wrong shape"));
        }
        if linalg::max_abs(&(&kinetic - kinetic.transpose())) > 1e-12 {
            return Err(Error::invalid("kinetic matrix must be symmetric"));
        }
        let m = linalg::min_sym_eig(&kinetic);
        if !(m > 0.0) {
            return Err(Error::ConvexityViolation { min_eigenvalue: m });
        }
        potential.validate(&space)?;
        if time_dependence.is_autonomous() && !potential.is_autonomous() {
            return Err(Error::invalid("potential depends on time but system is declared autonomous"));
        }
        if let TimeDependence::Periodic(period) = time_dependence {
            if !(period > 0.0) {
                return Err(Error::invalid("period must be positive"));
            }
        }
        let kinetic_inv = linalg::inverse(&kinetic).ok_or(Error::invalid("kinetic matrix is singular"))?;
        Ok(MechanicalSystem {
            name: String::from(name),
            space,
            kinetic,
            kinetic_inv,
            kinetic_min_eig: m,
            potential,
            time_dependence,
        })
    }

    pub fn kinetic(&self) -> &Mat {
        &self.kinetic
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }
}

impl Lagrangian for MechanicalSystem {
    fn space(&self) -> &ConfigSpace {
        &self.space
    }
    fn time_dependence(&self) -> TimeDependence {
        self.time_dependence
    }
    fn value(&self, x: &Vector, v: &Vector, t: f64) -> f64 {
        0.5 * v.dot(&(&self.kinetic * v)) - self.potential.value(x, t)
    }
    fn grad_x(&self, x: &Vector, _v: &Vector, t: f64) -> Vector {
        -self.potential.grad(x, t)
    }
    fn grad_v(&self, _x: &Vector, v: &Vector, _t: f64) -> Vector {
        &self.kinetic * v
    }
    fn hess_xx(&self, x: &Vector, _v: &Vector, t: f64) -> Mat {
        -self.potential.hessian(x, t)
    }
    fn hess_xv(&self, x: &Vector, _v: &Vector, _t: f64) -> Mat {
        Mat::zeros(x.len(), x.len())
    }
    fn hess_vv(&self, _x: &Vector, _v: &Vector, _t: f64) -> Mat {
        self.kinetic.clone()
    }
    fn convexity_floor(&self) -> Option<f64> {
        Some(self.kinetic_min_eig)
    }
}

impl Hamiltonian for MechanicalSystem {
    fn space(&self) -> &ConfigSpace {
        &self.space
    }
    fn time_dependence(&self) -> TimeDependence {
        self.time_dependence
    }
    fn value(&self, x: &Vector, p: &Vector, t: f64) -> f64 {
        0.5 * p.dot(&(&self.kinetic_inv * p)) + self.potential.value(x, t)
    }
    fn grad_x(&self, x: &Vector, _p: &Vector, t: f64) -> Vector {
        self.potential.grad(x, t)
    }
    fn grad_p(&self, _x: &Vector, p: &Vector, _t: f64) -> Vector {
        &self.kinetic_inv * p
    }
    fn hess_xx(&self, x: &Vector, _p: &Vector, t: f64) -> Mat {
        self.potential.hessian(x, t)
    }
    fn hess_xp(&self, x: &Vector, _p: &Vector, _t: f64) -> Mat {
        Mat::zeros(x.len(), x.len())
    }
    fn hess_pp(&self, _x: &Vector, _p: &Vector, _t: f64) -> Mat {
        self.kinetic_inv.clone()
    }
}

/// `L = Σ (α v_i⁴/4 + β v_i²/2) + γ Σ_i v_i cos x_i − U(x, t)`.
///
/// The `γ` term couples velocity and position so that the mixed Hessians are
/// nonzero. Strictly convex when `β > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticLagrangian {
    space: ConfigSpace,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    potential: Potential,
}

impl QuarticLagrangian {
    pub fn new(space: ConfigSpace, alpha: f64, beta: f64, gamma: f64, potential: Potential) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0) {
            return Err(Error::invalid("quartic Lagrangian needs alpha, beta >= 0, not both zero"));
        }
        potential.validate(&space)?;
        if !potential.is_autonomous() {
            return Err(Error::invalid("quartic test Lagrangian is autonomous"));
        }
        Ok(QuarticLagrangian { space, alpha, beta, gamma, potential })
    }
}

impl Lagrangian for QuarticLagrangian {
    fn space(&self) -> &ConfigSpace {
        &self.space
    }
    fn time_dependence(&self) -> TimeDependence {
        TimeDependence::Autonomous
    }
    fn value(&self, x: &Vector, v: &Vector, t: f64) -> f64 {
        let mut l = -self.potential.value(x, t);
        for i in 0..v.len() {
            let vi = v[i];
            l += self.alpha * vi * vi * vi * vi / 4.0 + self.beta * vi * vi / 2.0
                + self.gamma * vi * libm::cos(x[i]);
        }
        l
    }
    fn grad_x(&self, x: &Vector, v: &Vector, t: f64) -> Vector {
        let mut g = -self.potential.grad(x, t);
        for i in 0..v.len() {
            g[i] -= self.gamma * v[i] * libm::sin(x[i]);
        }
        g
    }
    fn grad_v(&self, x: &Vector, v: &Vector, _t: f64) -> Vector {
        Vector::from_fn(v.len(), |i, _| {
            self.alpha * v[i] * v[i] * v[i] + self.beta * v[i] + self.gamma * libm::cos(x[i])
        })
    }
    fn hess_xx(&self, x: &Vector, v: &Vector, t: f64) -> Mat {
        let mut h = -self.potential.hessian(x, t);
        for i in 0..v.len() {
            h[(i, i)] -= self.gamma * v[i] * libm::cos(x[i]);
        }
        h
    }
    fn hess_xv(&self, x: &Vector, v: &Vector, _t: f64) -> Mat {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { -self.gamma * libm::sin(x[i]) } else { 0.0 })
    }
    fn hess_vv(&self, _x: &Vector, v: &Vector, _t: f64) -> Mat {
        Mat::from_fn(v.len(), v.len(), |i, j| {
            if i == j {
                3.0 * self.alpha * v[i] * v[i] + self.beta
            } else {
                0.0
            }
        })
    }
    fn convexity_floor(&self) -> Option<f64> {
        if self.beta > 0.0 {
            Some(self.beta)
        } else {
            None
        }
    }
}
