//! Graph transform for invariant subspaces of a linear map.
//!
//! In coordinates adapted to `base ⊕ complement`, a subspace near `base` is
//! the graph of `L: base → complement` and the map acts by
//! `L ↦ (A₂₁ + A₂₂ L)(A₁₁ + A₁₂ L)⁻¹`. Iterates of a suitable power of the
//! map are run to a Cauchy tolerance; the local Lipschitz factor at the limit
//! decides whether the fixed point is attracting.

use alloc::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{monodromy, vector_field};
use crate::linalg;
use crate::model::{Hamiltonian, PhasePoint};
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest power of the map tried.
    pub max_power: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions { tol: 1e-10, max_iter: 500, max_power: 64 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphTransform {
    /// Fixed point in the coordinates of the complement basis.
    pub l: Mat,
    /// Basis of the invariant subspace: `base + complement · L`.
    pub subspace: Mat,
    pub power: usize,
    pub iterations: usize,
    /// Lipschitz factor of the transform at the fixed point.
    pub contraction: f64,
    /// Size of one more application at the fixed point.
    pub final_step: f64,
}

fn blocks(a: &Mat, k: usize) -> (Mat, Mat, Mat, Mat) {
    let n = a.nrows();
    let m = n - k;
    (
        a.view((0, 0), (k, k)).into_owned(),
        a.view((0, k), (k, m)).into_owned(),
        a.view((k, 0), (m, k)).into_owned(),
        a.view((k, k), (m, m)).into_owned(),
    )
}

fn apply(b: &(Mat, Mat, Mat, Mat), l: &Mat) -> Option<Mat> {
    let den = &b.0 + &b.1 * l;
    let inv = linalg::inverse(&den)?;
    Some((&b.2 + &b.3 * l) * inv)
}

fn lipschitz(b: &(Mat, Mat, Mat, Mat), l: &Mat) -> f64 {
    let den = &b.0 + &b.1 * l;
    match linalg::inverse(&den) {
        Some(inv) => {
            let lp = (&b.2 + &b.3 * l) * &inv;
            linalg::spectral_norm(&(&b.3 - &lp * &b.1)) * linalg::spectral_norm(&inv)
        }
        None => f64::INFINITY,
    }
}

/// Attracting invariant graph over `base` (columns) with values in
/// `complement`, for the linear map `map` on `ℝⁿ`.
pub fn graph_transform_fixed_point(map: &Mat, base: &Mat, complement: &Mat, opts: &GraphOptions) -> Result<GraphTransform> {
    let n = map.nrows();
    let k = base.ncols();
    if map.ncols() != n || base.nrows() != n || complement.nrows() != n || k + complement.ncols() != n || k == 0 {
        return Err(Error::invalid("base and complement must split the space"));
    }
    let mut p = Mat::zeros(n, n);
    p.view_mut((0, 0), (n, k)).copy_from(base);
    p.view_mut((0, k), (n, n - k)).copy_from(complement);
    let pinv = linalg::inverse(&p).ok_or(Error::invalid("base and complement are not independent"))?;
    let adapted = &pinv * map * &p;
    if n == k {
        return Ok(GraphTransform {
            l: Mat::zeros(0, k),
            subspace: base.clone(),
            power: 1,
            iterations: 0,
            contraction: 0.0,
            final_step: 0.0,
        });
    }
    let mut power = 1;
    let mut a = adapted.clone();
    let mut last_factor = f64::INFINITY;
    while power <= opts.max_power {
        let scale = linalg::spectral_norm(&a);
        let b = blocks(&(&a / scale), k);
        let mut l = Mat::zeros(n - k, k);
        let mut iterations = 0;
        let mut ok = false;
        while iterations < opts.max_iter {
            iterations += 1;
            let Some(next) = apply(&b, &l) else { break };
            if !next.iter().all(|x| x.is_finite()) {
                break;
            }
            let step = linalg::max_abs(&(&next - &l));
            l = next;
            if step <= opts.tol * (1.0 + linalg::max_abs(&l)) {
                ok = true;
                break;
            }
        }
        if ok {
            let factor = lipschitz(&b, &l);
            last_factor = factor;
            if factor < 1.0 - 1e-9 {
                let final_step = apply(&b, &l).map_or(f64::INFINITY, |m| linalg::max_abs(&(m - &l)));
                let subspace = base + complement * &l;
                return Ok(GraphTransform { l, subspace, power, iterations, contraction: factor, final_step });
            }
        }
        power *= 2;
        a = &a * &a;
    }
    Err(Error::NoContraction { factor: last_factor })
}

/// Invariant splitting `E^s ⊕ ⟨X⟩ ⊕ E^u` of the tangent space along a
/// periodic orbit, lifted from a transversal splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSplitting {
    pub unstable: GraphTransform,
    pub stable: GraphTransform,
    /// Largest principal angle between the lifted bundles and their images
    /// under the return map.
    pub invariance_defect: f64,
}

/// Lifts `es_n`, `eu_n` (columns in `ℕ(θ)`, full coordinates) to subspaces
/// invariant under the return map, as graphs over them with values in
/// the remaining directions (the flow direction among them).
pub fn graph_transform_splitting(
    ham: &Arc<dyn Hamiltonian>,
    theta: &PhasePoint,
    period: f64,
    es_n: &Mat,
    eu_n: &Mat,
    tol: f64,
    opts: &GraphOptions,
) -> Result<FullSplitting> {
    let m = monodromy(ham, theta, period, tol)?;
    let minv = linalg::inverse(&m).ok_or(Error::invalid("singular return map"))?;
    let x = vector_field(ham.as_ref(), theta);
    let lift = |map: &Mat, base: &Mat, other: &Mat| -> Result<GraphTransform> {
        let n = map.nrows();
        let mut known = Mat::zeros(n, base.ncols() + other.ncols() + 1);
        known.view_mut((0, 0), (n, base.ncols())).copy_from(base);
        known.view_mut((0, base.ncols()), (n, other.ncols())).copy_from(other);
        known.set_column(base.ncols() + other.ncols(), &(x.clone() / x.norm()));
        let rest = linalg::orthogonal_complement(&linalg::orthonormal_basis(&known, 1e-12));
        let mut comp = Mat::zeros(n, n - base.ncols());
        let mut c = 0;
        for col in (base.ncols()..known.ncols()).map(|j| known.column(j).into_owned()).chain(rest.column_iter().map(|v| v.into_owned())) {
            if c < comp.ncols() {
                comp.set_column(c, &col);
                c += 1;
            }
        }
        graph_transform_fixed_point(map, base, &comp, opts)
    };
    let unstable = lift(&m, eu_n, es_n)?;
    let stable = lift(&minv, es_n, eu_n)?;
    let defect = [(&m, &unstable.subspace), (&minv, &stable.subspace)]
        .iter()
        .map(|(map, sub)| linalg::subspace_gap(&(*map * *sub), sub))
        .fold(0.0, f64::max);
    Ok(FullSplitting { unstable, stable, invariance_defect: defect })
}
