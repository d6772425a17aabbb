use std::f64::consts::PI;
use std::sync::Arc;

use gb_core::catalog;
use gb_core::conjugate::*;
use gb_core::flow::*;
use gb_core::linalg;
use gb_core::model::{Hamiltonian, PhasePoint};
use gb_core::{Error, Mat};

const TOL: f64 = 1e-11;

fn at(x: &[f64], p: &[f64]) -> PhasePoint {
    PhasePoint::new(x, p, 0.0)
}

/// Point at time `t` on the upper separatrix of `p²/2 + cos x`, which passes
/// `x = π` at `t = 0`.
fn separatrix(t: f64) -> PhasePoint {
    PhasePoint::new(&[4.0 * t.exp().atan()], &[2.0 / t.cosh()], t)
}

fn homoclinic() -> PhasePoint {
    separatrix(0.0)
}

#[test]
fn conjugate_time_examples() {
    let o = integrate_orbit(catalog::harmonic().hamiltonian(), &at(&[0.0], &[1.0]), (0.0, 10.0), TOL).unwrap();
    let r = find_conjugate_points(&o, (0.0, 10.0)).unwrap();
    assert!(!r.disconjugate);
    assert_eq!(r.conjugate_times.len(), 3);
    for (k, c) in r.conjugate_times.iter().enumerate() {
        assert!((c.time - (k + 1) as f64 * PI).abs() < 1e-8);
        assert_eq!(c.multiplicity, 1);
    }

    let o = integrate_orbit(catalog::pendulum().hamiltonian(), &at(&[0.0], &[0.0]), (0.0, 100.0), TOL).unwrap();
    let r = find_conjugate_points(&o, (0.0, 100.0)).unwrap();
    assert!(r.disconjugate && r.margin() >= 100.0);

    let o = integrate_orbit(catalog::free_particle(2).hamiltonian(), &at(&[0.0, 0.0], &[0.3, 0.1]), (0.0, 100.0), TOL)
        .unwrap();
    assert!(find_conjugate_points(&o, (0.0, 100.0)).unwrap().disconjugate);

    // Starting mid-orbit measures conjugacy to the window start.
    let o = integrate_orbit(catalog::harmonic().hamiltonian(), &at(&[0.0], &[1.0]), (0.0, 5.0), TOL).unwrap();
    let r = find_conjugate_points(&o, (1.0, 5.0)).unwrap();
    assert!((r.conjugate_times[0].time - (1.0 + PI)).abs() < 1e-8);
}

#[test]
fn green_bundle_examples() {
    let pend = catalog::pendulum().hamiltonian();
    let g = green_bundles(&pend, &at(&[0.0], &[0.0]), &GreenOptions { horizon: 4.0, ..Default::default() }).unwrap();
    assert!(g.converged);
    assert!((g.s_limit[(0, 0)] + 1.0).abs() < 1e-8 && (g.u_limit[(0, 0)] - 1.0).abs() < 1e-8);
    for pair in g.history.windows(2) {
        let oracle = 2.0 / (2.0 * pair[0].horizon).sinh();
        assert!((pair[1].gap.unwrap() - oracle).abs() < 1e-6 * oracle + 1e-12);
        assert!((pair[1].s[(0, 0)] + 1.0 / pair[1].horizon.tanh()).abs() < 1e-9);
    }

    let free = catalog::free_particle(1).hamiltonian();
    let g = green_bundles(&free, &at(&[0.0], &[0.5]), &GreenOptions::default()).unwrap();
    assert!(!g.converged);
    assert_eq!(g.t_used, 160.0);
    assert!((g.s_limit[(0, 0)] + 1.0 / 160.0).abs() < 1e-9 && (g.u_limit[(0, 0)] - 1.0 / 160.0).abs() < 1e-9);

    let harm = catalog::harmonic().hamiltonian();
    let err = green_bundles(&harm, &at(&[0.5], &[0.0]), &GreenOptions::default()).unwrap_err();
    assert!(matches!(err, Error::DisconjugacyViolation { .. }));
}

#[test]
fn green_chain_is_monotone() {
    let cases: Vec<(Arc<dyn Hamiltonian>, PhasePoint)> = vec![
        (catalog::pendulum().hamiltonian(), at(&[0.0], &[0.0])),
        (catalog::pendulum().hamiltonian(), homoclinic()),
        (catalog::free_particle(2).hamiltonian(), at(&[0.0, 0.0], &[0.4, -0.2])),
    ];
    for (ham, pt) in cases {
        let slopes: Vec<(Mat, Mat)> =
            [0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&t| green_slopes_at(&ham, &pt, t, TOL).unwrap()).collect();
        for w in slopes.windows(2) {
            let (s_s, u_s) = &w[0];
            let (s_t, u_t) = &w[1];
            assert!(linalg::min_sym_eig(&(s_t - s_s)) >= -1e-8);
            assert!(linalg::min_sym_eig(&(u_s - u_t)) >= -1e-8);
            assert!(linalg::min_sym_eig(&(u_t - s_t)) >= -1e-8);
        }
    }
}

fn transported_slope(phi: &Mat, s: &Mat) -> Mat {
    let img = phi * graph_basis(s);
    let d = s.nrows();
    img.rows(d, d) * linalg::inverse(&img.rows(0, d).into_owned()).unwrap()
}

#[test]
fn green_bundles_are_invariant() {
    // The separatrix is unstable under integration, so slopes are taken at a
    // fixed horizon rather than by doubling. Both bundles there are tangent
    // to the orbit, with slope −tanh τ. Away from θ the slopes settle more
    // slowly, so the horizon at ψ_τ(θ) grows with |τ|. Each bundle is moved in the time
    // direction that contracts it, which is the same invariance statement.
    // The bundles coincide here, so transport amplifies errors by e^{2|τ|}
    // and |τ| stays at most 3; the equilibrium test below covers τ = 5.
    let pend = catalog::pendulum().hamiltonian();
    let theta = homoclinic();
    for tau in [1.0, 2.0, 3.0, -1.5, -3.0] {
        let horizon = 10.0 + 2.0 * f64::abs(tau);
        let (s0, u0) = green_slopes_at(&pend, &theta, 12.0, 1e-13).unwrap();
        let moved = separatrix(tau);
        let (s1, u1) = green_slopes_at(&pend, &moved, horizon, 1e-13).unwrap();
        assert!((s1[(0, 0)] + tau.tanh()).abs() < 5e-6 && (u1[(0, 0)] + tau.tanh()).abs() < 5e-6);
        let forward = flow_derivative(&pend, &theta, tau, 1e-13).unwrap();
        let backward = flow_derivative(&pend, &moved, -tau, 1e-13).unwrap();
        let (pushed, pulled) = if tau > 0.0 {
            ((transported_slope(&forward, &u0) - &u1), (transported_slope(&backward, &s1) - &s0))
        } else {
            ((transported_slope(&forward, &s0) - &s1), (transported_slope(&backward, &u1) - &u0))
        };
        assert!(pushed.abs().max() < 5e-6 && pulled.abs().max() < 5e-6, "tau {tau}");
    }
}

#[test]
fn green_bundles_at_equilibrium_are_invariant() {
    let pend = catalog::pendulum().hamiltonian();
    let theta = at(&[0.0], &[0.0]);
    let g = green_bundles(&pend, &theta, &GreenOptions::default()).unwrap();
    let phi = flow_derivative(&pend, &theta, 5.0, TOL).unwrap();
    for (basis, slope) in [(g.stable_basis(), -1.0), (g.unstable_basis(), 1.0)] {
        let img = &phi * basis;
        assert!((img[(1, 0)] / img[(0, 0)] - slope).abs() < 5e-6);
    }
}

#[test]
fn flow_direction_lies_in_both_bundles() {
    let pend = catalog::pendulum().hamiltonian();
    let theta = homoclinic();
    let (s, u) = green_slopes_at(&pend, &theta, 10.0, TOL).unwrap();
    let x = vector_field(pend.as_ref(), &theta);
    let xv = x.rows(0, 1).into_owned();
    let xp = x.rows(1, 1).into_owned();
    for s in [&s, &u] {
        let defect = (&xp - s * &xv).norm() / x.norm();
        assert!(defect < 1e-4, "defect {defect}");
    }
}

#[test]
fn reconstruction_examples() {
    let pend = catalog::pendulum().hamiltonian();
    let o = integrate_orbit(pend.clone(), &at(&[0.0], &[0.0]), (0.0, 15.0), TOL).unwrap();
    let f1 = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), TOL).unwrap();

    let two = Mat::from_element(1, 1, 2.0);
    let r = jform_reconstruct(&f1, &Mat::zeros(1, 1), &two, IntegralBase::At(1.0), (1.0, 5.0)).unwrap();
    for (i, &t) in r.times.iter().enumerate() {
        assert!((&r.h[i] - f1.h(t) * 2.0).abs().max() < 1e-12 * f1.h(t).norm());
        assert!((&r.v[i] - f1.v(t) * 2.0).abs().max() < 1e-12 * f1.v(t).norm());
    }

    let k = Mat::from_element(1, 1, -1.0);
    let r = jform_reconstruct(&f1, &k, &Mat::zeros(1, 1), IntegralBase::Infinity { cap: 15.0 }, (1.0, 5.0)).unwrap();
    assert!(r.lagrangian && r.tail_bound.unwrap() < 1e-10);
    for (i, &t) in r.times.iter().enumerate() {
        assert!((r.h[i][(0, 0)] - (-t).exp()).abs() < 1e-9, "t {t}");
        assert!((r.v[i][(0, 0)] / r.h[i][(0, 0)] + 1.0).abs() < 1e-6);
        let w = f1.h(t).transpose() * &r.v[i] - f1.v(t).transpose() * &r.h[i];
        assert!((w - &k).abs().max() < 1e-8);
    }

    let free = catalog::free_particle(1).hamiltonian();
    let o = integrate_orbit(free, &at(&[0.0], &[0.2]), (0.0, 6.0), TOL).unwrap();
    let f1 = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), TOL).unwrap();
    let d = Mat::from_element(1, 1, 1.0);
    let r = jform_reconstruct(&f1, &k, &d, IntegralBase::At(1.0), (1.0, 6.0)).unwrap();
    for (i, &t) in r.times.iter().enumerate() {
        // t·[1 − ∫₁ᵗ ds/s²] = 1 and the velocity part vanishes.
        assert!((r.h[i][(0, 0)] - 1.0).abs() < 1e-9 && r.v[i][(0, 0)].abs() < 1e-9, "t {t}");
        let w = f1.h(t).transpose() * &r.v[i] - f1.v(t).transpose() * &r.h[i];
        assert!((w - &k).abs().max() < 1e-8);
    }

    let harm = catalog::harmonic().hamiltonian();
    let o = integrate_orbit(harm, &at(&[0.0], &[1.0]), (0.0, 5.0), TOL).unwrap();
    let f1 = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), TOL).unwrap();
    let err = jform_reconstruct(&f1, &k, &d, IntegralBase::At(1.0), (1.0, 4.0)).unwrap_err();
    assert!(matches!(err, Error::ReconstructionDomain { .. }));
}
