use std::f64::consts::PI;
use std::sync::Arc;

use gb_core::catalog;
use gb_core::flow::*;
use gb_core::linalg;
use gb_core::model::{Hamiltonian, PhasePoint};
use gb_core::{Error, Mat};
use proptest::prelude::*;

const TOL: f64 = 1e-11;

fn orbit(ham: Arc<dyn Hamiltonian>, x: f64, p: f64, span: (f64, f64)) -> OrbitSegment {
    integrate_orbit(ham, &PhasePoint::new(&[x], &[p], 0.0), span, TOL).unwrap()
}

#[test]
fn orbit_examples() {
    let free = catalog::free_particle(1).hamiltonian();
    let o = orbit(free.clone(), 0.0, 1.0, (0.0, 2.0 * PI));
    let end = o.point_reduced(2.0 * PI);
    assert!(free.space().distance(&end.x, &o.point(0.0).x) < 1e-9);
    assert!((end.p[0] - 1.0).abs() < 1e-14);

    let o = orbit(catalog::pendulum().hamiltonian(), 0.0, 0.0, (0.0, 10.0));
    for t in [1.0, 5.0, 10.0] {
        let pt = o.point(t);
        assert!(pt.x[0].abs() < 1e-14 && pt.p[0].abs() < 1e-14);
    }

    let o = orbit(catalog::harmonic().hamiltonian(), 1.0, 0.0, (0.0, PI / 2.0));
    let pt = o.point(PI / 2.0);
    assert!(pt.x[0].abs() < 1e-9 && (pt.p[0] + 1.0).abs() < 1e-9);
    assert!(o.energy_drift.unwrap() < 1e-9);
}

#[test]
fn frame_examples() {
    let free = catalog::free_particle(2).hamiltonian();
    let o = integrate_orbit(free, &PhasePoint::new(&[0.0, 0.0], &[0.3, -0.2], 0.0), (0.0, 5.0), TOL).unwrap();
    let f = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 2), TOL).unwrap();
    assert!((f.h(3.0) - Mat::identity(2, 2) * 3.0).abs().max() < 1e-10);
    assert!((f.v(3.0) - Mat::identity(2, 2)).abs().max() < 1e-10);

    let o = orbit(catalog::pendulum().hamiltonian(), 0.0, 0.0, (0.0, 5.0));
    let f = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), TOL).unwrap();
    for t in [0.5, 2.0, 5.0] {
        assert!((f.h(t)[(0, 0)] - t.sinh()).abs() < 1e-9 * t.cosh());
        assert!((f.v(t)[(0, 0)] - t.cosh()).abs() < 1e-9 * t.cosh());
    }

    let o = orbit(catalog::harmonic().hamiltonian(), 0.0, 0.0, (0.0, 10.0));
    let f = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), TOL).unwrap();
    for t in [1.0, 4.0, 9.0] {
        assert!((f.h(t)[(0, 0)] - t.sin()).abs() < 1e-9);
    }
}

#[test]
fn vertical_frame_examples() {
    let o = integrate_orbit(
        catalog::free_particle(2).hamiltonian(),
        &PhasePoint::new(&[0.0, 0.0], &[1.0, 0.5], 0.0),
        (0.0, 4.0),
        TOL,
    )
    .unwrap();
    assert!((vertical_frame(&o, 0.0, 4.0).unwrap() - Mat::identity(2, 2) * 4.0).abs().max() < 1e-10);
    let o = orbit(catalog::pendulum().hamiltonian(), 0.0, 0.0, (0.0, 2.0));
    assert!((vertical_frame(&o, 0.0, 2.0).unwrap()[(0, 0)] - 2f64.sinh()).abs() < 1e-9);
    let o = orbit(catalog::harmonic().hamiltonian(), 0.5, 0.0, (0.0, PI));
    assert!(vertical_frame(&o, 0.0, PI).unwrap()[(0, 0)].abs() < 1e-9);
}

#[test]
fn monodromy_examples() {
    let pend = catalog::pendulum().hamiltonian();
    let m = monodromy(&pend, &PhasePoint::new(&[0.0], &[0.0], 0.0), 2.0 * PI, TOL).unwrap();
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = linalg::determinant(&m);
    let disc = (tr * tr / 4.0 - det).sqrt();
    let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
    let e = (2.0 * PI).exp();
    assert!((l1 / e - 1.0).abs() < 1e-8);
    assert!((l1 * l2 - 1.0).abs() < 1e-8);
    assert!((l2 * e - 1.0).abs() < 1e-6);

    let harm = catalog::harmonic().hamiltonian();
    let m = monodromy(&harm, &PhasePoint::new(&[1.0], &[0.0], 0.0), 2.0 * PI, TOL).unwrap();
    assert!((m - Mat::identity(2, 2)).abs().max() < 1e-8);

    let free = catalog::free_particle(1).hamiltonian();
    let m = monodromy(&free, &PhasePoint::new(&[0.0], &[1.0], 0.0), 2.0 * PI, TOL).unwrap();
    let shear = Mat::from_row_slice(2, 2, &[1.0, 2.0 * PI, 0.0, 1.0]);
    assert!((m - shear).abs().max() < 1e-9);

    let err = monodromy(&harm, &PhasePoint::new(&[1.0], &[0.0], 0.0), 3.0, TOL).unwrap_err();
    assert!(matches!(err, Error::NotPeriodic { gap } if gap > 0.1));
}

#[test]
fn escape_is_reported() {
    // U = −x⁴ on the line: x¨ = 4x³ blows up in finite time.
    use gb_core::mechanical::{MechanicalSystem, Monomial, Potential};
    use gb_core::model::{ConfigSpace, TimeDependence};
    let pot = Potential { trig: vec![], poly: vec![Monomial { exponents: vec![4], coeff: -1.0 }] };
    let sys = MechanicalSystem::new("quartic-escape", ConfigSpace::line(1), Mat::identity(1, 1), pot, TimeDependence::Autonomous)
        .unwrap();
    let r = integrate_orbit(Arc::new(sys), &PhasePoint::new(&[1.0], &[2.0], 0.0), (0.0, 10.0), TOL);
    assert!(matches!(r, Err(Error::Escape { .. })));
}

#[test]
fn growth_of_vertical_frames() {
    let o = orbit(catalog::pendulum().hamiltonian(), 0.0, 0.0, (0.0, 4.0));
    let y = vertical_frame(&o, 0.0, 4.0).unwrap();
    assert!(linalg::min_singular(&y) > 10.0);
    let o = integrate_orbit(
        catalog::free_particle(2).hamiltonian(),
        &PhasePoint::new(&[0.0, 0.0], &[0.4, 0.1], 0.0),
        (0.0, 12.0),
        TOL,
    )
    .unwrap();
    assert!(linalg::min_singular(&vertical_frame(&o, 0.0, 12.0).unwrap()) > 10.0);
}

fn hamiltonians() -> Vec<Arc<dyn Hamiltonian>> {
    vec![
        catalog::pendulum().hamiltonian(),
        catalog::harmonic().hamiltonian(),
        catalog::double_well().hamiltonian(),
        catalog::mathieu(0.1, 2.0).unwrap().hamiltonian(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flow_derivative_is_symplectic(x in -1.0f64..1.0, p in -0.5f64..0.5, t in 1.0f64..30.0) {
        for ham in hamiltonians() {
            let phi = flow_derivative(&ham, &PhasePoint::new(&[x], &[p], 0.0), t, TOL).unwrap();
            let j = symplectic_matrix(1);
            let defect = (phi.transpose() * &j * &phi - &j).abs().max();
            let scale = linalg::spectral_norm(&phi).powi(2);
            prop_assert!(defect <= 1e-7 * scale.max(1.0), "defect {defect} scale {scale}");
        }
    }

    #[test]
    fn wronskian_is_constant(x in -1.0f64..1.0, p in -0.5f64..0.5, a in prop::collection::vec(-1.0f64..1.0, 4)) {
        for ham in hamiltonians() {
            let o = integrate_orbit(ham, &PhasePoint::new(&[x], &[p], 0.0), (0.0, 6.0), TOL).unwrap();
            let f1 = integrate_jacobi_frame(&o, &FrameInit { t: 0.0, h: Mat::from_element(1, 1, a[0]), v: Mat::from_element(1, 1, a[1] + 2.0) }, TOL).unwrap();
            let f2 = integrate_jacobi_frame(&o, &FrameInit { t: 0.0, h: Mat::from_element(1, 1, a[2] + 2.0), v: Mat::from_element(1, 1, a[3]) }, TOL).unwrap();
            let w0 = wronskian(&f1, &f2, 0.0);
            for t in [1.5, 3.0, 6.0] {
                let scale = linalg::spectral_norm(&f1.stacked(t)) * linalg::spectral_norm(&f2.stacked(t));
                prop_assert!((wronskian(&f1, &f2, t) - &w0).abs().max() <= 1e-8 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn flow_property(x in -1.0f64..1.0, p in -0.5f64..0.5, a in 0.5f64..4.0, b in 4.5f64..8.0) {
        for ham in hamiltonians() {
            let whole = integrate_orbit(ham.clone(), &PhasePoint::new(&[x], &[p], 0.0), (0.0, b), TOL).unwrap();
            let first = integrate_orbit(ham.clone(), &PhasePoint::new(&[x], &[p], 0.0), (0.0, a), TOL).unwrap();
            let second = integrate_orbit(ham, &first.point(a), (a, b), TOL).unwrap();
            let (u, v) = (whole.point(b), second.point(b));
            let err = ((&u.x - &v.x).norm() + (&u.p - &v.p).norm()) / (1.0 + u.p.norm());
            prop_assert!(err <= 10.0 * TOL, "err {err}");
        }
    }
}
