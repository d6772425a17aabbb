use std::f64::consts::PI;

use gb_core::catalog;
use gb_core::conjugate::green_slopes_at;
use gb_core::flow::{integrate_jacobi_frame, integrate_orbit, FrameInit};
use gb_core::hyperbolicity::ybd_check;
use gb_core::model::{certify_bounded, lagrangian_c2_norm, GridSpec, PhasePoint, Region};
use gb_core::riccati::{riccati_bound, solve_riccati, verify_bound, RiccatiBound};

fn bound_for(entry: &catalog::CatalogEntry) -> RiccatiBound {
    let ham = entry.hamiltonian();
    let period = entry.framework.clock_period().unwrap();
    let region = Region::standard(&ham.space(), 1.0, 3.0, (0.0, period));
    let cert = certify_bounded(ham.as_ref(), &region, &GridSpec::default()).unwrap();
    riccati_bound(ham.as_ref(), &cert)
}

#[test]
fn riccati_bound_holds_on_every_window() {
    for entry in [catalog::pendulum(), catalog::mathieu(0.1, 2.0).unwrap()] {
        let ham = entry.hamiltonian();
        let bound = bound_for(&entry);
        for (x0, p0) in [(0.0, 0.0), (PI, 0.0), (1.0, 0.5), (2.0, -1.0)] {
            let start = PhasePoint::new(&[x0], &[p0], 0.0);
            let orbit = integrate_orbit(ham.clone(), &start, (0.0, 10.0), 1e-11).unwrap();
            let frame = integrate_jacobi_frame(&orbit, &FrameInit::vertical(0.0, 1), 1e-11).unwrap();
            let sol = solve_riccati(&frame).unwrap();
            match verify_bound(&sol, &bound) {
                Ok(report) => assert!(report.pass, "{} from ({x0}, {p0}): {report:?}", entry.name),
                // Conjugate points may leave no window longer than two.
                Err(e) => assert!(sol.intervals.iter().all(|w| w.1 - w.0 <= 2.0), "{e}"),
            }
        }
    }
}

#[test]
fn pendulum_bound_constant() {
    let bound = bound_for(&catalog::pendulum());
    assert!((bound.a_raw - 1.0 / 1f64.tanh()).abs() < 1e-6);
    assert!((bound.a - 1.1 * bound.a_raw).abs() < 1e-12);
}

#[test]
fn vertical_frames_stay_away_from_zero() {
    let entry = catalog::pendulum();
    let ham = entry.hamiltonian();
    let bound = bound_for(&entry);
    let lc2 = lagrangian_c2_norm(entry.lagrangian().as_ref(), &[(0.0, 2.0 * PI)], &[(-3.0, 3.0)], (0.0, 1.0), 9);
    let y = ybd_check(&ham, lc2, &bound, &entry.reference, 10.0, 1e-11).unwrap();
    assert!(y.pass && y.disconjugate);
    assert!((y.lower_bound - 1.0 / (2.0 * y.a * y.b_const).sqrt()).abs() < 1e-15);
    assert!(y.lower_bound > 0.03 && y.lower_bound < 0.07, "{y:?}");
    // |Y(±s)| = sinh s at the equilibrium, smallest at |s| = 1.
    assert!((y.min_singular - 1f64.sinh()).abs() < 1e-6);
    assert!((y.argmin.abs() - 1.0).abs() < 1e-6);
}

#[test]
fn green_gap_decays_like_inverse_sinh() {
    let entry = catalog::pendulum();
    let ham = entry.hamiltonian();
    for t in [2.0, 3.0, 4.0, 5.0, 6.0, 7.0] {
        let (s1, u1) = green_slopes_at(&ham, &entry.reference, t, 1e-12).unwrap();
        let (s2, u2) = green_slopes_at(&ham, &entry.reference, 2.0 * t, 1e-12).unwrap();
        let gap = (s1[(0, 0)] - s2[(0, 0)]).abs() + (u1[(0, 0)] - u2[(0, 0)]).abs();
        let oracle = 2.0 / (2.0 * t).sinh();
        assert!((gap / oracle - 1.0).abs() < 1e-9, "T {t}: {gap:e} vs {oracle:e}");
    }
}
