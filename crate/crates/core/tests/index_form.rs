use std::f64::consts::PI;
use std::sync::Arc;

use gb_core::catalog;
use gb_core::flow::{integrate_jacobi_frame, integrate_orbit, FrameInit, JacobiFrame, OrbitSegment};
use gb_core::index_form::*;
use gb_core::model::{Lagrangian, PhasePoint};
use gb_core::{Mat, Vector};
use proptest::prelude::*;

fn harmonic_orbit(span: (f64, f64)) -> (catalog::CatalogEntry, gb_core::flow::OrbitSegment) {
    let e = catalog::harmonic();
    let orbit = integrate_orbit(e.hamiltonian(), &e.reference, span, 1e-11).unwrap();
    (e, orbit)
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    for n in 1..8 {
        let rule = gauss_legendre(n);
        for k in 0..2 * n {
            let q: f64 = rule.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
        }
    }
}

#[test]
fn harmonic_a_min_matches_dirichlet_spectrum() {
    let (e, orbit) = harmonic_orbit((0.0, 4.0));
    for &t in &[2.0, 3.0] {
        let space = TestSpace::new(&orbit, 0.0, t, 400, false).unwrap();
        let am = a_min(e.lagrangian().as_ref(), &orbit, &space, &Quadrature::default()).unwrap();
        let exact = e.oracle.a_min(t).unwrap();
        assert!((am.a_min - exact).abs() < 1e-3, "T={t}: {} vs {exact}", am.a_min);
    }
}

#[test]
fn direct_and_factorized_agree_across_a_conjugate_point() {
    let (e, orbit) = harmonic_orbit((0.0, 5.0));
    let frame = integrate_jacobi_frame(&orbit, &FrameInit::vertical(0.0, 1), 1e-11).unwrap();
    let space = TestSpace::new(&orbit, 0.5, 4.0, 16, false).unwrap();
    let c1: Vec<f64> = (0..space.ndof()).map(|i| (0.3 * i as f64).sin()).collect();
    let c2: Vec<f64> = (0..space.ndof()).map(|i| (0.7 * i as f64 + 1.0).cos()).collect();
    let (xi, eta) = (space.field(&c1), space.field(&c2));
    let quad = Quadrature::new(8, 4);
    let direct = index_form_direct(e.lagrangian().as_ref(), &orbit, &xi, &eta, &quad).unwrap();
    let fact = index_form_factorized(&orbit, &frame, &xi, &eta, &quad).unwrap();
    assert!(fact.auxiliary_frames >= 1);
    assert!((direct - fact.value).abs() <= 1e-8 * direct.abs().max(1.0), "{direct} vs {}", fact.value);
}

fn orbit_of(entry: &catalog::CatalogEntry, start: &PhasePoint, span: (f64, f64)) -> OrbitSegment {
    integrate_orbit(entry.hamiltonian(), start, span, 1e-11).unwrap()
}

/// `sin(πt/T)` on `[0, T]`, times `e_0`.
fn sine_field(d: usize, t_len: f64) -> impl VectorField {
    let w = PI / t_len;
    FnField {
        dim: d,
        span: (0.0, t_len),
        value: move |t: f64| Vector::from_fn(d, |i, _| if i == 0 { (w * t).sin() } else { 0.0 }),
        derivative: move |t: f64| Vector::from_fn(d, |i, _| if i == 0 { w * (w * t).cos() } else { 0.0 }),
        breaks: vec![],
    }
}

#[test]
fn closed_form_values() {
    let quad = Quadrature::new(8, 16);
    let free = catalog::free_particle(1);
    let pend = catalog::pendulum();
    for t_len in [1.0, 3.0, 10.0] {
        let o = orbit_of(&free, &PhasePoint::new(&[0.0], &[0.4], 0.0), (0.0, t_len));
        let xi = sine_field(1, t_len);
        let v = index_form_direct(free.lagrangian().as_ref(), &o, &xi, &xi, &quad).unwrap();
        assert!((v - PI * PI / (2.0 * t_len)).abs() < 1e-12);
        // Against a frame that never goes vertical.
        let frame = integrate_jacobi_frame(&o, &FrameInit::horizontal(0.0, 1), 1e-11).unwrap();
        let f = index_form_factorized(&o, &frame, &xi, &xi, &quad).unwrap();
        assert!((f.value - v).abs() < 1e-8 * (1.0 + v.abs()));

        let o = orbit_of(&pend, &pend.reference, (0.0, t_len));
        let v = index_form_direct(pend.lagrangian().as_ref(), &o, &xi, &xi, &quad).unwrap();
        assert!((v - PI * PI / (2.0 * t_len) - t_len / 2.0).abs() < 1e-12);

        let zero = PiecewiseLinearField { knots: vec![0.0, t_len], values: vec![Vector::zeros(1), Vector::zeros(1)] };
        assert_eq!(index_form_direct(pend.lagrangian().as_ref(), &o, &zero, &zero, &quad).unwrap(), 0.0);
    }
}

#[test]
fn disjoint_spans_are_rejected() {
    let pend = catalog::pendulum();
    let o = orbit_of(&pend, &pend.reference, (0.0, 1.0));
    let xi = PiecewiseLinearField { knots: vec![2.0, 3.0], values: vec![Vector::zeros(1), Vector::zeros(1)] };
    let r = index_form_direct(pend.lagrangian().as_ref(), &o, &xi, &xi, &Quadrature::default());
    assert!(matches!(r, Err(gb_core::Error::DisjointSpans)));
}

#[test]
fn jacobi_field_extended_by_zero_has_zero_index() {
    let harm = catalog::harmonic();
    let o = orbit_of(&harm, &harm.reference, (0.0, 5.0));
    let frame = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), 1e-11).unwrap();
    let xi = FrameField {
        pieces: vec![FramePiece { frame: frame.clone(), coeff: Vector::from_element(1, 1.0), interval: (0.0, PI) }],
        span: (0.0, 5.0),
    };
    let quad = Quadrature::new(8, 8);
    let direct = index_form_direct(harm.lagrangian().as_ref(), &o, &xi, &xi, &quad).unwrap();
    assert!(direct.abs() < 1e-9, "{direct}");
    // Against a frame that is nowhere vertical on the span.
    let other = integrate_jacobi_frame(&o, &FrameInit { t: 0.0, h: Mat::identity(1, 1), v: Mat::from_element(1, 1, -0.2) }, 1e-11).unwrap();
    let fact = index_form_factorized(&o, &other, &xi, &xi, &quad).unwrap();
    assert!(fact.value.abs() < 1e-8, "{}", fact.value);
}

#[test]
fn broken_jacobi_field_index() {
    // J = sinh t / sinh T on [0, T] and sinh(2T − t) / sinh T on [T, 2T] at the
    // pendulum equilibrium; the slopes at the corner are ±coth T.
    let pend = catalog::pendulum();
    for t_len in [0.5, 1.0, 3.0] {
        let o = orbit_of(&pend, &pend.reference, (0.0, 2.0 * t_len));
        let ham = pend.hamiltonian();
        let left = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, 1), 1e-11).unwrap();
        let right = JacobiFrame::integrate(
            ham,
            &o.point(2.0 * t_len),
            &Mat::zeros(1, 1),
            &Mat::identity(1, 1),
            (0.0, 2.0 * t_len),
            1e-11,
            false,
        )
        .unwrap();
        let c = 1.0 / t_len.sinh();
        let field = FrameField {
            pieces: vec![
                FramePiece { frame: left, coeff: Vector::from_element(1, c), interval: (0.0, t_len) },
                FramePiece { frame: right, coeff: Vector::from_element(1, -c), interval: (t_len, 2.0 * t_len) },
            ],
            span: (0.0, 2.0 * t_len),
        };
        let i = index_form_direct(pend.lagrangian().as_ref(), &o, &field, &field, &Quadrature::new(8, 16)).unwrap();
        let oracle = 2.0 / t_len.tanh();
        assert!((i - oracle).abs() < 1e-8 * oracle, "T={t_len}: {i} vs {oracle}");
    }
}

#[test]
fn first_variation_reduces_to_boundary_term() {
    let quad = Quadrature::new(8, 32);
    for entry in [catalog::pendulum(), catalog::harmonic(), catalog::double_well()] {
        let o = orbit_of(&entry, &PhasePoint::new(&[0.4], &[0.9], 0.0), (0.0, 6.0));
        for k in 1..4 {
            let w = k as f64 * 0.7;
            let xi = FnField {
                dim: 1,
                span: (0.0, 6.0),
                value: move |t: f64| Vector::from_element(1, (w * t).cos() + 0.3),
                derivative: move |t: f64| Vector::from_element(1, -w * (w * t).sin()),
                breaks: vec![],
            };
            let (integral, boundary) = first_variation(entry.lagrangian().as_ref(), &o, &xi, &quad).unwrap();
            assert!((integral - boundary).abs() < 1e-8 * (1.0 + boundary.abs()), "{}", entry.name);
        }
    }
}

#[test]
fn fem_converges_at_second_order() {
    let free = catalog::free_particle(1);
    let t_len = 2.0;
    let o = orbit_of(&free, &PhasePoint::new(&[0.0], &[0.4], 0.0), (0.0, t_len));
    let exact = PI * PI / (t_len * t_len);
    let err = |n: usize| {
        let space = TestSpace::new(&o, 0.0, t_len, n, false).unwrap();
        a_min(free.lagrangian().as_ref(), &o, &space, &Quadrature::default()).unwrap().a_min - exact
    };
    let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&n| err(n)).collect();
    for w in errs.windows(2) {
        assert!(w[0] > 0.0 && w[1] > 0.0);
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.05, "order {order}");
    }
}

#[test]
fn mesh_refinement_never_raises_a_min() {
    let pend = catalog::pendulum();
    let o = orbit_of(&pend, &PhasePoint::new(&[0.5], &[1.2], 0.0), (0.0, 8.0));
    let mut last = f64::INFINITY;
    for n in [8, 16, 32, 64, 128] {
        let space = TestSpace::new(&o, 0.0, 8.0, n, false).unwrap();
        let a = a_min(pend.lagrangian().as_ref(), &o, &space, &Quadrature::new(6, 1)).unwrap().a_min;
        assert!(a <= last + 1e-10, "n={n}: {a} > {last}");
        last = a;
    }
}

#[test]
fn midpoint_constraint_needs_even_mesh() {
    let pend = catalog::pendulum();
    let o = orbit_of(&pend, &PhasePoint::new(&[0.5], &[1.2], 0.0), (0.0, 4.0));
    assert!(TestSpace::new(&o, 0.0, 4.0, 31, true).is_err());
    let space = TestSpace::new(&o, 0.0, 4.0, 32, true).unwrap();
    assert_eq!(space.ndof(), 30);
    let xi = space.field(&vec![1.0; 30]);
    assert_eq!(xi.value(2.0)[0], 0.0);
}

#[test]
fn disconjugacy_decisions() {
    let harm = catalog::harmonic();
    let o = orbit_of(&harm, &harm.reference, (0.0, 8.0));
    let lag = harm.lagrangian();
    let yes = disconjugacy_via_index(lag.as_ref(), &o, 0.0, PI - 0.1, 256, false).unwrap();
    assert_eq!(yes.verdict, IndexVerdict::Disconjugate);
    assert!(yes.agrees);
    let no = disconjugacy_via_index(lag.as_ref(), &o, 0.0, PI + 0.1, 256, false).unwrap();
    assert_eq!(no.verdict, IndexVerdict::Conjugate);
    assert!(no.agrees && no.a_min < 0.0);

    let pend = catalog::pendulum();
    let o = orbit_of(&pend, &pend.reference, (0.0, 100.0));
    let d = disconjugacy_via_index(pend.lagrangian().as_ref(), &o, 0.0, 100.0, 1024, false).unwrap();
    assert_eq!(d.verdict, IndexVerdict::Disconjugate);
    assert!(d.agrees && d.a_min >= 1.0 - 1e-2);
}

#[test]
fn scan_examples() {
    let cfg = ScanConfig::default();
    let pend = catalog::pendulum();
    let r = uniform_positivity_scan(pend.lagrangian().as_ref(), &pend.hamiltonian(), &[pend.reference.clone()], &cfg).unwrap();
    for cell in &r.cells {
        let exact = pend.oracle.a_min(cell.length).unwrap();
        assert!((cell.a_min - exact).abs() < 1e-4 * exact);
    }
    assert!((r.uniform_a - 1.0).abs() < 1e-2 && r.trend_bounded_below);
    assert!((r.a_inf - 1.0).abs() < 1e-3);

    let free = catalog::free_particle(1);
    let r = uniform_positivity_scan(free.lagrangian().as_ref(), &free.hamiltonian(), &[PhasePoint::new(&[0.0], &[0.3], 0.0)], &cfg)
        .unwrap();
    for cell in &r.cells {
        let exact = PI * PI / (cell.length * cell.length);
        assert!((cell.a_min - exact).abs() < 1e-3 * exact);
    }
    assert!(!r.trend_bounded_below && r.a_inf.abs() < 1e-3);

    let harm = catalog::harmonic();
    let r = uniform_positivity_scan(harm.lagrangian().as_ref(), &harm.hamiltonian(), &[harm.reference.clone()], &cfg).unwrap();
    assert!(r.uniform_a < 0.0 && !r.trend_bounded_below);
    assert!(r.cells.iter().all(|c| c.a_min < 0.0));
}

fn random_fields(space: &TestSpace, seed: &[f64]) -> (PiecewiseLinearField, PiecewiseLinearField, PiecewiseLinearField) {
    let n = space.ndof();
    let pick = |k: usize| -> Vec<f64> { (0..n).map(|i| (seed[k] * (i as f64 + 1.0) + seed[k + 3]).sin()).collect() };
    (space.field(&pick(0)), space.field(&pick(1)), space.field(&pick(2)))
}

fn systems() -> Vec<(Arc<dyn Lagrangian>, OrbitSegment)> {
    let mut out = Vec::new();
    for entry in [catalog::pendulum(), catalog::harmonic(), catalog::double_well(), catalog::mathieu(0.1, 2.0).unwrap()] {
        let o = orbit_of(&entry, &PhasePoint::new(&[0.3], &[0.8], 0.0), (0.0, 5.0));
        out.push((entry.lagrangian(), o));
    }
    let free = catalog::free_particle(2);
    let o = integrate_orbit(free.hamiltonian(), &PhasePoint::new(&[0.0, 1.0], &[0.5, -0.2], 0.0), (0.0, 5.0), 1e-11).unwrap();
    out.push((free.lagrangian(), o));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn bilinear_and_symmetric(seed in prop::collection::vec(0.1f64..3.0, 6), alpha in -2.0f64..2.0) {
        let quad = Quadrature::new(4, 1);
        for (lag, o) in systems() {
            let space = TestSpace::new(&o, 0.0, 5.0, 12, false).unwrap();
            let (xi, eta, zeta) = random_fields(&space, &seed);
            let i = |a: &PiecewiseLinearField, b: &PiecewiseLinearField| index_form_direct(lag.as_ref(), &o, a, b, &quad).unwrap();
            let (ab, ba) = (i(&xi, &eta), i(&eta, &xi));
            prop_assert!((ab - ba).abs() <= 1e-10 * (1.0 + ab.abs()));
            let combo = xi.scaled_sum(alpha, &zeta);
            let lhs = i(&combo, &eta);
            let rhs = alpha * ab + i(&zeta, &eta);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs() + rhs.abs()));
        }
    }

    #[test]
    fn direct_matches_factorized(seed in prop::collection::vec(0.1f64..3.0, 6)) {
        let quad = Quadrature::new(6, 2);
        for (lag, o) in systems() {
            let d = o.dim();
            let frame = integrate_jacobi_frame(&o, &FrameInit::vertical(0.0, d), 1e-11).unwrap();
            let space = TestSpace::new(&o, 0.0, 5.0, 10, false).unwrap();
            let (xi, eta, zeta) = random_fields(&space, &seed);
            for (a, b) in [(&xi, &eta), (&zeta, &zeta)] {
                let direct = index_form_direct(lag.as_ref(), &o, a, b, &quad).unwrap();
                let fact = index_form_factorized(&o, &frame, a, b, &quad).unwrap().value;
                prop_assert!((direct - fact).abs() <= 1e-8 * (1.0 + direct.abs()), "{direct} vs {fact}");
            }
        }
    }
}
