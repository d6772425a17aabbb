//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p gb --test acceptance`.
//!
//! Every criterion returns its measurements as a JSON value; the last
//! criterion reruns the others and compares those values byte for byte.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use gb::checks::{factorization_sweep, monotone_sweep, FactorizationSweep};
use gb::pipeline::{self, HyperbolicityOptions, Pipeline};
use gb_core::catalog::{self, CatalogEntry};
use gb_core::conjugate::{find_conjugate_points, green_bundles, green_slopes_at, GreenOptions};
use gb_core::flow::integrate_orbit;
use gb_core::hyperbolicity::{
    ybd_check, CocycleOptions, SampledCocycle, TheoremAOptions, TheoremCOptions,
};
use gb_core::index_form::{disconjugacy_via_index, ScanConfig};
use gb_core::model::{lagrangian_c2_norm, PhasePoint};
use gb_core::Mat;
use serde_json::{json, Value};

const WORKERS: usize = 4;
const SEED: u64 = 20;

struct Outcome {
    pass: bool,
    summary: String,
    doc: Value,
}

fn outcome(pass: bool, summary: String, doc: Value) -> Outcome {
    Outcome { pass, summary, doc }
}

type Criterion = fn() -> Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Least-squares slope of `y` against `x`.
fn slope(data: &[(f64, f64)]) -> f64 {
    let n = data.len() as f64;
    let (sx, sy) = data.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

fn green_convergence() -> Result<Outcome, String> {
    let t0 = Instant::now();
    let e = catalog::pendulum();
    let ham = e.hamiltonian();
    let g = green_bundles(&ham, &e.reference, &GreenOptions { horizon: 20.0, ..Default::default() }).map_err(err)?;
    let (s, u) = (g.s_limit[(0, 0)], g.u_limit[(0, 0)]);
    // Gap between horizons T and 2T, against T.
    let mut logs = Vec::new();
    for t in [2.0, 3.0, 4.0, 5.0, 6.0, 7.0] {
        let (s1, u1) = green_slopes_at(&ham, &e.reference, t, 1e-12).map_err(err)?;
        let (s2, u2) = green_slopes_at(&ham, &e.reference, 2.0 * t, 1e-12).map_err(err)?;
        let gap = (s1[(0, 0)] - s2[(0, 0)]).abs() + (u1[(0, 0)] - u2[(0, 0)]).abs();
        logs.push((t, gap.ln()));
    }
    let k = slope(&logs);
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = (s + 1.0).abs() < 1e-6 && (u - 1.0).abs() < 1e-6 && (k + 2.0).abs() < 0.1 && elapsed < 5.0;
    let summary = format!("S = {s:.9}, U = {u:.9}, gap log-slope {k:.4}, {elapsed:.2} s");
    Ok(outcome(pass, summary, json!({ "S": s, "U": u, "t_used": g.t_used, "log_gaps": logs, "slope": k })))
}

fn conjugate_points() -> Result<Outcome, String> {
    let e = catalog::harmonic();
    let ham = e.hamiltonian();
    let orbit = integrate_orbit(ham.clone(), &e.reference, (0.0, 10.0 * PI + 1.0), 1e-11).map_err(err)?;
    let report = find_conjugate_points(&orbit, (0.0, 10.0 * PI + 0.5)).map_err(err)?;
    let times: Vec<f64> = report.conjugate_times.iter().map(|c| c.time).collect();
    let worst = (1..=10)
        .map(|k| times.get(k - 1).map_or(f64::INFINITY, |t| (t - k as f64 * PI).abs()))
        .fold(0.0, f64::max);
    let mut windows = Vec::new();
    let mut agree = true;
    for k in 1..=5 {
        for length in [k as f64 * PI - 0.1, k as f64 * PI + 0.1] {
            let d = disconjugacy_via_index(e.lagrangian().as_ref(), &orbit, 0.0, length, 512, false).map_err(err)?;
            agree &= d.agrees;
            windows.push(json!({ "T": length, "a_min": d.a_min, "disconjugate": d.conjugate.disconjugate, "agrees": d.agrees }));
        }
    }
    let pass = times.len() >= 10 && worst < 1e-6 && agree;
    let summary = format!("{} conjugate times, max |t_k - k pi| = {worst:.2e}, index agrees on all 10 windows: {agree}", times.len());
    Ok(outcome(pass, summary, json!({ "times": times, "windows": windows })))
}

fn factorization() -> Result<Outcome, String> {
    let mut docs = Vec::new();
    let mut worst: f64 = 0.0;
    let mut crossed = false;
    for name in catalog::NAMES {
        let e = catalog::get(name).map_err(err)?;
        let doc = factorization_sweep(&e, &e.reference, &FactorizationSweep::default(), SEED, WORKERS).map_err(err)?;
        worst = worst.max(doc.max_relative_error);
        crossed |= !doc.blowups.is_empty() && doc.auxiliary_frames > 0;
        docs.push(doc);
    }
    let pass = worst < 1e-8 && crossed;
    let summary = format!("{} systems x 100 fields, max relative error {worst:.2e}, blowup crossed: {crossed}", docs.len());
    Ok(outcome(pass, summary, serde_json::to_value(&docs).map_err(err)?))
}

fn riccati_bound() -> Result<Outcome, String> {
    let mut docs = Vec::new();
    let mut pass = true;
    let mut a_min = f64::INFINITY;
    let mut checked = 0;
    for e in [catalog::pendulum(), catalog::mathieu(0.1, 2.0).map_err(err)?] {
        for (x, p) in [(0.0, 0.0), (PI, 0.0), (1.0, 0.5), (2.0, -1.0), (0.5, 1.5)] {
            let start = PhasePoint::new(&[x], &[p], 0.0);
            let (doc, _) = pipeline::riccati(&e, &start, 10.0, 0.01, 1e-11).map_err(err)?;
            a_min = a_min.min(doc.bound.a);
            match &doc.check {
                Some(c) => {
                    pass &= c.pass;
                    checked += 1;
                }
                // Conjugate points left no interval longer than two.
                None => pass &= doc.intervals.iter().all(|w| w.1 - w.0 <= 2.0),
            }
            docs.push(doc);
        }
    }
    let coth_max = (1..4000).map(|i| 1.0 / (1.0 + 8.0 * i as f64 / 4000.0).tanh()).fold(0.0, f64::max);
    let coth_ok = coth_max <= 1.0 / 1f64.tanh() && (1.0 / 1f64.tanh() - 1.3130).abs() < 1e-4 && 1.0 / 1f64.tanh() <= a_min;
    let pass = pass && coth_ok && checked > 0;
    let summary = format!("{checked} windows checked, smallest A = {a_min:.4}, coth 1 = {:.4} <= A: {coth_ok}", 1.0 / 1f64.tanh());
    Ok(outcome(pass, summary, serde_json::to_value(&docs).map_err(err)?))
}

fn monotone_chain() -> Result<Outcome, String> {
    let mut docs = Vec::new();
    let mut worst = f64::INFINITY;
    let cases: [(CatalogEntry, f64, (f64, f64)); 3] = [
        (catalog::pendulum(), 1e-11, (0.5, 20.0)),
        (catalog::free_particle(2), 1e-11, (0.5, 20.0)),
        (catalog::mathieu(0.1, 2.0).map_err(err)?, 1e-13, (0.5, 10.0)),
    ];
    for (e, tol, range) in &cases {
        let doc = monotone_sweep(e, &e.reference, 200, *range, *tol, SEED, WORKERS).map_err(err)?;
        worst = worst.min(doc.min_stable_step).min(doc.min_unstable_step);
        docs.push(doc);
    }
    let pass = worst >= -1e-8;
    let summary = format!("3 orbits x 200 pairs, smallest eigenvalue of S_t - S_s or U_s - U_t: {worst:.2e}");
    Ok(outcome(pass, summary, serde_json::to_value(&docs).map_err(err)?))
}

fn hyperbolicity_opts(tol: f64) -> HyperbolicityOptions {
    HyperbolicityOptions {
        theorem_a: TheoremAOptions {
            scan: ScanConfig { integ_tol: tol, ..Default::default() },
            theorem_c: TheoremCOptions {
                green: GreenOptions { integ_tol: tol, ..Default::default() },
                integ_tol: tol,
                ..Default::default()
            },
            ..Default::default()
        },
        cocycle: CocycleOptions::default(),
        tol,
    }
}

fn run_pipeline(e: &CatalogEntry, which: Pipeline, tol: f64) -> Result<pipeline::HyperbolicityDoc, String> {
    let (samples, step) = pipeline::samples(e, None, 0.05, 4, tol).map_err(err)?;
    Ok(pipeline::hyperbolicity(e, &samples, step, which, &hyperbolicity_opts(tol)).map_err(err)?.0)
}

fn theorem_a() -> Result<Outcome, String> {
    let t0 = Instant::now();
    let pend = run_pipeline(&catalog::pendulum(), Pipeline::TheoremA, 1e-11)?;
    let a = pend.theorem_a.as_ref().ok_or("missing Theorem A report")?;
    let fits = a.theorem_c.as_ref().map(|c| [c.stable_fit.clone(), c.unstable_fit.clone()]);
    let fits: Vec<_> = fits.into_iter().flatten().flatten().collect();
    let fit_ok = fits.len() == 2 && fits.iter().all(|f| (f.lambda - 1.0).abs() < 0.02 && f.c <= 1.5);
    let uniform = a.positivity.uniform_a;
    let pend_ok = a.verdict == "hyperbolic" && (uniform - 1.0).abs() < 0.02 && fit_ok;

    let free = run_pipeline(&catalog::free_particle(2), Pipeline::TheoremA, 1e-11)?;
    let fa = free.theorem_a.as_ref().ok_or("missing Theorem A report")?;
    let worst_free = fa
        .positivity
        .cells
        .iter()
        .map(|c| {
            let exact = PI * PI / (c.length * c.length);
            (c.a_min - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let free_ok = fa.verdict == "hypothesis_not_satisfied" && worst_free < 0.05 && !fa.positivity.cells.is_empty();
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = pend_ok && free_ok && elapsed < 60.0;
    let lambdas: Vec<String> = fits.iter().map(|f| format!("{:.6}", f.lambda)).collect();
    let cs: Vec<String> = fits.iter().map(|f| format!("{:.4}", f.c)).collect();
    let summary = format!(
        "pendulum {} (a = {uniform:.5}, lambda = [{}], C = [{}]); free particle {} (max a_min deviation {:.2}%); {elapsed:.1} s",
        a.verdict,
        lambdas.join(", "),
        cs.join(", "),
        fa.verdict,
        100.0 * worst_free
    );
    Ok(outcome(pass, summary, json!({ "pendulum": pend, "free_particle": free })))
}

fn theorem_c() -> Result<Outcome, String> {
    let pend = run_pipeline(&catalog::pendulum(), Pipeline::TheoremC, 1e-11)?;
    let free = run_pipeline(&catalog::free_particle(2), Pipeline::TheoremC, 1e-11)?;
    let pc = pend.theorem_c.as_ref().ok_or("missing Theorem C report")?;
    let fc = free.theorem_c.as_ref().ok_or("missing Theorem C report")?;
    let angle = pc.angle_stable.max(pc.angle_unstable);
    let pass = pc.verdict == "hyperbolic" && angle <= 1e-5 && fc.verdict == "not_hyperbolic";
    let summary = format!("pendulum {} (bundle angle {angle:.2e}); free particle on the 2-torus {}", pc.verdict, fc.verdict);
    Ok(outcome(pass, summary, json!({ "pendulum": pend, "free_particle": free })))
}

fn constant(rows: [f64; 4]) -> Result<SampledCocycle, String> {
    SampledCocycle::constant(Mat::from_row_slice(2, 2, &rows), 1.0).map_err(err)
}

fn cocycles() -> Result<Outcome, String> {
    let diag = constant([2.0, 0.0, 0.0, 0.5])?;
    let (d50, _) = pipeline::cocycle_doc(&diag, &CocycleOptions::default()).map_err(err)?;
    let (d100, _) = pipeline::cocycle_doc(&diag, &CocycleOptions { horizon: 100.0, ..Default::default() }).map_err(err)?;
    let fits: Vec<f64> = [&d50.stable_fit, &d50.unstable_fit].iter().filter_map(|f| f.as_ref().map(|f| f.lambda)).collect();
    let drift = (d100.k33 - d50.k33).abs() / d50.k33;
    let diag_ok = d50.verdict == "quasi_hyperbolic"
        && d50.points.iter().all(|p| p.dims == (1, 1))
        && d50.sacker_sell
        && fits.len() == 2
        && fits.iter().all(|l| (l - LN_2).abs() < 0.01 * LN_2)
        && d50.k33.is_finite()
        && drift < 0.05;

    let (s, c) = 0.3f64.sin_cos();
    let (rot, _) = pipeline::cocycle_doc(&constant([c, -s, s, c])?, &CocycleOptions::default()).map_err(err)?;
    let (shear, _) = pipeline::cocycle_doc(&constant([1.0, 1.0, 0.0, 1.0])?, &CocycleOptions::default()).map_err(err)?;
    let pass = diag_ok && rot.verdict == "not_quasi_hyperbolic" && shear.intersection_flagged;
    let summary = format!(
        "diag(2, 1/2) {} (lambda {:?}, K33 {:.4}, drift {:.2e}); rotation {}; shear intersection flagged: {}",
        d50.verdict, fits, d50.k33, drift, rot.verdict, shear.intersection_flagged
    );
    Ok(outcome(pass, summary, json!({ "diag": d50, "diag_doubled": d100, "rotation": rot, "shear": shear })))
}

fn ybd() -> Result<Outcome, String> {
    let e = catalog::pendulum();
    let ham = e.hamiltonian();
    let horizon = 10.0;
    let (samples, _) = pipeline::samples(&e, None, 0.05, 4, 1e-11).map_err(err)?;
    let lc2 = lagrangian_c2_norm(e.lagrangian().as_ref(), &[(0.0, 2.0 * PI)], &[(-3.0, 3.0)], (0.0, 1.0), 9);
    let mut reports = Vec::new();
    let mut pass = true;
    let mut margin = f64::INFINITY;
    for theta in &samples {
        let c = theta.clock;
        let orbit = integrate_orbit(ham.clone(), theta, (c - horizon - 2.0, c + horizon + 2.0), 1e-11).map_err(err)?;
        let bound = pipeline::bound_along(&e, &orbit, orbit.span()).map_err(err)?;
        let y = ybd_check(&ham, lc2, &bound, theta, horizon, 1e-11).map_err(err)?;
        pass &= y.pass && y.disconjugate;
        margin = margin.min(y.min_singular / y.lower_bound);
        reports.push(gb::report::YbdDoc::from(&y));
    }
    let summary = format!(
        "{} samples, min singular {:.4} >= (2AB)^(-1/2) = {:.4} (smallest ratio {margin:.2})",
        reports.len(),
        reports[0].min_singular,
        reports[0].lower_bound
    );
    Ok(outcome(pass, summary, serde_json::to_value(&reports).map_err(err)?))
}

const CRITERIA: [(&str, Criterion); 9] = [
    ("green-bundle convergence", green_convergence),
    ("conjugate points", conjugate_points),
    ("index-form factorization", factorization),
    ("Riccati bound", riccati_bound),
    ("monotone chain", monotone_chain),
    ("Theorem A pipeline", theorem_a),
    ("Theorem C equivalence", theorem_c),
    ("quasi-hyperbolicity suite", cocycles),
    ("projected vertical lower bound", ybd),
];

fn report(index: usize, name: &str, pass: bool, summary: &str) {
    println!("criterion {index:>2} {}: {name}: {summary}", if pass { "PASS" } else { "FAIL" });
}

fn main() {
    let mut failures = 0;
    let mut first_docs = Vec::new();
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        match run() {
            Ok(o) => {
                report(i + 1, name, o.pass, &o.summary);
                failures += usize::from(!o.pass);
                first_docs.push(Some(o.doc.to_string()));
            }
            Err(e) => {
                report(i + 1, name, false, &format!("error: {e}"));
                failures += 1;
                first_docs.push(None);
            }
        }
    }

    let mut differing = Vec::new();
    for (i, (_, run)) in CRITERIA.iter().enumerate() {
        let again = run().ok().map(|o| o.doc.to_string());
        if again.is_none() || again != first_docs[i] {
            differing.push(i + 1);
        }
    }
    let pass = differing.is_empty();
    let summary = if pass {
        "reruns of criteria 1-9 give identical JSON".to_string()
    } else {
        format!("reports differ on rerun for criteria {differing:?}")
    };
    report(10, "determinism", pass, &summary);
    failures += usize::from(!pass);

    println!("{} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
