//! Seeded random property sweeps.
//!
//! All random inputs are drawn up front from a ChaCha stream, then evaluated
//! in parallel; the report is a function of the seed alone.

use gb_core::catalog::CatalogEntry;
use gb_core::conjugate::green_slopes_at;
use gb_core::flow::{integrate_jacobi_frame, integrate_orbit, FrameInit};
use gb_core::index_form::{index_form_direct, index_form_factorized, Quadrature, TestSpace};
use gb_core::linalg;
use gb_core::model::PhasePoint;
use gb_core::riccati::solve_riccati;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CliResult;
use crate::parallel::ordered_map;

/// Settings of the direct-versus-factorized comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationSweep {
    pub fields: usize,
    pub window: (f64, f64),
    pub n_elem: usize,
    pub tol: f64,
}

impl Default for FactorizationSweep {
    fn default() -> Self {
        FactorizationSweep { fields: 100, window: (0.0, 5.0), n_elem: 10, tol: 1e-11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationDoc {
    pub system: String,
    pub start: Vec<f64>,
    pub window: (f64, f64),
    pub fields: usize,
    /// Riccati blowups of the vertical frame inside the window.
    pub blowups: Vec<f64>,
    /// Largest number of auxiliary frames used by one evaluation.
    pub auxiliary_frames: usize,
    /// `max |I_direct − I_factorized| / (|I(ξ,ξ)| |I(η,η)|)^{1/2}`.
    pub max_relative_error: f64,
}

/// Direct and factorized index forms of random FEM field pairs along the
/// orbit through `start`, with the vertical frame at the window start.
pub fn factorization_sweep(
    entry: &CatalogEntry,
    start: &PhasePoint,
    opts: &FactorizationSweep,
    seed: u64,
    workers: usize,
) -> CliResult<FactorizationDoc> {
    let (a, b) = opts.window;
    let ham = entry.hamiltonian();
    let lag = entry.lagrangian();
    let d = entry.dim();
    let orbit = integrate_orbit(ham, start, (a, b), opts.tol)?;
    let frame = integrate_jacobi_frame(&orbit, &FrameInit::vertical(a, d), opts.tol)?;
    let blowups: Vec<f64> =
        solve_riccati(&frame)?.blowup_times.into_iter().filter(|&t| t > a + 1e-7 && t < b).collect();
    let space = TestSpace::new(&orbit, a, b - a, opts.n_elem, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.ndof();
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..opts.fields)
        .map(|_| {
            let xi = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eta = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (xi, eta)
        })
        .collect();
    let quad = Quadrature::new(6, 2);
    let results = ordered_map(workers, &draws, |(cx, cy)| -> gb_core::Result<(f64, usize)> {
        let (xi, eta) = (space.field(cx), space.field(cy));
        let mut worst: f64 = 0.0;
        let mut aux = 0;
        let direct_xx = index_form_direct(lag.as_ref(), &orbit, &xi, &xi, &quad)?;
        let direct_yy = index_form_direct(lag.as_ref(), &orbit, &eta, &eta, &quad)?;
        let scale = (direct_xx.abs() * direct_yy.abs()).sqrt().max(f64::MIN_POSITIVE);
        for (u, v, direct) in [(&xi, &xi, Some(direct_xx)), (&xi, &eta, None), (&eta, &eta, Some(direct_yy))] {
            let direct = match direct {
                Some(x) => x,
                None => index_form_direct(lag.as_ref(), &orbit, u, v, &quad)?,
            };
            let fact = index_form_factorized(&orbit, &frame, u, v, &quad)?;
            aux = aux.max(fact.auxiliary_frames);
            worst = worst.max((direct - fact.value).abs() / scale);
        }
        Ok((worst, aux))
    })??;
    Ok(FactorizationDoc {
        system: entry.name.clone(),
        start: start.x.iter().chain(start.p.iter()).copied().collect(),
        window: opts.window,
        fields: opts.fields,
        blowups,
        auxiliary_frames: results.iter().map(|r| r.1).max().unwrap_or(0),
        max_relative_error: results.iter().map(|r| r.0).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneDoc {
    pub system: String,
    pub pairs: Vec<(f64, f64)>,
    /// Smallest eigenvalue of `S_t − S_s` over all pairs.
    pub min_stable_step: f64,
    /// Smallest eigenvalue of `U_s − U_t` over all pairs.
    pub min_unstable_step: f64,
    /// Smallest eigenvalue of `U_t − S_t`.
    pub min_order: f64,
}

/// Finite-horizon Green slopes at random horizon pairs `s < t` drawn from
/// `range`.
pub fn monotone_sweep(
    entry: &CatalogEntry,
    at: &PhasePoint,
    pairs: usize,
    range: (f64, f64),
    tol: f64,
    seed: u64,
    workers: usize,
) -> CliResult<MonotoneDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64)> = (0..pairs)
        .map(|_| {
            let x: f64 = rng.gen_range(range.0..range.1);
            let y: f64 = rng.gen_range(range.0..range.1);
            (x.min(y), x.max(y))
        })
        .collect();
    let ham = entry.hamiltonian();
    let steps = ordered_map(workers, &draws, |&(s, t)| -> gb_core::Result<(f64, f64, f64)> {
        let (s_s, u_s) = green_slopes_at(&ham, at, s, tol)?;
        let (s_t, u_t) = green_slopes_at(&ham, at, t, tol)?;
        Ok((
            linalg::min_sym_eig(&(&s_t - &s_s)),
            linalg::min_sym_eig(&(&u_s - &u_t)),
            linalg::min_sym_eig(&(&u_t - &s_t)),
        ))
    })??;
    let fold = |f: fn(&(f64, f64, f64)) -> f64| steps.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(MonotoneDoc {
        system: entry.name.clone(),
        pairs: draws,
        min_stable_step: fold(|r| r.0),
        min_unstable_step: fold(|r| r.1),
        min_order: fold(|r| r.2),
    })
}
