//! Runs behind each subcommand, returning report documents and tables.
//!
//! Nothing here touches the filesystem or the terminal.

use std::collections::BTreeSet;

use gb_core::catalog::{CatalogEntry, SetSpec};
use gb_core::conjugate::{find_conjugate_points, green_bundles, GreenOptions};
use gb_core::flow::{flow_derivative, integrate_jacobi_frame, integrate_orbit, lagrangian_defect, FrameInit, OrbitSegment};
use gb_core::hyperbolicity::{
    cocycle::bundle_norms, decide_theorem_a, decide_theorem_c, exponential_fit, quasi_hyperbolicity_check,
    sacker_sell_dims, sample_invariant_set, CocycleOptions, DimsTriple, QhVerdict, SampledCocycle, TheoremAOptions,
    TheoremAVerdict, TransversalAction, Verdict,
};
use gb_core::index_form::ScanConfig;
use gb_core::linalg;
use gb_core::model::{certify_bounded, GridSpec, PhasePoint, Region};
use gb_core::riccati::{riccati_bound, solve_riccati, verify_bound, RiccatiBound};
use gb_core::Mat;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::parallel::positivity_scan;
use crate::report::*;
use crate::system::SetSource;

/// How a verdict maps onto the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Positive,
    /// A hypothesis of the check fails, or the answer is no.
    Negative,
    Indeterminate,
}

fn flatten(m: &Mat) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

fn entry_names(prefix: &str, rows: usize, cols: usize) -> Vec<String> {
    (0..rows).flat_map(|i| (0..cols).map(move |j| format!("{prefix}{i}{j}"))).collect()
}

fn span_of(start: &PhasePoint, length: f64) -> (f64, f64) {
    let c = start.clock;
    (c.min(c + length), c.max(c + length))
}

/// Uniform times on `span` at spacing about `dt`, endpoints included.
fn sample_times(span: (f64, f64), dt: f64) -> Vec<f64> {
    let n = ((span.1 - span.0) / dt).ceil().max(1.0) as usize;
    (0..=n).map(|i| span.0 + (span.1 - span.0) * i as f64 / n as f64).collect()
}

pub fn orbit(entry: &CatalogEntry, start: &PhasePoint, length: f64, dt: f64, tol: f64) -> CliResult<(OrbitDoc, Table)> {
    let d = entry.dim();
    let span = span_of(start, length);
    let seg = integrate_orbit(entry.hamiltonian(), start, span, tol)?;
    let header = std::iter::once("t".to_string())
        .chain((0..d).map(|i| format!("x{i}")))
        .chain((0..d).map(|i| format!("p{i}")))
        .chain(std::iter::once("H".to_string()));
    let mut table = Table::new(header);
    for t in sample_times(span, dt) {
        let pt = seg.point(t);
        table.push(std::iter::once(t).chain(pt.x.iter().copied()).chain(pt.p.iter().copied()).chain([seg.energy(t)]));
    }
    let doc = OrbitDoc {
        system: entry.name.clone(),
        start: start.into(),
        span,
        tol,
        rows: table.rows.len(),
        energy_drift: seg.energy_drift,
    };
    Ok((doc, table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Vertical,
    Horizontal,
    Full,
}

impl FrameKind {
    fn name(self) -> &'static str {
        match self {
            FrameKind::Vertical => "vertical",
            FrameKind::Horizontal => "horizontal",
            FrameKind::Full => "full",
        }
    }
}

pub fn jacobi(
    entry: &CatalogEntry,
    start: &PhasePoint,
    length: f64,
    kind: FrameKind,
    dt: f64,
    tol: f64,
) -> CliResult<(JacobiDoc, Table)> {
    let d = entry.dim();
    let span = span_of(start, length);
    let seg = integrate_orbit(entry.hamiltonian(), start, span, tol)?;
    let c = start.clock;
    let init = match kind {
        FrameKind::Vertical => FrameInit::vertical(c, d),
        FrameKind::Horizontal => FrameInit::horizontal(c, d),
        FrameKind::Full => FrameInit::full(c, d),
    };
    let frame = integrate_jacobi_frame(&seg, &init, tol)?;
    let cols = frame.columns();
    let header = std::iter::once("t".to_string()).chain(entry_names("h", d, cols)).chain(entry_names("v", d, cols));
    let mut table = Table::new(header);
    for t in sample_times(span, dt) {
        let (h, v) = (frame.h(t), frame.v(t));
        table.push(std::iter::once(t).chain(flatten(&h)).chain(flatten(&v)));
    }
    let end = if length >= 0.0 { span.1 } else { span.0 };
    let defect = if cols == d { lagrangian_defect(&frame.stacked(end)) } else { 0.0 };
    let doc = JacobiDoc {
        system: entry.name.clone(),
        start: start.into(),
        span,
        init: kind.name().to_string(),
        rows: table.rows.len(),
        lagrangian_defect: defect,
    };
    Ok((doc, table))
}

/// Riccati bound from a certificate on the box the orbit visits, padded by one.
pub fn bound_along(entry: &CatalogEntry, seg: &OrbitSegment, span: (f64, f64)) -> CliResult<RiccatiBound> {
    let ham = entry.hamiltonian();
    let pts: Vec<PhasePoint> = seg.grid().iter().map(|&t| seg.point(t)).collect();
    let reach = |f: &dyn Fn(&PhasePoint) -> f64| pts.iter().map(f).fold(0.0, f64::max) + 1.0;
    let x_max = reach(&|p| p.x.amax());
    let p_max = reach(&|p| p.p.amax());
    let t_span = match entry.framework.clock_period() {
        Some(period) if !ham.time_dependence().is_autonomous() => (0.0, period),
        _ => span,
    };
    let region = Region::standard(&ham.space(), x_max, p_max, t_span);
    let cert = certify_bounded(ham.as_ref(), &region, &GridSpec::default())?;
    Ok(riccati_bound(ham.as_ref(), &cert))
}

pub fn riccati(
    entry: &CatalogEntry,
    start: &PhasePoint,
    length: f64,
    dt: f64,
    tol: f64,
) -> CliResult<(RiccatiDoc, Table)> {
    if !(length > 0.0) {
        return Err(CliError::config("window", "window length must be positive"));
    }
    let d = entry.dim();
    let span = span_of(start, length);
    let seg = integrate_orbit(entry.hamiltonian(), start, span, tol)?;
    let frame = integrate_jacobi_frame(&seg, &FrameInit::vertical(start.clock, d), tol)?;
    let sol = solve_riccati(&frame)?;
    let bound = bound_along(entry, &seg, span)?;
    let (check, note) = match verify_bound(&sol, &bound) {
        Ok(r) => (Some(BoundCheckDoc::from(&r)), None),
        Err(e @ gb_core::Error::InsufficientWindow { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let header = std::iter::once("t".to_string())
        .chain(entry_names("s", d, d))
        .chain(["norm", "A", "trimmed", "pass"].map(String::from));
    let mut table = Table::new(header);
    // The bound applies one time unit away from the ends of each interval.
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    for t in sample_times(span, dt) {
        if let (Some(s), Some((a, b))) = (sol.s(t), sol.interval_of(t)) {
            let norm = linalg::spectral_norm(&s);
            let trimmed = t > a + 1.0 && t < b - 1.0;
            let pass = !trimmed || norm < bound.a;
            table.push(std::iter::once(t).chain(flatten(&s)).chain([norm, bound.a, flag(trimmed), flag(pass)]));
        }
    }
    let doc = RiccatiDoc {
        system: entry.name.clone(),
        start: start.into(),
        window: span,
        blowup_times: sol.blowup_times.clone(),
        blowup_multiplicity: sol.blowup_multiplicity.clone(),
        intervals: sol.intervals.clone(),
        bound: (&bound).into(),
        check,
        note,
    };
    Ok((doc, table))
}

pub fn conjugate(entry: &CatalogEntry, start: &PhasePoint, length: f64, tol: f64) -> CliResult<ConjugateDoc> {
    if !(length > 0.0) {
        return Err(CliError::config("window", "window length must be positive"));
    }
    let span = span_of(start, length);
    let seg = integrate_orbit(entry.hamiltonian(), start, span, tol)?;
    let report = find_conjugate_points(&seg, span)?;
    Ok(ConjugateDoc::new(&entry.name, start, &report))
}

pub fn greens(entry: &CatalogEntry, at: &PhasePoint, opts: &GreenOptions) -> CliResult<(GreensDoc, Table)> {
    let g = green_bundles(&entry.hamiltonian(), at, opts)?;
    let mut table = Table::new(["T", "gap"]);
    for h in &g.history {
        if let Some(gap) = h.gap {
            table.push([h.horizon, gap]);
        }
    }
    Ok((GreensDoc::new(&entry.name, &g), table))
}

/// Samples of the chosen set and their time spacing.
pub fn samples(
    entry: &CatalogEntry,
    source: Option<SetSource>,
    spacing: f64,
    max_samples: usize,
    tol: f64,
) -> CliResult<(Vec<PhasePoint>, f64)> {
    let spec = match source {
        Some(SetSource::Explicit { points, step }) => {
            if points.is_empty() || !(step > 0.0) {
                return Err(CliError::config("set_file", "explicit samples need at least one point and a positive step"));
            }
            if points.iter().any(|p| p.dim() != entry.dim()) {
                return Err(CliError::config("set_file", "sample point has wrong dimension"));
            }
            return Ok((points, step));
        }
        Some(SetSource::Spec(spec)) => spec,
        None => entry.default_set.clone(),
    };
    let dim = match &spec {
        SetSpec::Equilibrium { point } => point.dim(),
        SetSpec::PeriodicOrbit { start, .. } => start.dim(),
    };
    if dim != entry.dim() {
        return Err(CliError::config("set_file", "set point has wrong dimension"));
    }
    Ok(sample_invariant_set(&entry.hamiltonian(), &spec, &entry.framework, spacing, max_samples, tol)?)
}

pub fn index(
    entry: &CatalogEntry,
    samples: &[PhasePoint],
    cfg: &ScanConfig,
    workers: usize,
) -> CliResult<(PositivityDoc, Table)> {
    let report = positivity_scan(entry.lagrangian().as_ref(), &entry.hamiltonian(), samples, cfg, workers)?;
    let mut table = Table::new(["sample", "T", "a_min"]);
    for c in &report.cells {
        table.push([c.sample as f64, c.length, c.a_min]);
    }
    Ok(((&report).into(), table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    TheoremA,
    TheoremC,
    Cocycle,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::TheoremA => "theoremA",
            Pipeline::TheoremC => "theoremC",
            Pipeline::Cocycle => "cocycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityOptions {
    pub theorem_a: TheoremAOptions,
    pub cocycle: CocycleOptions,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityDoc {
    pub system: String,
    pub pipeline: &'static str,
    pub samples: Vec<PointDoc>,
    pub step: f64,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_a: Option<TheoremADoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_c: Option<TheoremCDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleDoc>,
}

fn fits_table(stable: Option<&FitDoc>, unstable: Option<&FitDoc>) -> Table {
    let mut table = Table::new(["bundle", "C", "lambda", "residual"]);
    for (label, fit) in [("stable", stable), ("unstable", unstable)] {
        if let Some(f) = fit {
            table.push_labelled(label, [f.c, f.lambda, f.residual]);
        }
    }
    table
}

/// Linearized time-`step` maps over the samples: the transversal action for
/// autonomous systems with `d ≥ 2`, the full flow derivative otherwise.
pub fn flow_cocycle(entry: &CatalogEntry, samples: &[PhasePoint], step: f64, tol: f64) -> CliResult<SampledCocycle> {
    let ham = entry.hamiltonian();
    if entry.framework.uses_transversal_reduction() {
        return Ok(TransversalAction::build(ham, samples.to_vec(), tol)?.sampled_cocycle(step)?);
    }
    let n = samples.len();
    let maps = samples.iter().map(|s| flow_derivative(&ham, s, step, tol)).collect::<gb_core::Result<Vec<_>>>()?;
    let next = (0..n).map(|k| (k + 1) % n).collect();
    let prev = (0..n).map(|k| (k + n - 1) % n).collect();
    Ok(SampledCocycle::new(maps, next, prev, step)?)
}

pub fn hyperbolicity(
    entry: &CatalogEntry,
    samples: &[PhasePoint],
    step: f64,
    pipeline: Pipeline,
    opts: &HyperbolicityOptions,
) -> CliResult<(HyperbolicityDoc, Table, Status)> {
    let ham = entry.hamiltonian();
    let mut doc = HyperbolicityDoc {
        system: entry.name.clone(),
        pipeline: pipeline.name(),
        samples: samples.iter().map(PointDoc::from).collect(),
        step,
        verdict: "",
        theorem_a: None,
        theorem_c: None,
        cocycle: None,
    };
    let (table, status) = match pipeline {
        Pipeline::TheoremA => {
            let r = decide_theorem_a(entry.lagrangian().as_ref(), &ham, samples, &entry.framework, &opts.theorem_a)?;
            let a = TheoremADoc::from(&r);
            let c = a.theorem_c.as_ref();
            let table = fits_table(c.and_then(|c| c.stable_fit.as_ref()), c.and_then(|c| c.unstable_fit.as_ref()));
            doc.verdict = a.verdict;
            doc.theorem_a = Some(a);
            let status = match r.verdict {
                TheoremAVerdict::Hyperbolic => Status::Positive,
                TheoremAVerdict::HypothesisNotSatisfied | TheoremAVerdict::NotHyperbolic => Status::Negative,
                TheoremAVerdict::Indeterminate => Status::Indeterminate,
            };
            (table, status)
        }
        Pipeline::TheoremC => {
            let r = decide_theorem_c(&ham, samples, &entry.framework, &opts.theorem_a.theorem_c)?;
            let c = TheoremCDoc::from(&r);
            let table = fits_table(c.stable_fit.as_ref(), c.unstable_fit.as_ref());
            doc.verdict = c.verdict;
            doc.theorem_c = Some(c);
            (table, verdict_status(r.verdict))
        }
        Pipeline::Cocycle => {
            let cocycle = flow_cocycle(entry, samples, step, opts.tol)?;
            let (c, status) = cocycle_doc(&cocycle, &opts.cocycle)?;
            let table = fits_table(c.stable_fit.as_ref(), c.unstable_fit.as_ref());
            doc.verdict = c.verdict;
            doc.cocycle = Some(c);
            (table, status)
        }
    };
    Ok((doc, table, status))
}

fn verdict_status(v: Verdict) -> Status {
    match v {
        Verdict::Hyperbolic => Status::Positive,
        Verdict::NotHyperbolic => Status::Negative,
        Verdict::Indeterminate => Status::Indeterminate,
    }
}

/// Follows `link` from `k` until a point repeats; returns a point on the
/// cycle reached.
fn cycle_point(link: &[usize], k: usize) -> usize {
    let mut seen = BTreeSet::new();
    let mut j = k;
    while seen.insert(j) {
        j = link[j];
    }
    j
}

fn cycle_members(link: &[usize], start: usize) -> Vec<usize> {
    let mut out = vec![start];
    let mut j = link[start];
    while j != start {
        out.push(j);
        j = link[j];
    }
    out
}

/// Time span of the exponential fits on the bundles at base point 0.
const FIT_SPAN: f64 = 10.0;

/// Quasi-hyperbolicity check with the dimension bookkeeping on the finite
/// base, whose limit sets are the cycles of `next` and `prev`, and the
/// exponential fits of the bundles at base point 0.
pub fn cocycle_doc(cocycle: &SampledCocycle, opts: &CocycleOptions) -> CliResult<(CocycleDoc, Status)> {
    let r = quasi_hyperbolicity_check(cocycle, opts)?;
    let dims = r.dims();
    let triples: Vec<DimsTriple> = (0..dims.len())
        .map(|k| DimsTriple {
            alpha: dims[cycle_point(&cocycle.prev, k)],
            x: dims[k],
            omega: dims[cycle_point(&cocycle.next, k)],
        })
        .collect();
    let mut cycles: BTreeSet<Vec<usize>> = BTreeSet::new();
    for k in 0..dims.len() {
        let mut members = cycle_members(&cocycle.next, cycle_point(&cocycle.next, k));
        members.sort_unstable();
        cycles.insert(members);
    }
    let minimal: Vec<Vec<(usize, usize)>> = cycles.iter().map(|c| c.iter().map(|&k| dims[k]).collect()).collect();
    let sacker_sell = sacker_sell_dims(r.fiber_dim, &triples, &minimal);

    let n = (FIT_SPAN / cocycle.step).ceil().max(2.0) as usize;
    let fit = |basis: &Mat, forward: bool| -> Option<FitDoc> {
        if basis.ncols() == 0 {
            return None;
        }
        exponential_fit(&bundle_norms(cocycle, 0, basis, n, forward)).ok().map(|f| (&f).into())
    };
    let (stable_fit, unstable_fit) = match r.points.first() {
        Some(p) if r.verdict == QhVerdict::QuasiHyperbolic => (fit(&p.es, true), fit(&p.eu, false)),
        _ => (None, None),
    };
    let status = match r.verdict {
        QhVerdict::QuasiHyperbolic => Status::Positive,
        QhVerdict::NotQuasiHyperbolic => Status::Negative,
        QhVerdict::Indeterminate => Status::Indeterminate,
    };
    Ok((CocycleDoc::new(&r, sacker_sell, unstable_fit, stable_fit), status))
}

/// Parses `"a,b;c,d"` into a square matrix.
pub fn parse_matrix(text: &str) -> CliResult<Mat> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::config("matrix", format!("{v:?}: {e}"))))
                .collect()
        })
        .collect::<CliResult<_>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::config("matrix", "matrix must be square"));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

/// Cocycle given by a file of fiber maps over a finite base.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsFile {
    /// One matrix per base point, row by row.
    pub maps: Vec<Vec<Vec<f64>>>,
    /// Successor of each base point; a single cycle when omitted.
    #[serde(default)]
    pub next: Option<Vec<usize>>,
    #[serde(default)]
    pub prev: Option<Vec<usize>>,
    #[serde(default = "unit_step")]
    pub step: f64,
}

fn unit_step() -> f64 {
    1.0
}

impl MapsFile {
    pub fn cocycle(&self) -> CliResult<SampledCocycle> {
        let n = self.maps.len();
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let k = m.len();
                if k == 0 || m.iter().any(|r| r.len() != k) {
                    return Err(CliError::config("maps_file", "every map must be square"));
                }
                Ok(Mat::from_fn(k, k, |i, j| m[i][j]))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let next = self.next.clone().unwrap_or_else(|| (0..n).map(|k| (k + 1) % n).collect());
        let prev = self.prev.clone().unwrap_or_else(|| (0..n).map(|k| (k + n - 1) % n).collect());
        Ok(SampledCocycle::new(maps, next, prev, self.step)?)
    }
}
