//! Serializable report documents.
//!
//! Every document is built from the core result types and contains no wall
//! clock data, so identical inputs give byte-identical JSON.

use gb_core::catalog::{CatalogEntry, Framework};
use gb_core::conjugate::{ConjugateReport, GreenBundles};
use gb_core::hyperbolicity::{
    BundleFit, CocycleReport, ExpFit, QhVerdict, TheoremAReport, TheoremAVerdict, TheoremCReport, Verdict, YbdReport,
};
use gb_core::index_form::PositivityReport;
use gb_core::model::{Hamiltonian, PhasePoint, TimeDependence};
use gb_core::riccati::{BoundReport, RiccatiBound};
use gb_core::Mat;
use serde::Serialize;

/// Row-major nested vectors.
pub fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointDoc {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub clock: f64,
}

impl From<&PhasePoint> for PointDoc {
    fn from(p: &PhasePoint) -> Self {
        PointDoc { x: p.x.iter().copied().collect(), p: p.p.iter().copied().collect(), clock: p.clock }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemDoc {
    pub name: String,
    pub dim: usize,
    pub periodicity: Vec<bool>,
    pub time_dependence: String,
    pub framework: String,
    pub reference: PointDoc,
    pub notes: String,
}

impl From<&CatalogEntry> for SystemDoc {
    fn from(e: &CatalogEntry) -> Self {
        let sys = e.system.as_ref();
        let td = match Hamiltonian::time_dependence(sys) {
            TimeDependence::Autonomous => "autonomous".to_string(),
            TimeDependence::Periodic(p) => format!("periodic({p})"),
            TimeDependence::General => "general".to_string(),
        };
        let framework = match e.framework {
            Framework::TimePeriodic { period } => format!("time_periodic({period})"),
            Framework::Suspension { period } => format!("suspension({period})"),
            Framework::Autonomous => "transversal".to_string(),
        };
        SystemDoc {
            name: e.name.clone(),
            dim: e.dim(),
            periodicity: Hamiltonian::space(sys).periodic().to_vec(),
            time_dependence: td,
            framework,
            reference: (&e.reference).into(),
            notes: e.notes.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitDoc {
    pub system: String,
    pub start: PointDoc,
    pub span: (f64, f64),
    pub tol: f64,
    pub rows: usize,
    pub energy_drift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiDoc {
    pub system: String,
    pub start: PointDoc,
    pub span: (f64, f64),
    pub init: String,
    pub rows: usize,
    /// `‖HᵀV − VᵀH‖` at the end of the span.
    pub lagrangian_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundDoc {
    pub b1: f64,
    pub b2: f64,
    pub m: f64,
    pub r: f64,
    pub c_norm: f64,
    pub d_norm: f64,
    pub a_raw: f64,
    pub a: f64,
    pub safety: f64,
}

impl From<&RiccatiBound> for BoundDoc {
    fn from(b: &RiccatiBound) -> Self {
        BoundDoc {
            b1: b.b1,
            b2: b.b2,
            m: b.m,
            r: b.r,
            c_norm: b.c_norm,
            d_norm: b.d_norm,
            a_raw: b.a_raw,
            a: b.a,
            safety: b.safety,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalDoc {
    pub interval: (f64, f64),
    pub max_norm: Option<f64>,
    pub argmax: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckDoc {
    pub intervals: Vec<IntervalDoc>,
    pub max_norm: f64,
    pub argmax: f64,
    pub pass: bool,
    pub per_interval_extension: bool,
}

impl From<&BoundReport> for BoundCheckDoc {
    fn from(r: &BoundReport) -> Self {
        BoundCheckDoc {
            intervals: r
                .intervals
                .iter()
                .map(|c| IntervalDoc { interval: c.interval, max_norm: c.max_norm, argmax: c.argmax, pass: c.pass })
                .collect(),
            max_norm: r.max_norm,
            argmax: r.argmax,
            pass: r.pass,
            per_interval_extension: r.per_interval_extension,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiDoc {
    pub system: String,
    pub start: PointDoc,
    pub window: (f64, f64),
    pub blowup_times: Vec<f64>,
    pub blowup_multiplicity: Vec<usize>,
    pub intervals: Vec<(f64, f64)>,
    pub bound: BoundDoc,
    /// `None` when no interval is longer than two.
    pub check: Option<BoundCheckDoc>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateTimeDoc {
    pub time: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugateDoc {
    pub system: String,
    pub start: PointDoc,
    pub window: (f64, f64),
    pub conjugate_times: Vec<ConjugateTimeDoc>,
    pub disconjugate: bool,
    pub next_after_window: Option<f64>,
    pub margin: f64,
}

impl ConjugateDoc {
    pub fn new(system: &str, start: &PhasePoint, r: &ConjugateReport) -> Self {
        ConjugateDoc {
            system: system.to_string(),
            start: start.into(),
            window: r.window,
            conjugate_times: r
                .conjugate_times
                .iter()
                .map(|c| ConjugateTimeDoc { time: c.time, multiplicity: c.multiplicity })
                .collect(),
            disconjugate: r.disconjugate,
            next_after_window: r.next_after_window,
            margin: r.margin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonDoc {
    pub horizon: f64,
    pub s: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreensDoc {
    pub system: String,
    pub at: PointDoc,
    #[serde(rename = "S_limit")]
    pub s_limit: Vec<Vec<f64>>,
    #[serde(rename = "U_limit")]
    pub u_limit: Vec<Vec<f64>>,
    pub gap: f64,
    #[serde(rename = "T_used")]
    pub t_used: f64,
    pub converged: bool,
    pub history: Vec<HorizonDoc>,
}

impl GreensDoc {
    pub fn new(system: &str, g: &GreenBundles) -> Self {
        GreensDoc {
            system: system.to_string(),
            at: (&g.at).into(),
            s_limit: rows(&g.s_limit),
            u_limit: rows(&g.u_limit),
            gap: g.convergence_gap,
            t_used: g.t_used,
            converged: g.converged,
            history: g
                .history
                .iter()
                .map(|h| HorizonDoc { horizon: h.horizon, s: rows(&h.s), u: rows(&h.u), gap: h.gap })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDoc {
    pub sample: usize,
    #[serde(rename = "T")]
    pub length: f64,
    pub a_min: f64,
    pub floor: f64,
    pub indeterminate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityDoc {
    pub t_scanned: Vec<f64>,
    pub uniform_a: f64,
    pub a_inf: f64,
    pub c: f64,
    pub trend_bounded_below: bool,
    pub indeterminate_cells: usize,
    pub cells: Vec<CellDoc>,
}

impl From<&PositivityReport> for PositivityDoc {
    fn from(r: &PositivityReport) -> Self {
        PositivityDoc {
            t_scanned: r.t_scanned.clone(),
            uniform_a: r.uniform_a,
            a_inf: r.a_inf,
            c: r.c,
            trend_bounded_below: r.trend_bounded_below,
            indeterminate_cells: r.indeterminate_cells,
            cells: r
                .cells
                .iter()
                .map(|c| CellDoc {
                    sample: c.sample,
                    length: c.length,
                    a_min: c.a_min,
                    floor: c.floor,
                    indeterminate: c.indeterminate,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDoc {
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub residual: f64,
    pub halving_time: Option<f64>,
}

impl From<&BundleFit> for FitDoc {
    fn from(f: &BundleFit) -> Self {
        FitDoc { c: f.c, lambda: f.lambda, residual: f.residual, halving_time: f.halving_time }
    }
}

impl From<&ExpFit> for FitDoc {
    fn from(f: &ExpFit) -> Self {
        FitDoc { c: f.c, lambda: f.lambda, residual: f.residual, halving_time: f.halving_time }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CSampleDoc {
    pub min_transversal_eig: f64,
    pub converged: bool,
    #[serde(rename = "T_used")]
    pub t_used: f64,
    pub convergence_gap: f64,
    pub extrapolated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCDoc {
    pub verdict: &'static str,
    pub floor: f64,
    pub angle_stable: f64,
    pub angle_unstable: f64,
    pub samples: Vec<CSampleDoc>,
    pub stable_fit: Option<FitDoc>,
    pub unstable_fit: Option<FitDoc>,
    pub note: Option<String>,
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Hyperbolic => "hyperbolic",
        Verdict::NotHyperbolic => "not_hyperbolic",
        Verdict::Indeterminate => "indeterminate",
    }
}

pub fn theorem_a_verdict_name(v: TheoremAVerdict) -> &'static str {
    match v {
        TheoremAVerdict::Hyperbolic => "hyperbolic",
        TheoremAVerdict::HypothesisNotSatisfied => "hypothesis_not_satisfied",
        TheoremAVerdict::NotHyperbolic => "not_hyperbolic",
        TheoremAVerdict::Indeterminate => "indeterminate",
    }
}

pub fn qh_verdict_name(v: QhVerdict) -> &'static str {
    match v {
        QhVerdict::QuasiHyperbolic => "quasi_hyperbolic",
        QhVerdict::NotQuasiHyperbolic => "not_quasi_hyperbolic",
        QhVerdict::Indeterminate => "indeterminate",
    }
}

impl From<&TheoremCReport> for TheoremCDoc {
    fn from(r: &TheoremCReport) -> Self {
        TheoremCDoc {
            verdict: verdict_name(r.verdict),
            floor: r.floor,
            angle_stable: r.angle_stable,
            angle_unstable: r.angle_unstable,
            samples: r
                .samples
                .iter()
                .map(|s| CSampleDoc {
                    min_transversal_eig: s.min_transversal_eig,
                    converged: s.converged,
                    t_used: s.t_used,
                    convergence_gap: s.convergence_gap,
                    extrapolated: s.extrapolated,
                })
                .collect(),
            stable_fit: r.splitting.as_ref().map(|s| (&s.stable_fit).into()),
            unstable_fit: r.splitting.as_ref().map(|s| (&s.unstable_fit).into()),
            note: r.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrokenSampleDoc {
    pub slope_gap: f64,
    pub l2_min: f64,
    pub consistency: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrokenFieldsDoc {
    pub horizon: f64,
    pub pass: bool,
    pub samples: Vec<BrokenSampleDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremADoc {
    pub verdict: &'static str,
    pub failed_stage: Option<&'static str>,
    pub positivity: PositivityDoc,
    pub broken_fields: Option<BrokenFieldsDoc>,
    pub theorem_c: Option<TheoremCDoc>,
    pub conjugate_times: Vec<f64>,
}

impl From<&TheoremAReport> for TheoremADoc {
    fn from(r: &TheoremAReport) -> Self {
        TheoremADoc {
            verdict: theorem_a_verdict_name(r.verdict),
            failed_stage: r.failed_stage,
            positivity: (&r.positivity).into(),
            broken_fields: r.broken_fields.as_ref().map(|b| BrokenFieldsDoc {
                horizon: b.horizon,
                pass: b.pass,
                samples: b
                    .samples
                    .iter()
                    .map(|s| BrokenSampleDoc {
                        slope_gap: s.slope_gap,
                        l2_min: s.l2_min,
                        consistency: s.consistency,
                        margin: s.margin,
                    })
                    .collect(),
            }),
            theorem_c: r.theorem_c.as_ref().map(|c| c.into()),
            conjugate_times: r.conjugate_times.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocyclePointDoc {
    pub base: usize,
    pub dims: (usize, usize),
    pub angle: f64,
    pub angle_half: f64,
    pub intersection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocycleDoc {
    pub verdict: &'static str,
    pub fiber_dim: usize,
    pub steps: usize,
    #[serde(rename = "K33")]
    pub k33: f64,
    pub intersection_flagged: bool,
    pub growth_ratio: f64,
    pub exponential_growth: bool,
    pub witness: Option<(usize, Vec<f64>)>,
    pub indeterminate_vectors: usize,
    pub points: Vec<CocyclePointDoc>,
    /// Dimension inequalities with every base point as its own α- and ω-limit.
    pub sacker_sell: bool,
    pub unstable_fit: Option<FitDoc>,
    pub stable_fit: Option<FitDoc>,
}

impl CocycleDoc {
    pub fn new(r: &CocycleReport, sacker_sell: bool, unstable_fit: Option<FitDoc>, stable_fit: Option<FitDoc>) -> Self {
        CocycleDoc {
            verdict: qh_verdict_name(r.verdict),
            fiber_dim: r.fiber_dim,
            steps: r.steps,
            k33: r.k33,
            intersection_flagged: r.intersection_flagged,
            growth_ratio: r.growth_ratio,
            exponential_growth: r.exponential_growth,
            witness: r.witness.clone(),
            indeterminate_vectors: r.indeterminate.len(),
            points: r
                .points
                .iter()
                .map(|p| CocyclePointDoc {
                    base: p.base,
                    dims: p.dims,
                    angle: p.angle,
                    angle_half: p.angle_half,
                    intersection: p.intersection,
                })
                .collect(),
            sacker_sell,
            unstable_fit,
            stable_fit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YbdDoc {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b_const: f64,
    pub lower_bound: f64,
    pub min_singular: f64,
    pub argmin: f64,
    pub disconjugate: bool,
    pub pass: bool,
}

impl From<&YbdReport> for YbdDoc {
    fn from(y: &YbdReport) -> Self {
        YbdDoc {
            a: y.a,
            b_const: y.b_const,
            lower_bound: y.lower_bound,
            min_singular: y.min_singular,
            argmin: y.argmin,
            disconjugate: y.disconjugate,
            pass: y.pass,
        }
    }
}

/// A time series or small result table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(|v| v.to_string()).collect());
    }

    pub fn push_labelled(&mut self, label: &str, row: impl IntoIterator<Item = f64>) {
        self.rows.push(core::iter::once(label.to_string()).chain(row.into_iter().map(|v| v.to_string())).collect());
    }

    /// Comma separated, or whitespace separated with a `#` header line for
    /// gnuplot.
    pub fn render(&self, plot_data: bool) -> String {
        let (sep, lead) = if plot_data { (" ", "# ") } else { (",", "") };
        let mut out = format!("{lead}{}\n", self.header.join(sep));
        for row in &self.rows {
            out.push_str(&row.join(sep));
            out.push('\n');
        }
        out
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("reports serialize");
    s.push('\n');
    s
}
