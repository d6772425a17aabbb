//! Builtin systems with closed-form facts.
//!
//! Every entry carries a table of known values and an [`Oracle`] that
//! recomputes them from closed forms, independently of the numerical modules.
//!
//! Routing: the pendulum's hyperbolic equilibrium sits on a critical energy
//! level, so it (like every one-degree-of-freedom autonomous entry) is studied
//! in the time-periodic framework with a period-1 suspension of the clock.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mechanical::{MechanicalSystem, Monomial, Potential, TrigTerm};
use crate::model::{ConfigSpace, Hamiltonian, Lagrangian, PhasePoint, TimeDependence};
use crate::Mat;

/// How hyperbolicity questions about an entry are posed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Framework {
    /// Genuinely time-periodic system; the clock period is the forcing period.
    TimePeriodic { period: f64 },
    /// Autonomous one-degree-of-freedom system treated as time-periodic with
    /// the given (arbitrary) clock period.
    Suspension { period: f64 },
    /// Autonomous with `d ≥ 2`: transversal reduction along energy levels.
    Autonomous,
}

impl Framework {
    /// Whether the transversal bundle reduction is used.
    pub fn uses_transversal_reduction(&self) -> bool {
        matches!(self, Framework::Autonomous)
    }

    pub fn clock_period(&self) -> Option<f64> {
        match self {
            Framework::TimePeriodic { period } | Framework::Suspension { period } => Some(*period),
            Framework::Autonomous => None,
        }
    }

    pub fn for_system(td: TimeDependence, d: usize) -> Framework {
        match td {
            TimeDependence::Periodic(period) => Framework::TimePeriodic { period },
            TimeDependence::General => Framework::TimePeriodic { period: 1.0 },
            TimeDependence::Autonomous if d == 1 => Framework::Suspension { period: 1.0 },
            TimeDependence::Autonomous => Framework::Autonomous,
        }
    }
}

/// Description of a default compact invariant set for an entry.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    /// Equilibrium (for time-dependent systems, a point fixed for all clocks).
    Equilibrium { point: PhasePoint },
    /// Periodic orbit through `start` with the given period.
    PeriodicOrbit { start: PhasePoint, period: f64 },
}

/// Closed-form evaluators. These never call into the numerical modules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    /// `ḧ = 0`.
    Free,
    /// `ḧ = −h`.
    Harmonic,
    /// `ḧ = c² h` at an equilibrium.
    Saddle { rate: f64 },
    /// No closed form (forced systems away from zero forcing).
    None,
}

impl Oracle {
    /// `k`-th conjugate time (k ≥ 1) of the reference orbit, if any.
    pub fn conjugate_time(&self, k: usize) -> Option<f64> {
        match self {
            Oracle::Harmonic => Some(k as f64 * PI),
            _ => None,
        }
    }

    /// Stable and unstable Green slopes `(S, U)` at the reference point.
    pub fn green_slopes(&self) -> Option<(f64, f64)> {
        match self {
            Oracle::Free => Some((0.0, 0.0)),
            Oracle::Saddle { rate } => Some((-rate, *rate)),
            _ => None,
        }
    }

    /// Finite-horizon slopes `(S_T, U_T)` from vertical data at `∓T`.
    pub fn green_slopes_at(&self, t: f64) -> Option<(f64, f64)> {
        match self {
            Oracle::Free => Some((-1.0 / t, 1.0 / t)),
            Oracle::Saddle { rate } => {
                let c = rate / libm::tanh(rate * t);
                Some((-c, c))
            }
            _ => None,
        }
    }

    pub fn lyapunov_exponents(&self) -> Option<Vec<f64>> {
        match self {
            Oracle::Free | Oracle::Harmonic => Some(vec![0.0, 0.0]),
            Oracle::Saddle { rate } => Some(vec![-rate, *rate]),
            Oracle::None => None,
        }
    }

    /// Smallest Dirichlet eigenvalue of the index form on a window of length `t`.
    pub fn a_min(&self, t: f64) -> Option<f64> {
        let base = PI * PI / (t * t);
        match self {
            Oracle::Free => Some(base),
            Oracle::Harmonic => Some(base - 1.0),
            Oracle::Saddle { rate } => Some(base + rate * rate),
            Oracle::None => None,
        }
    }
}

/// Table of known values, stored as literals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnownFacts {
    pub conjugate_times: Vec<f64>,
    pub green_slopes: Option<(f64, f64)>,
    pub lyapunov_exponents: Vec<f64>,
    /// `(T, a_min(T))` pairs.
    pub a_min: Vec<(f64, f64)>,
}

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub system: Arc<MechanicalSystem>,
    pub framework: Framework,
    pub reference: PhasePoint,
    pub default_set: SetSpec,
    pub facts: KnownFacts,
    pub oracle: Oracle,
    pub notes: &'static str,
}

impl CatalogEntry {
    pub fn hamiltonian(&self) -> Arc<dyn Hamiltonian> {
        self.system.clone()
    }

    pub fn lagrangian(&self) -> Arc<dyn Lagrangian> {
        self.system.clone()
    }

    pub fn dim(&self) -> usize {
        Lagrangian::dim(self.system.as_ref())
    }

    /// Largest discrepancy between the stored table and the oracle.
    pub fn self_check(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &t) in self.facts.conjugate_times.iter().enumerate() {
            worst = worst.max(match self.oracle.conjugate_time(k + 1) {
                Some(e) => (e - t).abs(),
                None => f64::INFINITY,
            });
        }
        if let Some((s, u)) = self.facts.green_slopes {
            worst = worst.max(match self.oracle.green_slopes() {
                Some((es, eu)) => (es - s).abs().max((eu - u).abs()),
                None => f64::INFINITY,
            });
        }
        if !self.facts.lyapunov_exponents.is_empty() {
            match self.oracle.lyapunov_exponents() {
                Some(ev) if ev.len() == self.facts.lyapunov_exponents.len() => {
                    for (a, b) in ev.iter().zip(&self.facts.lyapunov_exponents) {
                        worst = worst.max((a - b).abs());
                    }
                }
                _ => worst = f64::INFINITY,
            }
        }
        for &(t, a) in &self.facts.a_min {
            worst = worst.max(match self.oracle.a_min(t) {
                Some(e) => (e - a).abs(),
                None => f64::INFINITY,
            });
        }
        worst
    }
}

pub const NAMES: [&str; 5] = ["free_particle", "harmonic", "pendulum", "mathieu", "double_well"];

fn trig(k: &[f64], nu: f64, amplitude: f64, phase: f64) -> TrigTerm {
    TrigTerm { k: k.to_vec(), nu, amplitude, phase }
}

fn parse_args(s: &str) -> Result<(String, Vec<f64>)> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s.to_string(), Vec::new())),
        Some(i) => {
            let name = s[..i].trim().to_string();
            let rest = s[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::UnknownSystem(s.to_string()))?;
            let mut args = Vec::new();
            for a in rest.split(',') {
                let a = a.trim();
                if a.is_empty() {
                    continue;
                }
                args.push(a.parse::<f64>().map_err(|_| Error::UnknownSystem(s.to_string()))?);
            }
            Ok((name, args))
        }
    }
}

/// Looks up `free_particle(d)`, `harmonic`, `pendulum`, `mathieu(q, ω)` or `double_well`.
pub fn get(name: &str) -> Result<CatalogEntry> {
    let (base, args) = parse_args(name)?;
    let unknown = || Error::UnknownSystem(name.to_string());
    match (base.as_str(), args.as_slice()) {
        ("free_particle", []) => Ok(free_particle(1)),
        ("free_particle", [d]) if *d >= 1.0 && *d <= 8.0 && libm::round(*d) == *d => Ok(free_particle(*d as usize)),
        ("harmonic", []) => Ok(harmonic()),
        ("pendulum", []) => Ok(pendulum()),
        ("double_well", []) => Ok(double_well()),
        ("mathieu", []) => mathieu(0.1, 2.0),
        ("mathieu", [q, w]) => mathieu(*q, *w),
        _ => Err(unknown()),
    }
}

pub fn free_particle(d: usize) -> CatalogEntry {
    let sys = MechanicalSystem::new(
        &format!("free_particle({d})"),
        ConfigSpace::torus(d),
        Mat::identity(d, d),
        Potential::default(),
        TimeDependence::Autonomous,
    )
    .expect("valid free particle");
    let mut p = vec![0.0; d];
    p[0] = 1.0;
    let start = PhasePoint::new(&vec![0.0; d], &p, 0.0);
    CatalogEntry {
        name: format!("free_particle({d})"),
        system: Arc::new(sys),
        framework: Framework::for_system(TimeDependence::Autonomous, d),
        reference: start.clone(),
        default_set: SetSpec::PeriodicOrbit { start, period: 2.0 * PI },
        facts: KnownFacts {
            conjugate_times: Vec::new(),
            green_slopes: Some((0.0, 0.0)),
            lyapunov_exponents: vec![0.0, 0.0],
            a_min: vec![
                (5.0, 0.39478417604357434),
                (10.0, 0.09869604401089358),
                (20.0, 0.024674011002723396),
                (40.0, 0.006168502750680849),
            ],
        },
        oracle: Oracle::Free,
        notes: "L = |v|²/2 on the flat torus; orbits along e1 with unit speed.",
    }
}

pub fn harmonic() -> CatalogEntry {
    let sys = MechanicalSystem::new(
        "harmonic",
        ConfigSpace::line(1),
        Mat::identity(1, 1),
        Potential { trig: Vec::new(), poly: vec![Monomial { exponents: vec![2], coeff: 0.5 }] },
        TimeDependence::Autonomous,
    )
    .expect("valid harmonic oscillator");
    let start = PhasePoint::new(&[1.0], &[0.0], 0.0);
    CatalogEntry {
        name: "harmonic".into(),
        system: Arc::new(sys),
        framework: Framework::Suspension { period: 1.0 },
        reference: start.clone(),
        default_set: SetSpec::PeriodicOrbit { start, period: 2.0 * PI },
        facts: KnownFacts {
            conjugate_times: vec![
                3.141592653589793,
                6.283185307179586,
                9.42477796076938,
                12.566370614359172,
                15.707963267948966,
                18.84955592153876,
                21.991148575128552,
                25.132741228718345,
                28.274333882308138,
                31.41592653589793,
            ],
            green_slopes: None,
            lyapunov_exponents: vec![0.0, 0.0],
            a_min: vec![(2.0, 1.4674011002723395), (3.0, 0.09662271123215094)],
        },
        oracle: Oracle::Harmonic,
        notes: "L = (v² − x²)/2 on the line; conjugate points at multiples of π.",
    }
}

pub fn pendulum() -> CatalogEntry {
    let sys = MechanicalSystem::new(
        "pendulum",
        ConfigSpace::torus(1),
        Mat::identity(1, 1),
        Potential { trig: vec![trig(&[1.0], 0.0, 1.0, 0.0)], poly: Vec::new() },
        TimeDependence::Autonomous,
    )
    .expect("valid pendulum");
    let eq = PhasePoint::new(&[0.0], &[0.0], 0.0);
    CatalogEntry {
        name: "pendulum".into(),
        system: Arc::new(sys),
        framework: Framework::Suspension { period: 1.0 },
        reference: eq.clone(),
        default_set: SetSpec::Equilibrium { point: eq },
        facts: KnownFacts {
            conjugate_times: Vec::new(),
            green_slopes: Some((-1.0, 1.0)),
            lyapunov_exponents: vec![-1.0, 1.0],
            a_min: vec![
                (5.0, 1.3947841760435743),
                (10.0, 1.0986960440108936),
                (20.0, 1.0246740110027234),
                (40.0, 1.0061685027506808),
            ],
        },
        oracle: Oracle::Saddle { rate: 1.0 },
        notes: "L = v²/2 − cos x; the inverted equilibrium x = 0 (H = p²/2 + cos x) \
                is hyperbolic but on a critical level, so it is routed through the \
                period-1 suspension.",
    }
}

pub fn double_well() -> CatalogEntry {
    // U = x⁴/4 − x²/2 + 1/4, barrier at x = 0 with U''(0) = −1.
    let sys = MechanicalSystem::new(
        "double_well",
        ConfigSpace::line(1),
        Mat::identity(1, 1),
        Potential {
            trig: Vec::new(),
            poly: vec![
                Monomial { exponents: vec![4], coeff: 0.25 },
                Monomial { exponents: vec![2], coeff: -0.5 },
                Monomial { exponents: vec![0], coeff: 0.25 },
            ],
        },
        TimeDependence::Autonomous,
    )
    .expect("valid double well");
    let eq = PhasePoint::new(&[0.0], &[0.0], 0.0);
    CatalogEntry {
        name: "double_well".into(),
        system: Arc::new(sys),
        framework: Framework::Suspension { period: 1.0 },
        reference: eq.clone(),
        default_set: SetSpec::Equilibrium { point: eq },
        facts: KnownFacts {
            conjugate_times: Vec::new(),
            green_slopes: Some((-1.0, 1.0)),
            lyapunov_exponents: vec![-1.0, 1.0],
            a_min: vec![(10.0, 1.0986960440108936)],
        },
        oracle: Oracle::Saddle { rate: 1.0 },
        notes: "L = v²/2 − (x² − 1)²/4; barrier top x = 0 linearizes to ḧ = h.",
    }
}

/// `L = v²/2 + (1 + q cos ωt) cos x`; the inverted point is `x = π`.
pub fn mathieu(q: f64, omega: f64) -> Result<CatalogEntry> {
    if !(omega > 0.0) || !q.is_finite() {
        return Err(Error::invalid("mathieu needs finite q and omega > 0"));
    }
    let period = 2.0 * PI / omega;
    let mut terms = vec![trig(&[1.0], 0.0, -1.0, 0.0)];
    if q != 0.0 {
        terms.push(trig(&[1.0], omega, -0.5 * q, 0.0));
        terms.push(trig(&[1.0], -omega, -0.5 * q, 0.0));
    }
    let name = format!("mathieu({q}, {omega})");
    let sys = MechanicalSystem::new(
        &name,
        ConfigSpace::torus(1),
        Mat::identity(1, 1),
        Potential { trig: terms, poly: Vec::new() },
        TimeDependence::Periodic(period),
    )?;
    let eq = PhasePoint::new(&[PI], &[0.0], 0.0);
    let (facts, oracle) = if q == 0.0 {
        (
            KnownFacts {
                green_slopes: Some((-1.0, 1.0)),
                lyapunov_exponents: vec![-1.0, 1.0],
                ..KnownFacts::default()
            },
            Oracle::Saddle { rate: 1.0 },
        )
    } else {
        (KnownFacts::default(), Oracle::None)
    };
    Ok(CatalogEntry {
        name,
        system: Arc::new(sys),
        framework: Framework::TimePeriodic { period },
        reference: eq.clone(),
        default_set: SetSpec::Equilibrium { point: eq },
        facts,
        oracle,
        notes: "Parametrically forced inverted pendulum; exponents have no closed \
                form, the monodromy eigenvalues serve as reference.",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_unknown() {
        assert!(get("free_particle(2)").is_ok());
        assert!(get("mathieu(0.1, 2)").is_ok());
        assert!(matches!(get("nosuch"), Err(Error::UnknownSystem(_))));
        assert!(get("free_particle(1.5)").is_err());
    }
}
