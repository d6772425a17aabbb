//! System definition files (JSON or TOML) and resolution of `--system`.
//!
//! A mechanical definition describes `L = ½ vᵀGv − U(x, t)` with `U` a sum
//! of `amplitude · cos(k·x + nu·t + phase)` terms and, on non-periodic axes,
//! monomials. Builtin entries can be referenced by name or exported.

use std::path::Path;
use std::sync::Arc;

use gb_core::catalog::{self, CatalogEntry, Framework, KnownFacts, Oracle, SetSpec};
use gb_core::mechanical::{MechanicalSystem, Monomial, Potential, TrigTerm};
use gb_core::model::{ConfigSpace, Hamiltonian, PhasePoint, TimeDependence};
use gb_core::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemFile {
    /// A catalog entry, e.g. `name = "mathieu(0.2, 2)"`.
    Builtin { name: String },
    Mechanical(MechanicalDef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalDef {
    pub name: String,
    pub dim: usize,
    /// One flag per axis: `true` for a circle of length 2π.
    pub periodicity: Vec<bool>,
    /// The matrix `G`, row by row.
    pub kinetic: Vec<Vec<f64>>,
    #[serde(default)]
    pub potential: PotentialDef,
    pub time_dependence: TimeDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PointDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetDef>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDef {
    #[serde(default)]
    pub trig: Vec<TrigDef>,
    #[serde(default)]
    pub poly: Vec<MonomialDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigDef {
    pub k: Vec<f64>,
    #[serde(default)]
    pub nu: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialDef {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeDef {
    Autonomous,
    Periodic { period: f64 },
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDef {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(default)]
    pub clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDef {
    /// The reference point, fixed for all clocks.
    Equilibrium,
    /// The orbit through the reference point, closing after `period`.
    PeriodicOrbit { period: f64 },
}

impl From<&PhasePoint> for PointDef {
    fn from(p: &PhasePoint) -> Self {
        PointDef { x: p.x.iter().copied().collect(), p: p.p.iter().copied().collect(), clock: p.clock }
    }
}

impl PointDef {
    pub fn to_point(&self) -> PhasePoint {
        PhasePoint::new(&self.x, &self.p, self.clock)
    }
}

impl SystemFile {
    /// Parses TOML when `toml` is set, JSON otherwise.
    pub fn parse(text: &str, toml: bool) -> CliResult<Self> {
        if toml {
            toml::from_str(text).map_err(|e| CliError::config("system_file", e.to_string()))
        } else {
            serde_json::from_str(text).map_err(|e| CliError::config("system_file", e.to_string()))
        }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("system_file", format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse(&text, is_toml)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files serialize")
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::config("system_file", e.to_string()))
    }

    /// Full mechanical definition of a catalog entry.
    pub fn export(entry: &CatalogEntry) -> Self {
        let sys = entry.system.as_ref();
        let space = Hamiltonian::space(sys);
        let g = sys.kinetic();
        let pot = sys.potential();
        let set = match &entry.default_set {
            SetSpec::Equilibrium { .. } => SetDef::Equilibrium,
            SetSpec::PeriodicOrbit { period, .. } => SetDef::PeriodicOrbit { period: *period },
        };
        let reference = match &entry.default_set {
            SetSpec::Equilibrium { point } => point,
            SetSpec::PeriodicOrbit { start, .. } => start,
        };
        SystemFile::Mechanical(MechanicalDef {
            name: entry.name.clone(),
            dim: space.dim(),
            periodicity: space.periodic().to_vec(),
            kinetic: (0..g.nrows()).map(|i| g.row(i).iter().copied().collect()).collect(),
            potential: PotentialDef {
                trig: pot
                    .trig
                    .iter()
                    .map(|t| TrigDef { k: t.k.clone(), nu: t.nu, amplitude: t.amplitude, phase: t.phase })
                    .collect(),
                poly: pot.poly.iter().map(|m| MonomialDef { exponents: m.exponents.clone(), coeff: m.coeff }).collect(),
            },
            time_dependence: match Hamiltonian::time_dependence(sys) {
                TimeDependence::Autonomous => TimeDef::Autonomous,
                TimeDependence::Periodic(period) => TimeDef::Periodic { period },
                TimeDependence::General => TimeDef::General,
            },
            reference: Some(reference.into()),
            set: Some(set),
        })
    }

    /// Builds the entry. Mechanical definitions carry no oracle and no facts.
    pub fn build(&self) -> CliResult<CatalogEntry> {
        let def = match self {
            SystemFile::Builtin { name } => return Ok(catalog::get(name)?),
            SystemFile::Mechanical(def) => def,
        };
        let d = def.dim;
        if d == 0 || def.periodicity.len() != d {
            return Err(CliError::config("system_file", "periodicity must list one flag per axis"));
        }
        if def.kinetic.len() != d || def.kinetic.iter().any(|r| r.len() != d) {
            return Err(CliError::config("system_file", "kinetic matrix must be dim × dim"));
        }
        let kinetic = Mat::from_fn(d, d, |i, j| def.kinetic[i][j]);
        let potential = Potential {
            trig: def
                .potential
                .trig
                .iter()
                .map(|t| TrigTerm { k: t.k.clone(), nu: t.nu, amplitude: t.amplitude, phase: t.phase })
                .collect(),
            poly: def.potential.poly.iter().map(|m| Monomial { exponents: m.exponents.clone(), coeff: m.coeff }).collect(),
        };
        let td = match def.time_dependence {
            TimeDef::Autonomous => TimeDependence::Autonomous,
            TimeDef::Periodic { period } => TimeDependence::Periodic(period),
            TimeDef::General => TimeDependence::General,
        };
        let space = ConfigSpace::new(def.periodicity.clone())?;
        let sys = MechanicalSystem::new(&def.name, space, kinetic, potential, td)?;
        let reference = match &def.reference {
            Some(r) if r.x.len() != d || r.p.len() != d => {
                return Err(CliError::config("system_file", "reference point has wrong dimension"))
            }
            Some(r) => r.to_point(),
            None => PhasePoint::new(&vec![0.0; d], &vec![0.0; d], 0.0),
        };
        let default_set = match def.set.unwrap_or(SetDef::Equilibrium) {
            SetDef::Equilibrium => SetSpec::Equilibrium { point: reference.clone() },
            SetDef::PeriodicOrbit { period } if period > 0.0 => SetSpec::PeriodicOrbit { start: reference.clone(), period },
            SetDef::PeriodicOrbit { .. } => return Err(CliError::config("system_file", "orbit period must be positive")),
        };
        Ok(CatalogEntry {
            name: def.name.clone(),
            system: Arc::new(sys),
            framework: Framework::for_system(td, d),
            reference,
            default_set,
            facts: KnownFacts::default(),
            oracle: Oracle::None,
            notes: "user-defined mechanical system",
        })
    }
}

/// `--system` accepts a path to a definition file or a catalog name.
pub fn resolve(source: &str) -> CliResult<CatalogEntry> {
    let path = Path::new(source);
    if path.is_file() {
        SystemFile::read(path)?.build()
    } else {
        Ok(catalog::get(source)?)
    }
}

/// Invariant set given by `--set`: a closed orbit or an explicit sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetFile {
    Equilibrium { point: PointDef },
    PeriodicOrbit { start: PointDef, period: f64 },
    /// Points where sample `k + 1` is the time-`step` image of sample `k`,
    /// the last wrapping to the first.
    Samples { points: Vec<PointDef>, step: f64 },
}

impl SetFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("set_file", format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::config("set_file", e))
    }

    pub fn into_source(self) -> SetSource {
        match self {
            SetFile::Equilibrium { point } => SetSource::Spec(SetSpec::Equilibrium { point: point.to_point() }),
            SetFile::PeriodicOrbit { start, period } => {
                SetSource::Spec(SetSpec::PeriodicOrbit { start: start.to_point(), period })
            }
            SetFile::Samples { points, step } => {
                SetSource::Explicit { points: points.iter().map(PointDef::to_point).collect(), step }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetSource {
    /// Sampled at a requested spacing.
    Spec(SetSpec),
    Explicit { points: Vec<PhasePoint>, step: f64 },
}
