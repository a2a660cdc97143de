//! JSON scenario files: schema, parsing with located diagnostics, and
//! construction of the runtime objects they describe.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{ComplexMatrix, DimensionLayout};
use crate::measurement::{Channel, ChannelLayout, MeasurementModel, ReadingSet};
use crate::quantum::{DensityOperator, Effect, Weights};
use crate::superposition::{phase_grid, SuperpositionFamily, DEFAULT_PHASES};
use crate::theorems::{DiscriminationScenario, DEFAULT_WEIGHT_GRID};
use crate::tolerance::ToleranceConfig;

/// A complex number as `[re, im]`.
pub type ComplexEntry = [f64; 2];

/// A square operator or a state vector, resolved against a dimension known
/// from context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `|i><i|`
    Basis { index: usize },
    /// `|v><v|` for the normalised amplitudes.
    Pure { amplitudes: Vec<ComplexEntry> },
    Diagonal { values: Vec<f64> },
    Matrix { entries: Vec<Vec<ComplexEntry>> },
    Identity,
    Zero,
}

impl OperatorSpec {
    pub fn ground() -> Self {
        OperatorSpec::Basis { index: 0 }
    }

    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        OperatorSpec::Matrix {
            entries: m.to_rows().iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }

    fn matrix(&self, dim: usize) -> Result<ComplexMatrix, String> {
        let entry = |e: &ComplexEntry| Complex64::new(e[0], e[1]);
        match self {
            OperatorSpec::Basis { index } => {
                if *index >= dim {
                    return Err(format!("basis index {index} out of range for dimension {dim}"));
                }
                Ok(ComplexMatrix::real_diag(&(0..dim).map(|i| f64::from(u8::from(i == *index))).collect::<Vec<_>>()))
            }
            OperatorSpec::Pure { amplitudes } => {
                if amplitudes.len() != dim {
                    return Err(format!("expected {dim} amplitudes, got {}", amplitudes.len()));
                }
                let v = ComplexMatrix::ket(&amplitudes.iter().map(entry).collect::<Vec<_>>());
                let norm = v.frobenius_norm();
                if !norm.is_finite() || norm == 0.0 {
                    return Err("amplitudes must be finite and not all zero".into());
                }
                let v = v.scale_real(1.0 / norm);
                Ok(ComplexMatrix::ket_bra(&v, &v))
            }
            OperatorSpec::Diagonal { values } => {
                if values.len() != dim {
                    return Err(format!("expected {dim} diagonal values, got {}", values.len()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err("diagonal values must be finite".into());
                }
                Ok(ComplexMatrix::real_diag(values))
            }
            OperatorSpec::Matrix { entries } => {
                if entries.len() != dim || entries.iter().any(|r| r.len() != dim) {
                    return Err(format!("expected a {dim}x{dim} matrix"));
                }
                let data = entries.iter().flatten().map(entry).collect();
                ComplexMatrix::new(dim, dim, data).map_err(|e| e.to_string())
            }
            OperatorSpec::Identity => Ok(ComplexMatrix::identity(dim)),
            OperatorSpec::Zero => Ok(ComplexMatrix::zeros(dim, dim)),
        }
    }

    pub fn state(&self, dim: usize, tol: &ToleranceConfig) -> Result<DensityOperator, String> {
        DensityOperator::new(self.matrix(dim)?, tol).map_err(|e| e.to_string())
    }

    pub fn effect(&self, dim: usize, tol: &ToleranceConfig) -> Result<Effect, String> {
        Effect::new(self.matrix(dim)?, tol).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinUnitary {
    /// Controlled-NOT chain; every factor has dimension 2.
    Cnot,
    /// Controlled cyclic shift chain; every factor has dimension 3.
    QutritShift,
}

impl BuiltinUnitary {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinUnitary::Cnot => "cnot",
            BuiltinUnitary::QutritShift => "qutrit-shift",
        }
    }

    fn dim(self) -> usize {
        match self {
            BuiltinUnitary::Cnot => 2,
            BuiltinUnitary::QutritShift => 3,
        }
    }
}

/// The interaction unitary. Builtins copy factor `k` onto factor `k + 1`
/// for every probe factor in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UnitarySpec {
    Builtin { name: BuiltinUnitary },
    Matrix { entries: Vec<Vec<ComplexEntry>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    /// Factor 0 is the object, probe factors follow in order.
    pub factors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub x1: OperatorSpec,
    pub x2: OperatorSpec,
    /// `[|c1|^2, |c2|^2]` of the state the sampler draws from.
    pub weights: [f64; 2],
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiwaySpec {
    /// Mutually orthogonal object states.
    pub states: Vec<OperatorSpec>,
    /// Per channel, one reading per state.
    pub readings: BTreeMap<String, Vec<OperatorSpec>>,
    /// Object state to filter.
    pub input: OperatorSpec,
}

/// Sample counts for the randomised suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    pub axioms: usize,
    pub reading_sets: usize,
    pub states: usize,
    pub dictionary: usize,
    pub identity_effects: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self {
            axioms: 50,
            reading_sets: 20,
            states: 50,
            dictionary: 12,
            identity_effects: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Axioms,
    Discrimination,
    ProbabilityRule,
    StateReduction,
    Objectivity,
    Sampler,
    InducedEffect,
    OutputStates,
    Consistency,
    Membership,
    Multiway,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Axioms,
        Suite::Discrimination,
        Suite::ProbabilityRule,
        Suite::StateReduction,
        Suite::Objectivity,
        Suite::Sampler,
        Suite::InducedEffect,
        Suite::OutputStates,
        Suite::Consistency,
        Suite::Membership,
        Suite::Multiway,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Discrimination => "discrimination",
            Suite::ProbabilityRule => "probability-rule",
            Suite::StateReduction => "state-reduction",
            Suite::Objectivity => "objectivity",
            Suite::Sampler => "sampler",
            Suite::InducedEffect => "induced-effect",
            Suite::OutputStates => "output-states",
            Suite::Consistency => "consistency",
            Suite::Membership => "membership",
            Suite::Multiway => "multiway",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_weight_grid() -> Vec<[f64; 2]> {
    DEFAULT_WEIGHT_GRID.iter().map(|&(a, b)| [a, b]).collect()
}

fn default_phases() -> usize {
    DEFAULT_PHASES
}

fn default_trials() -> usize {
    10_000
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub object_dim: usize,
    pub probe_dims: Vec<usize>,
    pub unitary: UnitarySpec,
    #[serde(default = "OperatorSpec::ground")]
    pub probe_state: OperatorSpec,
    pub channels: Vec<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unobserved: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Readings claimed to discriminate `x1` against `x2`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub discriminating: BTreeMap<String, OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiway: Option<MultiwaySpec>,
    #[serde(default = "default_weight_grid")]
    pub weight_grid: Vec<[f64; 2]>,
    #[serde(default = "default_phases")]
    pub phases: usize,
    /// Empty means every suite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "is_default")]
    pub samples: SampleCounts,
    /// Partial overrides of the default tolerances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceConfig>,
}

/// A scenario that failed to parse or validate, located by line and column
/// where the JSON reader knows them and by field path otherwise.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ScenarioError {
    pub path: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ScenarioError {
    pub fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: Some(path.into()),
            line: None,
            column: None,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: ")?,
            (Some(l), None) => write!(f, "line {l}: ")?,
            _ => {}
        }
        if let Some(p) = &self.path {
            write!(f, "`{p}`: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError {
            path: (path != ".").then_some(path),
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        }
    })?;
    file.build(1.0)?;
    Ok(file)
}

pub fn to_json(file: &ScenarioFile) -> String {
    serde_json::to_string_pretty(file).expect("scenario serialises")
}

/// Runtime objects described by a scenario file.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub tol: ToleranceConfig,
    pub model: MeasurementModel,
    pub discrimination: Option<DiscriminationScenario>,
    pub multiway: Option<MultiwayParts>,
    pub weight_grid: Vec<Weights>,
    pub phases: Vec<f64>,
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub trials: usize,
    pub samples: SampleCounts,
}

/// Multiway data before its premises are checked, so that a violated premise
/// is reported as a failing suite rather than a parse error.
#[derive(Debug, Clone)]
pub struct MultiwayParts {
    pub states: Vec<DensityOperator>,
    pub readings: BTreeMap<String, Vec<Effect>>,
    pub input: DensityOperator,
}

impl ScenarioFile {
    pub fn tolerances(&self, scale: f64) -> ToleranceConfig {
        self.tolerances.unwrap_or_default().scaled(scale)
    }

    fn unitary_matrix(&self) -> Result<ComplexMatrix, ScenarioError> {
        let total: usize = self.object_dim * self.probe_dims.iter().product::<usize>();
        match &self.unitary {
            UnitarySpec::Builtin { name } => {
                let d = name.dim();
                if self.object_dim != d || self.probe_dims.iter().any(|&p| p != d) {
                    return Err(ScenarioError::at(
                        "unitary.name",
                        format!("builtin `{}` needs every factor to have dimension {d}", name.name()),
                    ));
                }
                let mut model = MeasurementModel::copy(d, "f0", "f1");
                for k in 2..=self.probe_dims.len() {
                    let step = MeasurementModel::copy(d, &format!("f{}", k - 1), &format!("f{k}"));
                    model = model
                        .compose(&format!("f{}", k - 1), &step, &ToleranceConfig::default())
                        .map_err(|e| ScenarioError::at("unitary", e))?;
                }
                Ok(model.unitary().clone())
            }
            UnitarySpec::Matrix { entries } => {
                if entries.len() != total || entries.iter().any(|r| r.len() != total) {
                    return Err(ScenarioError::at(
                        "unitary.entries",
                        format!("expected a {total}x{total} matrix for dimensions {} x {:?}", self.object_dim, self.probe_dims),
                    ));
                }
                OperatorSpec::Matrix { entries: entries.clone() }
                    .matrix(total)
                    .map_err(|e| ScenarioError::at("unitary.entries", e))
            }
        }
    }

    /// Validates everything and builds the runtime scenario.
    pub fn build(&self, tolerance_scale: f64) -> Result<Scenario, ScenarioError> {
        if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
            return Err(ScenarioError::at("tolerance_scale", "must be positive and finite"));
        }
        let tol = self.tolerances(tolerance_scale);
        if self.object_dim < 2 {
            return Err(ScenarioError::at("object_dim", "must be at least 2"));
        }
        if self.probe_dims.is_empty() || self.probe_dims.contains(&0) {
            return Err(ScenarioError::at("probe_dims", "needs at least one factor, all of positive dimension"));
        }
        let probe_dim: usize = self.probe_dims.iter().product();
        let probe = self
            .probe_state
            .state(probe_dim, &tol)
            .map_err(|e| ScenarioError::at("probe_state", e))?;
        let s = self.unitary_matrix()?;
        let mut dims = vec![self.object_dim];
        dims.extend(&self.probe_dims);
        let layout = DimensionLayout::new(dims).map_err(|e| ScenarioError::at("probe_dims", e))?;
        let channels: Vec<Channel> = self
            .channels
            .iter()
            .map(|c| Channel {
                name: c.name.clone(),
                factors: c.factors.clone(),
            })
            .collect();
        let channels =
            ChannelLayout::new(layout, channels, self.unobserved.clone()).map_err(|e| ScenarioError::at("channels", e))?;
        let model = MeasurementModel::new(self.object_dim, probe, s, channels, &tol).map_err(|e| match e {
            Error::NotUnitary { .. } => ScenarioError::at("unitary", e),
            other => ScenarioError::at("channels", other),
        })?;

        let weight_grid = self
            .weight_grid
            .iter()
            .enumerate()
            .map(|(i, w)| Weights::new(w[0], w[1], &tol).map_err(|e| ScenarioError::at(format!("weight_grid[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        if self.phases == 0 {
            return Err(ScenarioError::at("phases", "must be at least 1"));
        }

        let discrimination = match &self.family {
            None => {
                if !self.discriminating.is_empty() {
                    return Err(ScenarioError::at("discriminating", "needs a `family` to discriminate"));
                }
                None
            }
            Some(f) => {
                let d = self.object_dim;
                let x1 = f.x1.state(d, &tol).map_err(|e| ScenarioError::at("family.x1", e))?;
                let x2 = f.x2.state(d, &tol).map_err(|e| ScenarioError::at("family.x2", e))?;
                let w = Weights::new(f.weights[0], f.weights[1], &tol)
                    .map_err(|e| ScenarioError::at("family.weights", e))?
                    .with_phase(f.phase);
                let fam = SuperpositionFamily::new(x1, x2, w, &tol).map_err(|e| ScenarioError::at("family", e))?;
                let mut readings = ReadingSet::new();
                for (ch, spec) in &self.discriminating {
                    let path = format!("discriminating.{ch}");
                    let dim = model.channels().channel_dim(ch).map_err(|e| ScenarioError::at(&path, e))?;
                    readings.insert(ch, spec.effect(dim, &tol).map_err(|e| ScenarioError::at(&path, e))?);
                }
                Some(
                    DiscriminationScenario::new_unchecked(model.clone(), fam, readings)
                        .map_err(|e| ScenarioError::at("family", e))?,
                )
            }
        };

        let multiway = match &self.multiway {
            None => None,
            Some(mw) => {
                let d = self.object_dim;
                let states = mw
                    .states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.state(d, &tol).map_err(|e| ScenarioError::at(format!("multiway.states[{i}]"), e)))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut readings = BTreeMap::new();
                for (ch, list) in &mw.readings {
                    let dim = model
                        .channels()
                        .channel_dim(ch)
                        .map_err(|e| ScenarioError::at(format!("multiway.readings.{ch}"), e))?;
                    let effects = list
                        .iter()
                        .enumerate()
                        .map(|(i, s)| s.effect(dim, &tol).map_err(|e| ScenarioError::at(format!("multiway.readings.{ch}[{i}]"), e)))
                        .collect::<Result<Vec<_>, _>>()?;
                    readings.insert(ch.clone(), effects);
                }
                let input = mw.input.state(d, &tol).map_err(|e| ScenarioError::at("multiway.input", e))?;
                Some(MultiwayParts { states, readings, input })
            }
        };

        let mut suites = Vec::new();
        for (i, s) in self.suites.iter().enumerate() {
            if suites.contains(s) {
                return Err(ScenarioError::at(format!("suites[{i}]"), format!("suite `{s}` listed twice")));
            }
            suites.push(*s);
        }
        if suites.is_empty() {
            suites = Suite::ALL.to_vec();
        }

        Ok(Scenario {
            name: self.name.clone(),
            tol,
            model,
            discrimination,
            multiway,
            weight_grid,
            phases: phase_grid(self.phases),
            suites,
            seed: self.seed,
            trials: self.trials,
            samples: self.samples,
        })
    }
}
