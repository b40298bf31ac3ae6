//! Serde model of the experiment configuration file and its validation into
//! ready-to-run objects.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::diffeo::families::{affine_mixture_plot, exponential_family_plot, simplex_plot, table_plot};
use crate::diffeo::{DiffeologicalModel, ParamDomain, Plot, Smoothness};
use crate::error::Error;
use crate::estimation::{Estimator, PhiMap};
use crate::markov::MarkovKernel;
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure};

/// Name under which the sample space is registered.
pub const SAMPLE_SPACE: &str = "sample";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Atom labels of the sample space.
    pub space: Vec<String>,
    /// Further spaces, used as kernel targets.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub spaces: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub plots: BTreeMap<String, PlotSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub models: BTreeMap<String, ModelSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kernels: BTreeMap<String, KernelSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub estimators: BTreeMap<String, EstimatorSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phis: BTreeMap<String, PhiSpec>,
    #[serde(default)]
    pub experiments: Vec<ExperimentSpec>,
}

/// `[lo, hi]`; `null` stands for an unbounded side.
pub type Interval = [Option<f64>; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlotSpec {
    Simplex {},
    AffineMixture {
        /// Reference measure; uniform when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Vec<f64>>,
        densities: Vec<Vec<f64>>,
        /// Open box; the open simplex of matching dimension when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Vec<Interval>>,
    },
    ExponentialFamily {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Vec<f64>>,
        statistics: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Vec<Interval>>,
    },
    Table {
        domain: Vec<Interval>,
        entries: Vec<TableEntry>,
    },
    /// `t ↦ of(offset + linear · t)`; `linear` is given row by row.
    Reparam {
        of: String,
        offset: Vec<f64>,
        linear: Vec<Vec<f64>>,
        domain: Vec<Interval>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Smoothness order `k`: a positive integer or `"inf"`.
    #[serde(default = "default_order")]
    pub order: String,
    pub plots: Vec<String>,
}

fn default_order() -> String {
    "inf".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Row-stochastic matrix, one row per source atom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Deterministic map: target label per source atom.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorSpec {
    PlugIn {},
    Smoothed { epsilon: f64 },
    Constant { point: Vec<f64> },
    Table { rows: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Coordinate { atoms: Vec<String> },
    Parameter { plot: String },
    KernelEmbedding { matrix: Vec<Vec<f64>> },
    Table { entries: Vec<PhiEntry> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiEntry {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
}

/// A base point given either directly or as a plot evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PointSpec {
    Measure { measure: Vec<f64> },
    OnPlot { plot: String, theta: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeProbeSpec {
    pub label: String,
    pub plot: String,
    pub theta: Vec<f64>,
    /// Straight curves `t ↦ plot(theta + t d)` for each listed `d`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<Vec<f64>>,
    /// Named 1-parameter plots through the base point at `t = 0`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<ConeExpectation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeExpectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_linear: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SampleSpec {
    Measures { measures: Vec<Vec<f64>> },
    OnPlot { plot: String, thetas: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpec {
    /// All zero-mass directions at the base point.
    Full,
    /// Coordinate velocities of the named plot at the base point's parameter.
    Plot(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CramerRaoExpectation {
    Attained,
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Map<String, serde_json::Value>")]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

// `flatten` cannot reject unknown fields, so the name is split off by hand.
impl TryFrom<serde_json::Map<String, serde_json::Value>> for ExperimentSpec {
    type Error = String;
    fn try_from(mut map: serde_json::Map<String, serde_json::Value>) -> Result<Self, String> {
        let name = match map.remove("name") {
            Some(serde_json::Value::String(s)) => s,
            Some(_) => return Err("experiment field `name` must be a string".into()),
            None => return Err("experiment is missing field `name`".into()),
        };
        let kind = serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| format!("experiment {name:?}: {e}"))?;
        Ok(Self { name, kind })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    FisherGram {
        plot: String,
        thetas: Vec<Vec<f64>>,
        /// Also compare against `Σ_i v_i w_i / ξ_i`.
        #[serde(default)]
        closed_form: bool,
    },
    Integrability {
        model: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridOptions>,
    },
    ConeProbe {
        model: String,
        probes: Vec<ConeProbeSpec>,
    },
    Pushforward {
        kernel: String,
        model: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridOptions>,
    },
    Sufficiency {
        kernel: String,
        sample: SampleSpec,
        /// Verdict passes when the sufficiency outcome equals this.
        #[serde(default = "yes")]
        expect_sufficient: bool,
    },
    MonotonicitySweep {
        count: usize,
        /// Model to draw base points and velocities from; otherwise random interior points.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
        /// Target atoms of the random kernels; the sample size when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        targets: Option<usize>,
        /// Probability of a zero kernel entry.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zero_fraction: Option<f64>,
    },
    CramerRao {
        estimator: String,
        phi: String,
        points: Vec<PointSpec>,
        basis: BasisSpec,
        #[serde(default = "bound")]
        expect: CramerRaoExpectation,
    },
}

fn yes() -> bool {
    true
}

fn bound() -> CramerRaoExpectation {
    CramerRaoExpectation::Bound
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::FisherGram { .. } => "fisher_gram",
            ExperimentKind::Integrability { .. } => "integrability",
            ExperimentKind::ConeProbe { .. } => "cone_probe",
            ExperimentKind::Pushforward { .. } => "pushforward",
            ExperimentKind::Sufficiency { .. } => "sufficiency",
            ExperimentKind::MonotonicitySweep { .. } => "monotonicity_sweep",
            ExperimentKind::CramerRao { .. } => "cramer_rao",
        }
    }
}

/// Tolerances every verdict may use, with their defaults.
pub const DEFAULT_TOLERANCES: [(&str, f64); 6] = [
    ("attained", 1e-10),
    ("closed_form", 1e-10),
    ("isometry", 1e-8),
    ("monotonicity", 1e-9),
    ("psd", 1e-9),
    ("sufficiency", 1e-12),
];

/// A validated configuration with every named object built.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub file: ConfigFile,
    pub space: FiniteSampleSpace,
    pub spaces: BTreeMap<String, FiniteSampleSpace>,
    pub plots: BTreeMap<String, Plot>,
    pub models: BTreeMap<String, DiffeologicalModel>,
    pub kernels: BTreeMap<String, MarkovKernel>,
    pub estimators: BTreeMap<String, Estimator>,
    pub phis: BTreeMap<String, PhiMap>,
    pub tolerances: BTreeMap<String, f64>,
}

fn invalid(object: impl Into<String>, reason: impl ToString) -> RunnerError {
    RunnerError::Validation {
        object: object.into(),
        reason: reason.to_string(),
    }
}

fn domain_from(intervals: &[Interval]) -> Result<ParamDomain, Error> {
    ParamDomain::open_box(
        intervals
            .iter()
            .map(|[lo, hi]| (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
            .collect(),
    )
}

fn measure_on(space: &FiniteSampleSpace, weights: &Option<Vec<f64>>) -> Result<ProbabilityMeasure, Error> {
    match weights {
        Some(w) => ProbabilityMeasure::new(space.clone(), w.clone()),
        None => Ok(ProbabilityMeasure::uniform(space.clone())),
    }
}

fn matrix_from(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, Error> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidMeasure(format!("{what} rows have unequal lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ExperimentConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self, RunnerError> {
        let space = FiniteSampleSpace::new(file.space.iter().cloned()).map_err(|e| invalid("space", e))?;
        let mut spaces = BTreeMap::new();
        spaces.insert(SAMPLE_SPACE.to_string(), space.clone());
        for (name, labels) in &file.spaces {
            if name == SAMPLE_SPACE {
                return Err(invalid(format!("space {name:?}"), "name is reserved for the sample space"));
            }
            let s = FiniteSampleSpace::new(labels.iter().cloned()).map_err(|e| invalid(format!("space {name:?}"), e))?;
            spaces.insert(name.clone(), s);
        }

        let mut tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in &file.tolerances {
            set_tolerance(&mut tolerances, k, *v)?;
        }

        let mut plots = BTreeMap::new();
        let mut pending: Vec<&String> = file.plots.keys().collect();
        // reparametrizations may refer to plots declared under any name
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for name in pending {
                let spec = &file.plots[name];
                if let PlotSpec::Reparam { of, .. } = spec {
                    if !plots.contains_key(of) {
                        if !file.plots.contains_key(of) {
                            return Err(invalid(format!("plot {name:?}"), format!("reparametrizes unknown plot {of:?}")));
                        }
                        rest.push(name);
                        continue;
                    }
                }
                let plot = build_plot(&space, spec, &plots)
                    .map_err(|e| invalid(format!("plot {name:?}"), e))?
                    .with_label(name.clone());
                plots.insert(name.clone(), plot);
            }
            if rest.len() == before {
                return Err(invalid(format!("plot {:?}", rest[0]), "cyclic reparametrization"));
            }
            pending = rest;
        }

        let mut models = BTreeMap::new();
        for (name, spec) in &file.models {
            let object = format!("model {name:?}");
            let order: Smoothness = spec.order.parse().map_err(|e: String| invalid(&object, e))?;
            let members = spec
                .plots
                .iter()
                .map(|p| plots.get(p).cloned().ok_or_else(|| invalid(&object, format!("unknown plot {p:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let model = DiffeologicalModel::new(space.clone(), members, order).map_err(|e| invalid(&object, e))?;
            models.insert(name.clone(), model);
        }

        let mut kernels = BTreeMap::new();
        for (name, spec) in &file.kernels {
            let object = format!("kernel {name:?}");
            let lookup = |s: &Option<String>| -> Result<FiniteSampleSpace, RunnerError> {
                let key = s.as_deref().unwrap_or(SAMPLE_SPACE);
                spaces.get(key).cloned().ok_or_else(|| invalid(&object, format!("unknown space {key:?}")))
            };
            let (source, target) = (lookup(&spec.source)?, lookup(&spec.target)?);
            let kernel = match (&spec.matrix, &spec.map) {
                (Some(rows), None) => MarkovKernel::from_rows(source, target, rows),
                (None, Some(map)) => {
                    let kappa = map
                        .iter()
                        .map(|l| target.index_of(l).ok_or_else(|| invalid(&object, format!("unknown target atom {l:?}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    MarkovKernel::deterministic(source, target, &kappa)
                }
                _ => return Err(invalid(&object, "exactly one of `matrix` and `map` is required")),
            }
            .map_err(|e| invalid(&object, e))?;
            kernels.insert(name.clone(), kernel);
        }

        let mut estimators = BTreeMap::new();
        for (name, spec) in &file.estimators {
            let est = match spec {
                EstimatorSpec::PlugIn {} => Ok(Estimator::plug_in(space.clone())),
                EstimatorSpec::Smoothed { epsilon } => Estimator::smoothed(space.clone(), *epsilon),
                EstimatorSpec::Constant { point } => {
                    ProbabilityMeasure::new(space.clone(), point.clone()).map(|p| Estimator::constant(&p))
                }
                EstimatorSpec::Table { rows } => Estimator::table(space.clone(), rows),
            }
            .map_err(|e| invalid(format!("estimator {name:?}"), e))?;
            estimators.insert(name.clone(), est);
        }

        let mut phis = BTreeMap::new();
        for (name, spec) in &file.phis {
            let object = format!("phi {name:?}");
            let phi = match spec {
                PhiSpec::Coordinate { atoms } => {
                    let idx = atoms
                        .iter()
                        .map(|l| space.index_of(l).ok_or_else(|| invalid(&object, format!("unknown atom {l:?}"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    PhiMap::coordinate(space.clone(), idx)
                }
                PhiSpec::Parameter { plot } => {
                    let p = plots.get(plot).ok_or_else(|| invalid(&object, format!("unknown plot {plot:?}")))?;
                    PhiMap::parameter(p.clone())
                }
                PhiSpec::KernelEmbedding { matrix } => {
                    matrix_from(matrix, "kernel").and_then(|k| PhiMap::kernel_embedding(space.clone(), k))
                }
                PhiSpec::Table { entries } => entries
                    .iter()
                    .map(|e| ProbabilityMeasure::new(space.clone(), e.point.clone()).map(|p| (p, e.value.clone())))
                    .collect::<Result<Vec<_>, _>>()
                    .and_then(|entries| PhiMap::table(space.clone(), entries)),
            }
            .map_err(|e| invalid(&object, e))?;
            phis.insert(name.clone(), phi);
        }

        let config = Self {
            file,
            space,
            spaces,
            plots,
            models,
            kernels,
            estimators,
            phis,
            tolerances,
        };
        config.check_references()?;
        Ok(config)
    }

    fn check_references(&self) -> Result<(), RunnerError> {
        let mut seen = std::collections::BTreeSet::new();
        for exp in &self.file.experiments {
            let object = format!("experiment {:?}", exp.name);
            if !seen.insert(exp.name.as_str()) {
                return Err(invalid(&object, "duplicate experiment name"));
            }
            let need = |map_has: bool, what: &str, name: &str| -> Result<(), RunnerError> {
                if map_has {
                    Ok(())
                } else {
                    Err(invalid(&object, format!("unknown {what} {name:?}")))
                }
            };
            let point_ok = |p: &PointSpec| match p {
                PointSpec::Measure { .. } => Ok(()),
                PointSpec::OnPlot { plot, .. } => need(self.plots.contains_key(plot), "plot", plot),
            };
            match &exp.kind {
                ExperimentKind::FisherGram { plot, .. } => need(self.plots.contains_key(plot), "plot", plot)?,
                ExperimentKind::Integrability { model, .. } => need(self.models.contains_key(model), "model", model)?,
                ExperimentKind::ConeProbe { model, probes } => {
                    need(self.models.contains_key(model), "model", model)?;
                    for p in probes {
                        need(self.plots.contains_key(&p.plot), "plot", &p.plot)?;
                        for c in &p.curves {
                            need(self.plots.contains_key(c), "plot", c)?;
                        }
                    }
                }
                ExperimentKind::Pushforward { kernel, model, .. } => {
                    need(self.kernels.contains_key(kernel), "kernel", kernel)?;
                    need(self.models.contains_key(model), "model", model)?;
                }
                ExperimentKind::Sufficiency { kernel, sample, .. } => {
                    need(self.kernels.contains_key(kernel), "kernel", kernel)?;
                    if let SampleSpec::OnPlot { plot, .. } = sample {
                        need(self.plots.contains_key(plot), "plot", plot)?;
                    }
                }
                ExperimentKind::MonotonicitySweep { model, zero_fraction, targets, .. } => {
                    if let Some(m) = model {
                        need(self.models.contains_key(m), "model", m)?;
                    }
                    if zero_fraction.is_some_and(|z| !(0.0..1.0).contains(&z)) {
                        return Err(invalid(&object, "zero_fraction must lie in [0, 1)"));
                    }
                    if *targets == Some(0) {
                        return Err(invalid(&object, "targets must be positive"));
                    }
                }
                ExperimentKind::CramerRao { estimator, phi, points, basis, .. } => {
                    need(self.estimators.contains_key(estimator), "estimator", estimator)?;
                    need(self.phis.contains_key(phi), "phi", phi)?;
                    for p in points {
                        point_ok(p)?;
                    }
                    if let BasisSpec::Plot(p) = basis {
                        need(self.plots.contains_key(p), "plot", p)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn experiment(&self, name: &str) -> Option<(usize, &ExperimentSpec)> {
        self.file.experiments.iter().enumerate().find(|(_, e)| e.name == name)
    }

    pub fn seed(&self) -> u64 {
        self.file.seed.unwrap_or(0)
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    /// Applies `KEY=VAL` overrides on top of the configured tolerances.
    pub fn override_tolerance(&mut self, spec: &str) -> Result<(), RunnerError> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| RunnerError::Override(format!("expected KEY=VAL, got {spec:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| RunnerError::Override(format!("{value:?} is not a number")))?;
        set_tolerance(&mut self.tolerances, key.trim(), value)
    }
}

fn set_tolerance(map: &mut BTreeMap<String, f64>, key: &str, value: f64) -> Result<(), RunnerError> {
    if !map.contains_key(key) {
        let known: Vec<&str> = DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect();
        return Err(RunnerError::Override(format!("unknown tolerance {key:?}; known: {}", known.join(", "))));
    }
    if !(value.is_finite() && value >= 0.0) {
        return Err(RunnerError::Override(format!("tolerance {key:?} must be a nonnegative number")));
    }
    map.insert(key.to_string(), value);
    Ok(())
}

fn build_plot(space: &FiniteSampleSpace, spec: &PlotSpec, built: &BTreeMap<String, Plot>) -> Result<Plot, Error> {
    match spec {
        PlotSpec::Simplex {} => {
            if space.len() < 2 {
                return Err(Error::InvalidSpace("the simplex chart needs at least 2 atoms".into()));
            }
            Ok(simplex_plot(space))
        }
        PlotSpec::AffineMixture { base, densities, domain } => {
            let base = measure_on(space, base)?;
            let domain = match domain {
                Some(d) => domain_from(d)?,
                None => ParamDomain::OpenSimplex(densities.len().saturating_sub(1)),
            };
            affine_mixture_plot(&base, densities, domain)
        }
        PlotSpec::ExponentialFamily { base, statistics, domain } => {
            let base = measure_on(space, base)?;
            let domain = match domain {
                Some(d) => domain_from(d)?,
                None => ParamDomain::whole_space(statistics.len()),
            };
            exponential_family_plot(&base, statistics, domain)
        }
        PlotSpec::Table { domain, entries } => {
            let entries = entries
                .iter()
                .map(|e| ProbabilityMeasure::new(space.clone(), e.weights.clone()).map(|p| (e.theta.clone(), p)))
                .collect::<Result<Vec<_>, _>>()?;
            table_plot(space, entries, domain_from(domain)?)
        }
        PlotSpec::Reparam { of, offset, linear, domain } => {
            let base = &built[of];
            let lin = matrix_from(linear, "linear")?;
            let lin = if linear.is_empty() {
                DMatrix::zeros(0, domain.len())
            } else {
                lin
            };
            base.precompose_affine(offset.clone(), lin, domain_from(domain)?)
        }
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, RunnerError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, RunnerError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        let (line, column) = (e.line(), e.column());
        let message = e.to_string();
        match e.classify() {
            Category::Data => RunnerError::Schema { line, column, message },
            _ => RunnerError::Parse { line, column, message },
        }
    })?;
    ExperimentConfig::from_file(file)
}
