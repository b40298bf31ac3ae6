use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{
    BasisSpec, ConeProbeSpec, CramerRaoExpectation, ExperimentConfig, ExperimentKind, ExperimentSpec, GridOptions,
    PointSpec, SampleSpec,
};
use super::report::{ReportRecord, ResultValue, Verdict};
use super::rng::record_rng;
use super::RunnerError;
use crate::diffeo::{
    check_plot_invariants, fisher_gram, grid_points, integrability_report, tangent_cone_probe, GridSpec, ParamDomain,
    Plot, TangentVector, CONE_RANK_TOL, DIRECTION_DEDUP_TOL, JACOBIAN_FD_TOL, JACOBIAN_MASS_TOL, LINEARITY_TOL,
    PLOT_OUTPUT_TOL,
};
use crate::error::{Error, Result};
use crate::estimation::{cramer_rao_gap, full_tangent_basis, inverse_fisher_form, variance_form};
use crate::linalg;
use crate::markov::{check_sufficiency, MarkovKernel};
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure, SignedMeasure, SUPPORT_TOL};

/// Default half-length of straight probe curves.
const PROBE_HALF_WIDTH: f64 = 0.1;
/// Default share of zero entries in random sweep kernels.
const SWEEP_ZERO_FRACTION: f64 = 0.3;

/// A record before the experiment name and index are attached.
struct Draft {
    inputs: Value,
    results: Vec<(String, ResultValue)>,
    verdict: Verdict,
    tolerances: BTreeMap<String, f64>,
    wall_time: f64,
}

impl Draft {
    fn new(inputs: Value) -> Self {
        Self {
            inputs,
            results: Vec::new(),
            verdict: Verdict::new(true, ""),
            tolerances: BTreeMap::new(),
            wall_time: 0.0,
        }
    }

    fn put(&mut self, key: &str, value: ResultValue) -> &mut Self {
        self.results.push((key.to_string(), value));
        self
    }

    fn scalar(&mut self, key: &str, v: f64) -> &mut Self {
        self.put(key, ResultValue::Scalar(v))
    }

    fn tol(&mut self, key: &str, v: f64) -> &mut Self {
        self.tolerances.insert(key.to_string(), v);
        self
    }

    fn verdict(&mut self, pass: bool, label: impl Into<String>) -> &mut Self {
        self.verdict = Verdict::new(pass, label);
        self
    }
}

fn timed(f: impl FnOnce() -> Result<Draft>) -> Result<Draft> {
    let start = Instant::now();
    let mut d = f()?;
    d.wall_time = start.elapsed().as_secs_f64();
    Ok(d)
}

/// Runs one named experiment; records are deterministic in `(config, seed)`.
pub fn run_experiment(config: &ExperimentConfig, name: &str, seed: u64) -> std::result::Result<Vec<ReportRecord>, RunnerError> {
    let (index, spec) = config
        .experiment(name)
        .ok_or_else(|| RunnerError::UnknownExperiment(name.to_string()))?;
    let drafts = dispatch(config, index, spec, seed).map_err(|source| RunnerError::Experiment {
        experiment: name.to_string(),
        source,
    })?;
    Ok(drafts
        .into_iter()
        .enumerate()
        .map(|(record, d)| ReportRecord {
            experiment: spec.name.clone(),
            kind: spec.kind.as_str().to_string(),
            record,
            inputs: d.inputs,
            results: d.results,
            verdict: d.verdict,
            tolerances: d.tolerances,
            wall_time: Some(d.wall_time),
        })
        .collect())
}

/// Runs every experiment in declaration order.
pub fn run_all(config: &ExperimentConfig, seed: u64) -> std::result::Result<Vec<ReportRecord>, RunnerError> {
    let mut out = Vec::new();
    for spec in &config.file.experiments {
        out.extend(run_experiment(config, &spec.name, seed)?);
    }
    Ok(out)
}

fn dispatch(config: &ExperimentConfig, index: usize, spec: &ExperimentSpec, seed: u64) -> Result<Vec<Draft>> {
    match &spec.kind {
        ExperimentKind::FisherGram { plot, thetas, closed_form } => thetas
            .iter()
            .map(|t| timed(|| gram_record(config, plot, t, *closed_form)))
            .collect(),
        ExperimentKind::Integrability { model, grid } => integrability_records(config, model, grid),
        ExperimentKind::ConeProbe { model, probes } => probes
            .iter()
            .map(|p| timed(|| cone_record(config, model, p)))
            .collect(),
        ExperimentKind::Pushforward { kernel, model, grid } => pushforward_records(config, kernel, model, grid),
        ExperimentKind::Sufficiency {
            kernel,
            sample,
            expect_sufficient,
        } => Ok(vec![timed(|| sufficiency_record(config, kernel, sample, *expect_sufficient))?]),
        ExperimentKind::MonotonicitySweep {
            count,
            model,
            targets,
            zero_fraction,
        } => {
            let sweep = Sweep {
                config,
                model: model.as_deref(),
                targets: targets.unwrap_or(config.space.len()),
                zero_fraction: zero_fraction.unwrap_or(SWEEP_ZERO_FRACTION),
                seed,
                experiment: index,
            };
            (0..*count)
                .into_par_iter()
                .map(|r| timed(|| sweep.record(r)))
                .collect::<Vec<_>>()
                .into_iter()
                .collect()
        }
        ExperimentKind::CramerRao {
            estimator,
            phi,
            points,
            basis,
            expect,
        } => points
            .iter()
            .map(|p| timed(|| cramer_rao_record(config, estimator, phi, p, basis, expect)))
            .collect(),
    }
}

fn grid_spec(opts: &Option<GridOptions>) -> GridSpec {
    let mut g = GridSpec::default();
    if let Some(o) = opts {
        if let Some(l) = &o.levels {
            g.levels = l.clone();
        }
        if let Some(m) = o.margin {
            g.margin = m;
        }
    }
    g
}

fn resolve_point(config: &ExperimentConfig, p: &PointSpec) -> Result<(ProbabilityMeasure, Option<Vec<f64>>)> {
    match p {
        PointSpec::Measure { measure } => Ok((ProbabilityMeasure::new(config.space.clone(), measure.clone())?, None)),
        PointSpec::OnPlot { plot, theta } => Ok((config.plots[plot].point(theta)?, Some(theta.clone()))),
    }
}

fn gram_record(config: &ExperimentConfig, plot_name: &str, theta: &[f64], closed_form: bool) -> Result<Draft> {
    let plot = &config.plots[plot_name];
    let g = fisher_gram(plot, theta)?;
    let min_eig = linalg::min_eigenvalue(&g);
    let psd_tol = config.tolerance("psd");
    let mut d = Draft::new(json!({ "plot": plot_name, "theta": theta }));
    d.put("gram", ResultValue::matrix(&g));
    d.scalar("min_eigenvalue", if g.nrows() == 0 { 0.0 } else { min_eig });
    d.tol("psd", psd_tol);
    let psd = g.nrows() == 0 || min_eig >= -psd_tol;
    let mut pass = psd;
    if closed_form {
        let xi = plot.point(theta)?;
        let jac = plot.jacobian_at(theta)?;
        let inv = DMatrix::from_diagonal(&DVector::from_iterator(xi.weights().len(), xi.weights().iter().map(|w| 1.0 / w)));
        let closed = jac.transpose() * inv * &jac;
        let residual = if g.nrows() == 0 { 0.0 } else { (&g - &closed).amax() };
        let tol = config.tolerance("closed_form");
        d.put("closed_form", ResultValue::matrix(&closed));
        d.scalar("closed_form_residual", residual);
        d.tol("closed_form", tol);
        pass &= residual <= tol;
    }
    d.verdict(pass, if pass { "psd" } else { "failed" });
    Ok(d)
}

fn integrability_records(config: &ExperimentConfig, model: &str, grid: &Option<GridOptions>) -> Result<Vec<Draft>> {
    let spec = grid_spec(grid);
    let start = Instant::now();
    let report = integrability_report(&config.models[model], &spec);
    let elapsed = start.elapsed().as_secs_f64() / report.plots.len().max(1) as f64;
    Ok(report
        .plots
        .iter()
        .map(|p| {
            let mut d = Draft::new(json!({ "model": model, "plot": p.label, "levels": spec.levels, "margin": spec.margin }));
            d.put("verdict", ResultValue::Text(p.verdict.as_str().into()))
                .put("almost_2", ResultValue::Bool(p.almost_2))
                .put("continuity_stable", ResultValue::Bool(p.continuity_stable))
                .put("continuity_scores", ResultValue::Vector(p.levels.iter().map(|l| l.continuity_score).collect()))
                .put("score_ratios", ResultValue::Vector(p.score_ratios.clone()))
                .put("points_checked", ResultValue::Integer(p.levels.iter().map(|l| l.points.len() as i64).sum()))
                .put("violations", ResultValue::Matrix(p.violations().map(|v| v.theta.clone()).collect()));
            d.tol("support", SUPPORT_TOL)
                .tol("score_ratio_min", crate::diffeo::SCORE_RATIO_MIN)
                .tol("score_ratio_max", crate::diffeo::SCORE_RATIO_MAX)
                .verdict(p.almost_2, p.verdict.as_str());
            d.wall_time = elapsed;
            d
        })
        .collect())
}

fn straight_curve(plot: &Plot, theta: &[f64], dir: &[f64], half_width: f64) -> Result<Plot> {
    let m = plot.domain_dim();
    if dir.len() != m {
        return Err(Error::Domain {
            theta: dir.to_vec(),
            reason: format!("probe direction needs {m} components"),
        });
    }
    plot.precompose_affine(
        theta.to_vec(),
        DMatrix::from_column_slice(m, 1, dir),
        ParamDomain::open_box(vec![(-half_width, half_width)])?,
    )
}

fn cone_record(config: &ExperimentConfig, model_name: &str, probe: &ConeProbeSpec) -> Result<Draft> {
    let model = &config.models[model_name];
    let plot = &config.plots[&probe.plot];
    let xi = plot.point(&probe.theta)?;
    let w = probe.half_width.unwrap_or(PROBE_HALF_WIDTH);
    let mut curves = probe
        .directions
        .iter()
        .map(|d| straight_curve(plot, &probe.theta, d, w))
        .collect::<Result<Vec<_>>>()?;
    curves.extend(probe.curves.iter().map(|c| config.plots[c].clone()));
    let r = tangent_cone_probe(model, &xi, &curves)?;

    let mut d = Draft::new(json!({
        "model": model_name,
        "label": probe.label,
        "plot": probe.plot,
        "theta": probe.theta,
        "directions": probe.directions,
        "curves": probe.curves,
    }));
    let realizing = r.realizing_plot.map_or("none".to_string(), |i| model.plots()[i].label().to_string());
    d.put("base", ResultValue::Vector(xi.weights().to_vec()))
        .put("span_dim", ResultValue::Integer(r.span_dim as i64))
        .put("is_linear", ResultValue::Bool(r.is_linear))
        .put("direction_count", ResultValue::Integer(r.directions.len() as i64))
        .put("directions", ResultValue::Matrix(r.directions.iter().map(|v| v.weights().to_vec()).collect()))
        .put("realizing_plot", ResultValue::Text(realizing));
    d.tol("cone_rank", CONE_RANK_TOL)
        .tol("direction_dedup", DIRECTION_DEDUP_TOL)
        .tol("linearity", LINEARITY_TOL);
    let mut pass = true;
    if let Some(e) = &probe.expect {
        pass &= e.span_dim.is_none_or(|s| s == r.span_dim);
        pass &= e.is_linear.is_none_or(|l| l == r.is_linear);
    }
    let shape = if r.is_linear { "linear" } else { "not linear" };
    d.verdict(pass, format!("span {}, {shape}", r.span_dim));
    Ok(d)
}

fn grid_samples(domain: &ParamDomain, spec: &GridSpec) -> Vec<Vec<f64>> {
    spec.levels
        .iter()
        .flat_map(|&n| grid_points(domain, n, spec.margin).0.into_iter().map(|(_, t)| t))
        .collect()
}

fn pushforward_records(config: &ExperimentConfig, kernel: &str, model: &str, grid: &Option<GridOptions>) -> Result<Vec<Draft>> {
    let spec = grid_spec(grid);
    let k = &config.kernels[kernel];
    let pushed = k.pushforward_model(&config.models[model])?;
    let integrability = integrability_report(&pushed, &spec);
    pushed
        .plots()
        .iter()
        .zip(&integrability.plots)
        .map(|(p, integ)| {
            timed(|| {
                let check = check_plot_invariants(p, &grid_samples(p.domain(), &spec));
                let mut d = Draft::new(json!({ "kernel": kernel, "model": model, "plot": p.label() }));
                d.put("points_checked", ResultValue::Integer(check.points_checked as i64))
                    .scalar("max_simplex_defect", check.max_simplex_defect)
                    .scalar("max_jacobian_mass", check.max_jacobian_mass)
                    .scalar("max_fd_discrepancy", check.max_fd_discrepancy)
                    .put("invariants_pass", ResultValue::Bool(check.passed()))
                    .put("almost_2", ResultValue::Bool(integ.almost_2))
                    .put("integrability", ResultValue::Text(integ.verdict.as_str().into()));
                d.tol("plot_output", PLOT_OUTPUT_TOL)
                    .tol("jacobian_mass", JACOBIAN_MASS_TOL)
                    .tol("jacobian_fd", JACOBIAN_FD_TOL)
                    .tol("support", SUPPORT_TOL);
                let pass = check.passed() && integ.almost_2;
                d.verdict(pass, if pass { "valid plot" } else { "invalid plot" });
                Ok(d)
            })
        })
        .collect()
}

fn sufficiency_record(config: &ExperimentConfig, kernel_name: &str, sample: &SampleSpec, expect: bool) -> Result<Draft> {
    let kernel = &config.kernels[kernel_name];
    let (measures, tangents): (Vec<ProbabilityMeasure>, Vec<TangentVector>) = match sample {
        SampleSpec::Measures { measures } => (
            measures
                .iter()
                .map(|w| ProbabilityMeasure::new(kernel.source().clone(), w.clone()))
                .collect::<Result<_>>()?,
            Vec::new(),
        ),
        SampleSpec::OnPlot { plot, thetas } => {
            let p = &config.plots[plot];
            let mut ms = Vec::new();
            let mut ts = Vec::new();
            for t in thetas {
                ms.push(p.point(t)?);
                ts.extend(p.velocity_basis(t)?);
            }
            (ms, ts)
        }
    };
    let tol = config.tolerance("sufficiency");
    let report = check_sufficiency(kernel, &measures, tol)?;
    let gaps = tangents
        .iter()
        .map(|a| Ok(a.fisher_norm_sq() - kernel.pushforward_tangent(a)?.fisher_norm_sq()))
        .collect::<Result<Vec<f64>>>()?;
    let max_gap = gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let iso_tol = config.tolerance("isometry");

    let mut d = Draft::new(json!({ "kernel": kernel_name, "sample": serde_json::to_value(sample).unwrap_or(Value::Null) }));
    let fibers: Vec<usize> = report.compared_fibers.clone();
    d.put("is_sufficient", ResultValue::Bool(report.is_sufficient))
        .scalar("max_discrepancy", report.max_discrepancy)
        .put(
            "compared_fibers",
            ResultValue::Text(fibers.iter().map(|&j| kernel.target().label(j)).collect::<Vec<_>>().join(",")),
        )
        .put(
            "conditional",
            ResultValue::Matrix(
                fibers
                    .iter()
                    .map(|&j| report.conditional[j].as_ref().expect("compared fiber").weights().to_vec())
                    .collect(),
            ),
        );
    d.tol("sufficiency", tol);
    let mut pass = report.is_sufficient == expect;
    if !gaps.is_empty() {
        d.put("fisher_gaps", ResultValue::Vector(gaps.clone()))
            .scalar("max_abs_fisher_gap", max_gap);
        if report.is_sufficient {
            d.tol("isometry", iso_tol);
            pass &= max_gap <= iso_tol;
        }
    }
    d.verdict(pass, if report.is_sufficient { "sufficient" } else { "not sufficient" });
    Ok(d)
}

struct Sweep<'a> {
    config: &'a ExperimentConfig,
    model: Option<&'a str>,
    targets: usize,
    zero_fraction: f64,
    seed: u64,
    experiment: usize,
}

fn random_kernel<R: Rng>(rng: &mut R, source: &FiniteSampleSpace, target: &FiniteSampleSpace, zero_fraction: f64) -> Result<MarkovKernel> {
    let (n, m) = (source.len(), target.len());
    let mut rows = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if !rng.random_bool(zero_fraction) {
                rows[(i, j)] = rng.random_range(0.0..1.0);
            }
        }
        if rows.row(i).sum() <= 0.0 {
            rows[(i, rng.random_range(0..m))] = 1.0;
        }
        let s = rows.row(i).sum();
        rows.row_mut(i).scale_mut(1.0 / s);
    }
    MarkovKernel::new(source.clone(), target.clone(), rows)
}

fn random_interior<R: Rng>(rng: &mut R, domain: &ParamDomain) -> Result<Vec<f64>> {
    let bbox = domain.bounding_box();
    for _ in 0..1000 {
        let theta: Vec<f64> = bbox
            .iter()
            .map(|&(lo, hi)| {
                let pad = 0.1 * (hi - lo);
                rng.random_range(lo + pad..hi - pad)
            })
            .collect();
        if domain.boundary_distance(&theta) > 1e-3 {
            return Ok(theta);
        }
    }
    Err(Error::Domain {
        theta: vec![],
        reason: "no interior sample point found".into(),
    })
}

impl Sweep<'_> {
    fn record(&self, r: usize) -> Result<Draft> {
        let mut rng = record_rng(self.seed, self.experiment, r);
        let space = &self.config.space;
        let n = space.len();
        let (tangent, origin) = match self.model {
            Some(name) => {
                let model = &self.config.models[name];
                let pi = rng.random_range(0..model.plots().len());
                let plot = &model.plots()[pi];
                let theta = random_interior(&mut rng, plot.domain())?;
                let v: Vec<f64> = (0..plot.domain_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let origin = json!({ "model": name, "plot": plot.label(), "theta": theta, "velocity": v });
                (plot.velocity(&theta, &v)?, origin)
            }
            None => {
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let xi = ProbabilityMeasure::from_approx(space.clone(), raw.iter().map(|w| w / total).collect(), 1e-12)?;
                let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mean = dir.iter().sum::<f64>() / n as f64;
                let dir = SignedMeasure::new(space.clone(), dir.iter().map(|x| x - mean).collect())?;
                let origin = json!({ "base": xi.weights(), "direction": dir.weights() });
                (TangentVector::new(xi, dir)?, origin)
            }
        };
        let target = FiniteSampleSpace::indexed(self.targets)?;
        let kernel = random_kernel(&mut rng, space, &target, self.zero_fraction)?;
        let pushed = kernel.pushforward_tangent(&tangent)?;
        let before = tangent.fisher_norm_sq();
        let after = pushed.fisher_norm_sq();
        let gap = before - after;
        let tol = self.config.tolerance("monotonicity");

        let kernel_rows: Vec<Vec<f64>> = kernel.rows().row_iter().map(|r| r.iter().copied().collect()).collect();
        let mut d = Draft::new(json!({ "seed": self.seed, "origin": origin, "kernel": kernel_rows }));
        d.put("base", ResultValue::Vector(tangent.base().weights().to_vec()))
            .put("direction", ResultValue::Vector(tangent.direction().weights().to_vec()))
            .scalar("fisher_norm_sq", before)
            .scalar("pushed_fisher_norm_sq", after)
            .scalar("gap", gap)
            .tol("monotonicity", tol);
        let pass = gap >= -tol;
        d.verdict(pass, if pass { "monotone" } else { "violated" });
        Ok(d)
    }
}

fn cramer_rao_record(
    config: &ExperimentConfig,
    estimator: &str,
    phi: &str,
    point: &PointSpec,
    basis: &BasisSpec,
    expect: &CramerRaoExpectation,
) -> Result<Draft> {
    let sigma = &config.estimators[estimator];
    let phi_map = &config.phis[phi];
    let (xi, theta) = resolve_point(config, point)?;
    let tangent_basis = match basis {
        BasisSpec::Full => full_tangent_basis(&xi)?,
        BasisSpec::Plot(name) => {
            let plot = &config.plots[name];
            let theta = match (point, theta) {
                (PointSpec::OnPlot { plot: p, .. }, Some(t)) if p == name => t,
                _ => plot.locate(&xi).ok_or_else(|| Error::NotOnPlot(xi.weights().to_vec()))?,
            };
            plot.velocity_basis(&theta)?
        }
    };
    let variance = variance_form(sigma, phi_map, &xi)?;
    let inverse = inverse_fisher_form(sigma, phi_map, &xi, &tangent_basis)?;
    let gap = cramer_rao_gap(sigma, phi_map, &xi, &tangent_basis)?;
    let psd_tol = config.tolerance("psd");
    let attained_tol = config.tolerance("attained");
    let min_eig = if gap.dim() == 0 { 0.0 } else { gap.min_eigenvalue() };
    let psd = min_eig >= -psd_tol;
    let attained = psd && gap.max_abs() <= attained_tol;

    let mut d = Draft::new(json!({
        "estimator": estimator,
        "phi": phi,
        "point": serde_json::to_value(point).unwrap_or(Value::Null),
        "basis": serde_json::to_value(basis).unwrap_or(Value::Null),
    }));
    d.put("base", ResultValue::Vector(xi.weights().to_vec()))
        .put("variance", ResultValue::matrix(variance.matrix()))
        .put("inverse_fisher", ResultValue::matrix(inverse.matrix()))
        .put("gap", ResultValue::matrix(gap.matrix()))
        .scalar("gap_min_eigenvalue", min_eig)
        .scalar("gap_max_abs", gap.max_abs())
        .put("psd", ResultValue::Bool(psd));
    d.tol("psd", psd_tol).tol("attained", attained_tol);
    let label = if attained {
        "attained"
    } else if psd {
        "bound holds"
    } else {
        "violated"
    };
    let pass = psd && (*expect != CramerRaoExpectation::Attained || attained);
    d.verdict(pass, label);
    Ok(d)
}
