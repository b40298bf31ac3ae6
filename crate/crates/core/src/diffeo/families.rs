//! Ready-made plots: constants, the open simplex, affine mixtures,
//! exponential families and tabulated grids.

use nalgebra::{DMatrix, DVector};

use super::plot::{ParamDomain, Plot, Smoothness, PLOT_OUTPUT_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure};

/// The constant map `θ ↦ ξ` on `R^dim`. Every model admits these.
pub fn constant_plot(point: &ProbabilityMeasure, dim: usize) -> Plot {
    let weights = point.weights().to_vec();
    let n = weights.len();
    let target = point.clone();
    Plot::new(point.space().clone(), ParamDomain::whole_space(dim), Smoothness::Infinite, move |_| {
        Ok(weights.clone())
    })
    .with_jacobian(move |_| DMatrix::zeros(n, dim))
    .with_inverse(move |xi| (xi.max_deviation(&target) <= PLOT_OUTPUT_TOL).then(|| vec![0.0; dim]))
    .with_label("constant")
}

/// The full open simplex `(η_1, …, η_{n-1}) ↦ (η_1, …, η_{n-1}, 1 - Σ η)`.
pub fn simplex_plot(space: &FiniteSampleSpace) -> Plot {
    let n = space.len();
    let m = n - 1;
    Plot::new(space.clone(), ParamDomain::OpenSimplex(m), Smoothness::Infinite, move |eta| {
        let mut w = eta.to_vec();
        w.push(1.0 - eta.iter().sum::<f64>());
        Ok(w)
    })
    .with_jacobian(move |_| {
        DMatrix::from_fn(n, m, |i, a| {
            if i == m {
                -1.0
            } else if i == a {
                1.0
            } else {
                0.0
            }
        })
    })
    .with_inverse(move |xi| Some(xi.weights()[..m].to_vec()))
    .with_label("simplex")
}

/// Mixture family `η ↦ [Σ_a g^a η_a + g^k (1 - Σ_a η_a)] μ₀` built from `k`
/// densities `g^1, …, g^k` with respect to `μ₀`; it has `k - 1` parameters.
///
/// Each density must be nonnegative with `E_{μ₀} g = 1`.
pub fn affine_mixture_plot(base: &ProbabilityMeasure, densities: &[Vec<f64>], domain: ParamDomain) -> Result<Plot> {
    let n = base.space().len();
    let k = densities.len();
    if k == 0 {
        return Err(model_err("a mixture needs at least one density"));
    }
    if domain.dim() != k - 1 {
        return Err(model_err(format!(
            "{k} densities give {} parameters but the domain has dimension {}",
            k - 1,
            domain.dim()
        )));
    }
    for (a, g) in densities.iter().enumerate() {
        if g.len() != n {
            return Err(model_err(format!("density {a} has {} values for {n} atoms", g.len())));
        }
        if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(model_err(format!("density {a} must be finite and nonnegative")));
        }
        let mean: f64 = g.iter().zip(base.weights()).map(|(g, w)| g * w).sum();
        if (mean - 1.0).abs() > PLOT_OUTPUT_TOL {
            return Err(model_err(format!("density {a} has base expectation {mean}, expected 1")));
        }
    }
    let mu0 = base.weights().to_vec();
    let last = &densities[k - 1];
    // offset_i = μ₀_i g^k_i, column a = μ₀_i (g^a_i - g^k_i)
    let offset = DVector::from_fn(n, |i, _| mu0[i] * last[i]);
    let jac = DMatrix::from_fn(n, k - 1, |i, a| mu0[i] * (densities[a][i] - last[i]));

    let (eval_off, eval_jac) = (offset.clone(), jac.clone());
    let jac_for_deriv = jac.clone();
    let (inv_off, inv_jac) = (offset, jac);
    Ok(Plot::new(base.space().clone(), domain, Smoothness::Infinite, move |eta| {
        let w = &eval_off + &eval_jac * DVector::from_column_slice(eta);
        Ok(w.as_slice().to_vec())
    })
    .with_jacobian(move |_| jac_for_deriv.clone())
    .with_inverse(move |xi| {
        let rhs = DVector::from_column_slice(xi.weights()) - &inv_off;
        linalg::least_squares(&inv_jac, &rhs).map(|eta| eta.as_slice().to_vec())
    })
    .with_label("affine_mixture"))
}

/// Exponential family `p_θ(x) ∝ μ₀(x) exp(Σ_a θ_a T_a(x))` with sufficient
/// statistics `T_a` given as rows of `statistics` (d × n).
pub fn exponential_family_plot(base: &ProbabilityMeasure, statistics: &[Vec<f64>], domain: ParamDomain) -> Result<Plot> {
    let n = base.space().len();
    let d = statistics.len();
    if domain.dim() != d {
        return Err(model_err(format!(
            "{d} statistics but the domain has dimension {}",
            domain.dim()
        )));
    }
    for (a, t) in statistics.iter().enumerate() {
        if t.len() != n || t.iter().any(|v| !v.is_finite()) {
            return Err(model_err(format!("statistic {a} must have {n} finite values")));
        }
    }
    let mu0 = base.weights().to_vec();
    let stats = statistics.to_vec();
    let density = move |theta: &[f64]| -> Vec<f64> {
        let logits: Vec<f64> = (0..n)
            .map(|i| (0..d).map(|a| theta[a] * stats[a][i]).sum::<f64>())
            .collect();
        let top = logits
            .iter()
            .zip(&mu0)
            .filter(|(_, &w)| w > 0.0)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = logits
            .iter()
            .zip(&mu0)
            .map(|(l, &w)| if w > 0.0 { w * (l - top).exp() } else { 0.0 })
            .collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / z).collect()
    };
    let density_for_jac = density.clone();
    let stats = statistics.to_vec();
    Ok(Plot::new(base.space().clone(), domain, Smoothness::Infinite, move |theta| Ok(density(theta)))
        .with_jacobian(move |theta| {
            let p = density_for_jac(theta);
            let means: Vec<f64> = (0..d)
                .map(|a| stats[a].iter().zip(&p).map(|(t, w)| t * w).sum())
                .collect();
            DMatrix::from_fn(n, d, |i, a| p[i] * (stats[a][i] - means[a]))
        })
        .with_label("exponential_family"))
}

/// A plot known only on a finite parameter grid. Evaluation off the grid is
/// a domain error, so velocities are unavailable.
pub fn table_plot(space: &FiniteSampleSpace, entries: Vec<(Vec<f64>, ProbabilityMeasure)>, domain: ParamDomain) -> Result<Plot> {
    for (theta, p) in &entries {
        if theta.len() != domain.dim() {
            return Err(model_err(format!("table parameter {theta:?} has the wrong dimension")));
        }
        if !domain.contains(theta) {
            return Err(model_err(format!("table parameter {theta:?} lies outside the domain")));
        }
        space.ensure_same(p.space(), "table plot")?;
    }
    let lookup = entries.clone();
    let reverse = entries;
    Ok(Plot::new(space.clone(), domain, Smoothness::Infinite, move |theta| {
        lookup
            .iter()
            .find(|(t, _)| t.iter().zip(theta).all(|(a, b)| (a - b).abs() <= 1e-12))
            .map(|(_, p)| p.weights().to_vec())
            .ok_or_else(|| Error::Domain {
                theta: theta.to_vec(),
                reason: "not a registered grid point of the table plot".into(),
            })
    })
    .with_inverse(move |xi| {
        reverse
            .iter()
            .find(|(_, p)| p.max_deviation(xi) <= PLOT_OUTPUT_TOL)
            .map(|(t, _)| t.clone())
    })
    .with_label("table"))
}

fn model_err(reason: impl Into<String>) -> Error {
    Error::Model {
        theta: vec![],
        reason: reason.into(),
    }
}
