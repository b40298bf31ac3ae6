use nalgebra::{DMatrix, DVector};

use super::estimator::Estimator;
use super::phi::PhiMap;
use crate::diffeo::{grid_points, DiffeologicalModel, GridSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::ProbabilityMeasure;

/// A form is PSD when its smallest eigenvalue is at least `-PSD_TOL`.
pub const PSD_TOL: f64 = 1e-9;
/// Largest asymmetry accepted when building a form.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric bilinear form on `R^d` with its PSD verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    matrix: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl QuadraticForm {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidMeasure(format!(
                "quadratic form needs a square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = linalg::asymmetry(&matrix);
        if asym > SYMMETRY_TOL * matrix.amax().max(1.0) {
            return Err(Error::InvalidMeasure(format!("quadratic form is asymmetric by {asym:e}")));
        }
        let matrix = linalg::symmetrized(&matrix);
        let min_eigenvalue = linalg::min_eigenvalue(&matrix);
        Ok(Self { matrix, min_eigenvalue })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOL
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.amax()
    }
}

/// Row `x` holds `φ(σ̂(x))`.
pub fn phi_matrix(sigma: &Estimator, phi: &PhiMap) -> Result<DMatrix<f64>> {
    sigma.space().ensure_same(phi.space(), "estimator and phi")?;
    let n = sigma.space().len();
    let mut m = DMatrix::zeros(n, phi.dim());
    for x in 0..n {
        let v = phi.apply(sigma.estimate(x))?;
        m.row_mut(x).copy_from_slice(&v);
    }
    Ok(m)
}

fn weights(sigma: &Estimator, xi: &ProbabilityMeasure) -> Result<DVector<f64>> {
    sigma.space().ensure_same(xi.space(), "estimator and base point")?;
    Ok(DVector::from_column_slice(xi.weights()))
}

/// `E_ξ[φ ∘ σ̂]`.
pub fn phi_mean(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure) -> Result<Vec<f64>> {
    let w = weights(sigma, xi)?;
    let m = phi_matrix(sigma, phi)?;
    Ok((m.transpose() * w).as_slice().to_vec())
}

pub fn bias(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure) -> Result<Vec<f64>> {
    let mean = phi_mean(sigma, phi, xi)?;
    let at = phi.apply(xi)?;
    Ok(mean.iter().zip(&at).map(|(a, b)| a - b).collect())
}

/// `E_ξ[(φ∘σ̂ − c)(φ∘σ̂ − c)ᵀ]`.
fn centred_second_moment(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure, centre: &[f64]) -> Result<QuadraticForm> {
    let w = weights(sigma, xi)?;
    let m = phi_matrix(sigma, phi)?;
    let d = phi.dim();
    let c = DVector::from_column_slice(centre);
    let mut form = DMatrix::zeros(d, d);
    for x in 0..m.nrows() {
        let r = m.row(x).transpose() - &c;
        form += (&r * r.transpose()) * w[x];
    }
    QuadraticForm::new(form)
}

pub fn mse_form(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure) -> Result<QuadraticForm> {
    let at = phi.apply(xi)?;
    centred_second_moment(sigma, phi, xi, &at)
}

pub fn variance_form(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure) -> Result<QuadraticForm> {
    let mean = phi_mean(sigma, phi, xi)?;
    centred_second_moment(sigma, phi, xi, &mean)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiRegularityReport {
    /// `sup ‖φ^l ∘ σ̂‖_{L²(ξ)}` over the grid, per component.
    pub sup_norms: Vec<f64>,
    pub points_checked: usize,
    pub regular: bool,
}

impl PhiRegularityReport {
    pub fn verdict(&self) -> &'static str {
        if self.regular {
            "regular"
        } else {
            "not regular"
        }
    }
}

/// Sup of the component norms of `φ ∘ σ̂` over model points on the plot grids.
/// Bounded functions on a finite space are always regular, so the verdict
/// only fails if a norm is not finite.
pub fn check_phi_regular(sigma: &Estimator, phi: &PhiMap, model: &DiffeologicalModel, grid: &GridSpec) -> Result<PhiRegularityReport> {
    let m = phi_matrix(sigma, phi)?;
    let mut sup_norms = vec![0.0f64; phi.dim()];
    let mut points_checked = 0;
    for plot in model.plots() {
        for &per_axis in &grid.levels {
            for (_, theta) in grid_points(plot.domain(), per_axis, grid.margin).0 {
                let Ok(xi) = plot.point(&theta) else { continue };
                points_checked += 1;
                for (l, sup) in sup_norms.iter_mut().enumerate() {
                    let norm_sq: f64 = (0..m.nrows()).map(|x| xi.weights()[x] * m[(x, l)] * m[(x, l)]).sum();
                    *sup = sup.max(norm_sq.sqrt());
                }
            }
        }
    }
    let regular = sup_norms.iter().all(|s| s.is_finite());
    Ok(PhiRegularityReport {
        sup_norms,
        points_checked,
        regular,
    })
}
