use nalgebra::{DMatrix, DVector};

use super::estimator::Estimator;
use super::forms::{phi_matrix, variance_form, QuadraticForm};
use super::phi::PhiMap;
use crate::diffeo::{fisher_gram_of, fisher_metric, TangentVector, BASE_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{expectation, l2_inner, PointFunction, ProbabilityMeasure, SignedMeasure};

/// A tangent basis is degenerate when its Gram matrix has an eigenvalue at or below this.
pub const GRAM_DEGENERACY_TOL: f64 = 1e-10;

/// Metric gradient of one component of the `φ`-mean, as coordinates in the
/// supplied tangent basis and as a tangent vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherGradient {
    pub base: ProbabilityMeasure,
    pub coefficients: Vec<f64>,
    pub as_tangent: TangentVector,
}

/// `(e_i − e_last) ξ`-style basis of the full tangent space at an interior point.
pub fn full_tangent_basis(xi: &ProbabilityMeasure) -> Result<Vec<TangentVector>> {
    let n = xi.space().len();
    (0..n.saturating_sub(1))
        .map(|i| {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            w[n - 1] = -1.0;
            TangentVector::new(xi.clone(), SignedMeasure::new(xi.space().clone(), w)?)
        })
        .collect()
}

struct Projection {
    gram: DMatrix<f64>,
    centred: DMatrix<f64>,
}

fn prepare(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure, basis: &[TangentVector]) -> Result<Projection> {
    sigma.space().ensure_same(xi.space(), "estimator and base point")?;
    for b in basis {
        let deviation = b.base().max_deviation(xi);
        if deviation > BASE_TOL {
            return Err(Error::BaseMismatch { deviation });
        }
    }
    let gram = fisher_gram_of(basis)?;
    let min_eigenvalue = linalg::min_eigenvalue(&gram);
    if !basis.is_empty() && min_eigenvalue <= GRAM_DEGENERACY_TOL {
        return Err(Error::DegenerateBasis { min_eigenvalue });
    }
    let mut centred = phi_matrix(sigma, phi)?;
    for l in 0..centred.ncols() {
        let f = PointFunction::new(xi.space().clone(), centred.column(l).iter().copied().collect())?;
        let mean = expectation(&f, xi)?;
        centred.column_mut(l).add_scalar_mut(-mean);
    }
    Ok(Projection { gram, centred })
}

fn gradient_from(projection: &Projection, l: usize, xi: &ProbabilityMeasure, basis: &[TangentVector]) -> Result<FisherGradient> {
    let f = PointFunction::new(xi.space().clone(), projection.centred.column(l).iter().copied().collect())?;
    if basis.is_empty() {
        return Ok(FisherGradient {
            base: xi.clone(),
            coefficients: Vec::new(),
            as_tangent: TangentVector::zero(xi.clone()),
        });
    }
    let r = basis
        .iter()
        .map(|b| l2_inner(&f, b.log_rep(), xi))
        .collect::<Result<Vec<_>>>()?;
    let c = linalg::solve_spd(&projection.gram, &DVector::from_vec(r)).ok_or(Error::DegenerateBasis {
        min_eigenvalue: linalg::min_eigenvalue(&projection.gram),
    })?;
    let terms: Vec<(f64, &TangentVector)> = c.iter().copied().zip(basis.iter()).collect();
    let as_tangent = TangentVector::linear_combination(&terms)?;
    Ok(FisherGradient {
        base: xi.clone(),
        coefficients: c.as_slice().to_vec(),
        as_tangent,
    })
}

/// The orthogonal projection of `φ^l ∘ σ̂ − E_ξ(φ^l ∘ σ̂)` onto the span of
/// the log representations of `basis`: solves `G c = r` with
/// `r_a = ⟨f, log X_a⟩_{L²(ξ)}`.
pub fn fisher_gradient(
    sigma: &Estimator,
    phi: &PhiMap,
    l: usize,
    xi: &ProbabilityMeasure,
    basis: &[TangentVector],
) -> Result<FisherGradient> {
    if l >= phi.dim() {
        return Err(Error::InvalidPhi(format!("component {l} out of range for dimension {}", phi.dim())));
    }
    let projection = prepare(sigma, phi, xi, basis)?;
    gradient_from(&projection, l, xi, basis)
}

/// `M_lk = g(grad φ^l, grad φ^k)`.
pub fn inverse_fisher_form(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure, basis: &[TangentVector]) -> Result<QuadraticForm> {
    let projection = prepare(sigma, phi, xi, basis)?;
    let grads = (0..phi.dim())
        .map(|l| gradient_from(&projection, l, xi, basis))
        .collect::<Result<Vec<_>>>()?;
    let d = phi.dim();
    let mut m = DMatrix::zeros(d, d);
    for l in 0..d {
        for k in l..d {
            let v = fisher_metric(&grads[l].as_tangent, &grads[k].as_tangent)?;
            m[(l, k)] = v;
            m[(k, l)] = v;
        }
    }
    QuadraticForm::new(m)
}

/// Variance form minus inverse-Fisher form.
pub fn cramer_rao_gap(sigma: &Estimator, phi: &PhiMap, xi: &ProbabilityMeasure, basis: &[TangentVector]) -> Result<QuadraticForm> {
    let variance = variance_form(sigma, phi, xi)?;
    let inverse = inverse_fisher_form(sigma, phi, xi, basis)?;
    QuadraticForm::new(variance.matrix() - inverse.matrix())
}
