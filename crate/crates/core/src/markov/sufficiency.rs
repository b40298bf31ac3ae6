use super::kernel::MarkovKernel;
use crate::diffeo::TangentVector;
use crate::error::{Error, Result};
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure, SUPPORT_TOL};

/// Pushforward mass at or below this leaves the conditional undefined.
pub const FIBER_MASS_TOL: f64 = SUPPORT_TOL;

/// Lower bound accepted for a monotonicity gap before it counts as a violation.
pub const MONOTONICITY_TOL: f64 = 1e-9;

/// Bayes inverse of `T` at `μ`: for each target atom `y` with
/// `(T_*μ)(y) > FIBER_MASS_TOL`, the measure `x ↦ μ(x) T(x, y) / (T_*μ)(y)`.
pub fn conditionals(kernel: &MarkovKernel, mu: &ProbabilityMeasure) -> Result<Vec<Option<ProbabilityMeasure>>> {
    let pushed = kernel.pushforward_probability(mu)?;
    let rows = kernel.rows();
    (0..kernel.target().len())
        .map(|j| {
            let mass = pushed.weights()[j];
            if mass <= FIBER_MASS_TOL {
                return Ok(None);
            }
            let joint: Vec<f64> = mu.weights().iter().enumerate().map(|(i, m)| m * rows[(i, j)]).collect();
            let total: f64 = joint.iter().sum();
            let w = joint.into_iter().map(|v| v / total).collect();
            ProbabilityMeasure::from_approx(mu.space().clone(), w, 1e-9).map(Some)
        })
        .collect()
}

/// `μ` restricted to each fiber `κ⁻¹(y)` and renormalized; `None` on fibers of
/// negligible mass.
pub fn conditional_for_statistic(
    kappa: &[usize],
    target: &FiniteSampleSpace,
    mu: &ProbabilityMeasure,
) -> Result<Vec<Option<ProbabilityMeasure>>> {
    let kernel = MarkovKernel::deterministic(mu.space().clone(), target.clone(), kappa)?;
    conditionals(&kernel, mu)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SufficiencyReport {
    pub is_sufficient: bool,
    /// Conditionals of the first sample member on the compared fibers.
    pub conditional: Vec<Option<ProbabilityMeasure>>,
    /// Largest spread of a conditional weight across the sample.
    pub max_discrepancy: f64,
    /// Target atoms where every sample member has positive pushforward mass.
    pub compared_fibers: Vec<usize>,
    pub tolerance: f64,
}

/// Compares the Bayes-inverse conditionals of every sample member; `T` is
/// reported sufficient on the sample when they agree within `tol`.
pub fn check_sufficiency(kernel: &MarkovKernel, sample: &[ProbabilityMeasure], tol: f64) -> Result<SufficiencyReport> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let all = sample
        .iter()
        .map(|mu| conditionals(kernel, mu))
        .collect::<Result<Vec<_>>>()?;
    let compared_fibers: Vec<usize> = (0..kernel.target().len())
        .filter(|&j| all.iter().all(|c| c[j].is_some()))
        .collect();
    let mut max_discrepancy: f64 = 0.0;
    for &j in &compared_fibers {
        for i in 0..kernel.source().len() {
            let (lo, hi) = all
                .iter()
                .map(|c| c[j].as_ref().expect("compared fiber").weights()[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            max_discrepancy = max_discrepancy.max(hi - lo);
        }
    }
    let conditional = (0..kernel.target().len())
        .map(|j| if compared_fibers.contains(&j) { all[0][j].clone() } else { None })
        .collect();
    Ok(SufficiencyReport {
        is_sufficient: max_discrepancy <= tol,
        conditional,
        max_discrepancy,
        compared_fibers,
        tolerance: tol,
    })
}

/// `g(a, a) − g(T_*a, T_*a)`; nonnegative up to [`MONOTONICITY_TOL`].
pub fn monotonicity_gap(kernel: &MarkovKernel, a: &TangentVector) -> Result<f64> {
    let pushed = kernel.pushforward_tangent(a)?;
    let gap = a.fisher_norm_sq() - pushed.fisher_norm_sq();
    if gap < -MONOTONICITY_TOL {
        return Err(Error::MonotonicityViolated { gap });
    }
    Ok(gap)
}
