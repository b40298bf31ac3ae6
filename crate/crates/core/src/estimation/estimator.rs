use crate::error::{Error, Result};
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure};

/// A map from sample atoms to probability measures on the same space.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimator {
    space: FiniteSampleSpace,
    assignment: Vec<ProbabilityMeasure>,
}

impl Estimator {
    pub fn new(space: FiniteSampleSpace, assignment: Vec<ProbabilityMeasure>) -> Result<Self> {
        if assignment.len() != space.len() {
            return Err(Error::InvalidEstimator(format!(
                "{} assigned measures for {} atoms",
                assignment.len(),
                space.len()
            )));
        }
        for (i, m) in assignment.iter().enumerate() {
            space.ensure_same(m.space(), &format!("estimate for atom {i}"))?;
        }
        Ok(Self { space, assignment })
    }

    /// `x ↦ δ_x`.
    pub fn plug_in(space: FiniteSampleSpace) -> Self {
        let assignment = (0..space.len()).map(|i| ProbabilityMeasure::dirac(space.clone(), i)).collect();
        Self { space, assignment }
    }

    /// `x ↦ (1 − ε) δ_x + ε · uniform`.
    pub fn smoothed(space: FiniteSampleSpace, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidEstimator(format!("smoothing weight {eps} outside [0, 1]")));
        }
        let n = space.len();
        let assignment = (0..n)
            .map(|i| {
                let w = (0..n)
                    .map(|j| eps / n as f64 + if i == j { 1.0 - eps } else { 0.0 })
                    .collect();
                ProbabilityMeasure::from_approx(space.clone(), w, 1e-12)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { space, assignment })
    }

    pub fn constant(point: &ProbabilityMeasure) -> Self {
        let space = point.space().clone();
        Self {
            assignment: vec![point.clone(); space.len()],
            space,
        }
    }

    /// One row of weights per atom.
    pub fn table(space: FiniteSampleSpace, rows: &[Vec<f64>]) -> Result<Self> {
        let assignment = rows
            .iter()
            .map(|r| ProbabilityMeasure::new(space.clone(), r.clone()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidEstimator(e.to_string()))?;
        Self::new(space, assignment)
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn assignment(&self) -> &[ProbabilityMeasure] {
        &self.assignment
    }

    pub fn estimate(&self, atom: usize) -> &ProbabilityMeasure {
        &self.assignment[atom]
    }
}
