use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::diffeo::{DiffeologicalModel, Plot, TangentVector};
use crate::error::{Error, Result};
use crate::measure::{FiniteSampleSpace, PointFunction, ProbabilityMeasure, SignedMeasure};

/// Every kernel row must sum to one within this.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A probabilistic mapping between finite sample spaces: row `i` is the
/// probability measure assigned to source atom `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovKernel {
    source: FiniteSampleSpace,
    target: FiniteSampleSpace,
    rows: DMatrix<f64>,
}

impl MarkovKernel {
    pub fn new(source: FiniteSampleSpace, target: FiniteSampleSpace, rows: DMatrix<f64>) -> Result<Self> {
        if rows.nrows() != source.len() || rows.ncols() != target.len() {
            return Err(Error::InvalidKernel(format!(
                "matrix is {}x{} but the kernel maps {} atoms to {}",
                rows.nrows(),
                rows.ncols(),
                source.len(),
                target.len()
            )));
        }
        for i in 0..rows.nrows() {
            let row = rows.row(i);
            if let Some(j) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has invalid entry {} in column {j}",
                    row[j]
                )));
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidKernel(format!("row {i} sums to {sum}, expected 1")));
            }
        }
        Ok(Self { source, target, rows })
    }

    pub fn from_rows(source: FiniteSampleSpace, target: FiniteSampleSpace, rows: &[Vec<f64>]) -> Result<Self> {
        let m = target.len();
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::InvalidKernel(format!(
                "row {i} has {} entries, expected {m}",
                rows[i].len()
            )));
        }
        let mat = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        Self::new(source, target, mat)
    }

    /// The kernel `x ↦ δ_{κ(x)}` of an atom map.
    pub fn deterministic(source: FiniteSampleSpace, target: FiniteSampleSpace, kappa: &[usize]) -> Result<Self> {
        if kappa.len() != source.len() {
            return Err(Error::InvalidKernel(format!(
                "atom map covers {} atoms, the source has {}",
                kappa.len(),
                source.len()
            )));
        }
        if let Some(i) = kappa.iter().position(|&j| j >= target.len()) {
            return Err(Error::InvalidKernel(format!(
                "atom {i} maps to {} but the target has {} atoms",
                kappa[i],
                target.len()
            )));
        }
        let rows = DMatrix::from_fn(source.len(), target.len(), |i, j| if kappa[i] == j { 1.0 } else { 0.0 });
        Ok(Self { source, target, rows })
    }

    pub fn identity(space: FiniteSampleSpace) -> Self {
        let n = space.len();
        Self {
            target: space.clone(),
            source: space,
            rows: DMatrix::identity(n, n),
        }
    }

    pub fn source(&self) -> &FiniteSampleSpace {
        &self.source
    }

    pub fn target(&self) -> &FiniteSampleSpace {
        &self.target
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// The atom map when every row is a Dirac measure.
    pub fn atom_map(&self) -> Option<Vec<usize>> {
        (0..self.rows.nrows())
            .map(|i| {
                let row = self.rows.row(i);
                let j = row.iter().position(|&v| v == 1.0)?;
                row.iter().enumerate().all(|(k, &v)| k == j || v == 0.0).then_some(j)
            })
            .collect()
    }

    fn push_weights(&self, w: &[f64]) -> Vec<f64> {
        (self.rows.transpose() * DVector::from_column_slice(w)).as_slice().to_vec()
    }

    /// `(T_*μ)_j = Σ_i μ_i T_ij`.
    pub fn pushforward_measure(&self, mu: &SignedMeasure) -> Result<SignedMeasure> {
        self.source.ensure_same(mu.space(), "pushforward source")?;
        SignedMeasure::new(self.target.clone(), self.push_weights(mu.weights()))
    }

    pub fn pushforward_probability(&self, mu: &ProbabilityMeasure) -> Result<ProbabilityMeasure> {
        self.source.ensure_same(mu.space(), "pushforward source")?;
        ProbabilityMeasure::from_approx(self.target.clone(), self.push_weights(mu.weights()), 1e-9)
    }

    /// `(T*f)_i = Σ_j T_ij f_j`.
    pub fn pullback_function(&self, f: &PointFunction) -> Result<PointFunction> {
        self.target.ensure_same(f.space(), "pullback target")?;
        let v = &self.rows * DVector::from_column_slice(f.values());
        PointFunction::new(self.source.clone(), v.as_slice().to_vec())
    }

    /// `T_*` applied to base and direction; the log representation is recomputed.
    pub fn pushforward_tangent(&self, a: &TangentVector) -> Result<TangentVector> {
        let base = self.pushforward_probability(a.base())?;
        let direction = self.pushforward_measure(a.direction())?;
        TangentVector::new(base, direction)
    }

    /// The plot `T_* ∘ p`, with Jacobian `Tᵀ J`.
    pub fn pushforward_plot(&self, plot: &Plot) -> Result<Plot> {
        self.source.ensure_same(plot.space(), "pushforward plot")?;
        let t_eval = Arc::new(self.rows.transpose());
        let t_jac = Arc::clone(&t_eval);
        let inner = plot.eval_fn();
        let eval = Arc::new(move |theta: &[f64]| -> Result<Vec<f64>> {
            let w = inner(theta)?;
            Ok((t_eval.as_ref() * DVector::from_vec(w)).as_slice().to_vec())
        });
        let jacobian = plot.jacobian_fn().map(|j| {
            Arc::new(move |theta: &[f64]| -> DMatrix<f64> { t_jac.as_ref() * j(theta) }) as Arc<_>
        });
        let pushed = plot.with_parts(self.target.clone(), eval, jacobian, None);
        Ok(pushed.with_label(format!("pushforward({})", plot.label())))
    }

    pub fn pushforward_model(&self, model: &DiffeologicalModel) -> Result<DiffeologicalModel> {
        self.source.ensure_same(model.space(), "pushforward model")?;
        let plots = model
            .plots()
            .iter()
            .map(|p| self.pushforward_plot(p))
            .collect::<Result<Vec<_>>>()?;
        DiffeologicalModel::new(self.target.clone(), plots, model.order())
    }
}

/// `T2 ∘ T1`, the kernel whose rows are `T1` rows pushed through `T2`.
pub fn compose_kernels(t2: &MarkovKernel, t1: &MarkovKernel) -> Result<MarkovKernel> {
    t1.target.ensure_same(&t2.source, "kernel composition")?;
    Ok(MarkovKernel {
        source: t1.source.clone(),
        target: t2.target.clone(),
        rows: &t1.rows * &t2.rows,
    })
}
