//! Diffeological statistical models over a finite sample space.
//!
//! A model is presented by a finite family of [`Plot`]s into the simplex.
//! Closure under precomposition is available through
//! [`Plot::precompose_affine`]; constant maps are always admitted.

mod cone;
pub mod families;
mod integrability;
mod plot;
mod tangent;

use nalgebra::DMatrix;

pub use cone::{tangent_cone_probe, ConeProbeReport, CONE_RANK_TOL, CURVE_BASE_TOL, DIRECTION_DEDUP_TOL, LINEARITY_TOL};
pub use integrability::{
    grid_points, integrability_report, GridPointStatus, IndexedPoints, GridSpec, IntegrabilityReport, IntegrabilityVerdict,
    LevelReport, PlotIntegrability, SCORE_RATIO_MAX, SCORE_RATIO_MIN,
};
pub use plot::{
    check_plot_invariants, ParamDomain, Plot, PlotInvariantCheck, Smoothness, FD_STEP, JACOBIAN_FD_TOL,
    JACOBIAN_MASS_TOL, PLOT_OUTPUT_TOL,
};
pub use tangent::{fisher_gram_of, fisher_metric, TangentVector, BASE_TOL, TANGENT_MASS_TOL};

use crate::error::{Error, Result};
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure};

/// A `C^k`-diffeological statistical model presented by generating plots.
#[derive(Clone, Debug)]
pub struct DiffeologicalModel {
    space: FiniteSampleSpace,
    plots: Vec<Plot>,
    order: Smoothness,
}

impl DiffeologicalModel {
    pub fn new(space: FiniteSampleSpace, plots: Vec<Plot>, order: Smoothness) -> Result<Self> {
        if plots.is_empty() {
            return Err(Error::Model {
                theta: vec![],
                reason: "a model needs at least one plot".into(),
            });
        }
        for (i, p) in plots.iter().enumerate() {
            space.ensure_same(p.space(), &format!("plot {i}"))?;
            if p.smoothness() < order {
                return Err(Error::Model {
                    theta: vec![],
                    reason: format!("plot {i} is only C^{} but the model is C^{order}", p.smoothness()),
                });
            }
        }
        Ok(Self { space, plots, order })
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn plots(&self) -> &[Plot] {
        &self.plots
    }

    pub fn order(&self) -> Smoothness {
        self.order
    }

    /// The constant plot at `point` (always a member of the diffeology).
    pub fn constant_plot(&self, point: &ProbabilityMeasure, dim: usize) -> Result<Plot> {
        self.space.ensure_same(point.space(), "constant plot")?;
        Ok(families::constant_plot(point, dim))
    }
}

/// `G_ab = g(dp(e_a), dp(e_b))` at `θ`; the empty matrix for 0-dimensional plots.
pub fn fisher_gram(plot: &Plot, theta: &[f64]) -> Result<DMatrix<f64>> {
    let basis = plot.velocity_basis(theta)?;
    fisher_gram_of(&basis)
}
