use nalgebra::{DMatrix, DVector};

use super::plot::Plot;
use super::DiffeologicalModel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{ProbabilityMeasure, SignedMeasure};

/// A probe curve must hit the base point at `t = 0` within this.
pub const CURVE_BASE_TOL: f64 = 1e-9;
/// Directions with `|cos| > 1 - DIRECTION_DEDUP_TOL` count as the same line.
pub const DIRECTION_DEDUP_TOL: f64 = 1e-6;
/// Singular values above this count towards the span dimension.
pub const CONE_RANK_TOL: f64 = 1e-9;
/// Residual allowed when testing whether a unit vector of the span is a
/// velocity of the model.
pub const LINEARITY_TOL: f64 = 1e-6;

/// Tangent-cone structure at `base` as seen through a set of probe curves.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeProbeReport {
    pub base: ProbabilityMeasure,
    /// Unit (Euclidean) directions, one per distinct line through the origin.
    pub directions: Vec<SignedMeasure>,
    pub span_dim: usize,
    /// Whether the cone fills its linear span.
    pub is_linear: bool,
    /// The model plot whose differential covers the span, when one exists.
    pub realizing_plot: Option<usize>,
}

/// Collects the velocities `ċ(0)` of 1-parameter curves through `xi`,
/// deduplicated up to sign and scale, and decides whether the tangent cone
/// equals its span.
///
/// The span counts as filled when it is at most a line, or when some plot of
/// the model passes through `xi` at an interior parameter and its
/// differential there covers every unit vector of the span. A span covered
/// only by a union of lines from different plots (a singular point) is not
/// linear.
pub fn tangent_cone_probe(model: &DiffeologicalModel, xi: &ProbabilityMeasure, curves: &[Plot]) -> Result<ConeProbeReport> {
    model.space().ensure_same(xi.space(), "cone probe base")?;
    let mut directions: Vec<SignedMeasure> = Vec::new();
    for (i, curve) in curves.iter().enumerate() {
        model.space().ensure_same(curve.space(), &format!("probe curve {i}"))?;
        if curve.domain_dim() != 1 {
            return Err(Error::Domain {
                theta: vec![],
                reason: format!("probe curve {i} has {} parameters, expected 1", curve.domain_dim()),
            });
        }
        let at_zero = curve.point(&[0.0])?;
        let deviation = at_zero.max_deviation(xi);
        if deviation > CURVE_BASE_TOL {
            return Err(Error::CurveBase { curve: i, deviation });
        }
        let v = curve.velocity(&[0.0], &[1.0])?;
        let norm = v.direction().euclidean_norm();
        if norm <= CONE_RANK_TOL {
            continue;
        }
        let unit = v.direction().scaled(1.0 / norm);
        let duplicate = directions.iter().any(|d| {
            let cos: f64 = d.weights().iter().zip(unit.weights()).map(|(a, b)| a * b).sum();
            cos.abs() > 1.0 - DIRECTION_DEDUP_TOL
        });
        if !duplicate {
            directions.push(unit);
        }
    }

    let n = xi.space().len();
    let mat = DMatrix::from_fn(n, directions.len(), |i, c| directions[c].weights()[i]);
    let span_dim = linalg::numerical_rank(&mat, CONE_RANK_TOL);

    let realizing_plot = if span_dim <= 1 {
        None
    } else {
        let span = linalg::column_basis(&mat, CONE_RANK_TOL);
        model
            .plots()
            .iter()
            .position(|p| differential_covers(p, xi, &span))
    };
    let is_linear = span_dim <= 1 || realizing_plot.is_some();

    Ok(ConeProbeReport {
        base: xi.clone(),
        directions,
        span_dim,
        is_linear,
        realizing_plot,
    })
}

fn differential_covers(plot: &Plot, xi: &ProbabilityMeasure, span: &DMatrix<f64>) -> bool {
    let Some(theta) = plot.locate(xi) else {
        return false;
    };
    if !plot.domain().contains(&theta) {
        return false;
    }
    let Ok(jac) = plot.jacobian_at(&theta) else {
        return false;
    };
    let range = linalg::column_basis(&jac, CONE_RANK_TOL);
    (0..span.ncols()).all(|c| {
        let u: DVector<f64> = span.column(c).into_owned();
        let projected = &range * (range.transpose() * &u);
        (u - projected).norm() <= LINEARITY_TOL
    })
}
