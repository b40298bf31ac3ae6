use rayon::prelude::*;

use super::plot::{ParamDomain, Plot};
use super::tangent::fisher_gram_of;
use super::DiffeologicalModel;

/// Parameter grids used to probe integrability: `levels[i]` points per axis
/// at refinement level `i`, kept at relative distance `margin` from the
/// domain boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub levels: Vec<usize>,
    pub margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            levels: vec![8, 20, 50],
            margin: 0.1,
        }
    }
}

/// Lowest acceptable ratio of continuity scores between refinement levels.
pub const SCORE_RATIO_MIN: f64 = 0.5;
/// Highest acceptable ratio of continuity scores between refinement levels.
pub const SCORE_RATIO_MAX: f64 = 2.0;

/// Grid points paired with their multi-index.
pub type IndexedPoints = Vec<(Vec<usize>, Vec<f64>)>;

/// Grid points of one refinement level and the step per axis.
/// Points closer than the margin to the boundary are dropped.
pub fn grid_points(domain: &ParamDomain, per_axis: usize, margin: f64) -> (IndexedPoints, Vec<f64>) {
    let bbox = domain.bounding_box();
    let m = bbox.len();
    let per_axis = per_axis.max(2);
    let insets: Vec<f64> = bbox.iter().map(|(lo, hi)| margin * (hi - lo)).collect();
    let steps: Vec<f64> = bbox
        .iter()
        .zip(&insets)
        .map(|((lo, hi), d)| (hi - lo - 2.0 * d) / (per_axis - 1) as f64)
        .collect();
    let min_clearance = 0.999 * insets.iter().copied().fold(f64::INFINITY, f64::min);

    let mut points = Vec::new();
    let total = per_axis.pow(m as u32);
    for flat in 0..total {
        let mut idx = Vec::with_capacity(m);
        let mut rest = flat;
        for _ in 0..m {
            idx.push(rest % per_axis);
            rest /= per_axis;
        }
        let theta: Vec<f64> = (0..m)
            .map(|a| bbox[a].0 + insets[a] + idx[a] as f64 * steps[a])
            .collect();
        if m == 0 || domain.boundary_distance(&theta) >= min_clearance {
            points.push((idx, theta));
        }
    }
    (points, steps)
}

/// Status of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPointStatus {
    pub index: Vec<usize>,
    pub theta: Vec<f64>,
    /// All basis velocities dominated by the base point with finite log representations.
    pub almost_2: bool,
    /// `|dp(e_a)|_g` for each coordinate direction.
    pub metric_norms: Vec<f64>,
    pub issue: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub points_per_axis: usize,
    pub steps: Vec<f64>,
    /// Largest difference quotient of the metric norms between grid neighbours.
    pub continuity_score: f64,
    pub points: Vec<GridPointStatus>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrabilityVerdict {
    /// Almost 2-integrable and the continuity score stabilizes.
    TwoIntegrable,
    /// Log representations are square integrable but the metric norm looks discontinuous.
    AlmostTwoIntegrable,
    NotAlmostTwoIntegrable,
}

impl IntegrabilityVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntegrabilityVerdict::TwoIntegrable => "2-integrable (numerically)",
            IntegrabilityVerdict::AlmostTwoIntegrable => "almost 2-integrable",
            IntegrabilityVerdict::NotAlmostTwoIntegrable => "not almost 2-integrable",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotIntegrability {
    pub plot: usize,
    pub label: String,
    pub levels: Vec<LevelReport>,
    pub score_ratios: Vec<f64>,
    pub almost_2: bool,
    pub continuity_stable: bool,
    pub verdict: IntegrabilityVerdict,
}

impl PlotIntegrability {
    pub fn violations(&self) -> impl Iterator<Item = &GridPointStatus> {
        self.levels.iter().flat_map(|l| l.points.iter()).filter(|p| !p.almost_2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityReport {
    pub plots: Vec<PlotIntegrability>,
}

impl IntegrabilityReport {
    pub fn almost_2(&self) -> bool {
        self.plots.iter().all(|p| p.almost_2)
    }

    pub fn two_integrable(&self) -> bool {
        self.plots.iter().all(|p| p.verdict == IntegrabilityVerdict::TwoIntegrable)
    }
}

fn probe_point(plot: &Plot, index: Vec<usize>, theta: Vec<f64>) -> GridPointStatus {
    let outcome = plot.velocity_basis(&theta).and_then(|basis| {
        let gram = fisher_gram_of(&basis)?;
        Ok((0..gram.nrows()).map(|a| gram[(a, a)].max(0.0).sqrt()).collect::<Vec<_>>())
    });
    match outcome {
        Ok(norms) if norms.iter().all(|n| n.is_finite()) => GridPointStatus {
            index,
            theta,
            almost_2: true,
            metric_norms: norms,
            issue: None,
        },
        Ok(norms) => GridPointStatus {
            index,
            theta,
            almost_2: false,
            metric_norms: norms,
            issue: Some("non-finite Fisher norm".into()),
        },
        Err(e) => GridPointStatus {
            index,
            theta,
            almost_2: false,
            metric_norms: Vec::new(),
            issue: Some(e.to_string()),
        },
    }
}

fn continuity_score(points: &[GridPointStatus], steps: &[f64], per_axis: usize) -> f64 {
    use std::collections::HashMap;
    let by_index: HashMap<&[usize], &GridPointStatus> =
        points.iter().filter(|p| p.almost_2).map(|p| (p.index.as_slice(), p)).collect();
    let mut score: f64 = 0.0;
    for p in points.iter().filter(|p| p.almost_2) {
        for (axis, &step) in steps.iter().enumerate() {
            if p.index[axis] + 1 >= per_axis {
                continue;
            }
            let mut next = p.index.clone();
            next[axis] += 1;
            if let Some(q) = by_index.get(next.as_slice()) {
                for (a, b) in p.metric_norms.iter().zip(&q.metric_norms) {
                    score = score.max((a - b).abs() / step);
                }
            }
        }
    }
    score
}

fn score_ratio(coarse: f64, fine: f64) -> f64 {
    const FLAT: f64 = 1e-12;
    if coarse <= FLAT && fine <= FLAT {
        1.0
    } else if coarse <= FLAT {
        f64::INFINITY
    } else {
        fine / coarse
    }
}

fn plot_report(index: usize, plot: &Plot, grid: &GridSpec) -> PlotIntegrability {
    let levels: Vec<LevelReport> = grid
        .levels
        .iter()
        .map(|&per_axis| {
            let (pts, steps) = grid_points(plot.domain(), per_axis, grid.margin);
            let points: Vec<GridPointStatus> = pts
                .into_par_iter()
                .map(|(idx, theta)| probe_point(plot, idx, theta))
                .collect();
            let continuity_score = continuity_score(&points, &steps, per_axis.max(2));
            LevelReport {
                points_per_axis: per_axis,
                steps,
                continuity_score,
                points,
            }
        })
        .collect();
    let score_ratios: Vec<f64> = levels
        .windows(2)
        .map(|w| score_ratio(w[0].continuity_score, w[1].continuity_score))
        .collect();
    let almost_2 = levels.iter().all(|l| l.points.iter().all(|p| p.almost_2));
    let continuity_stable = levels.len() >= 2
        && score_ratios
            .iter()
            .all(|r| (SCORE_RATIO_MIN..=SCORE_RATIO_MAX).contains(r));
    let verdict = match (almost_2, continuity_stable) {
        (false, _) => IntegrabilityVerdict::NotAlmostTwoIntegrable,
        (true, true) => IntegrabilityVerdict::TwoIntegrable,
        (true, false) => IntegrabilityVerdict::AlmostTwoIntegrable,
    };
    PlotIntegrability {
        plot: index,
        label: plot.label().to_string(),
        levels,
        score_ratios,
        almost_2,
        continuity_stable,
        verdict,
    }
}

/// Probes every plot of the model on the refinement grids of `grid`:
/// almost 2-integrability at each grid point and numerical continuity of
/// `v ↦ |dp(v)|_g`. Failures are report entries, never errors.
pub fn integrability_report(model: &DiffeologicalModel, grid: &GridSpec) -> IntegrabilityReport {
    IntegrabilityReport {
        plots: model
            .plots()
            .iter()
            .enumerate()
            .map(|(i, p)| plot_report(i, p, grid))
            .collect(),
    }
}
