use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::tangent::TangentVector;
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure, SignedMeasure};

/// Tolerance on a plot's output before it is accepted as a probability measure.
pub const PLOT_OUTPUT_TOL: f64 = 1e-9;

/// Jacobian columns must carry zero total mass within this tolerance.
pub const JACOBIAN_MASS_TOL: f64 = 1e-9;

/// Relative agreement required between an analytic Jacobian and central differences.
pub const JACOBIAN_FD_TOL: f64 = 1e-6;

/// Relative central-difference step: `h = FD_STEP * max(1, |θ_a|)`.
pub const FD_STEP: f64 = 1e-5;

pub type EvalFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
pub type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
pub type InverseFn = dyn Fn(&ProbabilityMeasure) -> Option<Vec<f64>> + Send + Sync;

/// Differentiability class `C^k`, `k ∈ {1, 2, …, ∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    Finite(u32),
    Infinite,
}

impl Smoothness {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Model {
                theta: vec![],
                reason: "smoothness order must be at least 1".into(),
            });
        }
        Ok(Smoothness::Finite(k))
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Finite(k) => write!(f, "{k}"),
            Smoothness::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Smoothness {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "inf" | "infinity" | "∞" => Ok(Smoothness::Infinite),
            other => match other.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(Smoothness::Finite(k)),
                _ => Err(format!("invalid smoothness order {other:?}")),
            },
        }
    }
}

/// Open parameter domain of a plot.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamDomain {
    /// Product of open intervals; bounds may be infinite.
    Box(Vec<(f64, f64)>),
    /// `{θ ∈ R^m : θ_a > 0, Σ θ_a < 1}`.
    OpenSimplex(usize),
}

impl ParamDomain {
    pub fn whole_space(dim: usize) -> Self {
        ParamDomain::Box(vec![(f64::NEG_INFINITY, f64::INFINITY); dim])
    }

    pub fn open_box(bounds: Vec<(f64, f64)>) -> Result<Self> {
        for (a, &(lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Domain {
                    theta: vec![],
                    reason: format!("axis {a} has empty interval ({lo}, {hi})"),
                });
            }
        }
        Ok(ParamDomain::Box(bounds))
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamDomain::Box(b) => b.len(),
            ParamDomain::OpenSimplex(m) => *m,
        }
    }

    /// Euclidean distance from `theta` to the complement of the domain;
    /// nonpositive when `theta` is outside.
    pub fn boundary_distance(&self, theta: &[f64]) -> f64 {
        match self {
            ParamDomain::Box(bounds) => bounds
                .iter()
                .zip(theta)
                .map(|(&(lo, hi), &t)| (t - lo).min(hi - t))
                .fold(f64::INFINITY, f64::min),
            ParamDomain::OpenSimplex(m) => {
                let faces = theta.iter().copied().fold(f64::INFINITY, f64::min);
                let slack = (1.0 - theta.iter().sum::<f64>()) / (*m as f64).sqrt();
                faces.min(slack)
            }
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta.iter().all(|t| t.is_finite())
            && self.boundary_distance(theta) > 0.0
    }

    pub fn contains_closure(&self, theta: &[f64], tol: f64) -> bool {
        theta.len() == self.dim()
            && theta.iter().all(|t| t.is_finite())
            && self.boundary_distance(theta) >= -tol
    }

    /// Finite box enclosing the domain; infinite sides are truncated to a
    /// width-2 window.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            ParamDomain::Box(bounds) => bounds
                .iter()
                .map(|&(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => (lo, hi),
                    (true, false) => (lo, lo + 2.0),
                    (false, true) => (hi - 2.0, hi),
                    (false, false) => (-1.0, 1.0),
                })
                .collect(),
            ParamDomain::OpenSimplex(m) => vec![(0.0, 1.0); *m],
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            ParamDomain::Box(_) => self
                .bounding_box()
                .iter()
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
            ParamDomain::OpenSimplex(m) => vec![1.0 / (*m as f64 + 1.0); *m],
        }
    }
}

/// A `C^k` map from an open parameter domain into `P(X)`: one generator of
/// a model's diffeology.
#[derive(Clone)]
pub struct Plot {
    space: FiniteSampleSpace,
    domain: ParamDomain,
    smoothness: Smoothness,
    eval: Arc<EvalFn>,
    jacobian: Option<Arc<JacobianFn>>,
    inverse: Option<Arc<InverseFn>>,
    label: String,
}

impl fmt::Debug for Plot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plot")
            .field("label", &self.label)
            .field("atoms", &self.space.len())
            .field("domain", &self.domain)
            .field("smoothness", &self.smoothness)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl Plot {
    /// `eval` may be called anywhere in `R^m`; the domain is enforced by
    /// [`Plot::point`] and [`Plot::velocity`], not by `eval` itself.
    pub fn new<F>(space: FiniteSampleSpace, domain: ParamDomain, smoothness: Smoothness, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            space,
            domain,
            smoothness,
            eval: Arc::new(eval),
            jacobian: None,
            inverse: None,
            label: String::from("plot"),
        }
    }

    /// Attaches an analytic Jacobian (n atoms × m parameters).
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Attaches an exact inverse used by [`Plot::locate`].
    pub fn with_inverse<I>(mut self, inverse: I) -> Self
    where
        I: Fn(&ProbabilityMeasure) -> Option<Vec<f64>> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub(crate) fn eval_fn(&self) -> Arc<EvalFn> {
        Arc::clone(&self.eval)
    }

    pub(crate) fn jacobian_fn(&self) -> Option<Arc<JacobianFn>> {
        self.jacobian.clone()
    }

    /// Rebuilds the plot with a new evaluation map, keeping domain,
    /// smoothness and label.
    pub(crate) fn with_parts(
        &self,
        space: FiniteSampleSpace,
        eval: Arc<EvalFn>,
        jacobian: Option<Arc<JacobianFn>>,
        inverse: Option<Arc<InverseFn>>,
    ) -> Self {
        Self {
            space,
            domain: self.domain.clone(),
            smoothness: self.smoothness,
            eval,
            jacobian,
            inverse,
            label: self.label.clone(),
        }
    }

    fn check_inside(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.domain_dim() {
            return Err(Error::Domain {
                theta: theta.to_vec(),
                reason: format!("expected {} parameters", self.domain_dim()),
            });
        }
        if !self.domain.contains(theta) {
            return Err(Error::Domain {
                theta: theta.to_vec(),
                reason: "not strictly inside the open domain".into(),
            });
        }
        Ok(())
    }

    /// Raw evaluation without the domain check.
    pub(crate) fn eval_raw(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let w = (self.eval)(theta)?;
        if w.len() != self.space.len() {
            return Err(Error::Model {
                theta: theta.to_vec(),
                reason: format!("plot returned {} weights for {} atoms", w.len(), self.space.len()),
            });
        }
        Ok(w)
    }

    /// The point `p(θ)`; `θ` must lie strictly inside the domain.
    pub fn point(&self, theta: &[f64]) -> Result<ProbabilityMeasure> {
        self.check_inside(theta)?;
        let w = self.eval_raw(theta)?;
        ProbabilityMeasure::from_approx(self.space.clone(), w, PLOT_OUTPUT_TOL).map_err(|e| Error::Model {
            theta: theta.to_vec(),
            reason: e.to_string(),
        })
    }

    /// Per-axis central-difference steps.
    pub fn fd_steps(theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|t| FD_STEP * t.abs().max(1.0)).collect()
    }

    /// Central-difference Jacobian; every probe point must be inside the domain.
    pub fn fd_jacobian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.check_inside(theta)?;
        let n = self.space.len();
        let m = self.domain_dim();
        let steps = Self::fd_steps(theta);
        let mut jac = DMatrix::zeros(n, m);
        for (a, &h) in steps.iter().enumerate() {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[a] += h;
            minus[a] -= h;
            if !self.domain.contains(&plus) || !self.domain.contains(&minus) {
                return Err(Error::Domain {
                    theta: theta.to_vec(),
                    reason: format!("within one finite-difference step ({h:e}) of the boundary on axis {a}"),
                });
            }
            let wp = self.eval_raw(&plus)?;
            let wm = self.eval_raw(&minus)?;
            for i in 0..n {
                jac[(i, a)] = (wp[i] - wm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Jacobian of atom weights, analytic when available.
    pub fn jacobian_at(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        match &self.jacobian {
            Some(j) => {
                self.check_inside(theta)?;
                let jac = j(theta);
                if jac.nrows() != self.space.len() || jac.ncols() != self.domain_dim() {
                    return Err(Error::Model {
                        theta: theta.to_vec(),
                        reason: format!(
                            "jacobian has shape {}x{}, expected {}x{}",
                            jac.nrows(),
                            jac.ncols(),
                            self.space.len(),
                            self.domain_dim()
                        ),
                    });
                }
                Ok(jac)
            }
            None => self.fd_jacobian(theta),
        }
    }

    /// The velocity `dp_θ(v)` together with its logarithmic representation.
    pub fn velocity(&self, theta: &[f64], v: &[f64]) -> Result<TangentVector> {
        if v.len() != self.domain_dim() {
            return Err(Error::Domain {
                theta: theta.to_vec(),
                reason: format!("velocity has {} components, expected {}", v.len(), self.domain_dim()),
            });
        }
        let base = self.point(theta)?;
        let jac = self.jacobian_at(theta)?;
        let dir = jac * DVector::from_column_slice(v);
        let direction = SignedMeasure::new(self.space.clone(), dir.as_slice().to_vec())?;
        TangentVector::new(base, direction)
    }

    /// Velocities of the coordinate directions `e_1, …, e_m` at `θ`.
    pub fn velocity_basis(&self, theta: &[f64]) -> Result<Vec<TangentVector>> {
        let base = self.point(theta)?;
        let jac = self.jacobian_at(theta)?;
        (0..self.domain_dim())
            .map(|a| {
                let direction = SignedMeasure::new(self.space.clone(), jac.column(a).iter().copied().collect())?;
                TangentVector::new(base.clone(), direction)
            })
            .collect()
    }

    /// Finds `θ` in the closure of the domain with `p(θ) = ξ` (within
    /// [`PLOT_OUTPUT_TOL`]). Uses the attached inverse if there is one and
    /// Gauss-Newton from the domain centre otherwise.
    pub fn locate(&self, xi: &ProbabilityMeasure) -> Option<Vec<f64>> {
        if xi.space() != &self.space {
            return None;
        }
        let candidate = match &self.inverse {
            Some(inv) => inv(xi)?,
            None => self.gauss_newton(xi)?,
        };
        if !self.domain.contains_closure(&candidate, PLOT_OUTPUT_TOL) {
            return None;
        }
        let w = self.eval_raw(&candidate).ok()?;
        let dev = w
            .iter()
            .zip(xi.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (dev <= PLOT_OUTPUT_TOL).then_some(candidate)
    }

    fn gauss_newton(&self, xi: &ProbabilityMeasure) -> Option<Vec<f64>> {
        let m = self.domain_dim();
        let target = DVector::from_column_slice(xi.weights());
        let mut theta = self.domain.center();
        for _ in 0..100 {
            let w = DVector::from_vec(self.eval_raw(&theta).ok()?);
            let residual = &target - &w;
            if residual.amax() <= 1e-14 {
                break;
            }
            let jac = match &self.jacobian {
                Some(j) => j(&theta),
                None => self.raw_fd_jacobian(&theta)?,
            };
            let step = linalg::least_squares(&jac, &residual)?;
            if step.amax() <= 1e-15 {
                break;
            }
            for a in 0..m {
                theta[a] += step[a];
            }
        }
        Some(theta)
    }

    fn raw_fd_jacobian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let steps = Self::fd_steps(theta);
        let mut jac = DMatrix::zeros(self.space.len(), theta.len());
        for (a, &h) in steps.iter().enumerate() {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[a] += h;
            minus[a] -= h;
            let wp = self.eval_raw(&plus).ok()?;
            let wm = self.eval_raw(&minus).ok()?;
            for i in 0..self.space.len() {
                jac[(i, a)] = (wp[i] - wm[i]) / (2.0 * h);
            }
        }
        Some(jac)
    }

    /// Precomposition with the affine map `t ↦ offset + linear · t` defined
    /// on `domain`. Plots of a diffeology are closed under this operation.
    pub fn precompose_affine(&self, offset: Vec<f64>, linear: DMatrix<f64>, domain: ParamDomain) -> Result<Plot> {
        let m_old = self.domain_dim();
        if offset.len() != m_old || linear.nrows() != m_old || linear.ncols() != domain.dim() {
            return Err(Error::Domain {
                theta: offset,
                reason: format!(
                    "affine reparametrization must map R^{} into R^{m_old}; got offset {} and matrix {}x{}",
                    domain.dim(),
                    m_old,
                    linear.nrows(),
                    linear.ncols()
                ),
            });
        }
        let offset = DVector::from_vec(offset);
        let to_base = {
            let offset = offset.clone();
            let linear = linear.clone();
            move |t: &[f64]| -> Vec<f64> {
                let x = &offset + &linear * DVector::from_column_slice(t);
                x.as_slice().to_vec()
            }
        };
        let base = self.clone();
        let eval_map = to_base.clone();
        let eval = move |t: &[f64]| -> Result<Vec<f64>> { base.eval_raw(&eval_map(t)) };

        let jacobian = self.jacobian.clone().map(|j| {
            let linear = linear.clone();
            let jac_map = to_base.clone();
            Arc::new(move |t: &[f64]| -> DMatrix<f64> { j(&jac_map(t)) * &linear }) as Arc<JacobianFn>
        });

        let inverse = self.inverse.clone().map(|inv| {
            let linear = linear.clone();
            let offset = offset.clone();
            Arc::new(move |xi: &ProbabilityMeasure| -> Option<Vec<f64>> {
                let theta = DVector::from_vec(inv(xi)?);
                let rhs = &theta - &offset;
                let t = linalg::least_squares(&linear, &rhs)?;
                let back = &offset + &linear * &t;
                ((back - theta).amax() <= PLOT_OUTPUT_TOL).then(|| t.as_slice().to_vec())
            }) as Arc<InverseFn>
        });

        Ok(Plot {
            space: self.space.clone(),
            domain,
            smoothness: self.smoothness,
            eval: Arc::new(eval),
            jacobian,
            inverse,
            label: format!("{}∘affine", self.label),
        })
    }
}

/// Outcome of checking the plot invariants at sample parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotInvariantCheck {
    pub points_checked: usize,
    /// Largest violation of the simplex constraints (negativity or mass defect).
    pub max_simplex_defect: f64,
    /// Largest |column sum| of the Jacobian.
    pub max_jacobian_mass: f64,
    /// Largest relative analytic-vs-finite-difference discrepancy (0 without an analytic Jacobian).
    pub max_fd_discrepancy: f64,
    pub failures: Vec<String>,
}

impl PlotInvariantCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Verifies the plot invariants (valid simplex output, zero-mass Jacobian
/// columns, analytic Jacobian matching central differences) at each sample.
pub fn check_plot_invariants(plot: &Plot, samples: &[Vec<f64>]) -> PlotInvariantCheck {
    let mut check = PlotInvariantCheck {
        points_checked: 0,
        max_simplex_defect: 0.0,
        max_jacobian_mass: 0.0,
        max_fd_discrepancy: 0.0,
        failures: Vec::new(),
    };
    for theta in samples {
        check.points_checked += 1;
        if let Err(e) = plot.check_inside(theta) {
            check.failures.push(e.to_string());
            continue;
        }
        match plot.eval_raw(theta) {
            Ok(w) => {
                let neg = w.iter().copied().fold(0.0f64, |acc, x| acc.max(-x));
                let mass = (w.iter().sum::<f64>() - 1.0).abs();
                let defect = neg.max(mass);
                check.max_simplex_defect = check.max_simplex_defect.max(defect);
                if defect > PLOT_OUTPUT_TOL {
                    check.failures.push(format!("{theta:?}: output leaves the simplex by {defect:e}"));
                }
            }
            Err(e) => {
                check.failures.push(e.to_string());
                continue;
            }
        }
        let jac = match plot.jacobian_at(theta) {
            Ok(j) => j,
            Err(e) => {
                check.failures.push(e.to_string());
                continue;
            }
        };
        for a in 0..jac.ncols() {
            let mass = jac.column(a).sum().abs();
            check.max_jacobian_mass = check.max_jacobian_mass.max(mass);
            if mass > JACOBIAN_MASS_TOL {
                check.failures.push(format!("{theta:?}: jacobian column {a} carries mass {mass:e}"));
            }
        }
        if plot.has_jacobian() {
            match plot.fd_jacobian(theta) {
                Ok(fd) => {
                    let scale = jac.amax().max(1.0);
                    let rel = (&jac - &fd).amax() / scale;
                    check.max_fd_discrepancy = check.max_fd_discrepancy.max(rel);
                    if rel > JACOBIAN_FD_TOL {
                        check.failures.push(format!("{theta:?}: analytic jacobian off from finite differences by {rel:e}"));
                    }
                }
                Err(e) => check.failures.push(e.to_string()),
            }
        }
    }
    check
}
