use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measure::{l2_inner, radon_nikodym, PointFunction, ProbabilityMeasure, SignedMeasure};

/// A tangent direction must carry zero total mass within this tolerance.
pub const TANGENT_MASS_TOL: f64 = 1e-10;

/// Two tangent vectors share a base point when their bases agree per atom within this.
pub const BASE_TOL: f64 = 1e-12;

/// A tangent vector `v` at a base point `ξ`, stored with its logarithmic
/// representation `dv/dξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: ProbabilityMeasure,
    direction: SignedMeasure,
    log_rep: PointFunction,
}

impl TangentVector {
    /// Fails when the direction has nonzero mass or is not dominated by `base`.
    pub fn new(base: ProbabilityMeasure, direction: SignedMeasure) -> Result<Self> {
        base.space().ensure_same(direction.space(), "tangent vector")?;
        let mass = direction.total_mass();
        if mass.abs() > TANGENT_MASS_TOL {
            return Err(Error::InvalidMeasure(format!(
                "tangent direction has total mass {mass:e}, expected 0"
            )));
        }
        let log_rep = radon_nikodym(&direction, &base)?;
        Ok(Self {
            base,
            direction,
            log_rep,
        })
    }

    /// The tangent vector `f · ξ` for a density `f` with `E_ξ f = 0`.
    pub fn from_log_rep(base: ProbabilityMeasure, log_rep: &PointFunction) -> Result<Self> {
        let direction = log_rep.times_measure(&base)?;
        Self::new(base, direction)
    }

    pub fn zero(base: ProbabilityMeasure) -> Self {
        let direction = SignedMeasure::zero(base.space().clone());
        let log_rep = PointFunction::constant(base.space().clone(), 0.0);
        Self {
            base,
            direction,
            log_rep,
        }
    }

    pub fn base(&self) -> &ProbabilityMeasure {
        &self.base
    }

    pub fn direction(&self) -> &SignedMeasure {
        &self.direction
    }

    pub fn log_rep(&self) -> &PointFunction {
        &self.log_rep
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let direction = self.direction.scaled(factor);
        let log_rep = PointFunction::new(
            self.log_rep.space().clone(),
            self.log_rep.values().iter().map(|v| v * factor).collect(),
        )
        .expect("scaling keeps values finite");
        Self {
            base: self.base.clone(),
            direction,
            log_rep,
        }
    }

    /// `Σ c_k · v_k` over tangent vectors sharing one base point.
    pub fn linear_combination(terms: &[(f64, &TangentVector)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidMeasure("empty linear combination".into()));
        };
        let mut direction = SignedMeasure::zero(first.base.space().clone());
        for (c, v) in terms {
            ensure_same_base(first, v)?;
            direction = direction.add_scaled(*c, &v.direction)?;
        }
        Self::new(first.base.clone(), direction)
    }

    /// `g_ξ(v, v)`.
    pub fn fisher_norm_sq(&self) -> f64 {
        l2_inner(&self.log_rep, &self.log_rep, &self.base).expect("log rep shares the base space")
    }
}

fn ensure_same_base(a: &TangentVector, b: &TangentVector) -> Result<()> {
    let deviation = a.base.max_deviation(&b.base);
    if deviation > BASE_TOL {
        return Err(Error::BaseMismatch { deviation });
    }
    Ok(())
}

/// The Fisher metric `g_ξ(a, b) = ⟨log a, log b⟩_{L²(ξ)}`.
pub fn fisher_metric(a: &TangentVector, b: &TangentVector) -> Result<f64> {
    ensure_same_base(a, b)?;
    l2_inner(&a.log_rep, &b.log_rep, &a.base)
}

/// Gram matrix `G_ab = g(v_a, v_b)` of tangent vectors at one base point.
pub fn fisher_gram_of(basis: &[TangentVector]) -> Result<DMatrix<f64>> {
    let r = basis.len();
    let mut g = DMatrix::zeros(r, r);
    for a in 0..r {
        for b in a..r {
            let v = fisher_metric(&basis[a], &basis[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}
