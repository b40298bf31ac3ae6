//! Finite sample spaces and the measures and functions living on them.
//!
//! Every integral over a finite atom set is a finite sum, so the total
//! variation norm, Radon-Nikodym derivatives and `L²(ξ)` pairings below are
//! exact up to floating point round-off.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Absolute weight below which an atom counts as outside a support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Allowed deviation of a probability measure's total mass from one.
pub const MASS_TOL: f64 = 1e-12;

/// An ordered set of distinct atom labels. The order fixes vector indexing.
#[derive(Clone)]
pub struct FiniteSampleSpace {
    atoms: Arc<[String]>,
}

impl FiniteSampleSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let atoms: Vec<String> = labels.into_iter().map(Into::into).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidSpace("a sample space needs at least one atom".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(Error::InvalidSpace(format!("duplicate atom label {a:?}")));
            }
        }
        Ok(Self { atoms: atoms.into() })
    }

    /// Space with atoms labelled `x0, x1, ...`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("x{i}")))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.atoms
    }

    pub fn label(&self, i: usize) -> &str {
        &self.atoms[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == label)
    }

    pub(crate) fn ensure_same(&self, other: &Self, context: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{context}: {} atoms {:?} vs {} atoms {:?}",
                self.len(),
                self.labels(),
                other.len(),
                other.labels()
            )))
        }
    }

    pub(crate) fn ensure_len(&self, len: usize, what: &str) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{what} has {len} entries but the space has {} atoms",
                self.len()
            )))
        }
    }
}

impl PartialEq for FiniteSampleSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.atoms, &other.atoms) || self.atoms == other.atoms
    }
}

impl fmt::Debug for FiniteSampleSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.atoms.iter()).finish()
    }
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidMeasure(format!(
            "{what} has non-finite entry {} at atom {i}",
            values[i]
        ))),
        None => Ok(()),
    }
}

/// A finite signed measure, one real weight per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedMeasure {
    space: FiniteSampleSpace,
    weights: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(space: FiniteSampleSpace, weights: Vec<f64>) -> Result<Self> {
        space.ensure_len(weights.len(), "signed measure")?;
        ensure_finite(&weights, "signed measure")?;
        Ok(Self { space, weights })
    }

    pub fn zero(space: FiniteSampleSpace) -> Self {
        let weights = vec![0.0; space.len()];
        Self { space, weights }
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            space: self.space.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &Self) -> Result<Self> {
        self.space.ensure_same(&other.space, "measure sum")?;
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self {
            space: self.space.clone(),
            weights,
        })
    }

    /// Euclidean norm of the weight vector.
    pub fn euclidean_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// A probability measure: nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMeasure {
    space: FiniteSampleSpace,
    weights: Vec<f64>,
}

impl ProbabilityMeasure {
    /// Strict constructor: weights must be nonnegative and sum to one within [`MASS_TOL`].
    pub fn new(space: FiniteSampleSpace, weights: Vec<f64>) -> Result<Self> {
        space.ensure_len(weights.len(), "probability measure")?;
        ensure_finite(&weights, "probability measure")?;
        if let Some(i) = weights.iter().position(|&w| w < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "negative weight {} at atom {i} ({})",
                weights[i],
                space.label(i)
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { space, weights })
    }

    /// Accepts weights that are a probability vector up to `tol`: negative
    /// weights down to `-tol` are clipped to zero and the result is
    /// renormalized.
    pub fn from_approx(space: FiniteSampleSpace, mut weights: Vec<f64>, tol: f64) -> Result<Self> {
        space.ensure_len(weights.len(), "probability measure")?;
        ensure_finite(&weights, "probability measure")?;
        for (i, w) in weights.iter_mut().enumerate() {
            if *w < -tol {
                return Err(Error::InvalidMeasure(format!(
                    "negative weight {w} at atom {i} ({})",
                    space.label(i)
                )));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1 within {tol:e}"
            )));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { space, weights })
    }

    pub fn uniform(space: FiniteSampleSpace) -> Self {
        let n = space.len();
        Self {
            weights: vec![1.0 / n as f64; n],
            space,
        }
    }

    pub fn dirac(space: FiniteSampleSpace, atom: usize) -> Self {
        let mut weights = vec![0.0; space.len()];
        weights[atom] = 1.0;
        Self { space, weights }
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_signed(&self) -> SignedMeasure {
        SignedMeasure {
            space: self.space.clone(),
            weights: self.weights.clone(),
        }
    }

    /// Atoms whose weight exceeds [`SUPPORT_TOL`].
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > SUPPORT_TOL)
            .collect()
    }

    /// Largest per-atom difference; infinite when the spaces differ.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        if self.space != other.space {
            return f64::INFINITY;
        }
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A real function on the atoms (an element of `L(X)`, `L¹(ξ)` or `L²(ξ)`).
#[derive(Clone, Debug, PartialEq)]
pub struct PointFunction {
    space: FiniteSampleSpace,
    values: Vec<f64>,
}

impl PointFunction {
    pub fn new(space: FiniteSampleSpace, values: Vec<f64>) -> Result<Self> {
        space.ensure_len(values.len(), "point function")?;
        ensure_finite(&values, "point function")?;
        Ok(Self { space, values })
    }

    pub fn constant(space: FiniteSampleSpace, value: f64) -> Self {
        let values = vec![value; space.len()];
        Self { space, values }
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The signed measure `f · ξ`.
    pub fn times_measure(&self, xi: &ProbabilityMeasure) -> Result<SignedMeasure> {
        self.space.ensure_same(xi.space(), "density times measure")?;
        let weights = self.values.iter().zip(xi.weights()).map(|(f, w)| f * w).collect();
        Ok(SignedMeasure {
            space: self.space.clone(),
            weights,
        })
    }
}

/// Total variation norm: the sum of absolute atom weights.
pub fn tv_norm(m: &SignedMeasure) -> f64 {
    m.weights.iter().map(|w| w.abs()).sum()
}

/// The density `dv/dξ`, zero off the support of `ξ`.
///
/// Fails with [`Error::Domination`] when `v` charges an atom that `ξ` does
/// not, in which case no logarithmic representation exists.
pub fn radon_nikodym(v: &SignedMeasure, xi: &ProbabilityMeasure) -> Result<PointFunction> {
    v.space.ensure_same(xi.space(), "radon_nikodym")?;
    let mut values = Vec::with_capacity(v.weights.len());
    for (i, (&vi, &xi_i)) in v.weights.iter().zip(xi.weights()).enumerate() {
        if xi_i <= SUPPORT_TOL {
            if vi.abs() > SUPPORT_TOL {
                return Err(Error::Domination {
                    atom: i,
                    label: v.space.label(i).to_string(),
                    base: xi_i,
                    direction: vi,
                });
            }
            values.push(0.0);
        } else {
            values.push(vi / xi_i);
        }
    }
    Ok(PointFunction {
        space: v.space.clone(),
        values,
    })
}

/// The `L²(X, ξ)` pairing `Σ f_i g_i ξ_i`.
pub fn l2_inner(f: &PointFunction, g: &PointFunction, xi: &ProbabilityMeasure) -> Result<f64> {
    f.space.ensure_same(&g.space, "l2_inner")?;
    f.space.ensure_same(xi.space(), "l2_inner")?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .zip(xi.weights())
        .map(|((a, b), w)| a * b * w)
        .sum())
}

/// `E_ξ f = Σ f_i ξ_i`.
pub fn expectation(f: &PointFunction, xi: &ProbabilityMeasure) -> Result<f64> {
    f.space.ensure_same(xi.space(), "expectation")?;
    Ok(f.values.iter().zip(xi.weights()).map(|(a, w)| a * w).sum())
}
