use nalgebra::{DMatrix, DVector};

use crate::diffeo::Plot;
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{FiniteSampleSpace, ProbabilityMeasure};

/// Table lookups match a measure within this per atom.
pub const TABLE_MATCH_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum PhiKind {
    /// Selected atom weights.
    Coordinate(Vec<usize>),
    /// Parameters of the located preimage on a plot (its closure included).
    Parameter(Plot),
    /// `ξ ↦ K ξ` for a symmetric PSD `K`.
    KernelEmbedding(DMatrix<f64>),
    /// Explicit values at registered measures.
    Table(Vec<(ProbabilityMeasure, Vec<f64>)>),
}

/// A feature map `φ: P(X) → R^d`.
#[derive(Clone, Debug)]
pub struct PhiMap {
    space: FiniteSampleSpace,
    dim: usize,
    kind: PhiKind,
}

impl PhiMap {
    pub fn coordinate(space: FiniteSampleSpace, atoms: Vec<usize>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPhi("coordinate map selects no atoms".into()));
        }
        if let Some(a) = atoms.iter().find(|&&a| a >= space.len()) {
            return Err(Error::InvalidPhi(format!("atom {a} out of range for {} atoms", space.len())));
        }
        Ok(Self {
            dim: atoms.len(),
            space,
            kind: PhiKind::Coordinate(atoms),
        })
    }

    pub fn parameter(plot: Plot) -> Result<Self> {
        if plot.domain_dim() == 0 {
            return Err(Error::InvalidPhi("parameter map of a 0-dimensional plot".into()));
        }
        Ok(Self {
            space: plot.space().clone(),
            dim: plot.domain_dim(),
            kind: PhiKind::Parameter(plot),
        })
    }

    pub fn kernel_embedding(space: FiniteSampleSpace, k: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        if k.shape() != (n, n) {
            return Err(Error::InvalidPhi(format!("kernel matrix must be {n}x{n}")));
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPhi("kernel matrix has non-finite entries".into()));
        }
        if linalg::asymmetry(&k) > 1e-12 {
            return Err(Error::InvalidPhi("kernel matrix is not symmetric".into()));
        }
        let min = linalg::min_eigenvalue(&k);
        if min < -1e-9 {
            return Err(Error::InvalidPhi(format!("kernel matrix has eigenvalue {min:e} < 0")));
        }
        Ok(Self {
            space,
            dim: n,
            kind: PhiKind::KernelEmbedding(linalg::symmetrized(&k)),
        })
    }

    pub fn table(space: FiniteSampleSpace, entries: Vec<(ProbabilityMeasure, Vec<f64>)>) -> Result<Self> {
        let Some(dim) = entries.first().map(|(_, v)| v.len()) else {
            return Err(Error::InvalidPhi("table has no entries".into()));
        };
        if dim == 0 {
            return Err(Error::InvalidPhi("table values are empty".into()));
        }
        for (i, (m, v)) in entries.iter().enumerate() {
            space.ensure_same(m.space(), &format!("phi table entry {i}"))?;
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPhi(format!("entry {i} must carry {dim} finite values")));
            }
        }
        Ok(Self {
            space,
            dim,
            kind: PhiKind::Table(entries),
        })
    }

    pub fn space(&self) -> &FiniteSampleSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn apply(&self, xi: &ProbabilityMeasure) -> Result<Vec<f64>> {
        self.space.ensure_same(xi.space(), "phi")?;
        match &self.kind {
            PhiKind::Coordinate(atoms) => Ok(atoms.iter().map(|&a| xi.weights()[a]).collect()),
            PhiKind::Parameter(plot) => plot.locate(xi).ok_or_else(|| Error::NotOnPlot(xi.weights().to_vec())),
            PhiKind::KernelEmbedding(k) => Ok((k * DVector::from_column_slice(xi.weights())).as_slice().to_vec()),
            PhiKind::Table(entries) => entries
                .iter()
                .find(|(m, _)| m.max_deviation(xi) <= TABLE_MATCH_TOL)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::TableMiss(xi.weights().to_vec())),
        }
    }
}
