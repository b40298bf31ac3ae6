//! Estimators, feature maps and the quadratic forms built from them.

mod estimator;
mod forms;
mod gradient;
mod phi;

pub use estimator::Estimator;
pub use forms::{
    bias, check_phi_regular, mse_form, phi_matrix, phi_mean, variance_form, PhiRegularityReport, QuadraticForm,
    PSD_TOL, SYMMETRY_TOL,
};
pub use gradient::{
    cramer_rao_gap, fisher_gradient, full_tangent_basis, inverse_fisher_form, FisherGradient, GRAM_DEGENERACY_TOL,
};
pub use phi::{PhiKind, PhiMap, TABLE_MATCH_TOL};

#[cfg(test)]
mod tests;
