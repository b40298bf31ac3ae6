use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use super::*;
use crate::diffeo::families::{affine_mixture_plot, simplex_plot};
use crate::diffeo::{fisher_metric, DiffeologicalModel, GridSpec, ParamDomain, Plot, Smoothness, TangentVector};
use crate::error::Error;
use crate::measure::{l2_inner, FiniteSampleSpace, PointFunction, ProbabilityMeasure};

fn space(n: usize) -> FiniteSampleSpace {
    FiniteSampleSpace::indexed(n).unwrap()
}

fn pm(w: &[f64]) -> ProbabilityMeasure {
    ProbabilityMeasure::new(space(w.len()), w.to_vec()).unwrap()
}

fn xi0() -> ProbabilityMeasure {
    pm(&[0.5, 0.3, 0.2])
}

fn coord2() -> PhiMap {
    PhiMap::coordinate(space(3), vec![0, 1]).unwrap()
}

fn close(m: &DMatrix<f64>, rows: &[f64], tol: f64) {
    let want = DMatrix::from_row_slice(m.nrows(), m.ncols(), rows);
    assert!((m - want).amax() <= tol, "{m}");
}

#[test]
fn phi_kinds() {
    assert_eq!(coord2().apply(&xi0()).unwrap(), vec![0.5, 0.3]);
    let id = PhiMap::kernel_embedding(space(3), DMatrix::identity(3, 3)).unwrap();
    assert_eq!(id.apply(&xi0()).unwrap(), vec![0.5, 0.3, 0.2]);
    let ones = PhiMap::kernel_embedding(space(3), DMatrix::from_element(3, 3, 1.0)).unwrap();
    for v in ones.apply(&xi0()).unwrap() {
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
    }
    let bad = PhiMap::kernel_embedding(space(2), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    assert!(matches!(bad, Err(Error::InvalidPhi(_))));

    let table = PhiMap::table(space(3), vec![(xi0(), vec![42.0])]).unwrap();
    assert_eq!(table.apply(&xi0()).unwrap(), vec![42.0]);
    assert!(matches!(table.apply(&ProbabilityMeasure::uniform(space(3))), Err(Error::TableMiss(_))));

    let param = PhiMap::parameter(simplex_plot(&space(3))).unwrap();
    let at = param.apply(&xi0()).unwrap();
    assert_abs_diff_eq!(at[0], 0.5);
    assert_abs_diff_eq!(at[1], 0.3);
    // Diracs sit on the closure of the simplex chart
    let corner = param.apply(&ProbabilityMeasure::dirac(space(3), 2)).unwrap();
    assert_eq!(corner, vec![0.0, 0.0]);
}

#[test]
fn means_and_biases() {
    let plug = Estimator::plug_in(space(3));
    let m = phi_mean(&plug, &coord2(), &xi0()).unwrap();
    assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(m[1], 0.3, epsilon = 1e-15);
    assert!(bias(&plug, &coord2(), &xi0()).unwrap().iter().all(|b| b.abs() < 1e-15));

    let constant = Estimator::constant(&xi0());
    let uni = ProbabilityMeasure::uniform(space(3));
    let m = phi_mean(&constant, &coord2(), &uni).unwrap();
    assert_abs_diff_eq!(m[0], 0.5, epsilon = 1e-15);
    assert!(bias(&constant, &coord2(), &xi0()).unwrap().iter().all(|b| b.abs() < 1e-15));

    let smooth = Estimator::smoothed(space(3), 0.1).unwrap();
    let m = phi_mean(&smooth, &coord2(), &xi0()).unwrap();
    assert_abs_diff_eq!(m[0], 0.9 * 0.5 + 1.0 / 30.0, epsilon = 1e-14);
    assert_abs_diff_eq!(m[1], 0.9 * 0.3 + 1.0 / 30.0, epsilon = 1e-14);
    let b = bias(&smooth, &coord2(), &xi0()).unwrap();
    assert_abs_diff_eq!(b[0], -1.0 / 60.0, epsilon = 1e-14);
    assert_abs_diff_eq!(b[1], 1.0 / 300.0, epsilon = 1e-14);
}

#[test]
fn second_moment_forms() {
    let plug = Estimator::plug_in(space(3));
    let mse = mse_form(&plug, &coord2(), &xi0()).unwrap();
    close(mse.matrix(), &[0.25, -0.15, -0.15, 0.21], 1e-15);
    let var = variance_form(&plug, &coord2(), &xi0()).unwrap();
    close(var.matrix(), &[0.25, -0.15, -0.15, 0.21], 1e-15);

    // trace = E‖φ∘σ̂ − φ(ξ)‖² by enumeration
    let xi = xi0();
    let direct: f64 = (0..3)
        .map(|x| {
            let e = [if x == 0 { 1.0 } else { 0.0 }, if x == 1 { 1.0 } else { 0.0 }];
            xi.weights()[x] * ((e[0] - 0.5f64).powi(2) + (e[1] - 0.3f64).powi(2))
        })
        .sum();
    assert_abs_diff_eq!(mse.trace(), direct, epsilon = 1e-12);

    let constant = Estimator::constant(&xi0());
    assert_eq!(mse_form(&constant, &coord2(), &xi0()).unwrap().max_abs(), 0.0);
    assert_eq!(variance_form(&constant, &coord2(), &xi0()).unwrap().max_abs(), 0.0);

    let smooth = Estimator::smoothed(space(3), 0.1).unwrap();
    let b = DMatrix::from_vec(2, 1, bias(&smooth, &coord2(), &xi0()).unwrap());
    let lhs = mse_form(&smooth, &coord2(), &xi0()).unwrap();
    let rhs = variance_form(&smooth, &coord2(), &xi0()).unwrap().matrix() + &b * b.transpose();
    assert!((lhs.matrix() - rhs).amax() <= 1e-12);
}

#[test]
fn full_simplex_gradient_and_efficiency() {
    let xi = xi0();
    let basis = full_tangent_basis(&xi).unwrap();
    let plug = Estimator::plug_in(space(3));
    let g = fisher_gradient(&plug, &coord2(), 0, &xi, &basis).unwrap();
    for (got, want) in g.as_tangent.direction().weights().iter().zip([0.25, -0.15, -0.10]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
    }
    let inv = inverse_fisher_form(&plug, &coord2(), &xi, &basis).unwrap();
    close(inv.matrix(), &[0.25, -0.15, -0.15, 0.21], 1e-14);
    assert_eq!(inv.matrix()[(0, 1)], inv.matrix()[(1, 0)]);
    let gap = cramer_rao_gap(&plug, &coord2(), &xi, &basis).unwrap();
    assert!(gap.max_abs() <= 1e-10 && gap.is_psd());

    // with both forms shrunk by the same factor the smoothed gap is also zero
    let smooth = Estimator::smoothed(space(3), 0.1).unwrap();
    let gap = cramer_rao_gap(&smooth, &coord2(), &xi, &basis).unwrap();
    assert!(gap.is_psd());
    assert!(gap.trace().abs() <= 1e-12);

    let constant = Estimator::constant(&xi);
    let g = fisher_gradient(&constant, &coord2(), 1, &xi, &basis).unwrap();
    assert!(g.as_tangent.direction().weights().iter().all(|w| w.abs() < 1e-15));
    assert_eq!(inverse_fisher_form(&constant, &coord2(), &xi, &basis).unwrap().max_abs(), 0.0);
}

#[test]
fn degenerate_and_foreign_bases_are_rejected() {
    let xi = xi0();
    let basis = full_tangent_basis(&xi).unwrap();
    let doubled = vec![basis[0].clone(), basis[0].scaled(2.0)];
    let plug = Estimator::plug_in(space(3));
    assert!(matches!(fisher_gradient(&plug, &coord2(), 0, &xi, &doubled), Err(Error::DegenerateBasis { .. })));
    let other = full_tangent_basis(&ProbabilityMeasure::uniform(space(3))).unwrap();
    assert!(matches!(fisher_gradient(&plug, &coord2(), 0, &xi, &other), Err(Error::BaseMismatch { .. })));
    assert!(fisher_gradient(&plug, &coord2(), 2, &xi, &basis).is_err());
}

fn line_through(xi: &ProbabilityMeasure, dir: &[f64]) -> Plot {
    let base = simplex_plot(xi.space());
    let n = xi.space().len();
    let offset = xi.weights()[..n - 1].to_vec();
    let lin = DMatrix::from_row_slice(n - 1, 1, &dir[..n - 1]);
    base.precompose_affine(offset, lin, ParamDomain::open_box(vec![(-0.01, 0.01)]).unwrap()).unwrap()
}

fn fd_mean_derivative(sigma: &Estimator, phi: &PhiMap, plot: &Plot, l: usize) -> f64 {
    let h = 1e-6;
    let plus = phi_mean(sigma, phi, &plot.point(&[h]).unwrap()).unwrap()[l];
    let minus = phi_mean(sigma, phi, &plot.point(&[-h]).unwrap()).unwrap()[l];
    (plus - minus) / (2.0 * h)
}

#[test]
fn submodel_gradient_is_projection() {
    let xi = xi0();
    let curve = line_through(&xi, &[1.0, -2.0, 1.0]);
    let x = curve.velocity(&[0.0], &[1.0]).unwrap();
    let basis = vec![x.clone()];
    let smooth = Estimator::smoothed(space(3), 0.2).unwrap();
    let phi = coord2();
    let g = fisher_gradient(&smooth, &phi, 1, &xi, &basis).unwrap();
    let full = fisher_gradient(&smooth, &phi, 1, &xi, &full_tangent_basis(&xi).unwrap()).unwrap();
    let projected = fisher_metric(&full.as_tangent, &x).unwrap() / x.fisher_norm_sq();
    assert_abs_diff_eq!(g.coefficients[0], projected, epsilon = 1e-12);
    let derivative = fd_mean_derivative(&smooth, &phi, &curve, 1);
    assert_abs_diff_eq!(fisher_metric(&g.as_tangent, &x).unwrap(), derivative, epsilon = 1e-6);

    // scalar bound: (∂θ φ_σ̂)² / g(ẋ, ẋ)
    let scalar = PhiMap::coordinate(space(3), vec![1]).unwrap();
    let inv = inverse_fisher_form(&smooth, &scalar, &xi, &basis).unwrap();
    let dmean: f64 = (0..3).map(|i| smooth.estimate(i).weights()[1] * x.direction().weights()[i]).sum();
    assert_abs_diff_eq!(inv.matrix()[(0, 0)], dmean * dmean / x.fisher_norm_sq(), epsilon = 1e-10);
}

#[test]
fn regularity_report() {
    let s = space(3);
    let model = DiffeologicalModel::new(s.clone(), vec![simplex_plot(&s)], Smoothness::Infinite).unwrap();
    let grid = GridSpec {
        levels: vec![4, 6],
        margin: 0.1,
    };
    let plug = check_phi_regular(&Estimator::plug_in(s.clone()), &coord2(), &model, &grid).unwrap();
    assert_eq!(plug.verdict(), "regular");
    assert!(plug.points_checked > 0 && plug.sup_norms.iter().all(|v| *v <= 1.0));
    let c = check_phi_regular(&Estimator::constant(&xi0()), &coord2(), &model, &grid).unwrap();
    assert_eq!(c.sup_norms, vec![0.5, 0.3]);
}

fn simplex_point(n: usize) -> impl Strategy<Value = ProbabilityMeasure> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(move |raw| {
        let s: f64 = raw.iter().sum();
        ProbabilityMeasure::from_approx(space(n), raw.iter().map(|r| r / s).collect(), 1e-12).unwrap()
    })
}

fn estimator_table(n: usize) -> impl Strategy<Value = Estimator> {
    prop::collection::vec(simplex_point(n), n).prop_map(move |rows| Estimator::new(space(n), rows).unwrap())
}

fn submodel_basis(xi: &ProbabilityMeasure, raw: &[Vec<f64>]) -> Vec<TangentVector> {
    raw.iter()
        .map(|d| {
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let f = PointFunction::new(xi.space().clone(), d.iter().map(|v| v - mean).collect()).unwrap();
            let c = crate::measure::expectation(&f, xi).unwrap();
            let centred = PointFunction::new(xi.space().clone(), f.values().iter().map(|v| v - c).collect()).unwrap();
            TangentVector::from_log_rep(xi.clone(), &centred).unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn mse_splits_into_variance_and_bias(sigma in estimator_table(4), xi in simplex_point(4), k in prop::collection::vec(-1.0f64..1.0, 16)) {
        let kmat = DMatrix::from_row_slice(4, 4, &k);
        let phi = PhiMap::kernel_embedding(space(4), &kmat * kmat.transpose()).unwrap();
        let b = DMatrix::from_vec(4, 1, bias(&sigma, &phi, &xi).unwrap());
        let mse = mse_form(&sigma, &phi, &xi).unwrap();
        let var = variance_form(&sigma, &phi, &xi).unwrap();
        prop_assert!((mse.matrix() - var.matrix() - &b * b.transpose()).amax() <= 1e-12);
        prop_assert!(mse.min_eigenvalue() >= -1e-12 && var.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn cramer_rao_gap_is_psd(sigma in estimator_table(5), xi in simplex_point(5), raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 1..4)) {
        let basis = submodel_basis(&xi, &raw);
        let phi = PhiMap::coordinate(space(5), vec![0, 2, 3]).unwrap();
        match cramer_rao_gap(&sigma, &phi, &xi, &basis) {
            Ok(gap) => prop_assert!(gap.min_eigenvalue() >= -1e-9),
            Err(Error::DegenerateBasis { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn gradient_defining_property(sigma in estimator_table(4), xi in simplex_point(4), raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..3)) {
        let basis = submodel_basis(&xi, &raw);
        let phi = PhiMap::coordinate(space(4), vec![1, 3]).unwrap();
        let centred: Vec<f64> = {
            let vals: Vec<f64> = (0..4).map(|x| sigma.estimate(x).weights()[3]).collect();
            let m: f64 = vals.iter().zip(xi.weights()).map(|(a, b)| a * b).sum();
            vals.iter().map(|v| v - m).collect()
        };
        let f = PointFunction::new(space(4), centred).unwrap();
        if let Ok(g) = fisher_gradient(&sigma, &phi, 1, &xi, &basis) {
            for b in &basis {
                let lhs = fisher_metric(&g.as_tangent, b).unwrap();
                let rhs = l2_inner(&f, b.log_rep(), &xi).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn gateaux_consistency(sigma in estimator_table(3), eta in (0.1f64..0.8, 0.1f64..0.8), v in (-1.0f64..1.0, -1.0f64..1.0)) {
        prop_assume!(eta.0 + eta.1 < 0.9);
        let s = space(3);
        let mu0 = ProbabilityMeasure::uniform(s.clone());
        let g = vec![vec![1.5, 0.9, 0.6], vec![0.6, 1.2, 1.2], vec![1.0, 1.0, 1.0]];
        let plot = affine_mixture_plot(&mu0, &g, ParamDomain::OpenSimplex(2)).unwrap();
        let theta = [eta.0, eta.1];
        let xi = plot.point(&theta).unwrap();
        let basis = plot.velocity_basis(&theta).unwrap();
        let phi = coord2();
        let grad = fisher_gradient(&sigma, &phi, 0, &xi, &basis).unwrap();
        let dir = plot.velocity(&theta, &[v.0, v.1]).unwrap();
        let h = 1e-6;
        let at = |t: f64| phi_mean(&sigma, &phi, &plot.point(&[theta[0] + t * v.0, theta[1] + t * v.1]).unwrap()).unwrap()[0];
        let fd = (at(h) - at(-h)) / (2.0 * h);
        prop_assert!((fisher_metric(&grad.as_tangent, &dir).unwrap() - fd).abs() <= 1e-5);
    }

    #[test]
    fn plug_in_is_efficient_on_the_simplex(xi in simplex_point(5)) {
        let plug = Estimator::plug_in(space(5));
        let phi = PhiMap::coordinate(space(5), vec![0, 1, 2, 3]).unwrap();
        let gap = cramer_rao_gap(&plug, &phi, &xi, &full_tangent_basis(&xi).unwrap()).unwrap();
        prop_assert!(gap.max_abs() <= 1e-10);
    }
}

