//! Comparison of the local model with the ambient bivector on the saturation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::BivectorField;
use crate::linear::{max_abs, rank_svd, Mat, SkewForm};
use crate::sampling::ball_grid;
use crate::submanifold::Chart;

use super::bundle::BundleChart;
use super::complement::ComplementSpec;
use super::local::{local_model_bivector, EtaSource};
use super::saturation::{invert_exp, GridSettings};

/// `max |F^T (D B D^T - pi(y)) F|` with `F` an orthonormal frame of `im D`.
pub fn normal_form_mismatch(model: &SkewForm, d: &Mat, ambient: &Mat, tol: f64) -> Result<f64> {
    let f = rank_svd(d, tol)?.column_space;
    let pushed = model.push(d);
    let diff = pushed.matrix() - ambient;
    Ok(max_abs(&(f.basis().transpose() * diff * f.basis())))
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormSample {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    pub mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormReport {
    pub xi_radius: f64,
    pub steps: usize,
    pub max_mismatch: f64,
    pub samples: Vec<NormalFormSample>,
}

/// Model bivector, its pushforward data and the mismatch at one state.
pub fn normal_form_at(bc: &BundleChart, u: &[f64], xi: &[f64], steps: usize) -> Result<NormalFormSample> {
    let b = local_model_bivector(bc, u, xi, EtaSource::Canonical, steps)?;
    let (y, d) = bc.exp_with_jac(u, xi, steps)?;
    let amb = bc.field.matrix(&y)?;
    Ok(NormalFormSample {
        u: u.to_vec(),
        xi: xi.to_vec(),
        mismatch: normal_form_mismatch(&b, &d, &amb, bc.tol)?,
        y,
    })
}

fn grid_run(field: &BivectorField, chart: &Chart, spec: &ComplementSpec, grid_u: &[Vec<f64>], s: &GridSettings, r: f64) -> Result<NormalFormReport> {
    let per_u = s.exec.map(grid_u, |u| -> Result<Vec<NormalFormSample>> {
        let bc = BundleChart::new(field, chart, spec, u, s.tol)?;
        ball_grid(bc.rank(), r, s.xi_per_axis)
            .iter()
            .map(|xi| normal_form_at(&bc, u, xi, s.steps))
            .collect()
    });
    let mut samples = Vec::new();
    for v in per_u {
        samples.extend(v?);
    }
    Ok(NormalFormReport {
        xi_radius: r,
        steps: s.steps,
        max_mismatch: samples.iter().map(|s| s.mismatch).fold(0.0, f64::max),
        samples,
    })
}

/// Normal-form check over `grid_u` times the fiber ball of radius `settings.xi_radius`.
pub fn verify_normal_form(field: &BivectorField, chart: &Chart, spec: &ComplementSpec, grid_u: &[Vec<f64>], settings: &GridSettings) -> Result<NormalFormReport> {
    crate::sprayflow::with_radius_halving(settings.xi_radius, |r| grid_run(field, chart, spec, grid_u, settings, r)).map(|(_, rep)| rep)
}

/// Largest radius `r0 / 2^m` on whose fiber grid the model bivector exists.
pub fn model_radius(bc: &BundleChart, u: &[f64], r0: f64, per_axis: usize, steps: usize) -> Result<f64> {
    if bc.rank() == 0 {
        return Ok(r0);
    }
    let mut r = r0;
    for _ in 0..12 {
        let ok = ball_grid(bc.rank(), r, per_axis).iter().all(|xi| local_model_bivector(bc, u, xi, EtaSource::Canonical, steps).is_ok());
        if ok {
            return Ok(r);
        }
        r *= 0.5;
    }
    Err(Error::NotPoisson { defect: 1 })
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub samples: usize,
    /// Largest difference of the two pushed-forward bivectors on `TP`.
    pub max_difference: f64,
    /// Largest residual of the inverse exponential in the second chart.
    pub max_inversion_residual: f64,
}

/// Push the models of two complements to common points of `P` and compare.
pub fn compare_complements(
    field: &BivectorField,
    chart: &Chart,
    first: &ComplementSpec,
    second: &ComplementSpec,
    states: &[(Vec<f64>, Vec<f64>)],
    steps: usize,
    tol: f64,
) -> Result<IndependenceReport> {
    let mut worst: f64 = 0.0;
    let mut inv: f64 = 0.0;
    for (u, xi) in states {
        let a = BundleChart::new(field, chart, first, u, tol)?;
        let b = BundleChart::new(field, chart, second, u, tol)?;
        let ba = local_model_bivector(&a, u, xi, EtaSource::Canonical, steps)?;
        let (y, da) = a.exp_with_jac(u, xi, steps)?;
        // start the second chart at the projection of the same covector
        let cov = nalgebra::DVector::from_column_slice(&a.covector(u, xi)?);
        let xi_b = b.frame(u)?.transpose() * cov;
        let z0: Vec<f64> = u.iter().copied().chain(xi_b.iter().copied()).collect();
        let (z, res) = invert_exp(&b, &y, &z0, steps)?;
        inv = inv.max(res);
        let (ub, xb) = b.split(&z);
        let bb = local_model_bivector(&b, ub, xb, EtaSource::Canonical, steps)?;
        let (_, db) = b.exp_with_jac(ub, xb, steps)?;
        let f = rank_svd(&da, tol)?.column_space;
        let diff = ba.push(&da).matrix() - bb.push(&db).matrix();
        worst = worst.max(max_abs(&(f.basis().transpose() * diff * f.basis())));
    }
    Ok(IndependenceReport {
        samples: states.len(),
        max_difference: worst,
        max_inversion_residual: inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarNames;
    use crate::model::complement::ComplementMode;
    use crate::sampling::DomainBox;

    fn coiso_line() -> (BivectorField, Chart) {
        let f = BivectorField::parse(3, &[(1, 2, "1")], &VarNames::standard(3)).unwrap();
        let c = Chart::parse(&["u", "0", "0"], &VarNames::named(&["u"]).unwrap(), DomainBox::cube(1, 1.0)).unwrap();
        (f, c)
    }

    #[test]
    fn coisotropic_line_matches_plane() {
        let (f, c) = coiso_line();
        let spec = ComplementSpec::mode(ComplementMode::Coisotropic);
        let s = GridSettings {
            steps: 64,
            exec: crate::par::Exec::Sequential,
            ..Default::default()
        };
        let rep = verify_normal_form(&f, &c, &spec, &c.domain().grid(&[3]), &s).unwrap();
        assert!(rep.max_mismatch <= 1e-10, "{}", rep.max_mismatch);
    }

    #[test]
    fn zero_structure_is_trivial() {
        let f = BivectorField::parse(2, &[], &VarNames::standard(2)).unwrap();
        let c = Chart::parse(&["u", "u^2"], &VarNames::named(&["u"]).unwrap(), DomainBox::cube(1, 1.0)).unwrap();
        let spec = ComplementSpec::default();
        let rep = verify_normal_form(&f, &c, &spec, &c.domain().grid(&[3]), &GridSettings::default()).unwrap();
        assert_eq!(rep.max_mismatch, 0.0);
    }

    #[test]
    fn default_and_coisotropic_complements_agree() {
        let (f, c) = coiso_line();
        let a = ComplementSpec::default();
        let b = ComplementSpec::mode(ComplementMode::Coisotropic);
        let states = vec![(vec![0.3], vec![0.1]), (vec![-0.5], vec![-0.15])];
        let rep = compare_complements(&f, &c, &a, &b, &states, 64, 1e-8).unwrap();
        assert!(rep.max_difference <= 1e-10);
    }
}
