//! The two-forms `sigma`, `tau`, `eta` and the local model bivector.
//!
//! Coordinates on the model are `(u, xi)`, with `xi` the fiber coordinate of
//! a [`BundleChart`].

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linear::{DiracSpace, Mat, SkewForm};
use crate::sprayflow::{omega_can, omega_chi};
use crate::submanifold::{pullback_dirac, PointData};

use super::bundle::{fd_derivatives, BundleChart, FRAME_FD_STEP};

/// Where the closed extension `eta` comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSource {
    /// `-(pullback of the averaged form)`.
    #[default]
    Canonical,
    /// Pullback of the canonical form of `T*X` through `xi -> i*(c xi)`.
    Cotangent,
}

/// `sigma(a, b) = pi(c a, c b)` on fibers and the block `T` with
/// `tau((v, 0), (0, xi)) = v^T T xi`.
pub fn sigma_tau(pd: &PointData, frame: &Mat) -> (SkewForm, Mat) {
    let sigma = SkewForm::antisymmetrize(&(frame.transpose() * pd.pi.transpose() * frame));
    let tau = pd.jac.transpose() * frame;
    (sigma, tau)
}

/// `-sigma ⊕ -tau ⊕ 0` as a form on `R^{k + r}`.
pub fn eta_on_zero_section(sigma: &SkewForm, tau: &Mat) -> SkewForm {
    let k = tau.nrows();
    let r = tau.ncols();
    let mut m = Mat::zeros(k + r, k + r);
    m.view_mut((0, k), (k, r)).copy_from(tau);
    m.view_mut((k, 0), (r, k)).copy_from(&(-tau.transpose()));
    m.view_mut((k, k), (r, r)).copy_from(sigma.matrix());
    SkewForm::antisymmetrize(&m).neg()
}

/// `eta = -(pullback of the averaged form)` at `(u, xi)`.
pub fn eta_canonical(bc: &BundleChart, u: &[f64], xi: &[f64], steps: usize) -> Result<SkewForm> {
    let omega = omega_chi(bc.field, &bc.state(u, xi)?, steps)?;
    Ok(omega.pull(&bc.differential(u, xi)?).neg())
}

/// Pullback of the canonical form of `T*X` along `(u, xi) -> (u, J(u)^T c(u) xi)`.
pub fn eta_cotangent(bc: &BundleChart, u: &[f64], xi: &[f64]) -> Result<SkewForm> {
    let k = bc.base_dim();
    let r = bc.rank();
    let xv = nalgebra::DVector::from_column_slice(xi);
    let restricted = |v: &[f64]| -> Result<Mat> { Ok(bc.chart.jacobian(v)?.transpose() * bc.frame(v)?) };
    let mut d = Mat::zeros(2 * k, k + r);
    d.view_mut((0, 0), (k, k)).copy_from(&Mat::identity(k, k));
    d.view_mut((k, k), (k, r)).copy_from(&restricted(u)?);
    if xi.iter().any(|v| *v != 0.0) {
        for (a, da) in fd_derivatives(restricted, u, FRAME_FD_STEP)?.iter().enumerate() {
            d.view_mut((k, a), (k, 1)).copy_from(&(da * &xv));
        }
    }
    Ok(omega_can(k).pull(&d))
}

pub fn eta(bc: &BundleChart, u: &[f64], xi: &[f64], source: EtaSource, steps: usize) -> Result<SkewForm> {
    match source {
        EtaSource::Canonical => eta_canonical(bc, u, xi, steps),
        EtaSource::Cotangent => eta_cotangent(bc, u, xi),
    }
}

/// Pullback of `L` on `R^k` to `R^{k + r}` along the projection.
pub fn lift_to_bundle(l: &DiracSpace, r: usize) -> Result<DiracSpace> {
    let k = l.dim();
    let mut pr = Mat::zeros(k, k + r);
    pr.view_mut((0, 0), (k, k)).copy_from(&Mat::identity(k, k));
    Ok(l.pullback(&pr)?.space)
}

/// The model Dirac space `(pr^* i^* L)^eta` at `(u, xi)`.
pub fn local_model_dirac(bc: &BundleChart, u: &[f64], xi: &[f64], source: EtaSource, steps: usize) -> Result<DiracSpace> {
    let pd = crate::submanifold::point_data(bc.field, bc.chart, u, bc.tol)?;
    let base = pullback_dirac(&pd, Some(bc.rank()))?;
    let lifted = lift_to_bundle(&base, bc.rank())?;
    Ok(lifted.gauge(&eta(bc, u, xi, source, steps)?))
}

/// The model bivector at `(u, xi)`.
pub fn local_model_bivector(bc: &BundleChart, u: &[f64], xi: &[f64], source: EtaSource, steps: usize) -> Result<SkewForm> {
    local_model_dirac(bc, u, xi, source, steps)?.to_bivector()
}

/// Closedness defect of `eta`: largest `|d eta(e_a, e_b, e_c)|` by a fourth-order stencil.
pub fn d_eta_residual(bc: &BundleChart, u: &[f64], xi: &[f64], steps: usize, h: f64) -> Result<f64> {
    let k = bc.base_dim();
    let z: Vec<f64> = u.iter().chain(xi).copied().collect();
    let at = |p: &[f64]| -> Result<Mat> {
        let (a, b) = p.split_at(k);
        Ok(eta_canonical(bc, a, b, steps)?.matrix().clone())
    };
    let d = fd_derivatives(at, &z, h)?;
    let m = z.len();
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in (a + 1)..m {
            for c in (b + 1)..m {
                let v = d[a][(b, c)] + d[b][(c, a)] + d[c][(a, b)];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}
