//! Coisotropic embedding of a Dirac structure into a Poisson manifold.
//!
//! For a Dirac structure `L` on `R^k` whose kernel `E = L ∩ TX` has constant
//! rank `r`, the total space of `E*` (coordinates `(u, xi)`) carries the
//! bivector of `(pr^* L)^eta`, with `eta` the pullback of the canonical form
//! along `(u, xi) -> (u, e(u) xi)`. The frame `e(u)` of `E` is the projection
//! of a frame at the anchor, so covectors `e(u) xi` annihilate `E^perp`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::jacobi_residual_fd;
use crate::linear::{rank_svd, DiracSpace, Mat, SkewForm, Subspace};
use crate::sprayflow::omega_can;

use super::bundle::{fd_derivatives, FRAME_FD_STEP};
use super::local::lift_to_bundle;

/// `L ∩ (V ⊕ 0)` as a subspace of `V`.
pub fn kernel(l: &DiracSpace, tol: f64) -> Result<Subspace> {
    let ker = rank_svd(&l.cotangent(), tol)?.null_space;
    Ok(Subspace::span(&(l.tangent() * ker.basis()), tol))
}

pub struct CoisotropicEmbedding<F> {
    dirac: F,
    dim: usize,
    anchor: Vec<f64>,
    frame0: Mat,
    pub tol: f64,
}

impl<F> CoisotropicEmbedding<F>
where
    F: Fn(&[f64]) -> Result<DiracSpace>,
{
    pub fn new(dirac: F, anchor: &[f64], tol: f64) -> Result<Self> {
        let l = dirac(anchor)?;
        let frame0 = kernel(&l, tol)?.basis().clone();
        Ok(CoisotropicEmbedding {
            dim: l.dim(),
            dirac,
            anchor: anchor.to_vec(),
            frame0,
            tol,
        })
    }

    pub fn rank(&self) -> usize {
        self.frame0.ncols()
    }

    pub fn base_dim(&self) -> usize {
        self.dim
    }

    pub fn dirac(&self, u: &[f64]) -> Result<DiracSpace> {
        (self.dirac)(u)
    }

    /// Frame of the kernel at `u`.
    pub fn frame(&self, u: &[f64]) -> Result<Mat> {
        let e = kernel(&self.dirac(u)?, self.tol)?;
        if e.dim() != self.rank() {
            return Err(Error::RankDefect {
                expected: self.rank(),
                found: e.dim(),
            });
        }
        if u == self.anchor.as_slice() {
            return Ok(self.frame0.clone());
        }
        Ok(e.projector() * &self.frame0)
    }

    /// Pullback of the canonical form of `T*R^k` along `(u, xi) -> (u, e(u) xi)`.
    pub fn eta(&self, u: &[f64], xi: &[f64]) -> Result<SkewForm> {
        let k = self.dim;
        let r = self.rank();
        let mut d = Mat::zeros(2 * k, k + r);
        d.view_mut((0, 0), (k, k)).copy_from(&Mat::identity(k, k));
        d.view_mut((k, k), (k, r)).copy_from(&self.frame(u)?);
        if xi.iter().any(|v| *v != 0.0) {
            let xv = nalgebra::DVector::from_column_slice(xi);
            for (a, da) in fd_derivatives(|v| self.frame(v), u, FRAME_FD_STEP)?.iter().enumerate() {
                d.view_mut((k, a), (k, 1)).copy_from(&(da * &xv));
            }
        }
        Ok(omega_can(k).pull(&d))
    }

    pub fn dirac_on_bundle(&self, u: &[f64], xi: &[f64]) -> Result<DiracSpace> {
        Ok(lift_to_bundle(&self.dirac(u)?, self.rank())?.gauge(&self.eta(u, xi)?))
    }

    pub fn bivector(&self, u: &[f64], xi: &[f64]) -> Result<SkewForm> {
        self.dirac_on_bundle(u, xi)?.to_bivector()
    }

    fn split<'b>(&self, z: &'b [f64]) -> (&'b [f64], &'b [f64]) {
        z.split_at(self.dim)
    }

    /// `max |pi(a, b)|` over covectors `a, b` annihilating the zero section.
    pub fn coisotropic_residual(&self, u: &[f64]) -> Result<f64> {
        let b = self.bivector(u, &vec![0.0; self.rank()])?;
        let k = self.dim;
        let r = self.rank();
        Ok(crate::linear::max_abs(&b.matrix().view((k, k), (r, r)).into_owned()))
    }

    /// Sine of the largest angle between the pullback to the zero section and `L`.
    pub fn pullback_angle(&self, u: &[f64]) -> Result<f64> {
        let k = self.dim;
        let r = self.rank();
        let b = self.bivector(u, &vec![0.0; r])?;
        let mut incl = Mat::zeros(k + r, k);
        incl.view_mut((0, 0), (k, k)).copy_from(&Mat::identity(k, k));
        let back = DiracSpace::graph_bivector(&b).pullback(&incl)?.space;
        Ok(back.distance(&self.dirac(u)?))
    }

    /// Jacobi defect of the bivector at `z = (u, xi)` by fourth-order differences.
    pub fn jacobi_residual(&self, z: &[f64], h: f64) -> Result<f64> {
        jacobi_residual_fd(
            |p: &[f64]| {
                let (u, xi) = self.split(p);
                Ok(self.bivector(u, xi)?.matrix().clone())
            },
            z,
            h,
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub base_dim: usize,
    pub kernel_rank: usize,
    pub samples: usize,
    pub max_jacobi: f64,
    pub max_coisotropic: f64,
    pub max_pullback_angle: f64,
}

/// Run the three checks at `(u, xi)` samples; coisotropy and pullback use `xi = 0`.
pub fn embedding_report<F>(model: &CoisotropicEmbedding<F>, states: &[(Vec<f64>, Vec<f64>)], h: f64) -> Result<EmbeddingReport>
where
    F: Fn(&[f64]) -> Result<DiracSpace>,
{
    let mut rep = EmbeddingReport {
        base_dim: model.base_dim(),
        kernel_rank: model.rank(),
        samples: states.len(),
        max_jacobi: 0.0,
        max_coisotropic: 0.0,
        max_pullback_angle: 0.0,
    };
    for (u, xi) in states {
        let z: Vec<f64> = u.iter().chain(xi).copied().collect();
        rep.max_jacobi = rep.max_jacobi.max(model.jacobi_residual(&z, h)?);
        rep.max_coisotropic = rep.max_coisotropic.max(model.coisotropic_residual(u)?);
        rep.max_pullback_angle = rep.max_pullback_angle.max(model.pullback_angle(u)?);
    }
    Ok(rep)
}

/// Presymplectic Dirac structure from a constant two-form matrix.
pub fn presymplectic(w: &Mat) -> DiracSpace {
    DiracSpace::graph_two_form(&SkewForm::antisymmetrize(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{max_abs, RANK_TOL};

    fn dxdy() -> Mat {
        let mut w = Mat::zeros(3, 3);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = -1.0;
        w
    }

    #[test]
    fn presymplectic_three_space() {
        let w = dxdy();
        let m = CoisotropicEmbedding::new(|_: &[f64]| Ok(presymplectic(&w)), &[0.0; 3], RANK_TOL).unwrap();
        assert_eq!(m.rank(), 1);
        let b = m.bivector(&[0.1, 0.2, 0.3], &[0.05]).unwrap();
        // by hand: the gauged form is dx^dy + dz^dxi, with matrix W; pi = W^-T
        let mut want = Mat::zeros(4, 4);
        want[(0, 1)] = 1.0;
        want[(1, 0)] = -1.0;
        want[(2, 3)] = 1.0;
        want[(3, 2)] = -1.0;
        assert!(max_abs(&(b.matrix() - want)) < 1e-14, "{}", b.matrix());
        let rep = embedding_report(&m, &[(vec![0.1, -0.2, 0.3], vec![0.1])], 1e-2).unwrap();
        assert!(rep.max_jacobi <= 1e-10 && rep.max_coisotropic <= 1e-10 && rep.max_pullback_angle <= 1e-8);
    }

    #[test]
    fn symplectic_base_has_no_fiber() {
        let mut w = Mat::zeros(2, 2);
        w[(0, 1)] = 2.0;
        w[(1, 0)] = -2.0;
        let m = CoisotropicEmbedding::new(|_: &[f64]| Ok(presymplectic(&w)), &[0.0; 2], RANK_TOL).unwrap();
        assert_eq!(m.rank(), 0);
        let b = m.bivector(&[0.0, 0.0], &[]).unwrap();
        // inverse of w with the sharp convention: pi = T C^-1
        let inv = DiracSpace::graph_two_form(&SkewForm::antisymmetrize(&w)).to_bivector().unwrap();
        assert!(b.max_diff(&inv) < 1e-14);
        assert!((b.matrix()[(0, 1)].abs() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn tangent_dirac_gives_cotangent_bundle() {
        let m = CoisotropicEmbedding::new(|_: &[f64]| Ok(presymplectic(&Mat::zeros(2, 2))), &[0.0; 2], RANK_TOL).unwrap();
        assert_eq!(m.rank(), 2);
        let b = m.bivector(&[0.3, 0.1], &[0.2, -0.1]).unwrap();
        let expected = DiracSpace::graph_two_form(&omega_can(2)).to_bivector().unwrap();
        assert!(b.max_diff(&expected) < 1e-12);
        assert!(m.pullback_angle(&[0.3, 0.1]).unwrap() < 1e-12);
    }
}
