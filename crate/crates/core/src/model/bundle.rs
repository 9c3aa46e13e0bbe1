//! Local trivializations of the conormal-type bundle `W^0 -> X`.
//!
//! Around an anchor parameter `u0` the frame is `c(u) = P(u) c0`, where `c0`
//! is an orthonormal basis of `W^0` at `u0` and `P(u)` the orthogonal
//! projector onto `W^0` at `u`. The projector is independent of the basis
//! chosen at `u`, so the frame is smooth near `u0`.

use crate::error::Result;
use crate::field::BivectorField;
use crate::linear::Mat;
use crate::sprayflow::{exp_chi_with_jac, CotangentState};
use crate::submanifold::Chart;

use super::complement::{complement_at, ComplementSpec};

/// Step of the fourth-order stencil used for parameter derivatives of frames.
pub const FRAME_FD_STEP: f64 = 1e-3;

/// Central fourth-order derivative of a matrix-valued function along each axis.
pub fn fd_derivatives<F>(f: F, u: &[f64], h: f64) -> Result<Vec<Mat>>
where
    F: Fn(&[f64]) -> Result<Mat>,
{
    (0..u.len())
        .map(|a| {
            let at = |s: f64| {
                let mut v = u.to_vec();
                v[a] += s * h;
                f(&v)
            };
            Ok((at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BundleChart<'a> {
    pub field: &'a BivectorField,
    pub chart: &'a Chart,
    pub spec: &'a ComplementSpec,
    pub anchor: Vec<f64>,
    frame0: Mat,
    pub tol: f64,
}

impl<'a> BundleChart<'a> {
    pub fn new(field: &'a BivectorField, chart: &'a Chart, spec: &'a ComplementSpec, anchor: &[f64], tol: f64) -> Result<Self> {
        let (_, data) = complement_at(field, chart, anchor, spec, tol)?;
        Ok(BundleChart {
            field,
            chart,
            spec,
            anchor: anchor.to_vec(),
            frame0: data.w0.basis().clone(),
            tol,
        })
    }

    /// Fiber dimension.
    pub fn rank(&self) -> usize {
        self.frame0.ncols()
    }

    pub fn base_dim(&self) -> usize {
        self.chart.param_dim()
    }

    pub fn total_dim(&self) -> usize {
        self.base_dim() + self.rank()
    }

    /// `n x r` frame of `W^0` at `u`.
    pub fn frame(&self, u: &[f64]) -> Result<Mat> {
        if u == self.anchor.as_slice() {
            return Ok(self.frame0.clone());
        }
        let (_, data) = complement_at(self.field, self.chart, u, self.spec, self.tol)?;
        Ok(data.w0.projector() * &self.frame0)
    }

    pub fn frame_derivatives(&self, u: &[f64]) -> Result<Vec<Mat>> {
        fd_derivatives(|v| self.frame(v), u, FRAME_FD_STEP)
    }

    pub fn covector(&self, u: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let c = self.frame(u)? * nalgebra::DVector::from_column_slice(xi);
        Ok(c.as_slice().to_vec())
    }

    pub fn state(&self, u: &[f64], xi: &[f64]) -> Result<CotangentState> {
        Ok(CotangentState::new(self.chart.point(u)?, self.covector(u, xi)?))
    }

    /// `2n x (k + r)` differential of `(u, xi) -> (X(u), c(u) xi)`.
    pub fn differential(&self, u: &[f64], xi: &[f64]) -> Result<Mat> {
        let n = self.chart.ambient_dim();
        let k = self.base_dim();
        let r = self.rank();
        let mut d = Mat::zeros(2 * n, k + r);
        d.view_mut((0, 0), (n, k)).copy_from(&self.chart.jacobian(u)?);
        d.view_mut((n, k), (n, r)).copy_from(&self.frame(u)?);
        if xi.iter().any(|v| *v != 0.0) {
            let xv = nalgebra::DVector::from_column_slice(xi);
            for (a, da) in self.frame_derivatives(u)?.iter().enumerate() {
                d.view_mut((n, a), (n, 1)).copy_from(&(da * &xv));
            }
        }
        Ok(d)
    }

    /// `exp(X(u), c(u) xi)` and its `n x (k + r)` differential.
    pub fn exp_with_jac(&self, u: &[f64], xi: &[f64], steps: usize) -> Result<(Vec<f64>, Mat)> {
        let (y, dexp) = exp_chi_with_jac(self.field, &self.state(u, xi)?, steps)?;
        Ok((y, dexp * self.differential(u, xi)?))
    }

    /// Split a point of `R^{k + r}` into `(u, xi)`.
    pub fn split<'b>(&self, z: &'b [f64]) -> (&'b [f64], &'b [f64]) {
        z.split_at(self.base_dim())
    }
}
