//! Tubular coordinates `psi(u, xi, c) = exp(c(u) xi) + C(u) c` around `X`.
//!
//! `C(u)` spans a complement of `TP|_X = TX ⊕ sharp(W^0)`; it is the
//! orthogonal projection of an anchor frame, like the fiber frame.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{rank_svd, Mat, Subspace, Vector};
use crate::sampling::{random_in_ball, rng};

use super::bundle::{fd_derivatives, BundleChart, FRAME_FD_STEP};

pub struct TubularMap<'a> {
    pub bundle: BundleChart<'a>,
    pub steps: usize,
    normal0: Mat,
}

impl<'a> TubularMap<'a> {
    pub fn new(bundle: BundleChart<'a>, steps: usize) -> Result<Self> {
        let u0 = bundle.anchor.clone();
        let normal0 = Self::tp_at(&bundle, &u0)?.orthogonal_complement().basis().clone();
        Ok(TubularMap { bundle, steps, normal0 })
    }

    fn tp_at(bundle: &BundleChart, u: &[f64]) -> Result<Subspace> {
        let pd = crate::submanifold::point_data(bundle.field, bundle.chart, u, bundle.tol)?;
        let img = &pd.pi * bundle.frame(u)?;
        let tp = pd.tx.sum(&Subspace::span(&img, bundle.tol), bundle.tol);
        if tp.dim() != bundle.total_dim() {
            return Err(Error::RankDefect {
                expected: bundle.total_dim(),
                found: tp.dim(),
            });
        }
        Ok(tp)
    }

    /// Number of normal parameters `c`.
    pub fn normal_dim(&self) -> usize {
        self.normal0.ncols()
    }

    pub fn normal_frame(&self, u: &[f64]) -> Result<Mat> {
        if u == self.bundle.anchor.as_slice() {
            return Ok(self.normal0.clone());
        }
        Ok(Self::tp_at(&self.bundle, u)?.orthogonal_complement().projector() * &self.normal0)
    }

    /// The point `psi(u, xi, c)` and its `n x n` Jacobian in `(u, xi, c)`.
    pub fn eval(&self, u: &[f64], xi: &[f64], c: &[f64]) -> Result<(Vec<f64>, Mat)> {
        let (y, dexp) = self.bundle.exp_with_jac(u, xi, self.steps)?;
        let m = self.bundle.total_dim();
        let n = y.len();
        let nf = self.normal_frame(u)?;
        let cv = Vector::from_column_slice(c);
        let shift = &nf * &cv;
        let mut jac = Mat::zeros(n, n);
        jac.view_mut((0, 0), (n, m)).copy_from(&dexp);
        jac.view_mut((0, m), (n, n - m)).copy_from(&nf);
        if c.iter().any(|v| *v != 0.0) {
            for (a, da) in fd_derivatives(|v| self.normal_frame(v), u, FRAME_FD_STEP)?.iter().enumerate() {
                let col = jac.column(a) + da * &cv;
                jac.set_column(a, &col);
            }
        }
        let point = y.iter().zip(shift.iter()).map(|(a, b)| a + b).collect();
        Ok((point, jac))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TubularReport {
    pub samples: usize,
    pub min_rank: usize,
    pub ambient_dim: usize,
    /// `|psi(u, xi, 0) - exp(c(u) xi)|`, largest over the samples.
    pub max_zero_offset: f64,
}

/// Jacobian rank of `psi` at seeded samples `(anchor, xi, c)` in a ball of radius `r`.
pub fn tubular_report(t: &TubularMap, count: usize, r: f64, seed: u64) -> Result<TubularReport> {
    let mut g = rng(seed);
    let u = t.bundle.anchor.clone();
    let n = t.bundle.chart.ambient_dim();
    let mut min_rank = n;
    let mut offset: f64 = 0.0;
    for _ in 0..count {
        let xi = random_in_ball(t.bundle.rank(), r, &mut g);
        let c = random_in_ball(t.normal_dim(), r, &mut g);
        let (_, jac) = t.eval(&u, &xi, &c)?;
        min_rank = min_rank.min(rank_svd(&jac, t.bundle.tol)?.rank);
        let (p0, _) = t.eval(&u, &xi, &vec![0.0; t.normal_dim()])?;
        let (y, _) = t.bundle.exp_with_jac(&u, &xi, t.steps)?;
        offset = offset.max(p0.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok(TubularReport {
        samples: count,
        min_rank,
        ambient_dim: n,
        max_zero_offset: offset,
    })
}
