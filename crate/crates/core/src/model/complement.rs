//! Complements `W` with `TM|_X = TX^perp ⊕ W`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::BivectorField;
use crate::linear::{lagrangian_complement, norm2, pinv, Mat, SkewForm, Subspace};
use crate::submanifold::{point_data, Chart, PointData};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementMode {
    /// Euclidean orthogonal complement of `TX^perp`.
    #[default]
    Default,
    /// `W = TX`, for submanifolds with `TX ⊕ TX^perp = TM`.
    Transversal,
    /// `W` with `sharp(W^0) ⊆ W` and `W ∩ TX = G`; needs `TX^perp ⊆ TX`.
    Coisotropic,
    /// `W` with `sharp((H + W)^0) ⊆ W` and `W ∩ TX = G`.
    PrePoisson,
}

/// Mode plus optional frames for `G` and `H`, as vector fields along the chart.
#[derive(Clone, Debug, Default)]
pub struct ComplementSpec {
    pub mode: ComplementMode,
    pub g: Vec<Vec<Expression>>,
    pub h: Vec<Vec<Expression>>,
}

impl ComplementSpec {
    pub fn mode(mode: ComplementMode) -> Self {
        ComplementSpec {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ComplementData {
    pub mode: ComplementMode,
    pub w: Subspace,
    pub w0: Subspace,
    pub g: Subspace,
    pub h: Subspace,
    /// Residual of the invariance property that defines the mode (zero for the default).
    pub invariance_residual: f64,
    /// Sine of the angle between `W ∩ TX` and `G` (zero when not applicable).
    pub intersection_residual: f64,
}

fn frame_at(frame: &[Vec<Expression>], n: usize, u: &[f64], tol: f64) -> Result<Option<Subspace>> {
    if frame.is_empty() {
        return Ok(None);
    }
    let mut m = Mat::zeros(n, frame.len());
    for (c, v) in frame.iter().enumerate() {
        if v.len() != n {
            return Err(Error::Dimension(format!("frame vector with {} components in R^{n}", v.len())));
        }
        for (i, e) in v.iter().enumerate() {
            m[(i, c)] = e.eval(u)?;
        }
    }
    let s = Subspace::span(&m, tol);
    if s.dim() != frame.len() {
        return Err(Error::Prerequisite("frame vectors are dependent".into()));
    }
    Ok(Some(s))
}

/// Leafwise symplectic form on `s ⊆ im sharp` in the coordinates of `s.basis()`:
/// `w(sharp a, sharp b) = pi(a, b)`.
pub fn leaf_form(pi: &Mat, s: &Subspace, tol: f64) -> SkewForm {
    let b = s.basis();
    SkewForm::antisymmetrize(&(b.transpose() * pinv(pi, tol) * b))
}

fn invariance(pi: &Mat, covectors: &Subspace, w: &Subspace) -> f64 {
    if covectors.dim() == 0 {
        return 0.0;
    }
    let img = pi * covectors.basis();
    norm2(&(&img - w.projector() * &img))
}

/// The complement at one point from pointwise data.
pub fn complement_pointwise(
    pi: &Mat,
    tx: &Subspace,
    perp: &Subspace,
    mode: ComplementMode,
    g: Option<Subspace>,
    h: Option<Subspace>,
    tol: f64,
) -> Result<ComplementData> {
    let n = pi.nrows();
    match mode {
        ComplementMode::Default => {
            let w = perp.orthogonal_complement();
            Ok(ComplementData {
                mode,
                w0: w.orthogonal_complement(),
                w,
                g: Subspace::zero(n),
                h: Subspace::zero(n),
                invariance_residual: 0.0,
                intersection_residual: 0.0,
            })
        }
        ComplementMode::Transversal => {
            if tx.dim() + perp.dim() != n || tx.sum(perp, tol).dim() != n {
                return Err(Error::Prerequisite("TX ⊕ TX^perp is not the whole space".into()));
            }
            Ok(ComplementData {
                mode,
                w: tx.clone(),
                w0: tx.orthogonal_complement(),
                g: tx.clone(),
                h: Subspace::zero(n),
                invariance_residual: 0.0,
                intersection_residual: 0.0,
            })
        }
        ComplementMode::Coisotropic | ComplementMode::PrePoisson => {
            let cap = perp.intersection(tx, tol);
            if mode == ComplementMode::Coisotropic && cap.dim() != perp.dim() {
                return Err(Error::Prerequisite("TX^perp is not contained in TX".into()));
            }
            let g = match g {
                Some(g) => g,
                None => cap.complement_within(tx, tol),
            };
            if g.dim() + cap.dim() != tx.dim() || g.excess_over(tx) > 1e-8 || g.sum(&cap, tol).dim() != tx.dim() {
                return Err(Error::Prerequisite("G is not a complement of TX^perp ∩ TX in TX".into()));
            }
            let h = match (mode, h) {
                (ComplementMode::Coisotropic, _) => Subspace::zero(n),
                (_, Some(h)) => h,
                (_, None) => cap.complement_within(perp, tol),
            };
            if h.dim() + cap.dim() != perp.dim() || h.excess_over(perp) > 1e-8 || h.sum(&cap, tol).dim() != perp.dim() {
                return Err(Error::Prerequisite("H is not a complement of TX^perp ∩ TX in TX^perp".into()));
            }
            let gh0 = g.sum(&h, tol).orthogonal_complement();
            let s = Subspace::span(&(pi * gh0.basis()), tol);
            if s.dim() != 2 * cap.dim() {
                return Err(Error::Prerequisite(format!(
                    "sharp((G + H)^0) has rank {} instead of {}",
                    s.dim(),
                    2 * cap.dim()
                )));
            }
            let c = lagrangian_complement(&leaf_form(pi, &s, tol), &s, &cap)?;
            let inner = cap.sum(&h, tol).sum(&g, tol).sum(&c, tol);
            let y = inner.orthogonal_complement();
            let w = g.sum(&c, tol).sum(&y, tol);
            if w.dim() + perp.dim() != n {
                return Err(Error::Prerequisite("complement has the wrong dimension".into()));
            }
            let w0 = w.orthogonal_complement();
            let hw0 = h.sum(&w, tol).orthogonal_complement();
            let invariance_residual = invariance(pi, &hw0, &w);
            let meet = w.intersection(tx, tol);
            let intersection_residual = meet.max_angle_sin(&g);
            Ok(ComplementData {
                mode,
                w,
                w0,
                g,
                h,
                invariance_residual,
                intersection_residual,
            })
        }
    }
}

/// The complement at a chart parameter.
pub fn complement_at(field: &BivectorField, chart: &Chart, u: &[f64], spec: &ComplementSpec, tol: f64) -> Result<(PointData, ComplementData)> {
    let pd = point_data(field, chart, u, tol)?;
    let n = chart.ambient_dim();
    let g = frame_at(&spec.g, n, u, tol)?;
    let h = frame_at(&spec.h, n, u, tol)?;
    let data = complement_pointwise(&pd.pi, &pd.tx, &pd.perp, spec.mode, g, h, tol)?;
    Ok((pd, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{max_abs, RANK_TOL};
    use proptest::prelude::*;

    fn sympl(n2: usize) -> Mat {
        let m = n2 / 2;
        let mut p = Mat::zeros(n2, n2);
        for i in 0..m {
            p[(i, m + i)] = 1.0;
            p[(m + i, i)] = -1.0;
        }
        p
    }

    fn data(pi: &Mat, tx: &Mat) -> (Subspace, Subspace) {
        let tx = Subspace::span(tx, RANK_TOL);
        let perp = Subspace::span(&(pi * tx.orthogonal_complement().basis()), RANK_TOL);
        (tx, perp)
    }

    #[test]
    fn coisotropic_line_in_plane_structure() {
        let mut pi = Mat::zeros(3, 3);
        pi[(0, 1)] = 1.0;
        pi[(1, 0)] = -1.0;
        let (tx, perp) = data(&pi, &Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]));
        let c = complement_pointwise(&pi, &tx, &perp, ComplementMode::Coisotropic, None, None, RANK_TOL).unwrap();
        assert_eq!(c.w.dim(), 2);
        assert!(c.invariance_residual < 1e-12);
        // sigma vanishes: pi(W^0, W^0) = 0
        assert!(max_abs(&(c.w0.basis().transpose() * &pi * c.w0.basis())) < 1e-12);
    }

    #[test]
    fn coisotropic_requires_containment() {
        let pi = sympl(4);
        let (tx, perp) = data(&pi, &Mat::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
        assert!(matches!(
            complement_pointwise(&pi, &tx, &perp, ComplementMode::Coisotropic, None, None, RANK_TOL),
            Err(Error::Prerequisite(_))
        ));
    }

    #[test]
    fn transversal_mode_is_tangent_space() {
        let pi = sympl(4);
        let (tx, perp) = data(&pi, &Mat::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
        let c = complement_pointwise(&pi, &tx, &perp, ComplementMode::Transversal, None, None, RANK_TOL).unwrap();
        assert!(c.w.max_angle_sin(&tx) < 1e-14);
    }

    fn mat_strategy(r: usize, c: usize) -> impl Strategy<Value = Mat> {
        proptest::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| Mat::from_row_slice(r, c, &v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // Every subspace of a symplectic space is pre-Poisson pointwise, so the
        // construction applies to any tangent space in R^6.
        #[test]
        fn pre_poisson_properties_hold(a in mat_strategy(6, 6), t in mat_strategy(6, 3)) {
            let q = SkewForm::antisymmetrize(&a).matrix() * 0.3 + sympl(6);
            let (tx, perp) = data(&q, &t);
            prop_assume!(tx.dim() == 3);
            let c = complement_pointwise(&q, &tx, &perp, ComplementMode::PrePoisson, None, None, RANK_TOL).unwrap();
            prop_assert_eq!(c.w.dim() + perp.dim(), 6);
            prop_assert_eq!(c.w.sum(&perp, RANK_TOL).dim(), 6);
            prop_assert!(c.invariance_residual <= 1e-10);
            prop_assert!(c.intersection_residual <= 1e-10);
        }

        #[test]
        fn coisotropic_properties_hold(a in mat_strategy(4, 4)) {
            // hyperplanes in symplectic R^4 are coisotropic
            let q = sympl(4);
            let normal = a.column(0).into_owned();
            prop_assume!(normal.norm() > 0.1);
            let tx = Subspace::from_orthonormal(Mat::from_columns(&[normal.normalize()])).orthogonal_complement();
            let perp = Subspace::span(&(&q * tx.orthogonal_complement().basis()), RANK_TOL);
            let c = complement_pointwise(&q, &tx, &perp, ComplementMode::Coisotropic, None, None, RANK_TOL).unwrap();
            prop_assert!(c.invariance_residual <= 1e-10);
            prop_assert!(c.intersection_residual <= 1e-10);
            let sigma = c.w0.basis().transpose() * &q * c.w0.basis();
            prop_assert!(max_abs(&sigma) <= 1e-10);
        }
    }
}
