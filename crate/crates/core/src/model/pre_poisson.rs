//! The two pieces of data that fix the model around a pre-Poisson submanifold.

use serde::Serialize;

use crate::error::Result;
use crate::field::BivectorField;
use crate::linear::{max_abs, rank_svd, DiracSpace, SkewForm, RANK_TOL};
use crate::submanifold::{pullback_dirac, Chart};

use super::complement::{complement_at, ComplementMode, ComplementSpec};

#[derive(Clone, Debug)]
pub struct PrePoissonSample {
    pub u: Vec<f64>,
    pub pullback: DiracSpace,
    /// `pi` restricted to covectors in `W^0` that also annihilate `TX^perp ∩ TX`.
    pub quotient_form: SkewForm,
    /// `max |pi(a, b)|` for `a ∈ (H + W)^0`, `b ∈ W^0`.
    pub cross_term: f64,
    pub invariance_residual: f64,
    pub intersection_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrePoissonReport {
    pub samples: usize,
    pub quotient_dim: usize,
    pub quotient_rank: usize,
    pub max_cross_term: f64,
    pub max_invariance: f64,
    pub max_intersection: f64,
}

pub fn pre_poisson_at(field: &BivectorField, chart: &Chart, u: &[f64], spec: &ComplementSpec, tol: f64) -> Result<PrePoissonSample> {
    let spec = ComplementSpec {
        mode: ComplementMode::PrePoisson,
        ..spec.clone()
    };
    let (pd, data) = complement_at(field, chart, u, &spec, tol)?;
    let pullback = pullback_dirac(&pd, None)?;
    let cap = pd.perp_cap_tx(tol);
    let hw0 = data.h.sum(&data.w, tol).orthogonal_complement();
    let cross_term = if hw0.dim() == 0 || data.w0.dim() == 0 {
        0.0
    } else {
        max_abs(&(data.w0.basis().transpose() * &pd.pi * hw0.basis()))
    };
    let q = data.w0.intersection(&cap.orthogonal_complement(), tol);
    let quotient_form = SkewForm::antisymmetrize(&(q.basis().transpose() * pd.pi.transpose() * q.basis()));
    Ok(PrePoissonSample {
        u: u.to_vec(),
        pullback,
        quotient_form,
        cross_term,
        invariance_residual: data.invariance_residual,
        intersection_residual: data.intersection_residual,
    })
}

pub fn pre_poisson_report(field: &BivectorField, chart: &Chart, grid_u: &[Vec<f64>], spec: &ComplementSpec, tol: f64) -> Result<PrePoissonReport> {
    let samples = grid_u.iter().map(|u| pre_poisson_at(field, chart, u, spec, tol)).collect::<Result<Vec<_>>>()?;
    let first = samples.first();
    let quotient_dim = first.map_or(0, |s| s.quotient_form.dim());
    let quotient_rank = match first {
        Some(s) if quotient_dim > 0 => rank_svd(s.quotient_form.matrix(), RANK_TOL)?.rank,
        _ => 0,
    };
    Ok(PrePoissonReport {
        samples: samples.len(),
        quotient_dim,
        quotient_rank,
        max_cross_term: samples.iter().map(|s| s.cross_term).fold(0.0, f64::max),
        max_invariance: samples.iter().map(|s| s.invariance_residual).fold(0.0, f64::max),
        max_intersection: samples.iter().map(|s| s.intersection_residual).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarNames;
    use crate::sampling::DomainBox;

    fn sympl4() -> BivectorField {
        BivectorField::parse(4, &[(1, 3, "1"), (2, 4, "1")], &VarNames::standard(4)).unwrap()
    }

    #[test]
    fn coisotropic_point_has_trivial_quotient() {
        let f = BivectorField::parse(3, &[(1, 2, "1")], &VarNames::standard(3)).unwrap();
        let c = Chart::parse(&["u", "0", "0"], &VarNames::named(&["u"]).unwrap(), DomainBox::cube(1, 1.0)).unwrap();
        let rep = pre_poisson_report(&f, &c, &c.domain().grid(&[3]), &ComplementSpec::default(), RANK_TOL).unwrap();
        assert_eq!(rep.quotient_dim, 0);
    }

    #[test]
    fn transversal_keeps_full_sigma() {
        let f = sympl4();
        let c = Chart::parse(&["u", "0", "v", "0"], &VarNames::named(&["u", "v"]).unwrap(), DomainBox::cube(2, 1.0)).unwrap();
        let rep = pre_poisson_report(&f, &c, &c.domain().grid(&[2, 2]), &ComplementSpec::default(), RANK_TOL).unwrap();
        // the x1-x3 plane is symplectic, so TX^perp = span(e2, e4) meets TX in 0
        assert_eq!((rep.quotient_dim, rep.quotient_rank), (2, 2));
    }

    #[test]
    fn line_with_one_dimensional_cap_has_no_cross_term() {
        let f = sympl4();
        let c = Chart::parse(&["u", "0.5*u", "0", "0"], &VarNames::named(&["u"]).unwrap(), DomainBox::cube(1, 1.0)).unwrap();
        let rep = pre_poisson_report(&f, &c, &c.domain().grid(&[4]), &ComplementSpec::default(), RANK_TOL).unwrap();
        assert_eq!(rep.quotient_dim, 2);
        assert!(rep.max_cross_term <= 1e-10);
        assert!(rep.max_invariance <= 1e-10 && rep.max_intersection <= 1e-10);
    }
}
