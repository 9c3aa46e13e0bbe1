//! Parametrized submanifolds and their pointwise Poisson data.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expression, VarNames};
use crate::field::BivectorField;
use crate::linear::{pinv, rank_svd, DiracSpace, Mat, Subspace};
use crate::par::Exec;
use crate::sampling::{rng, DomainBox};

/// A map `u -> X(u)` from a box in `R^k` into `R^n`.
#[derive(Clone, Debug)]
pub struct Chart {
    components: Vec<Expression>,
    jac: Vec<Vec<Expression>>,
    domain: DomainBox,
    params: Vec<String>,
}

impl Chart {
    pub fn new(components: Vec<Expression>, domain: DomainBox) -> Result<Self> {
        let k = domain.dim();
        if components.is_empty() {
            return Err(Error::Dimension("chart without components".into()));
        }
        if let Some(bad) = components.iter().find(|c| c.arity() != k) {
            return Err(Error::Arity {
                expected: k,
                found: bad.arity(),
                context: "chart component".into(),
            });
        }
        let jac = components
            .iter()
            .map(|c| (0..k).map(|a| c.derive(a)).collect())
            .collect();
        Ok(Chart {
            components,
            jac,
            domain,
            params: (0..k).map(|i| format!("u{}", i + 1)).collect(),
        })
    }

    pub fn parse(components: &[&str], params: &VarNames, domain: DomainBox) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| Expression::parse_with(c, params))
            .collect::<Result<Vec<_>>>()?;
        let mut chart = Chart::new(comps, domain)?;
        chart.params = params.names().to_vec();
        Ok(chart)
    }

    pub fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn param_names(&self) -> &[String] {
        &self.params
    }

    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(u)).collect()
    }

    /// `n x k` Jacobian.
    pub fn jacobian(&self, u: &[f64]) -> Result<Mat> {
        let (n, k) = (self.ambient_dim(), self.param_dim());
        let mut m = Mat::zeros(n, k);
        for i in 0..n {
            for a in 0..k {
                if !self.jac[i][a].is_zero() {
                    m[(i, a)] = self.jac[i][a].eval(u)?;
                }
            }
        }
        Ok(m)
    }
}

/// Tangent data of a submanifold at one parameter.
#[derive(Clone, Debug)]
pub struct PointData {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub jac: Mat,
    pub pi: Mat,
    pub tx: Subspace,
    pub tx0: Subspace,
    /// `sharp(TX^0)`.
    pub perp: Subspace,
    /// `ker sharp ∩ TX^0`.
    pub kernel: Subspace,
}

impl PointData {
    pub fn perp_rank(&self) -> usize {
        self.perp.dim()
    }

    pub fn perp_cap_tx(&self, tol: f64) -> Subspace {
        self.perp.intersection(&self.tx, tol)
    }

    pub fn tx_plus_perp(&self, tol: f64) -> Subspace {
        self.tx.sum(&self.perp, tol)
    }
}

pub fn point_data(field: &BivectorField, chart: &Chart, u: &[f64], tol: f64) -> Result<PointData> {
    if chart.ambient_dim() != field.dim() {
        return Err(Error::Dimension(format!(
            "chart lands in R^{}, structure lives on R^{}",
            chart.ambient_dim(),
            field.dim()
        )));
    }
    let x = chart.point(u)?;
    let jac = chart.jacobian(u)?;
    let r = rank_svd(&jac, tol)?;
    if r.rank != chart.param_dim() {
        return Err(Error::NotImmersion { u: u.to_vec() });
    }
    let tx = r.column_space;
    let tx0 = tx.orthogonal_complement();
    let pi = field.matrix(&x)?;
    let image = &pi * tx0.basis();
    let (perp, kernel) = if tx0.dim() == 0 {
        (Subspace::zero(x.len()), Subspace::zero(x.len()))
    } else {
        let ri = rank_svd(&image, tol)?;
        let kernel = Subspace::span(&(tx0.basis() * ri.null_space.basis()), tol);
        (ri.column_space, kernel)
    };
    Ok(PointData {
        u: u.to_vec(),
        x,
        jac,
        pi,
        tx,
        tx0,
        perp,
        kernel,
    })
}

/// Pullback of the graph of the structure to parameter space.
///
/// With `expected_perp` the kernel of the pullback is checked against the
/// value forced by that rank, so points where the rank drops are rejected.
pub fn pullback_dirac(pd: &PointData, expected_perp: Option<usize>) -> Result<DiracSpace> {
    let l = DiracSpace::graph_bivector(&crate::linear::SkewForm::from_upper(&pd.pi));
    let p = l.pullback(&pd.jac)?;
    if let Some(r) = expected_perp {
        let expected = pd.tx0.dim() - r;
        if p.kernel_dim != expected {
            return Err(Error::RankDefect {
                expected,
                found: p.kernel_dim,
            });
        }
    }
    Ok(p.space)
}

/// The same pullback through `{(sharp a, i* a) : a in (TX^perp)^0}`.
pub fn pullback_dirac_via_annihilator(pd: &PointData, tol: f64) -> Result<DiracSpace> {
    let ann = pd.perp.orthogonal_complement();
    let k = pd.jac.ncols();
    let jp = pinv(&pd.jac, tol);
    let a = ann.basis();
    let mut span = Mat::zeros(2 * k, a.ncols());
    span.view_mut((0, 0), (k, a.ncols()))
        .copy_from(&(&jp * &pd.pi * a));
    span.view_mut((k, 0), (k, a.ncols()))
        .copy_from(&(pd.jac.transpose() * a));
    DiracSpace::new(&span)
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityScan {
    pub regular: bool,
    pub rank: Option<usize>,
    pub rank_min: usize,
    pub rank_max: usize,
    pub samples: usize,
    /// Up to eight parameters per observed rank.
    pub witnesses: BTreeMap<usize, Vec<Vec<f64>>>,
}

/// Grid points followed by ten times as many seeded random points.
pub fn scan_points(chart: &Chart, grid: &[usize], seed: u64) -> Vec<Vec<f64>> {
    let mut pts = chart.domain().grid(grid);
    let extra = 10 * pts.len();
    pts.extend(chart.domain().random_points(extra, &mut rng(seed)));
    pts
}

pub fn regularity_scan(
    field: &BivectorField,
    chart: &Chart,
    grid: &[usize],
    seed: u64,
    tol: f64,
    exec: Exec,
) -> Result<RegularityScan> {
    let pts = scan_points(chart, grid, seed);
    let ranks = exec.map(&pts, |u| point_data(field, chart, u, tol).map(|p| p.perp_rank()));
    let mut witnesses: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for (u, r) in pts.iter().zip(ranks) {
        let list = witnesses.entry(r?).or_default();
        if list.len() < 8 {
            list.push(u.clone());
        }
    }
    let rank_min = *witnesses.keys().next().unwrap_or(&0);
    let rank_max = *witnesses.keys().last().unwrap_or(&0);
    Ok(RegularityScan {
        regular: witnesses.len() == 1,
        rank: (witnesses.len() == 1).then_some(rank_min),
        rank_min,
        rank_max,
        samples: pts.len(),
        witnesses,
    })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct RankRange {
    pub min: usize,
    pub max: usize,
}

impl RankRange {
    fn of(v: impl Iterator<Item = usize> + Clone) -> Self {
        RankRange {
            min: v.clone().min().unwrap_or(0),
            max: v.max().unwrap_or(0),
        }
    }

    pub fn constant(&self) -> bool {
        self.min == self.max
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub regular: bool,
    /// Transverse to the leaves: `TX + im sharp = TM`.
    pub transversal: bool,
    /// `TX ⊕ TX^perp = TM`.
    pub poisson_transversal: bool,
    pub poisson_submanifold: bool,
    pub coisotropic: bool,
    pub pre_poisson: bool,
    pub poisson_dirac: bool,
    pub perp_rank: RankRange,
    pub perp_cap_tx_rank: RankRange,
    pub tx_plus_perp_rank: RankRange,
}

pub fn classify(
    field: &BivectorField,
    chart: &Chart,
    grid: &[usize],
    seed: u64,
    tol: f64,
    exec: Exec,
) -> Result<Classification> {
    let pts = scan_points(chart, grid, seed);
    let n = chart.ambient_dim();
    let k = chart.param_dim();
    let rows = exec.map(&pts, |u| {
        let pd = point_data(field, chart, u, tol)?;
        Ok::<_, Error>((pd.perp_rank(), pd.perp_cap_tx(tol).dim(), pd.tx_plus_perp(tol).dim()))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let perp = RankRange::of(rows.iter().map(|r| r.0));
    let cap = RankRange::of(rows.iter().map(|r| r.1));
    let sum = RankRange::of(rows.iter().map(|r| r.2));
    let regular = perp.constant();
    Ok(Classification {
        regular,
        transversal: rows.iter().all(|r| r.0 == n - k),
        poisson_transversal: rows.iter().all(|r| r.0 == n - k && r.1 == 0),
        poisson_submanifold: rows.iter().all(|r| r.0 == 0),
        coisotropic: rows.iter().all(|r| r.1 == r.0),
        pre_poisson: sum.constant(),
        poisson_dirac: regular && rows.iter().all(|r| r.1 == 0),
        perp_rank: perp,
        perp_cap_tx_rank: cap,
        tx_plus_perp_rank: sum,
    })
}

/// Rank of `TX + im sharp` at a parameter.
pub fn leaf_transversality_rank(field: &BivectorField, chart: &Chart, u: &[f64], tol: f64) -> Result<usize> {
    let x = chart.point(u)?;
    let mut m = chart.jacobian(u)?;
    let pi = field.matrix(&x)?;
    let k = m.ncols();
    m = m.resize_horizontally(k + pi.ncols(), 0.0);
    m.view_mut((0, k), (pi.nrows(), pi.ncols())).copy_from(&pi);
    Ok(rank_svd(&m, tol)?.rank)
}

/// Thicken a regular submanifold into one transverse to the leaves.
///
/// Near `u0` the result is `(u, e) -> X(u) + E e` with `E` an orthonormal
/// frame of the complement of `TX + im sharp` at `u0`, and `e` in `[-half, half]`.
pub fn make_transversal(field: &BivectorField, chart: &Chart, u0: &[f64], half: f64, tol: f64) -> Result<Chart> {
    let pd = point_data(field, chart, u0, tol)?;
    let r0 = pd.perp_rank();
    let near: Vec<Vec<f64>> = (0..chart.param_dim())
        .flat_map(|a| {
            [-1e-3, 1e-3].into_iter().map(move |s| {
                let mut u = u0.to_vec();
                u[a] += s;
                u
            })
        })
        .collect();
    for u in &near {
        if point_data(field, chart, u, tol)?.perp_rank() != r0 {
            return Err(Error::Prerequisite(format!("not regular near {u0:?}")));
        }
    }
    let span = pd.tx.sum(&Subspace::span(&pd.pi, tol), tol);
    let e = span.orthogonal_complement();
    let k = chart.param_dim();
    let m = e.dim();
    let comps = chart
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut out = c.widen(k + m);
            for a in 0..m {
                let coef = e.basis()[(i, a)];
                if coef != 0.0 {
                    out = out.add(&Expression::var(k + a, k + m).scale(coef));
                }
            }
            out
        })
        .collect();
    let mut lo = chart.domain().lo.clone();
    let mut hi = chart.domain().hi.clone();
    lo.extend(std::iter::repeat_n(-half, m));
    hi.extend(std::iter::repeat_n(half, m));
    let mut out = Chart::new(comps, DomainBox::new(lo, hi))?;
    out.params = chart
        .param_names()
        .iter()
        .cloned()
        .chain((0..m).map(|a| format!("e{}", a + 1)))
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::RANK_TOL;

    fn so3() -> BivectorField {
        BivectorField::parse(3, &[(1, 2, "z"), (2, 3, "x"), (3, 1, "y")], &VarNames::standard(3)).unwrap()
    }

    fn dxdy3() -> BivectorField {
        BivectorField::parse(3, &[(1, 2, "1")], &VarNames::standard(3)).unwrap()
    }

    fn chart(comps: &[&str], names: &[&str], lo: Vec<f64>, hi: Vec<f64>) -> Chart {
        Chart::parse(comps, &VarNames::named(names).unwrap(), DomainBox::new(lo, hi)).unwrap()
    }

    #[test]
    fn so3_plane_perp_direction() {
        let c = chart(&["u", "v", "0"], &["u", "v"], vec![-1.0, -1.0], vec![1.0, 1.0]);
        let pd = point_data(&so3(), &c, &[1.0, 0.0], RANK_TOL).unwrap();
        assert_eq!(pd.perp_rank(), 1);
        // y d/dx - x d/dy at (1, 0, 0) is -d/dy
        let b = pd.perp.basis().column(0);
        assert!((b[1].abs() - 1.0).abs() < 1e-14);
        let origin = point_data(&so3(), &c, &[0.0, 0.0], RANK_TOL).unwrap();
        assert_eq!(origin.perp_rank(), 0);
        assert_eq!(origin.kernel.dim(), 1);
    }

    #[test]
    fn exactness_of_ranks() {
        let c = chart(&["u", "v", "u^3"], &["u", "v"], vec![-1.0, -1.0], vec![1.0, 1.0]);
        for u in [[0.0, 0.3], [0.5, -0.2]] {
            let pd = point_data(&dxdy3(), &c, &u, RANK_TOL).unwrap();
            assert_eq!(pd.kernel.dim(), 3 - 2 - pd.perp_rank());
        }
    }

    #[test]
    fn cubic_graph_is_not_regular() {
        let c = chart(&["u", "v", "u^3"], &["u", "v"], vec![-1.0, -1.0], vec![1.0, 1.0]);
        let s = regularity_scan(&dxdy3(), &c, &[5, 5], 0, RANK_TOL, Exec::Parallel).unwrap();
        assert!(!s.regular);
        assert!(s.witnesses[&0].iter().all(|u| u[0].abs() < 1e-3));
        assert!(s.witnesses.contains_key(&1));
    }

    #[test]
    fn figure_eight_is_regular_rank_one() {
        let f = BivectorField::parse(4, &[(3, 4, "1")], &VarNames::standard(4)).unwrap();
        let c = chart(&["sin(2*t)", "sin(t)", "t", "th"], &["t", "th"], vec![-3.0, -1.0], vec![3.0, 1.0]);
        let s = regularity_scan(&f, &c, &[13, 3], 0, RANK_TOL, Exec::Sequential).unwrap();
        assert!(s.regular);
        assert_eq!(s.rank, Some(1));
    }

    #[test]
    fn classification_flags() {
        let ray = chart(&["t + 1", "0", "0"], &["t"], vec![-0.5], vec![0.5]);
        let c = classify(&so3(), &ray, &[5], 0, RANK_TOL, Exec::Parallel).unwrap();
        assert!(c.transversal && c.poisson_transversal && c.regular && c.poisson_dirac);

        let line = chart(&["u", "0", "0"], &["u"], vec![-1.0], vec![1.0]);
        let c = classify(&dxdy3(), &line, &[5], 0, RANK_TOL, Exec::Parallel).unwrap();
        assert!(c.coisotropic && c.regular && !c.transversal && c.pre_poisson);

        let sphere = chart(
            &["sin(u)*cos(v)", "sin(u)*sin(v)", "cos(u)"],
            &["u", "v"],
            vec![0.3, -3.0],
            vec![2.8, 3.0],
        );
        let c = classify(&so3(), &sphere, &[5, 5], 0, RANK_TOL, Exec::Parallel).unwrap();
        assert!(c.poisson_submanifold && c.regular && c.coisotropic);
    }

    #[test]
    fn two_pullback_routes_agree() {
        let sphere = chart(
            &["sin(u)*cos(v)", "sin(u)*sin(v)", "cos(u)"],
            &["u", "v"],
            vec![0.3, -3.0],
            vec![2.8, 3.0],
        );
        let plane = chart(&["u", "v", "0"], &["u", "v"], vec![-1.0, -1.0], vec![1.0, 1.0]);
        for (c, u) in [(&sphere, [1.0, 0.5]), (&plane, [1.0, 1.0])] {
            let pd = point_data(&so3(), c, &u, RANK_TOL).unwrap();
            let a = pullback_dirac(&pd, Some(pd.perp_rank())).unwrap();
            let b = pullback_dirac_via_annihilator(&pd, RANK_TOL).unwrap();
            assert!(a.distance(&b) <= 1e-8);
        }
        let pd = point_data(&so3(), &plane, &[0.0, 0.0], RANK_TOL).unwrap();
        assert!(matches!(pullback_dirac(&pd, Some(1)), Err(Error::RankDefect { .. })));
    }

    #[test]
    fn figure_eight_thickening_is_transverse() {
        let f = BivectorField::parse(4, &[(3, 4, "1")], &VarNames::standard(4)).unwrap();
        let c = chart(&["sin(2*t)", "sin(t)", "t", "th"], &["t", "th"], vec![-3.0, -1.0], vec![3.0, 1.0]);
        let t = make_transversal(&f, &c, &[0.4, 0.0], 0.1, RANK_TOL).unwrap();
        assert_eq!(t.param_dim(), 3);
        for u in [[0.4, 0.0, 0.0], [0.5, 0.3, 0.05], [0.3, -0.5, -0.05]] {
            assert_eq!(leaf_transversality_rank(&f, &t, &u, RANK_TOL).unwrap(), 4);
        }
    }

    #[test]
    fn non_immersion_is_rejected() {
        let c = chart(&["u^2", "0", "0"], &["u"], vec![-1.0], vec![1.0]);
        assert!(matches!(
            point_data(&so3(), &c, &[0.0], RANK_TOL),
            Err(Error::NotImmersion { .. })
        ));
    }
}
