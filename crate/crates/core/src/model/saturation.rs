//! The saturation `P = exp(j(W^0))` near the zero section, and its checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::BivectorField;
use crate::linear::{norm2, pinv, rank_svd, Mat, Vector};
use crate::par::Exec;
use crate::sampling::{ball_grid, random_in_ball, rng};
use crate::sprayflow::{exp_chi, with_radius_halving, CotangentState};
use crate::submanifold::Chart;

use super::bundle::BundleChart;
use super::complement::ComplementSpec;

#[derive(Clone, Debug)]
pub struct GridSettings {
    pub steps: usize,
    pub xi_radius: f64,
    pub xi_per_axis: usize,
    pub tol: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings {
            steps: crate::sprayflow::DEFAULT_STEPS,
            xi_radius: 0.2,
            xi_per_axis: 3,
            tol: crate::linear::RANK_TOL,
            seed: 0,
            exec: Exec::Parallel,
        }
    }
}

/// Grid states `(u, xi)` with `|xi| <= radius`.
pub fn grid_states(grid_u: &[Vec<f64>], rank: usize, radius: f64, per_axis: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let fiber = ball_grid(rank, radius, per_axis);
    grid_u
        .iter()
        .flat_map(|u| fiber.iter().map(move |xi| (u.clone(), xi.clone())))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationSample {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    pub rank: usize,
    pub poisson_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationReport {
    pub dim_x: usize,
    pub fiber_rank: usize,
    pub dim_p: usize,
    pub xi_radius: f64,
    pub min_rank: usize,
    pub max_rank: usize,
    pub max_poisson_residual: f64,
    /// Largest distance from `exp` of a full covector to the chart image.
    pub max_full_fiber_distance: f64,
    pub samples: Vec<SaturationSample>,
}

/// `max |(1 - P_TP) sharp(TP^0)|` at `y`, with `TP` the column space of `d`.
pub fn poisson_residual(field: &BivectorField, y: &[f64], d: &Mat, tol: f64) -> Result<(usize, f64)> {
    let r = rank_svd(d, tol)?;
    let tp = r.column_space;
    let tp0 = tp.orthogonal_complement();
    if tp0.dim() == 0 {
        return Ok((r.rank, 0.0));
    }
    let img = field.matrix(y)? * tp0.basis();
    Ok((r.rank, norm2(&(&img - tp.projector() * &img))))
}

/// Gauss-Newton solve of `exp(X(u), c(u) xi) = y` from `z0 = (u, xi)`.
pub fn invert_exp(bc: &BundleChart, y: &[f64], z0: &[f64], steps: usize) -> Result<(Vec<f64>, f64)> {
    let yv = Vector::from_column_slice(y);
    let mut z = z0.to_vec();
    let mut dist = f64::INFINITY;
    for _ in 0..40 {
        let (u, xi) = bc.split(&z);
        let (f, d) = bc.exp_with_jac(u, xi, steps)?;
        let res = &yv - Vector::from_column_slice(&f);
        dist = res.norm();
        let step = pinv(&d, 1e-12) * &res;
        for (zi, s) in z.iter_mut().zip(step.iter()) {
            *zi += s;
        }
        if step.norm() < 1e-13 {
            let (u, xi) = bc.split(&z);
            let (f, _) = bc.exp_with_jac(u, xi, steps)?;
            dist = (&yv - Vector::from_column_slice(&f)).norm();
            break;
        }
    }
    Ok((z, dist))
}

fn run(
    field: &BivectorField,
    chart: &Chart,
    spec: &ComplementSpec,
    grid_u: &[Vec<f64>],
    s: &GridSettings,
    radius: f64,
    full_fiber_checks: usize,
) -> Result<SaturationReport> {
    let first = grid_u.first().ok_or_else(|| Error::Dimension("empty grid".into()))?;
    let rank = BundleChart::new(field, chart, spec, first, s.tol)?.rank();
    let k = chart.param_dim();
    let n = chart.ambient_dim();
    let per_u = s.exec.map(grid_u, |u| -> Result<(Vec<SaturationSample>, f64)> {
        let bc = BundleChart::new(field, chart, spec, u, s.tol)?;
        if bc.rank() != rank {
            return Err(Error::Prerequisite(format!("fiber rank changes at {u:?}")));
        }
        let mut out = Vec::new();
        for xi in ball_grid(rank, radius, s.xi_per_axis) {
            let (y, d) = bc.exp_with_jac(u, &xi, s.steps)?;
            let (r, res) = poisson_residual(field, &y, &d, s.tol)?;
            out.push(SaturationSample {
                u: u.clone(),
                xi,
                y,
                rank: r,
                poisson_residual: res,
            });
        }
        let mut worst: f64 = 0.0;
        if k + rank < n {
            let x = chart.point(u)?;
            let frame = bc.frame(u)?;
            let seed = s.seed ^ u.iter().fold(0u64, |h, v| h.rotate_left(13) ^ v.to_bits());
            let mut g = rng(seed);
            for _ in 0..full_fiber_checks {
                let full = random_in_ball(n, 0.5 * radius, &mut g);
                let y = exp_chi(field, &CotangentState::new(x.clone(), full.clone()), s.steps)?;
                let xi0 = frame.transpose() * Vector::from_column_slice(&full);
                let z0: Vec<f64> = u.iter().copied().chain(xi0.iter().copied()).collect();
                let (_, dist) = invert_exp(&bc, &y, &z0, s.steps)?;
                worst = worst.max(dist);
            }
        }
        Ok((out, worst))
    });
    let mut samples = Vec::new();
    let mut full = 0.0f64;
    for r in per_u {
        let (v, d) = r?;
        samples.extend(v);
        full = full.max(d);
    }
    Ok(SaturationReport {
        dim_x: k,
        fiber_rank: rank,
        dim_p: k + rank,
        xi_radius: radius,
        min_rank: samples.iter().map(|s| s.rank).min().unwrap_or(0),
        max_rank: samples.iter().map(|s| s.rank).max().unwrap_or(0),
        max_poisson_residual: samples.iter().map(|s| s.poisson_residual).fold(0.0, f64::max),
        max_full_fiber_distance: full,
        samples,
    })
}

/// Sample the saturation over `grid_u` and the fiber ball; the radius is
/// halved until every path stays in the domain.
pub fn saturation_chart(
    field: &BivectorField,
    chart: &Chart,
    spec: &ComplementSpec,
    grid_u: &[Vec<f64>],
    settings: &GridSettings,
    full_fiber_checks: usize,
) -> Result<SaturationReport> {
    with_radius_halving(settings.xi_radius, |r| run(field, chart, spec, grid_u, settings, r, full_fiber_checks))
        .map(|(_, rep)| rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarNames;
    use crate::model::complement::ComplementMode;
    use crate::sampling::DomainBox;

    #[test]
    fn coisotropic_line_sweeps_the_plane() {
        let f = BivectorField::parse(3, &[(1, 2, "1")], &VarNames::standard(3)).unwrap();
        let c = Chart::parse(&["u", "0", "0"], &VarNames::named(&["u"]).unwrap(), DomainBox::cube(1, 1.0)).unwrap();
        let spec = ComplementSpec::mode(ComplementMode::Coisotropic);
        let grid = c.domain().grid(&[5]);
        let rep = saturation_chart(&f, &c, &spec, &grid, &GridSettings { steps: 64, ..Default::default() }, 2).unwrap();
        assert_eq!(rep.dim_p, 2);
        assert_eq!((rep.min_rank, rep.max_rank), (2, 2));
        assert!(rep.samples.iter().all(|s| s.y[2].abs() <= 1e-8));
        assert!(rep.max_poisson_residual <= 1e-8);
        assert!(rep.max_full_fiber_distance <= 1e-8);
    }
}
