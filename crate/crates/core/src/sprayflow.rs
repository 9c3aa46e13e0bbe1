//! The flat spray, its flow, the exponential map and the averaged form.
//!
//! The spray is `chi(x, xi) = (sharp_x xi, 0)`: covectors are transported
//! unchanged and base points follow `x' = P(x) xi`. The flow is integrated by
//! fixed-step RK4 together with its variational equation, whose coefficients
//! come from the exact first derivatives of the entries.
//!
//! The averaged form is `Omega = int_0^1 (d phi_t)^T J (d phi_t) dt` with
//! `J((v1, a1), (v2, a2)) = <v1, a2> - <v2, a1>`, integrated by composite
//! Simpson on the RK4 nodes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::BivectorField;
use crate::linear::{rank_svd, Mat, SkewForm, Subspace, Vector};
use crate::submanifold::Chart;

/// Smallest step count accepted by the integrator.
pub const MIN_STEPS: usize = 16;
/// Default step count.
pub const DEFAULT_STEPS: usize = 1024;

/// A covector `xi` at the base point `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CotangentState {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl CotangentState {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        assert_eq!(x.len(), xi.len());
        CotangentState { x, xi }
    }

    pub fn zero(x: Vec<f64>) -> Self {
        let n = x.len();
        CotangentState { x, xi: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Clone, Debug)]
pub struct FlowNode {
    pub t: f64,
    pub x: Vec<f64>,
    pub jac: Mat,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub end: CotangentState,
    /// `2n x 2n` Jacobian of the time-`t` flow.
    pub jac: Mat,
    /// Time reached; smaller than requested when the path left the domain.
    pub t_reached: f64,
    pub left_domain: bool,
    /// All RK4 nodes, when requested.
    pub nodes: Option<Vec<FlowNode>>,
}

/// The spray vector at a state.
pub fn spray_eval(field: &BivectorField, s: &CotangentState) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = field.sharp(&s.x, &Vector::from_column_slice(&s.xi))?;
    Ok((v.as_slice().to_vec(), vec![0.0; s.dim()]))
}

fn rhs(field: &BivectorField, x: &[f64], xi: &Vector, phi: &Mat) -> Result<(Vector, Mat)> {
    let n = x.len();
    let (p, d) = field.jet(x)?;
    let dx = &p * xi;
    let mut a = Mat::zeros(n, n);
    for (k, dk) in d.iter().enumerate() {
        a.set_column(k, &(dk * xi));
    }
    // only the base rows of the variational matrix move
    let top = &a * phi.rows(0, n) + &p * phi.rows(n, n);
    let mut dphi = Mat::zeros(2 * n, 2 * n);
    dphi.view_mut((0, 0), (n, 2 * n)).copy_from(&top);
    Ok((dx, dphi))
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < MIN_STEPS || steps % 2 != 0 {
        return Err(Error::Flow(format!(
            "step count must be even and at least {MIN_STEPS}, got {steps}"
        )));
    }
    Ok(())
}

/// Integrate the spray from `s` up to `t_end`.
pub fn flow(field: &BivectorField, s: &CotangentState, t_end: f64, steps: usize, record: bool) -> Result<FlowResult> {
    check_steps(steps)?;
    let n = s.dim();
    if n != field.dim() {
        return Err(Error::Arity {
            expected: field.dim(),
            found: n,
            context: "flow state".into(),
        });
    }
    let h = t_end / steps as f64;
    let xi = Vector::from_column_slice(&s.xi);
    let mut x = Vector::from_column_slice(&s.x);
    let mut phi = Mat::identity(2 * n, 2 * n);
    let mut nodes = record.then(|| {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(FlowNode {
            t: 0.0,
            x: s.x.clone(),
            jac: phi.clone(),
        });
        v
    });
    let mut left = false;
    let mut t_reached = 0.0;
    for step in 0..steps {
        let (k1, q1) = rhs(field, x.as_slice(), &xi, &phi)?;
        let x2 = &x + &k1 * (0.5 * h);
        let (k2, q2) = rhs(field, x2.as_slice(), &xi, &(&phi + &q1 * (0.5 * h)))?;
        let x3 = &x + &k2 * (0.5 * h);
        let (k3, q3) = rhs(field, x3.as_slice(), &xi, &(&phi + &q2 * (0.5 * h)))?;
        let x4 = &x + &k3 * h;
        let (k4, q4) = rhs(field, x4.as_slice(), &xi, &(&phi + &q3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        phi += (q1 + q2 * 2.0 + q3 * 2.0 + q4) * (h / 6.0);
        if x.iter().any(|v| !v.is_finite()) || phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                point: x.as_slice().to_vec(),
            });
        }
        t_reached = (step + 1) as f64 * h;
        if let Some(nodes) = nodes.as_mut() {
            nodes.push(FlowNode {
                t: t_reached,
                x: x.as_slice().to_vec(),
                jac: phi.clone(),
            });
        }
        if !field.domain().contains(x.as_slice()) {
            left = true;
            break;
        }
    }
    Ok(FlowResult {
        end: CotangentState::new(x.as_slice().to_vec(), s.xi.clone()),
        jac: phi,
        t_reached,
        left_domain: left,
        nodes,
    })
}

fn require_inside(r: FlowResult) -> Result<FlowResult> {
    if r.left_domain {
        return Err(Error::Flow(format!(
            "path left the domain at t = {}",
            r.t_reached
        )));
    }
    Ok(r)
}

/// Base point of the time-one flow.
pub fn exp_chi(field: &BivectorField, s: &CotangentState, steps: usize) -> Result<Vec<f64>> {
    Ok(require_inside(flow(field, s, 1.0, steps, false)?)?.end.x)
}

/// Base point of the time-one flow and the `n x 2n` differential of the exponential map.
pub fn exp_chi_with_jac(field: &BivectorField, s: &CotangentState, steps: usize) -> Result<(Vec<f64>, Mat)> {
    let r = require_inside(flow(field, s, 1.0, steps, false)?)?;
    let n = s.dim();
    Ok((r.end.x, r.jac.rows(0, n).into_owned()))
}

/// The canonical form `[[0, I], [-I, 0]]` on `R^n x R^n`.
pub fn omega_can(n: usize) -> SkewForm {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
    }
    SkewForm::from_upper(&m)
}

/// Simpson weights on `steps + 1` equally spaced nodes of `[0, 1]`.
fn simpson_weights(steps: usize) -> Vec<f64> {
    let h = 1.0 / steps as f64;
    (0..=steps)
        .map(|k| {
            let w = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// The averaged form at a state.
pub fn omega_chi(field: &BivectorField, s: &CotangentState, steps: usize) -> Result<SkewForm> {
    let r = require_inside(flow(field, s, 1.0, steps, true)?)?;
    let nodes = r.nodes.expect("recorded");
    let j = omega_can(s.dim());
    let mut acc = Mat::zeros(2 * s.dim(), 2 * s.dim());
    for (node, w) in nodes.iter().zip(simpson_weights(steps)) {
        acc += node.jac.transpose() * j.matrix() * &node.jac * w;
    }
    Ok(SkewForm::antisymmetrize(&acc))
}

/// The closed form of the averaged form on the zero section:
/// `<v1, a2> - <v2, a1> + pi(a1, a2)`.
pub fn omega_zero_section(pi: &Mat) -> SkewForm {
    let n = pi.nrows();
    let mut m = omega_can(n).matrix().clone();
    // pi(a1, a2) = a2^T P a1 = a1^T P^T a2
    m.view_mut((n, n), (n, n)).copy_from(&pi.transpose());
    SkewForm::from_upper(&m)
}

/// Largest deviation of the base path from `x' = sharp_x(xi)`.
///
/// The derivative of the computed path is taken by fourth-order finite
/// differences of the node values, which is independent of the integrator.
pub fn cotangent_path_residual(field: &BivectorField, s: &CotangentState, steps: usize) -> Result<f64> {
    let r = require_inside(flow(field, s, 1.0, steps, true)?)?;
    let nodes = r.nodes.expect("recorded");
    let h = 1.0 / steps as f64;
    let n = s.dim();
    let xi = Vector::from_column_slice(&s.xi);
    let f = |k: usize, i: usize| nodes[k].x[i];
    let last = steps;
    let mut worst: f64 = 0.0;
    for k in 0..=last {
        let target = field.sharp(&nodes[k].x, &xi)?;
        for i in 0..n {
            let d = if k >= 2 && k + 2 <= last {
                (f(k - 2, i) - 8.0 * f(k - 1, i) + 8.0 * f(k + 1, i) - f(k + 2, i)) / (12.0 * h)
            } else if k < 2 {
                let b = k;
                let c: [f64; 5] = if b == 0 {
                    [-25.0, 48.0, -36.0, 16.0, -3.0]
                } else {
                    [-3.0, -10.0, 18.0, -6.0, 1.0]
                };
                (0..5).map(|m| c[m] * f(m, i)).sum::<f64>() / (12.0 * h)
            } else {
                let c: [f64; 5] = if k == last {
                    [-25.0, 48.0, -36.0, 16.0, -3.0]
                } else {
                    [-3.0, -10.0, 18.0, -6.0, 1.0]
                };
                -(0..5).map(|m| c[m] * f(last - m, i)).sum::<f64>() / (12.0 * h)
            };
            worst = worst.max((d - target[i]).abs());
        }
    }
    Ok(worst)
}

/// Run `f` on radii `r, r/2, r/4, ...` until the flow stays in the domain.
pub fn with_radius_halving<T>(r0: f64, mut f: impl FnMut(f64) -> Result<T>) -> Result<(f64, T)> {
    let mut r = r0;
    for _ in 0..12 {
        match f(r) {
            Ok(v) => return Ok((r, v)),
            Err(Error::Flow(_)) => r *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Flow(format!("no admissible radius below {r0}")))
}

#[derive(Clone, Debug, Serialize)]
pub struct DualPairReport {
    /// `max |Omega(S1, S2)|` on `T(Sigma|_X)`.
    pub orthogonality: f64,
    pub s1_dim: usize,
    pub s2_dim: usize,
    pub kernel_dim: usize,
    pub triple_dim: usize,
    pub expected_triple_dim: usize,
    /// Rank of the differential of the exponential map restricted over `X`.
    pub exp_rank: usize,
}

/// Linear-algebra checks of the realization restricted over `X`.
///
/// Coordinates on `Sigma|_X` are `(u, xi)` with `xi` a full covector at `X(u)`.
pub fn dual_pair_check(
    field: &BivectorField,
    chart: &Chart,
    u: &[f64],
    xi: &[f64],
    perp_rank: usize,
    steps: usize,
    tol: f64,
) -> Result<DualPairReport> {
    let n = chart.ambient_dim();
    let k = chart.param_dim();
    let x = chart.point(u)?;
    let jx = chart.jacobian(u)?;
    let s = CotangentState::new(x, xi.to_vec());
    let omega = omega_chi(field, &s, steps)?;
    let r = require_inside(flow(field, &s, 1.0, steps, false)?)?;

    // d iota: (du, dxi) -> (J du, dxi)
    let mut di = Mat::zeros(2 * n, k + n);
    di.view_mut((0, 0), (n, k)).copy_from(&jx);
    di.view_mut((n, k), (n, n)).copy_from(&Mat::identity(n, n));
    let om = omega.pull(&di);
    let dexp = r.jac.rows(0, n) * &di;

    let mut s1 = Mat::zeros(k + n, n);
    s1.view_mut((k, 0), (n, n)).copy_from(&Mat::identity(n, n));
    let s1 = Subspace::from_orthonormal(s1);
    let ker_exp = rank_svd(&dexp, tol)?;
    let s2 = ker_exp.null_space;
    let kern = rank_svd(om.matrix(), tol)?.null_space;
    let orthogonality = crate::linear::max_abs(&(s1.basis().transpose() * om.matrix() * s2.basis()));
    let triple = s1.intersection(&kern, tol).intersection(&s2, tol);
    Ok(DualPairReport {
        orthogonality,
        s1_dim: s1.dim(),
        s2_dim: s2.dim(),
        kernel_dim: kern.dim(),
        triple_dim: triple.dim(),
        expected_triple_dim: (k + n) - k - (k + perp_rank),
        exp_rank: ker_exp.rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarNames;
    use crate::linear::{max_abs, sigma_min, RANK_TOL};
    use crate::sampling::DomainBox;

    fn so3() -> BivectorField {
        BivectorField::parse(3, &[(1, 2, "z"), (2, 3, "x"), (3, 1, "y")], &VarNames::standard(3)).unwrap()
    }

    fn sympl4() -> BivectorField {
        BivectorField::parse(4, &[(1, 3, "1"), (2, 4, "1")], &VarNames::standard(4)).unwrap()
    }

    #[test]
    fn spray_of_dz_at_north_pole_axis() {
        let s = CotangentState::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]);
        let (v, w) = spray_eval(&so3(), &s).unwrap();
        // P dz is the third column (-y, x, 0)
        assert_eq!(v, vec![0.0, 1.0, 0.0]);
        assert_eq!(w, vec![0.0; 3]);
    }

    #[test]
    fn so3_flow_is_a_rotation() {
        // with xi = dz fixed, x' = (-y, x, 0): rotation by angle t about the z axis
        let s = CotangentState::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]);
        let a = flow(&so3(), &s, 1.0, 1024, false).unwrap();
        let b = flow(&so3(), &s, 1.0, 4096, false).unwrap();
        let exact = [1.0f64.cos(), 1.0f64.sin(), 0.0];
        for i in 0..3 {
            assert!((a.end.x[i] - b.end.x[i]).abs() <= 1e-9);
            assert!((a.end.x[i] - exact[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn rk4_error_ratio_under_doubling() {
        let s = CotangentState::new(vec![0.3, -0.5, 0.8], vec![0.7, 0.4, -0.9]);
        let reference = flow(&so3(), &s, 1.0, 4096, false).unwrap().end.x;
        let err = |steps| {
            let e = flow(&so3(), &s, 1.0, steps, false).unwrap().end.x;
            e.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let ratio = err(16) / err(32);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_section_identity() {
        let x = vec![0.4, -0.3, 0.9];
        let om = omega_chi(&so3(), &CotangentState::zero(x.clone()), 64).unwrap();
        let expected = omega_zero_section(&so3().matrix(&x).unwrap());
        assert!(om.max_diff(&expected) < 1e-13);
    }

    #[test]
    fn averaged_form_is_nondegenerate_near_zero_section() {
        let s = CotangentState::new(vec![0.4, -0.3, 0.9], vec![0.05, -0.06, 0.03]);
        let om = omega_chi(&so3(), &s, 256).unwrap();
        let base = sigma_min(omega_can(3).matrix());
        assert!(sigma_min(om.matrix()) > 0.1 * base);
    }

    #[test]
    fn differential_of_exp_on_zero_section() {
        let x = vec![0.4, -0.3, 0.9];
        let (_, d) = exp_chi_with_jac(&so3(), &CotangentState::zero(x.clone()), 64).unwrap();
        let p = so3().matrix(&x).unwrap();
        let mut expected = Mat::zeros(3, 6);
        expected.view_mut((0, 0), (3, 3)).copy_from(&Mat::identity(3, 3));
        expected.view_mut((0, 3), (3, 3)).copy_from(&p);
        assert!(max_abs(&(d - expected)) < 1e-14);
    }

    #[test]
    fn cotangent_path_residual_is_small() {
        let s = CotangentState::new(vec![0.3, -0.5, 0.8], vec![0.7, 0.4, -0.9]);
        assert!(cotangent_path_residual(&so3(), &s, 1024).unwrap() <= 1e-8);
    }

    #[test]
    fn leaving_the_domain_is_flagged() {
        let f = so3().with_domain(DomainBox::cube(3, 1.0));
        let s = CotangentState::new(vec![0.9, 0.0, 0.9], vec![3.0, 3.0, 3.0]);
        let r = flow(&f, &s, 1.0, 64, false).unwrap();
        assert!(r.left_domain && r.t_reached < 1.0);
        assert!(matches!(exp_chi(&f, &s, 64), Err(Error::Flow(_))));
        let (radius, _) = with_radius_halving(3.0, |r| {
            exp_chi(&f, &CotangentState::new(vec![0.9, 0.0, 0.9], vec![r, r, r]), 64)
        })
        .unwrap();
        assert!(radius < 3.0);
    }

    #[test]
    fn bad_step_counts() {
        let s = CotangentState::zero(vec![0.0; 3]);
        assert!(flow(&so3(), &s, 1.0, 8, false).is_err());
        assert!(flow(&so3(), &s, 1.0, 33, false).is_err());
    }

    #[test]
    fn dual_pair_on_symplectic_plane() {
        let chart = Chart::parse(
            &["u", "v", "0.5*v", "0.3*u"],
            &VarNames::named(&["u", "v"]).unwrap(),
            DomainBox::cube(2, 1.0),
        )
        .unwrap();
        let r = dual_pair_check(&sympl4(), &chart, &[0.2, 0.1], &[0.05, 0.0, -0.03, 0.02], 2, 256, RANK_TOL).unwrap();
        assert!(r.orthogonality <= 1e-8);
        assert_eq!(r.triple_dim, r.expected_triple_dim);
        assert_eq!(r.s2_dim, 4 - 2);
    }
}
