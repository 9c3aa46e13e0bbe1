//! Bivector fields with symbolic entries.

use crate::error::{Error, Result};
use crate::expr::{Expression, VarNames};
use crate::linear::{rank_svd, Mat, SkewForm, Vector};
use crate::par::Exec;
use crate::sampling::{rng, DomainBox};

/// A bivector field on an open box of `R^n`, given by its entries `P^{ij}`, `i < j`.
#[derive(Clone, Debug)]
pub struct BivectorField {
    dim: usize,
    upper: Vec<(usize, usize, Expression)>,
    derivs: Vec<Vec<Expression>>,
    domain: DomainBox,
}

impl BivectorField {
    /// Entries are `(i, j, expr)` with zero-based `i != j`; `(j, i)` gets `-expr`.
    pub fn new(dim: usize, entries: Vec<(usize, usize, Expression)>) -> Result<Self> {
        let mut upper: Vec<(usize, usize, Expression)> = Vec::new();
        for (i, j, e) in entries {
            if i >= dim || j >= dim || i == j {
                return Err(Error::Dimension(format!(
                    "bivector entry ({}, {}) in dimension {dim}",
                    i + 1,
                    j + 1
                )));
            }
            if e.arity() != dim {
                return Err(Error::Arity {
                    expected: dim,
                    found: e.arity(),
                    context: format!("entry ({}, {})", i + 1, j + 1),
                });
            }
            let (a, b, e) = if i < j { (i, j, e) } else { (j, i, e.scale(-1.0)) };
            if upper.iter().any(|(p, q, _)| (*p, *q) == (a, b)) {
                return Err(Error::Dimension(format!(
                    "entry ({}, {}) given twice",
                    a + 1,
                    b + 1
                )));
            }
            if !e.is_zero() {
                upper.push((a, b, e));
            }
        }
        upper.sort_by_key(|(a, b, _)| (*a, *b));
        let derivs = upper
            .iter()
            .map(|(_, _, e)| (0..dim).map(|l| e.derive(l)).collect())
            .collect();
        Ok(BivectorField {
            dim,
            upper,
            derivs,
            domain: DomainBox::cube(dim, 2.0),
        })
    }

    /// Parse entries `(i, j, text)` with one-based indices.
    pub fn parse(dim: usize, entries: &[(usize, usize, &str)], vars: &VarNames) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j, text) in entries {
            if *i == 0 || *j == 0 {
                return Err(Error::Dimension("entry indices are one-based".into()));
            }
            out.push((i - 1, j - 1, Expression::parse_with(text, vars)?));
        }
        BivectorField::new(dim, out)
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        assert_eq!(domain.dim(), self.dim);
        self.domain = domain;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    /// Nonzero upper-triangular entries.
    pub fn entries(&self) -> &[(usize, usize, Expression)] {
        &self.upper
    }

    pub fn is_constant(&self) -> bool {
        self.derivs.iter().flatten().all(|e| e.is_zero())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Arity {
                expected: self.dim,
                found: x.len(),
                context: "bivector evaluation".into(),
            });
        }
        Ok(())
    }

    /// The sharp matrix at `x`.
    pub fn matrix(&self, x: &[f64]) -> Result<Mat> {
        self.check_point(x)?;
        let mut m = Mat::zeros(self.dim, self.dim);
        for (i, j, e) in &self.upper {
            let v = e.eval(x)?;
            m[(*i, *j)] = v;
            m[(*j, *i)] = -v;
        }
        Ok(m)
    }

    pub fn value(&self, x: &[f64]) -> Result<SkewForm> {
        Ok(SkewForm::from_upper(&self.matrix(x)?))
    }

    /// The matrix and its partial derivatives `d_l P` at `x`.
    pub fn jet(&self, x: &[f64]) -> Result<(Mat, Vec<Mat>)> {
        let p = self.matrix(x)?;
        let mut d = vec![Mat::zeros(self.dim, self.dim); self.dim];
        for ((i, j, _), ds) in self.upper.iter().zip(&self.derivs) {
            for (l, e) in ds.iter().enumerate() {
                if e.is_zero() {
                    continue;
                }
                let v = e.eval(x)?;
                d[l][(*i, *j)] = v;
                d[l][(*j, *i)] = -v;
            }
        }
        Ok((p, d))
    }

    pub fn sharp(&self, x: &[f64], alpha: &Vector) -> Result<Vector> {
        Ok(self.matrix(x)? * alpha)
    }

    /// Largest entry of the Jacobi tensor at `x`.
    pub fn jacobi_residual(&self, x: &[f64]) -> Result<f64> {
        let (p, d) = self.jet(x)?;
        Ok(jacobi_from_jet(&p, &d))
    }

    /// Jacobi residual at `count` seeded points of the domain box.
    pub fn certify_jacobi(&self, count: usize, seed: u64, exec: Exec) -> Result<JacobiReport> {
        let pts = self.domain.random_points(count, &mut rng(seed));
        let vals = exec.map(&pts, |x| self.jacobi_residual(x));
        let mut worst = JacobiReport {
            max_residual: 0.0,
            worst_point: pts.first().cloned().unwrap_or_default(),
            samples: count,
        };
        for (x, v) in pts.iter().zip(vals) {
            let v = v?;
            if v > worst.max_residual {
                worst.max_residual = v;
                worst.worst_point = x.clone();
            }
        }
        Ok(worst)
    }

    /// `X_f = sharp(df)` as expressions.
    pub fn hamiltonian_vf(&self, f: &Expression) -> Result<Vec<Expression>> {
        if f.arity() != self.dim {
            return Err(Error::Arity {
                expected: self.dim,
                found: f.arity(),
                context: "hamiltonian".into(),
            });
        }
        let grad: Vec<Expression> = (0..self.dim).map(|j| f.derive(j)).collect();
        let mut out = vec![Expression::constant(0.0, self.dim); self.dim];
        for (i, j, e) in &self.upper {
            out[*i] = out[*i].add(&e.mul(&grad[*j]));
            out[*j] = out[*j].sub(&e.mul(&grad[*i]));
        }
        Ok(out)
    }

    /// Dimension of the symplectic leaf through `x`.
    pub fn leaf_dim(&self, x: &[f64], tol: f64) -> Result<usize> {
        Ok(rank_svd(&self.matrix(x)?, tol)?.rank)
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct JacobiReport {
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// `max |J^{ijk}|` with `J^{ijk} = sum_l P^{lk} d_l P^{ij} + P^{li} d_l P^{jk} + P^{lj} d_l P^{ki}`.
pub fn jacobi_from_jet(p: &Mat, d: &[Mat]) -> f64 {
    let n = p.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut s = 0.0;
                for (l, dl) in d.iter().enumerate() {
                    s += p[(l, k)] * dl[(i, j)] + p[(l, i)] * dl[(j, k)] + p[(l, j)] * dl[(k, i)];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

/// Jacobi residual of a pointwise bivector, derivatives by a fourth-order stencil.
pub fn jacobi_residual_fd<F>(field: F, x: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Mat>,
{
    let p = field(x)?;
    let n = x.len();
    let mut d = Vec::with_capacity(n);
    for l in 0..n {
        let at = |s: f64| {
            let mut y = x.to_vec();
            y[l] += s * h;
            field(&y)
        };
        let dl = (at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h);
        d.push(dl);
    }
    Ok(jacobi_from_jet(&p, &d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn so3() -> BivectorField {
        BivectorField::parse(3, &[(1, 2, "z"), (2, 3, "x"), (3, 1, "y")], &VarNames::standard(3)).unwrap()
    }

    #[test]
    fn so3_sharp_of_dx() {
        let v = so3().sharp(&[0.0, 0.0, 1.0], &Vector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(v.as_slice(), &[0.0, -1.0, 0.0]);
    }

    #[test]
    fn so3_satisfies_jacobi() {
        let r = so3().certify_jacobi(1000, 0, Exec::Parallel).unwrap();
        assert!(r.max_residual <= 1e-12, "{}", r.max_residual);
    }

    // In three dimensions P^{12} = V3, P^{23} = V1, P^{31} = V2 is Poisson
    // exactly when V . curl V = 0; the oracle below evaluates that by hand.
    fn curl_oracle(v: impl Fn(f64, f64, f64) -> [f64; 3], x: [f64; 3]) -> f64 {
        let h = 1e-4;
        let d = |i: usize, j: usize| {
            let mut a = x;
            let mut b = x;
            a[j] += h;
            b[j] -= h;
            (v(a[0], a[1], a[2])[i] - v(b[0], b[1], b[2])[i]) / (2.0 * h)
        };
        let curl = [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)];
        let vv = v(x[0], x[1], x[2]);
        vv[0] * curl[0] + vv[1] * curl[1] + vv[2] * curl[2]
    }

    #[test]
    fn squaring_one_entry_stays_poisson() {
        // V = (x, y, z^2) is a gradient, so the structure is still Poisson.
        let f = BivectorField::parse(3, &[(1, 2, "z^2"), (2, 3, "x"), (3, 1, "y")], &VarNames::standard(3)).unwrap();
        let oracle = curl_oracle(|x, y, z| [x, y, z * z], [1.0, 1.0, 1.0]);
        assert!(oracle.abs() < 1e-8);
        assert!(f.jacobi_residual(&[1.0, 1.0, 1.0]).unwrap() < 1e-14);
    }

    #[test]
    fn corrupted_entry_breaks_jacobi() {
        let f = BivectorField::parse(3, &[(1, 2, "z + y"), (2, 3, "x"), (3, 1, "y")], &VarNames::standard(3)).unwrap();
        let oracle = curl_oracle(|x, y, z| [x, y, z + y], [1.0, 1.0, 1.0]).abs();
        let got = f.jacobi_residual(&[1.0, 1.0, 1.0]).unwrap();
        assert!((got - oracle).abs() < 1e-6);
        assert!(got > 0.5);
    }

    #[test]
    fn fd_jacobi_matches_symbolic() {
        let f = BivectorField::parse(3, &[(1, 2, "z + y"), (2, 3, "x*y"), (3, 1, "sin(y)")], &VarNames::standard(3)).unwrap();
        let x = [0.3, -0.7, 1.1];
        let exact = f.jacobi_residual(&x).unwrap();
        let fd = jacobi_residual_fd(|p| f.matrix(p), &x, 1e-3).unwrap();
        assert!((exact - fd).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_of_casimir_vanishes() {
        let f = so3();
        let casimir = Expression::parse("x^2 + y^2 + z^2", 3).unwrap();
        let xf = f.hamiltonian_vf(&casimir).unwrap();
        for p in [[0.3, 0.4, -1.2], [1.0, 2.0, 3.0]] {
            for c in &xf {
                assert!(c.eval(&p).unwrap().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hamiltonian_antisymmetry() {
        let f = so3();
        let a = Expression::parse("x*y", 3).unwrap();
        let b = Expression::parse("sin(z)", 3).unwrap();
        let xa = f.hamiltonian_vf(&a).unwrap();
        let xb = f.hamiltonian_vf(&b).unwrap();
        let p = [0.5, -0.2, 0.9];
        let dot = |v: &[Expression], g: &Expression| -> f64 {
            (0..3).map(|i| v[i].eval(&p).unwrap() * g.derive(i).eval(&p).unwrap()).sum()
        };
        assert!((dot(&xa, &b) + dot(&xb, &a)).abs() < 1e-14);
    }

    #[test]
    fn leaf_dimensions() {
        let f = so3();
        assert_eq!(f.leaf_dim(&[1.0, 0.0, 0.0], 1e-8).unwrap(), 2);
        assert_eq!(f.leaf_dim(&[0.0, 0.0, 0.0], 1e-8).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_entries() {
        let v = VarNames::standard(3);
        assert!(BivectorField::parse(3, &[(1, 1, "x")], &v).is_err());
        assert!(BivectorField::parse(3, &[(1, 4, "x")], &v).is_err());
        assert!(BivectorField::parse(3, &[(1, 2, "x"), (2, 1, "y")], &v).is_err());
    }
}
