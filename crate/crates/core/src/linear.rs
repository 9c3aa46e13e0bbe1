//! Pointwise linear algebra: ranks, subspaces, skew forms and Dirac spaces.
//!
//! Conventions used everywhere in the crate:
//!
//! * A bivector is stored as its sharp matrix `P`, so `sharp(a) = P a` and the
//!   bilinear form is `pi(a, b) = <sharp(a), b> = b^T P a`.
//! * A two-form is stored as `W` with `w(u, v) = u^T W v`, and
//!   `i_v w = w(v, .)`, whose components are `W^T v = -W v`.
//! * A Dirac space on `V = R^n` is a `2n x n` orthonormal basis, tangent rows
//!   first, isotropic for `<(u, a), (v, b)> = a(v) + b(u)`.
//!
//! Covectors are identified with vectors through the Euclidean dot product,
//! so the annihilator of a subspace is its orthogonal complement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative rank tolerance.
pub const RANK_TOL: f64 = 1e-8;

/// Result of a rank computation.
#[derive(Clone, Debug)]
pub struct RankInfo {
    pub rank: usize,
    pub column_space: Subspace,
    pub null_space: Subspace,
    pub singular_values: Vec<f64>,
}

/// Numerical rank by SVD.
///
/// A singular value counts when it exceeds `tol * max(sigma_max, 1)`. The
/// floor of one keeps round-off sized matrices (entries near 1e-16) at rank
/// zero, which matters on the degenerate loci of the shipped structures.
pub fn rank_svd(m: &Mat, tol: f64) -> Result<RankInfo> {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return Err(Error::EmptyMatrix);
    }
    if cols == 0 {
        return Ok(RankInfo {
            rank: 0,
            column_space: Subspace::zero(rows),
            null_space: Subspace::zero(0),
            singular_values: vec![],
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point: vec![] });
    }
    let (u, sv, v) = full_svd(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let thresh = tol * smax.max(1.0);
    let rank = sv.iter().filter(|&&s| s > thresh).count();
    let col = u.columns(0, rank).into_owned();
    let null = v.columns(rank, cols - rank).into_owned();
    Ok(RankInfo {
        rank,
        column_space: Subspace::from_orthonormal(col),
        null_space: Subspace::from_orthonormal(null),
        singular_values: sv,
    })
}

/// Full SVD `m = U diag(s) V^T` with singular values in decreasing order.
///
/// nalgebra's bidiagonal SVD loses accuracy on some rank-deficient inputs,
/// so the decomposition is delegated to faer.
fn full_svd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let f = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = f.svd().expect("svd converges");
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let sv = (0..m.nrows().min(m.ncols())).map(|i| s[i]).collect();
    (
        Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        sv,
        Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    )
}

fn singular_values(m: &Mat) -> Vec<f64> {
    faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
        .singular_values()
        .expect("svd converges")
}

/// Moore-Penrose pseudo-inverse with the same threshold as [`rank_svd`].
pub fn pinv(m: &Mat, tol: f64) -> Mat {
    if m.is_empty() {
        return Mat::zeros(m.ncols(), m.nrows());
    }
    let (u, sv, v) = full_svd(m);
    let thresh = tol * sv[0].max(1.0);
    let mut out = Mat::zeros(m.ncols(), m.nrows());
    for (i, &s) in sv.iter().enumerate() {
        if s > thresh {
            out += v.column(i) * u.column(i).transpose() / s;
        }
    }
    out
}

/// Largest singular value, zero for empty matrices.
pub fn norm2(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// A linear subspace of `R^n` held by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    pub fn from_orthonormal(basis: Mat) -> Self {
        Subspace { basis }
    }

    pub fn zero(n: usize) -> Self {
        Subspace {
            basis: Mat::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Subspace {
            basis: Mat::identity(n, n),
        }
    }

    /// Column space of a spanning set.
    pub fn span(m: &Mat, tol: f64) -> Self {
        if m.ncols() == 0 || m.nrows() == 0 {
            return Subspace::zero(m.nrows());
        }
        rank_svd(m, tol)
            .map(|r| r.column_space)
            .unwrap_or_else(|_| Subspace::zero(m.nrows()))
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    pub fn orthogonal_complement(&self) -> Self {
        let n = self.ambient();
        if self.dim() == 0 {
            return Subspace::full(n);
        }
        let r = rank_svd(&self.basis.transpose(), RANK_TOL).expect("nonempty");
        r.null_space
    }

    pub fn sum(&self, other: &Self, tol: f64) -> Self {
        let n = self.ambient();
        let mut m = Mat::zeros(n, self.dim() + other.dim());
        m.view_mut((0, 0), (n, self.dim())).copy_from(&self.basis);
        m.view_mut((0, self.dim()), (n, other.dim()))
            .copy_from(&other.basis);
        Subspace::span(&m, tol)
    }

    pub fn intersection(&self, other: &Self, tol: f64) -> Self {
        self.orthogonal_complement()
            .sum(&other.orthogonal_complement(), tol)
            .orthogonal_complement()
    }

    /// Largest distance of a unit basis vector of `self` from `other`.
    pub fn excess_over(&self, other: &Self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let resid = &self.basis - other.projector() * &self.basis;
        norm2(&resid)
    }

    pub fn contains_vector(&self, v: &Vector) -> f64 {
        let r = v - self.projector() * v;
        r.norm()
    }

    /// Sine of the largest principal angle; 1 when dimensions differ.
    pub fn max_angle_sin(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() || self.ambient() != other.ambient() {
            return 1.0;
        }
        self.excess_over(other).max(other.excess_over(self)).min(1.0)
    }

    /// Largest principal angle in radians.
    pub fn max_angle(&self, other: &Self) -> f64 {
        self.max_angle_sin(other).asin()
    }

    /// Orthogonal complement of `self` inside `outer`.
    pub fn complement_within(&self, outer: &Self, tol: f64) -> Self {
        let p = outer.basis() - self.projector() * outer.basis();
        Subspace::span(&p, tol)
    }
}

/// Annihilator of a subspace, as a subspace of covectors.
pub fn annihilator(s: &Subspace) -> Subspace {
    s.orthogonal_complement()
}

/// Antisymmetric matrix with exact antisymmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewForm {
    m: Mat,
}

impl SkewForm {
    pub fn zeros(n: usize) -> Self {
        SkewForm { m: Mat::zeros(n, n) }
    }

    /// Built from the strictly lower triangle of `m`.
    pub fn from_lower(m: &Mat) -> Self {
        let n = m.nrows();
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                out[(i, j)] = m[(i, j)];
                out[(j, i)] = -m[(i, j)];
            }
        }
        SkewForm { m: out }
    }

    /// Built from the strictly upper triangle of `m`.
    pub fn from_upper(m: &Mat) -> Self {
        SkewForm::from_lower(&m.transpose()).neg()
    }

    /// Antisymmetric part `(m - m^T) / 2`.
    pub fn antisymmetrize(m: &Mat) -> Self {
        SkewForm::from_lower(&((m - m.transpose()) * 0.5))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn eval(&self, a: &Vector, b: &Vector) -> f64 {
        a.dot(&(&self.m * b))
    }

    pub fn neg(&self) -> Self {
        SkewForm { m: -&self.m }
    }

    pub fn add(&self, other: &Self) -> Self {
        SkewForm {
            m: &self.m + &other.m,
        }
    }

    /// `B^T M B`: restriction of a two-form along the columns of `b`.
    pub fn pull(&self, b: &Mat) -> Self {
        SkewForm::antisymmetrize(&(b.transpose() * &self.m * b))
    }

    /// `B M B^T`: pushforward of a bivector through the linear map `b`.
    pub fn push(&self, b: &Mat) -> Self {
        SkewForm::antisymmetrize(&(b * &self.m * b.transpose()))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.m - &other.m))
    }
}

/// Bivector pairing `pi(a, b) = <sharp(a), b>`.
pub fn bivector_pair(pi: &SkewForm, a: &Vector, b: &Vector) -> f64 {
    b.dot(&(pi.matrix() * a))
}

/// A Lagrangian subspace of `V + V*`.
#[derive(Clone, Debug)]
pub struct DiracSpace {
    n: usize,
    basis: Mat,
}

/// Isotropy tolerance accepted by [`DiracSpace::new`].
pub const ISOTROPY_TOL: f64 = 1e-10;

fn pairing(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

impl DiracSpace {
    /// From a spanning set with `2n` rows; must have rank `n` and be isotropic.
    pub fn new(span: &Mat) -> Result<Self> {
        if span.nrows() % 2 != 0 {
            return Err(Error::Dimension("Dirac basis needs 2n rows".into()));
        }
        let n = span.nrows() / 2;
        let s = Subspace::span(span, RANK_TOL);
        if s.dim() != n {
            return Err(Error::NotDirac(format!("dimension {} instead of {n}", s.dim())));
        }
        let d = DiracSpace {
            n,
            basis: s.basis,
        };
        let iso = d.isotropy_residual();
        if iso > ISOTROPY_TOL {
            return Err(Error::NotDirac(format!("isotropy residual {iso:e}")));
        }
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn tangent(&self) -> Mat {
        self.basis.rows(0, self.n).into_owned()
    }

    pub fn cotangent(&self) -> Mat {
        self.basis.rows(self.n, self.n).into_owned()
    }

    pub fn isotropy_residual(&self) -> f64 {
        max_abs(&(self.basis.transpose() * pairing(self.n) * &self.basis))
    }

    pub fn as_subspace(&self) -> Subspace {
        Subspace::from_orthonormal(self.basis.clone())
    }

    /// `{(P a, a)}`.
    pub fn graph_bivector(pi: &SkewForm) -> Self {
        let n = pi.dim();
        let mut m = Mat::zeros(2 * n, n);
        m.view_mut((0, 0), (n, n)).copy_from(pi.matrix());
        m.view_mut((n, 0), (n, n)).copy_from(&Mat::identity(n, n));
        DiracSpace::new(&m).expect("bivector graph")
    }

    /// `{(v, i_v w)}`.
    pub fn graph_two_form(w: &SkewForm) -> Self {
        let n = w.dim();
        let mut m = Mat::zeros(2 * n, n);
        m.view_mut((0, 0), (n, n)).copy_from(&Mat::identity(n, n));
        m.view_mut((n, 0), (n, n)).copy_from(&w.matrix().transpose());
        DiracSpace::new(&m).expect("two-form graph")
    }

    /// Gauge transformation `(v, a) -> (v, a + i_v eta)`.
    pub fn gauge(&self, eta: &SkewForm) -> Self {
        let n = self.n;
        let t = self.tangent();
        let c = self.cotangent() + eta.matrix().transpose() * &t;
        let mut m = Mat::zeros(2 * n, n);
        m.view_mut((0, 0), (n, n)).copy_from(&t);
        m.view_mut((n, 0), (n, n)).copy_from(&c);
        DiracSpace::new(&m).expect("gauge preserves Lagrangian")
    }

    /// Backward image `{(w, A^T b) : (A w, b) in L}` under `A: R^m -> R^n`.
    pub fn pullback(&self, a: &Mat) -> Result<Pullback> {
        let n = self.n;
        if a.nrows() != n {
            return Err(Error::Dimension(format!(
                "pullback map has {} rows, Dirac space lives on R^{n}",
                a.nrows()
            )));
        }
        let m = a.ncols();
        let t = self.tangent();
        let c = self.cotangent();
        let mut stacked = Mat::zeros(n, n + m);
        stacked.view_mut((0, 0), (n, n)).copy_from(&t);
        stacked.view_mut((0, n), (n, m)).copy_from(&(-a));
        let ker = rank_svd(&stacked, RANK_TOL)?.null_space;
        let kb = ker.basis();
        let coeff = kb.rows(0, n);
        let w = kb.rows(n, m);
        let mut span = Mat::zeros(2 * m, kb.ncols());
        span.view_mut((0, 0), (m, kb.ncols())).copy_from(&w);
        span.view_mut((m, 0), (m, kb.ncols()))
            .copy_from(&(a.transpose() * &c * coeff));
        let space = DiracSpace::new(&span)?;

        let mut kmat = Mat::zeros(n + m, n);
        kmat.view_mut((0, 0), (n, n)).copy_from(&t);
        kmat.view_mut((n, 0), (m, n)).copy_from(&(a.transpose() * &c));
        let kernel_dim = rank_svd(&kmat, RANK_TOL)?.null_space.dim();
        Ok(Pullback { space, kernel_dim })
    }

    /// Pullback that rejects a kernel of unexpected dimension.
    pub fn pullback_checked(&self, a: &Mat, expected_kernel: usize) -> Result<DiracSpace> {
        let p = self.pullback(a)?;
        if p.kernel_dim != expected_kernel {
            return Err(Error::RankDefect {
                expected: expected_kernel,
                found: p.kernel_dim,
            });
        }
        Ok(p.space)
    }

    /// `L ∩ (V + 0)`.
    pub fn tangent_part(&self) -> Subspace {
        let ker = rank_svd(&self.cotangent(), RANK_TOL).expect("nonempty").null_space;
        Subspace::span(&(self.tangent() * ker.basis()), RANK_TOL)
    }

    /// `L ∩ (0 + V*)`.
    pub fn cotangent_part(&self) -> Subspace {
        let ker = rank_svd(&self.tangent(), RANK_TOL).expect("nonempty").null_space;
        Subspace::span(&(self.cotangent() * ker.basis()), RANK_TOL)
    }

    /// The bivector whose graph this is.
    pub fn to_bivector(&self) -> Result<SkewForm> {
        let defect = self.tangent_part().dim();
        if defect > 0 {
            return Err(Error::NotPoisson { defect });
        }
        let c = self.cotangent();
        let inv = c
            .clone()
            .try_inverse()
            .ok_or(Error::NotPoisson { defect: 1 })?;
        Ok(SkewForm::antisymmetrize(&(self.tangent() * inv)))
    }

    /// The two-form whose graph this is.
    pub fn to_two_form(&self) -> Result<SkewForm> {
        let defect = self.cotangent_part().dim();
        if defect > 0 {
            return Err(Error::Degenerate(format!(
                "Dirac space meets the cotangent part in dimension {defect}"
            )));
        }
        let inv = self
            .tangent()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("tangent block singular".into()))?;
        let wt = self.cotangent() * inv;
        Ok(SkewForm::antisymmetrize(&wt.transpose()))
    }

    /// Sine of the largest principal angle to another Dirac space.
    pub fn distance(&self, other: &Self) -> f64 {
        self.as_subspace().max_angle_sin(&other.as_subspace())
    }
}

#[derive(Clone, Debug)]
pub struct Pullback {
    pub space: DiracSpace,
    /// `dim (L ∩ (0 + ker A^T))`.
    pub kernel_dim: usize,
}

/// Lagrangian complement of `l0` inside the symplectic subspace `s`.
///
/// `omega_s` is the form in the coordinates given by `s.basis()`. The result
/// is canonical for the subspace data: the orthogonal complement of `l0` in
/// `s`, sheared along `l0` until isotropic.
pub fn lagrangian_complement(omega_s: &SkewForm, s: &Subspace, l0: &Subspace) -> Result<Subspace> {
    let two_m = s.dim();
    if omega_s.dim() != two_m || two_m % 2 != 0 {
        return Err(Error::Dimension("form and subspace disagree".into()));
    }
    let m = two_m / 2;
    if two_m == 0 {
        return Ok(Subspace::zero(s.ambient()));
    }
    let om = omega_s.matrix();
    let scale = max_abs(om).max(1.0);
    if rank_svd(om, RANK_TOL)?.rank != two_m {
        return Err(Error::Degenerate("form is degenerate on the subspace".into()));
    }
    if l0.excess_over(s) > 1e-8 {
        return Err(Error::Dimension("l0 is not inside s".into()));
    }
    let ell = s.basis().transpose() * l0.basis();
    let iso = max_abs(&(ell.transpose() * om * &ell));
    if l0.dim() != m || iso > 1e-8 * scale {
        return Err(Error::NotLagrangian { residual: iso });
    }
    let vprime = Subspace::from_orthonormal(ell.clone())
        .orthogonal_complement()
        .basis()
        .clone();
    let p = ell.transpose() * om * &vprime;
    let q = vprime.transpose() * om * &vprime;
    let pinvt = p
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("pairing between l0 and complement".into()))?;
    let c = pinvt * &q * 0.5;
    let v = vprime + &ell * c;
    Ok(Subspace::span(&(s.basis() * v), RANK_TOL))
}
