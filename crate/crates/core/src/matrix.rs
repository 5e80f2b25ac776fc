//! Dense complex matrices and the linear-algebra contracts the rest of the
//! crate is built on.
//!
//! Vectorization is column-stacking throughout: entry `(i, j)` of a `d x d`
//! matrix lands at index `j * d + i`, so that `vec(A X B) = (B^T ⊗ A) vec(X)`.
//! Operator norms are largest singular values. Eigen, singular value and LU
//! factorizations are delegated to `faer`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Absolute floor below which a singular value is always treated as zero.
pub const RANK_FLOOR: f64 = 1e-12;

/// Dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    inner: Mat<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: Mat::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Mat::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            inner: Mat::from_fn(rows, cols, f),
        }
    }

    /// Builds a matrix from rows; all rows must have the same nonzero length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::Empty("matrix has no rows"));
        }
        let ncols = rows[0].len();
        if ncols == 0 {
            return Err(Error::Empty("matrix has no columns"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::ShapeMismatch {
                expected: format!("rows of length {ncols}"),
                got: format!("row of length {}", bad.len()),
            });
        }
        let m = Self::from_fn(nrows, ncols, |i, j| rows[i][j]);
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    /// Row-major real entries, mostly a convenience for fixtures and tests.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        Self::from_fn(rows, cols, |i, j| C64::new(entries[i * cols + j], 0.0))
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(nrows: usize, columns: &[Vec<C64>]) -> Self {
        Self::from_fn(nrows, columns.len(), |i, j| columns[j][i])
    }

    /// Single-entry matrix unit `E_ij` of size `n x n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.set(i, j, ONE);
        m
    }

    /// Matrix with i.i.d. standard complex Gaussian entries.
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| random_complex(rng))
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows(), self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.inner[(i, j)] = value;
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols()).map(|j| self.column(j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        (0..self.cols()).all(|j| (0..self.rows()).all(|i| self.get(i, j).is_finite()))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint().to_owned(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose().to_owned(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            inner: self.inner.conjugate().to_owned(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self.get(i, j) * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows().min(self.cols())).map(|i| self.get(i, i)).sum()
    }

    /// Hilbert-Schmidt inner product `tr(self^† other)`.
    pub fn hs_inner(&self, other: &CMatrix) -> C64 {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "hs_inner shape mismatch"
        );
        let mut acc = ZERO;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                acc += self.get(i, j).conj() * other.get(i, j);
            }
        }
        acc
    }

    /// Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.inner.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    /// Singular values in non-increasing order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        self.inner
            .singular_values()
            .map_err(|e| Error::SvdFailure(format!("{e:?}")))
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.max_abs() == 0.0 {
            return 0.0;
        }
        // SVD failure on a finite matrix is not expected at these sizes; fall
        // back to the Frobenius norm (an upper bound) rather than panic.
        self.singular_values()
            .ok()
            .and_then(|s| s.first().copied())
            .unwrap_or_else(|| self.hs_norm())
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let (ra, ca) = (self.rows(), self.cols());
        let (rb, cb) = (other.rows(), other.cols());
        Self::from_fn(ra * rb, ca * cb, |i, j| {
            self.get(i / rb, j / cb) * other.get(i % rb, j % cb)
        })
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols(), v.len(), "mat_vec shape mismatch");
        let col = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        let out = &self.inner * &col;
        (0..self.rows()).map(|i| out[(i, 0)]).collect()
    }

    /// `(self + self^†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Eigenvalues (ascending) of the Hermitian part of a square matrix.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        require_square(self)?;
        let h = self.hermitian_part();
        h.inner
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::EigenFailure(format!("{e:?}")))
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of the Hermitian part.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        require_square(self)?;
        let h = self.hermitian_part();
        let evd = h
            .inner
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
        let values = (0..h.rows()).map(|i| evd.S()[i].re).collect();
        Ok((
            values,
            Self {
                inner: evd.U().to_owned(),
            },
        ))
    }

    /// Solves `self * X = rhs` by partially pivoted LU. The caller is
    /// responsible for conditioning checks.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        require_square(self)?;
        if rhs.rows() != self.rows() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", self.rows()),
                got: rhs.shape_str(),
            });
        }
        let lu = self.inner.partial_piv_lu();
        Ok(Self {
            inner: lu.solve(&rhs.inner),
        })
    }

    /// Sub-block `rows x cols` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j))
    }
}

fn require_square(m: &CMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        })
    }
}

pub(crate) fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        self.inner += &rhs.inner;
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols(),
            rhs.rows(),
            "matrix product shape mismatch: {} * {}",
            self.shape_str(),
            rhs.shape_str()
        );
        CMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Column-stacking vectorization of a square matrix.
pub fn vec(m: &CMatrix) -> Result<Vec<C64>> {
    require_square(m)?;
    let d = m.rows();
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            out.push(m.get(i, j));
        }
    }
    Ok(out)
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64]) -> Result<CMatrix> {
    let d = v.len().isqrt();
    if d == 0 || d * d != v.len() {
        return Err(Error::NotPerfectSquare(v.len()));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| v[j * d + i]))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

pub fn op_norm(m: &CMatrix) -> f64 {
    m.op_norm()
}

/// Eigenvalues with right and left eigenvectors.
///
/// Right vectors are unit-norm columns. Left vectors are matched to right
/// vectors by eigenvalue and biorthonormalized per cluster, so that
/// `L_c^† R_c = I` on every cluster whose Gram matrix is invertible.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    pub right_vectors: CMatrix,
    pub left_vectors: CMatrix,
    /// `max_i ‖A r_i − λ_i r_i‖`.
    pub reconstruction_residual: f64,
}

/// Radius used to group eigenvalues when biorthonormalizing left vectors.
const EIG_CLUSTER_RADIUS: f64 = 1e-7;

pub fn eig(m: &CMatrix) -> Result<EigenDecomposition> {
    require_square(m)?;
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.rows();
    let (values, right) = raw_eig(m)?;
    let (adj_values, adj_vectors) = raw_eig(&m.adjoint())?;

    // Pair each eigenvalue with the nearest unused conjugate eigenvalue of A^†.
    let mut used = vec![false; n];
    let mut left = CMatrix::zeros(n, n);
    for (i, lambda) in values.iter().enumerate() {
        let mut best = None;
        let mut best_dist = f64::INFINITY;
        for (j, mu) in adj_values.iter().enumerate() {
            if used[j] {
                continue;
            }
            let dist = (mu.conj() - lambda).norm();
            if dist < best_dist {
                best_dist = dist;
                best = Some(j);
            }
        }
        let j = best.expect("eigenvalue lists have equal length");
        used[j] = true;
        for r in 0..n {
            left.set(r, i, adj_vectors.get(r, j));
        }
    }

    for cluster in cluster_indices(&values, EIG_CLUSTER_RADIUS) {
        let r_c = select_columns(&right, &cluster);
        let l_c = select_columns(&left, &cluster);
        let gram = &l_c.adjoint() * &r_c;
        let sv = gram.singular_values()?;
        let smallest = sv.last().copied().unwrap_or(0.0);
        if smallest <= RANK_FLOOR * sv[0].max(1.0) {
            continue;
        }
        // L_c <- L_c G^{-†}, hence L_c^† R_c = G^{-1} G = I.
        let inv_adj = gram.adjoint().solve(&CMatrix::identity(cluster.len()))?;
        let fixed = &l_c * &inv_adj;
        for (k, &col) in cluster.iter().enumerate() {
            for r in 0..n {
                left.set(r, col, fixed.get(r, k));
            }
        }
    }

    let residual = (0..n)
        .map(|i| {
            let r = right.column(i);
            let ar = m.mat_vec(&r);
            vec_norm(&axpy(-values[i], &r, &ar))
        })
        .fold(0.0, f64::max);

    Ok(EigenDecomposition {
        eigenvalues: values,
        right_vectors: right,
        left_vectors: left,
        reconstruction_residual: residual,
    })
}

/// Eigenvalues only.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    require_square(m)?;
    m.inner
        .eigenvalues()
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))
}

fn raw_eig(m: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let evd = m
        .inner
        .eigen()
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let n = m.rows();
    let values: Vec<C64> = (0..n).map(|i| evd.S()[i]).collect();
    let mut vectors = CMatrix {
        inner: evd.U().to_owned(),
    };
    for j in 0..n {
        let norm = vec_norm(&vectors.column(j));
        if norm > 0.0 {
            for i in 0..n {
                let v = vectors.get(i, j) / norm;
                vectors.set(i, j, v);
            }
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    Ok((values, vectors))
}

fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.rows(), cols.len(), |i, k| m.get(i, cols[k]))
}

/// Groups indices of `values` into clusters: single linkage with the given radius.
pub fn cluster_indices(values: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if label[start].is_some() {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![start];
        label[start] = Some(id);
        let mut cursor = 0;
        while cursor < members.len() {
            let current = values[members[cursor]];
            for other in 0..n {
                if label[other].is_none() && (values[other] - current).norm() <= radius {
                    label[other] = Some(id);
                    members.push(other);
                }
            }
            cursor += 1;
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

/// Orthonormal basis of the (numerical) null space of `m`: right singular
/// vectors whose singular value is at most `max(tol * σ_max, 1e-12)`.
pub fn null_space(m: &CMatrix, tol: f64) -> Result<Vec<Vec<C64>>> {
    if tol <= 0.0 {
        return Err(Error::Precondition(format!("null-space tolerance must be positive, got {tol}")));
    }
    let svd = m
        .inner
        .svd()
        .map_err(|e| Error::SvdFailure(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let k = m.rows().min(m.cols());
    let sigma_max = if k == 0 { 0.0 } else { s[0].re };
    let cut = (tol * sigma_max).max(RANK_FLOOR);
    let n = m.cols();
    let mut basis = Vec::new();
    for j in 0..n {
        let sigma = if j < k { s[j].re } else { 0.0 };
        if sigma <= cut {
            basis.push((0..n).map(|i| v[(i, j)]).collect());
        }
    }
    Ok(basis)
}

/// Orthonormal basis for the span of `vectors` (all of length `n`): left
/// singular vectors of the stacked matrix with singular value above
/// `max(tol * σ_max, 1e-12)`.
pub fn orthonormal_basis(n: usize, vectors: &[Vec<C64>], tol: f64) -> Result<Vec<Vec<C64>>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let stacked = CMatrix::from_columns(n, vectors);
    if stacked.max_abs() == 0.0 {
        return Ok(Vec::new());
    }
    let svd = stacked
        .inner
        .svd()
        .map_err(|e| Error::SvdFailure(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let u = svd.U();
    let k = n.min(vectors.len());
    let cut = (tol * s[0].re).max(RANK_FLOOR);
    Ok((0..k)
        .filter(|&j| s[j].re > cut)
        .map(|j| (0..n).map(|i| u[(i, j)]).collect())
        .collect())
}

/// Orthogonal projector onto the span of an orthonormal family.
pub fn span_projector(n: usize, orthonormal: &[Vec<C64>]) -> CMatrix {
    if orthonormal.is_empty() {
        return CMatrix::zeros(n, n);
    }
    let q = CMatrix::from_columns(n, orthonormal);
    &q * &q.adjoint()
}

/// Gap between the spans of two vector families: operator-norm distance of
/// the orthogonal projectors onto each span.
pub fn subspace_gap(n: usize, a: &[Vec<C64>], b: &[Vec<C64>], tol: f64) -> Result<f64> {
    let qa = span_projector(n, &orthonormal_basis(n, a, tol)?);
    let qb = span_projector(n, &orthonormal_basis(n, b, tol)?);
    Ok((&qa - &qb).op_norm())
}

/// Distance from `v` to the span of an orthonormal family.
pub fn distance_to_span(v: &[C64], orthonormal: &[Vec<C64>]) -> f64 {
    let mut rest = v.to_vec();
    for q in orthonormal {
        let c = vec_inner(q, &rest);
        rest = axpy(-c, q, &rest);
    }
    vec_norm(&rest)
}

/// `Σ conj(a_i) b_i`.
pub fn vec_inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `alpha * x + y`.
pub fn axpy(alpha: C64, x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

/// Unimodular complex number `e^{i theta}`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}
