//! Dense complex linear algebra for the small (2–16 antenna) systems the
//! simulator handles: plane rotations, spectral norm, a non-blind cyclic
//! Jacobi eigendecomposition used as ground truth, and kernel extraction.
//!
//! Rotation convention: `R_{l,m}(θ, φ)` is the identity except
//!
//! ```text
//! R[l][l] = R[m][m] = cos θ
//! R[l][m] =  e^{-iφ} sin θ
//! R[m][l] = -e^{+iφ} sin θ
//! ```
//!
//! which is exactly unitary. A basis estimate is updated as `W ← W·R`, so the
//! Hermitian matrix seen through it transforms as `A ← R* A R`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::scalar::{wrap_pi, Real};

pub type ComplexVector<T> = Vec<Complex<T>>;

/// Maximum number of cyclic sweeps before the Jacobi routines give up.
pub const MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("matrix dimensions must be positive, got {rows}x{cols}"));
        }
        if data.len() != rows * cols {
            return invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged rows");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a real-valued matrix.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return invalid("ragged columns");
        }
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for c in columns {
                data.push(c[i]);
            }
        }
        Self::new(rows, cols, data)
    }

    /// Square diagonal matrix.
    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex::new(v, T::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn column(&self, j: usize) -> ComplexVector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex<T>]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Matrix made of the listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return invalid("cannot select zero columns");
        }
        if let Some(&j) = idx.iter().find(|&&j| j >= self.cols) {
            return invalid(format!("column {j} out of range for {} columns", self.cols));
        }
        Ok(Self::from_fn(self.rows, idx.len(), |i, k| self[(i, idx[k])]))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Result<ComplexVector<T>> {
        if x.len() != self.cols {
            return invalid(format!(
                "cannot multiply {}x{} matrix by length-{} vector",
                self.rows,
                self.cols,
                x.len()
            ));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `‖A − A*‖_max`.
    pub fn hermitian_defect(&self) -> T {
        if self.rows != self.cols {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `‖A* A − I‖_max`; zero for a matrix with orthonormal columns.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.adjoint().matmul(self).expect("shapes agree");
        g.max_abs_diff(&Self::identity(self.cols))
    }

    /// In-place `self ← self · R_{l,m}(θ, φ)`; touches columns `l` and `m` only.
    pub fn rotate_columns(&mut self, p: &RotationParams<T>) {
        let (c, s_lm, s_ml) = p.block();
        for i in 0..self.rows {
            let wl = self[(i, p.l)];
            let wm = self[(i, p.m)];
            self[(i, p.l)] = wl * c + wm * s_ml;
            self[(i, p.m)] = wl * s_lm + wm * c;
        }
    }

    /// In-place `self ← R_{l,m}(θ, φ)* · self`; touches rows `l` and `m` only.
    fn rotate_rows_adjoint(&mut self, p: &RotationParams<T>) {
        let (c, s_lm, s_ml) = p.block();
        for j in 0..self.cols {
            let al = self[(p.l, j)];
            let am = self[(p.m, j)];
            self[(p.l, j)] = al * c + am * s_ml.conj();
            self[(p.m, j)] = al * s_lm.conj() + am * c;
        }
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = &self.data[i * self.cols + j];
                write!(f, "({:?}, {:?}) ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn vec_norm_sqr<T: Real>(x: &[Complex<T>]) -> T {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vec_norm<T: Real>(x: &[Complex<T>]) -> T {
    vec_norm_sqr(x).sqrt()
}

/// `a* b`.
pub fn vec_dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Indices and angles of one plane rotation. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationParams<T> {
    pub l: usize,
    pub m: usize,
    pub theta: T,
    pub phi: T,
}

impl<T: Real> RotationParams<T> {
    /// Validates `l < m < n` and wraps the angles into `θ ∈ [-π/2, π/2]`,
    /// `φ ∈ [-π, π]`. Wrapping θ by π flips the sign of the rotation block,
    /// which leaves every spanned subspace unchanged.
    pub fn new(n: usize, l: usize, m: usize, theta: T, phi: T) -> Result<Self> {
        if l >= m || m >= n {
            return invalid(format!("rotation indices need l < m < n, got l={l}, m={m}, n={n}"));
        }
        if !theta.is_finite() || !phi.is_finite() {
            return invalid("rotation angles must be finite");
        }
        let half_pi = T::FRAC_PI_2();
        let mut theta = theta % T::PI();
        if theta > half_pi {
            theta -= T::PI();
        } else if theta < -half_pi {
            theta += T::PI();
        }
        Ok(Self {
            l,
            m,
            theta,
            phi: wrap_pi(phi),
        })
    }

    /// `(cos θ, R[l][m], R[m][l])`.
    fn block(&self) -> (Complex<T>, Complex<T>, Complex<T>) {
        let (s, c) = self.theta.sin_cos();
        let e = Complex::from_polar(T::one(), self.phi);
        (
            Complex::new(c, T::zero()),
            e.conj() * s,
            -e * s,
        )
    }
}

pub fn rotation_matrix<T: Real>(n: usize, p: &RotationParams<T>) -> Result<ComplexMatrix<T>> {
    if p.l >= p.m || p.m >= n {
        return invalid(format!(
            "rotation ({},{}) does not fit dimension {n}",
            p.l, p.m
        ));
    }
    let mut r = ComplexMatrix::identity(n);
    let (c, s_lm, s_ml) = p.block();
    r[(p.l, p.l)] = c;
    r[(p.m, p.m)] = c;
    r[(p.l, p.m)] = s_lm;
    r[(p.m, p.l)] = s_ml;
    Ok(r)
}

/// `R_{l,m}(θ, φ) e_l`: column `l` of the rotation.
pub fn rotation_column<T: Real>(n: usize, p: &RotationParams<T>) -> ComplexVector<T> {
    let (c, _, s_ml) = p.block();
    let mut v = vec![Complex::new(T::zero(), T::zero()); n];
    v[p.l] = c;
    v[p.m] = s_ml;
    v
}

/// Angles `(θ, φ)` that annihilate the `(l, m)` entry of the 2×2 Hermitian
/// block `[[a_ll, a_lm], [a_lm*, a_mm]]` under `A ← R* A R`.
///
/// `φ = π − arg(a_lm)` and `tan 2θ = 2|a_lm| / (a_ll − a_mm)` with
/// `|θ| ≤ π/4`; equal diagonals give `θ = π/4`.
pub fn jacobi_angles<T: Real>(a_ll: Complex<T>, a_mm: Complex<T>, a_lm: Complex<T>) -> Result<(T, T)> {
    let scale = T::one().max(a_ll.norm() + a_mm.norm());
    let tol = T::lit(1e-10) * scale;
    if a_ll.im.abs() > tol || a_mm.im.abs() > tol {
        return invalid("diagonal entries of a Hermitian matrix must be real");
    }
    let mag = a_lm.norm();
    if mag == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let diff = a_ll.re - a_mm.re;
    let two = T::lit(2.0);
    let theta = if diff >= T::zero() {
        (two * mag).atan2(diff) / two
    } else {
        (-(two * mag)).atan2(-diff) / two
    };
    let phi = wrap_pi(T::PI() - a_lm.arg());
    Ok((theta, phi))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix<T>,
    pub sweeps: usize,
}

impl<T: Real> HermitianEigen<T> {
    /// `V Λ V*`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let lambda = ComplexMatrix::diag(&self.values);
        self.vectors
            .matmul(&lambda)
            .and_then(|vl| vl.matmul(&self.vectors.adjoint()))
            .expect("square factors")
    }
}

/// Cyclic-by-row two-sided Jacobi. Stops once every off-diagonal magnitude
/// is below `tol` (absolute).
pub fn hermitian_eig_oracle<T: Real>(g: &ComplexMatrix<T>, tol: T) -> Result<HermitianEigen<T>> {
    hermitian_eig_limited(g, tol, MAX_SWEEPS)
}

/// [`hermitian_eig_oracle`] with an explicit sweep limit.
pub fn hermitian_eig_limited<T: Real>(
    g: &ComplexMatrix<T>,
    tol: T,
    max_sweeps: usize,
) -> Result<HermitianEigen<T>> {
    if !(tol > T::zero()) {
        return invalid("tolerance must be positive");
    }
    let herm_tol = T::lit(1e-10) * T::one().max(g.max_abs());
    if g.hermitian_defect() > herm_tol {
        return invalid("matrix is not Hermitian");
    }
    let n = g.rows();
    let mut a = g.clone();
    let mut v = ComplexMatrix::identity(n);
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_max(&a);
        if off < tol {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::NumericFailure(format!(
                "Jacobi did not converge in {max_sweeps} sweeps (off-diagonal {off})"
            )));
        }
        sweeps += 1;
        for l in 0..n {
            for m in (l + 1)..n {
                let a_lm = a[(l, m)];
                if a_lm.norm() == T::zero() {
                    continue;
                }
                let (theta, phi) = jacobi_angles(a[(l, l)], a[(m, m)], a_lm)?;
                let p = RotationParams { l, m, theta, phi };
                a.rotate_columns(&p);
                a.rotate_rows_adjoint(&p);
                a[(l, m)] = Complex::new(T::zero(), T::zero());
                a[(m, l)] = Complex::new(T::zero(), T::zero());
                a[(l, l)].im = T::zero();
                a[(m, m)].im = T::zero();
                v.rotate_columns(&p);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order)?;
    Ok(HermitianEigen { values, vectors, sweeps })
}

fn off_diagonal_max<T: Real>(a: &ComplexMatrix<T>) -> T {
    let mut worst = T::zero();
    for i in 0..a.rows() {
        for j in (i + 1)..a.cols() {
            worst = worst.max(a[(i, j)].norm());
        }
    }
    worst
}

/// One-sided (Hestenes) Jacobi: rotates the columns of `h` until they are
/// mutually orthogonal. This is the Jacobi eigendecomposition of `h* h`
/// carried out on `h` itself, so small singular values keep full relative
/// accuracy. Returns the column norms (singular values, unsorted) and the
/// accumulated right rotation `V`.
fn orthogonalize_columns<T: Real>(h: &ComplexMatrix<T>) -> Result<(Vec<T>, ComplexMatrix<T>)> {
    let n = h.cols();
    let mut u = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let eps = T::epsilon() * T::from_usize_lossy(h.rows().max(n));
    // columns that collapse onto the kernel only reach roundoff size, so
    // their overlap is judged against the whole matrix as well
    let floor = eps * h.frobenius_norm().powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for l in 0..n {
            for m in (l + 1)..n {
                let cl = u.column(l);
                let cm = u.column(m);
                let a = vec_norm_sqr(&cl);
                let d = vec_norm_sqr(&cm);
                let b = vec_dot(&cl, &cm);
                if b.norm() <= eps * (a * d).sqrt() || b.norm() <= floor {
                    continue;
                }
                rotated = true;
                let (theta, phi) =
                    jacobi_angles(Complex::new(a, T::zero()), Complex::new(d, T::zero()), b)?;
                let p = RotationParams { l, m, theta, phi };
                u.rotate_columns(&p);
                v.rotate_columns(&p);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericFailure(format!(
            "one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps"
        )));
    }
    let sigma = (0..n).map(|j| vec_norm(&u.column(j))).collect();
    Ok((sigma, v))
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    // work on the side with fewer columns
    let m = if a.cols() > a.rows() { a.adjoint() } else { a.clone() };
    match orthogonalize_columns(&m) {
        Ok((sigma, _)) => sigma.into_iter().fold(T::zero(), T::max),
        Err(_) => T::nan(),
    }
}

/// Orthonormal basis of the kernel of `h`: the right singular vectors whose
/// singular value is at most `tol · σ_max`. A zero matrix returns the identity.
pub fn null_space<T: Real>(h: &ComplexMatrix<T>, tol: T) -> Result<ComplexMatrix<T>> {
    let (sigma, v) = orthogonalize_columns(h)?;
    let smax = sigma.iter().copied().fold(T::zero(), T::max);
    let mut idx: Vec<usize> = (0..h.cols()).filter(|&j| sigma[j] <= tol * smax).collect();
    if idx.is_empty() {
        return invalid("matrix has a trivial null space");
    }
    idx.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).expect("finite singular values"));
    v.select_columns(&idx)
}

/// Matrix with i.i.d. circularly-symmetric `CN(0, 1)` entries.
pub fn random_gaussian<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(T::lit(re * s), T::lit(im * s))
    })
}

/// Haar-distributed unitary matrix: Gram–Schmidt on a Gaussian matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    let g = random_gaussian::<T, _>(n, n, rng);
    let mut cols: Vec<ComplexVector<T>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // two passes keep the basis orthonormal to working precision
        for _ in 0..2 {
            for q in &cols {
                let proj = vec_dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= *qi * proj;
                }
            }
        }
        let norm = vec_norm(&v);
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    ComplexMatrix::from_columns(&cols).expect("square")
}

/// Random Hermitian matrix `(B + B*)/2` with Gaussian `B`.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    let b = random_gaussian::<T, _>(n, n, rng);
    let bh = b.adjoint();
    let half = Complex::new(T::lit(0.5), T::zero());
    ComplexMatrix::from_fn(n, n, |i, j| (b[(i, j)] + bh[(i, j)]) * half)
}

/// Largest principal-angle sine between the column spans of two matrices with
/// orthonormal columns: `‖(I − P_b) A‖₂`. Zero when `span(a) ⊆ span(b)`.
pub fn subspace_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<T> {
    let proj = b.matmul(&b.adjoint().matmul(a)?)?;
    let resid = ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - proj[(i, j)]);
    Ok(spectral_norm(&resid))
}
