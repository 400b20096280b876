//! Dense complex-Hermitian linear algebra shared by the beamforming solvers.
//!
//! Matrices in this crate are small (at most a few dozen rows), so every
//! routine here favours robustness over asymptotic speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Allowed asymmetry (relative to the largest entry) when accepting a matrix
/// as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Condition estimate beyond which [`solve_hermitian`] refuses to answer.
pub const MAX_CONDITION: f64 = 1e14;
/// Negative eigenvalue (relative to the trace) tolerated by
/// [`sample_complex_gaussian`] before the covariance is rejected.
pub const PSD_REJECT_TOL: f64 = 1e-8;

/// A square matrix equal to its own conjugate transpose.
///
/// Construction symmetrizes the input exactly, so downstream code can rely on
/// `a[(i, j)] == a[(j, i)].conj()` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates `m` and returns its exact Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(
                "HermitianMatrix::new",
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("HermitianMatrix::new"));
        }
        let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        let n = m.nrows();
        let mut asym = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// `(m + m^H) / 2` without any validation.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        Self(out)
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        Self(m)
    }

    /// Rank-one matrix `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        Self::from_hermitian_part(&(v * v.adjoint()))
    }

    /// Gram matrix `m^H m`.
    pub fn gram(m: &CMatrix) -> Self {
        Self::from_hermitian_part(&(m.adjoint() * m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.map(|z| z * c))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
        Self(&self.0 + other.0.map(|z| z * c))
    }

    /// `Re(x^H A x)`; the imaginary part vanishes for Hermitian `A`.
    pub fn quadratic_form(&self, x: &CVector) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            let mut col = Complex64::new(0.0, 0.0);
            for i in 0..n {
                col += x[i].conj() * self.0[(i, j)];
            }
            acc += (col * x[j]).re;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// Inverse of a positive-definite matrix, returned as Hermitian.
    pub fn inverse_pd(&self) -> Result<Self> {
        let chol = Cholesky::new(self).map_err(|e| match e {
            Error::NotPsd { .. } => Error::IllConditioned {
                condition: f64::INFINITY,
            },
            other => other,
        })?;
        let condition = chol.condition_estimate();
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        // (L L^H)^{-1} = L^{-H} L^{-1} is Hermitian by construction; symmetrizing
        // a column-wise solve instead would square the condition number in the
        // residual.
        Ok(Self::gram(&chol.lower_inverse()))
    }

    /// Real diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Unitary matrix whose `k`-th column pairs with `values[k]`.
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    /// `V diag(f(λ)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        HermitianMatrix::from_hermitian_part(&(scaled * self.vectors.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix (Householder tridiagonalization
/// followed by implicit QR).
pub fn hermitian_eig(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    a.ensure_finite("hermitian_eig")?;
    let n = a.dim();
    let eig = a.as_matrix().clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical(
            "eigendecomposition did not converge".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Frobenius-nearest positive semidefinite matrix (negative eigenvalues clipped).
pub fn psd_project(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(a)?;
    if eig.values.iter().all(|&l| l >= 0.0) {
        return Ok(a.clone());
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Lower Cholesky factor `L` with `A = L L^H` and a strictly positive real diagonal.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: CMatrix,
}

impl Cholesky {
    /// Fails with [`Error::NotPsd`] when a pivot is not strictly positive.
    pub fn new(a: &HermitianMatrix) -> Result<Self> {
        a.ensure_finite("Cholesky::new")?;
        let n = a.dim();
        let m = a.as_matrix();
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if d.is_nan() || d <= 0.0 {
                return Err(Error::NotPsd { min_eigenvalue: d });
            }
            let d = d.sqrt();
            l[(j, j)] = Complex64::new(d, 0.0);
            for i in (j + 1)..n {
                let mut z = m[(i, j)];
                for k in 0..j {
                    z -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = z / d;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    /// `(max L_ii / min L_ii)²`, a lower bound on the 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.l.nrows();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..n {
            let d = self.l[(i, i)].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if n == 0 {
            1.0
        } else {
            (hi / lo).powi(2)
        }
    }

    pub fn log_det(&self) -> f64 {
        (0..self.l.nrows())
            .map(|i| 2.0 * self.l[(i, i)].re.ln())
            .sum()
    }

    /// `L^{-1}` by forward substitution.
    pub fn lower_inverse(&self) -> CMatrix {
        let n = self.l.nrows();
        let l = &self.l;
        let mut y = CMatrix::identity(n, n);
        for c in 0..n {
            for i in c..n {
                let mut z = y[(i, c)];
                for k in c..i {
                    z -= l[(i, k)] * y[(k, c)];
                }
                y[(i, c)] = z / l[(i, i)].re;
            }
        }
        y
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.l.nrows();
        let l = &self.l;
        let mut y = b.clone();
        for i in 0..n {
            let mut z = y[i];
            for k in 0..i {
                z -= l[(i, k)] * y[k];
            }
            y[i] = z / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut z = y[i];
            for k in (i + 1)..n {
                z -= l[(k, i)].conj() * y[k];
            }
            y[i] = z / l[(i, i)].re;
        }
        y
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A` by Cholesky with one
/// step of iterative refinement.
pub fn solve_hermitian(a: &HermitianMatrix, b: &CVector) -> Result<CVector> {
    if b.len() != a.dim() {
        return Err(Error::dims("solve_hermitian", a.dim(), b.len()));
    }
    let chol = match Cholesky::new(a) {
        Ok(c) => c,
        Err(Error::NotPsd { .. }) => {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let condition = chol.condition_estimate();
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let mut x = chol.solve(b);
    let r = b - a.as_matrix() * &x;
    x += chol.solve(&r);
    Ok(x)
}

/// One draw of a standard circularly-symmetric complex Gaussian, `CN(0, 1)`.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws `r ~ CN(0, cov)` as `V diag(sqrt(λ)) z` with `z ~ CN(0, I)`.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(
    cov: &HermitianMatrix,
    rng: &mut R,
) -> Result<CVector> {
    let factor = gaussian_factor(cov)?;
    Ok(sample_with_factor(&factor, rng))
}

/// Square-root factor `V diag(sqrt(λ⁺))` for repeated sampling from one covariance.
pub fn gaussian_factor(cov: &HermitianMatrix) -> Result<CMatrix> {
    let n = cov.dim();
    let eig = hermitian_eig(cov)?;
    let trace = cov.trace().abs();
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -PSD_REJECT_TOL * trace.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let mut factor = eig.vectors.clone();
    for (k, &lam) in eig.values.iter().enumerate() {
        let s = if lam > 1e-12 * top { lam.sqrt() } else { 0.0 };
        for i in 0..n {
            factor[(i, k)] *= s;
        }
    }
    Ok(factor)
}

pub fn sample_with_factor<R: Rng + ?Sized>(factor: &CMatrix, rng: &mut R) -> CVector {
    let z = CVector::from_fn(factor.ncols(), |_, _| standard_complex_normal(rng));
    factor * z
}

/// `Re(Tr(A B))`, computed without forming the product.
pub fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::dims("trace_product", a.dim(), b.dim()));
    }
    Ok(trace_product_unchecked(a, b))
}

pub(crate) fn trace_product_unchecked(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    // Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B.
    a.0.iter()
        .zip(b.0.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// `ln det A` for Hermitian positive-definite `A`.
pub fn log_det_pd(a: &HermitianMatrix) -> Result<f64> {
    Ok(Cholesky::new(a)?.log_det())
}

/// `v^H` as a dynamically sized `1 × n` matrix.
pub fn adjoint_row(v: &CVector) -> CMatrix {
    CMatrix::from_fn(1, v.len(), |_, j| v[j].conj())
}

/// Euclidean norm squared of a complex vector.
pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
