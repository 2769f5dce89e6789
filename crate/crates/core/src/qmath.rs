//! Dense complex linear algebra for one- and two-qubit operators.
//!
//! Everything here is fixed-size and `Copy`: [`Mat2`] holds single-qubit
//! unitaries and density matrices, [`Mat4`] holds two-qubit joint states and
//! Bell projectors. Hermitian spectra come from a cyclic complex Jacobi
//! sweep, which is all the trace-distance computations need.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as Complex;

use crate::error::{Error, Result};

/// Entrywise tolerance for unitarity, hermiticity and density checks.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Target accuracy of the Hermitian eigensolver.
pub const EIG_TOL: f64 = 1e-12;
/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_OFF_TOL: f64 = 1e-14;
/// Largest imaginary residue tolerated when a trace overlap is read as a real number.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// Shorthand for `Complex::new`.
#[inline]
pub const fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Dense `N x N` complex matrix in row-major order.
#[derive(Clone, Copy, PartialEq)]
pub struct SquareMatrix<const N: usize> {
    entries: [[Complex; N]; N],
}

/// Single-qubit operator.
pub type Mat2 = SquareMatrix<2>;
/// Two-qubit operator, basis order |00>, |01>, |10>, |11>.
pub type Mat4 = SquareMatrix<4>;

impl<const N: usize> SquareMatrix<N> {
    pub const fn zeros() -> Self {
        Self {
            entries: [[ZERO; N]; N],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.entries[i][i] = ONE;
        }
        m
    }

    /// Builds a matrix from rows, rejecting NaN and infinite components.
    pub fn try_from_rows(rows: [[Complex; N]; N]) -> Result<Self> {
        if rows
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self { entries: rows })
    }

    /// Unchecked constructor for literals known to be finite.
    pub const fn from_rows(rows: [[Complex; N]; N]) -> Self {
        Self { entries: rows }
    }

    pub fn from_real_diagonal(diag: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i][i] = c(d, 0.0);
        }
        m
    }

    /// Outer product `|v><v|`.
    pub fn projector(v: &[Complex; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.entries[i][j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> &[[Complex; N]; N] {
        &self.entries
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: Complex) -> Self {
        let mut m = *self;
        m.entries.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> Complex {
        (0..N).map(|i| self.entries[i][i]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex {
        let mut acc = ZERO;
        for i in 0..N {
            for j in 0..N {
                acc += self.entries[i][j] * other.entries[j][i];
            }
        }
        acc
    }

    pub fn apply(&self, v: &[Complex; N]) -> [Complex; N] {
        let mut out = [ZERO; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.entries[i][j] * v[j]).sum();
        }
        out
    }

    /// `self * m * self^dagger`.
    pub fn conjugate(&self, m: &Self) -> Self {
        *self * *m * self.dagger()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn frobenius(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Entrywise `||m - m^dagger||_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    /// Entrywise `||m m^dagger - I||_max`.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.dagger()).max_abs_diff(&Self::identity())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Hermitian, unit trace, and no eigenvalue below `-tol`.
    pub fn is_density(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) || (self.trace() - ONE).norm() > tol {
            return false;
        }
        match hermitian_eigenvalues(self) {
            Ok(eigs) => eigs.iter().all(|&e| e >= -tol),
            Err(_) => false,
        }
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect > UNITARITY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(())
    }

    pub fn ensure_density(&self) -> Result<()> {
        if self.is_density(UNITARITY_TOL) {
            Ok(())
        } else {
            Err(Error::NotDensity)
        }
    }
}

impl<const N: usize> Default for SquareMatrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Index<(usize, usize)> for SquareMatrix<N> {
    type Output = Complex;

    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.entries[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for SquareMatrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.entries[i][j]
    }
}

impl<const N: usize> Add for SquareMatrix<N> {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.entries[i][j] += rhs.entries[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for SquareMatrix<N> {
    type Output = Self;

    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.entries[i][j] -= rhs.entries[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for SquareMatrix<N> {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl<const N: usize> Mul for SquareMatrix<N> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.entries[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.entries[i][j] += a * rhs.entries[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> std::iter::Sum for SquareMatrix<N> {
    fn sum<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::zeros(), |acc, m| acc + m)
    }
}

impl<const N: usize> fmt::Debug for SquareMatrix<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for row in &self.entries {
            write!(f, "  [")?;
            for (j, z) in row.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Pauli matrices and the qubit identity.
pub mod pauli {
    use super::{c, Mat2, I, ONE, ZERO};

    pub const ID: Mat2 = Mat2::from_rows([[ONE, ZERO], [ZERO, ONE]]);
    pub const X: Mat2 = Mat2::from_rows([[ZERO, ONE], [ONE, ZERO]]);
    pub const Y: Mat2 = Mat2::from_rows([[ZERO, c(0.0, -1.0)], [I, ZERO]]);
    pub const Z: Mat2 = Mat2::from_rows([[ONE, ZERO], [ZERO, c(-1.0, 0.0)]]);

    /// `[X, Y, Z]`.
    pub const XYZ: [Mat2; 3] = [X, Y, Z];
}

/// Kronecker product `a ⊗ b`; `a` acts on the first (left) qubit.
pub fn tensor(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Cyclic Jacobi: each rotation first rotates the phase of the pivot so it is
/// real, then applies the classical real plane rotation. Sweeps stop once the
/// off-diagonal Frobenius norm drops below [`JACOBI_OFF_TOL`] (relative to the
/// matrix norm when that exceeds one).
pub fn hermitian_eigenvalues<const N: usize>(m: &SquareMatrix<N>) -> Result<[f64; N]> {
    let defect = m.hermiticity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::NotHermitian { defect });
    }
    // symmetrize so rounding in the input cannot stall the sweeps
    let mut a = (*m + m.dagger()).scale_real(0.5);
    let stop = JACOBI_OFF_TOL * a.frobenius().max(1.0);

    for _ in 0..MAX_JACOBI_SWEEPS {
        if off_diagonal_norm(&a) < stop {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                jacobi_rotate(&mut a, p, q);
            }
        }
    }

    let mut eigs = [0.0; N];
    for (i, e) in eigs.iter_mut().enumerate() {
        *e = a[(i, i)].re;
    }
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}

fn off_diagonal_norm<const N: usize>(a: &SquareMatrix<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi_rotate<const N: usize>(a: &mut SquareMatrix<N>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;

    // G = diag-phase on q, then real rotation in the (p, q) plane
    let mut g = SquareMatrix::<N>::identity();
    g[(p, p)] = c(cs, 0.0);
    g[(p, q)] = c(sn, 0.0);
    g[(q, p)] = phase.conj() * -sn;
    g[(q, q)] = phase.conj() * cs;
    *a = g.dagger() * *a * g;
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
}

/// Trace distance `½ Σ |λ_i(r1 - r2)|` between two density matrices.
pub fn trace_distance<const N: usize>(r1: &SquareMatrix<N>, r2: &SquareMatrix<N>) -> Result<f64> {
    Ok(trace_norm(&(*r1 - *r2))? / 2.0)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm<const N: usize>(m: &SquareMatrix<N>) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.iter().map(|e| e.abs()).sum())
}

/// Reads a trace overlap as a real number.
///
/// # Panics
///
/// If the imaginary part exceeds [`IMAG_RESIDUE_TOL`]; for Hermitian
/// operands this can only happen through an internal error.
pub fn real_overlap(z: Complex) -> f64 {
    assert!(
        z.im.abs() < IMAG_RESIDUE_TOL,
        "trace overlap has imaginary residue {:e}",
        z.im
    );
    z.re
}
