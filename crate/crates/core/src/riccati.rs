//! Stabilizing solutions of continuous-time algebraic Riccati equations
//! from the stable invariant subspace of a Hamiltonian matrix.

use nalgebra::{Complex, DMatrix};

use crate::linalg::{self, cabs, ComplexSchur};
use crate::scalar::Real;

/// Why a Hamiltonian did not yield a stabilizing Riccati solution.
#[derive(Debug, Clone, PartialEq)]
pub enum RiccatiFailure {
    /// Eigenvalues on (or numerically indistinguishable from) the imaginary axis.
    ImaginaryAxis,
    /// The stable subspace does not have half the dimension.
    Dichotomy,
    /// The stable subspace is not a graph subspace (`U1` singular).
    SingularBasis,
    Schur,
}

/// Default relative threshold separating eigenvalues from the imaginary axis.
pub const DEFAULT_AXIS_TOL: f64 = 1e-11;

/// Solve for `X` such that the columns of `[I; X]` span the stable
/// invariant subspace of the `2n x 2n` Hamiltonian `h`.
pub fn solve_hamiltonian<T: Real>(h: &DMatrix<T>, axis_tol: T) -> Result<DMatrix<T>, RiccatiFailure> {
    let n2 = h.nrows();
    let n = n2 / 2;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (hb, scale) = linalg::balance(h);
    let mut schur = ComplexSchur::new(&hb).map_err(|_| RiccatiFailure::Schur)?;
    let eig = schur.eigenvalues();
    let size = eig.iter().map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b)).max(T::one());
    let thresh = axis_tol * size;
    if eig.iter().any(|z| z.re.abs() <= thresh) {
        return Err(RiccatiFailure::ImaginaryAxis);
    }
    let k = schur.reorder(|z| z.re < T::zero());
    if k != n {
        return Err(RiccatiFailure::Dichotomy);
    }
    let q = &schur.q;
    let u1 = DMatrix::from_fn(n, n, |i, j| q[(i, j)] * Complex::new(scale[i], T::zero()));
    let u2 = DMatrix::from_fn(n, n, |i, j| q[(n + i, j)] * Complex::new(scale[n + i], T::zero()));
    // X U1 = U2  <=>  U1^T X^T = U2^T
    let xt = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or(RiccatiFailure::SingularBasis)?;
    let x = xt.transpose();
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(RiccatiFailure::SingularBasis);
    }
    let xr = x.map(|z| z.re);
    Ok(linalg::symmetrize(&xr))
}

/// `A^T X + X A - X B R^-1 B^T X + Q = 0`.
pub fn care<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<DMatrix<T>, RiccatiFailure> {
    let rinv = linalg::inverse(r).ok_or(RiccatiFailure::SingularBasis)?;
    let g = b * rinv * b.transpose();
    let h = linalg::block(&[&[a, &(-g)], &[&(-q), &(-a.transpose())]]);
    solve_hamiltonian(&h, T::lit(DEFAULT_AXIS_TOL))
}

/// Residual of the Riccati equation associated with Hamiltonian
/// `[[A, R], [Q, -A^T]]`: `A^T X + X A + X R X - Q`.
pub fn hamiltonian_residual<T: Real>(h: &DMatrix<T>, x: &DMatrix<T>) -> T {
    let n = x.nrows();
    let a = h.view((0, 0), (n, n));
    let r = h.view((0, n), (n, n));
    let q = h.view((n, 0), (n, n));
    let res = a.transpose() * x + x * a + x * r * x - q;
    res.amax()
}
