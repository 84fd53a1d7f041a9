use nalgebra::{Complex, DMatrix};

use crate::error::{CcdError, Result};
use crate::linalg::{self, to_complex, CMatrix};
use crate::lti::{lift_second_order, StateSpaceModel};
use crate::scalar::Real;

/// Mechanical model `M x'' + D x' + K x = B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderPlant<T: Real> {
    pub mass: DMatrix<T>,
    pub damping: DMatrix<T>,
    pub stiffness: DMatrix<T>,
    pub input: DMatrix<T>,
    pub output: DMatrix<T>,
}

/// Partial derivatives of the mechanical matrices with respect to one parameter.
#[derive(Debug, Clone)]
pub struct SecondOrderDerivative<T: Real> {
    pub mass: DMatrix<T>,
    pub damping: DMatrix<T>,
    pub stiffness: DMatrix<T>,
}

impl<T: Real> SecondOrderPlant<T> {
    pub fn new(
        mass: DMatrix<T>,
        damping: DMatrix<T>,
        stiffness: DMatrix<T>,
        input: DMatrix<T>,
        output: DMatrix<T>,
    ) -> Result<Self> {
        let n = mass.nrows();
        let square = |m: &DMatrix<T>| m.nrows() == n && m.ncols() == n;
        if !square(&mass) || !square(&damping) || !square(&stiffness) {
            return Err(CcdError::Dimension("M, D, K must be square and equally sized".into()));
        }
        if input.nrows() != n || output.ncols() != n {
            return Err(CcdError::Dimension("B rows and C columns must equal the DOF count".into()));
        }
        Ok(Self { mass, damping, stiffness, input, output })
    }

    pub fn dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Checks M symmetric positive definite and K symmetric positive semidefinite.
    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(1e-9);
        let asym = |m: &DMatrix<T>| (m - m.transpose()).amax() > tol * m.amax().max(T::one());
        if asym(&self.mass) || asym(&self.stiffness) {
            return Err(CcdError::InvalidMatrix("M and K must be symmetric".into()));
        }
        if linalg::min_symmetric_eigenvalue(&self.mass) <= T::zero() {
            return Err(CcdError::InvalidMatrix("M must be positive definite".into()));
        }
        let kmin = linalg::min_symmetric_eigenvalue(&self.stiffness);
        if kmin < -tol * self.stiffness.amax().max(T::one()) {
            return Err(CcdError::InvalidMatrix("K must be positive semidefinite".into()));
        }
        Ok(())
    }

    pub fn state_space(&self) -> Result<StateSpaceModel<T>> {
        lift_second_order(self)
    }

    /// Dynamic stiffness `-w^2 M + j w D + K`.
    pub fn dynamic_stiffness(&self, omega: T) -> CMatrix<T> {
        let w2 = omega * omega;
        self.mass.zip_zip_map(&self.damping, &self.stiffness, |m, d, k| Complex::new(k - w2 * m, omega * d))
    }

    /// `C (-w^2 M + j w D + K)^-1 B`, evaluated without lifting.
    pub fn response(&self, omega: T) -> Result<CMatrix<T>> {
        let z = self.dynamic_stiffness(omega);
        let x = z
            .lu()
            .solve(&to_complex(&self.input))
            .ok_or(CcdError::Evaluation { omega: omega.as_f64() })?;
        Ok(to_complex(&self.output) * x)
    }

    /// `dG/dp = -C Z^-1 (-w^2 dM + j w dD + dK) Z^-1 B`.
    pub fn response_derivative(&self, omega: T, deriv: &SecondOrderDerivative<T>) -> Result<CMatrix<T>> {
        let w2 = omega * omega;
        let lu = self.dynamic_stiffness(omega).lu();
        let err = || CcdError::Evaluation { omega: omega.as_f64() };
        let x = lu.solve(&to_complex(&self.input)).ok_or_else(err)?;
        let dz = deriv
            .mass
            .zip_zip_map(&deriv.damping, &deriv.stiffness, |m, d, k| Complex::new(k - w2 * m, omega * d));
        let y = lu.solve(&(dz * x)).ok_or_else(err)?;
        Ok(-(to_complex(&self.output) * y))
    }
}

/// A family of plants indexed by a hardware parameter vector.
pub trait PlantFamily<T: Real>: Send + Sync {
    fn n_params(&self) -> usize;

    fn param_names(&self) -> Vec<String> {
        (1..=self.n_params()).map(|i| format!("theta_{i}")).collect()
    }

    fn plant(&self, theta: &[T]) -> Result<SecondOrderPlant<T>>;

    /// Analytic parameter derivatives of (M, D, K), when the family has them.
    fn derivatives(&self, _theta: &[T]) -> Option<Vec<SecondOrderDerivative<T>>> {
        None
    }

    fn state_space(&self, theta: &[T]) -> Result<StateSpaceModel<T>> {
        self.plant(theta)?.state_space()
    }

    /// Moving mass; defaults to the trace of the mass matrix.
    fn moving_mass(&self, theta: &[T]) -> Result<T> {
        Ok(self.plant(theta)?.mass.trace())
    }

    fn moving_mass_gradient(&self, theta: &[T]) -> Result<Vec<T>> {
        central_difference(theta, |th| self.moving_mass(th))
    }

    /// Frequency response of the plant at `theta`, evaluated at `omega`.
    fn response(&self, theta: &[T], omega: T) -> Result<CMatrix<T>> {
        self.plant(theta)?.response(omega)
    }

    /// `dG(jw)/d theta_i` for every parameter: analytic when available,
    /// otherwise central differences of the response.
    fn response_gradient(&self, theta: &[T], omega: T) -> Result<Vec<CMatrix<T>>> {
        if let Some(derivs) = self.derivatives(theta) {
            let plant = self.plant(theta)?;
            return derivs.iter().map(|d| plant.response_derivative(omega, d)).collect();
        }
        let mut out = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            let h = fd_step(theta[i]);
            let mut tp = theta.to_vec();
            let mut tm = theta.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let gp = self.response(&tp, omega)?;
            let gm = self.response(&tm, omega)?;
            out.push((gp - gm) / Complex::new(h + h, T::zero()));
        }
        Ok(out)
    }
}

pub(crate) fn fd_step<T: Real>(x: T) -> T {
    T::lit(1e-6) * x.abs().max(T::one())
}

pub(crate) fn central_difference<T: Real, F>(theta: &[T], f: F) -> Result<Vec<T>>
where
    F: Fn(&[T]) -> Result<T>,
{
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let h = fd_step(theta[i]);
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        tp[i] += h;
        tm[i] -= h;
        out.push((f(&tp)? - f(&tm)?) / (h + h));
    }
    Ok(out)
}
