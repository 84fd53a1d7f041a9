use nalgebra::{dmatrix, DMatrix};
use serde::{Deserialize, Serialize};

use super::second_order::{PlantFamily, SecondOrderDerivative, SecondOrderPlant};
use crate::error::{CcdError, Result};
use crate::scalar::Real;

/// Damping ratio held on the flexible mode of the two-mass benchmark.
pub const DEFAULT_ZETA: f64 = 0.01;

/// Masses of the two-mass-spring-damper benchmark (kg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoMassParams<T> {
    pub m1: T,
    pub m2: T,
}

impl<T: Real> TwoMassParams<T> {
    pub fn new(m1: T, m2: T) -> Self {
        Self { m1, m2 }
    }

    /// Spring stiffness `2 m1^4 + 2 m2^4` (N/m).
    pub fn stiffness(&self) -> T {
        let two = T::lit(2.0);
        two * self.m1.powi(4) + two * self.m2.powi(4)
    }

    pub fn effective_mass(&self) -> T {
        self.m1 * self.m2 / (self.m1 + self.m2)
    }

    /// Damper coefficient giving damping ratio `zeta` on the flexible mode.
    pub fn damper(&self, zeta: T) -> T {
        T::lit(2.0) * zeta * (self.stiffness() * self.effective_mass()).sqrt()
    }

    /// Collocated anti-resonance `sqrt(k / m2)` (rad/s).
    pub fn zero_frequency(&self) -> T {
        (self.stiffness() / self.m2).sqrt()
    }

    /// Flexible-mode frequency `sqrt(k (1/m1 + 1/m2))` (rad/s).
    pub fn flexible_frequency(&self) -> T {
        (self.stiffness() * (T::one() / self.m1 + T::one() / self.m2)).sqrt()
    }
}

fn coupling<T: Real>(x: T) -> DMatrix<T> {
    dmatrix![x, -x; -x, x]
}

/// Force on `m1`, position of `m1` measured.
pub fn two_mass_plant<T: Real>(p: TwoMassParams<T>) -> Result<SecondOrderPlant<T>> {
    two_mass_plant_with_zeta(p, T::lit(DEFAULT_ZETA))
}

pub fn two_mass_plant_with_zeta<T: Real>(p: TwoMassParams<T>, zeta: T) -> Result<SecondOrderPlant<T>> {
    if !(p.m1 > T::zero() && p.m2 > T::zero()) {
        return Err(CcdError::InvalidParams("masses must be positive".into()));
    }
    SecondOrderPlant::new(
        DMatrix::from_diagonal(&nalgebra::dvector![p.m1, p.m2]),
        coupling(p.damper(zeta)),
        coupling(p.stiffness()),
        dmatrix![T::one(); T::zero()],
        dmatrix![T::one(), T::zero()],
    )
}

/// The two-mass benchmark parameterized by `theta = [m1, m2]`.
#[derive(Debug, Clone)]
pub struct TwoMassFamily<T> {
    pub zeta: T,
}

impl<T: Real> Default for TwoMassFamily<T> {
    fn default() -> Self {
        Self { zeta: T::lit(DEFAULT_ZETA) }
    }
}

impl<T: Real> TwoMassFamily<T> {
    fn params(theta: &[T]) -> Result<TwoMassParams<T>> {
        match theta {
            [m1, m2] => Ok(TwoMassParams::new(*m1, *m2)),
            _ => Err(CcdError::Dimension(format!("two-mass family takes 2 parameters, got {}", theta.len()))),
        }
    }
}

impl<T: Real> PlantFamily<T> for TwoMassFamily<T> {
    fn n_params(&self) -> usize {
        2
    }

    fn param_names(&self) -> Vec<String> {
        vec!["m1".into(), "m2".into()]
    }

    fn plant(&self, theta: &[T]) -> Result<SecondOrderPlant<T>> {
        two_mass_plant_with_zeta(Self::params(theta)?, self.zeta)
    }

    fn derivatives(&self, theta: &[T]) -> Option<Vec<SecondOrderDerivative<T>>> {
        let p = Self::params(theta).ok()?;
        let (m1, m2) = (p.m1, p.m2);
        let k = p.stiffness();
        let meff = p.effective_mass();
        let total = m1 + m2;
        let root = (k * meff).sqrt();
        let eight = T::lit(8.0);
        let dk = [eight * m1.powi(3), eight * m2.powi(3)];
        let dmeff = [m2 * m2 / (total * total), m1 * m1 / (total * total)];
        let out = (0..2)
            .map(|i| {
                let db = self.zeta * (dk[i] * meff + k * dmeff[i]) / root;
                let mut dm = DMatrix::zeros(2, 2);
                dm[(i, i)] = T::one();
                SecondOrderDerivative { mass: dm, damping: coupling(db), stiffness: coupling(dk[i]) }
            })
            .collect();
        Some(out)
    }

    fn moving_mass(&self, theta: &[T]) -> Result<T> {
        let p = Self::params(theta)?;
        Ok(p.m1 + p.m2)
    }

    fn moving_mass_gradient(&self, theta: &[T]) -> Result<Vec<T>> {
        Self::params(theta)?;
        Ok(vec![T::one(), T::one()])
    }
}
