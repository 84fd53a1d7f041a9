use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::modal::ModalModel;
use super::second_order::{PlantFamily, SecondOrderPlant};
use crate::error::{CcdError, Result};
use crate::scalar::Real;

/// Free-free lumped chain standing in for a finite-element stage model.
///
/// Node `i` weighs `base_mass[i] + mass_per_thickness[i] * theta[node_param[i]]`;
/// spring `j` (between nodes `j` and `j + 1`) has stiffness
/// `stiffness_coeff[j] * theta[spring_param[j]]^3`, the cubic law of plate
/// bending stiffness in thickness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainLayout {
    pub base_mass: Vec<f64>,
    pub mass_per_thickness: Vec<f64>,
    pub node_param: Vec<usize>,
    pub stiffness_coeff: Vec<f64>,
    pub spring_param: Vec<usize>,
    pub actuator_node: usize,
    pub sensor_node: usize,
    pub n_params: usize,
}

impl ChainLayout {
    /// Bundled five-node surrogate with two thickness parameters (mm):
    /// `theta[0]` sizes the actuated end, `theta[1]` the far body.
    pub fn surrogate_stage() -> Self {
        Self {
            base_mass: vec![0.10, 0.0, 0.0, 0.0, 0.0],
            mass_per_thickness: vec![0.030, 0.030, 0.030, 0.030, 0.030],
            node_param: vec![0, 0, 1, 1, 1],
            stiffness_coeff: vec![6.3e3, 6.3e3, 6.3e3, 6.3e3],
            spring_param: vec![0, 0, 1, 1],
            actuator_node: 0,
            sensor_node: 0,
            n_params: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.base_mass.len();
        if n < 2
            || self.mass_per_thickness.len() != n
            || self.node_param.len() != n
            || self.stiffness_coeff.len() != n - 1
            || self.spring_param.len() != n - 1
        {
            return Err(CcdError::Dimension("inconsistent chain layout".into()));
        }
        if self.actuator_node >= n || self.sensor_node >= n {
            return Err(CcdError::Dimension("actuator/sensor node out of range".into()));
        }
        if self.node_param.iter().chain(&self.spring_param).any(|&g| g >= self.n_params) {
            return Err(CcdError::Dimension("parameter index out of range".into()));
        }
        Ok(())
    }
}

/// Parametric modal plant built from a [`ChainLayout`], decomposed into
/// modes and truncated like an FE model.
#[derive(Debug, Clone)]
pub struct ChainFamily {
    pub layout: ChainLayout,
    pub n_rigid: usize,
    pub n_flex: usize,
    pub zeta: f64,
}

impl ChainFamily {
    pub fn new(layout: ChainLayout, n_rigid: usize, n_flex: usize, zeta: f64) -> Result<Self> {
        layout.validate()?;
        Ok(Self { layout, n_rigid, n_flex, zeta })
    }

    pub fn surrogate() -> Self {
        Self::new(ChainLayout::surrogate_stage(), 1, 4, 0.01).expect("bundled layout is valid")
    }

    fn check<T: Real>(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.layout.n_params {
            return Err(CcdError::Dimension(format!(
                "chain family takes {} parameters, got {}",
                self.layout.n_params,
                theta.len()
            )));
        }
        if theta.iter().any(|&t| !(t > T::zero())) {
            return Err(CcdError::InvalidParams("thickness parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn node_masses<T: Real>(&self, theta: &[T]) -> Result<Vec<T>> {
        self.check(theta)?;
        let l = &self.layout;
        Ok((0..l.base_mass.len())
            .map(|i| T::lit(l.base_mass[i]) + T::lit(l.mass_per_thickness[i]) * theta[l.node_param[i]])
            .collect())
    }

    /// Lumped FE-style matrices `(M_FE, K_FE, B_FE, C_FE)`.
    pub fn fe_matrices<T: Real>(&self, theta: &[T]) -> Result<(DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>)> {
        let masses = self.node_masses(theta)?;
        let l = &self.layout;
        let n = masses.len();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n - 1 {
            let kj = T::lit(l.stiffness_coeff[j]) * theta[l.spring_param[j]].powi(3);
            k[(j, j)] += kj;
            k[(j + 1, j + 1)] += kj;
            k[(j, j + 1)] -= kj;
            k[(j + 1, j)] -= kj;
        }
        let mut b = DMatrix::zeros(n, 1);
        b[(l.actuator_node, 0)] = T::one();
        let mut c = DMatrix::zeros(1, n);
        c[(0, l.sensor_node)] = T::one();
        Ok((DMatrix::from_diagonal(&nalgebra::DVector::from_vec(masses)), k, b, c))
    }

    pub fn modal_model<T: Real>(&self, theta: &[T]) -> Result<ModalModel<T>> {
        let (m, k, b, c) = self.fe_matrices(theta)?;
        ModalModel::from_fe_matrices(&m, &k, &b, &c)?.truncated(self.n_rigid, self.n_flex, T::lit(self.zeta))
    }

    /// Lowest flexible modal frequency (rad/s).
    pub fn first_resonance<T: Real>(&self, theta: &[T]) -> Result<T> {
        let model = self.modal_model(theta)?;
        model
            .modal_freqs
            .iter()
            .copied()
            .find(|&w| w > T::zero())
            .ok_or(CcdError::InsufficientModes { requested: 1, available: 0 })
    }
}

impl<T: Real> PlantFamily<T> for ChainFamily {
    fn n_params(&self) -> usize {
        self.layout.n_params
    }

    fn param_names(&self) -> Vec<String> {
        (1..=self.layout.n_params).map(|i| format!("t{i}_mm")).collect()
    }

    fn plant(&self, theta: &[T]) -> Result<SecondOrderPlant<T>> {
        Ok(self.modal_model(theta)?.second_order())
    }

    fn moving_mass(&self, theta: &[T]) -> Result<T> {
        Ok(self.node_masses(theta)?.into_iter().fold(T::zero(), |a, b| a + b))
    }

    fn moving_mass_gradient(&self, theta: &[T]) -> Result<Vec<T>> {
        self.check(theta)?;
        let l = &self.layout;
        let mut g = vec![T::zero(); l.n_params];
        for i in 0..l.base_mass.len() {
            g[l.node_param[i]] += T::lit(l.mass_per_thickness[i]);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogate_has_one_rigid_and_four_flexible_modes() {
        let fam = ChainFamily::surrogate();
        let (m, k, b, c) = fam.fe_matrices(&[5.0, 5.0]).unwrap();
        let full = ModalModel::from_fe_matrices(&m, &k, &b, &c).unwrap();
        assert_eq!(full.n_rigid(), 1);
        assert_eq!(full.n_flexible(), 4);
    }

    #[test]
    fn mass_gradient_matches_differences() {
        let fam = ChainFamily::surrogate();
        let theta = [4.0, 6.0];
        let g: Vec<f64> = fam.moving_mass_gradient(&theta).unwrap();
        let fd = super::super::second_order::central_difference(&theta, |t| fam.moving_mass(t)).unwrap();
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn truncated_response_tracks_full_model_below_cut() {
        let fam = ChainFamily::new(ChainLayout::surrogate_stage(), 1, 2, 0.01).unwrap();
        let theta = [5.0, 5.0];
        let (m, k, b, c) = fam.fe_matrices(&theta).unwrap();
        let full = ModalModel::from_fe_matrices(&m, &k, &b, &c).unwrap();
        let first = full.modal_freqs[1];
        let full_ss = full.truncated(1, 4, 0.01).unwrap().second_order();
        let trunc = full.truncated(1, 2, 0.01).unwrap().second_order();
        // below the first flexible mode the dropped modes only add static compliance
        for i in 1..40 {
            let w = first * 0.5 * (i as f64) / 40.0;
            let a = full_ss.response(w).unwrap()[(0, 0)];
            let t = trunc.response(w).unwrap()[(0, 0)];
            assert!((a - t).norm() <= 0.02 * a.norm(), "w={w}: {a} vs {t}");
        }
    }
}
