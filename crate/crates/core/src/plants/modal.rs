use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::second_order::SecondOrderPlant;
use crate::error::{CcdError, Result};
use crate::linalg;
use crate::lti::StateSpaceModel;
use crate::scalar::Real;

/// Relative threshold below which a squared modal frequency counts as rigid.
const RIGID_TOL: f64 = 1e-8;

/// Structural dynamics in decoupled, mass-normalized modal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel<T: Real> {
    /// Undamped modal frequencies (rad/s); zero entries are rigid-body modes.
    pub modal_freqs: Vec<T>,
    pub damping_ratios: Vec<T>,
    /// Modal input matrix `Phi^T B_FE` (modes x inputs).
    pub input_shapes: DMatrix<T>,
    /// Modal output matrix `C_FE Phi` (outputs x modes).
    pub output_shapes: DMatrix<T>,
    pub kept_modes: usize,
}

/// On-disk modal model (frequencies in Hz).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalDoc {
    pub modal_freqs_hz: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub b_modal: Vec<Vec<f64>>,
    pub c_modal: Vec<Vec<f64>>,
}

impl<T: Real> ModalModel<T> {
    pub fn new(
        modal_freqs: Vec<T>,
        damping_ratios: Vec<T>,
        input_shapes: DMatrix<T>,
        output_shapes: DMatrix<T>,
    ) -> Result<Self> {
        let n = modal_freqs.len();
        if damping_ratios.len() != n || input_shapes.nrows() != n || output_shapes.ncols() != n {
            return Err(CcdError::Dimension(format!(
                "{n} modes but {} damping ratios, {} input rows, {} output columns",
                damping_ratios.len(),
                input_shapes.nrows(),
                output_shapes.ncols()
            )));
        }
        if modal_freqs.iter().any(|&w| !(w >= T::zero())) {
            return Err(CcdError::InvalidParams("modal frequencies must be nonnegative".into()));
        }
        if modal_freqs.windows(2).any(|w| w[1] < w[0]) {
            return Err(CcdError::InvalidParams("modal frequencies must be nondecreasing".into()));
        }
        if damping_ratios.iter().any(|&z| !(z >= T::zero() && z < T::one())) {
            return Err(CcdError::InvalidParams("damping ratios must lie in [0, 1)".into()));
        }
        Ok(Self { modal_freqs, damping_ratios, input_shapes, output_shapes, kept_modes: n })
    }

    /// Modal decomposition of `M x'' + K x = B u`, `y = C x` via the
    /// generalized symmetric eigenproblem `K phi = w^2 M phi`.
    pub fn from_fe_matrices(
        mass: &DMatrix<T>,
        stiffness: &DMatrix<T>,
        input: &DMatrix<T>,
        output: &DMatrix<T>,
    ) -> Result<Self> {
        let n = mass.nrows();
        if mass.ncols() != n || stiffness.shape() != (n, n) || input.nrows() != n || output.ncols() != n {
            return Err(CcdError::Dimension("FE matrices have inconsistent sizes".into()));
        }
        let tol = T::lit(1e-9);
        for (name, m) in [("M_FE", mass), ("K_FE", stiffness)] {
            if (m - m.transpose()).amax() > tol * m.amax().max(T::one()) {
                return Err(CcdError::InvalidMatrix(format!("{name} is not symmetric")));
            }
        }
        let chol = linalg::symmetrize(mass)
            .cholesky()
            .ok_or_else(|| CcdError::InvalidMatrix("M_FE is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| CcdError::InvalidMatrix("M_FE is singular".into()))?;
        let kt = &linv * linalg::symmetrize(stiffness) * linv.transpose();
        let eig = SymmetricEigen::new(linalg::symmetrize(&kt));
        let scale = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut freqs = Vec::with_capacity(n);
        let mut phi = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            let lam = eig.eigenvalues[i];
            if lam < -T::lit(RIGID_TOL).max(T::lit(1e-6)) * scale {
                return Err(CcdError::InvalidMatrix("K_FE is indefinite".into()));
            }
            let w2 = if lam <= T::lit(RIGID_TOL) * scale { T::zero() } else { lam };
            freqs.push(w2.sqrt());
            // mass-normalized shape: phi = L^-T v
            let v = eig.eigenvectors.column(i);
            let mut shape = linv.transpose() * v;
            // deterministic sign: largest-magnitude entry positive
            let imax = shape.iamax();
            if shape[imax] < T::zero() {
                shape = -shape;
            }
            phi.set_column(col, &shape);
        }
        let zeros = vec![T::zero(); n];
        Self::new(freqs, zeros, phi.transpose() * input, output * &phi)
    }

    pub fn from_doc(doc: &ModalDoc) -> Result<Self> {
        let n = doc.modal_freqs_hz.len();
        let m = doc.b_modal.first().map(|r| r.len()).unwrap_or(0);
        let p = doc.c_modal.len();
        if doc.b_modal.len() != n || doc.b_modal.iter().any(|r| r.len() != m) {
            return Err(CcdError::Dimension("b_modal must have one row per mode".into()));
        }
        if doc.c_modal.iter().any(|r| r.len() != n) {
            return Err(CcdError::Dimension("c_modal must have one column per mode".into()));
        }
        let b = DMatrix::from_fn(n, m, |i, j| T::lit(doc.b_modal[i][j]));
        let c = DMatrix::from_fn(p, n, |i, j| T::lit(doc.c_modal[i][j]));
        let freqs = doc.modal_freqs_hz.iter().map(|&f| T::lit(2.0 * PI * f)).collect();
        let zetas = doc.damping_ratios.iter().map(|&z| T::lit(z)).collect();
        Self::new(freqs, zetas, b, c)
    }

    pub fn to_doc(&self) -> ModalDoc {
        let rows = |m: &DMatrix<T>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().map(|x| x.as_f64()).collect()).collect()
        };
        ModalDoc {
            modal_freqs_hz: self.modal_freqs.iter().map(|w| w.as_f64() / (2.0 * PI)).collect(),
            damping_ratios: self.damping_ratios.iter().map(|z| z.as_f64()).collect(),
            b_modal: rows(&self.input_shapes),
            c_modal: rows(&self.output_shapes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.modal_freqs.len()
    }

    pub fn n_rigid(&self) -> usize {
        self.modal_freqs.iter().filter(|&&w| w == T::zero()).count()
    }

    pub fn n_flexible(&self) -> usize {
        self.n_modes() - self.n_rigid()
    }

    /// Keep the `n_rigid` rigid modes and the `n_flex` lowest flexible
    /// modes; flexible modes get damping ratio `zeta`, rigid ones none.
    pub fn truncated(&self, n_rigid: usize, n_flex: usize, zeta: T) -> Result<Self> {
        let rigid: Vec<usize> = (0..self.n_modes()).filter(|&i| self.modal_freqs[i] == T::zero()).collect();
        let flex: Vec<usize> = (0..self.n_modes()).filter(|&i| self.modal_freqs[i] > T::zero()).collect();
        if rigid.len() < n_rigid {
            return Err(CcdError::InsufficientModes { requested: n_rigid, available: rigid.len() });
        }
        if flex.len() < n_flex {
            return Err(CcdError::InsufficientModes { requested: n_flex, available: flex.len() });
        }
        if !(zeta >= T::zero() && zeta < T::one()) {
            return Err(CcdError::InvalidParams("damping ratio must lie in [0, 1)".into()));
        }
        let keep: Vec<usize> = rigid[..n_rigid].iter().chain(flex[..n_flex].iter()).copied().collect();
        let freqs = keep.iter().map(|&i| self.modal_freqs[i]).collect();
        let zetas = keep
            .iter()
            .map(|&i| if self.modal_freqs[i] == T::zero() { T::zero() } else { zeta })
            .collect();
        let b = DMatrix::from_fn(keep.len(), self.input_shapes.ncols(), |r, c| self.input_shapes[(keep[r], c)]);
        let c = DMatrix::from_fn(self.output_shapes.nrows(), keep.len(), |r, c| self.output_shapes[(r, keep[c])]);
        Self::new(freqs, zetas, b, c)
    }

    /// Modal-coordinate mechanical model: `M = I`, `D = diag(2 zeta w)`, `K = diag(w^2)`.
    pub fn second_order(&self) -> SecondOrderPlant<T> {
        let n = self.n_modes();
        let two = T::lit(2.0);
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                two * self.damping_ratios[i] * self.modal_freqs[i]
            } else {
                T::zero()
            }
        });
        let k = DMatrix::from_fn(n, n, |i, j| if i == j { self.modal_freqs[i] * self.modal_freqs[i] } else { T::zero() });
        SecondOrderPlant {
            mass: DMatrix::identity(n, n),
            damping: d,
            stiffness: k,
            input: self.input_shapes.clone(),
            output: self.output_shapes.clone(),
        }
    }

    pub fn state_space(&self) -> Result<StateSpaceModel<T>> {
        self.second_order().state_space()
    }
}

/// Truncate to `n_rigid + n_flex` modes, damp the flexible ones, and lift
/// to state space.
pub fn truncate_and_damp<T: Real>(
    model: &ModalModel<T>,
    n_rigid: usize,
    n_flex: usize,
    zeta: T,
) -> Result<StateSpaceModel<T>> {
    model.truncated(n_rigid, n_flex, zeta)?.state_space()
}

pub fn ingest_modal_json<T: Real>(path: &Path) -> Result<ModalModel<T>> {
    let text = std::fs::read_to_string(path)?;
    let doc: ModalDoc = serde_json::from_str(&text)?;
    ModalModel::from_doc(&doc)
}

fn load_matrix_market(path: &Path) -> Result<DMatrix<f64>> {
    let coo = nalgebra_sparse::io::load_coo_from_matrix_market_file::<f64, _>(path)
        .map_err(|e| CcdError::Parse(format!("{}: {e}", path.display())))?;
    Ok(DMatrix::from(&coo))
}

fn load_dense_json(path: &Path) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CcdError::Parse(format!("{}: ragged rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Raw FE matrices: Matrix Market `M_FE`, `K_FE`; dense JSON `B_FE`, `C_FE`.
pub fn ingest_fe_files<T: Real>(mass: &Path, stiffness: &Path, input: &Path, output: &Path) -> Result<ModalModel<T>> {
    let cast = |m: DMatrix<f64>| m.map(T::lit);
    ModalModel::from_fe_matrices(
        &cast(load_matrix_market(mass)?),
        &cast(load_matrix_market(stiffness)?),
        &cast(load_dense_json(input)?),
        &cast(load_dense_json(output)?),
    )
}
