//! Mixed-sensitivity H-infinity design: generalized-plant assembly,
//! gamma-iteration synthesis and the H-infinity norm.

mod norm;
mod synthesis;

pub use norm::{grid_peak_gain, hinf_norm, hinf_norm_with_peak, NormEstimate};
pub use synthesis::{
    gamma_feasible, synthesize, synthesize_with, GammaRange, Regularization, SynthesisOptions, SynthesisResult, DEFAULT_DISTURBANCE,
};

use nalgebra::DMatrix;

use crate::error::{CcdError, Result};
use crate::linalg::block;
use crate::lti::StateSpaceModel;
use crate::scalar::Real;

/// Generalized plant with inputs `[r; u]` and outputs `[z1; z2; z3; e]`.
///
/// States are ordered `[x_G, x_WS, x_WKS, x_WT]`; `plant_order` is the
/// size of the leading `x_G` block.
#[derive(Debug, Clone)]
pub struct GeneralizedPlant<T: Real> {
    pub realization: StateSpaceModel<T>,
    pub n_exo: usize,
    pub n_ctrl: usize,
    pub n_perf: usize,
    pub n_meas: usize,
    pub plant_order: usize,
    /// Input and feedthrough columns of a disturbance entering at the
    /// plant input (the `u` path without the `W_KS` branch).
    pub disturbance_b: DMatrix<T>,
    pub disturbance_d: DMatrix<T>,
}

impl<T: Real> GeneralizedPlant<T> {
    /// `(exogenous, control, performance, measurement)` channel counts.
    pub fn partition(&self) -> (usize, usize, usize, usize) {
        (self.n_exo, self.n_ctrl, self.n_perf, self.n_meas)
    }

    /// Same generalized plant with the `x_G` block shifted left by `eps`.
    pub fn with_plant_shift(&self, eps: T) -> Self {
        let (a, b, c, d) = self.realization.clone().into_parts();
        let mut a = a;
        for i in 0..self.plant_order {
            a[(i, i)] -= eps;
        }
        Self {
            realization: StateSpaceModel::new(a, b, c, d).expect("shift keeps dimensions"),
            ..self.clone()
        }
    }

    /// Same generalized plant with an extra exogenous input `d` entering at
    /// the plant input through gain `delta`. Inputs become `[r; d; u]`.
    pub fn with_input_disturbance(&self, delta: T) -> Self {
        let (a, b, c, d) = self.realization.clone().into_parts();
        let r = self.n_exo;
        let b = block(&[&[&b.columns(0, r).into_owned(), &(&self.disturbance_b * delta), &b.columns(r, self.n_ctrl).into_owned()]]);
        let d = block(&[&[&d.columns(0, r).into_owned(), &(&self.disturbance_d * delta), &d.columns(r, self.n_ctrl).into_owned()]]);
        Self {
            realization: StateSpaceModel::new(a, b, c, d).expect("augmentation keeps dimensions"),
            n_exo: r + self.n_ctrl,
            ..self.clone()
        }
    }

    /// Transfer `r -> [z1; z2; z3]` with `e -> u` closed through `k`.
    pub fn close_loop(&self, k: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
        self.realization.lower_lft(k, self.n_meas, self.n_ctrl)
    }
}

/// Build the generalized plant for `[W_S S; W_KS KS; W_T T]`:
///
/// ```text
/// e  = r - G u
/// z1 = W_S e,  z2 = W_KS u,  z3 = W_T G u
/// ```
pub fn assemble_generalized_plant<T: Real>(
    g: &StateSpaceModel<T>,
    ws: &StateSpaceModel<T>,
    wks: &StateSpaceModel<T>,
    wt: &StateSpaceModel<T>,
) -> Result<GeneralizedPlant<T>> {
    let (p, m) = (g.n_outputs(), g.n_inputs());
    let square = |w: &StateSpaceModel<T>, k: usize| w.n_inputs() == k && w.n_outputs() == k;
    if !square(ws, p) || !square(wks, m) || !square(wt, p) {
        return Err(CcdError::Dimension(format!(
            "weights must be {p}x{p}, {m}x{m}, {p}x{p} for a {p}x{m} plant"
        )));
    }
    let (ag, bg, cg, dg) = (g.a(), g.b(), g.c(), g.d());
    let (as_, bs, cs, ds) = (ws.a(), ws.b(), ws.c(), ws.d());
    let (ak, bk, ck, dk) = (wks.a(), wks.b(), wks.c(), wks.d());
    let (at, bt, ct, dt) = (wt.a(), wt.b(), wt.c(), wt.d());
    let (ng, ns, nk, nt) = (g.order(), ws.order(), wks.order(), wt.order());
    let z = |r: usize, c: usize| DMatrix::<T>::zeros(r, c);

    let a = block(&[
        &[ag, &z(ng, ns), &z(ng, nk), &z(ng, nt)],
        &[&(-(bs * cg)), as_, &z(ns, nk), &z(ns, nt)],
        &[&z(nk, ng), &z(nk, ns), ak, &z(nk, nt)],
        &[&(bt * cg), &z(nt, ns), &z(nt, nk), at],
    ]);
    let b = block(&[
        &[&z(ng, p), bg],
        &[bs, &(-(bs * dg))],
        &[&z(nk, p), bk],
        &[&z(nt, p), &(bt * dg)],
    ]);
    let c = block(&[
        &[&(-(ds * cg)), cs, &z(p, nk), &z(p, nt)],
        &[&z(m, ng), &z(m, ns), ck, &z(m, nt)],
        &[&(dt * cg), &z(p, ns), &z(p, nk), ct],
        &[&(-cg), &z(p, ns), &z(p, nk), &z(p, nt)],
    ]);
    let d = block(&[
        &[ds, &(-(ds * dg))],
        &[&z(m, p), dk],
        &[&z(p, p), &(dt * dg)],
        &[&DMatrix::identity(p, p), &(-dg)],
    ]);
    let disturbance_b = block(&[&[bg], &[&(-(bs * dg))], &[&z(nk, m)], &[&(bt * dg)]]);
    let disturbance_d = block(&[&[&(-(ds * dg))], &[&z(m, m)], &[&(dt * dg)], &[&(-dg)]]);
    Ok(GeneralizedPlant {
        realization: StateSpaceModel::new(a, b, c, d)?,
        disturbance_b,
        disturbance_d,
        n_exo: p,
        n_ctrl: m,
        n_perf: 2 * p + m,
        n_meas: p,
        plant_order: ng,
    })
}
