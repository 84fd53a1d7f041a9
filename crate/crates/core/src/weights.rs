//! Mixed-sensitivity weighting filters.
//!
//! Each weight is a first-order biproper filter repeated along the
//! diagonal once per loop channel:
//!
//! * `W_S  = (s/M_S + w_S) / (s + w_S A_S)` bounds the sensitivity,
//! * `W_KS = c_K (s + w_K) / (M_K (s + c_K w_K))` bounds the control effort,
//! * `W_T  = (s + w_T / A_l) / (A_u s + w_T)` bounds the complementary sensitivity.

use std::f64::consts::PI;

use nalgebra::dmatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CcdError, Result};
use crate::lti::StateSpaceModel;
use crate::scalar::Real;

/// Weighting-filter parameters. Frequencies are in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams<T> {
    pub m_s: T,
    pub a_s: T,
    pub omega_s: T,
    pub m_k: T,
    pub omega_k: T,
    pub c_k: T,
    pub a_l: T,
    pub a_u: T,
    pub omega_t: T,
    pub channels: usize,
}

impl<T: Real> FilterParams<T> {
    /// Fixed weights used for the lumped and stage case studies, with the
    /// given effort bound and break frequencies (rad/s).
    pub fn with_defaults(m_k: T, omega_s: T, omega_t: T) -> Self {
        Self {
            m_s: T::lit(2.0),
            a_s: T::lit(1e-4),
            omega_s,
            m_k,
            omega_k: T::lit(2.0 * PI * 100.0),
            c_k: T::lit(1e4),
            a_l: T::one(),
            a_u: T::lit(1e-2),
            omega_t,
            channels: 1,
        }
    }

    pub fn with_break_frequencies(&self, omega_s: T, omega_t: T) -> Self {
        Self { omega_s, omega_t, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("M_S", self.m_s),
            ("A_S", self.a_s),
            ("omega_S", self.omega_s),
            ("M_K", self.m_k),
            ("omega_K", self.omega_k),
            ("c_K", self.c_k),
            ("A_l", self.a_l),
            ("A_u", self.a_u),
            ("omega_T", self.omega_t),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(CcdError::InvalidParams(format!("{name} must be positive and finite")));
            }
        }
        if !(self.m_s > T::one()) {
            return Err(CcdError::InvalidParams("M_S must exceed 1".into()));
        }
        if !(self.a_s < T::one()) {
            return Err(CcdError::InvalidParams("A_S must be below 1".into()));
        }
        if !(self.c_k > T::one()) {
            return Err(CcdError::InvalidParams("c_K must exceed 1".into()));
        }
        if !(self.a_u < T::one()) {
            return Err(CcdError::InvalidParams("A_u must be below 1".into()));
        }
        if self.channels == 0 {
            return Err(CcdError::InvalidParams("at least one channel required".into()));
        }
        Ok(())
    }
}

/// First-order biproper filter `d + r / (s + p)` with the residue split
/// evenly between B and C.
fn first_order<T: Real>(pole: T, residue: T, feedthrough: T) -> StateSpaceModel<T> {
    let mag = residue.abs().sqrt();
    let c = if residue < T::zero() { -mag } else { mag };
    StateSpaceModel::new(dmatrix![-pole], dmatrix![mag], dmatrix![c], dmatrix![feedthrough])
        .expect("scalar realization is consistent")
}

pub fn w1<T: Real>(p: &FilterParams<T>) -> StateSpaceModel<T> {
    let pole = p.omega_s * p.a_s;
    let d = T::one() / p.m_s;
    first_order(pole, p.omega_s - pole * d, d)
}

pub fn w2<T: Real>(p: &FilterParams<T>) -> StateSpaceModel<T> {
    let pole = p.c_k * p.omega_k;
    let d = p.c_k / p.m_k;
    first_order(pole, p.c_k * p.omega_k * (T::one() - p.c_k) / p.m_k, d)
}

pub fn w3<T: Real>(p: &FilterParams<T>) -> StateSpaceModel<T> {
    let pole = p.omega_t / p.a_u;
    let d = T::one() / p.a_u;
    first_order(pole, d * (p.omega_t / p.a_l - pole), d)
}

pub fn build_ws<T: Real>(p: &FilterParams<T>) -> Result<StateSpaceModel<T>> {
    p.validate()?;
    Ok(w1(p).repeat_diagonal(p.channels))
}

pub fn build_wks<T: Real>(p: &FilterParams<T>) -> Result<StateSpaceModel<T>> {
    p.validate()?;
    Ok(w2(p).repeat_diagonal(p.channels))
}

pub fn build_wt<T: Real>(p: &FilterParams<T>) -> Result<StateSpaceModel<T>> {
    p.validate()?;
    Ok(w3(p).repeat_diagonal(p.channels))
}

/// Run-config form of [`FilterParams`]: frequencies in Hz, fixed weights
/// defaulting to the lumped case-study table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParamsDoc {
    #[serde(default = "d_m_s")]
    pub m_s: f64,
    #[serde(default = "d_a_s")]
    pub a_s: f64,
    #[serde(default = "d_f_s")]
    pub f_s_hz: f64,
    pub m_k: f64,
    #[serde(default = "d_f_k")]
    pub f_k_hz: f64,
    #[serde(default = "d_c_k")]
    pub c_k: f64,
    #[serde(default = "d_a_l")]
    pub a_l: f64,
    #[serde(default = "d_a_u")]
    pub a_u: f64,
    #[serde(default = "d_f_t")]
    pub f_t_hz: f64,
    #[serde(default = "d_channels")]
    pub channels: usize,
}

fn d_m_s() -> f64 {
    2.0
}
fn d_a_s() -> f64 {
    1e-4
}
fn d_f_s() -> f64 {
    50.0
}
fn d_f_k() -> f64 {
    100.0
}
fn d_c_k() -> f64 {
    1e4
}
fn d_a_l() -> f64 {
    1.0
}
fn d_a_u() -> f64 {
    1e-2
}
fn d_f_t() -> f64 {
    500.0
}
fn d_channels() -> usize {
    1
}

impl FilterParamsDoc {
    pub fn to_params<T: Real>(&self) -> Result<FilterParams<T>> {
        let hz = |f: f64| T::lit(2.0 * PI * f);
        let p = FilterParams {
            m_s: T::lit(self.m_s),
            a_s: T::lit(self.a_s),
            omega_s: hz(self.f_s_hz),
            m_k: T::lit(self.m_k),
            omega_k: hz(self.f_k_hz),
            c_k: T::lit(self.c_k),
            a_l: T::lit(self.a_l),
            a_u: T::lit(self.a_u),
            omega_t: hz(self.f_t_hz),
            channels: self.channels,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_params<T: Real>(p: &FilterParams<T>) -> Self {
        let hz = |w: T| w.as_f64() / (2.0 * PI);
        Self {
            m_s: p.m_s.as_f64(),
            a_s: p.a_s.as_f64(),
            f_s_hz: hz(p.omega_s),
            m_k: p.m_k.as_f64(),
            f_k_hz: hz(p.omega_k),
            c_k: p.c_k.as_f64(),
            a_l: p.a_l.as_f64(),
            a_u: p.a_u.as_f64(),
            f_t_hz: hz(p.omega_t),
            channels: p.channels,
        }
    }
}
