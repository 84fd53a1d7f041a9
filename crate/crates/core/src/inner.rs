//! Inner problem: for a fixed plant, sweep the weighting break frequencies
//! `(omega_S, omega_T)` and keep the feasible design with the largest
//! bandwidth.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bandwidth, SEARCH_START};
use crate::error::{CcdError, Result};
use crate::hinf::{assemble_generalized_plant, hinf_norm, synthesize, GammaRange, SynthesisResult};
use crate::linalg::{logspace, sigma_max};
use crate::lti::{feedback_interconnect, StateSpaceModel};
use crate::scalar::Real;
use crate::weights::{build_wks, build_ws, build_wt, FilterParams};

/// Sweep settings. Frequencies in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerConfig<T> {
    pub s_max: T,
    pub s_low: T,
    pub omega_low: T,
    pub omega_s_range: (T, T),
    pub omega_t_range: (T, T),
    pub n_s: usize,
    pub n_t: usize,
    /// Points per axis of a warm-started sweep.
    pub warm_n: usize,
    pub shrink_factor: T,
    pub gamma_range: GammaRange<T>,
    pub tol_gamma: T,
    pub tol_bw: T,
    /// Upper end of the bandwidth search (rad/s).
    pub bandwidth_upper: T,
}

impl<T: Real> Default for InnerConfig<T> {
    fn default() -> Self {
        InnerConfigDoc::default().to_config().expect("defaults are valid")
    }
}

impl<T: Real> InnerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CcdError::InvalidParams(m.into()));
        if !(self.s_max > T::lit(std::f64::consts::FRAC_1_SQRT_2)) {
            return bad("S_max must exceed 1/sqrt(2)");
        }
        if !(self.s_low > T::zero() && self.omega_low > T::zero()) {
            return bad("S_low and omega_low must be positive");
        }
        for (lo, hi) in [self.omega_s_range, self.omega_t_range] {
            if !(lo > T::zero() && hi >= lo) {
                return bad("break-frequency ranges must be positive and ordered");
            }
        }
        if self.n_s == 0 || self.n_t == 0 || self.warm_n == 0 {
            return bad("grid counts must be positive");
        }
        if !(self.shrink_factor > T::one()) {
            return bad("shrink factor must exceed 1");
        }
        Ok(())
    }

    /// Log-spaced `(omega_S, omega_T)` axes: the full ranges, or a
    /// `shrink_factor` window around a warm-start point, clipped to the ranges.
    pub fn axes(&self, warm: Option<(T, T)>) -> (Vec<T>, Vec<T>) {
        match warm {
            None => (
                logspace(self.omega_s_range.0, self.omega_s_range.1, self.n_s),
                logspace(self.omega_t_range.0, self.omega_t_range.1, self.n_t),
            ),
            Some((ws, wt)) => {
                let f = self.shrink_factor;
                let window = |w: T, (lo, hi): (T, T)| {
                    let w = w.max(lo).min(hi);
                    logspace((w / f).max(lo), (w * f).min(hi), self.warm_n)
                };
                (window(ws, self.omega_s_range), window(wt, self.omega_t_range))
            }
        }
    }
}

/// JSON form of [`InnerConfig`] with frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerConfigDoc {
    pub s_max: f64,
    pub s_low: f64,
    pub f_low_hz: f64,
    pub f_s_range_hz: [f64; 2],
    pub f_t_range_hz: [f64; 2],
    pub n_s: usize,
    pub n_t: usize,
    pub warm_n: usize,
    pub shrink_factor: f64,
    pub gamma_range: [f64; 2],
    pub tol_gamma: f64,
    pub tol_bw: f64,
    pub bandwidth_upper_hz: f64,
}

impl Default for InnerConfigDoc {
    fn default() -> Self {
        Self {
            s_max: 2.0,
            s_low: 2e-2,
            f_low_hz: 1.0,
            f_s_range_hz: [1.0, 1000.0],
            f_t_range_hz: [5.0, 2000.0],
            n_s: 12,
            n_t: 12,
            warm_n: 5,
            shrink_factor: 1.5,
            gamma_range: [1e-3, 1e6],
            tol_gamma: 1e-3,
            tol_bw: 1e-6,
            bandwidth_upper_hz: 1e4,
        }
    }
}

impl InnerConfigDoc {
    pub fn to_config<T: Real>(&self) -> Result<InnerConfig<T>> {
        let w = |hz: f64| T::lit(2.0 * PI * hz);
        let cfg = InnerConfig {
            s_max: T::lit(self.s_max),
            s_low: T::lit(self.s_low),
            omega_low: w(self.f_low_hz),
            omega_s_range: (w(self.f_s_range_hz[0]), w(self.f_s_range_hz[1])),
            omega_t_range: (w(self.f_t_range_hz[0]), w(self.f_t_range_hz[1])),
            n_s: self.n_s,
            n_t: self.n_t,
            warm_n: self.warm_n,
            shrink_factor: T::lit(self.shrink_factor),
            gamma_range: GammaRange { lower: T::lit(self.gamma_range[0]), upper: T::lit(self.gamma_range[1]) },
            tol_gamma: T::lit(self.tol_gamma),
            tol_bw: T::lit(self.tol_bw),
            bandwidth_upper: w(self.bandwidth_upper_hz),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Outcome at one `(omega_S, omega_T)` grid point, in reporting units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub omega_s: f64,
    pub omega_t: f64,
    pub gamma: Option<f64>,
    pub hinf_s: Option<f64>,
    pub s_at_omega_low: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub feasible: bool,
    pub note: String,
}

impl SweepRecord {
    fn failed(omega_s: f64, omega_t: f64, note: String) -> Self {
        Self {
            omega_s,
            omega_t,
            gamma: None,
            hinf_s: None,
            s_at_omega_low: None,
            bandwidth_hz: None,
            feasible: false,
            note,
        }
    }
}

pub const SWEEP_CSV_HEADER: &str = "omega_s_hz,omega_t_hz,gamma,hinf_S,S_at_omega_low,bandwidth_hz,feasible,note";

/// Write sweep diagnostics as CSV, frequencies in Hz.
pub fn write_sweep_csv<W: Write>(mut out: W, records: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let hz = |w: f64| w / (2.0 * PI);
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},\"{}\"",
            hz(r.omega_s),
            hz(r.omega_t),
            opt(r.gamma),
            opt(r.hinf_s),
            opt(r.s_at_omega_low),
            opt(r.bandwidth_hz),
            r.feasible,
            r.note.replace('"', "\"\"")
        )?;
    }
    Ok(())
}

/// Full design at a single grid point.
#[derive(Debug, Clone)]
pub struct PointDesign<T: Real> {
    pub params: FilterParams<T>,
    pub synthesis: SynthesisResult<T>,
    pub hinf_s: T,
    pub s_at_low: T,
    pub omega_b: Option<T>,
}

impl<T: Real> PointDesign<T> {
    pub fn feasible(&self, cfg: &InnerConfig<T>) -> bool {
        self.omega_b.is_some() && self.hinf_s <= cfg.s_max && self.s_at_low <= cfg.s_low
    }
}

/// Synthesize and analyse the loop at one `(omega_S, omega_T)` pair.
pub fn design_point<T: Real>(
    plant: &StateSpaceModel<T>,
    base: &FilterParams<T>,
    cfg: &InnerConfig<T>,
    omega_s: T,
    omega_t: T,
) -> Result<PointDesign<T>> {
    let params = base.with_break_frequencies(omega_s, omega_t);
    let gp = assemble_generalized_plant(plant, &build_ws(&params)?, &build_wks(&params)?, &build_wt(&params)?)?;
    let synthesis = synthesize(&gp, cfg.gamma_range, cfg.tol_gamma)?;
    let s = feedback_interconnect(plant, &synthesis.controller)?.s;
    let hinf_s = hinf_norm(&s, T::lit(1e-7))?;
    let s_at_low = sigma_max(&s.eval_freq(cfg.omega_low)?);
    let omega_b = bandwidth(&s, T::lit(SEARCH_START), cfg.bandwidth_upper, cfg.tol_bw).ok().map(|b| b.omega_b);
    Ok(PointDesign { params, synthesis, hinf_s, s_at_low, omega_b })
}

#[derive(Debug, Clone)]
pub struct InnerResult<T: Real> {
    pub theta_w_star: FilterParams<T>,
    pub controller: SynthesisResult<T>,
    pub omega_b_star: T,
    pub hinf_s: T,
    pub s_at_low: T,
    pub feasible_count: usize,
    pub records: Vec<SweepRecord>,
}

impl<T: Real> InnerResult<T> {
    pub fn omega_s(&self) -> T {
        self.theta_w_star.omega_s
    }

    pub fn omega_t(&self) -> T {
        self.theta_w_star.omega_t
    }
}

/// Bandwidth-maximizing break frequencies for a fixed plant.
///
/// With `warm = Some((omega_S, omega_T))` only a `warm_n x warm_n` window
/// spanning a factor `shrink_factor` either way is swept.
pub fn solve_inner<T: Real>(
    plant: &StateSpaceModel<T>,
    base: &FilterParams<T>,
    cfg: &InnerConfig<T>,
    warm: Option<(T, T)>,
) -> Result<InnerResult<T>> {
    cfg.validate()?;
    base.validate()?;
    let (axis_s, axis_t) = cfg.axes(warm);
    let grid: Vec<(T, T)> = axis_s.iter().flat_map(|&ws| axis_t.iter().map(move |&wt| (ws, wt))).collect();
    let designs: Vec<(T, T, Result<PointDesign<T>>)> = grid
        .par_iter()
        .map(|&(ws, wt)| (ws, wt, design_point(plant, base, cfg, ws, wt)))
        .collect();

    let mut records = Vec::with_capacity(designs.len());
    let mut best: Option<&PointDesign<T>> = None;
    let mut feasible_count = 0;
    for (ws, wt, outcome) in &designs {
        let record = match outcome {
            Err(e) => SweepRecord::failed(ws.as_f64(), wt.as_f64(), e.to_string()),
            Ok(d) => {
                let feasible = d.feasible(cfg);
                if feasible {
                    feasible_count += 1;
                    if best.is_none_or(|b| better(d, b)) {
                        best = Some(d);
                    }
                }
                SweepRecord {
                    omega_s: ws.as_f64(),
                    omega_t: wt.as_f64(),
                    gamma: Some(d.synthesis.gamma.as_f64()),
                    hinf_s: Some(d.hinf_s.as_f64()),
                    s_at_omega_low: Some(d.s_at_low.as_f64()),
                    bandwidth_hz: d.omega_b.map(|w| w.as_f64() / (2.0 * PI)),
                    feasible,
                    note: note_for(d, cfg),
                }
            }
        };
        records.push(record);
    }
    let best = match best {
        Some(b) => b.clone(),
        None => return Err(CcdError::InnerInfeasible { records }),
    };
    Ok(InnerResult {
        theta_w_star: best.params,
        omega_b_star: best.omega_b.expect("feasible designs have a bandwidth"),
        hinf_s: best.hinf_s,
        s_at_low: best.s_at_low,
        controller: best.synthesis,
        feasible_count,
        records,
    })
}

/// Larger bandwidth wins; ties go to the smaller peak sensitivity, then to
/// the lexicographically smaller `(omega_S, omega_T)`.
fn better<T: Real>(a: &PointDesign<T>, b: &PointDesign<T>) -> bool {
    let (wa, wb) = (a.omega_b.expect("feasible"), b.omega_b.expect("feasible"));
    let order = wa
        .partial_cmp(&wb)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.hinf_s.partial_cmp(&a.hinf_s).unwrap_or(Ordering::Equal))
        .then_with(|| {
            (b.params.omega_s, b.params.omega_t)
                .partial_cmp(&(a.params.omega_s, a.params.omega_t))
                .unwrap_or(Ordering::Equal)
        });
    order == Ordering::Greater
}

fn note_for<T: Real>(d: &PointDesign<T>, cfg: &InnerConfig<T>) -> String {
    let mut notes = Vec::new();
    if d.omega_b.is_none() {
        notes.push("no bandwidth crossing".to_string());
    }
    if d.hinf_s > cfg.s_max {
        notes.push(format!("peak sensitivity {:.4} > {:.4}", d.hinf_s.as_f64(), cfg.s_max.as_f64()));
    }
    if d.s_at_low > cfg.s_low {
        notes.push(format!("low-frequency sensitivity {:.3e} > {:.3e}", d.s_at_low.as_f64(), cfg.s_low.as_f64()));
    }
    notes.join("; ")
}
