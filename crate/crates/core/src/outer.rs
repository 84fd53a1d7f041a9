//! Outer problem: projected steepest descent over plant parameters on
//! `J = w1 f(theta) + w2 omega_b*(theta)`, with the inner sweep re-solved at
//! every candidate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::dwb_dtheta;
use crate::error::{CcdError, Result};
use crate::inner::{solve_inner, InnerConfig, InnerResult};
use crate::lti::StateSpaceModel;
use crate::plants::PlantFamily;
use crate::scalar::Real;
use crate::weights::FilterParams;

/// Extra inequality constraints `lambda(theta) <= 0`.
pub type ConstraintFn<'a, T> = dyn Fn(&[T]) -> Vec<T> + Sync + 'a;

pub struct OuterConfig<'a, T> {
    pub w1: T,
    /// Negative: bandwidth is maximized while `J` is minimized.
    pub w2: T,
    pub theta_min: Vec<T>,
    pub theta_max: Vec<T>,
    pub extra_constraints: Option<Box<ConstraintFn<'a, T>>>,
    /// Initial trial step of every line search.
    pub step: T,
    pub max_iter: usize,
    pub tol_converge: T,
    pub armijo_c: T,
    pub max_backtracks: usize,
    /// Consecutive small-change steps needed to stop.
    pub patience: usize,
}

impl<T: Real> OuterConfig<'_, T> {
    pub fn new(w1: T, w2: T, theta_min: Vec<T>, theta_max: Vec<T>) -> Self {
        let doc = OuterConfigDoc::default();
        Self {
            w1,
            w2,
            theta_min,
            theta_max,
            extra_constraints: None,
            step: T::lit(doc.step),
            max_iter: doc.max_iter,
            tol_converge: T::lit(doc.tol_converge),
            armijo_c: T::lit(doc.armijo_c),
            max_backtracks: doc.max_backtracks,
            patience: doc.patience,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CcdError::InvalidParams(m.into()));
        if self.theta_min.len() != self.theta_max.len() {
            return Err(CcdError::Dimension("theta bounds differ in length".into()));
        }
        if self.theta_min.iter().zip(&self.theta_max).any(|(lo, hi)| !(lo < hi)) {
            return bad("theta_min must be below theta_max elementwise");
        }
        if self.max_iter == 0 || self.patience == 0 {
            return bad("max_iter and patience must be at least 1");
        }
        if !(self.step > T::zero() && self.tol_converge > T::zero()) {
            return bad("step and tol_converge must be positive");
        }
        if !(self.armijo_c > T::zero() && self.armijo_c < T::one()) {
            return bad("Armijo constant must lie in (0, 1)");
        }
        Ok(())
    }

    fn project(&self, theta: &[T]) -> Vec<T> {
        theta
            .iter()
            .zip(self.theta_min.iter().zip(&self.theta_max))
            .map(|(&t, (&lo, &hi))| t.max(lo).min(hi))
            .collect()
    }

    fn constraint_values(&self, theta: &[T]) -> Vec<T> {
        self.extra_constraints.as_ref().map(|c| c(theta)).unwrap_or_default()
    }
}

/// JSON form of [`OuterConfig`]; the extra constraints are API-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuterConfigDoc {
    pub w1: f64,
    pub w2: f64,
    pub theta_min: Vec<f64>,
    pub theta_max: Vec<f64>,
    pub theta0: Option<Vec<f64>>,
    pub step: f64,
    pub max_iter: usize,
    pub tol_converge: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    pub patience: usize,
}

impl Default for OuterConfigDoc {
    fn default() -> Self {
        Self {
            w1: 0.0995,
            w2: -0.9950,
            theta_min: vec![55.0, 55.0],
            theta_max: vec![70.0, 70.0],
            theta0: None,
            step: 1.0,
            max_iter: 50,
            tol_converge: 1e-4,
            armijo_c: 1e-4,
            max_backtracks: 20,
            patience: 2,
        }
    }
}

impl OuterConfigDoc {
    pub fn to_config<'a, T: Real>(&self) -> Result<OuterConfig<'a, T>> {
        let v = |x: &[f64]| x.iter().map(|&t| T::lit(t)).collect();
        let cfg = OuterConfig {
            w1: T::lit(self.w1),
            w2: T::lit(self.w2),
            theta_min: v(&self.theta_min),
            theta_max: v(&self.theta_max),
            extra_constraints: None,
            step: T::lit(self.step),
            max_iter: self.max_iter,
            tol_converge: T::lit(self.tol_converge),
            armijo_c: T::lit(self.armijo_c),
            max_backtracks: self.max_backtracks,
            patience: self.patience,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Hardware cost `f(theta)` and its gradient.
pub trait HardwareCost<T: Real> {
    fn cost(&self, theta: &[T]) -> Result<T>;
    fn gradient(&self, theta: &[T]) -> Result<Vec<T>>;
}

/// Moving mass of a plant family (kg).
pub struct MovingMass<'a, F: ?Sized>(pub &'a F);

impl<T: Real, F: PlantFamily<T> + ?Sized> HardwareCost<T> for MovingMass<'_, F> {
    fn cost(&self, theta: &[T]) -> Result<T> {
        self.0.moving_mass(theta)
    }

    fn gradient(&self, theta: &[T]) -> Result<Vec<T>> {
        self.0.moving_mass_gradient(theta)
    }
}

/// `J = w1 f + w2 omega_b*` with the bandwidth in rad/s.
pub fn evaluate_objective<T: Real>(cost: T, omega_b: T, w1: T, w2: T) -> T {
    w1 * cost + w2 * omega_b
}

/// `w1 df/dtheta + w2 d omega_b/dtheta` with the inner controller frozen.
pub fn objective_gradient<T: Real, F: PlantFamily<T> + ?Sized>(
    family: &F,
    theta: &[T],
    inner: &InnerResult<T>,
    w1: T,
    w2: T,
    df_dtheta: &[T],
) -> Result<Vec<T>> {
    let grad = dwb_dtheta(family, theta, &inner.controller.controller, inner.omega_b_star)?;
    if grad.gradient.len() != df_dtheta.len() {
        return Err(CcdError::Dimension("cost gradient length differs from the parameter count".into()));
    }
    Ok(df_dtheta.iter().zip(&grad.gradient).map(|(&df, &dw)| w1 * df + w2 * dw).collect())
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// rad/s
    pub omega_s: f64,
    /// rad/s
    pub omega_t: f64,
    /// rad/s
    pub omega_b: f64,
    pub cost: f64,
    pub j: f64,
    pub grad_norm: f64,
    /// Step length that produced this iterate (0 for the start point).
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    ZeroProjectedGradient,
    LineSearchFailed,
    /// The bandwidth gradient was undefined at the last iterate.
    FlatCrossing,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignHistory {
    pub param_names: Vec<String>,
    pub iterations: Vec<IterationRecord>,
}

impl DesignHistory {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.iterations.last()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.iterations.first().map_or(self.param_names.len(), |r| r.theta.len());
        let mut header = vec!["iteration".to_string()];
        header.extend((1..=n).map(|i| format!("theta_{i}")));
        header.extend(["omega_s_hz", "omega_t_hz", "bandwidth_hz", "cost", "J", "grad_norm", "step"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        let hz = |w: f64| w / (2.0 * std::f64::consts::PI);
        for r in &self.iterations {
            let mut row = vec![r.iteration.to_string()];
            row.extend(r.theta.iter().map(|t| t.to_string()));
            for v in [hz(r.omega_s), hz(r.omega_t), hz(r.omega_b), r.cost, r.j, r.grad_norm, r.step] {
                row.push(v.to_string());
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Distance to each constraint at the final design; negative means violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSlacks {
    /// `S_max - ||S||_inf`
    pub s_max: f64,
    /// `S_low - sigma_max(S(j omega_low))`
    pub s_low: f64,
    pub theta_lower: Vec<f64>,
    pub theta_upper: Vec<f64>,
    /// `-lambda(theta)`
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CcdOutcome<T: Real> {
    pub history: DesignHistory,
    pub inner: InnerResult<T>,
    pub theta: Vec<T>,
    pub slacks: ConstraintSlacks,
    pub stop: StopReason,
    /// Iterations at which a warm-started sweep found nothing and the full grid was used.
    pub full_grid_fallbacks: Vec<usize>,
}

struct Candidate<T: Real> {
    theta: Vec<T>,
    inner: InnerResult<T>,
    cost: T,
    j: T,
}

struct Run<'r, 'a, T: Real, F: ?Sized, C: ?Sized> {
    family: &'r F,
    cost: &'r C,
    base: &'r FilterParams<T>,
    outer: &'r OuterConfig<'a, T>,
    inner: &'r InnerConfig<T>,
    fallbacks: Vec<usize>,
}

impl<T: Real, F: PlantFamily<T> + ?Sized, C: HardwareCost<T> + ?Sized> Run<'_, '_, T, F, C> {
    fn sweep(&mut self, plant: &StateSpaceModel<T>, warm: Option<(T, T)>, iteration: usize) -> Result<InnerResult<T>> {
        match solve_inner(plant, self.base, self.inner, warm) {
            Err(CcdError::InnerInfeasible { .. }) if warm.is_some() => {
                log::info!("warm-started sweep infeasible at iteration {iteration}; using the full grid");
                let full = solve_inner(plant, self.base, self.inner, None)?;
                self.fallbacks.push(iteration);
                Ok(full)
            }
            other => other,
        }
    }

    /// `None` when the candidate violates `lambda` or the inner problem is infeasible.
    fn evaluate(&mut self, theta: Vec<T>, warm: Option<(T, T)>, iteration: usize) -> Result<Option<Candidate<T>>> {
        if self.outer.constraint_values(&theta).iter().any(|&l| l > T::zero()) {
            return Ok(None);
        }
        let plant = self.family.state_space(&theta)?;
        let inner = match self.sweep(&plant, warm, iteration) {
            Ok(r) => r,
            Err(CcdError::InnerInfeasible { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let cost = self.cost.cost(&theta)?;
        let j = evaluate_objective(cost, inner.omega_b_star, self.outer.w1, self.outer.w2);
        Ok(Some(Candidate { theta, inner, cost, j }))
    }
}

fn record<T: Real>(iteration: usize, c: &Candidate<T>, grad_norm: T, step: T) -> IterationRecord {
    IterationRecord {
        iteration,
        theta: c.theta.iter().map(|t| t.as_f64()).collect(),
        omega_s: c.inner.omega_s().as_f64(),
        omega_t: c.inner.omega_t().as_f64(),
        omega_b: c.inner.omega_b_star.as_f64(),
        cost: c.cost.as_f64(),
        j: c.j.as_f64(),
        grad_norm: grad_norm.as_f64(),
        step: step.as_f64(),
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

/// Nested co-design: projected gradient with Armijo backtracking, inner sweep
/// warm-started from the previous break frequencies.
pub fn run_ccd<T: Real, F: PlantFamily<T> + ?Sized, C: HardwareCost<T> + ?Sized>(
    family: &F,
    cost: &C,
    base: &FilterParams<T>,
    outer_cfg: &OuterConfig<'_, T>,
    inner_cfg: &InnerConfig<T>,
    theta0: &[T],
) -> Result<CcdOutcome<T>> {
    outer_cfg.validate()?;
    if theta0.len() != family.n_params() || outer_cfg.theta_min.len() != family.n_params() {
        return Err(CcdError::Dimension("theta0 and bounds must match the parameter count".into()));
    }
    if outer_cfg.project(theta0) != theta0 {
        return Err(CcdError::InvalidParams("theta0 lies outside the bounds".into()));
    }
    if outer_cfg.constraint_values(theta0).iter().any(|&l| l > T::zero()) {
        return Err(CcdError::InvalidParams("theta0 violates the extra constraints".into()));
    }
    let mut run = Run { family, cost, base, outer: outer_cfg, inner: inner_cfg, fallbacks: Vec::new() };
    let plant = family.state_space(theta0)?;
    let inner = solve_inner(&plant, base, inner_cfg, None)?;
    let c0 = cost.cost(theta0)?;
    let mut current =
        Candidate { theta: theta0.to_vec(), j: evaluate_objective(c0, inner.omega_b_star, outer_cfg.w1, outer_cfg.w2), cost: c0, inner };

    let mut history = DesignHistory { param_names: family.param_names(), iterations: Vec::new() };
    let mut pending_step = T::zero();
    let mut quiet = 0;
    let mut stop = StopReason::MaxIterations;
    for iteration in 0.. {
        let grad = match objective_gradient(
            family,
            &current.theta,
            &current.inner,
            outer_cfg.w1,
            outer_cfg.w2,
            &cost.gradient(&current.theta)?,
        ) {
            Ok(g) => Some(g),
            Err(CcdError::FlatCrossing { .. }) => None,
            Err(e) => return Err(e),
        };
        let grad_norm = grad.as_deref().map_or(T::zero(), norm);
        let rec = record(iteration, &current, grad_norm, pending_step);
        log::info!(
            "iteration {}: theta {:?}, bandwidth {:.3} Hz, J {:.6}",
            rec.iteration,
            rec.theta,
            rec.omega_b / (2.0 * std::f64::consts::PI),
            rec.j
        );
        history.iterations.push(rec);
        let Some(grad) = grad else {
            stop = StopReason::FlatCrossing;
            break;
        };
        if quiet >= outer_cfg.patience {
            stop = StopReason::Converged;
            break;
        }
        if iteration >= outer_cfg.max_iter {
            break;
        }

        let warm = Some((current.inner.omega_s(), current.inner.omega_t()));
        let mut alpha = outer_cfg.step;
        let mut accepted = None;
        let mut moved = false;
        for _ in 0..=outer_cfg.max_backtracks {
            let trial: Vec<T> = current.theta.iter().zip(&grad).map(|(&t, &g)| t - alpha * g).collect();
            let trial = outer_cfg.project(&trial);
            if trial == current.theta {
                if !moved {
                    break;
                }
                alpha = alpha / T::lit(2.0);
                continue;
            }
            moved = true;
            let predicted = grad.iter().zip(trial.iter().zip(&current.theta)).fold(T::zero(), |a, (&g, (&t1, &t0))| a + g * (t1 - t0));
            if let Some(cand) = run.evaluate(trial, warm, iteration + 1)? {
                if cand.j <= current.j + outer_cfg.armijo_c * predicted {
                    accepted = Some(cand);
                    break;
                }
            }
            alpha = alpha / T::lit(2.0);
        }
        let Some(next) = accepted else {
            stop = if moved { StopReason::LineSearchFailed } else { StopReason::ZeroProjectedGradient };
            break;
        };
        let change = (next.j - current.j).abs() / current.j.abs().max(T::machine_eps());
        quiet = if change < outer_cfg.tol_converge { quiet + 1 } else { 0 };
        current = next;
        pending_step = alpha;
    }

    let slacks = ConstraintSlacks {
        s_max: (inner_cfg.s_max - current.inner.hinf_s).as_f64(),
        s_low: (inner_cfg.s_low - current.inner.s_at_low).as_f64(),
        theta_lower: current.theta.iter().zip(&outer_cfg.theta_min).map(|(&t, &lo)| (t - lo).as_f64()).collect(),
        theta_upper: current.theta.iter().zip(&outer_cfg.theta_max).map(|(&t, &hi)| (hi - t).as_f64()).collect(),
        extra: outer_cfg.constraint_values(&current.theta).iter().map(|l| -l.as_f64()).collect(),
    };
    Ok(CcdOutcome {
        history,
        theta: current.theta,
        inner: current.inner,
        slacks,
        stop,
        full_grid_fallbacks: run.fallbacks,
    })
}
