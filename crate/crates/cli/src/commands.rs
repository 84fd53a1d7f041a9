use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stageccd::inner::{solve_inner, write_sweep_csv, InnerConfig, InnerResult};
use stageccd::outer::{evaluate_objective, run_ccd, ConstraintSlacks, DesignHistory, MovingMass, StopReason};
use stageccd::{feedback_interconnect, CcdError, FilterParams, StateSpace};

use crate::config::{first_resonance, run_sizing, BodeDoc, Plant, RunConfig};
use crate::error::CliError;
use crate::svg::{render, Panel, Series};

fn hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Files written into one output directory, in order.
struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write_with<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        fill(&mut buf)
            .and_then(|_| std::fs::write(&path, &buf))
            .map_err(|source| CliError::Output { path: path.clone(), source })?;
        log::info!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(())
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_with(name, |b| b.write_all(text.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingSummary {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub first_resonance_hz: f64,
}

/// Contents of `summary.json`. Frequencies in Hz.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub param_names: Vec<String>,
    pub theta: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_resonance_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_s_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_t_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "hinf_S", skip_serializing_if = "Option::is_none")]
    pub hinf_s: Option<f64>,
    #[serde(rename = "S_at_omega_low", skip_serializing_if = "Option::is_none")]
    pub s_at_omega_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible_count: Option<usize>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slacks: Option<ConstraintSlacks>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_grid_fallbacks: Option<Vec<usize>>,
    /// Plant-first sizing result, when the config asks for one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizing: Option<SizingSummary>,
    /// Every file written by the run, `summary.json` last.
    pub files: Vec<String>,
}

impl Summary {
    fn fill_inner(&mut self, r: &InnerResult<f64>) {
        self.bandwidth_hz = Some(hz(r.omega_b_star));
        self.omega_s_hz = Some(hz(r.omega_s()));
        self.omega_t_hz = Some(hz(r.omega_t()));
        self.gamma = Some(r.controller.gamma);
        self.hinf_s = Some(r.hinf_s);
        self.s_at_omega_low = Some(r.s_at_low);
        self.feasible_count = Some(r.feasible_count);
    }

    fn finish(mut self, mut out: Outputs) -> Result<Self, CliError> {
        self.files = out.written.clone();
        self.files.push("summary.json".into());
        let text = serde_json::to_string_pretty(&self).map_err(CcdError::from)? + "\n";
        out.write("summary.json", &text)?;
        Ok(self)
    }
}

/// Hardware parameters for the run, plus the sizing result when configured.
/// Explicit values win: `outer.theta0` (ccd only), then `plant.theta`, then sizing.
fn resolve_theta(plant: &Plant, cfg: &RunConfig, use_theta0: bool) -> Result<(Vec<f64>, Option<SizingSummary>), CliError> {
    let Some(family) = plant.family() else {
        if cfg.sizing.is_some() {
            return Err(CliError::Config("sizing needs a parametric plant".into()));
        }
        return Ok((Vec::new(), None));
    };
    let sizing = match &cfg.sizing {
        Some(doc) => {
            let r = run_sizing(family, doc)?;
            log::info!("sizing: theta {:?}, cost {}, first resonance {} Hz", r.theta, r.mass, hz(r.first_resonance));
            Some(SizingSummary { theta: r.theta, cost: r.mass, first_resonance_hz: hz(r.first_resonance) })
        }
        None => None,
    };
    let theta0 = cfg.outer.as_ref().filter(|_| use_theta0).and_then(|o| o.theta0.clone());
    let theta = theta0
        .or_else(|| cfg.plant.theta().map(<[f64]>::to_vec))
        .or_else(|| sizing.as_ref().map(|s| s.theta.clone()))
        .ok_or_else(|| CliError::Config("no hardware parameters: give plant.theta, outer.theta0 or a sizing section".into()))?;
    if theta.len() != family.n_params() {
        return Err(CliError::Config(format!("plant takes {} parameters, config gives {}", family.n_params(), theta.len())));
    }
    Ok((theta, sizing))
}

fn write_bode(out: &mut Outputs, g: &StateSpace, doc: &BodeDoc) -> Result<(), CliError> {
    let freqs = doc.grid_hz()?;
    let mut rows = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let v = g.eval_freq(2.0 * PI * f)?;
        rows.push((f, db(stageccd::linalg::sigma_max(&v)), v[(0, 0)].arg().to_degrees()));
    }
    out.write_with("bode.csv", |b| {
        writeln!(b, "freq_hz,sigma_max_db,phase_deg")?;
        for (f, m, p) in &rows {
            writeln!(b, "{f},{m},{p}")?;
        }
        Ok(())
    })?;
    let svg = render(&[
        Panel {
            title: "Plant magnitude".into(),
            x_label: "frequency [Hz]".into(),
            y_label: "sigma_max [dB]".into(),
            log_x: true,
            series: vec![Series::new("|G|", rows.iter().map(|r| (r.0, r.1)).collect())],
            ..Default::default()
        },
        Panel {
            title: "Plant phase (first channel)".into(),
            x_label: "frequency [Hz]".into(),
            y_label: "phase [deg]".into(),
            log_x: true,
            series: vec![Series::new("arg G", rows.iter().map(|r| (r.0, r.2)).collect())],
            ..Default::default()
        },
    ]);
    out.write("bode.svg", &svg)
}

fn write_sensitivity(out: &mut Outputs, g: &StateSpace, k: &StateSpace, doc: &BodeDoc, omega_b: f64) -> Result<(), CliError> {
    let cl = feedback_interconnect(g, k)?;
    let freqs = doc.grid_hz()?;
    let mut rows = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let w = 2.0 * PI * f;
        let s = stageccd::linalg::sigma_max(&cl.s.eval_freq(w)?);
        let t = stageccd::linalg::sigma_max(&cl.t.eval_freq(w)?);
        rows.push((f, s, t));
    }
    out.write_with("sensitivity.csv", |b| {
        writeln!(b, "freq_hz,sigma_max_S,sigma_max_S_db,sigma_max_T_db")?;
        for (f, s, t) in &rows {
            writeln!(b, "{f},{s},{},{}", db(*s), db(*t))?;
        }
        Ok(())
    })?;
    let fb = hz(omega_b);
    let svg = render(&[Panel {
        title: "Closed-loop sensitivity".into(),
        x_label: "frequency [Hz]".into(),
        y_label: "sigma_max [dB]".into(),
        log_x: true,
        series: vec![
            Series::new("S", rows.iter().map(|r| (r.0, db(r.1))).collect()),
            Series::new("T", rows.iter().map(|r| (r.0, db(r.2))).collect()),
        ],
        vlines: vec![(fb, format!("bandwidth {fb:.1} Hz"))],
        hlines: vec![(db(std::f64::consts::FRAC_1_SQRT_2), "-3 dB".into())],
    }]);
    out.write("sensitivity.svg", &svg)
}

/// Inner sweep; the grid diagnostics go to `sweep.csv` whether or not a
/// feasible point exists.
fn sweep(out: &mut Outputs, g: &StateSpace, base: &FilterParams<f64>, cfg: &InnerConfig<f64>) -> Result<InnerResult<f64>, CliError> {
    match solve_inner(g, base, cfg, None) {
        Ok(r) => {
            out.write_with("sweep.csv", |b| write_sweep_csv(b, &r.records))?;
            Ok(r)
        }
        Err(e) => Err(diagnose(out, e)),
    }
}

fn diagnose(out: &mut Outputs, e: CcdError) -> CliError {
    if let CcdError::InnerInfeasible { records } = &e {
        if let Err(w) = out.write_with("sweep.csv", |b| write_sweep_csv(b, records)) {
            log::error!("{w}");
        }
    }
    CliError::Core(e)
}

/// Plant Bode plot, and with an `inner` section the bandwidth-optimal loop.
pub fn analyze(cfg: &RunConfig, out_dir: &Path) -> Result<Summary, CliError> {
    let plant = Plant::from_doc(&cfg.plant)?;
    let base = cfg.filter_params.to_params::<f64>()?;
    let inner_cfg = cfg.inner.as_ref().map(|d| d.to_config::<f64>()).transpose()?;
    let mut out = Outputs::new(out_dir)?;
    let (theta, sizing) = resolve_theta(&plant, cfg, false)?;
    let second_order = plant.second_order(&theta)?;
    let g = second_order.state_space()?;

    let mut summary = Summary {
        command: "analyze".into(),
        param_names: plant.param_names(),
        cost: plant.moving_mass(&theta)?,
        first_resonance_hz: first_resonance(&second_order)?.map(hz),
        theta,
        sizing,
        ..Default::default()
    };
    write_bode(&mut out, &g, &cfg.bode)?;
    if let Some(inner_cfg) = &inner_cfg {
        let r = sweep(&mut out, &g, &base, inner_cfg)?;
        write_sensitivity(&mut out, &g, &r.controller.controller, &cfg.bode, r.omega_b_star)?;
        summary.fill_inner(&r);
        if let (Some(outer), Some(cost)) = (&cfg.outer, summary.cost) {
            summary.j = Some(evaluate_objective(cost, r.omega_b_star, outer.w1, outer.w2));
        }
    }
    summary.finish(out)
}

fn convergence_svg(history: &DesignHistory) -> String {
    let it = &history.iterations;
    let xs: Vec<f64> = it.iter().map(|r| r.iteration as f64).collect();
    let series = |label: &str, f: &dyn Fn(&stageccd::outer::IterationRecord) -> f64| {
        Series::new(label, xs.iter().copied().zip(it.iter().map(f)).collect())
    };
    let thetas = (0..it.first().map_or(0, |r| r.theta.len()))
        .map(|i| {
            let name = history.param_names.get(i).cloned().unwrap_or_else(|| format!("theta_{}", i + 1));
            series(&name, &|r| r.theta[i])
        })
        .collect();
    let panel = |title: &str, y: &str, series| Panel {
        title: title.into(),
        x_label: "iteration".into(),
        y_label: y.into(),
        series,
        ..Default::default()
    };
    render(&[
        panel("Objective", "J", vec![series("J", &|r| r.j)]),
        panel("Bandwidth", "bandwidth [Hz]", vec![series("bandwidth", &|r| hz(r.omega_b))]),
        panel("Hardware parameters", "theta", thetas),
    ])
}

/// Nested co-design from the configured start point.
pub fn ccd(cfg: &RunConfig, out_dir: &Path) -> Result<Summary, CliError> {
    let plant = Plant::from_doc(&cfg.plant)?;
    let family = plant
        .family()
        .ok_or_else(|| CliError::Config("ccd needs a parametric plant (two_mass or chain_surrogate)".into()))?;
    let outer_doc = cfg.outer.as_ref().ok_or_else(|| CliError::Config("ccd needs an outer section".into()))?;
    let base = cfg.filter_params.to_params::<f64>()?;
    let inner_cfg = cfg.inner.clone().unwrap_or_default().to_config::<f64>()?;
    let outer_cfg = outer_doc.to_config::<f64>()?;
    let mut out = Outputs::new(out_dir)?;
    let (theta0, sizing) = resolve_theta(&plant, cfg, true)?;

    let outcome = run_ccd(family, &MovingMass(family), &base, &outer_cfg, &inner_cfg, &theta0).map_err(|e| diagnose(&mut out, e))?;
    let history = &outcome.history;
    let last = history.last().ok_or_else(|| CliError::Core(CcdError::Numerical("empty design history".into())))?;

    out.write_with("history.csv", |b| history.write_csv(b))?;
    out.write_with("history.json", |b| {
        serde_json::to_writer_pretty(&mut *b, history)?;
        b.write_all(b"\n")
    })?;
    out.write("convergence.svg", &convergence_svg(history))?;
    out.write_with("sweep.csv", |b| write_sweep_csv(b, &outcome.inner.records))?;
    let second_order = family.plant(&outcome.theta)?;
    let g = second_order.state_space()?;
    write_bode(&mut out, &g, &cfg.bode)?;
    write_sensitivity(&mut out, &g, &outcome.inner.controller.controller, &cfg.bode, outcome.inner.omega_b_star)?;

    let mut summary = Summary {
        command: "ccd".into(),
        param_names: history.param_names.clone(),
        first_resonance_hz: first_resonance(&second_order)?.map(hz),
        sizing,
        ..Default::default()
    };
    summary.fill_inner(&outcome.inner);
    // the history row is the record of truth for the final iterate
    summary.theta = last.theta.clone();
    summary.cost = Some(last.cost);
    summary.j = Some(last.j);
    summary.bandwidth_hz = Some(hz(last.omega_b));
    summary.omega_s_hz = Some(hz(last.omega_s));
    summary.omega_t_hz = Some(hz(last.omega_t));
    summary.stop_reason = Some(outcome.stop);
    summary.iterations = Some(last.iteration);
    summary.slacks = Some(outcome.slacks.clone());
    summary.full_grid_fallbacks = Some(outcome.full_grid_fallbacks.clone());
    summary.finish(out)
}
