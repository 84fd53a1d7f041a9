//! JSON run configuration. Frequencies are in Hz on disk and converted to
//! rad/s once, when the config is resolved.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stageccd::inner::InnerConfigDoc;
use stageccd::outer::OuterConfigDoc;
use stageccd::plants::{
    ingest_modal_json, sequential_sizing, ChainFamily, ChainLayout, ModalModel, PlantFamily, SecondOrderPlant,
    SizingResult, TwoMassFamily, DEFAULT_ZETA,
};
use stageccd::FilterParamsDoc;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantDoc {
    TwoMass {
        #[serde(default)]
        theta: Option<Vec<f64>>,
        #[serde(default = "default_zeta")]
        zeta: f64,
    },
    /// Parametric lumped chain; the bundled surrogate layout unless one is given.
    ChainSurrogate {
        #[serde(default)]
        theta: Option<Vec<f64>>,
        #[serde(default)]
        layout: Option<ChainLayout>,
        #[serde(default = "one")]
        n_rigid: usize,
        #[serde(default = "four")]
        n_flex: usize,
        #[serde(default = "default_zeta")]
        zeta: f64,
    },
    /// Fixed modal model read from disk; analysis only.
    ModalFile {
        path: PathBuf,
        #[serde(default)]
        n_rigid: Option<usize>,
        #[serde(default)]
        n_flex: Option<usize>,
        #[serde(default)]
        zeta: Option<f64>,
    },
}

impl PlantDoc {
    pub fn theta(&self) -> Option<&[f64]> {
        match self {
            PlantDoc::TwoMass { theta, .. } | PlantDoc::ChainSurrogate { theta, .. } => theta.as_deref(),
            PlantDoc::ModalFile { .. } => None,
        }
    }
}

fn default_zeta() -> f64 {
    DEFAULT_ZETA
}
fn one() -> usize {
    1
}
fn four() -> usize {
    4
}

/// Plant-first sizing used to produce a baseline when no `theta` is given.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizingDoc {
    pub min_resonance_hz: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "d_n_grid")]
    pub n_grid: usize,
    #[serde(default = "d_tol")]
    pub tol: f64,
}

fn d_n_grid() -> usize {
    11
}
fn d_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodeDoc {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub points_per_decade: usize,
}

impl Default for BodeDoc {
    fn default() -> Self {
        Self { f_min_hz: 1.0, f_max_hz: 1e4, points_per_decade: 1000 }
    }
}

impl BodeDoc {
    /// Frequency grid in Hz.
    pub fn grid_hz(&self) -> Result<Vec<f64>, CliError> {
        if !(self.f_min_hz > 0.0 && self.f_max_hz > self.f_min_hz && self.points_per_decade > 0) {
            return Err(CliError::Config("bode: need 0 < f_min_hz < f_max_hz and points_per_decade > 0".into()));
        }
        Ok(stageccd::lti::log_grid(self.f_min_hz, self.f_max_hz, self.points_per_decade))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantDoc,
    pub filter_params: FilterParamsDoc,
    #[serde(default)]
    pub inner: Option<InnerConfigDoc>,
    #[serde(default)]
    pub outer: Option<OuterConfigDoc>,
    #[serde(default)]
    pub sizing: Option<SizingDoc>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub bode: BodeDoc,
}

impl RunConfig {
    /// Read a config; relative paths inside it are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        if let PlantDoc::ModalFile { path: p, .. } = &mut cfg.plant {
            *p = dir.join(&*p);
        }
        if let Some(out) = &mut cfg.output_dir {
            *out = dir.join(&*out);
        }
        Ok(cfg)
    }
}

pub enum Plant {
    Family(Box<dyn PlantFamily<f64>>),
    Fixed(ModalModel<f64>),
}

impl Plant {
    pub fn from_doc(doc: &PlantDoc) -> Result<Self, CliError> {
        Ok(match doc {
            PlantDoc::TwoMass { zeta, .. } => Plant::Family(Box::new(TwoMassFamily { zeta: *zeta })),
            PlantDoc::ChainSurrogate { layout, n_rigid, n_flex, zeta, .. } => {
                let layout = layout.clone().unwrap_or_else(ChainLayout::surrogate_stage);
                Plant::Family(Box::new(ChainFamily::new(layout, *n_rigid, *n_flex, *zeta)?))
            }
            PlantDoc::ModalFile { path, n_rigid, n_flex, zeta } => {
                if !path.exists() {
                    return Err(CliError::Config(format!("modal file {} does not exist", path.display())));
                }
                let model: ModalModel<f64> = ingest_modal_json(path)?;
                let model = match (n_rigid, n_flex) {
                    (None, None) => model,
                    _ => {
                        let nr = n_rigid.unwrap_or(model.n_rigid());
                        let nf = n_flex.unwrap_or(model.n_flexible());
                        model.truncated(nr, nf, zeta.unwrap_or(DEFAULT_ZETA))?
                    }
                };
                Plant::Fixed(model)
            }
        })
    }

    pub fn family(&self) -> Option<&dyn PlantFamily<f64>> {
        match self {
            Plant::Family(f) => Some(f.as_ref()),
            Plant::Fixed(_) => None,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        self.family().map(|f| f.param_names()).unwrap_or_default()
    }

    pub fn second_order(&self, theta: &[f64]) -> Result<SecondOrderPlant<f64>, CliError> {
        Ok(match self {
            Plant::Family(f) => f.plant(theta)?,
            Plant::Fixed(m) => m.second_order(),
        })
    }

    /// Moving mass in kg, for parametric plants.
    pub fn moving_mass(&self, theta: &[f64]) -> Result<Option<f64>, CliError> {
        Ok(match self.family() {
            Some(f) => Some(f.moving_mass(theta)?),
            None => None,
        })
    }
}

/// Lowest nonzero undamped natural frequency (rad/s), if any.
pub fn first_resonance(plant: &SecondOrderPlant<f64>) -> stageccd::Result<Option<f64>> {
    let modal = ModalModel::from_fe_matrices(&plant.mass, &plant.stiffness, &plant.input, &plant.output)?;
    let top = modal.modal_freqs.last().copied().unwrap_or(1.0);
    Ok(modal.modal_freqs.iter().copied().find(|&w| w > 1e-9 * top))
}

pub fn run_sizing(family: &dyn PlantFamily<f64>, doc: &SizingDoc) -> Result<SizingResult, CliError> {
    let eval = |theta: &[f64]| Ok((family.moving_mass(theta)?, first_resonance(&family.plant(theta)?)?.unwrap_or(0.0)));
    Ok(sequential_sizing(eval, &doc.lo, &doc.hi, 2.0 * PI * doc.min_resonance_hz, doc.n_grid, doc.tol)?)
}
