//! Parametric mechanical plants: second-order models, the two-mass
//! benchmark, and modal models ingested from finite-element data.

mod chain;
mod modal;
mod second_order;
mod sizing;
mod two_mass;

pub use chain::{ChainFamily, ChainLayout};
pub use modal::{truncate_and_damp, ingest_modal_json, ingest_fe_files, ModalModel, ModalDoc};
pub use second_order::{PlantFamily, SecondOrderDerivative, SecondOrderPlant};
pub use sizing::{sequential_sizing, SizingResult};
pub use two_mass::{two_mass_plant, TwoMassFamily, TwoMassParams, DEFAULT_ZETA};
