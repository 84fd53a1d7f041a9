//! Nested plant/controller co-design for flexible precision motion stages.
//!
//! An inner loop synthesizes mixed-sensitivity H-infinity controllers and
//! searches the weighting break frequencies for the largest achievable
//! closed-loop bandwidth; an outer loop moves the plant parameters along a
//! projected gradient of a weighted cost/bandwidth objective.

pub mod analysis;
pub mod error;
pub mod hinf;
pub mod inner;
pub mod linalg;
pub mod lti;
pub mod outer;
pub mod plants;
pub mod riccati;
pub mod scalar;
pub mod weights;

pub use error::{CcdError, Result};
pub use lti::{feedback_interconnect, lift_second_order, ClosedLoopSet, FrequencyResponse, StateSpaceModel};
pub use scalar::Real;
pub use weights::{FilterParams, FilterParamsDoc};

pub type StateSpace = StateSpaceModel<f64>;
pub type StateSpaceF32 = StateSpaceModel<f32>;
