//! Toy models of observations that can change what they observe: the
//! quantum machine and its ε-model, wood, solid and elastic-band exemplars,
//! product observations, a three-axis taxonomy and a seeded Monte Carlo
//! harness.

pub mod error;
pub mod exemplars;
pub mod machines;
pub mod model;
pub mod product;
pub mod stats;
pub mod taxonomy;

pub use error::{Error, Result};
pub use exemplars::{ElasticBandState, Integrity, Moisture, SolidState, WoodState};
pub use machines::{BreakageProfile, ElasticApparatus, LinePosition, SawtoothRuler, SpherePoint};
pub use model::{
    observe, Branch, DrawSource, Kernel, ObservationProcess, ObservationRecord, Outcome,
    PropertyDef, ReplayDraws, RngDraws, ScenarioKind, ScenarioState,
};
pub use product::{ndc_theorem_demo, product_observe, ProductObservation};
pub use stats::{run_trials, sweep, wilson_interval, ResetPolicy, SweepResult, TrialReport};
pub use taxonomy::{classify, Effect, ObservationClassification, Persistence, Predictability};
