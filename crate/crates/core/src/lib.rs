//! Interdependency modeling for joint power-communication networks.
//!
//! The crate covers the whole pipeline:
//!
//! * [`ternary`]: the three-valued operational levels and their operators,
//! * [`idr`]: the text language for dependency rules,
//! * [`grid`] / [`network`]: power grid data and the joint network registry,
//! * [`synthesis`]: building the communication overlay and its rule sets,
//! * [`cascade`]: synchronous fixpoint failure propagation and data availability,
//! * [`estimation`]: hybrid SCADA/PMU linear state estimation.

pub mod cascade;
pub mod entity;
pub mod estimation;
pub mod fixtures;
pub mod grid;
pub mod idr;
pub mod network;
pub mod synthesis;
pub mod ternary;

pub use cascade::{
    data_availability, footprint_diff, run_cascade, AvailabilityMask, CascadeError, CascadeTrace,
    FailureScenario, FootprintDiff,
};
pub use entity::{EntityId, EntityKind, Layer};
pub use grid::{Branch, Bus, Grid, GridError};
pub use idr::{parse_idr, Expr, IdrError, IdrRule};
pub use network::{JointNetwork, RuleSet, Substation, SubstationRole, Violation};
pub use synthesis::{synthesize, CasePolicy, SynthesisConfig, SynthesisError};
pub use ternary::{BinaryValue, Model, Operator, TernaryValue};
