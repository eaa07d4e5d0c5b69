//! Bundled IEEE test systems with their placement configs.
//!
//! Electrical data and operating points are the standard 14- and 118-bus
//! cases. The 14-bus substation map, branch lengths and EoDWDM homing are
//! hand-built; 118-bus line lengths are proportional to reactance.

use crate::grid::Grid;
use crate::network::JointNetwork;
use crate::synthesis::{synthesize, SynthesisConfig};

pub const IEEE14_GRID: &str = include_str!("../fixtures/ieee14.json");
pub const IEEE14_SYNTHESIS: &str = include_str!("../fixtures/ieee14_synthesis.json");
pub const IEEE118_GRID: &str = include_str!("../fixtures/ieee118.json");
pub const IEEE118_SYNTHESIS: &str = include_str!("../fixtures/ieee118_synthesis.json");

pub fn ieee14_grid() -> Grid {
    Grid::from_json_str(IEEE14_GRID).expect("bundled 14-bus grid is valid")
}

pub fn ieee14_config() -> SynthesisConfig {
    SynthesisConfig::from_json_str(IEEE14_SYNTHESIS).expect("bundled 14-bus config is valid")
}

pub fn ieee118_grid() -> Grid {
    Grid::from_json_str(IEEE118_GRID).expect("bundled 118-bus grid is valid")
}

pub fn ieee118_config() -> SynthesisConfig {
    SynthesisConfig::from_json_str(IEEE118_SYNTHESIS).expect("bundled 118-bus config is valid")
}

pub fn ieee14_network() -> JointNetwork {
    synthesize(&ieee14_grid(), &ieee14_config()).expect("bundled 14-bus network synthesizes")
}

pub fn ieee118_network() -> JointNetwork {
    synthesize(&ieee118_grid(), &ieee118_config()).expect("bundled 118-bus network synthesizes")
}
