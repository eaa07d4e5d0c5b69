//! Hybrid SCADA/PMU linear state estimation in rectangular coordinates.
//!
//! SCADA voltage pseudo-measurements and PMU voltage/current phasors are all
//! linear in the rectangular state `(V_r, V_i)`, so the estimate is a single
//! weighted least-squares solve. Columns are interleaved per bus:
//! `2k` is `V_r` and `2k+1` is `V_i` of the `k`-th bus in grid order.

mod compare;
mod wls;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{compare_models, paired_one_sided_test, BusError, MaskEstimator, ModelReport, PairedTest};
pub use wls::{build_system, observability, wls_solve, LinearSystem, WlsSolution};

use crate::cascade::AvailabilityMask;
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("branch {0} has zero impedance")]
    SingularBranch(usize),
    #[error("system is unobservable; null-space columns belong to buses {0:?}")]
    Unobservable(Vec<u32>),
    #[error("no measurements")]
    Empty,
    #[error("state has no entry for bus {0}")]
    MissingBus(u32),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("mask does not cover bus {0}")]
    MaskBus(u32),
}

/// Series and from-end shunt admittance of a branch (p.u.).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub g: f64,
    pub b: f64,
    pub g0: f64,
    pub b0: f64,
}

pub fn admittance_from_branch(r: f64, x: f64, b_sh: f64) -> Result<BranchAdmittance, EstimationError> {
    let den = r * r + x * x;
    if den == 0.0 {
        return Err(EstimationError::SingularBranch(0));
    }
    Ok(BranchAdmittance {
        g: r / den,
        b: -x / den,
        g0: 0.0,
        b0: b_sh / 2.0,
    })
}

/// Coefficients with `[I_r, I_i] = rows * [Va_r, Va_i, Vb_r, Vb_i]` for the
/// current leaving bus `a` towards `b`.
pub fn branch_current_rows(y: &BranchAdmittance) -> [[f64; 4]; 2] {
    [
        [y.g + y.g0, -(y.b + y.b0), -y.g, y.b],
        [y.b + y.b0, y.g + y.g0, -y.b, -y.g],
    ]
}

/// Per-bus rectangular voltages, in grid bus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub buses: Vec<u32>,
    pub vr: Vec<f64>,
    pub vi: Vec<f64>,
}

impl StateVector {
    pub fn from_polar(buses: Vec<u32>, vm: &[f64], va_deg: &[f64]) -> Self {
        let (vr, vi) = vm
            .iter()
            .zip(va_deg)
            .map(|(m, a)| {
                let t = a.to_radians();
                (m * t.cos(), m * t.sin())
            })
            .unzip();
        Self { buses, vr, vi }
    }

    /// Operating point stored in the grid (flat 1∠0 where absent).
    pub fn from_grid(grid: &Grid) -> Self {
        let vm: Vec<f64> = grid.buses.iter().map(|b| b.vm.unwrap_or(1.0)).collect();
        let va: Vec<f64> = grid.buses.iter().map(|b| b.va_deg.unwrap_or(0.0)).collect();
        Self::from_polar(grid.bus_ids(), &vm, &va)
    }

    pub fn len(&self) -> usize {
        self.buses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buses.is_empty()
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.vr[k].hypot(self.vi[k])
    }

    /// Interleaved `[vr0, vi0, vr1, vi1, ...]`.
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.vr.iter().zip(&self.vi).flat_map(|(r, i)| [*r, *i]).collect()
    }

    pub fn from_interleaved(buses: Vec<u32>, x: &[f64]) -> Self {
        Self {
            buses,
            vr: x.iter().step_by(2).copied().collect(),
            vi: x.iter().skip(1).step_by(2).copied().collect(),
        }
    }
}

/// True-state file: `[{"bus": 1, "vm": 1.06, "va_deg": 0.0}, ...]`.
#[derive(Debug, Clone, Deserialize)]
pub struct PolarPoint {
    pub bus: u32,
    pub vm: f64,
    pub va_deg: f64,
}

/// Build a state in grid order from polar points; every bus must be present.
pub fn state_from_points(grid: &Grid, points: &[PolarPoint]) -> Result<StateVector, EstimationError> {
    let by_bus: BTreeMap<u32, &PolarPoint> = points.iter().map(|p| (p.bus, p)).collect();
    let mut vm = Vec::new();
    let mut va = Vec::new();
    for id in grid.bus_ids() {
        let p = by_bus.get(&id).ok_or(EstimationError::MissingBus(id))?;
        vm.push(p.vm);
        va.push(p.va_deg);
    }
    Ok(StateVector::from_polar(grid.bus_ids(), &vm, &va))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasurementKind {
    ScadaV,
    PmuV,
    PmuI,
}

/// One complex measurement. `branch` (1-based) is set for currents, which
/// are measured at `bus` flowing into the branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub bus: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
    pub z_r: f64,
    pub z_i: f64,
    pub var_r: f64,
    pub var_i: f64,
}

pub type MeasurementSet = Vec<Measurement>;

/// Relative noise levels (standard deviation as a fraction of magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub scada: f64,
    pub pmu_v: f64,
    pub pmu_i: f64,
    /// Lower bound on every variance, keeps `W` invertible at zero noise.
    pub variance_floor: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            scada: 0.03,
            pmu_v: 0.001,
            pmu_i: 0.001,
            variance_floor: 1e-12,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            scada: 0.0,
            pmu_v: 0.0,
            pmu_i: 0.0,
            ..Self::default()
        }
    }

    fn relative(&self, kind: MeasurementKind) -> f64 {
        match kind {
            MeasurementKind::ScadaV => self.scada,
            MeasurementKind::PmuV => self.pmu_v,
            MeasurementKind::PmuI => self.pmu_i,
        }
    }
}

/// Measurement slot in canonical order; noise for every slot is drawn whether
/// or not the mask keeps it, so masks share draws for a given seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Slot {
    pub kind: MeasurementKind,
    pub bus_index: usize,
    pub branch: Option<usize>,
}

pub(crate) fn canonical_slots(grid: &Grid) -> Vec<Slot> {
    let mut out = Vec::new();
    for (k, bus) in grid.buses.iter().enumerate() {
        out.push(Slot {
            kind: MeasurementKind::ScadaV,
            bus_index: k,
            branch: None,
        });
        out.push(Slot {
            kind: MeasurementKind::PmuV,
            bus_index: k,
            branch: None,
        });
        for br in grid.incident_branches(bus.id) {
            out.push(Slot {
                kind: MeasurementKind::PmuI,
                bus_index: k,
                branch: Some(br),
            });
        }
    }
    out
}

pub(crate) fn slot_kept(slot: &Slot, bus: u32, mask: &AvailabilityMask) -> Result<bool, EstimationError> {
    let a = mask.get(bus).ok_or(EstimationError::MaskBus(bus))?;
    Ok(match slot.kind {
        MeasurementKind::ScadaV => a.scada,
        MeasurementKind::PmuV | MeasurementKind::PmuI => a.pmu,
    })
}

/// Current leaving `grid.buses[a]` into `branch` (1-based), from the true state.
pub(crate) fn branch_current(
    grid: &Grid,
    index: &BTreeMap<u32, usize>,
    state: &StateVector,
    a: usize,
    branch: usize,
) -> Result<(f64, f64), EstimationError> {
    let br = &grid.branches[branch - 1];
    let y = admittance_from_branch(br.r, br.x, br.b).map_err(|_| EstimationError::SingularBranch(branch))?;
    let other = if grid.buses[a].id == br.from { br.to } else { br.from };
    let b = index[&other];
    let rows = branch_current_rows(&y);
    let v = [state.vr[a], state.vi[a], state.vr[b], state.vi[b]];
    let dot = |r: &[f64; 4]| r.iter().zip(v).map(|(c, x)| c * x).sum::<f64>();
    Ok((dot(&rows[0]), dot(&rows[1])))
}

/// Noisy measurements of `truth` allowed by `mask`.
pub fn simulate_measurements(
    truth: &StateVector,
    grid: &Grid,
    mask: &AvailabilityMask,
    seed: u64,
    noise: &NoiseModel,
) -> Result<MeasurementSet, EstimationError> {
    if truth.len() != grid.buses.len() {
        return Err(EstimationError::Dimension(format!(
            "state has {} buses, grid has {}",
            truth.len(),
            grid.buses.len()
        )));
    }
    let index = grid.bus_index();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for slot in canonical_slots(grid) {
        let (tr, ti) = match slot.kind {
            MeasurementKind::ScadaV | MeasurementKind::PmuV => (truth.vr[slot.bus_index], truth.vi[slot.bus_index]),
            MeasurementKind::PmuI => branch_current(grid, &index, truth, slot.bus_index, slot.branch.unwrap())?,
        };
        let sigma = noise.relative(slot.kind) * tr.hypot(ti);
        let er: f64 = StandardNormal.sample(&mut rng);
        let ei: f64 = StandardNormal.sample(&mut rng);
        let bus = grid.buses[slot.bus_index].id;
        if !slot_kept(&slot, bus, mask)? {
            continue;
        }
        let var = (sigma * sigma).max(noise.variance_floor);
        out.push(Measurement {
            kind: slot.kind,
            bus,
            branch: slot.branch,
            z_r: tr + sigma * er,
            z_i: ti + sigma * ei,
            var_r: var,
            var_i: var,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admittance_examples() {
        let y = admittance_from_branch(0.0, 1.0, 0.0).unwrap();
        assert_eq!((y.g, y.b), (0.0, -1.0));
        let y = admittance_from_branch(1.0, 0.0, 0.0).unwrap();
        assert_eq!((y.g, y.b), (1.0, 0.0));
        assert!(admittance_from_branch(0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn ohms_law_rows() {
        let y = BranchAdmittance {
            g: 1.0,
            b: 0.0,
            g0: 0.0,
            b0: 0.0,
        };
        let r = branch_current_rows(&y);
        // Va = 1, Vb = 0
        assert_eq!((r[0][0], r[1][0]), (1.0, 0.0));
        let y = BranchAdmittance {
            g: 0.0,
            b: -1.0,
            g0: 0.0,
            b0: 0.0,
        };
        let r = branch_current_rows(&y);
        let v = [1.0, 0.0, 1.0, 0.0];
        let ir: f64 = r[0].iter().zip(v).map(|(a, b)| a * b).sum();
        let ii: f64 = r[1].iter().zip(v).map(|(a, b)| a * b).sum();
        assert_eq!((ir, ii), (0.0, 0.0));
    }

    #[test]
    fn interleaving_round_trip() {
        let s = StateVector::from_polar(vec![1, 2], &[1.0, 0.9], &[0.0, -10.0]);
        let x = s.to_interleaved();
        assert_eq!(StateVector::from_interleaved(vec![1, 2], &x), s);
        assert!((s.magnitude(1) - 0.9).abs() < 1e-15);
    }
}
