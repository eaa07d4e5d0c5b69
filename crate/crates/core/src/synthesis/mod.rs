//! Builds the communication overlay on top of a grid and emits the rule sets.
//!
//! Steps: group buses into substations, compute inter-substation distances,
//! pick the two control centers, place the SADM and OADM rings, home every
//! gateway to a ring node, register all entities and generate rules.

pub mod distance;
mod rules;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distance::{all_pairs_shortest, floyd_warshall, substation_graph, DistanceMatrix};
pub use rules::generate_idrs;

pub use crate::network::CasePolicy;
use crate::entity::EntityId;
use crate::grid::Grid;
use crate::idr::IdrError;
use crate::network::{EntityMeta, JointNetwork, Ring, Substation, SubstationRole};
use crate::ternary::Model;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("substation {substation} references unknown bus {bus}")]
    UnknownBus { substation: u32, bus: u32 },
    #[error("bus {0} is not assigned to any substation")]
    Unassigned(u32),
    #[error("bus {bus} is assigned to substations {first} and {second}")]
    MultipleAssignment { bus: u32, first: u32, second: u32 },
    #[error("substation {0} has no buses")]
    EmptySubstation(u32),
    #[error("unknown substation {0}")]
    UnknownSubstation(u32),
    #[error("substation graph is disconnected; unreachable pairs: {0:?}")]
    Disconnected(Vec<(u32, u32)>),
    #[error("need at least 2 substations, have {0}")]
    TooFewSubstations(usize),
    #[error("control centers must be two distinct substations")]
    ControlCenters,
    #[error("{ring} ring would have {hosts} node(s); at least 2 are required")]
    DegenerateRing { ring: &'static str, hosts: usize },
    #[error("{ring} homing override {substation} -> {host}: {message}")]
    BadOverride {
        ring: &'static str,
        substation: u32,
        host: u32,
        message: &'static str,
    },
    #[error("rule generation failed: {0}")]
    Idr(#[from] IdrError),
    #[error("generated network is inconsistent: {0}")]
    Invalid(String),
    #[error("bad synthesis config: {0}")]
    Config(String),
}

/// Placement inputs. Every field is optional; missing pieces are derived.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Substation id → bus ids. Overrides the grid's own map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substation_map: Option<BTreeMap<u32, Vec<u32>>>,
    /// One entry per PMU; repeat a substation to install several. Overrides the grid's list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmu_substations: Option<Vec<u32>>,
    /// `[primary, backup]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_centers: Option<[u32; 2]>,
    /// Substation → SADM host substation, replacing nearest-node homing.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sonet_homing: BTreeMap<u32, u32>,
    /// Substation → OADM host substation, replacing nearest-node homing.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dwdm_homing: BTreeMap<u32, u32>,
}

impl SynthesisConfig {
    pub fn from_json_str(text: &str) -> Result<Self, SynthesisError> {
        serde_json::from_str(text).map_err(|e| SynthesisError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthesisError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthesisError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

/// Group buses into substations.
///
/// Source of the grouping, first match wins: the config map, the grid map,
/// per-bus hints (when every bus has one), else buses joined by transformers
/// merge and every other bus stands alone.
pub fn group_substations(grid: &Grid, config: &SynthesisConfig) -> Result<Vec<Substation>, SynthesisError> {
    let groups: BTreeMap<u32, Vec<u32>> = if let Some(map) = config.substation_map.as_ref().or(grid.substation_map.as_ref()) {
        map.clone()
    } else if grid.buses.iter().all(|b| b.substation.is_some()) {
        let mut m: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for b in &grid.buses {
            m.entry(b.substation.unwrap()).or_default().push(b.id);
        }
        m
    } else {
        transformer_groups(grid)
    };

    let known: BTreeSet<u32> = grid.bus_ids().into_iter().collect();
    let mut owner: BTreeMap<u32, u32> = BTreeMap::new();
    for (sid, buses) in &groups {
        if buses.is_empty() {
            return Err(SynthesisError::EmptySubstation(*sid));
        }
        for b in buses {
            if !known.contains(b) {
                return Err(SynthesisError::UnknownBus { substation: *sid, bus: *b });
            }
            if let Some(first) = owner.insert(*b, *sid) {
                return Err(SynthesisError::MultipleAssignment {
                    bus: *b,
                    first,
                    second: *sid,
                });
            }
        }
    }
    if let Some(b) = known.iter().find(|b| !owner.contains_key(b)) {
        return Err(SynthesisError::Unassigned(*b));
    }

    let pmus = config.pmu_substations.as_ref().unwrap_or(&grid.pmu_substations);
    for s in pmus {
        if !groups.contains_key(s) {
            return Err(SynthesisError::UnknownSubstation(*s));
        }
    }
    Ok(groups
        .into_iter()
        .map(|(id, buses)| {
            let generating = buses.iter().any(|b| grid.bus(*b).is_some_and(|x| x.has_generator));
            Substation {
                id,
                pmu_count: pmus.iter().filter(|p| **p == id).count() as u32,
                buses,
                generating,
                role: if generating {
                    SubstationRole::Generating
                } else {
                    SubstationRole::Plain
                },
            }
        })
        .collect())
}

/// Connected components over transformer branches, numbered by smallest bus id.
fn transformer_groups(grid: &Grid) -> BTreeMap<u32, Vec<u32>> {
    let ids = grid.bus_ids();
    let index = grid.bus_index();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for br in grid.branches.iter().filter(|b| b.transformer) {
        let (a, b) = (find(&mut parent, index[&br.from]), find(&mut parent, index[&br.to]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut comps: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(*id);
    }
    let mut lists: Vec<Vec<u32>> = comps
        .into_values()
        .map(|mut v| {
            v.sort();
            v
        })
        .collect();
    lists.sort();
    lists.into_iter().enumerate().map(|(i, v)| (i as u32 + 1, v)).collect()
}

/// Rank by closeness (smallest total distance), then higher degree, then lower id.
pub fn select_control_centers(
    grid: &Grid,
    dist: &DistanceMatrix,
    substations: &[Substation],
) -> Result<(u32, u32), SynthesisError> {
    if substations.len() < 2 {
        return Err(SynthesisError::TooFewSubstations(substations.len()));
    }
    let deg = distance::degrees(grid, substations);
    let mut order: Vec<usize> = (0..substations.len()).collect();
    let total: Vec<f64> = dist.d.iter().map(|row| row.iter().sum()).collect();
    order.sort_by(|&a, &b| {
        total[a]
            .total_cmp(&total[b])
            .then(deg[b].cmp(&deg[a]))
            .then(substations[a].id.cmp(&substations[b].id))
    });
    Ok((substations[order[0]].id, substations[order[1]].id))
}

/// Which ring is being placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingKind {
    Sadm,
    Oadm,
}

impl RingKind {
    fn name(self) -> &'static str {
        match self {
            RingKind::Sadm => "SONET",
            RingKind::Oadm => "DWDM",
        }
    }
}

/// Host substations in ring order: a nearest-neighbour tour from the primary
/// control center (ties to the lower substation id).
pub fn place_ring_nodes(
    substations: &[Substation],
    dist: &DistanceMatrix,
    kind: RingKind,
) -> Result<Vec<u32>, SynthesisError> {
    let primary = substations
        .iter()
        .find(|s| s.role == SubstationRole::PrimaryCc)
        .ok_or(SynthesisError::ControlCenters)?
        .id;
    let mut hosts: BTreeSet<u32> = substations
        .iter()
        .filter(|s| {
            s.is_control_center()
                || match kind {
                    RingKind::Sadm => s.generating,
                    RingKind::Oadm => s.has_pmu(),
                }
        })
        .map(|s| s.id)
        .collect();
    if hosts.len() < 2 {
        return Err(SynthesisError::DegenerateRing {
            ring: kind.name(),
            hosts: hosts.len(),
        });
    }
    hosts.remove(&primary);
    let mut tour = vec![primary];
    while !hosts.is_empty() {
        let cur = *tour.last().unwrap();
        let next = *hosts
            .iter()
            .min_by(|a, b| dist.between(cur, **a).total_cmp(&dist.between(cur, **b)).then(a.cmp(b)))
            .unwrap();
        hosts.remove(&next);
        tour.push(next);
    }
    Ok(tour)
}

/// Ring node (1-based) each substation's gateway homes to. Hosts use their own
/// node; others the nearest host (ties to the lower node number) unless overridden.
pub fn home_gateways(
    substations: &[Substation],
    hosts: &[u32],
    dist: &DistanceMatrix,
    overrides: &BTreeMap<u32, u32>,
    kind: RingKind,
) -> Result<BTreeMap<u32, u32>, SynthesisError> {
    let node_of = |sub: u32| hosts.iter().position(|h| *h == sub).map(|i| i as u32 + 1);
    for (&substation, &host) in overrides {
        let bad = |message| SynthesisError::BadOverride {
            ring: kind.name(),
            substation,
            host,
            message,
        };
        let s = substations
            .iter()
            .find(|s| s.id == substation)
            .ok_or_else(|| bad("unknown substation"))?;
        if s.is_control_center() {
            return Err(bad("control centers connect to every ring node"));
        }
        if node_of(host).is_none() {
            return Err(bad("target is not a ring host"));
        }
    }
    let mut out = BTreeMap::new();
    for s in substations {
        let node = if let Some(n) = node_of(s.id) {
            n
        } else if let Some(h) = overrides.get(&s.id) {
            node_of(*h).unwrap()
        } else {
            let (i, _) = hosts
                .iter()
                .enumerate()
                .min_by(|(i, a), (j, b)| dist.between(s.id, **a).total_cmp(&dist.between(s.id, **b)).then(i.cmp(j)))
                .unwrap();
            i as u32 + 1
        };
        out.insert(s.id, node);
    }
    Ok(out)
}

/// Power feeds of every ring node as `(substation, bus)` pairs: all buses of
/// substations homed to the node plus the control-center buses, ordered by
/// substation then bus.
fn ring_feeds(substations: &[Substation], ring_len: u32, homing: &BTreeMap<u32, u32>) -> BTreeMap<u32, Vec<(u32, u32)>> {
    (1..=ring_len)
        .map(|k| {
            let mut feeds = Vec::new();
            for s in substations {
                if homing.get(&s.id) == Some(&k) || s.is_control_center() {
                    let mut buses = s.buses.clone();
                    buses.sort();
                    feeds.extend(buses.into_iter().map(|b| (s.id, b)));
                }
            }
            (k, feeds)
        })
        .collect()
}

/// Build the full joint network with all four rule sets.
pub fn synthesize(grid: &Grid, config: &SynthesisConfig) -> Result<JointNetwork, SynthesisError> {
    let mut substations = group_substations(grid, config)?;
    if substations.len() < 2 {
        return Err(SynthesisError::TooFewSubstations(substations.len()));
    }
    let dist = all_pairs_shortest(grid, &substations)?;
    let (primary, backup) = match config.control_centers {
        Some([p, b]) => {
            for id in [p, b] {
                if !substations.iter().any(|s| s.id == id) {
                    return Err(SynthesisError::UnknownSubstation(id));
                }
            }
            (p, b)
        }
        None => select_control_centers(grid, &dist, &substations)?,
    };
    if primary == backup {
        return Err(SynthesisError::ControlCenters);
    }
    for s in substations.iter_mut() {
        if s.id == primary {
            s.role = SubstationRole::PrimaryCc;
        } else if s.id == backup {
            s.role = SubstationRole::BackupCc;
        }
    }

    let sonet_hosts = place_ring_nodes(&substations, &dist, RingKind::Sadm)?;
    let dwdm_hosts = place_ring_nodes(&substations, &dist, RingKind::Oadm)?;
    let sonet_homing = home_gateways(&substations, &sonet_hosts, &dist, &config.sonet_homing, RingKind::Sadm)?;
    let dwdm_homing = home_gateways(&substations, &dwdm_hosts, &dist, &config.dwdm_homing, RingKind::Oadm)?;
    let sonet = Ring {
        feeds: ring_feeds(&substations, sonet_hosts.len() as u32, &sonet_homing),
        hosts: sonet_hosts,
        homing: sonet_homing,
    };
    let dwdm = Ring {
        feeds: ring_feeds(&substations, dwdm_hosts.len() as u32, &dwdm_homing),
        hosts: dwdm_hosts,
        homing: dwdm_homing,
    };

    // PMUs are numbered in placement-list order.
    let pmus = config
        .pmu_substations
        .as_ref()
        .unwrap_or(&grid.pmu_substations)
        .iter()
        .enumerate()
        .map(|(i, s)| (i as u32 + 1, *s))
        .collect();

    let mut net = JointNetwork {
        grid: grid.clone(),
        substations,
        sonet,
        dwdm,
        pmus,
        registry: BTreeMap::new(),
        rule_sets: vec![],
    };
    net.registry = build_registry(&net);

    for case in [CasePolicy::Case1, CasePolicy::Case2] {
        for model in [Model::Miim, Model::Iim] {
            let set = generate_idrs(&net, model, case)?;
            net.rule_sets.push(set);
        }
    }
    let violations = net.validate();
    if let Some(v) = violations.first() {
        return Err(SynthesisError::Invalid(v.to_string()));
    }
    Ok(net)
}

fn build_registry(net: &JointNetwork) -> BTreeMap<EntityId, EntityMeta> {
    let mut reg = BTreeMap::new();
    let mut add = |id: EntityId, substation: Option<u32>, endpoints: Vec<EntityId>| {
        reg.insert(
            id.clone(),
            EntityMeta {
                kind: id.kind(),
                layer: id.layer(),
                substation,
                endpoints,
            },
        );
    };

    for (i, br) in net.grid.branches.iter().enumerate() {
        add(
            EntityId::Branch(i as u32 + 1),
            None,
            vec![EntityId::Bus(br.from), EntityId::Bus(br.to)],
        );
    }

    for s in &net.substations {
        let sid = Some(s.id);
        for &b in &s.buses {
            add(EntityId::Bus(b), sid, vec![]);
            add(EntityId::link(1, b), sid, vec![EntityId::Bus(b), EntityId::server(s.id)]);
            add(EntityId::link(2, b), sid, vec![EntityId::Bus(b), EntityId::gateway(s.id)]);
        }
        add(EntityId::Battery(s.id), sid, vec![]);
        add(EntityId::link(5, s.id), sid, vec![EntityId::Battery(s.id), EntityId::server(s.id)]);
        add(EntityId::link(6, s.id), sid, vec![EntityId::Battery(s.id), EntityId::gateway(s.id)]);
        add(EntityId::server(s.id), sid, vec![]);
        add(EntityId::gateway(s.id), sid, vec![]);
        add(EntityId::lan(s.id), sid, vec![EntityId::server(s.id), EntityId::gateway(s.id)]);
        add(EntityId::Rtu(s.id), sid, vec![]);
        add(
            EntityId::rtu_channel(s.id, s.id),
            sid,
            vec![EntityId::Rtu(s.id), EntityId::gateway(s.id)],
        );
        add(EntityId::View(crate::entity::View::Scada, s.id), sid, vec![]);
        add(EntityId::View(crate::entity::View::Data, s.id), sid, vec![]);
        if s.has_pmu() {
            add(EntityId::View(crate::entity::View::Pmu, s.id), sid, vec![]);
        }

        let cables = |ring: &Ring| -> Vec<u32> {
            if s.is_control_center() {
                (1..=ring.len()).collect()
            } else {
                vec![ring.homing[&s.id]]
            }
        };
        for k in cables(&net.sonet) {
            add(EntityId::sonet_cable(k, s.id), sid, vec![EntityId::sadm(k), EntityId::gateway(s.id)]);
        }
        for k in cables(&net.dwdm) {
            add(EntityId::dwdm_cable(k, s.id), sid, vec![EntityId::oadm(k), EntityId::gateway(s.id)]);
        }
    }

    for (&k, &s) in &net.pmus {
        add(EntityId::Pmu(k), Some(s), vec![]);
        add(EntityId::pmu_channel(k, s), Some(s), vec![EntityId::Pmu(k), EntityId::gateway(s)]);
    }

    for (ring, ty, family) in [(&net.sonet, 2, 3), (&net.dwdm, 3, 4)] {
        let node = |k: u32| EntityId::comm(ty, 1, k, 0);
        for (i, host) in ring.hosts.iter().enumerate() {
            add(node(i as u32 + 1), Some(*host), vec![]);
        }
        for (y, z) in ring.links() {
            add(EntityId::comm(ty, 2, y, z), None, vec![node(y), node(z)]);
        }
        let mut index = 0;
        for (k, feeds) in &ring.feeds {
            for (sub, bus) in feeds {
                index += 1;
                add(EntityId::link(family, index), Some(*sub), vec![EntityId::Bus(*bus), node(*k)]);
            }
        }
    }
    reg
}
