//! The joint network: grid, substations, communication overlay, entity
//! registry and the generated rule sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::entity::{EntityId, EntityKind, Layer, SubstationDevice};
use crate::grid::Grid;
use crate::idr::{parse_idr_as, IdrRule};
use crate::ternary::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstationRole {
    Plain,
    Generating,
    PrimaryCc,
    BackupCc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substation {
    pub id: u32,
    pub buses: Vec<u32>,
    /// Number of PMUs installed (0 if none).
    pub pmu_count: u32,
    pub generating: bool,
    pub role: SubstationRole,
}

impl Substation {
    pub fn has_pmu(&self) -> bool {
        self.pmu_count > 0
    }

    pub fn is_control_center(&self) -> bool {
        matches!(self.role, SubstationRole::PrimaryCc | SubstationRole::BackupCc)
    }
}

/// Data-transfer policy for the two fibre channels of a gateway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CasePolicy {
    /// SCADA only over SONEToE, PMU only over EoDWDM.
    #[serde(rename = "1")]
    Case1,
    /// EoDWDM may also carry SCADA when the SONEToE path is lost.
    #[serde(rename = "2")]
    Case2,
}

impl CasePolicy {
    pub fn number(self) -> u8 {
        match self {
            CasePolicy::Case1 => 1,
            CasePolicy::Case2 => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(CasePolicy::Case1),
            2 => Some(CasePolicy::Case2),
            _ => None,
        }
    }
}

impl fmt::Display for CasePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Registry entry for one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMeta {
    pub kind: EntityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<Layer>,
    /// Substation hosting the entity, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substation: Option<u32>,
    /// What a link or cable connects.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endpoints: Vec<EntityId>,
}

/// All rules of one model and case. Entity rules drive the cascade; view
/// rules (targets `SCADA(s)`, `PMU(s)`, `DATA(s)`) are evaluated on the fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub model: Model,
    pub case: CasePolicy,
    pub rules: Vec<IdrRule>,
}

impl RuleSet {
    pub fn entity_rules(&self) -> impl Iterator<Item = &IdrRule> {
        self.rules.iter().filter(|r| !r.target.is_view())
    }

    pub fn view_rules(&self) -> impl Iterator<Item = &IdrRule> {
        self.rules.iter().filter(|r| r.target.is_view())
    }

    pub fn get(&self, target: &EntityId) -> Option<&IdrRule> {
        self.rules.iter().find(|r| &r.target == target)
    }
}

#[derive(Serialize, Deserialize)]
struct RuleSetRepr {
    model: Model,
    case: CasePolicy,
    rules: Vec<String>,
}

impl Serialize for RuleSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RuleSetRepr {
            model: self.model,
            case: self.case,
            rules: self.rules.iter().map(|r| r.to_string()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RuleSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = RuleSetRepr::deserialize(d)?;
        let rules = repr
            .rules
            .iter()
            .map(|t| parse_idr_as(t, repr.model))
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(RuleSet {
            model: repr.model,
            case: repr.case,
            rules,
        })
    }
}

/// One ring (SONET or DWDM). Node `k` (1-based) sits at `hosts[k-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ring {
    pub hosts: Vec<u32>,
    /// Ring node each substation's cable terminates at (control centers excluded).
    pub homing: BTreeMap<u32, u32>,
    /// Bus feeds of each node, in order; the `i`-th global feed is `L(family, i)`.
    pub feeds: BTreeMap<u32, Vec<(u32, u32)>>,
}

impl Ring {
    pub fn len(&self) -> u32 {
        self.hosts.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.hosts.is_empty()
    }

    pub fn node_at(&self, substation: u32) -> Option<u32> {
        self.hosts.iter().position(|h| *h == substation).map(|i| i as u32 + 1)
    }

    /// Ring neighbours of node `k` as `(neighbour, link endpoints)` pairs.
    pub fn neighbours(&self, k: u32) -> Vec<(u32, (u32, u32))> {
        let n = self.len();
        if n < 2 {
            return vec![];
        }
        let next = k % n + 1;
        let prev = (k + n - 2) % n + 1;
        if n == 2 {
            return vec![(next, ring_link(k, next, false)), (prev, ring_link(k, prev, true))];
        }
        let mut out = vec![(prev, ring_link(prev, k, false)), (next, ring_link(k, next, false))];
        out.sort();
        out
    }

    /// Every ring link's `(y, z)` indices, one per cycle edge.
    pub fn links(&self) -> Vec<(u32, u32)> {
        let n = self.len();
        match n {
            0 | 1 => vec![],
            2 => vec![(1, 2), (2, 1)],
            _ => {
                let mut v: Vec<_> = (1..=n).map(|k| ring_link(k, k % n + 1, false)).collect();
                v.sort();
                v
            }
        }
    }
}

/// Ring link naming: lower index first; the second of two parallel links in
/// a two-node ring is written high-to-low.
fn ring_link(a: u32, b: u32, second: bool) -> (u32, u32) {
    if second {
        (a.max(b), a.min(b))
    } else {
        (a.min(b), a.max(b))
    }
}

/// `J(E, F(E))`: the grid with its communication overlay and dependency rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointNetwork {
    pub grid: Grid,
    pub substations: Vec<Substation>,
    /// SADM ring.
    pub sonet: Ring,
    /// OADM ring.
    pub dwdm: Ring,
    /// PMU number → host substation.
    pub pmus: BTreeMap<u32, u32>,
    pub registry: BTreeMap<EntityId, EntityMeta>,
    pub rule_sets: Vec<RuleSet>,
}

/// A broken invariant found by [`JointNetwork::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownEntity { rule: EntityId, entity: EntityId },
    UnknownTarget(EntityId),
    DuplicateRule(EntityId),
    RuleModel { rule: EntityId, expected: Model },
    ControlCenterCardinality { primary: usize, backup: usize },
    BusMembership { bus: u32, count: usize },
    EmptySubstation(u32),
    MissingDevice { substation: u32, entity: EntityId },
    Homing { substation: u32, cables: usize },
    Ring { ring: &'static str, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownEntity { rule, entity } => {
                write!(f, "unknown entity {entity} referenced by rule for {rule}")
            }
            Violation::UnknownTarget(t) => write!(f, "rule target {t} is not registered"),
            Violation::DuplicateRule(t) => write!(f, "more than one rule for {t}"),
            Violation::RuleModel { rule, expected } => {
                write!(f, "rule for {rule} is not a {expected} rule")
            }
            Violation::ControlCenterCardinality { primary, backup } => write!(
                f,
                "control-center cardinality: {primary} primary and {backup} backup (need 1 and 1)"
            ),
            Violation::BusMembership { bus, count } => {
                write!(f, "bus {bus} belongs to {count} substations")
            }
            Violation::EmptySubstation(s) => write!(f, "substation {s} has no buses"),
            Violation::MissingDevice { substation, entity } => {
                write!(f, "substation {substation} is missing {entity}")
            }
            Violation::Homing { substation, cables } => write!(
                f,
                "gateway of substation {substation} has {cables} SONEToE cables (expected 1)"
            ),
            Violation::Ring { ring, message } => write!(f, "{ring} ring: {message}"),
        }
    }
}

impl JointNetwork {
    pub fn substation(&self, id: u32) -> Option<&Substation> {
        self.substations.iter().find(|s| s.id == id)
    }

    pub fn control_centers(&self) -> Vec<u32> {
        self.substations
            .iter()
            .filter(|s| s.is_control_center())
            .map(|s| s.id)
            .collect()
    }

    pub fn primary_cc(&self) -> Option<u32> {
        self.substations
            .iter()
            .find(|s| s.role == SubstationRole::PrimaryCc)
            .map(|s| s.id)
    }

    pub fn backup_cc(&self) -> Option<u32> {
        self.substations
            .iter()
            .find(|s| s.role == SubstationRole::BackupCc)
            .map(|s| s.id)
    }

    /// Substation containing `bus`.
    pub fn substation_of_bus(&self, bus: u32) -> Option<u32> {
        self.substations
            .iter()
            .find(|s| s.buses.contains(&bus))
            .map(|s| s.id)
    }

    pub fn rule_set(&self, model: Model, case: CasePolicy) -> Option<&RuleSet> {
        self.rule_sets.iter().find(|r| r.model == model && r.case == case)
    }

    /// Entities that take part in the cascade (everything but data views).
    pub fn cascade_entities(&self) -> impl Iterator<Item = &EntityId> {
        self.registry.keys().filter(|id| !id.is_view())
    }

    /// Every invariant violation, empty when the network is consistent.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        let primary = self
            .substations
            .iter()
            .filter(|s| s.role == SubstationRole::PrimaryCc)
            .count();
        let backup = self
            .substations
            .iter()
            .filter(|s| s.role == SubstationRole::BackupCc)
            .count();
        if primary != 1 || backup != 1 {
            out.push(Violation::ControlCenterCardinality { primary, backup });
        }

        let mut membership: BTreeMap<u32, usize> = self.grid.buses.iter().map(|b| (b.id, 0)).collect();
        for s in &self.substations {
            if s.buses.is_empty() {
                out.push(Violation::EmptySubstation(s.id));
            }
            for b in &s.buses {
                *membership.entry(*b).or_default() += 1;
            }
        }
        for (bus, count) in membership {
            if count != 1 {
                out.push(Violation::BusMembership { bus, count });
            }
        }

        for s in &self.substations {
            let mut required = vec![
                EntityId::server(s.id),
                EntityId::gateway(s.id),
                EntityId::lan(s.id),
                EntityId::Battery(s.id),
                EntityId::Rtu(s.id),
            ];
            required.extend(s.buses.iter().map(|b| EntityId::Bus(*b)));
            for entity in required {
                if !self.registry.contains_key(&entity) {
                    out.push(Violation::MissingDevice {
                        substation: s.id,
                        entity,
                    });
                }
            }
            let pmus = self.pmus.values().filter(|h| **h == s.id).count() as u32;
            if pmus != s.pmu_count {
                out.push(Violation::MissingDevice {
                    substation: s.id,
                    entity: EntityId::View(crate::entity::View::Pmu, s.id),
                });
            }
            let cables = self
                .registry
                .keys()
                .filter(|id| {
                    id.substation_device() == Some(SubstationDevice::SonetCable)
                        && matches!(id, EntityId::Comm { z, .. } if *z == s.id)
                })
                .count();
            let expected = if s.is_control_center() {
                self.sonet.len() as usize
            } else {
                1
            };
            if cables != expected {
                out.push(Violation::Homing {
                    substation: s.id,
                    cables,
                });
            }
        }

        for (name, ring, ty) in [("SONET", &self.sonet, 2), ("DWDM", &self.dwdm, 3)] {
            if ring.len() < 2 {
                out.push(Violation::Ring {
                    ring: name,
                    message: format!("{} node(s), need at least 2", ring.len()),
                });
                continue;
            }
            for k in 1..=ring.len() {
                if !self.registry.contains_key(&EntityId::comm(ty, 1, k, 0)) {
                    out.push(Violation::Ring {
                        ring: name,
                        message: format!("node {k} not registered"),
                    });
                }
            }
            let registered: BTreeSet<(u32, u32)> = self
                .registry
                .keys()
                .filter_map(|id| match id {
                    EntityId::Comm { ty: t, sub: 2, y, z } if *t == ty => Some((*y, *z)),
                    _ => None,
                })
                .collect();
            let expected: BTreeSet<(u32, u32)> = ring.links().into_iter().collect();
            if registered != expected {
                out.push(Violation::Ring {
                    ring: name,
                    message: "ring links do not form a single cycle over the ring nodes".into(),
                });
            }
        }

        for set in &self.rule_sets {
            let mut targets = BTreeSet::new();
            for rule in &set.rules {
                if !targets.insert(rule.target.clone()) {
                    out.push(Violation::DuplicateRule(rule.target.clone()));
                }
                if !self.registry.contains_key(&rule.target) {
                    out.push(Violation::UnknownTarget(rule.target.clone()));
                }
                if rule.model != set.model {
                    out.push(Violation::RuleModel {
                        rule: rule.target.clone(),
                        expected: set.model,
                    });
                }
                for entity in rule.free_entities() {
                    if !self.registry.contains_key(&entity) {
                        out.push(Violation::UnknownEntity {
                            rule: rule.target.clone(),
                            entity,
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> Ring {
        Ring {
            hosts: (1..=n as u32).collect(),
            homing: BTreeMap::new(),
            feeds: BTreeMap::new(),
        }
    }

    #[test]
    fn ring_links_form_a_cycle() {
        assert_eq!(ring(6).links(), vec![(1, 2), (1, 6), (2, 3), (3, 4), (4, 5), (5, 6)]);
        assert_eq!(ring(6).neighbours(1), vec![(2, (1, 2)), (6, (1, 6))]);
        assert_eq!(ring(6).neighbours(6), vec![(1, (1, 6)), (5, (5, 6))]);
        assert_eq!(ring(3).neighbours(2), vec![(1, (1, 2)), (3, (2, 3))]);
        assert_eq!(ring(2).links(), vec![(1, 2), (2, 1)]);
        assert_eq!(ring(2).neighbours(1), vec![(2, (1, 2)), (2, (2, 1))]);
        assert!(ring(1).links().is_empty());
    }

    #[test]
    fn case_policy_numbers() {
        assert_eq!(CasePolicy::from_number(2), Some(CasePolicy::Case2));
        assert_eq!(CasePolicy::from_number(3), None);
        assert_eq!(serde_json::to_string(&CasePolicy::Case1).unwrap(), "\"1\"");
    }
}
