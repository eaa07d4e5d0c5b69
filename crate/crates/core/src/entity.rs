//! Entity identifiers for the joint power-communication network.
//!
//! Text forms:
//!
//! | form            | entity                                                |
//! |-----------------|-------------------------------------------------------|
//! | `P(i)`          | bus `i`                                               |
//! | `PB(s)`         | battery backup of substation `s`                      |
//! | `BR(k)`         | transmission line / transformer `k`                   |
//! | `C(t,s,y,z)`    | communication entity of type `t`, subtype `s`         |
//! | `L(f,i)`        | power supply link of family `f`                       |
//! | `R(i)` / `U(i)` | RTU / PMU                                             |
//! | `SCADA(s)`, `PMU(s)`, `DATA(s)` | derived data-availability views of gateway `s` |
//!
//! Communication types: `1` substation entities (server, gateway, LAN,
//! SONEToE cable, EoDWDM cable, RTU channel, PMU channel), `2` SONET ring
//! entities and `3` DWDM ring entities (node, ring link).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntityParseError {
    #[error("unknown entity prefix '{0}'")]
    UnknownPrefix(String),
    #[error("{kind} takes {expected} index(es), got {got}")]
    IndexCount {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("malformed entity literal '{0}'")]
    Malformed(String),
    #[error("invalid communication entity C({0},{1},..): {2}")]
    CommClass(u32, u32, &'static str),
}

/// Substation-level communication devices (type 1 subtypes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubstationDevice {
    Server = 1,
    Gateway = 2,
    Lan = 3,
    SonetCable = 4,
    DwdmCable = 5,
    RtuChannel = 6,
    PmuChannel = 7,
}

/// Data views attached to a substation gateway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum View {
    Scada,
    Pmu,
    Data,
}

impl View {
    fn prefix(self) -> &'static str {
        match self {
            View::Scada => "SCADA",
            View::Pmu => "PMU",
            View::Data => "DATA",
        }
    }
}

/// Identifier of one entity of the joint network.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Bus(u32),
    Battery(u32),
    Branch(u32),
    /// `C(type, subtype, y, z)`.
    Comm { ty: u32, sub: u32, y: u32, z: u32 },
    PowerSupplyLink { family: u32, index: u32 },
    Rtu(u32),
    Pmu(u32),
    View(View, u32),
    /// Free-form symbol, only produced by the rule parser for hand-written rules.
    Alias(String, Vec<u32>),
}

/// Coarse entity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Bus,
    Battery,
    Branch,
    CommEntity,
    PowerSupplyLink,
    Rtu,
    Pmu,
    View,
    Alias,
}

/// Network layer of an entity: power (P), communication (C) or both (CP).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    P,
    C,
    CP,
}

impl EntityId {
    pub fn comm(ty: u32, sub: u32, y: u32, z: u32) -> Self {
        EntityId::Comm { ty, sub, y, z }
    }

    pub fn server(s: u32) -> Self {
        Self::comm(1, 1, s, s)
    }

    pub fn gateway(s: u32) -> Self {
        Self::comm(1, 2, s, s)
    }

    pub fn lan(s: u32) -> Self {
        Self::comm(1, 3, s, s)
    }

    /// SONEToE cable between SADM `node` and the gateway of substation `s`.
    pub fn sonet_cable(node: u32, s: u32) -> Self {
        Self::comm(1, 4, node, s)
    }

    /// EoDWDM cable between OADM `node` and the gateway of substation `s`.
    pub fn dwdm_cable(node: u32, s: u32) -> Self {
        Self::comm(1, 5, node, s)
    }

    pub fn rtu_channel(rtu: u32, s: u32) -> Self {
        Self::comm(1, 6, rtu, s)
    }

    pub fn pmu_channel(pmu: u32, s: u32) -> Self {
        Self::comm(1, 7, pmu, s)
    }

    pub fn sadm(node: u32) -> Self {
        Self::comm(2, 1, node, 0)
    }

    pub fn oadm(node: u32) -> Self {
        Self::comm(3, 1, node, 0)
    }

    pub fn link(family: u32, index: u32) -> Self {
        EntityId::PowerSupplyLink { family, index }
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            EntityId::Bus(_) => EntityKind::Bus,
            EntityId::Battery(_) => EntityKind::Battery,
            EntityId::Branch(_) => EntityKind::Branch,
            EntityId::Comm { .. } => EntityKind::CommEntity,
            EntityId::PowerSupplyLink { .. } => EntityKind::PowerSupplyLink,
            EntityId::Rtu(_) => EntityKind::Rtu,
            EntityId::Pmu(_) => EntityKind::Pmu,
            EntityId::View(..) => EntityKind::View,
            EntityId::Alias(..) => EntityKind::Alias,
        }
    }

    pub fn layer(&self) -> Option<Layer> {
        match self.kind() {
            EntityKind::Bus | EntityKind::Battery | EntityKind::Branch => Some(Layer::P),
            EntityKind::CommEntity => Some(Layer::C),
            EntityKind::PowerSupplyLink | EntityKind::Rtu | EntityKind::Pmu => Some(Layer::CP),
            EntityKind::View | EntityKind::Alias => None,
        }
    }

    pub fn is_view(&self) -> bool {
        matches!(self, EntityId::View(..))
    }

    /// Substation-device subtype for type-1 communication entities.
    pub fn substation_device(&self) -> Option<SubstationDevice> {
        use SubstationDevice::*;
        match self {
            EntityId::Comm { ty: 1, sub, .. } => Some(match sub {
                1 => Server,
                2 => Gateway,
                3 => Lan,
                4 => SonetCable,
                5 => DwdmCable,
                6 => RtuChannel,
                7 => PmuChannel,
                _ => return None,
            }),
            _ => None,
        }
    }

    /// Strict parse: only the known prefixes are accepted.
    pub fn parse(text: &str) -> Result<Self, EntityParseError> {
        let (name, indices) = split_literal(text)?;
        Self::from_parts(&name, &indices)?.ok_or(EntityParseError::UnknownPrefix(name))
    }

    /// Build an id from a prefix and index list. `Ok(None)` for an unknown prefix.
    pub(crate) fn from_parts(name: &str, idx: &[u32]) -> Result<Option<Self>, EntityParseError> {
        fn want(kind: &'static str, idx: &[u32], n: usize) -> Result<(), EntityParseError> {
            if idx.len() == n {
                Ok(())
            } else {
                Err(EntityParseError::IndexCount {
                    kind,
                    expected: n,
                    got: idx.len(),
                })
            }
        }
        let id = match name {
            "P" => {
                want("P", idx, 1)?;
                EntityId::Bus(idx[0])
            }
            "PB" => {
                want("PB", idx, 1)?;
                EntityId::Battery(idx[0])
            }
            "BR" => {
                want("BR", idx, 1)?;
                EntityId::Branch(idx[0])
            }
            "C" => {
                want("C", idx, 4)?;
                let (ty, sub) = (idx[0], idx[1]);
                match ty {
                    1 if !(1..=7).contains(&sub) => {
                        return Err(EntityParseError::CommClass(ty, sub, "type-1 subtype must be 1..7"))
                    }
                    2 | 3 if !(1..=2).contains(&sub) => {
                        return Err(EntityParseError::CommClass(ty, sub, "ring subtype must be 1 or 2"))
                    }
                    1..=3 => {}
                    _ => return Err(EntityParseError::CommClass(ty, sub, "type must be 1, 2 or 3")),
                }
                EntityId::comm(ty, sub, idx[2], idx[3])
            }
            "L" => {
                want("L", idx, 2)?;
                EntityId::link(idx[0], idx[1])
            }
            "R" => {
                want("R", idx, 1)?;
                EntityId::Rtu(idx[0])
            }
            "U" => {
                want("U", idx, 1)?;
                EntityId::Pmu(idx[0])
            }
            "SCADA" | "PMU" | "DATA" => {
                want("view", idx, 1)?;
                let view = match name {
                    "SCADA" => View::Scada,
                    "PMU" => View::Pmu,
                    _ => View::Data,
                };
                EntityId::View(view, idx[0])
            }
            _ => return Ok(None),
        };
        Ok(Some(id))
    }
}

fn split_literal(text: &str) -> Result<(String, Vec<u32>), EntityParseError> {
    let text = text.trim();
    let malformed = || EntityParseError::Malformed(text.to_string());
    let (name, rest) = match text.find('(') {
        Some(pos) => (&text[..pos], Some(&text[pos..])),
        None => (text, None),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(malformed());
    }
    let indices = match rest {
        None => vec![],
        Some(r) => {
            let inner = r
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(malformed)?;
            inner
                .split(',')
                .map(|s| s.trim().parse::<u32>().map_err(|_| malformed()))
                .collect::<Result<_, _>>()?
        }
    };
    Ok((name.to_string(), indices))
}

fn write_indices(f: &mut fmt::Formatter<'_>, idx: &[u32]) -> fmt::Result {
    f.write_str("(")?;
    for (i, v) in idx.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str(")")
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Bus(i) => write!(f, "P({i})"),
            EntityId::Battery(s) => write!(f, "PB({s})"),
            EntityId::Branch(k) => write!(f, "BR({k})"),
            EntityId::Comm { ty, sub, y, z } => write!(f, "C({ty},{sub},{y},{z})"),
            EntityId::PowerSupplyLink { family, index } => write!(f, "L({family},{index})"),
            EntityId::Rtu(i) => write!(f, "R({i})"),
            EntityId::Pmu(i) => write!(f, "U({i})"),
            EntityId::View(v, s) => write!(f, "{}({s})", v.prefix()),
            EntityId::Alias(name, idx) => {
                f.write_str(name)?;
                if idx.is_empty() {
                    Ok(())
                } else {
                    write_indices(f, idx)
                }
            }
        }
    }
}

impl FromStr for EntityId {
    type Err = EntityParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityId::parse(s)
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        EntityId::parse(&s).map_err(serde::de::Error::custom)
    }
}
