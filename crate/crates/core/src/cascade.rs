//! Synchronous fixpoint failure propagation and per-bus data availability.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{EntityId, View};
use crate::idr::{evaluate, Expr, IdrError};
use crate::network::{CasePolicy, EntityMeta, JointNetwork, RuleSet};
use crate::ternary::{BinaryValue, Level, Model, Operator, TernaryValue};

pub const MASK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("killed entity {0} is not in the registry")]
    UnknownKilled(EntityId),
    #[error("data view {0} cannot be killed")]
    KilledView(EntityId),
    #[error("rule for {rule} references unknown entity {entity}")]
    UnknownEntity { rule: EntityId, entity: EntityId },
    #[error("rule target {0} is not in the registry")]
    UnknownTarget(EntityId),
    #[error("no fixpoint after {0} steps")]
    NoConvergence(usize),
    #[error("{entity} rose from {from} to {to} at step {step}")]
    NotMonotone {
        entity: EntityId,
        step: usize,
        from: u8,
        to: u8,
    },
    #[error("no {model} case {case} rule set in the network")]
    MissingRuleSet { model: Model, case: CasePolicy },
    #[error("availability masks cover different buses")]
    BusSetMismatch,
    #[error(transparent)]
    Idr(#[from] IdrError),
}

/// Entities forced to 0 for the whole run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureScenario {
    #[serde(default)]
    pub label: String,
    pub killed: BTreeSet<EntityId>,
}

impl FailureScenario {
    pub fn new(label: impl Into<String>, killed: impl IntoIterator<Item = EntityId>) -> Self {
        Self {
            label: label.into(),
            killed: killed.into_iter().collect(),
        }
    }
}

/// Rule body over entity indices.
#[derive(Debug, Clone)]
enum Node {
    Lit(usize),
    Op(Operator, Vec<Node>),
}

impl Node {
    fn eval(&self, s: &[u8]) -> u8 {
        match self {
            Node::Lit(i) => s[*i],
            Node::Op(op, c) => match op {
                Operator::MinAnd | Operator::BoolAnd => c.iter().map(|n| n.eval(s)).min().unwrap_or(0),
                Operator::MaxOr | Operator::BoolOr => c.iter().map(|n| n.eval(s)).max().unwrap_or(0),
                Operator::NewXor => {
                    let first = c[0].eval(s);
                    if c[1..].iter().all(|n| n.eval(s) == first) {
                        first
                    } else {
                        1
                    }
                }
            },
        }
    }
}

/// A rule set compiled against a registry, reusable across scenarios.
#[derive(Debug, Clone)]
pub struct CascadeEngine {
    model: Model,
    entities: Vec<EntityId>,
    index: HashMap<EntityId, usize>,
    rules: Vec<(usize, Node)>,
}

impl CascadeEngine {
    pub fn new(rules: &RuleSet, registry: &BTreeMap<EntityId, EntityMeta>) -> Result<Self, CascadeError> {
        let entities: Vec<EntityId> = registry.keys().filter(|id| !id.is_view()).cloned().collect();
        let index: HashMap<EntityId, usize> = entities.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut compiled = Vec::new();
        for rule in rules.entity_rules() {
            let target = *index
                .get(&rule.target)
                .ok_or_else(|| CascadeError::UnknownTarget(rule.target.clone()))?;
            let node = compile(&rule.body, &index, &rule.target)?;
            compiled.push((target, node));
        }
        Ok(Self {
            model: rules.model,
            entities,
            index,
            rules: compiled,
        })
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn model(&self) -> Model {
        self.model
    }

    fn full(&self) -> u8 {
        self.model.full_level()
    }

    fn step(&self, prev: &[u8], clamp: &[usize]) -> Vec<u8> {
        let mut next = prev.to_vec();
        for (t, node) in &self.rules {
            next[*t] = node.eval(prev);
        }
        for &k in clamp {
            next[k] = 0;
        }
        next
    }

    pub fn run(&self, scenario: &FailureScenario) -> Result<CascadeTrace, CascadeError> {
        let mut clamp = Vec::with_capacity(scenario.killed.len());
        for id in &scenario.killed {
            if id.is_view() {
                return Err(CascadeError::KilledView(id.clone()));
            }
            clamp.push(*self.index.get(id).ok_or_else(|| CascadeError::UnknownKilled(id.clone()))?);
        }
        let mut state = vec![self.full(); self.entities.len()];
        for &k in &clamp {
            state[k] = 0;
        }
        let limit = 2 * self.entities.len();
        let mut steps = vec![state];
        loop {
            let prev = steps.last().unwrap();
            let next = self.step(prev, &clamp);
            if &next == prev {
                break;
            }
            if let Some(i) = (0..next.len()).find(|&i| next[i] > prev[i]) {
                return Err(CascadeError::NotMonotone {
                    entity: self.entities[i].clone(),
                    step: steps.len() + 1,
                    from: prev[i],
                    to: next[i],
                });
            }
            steps.push(next);
            if steps.len() > limit {
                return Err(CascadeError::NoConvergence(steps.len()));
            }
        }
        Ok(CascadeTrace {
            model: self.model,
            label: scenario.label.clone(),
            entities: self.entities.clone(),
            converged_at: steps.len(),
            steps,
        })
    }

    /// True when one more synchronous pass leaves `state` unchanged.
    pub fn is_fixpoint(&self, state: &[u8], scenario: &FailureScenario) -> bool {
        let clamp: Vec<usize> = scenario.killed.iter().filter_map(|id| self.index.get(id).copied()).collect();
        self.step(state, &clamp) == state
    }
}

fn compile(e: &Expr, index: &HashMap<EntityId, usize>, rule: &EntityId) -> Result<Node, CascadeError> {
    Ok(match e {
        Expr::Lit(id) => Node::Lit(*index.get(id).ok_or_else(|| CascadeError::UnknownEntity {
            rule: rule.clone(),
            entity: id.clone(),
        })?),
        Expr::Op(op, c) => Node::Op(
            *op,
            c.iter().map(|x| compile(x, index, rule)).collect::<Result<_, _>>()?,
        ),
    })
}

/// Snapshots `T1, T2, ...` of every non-view entity. `T1` is the initial
/// state with the killed entities at 0; the last snapshot is the fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeTrace {
    pub model: Model,
    pub label: String,
    pub entities: Vec<EntityId>,
    pub steps: Vec<Vec<u8>>,
    /// 1-based index of the fixpoint snapshot.
    pub converged_at: usize,
}

impl CascadeTrace {
    pub fn final_levels(&self) -> &[u8] {
        self.steps.last().expect("trace has at least one step")
    }

    pub fn final_state(&self) -> BTreeMap<EntityId, u8> {
        self.state_at(self.steps.len())
    }

    /// State at step `t` (1-based).
    pub fn state_at(&self, t: usize) -> BTreeMap<EntityId, u8> {
        self.entities.iter().cloned().zip(self.steps[t - 1].iter().copied()).collect()
    }

    /// Entities whose level changed at step `t` (1-based), with the new level.
    /// At `T1` this is every entity below full operation.
    pub fn changes_at(&self, t: usize) -> Vec<(EntityId, u8)> {
        let cur = &self.steps[t - 1];
        let full = self.model.full_level();
        (0..cur.len())
            .filter(|&i| {
                if t == 1 {
                    cur[i] != full
                } else {
                    cur[i] != self.steps[t - 2][i]
                }
            })
            .map(|i| (self.entities[i].clone(), cur[i]))
            .collect()
    }

    /// Trace as TSV with columns `step`, `entity`, `value`, one row per change.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("step\tentity\tvalue\n");
        for t in 1..=self.steps.len() {
            for (id, v) in self.changes_at(t) {
                out.push_str(&format!("T{t}\t{id}\t{v}\n"));
            }
        }
        out
    }
}

/// Run `rules` from full operation with `scenario` killed.
pub fn run_cascade(
    rules: &RuleSet,
    registry: &BTreeMap<EntityId, EntityMeta>,
    scenario: &FailureScenario,
) -> Result<CascadeTrace, CascadeError> {
    CascadeEngine::new(rules, registry)?.run(scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusAvailability {
    pub bus: u32,
    pub scada: bool,
    pub pmu: bool,
}

/// Which buses still deliver SCADA and PMU data to a control center.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityMask {
    pub version: u32,
    pub model: Model,
    pub case: CasePolicy,
    pub buses: Vec<BusAvailability>,
}

impl AvailabilityMask {
    /// Everything available; PMU only where installed.
    pub fn full(network: &JointNetwork, model: Model, case: CasePolicy) -> Self {
        let mut buses: Vec<BusAvailability> = network
            .substations
            .iter()
            .flat_map(|s| {
                s.buses.iter().map(move |b| BusAvailability {
                    bus: *b,
                    scada: true,
                    pmu: s.has_pmu(),
                })
            })
            .collect();
        buses.sort_by_key(|b| b.bus);
        Self {
            version: MASK_SCHEMA_VERSION,
            model,
            case,
            buses,
        }
    }

    pub fn get(&self, bus: u32) -> Option<&BusAvailability> {
        self.buses.iter().find(|b| b.bus == bus)
    }

    pub fn scada_lost(&self) -> Vec<u32> {
        self.buses.iter().filter(|b| !b.scada).map(|b| b.bus).collect()
    }

    pub fn pmu_available(&self) -> Vec<u32> {
        self.buses.iter().filter(|b| b.pmu).map(|b| b.bus).collect()
    }
}

/// Levels of the data views on a fixpoint.
pub fn evaluate_views(
    final_state: &BTreeMap<EntityId, u8>,
    rules: &RuleSet,
) -> Result<BTreeMap<EntityId, u8>, CascadeError> {
    let mut views: BTreeMap<EntityId, u8> = BTreeMap::new();
    // SCADA and PMU views sort before DATA, which reads them.
    let mut ordered: Vec<_> = rules.view_rules().collect();
    ordered.sort_by(|a, b| a.target.cmp(&b.target));
    for rule in ordered {
        let v = match rules.model {
            Model::Miim => eval_levels::<TernaryValue>(&rule.body, final_state, &views)?,
            Model::Iim => eval_levels::<BinaryValue>(&rule.body, final_state, &views)?,
        };
        views.insert(rule.target.clone(), v);
    }
    Ok(views)
}

fn eval_levels<V: Level>(
    body: &Expr,
    state: &BTreeMap<EntityId, u8>,
    views: &BTreeMap<EntityId, u8>,
) -> Result<u8, CascadeError> {
    let lookup = |id: &EntityId| {
        state
            .get(id)
            .or_else(|| views.get(id))
            .and_then(|l| V::from_level(*l).ok())
    };
    Ok(evaluate::<V>(body, &lookup)?.level())
}


/// Per-bus availability from the view rules evaluated on `final_state`.
/// A view counts as available at level 1 or above.
pub fn data_availability(
    final_state: &BTreeMap<EntityId, u8>,
    network: &JointNetwork,
    rules: &RuleSet,
) -> Result<AvailabilityMask, CascadeError> {
    let views = evaluate_views(final_state, rules)?;
    let mut mask = AvailabilityMask::full(network, rules.model, rules.case);
    for s in &network.substations {
        let scada = views.get(&EntityId::View(View::Scada, s.id)).is_some_and(|v| *v >= 1);
        let pmu = s.has_pmu() && views.get(&EntityId::View(View::Pmu, s.id)).is_some_and(|v| *v >= 1);
        for b in mask.buses.iter_mut().filter(|b| s.buses.contains(&b.bus)) {
            b.scada = scada;
            b.pmu = pmu;
        }
    }
    Ok(mask)
}

/// Buses lost in one mask but not the other, per measurement kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootprintDiff {
    /// SCADA lost under the second mask only.
    pub scada_only_second: Vec<u32>,
    /// SCADA lost under the first mask only.
    pub scada_only_first: Vec<u32>,
    pub pmu_only_second: Vec<u32>,
    pub pmu_only_first: Vec<u32>,
}

impl FootprintDiff {
    pub fn is_empty(&self) -> bool {
        self.scada_only_second.is_empty()
            && self.scada_only_first.is_empty()
            && self.pmu_only_second.is_empty()
            && self.pmu_only_first.is_empty()
    }

    /// Buses that lose any measurement under the second mask only.
    pub fn only_second(&self) -> BTreeSet<u32> {
        self.scada_only_second.iter().chain(&self.pmu_only_second).copied().collect()
    }
}

/// Compare two masks, typically MIIM first and IIM second.
pub fn footprint_diff(first: &AvailabilityMask, second: &AvailabilityMask) -> Result<FootprintDiff, CascadeError> {
    let a: Vec<u32> = first.buses.iter().map(|b| b.bus).collect();
    let b: Vec<u32> = second.buses.iter().map(|b| b.bus).collect();
    if a != b {
        return Err(CascadeError::BusSetMismatch);
    }
    let mut d = FootprintDiff::default();
    for (x, y) in first.buses.iter().zip(&second.buses) {
        if x.scada && !y.scada {
            d.scada_only_second.push(x.bus);
        }
        if !x.scada && y.scada {
            d.scada_only_first.push(x.bus);
        }
        if x.pmu && !y.pmu {
            d.pmu_only_second.push(x.bus);
        }
        if !x.pmu && y.pmu {
            d.pmu_only_first.push(x.bus);
        }
    }
    Ok(d)
}

/// Cascade plus availability for one model and case of a network.
pub fn run_network(
    network: &JointNetwork,
    model: Model,
    case: CasePolicy,
    scenario: &FailureScenario,
) -> Result<(CascadeTrace, AvailabilityMask), CascadeError> {
    let rules = network
        .rule_set(model, case)
        .ok_or(CascadeError::MissingRuleSet { model, case })?;
    let trace = run_cascade(rules, &network.registry, scenario)?;
    let mask = data_availability(&trace.final_state(), network, rules)?;
    Ok((trace, mask))
}
