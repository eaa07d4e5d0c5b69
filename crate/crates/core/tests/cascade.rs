use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;

use jointnet_core::cascade::{run_network, AvailabilityMask, CascadeEngine};
use jointnet_core::entity::View;
use jointnet_core::fixtures::ieee14_network;
use jointnet_core::{run_cascade, CascadeError, CasePolicy, EntityId, FailureScenario, JointNetwork, Model};

fn net14() -> &'static JointNetwork {
    static NET: OnceLock<JointNetwork> = OnceLock::new();
    NET.get_or_init(ieee14_network)
}

fn attack() -> FailureScenario {
    FailureScenario::new(
        "substation 6",
        ["P(12)", "C(1,1,6,6)", "C(1,2,6,6)"].map(|s| EntityId::parse(s).unwrap()),
    )
}

const COMBOS: [(Model, CasePolicy); 4] = [
    (Model::Miim, CasePolicy::Case1),
    (Model::Miim, CasePolicy::Case2),
    (Model::Iim, CasePolicy::Case1),
    (Model::Iim, CasePolicy::Case2),
];

#[test]
fn attack_trace_tsv() {
    let (trace, _) = run_network(net14(), Model::Miim, CasePolicy::Case1, &attack()).unwrap();
    assert_eq!(
        trace.to_tsv(),
        "step\tentity\tvalue\n\
         T1\tP(12)\t0\n\
         T1\tC(1,1,6,6)\t0\n\
         T1\tC(1,2,6,6)\t0\n\
         T2\tC(1,4,1,6)\t0\n\
         T2\tC(1,5,1,6)\t0\n\
         T3\tC(2,1,1,0)\t1\n\
         T3\tC(3,1,1,0)\t1\n"
    );
}

#[test]
fn binary_footprint_contains_three_valued_footprint() {
    for case in [CasePolicy::Case1, CasePolicy::Case2] {
        let (_, m) = run_network(net14(), Model::Miim, case, &attack()).unwrap();
        let (_, i) = run_network(net14(), Model::Iim, case, &attack()).unwrap();
        let a: BTreeSet<u32> = m.scada_lost().into_iter().collect();
        let b: BTreeSet<u32> = i.scada_lost().into_iter().collect();
        assert!(a.is_subset(&b) && a != b, "case {case}: {a:?} vs {b:?}");
    }
}

#[test]
fn pmu_only_where_placed() {
    let net = net14();
    for (model, case) in COMBOS {
        let mask = AvailabilityMask::full(net, model, case);
        for b in &mask.buses {
            let s = net.substation(net.substation_of_bus(b.bus).unwrap()).unwrap();
            assert_eq!(b.pmu, s.has_pmu(), "bus {}", b.bus);
            assert!(b.scada);
        }
    }
}

#[test]
fn empty_scenario_keeps_everything_up() {
    for (model, case) in COMBOS {
        let (trace, mask) = run_network(net14(), model, case, &FailureScenario::default()).unwrap();
        assert_eq!(trace.converged_at, 1);
        assert!(trace.final_levels().iter().all(|v| *v == model.full_level()));
        assert_eq!(mask, AvailabilityMask::full(net14(), model, case));
    }
}

#[test]
fn bad_kill_sets_are_rejected() {
    let rs = net14().rule_set(Model::Miim, CasePolicy::Case1).unwrap();
    let view = FailureScenario::new("", [EntityId::View(View::Scada, 1)]);
    assert!(matches!(
        run_cascade(rs, &net14().registry, &view),
        Err(CascadeError::KilledView(_))
    ));
    let unknown = FailureScenario::new("", [EntityId::Bus(99)]);
    assert!(matches!(
        run_cascade(rs, &net14().registry, &unknown),
        Err(CascadeError::UnknownKilled(_))
    ));
}

#[test]
fn mask_json_shape() {
    let (_, mask) = run_network(net14(), Model::Iim, CasePolicy::Case2, &attack()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&mask).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["model"], "iim");
    assert_eq!(v["buses"][10], serde_json::json!({"bus": 11, "scada": false, "pmu": false}));
    let back: AvailabilityMask = serde_json::from_value(v).unwrap();
    assert_eq!(back, mask);
}

fn kill_set() -> impl Strategy<Value = Vec<EntityId>> {
    let pool: Vec<EntityId> = net14().cascade_entities().cloned().collect();
    proptest::sample::subsequence(pool.clone(), 0..=10).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_cascades_behave(killed in kill_set(), combo in 0usize..4, seed in any::<u64>()) {
        let net = net14();
        let (model, case) = COMBOS[combo];
        let rs = net.rule_set(model, case).unwrap();
        let scenario = FailureScenario::new("random", killed.clone());
        let engine = CascadeEngine::new(rs, &net.registry).unwrap();
        let trace = engine.run(&scenario).unwrap();

        prop_assert!(trace.steps.len() <= 2 * engine.entities().len());
        for w in trace.steps.windows(2) {
            prop_assert!(w[1].iter().zip(&w[0]).all(|(b, a)| b <= a));
        }
        prop_assert!(engine.is_fixpoint(trace.final_levels(), &scenario));
        let state = trace.final_state();
        for k in &killed {
            prop_assert_eq!(state[k], 0);
        }

        // rotate the rule list by a seed-dependent amount
        let mut other = rs.clone();
        let n = other.rules.len();
        other.rules.rotate_left((seed % n as u64) as usize);
        other.rules.reverse();
        let again = run_cascade(&other, &net.registry, &scenario).unwrap();
        prop_assert_eq!(&again.steps, &trace.steps);
    }

    #[test]
    fn more_damage_never_helps(killed in kill_set(), extra in kill_set()) {
        let net = net14();
        let small = FailureScenario::new("a", killed.clone());
        let big = FailureScenario::new("b", killed.into_iter().chain(extra));
        for (model, case) in COMBOS {
            let (ta, ma) = run_network(net, model, case, &small).unwrap();
            let (tb, mb) = run_network(net, model, case, &big).unwrap();
            prop_assert!(tb.final_levels().iter().zip(ta.final_levels()).all(|(b, a)| b <= a));
            let la: BTreeSet<u32> = ma.scada_lost().into_iter().collect();
            let lb: BTreeSet<u32> = mb.scada_lost().into_iter().collect();
            prop_assert!(la.is_subset(&lb));
        }
    }
}
