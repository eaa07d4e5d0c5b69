use std::collections::{BTreeMap, BTreeSet};

use jointnet_core::entity::View;
use jointnet_core::fixtures::{ieee118_network, ieee14_config, ieee14_grid, ieee14_network};
use jointnet_core::idr::evaluate;
use jointnet_core::idr::{format_idr_file, parse_idr_as, parse_idr_file};
use jointnet_core::synthesis::{all_pairs_shortest, group_substations};
use jointnet_core::{
    synthesize, BinaryValue, CasePolicy, EntityId, JointNetwork, Model, SubstationRole, SynthesisConfig, TernaryValue,
    Violation,
};

const SADM_1: &str = "C(2,1,1,0) <- (((C(2,1,2,0) & C(2,2,1,2)) | (C(2,1,6,0) & C(2,2,1,6))) | ((C(1,2,2,2) & C(1,4,1,2)) | (C(1,2,1,1) & C(1,4,1,1)))) & (C(1,4,1,2) ^ C(1,4,1,6) ^ C(1,4,1,7) ^ C(1,4,1,8) ^ C(1,4,1,9) ^ C(1,4,1,11)) & ((P(4) & L(3,1)) | (P(7) & L(3,2)) | (P(9) & L(3,3)) | (P(5) & L(3,4)) | (P(6) & L(3,5)) | (P(12) & L(3,6)) | (P(13) & L(3,7)) | (P(14) & L(3,8)) | (P(11) & L(3,9)) | (P(10) & L(3,10)))";

fn networks() -> [JointNetwork; 2] {
    [ieee14_network(), ieee118_network()]
}

#[test]
fn fixture_sizes() {
    let g = ieee14_grid();
    assert_eq!((g.buses.len(), g.branches.len()), (14, 20));
    let net = ieee118_network();
    assert_eq!((net.grid.buses.len(), net.grid.branches.len()), (118, 186));
}

#[test]
fn sadm_1_rule_text() {
    let net = ieee14_network();
    let rs = net.rule_set(Model::Miim, CasePolicy::Case1).unwrap();
    assert_eq!(rs.get(&EntityId::sadm(1)).unwrap().to_string(), SADM_1);
}

#[test]
fn substation_one_holds_buses_4_7_9() {
    let net = ieee14_network();
    assert_eq!(net.substation(1).unwrap().buses, vec![4, 7, 9]);
    assert_eq!(net.substation_of_bus(12), Some(6));
    assert_eq!(net.substation(2).unwrap().role, SubstationRole::PrimaryCc);
    assert_eq!(net.substation(1).unwrap().role, SubstationRole::BackupCc);
}

#[test]
fn synthesis_is_deterministic() {
    let (g, c) = (ieee14_grid(), ieee14_config());
    let a = synthesize(&g, &c).unwrap();
    let b = synthesize(&g, &c).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    for (x, y) in a.rule_sets.iter().zip(&b.rule_sets) {
        assert_eq!(
            format_idr_file(&x.rules, x.model, ""),
            format_idr_file(&y.rules, y.model, "")
        );
    }
}

#[test]
fn every_rule_is_full_when_everything_works() {
    for net in networks() {
        for rs in &net.rule_sets {
            for r in &rs.rules {
                match rs.model {
                    Model::Miim => {
                        let v: TernaryValue = evaluate(&r.body, &|_: &EntityId| Some(TernaryValue::FULL)).unwrap();
                        assert_eq!(v, TernaryValue::FULL, "{}", r.target);
                    }
                    Model::Iim => {
                        let v: BinaryValue = evaluate(&r.body, &|_: &EntityId| Some(BinaryValue::ON)).unwrap();
                        assert_eq!(v, BinaryValue::ON, "{}", r.target);
                    }
                }
            }
        }
    }
}

#[test]
fn cases_differ_only_in_scada_views() {
    for net in networks() {
        for model in [Model::Miim, Model::Iim] {
            let one = net.rule_set(model, CasePolicy::Case1).unwrap();
            let two = net.rule_set(model, CasePolicy::Case2).unwrap();
            let a: BTreeMap<_, _> = one.rules.iter().map(|r| (&r.target, &r.body)).collect();
            let b: BTreeMap<_, _> = two.rules.iter().map(|r| (&r.target, &r.body)).collect();
            assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
            let differing: Vec<&EntityId> = a.keys().filter(|k| a[*k] != b[*k]).copied().collect();
            assert!(!differing.is_empty());
            for t in differing {
                assert!(matches!(t, EntityId::View(View::Scada, _)), "{t} differs between cases");
            }
        }
    }
}

#[test]
fn generated_rules_round_trip() {
    for net in networks() {
        for rs in &net.rule_sets {
            for r in &rs.rules {
                assert_eq!(&parse_idr_as(&r.to_string(), rs.model).unwrap(), r);
            }
            let file = format_idr_file(&rs.rules, rs.model, "header");
            assert_eq!(parse_idr_file(&file).unwrap(), rs.rules);
        }
    }
}

#[test]
fn iim_rules_keep_tree_shape() {
    let net = ieee14_network();
    let miim = net.rule_set(Model::Miim, CasePolicy::Case1).unwrap();
    let iim = net.rule_set(Model::Iim, CasePolicy::Case1).unwrap();
    for (a, b) in miim.rules.iter().zip(&iim.rules) {
        assert_eq!(a.target, b.target);
        assert_eq!(a.body.node_count(), b.body.node_count());
        assert_eq!(a.body.literals(), b.body.literals());
    }
}

#[test]
fn registry_closure_and_devices() {
    for net in networks() {
        assert!(net.validate().is_empty(), "{:?}", net.validate());
        for rs in &net.rule_sets {
            for r in &rs.rules {
                for e in r.free_entities() {
                    assert!(net.registry.contains_key(&e), "{e} in rule for {}", r.target);
                }
            }
        }
        for s in &net.substations {
            for id in [
                EntityId::server(s.id),
                EntityId::gateway(s.id),
                EntityId::lan(s.id),
                EntityId::Battery(s.id),
                EntityId::Rtu(s.id),
            ] {
                assert!(net.registry.contains_key(&id), "{id}");
            }
            let pmus = net.pmus.values().filter(|h| **h == s.id).count();
            assert_eq!(pmus as u32, s.pmu_count, "S{}", s.id);
        }
    }
}

#[test]
fn every_bus_in_exactly_one_substation() {
    for net in networks() {
        let mut seen = BTreeSet::new();
        for s in &net.substations {
            for b in &s.buses {
                assert!(seen.insert(*b), "bus {b} twice");
            }
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), net.grid.bus_ids());
    }
}

#[test]
fn distances_are_a_metric() {
    let g = ieee14_grid();
    let subs = group_substations(&g, &ieee14_config()).unwrap();
    let d = all_pairs_shortest(&g, &subs).unwrap();
    let ids: Vec<u32> = subs.iter().map(|s| s.id).collect();
    for &a in &ids {
        assert_eq!(d.between(a, a), 0.0);
        for &b in &ids {
            assert_eq!(d.between(a, b), d.between(b, a));
            for &c in &ids {
                assert!(d.between(a, c) <= d.between(a, b) + d.between(b, c) + 1e-9);
            }
        }
    }
}

#[test]
fn validate_reports_unknown_entity() {
    let mut net = ieee14_network();
    let rs = &mut net.rule_sets[0];
    let model = rs.model;
    let i = rs.rules.iter().position(|r| r.target == EntityId::Rtu(3)).unwrap();
    let text = format!("R(3) <- P(99) {} PB(3)", if model == Model::Miim { "|" } else { "+" });
    rs.rules[i] = parse_idr_as(&text, model).unwrap();
    let v = net.validate();
    assert!(v.contains(&Violation::UnknownEntity {
        rule: EntityId::Rtu(3),
        entity: EntityId::Bus(99)
    }));
    assert!(v.iter().any(|x| x.to_string().contains("P(99)")));
}

#[test]
fn validate_reports_two_primary_control_centers() {
    let mut net = ieee14_network();
    net.substations.iter_mut().find(|s| s.id == 1).unwrap().role = SubstationRole::PrimaryCc;
    assert!(net.validate().contains(&Violation::ControlCenterCardinality { primary: 2, backup: 0 }));
}

#[test]
fn explicit_control_centers_are_honoured() {
    // no homing overrides: they name hosts of the default ring
    let cfg = SynthesisConfig {
        control_centers: Some([5, 3]),
        ..SynthesisConfig::default()
    };
    let net = synthesize(&ieee14_grid(), &cfg).unwrap();
    assert_eq!((net.primary_cc(), net.backup_cc()), (Some(5), Some(3)));
    assert!(net.validate().is_empty());
}

#[test]
fn config_rejects_unknown_fields_and_buses() {
    assert!(SynthesisConfig::from_json_str(r#"{"case_policy": 1}"#).is_err());
    let cfg = SynthesisConfig::from_json_str(r#"{"pmu_substations": [99]}"#).unwrap();
    assert!(synthesize(&ieee14_grid(), &cfg).is_err());
}

#[test]
fn network_json_round_trips() {
    let net = ieee14_network();
    let text = serde_json::to_string(&net).unwrap();
    let back: JointNetwork = serde_json::from_str(&text).unwrap();
    assert_eq!(back, net);
}
