use crate::entity::{EntityId, View};
use crate::idr::{Expr, IdrRule};
use crate::network::{CasePolicy, JointNetwork, Ring, RuleSet, Substation};
use crate::synthesis::SynthesisError;
use crate::ternary::Model;

fn lit(id: EntityId) -> Expr {
    Expr::Lit(id)
}

fn pair(a: EntityId, b: EntityId) -> Expr {
    Expr::min_and(vec![lit(a), lit(b)])
}

/// Ring node `k` of ring type `ty` (2 = SONET, 3 = DWDM).
fn node(ty: u32, k: u32) -> EntityId {
    EntityId::comm(ty, 1, k, 0)
}

fn cable(ty: u32, k: u32, s: u32) -> EntityId {
    if ty == 2 {
        EntityId::sonet_cable(k, s)
    } else {
        EntityId::dwdm_cable(k, s)
    }
}

fn sorted_buses(s: &Substation) -> Vec<u32> {
    let mut b = s.buses.clone();
    b.sort();
    b
}

/// `(P(b) & L(bus_family,b)) | ... | (PB(s) & L(battery_family,s))`.
fn power(s: &Substation, bus_family: u32, battery_family: u32) -> Expr {
    let mut terms: Vec<Expr> = sorted_buses(s)
        .into_iter()
        .map(|b| pair(EntityId::Bus(b), EntityId::link(bus_family, b)))
        .collect();
    terms.push(pair(EntityId::Battery(s.id), EntityId::link(battery_family, s.id)));
    Expr::max_or(terms)
}

/// Device power: any bus of the substation, or its battery.
fn device_power(s: &Substation) -> Expr {
    let mut terms: Vec<Expr> = sorted_buses(s).into_iter().map(|b| lit(EntityId::Bus(b))).collect();
    terms.push(lit(EntityId::Battery(s.id)));
    Expr::max_or(terms)
}

/// Ring nodes a gateway is cabled to.
fn linked_nodes(ring: &Ring, s: &Substation) -> Vec<u32> {
    if s.is_control_center() {
        (1..=ring.len()).collect()
    } else {
        vec![ring.homing[&s.id]]
    }
}

/// `|` over the gateway's cables of `(node & cable)`.
fn ring_path(ring: &Ring, ty: u32, s: &Substation) -> Expr {
    Expr::max_or(
        linked_nodes(ring, s)
            .into_iter()
            .map(|k| pair(node(ty, k), cable(ty, k, s.id)))
            .collect(),
    )
}

fn ring_node_rules(net: &JointNetwork, ring: &Ring, ty: u32, family: u32, out: &mut Vec<(EntityId, Expr)>) {
    let ccs = [net.primary_cc(), net.backup_cc()];
    let mut feed_index = 0;
    for k in 1..=ring.len() {
        let neighbours: Vec<Expr> = ring
            .neighbours(k)
            .into_iter()
            .map(|(n, (y, z))| pair(node(ty, n), EntityId::comm(ty, 2, y, z)))
            .collect();
        let direct: Vec<Expr> = ccs
            .iter()
            .flatten()
            .map(|cc| pair(EntityId::gateway(*cc), cable(ty, k, *cc)))
            .collect();
        let reach = Expr::max_or(vec![Expr::max_or(neighbours), Expr::max_or(direct)]);
        let sources: Vec<Expr> = ring
            .homing
            .iter()
            .filter(|(_, n)| **n == k)
            .map(|(s, _)| lit(cable(ty, k, *s)))
            .collect();
        let feeds: Vec<Expr> = ring.feeds[&k]
            .iter()
            .map(|(_, b)| {
                feed_index += 1;
                pair(EntityId::Bus(*b), EntityId::link(family, feed_index))
            })
            .collect();
        out.push((node(ty, k), Expr::min_and(vec![reach, Expr::new_xor(sources), Expr::max_or(feeds)])));
    }
}

/// Emit every rule of one model and case, sorted by target.
pub fn generate_idrs(net: &JointNetwork, model: Model, case: CasePolicy) -> Result<RuleSet, SynthesisError> {
    let mut out: Vec<(EntityId, Expr)> = Vec::new();

    ring_node_rules(net, &net.sonet, 2, 3, &mut out);
    ring_node_rules(net, &net.dwdm, 3, 4, &mut out);

    for s in &net.substations {
        let (server, gateway, lan) = (EntityId::server(s.id), EntityId::gateway(s.id), EntityId::lan(s.id));
        out.push((
            server.clone(),
            Expr::min_and(vec![pair(gateway.clone(), lan.clone()), power(s, 1, 5)]),
        ));
        out.push((
            gateway.clone(),
            Expr::min_and(vec![pair(server.clone(), lan.clone()), power(s, 2, 6)]),
        ));
        for k in linked_nodes(&net.sonet, s) {
            out.push((EntityId::sonet_cable(k, s.id), lit(gateway.clone())));
        }
        for k in linked_nodes(&net.dwdm, s) {
            out.push((EntityId::dwdm_cable(k, s.id), lit(gateway.clone())));
        }
        out.push((EntityId::Rtu(s.id), device_power(s)));

        let pmus: Vec<u32> = net.pmus.iter().filter(|(_, h)| **h == s.id).map(|(k, _)| *k).collect();
        for k in &pmus {
            out.push((EntityId::Pmu(*k), device_power(s)));
        }

        // data views
        let local = vec![lit(gateway.clone()), pair(server.clone(), lan.clone())];
        let sadm_path = ring_path(&net.sonet, 2, s);
        let oadm_path = ring_path(&net.dwdm, 3, s);
        let rtu_term = pair(EntityId::Rtu(s.id), EntityId::rtu_channel(s.id, s.id));
        let scada_path = match case {
            CasePolicy::Case1 => sadm_path,
            CasePolicy::Case2 => Expr::max_or(vec![sadm_path, oadm_path.clone()]),
        };
        let mut scada = local.clone();
        scada.push(Expr::min_and(vec![rtu_term, scada_path]));
        scada.push(power(s, 2, 6));
        out.push((EntityId::View(View::Scada, s.id), Expr::min_and(scada)));

        let scada_lit = lit(EntityId::View(View::Scada, s.id));
        if pmus.is_empty() {
            out.push((EntityId::View(View::Data, s.id), scada_lit));
        } else {
            let pmu_term = Expr::new_xor(
                pmus.iter()
                    .map(|k| pair(EntityId::Pmu(*k), EntityId::pmu_channel(*k, s.id)))
                    .collect(),
            );
            let mut pmu = local;
            pmu.push(Expr::min_and(vec![pmu_term, oadm_path]));
            pmu.push(power(s, 2, 6));
            out.push((EntityId::View(View::Pmu, s.id), Expr::min_and(pmu)));
            out.push((
                EntityId::View(View::Data, s.id),
                Expr::new_xor(vec![scada_lit, lit(EntityId::View(View::Pmu, s.id))]),
            ));
        }
    }

    out.sort_by(|a, b| a.0.cmp(&b.0));
    let rules = out
        .into_iter()
        .map(|(target, body)| {
            let rule = IdrRule::new(target, body, Model::Miim)?;
            match model {
                Model::Miim => Ok(rule),
                Model::Iim => rule.translate_to_iim(),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RuleSet { model, case, rules })
}
