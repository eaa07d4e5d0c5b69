use std::collections::{BTreeMap, HashMap};

use crate::entity::EntityId;
use crate::idr::ast::Expr;
use crate::idr::IdrError;
use crate::ternary::Level;

/// Source of entity levels for evaluation.
pub trait StateLookup<V> {
    fn level_of(&self, id: &EntityId) -> Option<V>;
}

impl<V: Copy> StateLookup<V> for BTreeMap<EntityId, V> {
    fn level_of(&self, id: &EntityId) -> Option<V> {
        self.get(id).copied()
    }
}

impl<V: Copy> StateLookup<V> for HashMap<EntityId, V> {
    fn level_of(&self, id: &EntityId) -> Option<V> {
        self.get(id).copied()
    }
}

impl<V, F: Fn(&EntityId) -> Option<V>> StateLookup<V> for F {
    fn level_of(&self, id: &EntityId) -> Option<V> {
        self(id)
    }
}

/// Bottom-up evaluation of `expr` against `state`.
pub fn evaluate<V: Level>(expr: &Expr, state: &impl StateLookup<V>) -> Result<V, IdrError> {
    match expr {
        Expr::Lit(id) => state
            .level_of(id)
            .ok_or_else(|| IdrError::UnknownEntity(id.clone())),
        Expr::Op(op, children) => {
            let operands = children
                .iter()
                .map(|c| evaluate(c, state))
                .collect::<Result<Vec<V>, _>>()?;
            match V::apply(*op, &operands) {
                Some(r) => r.map_err(IdrError::from),
                None => Err(IdrError::ModelMismatch {
                    op: op.symbol(),
                    model: V::MODEL,
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idr::parse_idr;
    use crate::ternary::{BinaryValue, TernaryValue};

    const RING_RULE: &str = "C(2,1,1,0) <- (C(2,1,2,0) & C(2,2,1,2)) | (C(2,1,6,0) & C(2,2,1,6))";

    fn state(pairs: &[(&str, u8)]) -> BTreeMap<EntityId, TernaryValue> {
        pairs
            .iter()
            .map(|(k, v)| (EntityId::parse(k).unwrap(), TernaryValue::new(*v).unwrap()))
            .collect()
    }

    #[test]
    fn ring_rule_values() {
        let rule = parse_idr(RING_RULE).unwrap();
        let all = state(&[("C(2,1,2,0)", 2), ("C(2,2,1,2)", 2), ("C(2,1,6,0)", 2), ("C(2,2,1,6)", 2)]);
        assert_eq!(evaluate(&rule.body, &all).unwrap(), TernaryValue::FULL);
        // max_or(min_and(0,2), min_and(2,2)) = 2
        let one_down = state(&[("C(2,1,2,0)", 0), ("C(2,2,1,2)", 2), ("C(2,1,6,0)", 2), ("C(2,2,1,6)", 2)]);
        assert_eq!(evaluate(&rule.body, &one_down).unwrap(), TernaryValue::FULL);
    }

    #[test]
    fn six_way_new_xor_with_one_failure() {
        let rule = parse_idr(
            "C(2,1,1,0) <- C(1,4,1,2) ^ C(1,4,1,6) ^ C(1,4,1,7) ^ C(1,4,1,8) ^ C(1,4,1,9) ^ C(1,4,1,11)",
        )
        .unwrap();
        let st = state(&[
            ("C(1,4,1,2)", 2),
            ("C(1,4,1,6)", 0),
            ("C(1,4,1,7)", 2),
            ("C(1,4,1,8)", 2),
            ("C(1,4,1,9)", 2),
            ("C(1,4,1,11)", 2),
        ]);
        assert_eq!(evaluate(&rule.body, &st).unwrap(), TernaryValue::REDUCED);
    }

    #[test]
    fn unknown_entity_is_named() {
        let rule = parse_idr("A <- P(1) & P(2)").unwrap();
        let st = state(&[("P(1)", 2)]);
        match evaluate(&rule.body, &st) {
            Err(IdrError::UnknownEntity(id)) => assert_eq!(id, EntityId::Bus(2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn domain_mismatch() {
        let rule = parse_idr("A <- P(1) & P(2)").unwrap();
        let st: BTreeMap<EntityId, BinaryValue> =
            [(EntityId::Bus(1), BinaryValue::ON), (EntityId::Bus(2), BinaryValue::ON)].into();
        assert!(matches!(evaluate(&rule.body, &st), Err(IdrError::ModelMismatch { .. })));
        let iim = rule.translate_to_iim().unwrap();
        assert_eq!(evaluate(&iim.body, &st).unwrap(), BinaryValue::ON);
    }

    #[test]
    fn closure_lookup() {
        let rule = parse_idr("A <- P(1) | P(2)").unwrap();
        let f = |id: &EntityId| match id {
            EntityId::Bus(1) => Some(TernaryValue::NONE),
            _ => Some(TernaryValue::REDUCED),
        };
        assert_eq!(evaluate(&rule.body, &f).unwrap(), TernaryValue::REDUCED);
    }
}
