use std::collections::BTreeSet;
use std::fmt;

use crate::entity::EntityId;
use crate::idr::IdrError;
use crate::ternary::{Model, Operator};

/// Rule body: entity literals joined by n-ary operator nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(EntityId),
    Op(Operator, Vec<Expr>),
}

impl Expr {
    pub fn lit(id: EntityId) -> Self {
        Expr::Lit(id)
    }

    /// Join `children` under `op`. A single child is returned unchanged so
    /// generated rules never contain one-operand nodes.
    ///
    /// Panics on an empty child list.
    pub fn join(op: Operator, mut children: Vec<Expr>) -> Self {
        assert!(!children.is_empty(), "operator node needs operands");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Expr::Op(op, children)
        }
    }

    pub fn min_and(children: Vec<Expr>) -> Self {
        Self::join(Operator::MinAnd, children)
    }

    pub fn max_or(children: Vec<Expr>) -> Self {
        Self::join(Operator::MaxOr, children)
    }

    pub fn new_xor(children: Vec<Expr>) -> Self {
        Self::join(Operator::NewXor, children)
    }

    /// Every literal in the body, in order of appearance (with repeats).
    pub fn literals(&self) -> Vec<&EntityId> {
        let mut out = Vec::new();
        self.visit_literals(&mut |id| out.push(id));
        out
    }

    fn visit_literals<'a>(&'a self, f: &mut impl FnMut(&'a EntityId)) {
        match self {
            Expr::Lit(id) => f(id),
            Expr::Op(_, children) => children.iter().for_each(|c| c.visit_literals(f)),
        }
    }

    pub fn free_entities(&self) -> BTreeSet<EntityId> {
        self.literals().into_iter().cloned().collect()
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Lit(_) => 1,
            Expr::Op(_, children) => 1 + children.iter().map(Expr::node_count).sum::<usize>(),
        }
    }

    pub fn operators(&self) -> BTreeSet<Operator> {
        let mut out = BTreeSet::new();
        self.collect_ops(&mut out);
        out
    }

    fn collect_ops(&self, out: &mut BTreeSet<Operator>) {
        if let Expr::Op(op, children) = self {
            out.insert(*op);
            children.iter().for_each(|c| c.collect_ops(out));
        }
    }

    /// Rewrite every operator through `f`, keeping the tree shape.
    pub fn map_ops(&self, f: &impl Fn(Operator) -> Operator) -> Expr {
        match self {
            Expr::Lit(id) => Expr::Lit(id.clone()),
            Expr::Op(op, children) => Expr::Op(f(*op), children.iter().map(|c| c.map_ops(f)).collect()),
        }
    }

    /// Structural checks shared by the parser and hand-built rules.
    pub(crate) fn check(&self, model: Model) -> Result<(), IdrError> {
        match self {
            Expr::Lit(_) => Ok(()),
            Expr::Op(op, children) => {
                if children.len() < 2 {
                    return Err(IdrError::Arity {
                        op: op.symbol(),
                        pos: None,
                    });
                }
                if op.model() != model {
                    return Err(IdrError::ModelMismatch {
                        op: op.symbol(),
                        model,
                    });
                }
                children.iter().try_for_each(|c| c.check(model))
            }
        }
    }

    fn fmt_nested(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            Expr::Lit(id) => write!(f, "{id}"),
            Expr::Op(op, children) => {
                if nested {
                    f.write_str("(")?;
                }
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, " {} ", op.symbol())?;
                    }
                    c.fmt_nested(f, true)?;
                }
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_nested(f, false)
    }
}

/// One dependency relation: `target <- body`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IdrRule {
    pub target: EntityId,
    pub body: Expr,
    pub model: Model,
}

impl IdrRule {
    pub fn new(target: EntityId, body: Expr, model: Model) -> Result<Self, IdrError> {
        body.check(model)?;
        Ok(Self { target, body, model })
    }

    pub fn free_entities(&self) -> BTreeSet<EntityId> {
        self.body.free_entities()
    }

    /// Project a three-valued rule onto the binary model: min-AND and
    /// new_XOR become AND, max-OR becomes OR.
    pub fn translate_to_iim(&self) -> Result<IdrRule, IdrError> {
        if self.model == Model::Iim {
            return Err(IdrError::AlreadyBinary);
        }
        Ok(IdrRule {
            target: self.target.clone(),
            body: self.body.map_ops(&Operator::to_binary),
            model: Model::Iim,
        })
    }
}

impl fmt::Display for IdrRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- {}", self.target, self.body)
    }
}

/// Canonical text for `rule`. Nested operator nodes are always parenthesized.
pub fn format_idr(rule: &IdrRule) -> String {
    rule.to_string()
}

pub fn free_entities(rule: &IdrRule) -> BTreeSet<EntityId> {
    rule.free_entities()
}

pub fn translate_to_iim(rule: &IdrRule) -> Result<IdrRule, IdrError> {
    rule.translate_to_iim()
}
