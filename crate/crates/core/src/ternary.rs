//! Operational levels and the logic operators used by dependency rules.
//!
//! The three-valued model assigns every entity one of `0` (not operating),
//! `1` (reduced operation) or `2` (full operation). The binary model it
//! refines only knows `0` and `1`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("empty operand list")]
    EmptyOperands,
    #[error("level {0} is out of range for this value domain")]
    OutOfRange(u8),
}

/// A three-valued operational level, totally ordered `0 < 1 < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TernaryValue(u8);

impl TernaryValue {
    pub const NONE: Self = Self(0);
    pub const REDUCED: Self = Self(1);
    pub const FULL: Self = Self(2);

    pub fn new(level: u8) -> Result<Self, LogicError> {
        if level <= 2 {
            Ok(Self(level))
        } else {
            Err(LogicError::OutOfRange(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    /// Collapse onto the binary domain: anything still running counts as operational.
    pub fn to_binary(self) -> BinaryValue {
        if self.0 == 0 {
            BinaryValue::OFF
        } else {
            BinaryValue::ON
        }
    }

    pub fn all() -> [Self; 3] {
        [Self(0), Self(1), Self(2)]
    }
}

impl TryFrom<u8> for TernaryValue {
    type Error = LogicError;
    fn try_from(level: u8) -> Result<Self, Self::Error> {
        Self::new(level)
    }
}

impl From<TernaryValue> for u8 {
    fn from(v: TernaryValue) -> u8 {
        v.0
    }
}

impl fmt::Display for TernaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A binary operational level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct BinaryValue(u8);

impl BinaryValue {
    pub const OFF: Self = Self(0);
    pub const ON: Self = Self(1);

    pub fn new(level: u8) -> Result<Self, LogicError> {
        if level <= 1 {
            Ok(Self(level))
        } else {
            Err(LogicError::OutOfRange(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn is_on(self) -> bool {
        self.0 == 1
    }

    pub fn all() -> [Self; 2] {
        [Self(0), Self(1)]
    }
}

impl TryFrom<u8> for BinaryValue {
    type Error = LogicError;
    fn try_from(level: u8) -> Result<Self, Self::Error> {
        Self::new(level)
    }
}

impl From<BinaryValue> for u8 {
    fn from(v: BinaryValue) -> u8 {
        v.0
    }
}

impl fmt::Display for BinaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// min-AND: the lowest input.
pub fn min_and(a: TernaryValue, b: TernaryValue) -> TernaryValue {
    a.min(b)
}

/// max-OR: the highest input.
pub fn max_or(a: TernaryValue, b: TernaryValue) -> TernaryValue {
    a.max(b)
}

/// n-ary min-AND. Empty input is an error since there is no identity worth guessing.
pub fn min_and_all<I>(values: I) -> Result<TernaryValue, LogicError>
where
    I: IntoIterator<Item = TernaryValue>,
{
    values
        .into_iter()
        .reduce(min_and)
        .ok_or(LogicError::EmptyOperands)
}

pub fn max_or_all<I>(values: I) -> Result<TernaryValue, LogicError>
where
    I: IntoIterator<Item = TernaryValue>,
{
    values
        .into_iter()
        .reduce(max_or)
        .ok_or(LogicError::EmptyOperands)
}

/// new_XOR: if every input is the same level that level passes through,
/// otherwise the result is reduced operation (`1`).
pub fn new_xor<I>(values: I) -> Result<TernaryValue, LogicError>
where
    I: IntoIterator<Item = TernaryValue>,
{
    let mut iter = values.into_iter();
    let first = iter.next().ok_or(LogicError::EmptyOperands)?;
    if iter.all(|v| v == first) {
        Ok(first)
    } else {
        Ok(TernaryValue::REDUCED)
    }
}

pub fn binary_and(a: BinaryValue, b: BinaryValue) -> BinaryValue {
    BinaryValue(a.0 & b.0)
}

pub fn binary_or(a: BinaryValue, b: BinaryValue) -> BinaryValue {
    BinaryValue(a.0 | b.0)
}

/// Logic operators that can appear in a rule body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    MinAnd,
    MaxOr,
    NewXor,
    BoolAnd,
    BoolOr,
}

impl Operator {
    pub fn model(self) -> Model {
        match self {
            Operator::MinAnd | Operator::MaxOr | Operator::NewXor => Model::Miim,
            Operator::BoolAnd | Operator::BoolOr => Model::Iim,
        }
    }

    /// Concrete syntax symbol.
    pub fn symbol(self) -> char {
        match self {
            Operator::MinAnd => '&',
            Operator::MaxOr => '|',
            Operator::NewXor => '^',
            Operator::BoolAnd => '.',
            Operator::BoolOr => '+',
        }
    }

    /// Binary counterpart used when projecting a three-valued rule onto the binary model.
    pub fn to_binary(self) -> Operator {
        match self {
            Operator::MinAnd | Operator::NewXor | Operator::BoolAnd => Operator::BoolAnd,
            Operator::MaxOr | Operator::BoolOr => Operator::BoolOr,
        }
    }
}

/// Which interdependency model a rule or state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Three-valued model (levels 0, 1, 2).
    Miim,
    /// Binary model (levels 0, 1).
    Iim,
}

impl Model {
    pub fn full_level(self) -> u8 {
        match self {
            Model::Miim => 2,
            Model::Iim => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Miim => "miim",
            Model::Iim => "iim",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "miim" => Ok(Model::Miim),
            "iim" => Ok(Model::Iim),
            other => Err(format!("unknown model '{other}' (expected miim or iim)")),
        }
    }
}

/// A value domain the rule evaluator can work over.
pub trait Level: Copy + Ord + fmt::Debug {
    const MODEL: Model;
    fn full() -> Self;
    fn zero() -> Self;
    fn level(self) -> u8;
    fn from_level(level: u8) -> Result<Self, LogicError>;
    /// Apply `op` to a non-empty operand list. Operators of the other model
    /// return `None`.
    fn apply(op: Operator, operands: &[Self]) -> Option<Result<Self, LogicError>>;
}

impl Level for TernaryValue {
    const MODEL: Model = Model::Miim;

    fn full() -> Self {
        TernaryValue::FULL
    }
    fn zero() -> Self {
        TernaryValue::NONE
    }
    fn level(self) -> u8 {
        self.0
    }
    fn from_level(level: u8) -> Result<Self, LogicError> {
        TernaryValue::new(level)
    }
    fn apply(op: Operator, operands: &[Self]) -> Option<Result<Self, LogicError>> {
        let it = operands.iter().copied();
        match op {
            Operator::MinAnd => Some(min_and_all(it)),
            Operator::MaxOr => Some(max_or_all(it)),
            Operator::NewXor => Some(new_xor(it)),
            Operator::BoolAnd | Operator::BoolOr => None,
        }
    }
}

impl Level for BinaryValue {
    const MODEL: Model = Model::Iim;

    fn full() -> Self {
        BinaryValue::ON
    }
    fn zero() -> Self {
        BinaryValue::OFF
    }
    fn level(self) -> u8 {
        self.0
    }
    fn from_level(level: u8) -> Result<Self, LogicError> {
        BinaryValue::new(level)
    }
    fn apply(op: Operator, operands: &[Self]) -> Option<Result<Self, LogicError>> {
        let it = operands.iter().copied();
        match op {
            Operator::BoolAnd => Some(it.reduce(binary_and).ok_or(LogicError::EmptyOperands)),
            Operator::BoolOr => Some(it.reduce(binary_or).ok_or(LogicError::EmptyOperands)),
            _ => None,
        }
    }
}
