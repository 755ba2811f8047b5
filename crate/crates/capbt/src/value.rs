//! Blackboard values and their semantic type tags.
//!
//! Everything a tree node can read or write through its parameters is a
//! [`Value`]. Data edges and IO bridges only connect slots whose declared
//! [`ValueType`] tags are identical.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A 2D pose in map meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64) -> Self {
        Pose { x, y }
    }

    /// Euclidean distance to another pose.
    pub fn distance(&self, other: &Pose) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.2}, {:.2})", self.x, self.y)
    }
}

/// A value stored on a tree blackboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(String),
    Pose(Pose),
    List(Vec<Value>),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Real(_) => ValueType::Real,
            Value::Bool(_) => ValueType::Bool,
            Value::Str(_) => ValueType::Str,
            Value::Pose(_) => ValueType::Pose,
            Value::List(_) => ValueType::List,
        }
    }

    pub fn as_pose(&self) -> Option<Pose> {
        match self {
            Value::Pose(p) => Some(*p),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

/// Semantic type tag for a parameter slot.
///
/// Lists are kept untyped at the tag level; element checks happen where a
/// consumer actually reads elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Int,
    Real,
    Bool,
    Str,
    Pose,
    List,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueType::Int => "int",
            ValueType::Real => "real",
            ValueType::Bool => "bool",
            ValueType::Str => "str",
            ValueType::Pose => "pose",
            ValueType::List => "list",
        };
        f.write_str(s)
    }
}
