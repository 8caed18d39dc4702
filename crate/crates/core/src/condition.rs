//! Forcing conditions: finite partial functions and iteration sequences.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{Map, Value};

use crate::hf::GroundValue;

/// A (stage, copy) coordinate of a product or iteration.
pub type Coord = (usize, usize);

/// A finite partial map on naturals, sorted by key.
pub type PartialMap = Vec<(u32, u32)>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// The single condition of the trivial poset.
    Trivial,
    Cohen(PartialMap),
    Collapse(PartialMap),
    /// Finite-support product cell: copy index to inner condition.
    Product(Vec<(u32, Condition)>),
    Iter(IterCondition),
}

/// A condition of a finite-support iteration: a ground condition for the first
/// stage followed by one case-split stage term per later stage.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IterCondition {
    pub base: Box<Condition>,
    pub stages: Vec<StageTerm>,
}

/// A name for a stage object, given by its value on each block of generics of
/// the preceding stage. A term whose blocks all agree is a check-name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct StageTerm<T = Condition> {
    pub blocks: Vec<T>,
}

impl<T: Clone + PartialEq> StageTerm<T> {
    pub fn constant(value: T, nblocks: usize) -> Self {
        StageTerm { blocks: vec![value; nblocks] }
    }

    pub fn is_constant(&self) -> bool {
        self.blocks.windows(2).all(|w| w[0] == w[1])
    }

    pub fn at(&self, block: usize) -> &T {
        &self.blocks[block]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> StageTerm<U> {
        StageTerm { blocks: self.blocks.iter().map(f).collect() }
    }

    pub fn zip_with<U: Clone, V>(&self, other: &StageTerm<U>, f: impl Fn(&T, &U) -> V) -> StageTerm<V> {
        StageTerm {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl Condition {
    pub fn is_top(&self) -> bool {
        match self {
            Condition::Trivial => true,
            Condition::Cohen(m) | Condition::Collapse(m) => m.is_empty(),
            Condition::Product(cells) => cells.is_empty(),
            Condition::Iter(c) => c.base.is_top() && c.stages.iter().all(|t| t.blocks.iter().all(|b| b.is_top())),
        }
    }

    /// Copies in the domain of a product cell.
    pub fn product_domain(&self) -> BTreeSet<usize> {
        match self {
            Condition::Product(cells) => cells.iter().map(|(n, _)| *n as usize).collect(),
            _ => BTreeSet::new(),
        }
    }

    pub fn product_cell(&self, copy: usize) -> Option<&Condition> {
        match self {
            Condition::Product(cells) => cells
                .binary_search_by_key(&(copy as u32), |(n, _)| *n)
                .ok()
                .map(|i| &cells[i].1),
            _ => None,
        }
    }

    /// Every (stage, copy) index mentioned by the condition.
    pub fn coords(&self) -> BTreeSet<Coord> {
        match self {
            Condition::Product(_) => self.product_domain().into_iter().map(|n| (0, n)).collect(),
            Condition::Iter(c) => {
                let mut out = c.base.coords();
                for (i, term) in c.stages.iter().enumerate() {
                    for obj in &term.blocks {
                        out.extend(obj.product_domain().into_iter().map(|n| (i + 1, n)));
                    }
                }
                out
            }
            _ => BTreeSet::new(),
        }
    }

    /// Apply a permutation of copies to a product cell: `dom π(q) = π″dom q`.
    pub fn permute_copies(&self, perm: &crate::perm::CoordPerm) -> Condition {
        match self {
            Condition::Product(cells) => {
                let mut out: Vec<(u32, Condition)> = cells
                    .iter()
                    .map(|(n, c)| (perm.apply(*n as usize) as u32, c.clone()))
                    .collect();
                out.sort();
                Condition::Product(out)
            }
            other => other.clone(),
        }
    }

    /// Ground encoding used for check-names of conditions.
    pub fn encode(&self) -> GroundValue {
        let map = |m: &PartialMap| {
            GroundValue::partial_map(m.iter().map(|(k, v)| (*k as usize, GroundValue::nat(*v as usize))))
        };
        match self {
            Condition::Trivial => GroundValue::empty(),
            Condition::Cohen(m) | Condition::Collapse(m) => map(m),
            Condition::Product(cells) => {
                GroundValue::partial_map(cells.iter().map(|(n, c)| (*n as usize, c.encode())))
            }
            Condition::Iter(c) => {
                let mut items = vec![c.base.encode()];
                items.extend(
                    c.stages
                        .iter()
                        .map(|t| GroundValue::tuple(t.blocks.iter().map(Condition::encode))),
                );
                GroundValue::tuple(items)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let map = |m: &PartialMap| {
            Value::Object(m.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect::<Map<_, _>>())
        };
        match self {
            Condition::Trivial => Value::Object(Map::new()),
            Condition::Cohen(m) | Condition::Collapse(m) => map(m),
            Condition::Product(cells) => Value::Object(
                cells.iter().map(|(n, c)| (n.to_string(), c.to_json())).collect::<Map<_, _>>(),
            ),
            Condition::Iter(c) => serde_json::json!({
                "base": c.base.to_json(),
                "stages": c.stages.iter()
                    .map(|t| Value::Array(t.blocks.iter().map(Condition::to_json).collect()))
                    .collect::<Vec<_>>(),
            }),
        }
    }
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let map = |f: &mut fmt::Formatter<'_>, m: &PartialMap| {
            write!(f, "{{")?;
            for (i, (k, v)) in m.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{k}:{v}")?;
            }
            write!(f, "}}")
        };
        match self {
            Condition::Trivial => write!(f, "1"),
            Condition::Cohen(m) | Condition::Collapse(m) => map(f, m),
            Condition::Product(cells) => {
                write!(f, "[")?;
                for (i, (n, c)) in cells.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{n}={c}")?;
                }
                write!(f, "]")
            }
            Condition::Iter(c) => {
                write!(f, "<{}", c.base)?;
                for t in &c.stages {
                    if t.is_constant() {
                        write!(f, " ; {}", t.blocks[0])?;
                    } else {
                        write!(f, " ; (")?;
                        for (i, b) in t.blocks.iter().enumerate() {
                            if i > 0 {
                                write!(f, "|")?;
                            }
                            write!(f, "{b}")?;
                        }
                        write!(f, ")")?;
                    }
                }
                write!(f, ">")
            }
        }
    }
}
