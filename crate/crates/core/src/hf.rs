//! Hereditarily finite sets in extensional normal form.
//!
//! A [`GroundValue`] keeps its members sorted and deduplicated at every level,
//! so extensional equality coincides with structural equality.

use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundValue(Arc<Vec<GroundValue>>);

impl GroundValue {
    pub fn empty() -> Self {
        GroundValue(Arc::new(Vec::new()))
    }

    pub fn from_members<I: IntoIterator<Item = GroundValue>>(members: I) -> Self {
        let mut v: Vec<GroundValue> = members.into_iter().collect();
        v.sort();
        v.dedup();
        GroundValue(Arc::new(v))
    }

    pub fn singleton(x: GroundValue) -> Self {
        GroundValue(Arc::new(vec![x]))
    }

    /// Von Neumann natural number.
    pub fn nat(n: usize) -> Self {
        let mut cur = Vec::new();
        for _ in 0..n {
            let next = GroundValue::from_members(cur.iter().cloned());
            cur.push(next);
        }
        GroundValue::from_members(cur)
    }

    /// Kuratowski pair {{a}, {a, b}}.
    pub fn pair(a: GroundValue, b: GroundValue) -> Self {
        GroundValue::from_members([
            GroundValue::singleton(a.clone()),
            GroundValue::from_members([a, b]),
        ])
    }

    /// A finite sequence as the set of pairs (i, x_i).
    pub fn tuple<I: IntoIterator<Item = GroundValue>>(items: I) -> Self {
        GroundValue::from_members(
            items
                .into_iter()
                .enumerate()
                .map(|(i, x)| GroundValue::pair(GroundValue::nat(i), x)),
        )
    }

    /// A finite partial map on naturals, encoded as a set of pairs.
    pub fn partial_map<I: IntoIterator<Item = (usize, GroundValue)>>(entries: I) -> Self {
        GroundValue::from_members(
            entries
                .into_iter()
                .map(|(k, v)| GroundValue::pair(GroundValue::nat(k), v)),
        )
    }

    pub fn members(&self) -> &[GroundValue] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: &GroundValue) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn is_subset(&self, other: &GroundValue) -> bool {
        self.0.iter().all(|x| other.contains(x))
    }

    pub fn rank(&self) -> usize {
        self.0.iter().map(|x| x.rank() + 1).max().unwrap_or(0)
    }

    /// Inverse of [`GroundValue::nat`].
    pub fn as_nat(&self) -> Option<usize> {
        let n = self.len();
        (*self == GroundValue::nat(n)).then_some(n)
    }

    /// Inverse of [`GroundValue::pair`].
    pub fn as_pair(&self) -> Option<(GroundValue, GroundValue)> {
        match self.members() {
            [one] if one.len() == 1 => Some((one.members()[0].clone(), one.members()[0].clone())),
            [x, y] => {
                let (single, double) = if x.len() == 1 { (x, y) } else { (y, x) };
                if single.len() != 1 || double.len() != 2 {
                    return None;
                }
                let a = single.members()[0].clone();
                if !double.contains(&a) {
                    return None;
                }
                let b = double.members().iter().find(|m| **m != a)?.clone();
                Some((a, b))
            }
            _ => None,
        }
    }

    /// Inverse of [`GroundValue::tuple`].
    pub fn as_tuple(&self) -> Option<Vec<GroundValue>> {
        let mut slots: Vec<Option<GroundValue>> = vec![None; self.len()];
        for m in self.members() {
            let (i, x) = m.as_pair()?;
            let i = i.as_nat()?;
            if i >= slots.len() || slots[i].is_some() {
                return None;
            }
            slots[i] = Some(x);
        }
        slots.into_iter().collect()
    }

    /// Nested JSON arrays: `[]` is the empty set.
    pub fn to_json(&self) -> Value {
        Value::Array(self.0.iter().map(|x| x.to_json()).collect())
    }

    /// Accepts nested arrays, and non-negative integers as von Neumann naturals.
    pub fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(items) => Ok(GroundValue::from_members(
                items.iter().map(GroundValue::from_json).collect::<Result<Vec<_>>>()?,
            )),
            Value::Number(n) => n
                .as_u64()
                .map(|k| GroundValue::nat(k as usize))
                .ok_or_else(|| Error::input(format!("not a natural number: {n}"))),
            other => Err(Error::input(format!("not a ground value: {other}"))),
        }
    }
}

impl fmt::Debug for GroundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GroundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.as_nat() {
            return write!(f, "{n}");
        }
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naturals_have_their_rank() {
        for n in 0..6 {
            assert_eq!(GroundValue::nat(n).rank(), n);
            assert_eq!(GroundValue::nat(n).as_nat(), Some(n));
        }
    }

    #[test]
    fn extensional_equality_is_order_insensitive() {
        let a = GroundValue::from_members([GroundValue::nat(2), GroundValue::nat(0), GroundValue::nat(2)]);
        let b = GroundValue::from_members([GroundValue::nat(0), GroundValue::nat(2)]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn pairs_and_tuples_decode() {
        let p = GroundValue::pair(GroundValue::nat(1), GroundValue::nat(3));
        assert_eq!(p.as_pair(), Some((GroundValue::nat(1), GroundValue::nat(3))));
        let d = GroundValue::pair(GroundValue::nat(2), GroundValue::nat(2));
        assert_eq!(d.as_pair(), Some((GroundValue::nat(2), GroundValue::nat(2))));
        let t = GroundValue::tuple([GroundValue::nat(1), GroundValue::nat(0), GroundValue::nat(1)]);
        assert_eq!(
            t.as_tuple(),
            Some(vec![GroundValue::nat(1), GroundValue::nat(0), GroundValue::nat(1)])
        );
    }

    #[test]
    fn json_round_trip() {
        let v = GroundValue::tuple([GroundValue::nat(1), GroundValue::empty()]);
        assert_eq!(GroundValue::from_json(&v.to_json()).unwrap(), v);
        assert!(GroundValue::from_json(&serde_json::json!("x")).is_err());
    }
}
