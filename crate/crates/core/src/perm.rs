//! Finitary permutations of copy indices and induced permutations of
//! condition indices.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A permutation of `0..width`, stored as its image table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordPerm(Vec<u32>);

impl CoordPerm {
    pub fn identity(width: usize) -> Self {
        CoordPerm((0..width as u32).collect())
    }

    pub fn from_images(images: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            let slot = seen
                .get_mut(i as usize)
                .ok_or_else(|| Error::input(format!("image {i} out of range")))?;
            if *slot {
                return Err(Error::input(format!("image {i} repeated")));
            }
            *slot = true;
        }
        Ok(CoordPerm(images))
    }

    pub fn transposition(width: usize, i: usize, j: usize) -> Self {
        let mut p = CoordPerm::identity(width);
        p.0.swap(i, j);
        p
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, n: usize) -> usize {
        self.0.get(n).map_or(n, |&m| m as usize)
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i as u32 == m)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &CoordPerm) -> CoordPerm {
        CoordPerm((0..self.width()).map(|i| self.apply(other.apply(i)) as u32).collect())
    }

    pub fn inverse(&self) -> CoordPerm {
        let mut inv = vec![0u32; self.width()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m as usize] = i as u32;
        }
        CoordPerm(inv)
    }

    pub fn fixes_all(&self, e: &BTreeSet<usize>) -> bool {
        e.iter().all(|&n| self.apply(n) == n)
    }

    /// `π″e`.
    pub fn image_of(&self, e: &BTreeSet<usize>) -> BTreeSet<usize> {
        e.iter().map(|&n| self.apply(n)).collect()
    }

    /// Every permutation of `0..width`, identity first, in lexicographic order.
    pub fn all(width: usize) -> Vec<CoordPerm> {
        let mut out = Vec::new();
        let mut cur: Vec<u32> = (0..width as u32).collect();
        loop {
            out.push(CoordPerm(cur.clone()));
            // next lexicographic permutation
            let Some(i) = (0..width.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
                break;
            };
            let j = (i + 1..width).rev().find(|&j| cur[j] > cur[i]).unwrap();
            cur.swap(i, j);
            cur[i + 1..].reverse();
        }
        out
    }

    /// Parse cycle notation such as `"(0 1)(3 4)"`; `"()"` or `""` is the identity.
    pub fn parse_cycles(s: &str, width: usize) -> Result<Self> {
        let mut perm = CoordPerm::identity(width);
        let mut rest = s.trim();
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::input(format!("bad cycle notation: {s}")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::input(format!("unclosed cycle: {s}")))?;
            let cycle: Vec<usize> = open[..close]
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| Error::input(format!("bad index {t}"))))
                .collect::<Result<_>>()?;
            if let Some(&bad) = cycle.iter().find(|&&c| c >= width) {
                return Err(Error::input(format!("index {bad} outside width {width}")));
            }
            if cycle.iter().collect::<std::collections::BTreeSet<_>>().len() != cycle.len() {
                return Err(Error::input(format!("repeated index in cycle ({})", &open[..close])));
            }
            let mut cyc = CoordPerm::identity(width);
            for k in 0..cycle.len() {
                cyc.0[cycle[k]] = cycle[(k + 1) % cycle.len()] as u32;
            }
            CoordPerm::from_images(cyc.0.clone())?;
            perm = cyc.compose(&perm);
            rest = open[close + 1..].trim_start();
        }
        Ok(perm)
    }

    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.width()];
        let mut out = Vec::new();
        for start in 0..self.width() {
            if seen[start] || self.apply(start) == start {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut cur = self.apply(start);
            while cur != start {
                seen[cur] = true;
                cyc.push(cur);
                cur = self.apply(cur);
            }
            out.push(cyc);
        }
        out
    }
}

impl fmt::Display for CoordPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            let parts: Vec<String> = c.iter().map(|n| n.to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for CoordPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A permutation of the condition indices of one finite poset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CondPerm(Arc<Vec<u32>>);

impl CondPerm {
    pub fn identity(n: usize) -> Self {
        CondPerm(Arc::new((0..n as u32).collect()))
    }

    pub fn from_images(images: Vec<u32>) -> Self {
        CondPerm(Arc::new(images))
    }

    pub fn apply(&self, i: u32) -> u32 {
        self.0[i as usize]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i as u32 == m)
    }

    pub fn compose(&self, other: &CondPerm) -> CondPerm {
        CondPerm(Arc::new(other.0.iter().map(|&i| self.0[i as usize]).collect()))
    }

    pub fn inverse(&self) -> CondPerm {
        let mut inv = vec![0u32; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m as usize] = i as u32;
        }
        CondPerm(Arc::new(inv))
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Debug for CondPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CondPerm({:?})", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cycle_notation_round_trips() {
        let p = CoordPerm::parse_cycles("(0 1)(3 4)", 5).unwrap();
        assert_eq!(p.to_string(), "(0 1)(3 4)");
        assert_eq!(CoordPerm::parse_cycles("()", 3).unwrap(), CoordPerm::identity(3));
        assert!(CoordPerm::parse_cycles("(0 5)", 3).is_err());
        assert!(CoordPerm::parse_cycles("(0 0)", 3).is_err());
    }

    #[test]
    fn symmetric_group_sizes() {
        assert_eq!(CoordPerm::all(1).len(), 1);
        assert_eq!(CoordPerm::all(3).len(), 6);
        assert_eq!(CoordPerm::all(4).len(), 24);
        assert!(CoordPerm::all(4)[0].is_identity());
    }

    proptest! {
        #[test]
        fn inverse_and_composition(a in 0usize..24, b in 0usize..24) {
            let all = CoordPerm::all(4);
            let (p, q) = (&all[a], &all[b]);
            prop_assert!(p.compose(&p.inverse()).is_identity());
            for n in 0..4 {
                prop_assert_eq!(p.compose(q).apply(n), p.apply(q.apply(n)));
            }
            prop_assert_eq!(CoordPerm::parse_cycles(&p.to_string(), 4).unwrap(), p.clone());
        }
    }
}
