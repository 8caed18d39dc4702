//! Finite forcing posets, materialized with their full order relation.
//!
//! Conditions are addressed by `u32` indices; `up[i]` holds every `j` with
//! `i ≤ j` and `down[i]` every `j` with `j ≤ i`. Stronger conditions are lower.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::condition::{Condition, PartialMap};
use crate::config::{budget, materialize_limit};
use crate::error::{Error, Result};

static NEXT_POSET_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PosetKind {
    Trivial,
    Cohen { domain: usize },
    Coll { target: usize, bound: usize },
    Product { width: usize, inner: Box<PosetKind> },
    Iteration { depth: usize, width: usize },
}

pub struct Poset {
    id: u64,
    kind: PosetKind,
    conds: Vec<Condition>,
    index: HashMap<Condition, u32>,
    up: Vec<FixedBitSet>,
    down: Vec<FixedBitSet>,
    top: u32,
    minimal: FixedBitSet,
    minimal_list: Vec<u32>,
    min_reps: Vec<u32>,
}

impl std::fmt::Debug for Poset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Poset({:?}, {} conditions)", self.kind, self.conds.len())
    }
}

fn partial_maps(domain: usize, values: usize) -> Vec<PartialMap> {
    let mut out = vec![Vec::new()];
    for point in 0..domain as u32 {
        let mut next = Vec::with_capacity(out.len() * (values + 1));
        for m in &out {
            next.push(m.clone());
            for v in 0..values as u32 {
                let mut ext = m.clone();
                ext.push((point, v));
                next.push(ext);
            }
        }
        out = next;
    }
    out
}

fn extends(q: &PartialMap, p: &PartialMap) -> bool {
    p.iter().all(|kv| q.binary_search(kv).is_ok())
}

fn check_size(n: u128, what: &str) -> Result<()> {
    if n > budget() as u128 {
        return Err(Error::budget(format!("{what} would have {n} conditions (budget {})", budget())));
    }
    Ok(())
}

impl Poset {
    /// Materialize a poset from its conditions and an order predicate.
    /// The predicate must be a preorder with a top element.
    pub fn from_order(
        kind: PosetKind,
        conds: Vec<Condition>,
        leq: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        let n = conds.len();
        if n > materialize_limit() {
            return Err(Error::budget(format!(
                "poset with {n} conditions exceeds the materialization limit {}",
                materialize_limit()
            )));
        }
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        #[allow(clippy::needless_range_loop)]
        for q in 0..n {
            for p in 0..n {
                if leq(q, p) {
                    up[q].insert(p);
                    down[p].insert(q);
                }
            }
        }
        let top = (0..n)
            .find(|&t| down[t].count_ones(..) == n)
            .ok_or_else(|| Error::Construction("poset has no top element".into()))? as u32;
        let mut index = HashMap::with_capacity(n);
        for (i, c) in conds.iter().enumerate() {
            if index.insert(c.clone(), i as u32).is_some() {
                return Err(Error::Construction(format!("duplicate condition {c}")));
            }
        }
        let mut minimal = FixedBitSet::with_capacity(n);
        for i in 0..n {
            if down[i].is_subset(&up[i]) {
                minimal.insert(i);
            }
        }
        let minimal_list: Vec<u32> = minimal.ones().map(|i| i as u32).collect();
        let mut min_reps = Vec::new();
        let mut covered = FixedBitSet::with_capacity(n);
        for &m in &minimal_list {
            if !covered.contains(m as usize) {
                min_reps.push(m);
                covered.union_with(&down[m as usize]);
            }
        }
        Ok(Poset {
            id: NEXT_POSET_ID.fetch_add(1, Ordering::Relaxed),
            kind,
            conds,
            index,
            up,
            down,
            top,
            minimal,
            minimal_list,
            min_reps,
        })
    }

    pub fn trivial() -> Self {
        Poset::from_order(PosetKind::Trivial, vec![Condition::Trivial], |_, _| true).unwrap()
    }

    /// Partial maps `0..domain → {0,1}` ordered by extension.
    pub fn cohen(domain: usize) -> Result<Self> {
        check_size(3u128.saturating_pow(domain as u32), "Cohen poset")?;
        let maps = partial_maps(domain, 2);
        let leq = |q: usize, p: usize| extends(&maps[q], &maps[p]);
        let conds = maps.iter().cloned().map(Condition::Cohen).collect();
        Poset::from_order(PosetKind::Cohen { domain }, conds, leq)
    }

    /// Partial maps `0..bound → 0..target` ordered by extension.
    pub fn coll(target: usize, bound: usize) -> Result<Self> {
        if target == 0 {
            return Err(Error::input("collapse target must be nonempty"));
        }
        check_size((target as u128 + 1).saturating_pow(bound as u32), "collapse poset")?;
        let maps = partial_maps(bound, target);
        let leq = |q: usize, p: usize| extends(&maps[q], &maps[p]);
        let conds = maps.iter().cloned().map(Condition::Collapse).collect();
        Poset::from_order(PosetKind::Coll { target, bound }, conds, leq)
    }

    /// Finite-support product of `width` copies of `inner`: `q ≤ p` iff
    /// `dom p ⊆ dom q` and `q(n) ≤ p(n)` on `dom p`.
    pub fn product(inner: &Poset, width: usize) -> Result<Self> {
        check_size((inner.len() as u128 + 1).saturating_pow(width as u32), "product poset")?;
        let mut cells: Vec<Vec<(u32, u32)>> = vec![Vec::new()];
        for copy in 0..width as u32 {
            let mut next = Vec::new();
            for m in &cells {
                next.push(m.clone());
                for v in 0..inner.len() as u32 {
                    let mut ext = m.clone();
                    ext.push((copy, v));
                    next.push(ext);
                }
            }
            cells = next;
        }
        let leq = |q: usize, p: usize| {
            cells[p].iter().all(|&(n, pv)| {
                cells[q]
                    .iter()
                    .find(|(m, _)| *m == n)
                    .is_some_and(|&(_, qv)| inner.leq(qv, pv))
            })
        };
        let conds = cells
            .iter()
            .map(|m| Condition::Product(m.iter().map(|&(n, v)| (n, inner.cond(v).clone())).collect()))
            .collect();
        Poset::from_order(
            PosetKind::Product { width, inner: Box::new(inner.kind.clone()) },
            conds,
            leq,
        )
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn kind(&self) -> &PosetKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.conds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conds.is_empty()
    }

    pub fn cond(&self, i: u32) -> &Condition {
        &self.conds[i as usize]
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conds
    }

    pub fn index_of(&self, c: &Condition) -> Option<u32> {
        self.index.get(c).copied()
    }

    pub fn top(&self) -> u32 {
        self.top
    }

    pub fn leq(&self, q: u32, p: u32) -> bool {
        self.up[q as usize].contains(p as usize)
    }

    pub fn equivalent(&self, p: u32, q: u32) -> bool {
        self.leq(p, q) && self.leq(q, p)
    }

    pub fn below_set(&self, p: u32) -> &FixedBitSet {
        &self.down[p as usize]
    }

    pub fn above_set(&self, p: u32) -> &FixedBitSet {
        &self.up[p as usize]
    }

    pub fn below(&self, p: u32) -> impl Iterator<Item = u32> + '_ {
        self.down[p as usize].ones().map(|i| i as u32)
    }

    pub fn compatible(&self, p: u32, q: u32) -> bool {
        !self.down[p as usize].is_disjoint(&self.down[q as usize])
    }

    pub fn is_minimal(&self, p: u32) -> bool {
        self.minimal.contains(p as usize)
    }

    pub fn minimal(&self) -> &[u32] {
        &self.minimal_list
    }

    /// One minimal element per equivalence class.
    pub fn minimal_reps(&self) -> &[u32] {
        &self.min_reps
    }

    pub fn minimal_below(&self, p: u32) -> impl Iterator<Item = u32> + '_ {
        self.down[p as usize]
            .intersection(&self.minimal)
            .map(|i| i as u32)
    }

    pub fn minimal_reps_below(&self, p: u32) -> impl Iterator<Item = u32> + '_ {
        self.min_reps.iter().copied().filter(move |&m| self.leq(m, p))
    }

    pub fn set_of(&self, members: impl IntoIterator<Item = u32>) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.len());
        for m in members {
            s.insert(m as usize);
        }
        s
    }

    /// `∀q ≤ p ∃r ≤ q, r ∈ D`, decided by exhaustive enumeration.
    pub fn dense_below(&self, dense: &FixedBitSet, p: u32) -> bool {
        self.below(p).all(|q| !self.down[q as usize].is_disjoint(dense))
    }

    /// Equivalent to [`Poset::dense_below`] on finite posets: every condition
    /// has a minimal element below it, so only minimal conditions need checking.
    pub fn dense_below_fast(&self, dense: &FixedBitSet, p: u32) -> bool {
        self.minimal_below(p).all(|m| !self.down[m as usize].is_disjoint(dense))
    }

    pub fn upward_closure(&self, p: u32) -> Filter {
        Filter { poset_id: self.id, members: self.up[p as usize].clone(), generator: Some(p) }
    }

    /// The generic filters of a finite poset: `↑m` for each minimal `m`, one
    /// per equivalence class.
    pub fn generic_filters(&self) -> Vec<Filter> {
        self.min_reps.iter().map(|&m| self.upward_closure(m)).collect()
    }

    /// The order automorphism induced by permuting copy indices.
    pub fn copy_action(&self, perm: &crate::perm::CoordPerm) -> Result<crate::perm::CondPerm> {
        let images = self
            .conds
            .iter()
            .map(|c| {
                self.index_of(&c.permute_copies(perm))
                    .ok_or_else(|| Error::input(format!("{perm} does not act on condition {c}")))
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(crate::perm::CondPerm::from_images(images))
    }

    /// First counterexample to reflexivity, transitivity, or maximality of the top.
    pub fn order_law_violation(&self) -> Option<String> {
        let n = self.len() as u32;
        for p in 0..n {
            if !self.leq(p, p) {
                return Some(format!("not reflexive at {}", self.cond(p)));
            }
            if !self.leq(p, self.top) {
                return Some(format!("{} not below the top", self.cond(p)));
            }
        }
        for q in 0..n {
            for p in self.up[q as usize].ones() {
                if !self.up[p].is_subset(&self.up[q as usize]) {
                    return Some(format!("not transitive through {}", self.cond(p as u32)));
                }
            }
        }
        None
    }
}

/// A subset of a poset's conditions, tagged with the poset it belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filter {
    poset_id: u64,
    members: FixedBitSet,
    generator: Option<u32>,
}

impl Filter {
    pub fn from_members(poset: &Poset, members: FixedBitSet) -> Self {
        Filter { poset_id: poset.id(), members, generator: None }
    }

    pub fn poset_id(&self) -> u64 {
        self.poset_id
    }

    /// The minimal condition this filter was generated from, if any.
    pub fn generator(&self) -> Option<u32> {
        self.generator
    }

    pub fn contains(&self, p: u32) -> bool {
        self.members.contains(p as usize)
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.ones().map(|i| i as u32)
    }

    pub fn meets(&self, set: &FixedBitSet) -> bool {
        !self.members.is_disjoint(set)
    }

    /// Nonempty, upward closed and downward directed in `poset`.
    pub fn is_filter(&self, poset: &Poset) -> bool {
        if self.poset_id != poset.id() || self.members.count_ones(..) == 0 {
            return false;
        }
        let members: Vec<u32> = self.iter().collect();
        members.iter().all(|&p| poset.above_set(p).is_subset(&self.members))
            && members.iter().all(|&p| {
                members.iter().all(|&q| {
                    poset
                        .below_set(p)
                        .intersection(poset.below_set(q))
                        .any(|r| self.members.contains(r))
                })
            })
    }

    /// Image of the filter under a permutation of condition indices.
    pub fn map(&self, perm: &crate::perm::CondPerm) -> Filter {
        let mut members = FixedBitSet::with_capacity(self.members.len());
        for p in self.members.ones() {
            members.insert(perm.apply(p as u32) as usize);
        }
        Filter { poset_id: self.poset_id, members, generator: self.generator.map(|g| perm.apply(g)) }
    }
}
