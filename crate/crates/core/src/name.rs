//! P-names as hash-consed, well-founded sets of (condition, name) pairs.
//!
//! Structurally equal names share one node, so equality and hashing are
//! pointer-cheap. Conditions are indices into the poset the name lives over.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, OnceLock};

use parking_lot::Mutex;

use crate::condition::{Condition, Coord};
use crate::config::budget;
use crate::error::{Error, Result};
use crate::hf::GroundValue;
use crate::perm::CondPerm;
use crate::poset::{Filter, Poset};

struct NameNode {
    id: u64,
    entries: Vec<(u32, PName)>,
    rank: u32,
}

#[derive(Clone)]
pub struct PName(Arc<NameNode>);

type InternKey = Vec<(u32, u64)>;

fn table() -> &'static Mutex<HashMap<InternKey, PName>> {
    static TABLE: OnceLock<Mutex<HashMap<InternKey, PName>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(HashMap::new()))
}

static NEXT_NAME_ID: AtomicU64 = AtomicU64::new(0);

impl PName {
    /// Intern the name with the given entries; duplicates are dropped.
    pub fn new<I: IntoIterator<Item = (u32, PName)>>(entries: I) -> PName {
        let mut entries: Vec<(u32, PName)> = entries.into_iter().collect();
        entries.sort_by_key(|(c, n)| (*c, n.id()));
        entries.dedup_by_key(|(c, n)| (*c, n.id()));
        let key: InternKey = entries.iter().map(|(c, n)| (*c, n.id())).collect();
        let mut table = table().lock();
        if let Some(existing) = table.get(&key) {
            return existing.clone();
        }
        let rank = entries.iter().map(|(_, n)| n.rank() + 1).max().unwrap_or(0) as u32;
        let node = NameNode {
            id: NEXT_NAME_ID.fetch_add(1, AtomicOrdering::Relaxed),
            entries,
            rank,
        };
        let name = PName(Arc::new(node));
        table.insert(key, name.clone());
        name
    }

    pub fn empty() -> PName {
        PName::new([])
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn entries(&self) -> &[(u32, PName)] {
        &self.0.entries
    }

    pub fn len(&self) -> usize {
        self.0.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.entries.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.rank as usize
    }

    /// `x̌ = {(𝟙, y̌) : y ∈ x}`.
    pub fn check(x: &GroundValue, top: u32) -> PName {
        fn go(x: &GroundValue, top: u32, memo: &mut HashMap<GroundValue, PName>) -> PName {
            if let Some(n) = memo.get(x) {
                return n.clone();
            }
            let n = PName::new(x.members().iter().map(|y| (top, go(y, top, memo))).collect::<Vec<_>>());
            memo.insert(x.clone(), n.clone());
            n
        }
        go(x, top, &mut HashMap::new())
    }

    /// `A• = {𝟙} × A`.
    pub fn bullet<I: IntoIterator<Item = PName>>(names: I, top: u32) -> PName {
        PName::new(names.into_iter().map(|n| (top, n)).collect::<Vec<_>>())
    }

    /// Kuratowski pair `{{a}•, {a, b}•}•`.
    pub fn pair(a: &PName, b: &PName, top: u32) -> PName {
        PName::bullet(
            [PName::bullet([a.clone()], top), PName::bullet([a.clone(), b.clone()], top)],
            top,
        )
    }

    /// `⟨a₀, …, aₖ⟩•` as the set of pairs `(ǐ, aᵢ)`.
    pub fn tuple(items: &[PName], top: u32) -> PName {
        PName::bullet(
            items
                .iter()
                .enumerate()
                .map(|(i, a)| PName::pair(&PName::check(&GroundValue::nat(i), top), a, top)),
            top,
        )
    }

    /// `ẋ^G = {ẏ^G : (p, ẏ) ∈ ẋ, p ∈ G}` in extensional normal form.
    pub fn evaluate(&self, poset: &Poset, filter: &Filter) -> Result<GroundValue> {
        if filter.poset_id() != poset.id() {
            return Err(Error::input("filter belongs to a different poset"));
        }
        let mut memo = HashMap::new();
        self.eval_in(poset.len(), filter, &mut memo)
    }

    fn eval_in(&self, n: usize, g: &Filter, memo: &mut HashMap<u64, GroundValue>) -> Result<GroundValue> {
        if let Some(v) = memo.get(&self.id()) {
            return Ok(v.clone());
        }
        let mut members = Vec::new();
        for (p, child) in self.entries() {
            if *p as usize >= n {
                return Err(Error::input(format!("condition index {p} is not in the poset")));
            }
            if g.contains(*p) {
                members.push(child.eval_in(n, g, memo)?);
            }
        }
        let v = GroundValue::from_members(members);
        memo.insert(self.id(), v.clone());
        Ok(v)
    }

    /// `π(ẋ) = {(π(p), π(ẏ)) : (p, ẏ) ∈ ẋ}`.
    pub fn apply(&self, perm: &CondPerm) -> PName {
        let mut memo = HashMap::new();
        self.apply_in(perm, &mut memo)
    }

    pub(crate) fn apply_in(&self, perm: &CondPerm, memo: &mut HashMap<u64, PName>) -> PName {
        if let Some(n) = memo.get(&self.id()) {
            return n.clone();
        }
        let out = PName::new(
            self.entries()
                .iter()
                .map(|(p, c)| (perm.apply(*p), c.apply_in(perm, memo)))
                .collect::<Vec<_>>(),
        );
        memo.insert(self.id(), out.clone());
        out
    }

    /// Rewrite every condition index through `f` (used to move names between
    /// posets along an embedding).
    pub fn map_conditions(&self, f: &dyn Fn(u32) -> u32) -> PName {
        fn go(n: &PName, f: &dyn Fn(u32) -> u32, memo: &mut HashMap<u64, PName>) -> PName {
            if let Some(x) = memo.get(&n.id()) {
                return x.clone();
            }
            let out = PName::new(n.entries().iter().map(|(p, c)| (f(*p), go(c, f, memo))).collect::<Vec<_>>());
            memo.insert(n.id(), out.clone());
            out
        }
        go(self, f, &mut HashMap::new())
    }

    /// Every condition index occurring hereditarily inside the name.
    pub fn conditions_used(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.id()) {
                continue;
            }
            for (p, c) in n.entries() {
                out.insert(*p);
                stack.push(c.clone());
            }
        }
        out
    }

    /// Every (stage, copy) index mentioned by a condition inside the name.
    pub fn coordinates_used(&self, poset: &Poset) -> BTreeSet<Coord> {
        self.conditions_used()
            .into_iter()
            .flat_map(|p| poset.cond(p).coords())
            .collect()
    }

    /// Hereditary subnames, including the name itself.
    pub fn subnames(&self) -> Vec<PName> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.id()) {
                continue;
            }
            stack.extend(n.entries().iter().map(|(_, c)| c.clone()));
            out.push(n);
        }
        out
    }

    /// `{"entries": [[cond, name], ...]}` with condition literals from `poset`.
    pub fn to_json(&self, poset: &Poset) -> serde_json::Value {
        let mut entries: Vec<(u32, &PName)> = self.entries().iter().map(|(p, c)| (*p, c)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        serde_json::json!({
            "entries": entries
                .into_iter()
                .map(|(p, c)| serde_json::json!([poset.cond(p).to_json(), c.to_json(poset)]))
                .collect::<Vec<_>>()
        })
    }
}

impl PartialEq for PName {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Eq for PName {}

impl Hash for PName {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id().hash(state)
    }
}

/// Structural order, independent of interning order.
impl Ord for PName {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.id() == other.id() {
            return Ordering::Equal;
        }
        let sorted = |n: &PName| {
            let mut v: Vec<(u32, PName)> = n.entries().to_vec();
            v.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            v
        };
        self.rank()
            .cmp(&other.rank())
            .then_with(|| self.len().cmp(&other.len()))
            .then_with(|| {
                for ((p, x), (q, y)) in sorted(self).iter().zip(sorted(other).iter()) {
                    let o = p.cmp(q).then_with(|| x.cmp(y));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for PName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, c)) in self.entries().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({p}, {c:?})")?;
        }
        write!(f, "}}")
    }
}

/// `Names(R)`: every name of rank ≤ `rank` whose conditions come from
/// `conds`, built from `atoms` and `∅`, with at most `max_entries` pairs per node.
pub fn name_universe(conds: &[u32], atoms: &[PName], rank: usize, max_entries: usize) -> Result<Vec<PName>> {
    let mut level: Vec<PName> = std::iter::once(PName::empty()).chain(atoms.iter().cloned()).collect();
    level.sort();
    level.dedup();
    for _ in 0..rank {
        let pairs: Vec<(u32, PName)> = conds
            .iter()
            .flat_map(|&c| level.iter().map(move |n| (c, n.clone())))
            .collect();
        let mut estimate: u128 = level.len() as u128;
        let mut binom: u128 = 1;
        for k in 1..=max_entries.min(pairs.len()) {
            binom = binom * (pairs.len() - k + 1) as u128 / k as u128;
            estimate += binom;
        }
        if estimate > budget() as u128 {
            return Err(Error::budget(format!("name universe would exceed {} names", budget())));
        }
        let mut next: BTreeSet<PName> = level.iter().cloned().collect();
        let mut chosen: Vec<usize> = Vec::new();
        subsets(&pairs, max_entries, 0, &mut chosen, &mut next);
        level = next.into_iter().collect();
    }
    Ok(level)
}

fn subsets(pairs: &[(u32, PName)], k: usize, start: usize, chosen: &mut Vec<usize>, out: &mut BTreeSet<PName>) {
    out.insert(PName::new(chosen.iter().map(|&i| pairs[i].clone()).collect::<Vec<_>>()));
    if chosen.len() == k {
        return;
    }
    for i in start..pairs.len() {
        chosen.push(i);
        subsets(pairs, k, i + 1, chosen, out);
        chosen.pop();
    }
}

fn bits_set(c: &Condition) -> Vec<usize> {
    match c {
        Condition::Cohen(m) => m.iter().filter(|&&(_, b)| b == 1).map(|&(n, _)| n as usize).collect(),
        _ => Vec::new(),
    }
}

/// `ġ = {(p, ň) : p(n) = 1}` over a Cohen poset.
pub fn cohen_generic(poset: &Poset) -> PName {
    let top = poset.top();
    PName::new(
        (0..poset.len() as u32)
            .flat_map(|p| bits_set(poset.cond(p)).into_iter().map(move |n| (p, n)))
            .map(|(p, n)| (p, PName::check(&GroundValue::nat(n), top)))
            .collect::<Vec<_>>(),
    )
}

/// `ġ_c = {(p, ň) : dom p = {c}, p(c)(n) = 1}` over a product of Cohen
/// posets. Restricting to conditions supported on `c` alone does not change
/// the value under any filter and keeps the name's support at `{c}`.
pub fn product_generic(poset: &Poset, copy: usize) -> PName {
    let top = poset.top();
    let mut entries = Vec::new();
    for p in 0..poset.len() as u32 {
        let cond = poset.cond(p);
        if cond.product_domain().len() != 1 {
            continue;
        }
        if let Some(cell) = cond.product_cell(copy) {
            for n in bits_set(cell) {
                entries.push((p, PName::check(&GroundValue::nat(n), top)));
            }
        }
    }
    PName::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::CoordPerm;

    fn nat(n: usize) -> GroundValue {
        GroundValue::nat(n)
    }

    #[test]
    fn check_names() {
        let c = Poset::cohen(1).unwrap();
        assert!(PName::check(&GroundValue::empty(), c.top()).is_empty());
        let one = PName::check(&nat(1), c.top());
        assert_eq!(one.entries(), &[(c.top(), PName::empty())]);
        for x in [nat(0), nat(3), GroundValue::pair(nat(1), nat(2))] {
            let n = PName::check(&x, c.top());
            assert_eq!(n.rank(), x.rank());
            for g in c.generic_filters() {
                assert_eq!(n.evaluate(&c, &g).unwrap(), x);
            }
        }
    }

    #[test]
    fn bullet_and_tuple_evaluate() {
        let c = Poset::cohen(2).unwrap();
        let top = c.top();
        assert!(PName::bullet([], top).is_empty());
        let g = cohen_generic(&c);
        let b = PName::bullet([PName::check(&nat(2), top)], top);
        let t = PName::tuple(&[g.clone(), PName::check(&nat(1), top)], top);
        for f in c.generic_filters() {
            assert_eq!(b.evaluate(&c, &f).unwrap(), GroundValue::singleton(nat(2)));
            let gv = g.evaluate(&c, &f).unwrap();
            assert_eq!(t.evaluate(&c, &f).unwrap(), GroundValue::tuple([gv, nat(1)]));
        }
    }

    #[test]
    fn generic_name_evaluates_to_true_bits() {
        let c = Poset::cohen(2).unwrap();
        let p = c.index_of(&Condition::Cohen(vec![(0, 1), (1, 0)])).unwrap();
        let g = cohen_generic(&c);
        assert_eq!(g.evaluate(&c, &c.upward_closure(p)).unwrap(), GroundValue::singleton(nat(0)));
        for f in c.generic_filters() {
            assert!(PName::empty().evaluate(&c, &f).unwrap().is_empty());
        }
    }

    #[test]
    fn foreign_filter_is_rejected() {
        let a = Poset::cohen(1).unwrap();
        let b = Poset::cohen(1).unwrap();
        let g = &b.generic_filters()[0];
        assert!(matches!(cohen_generic(&a).evaluate(&a, g), Err(Error::Input(_))));
    }

    #[test]
    fn swap_moves_generic_copies() {
        let prod = Poset::product(&Poset::cohen(2).unwrap(), 2).unwrap();
        let swap = prod.copy_action(&CoordPerm::transposition(2, 0, 1)).unwrap();
        let g0 = product_generic(&prod, 0);
        let g1 = product_generic(&prod, 1);
        assert_eq!(g0.apply(&swap), g1);
        assert_eq!(g0.apply(&CondPerm::identity(prod.len())), g0);
        let x = PName::check(&nat(2), prod.top());
        assert_eq!(x.apply(&swap), x);
        assert_eq!(g0.coordinates_used(&prod), [(0, 0)].into_iter().collect());
        let both = PName::bullet([g0.clone(), g1.clone()], prod.top());
        assert_eq!(both.coordinates_used(&prod), [(0, 0), (0, 1)].into_iter().collect());
        assert!(x.coordinates_used(&prod).is_empty());
    }

    #[test]
    fn automorphisms_commute_with_evaluation() {
        let prod = Poset::product(&Poset::cohen(1).unwrap(), 2).unwrap();
        let swap = prod.copy_action(&CoordPerm::transposition(2, 0, 1)).unwrap();
        let top = prod.top();
        let g0 = product_generic(&prod, 0);
        let names = [g0.clone(), PName::pair(&g0, &product_generic(&prod, 1), top)];
        for x in &names {
            assert_eq!(x.apply(&swap).rank(), x.rank());
            assert_eq!(x.apply(&swap).apply(&swap), *x);
            assert_eq!(x.apply(&swap.compose(&swap)), x.apply(&swap).apply(&swap));
            for g in prod.generic_filters() {
                let pulled = g.map(&swap.inverse());
                assert_eq!(x.apply(&swap).evaluate(&prod, &g).unwrap(), x.evaluate(&prod, &pulled).unwrap());
            }
        }
    }

    #[test]
    fn universe_grows_with_rank() {
        let c = Poset::cohen(1).unwrap();
        let u0 = name_universe(&[c.top()], &[], 0, 2).unwrap();
        let u1 = name_universe(&[c.top()], &[], 1, 2).unwrap();
        assert_eq!(u0.len(), 1);
        assert_eq!(u1.len(), 2);
        assert!(u1.iter().all(|n| n.rank() <= 1));
    }
}
