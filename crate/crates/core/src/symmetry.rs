//! Symmetric systems: a materialized poset, an enumerated automorphism group,
//! and the normal filter given by a list of generator subgroups.
//!
//! Automorphism labels and filter generators share one shape for products
//! and iterations. A product uses only the base part; an iteration adds one
//! permutation (or fixed set) per later stage and per block of the base
//! partition that the stage entries are split over.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use parking_lot::Mutex;
use serde::Serialize;
use serde_json::{json, Value};

use crate::condition::Coord;
use crate::config::{budget, TruncationConfig};
use crate::error::{Error, Result};
use crate::name::PName;
use crate::perm::{CondPerm, CoordPerm};
use crate::poset::Poset;

/// An automorphism label: a permutation of the ground copies and, for each
/// later stage, one copy permutation per block.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Aut {
    pub base: CoordPerm,
    pub stages: Vec<Vec<CoordPerm>>,
}

impl Aut {
    pub fn product(base: CoordPerm) -> Self {
        Aut { base, stages: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.base.is_identity() && self.stages.iter().flatten().all(CoordPerm::is_identity)
    }

    /// `τ_f` for `f(α) = perms[α]`: the same permutation in every block.
    pub fn tau(perms: &[CoordPerm], nblocks: usize) -> Self {
        Aut {
            base: perms[0].clone(),
            stages: perms[1..].iter().map(|p| vec![p.clone(); nblocks]).collect(),
        }
    }

    /// Does every stage entry denote one permutation regardless of block?
    pub fn is_tau(&self) -> bool {
        self.stages.iter().all(|s| s.windows(2).all(|w| w[0] == w[1]))
    }

    pub fn to_json(&self) -> Value {
        if self.stages.is_empty() {
            return Value::String(self.base.to_string());
        }
        json!({
            "base": self.base.to_string(),
            "stages": self.stages.iter()
                .map(|s| s.iter().map(|p| p.to_string()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Aut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for s in &self.stages {
            write!(f, " ; ")?;
            if s.windows(2).all(|w| w[0] == w[1]) {
                write!(f, "{}", s[0])?;
            } else {
                let parts: Vec<String> = s.iter().map(|p| p.to_string()).collect();
                write!(f, "[{}]", parts.join(" | "))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Aut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A filter generator: `fix(base)` on the ground copies and, per later stage
/// and block, the fixed set the stage permutation must fix pointwise.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Gen {
    pub base: BTreeSet<usize>,
    pub stages: Vec<Vec<BTreeSet<usize>>>,
}

impl Gen {
    pub fn product(e: BTreeSet<usize>) -> Self {
        Gen { base: e, stages: Vec::new() }
    }

    /// `fix(e)` for `e ⊆ stages × copies`: stage sections as check-names,
    /// so every block carries the same set.
    pub fn fix(e: &BTreeSet<Coord>, stage_blocks: &[usize]) -> Self {
        let section = |a: usize| e.iter().filter(|(s, _)| *s == a).map(|(_, n)| *n).collect::<BTreeSet<_>>();
        Gen {
            base: section(0),
            stages: stage_blocks
                .iter()
                .enumerate()
                .map(|(i, &nb)| vec![section(i + 1); nb])
                .collect(),
        }
    }

    /// Is this generator of the form `fix(e)`? Returns `e` if so.
    pub fn as_fix(&self) -> Option<BTreeSet<Coord>> {
        let mut e: BTreeSet<Coord> = self.base.iter().map(|&n| (0, n)).collect();
        for (i, s) in self.stages.iter().enumerate() {
            if !s.windows(2).all(|w| w[0] == w[1]) {
                return None;
            }
            e.extend(s.first().into_iter().flatten().map(|&n| (i + 1, n)));
        }
        Some(e)
    }

    pub fn contains(&self, a: &Aut) -> bool {
        a.base.fixes_all(&self.base)
            && self
                .stages
                .iter()
                .zip(&a.stages)
                .all(|(gs, ps)| gs.iter().zip(ps).all(|(e, p)| p.fixes_all(e)))
    }

    /// Every `(stage, copy)` pinned in some block.
    pub fn coords(&self) -> BTreeSet<Coord> {
        let mut out: BTreeSet<Coord> = self.base.iter().map(|&n| (0, n)).collect();
        for (i, s) in self.stages.iter().enumerate() {
            out.extend(s.iter().flatten().map(|&n| (i + 1, n)));
        }
        out
    }

    pub fn size(&self) -> usize {
        self.base.len() + self.stages.iter().flatten().map(BTreeSet::len).sum::<usize>()
    }

    pub fn to_json(&self) -> Value {
        if self.stages.is_empty() {
            return json!(self.base);
        }
        json!({ "base": self.base, "stages": self.stages })
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &BTreeSet<usize>| {
            let v: Vec<String> = s.iter().map(|n| n.to_string()).collect();
            format!("{{{}}}", v.join(","))
        };
        write!(f, "fix{}", set(&self.base))?;
        for s in &self.stages {
            let parts: Vec<String> = s.iter().map(set).collect();
            write!(f, " ; {}", parts.join("|"))?;
        }
        Ok(())
    }
}

/// `π fix(e) π⁻¹ = fix(π″e)` on a product.
pub fn conjugate_fix(pi: &CoordPerm, e: &BTreeSet<usize>) -> BTreeSet<usize> {
    pi.image_of(e)
}

pub struct GroupElem {
    pub label: Aut,
    pub action: CondPerm,
    /// How the element permutes the blocks of the base partition (empty for
    /// systems without later stages).
    pub blocks: Vec<u32>,
}

/// Result of a `fix(e) ≤ sym(ẋ)` test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SymTest {
    pub holds: bool,
    /// The transposition reduction had no fresh index, so the full group was
    /// enumerated instead.
    pub exhaustive_fallback: bool,
    /// The answer came from enumerating a subgroup that the truncation made
    /// trivial. Such a `true` is not evidence of symmetry: with unboundedly
    /// many copies the subgroup would still move coordinates.
    pub degenerate: bool,
}

impl SymTest {
    /// `holds`, counted only when it is not an artifact of a trivial subgroup.
    pub fn supports(&self) -> bool {
        self.holds && !self.degenerate
    }
}

pub struct SymmetricSystem {
    poset: Arc<Poset>,
    group: Vec<GroupElem>,
    gens: Vec<Gen>,
    config: TruncationConfig,
    /// Set when the group is the full symmetric group on this many product
    /// copies, which enables the transposition reduction.
    product_width: Option<usize>,
    /// The group stands in for an infinite one, so trivial generator
    /// subgroups are truncation artifacts.
    truncated: bool,
    by_label: HashMap<Aut, usize>,
    by_action: HashMap<CondPerm, usize>,
    hs_memo: Mutex<HashMap<u64, bool>>,
}

impl SymmetricSystem {
    /// Assemble a system. The identity must be present; it is moved first.
    pub fn new(
        poset: Arc<Poset>,
        mut group: Vec<GroupElem>,
        mut gens: Vec<Gen>,
        config: TruncationConfig,
        product_width: Option<usize>,
    ) -> Result<Self> {
        let id = group
            .iter()
            .position(|g| g.action.is_identity() && g.label.is_identity())
            .ok_or_else(|| Error::Construction("group has no identity".into()))?;
        group.swap(0, id);
        for g in &group {
            if g.action.len() != poset.len() {
                return Err(Error::Construction(format!("{} does not act on the poset", g.label)));
            }
        }
        gens.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
        gens.dedup();
        let by_label = group.iter().enumerate().map(|(i, g)| (g.label.clone(), i)).collect();
        let mut by_action = HashMap::new();
        for (i, g) in group.iter().enumerate() {
            by_action.entry(g.action.clone()).or_insert(i);
        }
        let truncated = product_width.is_some() || group.iter().any(|g| !g.label.stages.is_empty());
        Ok(SymmetricSystem {
            poset,
            group,
            gens,
            config,
            product_width,
            truncated,
            by_label,
            by_action,
            hs_memo: Mutex::new(HashMap::new()),
        })
    }

    /// `𝒯(ℝ)`: the finite-support product of `width` copies of `inner`, the
    /// full symmetric group on the copies, and `fix(e)` for every `e`.
    pub fn build_t(inner: &Poset, width: usize, config: TruncationConfig) -> Result<Self> {
        let poset = Arc::new(Poset::product(inner, width)?);
        let perms = CoordPerm::all(width);
        if perms.len() > budget() {
            return Err(Error::budget(format!("symmetric group on {width} copies")));
        }
        let group = perms
            .into_iter()
            .map(|p| {
                let action = poset.copy_action(&p)?;
                Ok(GroupElem { label: Aut::product(p), action, blocks: Vec::new() })
            })
            .collect::<Result<Vec<_>>>()?;
        let gens = subsets(width).into_iter().map(Gen::product).collect();
        SymmetricSystem::new(poset, group, gens, config, Some(width))
    }

    /// A poset with only the identity automorphism and the trivial filter.
    pub fn rigid(poset: Poset, config: TruncationConfig) -> Result<Self> {
        let n = poset.len();
        let group = vec![GroupElem { label: Aut::product(CoordPerm::identity(1)), action: CondPerm::identity(n), blocks: Vec::new() }];
        SymmetricSystem::new(Arc::new(poset), group, vec![Gen::product(BTreeSet::new())], config, None)
    }

    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn group(&self) -> &[GroupElem] {
        &self.group
    }

    pub fn gens(&self) -> &[Gen] {
        &self.gens
    }

    pub fn config(&self) -> &TruncationConfig {
        &self.config
    }

    pub fn product_width(&self) -> Option<usize> {
        self.product_width
    }

    /// Position of a labelled element in [`SymmetricSystem::group`].
    pub fn position(&self, label: &Aut) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn element(&self, label: &Aut) -> Option<&GroupElem> {
        self.by_label.get(label).map(|&i| &self.group[i])
    }

    /// The group element inducing a given action, if any.
    pub fn element_by_action(&self, action: &CondPerm) -> Option<&GroupElem> {
        self.by_action.get(action).map(|&i| &self.group[i])
    }

    pub fn members<'a>(&'a self, gen: &'a Gen) -> impl Iterator<Item = &'a GroupElem> + 'a {
        self.group.iter().filter(move |g| gen.contains(&g.label))
    }

    /// `fix(e) ≤ sym(ẋ)` by enumerating the generator's members.
    pub fn fix_leq_sym_exhaustive(&self, gen: &Gen, x: &PName) -> bool {
        self.members(gen).all(|g| x.apply(&g.action) == *x)
    }

    fn exhaustive_test(&self, gen: &Gen, x: &PName, fallback: bool) -> SymTest {
        let degenerate = self.truncated && self.members(gen).nth(1).is_none();
        SymTest { holds: self.fix_leq_sym_exhaustive(gen, x), exhaustive_fallback: fallback, degenerate }
    }

    /// `fix(e) ≤ sym(ẋ)`. On a product with the full symmetric group only
    /// transpositions `(i j)` with `i ∈ coords(ẋ) \ e` and
    /// `j ∈ (coords(ẋ) ∪ {f}) \ e` are tested, for one fresh index `f`.
    pub fn fix_leq_sym(&self, gen: &Gen, x: &PName) -> SymTest {
        let Some(width) = self.product_width.filter(|_| gen.stages.is_empty()) else {
            return self.exhaustive_test(gen, x, false);
        };
        let coords: BTreeSet<usize> = x.coordinates_used(&self.poset).into_iter().map(|(_, n)| n).collect();
        let fresh = (0..width).find(|n| !coords.contains(n) && !gen.base.contains(n));
        let Some(fresh) = fresh else {
            return self.exhaustive_test(gen, x, true);
        };
        let free: Vec<usize> = coords.iter().copied().filter(|n| !gen.base.contains(n)).collect();
        let mut targets = free.clone();
        targets.push(fresh);
        for (k, &i) in free.iter().enumerate() {
            for &j in &targets[k + 1..] {
                let t = Aut::product(CoordPerm::transposition(width, i, j));
                let g = self.element(&t).expect("full symmetric group contains every transposition");
                if x.apply(&g.action) != *x {
                    return SymTest { holds: false, exhaustive_fallback: false, degenerate: false };
                }
            }
        }
        SymTest { holds: true, exhaustive_fallback: false, degenerate: false }
    }

    /// The first listed generator below `sym(ẋ)`, in generator order,
    /// ignoring answers that come from a trivial truncated subgroup.
    pub fn symmetry_witness(&self, x: &PName) -> Option<&Gen> {
        self.gens.iter().find(|g| self.fix_leq_sym(g, x).supports())
    }

    pub fn is_symmetric(&self, x: &PName) -> bool {
        self.symmetry_witness(x).is_some()
    }

    /// Symmetric at the node and, recursively, at every child.
    pub fn is_hereditarily_symmetric(&self, x: &PName) -> bool {
        if let Some(&v) = self.hs_memo.lock().get(&x.id()) {
            return v;
        }
        let v = self.is_symmetric(x) && x.entries().iter().all(|(_, c)| self.is_hereditarily_symmetric(c));
        self.hs_memo.lock().insert(x.id(), v);
        v
    }

    /// Closure of `{ẋ}` under the group, in structural order.
    pub fn orbit(&self, x: &PName) -> Result<Vec<PName>> {
        let mut seen: BTreeSet<PName> = BTreeSet::new();
        for g in &self.group {
            seen.insert(x.apply(&g.action));
            if seen.len() > budget() {
                return Err(Error::budget("orbit exceeds the search budget"));
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// `sym(ẋ)` as indices into the group.
    pub fn sym(&self, x: &PName) -> Vec<usize> {
        (0..self.group.len()).filter(|&i| x.apply(&self.group[i].action) == *x).collect()
    }

    /// Some listed `fix(e)` stabilizes `D` setwise.
    pub fn symmetric_dense_check(&self, d: &FixedBitSet) -> bool {
        self.gens.iter().any(|g| self.stabilizes(g, d))
    }

    /// Does every member of the generator map `D` onto itself? Uses the
    /// transposition reduction on products.
    pub fn stabilizes(&self, gen: &Gen, d: &FixedBitSet) -> bool {
        let maps_onto = |a: &CondPerm| d.ones().all(|p| d.contains(a.apply(p as u32) as usize));
        let Some(width) = self.product_width.filter(|_| gen.stages.is_empty()) else {
            return self.members(gen).all(|g| maps_onto(&g.action));
        };
        let coords: BTreeSet<usize> = d.ones().flat_map(|p| self.poset.cond(p as u32).product_domain()).collect();
        let fresh = (0..width).find(|n| !coords.contains(n) && !gen.base.contains(n));
        match fresh {
            None => self.members(gen).all(|g| maps_onto(&g.action)),
            Some(f) => {
                let free: Vec<usize> = coords.iter().copied().filter(|n| !gen.base.contains(n)).collect();
                let mut targets = free.clone();
                targets.push(f);
                free.iter().enumerate().all(|(k, &i)| {
                    targets[k + 1..].iter().all(|&j| {
                        let t = Aut::product(CoordPerm::transposition(width, i, j));
                        maps_onto(&self.element(&t).unwrap().action)
                    })
                })
            }
        }
    }
}

/// All subsets of `0..width`, by size then lexicographically.
pub fn subsets(width: usize) -> Vec<BTreeSet<usize>> {
    let mut out: Vec<BTreeSet<usize>> = (0u64..1 << width)
        .map(|mask| (0..width).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

impl SymmetricSystem {
    /// Group axioms, order preservation, and normality of the generator list,
    /// all by exhaustive enumeration.
    pub fn validate(&self) -> Vec<crate::report::CheckRecord> {
        use crate::report::{CheckRecord, Mode};
        let n = self.poset.len() as u32;
        let mut order = CheckRecord::new("automorphisms", "every group element preserves ≤ in both directions", Mode::Exhaustive);
        for g in &self.group {
            let mut ok = true;
            let mut bijective = vec![false; n as usize];
            for p in 0..n {
                bijective[g.action.apply(p) as usize] = true;
            }
            ok &= bijective.iter().all(|&b| b);
            'outer: for q in 0..n {
                for p in 0..n {
                    if self.poset.leq(q, p) != self.poset.leq(g.action.apply(q), g.action.apply(p)) {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            order.case(ok, || format!("{} is not an order automorphism", g.label));
        }

        let mut closure = CheckRecord::new("group", "identity, closure under composition, inverses", Mode::Exhaustive);
        closure.case(self.group[0].action.is_identity(), || "first element is not the identity".into());
        for g in &self.group {
            closure.case(self.element_by_action(&g.action.inverse()).is_some(), || {
                format!("inverse of {} is missing", g.label)
            });
            for h in &self.group {
                closure.case(self.element_by_action(&g.action.compose(&h.action)).is_some(), || {
                    format!("{} ∘ {} is missing", g.label, h.label)
                });
            }
        }

        let mut normal = CheckRecord::new(
            "normality",
            "π H π⁻¹ contains some listed generator for every π and listed H",
            Mode::Exhaustive,
        );
        let member_sets: Vec<BTreeSet<usize>> = self
            .gens
            .iter()
            .map(|gen| (0..self.group.len()).filter(|&i| gen.contains(&self.group[i].label)).collect())
            .collect();
        for g in &self.group {
            let inv = g.action.inverse();
            for (gi, gen) in self.gens.iter().enumerate() {
                let conj: Option<BTreeSet<usize>> = member_sets[gi]
                    .iter()
                    .map(|&h| {
                        let a = g.action.compose(&self.group[h].action).compose(&inv);
                        self.by_action.get(&a).copied()
                    })
                    .collect();
                let ok = conj.is_some_and(|c| member_sets.iter().any(|m| m.is_subset(&c)));
                normal.case(ok, || format!("conjugating {gen} by {} leaves every generator", g.label));
            }
        }
        vec![order, closure, normal]
    }

    /// `π fix(e) π⁻¹ = fix(π″e)` as membership predicates, for every group
    /// element and every product generator.
    pub fn conjugation_check(&self) -> crate::report::CheckRecord {
        use crate::report::{CheckRecord, Mode};
        let mut rec = CheckRecord::new("conjugation", "π fix(e) π⁻¹ = fix(π″e)", Mode::Exhaustive);
        let labels: Vec<&Aut> = self.group.iter().map(|g| &g.label).collect();
        for pi in &labels {
            let inv = pi.base.inverse();
            for gen in self.gens.iter().filter(|g| g.stages.is_empty()) {
                let image = conjugate_fix(&pi.base, &gen.base);
                for rho in &labels {
                    // ρ ∈ π fix(e) π⁻¹ iff π⁻¹ ρ π ∈ fix(e).
                    let pulled = inv.compose(&rho.base).compose(&pi.base);
                    let lhs = pulled.fixes_all(&gen.base);
                    let rhs = rho.base.fixes_all(&image);
                    rec.case(lhs == rhs, || format!("π = {}, e = {gen}, ρ = {}", pi.base, rho.base));
                }
            }
        }
        rec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::Condition;
    use crate::hf::GroundValue;
    use crate::name::product_generic;
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn system(width: usize) -> SymmetricSystem {
        let inner = Poset::cohen(1).unwrap();
        SymmetricSystem::build_t(&inner, width, TruncationConfig::default()).unwrap()
    }

    fn at_copy(sys: &SymmetricSystem, copy: u32, bit: u32) -> u32 {
        let c = Condition::Product(vec![(copy, Condition::Cohen(vec![(0, bit)]))]);
        sys.poset().index_of(&c).unwrap()
    }

    fn nat(n: usize, sys: &SymmetricSystem) -> PName {
        PName::check(&GroundValue::nat(n), sys.poset().top())
    }

    #[test]
    fn conjugating_fixed_sets() {
        let id = CoordPerm::identity(3);
        assert_eq!(conjugate_fix(&id, &set(&[1])), set(&[1]));
        let swap = CoordPerm::transposition(3, 0, 1);
        assert_eq!(conjugate_fix(&swap, &set(&[1])), set(&[0]));
        let fix1 = Gen::product(set(&[1]));
        assert!(fix1.contains(&Aut::product(CoordPerm::transposition(3, 0, 2))));
        assert!(!fix1.contains(&Aut::product(CoordPerm::transposition(3, 1, 2))));
    }

    #[test]
    fn fixing_generics_and_checks() {
        let sys = system(2);
        let g0 = product_generic(sys.poset(), 0);
        let g1 = product_generic(sys.poset(), 1);
        let check = nat(1, &sys);
        for gen in sys.gens() {
            assert!(sys.fix_leq_sym(gen, &check).holds);
        }
        assert!(sys.fix_leq_sym(&Gen::product(set(&[0])), &g0).holds);
        assert!(!sys.fix_leq_sym(&Gen::product(set(&[])), &g0).holds);
        let family = PName::bullet([g0, g1], sys.poset().top());
        let t = sys.fix_leq_sym(&Gen::product(set(&[])), &family);
        assert!(t.holds && t.exhaustive_fallback && t.supports());
    }

    #[test]
    fn hereditary_symmetry() {
        let sys = system(2);
        let top = sys.poset().top();
        assert!(sys.is_hereditarily_symmetric(&nat(3, &sys)));
        let g0 = product_generic(sys.poset(), 0);
        let wrapped = PName::new([(top, g0.clone())]);
        assert!(sys.is_hereditarily_symmetric(&wrapped));
        assert_eq!(sys.symmetry_witness(&wrapped), Some(&Gen::product(set(&[0]))));

        let x = PName::new([(at_copy(&sys, 0, 1), nat(0, &sys)), (at_copy(&sys, 1, 1), nat(1, &sys))]);
        let swap = sys.element(&Aut::product(CoordPerm::transposition(2, 0, 1))).unwrap();
        assert_ne!(x.apply(&swap.action), x);
        assert!(!sys.is_hereditarily_symmetric(&x));
        // The trivial subgroups fix it, but only because the truncation is small.
        let t = sys.fix_leq_sym(&Gen::product(set(&[0])), &x);
        assert!(t.holds && t.degenerate);
    }

    #[test]
    fn orbits() {
        let sys = system(3);
        assert_eq!(sys.orbit(&nat(0, &sys)).unwrap().len(), 1);
        let g0 = product_generic(sys.poset(), 0);
        let mut expected: Vec<PName> = (0..3).map(|n| product_generic(sys.poset(), n)).collect();
        expected.sort();
        assert_eq!(sys.orbit(&g0).unwrap(), expected);

        let poset = sys.poset();
        let canonical = PName::new(
            (0..poset.len() as u32).map(|p| (p, PName::check(&poset.cond(p).encode(), poset.top()))).collect::<Vec<_>>(),
        );
        let orbit = sys.orbit(&canonical).unwrap().len();
        assert_eq!(orbit * sys.sym(&canonical).len(), sys.group().len());
    }

    #[test]
    fn dense_sets() {
        let sys = system(2);
        let poset = sys.poset();
        let all = poset.set_of(0..poset.len() as u32);
        assert!(sys.symmetric_dense_check(&all));
        let at0 = poset.set_of((0..poset.len() as u32).filter(|&p| poset.cond(p).product_domain().contains(&0)));
        assert!(sys.stabilizes(&Gen::product(set(&[0])), &at0));
        let cone = poset.below_set(at_copy(&sys, 0, 1)).clone();
        assert!(!sys.stabilizes(&Gen::product(set(&[])), &cone));
    }

    #[test]
    fn group_and_filter_laws() {
        for w in 1..=3 {
            let sys = system(w);
            for rec in sys.validate() {
                assert!(rec.passed(), "{}: {:?}", rec.name, rec.failures);
            }
            assert!(sys.conjugation_check().passed());
        }
        let sys = system(3);
        for a in sys.gens() {
            for b in sys.gens() {
                let union = Gen::product(a.base.union(&b.base).copied().collect());
                for g in sys.group() {
                    assert_eq!(union.contains(&g.label), a.contains(&g.label) && b.contains(&g.label));
                }
            }
        }
        let g1 = product_generic(sys.poset(), 1);
        let stab = sys.sym(&g1);
        for &i in &stab {
            let inv = sys.group()[i].action.inverse();
            assert!(stab.contains(&sys.group().iter().position(|g| g.action == inv).unwrap()));
            for &j in &stab {
                let c = sys.group()[i].action.compose(&sys.group()[j].action);
                assert!(stab.contains(&sys.group().iter().position(|g| g.action == c).unwrap()));
            }
        }
    }

    proptest! {
        #[test]
        fn reduction_matches_enumeration(picks in proptest::collection::vec((0u32..64, 0usize..6), 0..5)) {
            let sys = system(3);
            let n = sys.poset().len() as u32;
            let children: Vec<PName> = (0..3)
                .map(|c| product_generic(sys.poset(), c))
                .chain((0..3).map(|k| nat(k, &sys)))
                .collect();
            let x = PName::new(picks.iter().map(|&(p, c)| (p % n, children[c].clone())).collect::<Vec<_>>());
            for gen in sys.gens() {
                prop_assert_eq!(sys.fix_leq_sym(gen, &x).holds, sys.fix_leq_sym_exhaustive(gen, &x));
            }
        }
    }
}
