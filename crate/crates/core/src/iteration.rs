//! Finite-support iterations of symmetric systems.
//!
//! The first stage is a materialized [`SymmetricSystem`]. Every later-stage
//! entry is a name given by a case split: the generic filters of the first
//! stage are partitioned into blocks, and a stage term assigns one iterand
//! object (or permutation, or fixed set) to each block. Conditions,
//! automorphisms and filter generators are sequences of such terms, and the
//! whole iteration can be worked with implicitly when it is too large to
//! materialize.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::condition::{Condition, IterCondition, StageTerm};
use crate::config::{budget, materialize_limit};
use crate::error::{Error, Result};
use crate::hf::GroundValue;
use crate::name::PName;
use crate::perm::{CondPerm, CoordPerm};
use crate::poset::{Poset, PosetKind};
use crate::symmetry::{Aut, Gen, GroupElem, SymmetricSystem};

/// A ground symmetric system used as the iterand of one stage: its poset,
/// its group as copy permutations, and its filter generators as fixed sets.
pub struct Stage {
    objects: Arc<Poset>,
    perms: Vec<CoordPerm>,
    gens: Vec<BTreeSet<usize>>,
    actions: Vec<CondPerm>,
    perm_index: HashMap<CoordPerm, usize>,
    identity: usize,
}

impl Stage {
    /// The identity must be among `perms`.
    pub fn new(objects: Poset, perms: Vec<CoordPerm>, gens: Vec<BTreeSet<usize>>) -> Result<Self> {
        let actions = perms.iter().map(|p| objects.copy_action(p)).collect::<Result<Vec<_>>>()?;
        let identity = perms
            .iter()
            .position(CoordPerm::is_identity)
            .ok_or_else(|| Error::Construction("iterand group has no identity".into()))?;
        let perm_index = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(Stage { objects: Arc::new(objects), perms, gens, actions, perm_index, identity })
    }

    /// `𝒯(ℝ)` as an iterand: `width` copies of `inner`, every permutation of
    /// the copies, and `fix(e)` for every `e`.
    pub fn product(inner: &Poset, width: usize) -> Result<Self> {
        let objects = Poset::product(inner, width)?;
        Stage::new(objects, CoordPerm::all(width), crate::symmetry::subsets(width))
    }

    /// A poset with only the identity and the trivial filter.
    pub fn rigid(objects: Poset) -> Result<Self> {
        Stage::new(objects, vec![CoordPerm::identity(1)], vec![BTreeSet::new()])
    }

    pub fn objects(&self) -> &Arc<Poset> {
        &self.objects
    }

    pub fn perms(&self) -> &[CoordPerm] {
        &self.perms
    }

    pub fn gens(&self) -> &[BTreeSet<usize>] {
        &self.gens
    }

    fn act(&self, perm: usize, obj: u32) -> u32 {
        self.actions[perm].apply(obj)
    }

    fn perm_id(&self, p: &CoordPerm) -> Option<usize> {
        self.perm_index.get(p).copied()
    }

    /// Ground encoding, so the iterand can be named by a check-name.
    pub fn encode(&self) -> GroundValue {
        let conds = GroundValue::from_members(self.objects.conditions().iter().map(Condition::encode));
        let perms = GroundValue::from_members(
            self.perms.iter().map(|p| GroundValue::tuple(p.images().iter().map(|&i| GroundValue::nat(i as usize)))),
        );
        let gens = GroundValue::from_members(
            self.gens.iter().map(|e| GroundValue::from_members(e.iter().map(|&n| GroundValue::nat(n)))),
        );
        GroundValue::tuple([conds, perms, gens])
    }
}

/// A condition of the iteration: a first-stage condition and, for each later
/// stage, one object index per block.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seq {
    pub base: u32,
    pub terms: Vec<Vec<u32>>,
}

/// An automorphism: an index into the first-stage group and one iterand
/// permutation index per block for each later stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AutSeq {
    pub base: usize,
    pub terms: Vec<Vec<usize>>,
}

/// A filter generator: a first-stage generator index and one iterand
/// generator index per block for each later stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenSeq {
    pub base: usize,
    pub terms: Vec<Vec<usize>>,
}

impl Seq {
    /// Number of stages, counting the first.
    pub fn len(&self) -> usize {
        1 + self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A finite-support iteration of length `1 + stages.len()`.
pub struct Iteration {
    base: Arc<SymmetricSystem>,
    stages: Vec<Stage>,
    /// Block of each first-stage minimal representative, in `minimal_reps` order.
    block_of_rep: Vec<u32>,
    nblocks: usize,
    /// Blocks of the generic filters through each first-stage condition.
    reach: Vec<Vec<u32>>,
    /// For each first-stage group element, its permutation of the blocks.
    block_perm: Vec<Vec<u32>>,
    block_perm_inv: Vec<Vec<u32>>,
    /// Minimal representative index for every minimal first-stage condition.
    rep_index: HashMap<u32, usize>,
    systems: parking_lot::Mutex<HashMap<usize, Arc<SymmetricSystem>>>,
}

impl Iteration {
    /// `blocks[k]` is the block of the `k`-th minimal representative of the
    /// first stage. The partition must be invariant under the first-stage
    /// group.
    pub fn new(base: Arc<SymmetricSystem>, blocks: Vec<u32>, stages: Vec<Stage>) -> Result<Self> {
        let poset = base.poset().clone();
        let reps = poset.minimal_reps();
        if blocks.len() != reps.len() {
            return Err(Error::Construction(format!(
                "{} blocks given for {} generic filters",
                blocks.len(),
                reps.len()
            )));
        }
        let nblocks = blocks.iter().map(|&b| b as usize + 1).max().unwrap_or(1);
        let mut rep_index = HashMap::new();
        for &m in poset.minimal() {
            let k = reps.iter().position(|&r| poset.equivalent(r, m)).expect("every minimal condition has a representative");
            rep_index.insert(m, k);
        }
        let reach = (0..poset.len() as u32)
            .map(|p| {
                let set: BTreeSet<u32> = poset.minimal_reps_below(p).map(|m| blocks[rep_index[&m]]).collect();
                set.into_iter().collect()
            })
            .collect();
        let mut block_perm = Vec::with_capacity(base.group().len());
        for g in base.group() {
            let mut image = vec![u32::MAX; nblocks];
            for (k, &m) in reps.iter().enumerate() {
                let target = blocks[rep_index[&g.action.apply(m)]];
                let slot = &mut image[blocks[k] as usize];
                if *slot != u32::MAX && *slot != target {
                    return Err(Error::Construction(format!("{} splits a block of the partition", g.label)));
                }
                *slot = target;
            }
            if image.contains(&u32::MAX) {
                return Err(Error::Construction("a block has no generic filter".into()));
            }
            block_perm.push(image);
        }
        let block_perm_inv = block_perm
            .iter()
            .map(|img| {
                let mut inv = vec![0u32; nblocks];
                for (b, &c) in img.iter().enumerate() {
                    inv[c as usize] = b as u32;
                }
                inv
            })
            .collect();
        Ok(Iteration {
            base,
            stages,
            block_of_rep: blocks,
            nblocks,
            reach,
            block_perm,
            block_perm_inv,
            rep_index,
            systems: Default::default(),
        })
    }

    /// `𝒮 * 𝒯̇` for a check-named iterand, with one block per generic filter
    /// of `𝒮`. `t_name` must be fixed by the whole group of `𝒮` and
    /// denote the iterand under every generic filter.
    pub fn two_step(base: Arc<SymmetricSystem>, iterand: Stage, t_name: &PName) -> Result<Self> {
        for g in base.group() {
            if t_name.apply(&g.action) != *t_name {
                return Err(Error::Construction(format!("sym of the iterand name misses {}", g.label)));
            }
        }
        let expected = iterand.encode();
        for filter in base.poset().generic_filters() {
            if t_name.evaluate(base.poset(), &filter)? != expected {
                return Err(Error::Construction("iterand name does not denote the iterand".into()));
            }
        }
        let blocks = (0..base.poset().minimal_reps().len() as u32).collect();
        Iteration::new(base, blocks, vec![iterand])
    }

    /// Append one stage, keeping the block partition.
    pub fn extend(self, stage: Stage) -> Self {
        let mut it = self;
        it.stages.push(stage);
        it.systems.get_mut().clear();
        it
    }

    /// Number of stages, counting the first.
    pub fn depth(&self) -> usize {
        1 + self.stages.len()
    }

    pub fn base(&self) -> &Arc<SymmetricSystem> {
        &self.base
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn nblocks(&self) -> usize {
        self.nblocks
    }

    /// Blocks of the generic filters through a first-stage condition.
    pub fn reach(&self, p0: u32) -> &[u32] {
        &self.reach[p0 as usize]
    }

    /// Block of the generic filter generated by a minimal first-stage condition.
    pub fn block_of_minimal(&self, m: u32) -> u32 {
        self.block_of_rep[self.rep_index[&m]]
    }

    /// How a first-stage group element permutes the blocks.
    pub fn block_perm(&self, base_elem: usize) -> &[u32] {
        &self.block_perm[base_elem]
    }

    fn base_poset(&self) -> &Poset {
        self.base.poset()
    }
}

/// Mixed-radix position of a block term.
fn term_index(term: &[u32], radix: u128) -> u128 {
    term.iter().rev().fold(0u128, |acc, &x| acc * radix + x as u128)
}

impl Iteration {
    /// `|ℙ_len|`: 1 for the empty sequence, then the first stage times
    /// every block term of the later stages.
    pub fn count(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let mut n = self.base_poset().len() as u128;
        for stage in &self.stages[..len - 1] {
            n = n.saturating_mul((stage.objects.len() as u128).saturating_pow(self.nblocks as u32));
        }
        n
    }

    /// Position of a condition among all conditions of its length.
    pub fn index(&self, p: &Seq) -> u128 {
        let mut idx = 0u128;
        for (i, term) in p.terms.iter().enumerate().rev() {
            let radix = (self.stages[i].objects.len() as u128).pow(self.nblocks as u32);
            idx = idx * radix + term_index(term, self.stages[i].objects.len() as u128);
        }
        idx * self.base_poset().len() as u128 + p.base as u128
    }

    pub fn seq_at(&self, len: usize, mut idx: u128) -> Seq {
        let nb = self.base_poset().len() as u128;
        let base = (idx % nb) as u32;
        idx /= nb;
        let mut terms = Vec::with_capacity(len - 1);
        for stage in &self.stages[..len - 1] {
            let r = stage.objects.len() as u128;
            let mut term = Vec::with_capacity(self.nblocks);
            for _ in 0..self.nblocks {
                term.push((idx % r) as u32);
                idx /= r;
            }
            terms.push(term);
        }
        Seq { base, terms }
    }

    pub fn top(&self, len: usize) -> Seq {
        Seq {
            base: self.base_poset().top(),
            terms: self.stages[..len - 1].iter().map(|s| vec![s.objects.top(); self.nblocks]).collect(),
        }
    }

    /// `q̄ ≤ p̄`: first stages ordered and, at every later stage, the entry of
    /// `q̄` is forced below that of `p̄` by `q̄`'s restriction. An entry only
    /// depends on the first-stage block, so forcing reduces to the blocks
    /// reachable below `q̄`'s first stage.
    pub fn leq(&self, q: &Seq, p: &Seq) -> bool {
        if !self.base_poset().leq(q.base, p.base) {
            return false;
        }
        let reach = self.reach(q.base);
        q.terms.iter().zip(&p.terms).zip(&self.stages).all(|((qt, pt), stage)| {
            reach.iter().all(|&b| stage.objects.leq(qt[b as usize], pt[b as usize]))
        })
    }

    /// A common extension, if there is one: below a shared generic filter
    /// of the first stage, the later entries only need to meet in one block.
    pub fn meet(&self, p: &Seq, q: &Seq) -> Option<Seq> {
        let base = self.base_poset();
        for m in base.minimal_reps_below(p.base) {
            if !base.leq(m, q.base) {
                continue;
            }
            let b = self.block_of_minimal(m) as usize;
            let mut terms = Vec::with_capacity(p.terms.len());
            let mut ok = true;
            for ((pt, qt), stage) in p.terms.iter().zip(&q.terms).zip(&self.stages) {
                let objects = &stage.objects;
                let below = objects.below_set(pt[b]).intersection(objects.below_set(qt[b])).next();
                match below {
                    Some(r) => {
                        let mut term = vec![objects.top(); self.nblocks];
                        term[b] = r as u32;
                        terms.push(term);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Some(Seq { base: m, terms });
            }
        }
        None
    }

    pub fn compatible(&self, p: &Seq, q: &Seq) -> bool {
        self.meet(p, q).is_some()
    }

    /// `p̄↾len`.
    pub fn restrict(&self, p: &Seq, len: usize) -> Seq {
        Seq { base: p.base, terms: p.terms[..len - 1].to_vec() }
    }

    /// `p̄⌢⟨𝟙̇ : β ∈ [len(p̄), len)⟩`.
    pub fn pad(&self, p: &Seq, len: usize) -> Seq {
        let mut out = p.clone();
        for stage in &self.stages[p.terms.len()..len - 1] {
            out.terms.push(vec![stage.objects.top(); self.nblocks]);
        }
        out
    }

    /// `supp(p̄)`: stages whose entry is not forced to be `𝟙`. Every block is
    /// reachable from the top, so this is "some block holds a non-top object".
    pub fn supp(&self, p: &Seq) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if p.base != self.base_poset().top() {
            out.insert(0);
        }
        for (i, (t, stage)) in p.terms.iter().zip(&self.stages).enumerate() {
            if t.iter().any(|&o| o != stage.objects.top()) {
                out.insert(i + 1);
            }
        }
        out
    }

    /// `supp(p̄)` recomputed by evaluating each entry under every generic
    /// filter of the preceding stages.
    pub fn supp_slow(&self, p: &Seq) -> BTreeSet<usize> {
        let base = self.base_poset();
        let mut out = BTreeSet::new();
        if base.cond(p.base) != base.cond(base.top()) {
            out.insert(0);
        }
        for (i, t) in p.terms.iter().enumerate() {
            let top = self.stages[i].objects.top();
            if base.minimal_reps().iter().any(|&m| t[self.block_of_minimal(m) as usize] != top) {
                out.insert(i + 1);
            }
        }
        out
    }

    /// Encoded as a [`Condition`], blocks in order.
    pub fn to_condition(&self, p: &Seq) -> Condition {
        Condition::Iter(IterCondition {
            base: Box::new(self.base_poset().cond(p.base).clone()),
            stages: p
                .terms
                .iter()
                .zip(&self.stages)
                .map(|(t, s)| StageTerm { blocks: t.iter().map(|&o| s.objects.cond(o).clone()).collect() })
                .collect(),
        })
    }

    pub fn from_condition(&self, c: &Condition) -> Option<Seq> {
        let Condition::Iter(ic) = c else { return None };
        let base = self.base_poset().index_of(&ic.base)?;
        if ic.stages.len() > self.stages.len() {
            return None;
        }
        let terms = ic
            .stages
            .iter()
            .zip(&self.stages)
            .map(|(t, s)| {
                if t.blocks.len() != self.nblocks {
                    return None;
                }
                t.blocks.iter().map(|o| s.objects.index_of(o)).collect::<Option<Vec<u32>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Seq { base, terms })
    }

    /// One minimal condition per generic filter of `ℙ_len`.
    pub fn generic_points(&self, len: usize) -> Vec<Seq> {
        let mut out = Vec::new();
        for &m in self.base_poset().minimal_reps() {
            let b = self.block_of_minimal(m) as usize;
            let mut partial = vec![Seq { base: m, terms: Vec::new() }];
            for stage in &self.stages[..len - 1] {
                let mut next = Vec::new();
                for s in &partial {
                    for &o in stage.objects.minimal_reps() {
                        let mut term = vec![stage.objects.top(); self.nblocks];
                        term[b] = o;
                        let mut t = s.clone();
                        t.terms.push(term);
                        next.push(t);
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        out
    }
}

impl Iteration {
    pub fn aut_count(&self, len: usize) -> u128 {
        let mut n = self.base.group().len() as u128;
        for stage in &self.stages[..len - 1] {
            n = n.saturating_mul((stage.perms.len() as u128).saturating_pow(self.nblocks as u32));
        }
        n
    }

    pub fn aut_at(&self, len: usize, mut idx: u128) -> AutSeq {
        let nb = self.base.group().len() as u128;
        let base = (idx % nb) as usize;
        idx /= nb;
        let mut terms = Vec::with_capacity(len - 1);
        for stage in &self.stages[..len - 1] {
            let r = stage.perms.len() as u128;
            let mut term = Vec::with_capacity(self.nblocks);
            for _ in 0..self.nblocks {
                term.push((idx % r) as usize);
                idx /= r;
            }
            terms.push(term);
        }
        AutSeq { base, terms }
    }

    /// Every automorphism of `ℙ_len` in the catalog, identity first.
    pub fn auts(&self, len: usize) -> Result<Vec<AutSeq>> {
        let n = self.aut_count(len);
        if n > budget() as u128 {
            return Err(Error::budget_at(len, format!("{n} automorphisms")));
        }
        let mut out: Vec<AutSeq> = (0..n).map(|i| self.aut_at(len, i)).collect();
        let id = self.identity_aut(len);
        let pos = out.iter().position(|a| *a == id).expect("catalog contains the identity");
        out.swap(0, pos);
        Ok(out)
    }

    pub fn identity_aut(&self, len: usize) -> AutSeq {
        AutSeq {
            base: 0,
            terms: self.stages[..len - 1].iter().map(|s| vec![s.identity; self.nblocks]).collect(),
        }
    }

    /// `π̄(p̄)`: the first stage moved by `π₀`, and at each later stage the
    /// entry `π̇(β)((π̄↾β)(ṗ(β)))`. On a case split, `π̄↾β` moves the
    /// blocks and `π̇(β)` acts blockwise.
    pub fn apply(&self, a: &AutSeq, p: &Seq) -> Seq {
        let inv = &self.block_perm_inv[a.base];
        Seq {
            base: self.base.group()[a.base].action.apply(p.base),
            terms: p
                .terms
                .iter()
                .zip(&a.terms)
                .zip(&self.stages)
                .map(|((t, s), stage)| {
                    (0..self.nblocks).map(|c| stage.act(s[c], t[inv[c] as usize])).collect()
                })
                .collect(),
        }
    }

    fn base_compose(&self, a: usize, b: usize) -> usize {
        let g = &self.base.group();
        let label = Aut::product(g[a].label.base.compose(&g[b].label.base));
        self.base.position(&label).expect("first-stage group is closed under composition")
    }

    fn base_inverse(&self, a: usize) -> usize {
        let label = Aut::product(self.base.group()[a].label.base.inverse());
        self.base.position(&label).expect("first-stage group is closed under inverses")
    }

    /// `π̄ ∘ σ̄ = ⟨π̇(β) ∘ (π̄↾β)(σ̇(β))⟩`.
    pub fn compose(&self, a: &AutSeq, b: &AutSeq) -> AutSeq {
        let inv = &self.block_perm_inv[a.base];
        AutSeq {
            base: self.base_compose(a.base, b.base),
            terms: a
                .terms
                .iter()
                .zip(&b.terms)
                .zip(&self.stages)
                .map(|((x, y), stage)| {
                    (0..self.nblocks)
                        .map(|c| {
                            let p = stage.perms[x[c]].compose(&stage.perms[y[inv[c] as usize]]);
                            stage.perm_id(&p).expect("iterand group is closed under composition")
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// `π̄⁻¹ = ⟨(π̄↾β)⁻¹(π̇(β)⁻¹)⟩`.
    pub fn inverse(&self, a: &AutSeq) -> AutSeq {
        let fwd = &self.block_perm[a.base];
        AutSeq {
            base: self.base_inverse(a.base),
            terms: a
                .terms
                .iter()
                .zip(&self.stages)
                .map(|(x, stage)| {
                    (0..self.nblocks)
                        .map(|c| {
                            let p = stage.perms[x[fwd[c] as usize]].inverse();
                            stage.perm_id(&p).expect("iterand group is closed under inverses")
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn aut_restrict(&self, a: &AutSeq, len: usize) -> AutSeq {
        AutSeq { base: a.base, terms: a.terms[..len - 1].to_vec() }
    }

    pub fn aut_pad(&self, a: &AutSeq, len: usize) -> AutSeq {
        let mut out = a.clone();
        for stage in &self.stages[a.terms.len()..len - 1] {
            out.terms.push(vec![stage.identity; self.nblocks]);
        }
        out
    }

    /// `supp(π̄)`: stages whose entry is not forced to be the identity.
    pub fn aut_supp(&self, a: &AutSeq) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if !self.base.group()[a.base].label.is_identity() {
            out.insert(0);
        }
        for (i, (t, stage)) in a.terms.iter().zip(&self.stages).enumerate() {
            if t.iter().any(|&x| !stage.perms[x].is_identity()) {
                out.insert(i + 1);
            }
        }
        out
    }

    pub fn label(&self, a: &AutSeq) -> Aut {
        Aut {
            base: self.base.group()[a.base].label.base.clone(),
            stages: a
                .terms
                .iter()
                .zip(&self.stages)
                .map(|(t, stage)| t.iter().map(|&x| stage.perms[x].clone()).collect())
                .collect(),
        }
    }

    pub fn aut_from_label(&self, label: &Aut) -> Option<AutSeq> {
        let base = self.base.position(&Aut::product(label.base.clone()))?;
        if label.stages.len() > self.stages.len() {
            return None;
        }
        let terms = label
            .stages
            .iter()
            .zip(&self.stages)
            .map(|(t, stage)| {
                if t.len() != self.nblocks {
                    return None;
                }
                t.iter().map(|p| stage.perm_id(p)).collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(AutSeq { base, terms })
    }
}

impl Iteration {
    fn base_gen_members(&self, g: usize) -> impl Iterator<Item = usize> + '_ {
        let gen = &self.base.gens()[g];
        (0..self.base.group().len()).filter(move |&i| gen.contains(&self.base.group()[i].label))
    }

    /// `H̄↾β ≤ sym(Ḣ(β))` for every later stage: a case-split generator name
    /// is only moved through the blocks, so it must be constant along the
    /// block orbits of the first-stage members.
    pub fn gen_valid(&self, g: &GenSeq) -> bool {
        self.base_gen_members(g.base).all(|rho| {
            let fwd = &self.block_perm[rho];
            g.terms.iter().all(|t| (0..self.nblocks).all(|c| t[fwd[c] as usize] == t[c]))
        })
    }

    /// Every valid generator sequence of length `len`, in index order.
    pub fn gens(&self, len: usize) -> Result<Vec<GenSeq>> {
        let mut n = self.base.gens().len() as u128;
        for stage in &self.stages[..len - 1] {
            n = n.saturating_mul((stage.gens.len() as u128).saturating_pow(self.nblocks as u32));
        }
        if n > budget() as u128 {
            return Err(Error::budget_at(len, format!("{n} filter generator sequences")));
        }
        let mut out = Vec::new();
        for mut idx in 0..n {
            let nb = self.base.gens().len() as u128;
            let base = (idx % nb) as usize;
            idx /= nb;
            let mut terms = Vec::with_capacity(len - 1);
            for stage in &self.stages[..len - 1] {
                let r = stage.gens.len() as u128;
                let mut term = Vec::with_capacity(self.nblocks);
                for _ in 0..self.nblocks {
                    term.push((idx % r) as usize);
                    idx /= r;
                }
                terms.push(term);
            }
            let g = GenSeq { base, terms };
            if self.gen_valid(&g) {
                out.push(g);
            }
        }
        Ok(out)
    }

    /// `π̄ ∈ H̄`: the first stage is in `H₀` and every stage entry is forced
    /// into the corresponding generator group.
    pub fn contains(&self, g: &GenSeq, a: &AutSeq) -> bool {
        self.base.gens()[g.base].contains(&self.base.group()[a.base].label)
            && g.terms.iter().zip(&a.terms).zip(&self.stages).all(|((gt, at), stage)| {
                (0..self.nblocks).all(|c| stage.perms[at[c]].fixes_all(&stage.gens[gt[c]]))
            })
    }

    /// `supp(H̄)`: stages whose entry is not forced to be the whole group.
    pub fn gen_supp(&self, g: &GenSeq) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        if self.base_gen_members(g.base).count() != self.base.group().len() {
            out.insert(0);
        }
        for (i, (t, stage)) in g.terms.iter().zip(&self.stages).enumerate() {
            if t.iter().any(|&e| stage.perms.iter().any(|p| !p.fixes_all(&stage.gens[e]))) {
                out.insert(i + 1);
            }
        }
        out
    }

    pub fn gen_label(&self, g: &GenSeq) -> Gen {
        Gen {
            base: self.base.gens()[g.base].base.clone(),
            stages: g
                .terms
                .iter()
                .zip(&self.stages)
                .map(|(t, stage)| t.iter().map(|&e| stage.gens[e].clone()).collect())
                .collect(),
        }
    }

    pub fn gen_from_label(&self, label: &Gen) -> Option<GenSeq> {
        let base = self.base.gens().iter().position(|g| g.base == label.base && g.stages.is_empty())?;
        if label.stages.len() > self.stages.len() {
            return None;
        }
        let terms = label
            .stages
            .iter()
            .zip(&self.stages)
            .map(|(t, stage)| {
                if t.len() != self.nblocks {
                    return None;
                }
                t.iter().map(|e| stage.gens.iter().position(|x| x == e)).collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(GenSeq { base, terms })
    }

    /// `fix(e)` for `e ⊆ stages × copies`, if every section is a listed generator.
    pub fn fix(&self, e: &BTreeSet<crate::condition::Coord>, len: usize) -> Option<GenSeq> {
        self.gen_from_label(&Gen::fix(e, &vec![self.nblocks; len - 1]))
    }

    pub fn gen_pad(&self, g: &GenSeq, len: usize) -> GenSeq {
        let mut out = g.clone();
        for stage in &self.stages[g.terms.len()..len - 1] {
            let whole = stage.gens.iter().position(BTreeSet::is_empty).unwrap_or(0);
            out.terms.push(vec![whole; self.nblocks]);
        }
        out
    }

    pub fn gen_restrict(&self, g: &GenSeq, len: usize) -> GenSeq {
        GenSeq { base: g.base, terms: g.terms[..len - 1].to_vec() }
    }

    /// `Ē` with `Ė(β)` naming `Ḣ(β) ∩ K̇(β)`: for fixed-set generators the
    /// intersection is the generator of the union.
    pub fn intersect(&self, h: &GenSeq, k: &GenSeq) -> Option<GenSeq> {
        let (a, b) = (self.gen_label(h), self.gen_label(k));
        let union = |x: &BTreeSet<usize>, y: &BTreeSet<usize>| x.union(y).copied().collect::<BTreeSet<_>>();
        self.gen_from_label(&Gen {
            base: union(&a.base, &b.base),
            stages: a
                .stages
                .iter()
                .zip(&b.stages)
                .map(|(s, t)| s.iter().zip(t).map(|(x, y)| union(x, y)).collect())
                .collect(),
        })
    }

    /// `⟨π̇(β) (π̄↾β)(Ḣ(β)) π̇(β)⁻¹⟩`, the conjugate generator given by the
    /// stagewise formula. Conjugating `fix(e)` by a permutation gives
    /// `fix(π″e)`.
    pub fn conjugate(&self, a: &AutSeq, g: &GenSeq) -> Option<GenSeq> {
        let label = self.gen_label(g);
        let pi = self.label(a);
        let inv = &self.block_perm_inv[a.base];
        self.gen_from_label(&Gen {
            base: pi.base.image_of(&label.base),
            stages: label
                .stages
                .iter()
                .zip(&pi.stages)
                .map(|(hs, ps)| (0..self.nblocks).map(|c| ps[c].image_of(&hs[inv[c] as usize])).collect())
                .collect(),
        })
    }

    /// `H̄↾β ≤ sym((π̄↾β)⁻¹(π̇(β)⁻¹))` for every stage, the hypothesis of the
    /// conjugation formula.
    pub fn conjugation_hypothesis(&self, a: &AutSeq, g: &GenSeq) -> bool {
        let fwd = &self.block_perm[a.base];
        let named: Vec<Vec<usize>> = a.terms.iter().map(|t| (0..self.nblocks).map(|c| t[fwd[c] as usize]).collect()).collect();
        self.base_gen_members(g.base).all(|rho| {
            let f = &self.block_perm[rho];
            named.iter().all(|t| (0..self.nblocks).all(|c| t[f[c] as usize] == t[c]))
        })
    }
}

impl Iteration {
    /// `ℙ_len` with its group and filter generators as an explicit
    /// [`SymmetricSystem`]. Condition `i` of the poset is `seq_at(len, i)`.
    pub fn materialize(&self, len: usize) -> Result<Arc<SymmetricSystem>> {
        if len == 1 {
            return Ok(self.base.clone());
        }
        let n = self.count(len);
        if n > materialize_limit() as u128 {
            return Err(Error::budget_at(len, format!("{n} conditions exceed the materialization limit")));
        }
        let seqs: Vec<Seq> = (0..n).map(|i| self.seq_at(len, i)).collect();
        let conds = seqs.iter().map(|s| self.to_condition(s)).collect();
        let width = self.base.product_width().unwrap_or(0);
        let poset = Poset::from_order(PosetKind::Iteration { depth: len, width }, conds, |q, p| {
            self.leq(&seqs[q], &seqs[p])
        })?;
        let group = self
            .auts(len)?
            .iter()
            .map(|a| {
                let images = seqs.iter().map(|s| self.index(&self.apply(a, s)) as u32).collect();
                GroupElem { label: self.label(a), action: CondPerm::from_images(images), blocks: self.block_perm[a.base].clone() }
            })
            .collect();
        let gens = self.gens(len)?.iter().map(|g| self.gen_label(g)).collect();
        Ok(Arc::new(SymmetricSystem::new(Arc::new(poset), group, gens, *self.base.config(), None)?))
    }

    /// [`Iteration::materialize`], cached per length.
    pub fn system(&self, len: usize) -> Result<Arc<SymmetricSystem>> {
        if let Some(s) = self.systems.lock().get(&len) {
            return Ok(s.clone());
        }
        let s = self.materialize(len)?;
        self.systems.lock().insert(len, s.clone());
        Ok(s)
    }

    /// The limit clause of the order: `q̄ ≤ p̄` iff every proper restriction is
    /// ordered. Agrees with [`Iteration::leq`] because entries have finite
    /// support.
    pub fn limit_leq(&self, q: &Seq, p: &Seq) -> bool {
        (1..=q.len()).all(|b| self.leq(&self.restrict(q, b), &self.restrict(p, b)))
    }

    /// The limit clause of the action: `π̄(p̄) = ⋃_β (π̄↾β)(p̄↾β)`.
    pub fn limit_apply(&self, a: &AutSeq, p: &Seq) -> Seq {
        let mut out = self.apply(&self.aut_restrict(a, 1), &self.restrict(p, 1));
        for b in 2..=p.len() {
            let part = self.apply(&self.aut_restrict(a, b), &self.restrict(p, b));
            debug_assert_eq!(self.restrict(&part, out.len()), out);
            out.terms.push(part.terms[b - 2].clone());
        }
        out
    }

    /// The limit clause of membership: `π̄ ∈ H̄` iff every restriction is a member.
    pub fn limit_contains(&self, g: &GenSeq, a: &AutSeq) -> bool {
        (1..=a.terms.len() + 1).all(|b| self.contains(&self.gen_restrict(g, b), &self.aut_restrict(a, b)))
    }

    /// Two conditions are identified when each is below the other.
    pub fn equivalent(&self, p: &Seq, q: &Seq) -> bool {
        self.leq(p, q) && self.leq(q, p)
    }
}

impl Iteration {
    /// If `p̄↾β ⊩ π̇(β) = σ̇(β)` at every stage, then `p̄ ⊩ π̄(ẋ) = σ̄(ẋ)` for
    /// every name in `corpus`. The hypothesis is checked first and a failing
    /// stage is reported as a precondition error.
    pub fn equal_automorphism_check(
        &self,
        p: &Seq,
        a: &AutSeq,
        b: &AutSeq,
        corpus: &[PName],
    ) -> Result<crate::report::CheckRecord> {
        use crate::forcing::Forcer;
        use crate::formula::Formula;
        use crate::report::{CheckRecord, Mode};
        if a.base != b.base {
            return Err(Error::Precondition("stage 0: the first-stage permutations differ".into()));
        }
        for (i, (x, y)) in a.terms.iter().zip(&b.terms).enumerate() {
            if let Some(&blk) = self.reach(p.base).iter().find(|&&blk| x[blk as usize] != y[blk as usize]) {
                return Err(Error::Precondition(format!(
                    "stage {}: the entries differ on block {blk}, which the condition does not rule out",
                    i + 1
                )));
            }
        }
        let sys = self.system(p.len())?;
        let (ea, eb) = (
            sys.element(&self.label(a)).ok_or_else(|| Error::input("automorphism outside the catalog"))?,
            sys.element(&self.label(b)).ok_or_else(|| Error::input("automorphism outside the catalog"))?,
        );
        let forcer = Forcer::new(sys.poset());
        let at = self.index(p) as u32;
        let mut rec = CheckRecord::new(
            "equal automorphisms",
            "if p̄↾β ⊩ π̇(β) = σ̇(β) for all β then p̄ ⊩ π̄(ẋ) = σ̄(ẋ)",
            Mode::Exhaustive,
        );
        for x in corpus {
            let phi = Formula::eq(x.apply(&ea.action), x.apply(&eb.action));
            let ok = forcer.forces(at, &phi)?;
            rec.case(ok, || format!("not forced for name #{}", x.id()));
        }
        Ok(rec)
    }
}
