//! The symmetric iteration of Cohen reals and collapses at desk scale:
//! the tower, its canonical names, the order on the `X` hierarchy,
//! minimal-support search, homogeneity automorphisms, and the witness that
//! no symmetric injection from an ordinal into the generics survives.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::condition::{Condition, Coord};
use crate::config::TruncationConfig;
use crate::error::{Error, Result};
use crate::hf::GroundValue;
use crate::iteration::{AutSeq, Iteration, Seq, Stage};
use crate::formula::Formula;
use crate::name::{product_generic, PName};
use crate::poset::{Filter, Poset};
use crate::report::{CheckRecord, Mode};
use crate::perm::CoordPerm;
use crate::symmetry::{Aut, Gen, SymmetricSystem};

/// Depth, width, Cohen domain, collapse bound and name rank of a tower.
pub type PincusConfig = TruncationConfig;

/// The truncated tower: stage 0 is `𝒯(Cohen)` and stage `δ ≥ 1` is
/// `𝒯(Coll(C, Ȧ_δ))`, with the collapse target read through the registry
/// order, so `Ȧ_δ` has `δ·W` indices.
pub struct Tower {
    cfg: PincusConfig,
    it: Iteration,
}

/// Block of a first-stage generic filter: 0 when every Cohen real is empty.
fn tower_blocks(base: &SymmetricSystem) -> Vec<u32> {
    let poset = base.poset();
    poset
        .minimal_reps()
        .iter()
        .map(|&m| {
            let all_zero = poset.cond(m).product_domain().iter().all(|&n| match poset.cond(m).product_cell(n) {
                Some(Condition::Cohen(map)) => map.iter().all(|&(_, b)| b == 0),
                _ => true,
            });
            u32::from(!all_zero)
        })
        .collect()
}

impl Tower {
    pub fn build(cfg: PincusConfig) -> Result<Self> {
        cfg.validate()?;
        let base = Arc::new(SymmetricSystem::build_t(&Poset::cohen(cfg.cohen_domain)?, cfg.product_width, cfg)?);
        let stages = (1..cfg.iteration_depth)
            .map(|delta| {
                let coll = Poset::coll(delta * cfg.product_width, cfg.coll_target_bound)
                    .map_err(|e| attribute(e, delta))?;
                Stage::product(&coll, cfg.product_width).map_err(|e| attribute(e, delta))
            })
            .collect::<Result<Vec<_>>>()?;
        let blocks = tower_blocks(&base);
        Ok(Tower { cfg, it: Iteration::new(base, blocks, stages)? })
    }

    pub fn config(&self) -> &PincusConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> &Iteration {
        &self.it
    }

    pub fn depth(&self) -> usize {
        self.cfg.iteration_depth
    }

    pub fn width(&self) -> usize {
        self.cfg.product_width
    }

    /// The whole tower as a materialized system, when it fits.
    pub fn system(&self) -> Result<Arc<SymmetricSystem>> {
        self.it.system(self.depth())
    }

    /// `ġ_{α,n}^G` read off a generic point: the Cohen real as the set of
    /// its 1-bits at stage 0, the collapse map as a set of pairs later on.
    pub fn generic_value(&self, point: &Seq, alpha: usize, n: usize) -> GroundValue {
        let (cell, pairs) = if alpha == 0 {
            (self.it.base().poset().cond(point.base).product_cell(n).cloned(), false)
        } else {
            let blk = self.it.block_of_minimal(point.base) as usize;
            let objects = self.it.stages()[alpha - 1].objects();
            (objects.cond(point.terms[alpha - 1][blk]).product_cell(n).cloned(), true)
        };
        let map = match cell {
            Some(Condition::Cohen(m)) | Some(Condition::Collapse(m)) => m,
            _ => Vec::new(),
        };
        if pairs {
            GroundValue::from_members(
                map.iter().map(|&(k, j)| GroundValue::pair(GroundValue::nat(k as usize), GroundValue::nat(j as usize))),
            )
        } else {
            GroundValue::from_members(map.iter().filter(|&&(_, b)| b == 1).map(|&(k, _)| GroundValue::nat(k as usize)))
        }
    }

    /// Position in the materialized tower of a first-stage condition padded with `𝟙`.
    fn lift_base(&self, p: u32) -> u32 {
        self.it.index(&self.it.pad(&Seq { base: p, terms: Vec::new() }, self.depth())) as u32
    }

    /// `ġ_{α,n}` over the materialized tower. At stage 0 the product generic
    /// on copy `n`; later, `{(p̄, (k, j)ˇ) : p̄(α) = {n ↦ {k ↦ j}} in every block}`.
    /// Both are forced equal to the canonical name over all conditions.
    pub fn g_name(&self, sys: &SymmetricSystem, alpha: usize, n: usize) -> Result<PName> {
        let top = sys.poset().top();
        if alpha >= self.depth() || n >= self.width() {
            return Err(Error::input(format!("no generic at ({alpha}, {n})")));
        }
        if alpha == 0 {
            let g = product_generic(self.it.base().poset(), n);
            if self.depth() == 1 {
                return Ok(g);
            }
            return Ok(g.map_conditions(&|p| self.lift_base(p)));
        }
        let objects = self.it.stages()[alpha - 1].objects();
        let mut entries = Vec::new();
        for k in 0..self.cfg.coll_target_bound {
            for j in 0..alpha * self.width() {
                let cell = Condition::Product(vec![(n as u32, Condition::Collapse(vec![(k as u32, j as u32)]))]);
                let obj = objects.index_of(&cell).expect("collapse cell is a condition");
                let mut p = self.it.top(self.depth());
                p.terms[alpha - 1] = vec![obj; self.it.nblocks()];
                let value = GroundValue::pair(GroundValue::nat(k), GroundValue::nat(j));
                entries.push((self.it.index(&p) as u32, PName::check(&value, top)));
            }
        }
        Ok(PName::new(entries))
    }
}

fn attribute(e: Error, stage: usize) -> Error {
    match e {
        Error::Budget { message, .. } => Error::budget_at(stage, message),
        other => other,
    }
}

/// The named names of a materialized tower.
pub struct Registry {
    /// `ġ_{α,n}` for every stage and copy.
    pub g: BTreeMap<Coord, PName>,
    /// `Ȧ_δ` for `δ = 1..=depth`, as the bullet of the orbits of the
    /// `ġ_{α,n}` with `α < δ`.
    pub a: Vec<PName>,
    /// `Ġ`, the canonical name for the generic filter.
    pub generic: PName,
    /// `Γ̇ = {π̄(Ġ) : π̄ ∈ 𝒢}•`.
    pub gamma: PName,
    /// Check-names of the iterands, one per later stage.
    pub iterands: Vec<PName>,
}

impl Tower {
    pub fn registry(&self, sys: &SymmetricSystem) -> Result<Registry> {
        let top = sys.poset().top();
        let mut g = BTreeMap::new();
        for alpha in 0..self.depth() {
            for n in 0..self.width() {
                g.insert((alpha, n), self.g_name(sys, alpha, n)?);
            }
        }
        let mut a = Vec::new();
        for delta in 1..=self.depth() {
            let mut members = BTreeSet::new();
            for (_, x) in g.range((0, 0)..(delta, 0)) {
                members.extend(sys.orbit(x)?);
            }
            a.push(PName::bullet(members, top));
        }
        let generic = PName::new(
            (0..sys.poset().len() as u32).map(|p| (p, PName::check(&sys.poset().cond(p).encode(), top))).collect::<Vec<_>>(),
        );
        let gamma = PName::bullet(sys.orbit(&generic)?, top);
        let iterands = self.it.stages().iter().map(|s| PName::check(&s.encode(), top)).collect();
        Ok(Registry { g, a, generic, gamma, iterands })
    }

    fn stage_blocks(&self) -> Vec<usize> {
        vec![self.it.nblocks(); self.depth() - 1]
    }

    /// `fix(e)` as a generator label of the tower.
    pub fn fix(&self, e: &BTreeSet<Coord>) -> Gen {
        Gen::fix(e, &self.stage_blocks())
    }

    /// The generic point of the tower below a generic filter of the
    /// materialized system.
    pub fn point_of(&self, filter: &Filter) -> Result<Seq> {
        let m = filter.generator().ok_or_else(|| Error::input("filter has no generating condition"))?;
        Ok(self.it.seq_at(self.depth(), m as u128))
    }

    /// Every registry name evaluates as it should under every generic
    /// filter, `Ȧ_δ` is forced to be `{ġ_{α,n} : α < δ}•`, and the
    /// symmetry claims about the names hold.
    pub fn registry_coherence(&self, sys: &SymmetricSystem, reg: &Registry) -> Result<CheckRecord> {
        let mut rec = CheckRecord::new(
            "registry coherence",
            "Ȧ_δ is forced to equal {ġ_{α,n} : (α,n) ∈ δ×ω}• and fix({(α,n)}) ≤ sym(ġ_{α,n})",
            Mode::Exhaustive,
        );
        let poset = sys.poset();
        for filter in poset.generic_filters() {
            let point = self.point_of(&filter)?;
            let mut values = BTreeMap::new();
            for (&(alpha, n), x) in &reg.g {
                let v = x.evaluate(poset, &filter)?;
                let expected = self.generic_value(&point, alpha, n);
                rec.case(v == expected, || format!("ġ_{{{alpha},{n}}} evaluates to {v} at {point:?}, expected {expected}"));
                values.insert((alpha, n), v);
            }
            for (d, a) in reg.a.iter().enumerate() {
                let got = a.evaluate(poset, &filter)?;
                let want = GroundValue::from_members(values.range((0, 0)..(d + 1, 0)).map(|(_, v)| v.clone()));
                rec.case(got == want, || format!("Ȧ_{} evaluates to {got} at {point:?}, expected {want}", d + 1));
            }
            let g_val = reg.generic.evaluate(poset, &filter)?;
            let members = GroundValue::from_members(filter.iter().map(|p| poset.cond(p).encode()));
            rec.case(g_val == members, || format!("Ġ is not the filter at {point:?}"));
            let gamma = reg.gamma.evaluate(poset, &filter)?;
            rec.case(gamma.contains(&g_val), || format!("Γ̇ misses Ġ at {point:?}"));
        }
        for (&(alpha, n), x) in &reg.g {
            let gen = self.fix(&BTreeSet::from([(alpha, n)]));
            rec.case(sys.fix_leq_sym(&gen, x).supports(), || format!("fix({{({alpha},{n})}}) does not fix ġ_{{{alpha},{n}}}"));
            rec.case(sys.is_hereditarily_symmetric(x), || format!("ġ_{{{alpha},{n}}} is not hereditarily symmetric"));
        }
        let whole = sys.group().len();
        for (d, a) in reg.a.iter().enumerate() {
            rec.case(sys.is_hereditarily_symmetric(a), || format!("Ȧ_{} is not hereditarily symmetric", d + 1));
            rec.case(sys.sym(a).len() == whole, || format!("sym(Ȧ_{}) is not the whole group", d + 1));
        }
        rec.case(sys.sym(&reg.gamma).len() == whole, || "sym(Γ̇) is not the whole group".into());
        for (i, t) in reg.iterands.iter().enumerate() {
            rec.case(sys.sym(t).len() == whole, || format!("sym of the stage {} iterand name is not the whole group", i + 1));
        }
        Ok(rec)
    }
}

/// An element of the truncated hierarchy `X₀ = {0..base}`,
/// `X_{k+1} = (X_k)^length`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum XElem {
    Nat(u32),
    Seq(Vec<XElem>),
}

impl XElem {
    pub fn to_ground(&self) -> GroundValue {
        match self {
            XElem::Nat(n) => GroundValue::nat(*n as usize),
            XElem::Seq(xs) => GroundValue::tuple(xs.iter().map(XElem::to_ground)),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            XElem::Nat(n) => serde_json::json!(n),
            XElem::Seq(xs) => serde_json::Value::Array(xs.iter().map(XElem::to_json).collect()),
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Number(n) => n
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .map(XElem::Nat)
                .ok_or_else(|| Error::input(format!("{n} is not a natural number"))),
            serde_json::Value::Array(xs) => Ok(XElem::Seq(xs.iter().map(XElem::from_json).collect::<Result<_>>()?)),
            other => Err(Error::input(format!("{other} is not an element of the hierarchy"))),
        }
    }
}

/// The truncated hierarchy `X₀ ∪ … ∪ X_depth` with its canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hierarchy {
    pub base: u32,
    pub length: usize,
    pub depth: usize,
}

impl Hierarchy {
    /// The least `k` with `x ∈ X_k`, or an input error.
    pub fn level(&self, x: &XElem) -> Result<usize> {
        let k = match x {
            XElem::Nat(n) if *n < self.base => 0,
            XElem::Nat(n) => return Err(Error::input(format!("{n} is outside X₀ = {{0..{}}}", self.base))),
            XElem::Seq(xs) => {
                if xs.len() != self.length {
                    return Err(Error::input(format!("sequence of length {} in a hierarchy of length {}", xs.len(), self.length)));
                }
                let levels = xs.iter().map(|c| self.level(c)).collect::<Result<BTreeSet<_>>>()?;
                match levels.iter().collect::<Vec<_>>()[..] {
                    [&l] => l + 1,
                    _ => return Err(Error::input("sequence entries come from different levels")),
                }
            }
        };
        if k > self.depth {
            return Err(Error::input(format!("element of X_{k} above the truncation X_{}", self.depth)));
        }
        Ok(k)
    }

    /// `x < y`: lower levels first, the natural order on `X₀`, and
    /// lexicographic order on each `X_{k+1}`.
    pub fn lt(&self, x: &XElem, y: &XElem) -> Result<bool> {
        let (lx, ly) = (self.level(x)?, self.level(y)?);
        Ok(lx < ly || (lx == ly && same_level_lt(x, y)))
    }

    /// `X_k`, in increasing order.
    pub fn level_elements(&self, k: usize) -> Vec<XElem> {
        if k == 0 {
            return (0..self.base).map(XElem::Nat).collect();
        }
        let below = self.level_elements(k - 1);
        let mut out: Vec<Vec<XElem>> = vec![Vec::new()];
        for _ in 0..self.length {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    below.iter().map(move |c| {
                        let mut v = prefix.clone();
                        v.push(c.clone());
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(XElem::Seq).collect()
    }

    /// `X₀ ∪ … ∪ X_depth`.
    pub fn elements(&self) -> Vec<XElem> {
        (0..=self.depth).flat_map(|k| self.level_elements(k)).collect()
    }
}

fn same_level_lt(x: &XElem, y: &XElem) -> bool {
    match (x, y) {
        (XElem::Nat(a), XElem::Nat(b)) => a < b,
        (XElem::Seq(xs), XElem::Seq(ys)) => match xs.iter().zip(ys).find(|(a, b)| a != b) {
            Some((a, b)) => same_level_lt(a, b),
            None => false,
        },
        _ => false,
    }
}

/// `{α} × a` supports `ẏ`, and `q̄ ⊩ ẋ = ẏ`.
#[derive(Clone, Debug)]
pub struct MinimalSupportWitness {
    pub condition: u32,
    pub name: PName,
    pub stage: usize,
    pub copies: BTreeSet<usize>,
    /// `(stage, copies)` candidates ruled out at this condition before the witness.
    pub smaller_candidates: usize,
    /// Other copy sets of the same size that also worked. Empty when the
    /// minimal support is unique.
    pub ties: Vec<BTreeSet<usize>>,
    /// The extension clause of the definition, checked over the universe:
    /// no `q̄' ≤ q̄` forces `ẏ` equal to a name supported by `{α} × a'`
    /// with `a ⊄ a'`, and no earlier stage supports a name forced equal
    /// to `ẏ`. `None` when not checked.
    pub extension_clause: Option<bool>,
}

/// Order in which candidates are tried. `seed` shuffles the universe and
/// the copy sets of each size; the result must not depend on it.
#[derive(Clone, Copy, Debug, Default)]
pub struct SearchOrder {
    pub seed: Option<u64>,
    pub check_extensions: bool,
}

impl Tower {
    /// Stage-`α` copy sets in search order: by size, then lexicographically.
    fn copy_sets(&self, order: &SearchOrder) -> Vec<Vec<BTreeSet<usize>>> {
        let mut tiers: Vec<Vec<BTreeSet<usize>>> = vec![Vec::new(); self.width() + 1];
        for a in crate::symmetry::subsets(self.width()) {
            tiers[a.len()].push(a);
        }
        if let Some(seed) = order.seed {
            use rand::seq::SliceRandom;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            for t in &mut tiers {
                t.shuffle(&mut rng);
            }
        }
        tiers
    }

    /// Hereditarily symmetric names to search: `ẋ`, its orbit, the check
    /// names of its values, and the universe of rank `R` over the minimal
    /// conditions with at most two pairs per node.
    pub fn support_universe(&self, sys: &SymmetricSystem, x: &PName) -> Result<Vec<PName>> {
        let poset = sys.poset();
        let top = poset.top();
        let mut out: BTreeSet<PName> = sys.orbit(x)?.into_iter().collect();
        for f in poset.generic_filters() {
            out.insert(PName::check(&x.evaluate(poset, &f)?, top));
        }
        let mut conds: Vec<u32> = poset.minimal_reps().to_vec();
        conds.push(top);
        let atoms: Vec<PName> = x.entries().iter().map(|(_, c)| c.clone()).collect();
        out.extend(crate::name::name_universe(&conds, &atoms, self.cfg.name_rank_bound.min(1), 2)?);
        Ok(out.into_iter().filter(|y| sys.is_hereditarily_symmetric(y)).collect())
    }

    /// Search, in the order (condition, stage ascending, `|a|` ascending,
    /// `a`), for `q̄ ≤ p̄`, `ẏ` and `{α} × a` with `fix({α} × a) ≤ sym(ẏ)`
    /// and `q̄ ⊩ ẋ = ẏ`. Conditions are tried from `p̄` downwards in index
    /// order. Within a size, the lexicographically least working `a` wins.
    pub fn minimal_support_search(
        &self,
        sys: &SymmetricSystem,
        x: &PName,
        p: u32,
        universe: &[PName],
        order: &SearchOrder,
    ) -> Result<MinimalSupportWitness> {
        let poset = sys.poset();
        let forcer = crate::forcing::Forcer::new(poset);
        let mut names: Vec<&PName> = universe.iter().collect();
        if let Some(seed) = order.seed {
            use rand::seq::SliceRandom;
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0x5eed);
            names.shuffle(&mut rng);
        }
        let tiers = self.copy_sets(order);
        let supported = |y: &PName, alpha: usize, a: &BTreeSet<usize>| {
            let e = a.iter().map(|&n| (alpha, n)).collect();
            sys.fix_leq_sym(&self.fix(&e), y).supports()
        };
        let conditions = std::iter::once(p).chain(poset.below(p).filter(|&q| q != p));
        for q in conditions {
            let equal: Vec<&PName> = names
                .iter()
                .copied()
                .filter(|y| forcer.forces(q, &Formula::eq(x.clone(), (*y).clone())).unwrap_or(false))
                .collect();
            let mut smaller = 0;
            for alpha in 0..self.depth() {
                for tier in &tiers {
                    let mut found: Vec<(BTreeSet<usize>, &PName)> = Vec::new();
                    for a in tier {
                        if let Some(y) = equal.iter().find(|y| supported(y, alpha, a)) {
                            found.push((a.clone(), y));
                        } else {
                            smaller += 1;
                        }
                    }
                    found.sort_by(|u, v| u.0.cmp(&v.0));
                    if let Some((a, y)) = found.first().cloned() {
                        let ties = found[1..].iter().map(|(b, _)| b.clone()).collect();
                        let extension_clause = order
                            .check_extensions
                            .then(|| self.extension_clause(sys, &forcer, y, q, alpha, &a, &names, &supported));
                        return Ok(MinimalSupportWitness {
                            condition: q,
                            name: y.clone(),
                            stage: alpha,
                            copies: a,
                            smaller_candidates: smaller,
                            ties,
                            extension_clause,
                        });
                    }
                }
            }
        }
        Err(Error::budget("no name in the bounded universe has a support below the condition"))
    }

    #[allow(clippy::too_many_arguments)]
    fn extension_clause(
        &self,
        sys: &SymmetricSystem,
        forcer: &crate::forcing::Forcer,
        y: &PName,
        q: u32,
        alpha: usize,
        a: &BTreeSet<usize>,
        names: &[&PName],
        supported: &dyn Fn(&PName, usize, &BTreeSet<usize>) -> bool,
    ) -> bool {
        let sets = crate::symmetry::subsets(self.width());
        let earlier_ok = names.iter().all(|z| {
            let eq = Formula::eq(y.clone(), (*z).clone());
            (0..alpha).all(|beta| !sets.iter().any(|b| supported(z, beta, b)) || forcer.forces(q, &eq.clone().not()).unwrap_or(false))
        });
        earlier_ok
            && sys.poset().below(q).all(|q2| {
                names.iter().all(|z| {
                    let bad = sets.iter().any(|b| !a.is_subset(b) && supported(z, alpha, b));
                    !bad || !forcer.forces(q2, &Formula::eq(y.clone(), (*z).clone())).unwrap_or(false)
                })
            })
    }
}

/// Swap each copy of `dom_r ∩ dom_p` with the next copy outside both.
fn separating(dom_r: &BTreeSet<usize>, dom_p: &BTreeSet<usize>, width: usize, stage: usize) -> Result<CoordPerm> {
    let moving: Vec<usize> = dom_r.intersection(dom_p).copied().collect();
    let fresh: Vec<usize> = (0..width).filter(|n| !dom_r.contains(n) && !dom_p.contains(n)).collect();
    if fresh.len() < moving.len() {
        return Err(Error::budget_at(stage, format!("{width} copies cannot separate {dom_r:?} from {dom_p:?}")));
    }
    let mut images: Vec<u32> = (0..width as u32).collect();
    for (&i, &j) in moving.iter().zip(&fresh) {
        images.swap(i, j);
    }
    CoordPerm::from_images(images)
}

/// The automorphism built for the no-injection argument and its three facts.
#[derive(Clone, Debug)]
pub struct NotacReport {
    pub automorphism: Aut,
    /// The copy swapped with 0 at stage `α`, per block.
    pub swapped: Vec<usize>,
    pub facts: Vec<CheckRecord>,
}

impl NotacReport {
    pub fn passed(&self) -> bool {
        self.facts.iter().all(CheckRecord::passed)
    }
}

impl Tower {
    /// `π̄` with identity entries below `cutoff` and, from `cutoff` on, entries
    /// moving the domain of `π̄↾β(r̄)(β)` off the domain of `p̄(β)` in every
    /// block. Returned only once `π̄ ∈ fix(e)` for all `e` below the cutoff
    /// and `π̄(r̄) ∥ p̄` have been checked.
    pub fn homogeneity_automorphism(&self, p: &Seq, r: &Seq, cutoff: usize) -> Result<AutSeq> {
        let it = &self.it;
        let len = p.len();
        if r.len() != len || len > self.depth() || cutoff > len {
            return Err(Error::input("conditions of different lengths or cutoff past the tower"));
        }
        let mut label = it.label(&it.identity_aut(len));
        let to_seq = |l: &Aut| it.aut_from_label(l).ok_or_else(|| Error::Construction("automorphism outside the catalog".into()));
        for beta in cutoff..len {
            let img = it.apply(&to_seq(&label)?, r);
            if beta == 0 {
                let poset = it.base().poset();
                let (dr, dp) = (poset.cond(img.base).product_domain(), poset.cond(p.base).product_domain());
                label.base = separating(&dr, &dp, self.width(), 0)?;
            } else {
                let objects = it.stages()[beta - 1].objects();
                for c in 0..it.nblocks() {
                    let dr = objects.cond(img.terms[beta - 1][c]).product_domain();
                    let dp = objects.cond(p.terms[beta - 1][c]).product_domain();
                    label.stages[beta - 1][c] = separating(&dr, &dp, self.width(), beta)?;
                }
            }
        }
        let a = to_seq(&label)?;
        let below: BTreeSet<Coord> = (0..cutoff).flat_map(|s| (0..self.width()).map(move |n| (s, n))).collect();
        if !Gen::fix(&below, &vec![it.nblocks(); len - 1]).contains(&label) {
            return Err(Error::Construction("automorphism moves a stage below the cutoff".into()));
        }
        if !it.compatible(&it.apply(&a, r), p) {
            return Err(Error::Construction("π̄(r̄) and p̄ are incompatible below the cutoff".into()));
        }
        Ok(a)
    }

    /// For `fix(e)` with `e` below stage `α` and `q̄` deciding its stage-`α`
    /// entry, build `π̄` switching copy 0 at stage `α` with the least `n > 0`
    /// outside `dom q̇(α)`, and check (1) `π̄ ∈ fix(e)`, (2) `π̄(ġ_{α,0}) ≠
    /// ġ_{α,0}` under every generic filter, (3) `π̄(q̄') ∥ q̄'` for
    /// `q̄' = q̄↾(α+1)⌢⟨𝟙̇⟩`. `gamma` is the ordinal whose image `q̄`
    /// decides; it only labels the report.
    pub fn notac_witness(&self, e: &BTreeSet<Coord>, gamma: usize, alpha: usize, q: &Seq) -> Result<NotacReport> {
        let it = &self.it;
        let len = self.depth();
        if alpha >= len || q.len() <= alpha {
            return Err(Error::input(format!("stage {alpha} is not decided by the condition")));
        }
        if let Some(&(s, n)) = e.iter().find(|&&(s, _)| s >= alpha) {
            let pinned = if (s, n) == (alpha, 0) { ", and π̄ would move the pinned copy 0" } else { "" };
            return Err(Error::Precondition(format!("({s}, {n}) ∈ e is not below stage {alpha}{pinned}")));
        }
        let q1 = it.pad(&it.restrict(q, alpha + 1), len);
        let mut label = it.label(&it.identity_aut(len));
        let switch = |dom: BTreeSet<usize>| -> Result<(usize, CoordPerm)> {
            let n = (1..self.width())
                .find(|n| !dom.contains(n))
                .ok_or_else(|| Error::budget_at(alpha, "no copy above 0 outside the domain"))?;
            Ok((n, CoordPerm::transposition(self.width(), 0, n)))
        };
        let mut swapped = Vec::new();
        if alpha == 0 {
            let (n, perm) = switch(it.base().poset().cond(q.base).product_domain())?;
            swapped.push(n);
            label.base = perm;
        } else {
            let objects = it.stages()[alpha - 1].objects();
            for c in 0..it.nblocks() {
                let (n, perm) = switch(objects.cond(q.terms[alpha - 1][c]).product_domain())?;
                swapped.push(n);
                label.stages[alpha - 1][c] = perm;
            }
        }
        let a = it.aut_from_label(&label).ok_or_else(|| Error::Construction("automorphism outside the catalog".into()))?;
        let mut fix_rec = CheckRecord::new("π̄ ∈ fix(e)", "π̄ fixes every (β, n) ∈ e", Mode::Exhaustive);
        fix_rec.case(self.fix(e).contains(&label), || format!("{label} moves a pinned coordinate of {e:?}"));
        let mut moved = CheckRecord::new(
            "π̄ moves ġ_{α,0}",
            "it is forced that π̄(ġ_{α,0}) ≠ ġ_{α,0}",
            Mode::Exhaustive,
        );
        moved.note(format!("stage {alpha}, image of γ = {gamma}"));
        let inv = it.inverse(&a);
        for k in it.generic_points(len) {
            let here = self.generic_value(&k, alpha, 0);
            let there = self.generic_value(&it.apply(&inv, &k), alpha, 0);
            moved.case(here != there, || format!("both evaluate to {here} at {k:?}"));
        }
        let mut compat = CheckRecord::new("π̄(q̄') ∥ q̄'", "π̄(q̄') is compatible with q̄'", Mode::Exhaustive);
        compat.case(it.compatible(&it.apply(&a, &q1), &q1), || format!("{label} moves q̄' to an incompatible condition"));
        Ok(NotacReport { automorphism: label, swapped, facts: vec![fix_rec, moved, compat] })
    }
}

/// `q̄ ⊩ ẋ = ẏ` with `fix(e) ≤ sym(ẏ)`.
#[derive(Clone, Debug)]
pub struct FixReduction {
    pub condition: u32,
    pub name: PName,
    pub e: BTreeSet<Coord>,
}

/// `q̄ ⊩ π̄(ẋ) = τ_f(ẋ)`.
#[derive(Clone, Debug)]
pub struct AutReduction {
    pub condition: u32,
    pub f: Vec<CoordPerm>,
    pub tau: Aut,
}

impl Tower {
    /// `p̄` followed by the conditions below it, in index order.
    fn extensions(&self, sys: &SymmetricSystem, p: u32) -> impl Iterator<Item = u32> + '_ {
        let below: Vec<u32> = sys.poset().below(p).filter(|&q| q != p).collect();
        std::iter::once(p).chain(below)
    }

    /// The blocks still possible below a condition of the materialized tower.
    fn reach_of(&self, q: u32) -> Vec<usize> {
        let seq = self.it.seq_at(self.depth(), q as u128);
        self.it.reach(seq.base).iter().map(|&b| b as usize).collect()
    }

    /// Decide a generator below `q`: its stage entries agree on every
    /// reachable block.
    fn decided_fix(&self, h: &Gen, q: u32) -> Option<BTreeSet<Coord>> {
        let reach = self.reach_of(q);
        let mut e: BTreeSet<Coord> = h.base.iter().map(|&n| (0, n)).collect();
        for (i, s) in h.stages.iter().enumerate() {
            let first = &s[reach[0]];
            if reach.iter().any(|&b| &s[b] != first) {
                return None;
            }
            e.extend(first.iter().map(|&n| (i + 1, n)));
        }
        Some(e)
    }

    /// Extend `p̄` until the generator `H̄ ≤ sym(ẋ)` is decided to be
    /// `fix(e)`, then collect `ẏ = {(r̄, ż) : r̄ decides H̄ the same way,
    /// r̄ ⊩ ż ∈ ẋ}` with `ż` from the orbits of the children of `ẋ`.
    /// Without an explicit `H̄` the first listed symmetry witness is used.
    pub fn reduce_to_fix(&self, sys: &SymmetricSystem, x: &PName, p: u32, h: Option<&Gen>) -> Result<FixReduction> {
        let h = match h {
            Some(h) => h.clone(),
            None => sys.symmetry_witness(x).cloned().ok_or_else(|| Error::Precondition("the name is not symmetric".into()))?,
        };
        if !sys.fix_leq_sym(&h, x).holds {
            return Err(Error::Precondition(format!("{h} is not below sym of the name")));
        }
        if let Some(e) = h.as_fix() {
            return Ok(FixReduction { condition: p, name: x.clone(), e });
        }
        let (q, e) = self
            .extensions(sys, p)
            .find_map(|q| self.decided_fix(&h, q).map(|e| (q, e)))
            .ok_or_else(|| Error::budget("no extension decides the generator"))?;
        let mut candidates = BTreeSet::new();
        for (_, z) in x.entries() {
            candidates.extend(sys.orbit(z)?);
        }
        let forcer = crate::forcing::Forcer::new(sys.poset());
        let mut entries = Vec::new();
        for r in 0..sys.poset().len() as u32 {
            if self.decided_fix(&h, r).as_ref() != Some(&e) {
                continue;
            }
            for z in &candidates {
                if forcer.forces(r, &Formula::member(z.clone(), x.clone()))? {
                    entries.push((r, z.clone()));
                }
            }
        }
        let y = PName::new(entries);
        if !sys.fix_leq_sym(&self.fix(&e), &y).holds {
            return Err(Error::Construction(format!("fix({e:?}) does not fix the collected name")));
        }
        if !forcer.forces(q, &Formula::eq(x.clone(), y.clone()))? {
            return Err(Error::Construction("the collected name is not forced equal".into()));
        }
        Ok(FixReduction { condition: q, name: y, e })
    }

    /// Extend `p̄` until every entry of `π̄` is decided to be a single
    /// permutation `f(β)`, and check `q̄ ⊩ π̄(ẋ) = τ_f(ẋ)`.
    pub fn reduce_autom(&self, sys: &SymmetricSystem, pi: &Aut, p: u32, x: &PName) -> Result<AutReduction> {
        let decided = |q: u32| -> Option<Vec<CoordPerm>> {
            let reach = self.reach_of(q);
            let mut f = vec![pi.base.clone()];
            for s in &pi.stages {
                let first = &s[reach[0]];
                if reach.iter().any(|&b| &s[b] != first) {
                    return None;
                }
                f.push(first.clone());
            }
            Some(f)
        };
        let (q, f) = self
            .extensions(sys, p)
            .find_map(|q| decided(q).map(|f| (q, f)))
            .ok_or_else(|| Error::budget("no extension decides the automorphism"))?;
        let tau = Aut::tau(&f, self.it.nblocks());
        let lookup = |a: &Aut| sys.element(a).ok_or_else(|| Error::input(format!("{a} is not in the group")));
        let (g_pi, g_tau) = (lookup(pi)?, lookup(&tau)?);
        let phi = Formula::eq(x.apply(&g_pi.action), x.apply(&g_tau.action));
        if !crate::forcing::Forcer::new(sys.poset()).forces(q, &phi)? {
            return Err(Error::Construction(format!("{q} does not force π̄(ẋ) = τ_f(ẋ)")));
        }
        Ok(AutReduction { condition: q, f, tau })
    }

    /// Recover `ẋ^G` as `⋃ {ẋ^H : H ∈ Γ̇^G, ġ_{α,n}^H = ġ_{α,n}^G for (α,n) ∈ e}`.
    /// Each `H` is `π̄⁻¹[G]`, so `ẏ^H = π̄(ẏ)^G`.
    pub fn definability_check(
        &self,
        sys: &SymmetricSystem,
        reg: &Registry,
        x: &PName,
        e: &BTreeSet<Coord>,
        filter: &Filter,
    ) -> Result<bool> {
        let poset = sys.poset();
        let mut y = BTreeSet::new();
        for g in sys.group() {
            let mut agrees = true;
            for coord in e {
                let gn = reg.g.get(coord).ok_or_else(|| Error::input(format!("no generic at {coord:?}")))?;
                if gn.apply(&g.action).evaluate(poset, filter)? != gn.evaluate(poset, filter)? {
                    agrees = false;
                    break;
                }
            }
            if agrees {
                y.extend(x.apply(&g.action).evaluate(poset, filter)?.members().iter().cloned());
            }
        }
        Ok(GroundValue::from_members(y) == x.evaluate(poset, filter)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cfg(depth: usize, width: usize) -> PincusConfig {
        PincusConfig { iteration_depth: depth, product_width: width, ..PincusConfig::default() }
    }

    #[test]
    fn tower_sizes() {
        let t = Tower::build(cfg(2, 2)).unwrap();
        assert_eq!(t.iteration().count(2), 4096);
        assert_eq!(t.iteration().aut_count(2), 8);
        assert_eq!(t.iteration().generic_points(2).len(), 16);
        let t3 = Tower::build(cfg(2, 3)).unwrap();
        assert_eq!(t3.iteration().generic_points(2).len(), 216);
        assert!(t3.system().err().is_some_and(|e| e.is_budget()));
    }

    #[test]
    fn depth_one_is_the_cohen_system() {
        let t = Tower::build(cfg(1, 2)).unwrap();
        let sys = t.system().unwrap();
        assert_eq!(sys.poset().len(), 16);
        assert_eq!(sys.product_width(), Some(2));
    }

    #[test]
    fn registry_is_coherent() {
        for c in [cfg(1, 2), cfg(2, 2)] {
            let t = Tower::build(c).unwrap();
            let sys = t.system().unwrap();
            let reg = t.registry(&sys).unwrap();
            let rec = t.registry_coherence(&sys, &reg).unwrap();
            assert!(rec.passed(), "{rec:?}");
        }
    }

    #[test]
    fn hierarchy_order() {
        let h = Hierarchy { base: 2, length: 2, depth: 2 };
        let x1 = h.level_elements(1);
        let n = XElem::Nat;
        assert_eq!(x1, vec![
            XElem::Seq(vec![n(0), n(0)]),
            XElem::Seq(vec![n(0), n(1)]),
            XElem::Seq(vec![n(1), n(0)]),
            XElem::Seq(vec![n(1), n(1)]),
        ]);
        for w in x1.windows(2) {
            assert!(h.lt(&w[0], &w[1]).unwrap());
        }
        let all = h.elements();
        assert_eq!(all.len(), 2 + 4 + 16);
        for (i, x) in all.iter().enumerate() {
            assert!(!h.lt(x, x).unwrap());
            for (j, y) in all.iter().enumerate() {
                assert_eq!(h.lt(x, y).unwrap(), i < j);
            }
        }
        assert!(h.level(&n(2)).is_err());
        assert!(h.level(&XElem::Seq(vec![n(0)])).is_err());
        assert!(h.level(&XElem::Seq(vec![n(0), XElem::Seq(vec![n(0), n(0)])])).is_err());
        let x3 = XElem::Seq(vec![all[10].clone(), all[10].clone()]);
        assert!(h.level(&x3).is_err());
    }

    #[test]
    fn minimal_support_of_a_cohen_generic() {
        let t = Tower::build(cfg(1, 2)).unwrap();
        let sys = t.system().unwrap();
        let top = sys.poset().top();
        let g = t.g_name(&sys, 0, 1).unwrap();
        let universe = t.support_universe(&sys, &g).unwrap();
        let order = SearchOrder { seed: None, check_extensions: true };
        let w = t.minimal_support_search(&sys, &g, top, &universe, &order).unwrap();
        assert_eq!((w.condition, w.stage), (top, 0));
        assert_eq!(w.copies, BTreeSet::from([1]));
        assert!(w.ties.is_empty());
        // Every finite Cohen condition decides the real, so some extension
        // forces the generic equal to a check-name.
        assert_eq!(w.extension_clause, Some(false));
        for seed in 0..4 {
            let again = t.minimal_support_search(&sys, &g, top, &universe, &SearchOrder { seed: Some(seed), check_extensions: false }).unwrap();
            assert_eq!((again.stage, &again.copies), (0, &w.copies));
        }
        let c = PName::check(&GroundValue::nat(1), top);
        let w = t.minimal_support_search(&sys, &c, top, &t.support_universe(&sys, &c).unwrap(), &order).unwrap();
        assert_eq!((w.stage, w.copies.len()), (0, 0));
        assert_eq!(w.extension_clause, Some(true));
    }

    fn product_cond(poset: &Poset, cells: &[(u32, Condition)]) -> u32 {
        poset.index_of(&Condition::Product(cells.to_vec())).unwrap()
    }

    fn cohen_bit(b: u32) -> Condition {
        Condition::Cohen(vec![(0, b)])
    }

    #[test]
    fn homogeneity_separates_domains() {
        let t = Tower::build(cfg(1, 4)).unwrap();
        let it = t.iteration();
        let poset = it.base().poset();
        let p = Seq { base: product_cond(poset, &[(0, cohen_bit(1)), (1, cohen_bit(1))]), terms: vec![] };
        let r = Seq { base: product_cond(poset, &[(0, cohen_bit(0)), (1, cohen_bit(0))]), terms: vec![] };
        assert!(!it.compatible(&p, &r));
        let a = t.homogeneity_automorphism(&p, &r, 0).unwrap();
        let label = it.label(&a);
        assert_eq!(label.base.image_of(&BTreeSet::from([0, 1])), BTreeSet::from([2, 3]));
        assert!(it.compatible(&it.apply(&a, &r), &p));
        let id = t.homogeneity_automorphism(&p, &it.top(1), 0).unwrap();
        assert!(it.label(&id).is_identity());

        let narrow = Tower::build(cfg(1, 2)).unwrap();
        let poset = narrow.iteration().base().poset();
        let p = Seq { base: product_cond(poset, &[(0, cohen_bit(1)), (1, cohen_bit(1))]), terms: vec![] };
        let r = Seq { base: product_cond(poset, &[(0, cohen_bit(0)), (1, cohen_bit(0))]), terms: vec![] };
        assert!(narrow.homogeneity_automorphism(&p, &r, 0).unwrap_err().is_budget());
    }

    #[test]
    fn homogeneity_above_a_cutoff() {
        let t = Tower::build(cfg(2, 2)).unwrap();
        let it = t.iteration();
        let objects = it.stages()[0].objects();
        let cell = |j| product_cond(objects, &[(0, Condition::Collapse(vec![(0, j)]))]);
        let mut p = it.top(2);
        let mut r = it.top(2);
        p.terms[0] = vec![cell(0); 2];
        r.terms[0] = vec![cell(1); 2];
        let a = t.homogeneity_automorphism(&p, &r, 1).unwrap();
        assert!(!it.aut_supp(&a).contains(&0));
        assert!(it.compatible(&it.apply(&a, &r), &p));
    }

    #[test]
    fn conditions_agreeing_below_a_stage_force_the_same() {
        let t = Tower::build(cfg(2, 2)).unwrap();
        let it = t.iteration();
        let sys = t.system().unwrap();
        let top = sys.poset().top();
        let x = t.g_name(&sys, 0, 0).unwrap();
        let forcer = crate::forcing::Forcer::new(sys.poset());
        let phis: Vec<Formula> = [GroundValue::empty(), GroundValue::singleton(GroundValue::nat(0))]
            .iter()
            .map(|v| Formula::eq(x.clone(), PName::check(v, top)))
            .collect();
        for q in 0..sys.poset().len() as u32 {
            let seq = it.seq_at(2, q as u128);
            let p = it.index(&it.pad(&it.restrict(&seq, 1), 2)) as u32;
            for phi in &phis {
                assert_eq!(forcer.forces(q, phi).unwrap(), forcer.forces(p, phi).unwrap(), "{q} and {p}");
            }
        }
    }

    #[test]
    fn notac_witness_on_three_copies() {
        let t = Tower::build(cfg(2, 3)).unwrap();
        let it = t.iteration();
        let objects = it.stages()[0].objects();
        let mut q = it.top(2);
        q.terms[0] = vec![product_cond(objects, &[(0, Condition::Collapse(vec![(0, 0)]))]); it.nblocks()];
        let e = BTreeSet::from([(0, 0)]);
        let report = t.notac_witness(&e, 0, 1, &q).unwrap();
        assert_eq!(report.swapped, vec![1; it.nblocks()]);
        assert!(report.facts[0].passed());
        assert!(report.facts[2].passed());
        // With finitely many collapse values, ġ_{1,0} and ġ_{1,1} agree on
        // a third of the generic filters.
        assert_eq!(report.facts[1].cases, 216);
        assert_eq!(report.facts[1].failure_count, 72);
        let pinned = BTreeSet::from([(1, 0)]);
        assert!(matches!(t.notac_witness(&pinned, 0, 1, &q), Err(Error::Precondition(_))));
    }

    #[test]
    fn reduction_to_fixed_sets() {
        let t = Tower::build(cfg(2, 2)).unwrap();
        let it = t.iteration();
        let sys = t.system().unwrap();
        let top = sys.poset().top();
        let x = PName::check(&GroundValue::nat(1), top);
        let plain = t.reduce_to_fix(&sys, &x, top, None).unwrap();
        assert_eq!((plain.condition, &plain.name), (top, &x));

        let split = Gen { base: BTreeSet::new(), stages: vec![vec![BTreeSet::from([0]), BTreeSet::from([1])]] };
        let base = it.base().poset();
        let zero = product_cond(base, &[(0, cohen_bit(0)), (1, cohen_bit(0))]);
        let one = product_cond(base, &[(0, cohen_bit(1)), (1, cohen_bit(0))]);
        let lift = |b| it.index(&it.pad(&Seq { base: b, terms: vec![] }, 2)) as u32;
        let r0 = t.reduce_to_fix(&sys, &x, lift(zero), Some(&split)).unwrap();
        let r1 = t.reduce_to_fix(&sys, &x, lift(one), Some(&split)).unwrap();
        assert_eq!(r0.e, BTreeSet::from([(1, 0)]));
        assert_eq!(r1.e, BTreeSet::from([(1, 1)]));
    }

    #[test]
    fn reduction_to_uniform_automorphisms() {
        let t = Tower::build(cfg(2, 2)).unwrap();
        let it = t.iteration();
        let sys = t.system().unwrap();
        let swap = CoordPerm::transposition(2, 0, 1);
        let pi = Aut { base: CoordPerm::identity(2), stages: vec![vec![CoordPerm::identity(2), swap.clone()]] };
        let x = t.g_name(&sys, 1, 0).unwrap();
        let base = it.base().poset();
        let one = product_cond(base, &[(0, cohen_bit(1)), (1, cohen_bit(1))]);
        let p = it.index(&it.pad(&Seq { base: one, terms: vec![] }, 2)) as u32;
        let red = t.reduce_autom(&sys, &pi, p, &x).unwrap();
        assert_eq!(red.condition, p);
        assert_eq!(red.f, vec![CoordPerm::identity(2), swap]);
        let from_top = t.reduce_autom(&sys, &pi, sys.poset().top(), &x).unwrap();
        assert!(sys.poset().leq(from_top.condition, sys.poset().top()));
        assert!(from_top.tau.is_tau());
    }

    #[test]
    fn definability_from_gamma_and_generics() {
        let t = Tower::build(cfg(1, 2)).unwrap();
        let sys = t.system().unwrap();
        let reg = t.registry(&sys).unwrap();
        let x = reg.g[&(0, 1)].clone();
        let filters = sys.poset().generic_filters();
        assert_eq!(filters.len(), 4);
        let e = BTreeSet::from([(0, 1)]);
        for f in &filters {
            assert!(t.definability_check(&sys, &reg, &x, &e, f).unwrap());
        }
        let shrunk = BTreeSet::new();
        let fails = filters.iter().filter(|f| !t.definability_check(&sys, &reg, &x, &shrunk, f).unwrap()).count();
        assert!(fails > 0);
    }
}
