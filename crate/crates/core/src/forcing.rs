//! The forcing relation for bounded formulas over a finite poset.
//!
//! Unbounded quantifiers range over a finite name universe supplied by the
//! caller. Every report that depends on them says so.

use std::collections::HashMap;

use parking_lot::Mutex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{Formula, Term, Universe};
use crate::hf::GroundValue;
use crate::name::PName;
use crate::poset::{Filter, Poset};

/// How "for all q ≤ p" and "dense below p" are decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Strategy {
    /// Quantify over every condition below `p`.
    Literal,
    /// Quantify over minimal conditions below `p`, one per equivalence class.
    /// On a finite poset `q ⊩ φ` iff every minimal `m ≤ q` forces `φ`, so
    /// this agrees with `Literal`.
    Minimal,
}

type AtomKey = (u32, u64, u64, bool);

pub struct Forcer<'a> {
    poset: &'a Poset,
    strategy: Strategy,
    names: Vec<PName>,
    hs: Vec<PName>,
    symmetric: bool,
    atoms: Mutex<HashMap<AtomKey, bool>>,
    memo: Mutex<HashMap<(u32, Formula), bool>>,
}

impl<'a> Forcer<'a> {
    pub fn new(poset: &'a Poset) -> Self {
        Forcer {
            poset,
            strategy: Strategy::Minimal,
            names: Vec::new(),
            hs: Vec::new(),
            symmetric: false,
            atoms: Mutex::new(HashMap::new()),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    /// The universe for `Universe::Names` quantifiers.
    pub fn with_universe(mut self, names: Vec<PName>) -> Self {
        self.names = names;
        self
    }

    /// The universe for `Universe::Symmetric` quantifiers. The caller
    /// filters it through the hereditary symmetry test.
    pub fn with_symmetric_universe(mut self, hs: Vec<PName>) -> Self {
        self.hs = hs;
        self
    }

    /// Make every quantifier range over the symmetric universe, which turns
    /// `forces` into the symmetric forcing relation.
    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn poset(&self) -> &Poset {
        self.poset
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn universe(&self, u: Universe) -> &[PName] {
        if self.symmetric || u == Universe::Symmetric {
            &self.hs
        } else {
            &self.names
        }
    }

    /// Check the preconditions shared by every query.
    pub fn check(&self, p: u32, phi: &Formula) -> Result<()> {
        if p as usize >= self.poset.len() {
            return Err(Error::input(format!("condition {p} is not in the poset")));
        }
        let free = phi.free_vars();
        if !free.is_empty() {
            return Err(Error::input(format!("formula has free variables {free:?}")));
        }
        let n = self.poset.len() as u32;
        let mut bad = None;
        visit_names(phi, &mut |x| {
            if let Some(c) = x.conditions_used().into_iter().find(|&c| c >= n) {
                bad = Some(c);
            }
        });
        match bad {
            Some(c) => Err(Error::input(format!("name uses condition {c} outside the poset"))),
            None => Ok(()),
        }
    }

    /// `p ⊩ φ` for a closed formula.
    pub fn forces(&self, p: u32, phi: &Formula) -> Result<bool> {
        self.check(p, phi)?;
        Ok(self.force(p, phi))
    }

    fn below(&self, p: u32) -> Vec<u32> {
        match self.strategy {
            Strategy::Literal => self.poset.below(p).collect(),
            Strategy::Minimal => self.poset.minimal_reps_below(p).collect(),
        }
    }

    /// Is `{q : pred(q)}` dense below `p`?
    fn dense(&self, p: u32, pred: impl Fn(u32) -> bool) -> bool {
        match self.strategy {
            Strategy::Literal => {
                let set = self.poset.set_of(self.poset.below(p).filter(|&q| pred(q)));
                self.poset.dense_below(&set, p)
            }
            Strategy::Minimal => self.poset.minimal_reps_below(p).all(pred),
        }
    }

    fn name<'t>(&self, t: &'t Term) -> &'t PName {
        match t {
            Term::Name(n) => n,
            Term::Var(v) => panic!("free variable {v} reached the forcing recursion"),
        }
    }

    pub(crate) fn force(&self, p: u32, phi: &Formula) -> bool {
        match phi {
            Formula::Eq(a, b) => return self.force_eq(p, self.name(a), self.name(b)),
            Formula::In(a, b) => return self.force_in(p, self.name(a), self.name(b)),
            _ => {}
        }
        let key = (p, phi.clone());
        if let Some(&v) = self.memo.lock().get(&key) {
            return v;
        }
        let v = match phi {
            Formula::Eq(..) | Formula::In(..) => unreachable!(),
            Formula::Not(f) => !self.below(p).into_iter().any(|q| self.force(q, f)),
            Formula::And(f, g) => self.force(p, f) && self.force(p, g),
            Formula::Or(f, g) => self.dense(p, |q| self.force(q, f) || self.force(q, g)),
            Formula::Implies(f, g) => self.dense(p, |q| {
                !self.below(q).into_iter().any(|r| self.force(r, f)) || self.force(q, g)
            }),
            Formula::ExistsIn { var, bound, body } => {
                let entries = self.name(bound).entries();
                self.dense(p, |q| {
                    entries
                        .iter()
                        .any(|(r, z)| self.poset.leq(q, *r) && self.force(q, &body.substitute(*var, z)))
                })
            }
            Formula::ForallIn { var, bound, body } => {
                let below = self.below(p);
                self.name(bound).entries().iter().all(|(r, z)| {
                    let inst = body.substitute(*var, z);
                    below
                        .iter()
                        .filter(|&&q| self.poset.leq(q, *r))
                        .all(|&q| self.force(q, &inst))
                })
            }
            Formula::ExistsU { var, universe, body } => {
                let u = self.universe(*universe);
                self.dense(p, |q| u.iter().any(|z| self.force(q, &body.substitute(*var, z))))
            }
            Formula::ForallU { var, universe, body } => self
                .universe(*universe)
                .iter()
                .all(|z| self.force(p, &body.substitute(*var, z))),
        };
        self.memo.lock().insert(key, v);
        v
    }

    /// `p ⊩ x ∈ y`.
    pub(crate) fn force_in(&self, p: u32, x: &PName, y: &PName) -> bool {
        let key = (p, x.id(), y.id(), true);
        if let Some(&v) = self.atoms.lock().get(&key) {
            return v;
        }
        let v = self.dense(p, |q| {
            y.entries()
                .iter()
                .any(|(r, z)| self.poset.leq(q, *r) && self.force_eq(q, z, x))
        });
        self.atoms.lock().insert(key, v);
        v
    }

    /// `p ⊩ x = y`.
    pub(crate) fn force_eq(&self, p: u32, x: &PName, y: &PName) -> bool {
        if x == y {
            return true;
        }
        let key = if x.id() <= y.id() { (p, x.id(), y.id(), false) } else { (p, y.id(), x.id(), false) };
        if let Some(&v) = self.atoms.lock().get(&key) {
            return v;
        }
        let below = self.below(p);
        let half = |a: &PName, b: &PName| {
            a.entries().iter().all(|(r, z)| {
                below
                    .iter()
                    .filter(|&&q| self.poset.leq(q, *r))
                    .all(|&q| self.force_in(q, z, b))
            })
        };
        let v = half(x, y) && half(y, x);
        self.atoms.lock().insert(key, v);
        v
    }
}

pub(crate) fn visit_names(phi: &Formula, f: &mut dyn FnMut(&PName)) {
    let term = |t: &Term, f: &mut dyn FnMut(&PName)| {
        if let Term::Name(n) = t {
            f(n)
        }
    };
    match phi {
        Formula::Eq(a, b) | Formula::In(a, b) => {
            term(a, f);
            term(b, f);
        }
        Formula::Not(g) => visit_names(g, f),
        Formula::And(g, h) | Formula::Or(g, h) | Formula::Implies(g, h) => {
            visit_names(g, f);
            visit_names(h, f);
        }
        Formula::ExistsIn { bound, body, .. } | Formula::ForallIn { bound, body, .. } => {
            term(bound, f);
            visit_names(body, f);
        }
        Formula::ExistsU { body, .. } | Formula::ForallU { body, .. } => visit_names(body, f),
    }
}

/// Semantic evaluation of formulas in `V[G]` restricted to a universe.
pub struct Semantics<'a> {
    poset: &'a Poset,
    filter: &'a Filter,
    names: Vec<GroundValue>,
    hs: Vec<GroundValue>,
    symmetric: bool,
    cache: Mutex<HashMap<u64, GroundValue>>,
}

impl<'a> Semantics<'a> {
    pub fn new(forcer: &Forcer<'a>, filter: &'a Filter) -> Result<Self> {
        let eval = |ns: &[PName]| ns.iter().map(|n| n.evaluate(forcer.poset, filter)).collect::<Result<Vec<_>>>();
        Ok(Semantics {
            poset: forcer.poset,
            filter,
            names: eval(&forcer.names)?,
            hs: eval(&forcer.hs)?,
            symmetric: forcer.symmetric,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn value(&self, t: &Term, env: &HashMap<u32, GroundValue>) -> Result<GroundValue> {
        match t {
            Term::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| Error::input(format!("unbound variable {v}"))),
            Term::Name(n) => {
                if let Some(v) = self.cache.lock().get(&n.id()) {
                    return Ok(v.clone());
                }
                let v = n.evaluate(self.poset, self.filter)?;
                self.cache.lock().insert(n.id(), v.clone());
                Ok(v)
            }
        }
    }

    fn universe(&self, u: Universe) -> &[GroundValue] {
        if self.symmetric || u == Universe::Symmetric {
            &self.hs
        } else {
            &self.names
        }
    }

    pub fn holds(&self, phi: &Formula) -> Result<bool> {
        self.holds_in(phi, &mut HashMap::new())
    }

    fn holds_in(&self, phi: &Formula, env: &mut HashMap<u32, GroundValue>) -> Result<bool> {
        let over = |var: u32, vals: &[GroundValue], body: &Formula, exists: bool, env: &mut HashMap<u32, GroundValue>| {
            let saved = env.get(&var).cloned();
            let mut result = !exists;
            for v in vals {
                env.insert(var, v.clone());
                if self.holds_in(body, env)? == exists {
                    result = exists;
                    break;
                }
            }
            match saved {
                Some(s) => env.insert(var, s),
                None => env.remove(&var),
            };
            Ok::<bool, Error>(result)
        };
        Ok(match phi {
            Formula::Eq(a, b) => self.value(a, env)? == self.value(b, env)?,
            Formula::In(a, b) => self.value(b, env)?.contains(&self.value(a, env)?),
            Formula::Not(f) => !self.holds_in(f, env)?,
            Formula::And(f, g) => self.holds_in(f, env)? && self.holds_in(g, env)?,
            Formula::Or(f, g) => self.holds_in(f, env)? || self.holds_in(g, env)?,
            Formula::Implies(f, g) => !self.holds_in(f, env)? || self.holds_in(g, env)?,
            Formula::ExistsIn { var, bound, body } | Formula::ForallIn { var, bound, body } => {
                let members = self.value(bound, env)?.members().to_vec();
                over(*var, &members, body, matches!(phi, Formula::ExistsIn { .. }), env)?
            }
            Formula::ExistsU { var, universe, body } | Formula::ForallU { var, universe, body } => {
                let vals = self.universe(*universe).to_vec();
                over(*var, &vals, body, matches!(phi, Formula::ExistsU { .. }), env)?
            }
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthViolation {
    /// The minimal condition generating the generic filter.
    pub generic: u32,
    pub forced: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruthReport {
    pub generics: usize,
    pub violations: Vec<TruthViolation>,
    /// Set when some quantifier ranged over a finite name universe rather
    /// than over all names.
    pub universe_bounded: bool,
}

impl TruthReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every generic `G`: some `p ∈ G` forces `φ` iff `φ` holds in the
/// evaluated structure.
pub fn truth_lemma_check(forcer: &Forcer, phi: &Formula) -> Result<TruthReport> {
    forcer.check(forcer.poset.top(), phi)?;
    let mut violations = Vec::new();
    let generics = forcer.poset.generic_filters();
    for g in &generics {
        let forced = g.iter().any(|p| forcer.force(p, phi));
        let holds = Semantics::new(forcer, g)?.holds(phi)?;
        if forced != holds {
            violations.push(TruthViolation { generic: g.generator().unwrap_or(0), forced, holds });
        }
    }
    Ok(TruthReport { generics: generics.len(), violations, universe_bounded: phi.has_unbounded_quantifier() })
}

/// Build `ẏ = {(q, ż) : ż ∈ candidates, q ⊩ ∀y (φ(y) → ż ∈ y)}` for the
/// unique `y` with `p ⊩ φ(y)`. `hole` is the free variable of `φ`.
pub fn name_by_formula(forcer: &Forcer, p: u32, phi: &Formula, hole: u32, candidates: &[PName]) -> Result<PName> {
    let free = phi.free_vars();
    if free.iter().any(|&v| v != hole) {
        return Err(Error::input(format!("formula has free variables besides {hole}: {free:?}")));
    }
    let universe = if forcer.symmetric { Universe::Symmetric } else { Universe::Names };
    let exists = Formula::ExistsU { var: hole, universe, body: Box::new(phi.clone()) };
    forcer.check(p, &exists)?;
    if !forcer.force(p, &exists) {
        return Err(Error::Precondition(format!("condition {p} does not force that a witness exists")));
    }
    let u = forcer.universe(universe);
    for (i, y1) in u.iter().enumerate() {
        for y2 in &u[i + 1..] {
            let both = phi.substitute(hole, y1).and(phi.substitute(hole, y2));
            let unique = both.implies(Formula::eq(y1, y2));
            if !forcer.force(p, &unique) {
                return Err(Error::Precondition(format!(
                    "witness is not forced unique: names #{} and #{} both may satisfy the formula",
                    y1.id(),
                    y2.id()
                )));
            }
        }
    }
    let mut entries = Vec::new();
    for z in candidates {
        let contains = Formula::ForallU {
            var: hole,
            universe,
            body: Box::new(phi.clone().implies(Formula::member(z, Term::Var(hole)))),
        };
        for q in 0..forcer.poset.len() as u32 {
            if forcer.force(q, &contains) {
                entries.push((q, z.clone()));
            }
        }
    }
    Ok(PName::new(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::Condition;
    use crate::formula::var;
    use crate::name::{cohen_generic, name_universe, product_generic};
    use crate::perm::CoordPerm;

    fn nat(p: &Poset, n: usize) -> PName {
        PName::check(&GroundValue::nat(n), p.top())
    }

    #[test]
    fn check_names_are_forced_equal_to_themselves() {
        let c = Poset::cohen(2).unwrap();
        let f = Forcer::new(&c);
        let a = nat(&c, 3);
        for p in 0..c.len() as u32 {
            assert!(f.forces(p, &Formula::eq(&a, &a)).unwrap());
        }
    }

    #[test]
    fn cohen_membership_examples() {
        let c = Poset::cohen(2).unwrap();
        let g = cohen_generic(&c);
        let zero = nat(&c, 0);
        let p = c.index_of(&Condition::Cohen(vec![(0, 1)])).unwrap();
        let inside = Formula::member(&zero, &g);
        for strategy in [Strategy::Literal, Strategy::Minimal] {
            let f = Forcer::new(&c).with_strategy(strategy);
            assert!(f.forces(p, &inside).unwrap());
            assert!(!f.forces(c.top(), &inside).unwrap());
            assert!(!f.forces(c.top(), &inside.clone().not()).unwrap());
        }
    }

    #[test]
    fn free_variables_are_rejected() {
        let c = Poset::cohen(1).unwrap();
        let f = Forcer::new(&c);
        let phi = Formula::member(var(0), cohen_generic(&c));
        assert!(matches!(f.forces(c.top(), &phi), Err(Error::Input(_))));
    }

    #[test]
    fn truth_lemma_on_cohen_one() {
        let c = Poset::cohen(1).unwrap();
        let f = Forcer::new(&c);
        let phi = Formula::member(nat(&c, 0), cohen_generic(&c));
        let report = truth_lemma_check(&f, &phi).unwrap();
        assert!(report.passed());
        assert_eq!(report.generics, 2);
        let winner = c.index_of(&Condition::Cohen(vec![(0, 1)])).unwrap();
        for g in c.generic_filters() {
            let holds = Semantics::new(&f, &g).unwrap().holds(&phi).unwrap();
            assert_eq!(holds, g.generator() == Some(winner));
        }
    }

    #[test]
    fn swap_preserves_forcing() {
        let prod = Poset::product(&Poset::cohen(1).unwrap(), 2).unwrap();
        let swap = prod.copy_action(&CoordPerm::transposition(2, 0, 1)).unwrap();
        let (g0, g1) = (product_generic(&prod, 0), product_generic(&prod, 1));
        let zero = nat(&prod, 0);
        let phis = [
            Formula::member(&zero, &g0),
            Formula::eq(&g0, &g1),
            Formula::member(&zero, &g0).and(Formula::member(&zero, &g1).not()),
            Formula::exists_in(0, &g0, Formula::member(var(0), &g1)),
        ];
        let f = Forcer::new(&prod);
        for phi in &phis {
            let moved = phi.map_names(&|n| n.apply(&swap));
            for p in 0..prod.len() as u32 {
                assert_eq!(f.forces(p, phi).unwrap(), f.forces(swap.apply(p), &moved).unwrap());
            }
        }
    }

    #[test]
    fn strategies_agree_and_satisfy_forcing_laws() {
        let c = Poset::cohen(2).unwrap();
        let g = cohen_generic(&c);
        let universe = name_universe(&[c.top()], &[], 2, 2).unwrap();
        let phis = [
            Formula::member(nat(&c, 1), &g),
            Formula::eq(&g, nat(&c, 1)),
            Formula::forall_in(0, &g, Formula::eq(var(0), nat(&c, 0))),
            Formula::exists_u(0, Universe::Names, Formula::eq(var(0), &g)),
            Formula::member(nat(&c, 0), &g).or(Formula::member(nat(&c, 1), &g)),
            Formula::member(nat(&c, 0), &g).implies(Formula::member(nat(&c, 1), &g)),
        ];
        let lit = Forcer::new(&c).with_strategy(Strategy::Literal).with_universe(universe.clone());
        let min = Forcer::new(&c).with_universe(universe);
        for phi in &phis {
            let neg = phi.clone().not();
            for p in 0..c.len() as u32 {
                let v = lit.forces(p, phi).unwrap();
                assert_eq!(v, min.forces(p, phi).unwrap());
                assert!(!(v && lit.forces(p, &neg).unwrap()));
                if v {
                    assert!(c.below(p).all(|q| lit.forces(q, phi).unwrap()));
                }
                assert!(c.below(p).any(|q| lit.forces(q, phi).unwrap() || lit.forces(q, &neg).unwrap()));
            }
            assert!(truth_lemma_check(&min, phi).unwrap().passed());
        }
    }

    #[test]
    fn symmetric_universe_hides_witnesses() {
        let prod = Poset::product(&Poset::cohen(1).unwrap(), 2).unwrap();
        let g0 = product_generic(&prod, 0);
        let phi = Formula::exists_u(0, Universe::Names, Formula::eq(var(0), &g0));
        let plain = Forcer::new(&prod).with_universe(vec![g0.clone()]);
        let sym = Forcer::new(&prod).with_universe(vec![g0.clone()]).symmetric();
        assert!(plain.forces(prod.top(), &phi).unwrap());
        assert!(!sym.forces(prod.top(), &phi).unwrap());
        let atom = Formula::member(nat(&prod, 0), &g0);
        for p in 0..prod.len() as u32 {
            assert_eq!(plain.forces(p, &atom).unwrap(), sym.forces(p, &atom).unwrap());
        }
    }

    #[test]
    fn defined_names() {
        let c = Poset::cohen(1).unwrap();
        let g = cohen_generic(&c);
        let a = nat(&c, 1);
        let single = PName::bullet([g.clone()], c.top());
        let universe = vec![PName::empty(), a.clone(), g.clone(), single.clone(), nat(&c, 0)];
        let f = Forcer::new(&c).with_universe(universe.clone());

        let y = name_by_formula(&f, c.top(), &Formula::eq(var(0), &a), 0, &universe).unwrap();
        assert!(f.forces(c.top(), &Formula::eq(&y, &a)).unwrap());

        let is_single = Formula::member(&g, var(0)).and(Formula::forall_in(1, var(0), Formula::eq(var(1), &g)));
        let y = name_by_formula(&f, c.top(), &is_single, 0, &universe).unwrap();
        for gen in c.generic_filters() {
            let expect = GroundValue::singleton(g.evaluate(&c, &gen).unwrap());
            assert_eq!(y.evaluate(&c, &gen).unwrap(), expect);
        }

        let loose = Formula::member(var(0), &single).or(Formula::eq(var(0), &a));
        assert!(matches!(name_by_formula(&f, c.top(), &loose, 0, &universe), Err(Error::Precondition(_))));
    }
}
