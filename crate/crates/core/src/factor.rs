//! Factoring an iteration at a stage: a name over `ℙ_δ` becomes a name over
//! `ℙ_α` whose value is (the ground code of) a name over the tail `[α, δ)`.
//!
//! Tail names are ground values: a set of pairs `(tail condition, child)`.
//! Later-stage entries only depend on the first-stage block, so once `ℙ_α`
//! is decided for `α ≥ 1` the tail poset is the product of the remaining
//! iterands, ordered componentwise.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hf::GroundValue;
use crate::iteration::{Iteration, Seq};
use crate::name::PName;
use crate::poset::{Filter, Poset};
use crate::report::{CheckRecord, Mode};

impl Iteration {
    /// Ground code of `p̄↾[α, len)` inside the block `block`. For `α = 0` the
    /// tail is the whole condition.
    pub fn tail_code(&self, p: &Seq, alpha: usize, block: usize) -> GroundValue {
        if alpha == 0 {
            return self.to_condition(p).encode();
        }
        GroundValue::tuple(
            p.terms[alpha - 1..]
                .iter()
                .zip(&self.stages()[alpha - 1..])
                .map(|(t, s)| s.objects().cond(t[block]).encode()),
        )
    }

    /// A `ℙ_α`-name for the tail code of `p̄`: a case split over the first
    /// stage, one branch per generic filter.
    fn tail_condition_name(&self, p: &Seq, alpha: usize, top: u32) -> Result<PName> {
        if alpha == 0 {
            return Ok(PName::check(&self.tail_code(p, 0, 0), top));
        }
        let mut entries = Vec::new();
        for &m in self.base().poset().minimal_reps() {
            let lifted = self.pad(&Seq { base: m, terms: Vec::new() }, alpha);
            let at = self.index(&lifted) as u32;
            let code = self.tail_code(p, alpha, self.block_of_minimal(m) as usize);
            entries.extend(code.members().iter().map(|w| (at, PName::check(w, top))));
        }
        Ok(PName::new(entries))
    }

    /// `[ẋ]_{α,δ} = {(p̄↾α, ([p̄↾[α,δ)], [ż]_{α,δ})•) : (p̄, ż) ∈ ẋ}`. The
    /// result is a name over `ℙ_α`, or over the trivial poset when `α = 0`.
    pub fn project_tail(&self, alpha: usize, delta: usize, x: &PName) -> Result<PName> {
        if alpha > delta || delta > self.depth() || delta == 0 {
            return Err(Error::input(format!("cannot factor at {alpha} of {delta}")));
        }
        let top = if alpha == 0 { 0 } else { self.system(alpha)?.poset().top() };
        let mut memo = HashMap::new();
        self.project_rec(alpha, delta, x, top, &mut memo)
    }

    fn project_rec(
        &self,
        alpha: usize,
        delta: usize,
        x: &PName,
        top: u32,
        memo: &mut HashMap<u64, PName>,
    ) -> Result<PName> {
        if let Some(n) = memo.get(&x.id()) {
            return Ok(n.clone());
        }
        let mut entries = Vec::with_capacity(x.len());
        for (p, z) in x.entries() {
            let seq = self.seq_at(delta, *p as u128);
            let head = if alpha == 0 { 0 } else { self.index(&self.restrict(&seq, alpha)) as u32 };
            let tail = self.tail_condition_name(&seq, alpha, top)?;
            let child = self.project_rec(alpha, delta, z, top, memo)?;
            entries.push((head, PName::pair(&tail, &child, top)));
        }
        let out = PName::new(entries);
        memo.insert(x.id(), out.clone());
        Ok(out)
    }

    /// The tail generic filter induced by a generic point of `ℙ_δ`, as a
    /// membership test on tail codes.
    pub fn tail_filter<'a>(&'a self, k: &'a Seq, alpha: usize) -> impl Fn(&GroundValue) -> bool + 'a {
        let block = self.block_of_minimal(k.base) as usize;
        let decode: Vec<HashMap<GroundValue, u32>> = self
            .stages()
            .iter()
            .map(|s| (0..s.objects().len() as u32).map(|o| (s.objects().cond(o).encode(), o)).collect())
            .collect();
        let whole: HashMap<GroundValue, u128> = if alpha == 0 {
            (0..self.count(k.len())).map(|i| (self.to_condition(&self.seq_at(k.len(), i)).encode(), i)).collect()
        } else {
            HashMap::new()
        };
        move |code: &GroundValue| {
            if alpha == 0 {
                return whole.get(code).is_some_and(|&i| self.leq(k, &self.seq_at(k.len(), i)));
            }
            let Some(items) = code.as_tuple() else { return false };
            items.len() == k.terms.len() + 1 - alpha
                && items.iter().enumerate().all(|(j, w)| {
                    let stage = alpha - 1 + j;
                    decode[stage].get(w).is_some_and(|&o| {
                        self.stages()[stage].objects().leq(k.terms[stage][block], o)
                    })
                })
        }
    }

    /// Restriction of a generic point to its first `alpha` stages, as a
    /// filter of `ℙ_α` (the trivial poset when `alpha = 0`).
    pub fn head_filter(&self, k: &Seq, alpha: usize, trivial: &Poset) -> Result<Filter> {
        if alpha == 0 {
            return Ok(trivial.upward_closure(0));
        }
        let sys = self.system(alpha)?;
        Ok(sys.poset().upward_closure(self.index(&self.restrict(k, alpha)) as u32))
    }

    /// `]ẏ[_{α,δ}`, built one generic filter at a time: below the generic
    /// point `k̄` of `ℙ_δ` the name holds the check-names of the members of
    /// `(ẏ^{k̄↾α})^{tail}`. Forced equal to the recursive translation.
    pub fn inject_tail(&self, alpha: usize, delta: usize, y: &PName) -> Result<PName> {
        let trivial = Poset::trivial();
        let head_poset = if alpha == 0 { None } else { Some(self.system(alpha)?) };
        let top = self.system(delta)?.poset().top();
        let mut entries = Vec::new();
        for k in self.generic_points(delta) {
            let g = self.head_filter(&k, alpha, &trivial)?;
            let poset = head_poset.as_ref().map_or(&trivial, |s| s.poset());
            let code = y.evaluate(poset, &g)?;
            let value = tail_value(&code, &self.tail_filter(&k, alpha))?;
            let at = self.index(&k) as u32;
            entries.extend(value.members().iter().map(|w| (at, PName::check(w, top))));
        }
        Ok(PName::new(entries))
    }

    /// `([ẋ]^G)^H = ẋ^{G*H}` for every generic filter of `ℙ_δ` and every
    /// name in the corpus.
    pub fn factorization_check(&self, alpha: usize, delta: usize, corpus: &[PName]) -> Result<CheckRecord> {
        let trivial = Poset::trivial();
        let sys = self.system(delta)?;
        let head_poset = if alpha == 0 { None } else { Some(self.system(alpha)?) };
        let mut rec = CheckRecord::new(
            format!("factorization at {alpha} of {delta}"),
            "([ẋ]^G)^H = ẋ^(G*H)",
            Mode::Exhaustive,
        );
        let projected = corpus.iter().map(|x| self.project_tail(alpha, delta, x)).collect::<Result<Vec<_>>>()?;
        for k in self.generic_points(delta) {
            let whole = sys.poset().upward_closure(self.index(&k) as u32);
            let g = self.head_filter(&k, alpha, &trivial)?;
            let poset = head_poset.as_ref().map_or(&trivial, |s| s.poset());
            let in_tail = self.tail_filter(&k, alpha);
            for (x, px) in corpus.iter().zip(&projected) {
                let direct = x.evaluate(sys.poset(), &whole)?;
                let stepwise = tail_value(&px.evaluate(poset, &g)?, &in_tail)?;
                rec.case(direct == stepwise, || {
                    format!("name #{} at generic {}: {direct} vs {stepwise}", x.id(), self.to_condition(&k))
                });
            }
        }
        Ok(rec)
    }
}

/// Value of a ground-coded tail name under a tail filter.
pub fn tail_value(code: &GroundValue, in_filter: &dyn Fn(&GroundValue) -> bool) -> Result<GroundValue> {
    let mut out = Vec::new();
    for entry in code.members() {
        let (cond, child) = entry
            .as_pair()
            .ok_or_else(|| Error::input(format!("{entry} is not a (condition, name) pair")))?;
        if in_filter(&cond) {
            out.push(tail_value(&child, in_filter)?);
        }
    }
    Ok(GroundValue::from_members(out))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::config::TruncationConfig;
    use crate::iteration::Stage;
    use crate::name::name_universe;
    use crate::symmetry::SymmetricSystem;

    fn toy() -> Iteration {
        let cfg = TruncationConfig::default();
        let base = Arc::new(SymmetricSystem::rigid(Poset::cohen(1).unwrap(), cfg).unwrap());
        let stage = Stage::rigid(Poset::cohen(1).unwrap()).unwrap();
        let name = PName::check(&stage.encode(), base.poset().top());
        Iteration::two_step(base, stage, &name).unwrap()
    }

    fn corpus(it: &Iteration) -> Vec<PName> {
        let sys = it.system(2).unwrap();
        let top = sys.poset().top();
        let conds: Vec<u32> = (0..sys.poset().len() as u32).collect();
        let atoms = [PName::check(&GroundValue::nat(0), top), PName::check(&GroundValue::nat(1), top)];
        let level1 = name_universe(&conds, &atoms, 1, 2).unwrap();
        let mut out: Vec<PName> = level1.iter().step_by(level1.len() / 60).cloned().collect();
        let nested: Vec<PName> = out.iter().take(10).cloned().collect();
        for (i, z) in nested.iter().enumerate() {
            out.push(PName::new([(conds[i * 2], z.clone()), (conds[26 - i], atoms[0].clone())]));
        }
        out.push(PName::new(conds.iter().map(|&q| (q, PName::check(&sys.poset().cond(q).encode(), top))).collect::<Vec<_>>()));
        out
    }

    #[test]
    fn round_trip_at_every_cut() {
        let it = toy();
        let names = corpus(&it);
        assert!(names.len() >= 50);
        for alpha in 0..=2 {
            let rec = it.factorization_check(alpha, 2, &names).unwrap();
            assert!(rec.passed(), "alpha {alpha}: {:?}", rec.failures);
            assert_eq!(rec.cases, names.len() * 4);
        }
    }

    #[test]
    fn inject_undoes_project() {
        let it = toy();
        let sys = it.system(2).unwrap();
        for x in corpus(&it).iter().step_by(7) {
            for alpha in 0..=2 {
                let back = it.inject_tail(alpha, 2, &it.project_tail(alpha, 2, x).unwrap()).unwrap();
                for g in sys.poset().generic_filters() {
                    assert_eq!(back.evaluate(sys.poset(), &g).unwrap(), x.evaluate(sys.poset(), &g).unwrap());
                }
            }
        }
    }

    #[test]
    fn check_names_keep_their_value() {
        let it = toy();
        let sys = it.system(2).unwrap();
        let v = GroundValue::pair(GroundValue::nat(1), GroundValue::nat(2));
        let x = PName::check(&v, sys.poset().top());
        for alpha in 0..=2 {
            let back = it.inject_tail(alpha, 2, &it.project_tail(alpha, 2, &x).unwrap()).unwrap();
            for g in sys.poset().generic_filters() {
                assert_eq!(back.evaluate(sys.poset(), &g).unwrap(), v);
            }
        }
    }
}
