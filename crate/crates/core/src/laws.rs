//! The law suite for finite-support iterations: support, restriction,
//! padding, composition, inverse, intersection, symmetry of entries,
//! conjugation, and density inside the usual iteration.
//!
//! Each item enumerates its tuple space when it has at most
//! [`EXHAUSTIVE_LIMIT`] tuples and samples it otherwise.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::iteration::{AutSeq, GenSeq, Iteration, Seq};
use crate::report::{CheckRecord, Mode};

pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Knobs for [`law_suite`].
#[derive(Clone, Debug)]
pub struct LawOptions {
    /// Samples per item when the item's space is too large to enumerate.
    pub cases: usize,
    pub seed: u64,
    /// Worker threads; items are distributed across them and merged in order.
    pub jobs: usize,
    /// Replace the inverse formula by one that drops the later-stage
    /// entries, to check that the suite notices.
    pub faulty_inverse: bool,
}

impl Default for LawOptions {
    fn default() -> Self {
        LawOptions { cases: 1000, seed: 0, jobs: 1, faulty_inverse: false }
    }
}

struct Ctx<'a> {
    it: &'a Iteration,
    len: usize,
    auts: Vec<AutSeq>,
    gens: Vec<GenSeq>,
    opts: &'a LawOptions,
}

/// Indices to visit in a space of the given size.
fn plan(space: u128, opts: &LawOptions, item: usize) -> (Mode, Vec<u128>) {
    if opts.cases == 0 {
        return (Mode::Skipped, Vec::new());
    }
    if space <= EXHAUSTIVE_LIMIT {
        return (Mode::Exhaustive, (0..space).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(31).wrapping_add(item as u64));
    (Mode::Sampled, (0..opts.cases).map(|_| rng.gen_range(0..space)).collect())
}

/// Split a mixed-radix index into its digits.
fn digits(mut idx: u128, radices: &[u128]) -> Vec<u128> {
    radices
        .iter()
        .map(|&r| {
            let d = idx % r;
            idx /= r;
            d
        })
        .collect()
}

/// One part of an item's tuple space: its size and the check for one index.
type Segment<'s> = (u128, Box<dyn Fn(u128, &mut CheckRecord) + 's>);

/// Plan every segment on its own, so a huge segment never crowds out a
/// small one, and run the checks in order.
fn run_segments(item: usize, name: &str, anchor: &str, opts: &LawOptions, segments: Vec<Segment<'_>>) -> CheckRecord {
    let plans: Vec<(Mode, Vec<u128>)> =
        segments.iter().enumerate().map(|(k, (size, _))| plan(*size, opts, item * 16 + k)).collect();
    let mode = if opts.cases == 0 {
        Mode::Skipped
    } else if plans.iter().all(|(m, _)| *m == Mode::Exhaustive) {
        Mode::Exhaustive
    } else {
        Mode::Sampled
    };
    let mut rec = record(item, name, anchor, mode);
    for ((_, check), (_, idx)) in segments.iter().zip(plans) {
        for i in idx {
            check(i, &mut rec);
        }
    }
    rec
}

const INVERSE: (&str, &str) = ("inverse", "π̄⁻¹ = ⟨(π̄↾β)⁻¹(π̇(β)⁻¹)⟩ and supp(π̄⁻¹) = supp(π̄)");

fn record(item: usize, name: &str, anchor: &str, mode: Mode) -> CheckRecord {
    let mut rec = CheckRecord::new(name, anchor, mode);
    rec.item = Some(item);
    rec
}

impl Ctx<'_> {
    fn conds(&self) -> u128 {
        self.it.count(self.len)
    }

    fn seq(&self, i: u128) -> Seq {
        self.it.seq_at(self.len, i)
    }

    fn inverse(&self, a: &AutSeq) -> AutSeq {
        let mut inv = self.it.inverse(a);
        if self.opts.faulty_inverse {
            inv.terms = self.it.identity_aut(a.terms.len() + 1).terms;
        }
        inv
    }

    /// Supports recomputed from the generic filters of the first stage
    /// rather than from the catalog entries.
    fn aut_supp_slow(&self, a: &AutSeq) -> BTreeSet<usize> {
        let it = self.it;
        let label = it.label(a);
        let mut out = BTreeSet::new();
        if !label.base.is_identity() {
            out.insert(0);
        }
        for (i, stage) in label.stages.iter().enumerate() {
            let reps = it.base().poset().minimal_reps();
            if reps.iter().any(|&m| !stage[it.block_of_minimal(m) as usize].is_identity()) {
                out.insert(i + 1);
            }
        }
        out
    }

    fn item1(&self) -> CheckRecord {
        let it = self.it;
        let space = self.conds() + self.auts.len() as u128 + self.gens.len() as u128;
        let (mode, idx) = plan(space, self.opts, 1);
        let mut rec = record(1, "finite support", "every p̄, π̄, H̄ has finite support", mode);
        let (nc, na) = (self.conds(), self.auts.len() as u128);
        for i in idx {
            if i < nc {
                let p = self.seq(i);
                let s = it.supp(&p);
                rec.case(s == it.supp_slow(&p) && s.iter().all(|&b| b < self.len), || {
                    format!("supp({}) = {s:?}", it.to_condition(&p))
                });
            } else if i < nc + na {
                let a = &self.auts[(i - nc) as usize];
                let s = it.aut_supp(a);
                rec.case(s == self.aut_supp_slow(a) && s.iter().all(|&b| b < self.len), || {
                    format!("supp({}) = {s:?}", it.label(a))
                });
            } else {
                let g = &self.gens[(i - nc - na) as usize];
                let s = it.gen_supp(g);
                rec.case(s.iter().all(|&b| b < self.len), || format!("supp({}) = {s:?}", it.gen_label(g)));
            }
        }
        rec
    }

    fn item2(&self) -> CheckRecord {
        let it = self.it;
        let radices = [self.conds(), self.auts.len() as u128];
        let (mode, idx) = plan(radices.iter().product(), self.opts, 2);
        let mut rec = record(2, "support under automorphisms", "supp(p̄) = supp(π̄(p̄))", mode);
        for i in idx {
            let d = digits(i, &radices);
            let (p, a) = (self.seq(d[0]), &self.auts[d[1] as usize]);
            let image = it.apply(a, &p);
            rec.case(it.supp(&p) == it.supp(&image), || {
                format!("π̄ = {}, p̄ = {}, π̄(p̄) = {}", it.label(a), it.to_condition(&p), it.to_condition(&image))
            });
        }
        rec
    }

    fn item3(&self) -> CheckRecord {
        let it = self.it;
        let radices = [self.conds(), self.auts.len() as u128, self.len as u128];
        let (mode, idx) = plan(radices.iter().product(), self.opts, 3);
        let mut rec = record(3, "restriction of images", "π̄(p̄)↾β = (π̄↾β)(p̄↾β)", mode);
        for i in idx {
            let d = digits(i, &radices);
            let (p, a, beta) = (self.seq(d[0]), &self.auts[d[1] as usize], d[2] as usize + 1);
            let lhs = it.restrict(&it.apply(a, &p), beta);
            let rhs = it.apply(&it.aut_restrict(a, beta), &it.restrict(&p, beta));
            rec.case(lhs == rhs, || format!("β = {beta}, π̄ = {}, p̄ = {}", it.label(a), it.to_condition(&p)));
        }
        rec
    }
}

impl Ctx<'_> {
    fn item4(&self) -> Result<CheckRecord> {
        let it = self.it;
        let len = self.len;
        let mut segments: Vec<Segment> = Vec::new();
        for beta in 1..len {
            let n = it.count(beta);
            segments.push((
                n * n,
                Box::new(move |i, rec| {
                    let (q, r) = (it.seq_at(beta, i % n), it.seq_at(beta, i / n));
                    let (pq, pr) = (it.pad(&q, len), it.pad(&r, len));
                    let ok = it.index(&pq) < it.count(len)
                        && it.restrict(&pq, beta) == q
                        && it.supp(&pq) == it.supp(&q)
                        && it.leq(&pq, &pr) == it.leq(&q, &r);
                    rec.case(ok, || format!("padding {} and {} to length {len}", it.to_condition(&q), it.to_condition(&r)));
                }),
            ));
            let auts = it.auts(beta)?;
            let na = auts.len() as u128;
            segments.push((
                na * n,
                Box::new(move |i, rec| {
                    let (a, p) = (&auts[(i % na) as usize], it.seq_at(beta, i / na));
                    let pa = it.aut_pad(a, len);
                    let ok = it.aut_from_label(&it.label(&pa)).as_ref() == Some(&pa)
                        && it.aut_supp(&pa) == it.aut_supp(a)
                        && it.apply(&pa, &it.pad(&p, len)) == it.pad(&it.apply(a, &p), len);
                    rec.case(ok, || format!("padding {} to length {len}", it.label(a)));
                }),
            ));
            let gens = it.gens(beta)?;
            segments.push((
                gens.len() as u128,
                Box::new(move |i, rec| {
                    let g = &gens[i as usize];
                    let pg = it.gen_pad(g, len);
                    let ok = it.gen_valid(&pg) && it.gen_supp(&pg) == it.gen_supp(g);
                    rec.case(ok, || format!("padding {} to length {len}", it.gen_label(g)));
                }),
            ));
        }
        Ok(run_segments(
            4,
            "padding and restriction",
            "p̄⌢⟨𝟙̇⟩ ∈ ℙ_α, π̄⌢⟨id̊⟩ ∈ 𝒢_α, H̄⌢⟨ℋ̇⟩ ∈ ℱ_α, and ℙ_β = {p̄↾β : p̄ ∈ ℙ_α}",
            self.opts,
            segments,
        ))
    }

    fn item5(&self) -> CheckRecord {
        let it = self.it;
        let na = self.auts.len() as u128;
        let radices = [na, na, self.conds()];
        let (mode, idx) = plan(radices.iter().product(), self.opts, 5);
        let mut rec = record(
            5,
            "composition",
            "π̄ ∘ σ̄ = ⟨π̇(β) ∘ (π̄↾β)(σ̇(β))⟩ and supp(π̄ ∘ σ̄) ⊆ supp(π̄) ∪ supp(σ̄)",
            mode,
        );
        for i in idx {
            let d = digits(i, &radices);
            let (a, b, p) = (&self.auts[d[0] as usize], &self.auts[d[1] as usize], self.seq(d[2]));
            let ab = it.compose(a, b);
            let mut ok = it.apply(&ab, &p) == it.apply(a, &it.apply(b, &p));
            ok &= it.aut_supp(&ab).is_subset(&it.aut_supp(a).union(&it.aut_supp(b)).copied().collect());
            for beta in 1..=self.len {
                let (ra, rb) = (it.aut_restrict(a, beta), it.aut_restrict(b, beta));
                ok &= it.aut_restrict(&ab, beta) == it.compose(&ra, &rb);
            }
            rec.case(ok, || format!("π̄ = {}, σ̄ = {}, p̄ = {}", it.label(a), it.label(b), it.to_condition(&p)));
        }
        rec
    }

    fn item6(&self) -> CheckRecord {
        if self.opts.cases == 0 {
            return record(6, INVERSE.0, INVERSE.1, Mode::Skipped);
        }
        let it = self.it;
        let na = self.auts.len() as u128;
        let space = na * na * self.conds();
        let (mode, conds): (Mode, Vec<Seq>) = if space <= EXHAUSTIVE_LIMIT {
            (Mode::Exhaustive, (0..self.conds()).map(|i| self.seq(i)).collect())
        } else {
            let (_, idx) = plan(self.conds().max(EXHAUSTIVE_LIMIT + 1), self.opts, 6);
            (Mode::Sampled, idx.into_iter().map(|i| self.seq(i % self.conds())).collect())
        };
        let mut rec = record(6, INVERSE.0, INVERSE.1, mode);
        for a in &self.auts {
            let formula = self.inverse(a);
            // Brute force: every catalog element undoing π̄ on the conditions.
            let undo: Vec<&AutSeq> = self
                .auts
                .iter()
                .filter(|s| conds.iter().all(|p| it.apply(a, &it.apply(s, p)) == *p))
                .collect();
            let same_action = |s: &AutSeq| conds.iter().all(|p| it.apply(s, p) == it.apply(&formula, p));
            let ok = !undo.is_empty() && undo.iter().all(|s| same_action(s));
            rec.case(ok, || format!("π̄ = {}: formula gives {}, search found {} candidates", it.label(a), it.label(&formula), undo.len()));
            rec.case(it.aut_supp(&formula) == it.aut_supp(a), || format!("supp of the inverse of {}", it.label(a)));
            for beta in 1..self.len {
                let restricted = it.aut_restrict(&formula, beta);
                let direct = self.inverse(&it.aut_restrict(a, beta));
                rec.case(restricted == direct, || format!("(π̄⁻¹)↾{beta} for π̄ = {}", it.label(a)));
            }
        }
        rec
    }
}

impl Ctx<'_> {
    fn item7(&self) -> CheckRecord {
        let it = self.it;
        let (ng, na) = (self.gens.len() as u128, self.auts.len() as u128);
        let radices = [ng, ng, na];
        let (mode, idx) = plan(radices.iter().product(), self.opts, 7);
        let mut rec = record(
            7,
            "intersection",
            "Ē with Ė(β) = Ḣ(β) ∩ K̇(β) is in ℱ, Ē ≤ H̄ ∩ K̄, supp(Ē) ⊆ supp(H̄) ∪ supp(K̄)",
            mode,
        );
        for i in idx {
            let d = digits(i, &radices);
            let (h, k, a) = (&self.gens[d[0] as usize], &self.gens[d[1] as usize], &self.auts[d[2] as usize]);
            let ok = match it.intersect(h, k) {
                None => false,
                Some(e) => {
                    it.gen_valid(&e)
                        && (!it.contains(&e, a) || (it.contains(h, a) && it.contains(k, a)))
                        && it.gen_supp(&e).is_subset(&it.gen_supp(h).union(&it.gen_supp(k)).copied().collect())
                }
            };
            rec.case(ok, || format!("H̄ = {}, K̄ = {}, π̄ = {}", it.gen_label(h), it.gen_label(k), it.label(a)));
        }
        rec
    }

    /// Does every member of `H̄↾β` fix the block-function name `term`? The
    /// members are enumerated and act on the name through the blocks.
    fn fixes_term(&self, g: &GenSeq, beta: usize, term: &[usize]) -> bool {
        let it = self.it;
        let restricted = it.gen_restrict(g, beta);
        self.auts.iter().filter(|r| it.contains(&restricted, &it.aut_restrict(r, beta))).all(|r| {
            let fwd = it.block_perm(r.base);
            (0..term.len()).all(|c| term[fwd[c] as usize] == term[c])
        })
    }

    /// The first listed generator, in catalog order, whose first stage keeps
    /// every given block function constant along block orbits. Later-stage
    /// entries are the whole group: block functions only move with the first
    /// stage.
    fn stabilizing_gen(&self, terms: &[Vec<usize>]) -> Option<GenSeq> {
        let it = self.it;
        let whole = it.gen_pad(&GenSeq { base: 0, terms: Vec::new() }, self.len);
        (0..it.base().gens().len()).find_map(|b| {
            let g = GenSeq { base: b, terms: whole.terms.clone() };
            let members: Vec<usize> = (0..it.base().group().len())
                .filter(|&r| it.base().gens()[b].contains(&it.base().group()[r].label))
                .collect();
            let keeps = members.iter().all(|&r| {
                let fwd = it.block_perm(r);
                terms.iter().all(|t| (0..t.len()).all(|c| t[fwd[c] as usize] == t[c]))
            });
            keeps.then_some(g)
        })
    }

    /// `(π̄↾β)⁻¹(π̇(β)⁻¹)` as a block function of permutation indices.
    fn inverse_entry(&self, a: &AutSeq, stage: usize) -> Vec<usize> {
        self.it.inverse(a).terms[stage].clone()
    }

    fn item8(&self) -> CheckRecord {
        let it = self.it;
        let radices = [self.conds(), self.auts.len() as u128];
        let (mode, idx) = plan(radices.iter().product(), self.opts, 8);
        let mut rec = record(
            8,
            "symmetric entries",
            "there are H̄, K̄ ∈ ℱ with H̄↾β ≤ sym(ṗ(β)) and K̄↾β ≤ sym((π̄↾β)⁻¹(π̇(β)⁻¹))",
            mode,
        );
        for i in idx {
            let d = digits(i, &radices);
            let (p, a) = (self.seq(d[0]), &self.auts[d[1] as usize]);
            let p_terms: Vec<Vec<usize>> = p.terms.iter().map(|t| t.iter().map(|&o| o as usize).collect()).collect();
            let a_terms: Vec<Vec<usize>> = (0..self.len - 1).map(|s| self.inverse_entry(a, s)).collect();
            let ok_h = self.stabilizing_gen(&p_terms).is_some_and(|h| {
                it.gen_valid(&h) && p_terms.iter().enumerate().all(|(s, t)| self.fixes_term(&h, s + 1, t))
            });
            let ok_k = self.stabilizing_gen(&a_terms).is_some_and(|k| {
                it.gen_valid(&k) && a_terms.iter().enumerate().all(|(s, t)| self.fixes_term(&k, s + 1, t))
            });
            rec.case(ok_h && ok_k, || format!("p̄ = {}, π̄ = {}", it.to_condition(&p), it.label(a)));
        }
        rec
    }
}

impl Ctx<'_> {
    /// `π̄⁻¹ ∘ ρ̄ ∘ π̄` found by its action on the materialized poset.
    fn conjugate_by_action(&self, a: &AutSeq, r: &AutSeq) -> Option<AutSeq> {
        let it = self.it;
        let sys = it.system(self.len).ok()?;
        let ea = sys.element(&it.label(a))?;
        let er = sys.element(&it.label(r))?;
        let action = ea.action.inverse().compose(&er.action).compose(&ea.action);
        it.aut_from_label(&sys.element_by_action(&action)?.label)
    }

    fn item9(&self) -> CheckRecord {
        let it = self.it;
        let (na, ng) = (self.auts.len() as u128, self.gens.len() as u128);
        let radices = [na, ng];
        let (mode, idx) = plan(radices.iter().product::<u128>() * na, self.opts, 9);
        let mut rec = record(
            9,
            "conjugation",
            "π̄H̄π̄⁻¹ = ⟨π̇(β)(π̄↾β)(Ḣ(β))π̇(β)⁻¹⟩ and supp(π̄H̄π̄⁻¹) = supp(H̄)",
            mode,
        );
        let materialized = it.system(self.len).is_ok();
        if !materialized {
            rec.note("conjugates computed with the composition and inverse formulas");
        }
        let pairs: BTreeSet<(u128, u128)> = idx.iter().map(|&i| (i % na, (i / na) % ng)).collect();
        for (ai, gi) in pairs {
            let (a, g) = (&self.auts[ai as usize], &self.gens[gi as usize]);
            // Shrink H̄ until the hypothesis holds, as the formula requires.
            let h = if it.conjugation_hypothesis(a, g) {
                Some(g.clone())
            } else {
                let terms: Vec<Vec<usize>> = (0..self.len - 1).map(|s| self.inverse_entry(a, s)).collect();
                self.stabilizing_gen(&terms).and_then(|k| it.intersect(g, &k))
            };
            let Some(h) = h.filter(|h| it.conjugation_hypothesis(a, h)) else {
                rec.case(false, || format!("no shrinking of {} meets the hypothesis for {}", it.gen_label(g), it.label(a)));
                continue;
            };
            let Some(k) = it.conjugate(a, &h) else {
                rec.case(false, || format!("conjugate of {} by {} is not a listed generator", it.gen_label(&h), it.label(a)));
                continue;
            };
            rec.case(it.gen_supp(&k) == it.gen_supp(&h), || format!("supports of {} and its conjugate", it.gen_label(&h)));
            for r in &self.auts {
                let pulled = if materialized {
                    self.conjugate_by_action(a, r)
                } else {
                    Some(it.compose(&it.compose(&it.inverse(a), r), a))
                };
                let ok = pulled.is_some_and(|c| it.contains(&k, r) == it.contains(&h, &c));
                rec.case(ok, || format!("ρ̄ = {} against {} conjugated by {}", it.label(r), it.gen_label(&h), it.label(a)));
            }
        }
        rec
    }
}

/// A condition of the usual finite-support iteration: a first-stage
/// condition and, at each later stage, an arbitrary name for an object,
/// given by its value at every generic filter of the preceding stages.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Usual {
    base: u32,
    stages: Vec<Vec<u32>>,
}

struct UsualIteration<'a> {
    it: &'a Iteration,
    /// Generic points of `ℙ_β` for `β = 1..len`, and their positions.
    points: Vec<Vec<Seq>>,
    position: Vec<std::collections::HashMap<Seq, usize>>,
}

impl<'a> UsualIteration<'a> {
    fn new(it: &'a Iteration, len: usize) -> Self {
        let points: Vec<Vec<Seq>> = (1..len).map(|b| it.generic_points(b)).collect();
        let position = points.iter().map(|ps| ps.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()).collect();
        UsualIteration { it, points, position }
    }

    fn size(&self) -> u128 {
        let mut n = self.it.base().poset().len() as u128;
        for (s, pts) in self.it.stages().iter().zip(&self.points) {
            n = n.saturating_mul((s.objects().len() as u128).saturating_pow(pts.len() as u32));
        }
        n
    }

    fn at(&self, mut idx: u128) -> Usual {
        let nb = self.it.base().poset().len() as u128;
        let base = (idx % nb) as u32;
        idx /= nb;
        let stages = self
            .it
            .stages()
            .iter()
            .zip(&self.points)
            .map(|(s, pts)| {
                let r = s.objects().len() as u128;
                (0..pts.len())
                    .map(|_| {
                        let d = (idx % r) as u32;
                        idx /= r;
                        d
                    })
                    .collect()
            })
            .collect();
        Usual { base, stages }
    }

    fn embed(&self, p: &Seq) -> Usual {
        Usual {
            base: p.base,
            stages: p
                .terms
                .iter()
                .zip(&self.points)
                .map(|(t, pts)| pts.iter().map(|k| t[self.it.block_of_minimal(k.base) as usize]).collect())
                .collect(),
        }
    }

    /// Is the generic filter of the point `k` of `ℙ_β` through `q↾β`?
    fn through(&self, k: &Seq, q: &Usual) -> bool {
        let it = self.it;
        if !it.base().poset().leq(k.base, q.base) {
            return false;
        }
        let blk = it.block_of_minimal(k.base) as usize;
        (1..k.len()).all(|g| {
            let j = self.position[g - 1][&it.restrict(k, g)];
            it.stages()[g - 1].objects().leq(k.terms[g - 1][blk], q.stages[g - 1][j])
        })
    }

    /// `q ≤ p`: at each stage, the entry of `q` is below that of `p` in
    /// every generic filter through `q`.
    fn leq(&self, q: &Usual, p: &Usual) -> bool {
        self.it.base().poset().leq(q.base, p.base)
            && self.points.iter().enumerate().all(|(s, pts)| {
                let objects = self.it.stages()[s].objects();
                pts.iter().enumerate().all(|(j, k)| {
                    !self.through(k, q) || objects.leq(q.stages[s][j], p.stages[s][j])
                })
            })
    }

    /// A condition of the case-split iteration below `p`: follow one generic
    /// filter, taking a minimal object below `p`'s entry at each stage.
    fn witness(&self, p: &Usual) -> Option<Seq> {
        let it = self.it;
        let m = it.base().poset().minimal_reps_below(p.base).next()?;
        let blk = it.block_of_minimal(m) as usize;
        let mut k = Seq { base: m, terms: Vec::new() };
        for (s, stage) in it.stages()[..p.stages.len()].iter().enumerate() {
            let j = self.position[s][&k];
            let objects = stage.objects();
            let o = objects.minimal_reps_below(p.stages[s][j]).next()?;
            let mut term = vec![objects.top(); it.nblocks()];
            term[blk] = o;
            k.terms.push(term);
        }
        Some(k)
    }
}

impl Ctx<'_> {
    fn item10(&self) -> CheckRecord {
        let it = self.it;
        let usual = UsualIteration::new(it, self.len);
        let n = self.conds();
        let usual_ref = &usual;
        let segments: Vec<Segment> = vec![
            (
                usual.size(),
                Box::new(move |i, rec| {
                    let p = usual_ref.at(i);
                    let ok = usual_ref.witness(&p).is_some_and(|w| usual_ref.leq(&usual_ref.embed(&w), &p));
                    rec.case(ok, || format!("nothing below usual condition #{i}"));
                }),
            ),
            (
                n * n,
                Box::new(move |i, rec| {
                    let (q, p) = (it.seq_at(self.len, i % n), it.seq_at(self.len, i / n));
                    let ok = it.leq(&q, &p) == usual_ref.leq(&usual_ref.embed(&q), &usual_ref.embed(&p));
                    rec.case(ok, || format!("order of {} and {}", it.to_condition(&q), it.to_condition(&p)));
                }),
            ),
        ];
        run_segments(10, "density in the usual iteration", "ℙ_α is a dense subposet of the usual iteration ℙ'_α", self.opts, segments)
    }
}

/// Run the ten items on the iteration truncated to `len` stages.
pub fn law_suite(it: &Iteration, len: usize, opts: &LawOptions) -> Result<Vec<CheckRecord>> {
    let ctx = Ctx { it, len, auts: it.auts(len)?, gens: it.gens(len)?, opts };
    let jobs = opts.jobs.max(1);
    let run = |item: usize| -> Result<CheckRecord> {
        Ok(match item {
            1 => ctx.item1(),
            2 => ctx.item2(),
            3 => ctx.item3(),
            4 => ctx.item4()?,
            5 => ctx.item5(),
            6 => ctx.item6(),
            7 => ctx.item7(),
            8 => ctx.item8(),
            9 => ctx.item9(),
            _ => ctx.item10(),
        })
    };
    if jobs == 1 {
        return (1..=10).map(run).collect();
    }
    let mut results: Vec<Option<Result<CheckRecord>>> = (0..10).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let run = &run;
                scope.spawn(move || (1..=10).filter(|i| (i - 1) % jobs == w).map(|i| (i, run(i))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("law suite worker panicked") {
                results[i - 1] = Some(r);
            }
        }
    });
    results.into_iter().map(|r| r.expect("every item ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iteration::tests::{cohen_cohen, split_product};

    fn failing(records: &[CheckRecord]) -> Vec<usize> {
        records.iter().filter(|r| !r.passed()).filter_map(|r| r.item).collect()
    }

    #[test]
    fn every_item_holds_on_small_iterations() {
        for it in [cohen_cohen(), split_product()] {
            for len in 1..=it.depth() {
                let records = law_suite(&it, len, &LawOptions::default()).unwrap();
                assert_eq!(records.len(), 10);
                assert!(failing(&records).is_empty(), "len {len}: {records:?}");
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_the_report() {
        let it = split_product();
        let one = law_suite(&it, 2, &LawOptions::default()).unwrap();
        let three = law_suite(&it, 2, &LawOptions { jobs: 3, ..LawOptions::default() }).unwrap();
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&three).unwrap());
    }

    #[test]
    fn a_broken_inverse_is_caught() {
        let it = split_product();
        let opts = LawOptions { faulty_inverse: true, ..LawOptions::default() };
        let records = law_suite(&it, 2, &opts).unwrap();
        assert!(failing(&records).contains(&6), "{records:?}");
    }

    #[test]
    fn zero_cases_skips_every_item() {
        let it = split_product();
        let records = law_suite(&it, 2, &LawOptions { cases: 0, ..LawOptions::default() }).unwrap();
        assert_eq!(records.len(), 10);
        assert!(records.iter().all(|r| r.mode == Mode::Skipped && r.cases == 0 && r.passed()), "{records:?}");
    }
}
