//! Bounded first-order formulas over names.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::name::PName;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Name(PName),
    Var(u32),
}

/// Which finite name universe an unbounded quantifier ranges over.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Universe {
    /// The configured `Names(R)`.
    Names,
    /// Its hereditarily symmetric part.
    Symmetric,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Eq(Term, Term),
    In(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    ExistsIn { var: u32, bound: Term, body: Box<Formula> },
    ForallIn { var: u32, bound: Term, body: Box<Formula> },
    ExistsU { var: u32, universe: Universe, body: Box<Formula> },
    ForallU { var: u32, universe: Universe, body: Box<Formula> },
}

impl From<PName> for Term {
    fn from(n: PName) -> Self {
        Term::Name(n)
    }
}

impl From<&PName> for Term {
    fn from(n: &PName) -> Self {
        Term::Name(n.clone())
    }
}

pub fn var(v: u32) -> Term {
    Term::Var(v)
}

impl Formula {
    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Self {
        Formula::Eq(a.into(), b.into())
    }

    pub fn member(a: impl Into<Term>, b: impl Into<Term>) -> Self {
        Formula::In(a.into(), b.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn implies(self, other: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(other))
    }

    pub fn exists_in(v: u32, bound: impl Into<Term>, body: Formula) -> Self {
        Formula::ExistsIn { var: v, bound: bound.into(), body: Box::new(body) }
    }

    pub fn forall_in(v: u32, bound: impl Into<Term>, body: Formula) -> Self {
        Formula::ForallIn { var: v, bound: bound.into(), body: Box::new(body) }
    }

    pub fn exists_u(v: u32, universe: Universe, body: Formula) -> Self {
        Formula::ExistsU { var: v, universe, body: Box::new(body) }
    }

    pub fn forall_u(v: u32, universe: Universe, body: Formula) -> Self {
        Formula::ForallU { var: v, universe, body: Box::new(body) }
    }

    /// Replace free occurrences of `v` by `n`.
    pub fn substitute(&self, v: u32, n: &PName) -> Formula {
        let t = |t: &Term| match t {
            Term::Var(x) if *x == v => Term::Name(n.clone()),
            other => other.clone(),
        };
        let b = |f: &Formula| Box::new(f.substitute(v, n));
        match self {
            Formula::Eq(x, y) => Formula::Eq(t(x), t(y)),
            Formula::In(x, y) => Formula::In(t(x), t(y)),
            Formula::Not(f) => Formula::Not(b(f)),
            Formula::And(f, g) => Formula::And(b(f), b(g)),
            Formula::Or(f, g) => Formula::Or(b(f), b(g)),
            Formula::Implies(f, g) => Formula::Implies(b(f), b(g)),
            Formula::ExistsIn { var, bound, body } => Formula::ExistsIn {
                var: *var,
                bound: t(bound),
                body: if *var == v { body.clone() } else { b(body) },
            },
            Formula::ForallIn { var, bound, body } => Formula::ForallIn {
                var: *var,
                bound: t(bound),
                body: if *var == v { body.clone() } else { b(body) },
            },
            Formula::ExistsU { var, universe, body } => Formula::ExistsU {
                var: *var,
                universe: *universe,
                body: if *var == v { body.clone() } else { b(body) },
            },
            Formula::ForallU { var, universe, body } => Formula::ForallU {
                var: *var,
                universe: *universe,
                body: if *var == v { body.clone() } else { b(body) },
            },
        }
    }

    pub fn free_vars(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound_vars: &mut Vec<u32>, out: &mut BTreeSet<u32>) {
        let term = |t: &Term, bv: &Vec<u32>, out: &mut BTreeSet<u32>| {
            if let Term::Var(v) = t {
                if !bv.contains(v) {
                    out.insert(*v);
                }
            }
        };
        match self {
            Formula::Eq(x, y) | Formula::In(x, y) => {
                term(x, bound_vars, out);
                term(y, bound_vars, out);
            }
            Formula::Not(f) => f.collect_free(bound_vars, out),
            Formula::And(f, g) | Formula::Or(f, g) | Formula::Implies(f, g) => {
                f.collect_free(bound_vars, out);
                g.collect_free(bound_vars, out);
            }
            Formula::ExistsIn { var, bound, body } | Formula::ForallIn { var, bound, body } => {
                term(bound, bound_vars, out);
                bound_vars.push(*var);
                body.collect_free(bound_vars, out);
                bound_vars.pop();
            }
            Formula::ExistsU { var, body, .. } | Formula::ForallU { var, body, .. } => {
                bound_vars.push(*var);
                body.collect_free(bound_vars, out);
                bound_vars.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_unbounded_quantifier(&self) -> bool {
        match self {
            Formula::Eq(..) | Formula::In(..) => false,
            Formula::Not(f) => f.has_unbounded_quantifier(),
            Formula::And(f, g) | Formula::Or(f, g) | Formula::Implies(f, g) => {
                f.has_unbounded_quantifier() || g.has_unbounded_quantifier()
            }
            Formula::ExistsIn { body, .. } | Formula::ForallIn { body, .. } => body.has_unbounded_quantifier(),
            Formula::ExistsU { .. } | Formula::ForallU { .. } => true,
        }
    }

    /// Apply `f` to every name occurring in the formula.
    pub fn map_names(&self, f: &dyn Fn(&PName) -> PName) -> Formula {
        let t = |t: &Term| match t {
            Term::Name(n) => Term::Name(f(n)),
            v => v.clone(),
        };
        let b = |g: &Formula| Box::new(g.map_names(f));
        match self {
            Formula::Eq(x, y) => Formula::Eq(t(x), t(y)),
            Formula::In(x, y) => Formula::In(t(x), t(y)),
            Formula::Not(g) => Formula::Not(b(g)),
            Formula::And(g, h) => Formula::And(b(g), b(h)),
            Formula::Or(g, h) => Formula::Or(b(g), b(h)),
            Formula::Implies(g, h) => Formula::Implies(b(g), b(h)),
            Formula::ExistsIn { var, bound, body } => {
                Formula::ExistsIn { var: *var, bound: t(bound), body: b(body) }
            }
            Formula::ForallIn { var, bound, body } => {
                Formula::ForallIn { var: *var, bound: t(bound), body: b(body) }
            }
            Formula::ExistsU { var, universe, body } => {
                Formula::ExistsU { var: *var, universe: *universe, body: b(body) }
            }
            Formula::ForallU { var, universe, body } => {
                Formula::ForallU { var: *var, universe: *universe, body: b(body) }
            }
        }
    }

    /// JSON AST. Names are rendered through `name_json`.
    pub fn to_json(&self, name_json: &dyn Fn(&PName) -> Value) -> Value {
        let t = |t: &Term| match t {
            Term::Name(n) => name_json(n),
            Term::Var(v) => json!({ "var": v }),
        };
        let u = |u: &Universe| match u {
            Universe::Names => "names",
            Universe::Symmetric => "hs",
        };
        match self {
            Formula::Eq(x, y) => json!({ "eq": [t(x), t(y)] }),
            Formula::In(x, y) => json!({ "in": [t(x), t(y)] }),
            Formula::Not(f) => json!({ "not": f.to_json(name_json) }),
            Formula::And(f, g) => json!({ "and": [f.to_json(name_json), g.to_json(name_json)] }),
            Formula::Or(f, g) => json!({ "or": [f.to_json(name_json), g.to_json(name_json)] }),
            Formula::Implies(f, g) => json!({ "implies": [f.to_json(name_json), g.to_json(name_json)] }),
            Formula::ExistsIn { var, bound, body } => {
                json!({ "exists_in": { "var": var, "bound": t(bound), "body": body.to_json(name_json) } })
            }
            Formula::ForallIn { var, bound, body } => {
                json!({ "forall_in": { "var": var, "bound": t(bound), "body": body.to_json(name_json) } })
            }
            Formula::ExistsU { var, universe, body } => {
                json!({ "exists_u": { "var": var, "universe": u(universe), "body": body.to_json(name_json) } })
            }
            Formula::ForallU { var, universe, body } => {
                json!({ "forall_u": { "var": var, "universe": u(universe), "body": body.to_json(name_json) } })
            }
        }
    }

    /// Parse the JSON AST; `{"var": k}` is a variable, anything else is handed
    /// to `resolve_name`.
    pub fn from_json(v: &Value, resolve_name: &dyn Fn(&Value) -> Result<PName>) -> Result<Formula> {
        let term = |v: &Value| -> Result<Term> {
            if let Some(k) = v.get("var").and_then(Value::as_u64) {
                return Ok(Term::Var(k as u32));
            }
            resolve_name(v).map(Term::Name)
        };
        let two = |v: &Value| -> Result<(Value, Value)> {
            match v.as_array().map(|a| a.as_slice()) {
                Some([a, b]) => Ok((a.clone(), b.clone())),
                _ => Err(Error::input(format!("expected a two-element array, got {v}"))),
            }
        };
        let obj = v
            .as_object()
            .filter(|o| o.len() == 1)
            .ok_or_else(|| Error::input(format!("formula must be a one-key object: {v}")))?;
        let (key, arg) = obj.iter().next().unwrap();
        let sub = |v: &Value| Formula::from_json(v, resolve_name).map(Box::new);
        let quant = |arg: &Value| -> Result<(u32, Value, Box<Formula>)> {
            let var = arg
                .get("var")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::input("quantifier needs an integer \"var\""))? as u32;
            let body = arg.get("body").ok_or_else(|| Error::input("quantifier needs a \"body\""))?;
            Ok((var, arg.clone(), sub(body)?))
        };
        let universe = |arg: &Value| match arg.get("universe").and_then(Value::as_str) {
            Some("names") | None => Ok(Universe::Names),
            Some("hs") => Ok(Universe::Symmetric),
            Some(other) => Err(Error::input(format!("unknown universe {other}"))),
        };
        Ok(match key.as_str() {
            "eq" => {
                let (a, b) = two(arg)?;
                Formula::Eq(term(&a)?, term(&b)?)
            }
            "in" => {
                let (a, b) = two(arg)?;
                Formula::In(term(&a)?, term(&b)?)
            }
            "not" => Formula::Not(sub(arg)?),
            "and" | "or" | "implies" => {
                let (a, b) = two(arg)?;
                let (a, b) = (sub(&a)?, sub(&b)?);
                match key.as_str() {
                    "and" => Formula::And(a, b),
                    "or" => Formula::Or(a, b),
                    _ => Formula::Implies(a, b),
                }
            }
            "exists_in" | "forall_in" => {
                let (var, arg, body) = quant(arg)?;
                let bound = term(arg.get("bound").ok_or_else(|| Error::input("missing \"bound\""))?)?;
                if key == "exists_in" {
                    Formula::ExistsIn { var, bound, body }
                } else {
                    Formula::ForallIn { var, bound, body }
                }
            }
            "exists_u" | "forall_u" => {
                let (var, arg, body) = quant(arg)?;
                let universe = universe(&arg)?;
                if key == "exists_u" {
                    Formula::ExistsU { var, universe, body }
                } else {
                    Formula::ForallU { var, universe, body }
                }
            }
            other => return Err(Error::input(format!("unknown formula node {other}"))),
        })
    }
}
