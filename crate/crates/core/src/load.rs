//! System files, registry ids, and JSON references to names and conditions.
//!
//! A system file is one JSON object selected by `"kind"`:
//!
//! ```json
//! {"kind": "trivial"}
//! {"kind": "cohen", "domain": 2}
//! {"kind": "collapse", "target": 2, "bound": 1}
//! {"kind": "product", "inner": {"kind": "cohen", "domain": 2}, "width": 2,
//!  "group": ["()", "(0 1)"], "gens": [[], [0]]}
//! {"kind": "tower", "depth": 2, "width": 2, "cohen": 1, "coll": 1, "rank": 2}
//! ```
//!
//! `group` and `gens` are optional on products; they default to every
//! permutation and every fixed set.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::Value;

use crate::config::TruncationConfig;
use crate::error::{Error, Result};
use crate::hf::GroundValue;
use crate::iteration::Iteration;
use crate::name::{cohen_generic, product_generic, PName};
use crate::perm::CoordPerm;
use crate::pincus::{Registry, Tower};
use crate::poset::{Poset, PosetKind};
use crate::symmetry::{Aut, Gen, GroupElem, SymmetricSystem};

pub enum Source {
    Plain(Arc<SymmetricSystem>),
    Tower(Box<Tower>),
}

pub struct Loaded {
    pub config: TruncationConfig,
    pub source: Source,
}

fn field(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|n| n as usize)
        .ok_or_else(|| Error::input(format!("missing integer field \"{key}\"")))
}

fn opt_field(v: &Value, key: &str, default: usize) -> Result<usize> {
    match v.get(key) {
        None => Ok(default),
        Some(_) => field(v, key),
    }
}

fn poset_of(v: &Value) -> Result<Poset> {
    match v.get("kind").and_then(Value::as_str) {
        Some("trivial") => Ok(Poset::trivial()),
        Some("cohen") => Poset::cohen(field(v, "domain")?),
        Some("collapse") => Poset::coll(field(v, "target")?, field(v, "bound")?),
        Some(other) => Err(Error::input(format!("unknown poset kind {other}"))),
        None => Err(Error::input("poset needs a \"kind\"")),
    }
}

fn product_system(v: &Value, config: TruncationConfig) -> Result<SymmetricSystem> {
    let inner = poset_of(v.get("inner").ok_or_else(|| Error::input("product needs an \"inner\" poset"))?)?;
    let width = field(v, "width")?;
    let full = SymmetricSystem::build_t(&inner, width, config)?;
    if v.get("group").is_none() && v.get("gens").is_none() {
        return Ok(full);
    }
    let poset = full.poset().clone();
    let group = match v.get("group") {
        None => full.group().iter().map(|g| GroupElem { label: g.label.clone(), action: g.action.clone(), blocks: Vec::new() }).collect(),
        Some(list) => list
            .as_array()
            .ok_or_else(|| Error::input("\"group\" must be an array of cycle strings"))?
            .iter()
            .map(|c| {
                let s = c.as_str().ok_or_else(|| Error::input("group entries are cycle strings"))?;
                let perm = CoordPerm::parse_cycles(s, width)?;
                Ok(GroupElem { action: poset.copy_action(&perm)?, label: Aut::product(perm), blocks: Vec::new() })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let gens = match v.get("gens") {
        None => full.gens().to_vec(),
        Some(list) => list
            .as_array()
            .ok_or_else(|| Error::input("\"gens\" must be an array of fixed sets"))?
            .iter()
            .map(|e| {
                let set = e
                    .as_array()
                    .ok_or_else(|| Error::input("a fixed set is an array of copies"))?
                    .iter()
                    .map(|n| n.as_u64().map(|n| n as usize).filter(|&n| n < width))
                    .collect::<Option<BTreeSet<usize>>>()
                    .ok_or_else(|| Error::input(format!("fixed set {e} is not a set of copies below {width}")))?;
                Ok(Gen::product(set))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    // Only the full symmetric group licenses the transposition reduction.
    let product_width = (group.len() == full.group().len()).then_some(width);
    SymmetricSystem::new(poset, group, gens, config, product_width)
}

impl Loaded {
    pub fn from_json(v: &Value) -> Result<Self> {
        let mut config = TruncationConfig::default();
        let source = match v.get("kind").and_then(Value::as_str) {
            Some("tower") => {
                config = TruncationConfig {
                    iteration_depth: opt_field(v, "depth", config.iteration_depth)?,
                    product_width: opt_field(v, "width", config.product_width)?,
                    cohen_domain: opt_field(v, "cohen", config.cohen_domain)?,
                    coll_target_bound: opt_field(v, "coll", config.coll_target_bound)?,
                    name_rank_bound: opt_field(v, "rank", config.name_rank_bound)?,
                };
                Source::Tower(Box::new(Tower::build(config)?))
            }
            Some("product") => {
                config.product_width = field(v, "width")?;
                config.iteration_depth = 1;
                Source::Plain(Arc::new(product_system(v, config)?))
            }
            Some(_) => {
                config.iteration_depth = 1;
                Source::Plain(Arc::new(SymmetricSystem::rigid(poset_of(v)?, config)?))
            }
            None => return Err(Error::input("system file needs a \"kind\"")),
        };
        Ok(Loaded { config, source })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        Loaded::from_json(&v)
    }

    /// The materialized system.
    pub fn system(&self) -> Result<Arc<SymmetricSystem>> {
        match &self.source {
            Source::Plain(s) => Ok(s.clone()),
            Source::Tower(t) => t.system(),
        }
    }

    /// Run `f` on the system as an iteration: the tower itself, or a plain
    /// system as a one-stage iteration.
    pub fn with_iteration<R>(&self, f: impl FnOnce(&Iteration) -> R) -> Result<R> {
        match &self.source {
            Source::Tower(t) => Ok(f(t.iteration())),
            Source::Plain(s) => {
                let blocks = vec![0; s.poset().minimal_reps().len()];
                Ok(f(&Iteration::new(s.clone(), blocks, Vec::new())?))
            }
        }
    }

    /// Named names: `g[α,n]`, `A[δ]`, `G`, `Gamma`, `T[δ]` on towers;
    /// `g[0,n]` on Cohen products, `g` on a Cohen poset, `G` and `Gamma`
    /// everywhere.
    pub fn registry(&self, sys: &SymmetricSystem) -> Result<BTreeMap<String, PName>> {
        let mut out = BTreeMap::new();
        match &self.source {
            Source::Tower(t) => return Ok(registry_ids(&t.registry(sys)?)),
            Source::Plain(_) => {}
        }
        let poset = sys.poset();
        match poset.kind() {
            PosetKind::Cohen { .. } => {
                out.insert("g".into(), cohen_generic(poset));
            }
            PosetKind::Product { width, inner } if matches!(**inner, PosetKind::Cohen { .. }) => {
                for n in 0..*width {
                    out.insert(format!("g[0,{n}]"), product_generic(poset, n));
                }
            }
            _ => {}
        }
        let top = poset.top();
        let generic =
            PName::new((0..poset.len() as u32).map(|p| (p, PName::check(&poset.cond(p).encode(), top))).collect::<Vec<_>>());
        out.insert("Gamma".into(), PName::bullet(sys.orbit(&generic)?, top));
        out.insert("G".into(), generic);
        Ok(out)
    }
}

/// Registry ids for the names of a tower.
pub fn registry_ids(reg: &Registry) -> BTreeMap<String, PName> {
    let mut out = BTreeMap::new();
    for ((a, n), x) in &reg.g {
        out.insert(format!("g[{a},{n}]"), x.clone());
    }
    for (d, x) in reg.a.iter().enumerate() {
        out.insert(format!("A[{}]", d + 1), x.clone());
    }
    for (d, x) in reg.iterands.iter().enumerate() {
        out.insert(format!("T[{}]", d + 1), x.clone());
    }
    out.insert("G".into(), reg.generic.clone());
    out.insert("Gamma".into(), reg.gamma.clone());
    out
}

/// `"top"`, an index, or the JSON of a condition.
pub fn resolve_condition(sys: &SymmetricSystem, v: &Value) -> Result<u32> {
    let poset = sys.poset();
    match v {
        Value::String(s) if s == "top" => Ok(poset.top()),
        Value::Number(n) => n
            .as_u64()
            .filter(|&i| (i as usize) < poset.len())
            .map(|i| i as u32)
            .ok_or_else(|| Error::input(format!("condition index {n} is out of range"))),
        _ => (0..poset.len() as u32)
            .find(|&p| poset.cond(p).to_json() == *v)
            .ok_or_else(|| Error::input(format!("{v} is not a condition of the system"))),
    }
}

/// A registry id, `{"check": value}`, or `{"entries": [[condition, name], …]}`.
pub fn resolve_name(sys: &SymmetricSystem, registry: &BTreeMap<String, PName>, v: &Value) -> Result<PName> {
    if let Some(id) = v.as_str() {
        return registry.get(id).cloned().ok_or_else(|| Error::input(format!("unknown registry id {id}")));
    }
    if let Some(x) = v.get("check") {
        return Ok(PName::check(&GroundValue::from_json(x)?, sys.poset().top()));
    }
    if let Some(list) = v.get("entries").and_then(Value::as_array) {
        let entries = list
            .iter()
            .map(|pair| match pair.as_array().map(Vec::as_slice) {
                Some([c, n]) => Ok((resolve_condition(sys, c)?, resolve_name(sys, registry, n)?)),
                _ => Err(Error::input(format!("name entry {pair} is not a [condition, name] pair"))),
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(PName::new(entries));
    }
    Err(Error::input(format!("{v} is not a name reference")))
}
