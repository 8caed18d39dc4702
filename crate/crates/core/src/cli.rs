//! The `symforce` command line.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 bad input, 3 a
//! budget was exhausted before the question was decided.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::condition::Condition;
use crate::config::TruncationConfig;
use crate::error::{Error, Result};
use crate::forcing::Forcer;
use crate::formula::Formula;
use crate::laws::{law_suite, LawOptions};
use crate::load::{resolve_condition, resolve_name, Loaded};
use crate::name::name_universe;
use crate::pincus::{SearchOrder, Tower};
use crate::report::{CheckRecord, Mode, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "symforce", version, about = "Finite symmetric forcing: systems, laws, forcing queries and the permutation-model tower")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the axioms of a symmetric system: automorphisms, group, filter.
    Validate { system: PathBuf },
    /// Run the ten iteration laws.
    Laws {
        system: PathBuf,
        /// Samples per item when a space is too large to enumerate; 0 skips every item.
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Iteration length; defaults to the depth of the system.
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide `p ⊩ φ`. The query is inline JSON or a path to a JSON file:
    /// `{"condition": …, "formula": …, "symmetric": false}`.
    Force { system: PathBuf, query: String },
    /// Evaluate a name under one of the generic filters.
    Eval {
        system: PathBuf,
        /// Index into the generic filters, in the order of the minimal conditions.
        #[arg(long)]
        generic: usize,
        /// A registry id such as `g[0,1]`, or a name reference in JSON.
        #[arg(long)]
        name: String,
    },
    /// Build the permutation-model tower and write its reports to a directory.
    Pincus {
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        width: usize,
        #[arg(long, default_value_t = 1)]
        cohen: usize,
        #[arg(long, default_value_t = 1)]
        coll: usize,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse the process arguments, run, and return the exit code.
pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_PASS
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate { system } => cmd_validate(&system),
        Command::Laws { system, cases, seed, jobs, length, out } => {
            cmd_laws(&system, &LawOptions { cases, seed, jobs, faulty_inverse: false }, length, out.as_deref())
        }
        Command::Force { system, query } => cmd_force(&system, &query),
        Command::Eval { system, generic, name } => cmd_eval(&system, generic, &name),
        Command::Pincus { depth, width, cohen, coll, rank, out } => {
            let cfg = TruncationConfig {
                iteration_depth: depth,
                product_width: width,
                cohen_domain: cohen,
                coll_target_bound: coll,
                name_rank_bound: rank,
            };
            cmd_pincus(cfg, &out)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("symforce: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Precondition(_) => EXIT_INPUT,
        Error::Budget { .. } => EXIT_BUDGET,
        Error::Construction(_) => EXIT_FAIL,
    }
}

fn status(passed: bool) -> i32 {
    if passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, format!("{text}\n")).map_err(|e| Error::input(format!("{}: {e}", path.display())))
}

/// Inline JSON, or the contents of a JSON file.
fn json_arg(arg: &str) -> Result<Value> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::input(format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::input(format!("query is not JSON: {e}")))
}

fn emit(report: &RunReport, out: Option<&Path>) -> Result<i32> {
    let text = report.to_pretty_json();
    if let Some(path) = out {
        write(path, &text)?;
    }
    println!("{text}");
    Ok(status(report.passed()))
}

pub fn cmd_validate(system: &Path) -> Result<i32> {
    let loaded = Loaded::from_file(system)?;
    let sys = loaded.system()?;
    let mut checks = sys.validate();
    checks.push(sys.conjugation_check());
    emit(&RunReport::new(loaded.config, checks), None)
}

pub fn cmd_laws(system: &Path, opts: &LawOptions, length: Option<usize>, out: Option<&Path>) -> Result<i32> {
    let loaded = Loaded::from_file(system)?;
    let len = length.unwrap_or(loaded.config.iteration_depth);
    if len == 0 {
        return Err(Error::input("iteration length must be at least 1"));
    }
    let checks = loaded.with_iteration(|it| law_suite(it, len, opts))??;
    emit(&RunReport::new(loaded.config, checks), out)
}

pub fn cmd_force(system: &Path, query: &str) -> Result<i32> {
    let q = json_arg(query)?;
    let loaded = Loaded::from_file(system)?;
    let sys = loaded.system()?;
    let poset = sys.poset();
    let registry = loaded.registry(&sys)?;
    let p = resolve_condition(&sys, q.get("condition").unwrap_or(&json!("top")))?;
    let formula = q.get("formula").ok_or_else(|| Error::input("query needs a \"formula\""))?;
    let phi = Formula::from_json(formula, &|v| resolve_name(&sys, &registry, v))?;
    let symmetric = q.get("symmetric").and_then(Value::as_bool).unwrap_or(false);
    let mut forcer = Forcer::new(poset);
    let mut universe = Value::Null;
    if symmetric || phi.has_unbounded_quantifier() {
        let mut conds = poset.minimal_reps().to_vec();
        conds.push(poset.top());
        let names = name_universe(&conds, &[], loaded.config.name_rank_bound, 2)?;
        let hs: Vec<_> = names.iter().filter(|x| sys.is_hereditarily_symmetric(x)).cloned().collect();
        universe = json!({"names": names.len(), "symmetric": hs.len(), "rank": loaded.config.name_rank_bound});
        forcer = forcer.with_universe(names).with_symmetric_universe(hs);
        if symmetric {
            forcer = forcer.symmetric();
        }
    }
    let forces = forcer.forces(p, &phi)?;
    println!(
        "{}",
        pretty(&json!({
            "condition": poset.cond(p).to_json(),
            "forces": forces,
            "symmetric": symmetric,
            "universe": universe,
        }))
    );
    Ok(EXIT_PASS)
}

pub fn cmd_eval(system: &Path, generic: usize, name: &str) -> Result<i32> {
    let loaded = Loaded::from_file(system)?;
    let sys = loaded.system()?;
    let poset = sys.poset();
    let registry = loaded.registry(&sys)?;
    let reference = serde_json::from_str(name).unwrap_or_else(|_| Value::String(name.to_string()));
    let x = resolve_name(&sys, &registry, &reference)?;
    let filters = poset.generic_filters();
    let filter = filters
        .get(generic)
        .ok_or_else(|| Error::input(format!("generic {generic} is out of range; there are {}", filters.len())))?;
    let value = x.evaluate(poset, filter)?;
    println!(
        "{}",
        pretty(&json!({
            "generic": generic,
            "point": poset.cond(poset.minimal_reps()[generic]).to_json(),
            "value": value.to_json(),
        }))
    );
    Ok(EXIT_PASS)
}

fn skipped(name: &str, anchor: &str, why: &Error) -> CheckRecord {
    let mut rec = CheckRecord::new(name, anchor, Mode::Skipped);
    rec.note(why.to_string());
    rec
}

/// `q̄` for the homogeneity witness: the top condition with copy 0 of the
/// last stage pinned to its first value.
fn notac_condition(tower: &Tower, alpha: usize) -> Result<crate::iteration::Seq> {
    let it = tower.iteration();
    let mut q = it.top(tower.depth());
    if alpha == 0 {
        let base = it.base().poset();
        let cell = Condition::Product(vec![(0, Condition::Cohen(vec![(0, 0)]))]);
        q.base = base.index_of(&cell).ok_or_else(|| Error::Construction("no Cohen condition on copy 0".into()))?;
    } else {
        let objects = it.stages()[alpha - 1].objects();
        let cell = Condition::Product(vec![(0, Condition::Collapse(vec![(0, 0)]))]);
        let c = objects.index_of(&cell).ok_or_else(|| Error::Construction("no collapse condition on copy 0".into()))?;
        q.terms[alpha - 1] = vec![c; it.nblocks()];
    }
    Ok(q)
}

/// Build the tower and write `system.json`, `registry.json` and
/// `reports/*.json` under `out`. Reports that need the materialized poset
/// are recorded as skipped when it is over budget.
pub fn cmd_pincus(cfg: TruncationConfig, out: &Path) -> Result<i32> {
    cfg.validate()?;
    let tower = Tower::build(cfg)?;
    let it = tower.iteration();
    let depth = tower.depth();
    let materialized = tower.system();
    write(
        &out.join("system.json"),
        &pretty(&json!({
            "config": cfg,
            "conditions": it.count(depth).to_string(),
            "automorphisms": it.auts(depth)?.len(),
            "generators": it.gens(depth)?.len(),
            "generic_points": it.generic_points(depth).len(),
            "materialized": materialized.is_ok(),
        })),
    )?;

    let mut reports: Vec<(&str, RunReport)> = Vec::new();
    let mut budget_hit = false;
    reports.push(("laws", RunReport::new(cfg, law_suite(it, depth, &LawOptions::default())?)));

    let coherence = "Ȧ_δ is forced to equal {ġ_{α,n} : (α,n) ∈ δ×ω}• and fix({(α,n)}) ≤ sym(ġ_{α,n})";
    let support = "ġ_{0,1} has a least support, found independently of the search order";
    match &materialized {
        Ok(sys) => {
            let reg = tower.registry(sys)?;
            let registry = registry_json(&reg, sys);
            write(&out.join("registry.json"), &pretty(&registry))?;
            reports.push(("registry", RunReport::new(cfg, vec![tower.registry_coherence(sys, &reg)?])));
        }
        Err(e) if e.is_budget() => {
            budget_hit = true;
            reports.push(("registry", RunReport::new(cfg, vec![skipped("registry coherence", coherence, e)])));
        }
        Err(e) => return Err(e.clone()),
    }

    // ġ_{0,1} is a stage-0 name, so its support is searched in the first stage alone.
    let first = Tower::build(TruncationConfig { iteration_depth: 1, ..cfg })?;
    let record = match first.system() {
        Ok(sys) => support_record(&first, &sys, support)?,
        Err(e) if e.is_budget() => {
            budget_hit = true;
            skipped("minimal support of ġ_{0,1}", support, &e)
        }
        Err(e) => return Err(e),
    };
    reports.push(("minimal_supports", RunReport::new(cfg, vec![record])));

    let alpha = depth - 1;
    let e: BTreeSet<_> = if alpha > 0 { BTreeSet::from([(0, 0)]) } else { BTreeSet::new() };
    let mut notac = match tower.notac_witness(&e, 0, alpha, &notac_condition(&tower, alpha)?) {
        Ok(w) => {
            let mut r = RunReport::new(cfg, w.facts);
            r.extra = Some(json!({"automorphism": w.automorphism.to_string(), "swapped": w.swapped, "stage": alpha}));
            r
        }
        Err(e) if e.is_budget() => {
            budget_hit = true;
            RunReport::new(cfg, vec![skipped("homogeneity witness", "some π̄ ∈ fix(e) moves ġ_{α,0} while fixing q̄'", &e)])
        }
        Err(e) => return Err(e),
    };
    notac.extra.get_or_insert_with(|| json!({}));
    reports.push(("notac", notac));

    let mut summary = serde_json::Map::new();
    for (name, report) in &reports {
        write(&out.join("reports").join(format!("{name}.json")), &report.to_pretty_json())?;
        summary.insert((*name).to_string(), json!(report.status));
    }
    println!("{}", pretty(&json!({"out": out.display().to_string(), "reports": summary})));
    Ok(if reports.iter().any(|(_, r)| !r.passed()) {
        EXIT_FAIL
    } else if budget_hit {
        EXIT_BUDGET
    } else {
        EXIT_PASS
    })
}

/// Registry ids with rank and size. The ġ and Ȧ names are written out in
/// full; Ġ, Γ̇ and the iterands list every condition and are only summarized.
fn registry_json(reg: &crate::pincus::Registry, sys: &crate::symmetry::SymmetricSystem) -> Value {
    let poset = sys.poset();
    let mut out = serde_json::Map::new();
    for (id, x) in crate::load::registry_ids(reg) {
        let mut entry = json!({"rank": x.rank(), "entries": x.len()});
        if id.starts_with('g') || id.starts_with('A') {
            entry["name"] = x.to_json(poset);
        }
        out.insert(id, entry);
    }
    Value::Object(out)
}

fn support_record(tower: &Tower, sys: &crate::symmetry::SymmetricSystem, anchor: &str) -> Result<CheckRecord> {
    let mut rec = CheckRecord::new("minimal support of ġ_{0,1}", anchor, Mode::Exhaustive);
    if tower.width() < 2 {
        rec.mode = Mode::Skipped;
        rec.note("one copy only");
        return Ok(rec);
    }
    let top = sys.poset().top();
    let g = tower.g_name(sys, 0, 1)?;
    let universe = tower.support_universe(sys, &g)?;
    let w = tower.minimal_support_search(sys, &g, top, &universe, &SearchOrder { seed: None, check_extensions: true })?;
    rec.case(w.ties.is_empty(), || format!("tied supports {:?}", w.ties));
    for seed in 0..4 {
        let again = tower.minimal_support_search(sys, &g, top, &universe, &SearchOrder { seed: Some(seed), check_extensions: false })?;
        rec.case((again.stage, &again.copies) == (w.stage, &w.copies), || {
            format!("seed {seed} found stage {} copies {:?}", again.stage, again.copies)
        });
    }
    rec.note(format!("support: stage {}, copies {:?}", w.stage, w.copies));
    if let Some(ext) = w.extension_clause {
        rec.note(format!("extension clause over the finite universe: {ext}"));
    }
    Ok(rec)
}
