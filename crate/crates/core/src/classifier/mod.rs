//! Tractability verdicts for (query, TGD set, mode, order) instances.
//!
//! A verdict is TRACTABLE when some query equivalent under the TGDs has the
//! structure the mode's linear-time engine needs, CONDITIONALLY_HARD when a
//! tagging companion exists, fails that structure and the matching
//! dichotomy's side conditions hold, and OPEN otherwise. A registry of known
//! pairs takes precedence.

mod iso;
mod registry;

use std::fmt::Write as _;

use serde::Serialize;

pub use iso::isomorphic;

use crate::chase::{chase_query, core_of_query, minimize_wrt, DEFAULT_BUDGET};
use crate::engines::{EnginePath, Mode};
use crate::error::{Error, Result};
use crate::model::query::{ConjunctiveQuery, TgdSet, Var};
use crate::structure::{analyze, profile_tgds, StructureReport, TgdSetProfile};
use crate::tagging::{companion, Companion, CostClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Tractable,
    ConditionallyHard,
    Open,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Hypothesis {
    Hyperclique,
    Triangle,
    Bmm,
    Seth,
    LogHyperclique,
    Vutd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnginePlan {
    /// engine entry point or dedicated algorithm
    pub engine: String,
    pub path: EnginePath,
    /// query to hand to the engine, equivalent to the input under the TGDs
    pub query: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub theorem: String,
    pub companion: Option<String>,
    pub hypothesis: Option<Hypothesis>,
    pub engine_plan: EnginePlan,
    pub notes: String,
    #[serde(skip)]
    pub mode: Mode,
    #[serde(skip)]
    pub profile: Option<TgdSetProfile>,
    #[serde(skip)]
    pub structure: Option<StructureReport>,
    #[serde(skip)]
    pub plan_query: Option<ConjunctiveQuery>,
}

fn engine_name(mode: Mode) -> &'static str {
    match mode {
        Mode::SingleTest => "single_test",
        Mode::AllTest => "all_test",
        Mode::Count => "count",
        Mode::DirectAccess => "direct_access",
        Mode::Enumerate => "enumerate",
    }
}

/// Whether `q` meets the structural condition of the mode's tractable path.
fn meets(mode: Mode, s: &StructureReport) -> bool {
    match mode {
        Mode::SingleTest => s.weakly_acyclic,
        Mode::AllTest => s.free_connex,
        Mode::Count | Mode::Enumerate => s.acyclic && s.free_connex,
        Mode::DirectAccess => s.acyclic && s.free_connex && s.disruptive_trio.is_none(),
    }
}

fn condition_text(mode: Mode) -> &'static str {
    match mode {
        Mode::SingleTest => "weakly acyclic",
        Mode::AllTest => "free-connex",
        Mode::Count | Mode::Enumerate => "acyclic and free-connex",
        Mode::DirectAccess => "acyclic, free-connex and free of disruptive trios",
    }
}

fn check_order(q: &ConjunctiveQuery, order: Option<&[Var]>, mode: Mode) -> Result<Option<Vec<Var>>> {
    if mode != Mode::DirectAccess {
        return Ok(None);
    }
    let mut answer: Vec<Var> = Vec::new();
    for &v in q.answer_vars() {
        if !answer.contains(&v) {
            answer.push(v);
        }
    }
    let order = match order {
        Some(o) => o.to_vec(),
        None if answer.is_empty() => Vec::new(),
        None => {
            return Err(Error::InvalidConstraint(
                "direct access needs an order of the answer variables".into(),
            ))
        }
    };
    let mut seen = Vec::new();
    for &v in &order {
        if seen.contains(&v) || !answer.contains(&v) {
            return Err(Error::InvalidConstraint(format!(
                "order must list each answer variable once; `{}` is misplaced",
                v.name()
            )));
        }
        seen.push(v);
    }
    if seen.len() != answer.len() {
        return Err(Error::InvalidConstraint(
            "order must list every answer variable".into(),
        ));
    }
    Ok(Some(order))
}

struct Ctx<'a> {
    q: &'a ConjunctiveQuery,
    mode: Mode,
    profile: TgdSetProfile,
    order: Option<Vec<Var>>,
}

impl Ctx<'_> {
    fn report(&self, q: &ConjunctiveQuery) -> StructureReport {
        analyze(q, self.order.as_deref())
    }

    fn verdict(
        &self,
        status: Status,
        theorem: &str,
        hypothesis: Option<Hypothesis>,
        companion: Option<&ConjunctiveQuery>,
        plan: (String, EnginePath, &ConjunctiveQuery),
        notes: String,
        structure: StructureReport,
    ) -> Verdict {
        Verdict {
            status,
            theorem: theorem.to_string(),
            companion: companion.map(|c| c.to_string()),
            hypothesis,
            engine_plan: EnginePlan {
                engine: plan.0,
                path: plan.1,
                query: plan.2.to_string(),
            },
            notes,
            mode: self.mode,
            profile: Some(self.profile.clone()),
            structure: Some(structure),
            plan_query: Some(plan.2.clone()),
        }
    }

    /// Theorem key for a tractable companion, if the mode's dichotomy
    /// applies to this instance.
    fn upper_theorem(&self, comp: &Companion) -> Option<&'static str> {
        let q = self.q;
        if q.is_boolean() {
            return Some("COR_5_2");
        }
        match self.mode {
            Mode::SingleTest | Mode::AllTest => Some("THM_5_1"),
            Mode::Count if self.profile.full && q.is_full() => Some("THM_6_4"),
            Mode::Count if self.profile.full && comp.cost == CostClass::Linear => Some("THM_6_6"),
            Mode::Count => None,
            Mode::DirectAccess if self.profile.full => Some("THM_7_2"),
            Mode::DirectAccess => None,
            Mode::Enumerate if q.arity() <= 2 => Some("THM_8_1"),
            Mode::Enumerate => None,
        }
    }

    fn lower_bound(
        &self,
        comp: &Companion,
        s: &StructureReport,
    ) -> std::result::Result<(&'static str, Hypothesis), String> {
        let q = self.q;
        if q.is_boolean() {
            return Ok(("COR_5_2", Hypothesis::Hyperclique));
        }
        match self.mode {
            Mode::SingleTest | Mode::AllTest => Ok(("THM_5_1", Hypothesis::Hyperclique)),
            Mode::Count => {
                if !self.profile.full {
                    return Err("counting dichotomies need a full TGD set".into());
                }
                if q.is_full() {
                    return Ok(("THM_6_4", Hypothesis::Hyperclique));
                }
                if comp.cost != CostClass::Linear {
                    return Err(
                        "counting for non-full queries needs a companion built in linear time".into(),
                    );
                }
                if s.acyclic {
                    Ok(("THM_6_6", Hypothesis::Seth))
                } else {
                    Ok(("THM_6_6", Hypothesis::Hyperclique))
                }
            }
            Mode::DirectAccess => {
                if self.profile.full {
                    Ok(("THM_7_2", Hypothesis::LogHyperclique))
                } else {
                    Err("the direct-access dichotomy needs a full TGD set".into())
                }
            }
            Mode::Enumerate => {
                if q.arity() <= 2 {
                    Ok(("THM_8_1", Hypothesis::Hyperclique))
                } else {
                    Err("enumeration dichotomy needs arity at most 2".into())
                }
            }
        }
    }
}

/// Classifies `q` under `tgds` for `mode`. `order` is required for direct
/// access on non-Boolean queries.
pub fn classify(
    q: &ConjunctiveQuery,
    tgds: &TgdSet,
    mode: Mode,
    order: Option<&[Var]>,
) -> Result<Verdict> {
    let mut schema = q.schema()?;
    for (rel, arity) in tgds.schema()? {
        match schema.get(&rel) {
            Some(&a) if a != arity => {
                return Err(Error::Arity {
                    rel,
                    expected: a,
                    found: arity,
                })
            }
            _ => {
                schema.insert(rel, arity);
            }
        }
    }
    let order = check_order(q, order, mode)?;
    let ctx = Ctx {
        q,
        mode,
        profile: profile_tgds(tgds),
        order,
    };

    if let Some(e) = registry::lookup(q, tgds, mode) {
        let (engine, path) = match e.demo {
            Some(d) => (d.to_string(), EnginePath::Tractable),
            None => (engine_name(mode).to_string(), EnginePath::Fallback),
        };
        return Ok(ctx.verdict(
            e.status,
            e.theorem,
            e.hypothesis,
            None,
            (engine, path, q),
            format!("registered example `{}`: {}", e.name, e.notes),
            ctx.report(q),
        ));
    }

    let comp = match companion(q, tgds) {
        Some(Ok(c)) => Some(c),
        Some(Err(Error::BudgetExhausted(n))) => return Err(Error::BudgetExhausted(n)),
        _ => None,
    };

    // Equivalent queries to try, companion first.
    let mut candidates: Vec<(&'static str, ConjunctiveQuery)> = Vec::new();
    if let Some(c) = &comp {
        candidates.push(("tagging companion", c.query.clone()));
    }
    candidates.push(("core of the query", core_of_query(q)));
    if ctx.profile.chase_terminates() {
        candidates.push(("query minimized under the TGDs", minimize_wrt(q, tgds)?));
        candidates.push((
            "core of the chased query",
            core_of_query(&chase_query(q, tgds, DEFAULT_BUDGET)?),
        ));
    }

    let engine = engine_name(mode).to_string();
    for (i, (label, cand)) in candidates.iter().enumerate() {
        let s = ctx.report(cand);
        if !meets(mode, &s) {
            continue;
        }
        let theorem = match &comp {
            Some(c) if i == 0 => ctx.upper_theorem(c),
            _ => None,
        }
        .unwrap_or("EQUIVALENT_QUERY");
        let shown = comp.as_ref().map(|c| &c.query).unwrap_or(cand);
        return Ok(ctx.verdict(
            Status::Tractable,
            theorem,
            None,
            Some(shown),
            (engine, EnginePath::Tractable, cand),
            format!("the {label} is {}", condition_text(mode)),
            s,
        ));
    }

    let s = ctx.report(q);
    let unary_dichotomy = mode == Mode::Enumerate
        && ctx.profile.unary_heads_only
        && s.connected
        && s.self_join_free;
    let companion_bound = comp.as_ref().map(|c| {
        let cs = ctx.report(&c.query);
        (ctx.lower_bound(c, &cs), cs)
    });
    if let Some((Ok((theorem, h)), cs)) = companion_bound.clone() {
        return Ok(ctx.verdict(
            Status::ConditionallyHard,
            theorem,
            Some(h),
            comp.as_ref().map(|c| &c.query),
            (engine, EnginePath::Fallback, q),
            format!("the tagging companion is not {}", condition_text(mode)),
            cs,
        ));
    }
    if unary_dichotomy {
        return Ok(ctx.verdict(
            Status::ConditionallyHard,
            "THM_8_2",
            Some(Hypothesis::Hyperclique),
            comp.as_ref().map(|c| &c.query),
            (engine, EnginePath::Fallback, q),
            "connected self-join-free query under unary-head TGDs is not acyclic and free-connex"
                .into(),
            s,
        ));
    }
    match companion_bound {
        Some((Err(why), cs)) => Ok(ctx.verdict(
            Status::Open,
            "PRECONDITION_UNMET",
            None,
            comp.as_ref().map(|c| &c.query),
            (engine, EnginePath::Fallback, q),
            format!("the tagging companion is not {}, but {why}", condition_text(mode)),
            cs,
        )),
        _ => Ok(ctx.verdict(
            Status::Open,
            "NO_COMPANION",
            None,
            None,
            (engine, EnginePath::Fallback, q),
            format!(
                "no equivalent query is {} and the TGD set admits no tagging companion \
                 (needs full frontier-guarded TGDs, or non-recursive TGDs with head arity \
                 or frontier at most 2)",
                condition_text(mode)
            ),
            s,
        )),
    }
}

/// Text report of the decision path behind a verdict.
pub fn explain(v: &Verdict) -> String {
    let mut out = String::new();
    let status = match v.status {
        Status::Tractable => "TRACTABLE",
        Status::ConditionallyHard => "CONDITIONALLY_HARD",
        Status::Open => "OPEN",
    };
    let _ = writeln!(out, "mode: {}", v.mode);
    let _ = writeln!(out, "status: {status} ({})", v.theorem);
    if let Some(p) = &v.profile {
        let _ = writeln!(
            out,
            "tgds: full={} non_recursive={} frontier_guarded={} max_head_arity={} max_frontier={} unary_heads={}",
            p.full, p.non_recursive, p.frontier_guarded, p.max_head_arity, p.max_frontier, p.unary_heads_only
        );
    }
    match &v.companion {
        Some(c) => {
            let _ = writeln!(out, "companion: {c}");
        }
        None => {
            let _ = writeln!(out, "companion: none");
        }
    }
    if let Some(s) = &v.structure {
        let _ = writeln!(
            out,
            "structure: acyclic={} weakly_acyclic={} free_connex={} self_join_free={} connected={}{}",
            s.acyclic,
            s.weakly_acyclic,
            s.free_connex,
            s.self_join_free,
            s.connected,
            s.disruptive_trio
                .map(|[a, b, c]| format!(" trio=({},{},{})", a.name(), b.name(), c.name()))
                .unwrap_or_default()
        );
    }
    match v.status {
        Status::Tractable => {
            let _ = writeln!(
                out,
                "engine plan: {} ({}) on {}",
                v.engine_plan.engine,
                match v.engine_plan.path {
                    EnginePath::Tractable => "tractable path",
                    EnginePath::Fallback => "fallback path",
                },
                v.engine_plan.query
            );
        }
        Status::ConditionallyHard => {
            if let Some(h) = v.hypothesis {
                let _ = writeln!(out, "hypothesis: {}", serde_json::to_value(h).unwrap().as_str().unwrap());
            }
        }
        Status::Open => {
            let _ = writeln!(out, "unmet precondition: {}", v.notes);
        }
    }
    let _ = writeln!(out, "notes: {}", v.notes);
    out
}
