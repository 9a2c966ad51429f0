//! Symbolic identification of interventional queries.
//!
//! A formula is a sum over bound variables of a product of conditional
//! probability terms, each of which may still carry a `do(...)` part. Every
//! rewrite step preserves the value of the formula on every model over the
//! graph. Identification succeeds when no term carries a `do` any more.
//!
//! Two searches are tried in order:
//!
//! 1. For queries without observations, a structured derivation: sum over the
//!    ancestors `R` of the outcome in the graph without edges into the
//!    intervened set, split `P(y, r | do(x))` by the chain rule along a
//!    topological order, then rewrite each single-variable factor with the
//!    two rules, preferring the do-free form conditioned on its parents.
//! 2. A bounded breadth-first search over whole formulas whose moves are the
//!    two rules, total probability over a fresh variable, chain-rule split and
//!    merge, and summing out a variable that occurs in a single target.
//!
//! Both searches expand states in a fixed order and break ties by the
//! formula's normal form, so results are identical from run to run.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::rules::{rule1_applies, rule2_applies};
use super::QueryExpr;
use crate::dist::JointTable;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::par;
use crate::space::{Assignment, Grid, Var, VarSet};

pub const DEFAULT_DEPTH: usize = 12;

/// Cap on formulas visited by the breadth-first search.
const MAX_STATES: usize = 100_000;

/// Depth of the per-factor search in the structured derivation.
const FACTOR_DEPTH: usize = 6;

/// The value a variable takes inside a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    Fixed(usize),
    /// The variable is summed over; printed as its lowercased name.
    Bound,
}

type Binding = BTreeMap<Var, Val>;

/// `P(target | observed, do(intervened))`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub target: Binding,
    pub observed: Binding,
    pub intervened: Binding,
}

impl Term {
    fn vars(&self) -> VarSet {
        keys(&self.target).union(keys(&self.observed)).union(keys(&self.intervened))
    }

    pub fn has_do(&self) -> bool {
        !self.intervened.is_empty()
    }

    fn render(&self, g: &Dag) -> String {
        let mut s = format!("P({}", list(g, &self.target));
        let mut cond = Vec::new();
        if !self.observed.is_empty() {
            cond.push(list(g, &self.observed));
        }
        if !self.intervened.is_empty() {
            cond.push(format!("do({})", list(g, &self.intervened)));
        }
        if !cond.is_empty() {
            s.push('|');
            s.push_str(&cond.join(","));
        }
        s.push(')');
        s
    }

    /// Value of the term on concrete bound values.
    fn resolve(b: &Binding, bound: &Assignment) -> Assignment {
        b.iter()
            .map(|(v, x)| match x {
                Val::Fixed(k) => (*v, *k),
                Val::Bound => (*v, bound.get(*v).expect("bound variable has a value")),
            })
            .collect()
    }
}

fn keys(b: &Binding) -> VarSet {
    b.keys().copied().collect()
}

fn list(g: &Dag, b: &Binding) -> String {
    b.iter()
        .map(|(v, x)| match x {
            Val::Fixed(k) => format!("{}={}", g.name(*v), k),
            Val::Bound => format!("{}={}", g.name(*v), g.name(*v).to_lowercase()),
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// `sum_{bound} prod terms`, kept in normal form (terms sorted, no
/// duplicates in `bound`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Formula {
    pub bound: VarSet,
    pub terms: Vec<Term>,
}

impl Formula {
    pub fn new(bound: VarSet, mut terms: Vec<Term>) -> Self {
        terms.sort();
        Formula { bound, terms }
    }

    pub fn from_query(q: &QueryExpr) -> Self {
        let fixed = |a: &Assignment| a.iter().map(|(v, x)| (v, Val::Fixed(x))).collect();
        Formula::new(
            VarSet::empty(),
            vec![Term { target: fixed(&q.target), observed: fixed(&q.observed), intervened: fixed(&q.intervened) }],
        )
    }

    pub fn is_do_free(&self) -> bool {
        self.terms.iter().all(|t| !t.has_do())
    }

    fn vars(&self) -> VarSet {
        self.terms.iter().fold(self.bound, |acc, t| acc.union(t.vars()))
    }

    /// Canonical text, e.g. `sum_a[ P(L=1|A=a) * P(A=a|E=1) ]`. Terms are
    /// printed children first (later in topological order first).
    pub fn render(&self, g: &Dag) -> String {
        let order = g.topological_order();
        let rank = |v: Var| order.iter().position(|u| *u == v).unwrap_or(usize::MAX);
        let mut terms: Vec<&Term> = self.terms.iter().collect();
        terms.sort_by_key(|t| {
            let top = t.target.keys().map(|v| rank(*v)).max().unwrap_or(0);
            (std::cmp::Reverse(top), (*t).clone())
        });
        let mut body = if terms.is_empty() {
            "1".to_string()
        } else {
            terms.iter().map(|t| t.render(g)).collect::<Vec<_>>().join(" * ")
        };
        for v in self.bound.iter().collect::<Vec<_>>().into_iter().rev() {
            body = format!("sum_{}[ {} ]", g.name(v).to_lowercase(), body);
        }
        body
    }

    /// Evaluates the formula, asking `term_value` for each term at concrete
    /// values of the bound variables.
    pub fn evaluate_with(
        &self,
        cards: impl Fn(Var) -> usize,
        term_value: impl Fn(&Term, &Assignment, &Assignment, &Assignment) -> Result<f64>,
    ) -> Result<f64> {
        let grid = Grid::new(self.bound.iter().map(|v| (v, cards(v))).collect());
        let mut total = 0.0;
        for idx in 0..grid.len() {
            let b = grid.decode(idx);
            let mut prod = 1.0;
            for t in &self.terms {
                let target = Term::resolve(&t.target, &b);
                let observed = Term::resolve(&t.observed, &b);
                let intervened = Term::resolve(&t.intervened, &b);
                prod *= term_value(t, &target, &observed, &intervened)?;
                if prod == 0.0 {
                    break;
                }
            }
            total += prod;
        }
        Ok(total)
    }

    /// Evaluates a do-free formula on an observational table.
    pub fn evaluate(&self, joint: &JointTable) -> Result<f64> {
        if !self.is_do_free() {
            return Err(Error::Precondition("formula still contains do-terms".into()));
        }
        let grid = joint.grid();
        self.evaluate_with(
            |v| grid.card_of(v).unwrap_or(0),
            |_, target, observed, _| {
                let z = joint.prob(observed)?;
                if z <= 0.0 {
                    return Err(Error::ZeroProbability(format!("{observed:?}")));
                }
                Ok(joint.prob(&target.merged(observed))? / z)
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub rule: String,
    pub detail: String,
    #[serde(skip)]
    pub result: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Identification {
    Identified { formula: Formula, trace: Vec<TraceStep> },
    /// No do-free formula was reached within the budget. This is a statement
    /// about the search, not a proof of non-identifiability.
    NotIdentified { depth_limit: usize, states: usize },
}

/// Rewrites `q` into a formula over observational terms using the two rules.
pub fn identify(g: &Dag, q: &QueryExpr, depth_limit: usize) -> Result<Identification> {
    let all = q.target.domain().union(q.observed.domain()).union(q.intervened.domain());
    g.require(all)?;
    let start = Formula::from_query(q);
    if start.is_do_free() {
        return Ok(Identification::Identified { formula: start, trace: Vec::new() });
    }
    if q.observed.is_empty() {
        if let Some(trace) = structured(g, q)? {
            if trace.len() <= depth_limit {
                let formula = trace.last().unwrap().result.clone();
                return Ok(Identification::Identified { formula, trace });
            }
        }
    }
    search(g, start, depth_limit)
}

// ---------------------------------------------------------------------------
// Structured derivation.

fn structured(g: &Dag, q: &QueryExpr) -> Result<Option<Vec<TraceStep>>> {
    let x = q.intervened.domain();
    let y = q.target.domain();
    let gx = g.truncate_in(x);
    let r = gx.ancestral_closure(y).difference(x).difference(y);
    let mut trace = Vec::new();
    let mut f = Formula::from_query(q);

    for v in r.iter() {
        let mut t = f.terms[0].clone();
        t.target.insert(v, Val::Bound);
        f = Formula::new(f.bound.with(v), vec![t]);
        trace.push(TraceStep {
            rule: "total-probability".into(),
            detail: format!("sum over {}", g.name(v)),
            result: f.clone(),
        });
    }

    // Chain split along the topological order, peeling the latest variable.
    let order: Vec<Var> = g.topological_order().into_iter().filter(|v| y.union(r).contains(*v)).collect();
    let mut joint = f.terms[0].clone();
    let mut factors: Vec<Term> = Vec::new();
    for &v in order.iter().rev().take(order.len().saturating_sub(1)) {
        let val = joint.target.remove(&v).unwrap();
        let mut observed = joint.observed.clone();
        observed.extend(joint.target.iter().map(|(k, x)| (*k, *x)));
        factors.push(Term {
            target: BTreeMap::from([(v, val)]),
            observed,
            intervened: joint.intervened.clone(),
        });
        let mut terms = factors.clone();
        terms.push(joint.clone());
        f = Formula::new(f.bound, terms);
        trace.push(TraceStep {
            rule: "chain-split".into(),
            detail: format!("factor out {}", g.name(v)),
            result: f.clone(),
        });
    }
    factors.push(joint);

    // Rewrite the factors parents-first.
    factors.reverse();
    let mut done: Vec<Term> = Vec::new();
    for k in 0..factors.len() {
        let Some(path) = factor_search(g, &factors[k])? else {
            return Ok(None);
        };
        let mut current = factors[k].clone();
        for (rule, detail, next) in path {
            current = next;
            let mut terms = done.clone();
            terms.push(current.clone());
            terms.extend(factors[k + 1..].iter().cloned());
            f = Formula::new(f.bound, terms);
            trace.push(TraceStep { rule, detail, result: f.clone() });
        }
        done.push(current);
    }
    if !f.is_do_free() {
        return Ok(None);
    }
    if trace.is_empty() {
        return Ok(None);
    }
    Ok(Some(trace))
}

type Step = (String, String, Term);

/// Shortest rule path turning a single-variable factor into a do-free term,
/// preferring one conditioned on exactly the variable's parents.
fn factor_search(g: &Dag, start: &Term) -> Result<Option<Vec<Step>>> {
    let v = *start.target.keys().next().unwrap();
    let goal_obs = g.parents(v);
    let mut seen: HashSet<Term> = HashSet::from([start.clone()]);
    let mut frontier: Vec<(Term, Vec<Step>)> = vec![(start.clone(), Vec::new())];
    let mut fallback: Option<Vec<Step>> = None;
    for _ in 0..=FACTOR_DEPTH {
        let mut hits: Vec<&(Term, Vec<Step>)> =
            frontier.iter().filter(|(t, _)| !t.has_do() && keys(&t.observed) == goal_obs).collect();
        hits.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some((_, path)) = hits.first() {
            return Ok(Some(path.clone()));
        }
        if fallback.is_none() {
            let mut free: Vec<&(Term, Vec<Step>)> = frontier.iter().filter(|(t, _)| !t.has_do()).collect();
            free.sort_by(|a, b| a.0.cmp(&b.0));
            fallback = free.first().map(|(_, p)| p.clone());
        }
        let mut next = Vec::new();
        for (t, path) in &frontier {
            for (rule, detail, u) in term_moves(g, t)? {
                if seen.insert(u.clone()) {
                    let mut p = path.clone();
                    p.push((rule, detail, u.clone()));
                    next.push((u, p));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(fallback)
}

/// Single-term rule applications: exchange a do-subset for observations,
/// exchange observations for a do-subset, or delete a do-subset.
fn term_moves(g: &Dag, t: &Term) -> Result<Vec<Step>> {
    let i0 = keys(&t.target);
    let obs = keys(&t.observed);
    let dos = keys(&t.intervened);
    let names = |s: VarSet| g.names_of(s).join(",");
    let mut out = Vec::new();
    for s in dos.subsets().skip(1) {
        if rule1_applies(g, i0, dos.difference(s), s, obs)? {
            let mut u = t.clone();
            for v in s.iter() {
                let x = u.intervened.remove(&v).unwrap();
                u.observed.insert(v, x);
            }
            out.push(("rule1".to_string(), format!("do({}) becomes an observation", names(s)), u));
        }
        if rule2_applies(g, i0, dos.difference(s), s, obs)? {
            let mut u = t.clone();
            for v in s.iter() {
                u.intervened.remove(&v);
            }
            out.push(("rule2".to_string(), format!("do({}) deleted", names(s)), u));
        }
    }
    for s in obs.subsets().skip(1) {
        if rule1_applies(g, i0, dos, s, obs.difference(s))? {
            let mut u = t.clone();
            for v in s.iter() {
                let x = u.observed.remove(&v).unwrap();
                u.intervened.insert(v, x);
            }
            out.push(("rule1".to_string(), format!("observation of {} becomes do", names(s)), u));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// General breadth-first search.

fn search(g: &Dag, start: Formula, depth_limit: usize) -> Result<Identification> {
    let mut seen: HashSet<Formula> = HashSet::from([start.clone()]);
    let mut frontier: Vec<(Formula, Vec<TraceStep>)> = vec![(start, Vec::new())];
    for _ in 0..depth_limit {
        let expanded: Vec<Result<Vec<(String, String, Formula)>>> =
            par::map_collect(&frontier, |(f, _)| formula_moves(g, f));
        let mut children: BTreeMap<Formula, Vec<TraceStep>> = BTreeMap::new();
        for ((_, path), moves) in frontier.iter().zip(expanded) {
            for (rule, detail, h) in moves? {
                if seen.contains(&h) || children.contains_key(&h) {
                    continue;
                }
                let mut p = path.clone();
                p.push(TraceStep { rule, detail, result: h.clone() });
                children.insert(h, p);
            }
        }
        if let Some((f, trace)) = children.iter().find(|(f, _)| f.is_do_free()) {
            return Ok(Identification::Identified { formula: f.clone(), trace: trace.clone() });
        }
        if children.is_empty() || seen.len() + children.len() > MAX_STATES {
            seen.extend(children.keys().cloned());
            break;
        }
        seen.extend(children.keys().cloned());
        frontier = children.into_iter().collect();
    }
    Ok(Identification::NotIdentified { depth_limit, states: seen.len() })
}

fn replace(f: &Formula, k: usize, with: Vec<Term>, bound: VarSet) -> Formula {
    let mut terms: Vec<Term> = f.terms.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, t)| t.clone()).collect();
    terms.extend(with);
    Formula::new(bound, terms)
}

fn formula_moves(g: &Dag, f: &Formula) -> Result<Vec<(String, String, Formula)>> {
    let mut out = Vec::new();
    let used = f.vars();
    for (k, t) in f.terms.iter().enumerate() {
        if !t.has_do() {
            continue;
        }
        for (rule, detail, u) in term_moves(g, t)? {
            out.push((rule, detail, replace(f, k, vec![u], f.bound)));
        }
        for w in g.nodes().difference(used).iter() {
            let mut u = t.clone();
            u.target.insert(w, Val::Bound);
            out.push((
                "total-probability".into(),
                format!("sum over {}", g.name(w)),
                replace(f, k, vec![u], f.bound.with(w)),
            ));
        }
        if t.target.len() > 1 {
            for (&v, &val) in &t.target {
                let mut rest = t.clone();
                rest.target.remove(&v);
                let mut head = t.clone();
                head.target = BTreeMap::from([(v, val)]);
                head.observed.extend(rest.target.iter().map(|(a, b)| (*a, *b)));
                out.push((
                    "chain-split".into(),
                    format!("factor out {}", g.name(v)),
                    replace(f, k, vec![head, rest], f.bound),
                ));
            }
        }
    }
    // Chain merge: P(a | b, O, do D) * P(b | O, do D) = P(a, b | O, do D).
    for (a, ta) in f.terms.iter().enumerate() {
        for (b, tb) in f.terms.iter().enumerate() {
            if a == b || ta.intervened != tb.intervened {
                continue;
            }
            let mut joined = tb.observed.clone();
            joined.extend(tb.target.iter().map(|(x, y)| (*x, *y)));
            if ta.observed != joined || !keys(&ta.target).is_disjoint(keys(&tb.target)) {
                continue;
            }
            let mut merged = tb.clone();
            merged.target.extend(ta.target.iter().map(|(x, y)| (*x, *y)));
            let terms: Vec<Term> = f
                .terms
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != a && *j != b)
                .map(|(_, t)| t.clone())
                .chain(std::iter::once(merged))
                .collect();
            out.push(("chain-merge".into(), "join two chain factors".into(), Formula::new(f.bound, terms)));
        }
    }
    // Sum out a bound variable that occurs only as a target of one term.
    for w in f.bound.iter() {
        let holders: Vec<usize> = (0..f.terms.len()).filter(|j| f.terms[*j].vars().contains(w)).collect();
        if let [k] = holders[..] {
            let t = &f.terms[k];
            if t.target.contains_key(&w) {
                let mut u = t.clone();
                u.target.remove(&w);
                let with = if u.target.is_empty() { vec![] } else { vec![u] };
                out.push(("sum-out".into(), format!("sum out {}", g.name(w)), replace(f, k, with, f.bound.without(w))));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::VariableSpace;

    fn q(space: &VariableSpace, t: &[(&str, usize)], o: &[(&str, usize)], d: &[(&str, usize)]) -> QueryExpr {
        QueryExpr::new(space.assign(t).unwrap(), space.assign(o).unwrap(), space.assign(d).unwrap()).unwrap()
    }

    fn formula(id: Identification) -> (Formula, Vec<TraceStep>) {
        match id {
            Identification::Identified { formula, trace } => (formula, trace),
            other => panic!("not identified: {other:?}"),
        }
    }

    #[test]
    fn do_free_query_is_returned_unchanged() {
        let s = VariableSpace::binary(&["A", "L"]).unwrap();
        let g = Dag::from_names(&["A", "L"], &[("A", "L")]).unwrap();
        let query = q(&s, &[("L", 1)], &[("A", 0)], &[]);
        let (f, trace) = formula(identify(&g, &query, DEFAULT_DEPTH).unwrap());
        assert!(trace.is_empty());
        assert_eq!(f, Formula::from_query(&query));
        assert_eq!(f.render(&g), "P(L=1|A=0)");
    }

    #[test]
    fn charlie_renders_as_adjustment() {
        let s = VariableSpace::binary(&["E", "A", "L"]).unwrap();
        let g = Dag::from_names(&["E", "A", "L"], &[("E", "A"), ("A", "L")]).unwrap();
        let (f, trace) = formula(identify(&g, &q(&s, &[("L", 1)], &[], &[("E", 1)]), DEFAULT_DEPTH).unwrap());
        assert_eq!(f.render(&g), "sum_a[ P(L=1|A=a) * P(A=a|E=1) ]");
        let rules: Vec<&str> = trace.iter().map(|t| t.rule.as_str()).collect();
        assert_eq!(rules, ["total-probability", "chain-split", "rule1", "rule2"]);
    }

    #[test]
    fn blake_is_a_single_exchange() {
        let s = VariableSpace::binary(&["A", "E", "L"]).unwrap();
        let g = Dag::from_names(&["A", "E", "L"], &[("A", "E"), ("A", "L"), ("E", "L")]).unwrap();
        let (f, trace) =
            formula(identify(&g, &q(&s, &[("L", 1)], &[], &[("A", 0), ("E", 1)]), DEFAULT_DEPTH).unwrap());
        assert_eq!(f.render(&g), "P(L=1|A=0,E=1)");
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].rule, "rule1");
    }

    #[test]
    fn general_search_handles_observations() {
        let s = VariableSpace::binary(&["E", "A", "L"]).unwrap();
        let g = Dag::from_names(&["E", "A", "L"], &[("E", "A"), ("A", "L")]).unwrap();
        let (f, _) = formula(identify(&g, &q(&s, &[("L", 1)], &[("A", 0)], &[("E", 1)]), DEFAULT_DEPTH).unwrap());
        assert!(f.is_do_free());
    }

    #[test]
    fn zero_depth_budget_reports_not_identified() {
        let s = VariableSpace::binary(&["E", "A", "L"]).unwrap();
        let g = Dag::from_names(&["E", "A", "L"], &[("E", "A"), ("A", "L")]).unwrap();
        let r = identify(&g, &q(&s, &[("L", 1)], &[], &[("E", 1)]), 0).unwrap();
        assert!(matches!(r, Identification::NotIdentified { .. }));
    }
}
