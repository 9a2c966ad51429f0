//! Decidable checks of the causal axioms over a belief family.
//!
//! Sweeps quantify over subsets of variables and are exponential in the
//! number of variables, so they refuse families larger than a cap unless
//! the caller raises it.

use serde::Serialize;

use crate::beliefs::BeliefFamily;
use crate::dist::JointTable;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::par;
use crate::space::{Policy, Var, VarSet, VariableSpace};

/// Default largest family (in variables) the sweeps accept.
pub const DEFAULT_MAX_VARS: usize = 6;

/// Deviation above which a conditional dependence counts as genuine.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-6;

/// Witnesses kept per report; the total count is always exact.
pub const MAX_WITNESSES: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Labelled variable sets, e.g. `("i", ["L"])`, `("H", [])`.
    pub sets: Vec<(String, Vec<String>)>,
    /// The assignment at which the check failed, when there is one.
    pub at: Option<String>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
}

impl Witness {
    fn sets(space: &VariableSpace, sets: &[(&str, VarSet)]) -> Self {
        Witness {
            sets: sets.iter().map(|(l, s)| (l.to_string(), space.names_of(*s))).collect(),
            at: None,
            lhs: None,
            rhs: None,
        }
    }

    fn at(mut self, at: String) -> Self {
        self.at = Some(at);
        self
    }

    fn values(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self
    }

    pub fn set(&self, label: &str) -> Option<&[String]> {
        self.sets.iter().find(|(l, _)| l == label).map(|(_, s)| s.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub pass: bool,
    pub violation_count: usize,
    pub violations: Vec<Witness>,
    pub note: String,
}

impl AxiomReport {
    fn from(axiom: &str, found: Vec<Witness>, note: &str) -> Self {
        let violation_count = found.len();
        let mut violations = found;
        violations.truncate(MAX_WITNESSES);
        AxiomReport {
            axiom: axiom.to_string(),
            pass: violation_count == 0,
            violation_count,
            violations,
            note: note.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepLimits {
    pub max_vars: usize,
}

impl Default for SweepLimits {
    fn default() -> Self {
        SweepLimits { max_vars: DEFAULT_MAX_VARS }
    }
}

impl SweepLimits {
    pub fn unlimited() -> Self {
        SweepLimits { max_vars: 64 }
    }

    fn check(&self, fam: &BeliefFamily) -> Result<()> {
        let n = fam.space().len();
        if n > self.max_vars {
            return Err(Error::TooLarge { vars: n, cap: self.max_vars });
        }
        Ok(())
    }
}

fn disjoint(sets: &[VarSet]) -> Result<()> {
    for (a, x) in sets.iter().enumerate() {
        for y in &sets[a + 1..] {
            if !x.is_disjoint(*y) {
                return Err(Error::Overlap(format!("{x} and {y}")));
            }
        }
    }
    Ok(())
}

/// Largest violation of `i ⊥ J | K` over the beliefs `μ_{x_H}`, for all `x_H`.
pub fn intervention_ci_deviation(fam: &BeliefFamily, i: Var, j: VarSet, k: VarSet, h: VarSet) -> Result<f64> {
    let iset = VarSet::singleton(i);
    disjoint(&[iset, j, k, h])?;
    if !iset.union(j).union(k).union(h).is_subset(fam.space().all()) {
        return Err(Error::UnknownVariable("set member outside the space".into()));
    }
    let mut worst: f64 = 0.0;
    for xh in fam.space().outcomes(h) {
        worst = worst.max(fam.table(&Policy(xh)).ci_deviation(iset, j, k)?);
    }
    Ok(worst)
}

/// `i ⊥_H J | K`: under every intervention on `H`, `i` is independent of
/// `J` given `K`.
pub fn check_intervention_ci(fam: &BeliefFamily, i: Var, j: VarSet, k: VarSet, h: VarSet) -> Result<bool> {
    Ok(intervention_ci_deviation(fam, i, j, k, h)? <= fam.tol())
}

/// Every nonempty set of variables contains one with no causes inside the
/// set. Checked as acyclicity of the causes relation, which is equivalent:
/// a cycle is a set without such a variable, and an acyclic relation always
/// has a source in every subset.
pub fn check_axiom2(fam: &BeliefFamily) -> AxiomReport {
    let note = "checked as acyclicity of the causes relation (equivalent to every subset having a source)";
    let found = match fam.causal_cycle() {
        Some(cycle) => {
            let names: Vec<String> = cycle.iter().map(|v| fam.space().name(*v).to_string()).collect();
            vec![Witness { sets: vec![("cycle".into(), names)], at: None, lhs: None, rhs: None }]
        }
        None => Vec::new(),
    };
    AxiomReport::from("2", found, note)
}

/// Every cause matters: for each `i`, `J ⊆ Ca(i)` and `H ⊆ N∖{i}` disjoint
/// from `J` with `S = Ca(i)∖(J∪H)` nonempty, `i` depends on `S` given `J`
/// under some intervention on `H`. `H` may overlap `Ca(i)`.
pub fn check_axiom3(fam: &BeliefFamily, g: &Dag) -> Result<AxiomReport> {
    check_axiom3_with(fam, g, SweepLimits::default())
}

pub fn check_axiom3_with(fam: &BeliefFamily, g: &Dag, limits: SweepLimits) -> Result<AxiomReport> {
    limits.check(fam)?;
    let space = fam.space();
    let vars: Vec<Var> = space.vars().collect();
    let found = par::map_collect(&vars, |&i| {
        let ca = g.parents(i);
        let mut out = Vec::new();
        for j in ca.subsets() {
            for h in space.all().without(i).difference(j).subsets() {
                let s = ca.difference(j.union(h));
                if s.is_empty() {
                    continue;
                }
                let dev = intervention_ci_deviation(fam, i, s, j, h).unwrap();
                if dev <= DEPENDENCE_THRESHOLD {
                    out.push(
                        Witness::sets(space, &[("i", VarSet::singleton(i)), ("J", j), ("H", h), ("S", s)])
                            .values(dev, DEPENDENCE_THRESHOLD),
                    );
                }
            }
        }
        out
    });
    Ok(AxiomReport::from(
        "3",
        found.into_iter().flatten().collect(),
        "dependence means a deviation above 1e-6 for some intervention on H",
    ))
}

/// Non-adjacent variables are independent given their causes: for every
/// non-adjacent pair `{i, j}` and disjoint `K`, `J` drawn from the variables
/// that are nondescendants of both, `i ⊥_K j | (Ca(i)∪Ca(j)∪J)∖K`.
pub fn check_axiom4(fam: &BeliefFamily, g: &Dag) -> Result<AxiomReport> {
    check_axiom4_with(fam, g, SweepLimits::default())
}

pub fn check_axiom4_with(fam: &BeliefFamily, g: &Dag, limits: SweepLimits) -> Result<AxiomReport> {
    limits.check(fam)?;
    let space = fam.space();
    let pairs: Vec<(Var, Var)> = space
        .vars()
        .flat_map(|i| space.vars().filter(move |j| *j > i).map(move |j| (i, j)))
        .filter(|(i, j)| !g.adjacent(*i, *j))
        .collect();
    let found = par::map_collect(&pairs, |&(i, j)| {
        let mut out = Vec::new();
        let rest = space.all().without(i).without(j);
        let nd = g.nondescendants(i).intersection(g.nondescendants(j)).intersection(rest);
        let causes = g.parents(i).union(g.parents(j));
        for k in rest.subsets() {
            for jj in nd.difference(k).subsets() {
                let cond = causes.union(jj).difference(k);
                let dev = intervention_ci_deviation(fam, i, VarSet::singleton(j), cond, k).unwrap();
                if dev > fam.tol() {
                    out.push(
                        Witness::sets(
                            space,
                            &[
                                ("i", VarSet::singleton(i)),
                                ("j", VarSet::singleton(j)),
                                ("K", k),
                                ("J", jj),
                                ("given", cond),
                            ],
                        )
                        .values(dev, fam.tol()),
                    );
                }
            }
        }
        out
    });
    Ok(AxiomReport::from(
        "4",
        found.into_iter().flatten().collect(),
        "J ranges over variables that are nondescendants of both i and j",
    ))
}

/// Intervening on `J` does not change how `i` responds to its causes:
/// `μ(x_i | x_Ca(i)) = μ_{x_J}(x_i | x_{Ca(i)∖J})` for all `J ⊆ N∖{i}`.
pub fn check_axiom6(fam: &BeliefFamily, g: &Dag) -> Result<AxiomReport> {
    check_axiom6_with(fam, g, SweepLimits::default())
}

pub fn check_axiom6_with(fam: &BeliefFamily, g: &Dag, limits: SweepLimits) -> Result<AxiomReport> {
    limits.check(fam)?;
    let space = fam.space();
    let vars: Vec<Var> = space.vars().collect();
    let found = par::map_collect(&vars, |&i| {
        let ca = g.parents(i);
        let base = fam.observational().family_conditional(i, ca).unwrap();
        let mut out = Vec::new();
        for j in space.all().without(i).subsets().skip(1) {
            let rest = ca.difference(j);
            for xj in space.outcomes(j) {
                let t = fam.table(&Policy(xj.clone())).family_conditional(i, rest).unwrap();
                let grid = t.grid().clone();
                for idx in 0..grid.len() {
                    let cell = grid.decode(idx);
                    let full = cell.merged(&xj.restrict(ca));
                    let lhs = base.at(&full.restrict(ca.with(i)));
                    let rhs = t.mass()[idx];
                    if !((lhs - rhs).abs() <= fam.tol()) {
                        out.push(
                            Witness::sets(space, &[("i", VarSet::singleton(i)), ("J", j)])
                                .at(space.display(&cell.merged(&xj)))
                                .values(lhs, rhs),
                        );
                    }
                }
            }
        }
        out
    });
    Ok(AxiomReport::from("6", found.into_iter().flatten().collect(), ""))
}

/// No null states (every table has full support) and the completeness
/// identity for every cause. Monotone expected utility and a single
/// policy-independent utility hold by construction.
pub fn check_assumption1(fam: &BeliefFamily) -> AxiomReport {
    let space = fam.space();
    let mut found: Vec<Witness> = fam
        .zero_cells()
        .into_iter()
        .map(|(p, cell)| {
            Witness::sets(space, &[("item iii: zero cell under do", p.intervened())])
                .at(format!("do{} {}", space.display(p.values()), space.display(&cell)))
        })
        .collect();
    found.extend(fam.complete_state_space_check().into_iter().map(|v| {
        Witness::sets(space, &[("item ii: i", VarSet::singleton(v.i)), ("j", VarSet::singleton(v.j))])
            .at(space.display(&v.x))
            .values(v.lhs, v.rhs)
    }));
    AxiomReport::from(
        "assumption1",
        found,
        "items i and iv (monotone expected utility, policy-invariant utility) hold by construction",
    )
}

/// Axioms 2, 3 and 4 (and 6 when `with_axiom6`) against the causal graph.
/// When the causes relation is cyclic only the Axiom 2 report is returned.
pub fn check_all(fam: &BeliefFamily, with_axiom6: bool, limits: SweepLimits) -> Result<Vec<AxiomReport>> {
    limits.check(fam)?;
    let a2 = check_axiom2(fam);
    if !a2.pass {
        return Ok(vec![a2]);
    }
    let g = fam.causal_graph()?;
    let mut out = vec![a2, check_axiom3_with(fam, &g, limits)?, check_axiom4_with(fam, &g, limits)?];
    if with_axiom6 {
        out.push(check_axiom6_with(fam, &g, limits)?);
    }
    Ok(out)
}

/// Adds `eps * (-1)^(x_0 + ... + x_n)` to every cell of a binary-variable
/// table. Pairwise marginals are unchanged whenever there are at least
/// three variables.
pub fn parity_perturbation(t: &JointTable, eps: f64) -> Result<JointTable> {
    let grid = t.grid().clone();
    if grid.cards().iter().any(|c| *c != 2) {
        return Err(Error::Precondition("parity perturbation needs binary variables".into()));
    }
    let mut mass = t.mass().to_vec();
    grid.for_each(|idx, d| {
        let s: usize = d.iter().sum();
        mass[idx] += if s % 2 == 0 { eps } else { -eps };
    });
    JointTable::new(grid, mass)
}

