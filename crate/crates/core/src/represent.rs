//! Whether a DAG represents a distribution or a whole belief family.

use serde::Serialize;

use crate::axioms::{check_axiom2, check_axiom3, check_axiom4};
use crate::beliefs::BeliefFamily;
use crate::dist::JointTable;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::par;
use crate::space::{Policy, VarSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub clause: String,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentationVerdict {
    pub represents: bool,
    pub failures: Vec<Failure>,
    /// A variable and a smaller parent set that also factorizes the table.
    pub minimality_witness: Option<(String, Vec<String>)>,
}

impl RepresentationVerdict {
    fn from(failures: Vec<Failure>, minimality_witness: Option<(String, Vec<String>)>) -> Self {
        RepresentationVerdict { represents: failures.is_empty(), failures, minimality_witness }
    }
}

/// `g` represents `t`: the table factorizes along the parent sets of `g`,
/// and no parent set can be shrunk while keeping a factorization.
///
/// Shrinking one variable at a time is a complete search: if some family of
/// sub-parent-sets factorizes the table, each of its conditionals already
/// equals the full-parent conditional, so replacing any single parent set by
/// its member of the family factorizes too.
pub fn represents_distribution(g: &Dag, t: &JointTable, tol: f64) -> Result<RepresentationVerdict> {
    if g.nodes() != t.domain() {
        return Err(Error::Precondition(format!(
            "graph nodes {:?} differ from table domain",
            g.names_of(g.nodes())
        )));
    }
    let parents = g.parent_sets();
    let residual = t.chain_factorization_residual(&parents)?;
    if residual > tol {
        let f = Failure { clause: "factorization".into(), witness: format!("residual {residual:.3e}") };
        return Ok(RepresentationVerdict::from(vec![f], None));
    }
    for v in g.nodes().iter() {
        let pa = parents[v.0];
        for sub in pa.subsets().filter(|s| *s != pa) {
            let mut trial = parents.clone();
            trial[v.0] = sub;
            if t.chain_factorization_residual(&trial)? <= tol {
                let w = (g.name(v).to_string(), g.names_of(sub));
                let f = Failure {
                    clause: "minimality".into(),
                    witness: format!("parents of {} can shrink to {:?}", w.0, w.1),
                };
                return Ok(RepresentationVerdict::from(vec![f], Some(w)));
            }
        }
    }
    Ok(RepresentationVerdict::from(Vec::new(), None))
}

/// `g` represents the family: for every proper subset `T` and every `x_T`,
/// `g` with `T` deleted represents `μ_{x_T}`; and every edge `i -> j`
/// satisfies `μ_{x_{-{i,j}}}(x_j | x_i) = μ_{x_{-j}}(x_j)`. The case `T = N`
/// has an empty table and is skipped.
pub fn represents_family(g: &Dag, fam: &BeliefFamily) -> Result<RepresentationVerdict> {
    represents_family_impl(g, fam, false)
}

/// Same verdict as [`represents_family`], stopping at the first failure.
pub fn represents_family_fast(g: &Dag, fam: &BeliefFamily) -> Result<bool> {
    Ok(represents_family_impl(g, fam, true)?.represents)
}

fn represents_family_impl(g: &Dag, fam: &BeliefFamily, stop_early: bool) -> Result<RepresentationVerdict> {
    let space = fam.space();
    if g.names() != space.names() || g.nodes() != space.all() {
        return Err(Error::Precondition("graph nodes must be the family's variables".into()));
    }
    let tol = fam.tol();
    let subsets: Vec<VarSet> = space.all().subsets().filter(|t| *t != space.all()).collect();
    let per_t = par::map_collect(&subsets, |&t| -> Result<Vec<Failure>> {
        let gt = g.truncate_remove(t);
        let mut out = Vec::new();
        for xt in space.outcomes(t) {
            let v = represents_distribution(&gt, fam.table(&Policy(xt.clone())), tol)?;
            for f in v.failures {
                out.push(Failure {
                    clause: format!("truncation/{}", f.clause),
                    witness: format!("do{}: {}", space.display(&xt), f.witness),
                });
            }
            if stop_early && !out.is_empty() {
                break;
            }
        }
        Ok(out)
    });
    let mut failures = Vec::new();
    for r in per_t {
        failures.extend(r?);
        if stop_early && !failures.is_empty() {
            return Ok(RepresentationVerdict::from(failures, None));
        }
    }
    for (i, j) in g.edges() {
        for x in space.outcomes(space.all()) {
            let pair = Policy(x.restrict(space.all().without(i).without(j)));
            let single = Policy(x.restrict(space.all().without(j)));
            let given = x.restrict(VarSet::singleton(i));
            let target = x.restrict(VarSet::singleton(j));
            let lhs = fam.table(&pair).conditional(VarSet::singleton(j), &given)?.at(&target);
            let rhs = fam.table(&single).at(&target);
            if (lhs - rhs).abs() > tol {
                failures.push(Failure {
                    clause: "orientation".into(),
                    witness: format!(
                        "edge {} -> {} at {}: {lhs} vs {rhs}",
                        space.name(i),
                        space.name(j),
                        space.display(&x)
                    ),
                });
                if stop_early {
                    return Ok(RepresentationVerdict::from(failures, None));
                }
                break;
            }
        }
    }
    Ok(RepresentationVerdict::from(failures, None))
}

/// The candidates that represent the family.
pub fn representing_dags<'a>(fam: &BeliefFamily, candidates: &'a [Dag]) -> Result<Vec<&'a Dag>> {
    let hits = par::map_collect(candidates, |g| represents_family_fast(g, fam));
    let mut out = Vec::new();
    for (g, h) in candidates.iter().zip(hits) {
        if h? {
            out.push(g);
        }
    }
    Ok(out)
}

/// The candidates that represent a single distribution.
pub fn representing_dags_of_table<'a>(t: &JointTable, candidates: &'a [Dag], tol: f64) -> Result<Vec<&'a Dag>> {
    let mut out = Vec::new();
    for g in candidates {
        if represents_distribution(g, t, tol)?.represents {
            out.push(g);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Verdict {
    pub axioms_pass: bool,
    #[serde(skip)]
    pub dag: Option<Dag>,
    pub represents: bool,
    pub agree: bool,
}

/// Axioms 2-4 against representation by the causal graph. The two verdicts
/// must coincide; `agree == false` signals a bug or a tolerance artefact.
pub fn theorem1_verdict(fam: &BeliefFamily) -> Result<Theorem1Verdict> {
    if !check_axiom2(fam).pass {
        return Ok(Theorem1Verdict { axioms_pass: false, dag: None, represents: false, agree: true });
    }
    let g = fam.causal_graph()?;
    let axioms_pass = check_axiom3(fam, &g)?.pass && check_axiom4(fam, &g)?.pass;
    let represents = represents_family(&g, fam)?.represents;
    Ok(Theorem1Verdict { axioms_pass, dag: Some(g), represents, agree: axioms_pass == represents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DEFAULT_TOL;
    use crate::space::VariableSpace;

    #[test]
    fn product_table_and_edgeless_graph() {
        let s = VariableSpace::binary(&["a", "b"]).unwrap();
        let t = JointTable::over(&s, s.all(), vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        let empty = Dag::empty(s.names().to_vec());
        assert!(represents_distribution(&empty, &t, DEFAULT_TOL).unwrap().represents);
        let edge = Dag::from_names(&["a", "b"], &[("a", "b")]).unwrap();
        let v = represents_distribution(&edge, &t, DEFAULT_TOL).unwrap();
        assert!(!v.represents);
        assert_eq!(v.failures[0].clause, "minimality");
        assert_eq!(v.minimality_witness, Some(("b".to_string(), vec![])));
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let s = VariableSpace::binary(&["a", "b"]).unwrap();
        let t = JointTable::uniform(s.grid(s.set(&["a"]).unwrap()));
        let g = Dag::empty(s.names().to_vec());
        assert!(represents_distribution(&g, &t, DEFAULT_TOL).is_err());
    }

    #[test]
    fn product_family_is_represented_by_the_edgeless_graph() {
        let s = VariableSpace::binary(&["a", "b", "c"]).unwrap();
        let fam = BeliefFamily::product(s.clone(), &[vec![0.3, 0.7], vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let g = Dag::empty(s.names().to_vec());
        assert!(represents_family(&g, &fam).unwrap().represents);
        let v = theorem1_verdict(&fam).unwrap();
        assert!(v.axioms_pass && v.represents && v.agree);
        assert_eq!(v.dag.unwrap().edge_count(), 0);
    }
}
