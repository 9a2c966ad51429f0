//! Markov models, do-probabilities, the two rules of causal calculus, and
//! symbolic identification of interventional queries.

mod identify;
mod markov;
mod rules;

pub use identify::{identify, Formula, Identification, Term, TraceStep, Val, DEFAULT_DEPTH};
pub use markov::{theorem2_verdict, Cpt, MarkovModel, Theorem2Verdict, MIN_PARENT_INFLUENCE};
pub use rules::{rule1_applies, rule1_gap, rule2_applies, rule2_gap};

use crate::error::{Error, Result};
use crate::space::{Assignment, VariableSpace};

/// `P(target | observed, do(intervened))` with concrete values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryExpr {
    pub target: Assignment,
    pub observed: Assignment,
    pub intervened: Assignment,
}

impl QueryExpr {
    pub fn new(target: Assignment, observed: Assignment, intervened: Assignment) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::Precondition("a query needs at least one target variable".into()));
        }
        let (t, o, d) = (target.domain(), observed.domain(), intervened.domain());
        if !t.is_disjoint(o) || !t.is_disjoint(d) || !o.is_disjoint(d) {
            return Err(Error::Overlap("target, observed and intervened variables".into()));
        }
        Ok(QueryExpr { target, observed, intervened })
    }

    pub fn check(&self, space: &VariableSpace) -> Result<()> {
        space.check(&self.target)?;
        space.check(&self.observed)?;
        space.check(&self.intervened)
    }

    pub fn display(&self, space: &VariableSpace) -> String {
        let b = |a: &Assignment| {
            a.iter().map(|(v, x)| format!("{}={}", space.name(v), x)).collect::<Vec<_>>().join(",")
        };
        let mut cond = Vec::new();
        if !self.observed.is_empty() {
            cond.push(b(&self.observed));
        }
        if !self.intervened.is_empty() {
            cond.push(format!("do({})", b(&self.intervened)));
        }
        if cond.is_empty() {
            format!("P({})", b(&self.target))
        } else {
            format!("P({}|{})", b(&self.target), cond.join(","))
        }
    }
}
