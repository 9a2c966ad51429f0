//! Intervention-belief families and the causal relations they induce.
//!
//! Preferences are expected-utility comparisons under a single strictly
//! increasing utility, and every table has full support. Under those two
//! conditions a statement "f is preferred to g under policy p iff under
//! policy q", quantified over all acts on some variables, holds exactly when
//! the two policies induce the same (conditional) distribution of those
//! variables. The act-quantified definitions below are therefore evaluated
//! as equalities of conditional belief tables, cell by cell within `tol`.

use std::fmt;
use std::sync::Arc;

use crate::dist::{JointTable, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::graph::{shortest_cycle, Dag};
use crate::par;
use crate::space::{Act, Assignment, Policy, Var, VarSet, VariableSpace};

/// Gap below which two expected utilities count as equal.
pub const INDIFFERENCE_TOL: f64 = 1e-12;

/// One belief table per policy, indexed by [`VariableSpace::policy_index`].
#[derive(Debug, Clone)]
pub struct BeliefFamily {
    space: VariableSpace,
    tables: Vec<JointTable>,
    tol: f64,
}

impl BeliefFamily {
    /// `tables[k]` is the belief under `space.policy_at(k)`; its domain must be
    /// exactly the unintervened variables of that policy.
    pub fn new(space: VariableSpace, tables: Vec<JointTable>) -> Result<Self> {
        if tables.len() != space.policy_count() {
            return Err(Error::MissingPolicy(format!(
                "expected {} tables, got {}",
                space.policy_count(),
                tables.len()
            )));
        }
        for (k, t) in tables.iter().enumerate() {
            let p = space.policy_at(k);
            if t.domain() != p.unintervened(&space) {
                return Err(Error::Precondition(format!(
                    "belief under do{} must range over exactly the unintervened variables",
                    space.display(p.values())
                )));
            }
        }
        Ok(BeliefFamily { space, tables, tol: DEFAULT_TOL })
    }

    /// Builds the family by evaluating `f` on every policy, in parallel.
    pub fn from_fn<F>(space: VariableSpace, f: F) -> Result<Self>
    where
        F: Fn(&Policy) -> Result<JointTable> + Sync + Send,
    {
        let tables: Result<Vec<JointTable>> =
            par::map_range(space.policy_count(), |k| f(&space.policy_at(k))).into_iter().collect();
        Self::new(space, tables?)
    }

    /// The family of causally isolated variables with the given marginals:
    /// every policy yields the product of the unintervened marginals.
    pub fn product(space: VariableSpace, marginals: &[Vec<f64>]) -> Result<Self> {
        if marginals.len() != space.len() {
            return Err(Error::Precondition("one marginal per variable is required".into()));
        }
        for (v, m) in space.vars().zip(marginals) {
            if m.len() != space.card(v) {
                return Err(Error::Precondition(format!("marginal of `{}` has wrong length", space.name(v))));
            }
        }
        let sp = space.clone();
        Self::from_fn(space, move |p| {
            let grid = sp.grid(p.unintervened(&sp));
            let mut mass = vec![0.0; grid.len()];
            grid.for_each(|idx, d| {
                mass[idx] = grid.vars().iter().zip(d).map(|(v, x)| marginals[v.0][*x]).product();
            });
            JointTable::new(grid, mass)
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn tables(&self) -> &[JointTable] {
        &self.tables
    }

    pub fn table(&self, p: &Policy) -> &JointTable {
        &self.tables[self.space.policy_index(p)]
    }

    /// Replaces the table of one policy.
    pub fn with_table(mut self, p: &Policy, t: JointTable) -> Result<Self> {
        if t.domain() != p.unintervened(&self.space) {
            return Err(Error::Precondition("replacement table has the wrong domain".into()));
        }
        let k = self.space.policy_index(p);
        self.tables[k] = t;
        Ok(self)
    }

    /// The belief with no intervention.
    pub fn observational(&self) -> &JointTable {
        &self.tables[0]
    }

    /// Largest cell difference between two families on the same space.
    pub fn max_abs_diff(&self, other: &BeliefFamily) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Precondition("families live on different spaces".into()));
        }
        let diffs = par::map_range(self.tables.len(), |k| self.tables[k].max_abs_diff(&other.tables[k]));
        diffs.into_iter().try_fold(0.0, |acc, d| Ok(f64::max(acc, d?)))
    }

    /// Policies whose table has a zero cell, with the first zero cell.
    pub fn zero_cells(&self) -> Vec<(Policy, Assignment)> {
        self.tables
            .iter()
            .enumerate()
            .filter_map(|(k, t)| t.first_zero().map(|c| (self.space.policy_at(k), t.grid().decode(c))))
            .collect()
    }

    pub fn expected_utility(&self, p: &Policy, f: &Act, u: &Utility) -> Result<f64> {
        let t = self.table(p);
        if !f.domain().is_subset(t.domain()) {
            return Err(Error::Precondition(format!(
                "act ranges over intervened variable(s) {:?}",
                self.space.names_of(f.domain().difference(t.domain()))
            )));
        }
        u.check_monotone(f.payoffs())?;
        let grid = t.grid();
        let proj = grid.projection(&self.space.grid(f.domain()));
        let mut total = 0.0;
        grid.for_each(|idx, d| {
            let cell: usize = d.iter().zip(&proj).map(|(x, s)| x * s).sum();
            total += u.eval(f.payoffs()[cell]) * t.mass()[idx];
        });
        Ok(total)
    }

    pub fn prefers(&self, p: &Policy, f: &Act, g: &Act, u: &Utility) -> Result<Preference> {
        u.check_monotone(&[f.payoffs(), g.payoffs()].concat())?;
        let ef = self.expected_utility(p, f, u)?;
        let eg = self.expected_utility(p, g, u)?;
        Ok(if (ef - eg).abs() <= INDIFFERENCE_TOL {
            Preference::Indifferent
        } else if ef > eg {
            Preference::First
        } else {
            Preference::Second
        })
    }

    /// Distribution of `i` under the policy `p` (which must leave `i` free).
    pub fn marginal_of(&self, p: &Policy, i: Var) -> JointTable {
        self.table(p).marginal(VarSet::singleton(i)).expect("variable is unintervened")
    }

    /// Largest change in the distribution of `i` caused by additionally
    /// intervening on `j`, over all values of `j` and of the background
    /// intervention on `k`.
    pub fn k_dependence(&self, i: Var, j: Var, k: VarSet) -> Result<f64> {
        if i == j {
            return Err(Error::Precondition("a variable cannot be compared with itself".into()));
        }
        if k.contains(i) || k.contains(j) {
            return Err(Error::Overlap("the background set must exclude both variables".into()));
        }
        for v in [i, j] {
            if v.0 >= self.space.len() {
                return Err(Error::UnknownVariable(format!("#{}", v.0)));
            }
        }
        let xs = self.space.outcomes(k);
        let worst = par::max_range(xs.len(), |n| {
            let base = Policy(xs[n].clone());
            let reference = self.marginal_of(&base, i);
            (0..self.space.card(j))
                .map(|xj| {
                    let shifted = Policy(xs[n].clone().with(j, xj));
                    self.marginal_of(&shifted, i).max_abs_diff(&reference).unwrap()
                })
                .fold(0.0, f64::max)
        });
        Ok(worst)
    }

    /// Variable `i` is `k`-independent of `j`: with `k` held fixed,
    /// intervening on `j` never moves the distribution of `i`.
    pub fn k_independent(&self, i: Var, j: Var, k: VarSet) -> Result<bool> {
        Ok(self.k_dependence(i, j, k)? <= self.tol)
    }

    /// `j` causes `i`: with everything else held fixed, intervening on `j`
    /// moves the distribution of `i`.
    pub fn causes(&self, j: Var, i: Var) -> Result<bool> {
        let rest = self.space.all().without(i).without(j);
        Ok(!self.k_independent(i, j, rest)?)
    }

    /// `Ca(i)` for every variable.
    pub fn causal_sets(&self) -> Vec<VarSet> {
        let n = self.space.len();
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).collect();
        let hits = par::map_collect(&pairs, |&(i, j)| self.causes(Var(j), Var(i)).unwrap());
        let mut sets = vec![VarSet::empty(); n];
        for (&(i, j), hit) in pairs.iter().zip(hits) {
            if hit {
                sets[i] = sets[i].with(Var(j));
            }
        }
        sets
    }

    /// The graph with an edge `j -> i` for every `j` in `Ca(i)`.
    pub fn causal_graph(&self) -> Result<Dag> {
        Dag::from_parents(self.space.names().to_vec(), self.space.all(), self.causal_sets())
    }

    /// A shortest cycle of the causes relation, if it has one.
    pub fn causal_cycle(&self) -> Option<Vec<Var>> {
        shortest_cycle(self.space.all(), &self.causal_sets())
    }

    /// Indirect causes of `i`: its ancestors in the causal graph.
    pub fn indirect_causes(&self, i: Var) -> Result<VarSet> {
        Ok(self.causal_graph()?.ancestors(i))
    }

    /// Checks `μ_{x_{-{i,j}}}(x_i | x_j) = μ_{x_{-i}}(x_i)` for every `j` in
    /// `Ca(i)` and every full outcome `x`.
    pub fn complete_state_space_check(&self) -> Vec<CompleteSpaceViolation> {
        let ca = self.causal_sets();
        let mut tasks = Vec::new();
        for i in self.space.vars() {
            for j in ca[i.0].iter() {
                tasks.push((i, j));
            }
        }
        let found = par::map_collect(&tasks, |&(i, j)| {
            let mut out = Vec::new();
            for x in self.space.outcomes(self.space.all()) {
                let pair = Policy(x.restrict(self.space.all().without(i).without(j)));
                let single = Policy(x.restrict(self.space.all().without(i)));
                let given = Assignment::new().with(j, x.get(j).unwrap());
                let target = Assignment::new().with(i, x.get(i).unwrap());
                let lhs = match self.table(&pair).conditional(VarSet::singleton(i), &given) {
                    Ok(t) => t.at(&target),
                    Err(_) => f64::NAN,
                };
                let rhs = self.table(&single).at(&target);
                if !((lhs - rhs).abs() <= self.tol) {
                    out.push(CompleteSpaceViolation { i, j, x, lhs, rhs });
                }
            }
            out
        });
        found.into_iter().flatten().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteSpaceViolation {
    pub i: Var,
    pub j: Var,
    pub x: Assignment,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preference {
    First,
    Second,
    Indifferent,
}

/// A strictly increasing utility over money.
#[derive(Clone)]
pub struct Utility(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Utility {
    pub fn identity() -> Self {
        Utility(Arc::new(|x| x))
    }

    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Utility(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    /// Strict monotonicity on the given payoffs, checked on sorted neighbours.
    pub fn check_monotone(&self, payoffs: &[f64]) -> Result<()> {
        let mut xs = payoffs.to_vec();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        for w in xs.windows(2) {
            if !(self.eval(w[0]) < self.eval(w[1])) {
                return Err(Error::NonMonotoneUtility(w[0], w[1]));
            }
        }
        Ok(())
    }
}

impl Default for Utility {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Debug for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Utility(..)")
    }
}
