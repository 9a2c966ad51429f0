//! Markov models: per-variable conditional tables with interval-coded noise.
//!
//! Each variable `i` is a deterministic function `h_i(x_parents, eps)` of its
//! parents and an independent uniform noise `eps` in `[0, 1)`. The row of the
//! table for a parent assignment partitions `[0, 1)` into half-open intervals
//! whose lengths are the row's probabilities; `h_i` returns the value whose
//! interval contains `eps`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::QueryExpr;
use crate::axioms::{check_all, SweepLimits};
use crate::beliefs::BeliefFamily;
use crate::dist::JointTable;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::par;
use crate::space::{Assignment, Grid, Policy, Var, VarSet, VariableSpace};

const ROW_TOL: f64 = 1e-9;

/// Minimum total-variation effect each parent must have on its child in
/// randomly drawn models.
pub const MIN_PARENT_INFLUENCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    var: Var,
    parents: VarSet,
    parent_grid: Grid,
    rows: Vec<Vec<f64>>,
    bounds: Vec<Vec<f64>>,
}

impl Cpt {
    fn new(space: &VariableSpace, var: Var, parents: VarSet, rows: Vec<Vec<f64>>) -> Result<Self> {
        let parent_grid = space.grid(parents);
        let name = space.name(var);
        if rows.len() != parent_grid.len() {
            return Err(Error::Precondition(format!(
                "table of `{name}` needs {} rows, got {}",
                parent_grid.len(),
                rows.len()
            )));
        }
        let mut clean = Vec::with_capacity(rows.len());
        let mut bounds = Vec::with_capacity(rows.len());
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != space.card(var) {
                return Err(Error::Precondition(format!(
                    "row {r} of `{name}` has {} entries, expected {}",
                    row.len(),
                    space.card(var)
                )));
            }
            if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::NotNormalized(format!("row {r} of `{name}` has a negative entry")));
            }
            let z: f64 = row.iter().sum();
            if (z - 1.0).abs() > ROW_TOL {
                return Err(Error::NotNormalized(format!("row {r} of `{name}` sums to {z}")));
            }
            let row: Vec<f64> = row.iter().map(|p| p / z).collect();
            let mut acc = 0.0;
            let mut b: Vec<f64> = row
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            *b.last_mut().unwrap() = 1.0;
            clean.push(row);
            bounds.push(b);
        }
        Ok(Cpt { var, parents, parent_grid, rows: clean, bounds })
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn parents(&self) -> VarSet {
        self.parents
    }

    pub fn parent_grid(&self) -> &Grid {
        &self.parent_grid
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// The row for the parent values found in `a` (which must bind them).
    pub fn row(&self, a: &Assignment) -> &[f64] {
        &self.rows[self.parent_grid.index(a)]
    }

    /// Upper ends of the noise intervals of row `r`.
    pub fn bounds(&self, r: usize) -> &[f64] {
        &self.bounds[r]
    }

    /// Largest total-variation shift of the row caused by changing one
    /// parent while holding the others fixed.
    pub fn influence(&self, parent: Var) -> f64 {
        let Some(k) = self.parent_grid.vars().iter().position(|v| *v == parent) else {
            return 0.0;
        };
        let stride: usize = self.parent_grid.cards()[k + 1..].iter().product();
        let card = self.parent_grid.cards()[k];
        let mut worst: f64 = 0.0;
        for r in 0..self.rows.len() {
            let digit = (r / stride) % card;
            for other in digit + 1..card {
                let s = r + (other - digit) * stride;
                let tv: f64 = self.rows[r].iter().zip(&self.rows[s]).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
                worst = worst.max(tv);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    space: VariableSpace,
    graph: Dag,
    cpts: Vec<Cpt>,
}

impl MarkovModel {
    /// `rows[i][r]` is the distribution of variable `i` given the `r`-th
    /// assignment of its parents (canonical order over the parent set).
    pub fn new(space: VariableSpace, graph: Dag, rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if graph.names() != space.names() || graph.nodes() != space.all() {
            return Err(Error::Precondition("graph nodes must be the space's variables".into()));
        }
        if rows.len() != space.len() {
            return Err(Error::Precondition(format!("expected {} tables, got {}", space.len(), rows.len())));
        }
        let cpts = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| Cpt::new(&space, Var(i), graph.parents(Var(i)), r))
            .collect::<Result<_>>()?;
        Ok(MarkovModel { space, graph, cpts })
    }

    /// Strictly positive random tables. Each row is drawn from normalized
    /// `U(0.05, 1)` weights; a variable's table is redrawn until every parent
    /// shifts some row by at least [`MIN_PARENT_INFLUENCE`] in total variation.
    pub fn random(space: VariableSpace, graph: Dag, rng: &mut impl Rng) -> Result<Self> {
        let mut rows = Vec::with_capacity(space.len());
        for v in space.vars() {
            let parents = graph.parents(v);
            let n_rows = space.grid(parents).len();
            let mut attempt = 0;
            loop {
                let draw: Vec<Vec<f64>> = (0..n_rows)
                    .map(|_| {
                        let w: Vec<f64> = (0..space.card(v)).map(|_| rng.gen_range(0.05..1.0)).collect();
                        let z: f64 = w.iter().sum();
                        w.into_iter().map(|x| x / z).collect()
                    })
                    .collect();
                let cpt = Cpt::new(&space, v, parents, draw.clone())?;
                attempt += 1;
                if parents.iter().all(|p| cpt.influence(p) >= MIN_PARENT_INFLUENCE) || attempt > 10_000 {
                    rows.push(draw);
                    break;
                }
            }
        }
        Self::new(space, graph, rows)
    }

    pub fn random_seeded(space: VariableSpace, graph: Dag, seed: u64) -> Result<Self> {
        Self::random(space, graph, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Builds the model whose tables are the conditionals `μ(x_i | x_Pa(i))`
    /// of `table` along `graph`. Parent rows of zero mass become uniform.
    pub fn from_joint(space: VariableSpace, graph: Dag, table: &JointTable) -> Result<Self> {
        let mut rows = Vec::with_capacity(space.len());
        for v in space.vars() {
            let pa = graph.parents(v);
            let cond = table.family_conditional(v, pa)?;
            let card = space.card(v);
            // The family grid is over pa ∪ {v} in index order; regroup by parent row.
            let fam_grid = cond.grid();
            let pa_grid = space.grid(pa);
            let mut r = vec![vec![0.0; card]; pa_grid.len()];
            fam_grid.for_each(|idx, _| {
                let a = fam_grid.decode(idx);
                r[pa_grid.index(&a)][a.get(v).unwrap()] = cond.mass()[idx];
            });
            for row in r.iter_mut() {
                let z: f64 = row.iter().sum();
                if z <= 0.0 {
                    row.iter_mut().for_each(|p| *p = 1.0 / card as f64);
                } else {
                    row.iter_mut().for_each(|p| *p /= z);
                }
            }
            rows.push(r);
        }
        Self::new(space, graph, rows)
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn graph(&self) -> &Dag {
        &self.graph
    }

    pub fn cpt(&self, v: Var) -> &Cpt {
        &self.cpts[v.0]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn strictly_positive(&self) -> bool {
        self.cpts.iter().all(|c| c.rows.iter().flatten().all(|p| *p > 0.0))
    }

    /// The structural function of variable `i`.
    pub fn h_eval(&self, i: Var, x_parents: &Assignment, eps: f64) -> Result<usize> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::NoiseOutOfRange(eps));
        }
        let cpt = &self.cpts[i.0];
        if x_parents.domain() != cpt.parents {
            return Err(Error::Precondition(format!(
                "`{}` needs values for exactly its parents {:?}",
                self.space.name(i),
                self.space.names_of(cpt.parents)
            )));
        }
        self.space.check(x_parents)?;
        let b = &cpt.bounds[cpt.parent_grid.index(x_parents)];
        Ok(b.iter().position(|u| eps < *u).unwrap_or(b.len() - 1))
    }

    /// The joint `Π_i μ(x_i | x_Pa(i))`.
    pub fn joint(&self) -> JointTable {
        self.truncated_product(&Assignment::new())
    }

    /// `Π_{i not in do} μ(x_i | x_Pa(i))` over the unintervened variables, with
    /// intervened parents read from `fixed`.
    pub fn truncated_product(&self, fixed: &Assignment) -> JointTable {
        let free = self.space.all().difference(fixed.domain());
        let grid = self.space.grid(free);
        let mut mass = vec![0.0; grid.len()];
        grid.for_each(|idx, d| {
            let x: Assignment = grid.vars().iter().copied().zip(d.iter().copied()).collect::<Assignment>().merged(fixed);
            mass[idx] = free.iter().map(|v| self.cpts[v.0].row(&x)[x.get(v).unwrap()]).product();
        });
        JointTable::new(grid, mass).expect("product of normalized rows is normalized")
    }

    /// The post-intervention system: the intervened equations are deleted and
    /// their values substituted into the tables of the remaining variables,
    /// which then depend only on unintervened parents. Returns the reduced
    /// tables as `(variable, remaining parents, rows)`.
    pub fn intervened_system(&self, fixed: &Assignment) -> Vec<(Var, VarSet, Grid, Vec<Vec<f64>>)> {
        let free = self.space.all().difference(fixed.domain());
        free.iter()
            .map(|v| {
                let cpt = &self.cpts[v.0];
                let kept = cpt.parents.intersection(free);
                let kept_grid = self.space.grid(kept);
                let rows = (0..kept_grid.len())
                    .map(|r| cpt.row(&kept_grid.decode(r).merged(fixed)).to_vec())
                    .collect();
                (v, kept, kept_grid, rows)
            })
            .collect()
    }

    /// Distribution of the unintervened variables after `do(fixed)`, solved
    /// from the reduced system in topological order.
    pub fn do_table(&self, fixed: &Assignment) -> Result<JointTable> {
        self.space.check(fixed)?;
        let system = self.intervened_system(fixed);
        let free = self.space.all().difference(fixed.domain());
        let order: Vec<Var> = self.graph.truncate_remove(fixed.domain()).topological_order();
        let grid = self.space.grid(free);
        let mut mass = vec![0.0; grid.len()];
        grid.for_each(|idx, d| {
            let x: Assignment = grid.vars().iter().copied().zip(d.iter().copied()).collect();
            let mut p = 1.0;
            for v in &order {
                let (_, _, g, rows) = system.iter().find(|(u, ..)| u == v).unwrap();
                p *= rows[g.index(&x)][x.get(*v).unwrap()];
            }
            mass[idx] = p;
        });
        JointTable::new(grid, mass)
    }

    /// `μ(target | observed, do(intervened))`.
    pub fn do_probability(&self, q: &QueryExpr) -> Result<f64> {
        let t = self.do_table(&q.intervened)?;
        let z = t.prob(&q.observed)?;
        if z <= 0.0 {
            return Err(Error::ZeroProbability(format!(
                "{} after intervention",
                self.space.display(&q.observed)
            )));
        }
        Ok(t.prob(&q.observed.merged(&q.target))? / z)
    }

    /// The family of do-distributions, one per policy.
    pub fn family(&self) -> Result<BeliefFamily> {
        if !self.strictly_positive() {
            return Err(Error::Precondition("family generation requires strictly positive tables".into()));
        }
        BeliefFamily::from_fn(self.space.clone(), |p: &Policy| self.do_table(p.values()))
    }

    /// Forward-samples `n` outcomes with independent uniform noises through
    /// the structural functions; returns counts per joint cell.
    pub fn sample_counts(&self, n: usize, seed: u64) -> Vec<u64> {
        const CHUNK: usize = 1 << 14;
        let grid = self.space.grid(self.space.all());
        let order = self.graph.topological_order();
        let chunks = n.div_ceil(CHUNK);
        let partial = par::map_range(chunks, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut counts = vec![0u64; grid.len()];
            let m = CHUNK.min(n - c * CHUNK);
            for _ in 0..m {
                let mut x = Assignment::new();
                for v in &order {
                    let eps: f64 = rng.gen();
                    let pa = x.restrict(self.cpts[v.0].parents);
                    let val = self.h_eval(*v, &pa, eps).expect("noise in range");
                    x.bind(*v, val);
                }
                counts[grid.index(&x)] += 1;
            }
            counts
        });
        partial.into_iter().fold(vec![0; grid.len()], |mut acc, c| {
            acc.iter_mut().zip(c).for_each(|(a, b)| *a += b);
            acc
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Verdict {
    pub axioms_pass: bool,
    pub markov_match: bool,
    pub agree: bool,
}

/// Axioms 2, 3, 4 and 6 against the Markov round trip: the model built from
/// the causal graph and the conditionals of the unintervened belief must
/// reproduce every policy table.
pub fn theorem2_verdict(fam: &BeliefFamily) -> Result<Theorem2Verdict> {
    let reports = check_all(fam, true, SweepLimits::default())?;
    let axioms_pass = reports.len() == 4 && reports.iter().all(|r| r.pass);
    let markov_match = match fam.causal_graph() {
        Ok(g) => {
            let m = MarkovModel::from_joint(fam.space().clone(), g, fam.observational())?;
            m.strictly_positive() && m.family()?.max_abs_diff(fam)? <= fam.tol()
        }
        Err(Error::Cycle(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(Theorem2Verdict { axioms_pass, markov_match, agree: axioms_pass == markov_match })
}
