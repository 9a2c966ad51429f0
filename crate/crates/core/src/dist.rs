//! Exact finite probability tables.

use crate::error::{Error, Result};
use crate::space::{Assignment, Grid, Var, VarSet, VariableSpace};

/// Default tolerance for independence and equality tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Normalization slack accepted at construction.
const NORM_TOL: f64 = 1e-9;

/// A probability table over the full outcomes of `domain`, stored in
/// canonical mixed-radix order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    grid: Grid,
    mass: Vec<f64>,
}

impl JointTable {
    pub fn new(grid: Grid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.len() {
            return Err(Error::NotNormalized(format!(
                "expected {} cells, got {}",
                grid.len(),
                mass.len()
            )));
        }
        if let Some(bad) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::NotNormalized(format!("negative or non-finite mass {bad}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(format!("mass sums to {total}")));
        }
        Ok(JointTable { grid, mass })
    }

    /// Builds a table from unnormalized non-negative weights.
    pub fn from_weights(grid: Grid, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NotNormalized("weights sum to zero".into()));
        }
        Self::new(grid, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(grid: Grid) -> Self {
        let n = grid.len();
        JointTable { grid, mass: vec![1.0 / n as f64; n] }
    }

    /// The table over the empty domain (a single cell of mass 1).
    pub fn unit() -> Self {
        JointTable { grid: Grid::new(Vec::new()), mass: vec![1.0] }
    }

    pub fn over(space: &VariableSpace, domain: VarSet, mass: Vec<f64>) -> Result<Self> {
        Self::new(space.grid(domain), mass)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn domain(&self) -> VarSet {
        self.grid.set()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Mass of the full outcome selected by `a` (which binds the domain).
    pub fn at(&self, a: &Assignment) -> f64 {
        self.mass[self.grid.index(a)]
    }

    pub fn full_support(&self) -> bool {
        self.mass.iter().all(|m| *m > 0.0)
    }

    /// Index of the first zero cell, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.mass.iter().position(|m| *m <= 0.0)
    }

    fn require_subset(&self, set: VarSet) -> Result<()> {
        match set.difference(self.domain()).first() {
            Some(v) => Err(Error::UnknownVariable(format!("#{} (not in table domain)", v.0))),
            None => Ok(()),
        }
    }

    /// Sums out every variable outside `subset`.
    pub fn marginal(&self, subset: VarSet) -> Result<JointTable> {
        self.require_subset(subset)?;
        Ok(self.marginal_unchecked(subset))
    }

    fn marginal_unchecked(&self, subset: VarSet) -> JointTable {
        if subset == self.domain() {
            return self.clone();
        }
        let sub = sub_grid(&self.grid, subset);
        let proj = self.grid.projection(&sub);
        let mut mass = vec![0.0; sub.len()];
        self.grid.for_each(|idx, digits| {
            let j: usize = digits.iter().zip(&proj).map(|(d, s)| d * s).sum();
            mass[j] += self.mass[idx];
        });
        JointTable { grid: sub, mass }
    }

    /// Probability that the partial assignment `event` holds.
    pub fn prob(&self, event: &Assignment) -> Result<f64> {
        self.require_subset(event.domain())?;
        let mut total = 0.0;
        self.grid.for_each(|idx, digits| {
            let hit = self
                .grid
                .vars()
                .iter()
                .zip(digits)
                .all(|(v, d)| event.get(*v).is_none_or(|x| x == *d));
            if hit {
                total += self.mass[idx];
            }
        });
        Ok(total)
    }

    /// The distribution of `target` given the event `given`.
    pub fn conditional(&self, target: VarSet, given: &Assignment) -> Result<JointTable> {
        let gdom = given.domain();
        self.require_subset(target.union(gdom))?;
        if !target.is_disjoint(gdom) {
            return Err(Error::Overlap("target and conditioning variables".into()));
        }
        let sub = sub_grid(&self.grid, target);
        let proj = self.grid.projection(&sub);
        let mut mass = vec![0.0; sub.len()];
        let vars = self.grid.vars().to_vec();
        self.grid.for_each(|idx, digits| {
            if vars.iter().zip(digits).all(|(v, d)| given.get(*v).is_none_or(|x| x == *d)) {
                let j: usize = digits.iter().zip(&proj).map(|(d, s)| d * s).sum();
                mass[j] += self.mass[idx];
            }
        });
        let z: f64 = mass.iter().sum();
        if z <= 0.0 {
            return Err(Error::ZeroProbability(format!("{given:?}")));
        }
        mass.iter_mut().for_each(|m| *m /= z);
        Ok(JointTable { grid: sub, mass })
    }

    /// Largest violation of `I ⊥ J | K`:
    /// `max |P(x_I | x_J, x_K) - P(x_I | x_K)|` over cells where
    /// `P(x_J, x_K) > 0`.
    pub fn ci_deviation(&self, i: VarSet, j: VarSet, k: VarSet) -> Result<f64> {
        if !i.is_disjoint(j) || !i.is_disjoint(k) || !j.is_disjoint(k) {
            return Err(Error::Overlap("independence sets".into()));
        }
        self.require_subset(i.union(j).union(k))?;
        if i.is_empty() || j.is_empty() {
            return Ok(0.0);
        }
        let ijk = self.marginal_unchecked(i.union(j).union(k));
        let ik = ijk.marginal_unchecked(i.union(k));
        let jk = ijk.marginal_unchecked(j.union(k));
        let kk = ijk.marginal_unchecked(k);
        let p_ik = ijk.grid.projection(&ik.grid);
        let p_jk = ijk.grid.projection(&jk.grid);
        let p_k = ijk.grid.projection(&kk.grid);
        let mut worst: f64 = 0.0;
        ijk.grid.for_each(|idx, digits| {
            let at = |p: &[usize]| -> usize { digits.iter().zip(p).map(|(d, s)| d * s).sum() };
            let m_jk = jk.mass[at(&p_jk)];
            if m_jk <= 0.0 {
                return;
            }
            let m_k = kk.mass[at(&p_k)];
            let lhs = ijk.mass[idx] / m_jk;
            let rhs = ik.mass[at(&p_ik)] / m_k;
            worst = worst.max((lhs - rhs).abs());
        });
        Ok(worst)
    }

    pub fn cond_independent(&self, i: VarSet, j: VarSet, k: VarSet, tol: f64) -> Result<bool> {
        Ok(self.ci_deviation(i, j, k)? <= tol)
    }

    /// `μ(x_i | x_parents)` for every cell of `{i} ∪ parents`, in the grid
    /// order of that set. Rows whose parent event has zero mass are all 0.
    pub fn family_conditional(&self, i: Var, parents: VarSet) -> Result<JointTable> {
        let fam = parents.with(i);
        self.require_subset(fam)?;
        let joint = self.marginal_unchecked(fam);
        let pa = joint.marginal_unchecked(parents);
        let proj = joint.grid.projection(&pa.grid);
        let mut mass = joint.mass.clone();
        joint.grid.for_each(|idx, digits| {
            let m = pa.mass[digits.iter().zip(&proj).map(|(d, s)| d * s).sum::<usize>()];
            mass[idx] = if m > 0.0 { joint.mass[idx] / m } else { 0.0 };
        });
        Ok(JointTable { grid: joint.grid, mass })
    }

    /// `max_x |μ(x) - Π_i μ(x_i | x_{parents[i]})|` over the table's domain.
    /// `parents` is indexed by variable index; entries for variables outside
    /// the domain are ignored.
    pub fn chain_factorization_residual(&self, parents: &[VarSet]) -> Result<f64> {
        let dom = self.domain();
        let mut factors = Vec::new();
        for v in dom.iter() {
            let pa = parents.get(v.0).copied().unwrap_or_default();
            if pa.contains(v) || !pa.is_subset(dom) {
                return Err(Error::Precondition(format!(
                    "parent set of #{} must be a subset of the domain without it",
                    v.0
                )));
            }
            let cond = self.family_conditional(v, pa)?;
            let proj = self.grid.projection(cond.grid());
            factors.push((cond, proj));
        }
        let mut worst: f64 = 0.0;
        self.grid.for_each(|idx, digits| {
            let mut prod = 1.0;
            for (cond, proj) in &factors {
                prod *= cond.mass[digits.iter().zip(proj).map(|(d, s)| d * s).sum::<usize>()];
            }
            worst = worst.max((self.mass[idx] - prod).abs());
        });
        Ok(worst)
    }

    /// Largest cell-wise difference to another table over the same domain.
    pub fn max_abs_diff(&self, other: &JointTable) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Precondition("tables have different domains".into()));
        }
        Ok(self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

fn sub_grid(grid: &Grid, subset: VarSet) -> Grid {
    Grid::new(
        grid.vars()
            .iter()
            .zip(grid.cards())
            .filter(|(v, _)| subset.contains(**v))
            .map(|(v, c)| (*v, *c))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space3() -> VariableSpace {
        VariableSpace::binary(&["A", "E", "L"]).unwrap()
    }

    fn ae_table() -> (VariableSpace, JointTable) {
        let s = VariableSpace::binary(&["A", "E"]).unwrap();
        let t = JointTable::over(&s, s.all(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        (s, t)
    }

    /// Chain A -> E -> L built by explicit products.
    fn chain_oracle() -> (VariableSpace, JointTable) {
        let s = space3();
        let pa = [0.35, 0.65];
        let pe_a = [[0.8, 0.2], [0.25, 0.75]];
        let pl_e = [[0.6, 0.4], [0.1, 0.9]];
        let mut mass = Vec::new();
        for a in 0..2 {
            for e in 0..2 {
                for l in 0..2 {
                    mass.push(pa[a] * pe_a[a][e] * pl_e[e][l]);
                }
            }
        }
        let t = JointTable::over(&s, s.all(), mass).unwrap();
        (s, t)
    }

    #[test]
    fn marginal_examples() {
        let (s, t) = ae_table();
        assert_eq!(t.marginal(s.all()).unwrap(), t);
        let a = t.marginal(s.set(&["A"]).unwrap()).unwrap();
        assert!((a.mass()[0] - 0.3).abs() < 1e-12 && (a.mass()[1] - 0.7).abs() < 1e-12);
        let u = JointTable::uniform(s.grid(s.all()));
        assert_eq!(u.marginal(s.set(&["E"]).unwrap()).unwrap().mass(), &[0.5, 0.5]);
    }

    #[test]
    fn marginal_rejects_foreign_variable() {
        let (s, t) = ae_table();
        let other = VarSet::singleton(Var(2));
        assert!(matches!(t.marginal(other), Err(Error::UnknownVariable(_))));
        assert!(t.marginal(s.all()).is_ok());
    }

    #[test]
    fn conditional_examples() {
        let (s, t) = ae_table();
        let e = s.set(&["E"]).unwrap();
        let c = t.conditional(e, &s.assign(&[("A", 1)]).unwrap()).unwrap();
        assert!((c.mass()[1] - 0.4 / 0.7).abs() < 1e-12);
        assert_eq!(t.conditional(e, &Assignment::new()).unwrap(), t.marginal(e).unwrap());
    }

    #[test]
    fn conditional_on_zero_event_is_an_error() {
        let s = VariableSpace::binary(&["A", "E"]).unwrap();
        let t = JointTable::over(&s, s.all(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let r = t.conditional(s.set(&["E"]).unwrap(), &s.assign(&[("A", 1)]).unwrap());
        assert!(matches!(r, Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn product_table_is_independent() {
        let s = VariableSpace::binary(&["A", "B"]).unwrap();
        let t = JointTable::over(&s, s.all(), vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        let (a, b) = (s.set(&["A"]).unwrap(), s.set(&["B"]).unwrap());
        for x in 0..2 {
            let c = t.conditional(b, &s.assign(&[("A", x)]).unwrap()).unwrap();
            assert!(c.max_abs_diff(&t.marginal(b).unwrap()).unwrap() < 1e-12);
        }
        assert!(t.cond_independent(a, b, VarSet::empty(), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn chain_independence() {
        let (s, t) = chain_oracle();
        let (a, e, l) = (s.set(&["A"]).unwrap(), s.set(&["E"]).unwrap(), s.set(&["L"]).unwrap());
        assert!(t.cond_independent(l, a, e, DEFAULT_TOL).unwrap());
        assert!(!t.cond_independent(l, a, VarSet::empty(), DEFAULT_TOL).unwrap());
        assert!(t.cond_independent(l, a, a, 0.0).is_err());
    }

    #[test]
    fn chain_residuals() {
        let (s, t) = chain_oracle();
        let (a, e) = (s.var("A").unwrap(), s.var("E").unwrap());
        let preds = [VarSet::empty(), VarSet::singleton(a), VarSet::singleton(a).with(e)];
        assert!(t.chain_factorization_residual(&preds).unwrap() < 1e-15);
        let true_pa = [VarSet::empty(), VarSet::singleton(a), VarSet::singleton(e)];
        assert!(t.chain_factorization_residual(&true_pa).unwrap() < 1e-15);
        let wrong = [VarSet::empty(), VarSet::singleton(a), VarSet::singleton(a)];
        assert!(t.chain_factorization_residual(&wrong).unwrap() > 1e-3);
    }

    #[test]
    fn product_residual_with_empty_parents() {
        let s = VariableSpace::binary(&["A", "B"]).unwrap();
        let t = JointTable::over(&s, s.all(), vec![0.12, 0.28, 0.18, 0.42]).unwrap();
        assert!(t.chain_factorization_residual(&[VarSet::empty(); 2]).unwrap() < 1e-15);
    }

    #[test]
    fn zero_mass_parent_event_contributes_zero() {
        let s = VariableSpace::binary(&["A", "B"]).unwrap();
        let t = JointTable::over(&s, s.all(), vec![0.3, 0.7, 0.0, 0.0]).unwrap();
        let pa = [VarSet::empty(), VarSet::singleton(Var(0))];
        assert!(t.chain_factorization_residual(&pa).unwrap() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_tables() {
        let s = VariableSpace::binary(&["A"]).unwrap();
        assert!(JointTable::over(&s, s.all(), vec![0.5, 0.4]).is_err());
        assert!(JointTable::over(&s, s.all(), vec![1.5, -0.5]).is_err());
        assert!(JointTable::over(&s, s.all(), vec![1.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn table() -> impl Strategy<Value = (VariableSpace, JointTable)> {
            proptest::collection::vec(2usize..4, 2..5).prop_flat_map(|cards| {
                let n: usize = cards.iter().product();
                (Just(cards), proptest::collection::vec(0.01f64..1.0, n))
            })
            .prop_map(|(cards, w)| {
                let s = VariableSpace::new(cards.into_iter().enumerate().map(|(i, c)| (format!("v{i}"), c)))
                    .unwrap();
                let t = JointTable::from_weights(s.grid(s.all()), w).unwrap();
                (s, t)
            })
        }

        fn product_table() -> impl Strategy<Value = (VariableSpace, JointTable)> {
            proptest::collection::vec(proptest::collection::vec(0.05f64..1.0, 2..4), 2..5).prop_map(|ws| {
                let s = VariableSpace::new(ws.iter().enumerate().map(|(i, w)| (format!("v{i}"), w.len())))
                    .unwrap();
                let grid = s.grid(s.all());
                let mut mass = vec![0.0; grid.len()];
                let norm: Vec<f64> = ws.iter().map(|w| w.iter().sum()).collect();
                grid.for_each(|idx, d| {
                    mass[idx] = d.iter().enumerate().map(|(k, x)| ws[k][*x] / norm[k]).product();
                });
                (s.clone(), JointTable::from_weights(grid, mass).unwrap())
            })
        }

        proptest! {
            #[test]
            fn tower_property((s, t) in table(), a in any::<u64>(), b in any::<u64>()) {
                let big = VarSet::from_bits(a).intersection(s.all());
                let small = VarSet::from_bits(b).intersection(big);
                let two = t.marginal(big).unwrap().marginal(small).unwrap();
                let one = t.marginal(small).unwrap();
                prop_assert!(two.max_abs_diff(&one).unwrap() <= 1e-12);
            }

            #[test]
            fn ci_symmetric((s, t) in table(), assign in proptest::collection::vec(0u8..4, 4)) {
                let mut sets = [VarSet::empty(); 4];
                for (k, v) in s.vars().enumerate() {
                    sets[assign[k] as usize] = sets[assign[k] as usize].with(v);
                }
                let (i, j, k) = (sets[0], sets[1], sets[2]);
                prop_assert_eq!(
                    t.cond_independent(i, j, k, DEFAULT_TOL).unwrap(),
                    t.cond_independent(j, i, k, DEFAULT_TOL).unwrap()
                );
            }

            #[test]
            fn product_tables_are_fully_independent((s, t) in product_table(), assign in proptest::collection::vec(0u8..4, 4)) {
                let mut sets = [VarSet::empty(); 4];
                for (k, v) in s.vars().enumerate() {
                    sets[assign[k] as usize] = sets[assign[k] as usize].with(v);
                }
                prop_assert!(t.cond_independent(sets[0], sets[1], sets[2], DEFAULT_TOL).unwrap());
                prop_assert!(t.chain_factorization_residual(&[VarSet::empty(); 4]).unwrap() <= 1e-12);
            }

            #[test]
            fn ci_matches_factorization_residual((s, t) in table()) {
                // Two-block factorization: μ(x) = μ(x_0) Π_{v>0} μ(x_v | x_1..x_{v-1}) with
                // variable 0 dropped from every parent set ⇔ v0 ⊥ rest.
                let v0 = Var(0);
                let rest = s.all().without(v0);
                let mut parents = vec![VarSet::empty(); s.len()];
                for v in rest.iter() {
                    parents[v.0] = VarSet::from_bits((1u64 << v.0) - 1).without(v0);
                }
                let ind = t.cond_independent(VarSet::singleton(v0), rest, VarSet::empty(), 1e-9).unwrap();
                let fac = t.chain_factorization_residual(&parents).unwrap() <= 1e-9;
                prop_assert_eq!(ind, fac);
            }
        }
    }
}
