//! The exchange rule and the deletion rule, as graph criteria and as
//! numeric identities over a belief family.

use crate::beliefs::BeliefFamily;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::space::{Policy, VarSet};

fn check_sets(sets: [VarSet; 4]) -> Result<()> {
    for a in 0..4 {
        for b in a + 1..4 {
            if !sets[a].is_disjoint(sets[b]) {
                return Err(Error::Overlap(format!("rule sets {} and {}", sets[a], sets[b])));
            }
        }
    }
    if sets[0].is_empty() || sets[2].is_empty() {
        return Err(Error::Precondition("the outcome set and the exchanged set must be nonempty".into()));
    }
    Ok(())
}

/// Exchange: `μ_{x1,x2}(x0 | x3) = μ_{x1}(x0 | x2, x3)` is licensed when
/// `I1 ∪ I3` blocks every path from `I0` to `I2` once edges into `I1` and
/// out of `I2` are removed.
pub fn rule1_applies(g: &Dag, i0: VarSet, i1: VarSet, i2: VarSet, i3: VarSet) -> Result<bool> {
    check_sets([i0, i1, i2, i3])?;
    g.truncate_in_out(i1, i2)?.blocks(i0, i2, i1.union(i3))
}

/// Deletion: `μ_{x1,x2}(x0 | x3) = μ_{x1}(x0 | x3)` is licensed when
/// `I1 ∪ I3` blocks every path from `I0` to `I2` once edges into `I1` and
/// into the members of `I2` that are not ancestors of `I3` are removed.
pub fn rule2_applies(g: &Dag, i0: VarSet, i1: VarSet, i2: VarSet, i3: VarSet) -> Result<bool> {
    check_sets([i0, i1, i2, i3])?;
    g.truncate_in_cond(i1, i2, i3)?.blocks(i0, i2, i1.union(i3))
}

/// Largest gap in the exchange identity over all values of the four sets.
pub fn rule1_gap(fam: &BeliefFamily, i0: VarSet, i1: VarSet, i2: VarSet, i3: VarSet) -> Result<f64> {
    rule_gap(fam, [i0, i1, i2, i3], true)
}

/// Largest gap in the deletion identity over all values of the four sets.
pub fn rule2_gap(fam: &BeliefFamily, i0: VarSet, i1: VarSet, i2: VarSet, i3: VarSet) -> Result<f64> {
    rule_gap(fam, [i0, i1, i2, i3], false)
}

fn rule_gap(fam: &BeliefFamily, sets: [VarSet; 4], exchange: bool) -> Result<f64> {
    check_sets(sets)?;
    let [i0, i1, i2, i3] = sets;
    let space = fam.space();
    let mut worst: f64 = 0.0;
    for x1 in space.outcomes(i1) {
        let base = fam.table(&Policy(x1.clone()));
        for x2 in space.outcomes(i2) {
            let both = fam.table(&Policy(x1.merged(&x2)));
            for x3 in space.outcomes(i3) {
                let lhs = both.conditional(i0, &x3)?;
                let given = if exchange { x3.merged(&x2) } else { x3.clone() };
                let rhs = base.conditional(i0, &given)?;
                worst = worst.max(lhs.max_abs_diff(&rhs)?);
            }
        }
    }
    Ok(worst)
}
