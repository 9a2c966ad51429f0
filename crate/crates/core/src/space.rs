//! Finite state spaces: variables, partial assignments, policies and acts.
//!
//! Values are dense 0-based indices. Outcomes of a variable subset are
//! enumerated in mixed-radix order with variables taken in space order and
//! the last variable varying fastest.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a variable in its [`VariableSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub usize);

/// A set of variables stored as a bitmask (at most 64 variables).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VarSet(u64);

impl VarSet {
    pub const fn empty() -> Self {
        VarSet(0)
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= 64, "at most 64 variables are supported");
        if n == 64 {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(v: Var) -> Self {
        VarSet(1u64 << v.0)
    }

    pub fn from_bits(bits: u64) -> Self {
        VarSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, v: Var) -> bool {
        v.0 < 64 && self.0 & (1u64 << v.0) != 0
    }

    pub fn with(self, v: Var) -> Self {
        VarSet(self.0 | (1u64 << v.0))
    }

    pub fn without(self, v: Var) -> Self {
        VarSet(self.0 & !(1u64 << v.0))
    }

    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn intersection(self, other: VarSet) -> Self {
        VarSet(self.0 & other.0)
    }

    pub fn difference(self, other: VarSet) -> Self {
        VarSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = Var> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(Var(i))
            }
        })
    }

    pub fn to_vec(self) -> Vec<Var> {
        self.iter().collect()
    }

    pub fn first(self) -> Option<Var> {
        self.iter().next()
    }

    /// All subsets of `self`, starting with the empty set. The order is the
    /// binary counting order over the members, so it is deterministic.
    pub fn subsets(self) -> impl Iterator<Item = VarSet> {
        let members = self.to_vec();
        let count = 1u64 << members.len();
        (0..count).map(move |mask| {
            let mut s = VarSet::empty();
            for (k, v) in members.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    s = s.with(*v);
                }
            }
            s
        })
    }
}

impl FromIterator<Var> for VarSet {
    fn from_iter<I: IntoIterator<Item = Var>>(iter: I) -> Self {
        iter.into_iter().fold(VarSet::empty(), VarSet::with)
    }
}

/// The ordered list of variables and their (finite) cardinalities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpace {
    names: Vec<String>,
    cards: Vec<usize>,
}

impl VariableSpace {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut names = Vec::new();
        let mut cards = Vec::new();
        for (name, card) in vars {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::InvalidSpace("variable names must be non-empty".into()));
            }
            if names.contains(&name) {
                return Err(Error::InvalidSpace(format!("duplicate variable `{name}`")));
            }
            if card < 2 {
                return Err(Error::InvalidSpace(format!(
                    "variable `{name}` has cardinality {card}; at least 2 values are required"
                )));
            }
            names.push(name);
            cards.push(card);
        }
        if names.len() > 64 {
            return Err(Error::InvalidSpace("at most 64 variables are supported".into()));
        }
        Ok(VariableSpace { names, cards })
    }

    /// A space of `names.len()` binary variables.
    pub fn binary(names: &[&str]) -> Result<Self> {
        Self::new(names.iter().map(|n| (*n, 2)))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn all(&self) -> VarSet {
        VarSet::full(self.len())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (0..self.len()).map(Var)
    }

    pub fn var(&self, name: &str) -> Result<Var> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(Var)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn set(&self, names: &[&str]) -> Result<VarSet> {
        names.iter().map(|n| self.var(n)).collect()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn card(&self, v: Var) -> usize {
        self.cards[v.0]
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn names_of(&self, set: VarSet) -> Vec<String> {
        set.iter().map(|v| self.names[v.0].clone()).collect()
    }

    pub fn grid(&self, set: VarSet) -> Grid {
        Grid::new(set.iter().map(|v| (v, self.card(v))).collect())
    }

    /// Number of policies, `prod(|X_i| + 1)`.
    pub fn policy_count(&self) -> usize {
        self.cards.iter().map(|c| c + 1).product()
    }

    /// Checks that every binding names a variable of this space with an
    /// in-range value.
    pub fn check(&self, a: &Assignment) -> Result<()> {
        for (v, x) in a.iter() {
            if v.0 >= self.len() {
                return Err(Error::UnknownVariable(format!("#{}", v.0)));
            }
            if x >= self.cards[v.0] {
                return Err(Error::ValueOutOfRange {
                    var: self.names[v.0].clone(),
                    value: x,
                    card: self.cards[v.0],
                });
            }
        }
        Ok(())
    }

    /// Builds an assignment from `(name, value)` pairs.
    pub fn assign(&self, pairs: &[(&str, usize)]) -> Result<Assignment> {
        let mut a = Assignment::new();
        for (name, x) in pairs {
            a.bind(self.var(name)?, *x);
        }
        self.check(&a)?;
        Ok(a)
    }

    /// All full assignments of `set` in canonical order.
    pub fn outcomes(&self, set: VarSet) -> Vec<Assignment> {
        let grid = self.grid(set);
        (0..grid.len()).map(|i| grid.decode(i)).collect()
    }

    /// Enumerates the policies in canonical policy-index order (see
    /// [`VariableSpace::policy_index`]).
    pub fn policies(&self) -> impl Iterator<Item = Policy> + '_ {
        (0..self.policy_count()).map(|k| self.policy_at(k))
    }

    /// Mixed-radix index of a policy: digit 0 encodes "not intervened",
    /// digit `x + 1` encodes "intervened at value x". The first variable is
    /// the most significant digit.
    pub fn policy_index(&self, p: &Policy) -> usize {
        let mut idx = 0;
        for v in self.vars() {
            let digit = p.0.get(v).map_or(0, |x| x + 1);
            idx = idx * (self.cards[v.0] + 1) + digit;
        }
        idx
    }

    pub fn policy_at(&self, mut idx: usize) -> Policy {
        let mut digits = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            let radix = self.cards[k] + 1;
            digits[k] = idx % radix;
            idx /= radix;
        }
        let mut a = Assignment::new();
        for (k, d) in digits.into_iter().enumerate() {
            if d > 0 {
                a.bind(Var(k), d - 1);
            }
        }
        Policy(a)
    }

    pub fn display(&self, a: &Assignment) -> String {
        let parts: Vec<String> =
            a.iter().map(|(v, x)| format!("{}={}", self.names[v.0], x)).collect();
        format!("({})", parts.join(","))
    }
}

/// Named form of [`VariableSpace::outcomes`].
pub fn enumerate_outcomes(space: &VariableSpace, subset: &[&str]) -> Result<Vec<Assignment>> {
    Ok(space.outcomes(space.set(subset)?))
}

/// A partial map from variables to value indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(BTreeMap<Var, usize>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn bind(&mut self, v: Var, x: usize) -> &mut Self {
        self.0.insert(v, x);
        self
    }

    pub fn with(mut self, v: Var, x: usize) -> Self {
        self.0.insert(v, x);
        self
    }

    pub fn get(&self, v: Var) -> Option<usize> {
        self.0.get(&v).copied()
    }

    pub fn domain(&self) -> VarSet {
        self.0.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, usize)> + '_ {
        self.0.iter().map(|(v, x)| (*v, *x))
    }

    pub fn restrict(&self, set: VarSet) -> Assignment {
        Assignment(self.0.iter().filter(|(v, _)| set.contains(**v)).map(|(v, x)| (*v, *x)).collect())
    }

    /// Union of two assignments; bindings in `other` win on conflicts.
    pub fn merged(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(v, x)| (*v, *x)));
        out
    }

    /// True when both assignments agree on their common variables.
    pub fn agrees_with(&self, other: &Assignment) -> bool {
        self.0.iter().all(|(v, x)| other.0.get(v).is_none_or(|y| y == x))
    }
}

impl FromIterator<(Var, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Var, usize)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// An intervention policy: the bound variables are intervened on, the
/// unbound ones are left to nature.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Policy(pub Assignment);

impl Policy {
    /// The empty policy (no interventions).
    pub fn observe() -> Self {
        Policy(Assignment::new())
    }

    pub fn intervened(&self) -> VarSet {
        self.0.domain()
    }

    /// `N(p)`: the variables the policy leaves unaffected.
    pub fn unintervened(&self, space: &VariableSpace) -> VarSet {
        space.all().difference(self.0.domain())
    }

    pub fn values(&self) -> &Assignment {
        &self.0
    }
}

impl From<Assignment> for Policy {
    fn from(a: Assignment) -> Self {
        Policy(a)
    }
}

/// Mixed-radix grid over an ordered list of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    vars: Vec<Var>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(mut pairs: Vec<(Var, usize)>) -> Self {
        pairs.sort_by_key(|(v, _)| *v);
        let vars: Vec<Var> = pairs.iter().map(|(v, _)| *v).collect();
        let cards: Vec<usize> = pairs.iter().map(|(_, c)| *c).collect();
        let mut strides = vec![1; cards.len()];
        for k in (0..cards.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * cards[k + 1];
        }
        let len = cards.iter().product();
        Grid { vars, cards, strides, len }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn set(&self) -> VarSet {
        self.vars.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn card_of(&self, v: Var) -> Option<usize> {
        self.vars.iter().position(|u| *u == v).map(|k| self.cards[k])
    }

    /// Index of the cell selected by `a`, which must bind every grid variable.
    pub fn index(&self, a: &Assignment) -> usize {
        self.vars
            .iter()
            .zip(&self.strides)
            .map(|(v, s)| a.get(*v).expect("assignment must bind every grid variable") * s)
            .sum()
    }

    pub fn try_index(&self, a: &Assignment) -> Option<usize> {
        let mut idx = 0;
        for (k, v) in self.vars.iter().enumerate() {
            let x = a.get(*v)?;
            if x >= self.cards[k] {
                return None;
            }
            idx += x * self.strides[k];
        }
        Some(idx)
    }

    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.vars.len()];
        for k in 0..self.vars.len() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
        }
        out
    }

    pub fn decode(&self, idx: usize) -> Assignment {
        self.vars.iter().copied().zip(self.digits(idx)).collect()
    }

    /// For each variable of `self`, its stride inside `sub` (0 when absent),
    /// so that `sum(digit * map)` projects a cell of `self` onto `sub`.
    pub fn projection(&self, sub: &Grid) -> Vec<usize> {
        self.vars
            .iter()
            .map(|v| sub.vars.iter().position(|u| u == v).map_or(0, |k| sub.strides[k]))
            .collect()
    }

    /// Calls `f(index, digits)` for every cell in order.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[usize])) {
        let mut digits = vec![0; self.vars.len()];
        for idx in 0..self.len {
            f(idx, &digits);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < self.cards[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }
}

/// A monetary act: a payoff for every outcome of its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Act {
    domain: VarSet,
    grid: Grid,
    payoffs: Vec<f64>,
}

impl Act {
    pub fn new(space: &VariableSpace, domain: VarSet, payoffs: Vec<f64>) -> Result<Self> {
        let grid = space.grid(domain);
        if payoffs.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "act over {} outcomes needs {} payoffs, got {}",
                grid.len(),
                grid.len(),
                payoffs.len()
            )));
        }
        Ok(Act { domain, grid, payoffs })
    }

    pub fn constant(space: &VariableSpace, domain: VarSet, value: f64) -> Self {
        let grid = space.grid(domain);
        let payoffs = vec![value; grid.len()];
        Act { domain, grid, payoffs }
    }

    pub fn domain(&self) -> VarSet {
        self.domain
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    /// Payoff at any assignment binding (at least) the act's domain; this is
    /// the cylindrical extension to larger domains.
    pub fn value_at(&self, a: &Assignment) -> f64 {
        self.payoffs[self.grid.index(a)]
    }

    /// Cell-wise sum of two acts over the same domain.
    pub fn add(&self, other: &Act) -> Result<Act> {
        if self.domain != other.domain {
            return Err(Error::MixedDomains);
        }
        let payoffs = self.payoffs.iter().zip(&other.payoffs).map(|(a, b)| a + b).collect();
        Ok(Act { domain: self.domain, grid: self.grid.clone(), payoffs })
    }
}

/// The indicator act of `event`, a set of full assignments of `domain`.
pub fn indicator_act(space: &VariableSpace, domain: VarSet, event: &[Assignment]) -> Result<Act> {
    let mut act = Act::constant(space, domain, 0.0);
    for a in event {
        if a.domain() != domain {
            return Err(Error::MixedDomains);
        }
        space.check(a)?;
        let idx = act.grid.index(a);
        act.payoffs[idx] = 1.0;
    }
    Ok(act)
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|v| v.0.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
