//! Directed acyclic graphs over the variables of a space, truncations, and
//! separation tests.
//!
//! Node ids are variable indices and stay stable under truncation: removing
//! nodes only clears them from the `present` set.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::space::{Var, VarSet};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    names: Vec<String>,
    present: VarSet,
    parents: Vec<VarSet>,
}

impl Dag {
    /// Builds a DAG; fails on self-loops, dangling endpoints and cycles.
    pub fn new(names: Vec<String>, edges: &[(Var, Var)]) -> Result<Self> {
        let n = names.len();
        let mut parents = vec![VarSet::empty(); n];
        for &(a, b) in edges {
            if a.0 >= n || b.0 >= n {
                return Err(Error::UnknownVariable(format!("#{}", a.0.max(b.0))));
            }
            if a == b {
                return Err(Error::Cycle(vec![names[a.0].clone(), names[a.0].clone()]));
            }
            parents[b.0] = parents[b.0].with(a);
        }
        Self::from_parents(names, VarSet::full(n), parents)
    }

    pub fn from_parents(names: Vec<String>, present: VarSet, parents: Vec<VarSet>) -> Result<Self> {
        if let Some(cycle) = shortest_cycle(present, &parents) {
            return Err(Error::Cycle(cycle.iter().map(|v| names[v.0].clone()).collect()));
        }
        Ok(Dag { names, present, parents })
    }

    /// Builds a DAG from node names and `(tail, head)` name pairs.
    pub fn from_names(names: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let find = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .map(Var)
                .ok_or_else(|| Error::UnknownVariable(s.to_string()))
        };
        let edges: Vec<(Var, Var)> =
            edges.iter().map(|(a, b)| Ok((find(a)?, find(b)?))).collect::<Result<_>>()?;
        Self::new(names, &edges)
    }

    pub fn empty(names: Vec<String>) -> Self {
        let n = names.len();
        Dag { names, present: VarSet::full(n), parents: vec![VarSet::empty(); n] }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    pub fn node(&self, name: &str) -> Result<Var> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(Var)
            .filter(|v| self.present.contains(*v))
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn set(&self, names: &[&str]) -> Result<VarSet> {
        names.iter().map(|n| self.node(n)).collect()
    }

    pub fn names_of(&self, set: VarSet) -> Vec<String> {
        set.iter().map(|v| self.names[v.0].clone()).collect()
    }

    pub fn nodes(&self) -> VarSet {
        self.present
    }

    pub fn require(&self, set: VarSet) -> Result<()> {
        match set.difference(self.present).first() {
            Some(v) => Err(Error::UnknownVariable(
                self.names.get(v.0).cloned().unwrap_or_else(|| format!("#{}", v.0)),
            )),
            None => Ok(()),
        }
    }

    /// Edges as `(tail, head)` pairs, sorted.
    pub fn edges(&self) -> Vec<(Var, Var)> {
        let mut out = Vec::new();
        for h in self.present.iter() {
            for t in self.parents[h.0].iter() {
                out.push((t, h));
            }
        }
        out.sort();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.present.iter().map(|v| self.parents[v.0].len()).sum()
    }

    pub fn has_edge(&self, tail: Var, head: Var) -> bool {
        self.present.contains(head) && self.parents[head.0].contains(tail)
    }

    pub fn adjacent(&self, a: Var, b: Var) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn parents(&self, v: Var) -> VarSet {
        if self.present.contains(v) {
            self.parents[v.0]
        } else {
            VarSet::empty()
        }
    }

    /// Parent sets indexed by variable (empty for absent nodes).
    pub fn parent_sets(&self) -> Vec<VarSet> {
        (0..self.names.len()).map(|k| self.parents(Var(k))).collect()
    }

    pub fn children(&self, v: Var) -> VarSet {
        self.present.iter().filter(|h| self.parents[h.0].contains(v)).collect()
    }

    /// Strict descendants of `v`.
    pub fn descendants(&self, v: Var) -> VarSet {
        let mut seen = VarSet::empty();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for c in self.children(u).iter() {
                if !seen.contains(c) {
                    seen = seen.with(c);
                    stack.push(c);
                }
            }
        }
        seen
    }

    /// Strict ancestors of `v`.
    pub fn ancestors(&self, v: Var) -> VarSet {
        let mut seen = VarSet::empty();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for p in self.parents(u).iter() {
                if !seen.contains(p) {
                    seen = seen.with(p);
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// `set` together with all ancestors of its members.
    pub fn ancestral_closure(&self, set: VarSet) -> VarSet {
        set.iter().fold(set, |acc, v| acc.union(self.ancestors(v)))
    }

    pub fn nondescendants(&self, v: Var) -> VarSet {
        self.present.difference(self.descendants(v).with(v))
    }

    /// Nodes in a topological order (parents first, ties by index).
    pub fn topological_order(&self) -> Vec<Var> {
        let mut done = VarSet::empty();
        let mut order = Vec::with_capacity(self.present.len());
        while order.len() < self.present.len() {
            let next = self
                .present
                .difference(done)
                .iter()
                .find(|v| self.parents[v.0].intersection(self.present).is_subset(done))
                .expect("graph is acyclic");
            done = done.with(next);
            order.push(next);
        }
        order
    }

    /// Deletes the nodes in `w` and every edge touching them.
    pub fn truncate_remove(&self, w: VarSet) -> Dag {
        let present = self.present.difference(w);
        let parents = self.parents.iter().map(|p| p.intersection(present)).collect();
        Dag { names: self.names.clone(), present, parents }
    }

    /// Deletes every edge pointing into a node of `i`.
    pub fn truncate_in(&self, i: VarSet) -> Dag {
        let mut g = self.clone();
        for v in i.iter() {
            if v.0 < g.parents.len() {
                g.parents[v.0] = VarSet::empty();
            }
        }
        g
    }

    /// Deletes every edge leaving a node of `j`.
    pub fn truncate_out(&self, j: VarSet) -> Dag {
        let mut g = self.clone();
        for p in g.parents.iter_mut() {
            *p = p.difference(j);
        }
        g
    }

    pub fn truncate_in_out(&self, i: VarSet, j: VarSet) -> Result<Dag> {
        disjoint(&[i, j])?;
        Ok(self.truncate_in(i).truncate_out(j))
    }

    /// Deletes edges into `i` and into `J(K)`, the members of `j` that are not
    /// ancestors of any member of `k` once edges into `i` are gone.
    pub fn truncate_in_cond(&self, i: VarSet, j: VarSet, k: VarSet) -> Result<Dag> {
        disjoint(&[i, j, k])?;
        let gi = self.truncate_in(i);
        let anc_k = k.iter().fold(VarSet::empty(), |acc, v| acc.union(gi.ancestors(v)));
        Ok(gi.truncate_in(j.difference(anc_k)))
    }

    fn neighbours(&self, v: Var) -> VarSet {
        self.parents(v).union(self.children(v))
    }

    /// Calls `f` on every simple undirected path from a node of `from` to a
    /// node of `to`; stops early when `f` returns false.
    fn for_each_path(&self, from: VarSet, to: VarSet, f: &mut dyn FnMut(&[Var]) -> bool) {
        fn walk(
            g: &Dag,
            to: VarSet,
            path: &mut Vec<Var>,
            on: VarSet,
            f: &mut dyn FnMut(&[Var]) -> bool,
        ) -> bool {
            let last = *path.last().unwrap();
            if path.len() > 1 && to.contains(last) && !f(path) {
                return false;
            }
            for n in g.neighbours(last).difference(on).iter() {
                path.push(n);
                let go = walk(g, to, path, on.with(n), f);
                path.pop();
                if !go {
                    return false;
                }
            }
            true
        }
        for s in from.intersection(self.present).iter() {
            let mut path = vec![s];
            if !walk(self, to, &mut path, VarSet::singleton(s), f) {
                return;
            }
        }
    }

    fn is_collider(&self, prev: Var, w: Var, next: Var) -> bool {
        self.has_edge(prev, w) && self.has_edge(next, w)
    }

    /// True when `k` blocks every undirected path from `i` to `j`: some
    /// interior node is either a non-collider in `k`, or a collider that is
    /// not in `k` and has no descendant in `k`.
    pub fn blocks(&self, i: VarSet, j: VarSet, k: VarSet) -> Result<bool> {
        disjoint(&[i, j, k])?;
        self.require(i.union(j).union(k))?;
        let mut all_blocked = true;
        self.for_each_path(i, j, &mut |path| {
            let blocked = path.windows(3).any(|w| {
                let (a, q, b) = (w[0], w[1], w[2]);
                if self.is_collider(a, q, b) {
                    !k.contains(q) && self.descendants(q).is_disjoint(k)
                } else {
                    k.contains(q)
                }
            });
            all_blocked &= blocked;
            blocked
        });
        Ok(all_blocked)
    }

    /// `k` D-separates `i` from `j`, per-path test with the collider clause
    /// written as "w not in k and k within the nondescendants of w".
    pub fn d_separates(&self, k: VarSet, i: VarSet, j: VarSet) -> Result<bool> {
        disjoint(&[i, j, k])?;
        self.require(i.union(j).union(k))?;
        let mut all_blocked = true;
        self.for_each_path(i, j, &mut |path| {
            let collider_clause = path.windows(3).any(|w| {
                self.is_collider(w[0], w[1], w[2])
                    && !k.contains(w[1])
                    && k.is_subset(self.nondescendants(w[1]))
            });
            let chain_clause = path
                .windows(3)
                .any(|w| !self.is_collider(w[0], w[1], w[2]) && k.contains(w[1]));
            let ok = collider_clause || chain_clause;
            all_blocked &= ok;
            ok
        });
        Ok(all_blocked)
    }

    /// Reachability form of separation (linear in the number of edges).
    /// Agrees with [`Dag::blocks`] on every input.
    pub fn separated_by_reachability(&self, i: VarSet, j: VarSet, k: VarSet) -> Result<bool> {
        disjoint(&[i, j, k])?;
        self.require(i.union(j).union(k))?;
        let k_anc = self.ancestral_closure(k);
        // State: (node, arrived along an edge pointing into it).
        let mut seen_up = VarSet::empty();
        let mut seen_down = VarSet::empty();
        let mut queue: VecDeque<(Var, bool)> = VecDeque::new();
        for s in i.iter() {
            queue.push_back((s, false));
        }
        let mut reached = VarSet::empty();
        while let Some((v, into)) = queue.pop_front() {
            let seen = if into { &mut seen_down } else { &mut seen_up };
            if seen.contains(v) {
                continue;
            }
            *seen = seen.with(v);
            if !k.contains(v) {
                reached = reached.with(v);
            }
            if !into {
                // Arrived from a child, or a start node.
                if !k.contains(v) {
                    for p in self.parents(v).iter() {
                        queue.push_back((p, false));
                    }
                    for c in self.children(v).iter() {
                        queue.push_back((c, true));
                    }
                }
            } else {
                if !k.contains(v) {
                    for c in self.children(v).iter() {
                        queue.push_back((c, true));
                    }
                }
                if k_anc.contains(v) {
                    for p in self.parents(v).iter() {
                        queue.push_back((p, false));
                    }
                }
            }
        }
        Ok(reached.is_disjoint(j))
    }

    /// Graphviz text.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph {\n");
        for v in self.present.iter() {
            let _ = writeln!(out, "  {};", self.names[v.0]);
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  {} -> {};", self.names[a.0], self.names[b.0]);
        }
        out.push_str("}\n");
        out
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

/// A shortest directed cycle among `present` nodes, as a node list whose
/// first element is repeated at the end.
pub fn shortest_cycle(present: VarSet, parents: &[VarSet]) -> Option<Vec<Var>> {
    let mut best: Option<Vec<Var>> = None;
    for s in present.iter() {
        // BFS along edges tail -> head starting from s, looking for s again.
        let mut prev: Vec<Option<Var>> = vec![None; parents.len()];
        let mut queue = VecDeque::from([s]);
        let mut visited = VarSet::singleton(s);
        let mut found = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for h in present.iter().filter(|h| parents[h.0].contains(u)) {
                if h == s {
                    found = Some(u);
                    break 'bfs;
                }
                if !visited.contains(h) {
                    visited = visited.with(h);
                    prev[h.0] = Some(u);
                    queue.push_back(h);
                }
            }
        }
        if let Some(mut u) = found {
            let mut cycle = vec![u];
            while u != s {
                u = prev[u.0].unwrap();
                cycle.push(u);
            }
            cycle.reverse();
            cycle.push(s);
            if best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
                best = Some(cycle);
            }
        }
    }
    best
}

/// Every DAG on the given labelled nodes (25 on three nodes, 543 on four).
pub fn enumerate_dags(names: &[&str]) -> Vec<Dag> {
    let n = names.len();
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut parents = vec![VarSet::empty(); n];
        for &(a, b) in &pairs {
            match code % 3 {
                1 => parents[b] = parents[b].with(Var(a)),
                2 => parents[a] = parents[a].with(Var(b)),
                _ => {}
            }
            code /= 3;
        }
        if shortest_cycle(VarSet::full(n), &parents).is_none() {
            out.push(Dag { names: names.clone(), present: VarSet::full(n), parents });
        }
    }
    out
}
