//! The `.cm` model format: variables, edges, conditional tables and
//! optional explicit belief tables, with a canonical printer.
//!
//! ```text
//! model charlie
//! var E : 2
//! var A : 2 labels no yes
//! var L : 2
//! edge E -> A
//! edge A -> L
//! cpt E { : 0.5 0.5 }
//! cpt A | E { E=0 : 0.9 0.1  E=1 : 0.2 0.8 }
//! cpt L | A { A=no : 0.7 0.3  A=yes : 0.1 0.9 }
//! ```
//!
//! Sections appear in the order header, `var`, `edge`, `cpt`, an optional
//! `generate: markov`, then `belief do(...) { ... }` blocks. Values may be
//! written as indices or as declared labels; the parsed file stores indices
//! and keeps every list in canonical order.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::lex::{tokenize, Cursor, Diagnostic, Pos, Tok};
use crate::beliefs::BeliefFamily;
use crate::dist::JointTable;
use crate::docalc::MarkovModel;
use crate::error::{Error, Result};
use crate::graph::{shortest_cycle, Dag};
use crate::space::{Assignment, Policy, Var, VarSet, VariableSpace};

/// Rows and cells must sum to one within this tolerance.
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub card: usize,
    /// Empty when the variable has no labels.
    pub labels: Vec<String>,
}

/// A binding list, as `(variable index, value index)` in variable order.
pub type Bindings = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq)]
pub struct CptBlock {
    pub var: usize,
    pub parents: Vec<usize>,
    /// One row per parent configuration, in canonical order.
    pub rows: Vec<(Bindings, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefBlock {
    pub policy: Bindings,
    /// One cell per outcome of the free variables, in canonical order.
    pub cells: Vec<(Bindings, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub name: String,
    pub vars: Vec<VarDecl>,
    pub edges: Vec<(usize, usize)>,
    pub cpts: Vec<CptBlock>,
    pub generate_markov: bool,
    pub beliefs: Vec<BeliefBlock>,
}

fn to_assignment(b: &Bindings) -> Assignment {
    b.iter().map(|&(v, x)| (Var(v), x)).collect()
}

fn from_assignment(a: &Assignment) -> Bindings {
    a.iter().map(|(v, x)| (v.0, x)).collect()
}

impl ModelFile {
    pub fn space(&self) -> VariableSpace {
        VariableSpace::new(self.vars.iter().map(|d| (d.name.clone(), d.card))).expect("validated at parse time")
    }

    pub fn graph(&self) -> Dag {
        let names = self.vars.iter().map(|d| d.name.clone()).collect();
        let edges: Vec<(Var, Var)> = self.edges.iter().map(|&(a, b)| (Var(a), Var(b))).collect();
        Dag::new(names, &edges).expect("validated at parse time")
    }

    pub fn labels(&self, v: usize) -> &[String] {
        &self.vars[v].labels
    }

    /// The Markov model given by the conditional tables, if the file has them.
    pub fn markov(&self) -> Result<Option<MarkovModel>> {
        if self.cpts.is_empty() {
            return Ok(None);
        }
        let rows = self.cpts.iter().map(|c| c.rows.iter().map(|(_, r)| r.clone()).collect()).collect();
        MarkovModel::new(self.space(), self.graph(), rows).map(Some)
    }

    /// The Markov model of the file, or one with random tables drawn from
    /// `seed` when the file only gives structure.
    pub fn markov_or_seeded(&self, seed: Option<u64>) -> Result<Option<MarkovModel>> {
        match (self.markov()?, seed) {
            (Some(m), _) => Ok(Some(m)),
            (None, Some(s)) if self.beliefs.is_empty() => {
                MarkovModel::random_seeded(self.space(), self.graph(), s).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// The belief family: explicit blocks, filled from the Markov model when
    /// `generate: markov` is set; otherwise the Markov model's family.
    pub fn family(&self, seed: Option<u64>) -> Result<BeliefFamily> {
        let space = self.space();
        if self.beliefs.is_empty() {
            return match self.markov_or_seeded(seed)? {
                Some(m) => m.family(),
                None => Err(Error::Precondition(
                    "model has no conditional tables or belief blocks; pass --seed to draw random tables".into(),
                )),
            };
        }
        let markov = if self.generate_markov { self.markov()? } else { None };
        let explicit: BTreeMap<usize, &BeliefBlock> =
            self.beliefs.iter().map(|b| (space.policy_index(&Policy(to_assignment(&b.policy))), b)).collect();
        BeliefFamily::from_fn(space.clone(), |p: &Policy| match explicit.get(&space.policy_index(p)) {
            Some(b) => {
                let mass = b.cells.iter().map(|(_, m)| *m).collect();
                JointTable::over(&space, p.unintervened(&space), mass)
            }
            None => match &markov {
                Some(m) => m.do_table(p.values()),
                None => Err(Error::MissingPolicy(space.display(p.values()))),
            },
        })
    }

    /// Canonical text; parsing it gives back an equal `ModelFile`.
    pub fn print(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model {}", self.name);
        s.push('\n');
        for d in &self.vars {
            let _ = write!(s, "var {} : {}", d.name, d.card);
            if !d.labels.is_empty() {
                let _ = write!(s, " labels {}", d.labels.join(" "));
            }
            s.push('\n');
        }
        if !self.edges.is_empty() {
            s.push('\n');
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(s, "edge {} -> {}", self.vars[a].name, self.vars[b].name);
        }
        for c in &self.cpts {
            s.push('\n');
            let _ = write!(s, "cpt {}", self.vars[c.var].name);
            if !c.parents.is_empty() {
                let ps: Vec<&str> = c.parents.iter().map(|&p| self.vars[p].name.as_str()).collect();
                let _ = write!(s, " | {}", ps.join(" "));
            }
            s.push_str(" {\n");
            for (b, row) in &c.rows {
                let nums: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "  {}: {}", self.bindings_prefix(b), nums.join(" "));
            }
            s.push_str("}\n");
        }
        if self.generate_markov {
            s.push_str("\ngenerate: markov\n");
        }
        for b in &self.beliefs {
            s.push('\n');
            let _ = writeln!(s, "belief do({}) {{", self.bindings_text(&b.policy));
            for (cell, m) in &b.cells {
                let _ = writeln!(s, "  {}: {}", self.bindings_prefix(cell), m);
            }
            s.push_str("}\n");
        }
        s
    }

    fn bindings_text(&self, b: &Bindings) -> String {
        b.iter().map(|&(v, x)| format!("{}={}", self.vars[v].name, x)).collect::<Vec<_>>().join(", ")
    }

    fn bindings_prefix(&self, b: &Bindings) -> String {
        if b.is_empty() {
            String::new()
        } else {
            format!("{} ", self.bindings_text(b))
        }
    }
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> std::result::Result<ModelFile, Diagnostic> {
    Parser { cur: Cursor::new(tokenize(text)?), vars: Vec::new() }.model()
}

struct Parser {
    cur: Cursor,
    vars: Vec<VarDecl>,
}

const SECTIONS: [&str; 5] = ["var", "edge", "cpt", "generate", "belief"];

impl Parser {
    fn model(mut self) -> std::result::Result<ModelFile, Diagnostic> {
        self.cur.keyword("model")?;
        let (name, _) = self.cur.ident("a model name")?;
        let mut edges: Vec<((usize, usize), Pos)> = Vec::new();
        let mut cpts: Vec<(CptBlock, Pos)> = Vec::new();
        let mut generate = None;
        let mut beliefs: Vec<(BeliefBlock, Pos)> = Vec::new();
        let mut phase = 0;
        while !self.cur.at_eof() {
            let Tok::Ident(kw) = self.cur.peek().clone() else {
                return Err(self.cur.unexpected("`var`, `edge`, `cpt`, `generate` or `belief`"));
            };
            let Some(k) = SECTIONS.iter().position(|s| *s == kw) else {
                return Err(self.cur.unexpected("`var`, `edge`, `cpt`, `generate` or `belief`"));
            };
            if k < phase {
                return Err(Diagnostic::at(
                    self.cur.pos(),
                    format!("`{kw}` must come before `{}` sections", SECTIONS[phase]),
                ));
            }
            phase = k;
            if k > 0 && self.vars.is_empty() {
                return Err(Diagnostic::at(self.cur.pos(), "declare at least one variable first"));
            }
            match k {
                0 => self.var_decl()?,
                1 => edges.push(self.edge(&edges)?),
                2 => {
                    let p = self.cur.pos();
                    let c = self.cpt(&edges)?;
                    if cpts.iter().any(|(d, _)| d.var == c.var) {
                        return Err(Diagnostic::at(p, format!("second cpt for `{}`", self.vars[c.var].name)));
                    }
                    cpts.push((c, p));
                }
                3 => {
                    if generate.is_some() {
                        return Err(Diagnostic::at(self.cur.pos(), "duplicate `generate` line"));
                    }
                    generate = Some(self.generate()?);
                }
                _ => {
                    let p = self.cur.pos();
                    let b = self.belief()?;
                    if beliefs.iter().any(|(d, _)| d.policy == b.policy) {
                        return Err(Diagnostic::at(p, "second belief block for the same policy"));
                    }
                    beliefs.push((b, p));
                }
            }
        }
        if self.vars.is_empty() {
            return Err(self.cur.unexpected("`var`"));
        }
        let eof = self.cur.pos();
        let n = self.vars.len();

        let mut parents = vec![VarSet::empty(); n];
        for ((a, b), _) in &edges {
            parents[*b] = parents[*b].with(Var(*a));
        }
        if let Some(cycle) = shortest_cycle(VarSet::full(n), &parents) {
            let names: Vec<&str> = cycle.iter().map(|v| self.vars[v.0].name.as_str()).collect();
            let pos = edges
                .iter()
                .find(|((a, b), _)| *a == cycle[0].0 && *b == cycle[1].0)
                .map_or(eof, |(_, p)| *p);
            return Err(Diagnostic::at(pos, format!("edges form a cycle: {}", names.join(" -> "))));
        }

        if !cpts.is_empty() && cpts.len() < n {
            let missing = (0..n).find(|v| !cpts.iter().any(|(c, _)| c.var == *v)).unwrap();
            return Err(Diagnostic::at(eof, format!("no cpt for `{}`", self.vars[missing].name)));
        }
        if let Some(p) = generate {
            if cpts.is_empty() {
                return Err(Diagnostic::at(p, "`generate: markov` needs a cpt for every variable"));
            }
        }
        if !beliefs.is_empty() && generate.is_none() {
            let space = VariableSpace::new(self.vars.iter().map(|d| (d.name.clone(), d.card))).unwrap();
            let have: Vec<usize> =
                beliefs.iter().map(|(b, _)| space.policy_index(&Policy(to_assignment(&b.policy)))).collect();
            let missing = space.policies().find(|p| !have.contains(&space.policy_index(p)));
            if let Some(p) = missing {
                return Err(Diagnostic::at(
                    eof,
                    format!(
                        "no belief block for do{}; cover every policy or add `generate: markov`",
                        space.display(p.values())
                    ),
                ));
            }
        }

        let mut edges: Vec<(usize, usize)> = edges.into_iter().map(|(e, _)| e).collect();
        edges.sort();
        let mut cpts: Vec<CptBlock> = cpts.into_iter().map(|(c, _)| c).collect();
        cpts.sort_by_key(|c| c.var);
        let space = VariableSpace::new(self.vars.iter().map(|d| (d.name.clone(), d.card))).unwrap();
        let mut beliefs: Vec<BeliefBlock> = beliefs.into_iter().map(|(b, _)| b).collect();
        beliefs.sort_by_key(|b| space.policy_index(&Policy(to_assignment(&b.policy))));
        Ok(ModelFile { name, vars: self.vars, edges, cpts, generate_markov: generate.is_some(), beliefs })
    }

    fn var_decl(&mut self) -> std::result::Result<(), Diagnostic> {
        self.cur.keyword("var")?;
        let (name, p) = self.cur.ident("a variable name")?;
        if SECTIONS.contains(&name.as_str()) || name == "model" || name == "labels" || name == "do" {
            return Err(Diagnostic::at(p, format!("`{name}` is a keyword")));
        }
        if self.vars.iter().any(|d| d.name == name) {
            return Err(Diagnostic::at(p, format!("variable `{name}` declared twice")));
        }
        if self.vars.len() == 64 {
            return Err(Diagnostic::at(p, "at most 64 variables are supported"));
        }
        self.cur.sym(":")?;
        let (card, cp) = self.cur.integer("a cardinality")?;
        if card < 2 {
            return Err(Diagnostic::at(cp, format!("`{name}` needs at least 2 values, got {card}")));
        }
        let mut labels = Vec::new();
        if self.cur.is_keyword("labels") {
            self.cur.bump();
            while let Tok::Ident(l) = self.cur.peek().clone() {
                if SECTIONS.contains(&l.as_str()) {
                    break;
                }
                let lp = self.cur.bump().1;
                if labels.contains(&l) {
                    return Err(Diagnostic::at(lp, format!("label `{l}` repeated")));
                }
                labels.push(l);
            }
            if labels.len() != card {
                return Err(Diagnostic::at(
                    cp,
                    format!("`{name}` has {card} values but {} labels", labels.len()),
                ));
            }
        }
        self.vars.push(VarDecl { name, card, labels });
        Ok(())
    }

    fn var_ref(&mut self) -> std::result::Result<(usize, Pos), Diagnostic> {
        let (name, p) = self.cur.ident("a variable name")?;
        match self.vars.iter().position(|d| d.name == name) {
            Some(v) => Ok((v, p)),
            None => Err(Diagnostic::at(p, format!("unknown variable `{name}`"))),
        }
    }

    fn edge(&mut self, seen: &[((usize, usize), Pos)]) -> std::result::Result<((usize, usize), Pos), Diagnostic> {
        let p = self.cur.keyword("edge")?;
        let (a, _) = self.var_ref()?;
        self.cur.sym("->")?;
        let (b, bp) = self.var_ref()?;
        if a == b {
            return Err(Diagnostic::at(bp, format!("self-loop on `{}`", self.vars[a].name)));
        }
        if seen.iter().any(|(e, _)| *e == (a, b)) {
            return Err(Diagnostic::at(p, "duplicate edge"));
        }
        Ok(((a, b), p))
    }

    fn value(&mut self, v: usize) -> std::result::Result<usize, Diagnostic> {
        let p = self.cur.pos();
        let d = &self.vars[v];
        let x = match self.cur.peek().clone() {
            Tok::Number(_) => self.cur.integer("a value")?.0,
            Tok::Ident(l) => {
                self.cur.bump();
                d.labels
                    .iter()
                    .position(|k| *k == l)
                    .ok_or_else(|| Diagnostic::at(p, format!("`{l}` is not a label of `{}`", d.name)))?
            }
            _ => return Err(self.cur.unexpected("a value")),
        };
        if x >= d.card {
            return Err(Diagnostic::at(p, format!("value {x} out of range for `{}` ({} values)", d.name, d.card)));
        }
        Ok(x)
    }

    /// `NAME=VALUE (, NAME=VALUE)*`, possibly empty; returns the bindings
    /// sorted by variable.
    fn bindings(&mut self) -> std::result::Result<Bindings, Diagnostic> {
        let mut out: Bindings = Vec::new();
        if !matches!(self.cur.peek(), Tok::Ident(_)) {
            return Ok(out);
        }
        loop {
            let (v, p) = self.var_ref()?;
            self.cur.sym("=")?;
            let x = self.value(v)?;
            if out.iter().any(|(w, _)| *w == v) {
                return Err(Diagnostic::at(p, format!("`{}` bound twice", self.vars[v].name)));
            }
            out.push((v, x));
            if !self.cur.is_sym(",") {
                break;
            }
            self.cur.bump();
        }
        out.sort();
        Ok(out)
    }

    fn cards(&self) -> Vec<(String, usize)> {
        self.vars.iter().map(|d| (d.name.clone(), d.card)).collect()
    }

    fn describe(&self, b: &Bindings) -> String {
        let parts: Vec<String> = b.iter().map(|&(v, x)| format!("{}={}", self.vars[v].name, x)).collect();
        format!("({})", parts.join(","))
    }

    fn cpt(&mut self, edges: &[((usize, usize), Pos)]) -> std::result::Result<CptBlock, Diagnostic> {
        self.cur.keyword("cpt")?;
        let (var, vp) = self.var_ref()?;
        let mut parents = Vec::new();
        if self.cur.is_sym("|") {
            self.cur.bump();
            while matches!(self.cur.peek(), Tok::Ident(_)) {
                let (p, pp) = self.var_ref()?;
                if parents.contains(&p) {
                    return Err(Diagnostic::at(pp, "parent listed twice"));
                }
                parents.push(p);
            }
            if parents.is_empty() {
                return Err(self.cur.unexpected("a parent name"));
            }
        }
        parents.sort();
        let mut declared: Vec<usize> = edges.iter().filter(|((_, b), _)| *b == var).map(|((a, _), _)| *a).collect();
        declared.sort();
        if parents != declared {
            let names = |vs: &[usize]| vs.iter().map(|&v| self.vars[v].name.clone()).collect::<Vec<_>>();
            return Err(Diagnostic::at(
                vp,
                format!(
                    "cpt parents {:?} of `{}` differ from the declared edges {:?}",
                    names(&parents),
                    self.vars[var].name,
                    names(&declared)
                ),
            ));
        }
        self.cur.sym("{")?;
        let space = VariableSpace::new(self.cards()).unwrap();
        let pset: VarSet = parents.iter().map(|&p| Var(p)).collect();
        let grid = space.grid(pset);
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; grid.len()];
        let card = self.vars[var].card;
        while !self.cur.is_sym("}") {
            let rp = self.cur.pos();
            let b = self.bindings()?;
            let dom: Vec<usize> = b.iter().map(|(v, _)| *v).collect();
            if dom != parents {
                return Err(Diagnostic::at(rp, format!("row {} must bind exactly the parents", self.describe(&b))));
            }
            self.cur.sym(":")?;
            let mut row = Vec::new();
            while self.cur.is_number() {
                let (x, xp) = self.cur.real()?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(Diagnostic::at(xp, format!("probability {x} outside [0, 1]")));
                }
                row.push(x);
            }
            if row.len() != card {
                return Err(Diagnostic::at(
                    rp,
                    format!("row {} has {} entries; `{}` has {card} values", self.describe(&b), row.len(), self.vars[var].name),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Diagnostic::at(rp, format!("row {} sums to {sum}, not 1", self.describe(&b))));
            }
            let idx = grid.index(&to_assignment(&b));
            if rows[idx].is_some() {
                return Err(Diagnostic::at(rp, format!("row {} given twice", self.describe(&b))));
            }
            rows[idx] = Some(row);
        }
        let close = self.cur.sym("}")?;
        let mut out = Vec::new();
        for (idx, r) in rows.into_iter().enumerate() {
            let b = from_assignment(&grid.decode(idx));
            match r {
                Some(r) => out.push((b, r)),
                None => return Err(Diagnostic::at(close, format!("cpt for `{}` lacks row {}", self.vars[var].name, self.describe(&b)))),
            }
        }
        Ok(CptBlock { var, parents, rows: out })
    }

    fn generate(&mut self) -> std::result::Result<Pos, Diagnostic> {
        let p = self.cur.keyword("generate")?;
        self.cur.sym(":")?;
        self.cur.keyword("markov")?;
        Ok(p)
    }

    fn belief(&mut self) -> std::result::Result<BeliefBlock, Diagnostic> {
        self.cur.keyword("belief")?;
        self.cur.keyword("do")?;
        self.cur.sym("(")?;
        let policy = self.bindings()?;
        self.cur.sym(")")?;
        let open = self.cur.sym("{")?;
        let space = VariableSpace::new(self.cards()).unwrap();
        let fixed: VarSet = policy.iter().map(|&(v, _)| Var(v)).collect();
        let free = space.all().difference(fixed);
        let grid = space.grid(free);
        let free_list: Vec<usize> = free.iter().map(|v| v.0).collect();
        let mut cells: Vec<Option<f64>> = vec![None; grid.len()];
        while !self.cur.is_sym("}") {
            let cp = self.cur.pos();
            let b = self.bindings()?;
            let dom: Vec<usize> = b.iter().map(|(v, _)| *v).collect();
            if dom != free_list {
                return Err(Diagnostic::at(cp, format!("cell {} must bind exactly the free variables", self.describe(&b))));
            }
            self.cur.sym(":")?;
            let (x, xp) = self.cur.real()?;
            if !(0.0..=1.0).contains(&x) {
                return Err(Diagnostic::at(xp, format!("probability {x} outside [0, 1]")));
            }
            let idx = grid.index(&to_assignment(&b));
            if cells[idx].is_some() {
                return Err(Diagnostic::at(cp, format!("cell {} given twice", self.describe(&b))));
            }
            cells[idx] = Some(x);
        }
        let close = self.cur.sym("}")?;
        let mut out = Vec::new();
        for (idx, c) in cells.into_iter().enumerate() {
            let b = from_assignment(&grid.decode(idx));
            match c {
                Some(x) => out.push((b, x)),
                None => return Err(Diagnostic::at(close, format!("belief block lacks cell {}", self.describe(&b)))),
            }
        }
        let sum: f64 = out.iter().map(|(_, x)| x).sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Diagnostic::at(open, format!("belief for do{} sums to {sum}, not 1", self.describe(&policy))));
        }
        Ok(BeliefBlock { policy, cells: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CHARLIE: &str = "model charlie
var E : 2
var A : 2 labels no yes
var L : 2
edge E -> A
edge A -> L
cpt E { : 0.5 0.5 }
cpt A | E { E=0 : 0.9 0.1  E=1 : 0.2 0.8 }
cpt L | A { A=no : 0.7 0.3  A=yes : 0.1 0.9 }
";

    #[test]
    fn one_variable_file() {
        let m = parse_model("model one\nvar X : 2\ncpt X { : 0.4 0.6 }\n").unwrap();
        assert_eq!(m.cpts.len(), 1);
        assert_eq!(m.markov().unwrap().unwrap().joint().mass(), &[0.4, 0.6]);
    }

    #[test]
    fn charlie_file() {
        let m = parse_model(CHARLIE).unwrap();
        assert_eq!(m.cpts.len(), 3);
        let g = m.graph();
        assert_eq!(g.edges(), Dag::from_names(&["E", "A", "L"], &[("E", "A"), ("A", "L")]).unwrap().edges());
        assert_eq!(m.cpts[2].rows[1], (vec![(1, 1)], vec![0.1, 0.9]));
    }

    #[test]
    fn short_row_sum_names_the_row() {
        let e = parse_model("model m\nvar X : 2\nvar Y : 2\nedge X -> Y\ncpt X { : .5 .5 }\ncpt Y | X {\n X=0 : .5 .4\n X=1 : .5 .5 }\n")
            .unwrap_err();
        assert_eq!((e.line, e.column), (7, 2));
        assert!(e.message.contains("(X=0)") && e.message.contains("sums to"), "{}", e.message);
    }

    #[test]
    fn diagnostics_are_positioned() {
        let cases = [
            ("model m\nvar X 2\n", (2, 7), "expected `:`"),
            ("model m\nvar X : 2\nedge X -> Q\n", (3, 11), "unknown variable `Q`"),
            ("model m\nvar X : 1\n", (2, 9), "at least 2"),
            ("model m\nvar X : 2\nvar Y : 2\nedge X -> Y\nedge Y -> X\n", (4, 1), "cycle"),
            ("model m\nvar X : 2\ncpt X { : 0.5 0.5 }\nedge X -> X\n", (4, 1), "must come before"),
            ("model m\nvar X : 2\ncpt X { : 0.5 }\n", (3, 9), "1 entries"),
            ("model m\nvar X : 2\nvar Y : 2\ncpt X { : .5 .5 }\n", (5, 1), "no cpt for `Y`"),
            ("model m\nvar X : 2\nbelief do() { X=0 : 1 X=1 : 0 }\n", (4, 1), "no belief block for do(X=0)"),
            ("", (1, 1), "expected `model`"),
        ];
        for (text, pos, msg) in cases {
            let e = parse_model(text).unwrap_err();
            assert_eq!((e.line, e.column), pos, "{text:?}: {}", e.message);
            assert!(e.message.contains(msg), "{text:?}: {}", e.message);
        }
    }

    #[test]
    fn cpt_parents_must_match_edges() {
        let e = parse_model("model m\nvar X : 2\nvar Y : 2\ncpt X { : .5 .5 }\ncpt Y { : .5 .5 }\n").unwrap();
        assert!(e.edges.is_empty());
        let e = parse_model("model m\nvar X : 2\nvar Y : 2\nedge X -> Y\ncpt X { : .5 .5 }\ncpt Y { : .5 .5 }\n")
            .unwrap_err();
        assert!(e.message.contains("differ from the declared edges"));
    }

    #[test]
    fn explicit_family_with_generation() {
        let text = "model m\nvar X : 2\nvar Y : 2\nedge X -> Y\ncpt X { : .5 .5 }\ncpt Y | X { X=0 : .9 .1 X=1 : .2 .8 }\ngenerate: markov\nbelief do(X=0) { Y=0 : 0.5 Y=1 : 0.5 }\n";
        let m = parse_model(text).unwrap();
        let fam = m.family(None).unwrap();
        let s = m.space();
        assert_eq!(fam.table(&Policy(s.assign(&[("X", 0)]).unwrap())).mass(), &[0.5, 0.5]);
        let p1 = Policy(s.assign(&[("X", 1)]).unwrap());
        assert!((fam.table(&p1).mass()[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn structure_only_needs_a_seed() {
        let m = parse_model("model m\nvar X : 2\nvar Y : 2\nedge X -> Y\n").unwrap();
        assert!(matches!(m.family(None), Err(Error::Precondition(_))));
        assert!(m.family(Some(3)).is_ok());
    }

    #[test]
    fn printing_is_canonical() {
        let m = parse_model(CHARLIE).unwrap();
        let text = m.print();
        assert_eq!(parse_model(&text).unwrap(), m);
        assert_eq!(parse_model(&text).unwrap().print(), text);
        assert!(text.contains("cpt L | A {\n  A=0 : 0.7 0.3\n"));
    }

    fn arb_model() -> impl Strategy<Value = ModelFile> {
        (1usize..4, proptest::collection::vec(2usize..4, 4), any::<u64>(), any::<bool>()).prop_map(
            |(n, cards, seed, labelled)| {
                let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
                let vars: Vec<VarDecl> = (0..n)
                    .map(|i| VarDecl {
                        name: names[i].clone(),
                        card: cards[i],
                        labels: if labelled && i == 0 { (0..cards[i]).map(|k| format!("v{k}")).collect() } else { vec![] },
                    })
                    .collect();
                let mut edges = Vec::new();
                for b in 0..n {
                    for a in 0..b {
                        if (seed >> (a * 4 + b)) & 1 == 1 {
                            edges.push((a, b));
                        }
                    }
                }
                let space = VariableSpace::new(vars.iter().map(|d| (d.name.clone(), d.card))).unwrap();
                let names_ref: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                let edge_names: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (names_ref[a], names_ref[b])).collect();
                let g = Dag::from_names(&names_ref, &edge_names).unwrap();
                let mm = MarkovModel::random_seeded(space, g, seed).unwrap();
                let cpts = mm
                    .cpts()
                    .iter()
                    .enumerate()
                    .map(|(v, c)| CptBlock {
                        var: v,
                        parents: c.parents().iter().map(|p| p.0).collect(),
                        rows: c
                            .rows()
                            .iter()
                            .enumerate()
                            .map(|(r, row)| (from_assignment(&c.parent_grid().decode(r)), row.clone()))
                            .collect(),
                    })
                    .collect();
                ModelFile { name: "rt".into(), vars, edges, cpts, generate_markov: false, beliefs: vec![] }
            },
        )
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(m in arb_model()) {
            let text = m.print();
            let back = parse_model(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
            prop_assert_eq!(back, m);
        }
    }
}
