//! Query strings `P(L=1 | A=0, do(E=1))` and set lists `I;J;K`.

use super::lex::{tokenize, Cursor, Diagnostic, Pos, Tok};
use super::model::ModelFile;
use crate::docalc::QueryExpr;
use crate::space::{Assignment, Var, VarSet};

struct Q<'a> {
    cur: Cursor,
    model: &'a ModelFile,
    seen: Vec<usize>,
}

impl Q<'_> {
    fn binding(&mut self, into: &mut Assignment) -> Result<(), Diagnostic> {
        let (name, p) = self.cur.ident("a variable name")?;
        let v = self.var(&name, p)?;
        if self.seen.contains(&v) {
            return Err(Diagnostic::at(p, format!("`{name}` appears more than once in the query")));
        }
        self.seen.push(v);
        self.cur.sym("=")?;
        let vp = self.cur.pos();
        let d = &self.model.vars[v];
        let x = match self.cur.peek().clone() {
            Tok::Number(_) => self.cur.integer("a value")?.0,
            Tok::Ident(l) => {
                self.cur.bump();
                d.labels
                    .iter()
                    .position(|k| *k == l)
                    .ok_or_else(|| Diagnostic::at(vp, format!("`{l}` is not a label of `{}`", d.name)))?
            }
            _ => return Err(self.cur.unexpected("a value")),
        };
        if x >= d.card {
            return Err(Diagnostic::at(vp, format!("value {x} out of range for `{}` ({} values)", d.name, d.card)));
        }
        into.bind(Var(v), x);
        Ok(())
    }

    fn var(&self, name: &str, p: Pos) -> Result<usize, Diagnostic> {
        self.model
            .vars
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| Diagnostic::at(p, format!("unknown variable `{name}`")))
    }

    fn binding_list(&mut self, into: &mut Assignment) -> Result<(), Diagnostic> {
        self.binding(into)?;
        while self.cur.is_sym(",") {
            self.cur.bump();
            self.binding(into)?;
        }
        Ok(())
    }
}

/// Parses `P(target | cond, ...)` where each condition is a binding or a
/// `do(...)` group. Diagnostics are on line 1 with a column.
pub fn parse_query(text: &str, model: &ModelFile) -> Result<QueryExpr, Diagnostic> {
    let mut q = Q { cur: Cursor::new(tokenize(text)?), model, seen: Vec::new() };
    let start = q.cur.pos();
    let (p, pp) = q.cur.ident("`P`")?;
    if p != "P" {
        return Err(Diagnostic::at(pp, format!("expected `P`, found `{p}`")));
    }
    q.cur.sym("(")?;
    let mut target = Assignment::new();
    let mut observed = Assignment::new();
    let mut intervened = Assignment::new();
    q.binding_list(&mut target)?;
    if q.cur.is_sym("|") {
        q.cur.bump();
        loop {
            if q.cur.is_keyword("do") && matches!(q.cur.peek2(), Tok::Sym("(")) {
                q.cur.bump();
                q.cur.bump();
                q.binding_list(&mut intervened)?;
                q.cur.sym(")")?;
            } else {
                q.binding(&mut observed)?;
            }
            if !q.cur.is_sym(",") {
                break;
            }
            q.cur.bump();
        }
    }
    q.cur.sym(")")?;
    if !q.cur.at_eof() {
        return Err(q.cur.unexpected("end of query"));
    }
    QueryExpr::new(target, observed, intervened).map_err(|e| Diagnostic::at(start, e.to_string()))
}

/// Parses `I;J;K` where each part is a comma-separated list of variable
/// names; `K` may be empty.
pub fn parse_sets(text: &str, model: &ModelFile) -> Result<[VarSet; 3], Diagnostic> {
    let mut out = [VarSet::empty(); 3];
    let mut col = 1;
    let parts: Vec<&str> = text.split(';').collect();
    if parts.len() != 3 {
        return Err(Diagnostic::at(
            Pos { line: 1, column: 1 },
            format!("expected three `;`-separated sets, found {}", parts.len()),
        ));
    }
    for (k, part) in parts.iter().enumerate() {
        let mut c = col;
        for item in part.split(',') {
            let name = item.trim();
            let at = Pos { line: 1, column: c + item.len() - item.trim_start().len() };
            c += item.chars().count() + 1;
            if name.is_empty() {
                if part.trim().is_empty() {
                    continue;
                }
                return Err(Diagnostic::at(at, "empty variable name"));
            }
            let v = model
                .vars
                .iter()
                .position(|d| d.name == name)
                .ok_or_else(|| Diagnostic::at(at, format!("unknown variable `{name}`")))?;
            out[k] = out[k].with(Var(v));
        }
        col += part.chars().count() + 1;
    }
    if out[0].is_empty() || out[1].is_empty() {
        return Err(Diagnostic::at(Pos { line: 1, column: 1 }, "the first two sets must be nonempty"));
    }
    Ok(out)
}
