//! Command-line front end.
//!
//! Exit codes: 0 when the command succeeds and every check passes, 1 when a
//! check fails (axiom violation, no representation, no identification,
//! cyclic causes), 2 on usage, parse or engine errors. With `--format json`
//! every run prints one envelope `{command, ok, result}` or
//! `{command, ok: false, error}` to stdout.

pub mod lex;
pub mod model;
pub mod query;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::axioms::{check_all, check_assumption1, AxiomReport, SweepLimits, DEFAULT_MAX_VARS};
use crate::beliefs::BeliefFamily;
use crate::docalc::{identify, Identification, QueryExpr, DEFAULT_DEPTH};
use crate::error::Error;
use crate::graph::Dag;
use crate::represent::{represents_family, theorem1_verdict};
use crate::space::Policy;
use lex::Diagnostic;
use model::{parse_model, ModelFile};
use query::{parse_query, parse_sets};

#[derive(Debug, Parser)]
#[command(name = "dtcausal", version, about = "Causal calculus over intervention-belief families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Model file (.cm).
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Tolerance for equality of beliefs.
    #[arg(long, value_name = "REAL")]
    tol: Option<f64>,
    /// Seed for random conditional tables when the model gives structure only.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a model file.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Decide d-separation of I and J given K in the model graph.
    Dsep {
        #[command(flatten)]
        common: Common,
        /// Sets as "I;J;K", members separated by commas.
        #[arg(long)]
        sets: String,
    },
    /// Check the causal axioms and full support on the model's family.
    Axioms {
        #[command(flatten)]
        common: Common,
        /// Largest number of variables the sweeps accept.
        #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
        max_vars: usize,
    },
    /// Recover the causal graph from the model's family.
    Discover {
        #[command(flatten)]
        common: Common,
    },
    /// Check that the model graph represents the model's family.
    Represent {
        #[command(flatten)]
        common: Common,
    },
    /// Rewrite an interventional query into observational terms.
    Identify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Also evaluate the formula and compare it with the do-probability.
        #[arg(long)]
        check: bool,
    },
    /// Evaluate a query numerically.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        query: String,
    },
    /// Print the model graph, or the recovered causal graph, as Graphviz.
    ExportDot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        causal: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Dsep { .. } => "dsep",
            Command::Axioms { .. } => "axioms",
            Command::Discover { .. } => "discover",
            Command::Represent { .. } => "represent",
            Command::Identify { .. } => "identify",
            Command::Eval { .. } => "eval",
            Command::ExportDot { .. } => "export-dot",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate { common }
            | Command::Dsep { common, .. }
            | Command::Axioms { common, .. }
            | Command::Discover { common }
            | Command::Represent { common }
            | Command::Identify { common, .. }
            | Command::Eval { common, .. }
            | Command::ExportDot { common, .. } => common,
        }
    }
}

/// Why a run stopped before producing a report.
#[derive(Debug)]
enum Failure {
    Io { path: PathBuf, message: String },
    Parse { source: String, diag: Diagnostic },
    Engine(Error),
}

impl Failure {
    fn to_json(&self) -> Value {
        match self {
            Failure::Io { path, message } => {
                json!({"kind": "io", "message": format!("{}: {message}", path.display())})
            }
            Failure::Parse { source, diag } => json!({
                "kind": "parse",
                "message": diag.message,
                "source": source,
                "line": diag.line,
                "column": diag.column,
            }),
            Failure::Engine(e) => json!({"kind": "engine", "message": e.to_string()}),
        }
    }

    fn describe(&self) -> String {
        match self {
            Failure::Io { path, message } => format!("{}: {message}", path.display()),
            Failure::Parse { source, diag } => format!("{source}:{diag}"),
            Failure::Engine(e) => e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

/// A finished command: its verdict, the JSON result and the text lines.
struct Report {
    ok: bool,
    result: Value,
    text: Vec<String>,
}

/// Runs the tool on `args` (including the program name), writing reports to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let name = cli.command.name();
    let format = cli.command.common().format;
    match execute(&cli.command) {
        Ok(r) => {
            match format {
                Format::Text => {
                    for line in &r.text {
                        let _ = writeln!(out, "{line}");
                    }
                }
                Format::Json => {
                    let env = json!({"command": name, "ok": r.ok, "result": r.result});
                    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&env).unwrap());
                }
            }
            if r.ok {
                0
            } else {
                1
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.describe());
            if format == Format::Json {
                let env = json!({"command": name, "ok": false, "error": f.to_json()});
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&env).unwrap());
            }
            2
        }
    }
}

fn load(path: &Path) -> Result<ModelFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse_model(&text).map_err(|diag| Failure::Parse { source: path.display().to_string(), diag })
}

fn family(m: &ModelFile, c: &Common) -> Result<BeliefFamily, Failure> {
    let fam = m.family(c.seed)?;
    Ok(match c.tol {
        Some(t) if t > 0.0 && t.is_finite() => fam.with_tol(t),
        Some(t) => return Err(Error::Precondition(format!("tolerance must be positive, got {t}")).into()),
        None => fam,
    })
}

fn query_arg(text: &str, m: &ModelFile) -> Result<QueryExpr, Failure> {
    parse_query(text, m).map_err(|diag| Failure::Parse { source: "--query".into(), diag })
}

fn edge_list(g: &Dag) -> Vec<[String; 2]> {
    g.edges().into_iter().map(|(a, b)| [g.name(a).to_string(), g.name(b).to_string()]).collect()
}

fn set_text(names: &[String]) -> String {
    format!("{{{}}}", names.join(","))
}

fn execute(cmd: &Command) -> Result<Report, Failure> {
    let c = cmd.common();
    let m = load(&c.model)?;
    let g = m.graph();
    match cmd {
        Command::Validate { .. } => validate(&m, &g),
        Command::Dsep { sets, .. } => {
            let [i, j, k] = parse_sets(sets, &m).map_err(|diag| Failure::Parse { source: "--sets".into(), diag })?;
            let sep = g.d_separates(k, i, j)?;
            Ok(Report {
                ok: true,
                result: json!({
                    "i": g.names_of(i), "j": g.names_of(j), "k": g.names_of(k), "d_separated": sep,
                }),
                text: vec![format!("d-separated: {sep}")],
            })
        }
        Command::Axioms { max_vars, .. } => axioms(&family(&m, c)?, *max_vars),
        Command::Discover { .. } => discover(&family(&m, c)?),
        Command::Represent { .. } => represent(&g, &family(&m, c)?),
        Command::Identify { query, depth, check, .. } => {
            let q = query_arg(query, &m)?;
            identify_cmd(&m, c, &g, &q, *depth, *check)
        }
        Command::Eval { query, .. } => {
            let q = query_arg(query, &m)?;
            let value = do_probability(&m, c, &q)?;
            let shown = q.display(&m.space());
            Ok(Report {
                ok: true,
                result: json!({"query": shown, "value": value}),
                text: vec![format!("{shown} = {value}")],
            })
        }
        Command::ExportDot { causal, .. } => {
            let dot = if *causal {
                match family(&m, c)?.causal_graph() {
                    Ok(cg) => cg.to_dot(),
                    Err(Error::Cycle(cycle)) => {
                        return Ok(Report {
                            ok: false,
                            result: json!({"causal": true, "dot": null, "cycle": cycle}),
                            text: vec![format!("causal relation is cyclic: {}", cycle.join(" -> "))],
                        })
                    }
                    Err(e) => return Err(e.into()),
                }
            } else {
                g.to_dot()
            };
            Ok(Report {
                ok: true,
                result: json!({"causal": causal, "dot": dot, "cycle": null}),
                text: vec![dot.trim_end().to_string()],
            })
        }
    }
}

fn validate(m: &ModelFile, g: &Dag) -> Result<Report, Failure> {
    let vars: Vec<Value> =
        m.vars.iter().map(|d| json!({"name": d.name, "cardinality": d.card, "labels": d.labels})).collect();
    let source = if !m.beliefs.is_empty() {
        if m.generate_markov {
            "belief blocks + markov"
        } else {
            "belief blocks"
        }
    } else if !m.cpts.is_empty() {
        "markov"
    } else {
        "structure only"
    };
    let text = vec![
        format!(
            "model {}: {} variables, {} edges, {} cpts, {} belief blocks",
            m.name,
            m.vars.len(),
            g.edge_count(),
            m.cpts.len(),
            m.beliefs.len()
        ),
        format!("family: {source}"),
        "valid".to_string(),
    ];
    Ok(Report {
        ok: true,
        result: json!({
            "model": m.name,
            "variables": vars,
            "edges": edge_list(g),
            "cpts": m.cpts.len(),
            "belief_blocks": m.beliefs.len(),
            "family": source,
        }),
        text,
    })
}

fn report_lines(r: &AxiomReport, label: &str, out: &mut Vec<String>) {
    if r.pass {
        out.push(format!("{label}: pass"));
        return;
    }
    out.push(format!("{label}: FAIL ({} violations)", r.violation_count));
    for w in r.violations.iter().take(3) {
        let mut parts: Vec<String> = w.sets.iter().map(|(k, v)| format!("{k}={}", set_text(v))).collect();
        if let Some(at) = &w.at {
            parts.push(format!("at {at}"));
        }
        if let (Some(l), Some(r)) = (w.lhs, w.rhs) {
            parts.push(format!("{l:.6} vs {r:.6}"));
        }
        out.push(format!("  {}", parts.join(" ")));
    }
}

fn axioms(fam: &BeliefFamily, max_vars: usize) -> Result<Report, Failure> {
    let mut reports = check_all(fam, true, SweepLimits { max_vars })?;
    reports.push(check_assumption1(fam));
    let mut text = Vec::new();
    for r in &reports {
        let label = if r.axiom == "assumption1" { "full support".to_string() } else { format!("axiom {}", r.axiom) };
        report_lines(r, &label, &mut text);
    }
    if reports.len() == 2 {
        text.push("causal relation is cyclic; the remaining axioms were not checked".into());
    }
    let ok = reports.iter().all(|r| r.pass);
    text.push(if ok { "all checks pass".into() } else { "some checks fail".into() });
    Ok(Report { ok, result: json!({"pass": ok, "reports": reports}), text })
}

fn discover(fam: &BeliefFamily) -> Result<Report, Failure> {
    let space = fam.space();
    match fam.causal_graph() {
        Ok(cg) => {
            let mut text = vec!["causal graph:".to_string()];
            text.extend(edge_list(&cg).iter().map(|[a, b]| format!("  {a} -> {b}")));
            let mut causes = serde_json::Map::new();
            let mut indirect = serde_json::Map::new();
            for v in space.vars() {
                let direct = space.names_of(cg.parents(v));
                let ica = space.names_of(fam.indirect_causes(v)?);
                text.push(format!("{}: causes {} indirect {}", space.name(v), set_text(&direct), set_text(&ica)));
                causes.insert(space.name(v).to_string(), json!(direct));
                indirect.insert(space.name(v).to_string(), json!(ica));
            }
            Ok(Report {
                ok: true,
                result: json!({
                    "acyclic": true, "edges": edge_list(&cg), "causes": causes,
                    "indirect_causes": indirect, "cycle": null,
                }),
                text,
            })
        }
        Err(Error::Cycle(cycle)) => Ok(Report {
            ok: false,
            result: json!({
                "acyclic": false, "edges": null, "causes": null, "indirect_causes": null, "cycle": cycle,
            }),
            text: vec![format!("causal relation is cyclic: {}", cycle.join(" -> "))],
        }),
        Err(e) => Err(e.into()),
    }
}

fn represent(g: &Dag, fam: &BeliefFamily) -> Result<Report, Failure> {
    let v = represents_family(g, fam)?;
    let t1 = theorem1_verdict(fam)?;
    let matches = t1.dag.as_ref() == Some(g);
    let mut text = vec![format!("represents: {}", v.represents)];
    for f in v.failures.iter().take(5) {
        text.push(format!("  {}: {}", f.clause, f.witness));
    }
    text.push(format!("causal graph equals model graph: {matches}"));
    text.push(format!("axioms 2-4: {}", if t1.axioms_pass { "pass" } else { "fail" }));
    Ok(Report {
        ok: v.represents,
        result: json!({
            "represents": v.represents,
            "failures": v.failures,
            "causal_graph_matches": matches,
            "axioms_pass": t1.axioms_pass,
            "causal_graph_represents": t1.represents,
            "agree": t1.agree,
        }),
        text,
    })
}

/// `μ(target | observed, do(intervened))` from the Markov model when the
/// file has one, else from the family's table for the policy.
fn do_probability(m: &ModelFile, c: &Common, q: &QueryExpr) -> Result<f64, Failure> {
    if let Some(mm) = m.markov_or_seeded(c.seed)? {
        if m.beliefs.is_empty() {
            return Ok(mm.do_probability(q)?);
        }
    }
    let fam = family(m, c)?;
    let t = fam.table(&Policy(q.intervened.clone()));
    let z = t.prob(&q.observed)?;
    if z <= 0.0 {
        return Err(Error::ZeroProbability(fam.space().display(&q.observed)).into());
    }
    Ok(t.prob(&q.observed.merged(&q.target))? / z)
}

fn identify_cmd(
    m: &ModelFile,
    c: &Common,
    g: &Dag,
    q: &QueryExpr,
    depth: usize,
    check: bool,
) -> Result<Report, Failure> {
    let shown = q.display(&m.space());
    match identify(g, q, depth)? {
        Identification::Identified { formula, trace } => {
            let rendered = formula.render(g);
            let mut text = vec![rendered.clone()];
            let mut ok = true;
            let mut check_json = Value::Null;
            if check {
                let joint = match m.markov_or_seeded(c.seed)? {
                    Some(mm) if m.beliefs.is_empty() => mm.joint(),
                    _ => family(m, c)?.observational().clone(),
                };
                let value = formula.evaluate(&joint)?;
                let direct = do_probability(m, c, q)?;
                let tol = c.tol.unwrap_or(crate::dist::DEFAULT_TOL);
                let consistent = (value - direct).abs() <= tol;
                ok = consistent;
                text.push(format!("formula value: {value}"));
                text.push(format!("do-probability: {direct}"));
                text.push(format!("consistent: {consistent}"));
                check_json = json!({"formula_value": value, "do_probability": direct, "consistent": consistent});
            }
            Ok(Report {
                ok,
                result: json!({
                    "query": shown, "identified": true, "formula": rendered, "trace": trace,
                    "depth_limit": depth, "states": null, "check": check_json,
                }),
                text,
            })
        }
        Identification::NotIdentified { depth_limit, states } => Ok(Report {
            ok: false,
            result: json!({
                "query": shown, "identified": false, "formula": null, "trace": [],
                "depth_limit": depth_limit, "states": states, "check": null,
            }),
            text: vec![format!("not identified within depth {depth_limit} ({states} states explored)")],
        }),
    }
}
