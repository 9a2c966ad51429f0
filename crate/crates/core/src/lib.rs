//! Discrete causal calculus over intervention-belief families.
//!
//! A family assigns a belief (a probability table over the free variables)
//! to every intervention policy. From such a family the crate derives the
//! causes relation and its graph, checks the causal axioms, decides whether a
//! DAG represents the family, builds Markov models and their do-probabilities,
//! and rewrites interventional queries into observational formulas.

pub mod axioms;
pub mod cli;
pub mod beliefs;
pub mod dist;
pub mod docalc;
pub mod error;
pub mod graph;
pub mod par;
pub mod represent;
pub mod space;

pub use beliefs::{BeliefFamily, Utility};
pub use dist::JointTable;
pub use docalc::{identify, Formula, Identification, MarkovModel, QueryExpr};
pub use error::{Error, Result};
pub use graph::Dag;
pub use space::{Act, Assignment, Policy, Var, VarSet, VariableSpace};
