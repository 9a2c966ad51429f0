#![allow(dead_code)]

pub mod schema;

use dtcausal::axioms::parity_perturbation;
use dtcausal::beliefs::BeliefFamily;
use dtcausal::dist::JointTable;
use dtcausal::docalc::MarkovModel;
use dtcausal::graph::{enumerate_dags, Dag};
use dtcausal::space::{Policy, VarSet, VariableSpace};

pub fn binary_space(names: &[&str]) -> VariableSpace {
    VariableSpace::binary(names).unwrap()
}

/// A→E, A→L, E→L.
pub fn blake() -> (VariableSpace, Dag) {
    let names = ["A", "E", "L"];
    (binary_space(&names), Dag::from_names(&names, &[("A", "E"), ("A", "L"), ("E", "L")]).unwrap())
}

/// E→A→L.
pub fn charlie() -> (VariableSpace, Dag) {
    let names = ["E", "A", "L"];
    (binary_space(&names), Dag::from_names(&names, &[("E", "A"), ("A", "L")]).unwrap())
}

/// A→E→L.
pub fn chain_ael() -> (VariableSpace, Dag) {
    let names = ["A", "E", "L"];
    (binary_space(&names), Dag::from_names(&names, &[("A", "E"), ("E", "L")]).unwrap())
}

/// A→B→C.
pub fn chain() -> (VariableSpace, Dag) {
    let names = ["A", "B", "C"];
    (binary_space(&names), Dag::from_names(&names, &[("A", "B"), ("B", "C")]).unwrap())
}

pub fn screening_dag() -> (VariableSpace, Dag) {
    let names = ["a", "b", "w", "j", "i", "k", "z"];
    let edges = [("a", "b"), ("a", "j"), ("w", "b"), ("w", "i"), ("j", "i"), ("i", "k"), ("k", "z")];
    (binary_space(&names), Dag::from_names(&names, &edges).unwrap())
}

pub fn screen_off_dag() -> (VariableSpace, Dag) {
    let names = ["b", "i", "c", "j", "k"];
    let edges = [("b", "i"), ("i", "c"), ("c", "j"), ("b", "j"), ("c", "k"), ("j", "k")];
    (binary_space(&names), Dag::from_names(&names, &edges).unwrap())
}

pub fn four_node_dag() -> Dag {
    Dag::from_names(&["I", "J0", "J1", "K"], &[("J1", "K"), ("K", "J0"), ("J0", "I"), ("J1", "I")]).unwrap()
}

/// μ(A) μ(E|A) μ(L|A) with fixed tables.
pub fn fork_model() -> MarkovModel {
    let names = ["A", "E", "L"];
    let g = Dag::from_names(&names, &[("A", "E"), ("A", "L")]).unwrap();
    MarkovModel::new(
        binary_space(&names),
        g,
        vec![
            vec![vec![0.3, 0.7]],
            vec![vec![0.8, 0.2], vec![0.25, 0.75]],
            vec![vec![0.6, 0.4], vec![0.15, 0.85]],
        ],
    )
    .unwrap()
}

pub fn random_model(space: &VariableSpace, g: &Dag, seed: u64) -> MarkovModel {
    MarkovModel::random_seeded(space.clone(), g.clone(), seed).unwrap()
}

pub fn dags3() -> Vec<Dag> {
    enumerate_dags(&["X0", "X1", "X2"])
}

pub fn dags4() -> Vec<Dag> {
    enumerate_dags(&["X0", "X1", "X2", "X3"])
}

pub fn space_of(g: &Dag) -> VariableSpace {
    let names: Vec<&str> = g.names().iter().map(|s| s.as_str()).collect();
    binary_space(&names)
}

/// The family of `m` with the unintervened table replaced by a parity
/// perturbation of half its smallest cell. Pairwise marginals stay put but
/// the table stops factorizing along chains.
pub fn perturbed_family(m: &MarkovModel) -> BeliefFamily {
    let fam = m.family().unwrap();
    let t = fam.observational().clone();
    let eps = 0.5 * t.mass().iter().cloned().fold(f64::INFINITY, f64::min);
    let p = parity_perturbation(&t, eps).unwrap();
    fam.with_table(&Policy::observe(), p).unwrap()
}

/// Unintervened table from `m1`, every other policy from `m2`.
pub fn mismatched_family(m1: &MarkovModel, m2: &MarkovModel) -> BeliefFamily {
    m2.family().unwrap().with_table(&Policy::observe(), m1.joint()).unwrap()
}

/// Residual of the unintervened table against the graph's factorization.
pub fn observational_residual(fam: &BeliefFamily, g: &Dag) -> f64 {
    fam.observational().chain_factorization_residual(&g.parent_sets()).unwrap()
}

/// Every assignment of nodes to {I, J, K, unused} with I and J nonempty.
pub fn set_triples(n: usize) -> Vec<(VarSet, VarSet, VarSet)> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(n as u32) {
        let mut sets = [VarSet::empty(); 4];
        let mut c = code;
        for v in 0..n {
            sets[c % 4] = sets[c % 4].with(dtcausal::space::Var(v));
            c /= 4;
        }
        if !sets[0].is_empty() && !sets[1].is_empty() {
            out.push((sets[0], sets[1], sets[2]));
        }
    }
    out
}

/// Every assignment of nodes to {I0, I1, I2, I3, unused} with I0, I2 nonempty.
pub fn rule_quadruples(n: usize) -> Vec<[VarSet; 4]> {
    let mut out = Vec::new();
    for code in 0..5usize.pow(n as u32) {
        let mut sets = [VarSet::empty(); 5];
        let mut c = code;
        for v in 0..n {
            sets[c % 5] = sets[c % 5].with(dtcausal::space::Var(v));
            c /= 5;
        }
        if !sets[0].is_empty() && !sets[2].is_empty() {
            out.push([sets[0], sets[1], sets[2], sets[3]]);
        }
    }
    out
}

pub fn table(space: &VariableSpace, mass: Vec<f64>) -> JointTable {
    JointTable::over(space, space.all(), mass).unwrap()
}
