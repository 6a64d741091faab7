//! Deterministic instance generators for tests, benchmarks, and the CLI.
//!
//! Every generator is a pure function of its arguments: the same spec
//! produces byte-identical relations, tuple order included.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{Database, Relation, Schema, Value};
use crate::query::{Atom, Query};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Example1,
    Box,
    RandomAcyclic,
    Star,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Family, String> {
        match s {
            "example1" => Ok(Family::Example1),
            "box" => Ok(Family::Box),
            "random_acyclic" => Ok(Family::RandomAcyclic),
            "star" => Ok(Family::Star),
            other => Err(format!(
                "unknown family `{}` (expected example1, box, random_acyclic, or star)",
                other
            )),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WorkloadSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    /// Fraction of each non-root relation replaced by tuples that join
    /// with nothing. Random families only.
    pub dangling_fraction: f64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("size must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.dangling_fraction) {
            return Err("dangling fraction must lie in [0, 1]".to_string());
        }
        Ok(())
    }
}

fn atom(alias: &str, vars: &[&str]) -> Atom {
    Atom::new(alias, alias, vars.to_vec()).expect("generator atoms are well formed")
}

fn relation(name: &str, attrs: &[&str], rows: Vec<Vec<i64>>, dedup: bool) -> Relation {
    let schema = Schema::new(attrs.to_vec()).expect("generator schemas are well formed");
    let rows = rows
        .into_iter()
        .map(|r| r.into_iter().map(Value::Int).collect())
        .collect();
    Relation::from_rows(name, schema, rows, dedup).expect("generator rows match schema")
}

/// Four-atom path-with-branch query whose result is empty for every N: the
/// U tuples carry y = 0 while everything else pins y = 1. Probe behavior
/// has closed forms on the plan [R, S, T, U], which makes this the scaling
/// workload.
pub fn gen_example1(n: usize) -> (Query, Database) {
    assert!(n >= 1, "size must be at least 1");
    let q = Query::new(vec![
        atom("R", &["i", "x"]),
        atom("S", &["x", "y", "j"]),
        atom("T", &["y", "k"]),
        atom("U", &["y", "l"]),
    ])
    .expect("fixed query is well formed");
    let idx = || (1..=n as i64).collect::<Vec<_>>();
    let mut db = Database::new();
    let mut add = |rel: Relation| db.insert(rel).expect("distinct names");
    add(relation("R", &["i", "x"], idx().into_iter().map(|i| vec![i, 1]).collect(), false));
    add(relation(
        "S",
        &["x", "y", "j"],
        idx().into_iter().map(|j| vec![1, 1, j]).collect(),
        false,
    ));
    add(relation("T", &["y", "k"], idx().into_iter().map(|k| vec![1, k]).collect(), false));
    add(relation("U", &["y", "l"], idx().into_iter().map(|l| vec![0, l]).collect(), false));
    (q, db)
}

/// Cyclic query: four R atoms form a 4-cycle over x1..x4 and four S atoms
/// tie each corner to a shared center y. Values are uniform over [1, N];
/// duplicate rows collapse, so relations hold at most N tuples.
pub fn gen_box(n: usize, seed: u64) -> (Query, Database) {
    gen_box_inner(n, seed, false)
}

/// Same shape and seed stream as `gen_box`, but S1's center column is
/// forced to 0 so the result is empty: every other atom keeps y ≥ 1.
pub fn gen_box_mismatched(n: usize, seed: u64) -> (Query, Database) {
    gen_box_inner(n, seed, true)
}

fn gen_box_inner(n: usize, seed: u64, mismatch: bool) -> (Query, Database) {
    assert!(n >= 1, "size must be at least 1");
    let q = box_query();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = Database::new();
    let names = ["R1", "R2", "R3", "R4", "S1", "S2", "S3", "S4"];
    let attrs: [[&str; 2]; 8] = [
        ["x1", "x2"],
        ["x2", "x3"],
        ["x3", "x4"],
        ["x4", "x1"],
        ["x1", "y"],
        ["x2", "y"],
        ["x3", "y"],
        ["x4", "y"],
    ];
    for (name, cols) in names.iter().zip(attrs.iter()) {
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let a = rng.random_range(1..=n as i64);
            let b = rng.random_range(1..=n as i64);
            if mismatch && *name == "S1" {
                rows.push(vec![a, 0]);
            } else {
                rows.push(vec![a, b]);
            }
        }
        db.insert(relation(name, cols, rows, true)).expect("distinct names");
    }
    (q, db)
}

pub fn box_query() -> Query {
    Query::new(vec![
        atom("R1", &["x1", "x2"]),
        atom("R2", &["x2", "x3"]),
        atom("R3", &["x3", "x4"]),
        atom("R4", &["x4", "x1"]),
        atom("S1", &["x1", "y"]),
        atom("S2", &["x2", "y"]),
        atom("S3", &["x3", "y"]),
        atom("S4", &["x4", "y"]),
    ])
    .expect("fixed query is well formed")
}

/// The one convolution text the box query ships with: corner atoms hang
/// off the S tree through its root.
pub fn box_convolution_text() -> &'static str {
    "(root:(S1 S2 S3 S4) R1 R2 R3 R4)"
}

/// Random join tree of 2..=6 atoms with at most 3 variables per atom.
/// Each relation is the full cross product of its variables' domains,
/// so with `dangling_fraction` 0 every tuple of every relation reaches
/// the output and no probe can fail under any plan. A positive fraction
/// replaces that share of each non-root relation with tuples whose
/// parent-shared variable takes a globally unique negative value.
///
/// Returns the query, the database, and a join order (the atom listing)
/// whose reverse is a valid elimination order.
pub fn gen_random_acyclic(spec: &WorkloadSpec) -> (Query, Database, Vec<usize>) {
    spec.validate().expect("spec invariants hold");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cap = spec.n.min(8);

    // Tree shape: atom 0 is the root; every later atom shares a nonempty
    // subset of an earlier atom's variables and may add fresh ones.
    let n_atoms = rng.random_range(2..=6);
    let mut atom_vars: Vec<Vec<String>> = Vec::with_capacity(n_atoms);
    let mut tree_parent: Vec<Option<usize>> = Vec::with_capacity(n_atoms);
    let mut next_var = 0usize;
    let fresh = |next_var: &mut usize| {
        let v = format!("v{}", next_var);
        *next_var += 1;
        v
    };
    let root_width = rng.random_range(1..=3);
    atom_vars.push((0..root_width).map(|_| fresh(&mut next_var)).collect());
    tree_parent.push(None);
    for k in 1..n_atoms {
        let p = rng.random_range(0..k);
        let p_vars = atom_vars[p].clone();
        let mut picks: Vec<usize> = (0..p_vars.len()).collect();
        picks.shuffle(&mut rng);
        let shared = rng.random_range(1..=p_vars.len().min(3));
        let mut vars: Vec<String> = picks[..shared].iter().map(|&i| p_vars[i].clone()).collect();
        let extra = rng.random_range(0..=(3 - shared.min(3)));
        for _ in 0..extra {
            vars.push(fresh(&mut next_var));
        }
        atom_vars.push(vars);
        tree_parent.push(Some(p));
    }

    // Domain sizes: a variable gets two values if every atom containing it
    // stays within the tuple cap and the overall output stays small.
    let mut domain: Vec<usize> = vec![1; next_var];
    let var_id = |v: &str| v[1..].parse::<usize>().expect("generated var name");
    let mut two_valued = 0;
    for v in 0..next_var {
        if two_valued >= 4 {
            break;
        }
        domain[v] = 2;
        let fits = atom_vars.iter().all(|vars| {
            vars.iter().map(|x| domain[var_id(x)]).product::<usize>() <= cap
        });
        if fits {
            two_valued += 1;
        } else {
            domain[v] = 1;
        }
    }

    let q = Query::new(
        atom_vars
            .iter()
            .enumerate()
            .map(|(i, vars)| {
                Atom::new(format!("R{}", i), format!("R{}", i), vars.clone())
                    .expect("generated vars are distinct")
            })
            .collect(),
    )
    .expect("generated query is well formed");

    let mut db = Database::new();
    let mut poison = -1i64;
    for (i, vars) in atom_vars.iter().enumerate() {
        let mut rows: Vec<Vec<i64>> = vec![vec![]];
        for v in vars {
            let d = domain[var_id(v)] as i64;
            rows = rows
                .iter()
                .flat_map(|r| {
                    (1..=d).map(move |val| {
                        let mut row = r.clone();
                        row.push(val);
                        row
                    })
                })
                .collect();
        }
        if let Some(p) = tree_parent[i] {
            let count = (spec.dangling_fraction * rows.len() as f64).round() as usize;
            let col = vars
                .iter()
                .position(|v| atom_vars[p].contains(v))
                .expect("child shares a variable with its parent");
            let mut order: Vec<usize> = (0..rows.len()).collect();
            order.shuffle(&mut rng);
            for &r in order.iter().take(count) {
                rows[r][col] = poison;
                poison -= 1;
            }
        }
        let attrs: Vec<&str> = vars.iter().map(String::as_str).collect();
        db.insert(relation(&format!("R{}", i), &attrs, rows, false))
            .expect("distinct names");
    }

    let order = (0..n_atoms).collect();
    (q, db, order)
}

/// Fact table joined to three dimensions on separate keys. Dimensions hold
/// keys {1, 2}; a `dangling_fraction` share of fact rows points one key at
/// the missing values {3, 4} instead. The missing pool is tiny on purpose:
/// failing keys repeat, which is the situation key memoization pays off in.
pub fn gen_star(spec: &WorkloadSpec) -> (Query, Database) {
    spec.validate().expect("spec invariants hold");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = Query::new(vec![
        atom("F", &["k1", "k2", "k3"]),
        atom("D1", &["k1", "d1"]),
        atom("D2", &["k2", "d2"]),
        atom("D3", &["k3", "d3"]),
    ])
    .expect("fixed query is well formed");

    let n = spec.n;
    let mut fact: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..3).map(|_| rng.random_range(1..=2)).collect())
        .collect();
    let count = (spec.dangling_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &r in order.iter().take(count) {
        let dim = rng.random_range(0..3);
        fact[r][dim] = rng.random_range(3..=4);
    }

    let mut db = Database::new();
    db.insert(relation("F", &["k1", "k2", "k3"], fact, false))
        .expect("distinct names");
    let dims = [("D1", ["k1", "d1"]), ("D2", ["k2", "d2"]), ("D3", ["k3", "d3"])];
    for (i, (name, attrs)) in dims.into_iter().enumerate() {
        let rows = vec![
            vec![1, (i as i64 + 1) * 10 + 1],
            vec![2, (i as i64 + 1) * 10 + 2],
        ];
        db.insert(relation(name, &attrs, rows, false)).expect("distinct names");
    }
    (q, db)
}
