//! Reference join used to check the executors. Deliberately naive: nested
//! loops in atom listing order, no indexes, no plans, no sharing with the
//! engine code paths.

use crate::catalog::{Database, Value};
use crate::query::Query;

use super::ExecError;

/// Full natural-join result: one column per variable in discovery order,
/// rows sorted. Row multiplicity follows tuple multiplicity in the inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

pub fn oracle_join(q: &Query, db: &Database) -> Result<OracleResult, ExecError> {
    let schema = q.vars_in_order();
    let var_index = |v: &str| schema.iter().position(|s| s == v).expect("var discovered");
    let mut atoms = Vec::with_capacity(q.len());
    for atom in q.atoms() {
        let rel = db
            .get(&atom.relation)
            .ok_or_else(|| ExecError::MissingRelation(atom.relation.clone()))?;
        if rel.schema().len() != atom.vars.len() {
            return Err(ExecError::ArityMismatch {
                alias: atom.alias.clone(),
                relation: atom.relation.clone(),
                atom_arity: atom.vars.len(),
                relation_arity: rel.schema().len(),
            });
        }
        let cols: Vec<usize> = atom.vars.iter().map(|v| var_index(v)).collect();
        atoms.push((rel, cols));
    }

    let mut assignment: Vec<Option<Value>> = vec![None; schema.len()];
    let mut rows = Vec::new();
    scan(&atoms, 0, &mut assignment, &mut rows);
    rows.sort();
    Ok(OracleResult { schema, rows })
}

fn scan(
    atoms: &[(&crate::catalog::Relation, Vec<usize>)],
    k: usize,
    assignment: &mut Vec<Option<Value>>,
    rows: &mut Vec<Vec<Value>>,
) {
    if k == atoms.len() {
        rows.push(
            assignment
                .iter()
                .map(|v| v.clone().expect("every variable occurs in some atom"))
                .collect(),
        );
        return;
    }
    let (rel, cols) = &atoms[k];
    'tuples: for t in rel.tuples() {
        let mut bound_here = Vec::new();
        for (c, &slot) in cols.iter().enumerate() {
            match &assignment[slot] {
                Some(v) => {
                    if *v != t.values[c] {
                        for &b in &bound_here {
                            assignment[b] = None;
                        }
                        continue 'tuples;
                    }
                }
                None => {
                    assignment[slot] = Some(t.values[c].clone());
                    bound_here.push(slot);
                }
            }
        }
        scan(atoms, k + 1, assignment, rows);
        for &b in &bound_here {
            assignment[b] = None;
        }
    }
}

/// Reorders rows from one column order to another over the same variable
/// set; used to compare executor output with the oracle.
pub fn reorder_rows(
    from_schema: &[String],
    rows: &[Vec<Value>],
    to_schema: &[String],
) -> Result<Vec<Vec<Value>>, ExecError> {
    if from_schema.len() != to_schema.len() {
        return Err(ExecError::BadPlan(
            "cannot reorder rows between schemas of different width".to_string(),
        ));
    }
    let mut pick = Vec::with_capacity(to_schema.len());
    for attr in to_schema {
        match from_schema.iter().position(|a| a == attr) {
            Some(i) => pick.push(i),
            None => {
                return Err(ExecError::BadPlan(format!(
                    "column `{}` missing from source schema",
                    attr
                )))
            }
        }
    }
    Ok(rows
        .iter()
        .map(|r| pick.iter().map(|&i| r[i].clone()).collect())
        .collect())
}

pub fn sorted_rows(mut rows: Vec<Vec<Value>>) -> Vec<Vec<Value>> {
    rows.sort();
    rows
}
