//! One-pass executor: a semijoin sweep, then a join over the reduced
//! relations in reverse elimination order.

use std::collections::HashSet;
use std::time::Instant;

use crate::catalog::{Database, HashIndex, Relation, Schema, Value};
use crate::planner::compile_plan;
use crate::query::{find_parent_in, Query};

use super::hj::{drive, ensure_built};
use super::{build_exec_plan, ExecError, ExecStats, OutputSink};

/// Keeps the tuples of `p` that join with some tuple of `r` on their shared
/// attributes, plus the scan cost (one per tuple read). An empty side
/// short-circuits to an empty result at zero scans.
pub fn semijoin(p: &Relation, r: &Relation) -> (Relation, u64) {
    let empty = || Relation::new(p.name().to_string(), p.schema().clone());
    if p.is_empty() || r.is_empty() {
        return (empty(), 0);
    }
    let shared: Vec<&str> = p
        .schema()
        .attrs()
        .iter()
        .filter(|a| r.schema().contains(a))
        .map(String::as_str)
        .collect();
    let p_cols: Vec<usize> = shared.iter().map(|a| p.schema().position(a).unwrap()).collect();
    let r_cols: Vec<usize> = shared.iter().map(|a| r.schema().position(a).unwrap()).collect();
    let mut seen: HashSet<Vec<Value>> = HashSet::new();
    for t in r.tuples() {
        seen.insert(r_cols.iter().map(|&c| t.values[c].clone()).collect());
    }
    let mut kept = empty();
    for t in p.tuples() {
        let key: Vec<Value> = p_cols.iter().map(|&c| t.values[c].clone()).collect();
        if seen.contains(&key) {
            kept.push_row(t.values.clone(), false).expect("same arity");
        }
    }
    (kept, (p.len() + r.len()) as u64)
}

/// `order` eliminates atoms one at a time; each eliminated atom semijoin-
/// reduces its parent in what remains of the query. Atoms without a parent
/// at their turn reduce nothing and are simply dropped, so any permutation
/// runs; only an elimination order (see `is_gyo_order`, reversed) gives
/// the full guarantee that the join phase never fails a probe.
pub fn run_ya(
    q: &Query,
    order: &[usize],
    db: &Database,
    sink: &mut dyn OutputSink,
) -> Result<ExecStats, ExecError> {
    let start = Instant::now();
    let mut seen = vec![false; q.len()];
    for &a in order {
        if a >= q.len() || seen[a] {
            return Err(ExecError::InvalidOrder(
                "order is not a permutation of the query atoms".to_string(),
            ));
        }
        seen[a] = true;
    }
    if order.len() != q.len() {
        return Err(ExecError::InvalidOrder(
            "order does not cover every query atom".to_string(),
        ));
    }

    let mut stats = ExecStats::default();
    let mut bound: Vec<Relation> = Vec::with_capacity(q.len());
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
        stats.input_count += rel.len() as u64;
        let schema = Schema::new(atom.vars.clone())?;
        bound.push(rel.renamed(atom.alias.clone(), schema)?);
    }

    // Reduction pass. The shrinking query keeps the original atom listing
    // order; only membership changes.
    let mut remaining: Vec<usize> = (0..q.len()).collect();
    for &a in order {
        let parent = find_parent_in(q, &remaining, a);
        remaining.retain(|&x| x != a);
        if let Some(p) = parent {
            let (reduced, scans) = semijoin(&bound[p], &bound[a]);
            stats.semijoin_scans += scans;
            bound[p] = reduced;
        }
    }

    // Join phase over reverse elimination order. Indexes build lazily so
    // steps below an empty prefix cost nothing.
    let join_order: Vec<usize> = order.iter().rev().copied().collect();
    let plan = compile_plan(q, &join_order).map_err(|e| ExecError::BadPlan(e.to_string()))?;
    let exec = build_exec_plan(q, &plan, |atom| Ok(&bound[atom]))?;
    let mut slots: Vec<Option<HashIndex<'_>>> = (0..exec.steps.len()).map(|_| None).collect();
    ensure_built(&exec.steps, &mut slots, 0, &mut stats);
    drive(&exec, &mut slots, &mut stats, sink);

    stats.wall_time = start.elapsed();
    stats.check_invariants();
    Ok(stats)
}
