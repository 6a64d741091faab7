//! Pipelined binary hash join over a left-deep linear plan.

use std::time::Instant;

use crate::catalog::{Database, HashIndex, Value};
use crate::planner::Plan;
use crate::query::Query;

use super::{build_exec_plan, gather, resolve_in_db, ExecError, ExecPlan, ExecStats, ExecStep, OutputSink};

/// Runs the plan left to right, one probe per step entry. A failed probe
/// abandons only the current binding; nothing is learned from it.
pub fn run_hj(
    q: &Query,
    plan: &Plan,
    db: &Database,
    sink: &mut dyn OutputSink,
) -> Result<ExecStats, ExecError> {
    let start = Instant::now();
    let exec = build_exec_plan(q, plan, resolve_in_db(q, db))?;
    let mut stats = ExecStats {
        input_count: exec.steps.iter().map(|s| s.rel.len() as u64).sum(),
        ..ExecStats::default()
    };
    let mut slots: Vec<Option<HashIndex<'_>>> = (0..exec.steps.len()).map(|_| None).collect();
    for i in 0..exec.steps.len() {
        ensure_built(&exec.steps, &mut slots, i, &mut stats);
    }
    drive(&exec, &mut slots, &mut stats, sink);
    stats.wall_time = start.elapsed();
    stats.check_invariants();
    Ok(stats)
}

/// Index slots are filled on first use so the one-pass executor only pays
/// build scans for steps its join phase actually reaches.
pub(crate) fn ensure_built<'r>(
    steps: &[ExecStep<'r>],
    slots: &mut [Option<HashIndex<'r>>],
    i: usize,
    stats: &mut ExecStats,
) {
    if slots[i].is_none() {
        stats.build_scans += steps[i].rel.len() as u64;
        slots[i] = Some(HashIndex::build_on_columns(steps[i].rel, steps[i].key_cols.clone()));
    }
}

pub(crate) fn drive<'r>(
    exec: &ExecPlan<'r>,
    slots: &mut [Option<HashIndex<'r>>],
    stats: &mut ExecStats,
    sink: &mut dyn OutputSink,
) {
    sink.begin(&exec.out_schema);
    let mut binding: Vec<Value> = Vec::with_capacity(exec.out_schema.len());
    descend(&exec.steps, slots, 0, &mut binding, stats, sink);
}

fn descend<'r>(
    steps: &[ExecStep<'r>],
    slots: &mut [Option<HashIndex<'r>>],
    i: usize,
    binding: &mut Vec<Value>,
    stats: &mut ExecStats,
    sink: &mut dyn OutputSink,
) {
    ensure_built(steps, slots, i, stats);
    let step = &steps[i];
    let key = gather(binding, &step.key_src);
    stats.probes += 1;
    let index = slots[i].as_ref().expect("slot built above");
    let bucket = match index.probe(&key) {
        Some(b) => b,
        None => {
            if i > 0 {
                stats.probe_failures += 1;
            }
            return;
        }
    };
    let depth = binding.len();
    let mut cursor = 0;
    while let Some((entry, tuple)) = slots[i].as_ref().expect("slot built above").next_live(bucket, cursor) {
        cursor = entry + 1;
        for &c in &step.append_cols {
            binding.push(tuple.values[c].clone());
        }
        if i + 1 == steps.len() {
            stats.output_count += 1;
            sink.emit(binding);
        } else {
            descend(steps, slots, i + 1, binding, stats, sink);
        }
        binding.truncate(depth);
    }
}
