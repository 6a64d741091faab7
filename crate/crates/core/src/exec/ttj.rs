//! Backjumping hash join with dangling-tuple deletion.
//!
//! Runs the same probe pipeline as `run_hj`, but a failed probe jumps
//! straight to the step's plan parent instead of grinding through every
//! intermediate alternative. The parent's current tuple fully determines
//! the failed key, so the landing also deletes that tuple from the
//! parent's index: no later binding can succeed through it.
//!
//! Two refinements, both off by default:
//!
//! * `dp`: when a deletion empties its bucket, the catcher's own probe key
//!   is now known dead, so the jump is forwarded one more hop to the
//!   catcher's parent.
//! * `ng`: jumps that land at the root record the failing child key; later
//!   root tuples projecting onto a recorded key are skipped before any
//!   probe. Root children's keys live entirely inside the root tuple,
//!   which is what makes the projection possible.
//!
//! Jumps arriving along a cyclic plan edge (see `plan_from_rooted`) resume
//! iteration there but delete nothing: a pseudo-parent's tuple does not
//! determine the failed key.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use crate::catalog::{Database, HashIndex, Value};
use crate::planner::Plan;
use crate::query::Query;

use super::{build_exec_plan, gather, resolve_in_db, ExecError, ExecStats, ExecStep, OutputSink};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TtjOptions {
    /// Forward a jump when a deletion empties its bucket.
    pub dp: bool,
    /// Remember keys that failed at children of the root and skip root
    /// tuples that reproduce them.
    pub ng: bool,
}

impl TtjOptions {
    pub fn none() -> TtjOptions {
        TtjOptions::default()
    }

    pub fn all() -> TtjOptions {
        TtjOptions { dp: true, ng: true }
    }
}

/// Failing keys seen at the root, grouped by the child step that failed.
#[derive(Debug, Default)]
pub struct NoGoodStore {
    per_child: BTreeMap<usize, HashSet<Vec<Value>>>,
}

impl NoGoodStore {
    pub fn new() -> NoGoodStore {
        NoGoodStore::default()
    }

    /// Records a failing key for a child step. False means it was already
    /// known.
    pub fn record(&mut self, child: usize, key: Vec<Value>) -> bool {
        self.per_child.entry(child).or_default().insert(key)
    }

    pub fn contains(&self, child: usize, key: &[Value]) -> bool {
        self.per_child.get(&child).is_some_and(|s| s.contains(key))
    }

    pub fn children(&self) -> Vec<usize> {
        self.per_child.keys().copied().collect()
    }

    pub fn total(&self) -> usize {
        self.per_child.values().map(HashSet::len).sum()
    }

    /// True when the root binding projects onto any recorded key. Every
    /// recorded child hangs directly off the root, so its key sources are
    /// all inside the root tuple.
    fn blocks(&self, steps: &[ExecStep<'_>], binding: &[Value]) -> bool {
        self.per_child.iter().any(|(&child, keys)| {
            let key = gather(binding, &steps[child].key_src);
            keys.contains(&key)
        })
    }
}

/// One backjump, recorded where it landed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackjumpEvent {
    pub from: usize,
    pub to: usize,
    /// The jump was forwarded by `dp` rather than thrown by a failed probe.
    pub dp: bool,
    /// The landing deleted the catcher's current tuple.
    pub deleted: bool,
}

/// One tuple removed from a step's index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeletionEvent {
    pub step: usize,
    pub alias: String,
    pub row_id: u64,
    pub values: Vec<Value>,
}

#[derive(Debug, Default)]
pub struct TtjTrace {
    pub backjumps: Vec<BackjumpEvent>,
    pub deletions: Vec<DeletionEvent>,
}

pub fn run_ttj(
    q: &Query,
    plan: &Plan,
    db: &Database,
    sink: &mut dyn OutputSink,
    opts: TtjOptions,
) -> Result<ExecStats, ExecError> {
    run_inner(q, plan, db, sink, opts, None).map(|(stats, _)| stats)
}

/// Same run, but also reports every backjump and deletion in order.
pub fn run_ttj_traced(
    q: &Query,
    plan: &Plan,
    db: &Database,
    sink: &mut dyn OutputSink,
    opts: TtjOptions,
) -> Result<(ExecStats, TtjTrace), ExecError> {
    let mut trace = TtjTrace::default();
    let (stats, _) = run_inner(q, plan, db, sink, opts, Some(&mut trace))?;
    Ok((stats, trace))
}

fn run_inner(
    q: &Query,
    plan: &Plan,
    db: &Database,
    sink: &mut dyn OutputSink,
    opts: TtjOptions,
    trace: Option<&mut TtjTrace>,
) -> Result<(ExecStats, NoGoodStore), ExecError> {
    let start = Instant::now();
    let exec = build_exec_plan(q, plan, resolve_in_db(q, db))?;
    let mut stats = ExecStats {
        input_count: exec.steps.iter().map(|s| s.rel.len() as u64).sum(),
        ..ExecStats::default()
    };
    let mut indexes: Vec<HashIndex<'_>> = exec
        .steps
        .iter()
        .map(|s| {
            stats.build_scans += s.rel.len() as u64;
            HashIndex::build_on_columns(s.rel, s.key_cols.clone())
        })
        .collect();
    sink.begin(&exec.out_schema);
    let mut run = Run {
        steps: &exec.steps,
        opts,
        nogoods: NoGoodStore::new(),
        stats: &mut stats,
        sink,
        trace,
    };
    let mut binding = Vec::with_capacity(exec.out_schema.len());
    let flow = run.descend(&mut indexes, 0, &mut binding);
    debug_assert!(matches!(flow, Flow::Done), "root jump has nowhere to go");
    let nogoods = run.nogoods;
    stats.wall_time = start.elapsed();
    stats.check_invariants();
    Ok((stats, nogoods))
}

enum Flow {
    Done,
    Jump { to: usize, from: usize, dp: bool },
}

struct Run<'a, 'r> {
    steps: &'a [ExecStep<'r>],
    opts: TtjOptions,
    nogoods: NoGoodStore,
    stats: &'a mut ExecStats,
    sink: &'a mut dyn OutputSink,
    trace: Option<&'a mut TtjTrace>,
}

impl<'a, 'r> Run<'a, 'r> {
    fn descend(
        &mut self,
        indexes: &mut [HashIndex<'r>],
        i: usize,
        binding: &mut Vec<Value>,
    ) -> Flow {
        let key = gather(binding, &self.steps[i].key_src);
        self.stats.probes += 1;
        let bucket = match indexes[i].probe(&key) {
            Some(b) => b,
            None => {
                if i > 0 {
                    self.stats.probe_failures += 1;
                    if let Some(p) = self.steps[i].parent {
                        self.stats.backjumps += 1;
                        return Flow::Jump { to: p, from: i, dp: false };
                    }
                }
                return Flow::Done;
            }
        };
        let depth = binding.len();
        let last = i + 1 == self.steps.len();
        let mut cursor = 0;
        while let Some((entry, tuple)) = indexes[i].next_live(bucket, cursor) {
            cursor = entry + 1;
            for &c in &self.steps[i].append_cols {
                binding.push(tuple.values[c].clone());
            }
            if i == 0 && self.opts.ng && self.nogoods.blocks(self.steps, binding) {
                self.stats.nogood_hits += 1;
                binding.truncate(depth);
                continue;
            }
            if last {
                self.stats.output_count += 1;
                self.sink.emit(binding);
                binding.truncate(depth);
                continue;
            }
            match self.descend(indexes, i + 1, binding) {
                Flow::Done => {}
                Flow::Jump { to, from, dp } if to == i => {
                    let cyclic = self.steps[from].cyclic_parent;
                    let deleted = i > 0 && !cyclic;
                    if let Some(t) = self.trace.as_deref_mut() {
                        t.backjumps.push(BackjumpEvent { from, to, dp, deleted });
                        if deleted {
                            t.deletions.push(DeletionEvent {
                                step: i,
                                alias: self.steps[i].alias.clone(),
                                row_id: tuple.row_id,
                                values: tuple.values.clone(),
                            });
                        }
                    }
                    if deleted {
                        indexes[i].delete_entry(bucket, entry);
                        self.stats.deletions += 1;
                        if self.opts.dp && indexes[i].bucket_live(bucket) == 0 {
                            if let Some(p) = self.steps[i].parent {
                                self.stats.backjumps += 1;
                                self.stats.dp_propagations += 1;
                                binding.truncate(depth);
                                return Flow::Jump { to: p, from: i, dp: true };
                            }
                        }
                    } else if i == 0 && self.opts.ng {
                        let failed = gather(binding, &self.steps[from].key_src);
                        if self.nogoods.record(from, failed) {
                            self.stats.nogood_adds += 1;
                        }
                    }
                }
                jump => {
                    binding.truncate(depth);
                    return jump;
                }
            }
            binding.truncate(depth);
        }
        Flow::Done
    }
}
