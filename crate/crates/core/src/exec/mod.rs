//! Executors and their shared plumbing.
//!
//! All three algorithms pipeline tuples through a plan with one hash probe
//! per step entry; they differ in what a failed probe does (nothing, or a
//! backjump with deletion) and in whether a semijoin pass runs first.

mod hj;
mod oracle;
mod stages;
mod ttj;
mod ya;

pub use hj::run_hj;
pub use oracle::{oracle_join, reorder_rows, sorted_rows, OracleResult};
pub use stages::{run_stages, Algo};
pub use ttj::{run_ttj, run_ttj_traced, BackjumpEvent, DeletionEvent, NoGoodStore, TtjOptions, TtjTrace};
pub use ya::{run_ya, semijoin};

use std::fmt;
use std::time::Duration;

use crate::catalog::{CatalogError, Relation, Value};
use crate::planner::Plan;
use crate::query::Query;

/// Counter block every run returns. Counters are deterministic for a given
/// input; only `wall_time` varies between repeats.
///
/// `probes` counts hash lookups, exactly one per step entry. A miss at a
/// non-root step increments `probe_failures`; the root probe enumerates its
/// whole relation and misses only when that relation is empty, which is not
/// a failure of any binding. `deletions` never exceeds `backjumps`: each
/// deletion happens where a backjump landed, and landings at the root or
/// along a cyclic edge delete nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub probes: u64,
    pub probe_failures: u64,
    pub backjumps: u64,
    pub deletions: u64,
    pub dp_propagations: u64,
    pub nogood_adds: u64,
    pub nogood_hits: u64,
    pub semijoin_scans: u64,
    pub build_scans: u64,
    pub materializations: u64,
    pub output_count: u64,
    pub input_count: u64,
    pub wall_time: Duration,
}

impl ExecStats {
    /// Counter fields by name, wall time excluded; order is stable.
    pub fn counters(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("probes", self.probes),
            ("probe_failures", self.probe_failures),
            ("backjumps", self.backjumps),
            ("deletions", self.deletions),
            ("dp_propagations", self.dp_propagations),
            ("nogood_adds", self.nogood_adds),
            ("nogood_hits", self.nogood_hits),
            ("semijoin_scans", self.semijoin_scans),
            ("build_scans", self.build_scans),
            ("materializations", self.materializations),
            ("output_count", self.output_count),
            ("input_count", self.input_count),
        ]
    }

    pub fn merge(&mut self, other: &ExecStats) {
        self.probes += other.probes;
        self.probe_failures += other.probe_failures;
        self.backjumps += other.backjumps;
        self.deletions += other.deletions;
        self.dp_propagations += other.dp_propagations;
        self.nogood_adds += other.nogood_adds;
        self.nogood_hits += other.nogood_hits;
        self.semijoin_scans += other.semijoin_scans;
        self.build_scans += other.build_scans;
        self.materializations += other.materializations;
        self.output_count += other.output_count;
        self.input_count += other.input_count;
        self.wall_time += other.wall_time;
    }

    pub(crate) fn check_invariants(&self) {
        debug_assert!(self.probe_failures <= self.probes);
        debug_assert!(self.deletions <= self.backjumps);
        debug_assert!(self.dp_propagations <= self.backjumps);
    }
}

/// Receives result rows as they are produced. `begin` announces the output
/// schema (variables in plan discovery order) before any row.
pub trait OutputSink {
    fn begin(&mut self, schema: &[String]);
    fn emit(&mut self, row: &[Value]);
}

/// Keeps every row; primarily for tests and small results.
#[derive(Debug, Default)]
pub struct CollectSink {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl CollectSink {
    pub fn new() -> CollectSink {
        CollectSink::default()
    }
}

impl OutputSink for CollectSink {
    fn begin(&mut self, schema: &[String]) {
        self.schema = schema.to_vec();
    }

    fn emit(&mut self, row: &[Value]) {
        self.rows.push(row.to_vec());
    }
}

/// Discards rows; the run's `output_count` still counts them.
#[derive(Debug, Default)]
pub struct CountSink;

impl OutputSink for CountSink {
    fn begin(&mut self, _schema: &[String]) {}
    fn emit(&mut self, _row: &[Value]) {}
}

/// Streams rows as CSV. Write errors are sticky and surface via `finish`.
pub struct CsvSink<W: std::io::Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: std::io::Write> CsvSink<W> {
    pub fn new(out: W) -> CsvSink<W> {
        CsvSink { out, error: None }
    }

    pub fn finish(self) -> Result<(), std::io::Error> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn write_line(&mut self, parts: &mut dyn Iterator<Item = String>) {
        if self.error.is_some() {
            return;
        }
        let line = parts.collect::<Vec<_>>().join(",");
        if let Err(e) = writeln!(self.out, "{}", line) {
            self.error = Some(e);
        }
    }
}

impl<W: std::io::Write> OutputSink for CsvSink<W> {
    fn begin(&mut self, schema: &[String]) {
        self.write_line(&mut schema.iter().cloned());
    }

    fn emit(&mut self, row: &[Value]) {
        self.write_line(&mut row.iter().map(Value::to_string));
    }
}

#[derive(Debug)]
pub enum ExecError {
    MissingRelation(String),
    ArityMismatch {
        alias: String,
        relation: String,
        atom_arity: usize,
        relation_arity: usize,
    },
    BadPlan(String),
    InvalidOrder(String),
    Catalog(CatalogError),
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecError::MissingRelation(r) => write!(f, "relation `{}` not in database", r),
            ExecError::ArityMismatch {
                alias,
                relation,
                atom_arity,
                relation_arity,
            } => write!(
                f,
                "atom `{}` has {} variables but relation `{}` has {} columns",
                alias, atom_arity, relation, relation_arity
            ),
            ExecError::BadPlan(d) => write!(f, "plan is inconsistent with the query: {}", d),
            ExecError::InvalidOrder(d) => write!(f, "invalid order: {}", d),
            ExecError::Catalog(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for ExecError {}

impl From<CatalogError> for ExecError {
    fn from(e: CatalogError) -> ExecError {
        ExecError::Catalog(e)
    }
}

/// One plan step resolved against concrete relations: every name has become
/// a position. `key_cols` index the step relation's columns, `key_src` the
/// accumulated binding, and the two line up pairwise.
pub(crate) struct ExecStep<'r> {
    pub alias: String,
    pub rel: &'r Relation,
    pub key_cols: Vec<usize>,
    pub key_src: Vec<usize>,
    pub append_cols: Vec<usize>,
    pub parent: Option<usize>,
    pub cyclic_parent: bool,
}

pub(crate) struct ExecPlan<'r> {
    pub steps: Vec<ExecStep<'r>>,
    pub out_schema: Vec<String>,
}

/// Resolves a plan for execution. `resolve` maps an atom index to its
/// relation, letting the one-pass executor substitute semijoin-reduced
/// relations while everything else reads straight from the database.
pub(crate) fn build_exec_plan<'r>(
    q: &Query,
    plan: &Plan,
    resolve: impl Fn(usize) -> Result<&'r Relation, ExecError>,
) -> Result<ExecPlan<'r>, ExecError> {
    let mut seen = vec![false; q.len()];
    for step in plan.steps() {
        if step.atom >= q.len() || seen[step.atom] {
            return Err(ExecError::BadPlan(
                "plan steps are not a permutation of the query atoms".to_string(),
            ));
        }
        seen[step.atom] = true;
    }
    if plan.len() != q.len() {
        return Err(ExecError::BadPlan(
            "plan does not cover every query atom".to_string(),
        ));
    }
    let mut steps = Vec::with_capacity(plan.len());
    let mut bound: Vec<String> = Vec::new();
    for step in plan.steps() {
        let atom = &q.atoms()[step.atom];
        let rel = resolve(step.atom)?;
        if rel.schema().len() != atom.vars.len() {
            return Err(ExecError::ArityMismatch {
                alias: atom.alias.clone(),
                relation: rel.name().to_string(),
                atom_arity: atom.vars.len(),
                relation_arity: rel.schema().len(),
            });
        }
        let mut key_cols = Vec::with_capacity(step.keys.len());
        let mut key_src = Vec::with_capacity(step.keys.len());
        for key in &step.keys {
            let col = atom.vars.iter().position(|v| v == key).ok_or_else(|| {
                ExecError::BadPlan(format!("key `{}` is not a variable of `{}`", key, atom.alias))
            })?;
            let src = bound.iter().position(|v| v == key).ok_or_else(|| {
                ExecError::BadPlan(format!("key `{}` of `{}` is not bound upstream", key, atom.alias))
            })?;
            key_cols.push(col);
            key_src.push(src);
        }
        let mut append_cols = Vec::new();
        for (col, var) in atom.vars.iter().enumerate() {
            if step.keys.contains(var) {
                continue;
            }
            if bound.contains(var) {
                return Err(ExecError::BadPlan(format!(
                    "variable `{}` of `{}` is bound upstream but missing from the step keys",
                    var, atom.alias
                )));
            }
            append_cols.push(col);
            bound.push(var.clone());
        }
        if let Some(p) = step.parent {
            if p >= steps.len() {
                return Err(ExecError::BadPlan(format!(
                    "step `{}` names a parent at or after itself",
                    atom.alias
                )));
            }
        }
        steps.push(ExecStep {
            alias: atom.alias.clone(),
            rel,
            key_cols,
            key_src,
            append_cols,
            parent: step.parent,
            cyclic_parent: step.cyclic_parent,
        });
    }
    Ok(ExecPlan {
        steps,
        out_schema: bound,
    })
}

pub(crate) fn resolve_in_db<'r>(
    q: &Query,
    db: &'r crate::catalog::Database,
) -> impl Fn(usize) -> Result<&'r Relation, ExecError> + 'r {
    let names: Vec<String> = q.atoms().iter().map(|a| a.relation.clone()).collect();
    move |atom: usize| {
        db.get(&names[atom])
            .ok_or_else(|| ExecError::MissingRelation(names[atom].clone()))
    }
}

pub(crate) fn gather(binding: &[Value], src: &[usize]) -> Vec<Value> {
    src.iter().map(|&i| binding[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Database;
    use crate::convolution::{plan_from_rooted, TreeConvolution};
    use crate::planner::{compile_plan, decompose_bushy, BushyPlan};
    use crate::workloads::{
        box_convolution_text, box_query, gen_box, gen_example1, gen_random_acyclic, Family,
        WorkloadSpec,
    };

    fn rel(name: &str, attrs: &[&str], rows: &[&[i64]]) -> Relation {
        let schema = crate::catalog::Schema::new(attrs.to_vec()).unwrap();
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| Value::Int(v)).collect())
            .collect();
        Relation::from_rows(name, schema, rows, false).unwrap()
    }

    fn identity_plan(q: &Query) -> crate::planner::Plan {
        let order: Vec<usize> = (0..q.len()).collect();
        compile_plan(q, &order).unwrap()
    }

    fn assert_matches_oracle(q: &Query, db: &Database, sink: &CollectSink) {
        let want = oracle_join(q, db).unwrap();
        let got = sorted_rows(reorder_rows(&sink.schema, &sink.rows, &want.schema).unwrap());
        assert_eq!(got, want.rows);
    }

    #[test]
    fn hash_join_counts_cubic_probes_on_the_scaling_family() {
        let (q, db) = gen_example1(2);
        let plan = identity_plan(&q);
        let mut sink = CollectSink::new();
        let stats = run_hj(&q, &plan, &db, &mut sink).unwrap();
        assert_eq!(stats.probes, 15);
        assert_eq!(stats.output_count, 0);
        assert!(sink.rows.is_empty());
        assert_eq!(stats.input_count, 8);
        assert_eq!(stats.build_scans, 8);
        assert_eq!(stats.backjumps, 0);
        assert_eq!(stats.deletions, 0);
    }

    #[test]
    fn backjumping_counts_linear_probes_on_the_scaling_family() {
        let (q, db) = gen_example1(2);
        let plan = identity_plan(&q);
        let mut sink = CountSink;
        let stats = run_ttj(&q, &plan, &db, &mut sink, TtjOptions::none()).unwrap();
        assert_eq!(stats.probes, 7);
        assert_eq!(stats.backjumps, 3);
        assert_eq!(stats.deletions, 2);
        assert_eq!(stats.probe_failures, 3);
        assert_eq!(stats.output_count, 0);

        let (q, db) = gen_example1(4);
        let stats = run_ttj(&q, &plan, &db, &mut sink, TtjOptions::none()).unwrap();
        assert_eq!(stats.probes, 13);
        assert_eq!(stats.deletions, 4);
        assert_eq!(stats.backjumps, 7);
    }

    #[test]
    fn trace_reports_jump_edges_and_deleted_rows() {
        let (q, db) = gen_example1(2);
        let plan = identity_plan(&q);
        let mut sink = CountSink;
        let (stats, trace) =
            run_ttj_traced(&q, &plan, &db, &mut sink, TtjOptions::none()).unwrap();
        assert_eq!(trace.backjumps.len() as u64, stats.backjumps);
        assert_eq!(trace.deletions.len() as u64, stats.deletions);
        let edges: Vec<(usize, usize, bool)> =
            trace.backjumps.iter().map(|b| (b.from, b.to, b.deleted)).collect();
        assert_eq!(edges, vec![(3, 1, true), (3, 1, true), (1, 0, false)]);
        for d in &trace.deletions {
            assert_eq!(d.alias, "S");
            assert_eq!(d.values[0], Value::Int(1));
        }
    }

    #[test]
    fn key_memoization_skips_root_tuples_that_rebuild_failed_keys() {
        let (q, db) = gen_example1(4);
        let plan = identity_plan(&q);
        let mut sink = CountSink;
        let plain = run_ttj(&q, &plan, &db, &mut sink, TtjOptions::none()).unwrap();
        let ng = run_ttj(
            &q,
            &plan,
            &db,
            &mut sink,
            TtjOptions { ng: true, dp: false },
        )
        .unwrap();
        assert_eq!(plain.probes, 13);
        assert_eq!(ng.probes, 11);
        assert_eq!(ng.nogood_adds, 1);
        assert_eq!(ng.nogood_hits, 2);
        assert_eq!(ng.output_count, plain.output_count);
    }

    #[test]
    fn empty_bucket_propagation_forwards_the_jump() {
        let mut db = Database::new();
        db.insert(rel("R", &["a", "b"], &[&[1, 1], &[2, 1]])).unwrap();
        db.insert(rel("S", &["b", "c"], &[&[1, 5]])).unwrap();
        db.insert(rel("T", &["c", "d"], &[])).unwrap();
        let q = Query::parse("R(a,b)\nS(b,c)\nT(c,d)").unwrap();
        let plan = identity_plan(&q);
        let mut sink = CountSink;
        let plain = run_ttj(&q, &plan, &db, &mut sink, TtjOptions::none()).unwrap();
        let dp = run_ttj(
            &q,
            &plan,
            &db,
            &mut sink,
            TtjOptions { dp: true, ng: false },
        )
        .unwrap();
        assert_eq!(plain.dp_propagations, 0);
        assert_eq!(dp.dp_propagations, 1);
        assert_eq!(dp.deletions, 1);
        assert_eq!(dp.output_count, 0);
        assert_eq!(dp.backjumps, plain.backjumps + 1);
    }

    #[test]
    fn executors_agree_with_the_oracle_when_rows_join() {
        let spec = WorkloadSpec {
            family: Family::RandomAcyclic,
            n: 8,
            seed: 97,
            dangling_fraction: 0.3,
        };
        let (q, db, order) = gen_random_acyclic(&spec);
        let plan = compile_plan(&q, &order).unwrap();
        let mut hj = CollectSink::new();
        run_hj(&q, &plan, &db, &mut hj).unwrap();
        assert_matches_oracle(&q, &db, &hj);
        let mut ttj = CollectSink::new();
        run_ttj(&q, &plan, &db, &mut ttj, TtjOptions::all()).unwrap();
        assert_matches_oracle(&q, &db, &ttj);
        let elim: Vec<usize> = order.iter().rev().copied().collect();
        let mut ya = CollectSink::new();
        run_ya(&q, &elim, &db, &mut ya).unwrap();
        assert_matches_oracle(&q, &db, &ya);
    }

    #[test]
    fn one_pass_run_reduces_then_joins_without_failures() {
        let (q, db) = gen_example1(4);
        // Reverse of the plan order [R, S, T, U].
        let order = vec![3, 2, 1, 0];
        let mut sink = CollectSink::new();
        let stats = run_ya(&q, &order, &db, &mut sink).unwrap();
        assert_eq!(stats.semijoin_scans, 8);
        assert_eq!(stats.build_scans, 0, "reduction empties the root before any build");
        assert_eq!(stats.probes, 1);
        assert_eq!(stats.probe_failures, 0);
        assert_eq!(stats.output_count, 0);
    }

    #[test]
    fn semijoin_filters_on_shared_attributes_and_counts_scans() {
        let p = rel("P", &["a", "b"], &[&[1, 1], &[2, 1], &[3, 2]]);
        let r = rel("R", &["b", "c"], &[&[1, 9], &[1, 8]]);
        let (kept, scans) = semijoin(&p, &r);
        assert_eq!(scans, 5);
        assert_eq!(kept.len(), 2);
        assert!(kept.tuples().iter().all(|t| t.values[1] == Value::Int(1)));

        let empty = rel("E", &["b"], &[]);
        let (kept, scans) = semijoin(&p, &empty);
        assert_eq!((kept.len(), scans), (0, 0));
        let (kept, scans) = semijoin(&empty, &p);
        assert_eq!((kept.len(), scans), (0, 0));
    }

    #[test]
    fn cyclic_plan_runs_and_jumps_onto_the_nested_root_without_deleting() {
        let q = box_query();
        let conv = TreeConvolution::parse(&q, box_convolution_text()).unwrap();
        let plan = plan_from_rooted(&q, &conv).unwrap();
        for seed in [1, 2, 3] {
            let (_, db) = gen_box(3, seed);
            let mut sink = CollectSink::new();
            let (stats, trace) =
                run_ttj_traced(&q, &plan, &db, &mut sink, TtjOptions::none()).unwrap();
            assert_matches_oracle(&q, &db, &sink);
            assert_eq!(stats.materializations, 0);
            for b in &trace.backjumps {
                if b.to == 3 {
                    assert!(!b.deleted, "pseudo-parent landings keep the tuple");
                }
            }
        }
    }

    #[test]
    fn staged_execution_materializes_scratch_relations() {
        let mut db = Database::new();
        db.insert(rel("A", &["a", "b"], &[&[1, 1], &[2, 1]])).unwrap();
        db.insert(rel("B", &["b", "c"], &[&[1, 1], &[1, 2]])).unwrap();
        db.insert(rel("C", &["c", "d"], &[&[1, 4], &[2, 4]])).unwrap();
        db.insert(rel("D", &["d", "e"], &[&[4, 7]])).unwrap();
        let q = Query::parse("A(a,b)\nB(b,c)\nC(c,d)\nD(d,e)").unwrap();
        let tree = BushyPlan::parse(&q, "((A B) (C D))").unwrap();
        let stages = decompose_bushy(&q, &tree).unwrap();
        let mut sink = CollectSink::new();
        let stats = run_stages(&stages, &db, Algo::Ttj(TtjOptions::none()), &mut sink).unwrap();
        assert_eq!(stats.materializations as usize, stages.len() - 1);
        assert_matches_oracle(&q, &db, &sink);
        let mut hj_sink = CollectSink::new();
        run_stages(&stages, &db, Algo::Hj, &mut hj_sink).unwrap();
        assert_matches_oracle(&q, &db, &hj_sink);
        let mut ya_sink = CollectSink::new();
        run_stages(&stages, &db, Algo::Ya, &mut ya_sink).unwrap();
        assert_matches_oracle(&q, &db, &ya_sink);
    }

    #[test]
    fn csv_sink_streams_header_then_rows() {
        let (q, db) = gen_example1(2);
        let plan = identity_plan(&q);
        let mut buf = Vec::new();
        let mut sink = CsvSink::new(&mut buf);
        run_hj(&q, &plan, &db, &mut sink).unwrap();
        sink.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "i,x,y,j,k,l\n");

        let mut db2 = Database::new();
        db2.insert(rel("A", &["a", "b"], &[&[1, 2]])).unwrap();
        let q2 = Query::parse("A(a,b)").unwrap();
        let mut buf2 = Vec::new();
        let mut sink2 = CsvSink::new(&mut buf2);
        run_hj(&q2, &identity_plan(&q2), &db2, &mut sink2).unwrap();
        sink2.finish().unwrap();
        assert_eq!(String::from_utf8(buf2).unwrap(), "a,b\n1,2\n");
    }

    #[test]
    fn bad_plans_and_orders_are_rejected() {
        let (q, db) = gen_example1(2);
        let mut sink = CountSink;
        let err = run_ya(&q, &[0, 0, 1, 2], &db, &mut sink).unwrap_err();
        assert!(matches!(err, ExecError::InvalidOrder(_)));
        let err = run_ya(&q, &[0, 1], &db, &mut sink).unwrap_err();
        assert!(matches!(err, ExecError::InvalidOrder(_)));

        let other = Query::parse("R(i,x)\nS(x,y,j)\nT(y,k)\nU(y,l)\nV(l,m)").unwrap();
        let plan = identity_plan(&other);
        let err = run_hj(&q, &plan, &db, &mut sink).unwrap_err();
        assert!(matches!(err, ExecError::BadPlan(_)));

        let mut empty_db = Database::new();
        empty_db.insert(rel("R", &["i", "x"], &[])).unwrap();
        let err = run_hj(&q, &identity_plan(&q), &empty_db, &mut sink).unwrap_err();
        assert!(matches!(err, ExecError::MissingRelation(_)));
    }

    #[test]
    fn stats_merge_adds_counters() {
        let mut a = ExecStats {
            probes: 2,
            output_count: 1,
            ..ExecStats::default()
        };
        let b = ExecStats {
            probes: 3,
            backjumps: 4,
            ..ExecStats::default()
        };
        a.merge(&b);
        assert_eq!(a.probes, 5);
        assert_eq!(a.backjumps, 4);
        assert_eq!(a.output_count, 1);
        assert_eq!(a.counters().len(), 12);
    }
}
