//! Runs a stage list: every stage but the last materializes its result as
//! a scratch relation that later stages read like any base relation.

use crate::catalog::{Database, Relation, Schema};
use crate::planner::Stage;

use super::{
    run_hj, run_ttj, run_ya, CollectSink, ExecError, ExecStats, OutputSink, TtjOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Hj,
    Ttj(TtjOptions),
    Ya,
}

/// Executes the stages in order against `db` plus accumulated scratch
/// relations; the final stage streams into `sink`. Scratch results keep
/// duplicate rows, so multiplicities survive staging.
pub fn run_stages(
    stages: &[Stage],
    db: &Database,
    algo: Algo,
    sink: &mut dyn OutputSink,
) -> Result<ExecStats, ExecError> {
    if stages.is_empty() {
        return Err(ExecError::BadPlan("no stages to run".to_string()));
    }
    if stages[stages.len() - 1].materialize_as.is_some() {
        return Err(ExecError::BadPlan(
            "the final stage must produce the output, not a scratch relation".to_string(),
        ));
    }
    let mut work = db.clone();
    let mut total = ExecStats::default();
    for (i, stage) in stages.iter().enumerate() {
        let last = i + 1 == stages.len();
        match (&stage.materialize_as, last) {
            (Some(name), _) => {
                let mut collect = CollectSink::new();
                let stats = run_stage(stage, &work, algo, &mut collect)?;
                total.merge(&stats);
                total.materializations += 1;
                let schema = Schema::new(collect.schema)?;
                let rel = Relation::from_rows(name.clone(), schema, collect.rows, false)?;
                work.insert(rel)?;
            }
            (None, true) => {
                let stats = run_stage(stage, &work, algo, sink)?;
                total.merge(&stats);
            }
            (None, false) => {
                return Err(ExecError::BadPlan(
                    "only the final stage may skip materialization".to_string(),
                ));
            }
        }
    }
    Ok(total)
}

fn run_stage(
    stage: &Stage,
    db: &Database,
    algo: Algo,
    sink: &mut dyn OutputSink,
) -> Result<ExecStats, ExecError> {
    match algo {
        Algo::Hj => run_hj(&stage.query, &stage.plan, db, sink),
        Algo::Ttj(opts) => run_ttj(&stage.query, &stage.plan, db, sink, opts),
        Algo::Ya => {
            let order: Vec<usize> = stage.plan.steps().iter().map(|s| s.atom).rev().collect();
            run_ya(&stage.query, &order, db, sink)
        }
    }
}
