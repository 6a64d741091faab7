//! `ttj`: explain, run, and benchmark joins over CSV directories, and
//! generate the built-in workload families.
//!
//! Exit codes: 0 success, 2 validation problem (bad flags, malformed
//! inputs, inconsistent plan), 1 I/O problem.

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use ttj_core::catalog::{load_csv, write_csv, CatalogError, Database};
use ttj_core::convolution::{plan_from_rooted, validate_convolution, TreeConvolution};
use ttj_core::exec::{
    run_hj, run_ttj, run_ya, CollectSink, CountSink, CsvSink, ExecError, ExecStats, OutputSink,
    TtjOptions,
};
use ttj_core::planner::{compile_plan, validate_reverse_gyo, Plan};
use ttj_core::query::{gyo_reduce, Query, QueryError};
use ttj_core::workloads::{
    box_convolution_text, gen_box, gen_example1, gen_random_acyclic, gen_star, Family,
    WorkloadSpec,
};

#[derive(Parser)]
#[command(name = "ttj", about = "In-memory join runner with backjumping executors")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report acyclicity, a reduction order, the join tree, and the default plan.
    Explain(ExplainArgs),
    /// Execute one algorithm and report its counters.
    Run(RunArgs),
    /// Execute several algorithms repeatedly and tabulate median timings.
    Bench(BenchArgs),
    /// Write a generated workload (CSVs plus query/plan text) to a directory.
    Gen(GenArgs),
}

#[derive(clap::Args)]
struct ExplainArgs {
    /// Directory of <relation>.csv files.
    #[arg(long)]
    db: PathBuf,
    /// Query text, one atom per line: Alias=RelName(v1,v2,...).
    #[arg(long)]
    query: PathBuf,
    /// Explicit plan: whitespace-separated atom aliases.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Tree convolution for cyclic queries, e.g. (root:(S1 S2) R1 R2).
    #[arg(long)]
    conv: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    conv: Option<PathBuf>,
    /// One of: hj, ttj, ya.
    #[arg(long)]
    algo: String,
    /// Comma-separated ttj options from {ng, dp}.
    #[arg(long)]
    opts: Option<String>,
    /// `collect` (print rows), `count` (discard rows), or a CSV output path.
    #[arg(long, default_value = "collect")]
    sink: String,
    /// Also write the stats record as JSON to this path.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    conv: Option<PathBuf>,
    /// Comma-separated list; each entry is hj, ya, or ttj with optional
    /// suffixes like ttj+ng+dp. Entries may repeat with different suffixes.
    #[arg(long)]
    algo: String,
    /// Default options for plain ttj entries.
    #[arg(long)]
    opts: Option<String>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    repeats: u32,
    /// Also write all rows as a JSON array to this path.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GenArgs {
    /// One of: example1, box, random_acyclic, star.
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of tuples guaranteed to join with nothing (random families).
    #[arg(long, default_value_t = 0.0)]
    dangling: f64,
    #[arg(long)]
    out: PathBuf,
}

struct CliError {
    code: u8,
    msg: String,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        msg: msg.into(),
    }
}

fn io_fail(msg: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        msg: msg.into(),
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        io_fail(e.to_string())
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> CliError {
        match e {
            CatalogError::Io(e) => io_fail(e.to_string()),
            other => invalid(other.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> CliError {
        invalid(e.to_string())
    }
}

impl From<ExecError> for CliError {
    fn from(e: ExecError) -> CliError {
        match e {
            ExecError::Catalog(CatalogError::Io(e)) => io_fail(e.to_string()),
            other => invalid(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    // Die quietly when a pipe consumer closes early, like other line tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Explain(args) => cmd_explain(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

/// Loads every `<name>.csv` in `dir` as relation `name`.
fn load_db(dir: &Path) -> Result<Database, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_fail(format!("cannot read {}: {}", dir.display(), e)))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    entries.sort();
    let mut db = Database::new();
    for path in entries {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| invalid(format!("non-UTF-8 file name: {}", path.display())))?
            .to_string();
        let rel = load_csv(&path, &name, false)?;
        db.insert(rel)?;
    }
    Ok(db)
}

fn load_query(path: &Path) -> Result<Query, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_fail(format!("cannot read {}: {}", path.display(), e)))?;
    Ok(Query::parse(&text)?)
}

/// Plan files are whitespace-separated atom aliases; `#` starts a comment.
fn load_order(path: &Path, q: &Query) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_fail(format!("cannot read {}: {}", path.display(), e)))?;
    let mut order = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for alias in line.split_whitespace() {
            let idx = q
                .atom_index(alias)
                .ok_or_else(|| invalid(format!("plan names unknown atom `{}`", alias)))?;
            order.push(idx);
        }
    }
    Ok(order)
}

fn load_conv(path: &Path, q: &Query) -> Result<TreeConvolution, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| io_fail(format!("cannot read {}: {}", path.display(), e)))?;
    let conv = TreeConvolution::parse(q, &text).map_err(|e| invalid(e.to_string()))?;
    validate_convolution(q, &conv).map_err(|e| invalid(e.to_string()))?;
    Ok(conv)
}

/// The plan to execute plus the order it embodies. Convolution plans carry
/// no single order; `reverse_gyo` is reported false for them.
struct PlanChoice {
    plan: Plan,
    order: Option<Vec<usize>>,
    from_conv: bool,
}

fn choose_plan(
    q: &Query,
    plan_file: Option<&Path>,
    conv_file: Option<&Path>,
) -> Result<PlanChoice, CliError> {
    if plan_file.is_some() && conv_file.is_some() {
        return Err(invalid("--plan and --conv are mutually exclusive"));
    }
    if let Some(path) = conv_file {
        let conv = load_conv(path, q)?;
        let plan = plan_from_rooted(q, &conv).map_err(|e| invalid(e.to_string()))?;
        return Ok(PlanChoice {
            plan,
            order: None,
            from_conv: true,
        });
    }
    if let Some(path) = plan_file {
        let order = load_order(path, q)?;
        let plan = compile_plan(q, &order).map_err(|e| invalid(e.to_string()))?;
        return Ok(PlanChoice {
            plan,
            order: Some(order),
            from_conv: false,
        });
    }
    match gyo_reduce(q) {
        Ok((_, gyo)) => {
            let order: Vec<usize> = gyo.0.iter().rev().copied().collect();
            let plan = compile_plan(q, &order).map_err(|e| invalid(e.to_string()))?;
            Ok(PlanChoice {
                plan,
                order: Some(order),
                from_conv: false,
            })
        }
        Err(QueryError::Cyclic { residual }) => Err(invalid(format!(
            "query is cyclic (residual atoms: {}); provide --conv or --plan",
            residual.join(", ")
        ))),
        Err(e) => Err(invalid(e.to_string())),
    }
}

fn parse_opts(text: &str) -> Result<TtjOptions, CliError> {
    let mut opts = TtjOptions::none();
    for part in text.split(',') {
        match part.trim() {
            "ng" => opts.ng = true,
            "dp" => opts.dp = true,
            other => return Err(invalid(format!("unknown option `{}` (expect ng, dp)", other))),
        }
    }
    Ok(opts)
}

fn check_atoms_resolve(q: &Query, db: &Database) -> Result<(), CliError> {
    for atom in q.atoms() {
        let rel = db
            .get(&atom.relation)
            .ok_or_else(|| invalid(format!("relation `{}` not in database", atom.relation)))?;
        if rel.schema().len() != atom.vars.len() {
            return Err(invalid(format!(
                "atom `{}` has {} variables but relation `{}` has {} columns",
                atom.alias,
                atom.vars.len(),
                atom.relation,
                rel.schema().len()
            )));
        }
    }
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<(), CliError> {
    let db = load_db(&args.db)?;
    let q = load_query(&args.query)?;
    check_atoms_resolve(&q, &db)?;

    println!("query: {}", q);
    for atom in q.atoms() {
        let rel = db.get(&atom.relation).expect("checked above");
        println!("  {:<12} {} tuples", atom.alias, rel.len());
    }

    if let Some(conv_path) = &args.conv {
        let conv = load_conv(conv_path, &q)?;
        let plan = plan_from_rooted(&q, &conv).map_err(|e| invalid(e.to_string()))?;
        println!("verdict: executing via tree convolution");
        println!(
            "segments start at positions: {:?}",
            plan.segments().iter().map(|s| s + 1).collect::<Vec<_>>()
        );
        print!("{}", plan.describe(&q));
        return Ok(());
    }

    match gyo_reduce(&q) {
        Ok((forest, order)) => {
            println!("verdict: acyclic");
            let names: Vec<&str> = order.0.iter().map(|&i| q.atoms()[i].alias.as_str()).collect();
            println!("gyo order: {}", names.join(" "));
            println!("join tree:");
            for (i, atom) in q.atoms().iter().enumerate() {
                match forest.parent_of(i) {
                    Some(p) => println!("  {} -> {}", atom.alias, q.atoms()[p].alias),
                    None => println!("  {} (root)", atom.alias),
                }
            }
            let (plan, order, label) = match &args.plan {
                Some(path) => {
                    let order = load_order(path, &q)?;
                    let plan = compile_plan(&q, &order).map_err(|e| invalid(e.to_string()))?;
                    (plan, order, "given plan")
                }
                None => {
                    let order: Vec<usize> = order.0.iter().rev().copied().collect();
                    let plan = compile_plan(&q, &order).map_err(|e| invalid(e.to_string()))?;
                    (plan, order, "default plan (reverse of gyo order)")
                }
            };
            println!("{}:", label);
            print!("{}", plan.describe(&q));
            println!("reverse_gyo: {}", validate_reverse_gyo(&q, &order));
        }
        Err(QueryError::Cyclic { residual }) => {
            println!("verdict: cyclic");
            println!("irreducible residual: {}", residual.join(" "));
            if let Some(path) = &args.plan {
                let order = load_order(path, &q)?;
                let plan = compile_plan(&q, &order).map_err(|e| invalid(e.to_string()))?;
                println!("given plan:");
                print!("{}", plan.describe(&q));
                println!("reverse_gyo: false");
            } else {
                println!("provide --conv for a backjump-aware plan, or --plan to force an order");
            }
        }
        Err(e) => return Err(invalid(e.to_string())),
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum AlgoKind {
    Hj,
    Ttj,
    Ya,
}

fn parse_algo(name: &str) -> Result<AlgoKind, CliError> {
    match name {
        "hj" => Ok(AlgoKind::Hj),
        "ttj" => Ok(AlgoKind::Ttj),
        "ya" => Ok(AlgoKind::Ya),
        other => Err(invalid(format!("unknown algo `{}` (expect hj, ttj, ya)", other))),
    }
}

/// Executes one algorithm over an already-chosen plan.
fn execute(
    q: &Query,
    choice: &PlanChoice,
    db: &Database,
    kind: AlgoKind,
    opts: TtjOptions,
    sink: &mut dyn OutputSink,
) -> Result<ExecStats, CliError> {
    match kind {
        AlgoKind::Hj => Ok(run_hj(q, &choice.plan, db, sink)?),
        AlgoKind::Ttj => Ok(run_ttj(q, &choice.plan, db, sink, opts)?),
        AlgoKind::Ya => {
            let order = choice
                .order
                .as_ref()
                .ok_or_else(|| invalid("--conv is only valid with --algo ttj"))?;
            let elim: Vec<usize> = order.iter().rev().copied().collect();
            Ok(run_ya(q, &elim, db, sink)?)
        }
    }
}

/// True when the plan is the reverse of an elimination order, i.e. the
/// configuration the linear-time bound speaks about.
fn plan_is_reverse_gyo(q: &Query, choice: &PlanChoice) -> bool {
    choice
        .order
        .as_ref()
        .is_some_and(|order| validate_reverse_gyo(q, order))
}

fn warn_if_unordered(choice: &PlanChoice, kind: AlgoKind, reverse_gyo: bool) {
    if choice.from_conv || reverse_gyo {
        return;
    }
    if matches!(kind, AlgoKind::Ttj | AlgoKind::Ya) {
        eprintln!(
            "warning: plan is not the reverse of an elimination order; \
             the linear-time guarantee does not apply"
        );
    }
}

fn stats_json(
    algo_label: &str,
    reverse_gyo: bool,
    stats: &ExecStats,
) -> serde_json::Value {
    let mut counters = serde_json::Map::new();
    for (name, value) in stats.counters() {
        counters.insert(name.to_string(), serde_json::Value::from(value));
    }
    serde_json::json!({
        "algo": algo_label,
        "reverse_gyo": reverse_gyo,
        "wall_time_ns": stats.wall_time.as_nanos() as u64,
        "counters": counters,
    })
}

fn print_stats_block(algo_label: &str, reverse_gyo: bool, stats: &ExecStats) {
    println!("{:<16} {}", "algo", algo_label);
    println!("{:<16} {}", "reverse_gyo", reverse_gyo);
    for (name, value) in stats.counters() {
        println!("{:<16} {}", name, value);
    }
    println!("{:<16} {:?}", "wall_time", stats.wall_time);
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let kind = parse_algo(&args.algo)?;
    if args.opts.is_some() && kind != AlgoKind::Ttj {
        return Err(invalid("--opts is only valid with --algo ttj"));
    }
    if args.conv.is_some() && kind != AlgoKind::Ttj {
        return Err(invalid("--conv is only valid with --algo ttj"));
    }
    let opts = match &args.opts {
        Some(text) => parse_opts(text)?,
        None => TtjOptions::none(),
    };
    let db = load_db(&args.db)?;
    let q = load_query(&args.query)?;
    let choice = choose_plan(&q, args.plan.as_deref(), args.conv.as_deref())?;
    let reverse_gyo = plan_is_reverse_gyo(&q, &choice);
    warn_if_unordered(&choice, kind, reverse_gyo);

    let stats = match args.sink.as_str() {
        "collect" => {
            let mut sink = CollectSink::new();
            let stats = execute(&q, &choice, &db, kind, opts, &mut sink)?;
            println!("{}", sink.schema.join(","));
            for row in &sink.rows {
                let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                println!("{}", fields.join(","));
            }
            println!();
            stats
        }
        "count" => {
            let mut sink = CountSink;
            execute(&q, &choice, &db, kind, opts, &mut sink)?
        }
        path => {
            let file = fs::File::create(path)
                .map_err(|e| io_fail(format!("cannot create {}: {}", path, e)))?;
            let mut sink = CsvSink::new(BufWriter::new(file));
            let stats = execute(&q, &choice, &db, kind, opts, &mut sink)?;
            sink.finish().map_err(CliError::from)?;
            stats
        }
    };

    let label = algo_label(kind, opts);
    print_stats_block(&label, reverse_gyo, &stats);
    if let Some(path) = &args.stats {
        let record = stats_json(&label, reverse_gyo, &stats);
        fs::write(path, format!("{:#}\n", record))
            .map_err(|e| io_fail(format!("cannot write {}: {}", path.display(), e)))?;
    }
    Ok(())
}

fn algo_label(kind: AlgoKind, opts: TtjOptions) -> String {
    match kind {
        AlgoKind::Hj => "hj".to_string(),
        AlgoKind::Ya => "ya".to_string(),
        AlgoKind::Ttj => {
            let mut label = "ttj".to_string();
            if opts.ng {
                label.push_str("+ng");
            }
            if opts.dp {
                label.push_str("+dp");
            }
            label
        }
    }
}

/// A bench entry such as `hj`, `ttj`, or `ttj+ng+dp`. Plain `ttj` inherits
/// the --opts default.
fn parse_bench_entry(text: &str, default_opts: TtjOptions) -> Result<(AlgoKind, TtjOptions), CliError> {
    let mut parts = text.split('+');
    let kind = parse_algo(parts.next().unwrap_or(""))?;
    let mut opts = TtjOptions::none();
    let mut any = false;
    for part in parts {
        any = true;
        match part {
            "ng" => opts.ng = true,
            "dp" => opts.dp = true,
            other => return Err(invalid(format!("unknown option `{}` in `{}`", other, text))),
        }
    }
    if any && kind != AlgoKind::Ttj {
        return Err(invalid(format!("options in `{}` require ttj", text)));
    }
    if !any && kind == AlgoKind::Ttj {
        opts = default_opts;
    }
    Ok((kind, opts))
}

fn median_duration(mut times: Vec<Duration>) -> Duration {
    times.sort();
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let default_opts = match &args.opts {
        Some(text) => parse_opts(text)?,
        None => TtjOptions::none(),
    };
    let entries: Vec<(String, AlgoKind, TtjOptions)> = args
        .algo
        .split(',')
        .map(|raw| {
            let raw = raw.trim();
            parse_bench_entry(raw, default_opts).map(|(k, o)| (algo_label(k, o), k, o))
        })
        .collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Err(invalid("--algo lists no algorithms"));
    }
    if args.conv.is_some() && entries.iter().any(|(_, k, _)| *k != AlgoKind::Ttj) {
        return Err(invalid("--conv is only valid with ttj entries"));
    }

    let db = load_db(&args.db)?;
    let q = load_query(&args.query)?;
    let choice = choose_plan(&q, args.plan.as_deref(), args.conv.as_deref())?;
    let reverse_gyo = plan_is_reverse_gyo(&q, &choice);
    for (_, kind, _) in &entries {
        warn_if_unordered(&choice, *kind, reverse_gyo);
    }

    let mut rows = Vec::new();
    for (label, kind, opts) in &entries {
        let mut times = Vec::with_capacity(args.repeats as usize);
        let mut first: Option<ExecStats> = None;
        for _ in 0..args.repeats {
            let mut sink = CountSink;
            let stats = execute(&q, &choice, &db, *kind, *opts, &mut sink)?;
            times.push(stats.wall_time);
            match &first {
                Some(seen) => {
                    if seen.counters() != stats.counters() {
                        return Err(invalid(format!(
                            "counters changed across repeats of `{}`; runs are expected \
                             to be deterministic",
                            label
                        )));
                    }
                }
                None => first = Some(stats),
            }
        }
        let stats = first.expect("repeats >= 1");
        rows.push((label.clone(), median_duration(times), stats));
    }

    let mut header = vec!["algo".to_string(), "wall_median".to_string()];
    header.extend(rows[0].2.counters().iter().map(|(n, _)| n.to_string()));
    let mut table: Vec<Vec<String>> = vec![header];
    for (label, median, stats) in &rows {
        let mut row = vec![label.clone(), format!("{:?}", median)];
        row.extend(stats.counters().iter().map(|(_, v)| v.to_string()));
        table.push(row);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{:<width$}", cell, width = w))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }

    if let Some(path) = &args.stats {
        let records: Vec<serde_json::Value> = rows
            .iter()
            .map(|(label, median, stats)| {
                let mut record = stats_json(label, reverse_gyo, stats);
                record["wall_time_ns_median"] =
                    serde_json::Value::from(median.as_nanos() as u64);
                record["repeats"] = serde_json::Value::from(args.repeats);
                record
            })
            .collect();
        fs::write(path, format!("{:#}\n", serde_json::Value::from(records)))
            .map_err(|e| io_fail(format!("cannot write {}: {}", path.display(), e)))?;
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let family: Family = args.family.parse().map_err(invalid)?;
    let spec = WorkloadSpec {
        family,
        n: args.n,
        seed: args.seed,
        dangling_fraction: args.dangling,
    };
    spec.validate().map_err(invalid)?;

    let (q, db, plan_aliases, conv_text) = match family {
        Family::Example1 => {
            let (q, db) = gen_example1(spec.n);
            let aliases = listing_aliases(&q);
            (q, db, Some(aliases), None)
        }
        Family::Box => {
            let (q, db) = gen_box(spec.n, spec.seed);
            (q, db, None, Some(box_convolution_text()))
        }
        Family::RandomAcyclic => {
            let (q, db, order) = gen_random_acyclic(&spec);
            let aliases: Vec<String> = order
                .iter()
                .map(|&i| q.atoms()[i].alias.clone())
                .collect();
            (q, db, Some(aliases), None)
        }
        Family::Star => {
            let (q, db) = gen_star(&spec);
            let aliases = listing_aliases(&q);
            (q, db, Some(aliases), None)
        }
    };

    fs::create_dir_all(&args.out)
        .map_err(|e| io_fail(format!("cannot create {}: {}", args.out.display(), e)))?;
    let mut written = Vec::new();
    for name in db.names() {
        let path = args.out.join(format!("{}.csv", name));
        write_csv(&path, db.get(name).expect("listed name resolves"))?;
        written.push(format!("{}.csv", name));
    }

    let query_path = args.out.join("query.txt");
    let mut query_file = fs::File::create(&query_path)?;
    for atom in q.atoms() {
        writeln!(query_file, "{}", atom)?;
    }
    written.push("query.txt".to_string());

    if let Some(aliases) = plan_aliases {
        fs::write(args.out.join("plan.txt"), format!("{}\n", aliases.join(" ")))?;
        written.push("plan.txt".to_string());
    }
    if let Some(text) = conv_text {
        fs::write(args.out.join("conv.txt"), format!("{}\n", text))?;
        written.push("conv.txt".to_string());
    }
    println!("wrote {} to {}", written.join(", "), args.out.display());
    Ok(())
}

fn listing_aliases(q: &Query) -> Vec<String> {
    q.atoms().iter().map(|a| a.alias.clone()).collect()
}
