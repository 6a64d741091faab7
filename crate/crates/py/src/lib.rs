//! Python bindings: queries, databases, the three executors, the
//! reference join, and the workload generators.
//!
//! The module mirrors the CLI's run surface: `run(db, q, algo=...)`
//! returns a dict with the output schema, the rows, and the counter
//! block, so notebook-side comparisons read the same numbers the CLI
//! prints.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyTuple};

use ttj_core::catalog::{load_csv, CatalogError, Database, Relation, Schema, Value};
use ttj_core::convolution::{plan_from_rooted, validate_convolution, TreeConvolution};
use ttj_core::exec::{
    oracle_join, run_hj, run_ttj, run_ya, CollectSink, ExecStats, TtjOptions,
};
use ttj_core::planner::{compile_plan, validate_reverse_gyo, Plan};
use ttj_core::query::{gyo_reduce, is_acyclic, Query};
use ttj_core::workloads::{
    gen_box, gen_example1, gen_random_acyclic, gen_star, Family, WorkloadSpec,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Query", frozen)]
struct PyQuery {
    inner: Query,
}

#[pymethods]
impl PyQuery {
    /// Parses one atom per line: `Alias=RelName(v1,v2,...)`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyQuery> {
        Ok(PyQuery {
            inner: Query::parse(text).map_err(value_err)?,
        })
    }

    #[getter]
    fn atoms(&self) -> Vec<String> {
        self.inner.atoms().iter().map(|a| a.alias.clone()).collect()
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner.vars_in_order()
    }

    fn is_acyclic(&self) -> bool {
        is_acyclic(&self.inner)
    }

    /// Elimination order as atom aliases, or None when the query is cyclic.
    fn gyo_order(&self) -> Option<Vec<String>> {
        gyo_reduce(&self.inner).ok().map(|(_, order)| {
            order
                .0
                .iter()
                .map(|&i| self.inner.atoms()[i].alias.clone())
                .collect()
        })
    }

    fn __repr__(&self) -> String {
        format!("{}", self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A relation cell coming in from Python.
#[derive(FromPyObject)]
enum Cell {
    #[pyo3(transparent)]
    Int(i64),
    #[pyo3(transparent)]
    Str(String),
}

impl From<Cell> for Value {
    fn from(cell: Cell) -> Value {
        match cell {
            Cell::Int(i) => Value::Int(i),
            Cell::Str(s) => Value::Str(s),
        }
    }
}

#[pyclass(name = "Database")]
struct PyDatabase {
    inner: Database,
}

#[pymethods]
impl PyDatabase {
    #[new]
    fn new() -> PyDatabase {
        PyDatabase {
            inner: Database::new(),
        }
    }

    /// Adds one relation; cells are ints or strings.
    #[pyo3(signature = (name, attrs, rows, dedup = false))]
    fn add_relation(
        &mut self,
        name: &str,
        attrs: Vec<String>,
        rows: Vec<Vec<Cell>>,
        dedup: bool,
    ) -> PyResult<()> {
        let schema = Schema::new(attrs).map_err(value_err)?;
        let rows: Vec<Vec<Value>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(Value::from).collect())
            .collect();
        let rel = Relation::from_rows(name, schema, rows, dedup).map_err(value_err)?;
        self.inner.insert(rel).map_err(value_err)
    }

    fn relation_names(&self) -> Vec<String> {
        self.inner.names().iter().map(|s| s.to_string()).collect()
    }

    fn relation_len(&self, name: &str) -> PyResult<usize> {
        self.inner
            .get(name)
            .map(Relation::len)
            .ok_or_else(|| PyValueError::new_err(format!("no relation `{}`", name)))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Loads every `<name>.csv` under `dir`, e.g. a directory written by
/// `ttj gen`.
#[pyfunction]
fn load_dir(dir: &str) -> PyResult<PyDatabase> {
    let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| PyIOError::new_err(format!("cannot read {}: {}", dir, e)))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut db = Database::new();
    for path in paths {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| value_err(format!("non-UTF-8 file name: {}", path.display())))?
            .to_string();
        let rel = load_csv(&path, &name, false).map_err(|e| match e {
            CatalogError::Io(e) => PyIOError::new_err(e.to_string()),
            other => value_err(other),
        })?;
        db.insert(rel).map_err(value_err)?;
    }
    Ok(PyDatabase { inner: db })
}

fn value_to_py(py: Python<'_>, v: &Value) -> Py<PyAny> {
    match v {
        Value::Int(i) => i
            .into_pyobject(py)
            .expect("ints convert")
            .into_any()
            .unbind(),
        Value::Str(s) => s
            .into_pyobject(py)
            .expect("strings convert")
            .into_any()
            .unbind(),
    }
}

fn rows_to_py<'py>(
    py: Python<'py>,
    rows: &[Vec<Value>],
) -> PyResult<Bound<'py, PyList>> {
    let out = PyList::empty(py);
    for row in rows {
        let cells: Vec<Py<PyAny>> = row.iter().map(|v| value_to_py(py, v)).collect();
        out.append(PyTuple::new(py, cells)?)?;
    }
    Ok(out)
}

fn stats_to_py<'py>(py: Python<'py>, stats: &ExecStats) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    for (name, value) in stats.counters() {
        dict.set_item(name, value)?;
    }
    dict.set_item("wall_time_ns", stats.wall_time.as_nanos() as u64)?;
    Ok(dict)
}

fn order_from_aliases(q: &Query, aliases: &[String]) -> PyResult<Vec<usize>> {
    aliases
        .iter()
        .map(|a| {
            q.atom_index(a)
                .ok_or_else(|| PyValueError::new_err(format!("plan names unknown atom `{}`", a)))
        })
        .collect()
}

/// Executes one algorithm and returns
/// `{"schema", "rows", "stats", "reverse_gyo", "algo"}`.
///
/// `plan` is a list of atom aliases; the default is the reverse of the
/// query's elimination order. `conv` is a tree-convolution expression for
/// cyclic queries, ttj only.
#[pyfunction]
#[pyo3(signature = (db, q, algo = "ttj", plan = None, conv = None, ng = false, dp = false))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    db: &PyDatabase,
    q: &PyQuery,
    algo: &str,
    plan: Option<Vec<String>>,
    conv: Option<&str>,
    ng: bool,
    dp: bool,
) -> PyResult<Py<PyDict>> {
    let query = &q.inner;
    if (ng || dp) && algo != "ttj" {
        return Err(PyValueError::new_err("ng/dp are only valid with algo='ttj'"));
    }
    if conv.is_some() && algo != "ttj" {
        return Err(PyValueError::new_err("conv is only valid with algo='ttj'"));
    }
    if conv.is_some() && plan.is_some() {
        return Err(PyValueError::new_err("plan and conv are mutually exclusive"));
    }

    let (compiled, order): (Plan, Option<Vec<usize>>) = if let Some(text) = conv {
        let conv = TreeConvolution::parse(query, text).map_err(value_err)?;
        validate_convolution(query, &conv).map_err(value_err)?;
        (plan_from_rooted(query, &conv).map_err(value_err)?, None)
    } else {
        let order = match &plan {
            Some(aliases) => order_from_aliases(query, aliases)?,
            None => {
                let (_, gyo) = gyo_reduce(query).map_err(value_err)?;
                gyo.0.iter().rev().copied().collect()
            }
        };
        let compiled = compile_plan(query, &order).map_err(value_err)?;
        (compiled, Some(order))
    };
    let reverse_gyo = order
        .as_ref()
        .is_some_and(|o| validate_reverse_gyo(query, o));

    let opts = TtjOptions { ng, dp };
    let mut sink = CollectSink::new();
    let stats = match algo {
        "hj" => run_hj(query, &compiled, &db.inner, &mut sink),
        "ttj" => run_ttj(query, &compiled, &db.inner, &mut sink, opts),
        "ya" => {
            let order = order.expect("checked: conv requires ttj");
            let elim: Vec<usize> = order.iter().rev().copied().collect();
            run_ya(query, &elim, &db.inner, &mut sink)
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown algo `{}` (expect hj, ttj, ya)",
                other
            )))
        }
    }
    .map_err(value_err)?;

    let out = PyDict::new(py);
    out.set_item("algo", algo)?;
    out.set_item("schema", sink.schema.clone())?;
    out.set_item("rows", rows_to_py(py, &sink.rows)?)?;
    out.set_item("stats", stats_to_py(py, &stats)?)?;
    out.set_item("reverse_gyo", reverse_gyo)?;
    Ok(out.unbind())
}

/// Brute-force reference join: `{"schema", "rows"}` with rows sorted.
#[pyfunction]
fn oracle(py: Python<'_>, db: &PyDatabase, q: &PyQuery) -> PyResult<Py<PyDict>> {
    let result = oracle_join(&q.inner, &db.inner).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("schema", result.schema.clone())?;
    out.set_item("rows", rows_to_py(py, &result.rows)?)?;
    Ok(out.unbind())
}

#[pyfunction]
#[pyo3(name = "gen_example1")]
fn py_gen_example1(n: usize) -> PyResult<(PyQuery, PyDatabase)> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be at least 1"));
    }
    let (q, db) = gen_example1(n);
    Ok((PyQuery { inner: q }, PyDatabase { inner: db }))
}

#[pyfunction]
#[pyo3(name = "gen_box", signature = (n, seed = 0))]
fn py_gen_box(n: usize, seed: u64) -> PyResult<(PyQuery, PyDatabase)> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be at least 1"));
    }
    let (q, db) = gen_box(n, seed);
    Ok((PyQuery { inner: q }, PyDatabase { inner: db }))
}

#[pyfunction]
#[pyo3(name = "gen_random_acyclic", signature = (n, seed = 0, dangling = 0.0))]
fn py_gen_random_acyclic(
    n: usize,
    seed: u64,
    dangling: f64,
) -> PyResult<(PyQuery, PyDatabase, Vec<String>)> {
    let spec = WorkloadSpec {
        family: Family::RandomAcyclic,
        n,
        seed,
        dangling_fraction: dangling,
    };
    spec.validate().map_err(value_err)?;
    let (q, db, order) = gen_random_acyclic(&spec);
    let aliases = order
        .iter()
        .map(|&i| q.atoms()[i].alias.clone())
        .collect();
    Ok((PyQuery { inner: q }, PyDatabase { inner: db }, aliases))
}

#[pyfunction]
#[pyo3(name = "gen_star", signature = (n, seed = 0, dangling = 0.0))]
fn py_gen_star(n: usize, seed: u64, dangling: f64) -> PyResult<(PyQuery, PyDatabase)> {
    let spec = WorkloadSpec {
        family: Family::Star,
        n,
        seed,
        dangling_fraction: dangling,
    };
    spec.validate().map_err(value_err)?;
    let (q, db) = gen_star(&spec);
    Ok((PyQuery { inner: q }, PyDatabase { inner: db }))
}

#[pymodule]
fn ttj_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuery>()?;
    m.add_class::<PyDatabase>()?;
    m.add_function(wrap_pyfunction!(load_dir, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_example1, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_box, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_random_acyclic, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_star, m)?)?;
    Ok(())
}
