//! Conjunctive queries over named atoms, and the ear-based reduction that
//! decides acyclicity and produces join trees.
//!
//! An atom binds a relation to a list of distinct variables positionally.
//! Self-joins work by giving the occurrences distinct aliases. All searches
//! that need a tie-break (which ear, which parent) scan in atom-list order
//! and take the first match, so results are deterministic for a given
//! listing and callers can reorder atoms to steer them.

use std::collections::HashSet;
use std::fmt;

/// One relation occurrence. `vars` are pairwise distinct; arity against the
/// bound relation is checked at execution time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub alias: String,
    pub relation: String,
    pub vars: Vec<String>,
}

impl Atom {
    pub fn new(
        alias: impl Into<String>,
        relation: impl Into<String>,
        vars: Vec<impl Into<String>>,
    ) -> Result<Atom, QueryError> {
        let alias = alias.into();
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(QueryError::DuplicateVar {
                    atom: alias,
                    var: v.clone(),
                });
            }
        }
        Ok(Atom {
            alias,
            relation: relation.into(),
            vars,
        })
    }

    pub fn has_var(&self, var: &str) -> bool {
        self.vars.iter().any(|v| v == var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alias == self.relation {
            write!(f, "{}({})", self.relation, self.vars.join(","))
        } else {
            write!(f, "{}={}({})", self.alias, self.relation, self.vars.join(","))
        }
    }
}

/// Full conjunctive query: the output keeps every variable. Atom order is
/// significant; it drives every deterministic tie-break downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    atoms: Vec<Atom>,
}

impl Query {
    pub fn new(atoms: Vec<Atom>) -> Result<Query, QueryError> {
        if atoms.is_empty() {
            return Err(QueryError::Empty);
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|b| b.alias == a.alias) {
                return Err(QueryError::DuplicateAlias(a.alias.clone()));
            }
        }
        Ok(Query { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom_index(&self, alias: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.alias == alias)
    }

    /// Variables in order of first appearance across the atom list.
    pub fn vars_in_order(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.atoms {
            for v in &a.vars {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// True when every pair of atoms is linked through shared variables.
    /// A single atom counts as connected.
    pub fn is_connected(&self) -> bool {
        is_connected_subset(self, &(0..self.atoms.len()).collect::<Vec<_>>())
    }

    /// Parses one atom per line, `Alias=RelName(v1,v2,...)` with the alias
    /// part optional. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Query, QueryError> {
        let mut atoms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            atoms.push(parse_atom(line).map_err(|detail| QueryError::Parse {
                line: i + 1,
                detail,
            })?);
        }
        Query::new(atoms)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.atoms.iter().map(Atom::to_string).collect();
        write!(f, "{}", parts.join(" ⋈ "))
    }
}

fn parse_atom(line: &str) -> Result<Atom, String> {
    let open = line.find('(').ok_or("missing `(`")?;
    if !line.ends_with(')') {
        return Err("missing trailing `)`".to_string());
    }
    let head = &line[..open];
    let body = &line[open + 1..line.len() - 1];
    let (alias, relation) = match head.split_once('=') {
        Some((a, r)) => (a.trim(), r.trim()),
        None => (head.trim(), head.trim()),
    };
    if alias.is_empty() || relation.is_empty() {
        return Err("empty atom name".to_string());
    }
    let vars: Vec<&str> = body.split(',').map(str::trim).collect();
    if vars.iter().any(|v| v.is_empty()) {
        return Err("empty variable name".to_string());
    }
    Atom::new(alias, relation, vars).map_err(|e| e.to_string())
}

fn is_connected_subset(q: &Query, subset: &[usize]) -> bool {
    if subset.is_empty() {
        return false;
    }
    let mut seen = vec![false; subset.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(p) = stack.pop() {
        for (j, seen_j) in seen.iter_mut().enumerate() {
            if !*seen_j
                && q.atoms[subset[p]]
                    .vars
                    .iter()
                    .any(|v| q.atoms[subset[j]].has_var(v))
            {
                *seen_j = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Key schema of `atom` within the subquery `subset`: its variables shared
/// with at least one other atom of the subquery, in the atom's own var order.
fn key_schema_in(q: &Query, subset: &[usize], atom: usize) -> Vec<String> {
    q.atoms[atom]
        .vars
        .iter()
        .filter(|v| {
            subset
                .iter()
                .any(|&j| j != atom && q.atoms[j].has_var(v))
        })
        .cloned()
        .collect()
}

pub(crate) fn find_parent_in(q: &Query, subset: &[usize], atom: usize) -> Option<usize> {
    if subset.len() <= 1 {
        return None;
    }
    let keys = key_schema_in(q, subset, atom);
    subset
        .iter()
        .copied()
        .find(|&j| j != atom && keys.iter().all(|k| q.atoms[j].has_var(k)))
}

fn find_ear_in(q: &Query, subset: &[usize]) -> Option<usize> {
    if subset.len() == 1 {
        return Some(subset[0]);
    }
    subset
        .iter()
        .copied()
        .find(|&i| find_parent_in(q, subset, i).is_some())
}

/// Shared variables of one atom: those appearing in at least one other atom
/// of the query, in the atom's var order.
pub fn key_schema(q: &Query, atom: usize) -> Vec<String> {
    key_schema_in(q, &all(q), atom)
}

/// First other atom, in list order, whose variables cover `atom`'s key
/// schema. None when the query has just this atom or no atom qualifies.
pub fn find_parent(q: &Query, atom: usize) -> Option<usize> {
    find_parent_in(q, &all(q), atom)
}

/// First atom, in list order, that has a parent. The sole atom of a
/// one-atom query is its own ear.
pub fn find_ear(q: &Query) -> Option<usize> {
    find_ear_in(q, &all(q))
}

fn all(q: &Query) -> Vec<usize> {
    (0..q.len()).collect()
}

/// Parent links produced by reduction; one tree per connected query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinForest {
    parent: Vec<Option<usize>>,
}

impl JoinForest {
    pub fn parent_of(&self, atom: usize) -> Option<usize> {
        self.parent[atom]
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&i| self.parent[i].is_none())
            .collect()
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }
}

/// Elimination order over atom indices: each atom is an ear of the subquery
/// formed by itself and everything after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GyoOrder(pub Vec<usize>);

impl GyoOrder {
    pub fn aliases<'q>(&self, q: &'q Query) -> Vec<&'q str> {
        self.0.iter().map(|&i| q.atoms()[i].alias.as_str()).collect()
    }
}

/// True when `order` is a valid elimination order for `q`.
pub fn is_gyo_order(q: &Query, order: &[usize]) -> bool {
    if order.len() != q.len() {
        return false;
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != all(q) {
        return false;
    }
    for p in 0..order.len().saturating_sub(1) {
        let subset = &order[p..];
        let keys = key_schema_in(q, subset, order[p]);
        let has_parent = subset
            .iter()
            .any(|&j| j != order[p] && keys.iter().all(|k| q.atoms[j].has_var(k)));
        if !has_parent {
            return false;
        }
    }
    true
}

/// Ear elimination to a fixpoint. Succeeds exactly on acyclic queries,
/// returning the elimination order and the join tree it induces (each
/// removed ear points at the parent found at removal time; the survivor is
/// the root). Disconnected queries are rejected up front: they would need a
/// Cartesian product, which no plan here performs.
pub fn gyo_reduce(q: &Query) -> Result<(JoinForest, GyoOrder), QueryError> {
    if q.is_empty() {
        return Err(QueryError::Empty);
    }
    if !q.is_connected() {
        return Err(QueryError::CartesianProduct);
    }
    let mut remaining = all(q);
    let mut parent = vec![None; q.len()];
    let mut order = Vec::with_capacity(q.len());
    while !remaining.is_empty() {
        match find_ear_in(q, &remaining) {
            Some(ear) => {
                parent[ear] = find_parent_in(q, &remaining, ear);
                order.push(ear);
                remaining.retain(|&i| i != ear);
            }
            None => {
                return Err(QueryError::Cyclic {
                    residual: remaining
                        .iter()
                        .map(|&i| q.atoms[i].alias.clone())
                        .collect(),
                })
            }
        }
    }
    Ok((JoinForest { parent }, GyoOrder(order)))
}

pub fn is_acyclic(q: &Query) -> bool {
    gyo_reduce(q).is_ok()
}

/// Checks an explicit forest over nodes with the given variable sets:
/// parent links must form a rooted forest and, for every variable, the
/// nodes carrying it must induce a connected subtree. This is the join-tree
/// test used both for reduction output and for convolution trees, where
/// some nodes are virtual.
pub fn is_join_forest(node_vars: &[Vec<String>], parent: &[Option<usize>]) -> bool {
    let n = node_vars.len();
    if parent.len() != n {
        return false;
    }
    // Walking up from any node must terminate.
    for start in 0..n {
        let mut slow = start;
        let mut steps = 0;
        while let Some(p) = parent[slow] {
            if p >= n {
                return false;
            }
            slow = p;
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    let mut vars: Vec<&String> = node_vars.iter().flatten().collect();
    vars.sort_unstable();
    vars.dedup();
    for var in vars {
        let members: Vec<usize> = (0..n).filter(|&i| node_vars[i].contains(var)).collect();
        if members.len() <= 1 {
            continue;
        }
        // Connectivity over undirected parent edges, restricted to members.
        let mut seen: HashSet<usize> = HashSet::new();
        let mut stack = vec![members[0]];
        seen.insert(members[0]);
        while let Some(i) = stack.pop() {
            let mut neighbors = Vec::new();
            if let Some(p) = parent[i] {
                neighbors.push(p);
            }
            neighbors.extend((0..n).filter(|&c| parent[c] == Some(i)));
            for nb in neighbors {
                if members.contains(&nb) && seen.insert(nb) {
                    stack.push(nb);
                }
            }
        }
        if !members.iter().all(|m| seen.contains(m)) {
            return false;
        }
    }
    true
}

#[derive(Debug)]
pub enum QueryError {
    Empty,
    DuplicateAlias(String),
    DuplicateVar { atom: String, var: String },
    Cyclic { residual: Vec<String> },
    CartesianProduct,
    Parse { line: usize, detail: String },
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::Empty => write!(f, "query has no atoms"),
            QueryError::DuplicateAlias(a) => write!(f, "duplicate atom alias `{}`", a),
            QueryError::DuplicateVar { atom, var } => {
                write!(f, "atom `{}` repeats variable `{}`", atom, var)
            }
            QueryError::Cyclic { residual } => {
                write!(f, "query is cyclic; irreducible residual: {}", residual.join(", "))
            }
            QueryError::CartesianProduct => write!(
                f,
                "query is disconnected and would need a Cartesian product"
            ),
            QueryError::Parse { line, detail } => write!(f, "query line {}: {}", line, detail),
        }
    }
}

impl std::error::Error for QueryError {}
