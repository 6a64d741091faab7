//! Join-order plans. A plan is a permutation of the query's atoms; each step
//! carries the key schema it probes with (shared variables with the plan
//! prefix) and the position a failed probe backjumps to.
//!
//! Linear plans come from [`compile_plan`]; bushy trees are decomposed into
//! materialization stages whose final stage is again a linear plan.

use std::fmt;

use crate::query::{is_gyo_order, Atom, Query, QueryError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanStep {
    /// Index into the query's atom list.
    pub atom: usize,
    /// Probe key: variables shared with the plan prefix, in atom var order.
    /// Empty for the first step and for steps disconnected from their prefix.
    pub keys: Vec<String>,
    /// Plan position (0-based) a failed probe at this step backjumps to:
    /// the first earlier step whose atom covers `keys`.
    pub parent: Option<usize>,
    /// Set when `parent` points into an enclosing convolution segment;
    /// backjumps along such an edge must not delete at the landing site.
    pub cyclic_parent: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    steps: Vec<PlanStep>,
    /// Start position of each segment. Plans from [`compile_plan`] are one
    /// segment; convolution plans concatenate one segment per tree.
    segments: Vec<usize>,
}

impl Plan {
    pub(crate) fn from_parts(steps: Vec<PlanStep>, segments: Vec<usize>) -> Plan {
        debug_assert!(!segments.is_empty() && segments[0] == 0);
        Plan { steps, segments }
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn segments(&self) -> &[usize] {
        &self.segments
    }

    /// Segment index owning plan position `pos`.
    pub fn segment_of(&self, pos: usize) -> usize {
        match self.segments.binary_search(&pos) {
            Ok(s) => s,
            Err(s) => s - 1,
        }
    }

    /// Last plan position of segment `s`.
    pub fn segment_end(&self, s: usize) -> usize {
        if s + 1 < self.segments.len() {
            self.segments[s + 1] - 1
        } else {
            self.steps.len() - 1
        }
    }

    pub fn aliases<'q>(&self, q: &'q Query) -> Vec<&'q str> {
        self.steps
            .iter()
            .map(|s| q.atoms()[s.atom].alias.as_str())
            .collect()
    }

    /// One line per step, 1-based positions, for `explain` output.
    pub fn describe(&self, q: &Query) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            let atom = &q.atoms()[step.atom];
            let keys = if step.keys.is_empty() {
                "()".to_string()
            } else {
                format!("({})", step.keys.join(","))
            };
            let parent = match step.parent {
                Some(p) => format!(
                    "{}@{}{}",
                    q.atoms()[self.steps[p].atom].alias,
                    p + 1,
                    if step.cyclic_parent { " cyclic" } else { "" }
                ),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:>3}. {:<12} keys {:<14} parent {}\n",
                i + 1,
                atom.alias,
                keys,
                parent
            ));
        }
        out
    }
}

/// Builds the plan for joining `q`'s atoms in the given order. Any
/// permutation is accepted; reverse-GYO orders are merely the ones with the
/// backjump guarantees, which [`validate_reverse_gyo`] checks separately.
pub fn compile_plan(q: &Query, order: &[usize]) -> Result<Plan, PlanError> {
    check_permutation(q, order)?;
    let mut steps: Vec<PlanStep> = Vec::with_capacity(order.len());
    for (i, &atom_idx) in order.iter().enumerate() {
        let atom = &q.atoms()[atom_idx];
        let keys: Vec<String> = atom
            .vars
            .iter()
            .filter(|v| {
                order[..i]
                    .iter()
                    .any(|&j| q.atoms()[j].has_var(v))
            })
            .cloned()
            .collect();
        let parent = (0..i).find(|&p| {
            let covering = &q.atoms()[order[p]];
            keys.iter().all(|k| covering.has_var(k))
        });
        debug_assert!(i > 0 || (keys.is_empty() && parent.is_none()));
        steps.push(PlanStep {
            atom: atom_idx,
            keys,
            parent,
            cyclic_parent: false,
        });
    }
    Ok(Plan::from_parts(steps, vec![0]))
}

/// True when the reversed order is a valid elimination order, i.e. the plan
/// walks some join tree of `q` from the root down.
pub fn validate_reverse_gyo(q: &Query, order: &[usize]) -> bool {
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    is_gyo_order(q, &reversed)
}

fn check_permutation(q: &Query, order: &[usize]) -> Result<(), PlanError> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..q.len()).collect::<Vec<_>>() {
        return Err(PlanError::NotAPermutation);
    }
    Ok(())
}

/// Binary join tree whose leaves are atom indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BushyPlan {
    Leaf(usize),
    Join(Box<BushyPlan>, Box<BushyPlan>),
}

impl BushyPlan {
    /// Parses nested parens over aliases: `((A B) (C D))`, `(A (B C))`, `A`.
    pub fn parse(q: &Query, text: &str) -> Result<BushyPlan, PlanError> {
        let mut tokens = tokenize(text);
        tokens.reverse();
        let tree = parse_node(q, &mut tokens)?;
        if let Some(t) = tokens.pop() {
            return Err(PlanError::Parse(format!("unexpected trailing `{}`", t)));
        }
        Ok(tree)
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            BushyPlan::Leaf(i) => out.push(*i),
            BushyPlan::Join(l, r) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn parse_node(q: &Query, tokens: &mut Vec<String>) -> Result<BushyPlan, PlanError> {
    match tokens.pop() {
        None => Err(PlanError::Parse("unexpected end of input".to_string())),
        Some(t) if t == "(" => {
            let left = parse_node(q, tokens)?;
            let right = parse_node(q, tokens)?;
            match tokens.pop() {
                Some(t) if t == ")" => Ok(BushyPlan::Join(Box::new(left), Box::new(right))),
                _ => Err(PlanError::Parse("expected `)` after two children".to_string())),
            }
        }
        Some(t) if t == ")" => Err(PlanError::Parse("unexpected `)`".to_string())),
        Some(name) => match q.atom_index(&name) {
            Some(i) => Ok(BushyPlan::Leaf(i)),
            None => Err(PlanError::UnknownAlias(name)),
        },
    }
}

/// One stage of a decomposed bushy plan: a linear plan over a stage-local
/// query whose atoms are original atoms and earlier temporaries.
/// `materialize_as` names the temporary the stage produces; the final stage
/// has none and yields the query result.
#[derive(Clone, Debug)]
pub struct Stage {
    pub query: Query,
    pub plan: Plan,
    pub materialize_as: Option<String>,
}

enum StageRef {
    Original(usize),
    Temp { name: String, vars: Vec<String> },
}

/// Post-order decomposition: every non-leaf right subtree becomes an earlier
/// stage materializing a temporary; the final stage flattens the left spine
/// with temporaries standing in for the subtrees they replaced. Stage count
/// is therefore the number of non-leaf right subtrees plus one.
pub fn decompose_bushy(q: &Query, tree: &BushyPlan) -> Result<Vec<Stage>, PlanError> {
    let mut leaves = Vec::new();
    tree.leaves(&mut leaves);
    let mut sorted = leaves.clone();
    sorted.sort_unstable();
    if sorted != (0..q.len()).collect::<Vec<_>>() {
        return Err(PlanError::LeafCoverage);
    }

    let mut stages: Vec<Stage> = Vec::new();
    let mut counter = 0usize;
    let refs = flatten(q, tree, &mut stages, &mut counter)?;
    stages.push(make_stage(q, refs, None)?);
    Ok(stages)
}

fn flatten(
    q: &Query,
    node: &BushyPlan,
    stages: &mut Vec<Stage>,
    counter: &mut usize,
) -> Result<Vec<StageRef>, PlanError> {
    match node {
        BushyPlan::Leaf(i) => Ok(vec![StageRef::Original(*i)]),
        BushyPlan::Join(l, r) => {
            let mut list = flatten(q, l, stages, counter)?;
            let right = match r.as_ref() {
                BushyPlan::Leaf(i) => StageRef::Original(*i),
                inner => {
                    let inner_refs = flatten(q, inner, stages, counter)?;
                    *counter += 1;
                    let name = temp_name(q, *counter);
                    let stage = make_stage(q, inner_refs, Some(name.clone()))?;
                    let vars = stage.query.vars_in_order();
                    stages.push(stage);
                    StageRef::Temp { name, vars }
                }
            };
            list.push(right);
            Ok(list)
        }
    }
}

fn temp_name(q: &Query, k: usize) -> String {
    let mut name = format!("m{}", k);
    while q.atom_index(&name).is_some() {
        name.insert(0, '_');
    }
    name
}

fn make_stage(q: &Query, refs: Vec<StageRef>, out: Option<String>) -> Result<Stage, PlanError> {
    let atoms: Vec<Atom> = refs
        .into_iter()
        .map(|r| match r {
            StageRef::Original(i) => Ok(q.atoms()[i].clone()),
            StageRef::Temp { name, vars } => Atom::new(name.clone(), name, vars),
        })
        .collect::<Result<_, QueryError>>()
        .map_err(PlanError::StageQuery)?;
    let query = Query::new(atoms).map_err(PlanError::StageQuery)?;
    let order: Vec<usize> = (0..query.len()).collect();
    let plan = compile_plan(&query, &order)?;
    Ok(Stage {
        query,
        plan,
        materialize_as: out,
    })
}

#[derive(Debug)]
pub enum PlanError {
    NotAPermutation,
    UnknownAlias(String),
    LeafCoverage,
    Parse(String),
    StageQuery(QueryError),
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::NotAPermutation => {
                write!(f, "plan must list every query atom exactly once")
            }
            PlanError::UnknownAlias(a) => write!(f, "plan names unknown atom `{}`", a),
            PlanError::LeafCoverage => {
                write!(f, "bushy tree must cover every query atom exactly once")
            }
            PlanError::Parse(d) => write!(f, "plan parse error: {}", d),
            PlanError::StageQuery(e) => write!(f, "stage construction failed: {}", e),
        }
    }
}

impl std::error::Error for PlanError {}
