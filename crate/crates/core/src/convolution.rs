//! Tree convolutions: join-tree-shaped covers for queries that have no
//! single join tree. Nodes are atoms or whole nested trees; a tree must be a
//! join tree of its own node set once each nested tree is stood in for by a
//! virtual atom over all its variables.
//!
//! When every nested tree sits at the root of the tree containing it
//! ("rooted"), the convolution compiles to one pipelined plan: segments are
//! concatenated innermost-first, and a step whose tree-parent is the nested
//! root backjumps to the last step of the enclosing segment without deleting
//! there. Non-rooted convolutions fall back to stage-wise materialization.
//!
//! Text form, one convolution per file:
//!
//! ```text
//! (root:(S1 S2 S3 S4) R1 R2 R3 R4)
//! ```
//!
//! A parenthesized group is a tree: first entry is its root node, later
//! entries are children, themselves either plain nodes or deeper groups.
//! `root:(...)` marks a nested tree used as a node.

use std::fmt;

use crate::planner::{compile_plan, Plan, PlanError, PlanStep, Stage};
use crate::query::{is_join_forest, Atom, Query, QueryError};

#[derive(Clone, Debug)]
pub enum ConvNode {
    Atom(usize),
    Nested(Box<ConvTree>),
}

/// One tree of a convolution. Nodes are stored in pre-order (root first,
/// parents before children), which is exactly the per-segment plan order.
#[derive(Clone, Debug)]
pub struct ConvTree {
    nodes: Vec<ConvNode>,
    parent: Vec<Option<usize>>,
}

impl ConvTree {
    pub fn nodes(&self) -> &[ConvNode] {
        &self.nodes
    }

    pub fn parent_of(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// All variables under this tree, nested trees included, in first-use order.
    fn vars(&self, q: &Query, out: &mut Vec<String>) {
        for n in &self.nodes {
            match n {
                ConvNode::Atom(i) => {
                    for v in &q.atoms()[*i].vars {
                        if !out.contains(v) {
                            out.push(v.clone());
                        }
                    }
                }
                ConvNode::Nested(t) => t.vars(q, out),
            }
        }
    }

    fn collect_atoms(&self, out: &mut Vec<usize>) {
        for n in &self.nodes {
            match n {
                ConvNode::Atom(i) => out.push(*i),
                ConvNode::Nested(t) => t.collect_atoms(out),
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TreeConvolution {
    top: ConvTree,
}

impl TreeConvolution {
    pub fn top(&self) -> &ConvTree {
        &self.top
    }

    pub fn parse(q: &Query, text: &str) -> Result<TreeConvolution, ConvolutionError> {
        let mut tokens = tokenize(text);
        tokens.reverse();
        let ptree = parse_tree(&mut tokens)?;
        if let Some(t) = tokens.pop() {
            return Err(ConvolutionError::Parse(format!("unexpected trailing `{}`", t)));
        }
        Ok(TreeConvolution {
            top: build_tree(q, &ptree)?,
        })
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

struct PTree {
    root: PNode,
    children: Vec<PTree>,
}

enum PNode {
    Atom(String),
    Nested(Box<PTree>),
}

fn parse_tree(tokens: &mut Vec<String>) -> Result<PTree, ConvolutionError> {
    expect(tokens, "(")?;
    let root = match tokens.pop() {
        Some(t) if t == "root:" => {
            PNode::Nested(Box::new(parse_tree(tokens)?))
        }
        Some(t) if t == "(" || t == ")" => {
            return Err(ConvolutionError::Parse(
                "a tree must start with its root node".to_string(),
            ))
        }
        Some(name) => PNode::Atom(name),
        None => return Err(ConvolutionError::Parse("unexpected end of input".to_string())),
    };
    let mut children = Vec::new();
    loop {
        match tokens.last().map(String::as_str) {
            Some(")") => {
                tokens.pop();
                return Ok(PTree { root, children });
            }
            Some("(") => children.push(parse_tree(tokens)?),
            Some("root:") => {
                tokens.pop();
                children.push(PTree {
                    root: PNode::Nested(Box::new(parse_tree(tokens)?)),
                    children: Vec::new(),
                });
            }
            Some(_) => {
                let name = tokens.pop().unwrap();
                children.push(PTree {
                    root: PNode::Atom(name),
                    children: Vec::new(),
                });
            }
            None => {
                return Err(ConvolutionError::Parse("missing `)`".to_string()));
            }
        }
    }
}

fn expect(tokens: &mut Vec<String>, want: &str) -> Result<(), ConvolutionError> {
    match tokens.pop() {
        Some(t) if t == want => Ok(()),
        Some(t) => Err(ConvolutionError::Parse(format!("expected `{}`, found `{}`", want, t))),
        None => Err(ConvolutionError::Parse(format!("expected `{}`", want))),
    }
}

fn build_tree(q: &Query, p: &PTree) -> Result<ConvTree, ConvolutionError> {
    let mut tree = ConvTree {
        nodes: Vec::new(),
        parent: Vec::new(),
    };
    build_into(q, p, None, &mut tree)?;
    Ok(tree)
}

fn build_into(
    q: &Query,
    p: &PTree,
    parent: Option<usize>,
    tree: &mut ConvTree,
) -> Result<(), ConvolutionError> {
    let node = match &p.root {
        PNode::Atom(name) => match q.atom_index(name) {
            Some(i) => ConvNode::Atom(i),
            None => return Err(ConvolutionError::UnknownAlias(name.clone())),
        },
        PNode::Nested(sub) => ConvNode::Nested(Box::new(build_tree(q, sub)?)),
    };
    let idx = tree.nodes.len();
    tree.nodes.push(node);
    tree.parent.push(parent);
    for child in &p.children {
        build_into(q, child, Some(idx), tree)?;
    }
    Ok(())
}

/// Checks atom coverage (each query atom in exactly one tree, none missing)
/// and that every tree, nested ones included, is a join tree of its node
/// set with nested nodes widened to virtual atoms over their variables.
pub fn validate_convolution(q: &Query, conv: &TreeConvolution) -> Result<(), ConvolutionError> {
    let mut atoms = Vec::new();
    conv.top.collect_atoms(&mut atoms);
    let mut sorted = atoms.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if atoms.len() != q.len() || sorted.len() != q.len() {
        return Err(ConvolutionError::AtomCoverage);
    }
    validate_tree(q, &conv.top)
}

fn validate_tree(q: &Query, tree: &ConvTree) -> Result<(), ConvolutionError> {
    let node_vars: Vec<Vec<String>> = tree
        .nodes
        .iter()
        .map(|n| match n {
            ConvNode::Atom(i) => q.atoms()[*i].vars.clone(),
            ConvNode::Nested(t) => {
                let mut vars = Vec::new();
                t.vars(q, &mut vars);
                vars
            }
        })
        .collect();
    if !is_join_forest(&node_vars, &tree.parent) {
        return Err(ConvolutionError::NotAJoinTree);
    }
    for n in &tree.nodes {
        if let ConvNode::Nested(t) = n {
            validate_tree(q, t)?;
        }
    }
    Ok(())
}

/// True when every nested tree occupies the root of its containing tree.
/// Rooted convolutions form a chain of trees and compile to one plan.
pub fn is_rooted(conv: &TreeConvolution) -> bool {
    tree_rooted(&conv.top)
}

fn tree_rooted(tree: &ConvTree) -> bool {
    tree.nodes.iter().enumerate().all(|(i, n)| match n {
        ConvNode::Atom(_) => true,
        ConvNode::Nested(t) => i == 0 && tree_rooted(t),
    })
}

/// Compiles a rooted convolution to a single pipelined plan: reverse-GYO
/// segments concatenated innermost-first. Within a segment, a step's parent
/// is its tree-parent's plan position; a step hanging off the nested root
/// gets the last step of the previous segment with `cyclic_parent` set.
pub fn plan_from_rooted(q: &Query, conv: &TreeConvolution) -> Result<Plan, ConvolutionError> {
    validate_convolution(q, conv)?;
    if !is_rooted(conv) {
        return Err(ConvolutionError::NotRooted);
    }

    // Rooted means the nesting forms a chain from the top tree inward.
    let mut chain: Vec<&ConvTree> = Vec::new();
    let mut cur = &conv.top;
    loop {
        chain.push(cur);
        match cur.nodes.first() {
            Some(ConvNode::Nested(t)) => cur = t,
            _ => break,
        }
    }
    chain.reverse();

    let mut steps: Vec<PlanStep> = Vec::new();
    let mut segments: Vec<usize> = Vec::new();
    let mut emitted_vars: Vec<String> = Vec::new();
    for tree in chain {
        segments.push(steps.len());
        let prev_end = steps.len().checked_sub(1);
        // plan position of each atom node of this tree, by node index
        let mut pos_of_node = vec![usize::MAX; tree.nodes.len()];
        for (node_idx, node) in tree.nodes.iter().enumerate() {
            let atom_idx = match node {
                ConvNode::Atom(i) => *i,
                ConvNode::Nested(_) => continue, // the previous segment stands in
            };
            let atom = &q.atoms()[atom_idx];
            let keys: Vec<String> = atom
                .vars
                .iter()
                .filter(|v| emitted_vars.contains(v))
                .cloned()
                .collect();
            let (parent, cyclic) = match tree.parent[node_idx] {
                None => (None, false),
                Some(p) => match &tree.nodes[p] {
                    ConvNode::Atom(_) => (Some(pos_of_node[p]), false),
                    ConvNode::Nested(_) => (prev_end, true),
                },
            };
            pos_of_node[node_idx] = steps.len();
            steps.push(PlanStep {
                atom: atom_idx,
                keys,
                parent,
                cyclic_parent: cyclic,
            });
            for v in &atom.vars {
                if !emitted_vars.contains(v) {
                    emitted_vars.push(v.clone());
                }
            }
        }
    }
    // A tree containing only the nested node contributes no steps; drop its
    // segment marker.
    segments.dedup();
    if segments.last() == Some(&steps.len()) && !steps.is_empty() {
        segments.pop();
    }
    Ok(Plan::from_parts(steps, segments))
}

/// Stage-wise execution order for any convolution: nested trees materialize
/// innermost-first into temporaries, each consumed by the tree above as an
/// ordinary atom. The final stage covers the top tree.
pub fn stages_from_convolution(
    q: &Query,
    conv: &TreeConvolution,
) -> Result<Vec<Stage>, ConvolutionError> {
    validate_convolution(q, conv)?;
    let mut stages = Vec::new();
    let mut counter = 0usize;
    build_stage(q, &conv.top, None, &mut stages, &mut counter)?;
    Ok(stages)
}

fn build_stage(
    q: &Query,
    tree: &ConvTree,
    out: Option<String>,
    stages: &mut Vec<Stage>,
    counter: &mut usize,
) -> Result<Vec<String>, ConvolutionError> {
    let mut atoms: Vec<Atom> = Vec::new();
    for node in &tree.nodes {
        match node {
            ConvNode::Atom(i) => atoms.push(q.atoms()[*i].clone()),
            ConvNode::Nested(t) => {
                *counter += 1;
                let mut name = format!("m{}", *counter);
                while q.atom_index(&name).is_some() {
                    name.insert(0, '_');
                }
                let vars = build_stage(q, t, Some(name.clone()), stages, counter)?;
                atoms.push(Atom::new(name.clone(), name, vars).map_err(ConvolutionError::StageQuery)?);
            }
        }
    }
    let query = Query::new(atoms).map_err(ConvolutionError::StageQuery)?;
    let vars = query.vars_in_order();
    let order: Vec<usize> = (0..query.len()).collect();
    let plan = compile_plan(&query, &order).map_err(ConvolutionError::StagePlan)?;
    stages.push(Stage {
        query,
        plan,
        materialize_as: out,
    });
    Ok(vars)
}

#[derive(Debug)]
pub enum ConvolutionError {
    Parse(String),
    UnknownAlias(String),
    AtomCoverage,
    NotAJoinTree,
    NotRooted,
    StageQuery(QueryError),
    StagePlan(PlanError),
}

impl fmt::Display for ConvolutionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvolutionError::Parse(d) => write!(f, "convolution parse error: {}", d),
            ConvolutionError::UnknownAlias(a) => {
                write!(f, "convolution names unknown atom `{}`", a)
            }
            ConvolutionError::AtomCoverage => {
                write!(f, "convolution must cover every query atom exactly once")
            }
            ConvolutionError::NotAJoinTree => write!(
                f,
                "a convolution tree is not a join tree of its nodes (a variable's nodes are not connected)"
            ),
            ConvolutionError::NotRooted => write!(
                f,
                "convolution is not rooted; execute it stage-wise via materialization"
            ),
            ConvolutionError::StageQuery(e) => write!(f, "stage construction failed: {}", e),
            ConvolutionError::StagePlan(e) => write!(f, "stage planning failed: {}", e),
        }
    }
}

impl std::error::Error for ConvolutionError {}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(name: &str, vars: &[&str]) -> Atom {
        Atom::new(name, name, vars.to_vec()).unwrap()
    }

    /// Four edge atoms in a cycle, four star atoms on a shared hub variable.
    fn box_query() -> Query {
        Query::new(vec![
            atom("R1", &["x1", "x2"]),
            atom("R2", &["x2", "x3"]),
            atom("R3", &["x3", "x4"]),
            atom("R4", &["x4", "x1"]),
            atom("S1", &["x1", "y"]),
            atom("S2", &["x2", "y"]),
            atom("S3", &["x3", "y"]),
            atom("S4", &["x4", "y"]),
        ])
        .unwrap()
    }

    const BOX_CONV: &str = "(root:(S1 S2 S3 S4) R1 R2 R3 R4)";

    #[test]
    fn parses_and_validates_the_box_convolution() {
        let q = box_query();
        let conv = TreeConvolution::parse(&q, BOX_CONV).unwrap();
        validate_convolution(&q, &conv).unwrap();
        assert!(is_rooted(&conv));
    }

    #[test]
    fn box_plan_concatenates_segments_with_cyclic_parents() {
        let q = box_query();
        let conv = TreeConvolution::parse(&q, BOX_CONV).unwrap();
        let plan = plan_from_rooted(&q, &conv).unwrap();
        assert_eq!(
            plan.aliases(&q),
            vec!["S1", "S2", "S3", "S4", "R1", "R2", "R3", "R4"]
        );
        assert_eq!(plan.segments(), &[0, 4]);
        // inner star: S2..S4 hang off S1 and may delete there
        assert_eq!(plan.steps()[0].parent, None);
        for i in 1..4 {
            assert_eq!(plan.steps()[i].parent, Some(0));
            assert!(!plan.steps()[i].cyclic_parent);
            assert_eq!(plan.steps()[i].keys, vec!["y"]);
        }
        // every edge atom backjumps to S4, the last step of the inner
        // segment, and such landings never delete
        for i in 4..8 {
            assert_eq!(plan.steps()[i].parent, Some(3), "step {}", i);
            assert!(plan.steps()[i].cyclic_parent);
            assert_eq!(plan.steps()[i].keys.len(), 2, "both edge vars are bound");
        }
    }

    #[test]
    fn two_level_chain_points_at_last_inner_step() {
        let q = Query::new(vec![
            atom("A", &["a", "b"]),
            atom("B", &["b", "c"]),
            atom("C", &["c", "d"]),
        ])
        .unwrap();
        let conv = TreeConvolution::parse(&q, "(root:(A B) C)").unwrap();
        validate_convolution(&q, &conv).unwrap();
        let plan = plan_from_rooted(&q, &conv).unwrap();
        assert_eq!(plan.aliases(&q), vec!["A", "B", "C"]);
        assert_eq!(plan.segments(), &[0, 2]);
        assert_eq!(plan.steps()[1].parent, Some(0));
        assert!(!plan.steps()[1].cyclic_parent);
        assert_eq!(plan.steps()[2].parent, Some(1));
        assert!(plan.steps()[2].cyclic_parent);
    }

    #[test]
    fn single_tree_convolution_is_an_ordinary_plan() {
        let q = Query::new(vec![
            atom("R", &["i", "x"]),
            atom("S", &["x", "y", "j"]),
            atom("T", &["y", "k"]),
            atom("U", &["y", "l"]),
        ])
        .unwrap();
        let conv = TreeConvolution::parse(&q, "(R (S T U))").unwrap();
        validate_convolution(&q, &conv).unwrap();
        assert!(is_rooted(&conv));
        let plan = plan_from_rooted(&q, &conv).unwrap();
        assert_eq!(plan.aliases(&q), vec!["R", "S", "T", "U"]);
        assert_eq!(plan.segments(), &[0]);
        let parents: Vec<Option<usize>> = plan.steps().iter().map(|s| s.parent).collect();
        assert_eq!(parents, vec![None, Some(0), Some(1), Some(1)]);
        assert!(plan.steps().iter().all(|s| !s.cyclic_parent));
    }

    #[test]
    fn one_flat_tree_over_a_cyclic_query_is_rejected() {
        let q = box_query();
        let conv =
            TreeConvolution::parse(&q, "(S1 S2 S3 S4 R1 R2 R3 R4)").unwrap();
        assert!(matches!(
            validate_convolution(&q, &conv),
            Err(ConvolutionError::NotAJoinTree)
        ));
    }

    #[test]
    fn coverage_errors_catch_missing_and_duplicate_atoms() {
        let q = box_query();
        let conv = TreeConvolution::parse(&q, "(root:(S1 S2 S3 S4) R1 R2 R3)").unwrap();
        assert!(matches!(
            validate_convolution(&q, &conv),
            Err(ConvolutionError::AtomCoverage)
        ));
        let conv = TreeConvolution::parse(&q, "(root:(S1 S2 S3 S4) R1 R1 R2 R3 R4)").unwrap();
        assert!(matches!(
            validate_convolution(&q, &conv),
            Err(ConvolutionError::AtomCoverage)
        ));
        assert!(matches!(
            TreeConvolution::parse(&q, "(root:(S1 Sx) R1)"),
            Err(ConvolutionError::UnknownAlias(_))
        ));
    }

    #[test]
    fn non_rooted_goes_stage_wise() {
        let q = Query::new(vec![
            atom("A", &["x", "y"]),
            atom("B", &["y", "z"]),
            atom("C", &["z", "w"]),
        ])
        .unwrap();
        let conv = TreeConvolution::parse(&q, "(A root:(B C))").unwrap();
        validate_convolution(&q, &conv).unwrap();
        assert!(!is_rooted(&conv));
        assert!(matches!(
            plan_from_rooted(&q, &conv),
            Err(ConvolutionError::NotRooted)
        ));
        let stages = stages_from_convolution(&q, &conv).unwrap();
        assert_eq!(stages.len(), 2);
        assert_eq!(stages[0].materialize_as.as_deref(), Some("m1"));
        assert_eq!(stages[0].plan.aliases(&stages[0].query), vec!["B", "C"]);
        assert_eq!(stages[1].materialize_as, None);
        assert_eq!(stages[1].plan.aliases(&stages[1].query), vec!["A", "m1"]);
        assert_eq!(stages[1].query.atoms()[1].vars, vec!["y", "z", "w"]);
    }

    #[test]
    fn deeper_structural_subtrees_parse() {
        let q = Query::new(vec![
            atom("A", &["a", "b"]),
            atom("B", &["b", "c"]),
            atom("C", &["c", "d"]),
        ])
        .unwrap();
        // chain A <- B <- C written with an explicit subtree
        let conv = TreeConvolution::parse(&q, "(A (B C))").unwrap();
        validate_convolution(&q, &conv).unwrap();
        let plan = plan_from_rooted(&q, &conv).unwrap();
        assert_eq!(plan.aliases(&q), vec!["A", "B", "C"]);
        assert_eq!(
            plan.steps().iter().map(|s| s.parent).collect::<Vec<_>>(),
            vec![None, Some(0), Some(1)]
        );
    }
}
