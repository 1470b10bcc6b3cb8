use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{CRule, GroundProgram, Interpretation};
use crate::semantics::{is_answer_set, Strategy};

use super::{apply_jump, apply_step, jump_state, State, StepDelta};

/// How a node was reached from its parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Edge {
    Step(StepDelta),
    Jump {
        rules: Vec<Arc<CRule>>,
        answer_set: Interpretation,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub edge: Option<Edge>,
    pub state: State,
    pub children: Vec<usize>,
}

/// All computations explored from a root state; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComputationTree {
    nodes: Vec<Node>,
    current: usize,
}

impl Default for ComputationTree {
    fn default() -> Self {
        ComputationTree::new(State::empty())
    }
}

impl ComputationTree {
    pub fn new(root: State) -> Self {
        ComputationTree {
            nodes: vec![Node {
                id: 0,
                parent: None,
                edge: None,
                state: root,
                children: Vec::new(),
            }],
            current: 0,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn current_state(&self) -> &State {
        &self.nodes[self.current].state
    }

    /// Node ids from the root to `id`.
    pub fn path_to(&self, id: usize) -> Result<Vec<usize>> {
        let mut path = vec![self.node(id)?.id];
        let mut at = id;
        while let Some(p) = self.nodes[at].parent {
            path.push(p);
            at = p;
        }
        path.reverse();
        Ok(path)
    }

    /// States along the path to the current node.
    pub fn current_path_states(&self) -> Vec<State> {
        self.path_to(self.current)
            .expect("current node exists")
            .into_iter()
            .map(|k| self.nodes[k].state.clone())
            .collect()
    }

    /// Makes `id` the current node; later steps branch from there.
    pub fn retract(&mut self, id: usize) -> Result<()> {
        self.node(id)?;
        self.current = id;
        Ok(())
    }

    /// Applies a step at the current node and moves to the new child.
    pub fn step(&mut self, d: StepDelta, limits: &Limits) -> Result<usize> {
        let next = apply_step(self.current_state(), &d, limits)?;
        Ok(self.push(Edge::Step(d), next))
    }

    /// Jumps from the current node through `selected ⊆ P`.
    pub fn jump(&mut self, p: &GroundProgram, selected: &GroundProgram, limits: &Limits) -> Result<usize> {
        let (next, i) = apply_jump(p, self.current_state(), selected, limits)?;
        let edge = Edge::Jump {
            rules: selected.rules().to_vec(),
            answer_set: i,
        };
        Ok(self.push(edge, next))
    }

    fn push(&mut self, edge: Edge, state: State) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            parent: Some(self.current),
            edge: Some(edge),
            state,
            children: Vec::new(),
        });
        self.nodes[self.current].children.push(id);
        self.current = id;
        id
    }

    /// Rebuilds a tree from `(parent, edge)` records in node order, re-checking every edge.
    pub fn rebuild(
        root: State,
        records: &[(usize, Edge)],
        current: usize,
        p: &GroundProgram,
        limits: &Limits,
    ) -> Result<Self> {
        let mut tree = ComputationTree::new(root);
        for (parent, edge) in records {
            tree.retract(*parent)?;
            let from = tree.current_state().clone();
            let next = match edge {
                Edge::Step(d) => apply_step(&from, d, limits)?,
                Edge::Jump { rules, answer_set } => {
                    let selected = GroundProgram::from_shared(rules.iter().cloned());
                    if let Some(r) = selected.rules().iter().find(|r| !p.contains(r)) {
                        return Err(Error::UnknownRule(r.text()));
                    }
                    check_jump_target(&from, &selected, answer_set, limits)?;
                    jump_state(&from, &selected, answer_set)
                }
            };
            tree.push(edge.clone(), next);
        }
        tree.retract(current)?;
        Ok(tree)
    }
}

fn check_jump_target(
    from: &State,
    selected: &GroundProgram,
    i: &Interpretation,
    limits: &Limits,
) -> Result<()> {
    if !from.pos.is_subset(i) || from.neg.iter().any(|a| i.contains(a)) {
        return Err(Error::InvalidState(
            "stored jump answer set does not extend its start state".into(),
        ));
    }
    let aux = from.rules.union(selected);
    match is_answer_set(&aux, i, Strategy::Auto, limits) {
        Ok(rep) if !rep.is_answer_set => Err(Error::InvalidState(
            "stored jump answer set is not an answer set".into(),
        )),
        Err(e) if !e.is_cap() => Err(e),
        _ => Ok(()),
    }
}
