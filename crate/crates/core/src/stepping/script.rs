//! Step scripts: JSON action lists that drive a computation tree.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{GroundingResult, Subst};
use crate::limits::Limits;
use crate::model::{AtomSet, CRule, GroundProgram};

use super::{undecided_atoms, ComputationTree, Edge, State, StepDelta};

/// A rule given by source statement id or by ground rule text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleRef {
    Id(usize),
    Text(String),
}

/// A jump selection entry: a whole statement, a ground rule, or filtered instances.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleSel {
    Ref(RuleRef),
    Instances { rule: usize, subst: Subst },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Action {
    Step {
        rule: RuleRef,
        #[serde(default, skip_serializing_if = "Subst::is_empty")]
        subst: Subst,
        #[serde(rename = "true", default)]
        true_atoms: AtomSet,
        /// Defaults to the undecided atoms not listed as true.
        #[serde(rename = "false", default, skip_serializing_if = "Option::is_none")]
        false_atoms: Option<AtomSet>,
    },
    Jump {
        rules: Vec<RuleSel>,
    },
    Retract {
        node: usize,
    },
}

pub fn parse_script(text: &str) -> Result<Vec<Action>> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("step script: {e}"),
    })
}

/// The unique ground rule a reference denotes.
pub fn resolve_rule(gr: &GroundingResult, rule: &RuleRef, subst: &Subst) -> Result<Arc<CRule>> {
    match rule {
        RuleRef::Text(t) => gr
            .program
            .find_by_text(t)
            .and_then(|k| gr.program.get(k).cloned())
            .ok_or_else(|| Error::UnknownRule(t.clone())),
        RuleRef::Id(n) => {
            let found = gr.instances_matching(*n, subst)?;
            match found.len() {
                1 => Ok(found[0].0.clone()),
                0 => Err(Error::UnknownRule(format!(
                    "r{n} has no instance matching the substitution"
                ))),
                k => Err(Error::UnknownRule(format!(
                    "r{n} has {k} matching instances; give a substitution that picks one"
                ))),
            }
        }
    }
}

/// The ground program `P'` a jump selection denotes.
pub fn resolve_selection(gr: &GroundingResult, sels: &[RuleSel]) -> Result<GroundProgram> {
    let mut rules = Vec::new();
    for sel in sels {
        match sel {
            RuleSel::Ref(RuleRef::Id(n)) => rules.extend(gr.instances_of(*n)?),
            RuleSel::Ref(r @ RuleRef::Text(_)) => rules.push(resolve_rule(gr, r, &Subst::new())?),
            RuleSel::Instances { rule, subst } => rules.extend(
                gr.instances_matching(*rule, subst)?
                    .into_iter()
                    .map(|(r, _)| r),
            ),
        }
    }
    Ok(GroundProgram::from_shared(rules))
}

/// Builds the step for `rule`; unlisted undecided atoms go false unless `false_atoms` is given.
pub fn make_delta(
    s: &State,
    rule: Arc<CRule>,
    true_atoms: AtomSet,
    false_atoms: Option<AtomSet>,
) -> StepDelta {
    let delta_false = false_atoms.unwrap_or_else(|| {
        undecided_atoms(s, &rule)
            .into_iter()
            .filter(|a| !true_atoms.contains(a))
            .collect()
    });
    StepDelta {
        rule,
        delta_true: true_atoms,
        delta_false,
    }
}

/// Runs one action against the tree; returns the resulting current node.
pub fn run_action(
    gr: &GroundingResult,
    tree: &mut ComputationTree,
    action: &Action,
    limits: &Limits,
) -> Result<usize> {
    match action {
        Action::Step {
            rule,
            subst,
            true_atoms,
            false_atoms,
        } => {
            let r = resolve_rule(gr, rule, subst)?;
            let d = make_delta(tree.current_state(), r, true_atoms.clone(), false_atoms.clone());
            tree.step(d, limits)
        }
        Action::Jump { rules } => {
            let selected = resolve_selection(gr, rules)?;
            tree.jump(&gr.program, &selected, limits)
        }
        Action::Retract { node } => {
            tree.retract(*node)?;
            Ok(*node)
        }
    }
}

/// A script that rebuilds `tree` node by node, ending at its current node.
pub fn tree_script(tree: &ComputationTree) -> Vec<Action> {
    let mut out = Vec::new();
    let mut at = 0;
    for node in &tree.nodes()[1..] {
        let parent = node.parent.expect("non-root nodes have parents");
        if parent != at {
            out.push(Action::Retract { node: parent });
        }
        match node.edge.as_ref().expect("non-root nodes have edges") {
            Edge::Step(d) => out.push(Action::Step {
                rule: RuleRef::Text(d.rule.text()),
                subst: Subst::new(),
                true_atoms: d.delta_true.clone(),
                false_atoms: Some(d.delta_false.clone()),
            }),
            Edge::Jump { rules, .. } => out.push(Action::Jump {
                rules: rules
                    .iter()
                    .map(|r| RuleSel::Ref(RuleRef::Text(r.text())))
                    .collect(),
            }),
        }
        at = node.id;
    }
    if tree.current() != at {
        out.push(Action::Retract {
            node: tree.current(),
        });
    }
    out
}
