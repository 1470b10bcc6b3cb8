//! Sessions: a ground program, its computation tree and the session file format.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use acpstep_core::frontend::{load, GroundingResult, SourceProgram, Span};
use acpstep_core::model::{AtomSet, CRule, GroundProgram, Interpretation};
use acpstep_core::stepping::{computation_status, ComputationTree, Edge, State, StatusReport, StepDelta};
use acpstep_core::Limits;

use crate::error::{ErrorCode, Result, ServiceError};

pub const FORMAT: &str = "acpstep-session";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub limits: Limits,
}

/// The wire form of a state. `node` and `status` are absent for states that
/// are not in the tree, such as the intermediate states of an expanded jump.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    /// Indices into the session's ground program.
    pub rules: Vec<usize>,
    pub pos: Interpretation,
    pub neg: AtomSet,
    /// The nonempty members of the tracked unfounded sets.
    pub unfounded: Vec<AtomSet>,
    pub stable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<StatusReport>,
}

pub fn sha256_hex(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    source: String,
    source_hash: String,
    parsed: SourceProgram,
    grounding: GroundingResult,
    tree: ComputationTree,
    pub settings: Settings,
    /// Set once the source is edited after the session started.
    edited_source: Option<String>,
}

impl Session {
    /// Parses and grounds `text`; the tree starts at the empty state.
    pub fn create(id: impl Into<String>, text: &str, settings: Settings) -> Result<Session> {
        let (parsed, grounding) = load(text, &settings.limits)?;
        Ok(Session {
            id: id.into(),
            source: text.to_string(),
            source_hash: sha256_hex(text),
            parsed,
            grounding,
            tree: ComputationTree::default(),
            settings,
            edited_source: None,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn source_hash(&self) -> &str {
        &self.source_hash
    }

    pub fn parsed(&self) -> &SourceProgram {
        &self.parsed
    }

    pub fn grounding(&self) -> &GroundingResult {
        &self.grounding
    }

    pub fn program(&self) -> &GroundProgram {
        &self.grounding.program
    }

    pub fn tree(&self) -> &ComputationTree {
        &self.tree
    }

    pub(crate) fn tree_mut(&mut self) -> &mut ComputationTree {
        &mut self.tree
    }

    pub fn limits(&self) -> &Limits {
        &self.settings.limits
    }

    pub fn desynchronized(&self) -> bool {
        self.edited_source.is_some()
    }

    pub fn edited_source(&self) -> Option<&str> {
        self.edited_source.as_deref()
    }

    /// Records an edit of the source. The ground program and tree stay as they
    /// are; a changed text only marks the session desynchronized.
    pub fn update_source(&mut self, text: &str) {
        if text == self.source {
            self.edited_source = None;
        } else {
            self.edited_source = Some(text.to_string());
        }
    }

    pub fn rule_id(&self, r: &CRule) -> usize {
        self.program()
            .index_of(r)
            .expect("tree rules belong to the session program")
    }

    pub fn rule(&self, id: usize) -> Result<&Arc<CRule>> {
        self.program()
            .get(id)
            .ok_or_else(|| ServiceError::new(ErrorCode::UnknownRule, format!("no ground rule #{id}")))
    }

    pub fn state_payload(&self, s: &State) -> StatePayload {
        let mut rules: Vec<usize> = s.rules.rules().iter().map(|r| self.rule_id(r)).collect();
        rules.sort_unstable();
        StatePayload {
            node: None,
            rules,
            pos: s.pos.clone(),
            neg: s.neg.clone(),
            unfounded: s.nonempty_unfounded().cloned().collect(),
            stable: s.is_stable(),
            status: None,
        }
    }

    pub fn status_at(&self, node: usize, check_failed: bool) -> Result<StatusReport> {
        let states: Vec<State> = self
            .tree
            .path_to(node)?
            .into_iter()
            .map(|k| self.tree.nodes()[k].state.clone())
            .collect();
        Ok(computation_status(
            self.program(),
            &states,
            check_failed,
            self.limits(),
        )?)
    }

    /// The payload of a tree node, with the status of the computation ending there.
    pub fn node_payload(&self, node: usize) -> Result<StatePayload> {
        let n = self.tree.node(node)?;
        let mut p = self.state_payload(&n.state);
        p.node = Some(node);
        p.status = Some(self.status_at(node, false)?);
        Ok(p)
    }

    pub fn save(&self) -> SessionFile {
        let nodes = self.tree.nodes()[1..]
            .iter()
            .map(|n| NodeRecord {
                parent: n.parent.expect("non-root nodes have parents"),
                edge: match n.edge.as_ref().expect("non-root nodes have edges") {
                    Edge::Step(d) => EdgeRecord::Step {
                        rule: self.rule_id(&d.rule),
                        delta_true: d.delta_true.clone(),
                        delta_false: d.delta_false.clone(),
                    },
                    Edge::Jump { rules, answer_set } => EdgeRecord::Jump {
                        rules: rules.iter().map(|r| self.rule_id(r)).collect(),
                        answer_set: answer_set.clone(),
                    },
                },
            })
            .collect();
        SessionFile {
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            grounder_version: acpstep_core::VERSION.to_string(),
            source_hash: self.source_hash.clone(),
            source: self.source.clone(),
            edited_source: self.edited_source.clone(),
            settings: self.settings.clone(),
            rules: self.program().rules().iter().map(|r| r.text()).collect(),
            nodes,
            current: self.tree.current(),
        }
    }

    pub fn save_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.save()).expect("session files serialize");
        out.push(b'\n');
        out
    }

    pub fn load(id: impl Into<String>, file: SessionFile) -> Result<Session> {
        if file.format != FORMAT {
            return Err(ServiceError::new(
                ErrorCode::SchemaError,
                format!("not a session file (format {:?})", file.format),
            ));
        }
        if file.version != FORMAT_VERSION {
            return Err(ServiceError::new(
                ErrorCode::VersionMismatch,
                format!("session file version {} is not {FORMAT_VERSION}", file.version),
            ));
        }
        if file.grounder_version != acpstep_core::VERSION {
            return Err(ServiceError::new(
                ErrorCode::VersionMismatch,
                format!(
                    "session was grounded by version {}, this is {}",
                    file.grounder_version,
                    acpstep_core::VERSION
                ),
            ));
        }
        if sha256_hex(&file.source) != file.source_hash {
            return Err(ServiceError::new(
                ErrorCode::HashMismatch,
                "source text does not match the recorded hash",
            ));
        }
        let mut s = Session::create(id, &file.source, file.settings)?;
        let texts: Vec<String> = s.program().rules().iter().map(|r| r.text()).collect();
        if texts != file.rules {
            return Err(ServiceError::new(
                ErrorCode::HashMismatch,
                "inlined ground rules differ from the regrounded program",
            ));
        }
        let mut records = Vec::with_capacity(file.nodes.len());
        for n in &file.nodes {
            let edge = match &n.edge {
                EdgeRecord::Step {
                    rule,
                    delta_true,
                    delta_false,
                } => Edge::Step(StepDelta {
                    rule: s.rule(*rule)?.clone(),
                    delta_true: delta_true.clone(),
                    delta_false: delta_false.clone(),
                }),
                EdgeRecord::Jump { rules, answer_set } => Edge::Jump {
                    rules: rules
                        .iter()
                        .map(|k| s.rule(*k).cloned())
                        .collect::<Result<_>>()?,
                    answer_set: answer_set.clone(),
                },
            };
            records.push((n.parent, edge));
        }
        s.tree = ComputationTree::rebuild(
            State::empty(),
            &records,
            file.current,
            s.program(),
            s.limits(),
        )?;
        s.edited_source = file.edited_source;
        Ok(s)
    }

    pub fn load_bytes(id: impl Into<String>, bytes: &[u8]) -> Result<Session> {
        let file: SessionFile = serde_json::from_slice(bytes).map_err(|e| {
            ServiceError::new(ErrorCode::SchemaError, format!("session file: {e}"))
        })?;
        Session::load(id, file)
    }

    pub fn load_value(id: impl Into<String>, v: Value) -> Result<Session> {
        let file: SessionFile = serde_json::from_value(v).map_err(|e| {
            ServiceError::new(ErrorCode::SchemaError, format!("session file: {e}"))
        })?;
        Session::load(id, file)
    }

    pub fn statements(&self) -> Vec<StatementInfo> {
        self.parsed
            .statements
            .iter()
            .map(|st| StatementInfo {
                id: st.id,
                text: st.text.clone(),
                span: st.span,
                constraint: st.is_constraint(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementInfo {
    pub id: usize,
    pub text: String,
    pub span: Span,
    pub constraint: bool,
}

/// The versioned session file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    pub format: String,
    pub version: u32,
    pub grounder_version: String,
    pub source_hash: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_source: Option<String>,
    pub settings: Settings,
    /// Canonical texts of the ground rules; edges refer to them by index.
    pub rules: Vec<String>,
    /// Non-root nodes in creation order; node `k + 1` is `nodes[k]`.
    pub nodes: Vec<NodeRecord>,
    pub current: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub parent: usize,
    pub edge: EdgeRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgeRecord {
    Step {
        rule: usize,
        #[serde(rename = "true")]
        delta_true: AtomSet,
        #[serde(rename = "false")]
        delta_false: AtomSet,
    },
    Jump {
        rules: Vec<usize>,
        answer_set: Interpretation,
    },
}
