//! Headless replay of step scripts and saved sessions through the protocol.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use acpstep_core::stepping::script::{parse_script, tree_script, Action};

use crate::error::{ErrorCode, Result, ServiceError};
use crate::protocol::action_request;
use crate::session::{Session, Settings, StatePayload, FORMAT};

/// Every node of a tree with its state payload.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub current: usize,
    pub nodes: Vec<ReplayNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayNode {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    pub state: StatePayload,
}

pub fn report(s: &Session) -> Result<ReplayReport> {
    let nodes = s
        .tree()
        .nodes()
        .iter()
        .map(|n| {
            Ok(ReplayNode {
                id: n.id,
                parent: n.parent,
                state: s.node_payload(n.id)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ReplayReport {
        current: s.tree().current(),
        nodes,
    })
}

fn is_session_file(v: &Value) -> bool {
    v.get("format").and_then(Value::as_str) == Some(FORMAT)
}

/// Actions from a step script, or from the edge log of a saved session.
pub fn script_actions(text: &str) -> Result<Vec<Action>> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ServiceError::new(ErrorCode::SchemaError, format!("script: {e}")))?;
    if is_session_file(&v) {
        let s = Session::load_value("script", v)?;
        return Ok(tree_script(s.tree()));
    }
    Ok(parse_script(text)?)
}

/// An expected report, given directly or as a saved session.
pub fn expected_report(text: &str) -> Result<ReplayReport> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| ServiceError::new(ErrorCode::SchemaError, format!("expectation: {e}")))?;
    if is_session_file(&v) {
        return report(&Session::load_value("expect", v)?);
    }
    serde_json::from_value(v)
        .map_err(|e| ServiceError::new(ErrorCode::SchemaError, format!("expectation: {e}")))
}

/// Runs `actions` through `handle` on a fresh session. A failing action
/// reports its index in the error data.
pub fn replay(source: &str, settings: Settings, actions: &[Action]) -> Result<Session> {
    let mut s = Session::create("replay", source, settings)?;
    for (k, a) in actions.iter().enumerate() {
        let (resp, _) = s.handle(&action_request(json!(k), a));
        if let Some(e) = resp.error() {
            let mut e = e.clone();
            e.message = format!("action {k}: {}", e.message);
            e.data = Some(json!({"action": k, "detail": e.data}));
            return Err(e);
        }
    }
    Ok(s)
}

/// The first difference between two reports, if any.
pub fn diff(expected: &ReplayReport, actual: &ReplayReport) -> Option<String> {
    if expected.nodes.len() != actual.nodes.len() {
        return Some(format!(
            "expected {} nodes, replay produced {}",
            expected.nodes.len(),
            actual.nodes.len()
        ));
    }
    for (e, a) in expected.nodes.iter().zip(&actual.nodes) {
        if e != a {
            return Some(format!(
                "node {} differs:\n  expected {}\n  actual   {}",
                e.id,
                serde_json::to_string(e).expect("nodes serialize"),
                serde_json::to_string(a).expect("nodes serialize")
            ));
        }
    }
    if expected.current != actual.current {
        return Some(format!(
            "expected current node {}, replay ends at {}",
            expected.current, actual.current
        ));
    }
    None
}
