//! Request/response envelopes and method dispatch.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use acpstep_core::analysis::analyze;
use acpstep_core::frontend::{parse_filter, Subst};
use acpstep_core::model::AtomSet;
use acpstep_core::stepping::script::{make_delta, resolve_rule, resolve_selection, Action, RuleRef, RuleSel};
use acpstep_core::stepping::{
    active_candidates, active_pending, expand_jump, source_rank, undecided_atoms, validate_assignment, Computation, Edge,
};

use crate::error::{ErrorCode, Result, ServiceError};
use crate::session::Session;

pub const METHODS: &[&str] = &[
    "candidates.list",
    "instances.list",
    "step.validate",
    "step.apply",
    "jump.apply",
    "jump.expand",
    "retract",
    "status",
    "analyze",
    "state.get",
    "tree.get",
    "session.save",
];

pub const STATE_CHANGED: &str = "state.changed";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: Value,
    pub method: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Ok { id: Value, result: Value },
    Err { id: Value, error: ServiceError },
}

impl Response {
    pub fn id(&self) -> &Value {
        match self {
            Response::Ok { id, .. } | Response::Err { id, .. } => id,
        }
    }

    pub fn result(&self) -> Option<&Value> {
        match self {
            Response::Ok { result, .. } => Some(result),
            Response::Err { .. } => None,
        }
    }

    pub fn error(&self) -> Option<&ServiceError> {
        match self {
            Response::Ok { .. } => None,
            Response::Err { error, .. } => Some(error),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event: String,
    pub payload: Value,
}

/// Anything the server sends over a session socket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outgoing {
    Response(Response),
    Event(Event),
}

/// The request that performs a step-script action.
pub fn action_request(id: Value, action: &Action) -> Request {
    let (method, mut params) = match action {
        Action::Step { .. } => ("step.apply", serde_json::to_value(action).expect("actions serialize")),
        Action::Jump { .. } => ("jump.apply", serde_json::to_value(action).expect("actions serialize")),
        Action::Retract { .. } => ("retract", serde_json::to_value(action).expect("actions serialize")),
    };
    params.as_object_mut().expect("actions are objects").remove("op");
    Request {
        id,
        method: method.to_string(),
        params,
    }
}

fn params<T: DeserializeOwned>(v: &Value) -> Result<T> {
    let v = if v.is_null() { json!({}) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| ServiceError::new(ErrorCode::InvalidParams, e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstancesParams {
    statement: usize,
    #[serde(default)]
    filter: String,
    #[serde(default)]
    candidates_only: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepParams {
    rule: RuleRef,
    #[serde(default)]
    subst: Subst,
    #[serde(rename = "true", default)]
    true_atoms: AtomSet,
    #[serde(rename = "false", default)]
    false_atoms: Option<AtomSet>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpParams {
    rules: Vec<RuleSel>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeParams {
    node: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptNodeParams {
    #[serde(default)]
    node: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatusParams {
    #[serde(default)]
    failed_at: bool,
}

impl Session {
    /// Handles one request; state-changing methods also return a `state.changed` event.
    pub fn handle(&mut self, req: &Request) -> (Response, Vec<Event>) {
        let id = req.id.clone();
        match self.dispatch(&req.method, &req.params) {
            Ok((result, changed)) => {
                let events = changed
                    .then(|| Event {
                        event: STATE_CHANGED.to_string(),
                        payload: result["state"].clone(),
                    })
                    .into_iter()
                    .collect();
                (Response::Ok { id, result }, events)
            }
            Err(error) => (Response::Err { id, error }, Vec::new()),
        }
    }

    /// Parses and handles one text frame.
    pub fn handle_text(&mut self, text: &str) -> Vec<Outgoing> {
        let req: Request = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => {
                let id = serde_json::from_str::<Value>(text)
                    .ok()
                    .and_then(|v| v.get("id").cloned())
                    .unwrap_or(Value::Null);
                let error = ServiceError::new(ErrorCode::InvalidRequest, e.to_string());
                return vec![Outgoing::Response(Response::Err { id, error })];
            }
        };
        let (resp, events) = self.handle(&req);
        std::iter::once(Outgoing::Response(resp))
            .chain(events.into_iter().map(Outgoing::Event))
            .collect()
    }

    fn ensure_synchronized(&self) -> Result<()> {
        if self.desynchronized() {
            return Err(ServiceError::new(
                ErrorCode::Desynchronized,
                "the source was edited after the session started; create a new session to continue",
            ));
        }
        Ok(())
    }

    fn dispatch(&mut self, method: &str, p: &Value) -> Result<(Value, bool)> {
        let read = |v: Value| Ok((v, false));
        match method {
            "candidates.list" => {
                params::<NoParams>(p)?;
                read(self.candidates())
            }
            "instances.list" => read(self.instances(params(p)?)?),
            "step.validate" => read(self.validate(params(p)?)?),
            "step.apply" => {
                let sp: StepParams = params(p)?;
                self.ensure_synchronized()?;
                let d = make_delta(
                    self.tree().current_state(),
                    resolve_rule(self.grounding(), &sp.rule, &sp.subst)?,
                    sp.true_atoms,
                    sp.false_atoms,
                );
                let limits = self.limits().clone();
                let node = self.tree_mut().step(d, &limits)?;
                Ok((json!({"node": node, "state": self.node_payload(node)?}), true))
            }
            "jump.apply" => {
                let jp: JumpParams = params(p)?;
                self.ensure_synchronized()?;
                let selected = resolve_selection(self.grounding(), &jp.rules)?;
                let limits = self.limits().clone();
                let program = self.program().clone();
                let node = self.tree_mut().jump(&program, &selected, &limits)?;
                let answer_set = match &self.tree().nodes()[node].edge {
                    Some(Edge::Jump { answer_set, .. }) => answer_set.clone(),
                    _ => unreachable!("jump nodes carry jump edges"),
                };
                let state = self.node_payload(node)?;
                Ok((json!({"node": node, "answer_set": answer_set, "state": state}), true))
            }
            "jump.expand" => read(self.expand(params(p)?)?),
            "retract" => {
                let np: NodeParams = params(p)?;
                self.ensure_synchronized()?;
                self.tree_mut().retract(np.node)?;
                Ok((json!({"node": np.node, "state": self.node_payload(np.node)?}), true))
            }
            "status" => {
                let sp: StatusParams = params(p)?;
                let report = self.status_at(self.tree().current(), sp.failed_at)?;
                let mut v = serde_json::to_value(report).expect("reports serialize");
                v["node"] = json!(self.tree().current());
                v["desynchronized"] = json!(self.desynchronized());
                read(v)
            }
            "analyze" => {
                params::<NoParams>(p)?;
                let report = analyze(self.program(), self.limits())?;
                read(serde_json::to_value(report).expect("reports serialize"))
            }
            "state.get" => {
                let op: OptNodeParams = params(p)?;
                let node = op.node.unwrap_or(self.tree().current());
                read(serde_json::to_value(self.node_payload(node)?).expect("payloads serialize"))
            }
            "tree.get" => {
                params::<NoParams>(p)?;
                read(self.tree_view())
            }
            "session.save" => {
                params::<NoParams>(p)?;
                read(json!({"session": self.save()}))
            }
            other => Err(ServiceError::new(
                ErrorCode::MethodNotFound,
                format!("unknown method {other:?}"),
            )
            .with_data(json!({"methods": METHODS}))),
        }
    }

    /// Statements with active instances not yet in the state. `steppable`
    /// lists the instances some valid step can add.
    fn candidates(&self) -> Value {
        let s = self.tree().current_state();
        let steppable = active_candidates(self.grounding(), s);
        let list: Vec<Value> = active_pending(self.grounding(), s)
            .iter()
            .map(|(stmt, rules)| {
                let st = &self.parsed().statements[*stmt];
                let ids = |rs: &[std::sync::Arc<acpstep_core::CRule>]| -> Vec<usize> {
                    rs.iter().map(|r| self.rule_id(r)).collect()
                };
                json!({
                    "statement": stmt,
                    "text": st.text,
                    "constraint": st.is_constraint(),
                    "active": ids(rules),
                    "steppable": ids(steppable.get(stmt).map_or(&[][..], Vec::as_slice)),
                })
            })
            .collect();
        json!({"candidates": list})
    }

    fn instances(&self, ip: InstancesParams) -> Result<Value> {
        let filter = parse_filter(&ip.filter)?;
        let s = self.tree().current_state();
        let mut list = Vec::new();
        for (r, substs) in self.grounding().instances_matching(ip.statement, &filter)? {
            let candidate = !s.rules.contains(&r) && r.active(&s.pos);
            if ip.candidates_only && !candidate {
                continue;
            }
            list.push(json!({
                "id": self.rule_id(&r),
                "text": r.text(),
                "substs": substs,
                "considered": s.rules.contains(&r),
                "candidate": candidate,
                "undecided": undecided_atoms(s, &r),
            }));
        }
        Ok(json!({"statement": ip.statement, "instances": list}))
    }

    fn validate(&self, sp: StepParams) -> Result<Value> {
        let r = resolve_rule(self.grounding(), &sp.rule, &sp.subst)?;
        let s = self.tree().current_state();
        let d = make_delta(s, r, sp.true_atoms, sp.false_atoms);
        let mut v = json!({
            "rule": self.rule_id(&d.rule),
            "true": d.delta_true,
            "false": d.delta_false,
        });
        match validate_assignment(s, &d) {
            None => v["valid"] = json!(true),
            Some(violation) => {
                v["valid"] = json!(false);
                v["violation"] = json!({"condition": violation.condition, "message": violation.message});
            }
        }
        Ok(v)
    }

    fn expand(&self, op: OptNodeParams) -> Result<Value> {
        let node = op.node.unwrap_or(self.tree().current());
        let n = self.tree().node(node)?;
        if !matches!(n.edge, Some(Edge::Jump { .. })) {
            return Err(ServiceError::new(
                ErrorCode::NotApplicable,
                format!("node {node} was not reached by a jump"),
            ));
        }
        let from = &self.tree().nodes()[n.parent.expect("jump nodes have parents")].state;
        let rank = source_rank(self.grounding());
        let steps = expand_jump(from, &n.state, Some(&rank))?;
        let c = Computation::replay(from.clone(), &steps, self.limits())?;
        let steps: Vec<Value> = steps
            .iter()
            .map(|d| json!({"rule": self.rule_id(&d.rule), "text": d.rule.text(), "true": d.delta_true, "false": d.delta_false}))
            .collect();
        let states: Vec<Value> = c.states[1..]
            .iter()
            .map(|s| serde_json::to_value(self.state_payload(s)).expect("payloads serialize"))
            .collect();
        Ok(json!({"node": node, "steps": steps, "states": states}))
    }

    pub fn tree_view(&self) -> Value {
        let nodes: Vec<Value> = self
            .tree()
            .nodes()
            .iter()
            .map(|n| {
                let label = match &n.edge {
                    None => json!({"kind": "root"}),
                    Some(Edge::Step(d)) => json!({"kind": "step", "rule": self.rule_id(&d.rule), "text": d.rule.text()}),
                    Some(Edge::Jump { rules, .. }) => json!({"kind": "jump", "rules": rules.iter().map(|r| self.rule_id(r)).collect::<Vec<_>>()}),
                };
                json!({"id": n.id, "parent": n.parent, "edge": label, "children": n.children})
            })
            .collect();
        json!({"current": self.tree().current(), "active_path": self.tree().path_to(self.tree().current()).expect("current node exists"), "nodes": nodes})
    }
}
