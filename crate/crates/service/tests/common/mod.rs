#![allow(dead_code)]

use serde_json::{json, Value};

use acpstep_core::stepping::script::{parse_script, Action};
use acpstep_service::{action_request, Request, Response, Session, Settings};

pub const MAZE: &str = include_str!("../../../../programs/maze.lp");
pub const MAZE_NO_AS: &str = include_str!("../../../../programs/maze_noas.lp");
pub const EX_4_4: &str = include_str!("../../../../programs/ex4_4.lp");
pub const WALKTHROUGH: &str = include_str!("../../../../programs/scripts/maze_walkthrough.json");

pub fn session(text: &str) -> Session {
    Session::create("t", text, Settings::default()).expect("fixture session")
}

pub fn req(method: &str, params: Value) -> Request {
    Request {
        id: json!(1),
        method: method.to_string(),
        params,
    }
}

/// The result of a request that must succeed.
pub fn call(s: &mut Session, method: &str, params: Value) -> Value {
    let (resp, _) = s.handle(&req(method, params.clone()));
    match resp {
        Response::Ok { result, .. } => result,
        Response::Err { error, .. } => panic!("{method} {params} failed: {error}"),
    }
}

/// The error code of a request that must fail.
pub fn fail(s: &mut Session, method: &str, params: Value) -> String {
    let (resp, events) = s.handle(&req(method, params.clone()));
    assert!(events.is_empty(), "failed requests push no events");
    match resp {
        Response::Err { error, .. } => error.code.as_str().to_string(),
        Response::Ok { result, .. } => panic!("{method} {params} succeeded with {result}"),
    }
}

pub fn walkthrough() -> Vec<Action> {
    parse_script(WALKTHROUGH).expect("walkthrough parses")
}

pub fn run(s: &mut Session, actions: &[Action]) {
    for (k, a) in actions.iter().enumerate() {
        let (resp, _) = s.handle(&action_request(json!(k), a));
        if let Some(e) = resp.error() {
            panic!("action {k} failed: {e}");
        }
    }
}

/// The walkthrough session, retracted to S4 and continued on a second branch
/// that guesses wall(3,4) instead of wall(3,2).
pub fn branched_maze() -> Session {
    let mut s = session(MAZE);
    run(&mut s, &walkthrough());
    let alt = parse_script(
        r#"[
          {"op": "retract", "node": 4},
          {"op": "step", "rule": 13, "true": ["wall(3,4)"]},
          {"op": "jump", "rules": [12, 14]}
        ]"#,
    )
    .unwrap();
    run(&mut s, &alt);
    s
}

pub fn rule_id(s: &Session, text: &str) -> usize {
    s.program()
        .find_by_text(text)
        .unwrap_or_else(|| panic!("no ground rule {text}"))
}
