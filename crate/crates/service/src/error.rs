use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use acpstep_core::Error as CoreError;

/// Machine-readable error codes of the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    ParseError,
    UnsafeRule,
    InvalidStep,
    NoAnswerSet,
    CapExhausted,
    Desynchronized,
    UnknownRule,
    UnknownNode,
    NotApplicable,
    PreconditionViolated,
    InvalidState,
    InvalidRequest,
    InvalidParams,
    MethodNotFound,
    SchemaError,
    VersionMismatch,
    HashMismatch,
    UnknownSession,
    SessionBusy,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::ParseError => "parse-error",
            ErrorCode::UnsafeRule => "unsafe-rule",
            ErrorCode::InvalidStep => "invalid-step",
            ErrorCode::NoAnswerSet => "no-answer-set",
            ErrorCode::CapExhausted => "cap-exhausted",
            ErrorCode::Desynchronized => "desynchronized",
            ErrorCode::UnknownRule => "unknown-rule",
            ErrorCode::UnknownNode => "unknown-node",
            ErrorCode::NotApplicable => "not-applicable",
            ErrorCode::PreconditionViolated => "precondition-violated",
            ErrorCode::InvalidState => "invalid-state",
            ErrorCode::InvalidRequest => "invalid-request",
            ErrorCode::InvalidParams => "invalid-params",
            ErrorCode::MethodNotFound => "method-not-found",
            ErrorCode::SchemaError => "schema-error",
            ErrorCode::VersionMismatch => "version-mismatch",
            ErrorCode::HashMismatch => "hash-mismatch",
            ErrorCode::UnknownSession => "unknown-session",
            ErrorCode::SessionBusy => "session-busy",
        }
    }
}

/// The `error` member of a failed response.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{}: {message}", code.as_str())]
pub struct ServiceError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl ServiceError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ServiceError {
            code,
            message: message.into(),
            data: None,
        }
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = Some(data);
        self
    }
}

impl From<CoreError> for ServiceError {
    fn from(e: CoreError) -> Self {
        let message = e.to_string();
        let (code, data) = match &e {
            CoreError::Parse { line, column, .. } => {
                (ErrorCode::ParseError, Some(json!({"line": line, "column": column})))
            }
            CoreError::Unsafe {
                variable,
                line,
                column,
            } => (
                ErrorCode::UnsafeRule,
                Some(json!({"variable": variable, "line": line, "column": column})),
            ),
            CoreError::InvalidStep(v) => {
                let condition = v.split_once(": ").map_or(v.as_str(), |(c, _)| c);
                (ErrorCode::InvalidStep, Some(json!({"condition": condition})))
            }
            CoreError::NoAnswerSet => (ErrorCode::NoAnswerSet, None),
            e if e.is_cap() => (ErrorCode::CapExhausted, None),
            CoreError::UnknownRule(_) => (ErrorCode::UnknownRule, None),
            CoreError::UnknownNode(n) => (ErrorCode::UnknownNode, Some(json!({"node": n}))),
            CoreError::NotApplicable(_) => (ErrorCode::NotApplicable, None),
            CoreError::CyclicGraph { witness } => {
                (ErrorCode::NotApplicable, Some(json!({"cycle": witness})))
            }
            CoreError::PreconditionViolated(_) => (ErrorCode::PreconditionViolated, None),
            CoreError::InvalidCAtom(_) => (ErrorCode::ParseError, None),
            _ => (ErrorCode::InvalidState, None),
        };
        ServiceError {
            code,
            message,
            data,
        }
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
