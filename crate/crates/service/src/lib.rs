//! Stepping sessions over a ground program, their file format, and the
//! JSON protocol served over HTTP and WebSocket.

pub mod error;
pub mod protocol;
pub mod replay;
pub mod server;
pub mod session;

pub use error::{ErrorCode, Result, ServiceError};
pub use protocol::{action_request, Event, Outgoing, Request, Response};
pub use server::{router, serve, SessionStore};
pub use session::{Session, SessionFile, Settings, StatePayload};
