//! Grounding, answer-set semantics and a stepping engine for programs over
//! abstract-constraint atoms.

pub mod analysis;
pub mod error;
pub mod frontend;
pub mod limits;
pub mod model;
pub mod par;
pub mod semantics;
pub mod stepping;

pub use error::{Error, Result};
pub use limits::{Execution, Limits};
pub use model::{
    Atom, AtomSet, CAtom, CLiteral, CRule, CSpec, ExtReal, GroundProgram, Interpretation,
    Monotonicity, Term, Truth, Weight, WeightEntry,
};

/// Engine version; saved sessions record it as the grounder version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
