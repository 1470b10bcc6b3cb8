use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::limits::Limits;
use crate::model::GroundProgram;
use crate::semantics::{flp_reduct, ExtensionQuery};

use super::{candidate_rules, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    InProgress,
    /// Complete but the last state is not stable.
    Complete,
    Succeeded,
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusReport {
    pub status: Status,
    pub complete: bool,
    pub stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_at: Option<usize>,
}

/// Status of the computation `states` with respect to `P`; `failed_at` is only
/// computed when `check_failed` is set since it needs answer-set searches.
pub fn computation_status(
    p: &GroundProgram,
    states: &[State],
    check_failed: bool,
    limits: &Limits,
) -> Result<StatusReport> {
    let leaf = states.last().expect("a computation has a first state");
    let complete = flp_reduct(p, &leaf.pos)
        .rules()
        .iter()
        .all(|r| leaf.rules.contains(r));
    let stable = leaf.is_stable();
    let status = if complete && stable {
        Status::Succeeded
    } else if complete {
        Status::Complete
    } else if candidate_rules(p, leaf).is_empty() {
        Status::Stuck
    } else {
        Status::InProgress
    };
    let failed_at = if check_failed {
        failed_at(p, states, limits)?
    } else {
        None
    };
    Ok(StatusReport {
        status,
        complete,
        stable,
        failed_at,
    })
}

/// Whether some answer set of `P` extends the state.
fn compatible(p: &GroundProgram, s: &State, limits: &Limits) -> Result<bool> {
    let query = ExtensionQuery {
        program: p.clone(),
        required_true: s.pos.atoms().clone(),
        required_false: s.neg.clone(),
        required_active: s.rules.rules().to_vec(),
        priority: s.domain(),
    };
    Ok(!query.solve(Some(1), limits)?.is_empty())
}

/// The smallest index of a state no answer set of `P` extends.
///
/// Later states extend earlier ones, so failure is monotone along the sequence.
pub fn failed_at(p: &GroundProgram, states: &[State], limits: &Limits) -> Result<Option<usize>> {
    let (mut lo, mut hi) = (0, states.len());
    if hi == 0 || compatible(p, &states[hi - 1], limits)? {
        return Ok(None);
    }
    hi -= 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if compatible(p, &states[mid], limits)? {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
