use serde::{Deserialize, Serialize};

/// How data-parallel kernels are executed.
///
/// `Parallel` falls back to sequential execution when the crate is built
/// without the `parallel` feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Caps on the exponential parts of the engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Largest c-atom domain whose satisfiers are enumerated explicitly.
    pub enumeration: usize,
    /// Largest program domain for brute-force answer-set enumeration.
    pub atoms: usize,
    /// Largest atom set whose subsets are searched exhaustively.
    pub subsets: usize,
    /// Largest number of tracked unfounded sets per state.
    pub unfounded: usize,
    /// Largest number of ground rule instances.
    pub grounding: usize,
    /// Node budget of the answer-set search.
    pub search_nodes: u64,
    pub execution: Execution,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration: 16,
            atoms: 24,
            subsets: 20,
            unfounded: 4096,
            grounding: 1_000_000,
            search_nodes: 2_000_000,
            execution: Execution::default(),
        }
    }
}

impl Limits {
    /// Defaults with `ACPSTEP_ATOM_CAP` and `ACPSTEP_UNFOUNDED_CAP` applied.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(v) = env_usize("ACPSTEP_ATOM_CAP") {
            limits.atoms = v;
        }
        if let Some(v) = env_usize("ACPSTEP_UNFOUNDED_CAP") {
            limits.unfounded = v;
        }
        limits
    }

    pub fn sequential(mut self) -> Self {
        self.execution = Execution::Sequential;
        self
    }
}

fn env_usize(key: &str) -> Option<usize> {
    std::env::var(key).ok()?.trim().parse().ok()
}
