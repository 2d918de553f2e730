//! Experiment harness: instance generation, references, metrics,
//! performance profiles and their CSV/SVG output.

mod generate;
mod metrics;
mod pipeline;
mod poison;
mod profile;
mod svg;

use thiserror::Error;

use crate::causality::CausalityError;
use crate::scm::ScmError;

pub use generate::{generate_losing_trajectories, GenerationLimits};
pub use metrics::{epsilon_metrics, exact_reference, lower_bound_reference, RefMode};
pub use pipeline::{
    gen, load_instances, oracle, plot, profile, read_curves, run, write_runs, ExperimentConfig, InstanceRecord, Mode,
    RunPoint, RunRecord,
};
pub use poison::{poison_and_generate, PoisonInfo, Poisoned, PoisonedInstance, POISONED_PER_AGENT};
pub use profile::{performance_profile, step_grid, ProfileRow, ProfileTable, RunCurve};
pub use svg::profile_svg;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("generation exhausted: {found} of {wanted} instances after {attempts} attempts")]
    GenerationExhausted { wanted: usize, found: usize, attempts: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ScmError> for HarnessError {
    fn from(e: ScmError) -> Self {
        HarnessError::Causality(e.into())
    }
}

impl HarnessError {
    /// Generation failures and irreproducible observations, as opposed to
    /// bad input.
    pub fn is_generation_failure(&self) -> bool {
        matches!(
            self,
            HarnessError::GenerationExhausted { .. }
                | HarnessError::Causality(CausalityError::Scm(ScmError::InconsistentTrajectory(_)))
        )
    }
}

/// Derive an independent seed from `master` and a path of indices
/// (splitmix64 mixing). Trajectory `k` of a run uses `[TRAJ, k]`, run `r` of
/// a method on it `[RUN, k, method, r]`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

pub const TRAJ: u64 = 1;
pub const RUN: u64 = 2;
pub const POSTERIOR: u64 = 3;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_depend_on_every_index() {
        let a = derive_seed(7, &[TRAJ, 0]);
        assert_eq!(a, derive_seed(7, &[TRAJ, 0]));
        assert_ne!(a, derive_seed(7, &[TRAJ, 1]));
        assert_ne!(a, derive_seed(8, &[TRAJ, 0]));
        assert_ne!(derive_seed(7, &[RUN, 0, 1]), derive_seed(7, &[RUN, 1, 0]));
    }
}
