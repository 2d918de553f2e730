use crate::harness::{derive_seed, HarnessError, TRAJ};
use crate::scm::{Context, DecPomdpModel, Simulator, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerationLimits {
    pub max_attempts: u64,
}

impl Default for GenerationLimits {
    fn default() -> Self {
        Self { max_attempts: 1_000_000 }
    }
}

/// Sample contexts `derive_seed(seed, [TRAJ, attempt])` for increasing
/// `attempt` and keep the first `count` whose factual episode shows the
/// model's failure event.
pub fn generate_losing_trajectories<M: DecPomdpModel>(
    model: &M,
    count: usize,
    seed: u64,
    limits: GenerationLimits,
) -> Result<Vec<(Trajectory<M>, Context<M::Prob>)>, HarnessError> {
    if count == 0 {
        return Err(HarnessError::Config("count must be at least 1".into()));
    }
    let event = model.outcome_event();
    let mut out = Vec::with_capacity(count);
    for attempt in 0..limits.max_attempts {
        let context = Context::from_seed(derive_seed(seed, &[TRAJ, attempt]));
        let traj = Simulator::new(model, &context).factual()?;
        if event.evaluate(&traj)? {
            out.push((traj, context));
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(HarnessError::GenerationExhausted { wanted: count, found: out.len(), attempts: limits.max_attempts })
}
