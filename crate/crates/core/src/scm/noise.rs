//! Exogenous noise: slot identifiers, contexts and noise sources.

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::Arc;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::ProbFloat;
use crate::scm::categorical::{gumbel_argmax, Categorical};
use crate::scm::ScmError;

/// Version tag of the slot-keyed Gumbel generator. Bump when the mapping from
/// (seed, slot) to noise changes, since serialized contexts depend on it.
pub const NOISE_ALGORITHM_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    /// State draw; `index` numbers the sub-draws of one transition.
    State,
    /// Observation draw; `index` numbers the sub-draws.
    Obs,
    /// An agent's action draw; `index` is the agent.
    Action,
}

/// One stochastic structural-equation instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotId {
    pub kind: SlotKind,
    pub t: u32,
    pub index: u32,
}

impl SlotId {
    pub fn state(t: usize, index: usize) -> Self {
        Self { kind: SlotKind::State, t: t as u32, index: index as u32 }
    }

    pub fn obs(t: usize, index: usize) -> Self {
        Self { kind: SlotKind::Obs, t: t as u32, index: index as u32 }
    }

    pub fn action(agent: usize, t: usize) -> Self {
        Self { kind: SlotKind::Action, t: t as u32, index: agent as u32 }
    }

    fn stream(&self) -> u64 {
        let kind = match self.kind {
            SlotKind::State => 0u64,
            SlotKind::Obs => 1,
            SlotKind::Action => 2,
        };
        (kind << 62) | ((self.t as u64) << 31) | self.index as u64
    }
}

/// A realized draw: which category a slot produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub slot: SlotId,
    pub outcome: usize,
}

pub fn standard_gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -(-u.ln()).ln()
}

/// A full setting of the exogenous variables.
///
/// Noise vectors are never stored for prior contexts: the vector of a slot is
/// regenerated on demand from a ChaCha stream keyed by `(seed, slot)`, and
/// component `j` of a slot's vector does not depend on the vector length.
/// Posterior contexts additionally pin the vectors of conditioned slots.
#[derive(Clone, Debug)]
pub struct Context<F> {
    seed: u64,
    pinned: Arc<HashMap<SlotId, Vec<F>>>,
    posterior: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRecord {
    pub seed: u64,
    pub algorithm_version: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub posterior: bool,
}

impl<F: ProbFloat> Context<F> {
    pub fn from_seed(seed: u64) -> Self {
        Self { seed, pinned: Arc::new(HashMap::new()), posterior: false }
    }

    pub(crate) fn with_pinned(seed: u64, pinned: HashMap<SlotId, Vec<F>>) -> Self {
        Self { seed, pinned: Arc::new(pinned), posterior: true }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_posterior(&self) -> bool {
        self.posterior
    }

    pub fn pinned_slots(&self) -> usize {
        self.pinned.len()
    }

    pub fn record(&self) -> ContextRecord {
        ContextRecord {
            seed: self.seed,
            algorithm_version: NOISE_ALGORITHM_VERSION,
            posterior: self.posterior,
        }
    }

    /// Gumbel(0, 1) vector of `slot`, truncated or extended to `len`.
    pub fn gumbels(&self, slot: SlotId, len: usize) -> Cow<'_, [F]> {
        if let Some(v) = self.pinned.get(&slot) {
            if v.len() == len {
                return Cow::Borrowed(v.as_slice());
            }
        }
        Cow::Owned(prior_gumbels(self.seed, slot, len))
    }

    /// Materialize the vectors of every slot in `inventory`.
    pub fn materialize(&self, inventory: &[(SlotId, usize)]) -> Vec<(SlotId, Vec<F>)> {
        inventory
            .iter()
            .map(|&(slot, len)| (slot, self.gumbels(slot, len).into_owned()))
            .collect()
    }
}

pub(crate) fn prior_gumbels<F: ProbFloat>(seed: u64, slot: SlotId, len: usize) -> Vec<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot.stream());
    (0..len).map(|_| F::lit(standard_gumbel(&mut rng))).collect()
}

pub fn sample_context<F: ProbFloat>(seed: u64) -> Context<F> {
    Context::from_seed(seed)
}

/// Something that resolves stochastic draws.
pub trait NoiseSource<F> {
    fn draw(&mut self, slot: SlotId, dist: &Categorical<F>) -> Result<usize, ScmError>;
}

/// Resolves draws by Gumbel-Max against a fixed context.
pub struct ContextNoise<'c, F> {
    pub context: &'c Context<F>,
}

impl<F: ProbFloat> NoiseSource<F> for ContextNoise<'_, F> {
    fn draw(&mut self, slot: SlotId, dist: &Categorical<F>) -> Result<usize, ScmError> {
        // point masses win regardless of the noise
        if let Some(j) = dist.point_mass() {
            return Ok(j);
        }
        let g = self.context.gumbels(slot, dist.len());
        gumbel_argmax(dist.probs(), &g)
    }
}

/// Handle passed to model code. Assigns slot identifiers in call order and
/// logs every realized draw.
pub struct Draws<'a, F> {
    source: &'a mut dyn NoiseSource<F>,
    kind: SlotKind,
    t: usize,
    next: usize,
    log: &'a mut Vec<DrawRecord>,
}

impl<'a, F: ProbFloat> Draws<'a, F> {
    pub fn new(
        source: &'a mut dyn NoiseSource<F>,
        kind: SlotKind,
        t: usize,
        log: &'a mut Vec<DrawRecord>,
    ) -> Self {
        Self { source, kind, t, next: 0, log }
    }

    pub fn draw(&mut self, dist: &Categorical<F>) -> Result<usize, ScmError> {
        let slot = SlotId { kind: self.kind, t: self.t as u32, index: self.next as u32 };
        self.next += 1;
        let outcome = self.source.draw(slot, dist)?;
        self.log.push(DrawRecord { slot, outcome });
        Ok(outcome)
    }

    /// Time index these draws are filed under.
    pub fn t(&self) -> usize {
        self.t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_noise() {
        let a = sample_context::<f64>(42);
        let b = sample_context::<f64>(42);
        let slot = SlotId::state(3, 1);
        assert_eq!(a.gumbels(slot, 52), b.gumbels(slot, 52));
    }

    #[test]
    fn different_seeds_differ() {
        let a = sample_context::<f64>(1);
        let b = sample_context::<f64>(2);
        let slot = SlotId::action(0, 0);
        assert_ne!(a.gumbels(slot, 8), b.gumbels(slot, 8));
    }

    #[test]
    fn slots_are_independent_streams() {
        let c = sample_context::<f64>(9);
        assert_ne!(c.gumbels(SlotId::state(0, 0), 4), c.gumbels(SlotId::state(0, 1), 4));
        assert_ne!(c.gumbels(SlotId::state(1, 0), 4), c.gumbels(SlotId::action(0, 1), 4));
    }

    #[test]
    fn vectors_are_length_prefix_stable() {
        let c = sample_context::<f64>(5);
        let slot = SlotId::obs(2, 0);
        let long = c.gumbels(slot, 10).into_owned();
        let short = c.gumbels(slot, 4).into_owned();
        assert_eq!(&long[..4], &short[..]);
    }

    #[test]
    fn record_round_trips() {
        let c = sample_context::<f32>(77);
        let json = serde_json::to_string(&c.record()).unwrap();
        assert_eq!(json, format!("{{\"seed\":77,\"algorithm_version\":{NOISE_ALGORITHM_VERSION}}}"));
        let back: ContextRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.seed, 77);
    }
}
