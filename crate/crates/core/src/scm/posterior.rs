//! Posterior sampling of contexts given an observed episode.
//!
//! For every draw recorded in the observed trajectory the Gumbel vector is
//! sampled top-down: the maximum `Z` of the perturbed log-probabilities is
//! drawn first (standard Gumbel, since the probabilities sum to one), the
//! observed category gets exactly `Z`, and every other category in the
//! support gets a Gumbel truncated below `Z`. Categories outside the support
//! are unconstrained by the observation and keep their prior law.

use std::collections::HashMap;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::ProbFloat;
use crate::scm::categorical::Categorical;
use crate::scm::intervention::InterventionSet;
use crate::scm::model::DecPomdpModel;
use crate::scm::noise::{standard_gumbel, Context, NoiseSource, SlotId};
use crate::scm::rollout::{rollout_with, StepCounter, Trajectory};
use crate::scm::ScmError;

/// Sample of `loc + G` with `G ~ Gumbel(0,1)` conditioned on `loc + G < bound`.
pub fn truncated_gumbel<R: Rng + ?Sized>(rng: &mut R, loc: f64, bound: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    let x = loc - ((-(bound - loc)).exp() - u.ln()).ln();
    if x < bound {
        x
    } else {
        next_down(bound)
    }
}

fn next_down(x: f64) -> f64 {
    if x.is_finite() {
        let bits = x.to_bits();
        if x > 0.0 {
            f64::from_bits(bits - 1)
        } else if x < 0.0 {
            f64::from_bits(bits + 1)
        } else {
            -f64::from_bits(1)
        }
    } else {
        x
    }
}

/// Gumbel noise vector for a slot with distribution `probs` conditioned on
/// the Gumbel-Max outcome being `observed`.
pub fn conditional_gumbels<F: ProbFloat, R: Rng + ?Sized>(
    rng: &mut R,
    probs: &[F],
    observed: usize,
) -> Result<Vec<F>, ScmError> {
    let p_obs = probs.get(observed).copied().unwrap_or_else(F::zero);
    if !(p_obs > F::zero()) {
        return Err(ScmError::InconsistentTrajectory(format!(
            "observed category {observed} has zero probability"
        )));
    }
    let logp: Vec<f64> = probs
        .iter()
        .map(|&p| if p > F::zero() { p.to_f64().unwrap().ln() } else { f64::NEG_INFINITY })
        .collect();
    let total: f64 = probs.iter().map(|p| p.to_f64().unwrap()).sum();
    let top = total.ln() + standard_gumbel(rng);
    let mut out = Vec::with_capacity(probs.len());
    for (j, &lp) in logp.iter().enumerate() {
        let g = if j == observed {
            top - lp
        } else if lp.is_finite() {
            truncated_gumbel(rng, lp, top) - lp
        } else {
            standard_gumbel(rng)
        };
        out.push(F::lit(g));
    }
    // rounding to F can create a tie with the observed category
    while crate::scm::categorical::gumbel_argmax(probs, &out)? != observed {
        let v = out[observed];
        out[observed] = v + v.abs().max(F::one()) * F::epsilon() * F::lit(4.0);
    }
    Ok(out)
}

struct Conditioning<'o, F> {
    observed: &'o HashMap<SlotId, usize>,
    rng: ChaCha8Rng,
    pinned: HashMap<SlotId, Vec<F>>,
}

impl<F: ProbFloat> NoiseSource<F> for Conditioning<'_, F> {
    fn draw(&mut self, slot: SlotId, dist: &Categorical<F>) -> Result<usize, ScmError> {
        let &outcome = self.observed.get(&slot).ok_or_else(|| {
            ScmError::InconsistentTrajectory(format!("slot {slot:?} missing from the observed draws"))
        })?;
        if !(dist.prob(outcome) > F::zero()) {
            return Err(ScmError::InconsistentTrajectory(format!(
                "slot {slot:?}: observed outcome {outcome} has zero probability"
            )));
        }
        // a sure event carries no information; the prior vector is kept
        if dist.point_mass().is_none() {
            let g = conditional_gumbels(&mut self.rng, dist.probs(), outcome)?;
            self.pinned.insert(slot, g);
        }
        Ok(outcome)
    }
}

/// Draw a context from the posterior given `observed`. Replaying the result
/// without interventions reproduces `observed`.
pub fn posterior_sample_context<M: DecPomdpModel>(
    model: &M,
    observed: &Trajectory<M>,
    seed: u64,
) -> Result<Context<M::Prob>, ScmError> {
    let observed_draws: HashMap<SlotId, usize> =
        observed.draws().into_iter().map(|d| (d.slot, d.outcome)).collect();
    let mut source = Conditioning {
        observed: &observed_draws,
        rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
        pinned: HashMap::new(),
    };
    let replay = rollout_with(model, &mut source, &InterventionSet::new(), &mut StepCounter::unlimited())?;
    if replay != *observed {
        return Err(ScmError::InconsistentTrajectory(
            "observed trajectory is not reproducible under the model".into(),
        ));
    }
    Ok(Context::with_pinned(seed, source.pinned))
}
