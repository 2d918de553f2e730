use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::causality::{CausalityError, Event};
use crate::scalar::{Exact, Scalar};
use crate::scm::{
    Action, Context, DecPomdpModel, InterventionSet, SlotKey, StepCounter, Trajectory,
};

/// A cause variable: its factual value and the value it is set to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CauseVar {
    pub agent: usize,
    pub t: usize,
    pub factual: Action,
    pub counterfactual: Action,
}

/// A witness variable and its contingency value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct WitnessVar {
    pub agent: usize,
    pub t: usize,
    pub witness: Action,
}

/// Intervention set split into a cause part `A` (information state kept)
/// and a witness part `W` (information state changed), with the outcome
/// event no longer holding under the full set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CandidatePair {
    pub(crate) num_agents: usize,
    pub(crate) interventions: InterventionSet,
    pub(crate) cause: Vec<CauseVar>,
    pub(crate) witness: Vec<WitnessVar>,
}

impl CandidatePair {
    pub fn interventions(&self) -> &InterventionSet {
        &self.interventions
    }

    pub fn cause(&self) -> &[CauseVar] {
        &self.cause
    }

    pub fn witness(&self) -> &[WitnessVar] {
        &self.witness
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    /// `|X|`.
    pub fn size(&self) -> usize {
        self.interventions.len()
    }

    pub fn variables(&self) -> std::collections::BTreeSet<SlotKey> {
        self.interventions.keys()
    }

    /// `m_i`: number of agent `i`'s variables in the cause part.
    pub fn cause_counts(&self) -> Vec<usize> {
        let mut m = vec![0; self.num_agents];
        for c in &self.cause {
            m[c.agent] += 1;
        }
        m
    }

    /// `m_i / |X|` per agent.
    pub fn degrees(&self) -> Vec<Exact> {
        degree_vector(self)
    }

    pub fn degrees_as<S: Scalar>(&self) -> Vec<S> {
        self.degrees().iter().map(S::from_exact).collect()
    }
}

pub fn degree_vector(pair: &CandidatePair) -> Vec<Exact> {
    let k = pair.size() as i64;
    pair.cause_counts().into_iter().map(|m| Exact::new(m as i64, k)).collect()
}

impl Serialize for CandidatePair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let degrees: Vec<f64> = self.degrees_as::<f64>();
        let mut st = s.serialize_struct("CandidatePair", 3)?;
        st.serialize_field("A", &self.cause)?;
        st.serialize_field("W", &self.witness)?;
        st.serialize_field("degrees", &degrees)?;
        st.end()
    }
}

/// Partition `interventions` given the factual and counterfactual episodes.
///
/// Returns `None` when the event still holds counterfactually or when no
/// intervened slot keeps its information state.
pub fn classify_trajectories<M: DecPomdpModel>(
    model: &M,
    factual: &Trajectory<M>,
    counterfactual: &Trajectory<M>,
    interventions: &InterventionSet,
    event: &Event<M>,
) -> Result<Option<CandidatePair>, CausalityError> {
    if interventions.is_empty() {
        return Err(CausalityError::Contract("classify needs a nonempty intervention set".into()));
    }
    if event.evaluate(counterfactual)? {
        return Ok(None);
    }
    let mut cause = Vec::new();
    let mut witness = Vec::new();
    for x in interventions.iter() {
        let shape = || CausalityError::OutOfShape(format!("no information state at agent {} t={}", x.agent, x.t));
        let f_info = factual.info(x.agent, x.t).ok_or_else(shape)?;
        let cf_info = counterfactual.info(x.agent, x.t).ok_or_else(shape)?;
        if f_info == cf_info {
            // same information state, same decision status: the agent acted
            let factual_action = factual.action(x.agent, x.t).ok_or_else(|| {
                CausalityError::Contract(format!(
                    "agent {} has no factual action at t={} despite an unchanged information state",
                    x.agent, x.t
                ))
            })?;
            cause.push(CauseVar { agent: x.agent, t: x.t, factual: factual_action, counterfactual: x.action });
        } else {
            witness.push(WitnessVar { agent: x.agent, t: x.t, witness: x.action });
        }
    }
    if cause.is_empty() {
        return Ok(None);
    }
    Ok(Some(CandidatePair {
        num_agents: model.num_agents(),
        interventions: interventions.clone(),
        cause,
        witness,
    }))
}

/// Roll out `interventions` and classify the result. The factual episode is
/// recomputed for free; only the counterfactual rollout is charged.
pub fn classify<M: DecPomdpModel>(
    model: &M,
    context: &Context<M::Prob>,
    interventions: &InterventionSet,
    event: &Event<M>,
    counter: &mut StepCounter,
) -> Result<Option<CandidatePair>, CausalityError> {
    let factual = crate::scm::rollout(model, context, &InterventionSet::new(), &mut StepCounter::unlimited())?;
    let cf = crate::scm::rollout(model, context, interventions, counter)?;
    classify_trajectories(model, &factual, &cf, interventions, event)
}
