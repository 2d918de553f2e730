use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::baselines::bf_dt_restricted;
use crate::causality::{CausalityError, ResponsibilityAssignment};
use crate::mcts::MctsParams;
use crate::scalar::Scalar;
use crate::scm::{DecPomdpModel, SlotKey};
use crate::search_tree::Instance;

/// Which kind of reference an error is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefMode {
    Exact,
    LowerBound,
}

fn unlimited(max_size: usize) -> MctsParams {
    MctsParams { budget: u64::MAX, max_size, ..MctsParams::default() }
}

/// Exhaustive BF-DT over all sets of at most `max_size` interventions.
pub fn exact_reference<M: DecPomdpModel>(
    instance: &Instance<'_, M>,
    max_size: usize,
) -> Result<ResponsibilityAssignment, CausalityError> {
    Ok(bf_dt_restricted(instance, unlimited(max_size), None)?.assignment)
}

/// Exhaustive BF-DT over the sets whose variables lie in `slots`.
pub fn lower_bound_reference<M: DecPomdpModel>(
    instance: &Instance<'_, M>,
    slots: &BTreeSet<SlotKey>,
    max_size: usize,
) -> Result<ResponsibilityAssignment, CausalityError> {
    Ok(bf_dt_restricted(instance, unlimited(max_size), Some(slots))?.assignment)
}

/// `max_i |found_i - ref_i|` against an exact reference,
/// `max_i max(0, ref_i - found_i)` against lower bounds.
///
/// # Panics
/// If the vectors differ in length.
pub fn epsilon_metrics<S: Scalar>(found: &[S], reference: &[S], mode: RefMode) -> S {
    assert_eq!(found.len(), reference.len(), "assignment lengths differ");
    found.iter().zip(reference).fold(S::zero(), |acc, (f, r)| {
        let d = match mode {
            RefMode::Exact if f > r => f.clone() - r.clone(),
            RefMode::Exact => r.clone() - f.clone(),
            RefMode::LowerBound if r > f => r.clone() - f.clone(),
            RefMode::LowerBound => S::zero(),
        };
        if d > acc {
            d
        } else {
            acc
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::exact_from_decimal;
    use crate::Exact;

    fn v(xs: &[&str]) -> Vec<Exact> {
        xs.iter().map(|x| exact_from_decimal(x).unwrap()).collect()
    }

    #[test]
    fn worked_examples() {
        let found = v(&["0.25", "0.75"]);
        assert_eq!(epsilon_metrics(&found, &v(&["0.33", "1"]), RefMode::Exact), v(&["0.25"])[0]);
        assert_eq!(epsilon_metrics(&found, &v(&["0.33", "0.5"]), RefMode::LowerBound), v(&["0.08"])[0]);
        assert_eq!(epsilon_metrics(&found, &found, RefMode::Exact), Exact::from_integer(0));
    }
}
