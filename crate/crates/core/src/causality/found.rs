use std::collections::BTreeSet;

use serde::Serialize;

use crate::causality::CandidatePair;
use crate::scalar::{Exact, Scalar};
use crate::scm::SlotKey;

/// Found candidate pairs, kept as an antichain under strict inclusion of
/// their variable sets.
#[derive(Clone, Debug, Default)]
pub struct FoundSet {
    entries: Vec<(BTreeSet<SlotKey>, CandidatePair)>,
}

fn strict_superset(a: &BTreeSet<SlotKey>, b: &BTreeSet<SlotKey>) -> bool {
    a.len() > b.len() && a.is_superset(b)
}

impl FoundSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &CandidatePair> {
        self.entries.iter().map(|(_, p)| p)
    }

    /// Is `vars` a strict superset of some stored variable set?
    pub fn is_non_minimal(&self, vars: &BTreeSet<SlotKey>) -> bool {
        self.entries.iter().any(|(v, _)| strict_superset(vars, v))
    }

    /// Insert unless non-minimal, evicting stored strict supersets. Returns
    /// whether the pair was stored. An identical pair is stored once.
    pub fn insert_and_filter(&mut self, pair: CandidatePair) -> bool {
        let vars = pair.variables();
        if self.is_non_minimal(&vars) {
            return false;
        }
        if self.entries.iter().any(|(v, p)| *v == vars && p.interventions() == pair.interventions()) {
            return false;
        }
        self.entries.retain(|(v, _)| !strict_superset(v, &vars));
        self.entries.push((vars, pair));
        true
    }

    /// Variable sets currently stored, sorted.
    pub fn variable_sets(&self) -> Vec<BTreeSet<SlotKey>> {
        let mut out: Vec<_> = self.entries.iter().map(|(v, _)| v.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn assignment(&self, num_agents: usize) -> ResponsibilityAssignment {
        let mut degrees = vec![Exact::from_integer(0); num_agents];
        let mut provenance: Vec<Option<CandidatePair>> = vec![None; num_agents];
        for (_, pair) in &self.entries {
            for (i, d) in pair.degrees().into_iter().enumerate() {
                if d > degrees[i] {
                    degrees[i] = d;
                    provenance[i] = Some(pair.clone());
                }
            }
        }
        ResponsibilityAssignment { degrees, provenance }
    }
}

/// Per-agent maximum degree over the found pairs.
#[derive(Clone, Debug, Serialize)]
pub struct ResponsibilityAssignment {
    #[serde(serialize_with = "serialize_exact")]
    pub degrees: Vec<Exact>,
    /// The pair achieving each agent's maximum, if any.
    pub provenance: Vec<Option<CandidatePair>>,
}

fn serialize_exact<S: serde::Serializer>(d: &[Exact], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(d.iter().map(Scalar::to_f64))
}

impl ResponsibilityAssignment {
    pub fn zeros(num_agents: usize) -> Self {
        Self { degrees: vec![Exact::from_integer(0); num_agents], provenance: vec![None; num_agents] }
    }

    pub fn degrees_as<S: Scalar>(&self) -> Vec<S> {
        self.degrees.iter().map(S::from_exact).collect()
    }
}

impl PartialEq for ResponsibilityAssignment {
    /// Assignments compare by degrees only.
    fn eq(&self, other: &Self) -> bool {
        self.degrees == other.degrees
    }
}

pub fn insert_and_filter(mut found: FoundSet, pair: CandidatePair) -> FoundSet {
    found.insert_and_filter(pair);
    found
}

pub fn assignment(found: &FoundSet, num_agents: usize) -> ResponsibilityAssignment {
    found.assignment(num_agents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causality::{CauseVar, WitnessVar};
    use crate::scm::InterventionSet;
    use num_rational::Ratio;
    use proptest::prelude::*;

    /// A pair over `(agent, t, in_cause)` variables, every action set to 1.
    fn pair(vars: &[(usize, usize, bool)]) -> CandidatePair {
        let mut interventions = InterventionSet::new();
        let mut cause = Vec::new();
        let mut witness = Vec::new();
        for &(agent, t, c) in vars {
            interventions = interventions.with(agent, t, 1);
            if c {
                cause.push(CauseVar { agent, t, factual: 0, counterfactual: 1 });
            } else {
                witness.push(WitnessVar { agent, t, witness: 1 });
            }
        }
        CandidatePair { num_agents: 2, interventions, cause, witness }
    }

    #[test]
    fn degrees_are_cause_share_of_the_set() {
        let p = pair(&[(0, 0, true), (1, 0, true), (1, 2, false)]);
        assert_eq!(p.degrees(), vec![Ratio::new(1, 3), Ratio::new(1, 3)]);
        assert_eq!(p.cause_counts(), vec![1, 1]);
    }

    #[test]
    fn supersets_are_rejected_and_evicted() {
        let mut f = FoundSet::new();
        assert!(f.insert_and_filter(pair(&[(0, 0, true), (1, 1, true)])));
        assert!(f.insert_and_filter(pair(&[(0, 3, true)])));
        // strict subset evicts the stored superset
        assert!(f.insert_and_filter(pair(&[(0, 0, true)])));
        assert_eq!(f.len(), 2);
        assert!(!f.insert_and_filter(pair(&[(0, 0, true), (1, 4, false)])));
        assert!(!f.insert_and_filter(pair(&[(0, 0, true)])), "identical pair stored twice");
        assert_eq!(f.assignment(2).degrees, vec![Ratio::from_integer(1), Ratio::from_integer(0)]);
    }

    #[test]
    fn equal_variables_with_other_actions_coexist() {
        let mut f = FoundSet::new();
        let a = pair(&[(0, 0, true)]);
        let mut b = a.clone();
        b.interventions = InterventionSet::new().with(0, 0, 2);
        assert!(f.insert_and_filter(a));
        assert!(f.insert_and_filter(b));
        assert_eq!(f.len(), 2);
        assert_eq!(f.variable_sets().len(), 1);
    }

    #[test]
    fn assignment_keeps_provenance() {
        let mut f = FoundSet::new();
        f.insert_and_filter(pair(&[(0, 0, true), (1, 0, false)]));
        f.insert_and_filter(pair(&[(1, 1, true)]));
        let a = f.assignment(2);
        assert_eq!(a.degrees, vec![Ratio::new(1, 2), Ratio::from_integer(1)]);
        assert_eq!(a.provenance[1].as_ref().unwrap().size(), 1);
        assert_eq!(ResponsibilityAssignment::zeros(2).degrees, vec![Ratio::from_integer(0); 2]);
    }

    fn arb_pair() -> impl Strategy<Value = CandidatePair> {
        proptest::collection::btree_set((0usize..2, 0usize..4), 1..4).prop_flat_map(|keys| {
            let keys: Vec<_> = keys.into_iter().collect();
            let n = keys.len();
            proptest::collection::vec(any::<bool>(), n).prop_map(move |flags| {
                let mut vars: Vec<(usize, usize, bool)> =
                    keys.iter().zip(&flags).map(|(&(a, t), &c)| (a, t, c)).collect();
                vars[0].2 = true;
                pair(&vars)
            })
        })
    }

    proptest! {
        #[test]
        fn stored_sets_form_an_antichain(pairs in proptest::collection::vec(arb_pair(), 1..20)) {
            let mut f = FoundSet::new();
            for p in &pairs {
                f.insert_and_filter(p.clone());
            }
            let sets: Vec<_> = f.pairs().map(|p| p.variables()).collect();
            for a in &sets {
                for b in &sets {
                    prop_assert!(!(a.len() < b.len() && a.is_subset(b)));
                }
            }
            // every inserted pair is either stored or has a stored subset
            for p in &pairs {
                let v = p.variables();
                prop_assert!(sets.iter().any(|s| s.is_subset(&v)));
            }
            let a = f.assignment(2);
            for d in &a.degrees {
                prop_assert!(*d >= Ratio::from_integer(0) && *d <= Ratio::from_integer(1));
            }
        }
    }
}
