use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::scm::model::Action;
use crate::scm::ScmError;

/// An action variable `A_{agent,t}`. Ordered by time first, then agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotKey {
    pub t: usize,
    pub agent: usize,
}

impl SlotKey {
    pub fn new(agent: usize, t: usize) -> Self {
        Self { t, agent }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub agent: usize,
    pub t: usize,
    pub action: Action,
}

/// Interventions on action variables with distinct `(agent, t)` keys,
/// iterated in key order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct InterventionSet {
    map: BTreeMap<SlotKey, Action>,
}

impl InterventionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_interventions(items: impl IntoIterator<Item = Intervention>) -> Result<Self, ScmError> {
        let mut set = Self::new();
        for i in items {
            set.insert(i)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, i: Intervention) -> Result<(), ScmError> {
        let key = SlotKey::new(i.agent, i.t);
        if self.map.contains_key(&key) {
            return Err(ScmError::ContractViolation(format!(
                "duplicate intervention on agent {} at t={}",
                i.agent, i.t
            )));
        }
        self.map.insert(key, i.action);
        Ok(())
    }

    /// Copy with one more intervention; panics on a duplicate key.
    pub fn with(&self, agent: usize, t: usize, action: Action) -> Self {
        let mut next = self.clone();
        let prev = next.map.insert(SlotKey::new(agent, t), action);
        assert!(prev.is_none(), "duplicate intervention key");
        next
    }

    pub fn get(&self, agent: usize, t: usize) -> Option<Action> {
        self.map.get(&SlotKey::new(agent, t)).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn last_key(&self) -> Option<SlotKey> {
        self.map.keys().next_back().copied()
    }

    pub fn keys(&self) -> BTreeSet<SlotKey> {
        self.map.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Intervention> + '_ {
        self.map
            .iter()
            .map(|(k, &a)| Intervention { agent: k.agent, t: k.t, action: a })
    }

    /// Whether any intervention applies at time `t`.
    pub fn touches(&self, t: usize) -> bool {
        self.map
            .range(SlotKey { t, agent: 0 }..SlotKey { t: t + 1, agent: 0 })
            .next()
            .is_some()
    }
}

impl Serialize for InterventionSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for InterventionSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = Vec::<Intervention>::deserialize(d)?;
        InterventionSet::from_interventions(items).map_err(serde::de::Error::custom)
    }
}
