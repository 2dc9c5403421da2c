use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::tree::NodeWord;

/// Node weights kept in breadth-first node order.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<T> {
    entries: BTreeMap<NodeWord, T>,
}

impl<T: Scalar> Default for Measure<T> {
    fn default() -> Self {
        Measure {
            entries: BTreeMap::new(),
        }
    }
}

impl<T: Scalar> Measure<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (NodeWord, T)>>(pairs: I) -> Self {
        Measure {
            entries: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, u: NodeWord, value: T) {
        self.entries.insert(u, value);
    }

    pub fn get(&self, u: &NodeWord) -> Option<&T> {
        self.entries.get(u)
    }

    pub fn contains(&self, u: &NodeWord) -> bool {
        self.entries.contains_key(u)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeWord, &T)> {
        self.entries.iter()
    }

    pub fn total(&self) -> T {
        self.entries.values().fold(T::zero(), |a, x| a + x.clone())
    }

    pub fn scaled(&self, factor: &T) -> Self {
        Measure {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * factor.clone()))
                .collect(),
        }
    }

    /// Rescaled so the entries sum to one.
    pub fn normalized_total(&self) -> Self {
        let t = self.total();
        self.scaled(&(T::one() / t))
    }

    /// Rescaled so the root has weight one.
    pub fn normalized_root(&self) -> Self {
        match self.entries.get(&NodeWord::root()) {
            Some(r) => self.scaled(&(T::one() / r.clone())),
            None => self.clone(),
        }
    }

    /// Values in breadth-first node order.
    pub fn values(&self) -> Vec<T> {
        self.entries.values().cloned().collect()
    }

    pub fn lookup(&self) -> impl Fn(&NodeWord) -> Option<T> + '_ {
        move |u| self.entries.get(u).cloned()
    }
}
