use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};

/// One experience record. `next` is `None` for a terminal transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub action: usize,
    pub reward: f64,
    pub next: Option<S>,
}

/// Fixed-capacity FIFO store; pushing into a full buffer evicts the oldest
/// entry.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
}

pub const DEFAULT_CAPACITY: usize = 24;
pub const DEFAULT_BATCH: usize = 8;

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            items: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// `min(batch, len)` distinct entries drawn uniformly.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>> {
        if self.items.is_empty() {
            return Err(Error::Empty(
                "cannot sample from an empty replay buffer".into(),
            ));
        }
        let k = batch.min(self.items.len());
        Ok(rand::seq::index::sample(rng, self.items.len(), k)
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }
}
