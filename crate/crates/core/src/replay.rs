//! Bounded experience store with uniform sampling.

use rand::Rng;

use crate::error::{Error, Result};

/// Shape check for the action half of a transition.
pub trait ReplayAction: Clone {
    /// Returns a description of the mismatch, if any.
    fn check(&self, shape: &ActionShape) -> Option<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionShape {
    /// Real vector of the given length.
    Continuous(usize),
    /// Index into a set of the given size.
    Discrete(usize),
}

impl ReplayAction for Vec<f64> {
    fn check(&self, shape: &ActionShape) -> Option<String> {
        match *shape {
            ActionShape::Continuous(n) if n == self.len() => None,
            other => Some(format!("continuous action of length {} vs {other:?}", self.len())),
        }
    }
}

impl ReplayAction for usize {
    fn check(&self, shape: &ActionShape) -> Option<String> {
        match *shape {
            ActionShape::Discrete(n) if *self < n => None,
            other => Some(format!("discrete action {self} vs {other:?}")),
        }
    }
}

/// One (state, action, reward, next state) record.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<A> {
    pub state: Vec<f64>,
    pub action: A,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity ring of transitions; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<A> {
    capacity: usize,
    state_dim: usize,
    action_shape: ActionShape,
    items: Vec<Transition<A>>,
    /// Slot the next push overwrites once the ring is full.
    head: usize,
}

impl<A: ReplayAction> ReplayBuffer<A> {
    pub fn new(capacity: usize, state_dim: usize, action_shape: ActionShape) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            state_dim,
            action_shape,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            head: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, transition: Transition<A>) -> Result<()> {
        if transition.state.len() != self.state_dim || transition.next_state.len() != self.state_dim
        {
            return Err(Error::Dimension {
                context: "transition state",
                expected: self.state_dim,
                actual: if transition.state.len() != self.state_dim {
                    transition.state.len()
                } else {
                    transition.next_state.len()
                },
            });
        }
        if let Some(msg) = transition.action.check(&self.action_shape) {
            return Err(Error::InvalidArgument(msg));
        }
        if !transition.reward.is_finite() {
            return Err(Error::NonFinite("transition reward".into()));
        }
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.head] = transition;
            self.head = (self.head + 1) % self.capacity;
        }
        Ok(())
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition<A>> {
        let (newer, older) = self.items.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    /// True once the buffer holds at least `n` transitions.
    pub fn is_warm(&self, n: usize) -> bool {
        self.items.len() >= n
    }

    /// `n` uniform draws with replacement. Only an empty buffer is refused;
    /// callers gate training on [`ReplayBuffer::is_warm`].
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition<A>>> {
        if n == 0 || self.items.is_empty() {
            return Err(Error::Undersized {
                available: self.items.len(),
                requested: n,
            });
        }
        let len = self.items.len();
        Ok((0..n).map(|_| &self.items[rng.random_range(0..len)]).collect())
    }
}
