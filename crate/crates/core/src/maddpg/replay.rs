use std::collections::VecDeque;

use ndarray::{Array1, Array2};
use rand::Rng;

use super::{CommunityLayout, MaddpgError};

/// One joint transition of the whole community.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub done: bool,
}

impl Experience {
    pub fn check(&self, layout: &CommunityLayout) -> Result<(), MaddpgError> {
        let checks = [
            ("state", self.state.len(), layout.state_dim()),
            ("action", self.action.len(), layout.joint_action_dim()),
            ("rewards", self.rewards.len(), layout.n_agents()),
            ("next_state", self.next_state.len(), layout.state_dim()),
        ];
        for (name, found, expected) in checks {
            if found != expected {
                return Err(MaddpgError::LayoutMismatch(format!("{name} has {found} entries, expected {expected}")));
            }
        }
        Ok(())
    }
}

/// Bounded FIFO of experiences; the oldest entry is evicted when full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    layout: CommunityLayout,
    capacity: usize,
    items: VecDeque<Experience>,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(layout: CommunityLayout, capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            layout,
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            inserted: 0,
        }
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

    /// Total number of experiences ever pushed.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn get(&self, i: usize) -> Option<&Experience> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    pub fn push(&mut self, exp: Experience) -> Result<(), MaddpgError> {
        exp.check(&self.layout)?;
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(exp);
        self.inserted += 1;
        Ok(())
    }
}

/// Uniform sample with replacement.
pub fn sample_batch<'a, R: Rng>(buffer: &'a ReplayBuffer, batch_size: usize, rng: &mut R) -> Result<Vec<&'a Experience>, MaddpgError> {
    if buffer.len() < batch_size || batch_size == 0 {
        return Err(MaddpgError::InsufficientExperiences {
            have: buffer.len(),
            need: batch_size.max(1),
        });
    }
    Ok((0..batch_size).map(|_| &buffer.items[rng.random_range(0..buffer.len())]).collect())
}

/// Row-stacked minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub state: Array2<f64>,
    pub action: Array2<f64>,
    /// `(batch, n_agents)`.
    pub rewards: Array2<f64>,
    pub next_state: Array2<f64>,
    /// 1.0 for terminal records.
    pub done: Array1<f64>,
}

impl Batch {
    pub fn from_experiences(records: &[&Experience]) -> Result<Batch, MaddpgError> {
        let first = records
            .first()
            .ok_or(MaddpgError::InsufficientExperiences { have: 0, need: 1 })?;
        let b = records.len();
        let stack = |w: usize, f: &dyn Fn(&Experience) -> &[f64]| -> Result<Array2<f64>, MaddpgError> {
            let mut out = Vec::with_capacity(b * w);
            for r in records {
                let row = f(r);
                if row.len() != w {
                    return Err(MaddpgError::LayoutMismatch("records of a batch differ in width".into()));
                }
                out.extend_from_slice(row);
            }
            Ok(Array2::from_shape_vec((b, w), out).expect("width checked"))
        };
        Ok(Batch {
            state: stack(first.state.len(), &|e| &e.state)?,
            action: stack(first.action.len(), &|e| &e.action)?,
            rewards: stack(first.rewards.len(), &|e| &e.rewards)?,
            next_state: stack(first.next_state.len(), &|e| &e.next_state)?,
            done: records.iter().map(|e| if e.done { 1.0 } else { 0.0 }).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.state.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
