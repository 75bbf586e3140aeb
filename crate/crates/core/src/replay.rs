//! Bounded experience replay with per-experience importance.
//!
//! Every experience enters with importance `e = 1`. At each episode boundary
//! the learner calls [`ReplayMemory::decay_importance`], multiplying every
//! stored `e` by `d_e`, so older experiences carry less weight in the loss.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experience {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    /// Importance in `(0, 1]`; exactly 1 until the first episode boundary.
    pub importance: f64,
    /// Leniency recorded at storage time. Only the LDQN learner sets this.
    pub leniency: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayMemory {
    capacity: usize,
    obs_dim: usize,
    buffer: VecDeque<Experience>,
}

impl ReplayMemory {
    pub fn new(capacity: usize, obs_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            obs_dim,
            buffer: VecDeque::with_capacity(capacity.min(1 << 16)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Stored experiences, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.buffer.iter()
    }

    pub fn push(
        &mut self,
        obs: Vec<f64>,
        action: usize,
        reward: f64,
        next_obs: Vec<f64>,
        done: bool,
    ) -> Result<()> {
        self.push_with_leniency(obs, action, reward, next_obs, done, 0.0)
    }

    pub fn push_with_leniency(
        &mut self,
        obs: Vec<f64>,
        action: usize,
        reward: f64,
        next_obs: Vec<f64>,
        done: bool,
        leniency: f64,
    ) -> Result<()> {
        for (what, v) in [("observation", &obs), ("next observation", &next_obs)] {
            if v.len() != self.obs_dim {
                return Err(Error::Dimension {
                    what,
                    expected: self.obs_dim,
                    actual: v.len(),
                });
            }
        }
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(Experience {
            obs,
            action,
            reward,
            next_obs,
            done,
            importance: 1.0,
            leniency,
        });
        Ok(())
    }

    /// Uniform sample without replacement. Returns [`Error::NotReady`] while
    /// the memory holds fewer than `batch_size` experiences.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Vec<&Experience>> {
        if batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if self.buffer.len() < batch_size {
            return Err(Error::NotReady {
                available: self.buffer.len(),
                requested: batch_size,
            });
        }
        Ok(index::sample(rng, self.buffer.len(), batch_size)
            .into_iter()
            .map(|i| &self.buffer[i])
            .collect())
    }

    pub fn decay_importance(&mut self, decay: f64) -> Result<()> {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::config(format!(
                "importance decay must lie in (0, 1], got {decay}"
            )));
        }
        for exp in &mut self.buffer {
            exp.importance *= decay;
        }
        Ok(())
    }

    /// Text dump, one JSON object per line, for test inspection.
    pub fn dump(&self) -> Result<String> {
        let mut out = String::new();
        for exp in &self.buffer {
            out.push_str(&serde_json::to_string(exp)?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn push_n(mem: &mut ReplayMemory, n: usize) {
        for i in 0..n {
            mem.push(
                vec![i as f64],
                i % 4,
                -(i as f64),
                vec![i as f64 + 1.0],
                false,
            )
            .unwrap();
        }
    }

    #[test]
    fn push_stores_unit_importance() {
        let mut mem = ReplayMemory::new(10, 2).unwrap();
        mem.push(vec![1.0, 2.0], 3, -4.0, vec![0.0, 1.0], false)
            .unwrap();
        assert_eq!(mem.len(), 1);
        let e = mem.iter().next().unwrap();
        assert_eq!(e.importance, 1.0);
        assert_eq!(e.reward, -4.0);
        assert_eq!(e.action, 3);
    }

    #[test]
    fn eviction_is_fifo() {
        let mut mem = ReplayMemory::new(2, 1).unwrap();
        push_n(&mut mem, 3);
        assert_eq!(mem.len(), 2);
        let obs: Vec<f64> = mem.iter().map(|e| e.obs[0]).collect();
        assert_eq!(obs, vec![1.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut mem = ReplayMemory::new(2, 3).unwrap();
        assert!(matches!(
            mem.push(vec![1.0], 0, 0.0, vec![1.0, 2.0, 3.0], false),
            Err(Error::Dimension { .. })
        ));
        assert!(ReplayMemory::new(0, 3).is_err());
    }

    #[test]
    fn sampling() {
        let mut mem = ReplayMemory::new(200, 1).unwrap();
        push_n(&mut mem, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(mem.sample(1, &mut rng).unwrap()[0].obs, vec![0.0]);
        assert!(matches!(
            mem.sample(2, &mut rng),
            Err(Error::NotReady { .. })
        ));
        assert!(matches!(mem.sample(0, &mut rng), Err(Error::Config(_))));

        push_n(&mut mem, 99);
        let a = mem.sample(32, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = mem.sample(32, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let mut seen: Vec<*const Experience> = a.iter().map(|e| *e as *const _).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 32, "no duplicates within a batch");
    }

    #[test]
    fn sampling_is_uniform_over_slots() {
        let mut mem = ReplayMemory::new(50, 1).unwrap();
        for i in 0..50 {
            mem.push(vec![i as f64], 0, 0.0, vec![0.0], false).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 50];
        let draws = 4000;
        for _ in 0..draws {
            for e in mem.sample(5, &mut rng).unwrap() {
                counts[e.obs[0] as usize] += 1;
            }
        }
        let p = 5.0 / 50.0;
        let mean = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - mean).abs() <= 3.0 * sigma + 1.0,
                "{c} vs {mean}"
            );
        }
    }

    #[test]
    fn importance_decays_per_episode() {
        let mut mem = ReplayMemory::new(10, 1).unwrap();
        push_n(&mut mem, 1);
        for _ in 0..3 {
            mem.decay_importance(0.995).unwrap();
        }
        let e = mem.iter().next().unwrap().importance;
        assert_eq!(e, 0.995 * 0.995 * 0.995);
        assert!((e - 0.985075).abs() < 1e-6);

        push_n(&mut mem, 1);
        let es: Vec<f64> = mem.iter().map(|e| e.importance).collect();
        assert_eq!(es[1], 1.0);
        mem.decay_importance(0.5).unwrap();
        assert_eq!(mem.iter().nth(1).unwrap().importance, 0.5);
    }

    #[test]
    fn unit_decay_is_identity_and_bad_rates_fail() {
        let mut mem = ReplayMemory::new(10, 1).unwrap();
        push_n(&mut mem, 4);
        mem.decay_importance(1.0).unwrap();
        assert!(mem.iter().all(|e| e.importance == 1.0));
        assert!(mem.decay_importance(0.0).is_err());
        assert!(mem.decay_importance(1.01).is_err());
        assert!(mem.decay_importance(f64::NAN).is_err());
    }

    #[test]
    fn dump_has_one_line_per_experience() {
        let mut mem = ReplayMemory::new(10, 1).unwrap();
        push_n(&mut mem, 3);
        assert_eq!(mem.dump().unwrap().lines().count(), 3);
    }
}
