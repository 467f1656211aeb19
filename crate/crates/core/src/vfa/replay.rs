//! Bounded experience replay of (features, observed cost-to-go) tuples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::Features;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    capacity: usize,
    items: Vec<(Features, f64)>,
    /// Slot overwritten next once the buffer is full.
    next: usize,
}

impl Replay {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Replay {
            capacity,
            items: Vec::new(),
            next: 0,
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

    /// Appends a tuple, evicting the oldest one when full.
    pub fn push(&mut self, features: Features, target: f64) {
        if self.items.len() < self.capacity {
            self.items.push((features, target));
        } else {
            self.items[self.next] = (features, target);
            self.next = (self.next + 1) % self.capacity;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Features, f64)> {
        self.items.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&(Features, f64)> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evicts_oldest_first() {
        let mut r = Replay::new(3);
        for k in 0..5 {
            r.push([k as f64; 21], k as f64);
        }
        let mut targets: Vec<f64> = r.iter().map(|x| x.1).collect();
        targets.sort_by(f64::total_cmp);
        assert_eq!(targets, vec![2.0, 3.0, 4.0]);
        assert_eq!(r.len(), 3);
    }
}
