//! Binary indexed tree over event rates with O(log n) update and
//! proportional sampling.

/// Fenwick tree padded to a power of two so sampling can descend bit by bit.
#[derive(Debug, Clone)]
pub struct Fenwick {
    /// 1-based partial sums.
    tree: Vec<f64>,
    /// Raw per-channel rates, 0-based.
    rates: Vec<f64>,
    /// Power-of-two capacity.
    cap: usize,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        let cap = len.next_power_of_two().max(1);
        Fenwick {
            tree: vec![0.0; cap + 1],
            rates: vec![0.0; len],
            cap,
        }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.rates[i]
    }

    pub fn set(&mut self, i: usize, rate: f64) {
        debug_assert!(rate >= 0.0);
        let delta = rate - self.rates[i];
        if delta == 0.0 {
            return;
        }
        self.rates[i] = rate;
        let mut idx = i + 1;
        while idx <= self.cap {
            self.tree[idx] += delta;
            idx += idx & idx.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        // prefix sum over the full capacity is the single root entry chain
        let mut sum = 0.0;
        let mut idx = self.cap;
        while idx > 0 {
            sum += self.tree[idx];
            idx -= idx & idx.wrapping_neg();
        }
        sum
    }

    /// Index of the first channel whose cumulative rate exceeds `target`.
    /// `target` must lie in `[0, total)`.
    pub fn sample(&self, mut target: f64) -> usize {
        let mut idx = 0usize;
        let mut mask = self.cap;
        while mask > 0 {
            let next = idx + mask;
            if next <= self.cap && self.tree[next] <= target {
                target -= self.tree[next];
                idx = next;
            }
            mask >>= 1;
        }
        idx.min(self.rates.len() - 1)
    }

    /// Recompute all partial sums from the raw rates, flushing accumulated
    /// floating-point drift.
    pub fn rebuild(&mut self) {
        self.tree.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..self.rates.len() {
            let mut idx = i + 1;
            let r = self.rates[i];
            while idx <= self.cap {
                self.tree[idx] += r;
                idx += idx & idx.wrapping_neg();
            }
        }
    }
}
