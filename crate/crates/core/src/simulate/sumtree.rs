/// Binary sum tree over event rates. Every update recomputes the ancestors
/// from their children, so the root never accumulates drift.
#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(leaves: usize) -> Self {
        let leaves = leaves.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, k: usize) -> f64 {
        self.nodes[self.leaves + k]
    }

    pub fn set(&mut self, k: usize, rate: f64) {
        let mut p = self.leaves + k;
        self.nodes[p] = rate;
        while p > 1 {
            p /= 2;
            self.nodes[p] = self.nodes[2 * p] + self.nodes[2 * p + 1];
        }
    }

    /// Leaf whose cumulative range contains `u`, for `0 <= u < total`.
    /// Returns `None` when rounding lands on a zero-rate leaf.
    pub fn find(&self, mut u: f64) -> Option<usize> {
        let mut p = 1;
        while p < self.leaves {
            let left = self.nodes[2 * p];
            if u < left {
                p *= 2;
            } else {
                u -= left;
                p = 2 * p + 1;
            }
        }
        (self.nodes[p] > 0.0).then_some(p - self.leaves)
    }
}
