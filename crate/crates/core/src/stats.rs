/// Sample count and reward sum of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmpiricalStats {
    count: u64,
    sum: u64,
}

impl EmpiricalStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stats with a given count and number of unit rewards. Panics if `sum > count`.
    pub fn from_counts(count: u64, sum: u64) -> Self {
        assert!(sum <= count, "reward sum {sum} exceeds sample count {count}");
        Self { count, sum }
    }

    pub fn record(&mut self, reward: u8) {
        debug_assert!(reward <= 1);
        self.count += 1;
        self.sum += u64::from(reward);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> u64 {
        self.sum
    }

    /// Sample mean, 0 before the first sample.
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }
}
