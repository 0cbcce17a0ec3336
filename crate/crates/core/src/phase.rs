use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    /// Learning (single arm) or estimation (multi-arm) phase.
    Learning,
    Exploit,
}

/// A time window filled with equally spaced samples, the last one on the
/// window's right edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePlan {
    pub index: usize,
    pub window_start: f64,
    pub window_end: f64,
    pub sample_count: u64,
    pub kind: PhaseKind,
}

impl PhasePlan {
    pub fn new(
        index: usize,
        window_start: f64,
        window_end: f64,
        sample_count: u64,
        kind: PhaseKind,
    ) -> Result<Self> {
        if !(window_end > window_start) {
            return Err(Error::config(format!(
                "phase {index} has empty window [{window_start}, {window_end}]"
            )));
        }
        if sample_count == 0 {
            return Err(Error::config(format!("phase {index} has no samples")));
        }
        Ok(Self {
            index,
            window_start,
            window_end,
            sample_count,
            kind,
        })
    }

    pub fn width(&self) -> f64 {
        self.window_end - self.window_start
    }

    pub fn interval(&self) -> f64 {
        self.width() / self.sample_count as f64
    }

    /// Time of the `j`-th sample, `1 <= j <= sample_count`.
    ///
    /// Computed from the window edges rather than accumulated so the final
    /// sample lands on `window_end` exactly.
    pub fn sample_time(&self, j: u64) -> f64 {
        debug_assert!((1..=self.sample_count).contains(&j));
        if j == self.sample_count {
            self.window_end
        } else {
            self.window_start + self.width() * (j as f64 / self.sample_count as f64)
        }
    }
}
