//! Compensated (Neumaier) summation helpers.
//!
//! Monte Carlo estimators collect per-trial values and reduce them here in a
//! fixed order, so results do not depend on thread count.

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Two-pass compensated mean and standard error of the mean.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 2, "need at least two samples");
    let mean = sum(values.iter().copied()) / n as f64;
    let ss = sum(values.iter().map(|v| {
        let d = v - mean;
        d * d
    }));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
