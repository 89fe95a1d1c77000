//! Small numeric helpers shared across modules.

/// Compensated (Neumaier) summation: sums in input order with an error term,
/// so totals are reproducible and accurate to a few ulps even for long sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums a slice with compensation, in slice order.
pub fn compensated_total(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// `n` points uniformly spaced on `[lo, hi]`, endpoints included (`n >= 2`).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect()
}

/// `n` points geometrically spaced on `[lo, hi]` with `lo, hi > 0` (`n >= 2`).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > 0.0);
    let (llo, lhi) = (lo.ln(), hi.ln());
    linspace(llo, lhi, n).into_iter().map(f64::exp).collect()
}
