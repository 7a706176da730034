//! Sample statistics with compensated summation, so that summaries do not
//! depend on how trials were scheduled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Standard error of the sample variance, from the fourth central moment.
    pub variance_se: f64,
    pub min: u64,
    pub max: u64,
    pub histogram: BTreeMap<u64, u64>,
}

impl MetricSummary {
    pub fn from_samples(samples: &[u64]) -> Self {
        let count = samples.len() as u64;
        let mut histogram = BTreeMap::new();
        for &s in samples {
            *histogram.entry(s).or_insert(0) += 1;
        }
        if samples.is_empty() {
            return Self {
                count,
                mean: 0.0,
                variance: 0.0,
                std_error: 0.0,
                variance_se: 0.0,
                min: 0,
                max: 0,
                histogram,
            };
        }
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&s| s as f64).collect::<CompensatedSum>().value() / n;
        let m2 = samples.iter().map(|&s| (s as f64 - mean).powi(2)).collect::<CompensatedSum>().value();
        let m4 = samples.iter().map(|&s| (s as f64 - mean).powi(4)).collect::<CompensatedSum>().value() / n;
        let (variance, variance_se) = if samples.len() > 1 {
            let var = m2 / (n - 1.0);
            let spread = m4 - (n - 3.0) / (n - 1.0) * var * var;
            (var, (spread.max(0.0) / n).sqrt())
        } else {
            (0.0, 0.0)
        };
        Self {
            count,
            mean,
            variance,
            std_error: (variance / n).sqrt(),
            variance_se,
            min: *histogram.keys().next().expect("nonempty"),
            max: *histogram.keys().next_back().expect("nonempty"),
            histogram,
        }
    }

    /// Smallest value `v` such that at least `p` of the samples are `<= v`.
    pub fn quantile(&self, p: f64) -> u64 {
        let target = (p * self.count as f64).ceil().max(1.0) as u64;
        let mut seen = 0;
        for (&value, &c) in &self.histogram {
            seen += c;
            if seen >= target {
                return value;
            }
        }
        self.max
    }
}

/// `(observed - expected) / se`, or 0 when both the difference and the error vanish.
pub fn z_score(observed: f64, expected: f64, se: f64) -> f64 {
    let diff = observed - expected;
    if se > 0.0 {
        diff / se
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}
