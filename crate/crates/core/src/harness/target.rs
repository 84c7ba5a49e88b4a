use super::config::TargetMetric;

/// Direction of a target comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    AtMost(f64),
    AtLeast(f64),
}

impl Threshold {
    pub fn is_met(&self, value: f64) -> bool {
        match *self {
            Threshold::AtMost(t) => value <= t,
            Threshold::AtLeast(t) => value >= t,
        }
    }

    pub fn for_metric(metric: TargetMetric, threshold: f64) -> Self {
        match metric {
            TargetMetric::Loss | TargetMetric::GradNormSq => Threshold::AtMost(threshold),
            TargetMetric::Accuracy | TargetMetric::RelativeAccuracy => Threshold::AtLeast(threshold),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Centered moving median with odd `window`; the window is truncated at both
/// ends of the stream.
pub fn smoothed(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            median(&mut values[lo..hi].to_vec())
        })
        .collect()
}

/// First 1-based round whose smoothed metric meets `target`, or `None`.
pub fn rounds_to_target(values: &[f64], target: Threshold, window: usize) -> Option<usize> {
    smoothed(values, window)
        .iter()
        .position(|&v| target.is_met(v))
        .map(|i| i + 1)
}
