use serde::Serialize;

/// Five-number summary plus the mean. Quartiles use linear interpolation
/// between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub min: f64,
    pub lower_quartile: f64,
    pub median: f64,
    pub upper_quartile: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
        Some(SummaryStats {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            min: sorted[0],
            lower_quartile: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            upper_quartile: quantile(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Quantile of a sorted sample at fraction `q`, interpolating linearly
/// between the order statistics at index `q·(n−1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    if sorted.len() == 1 {
        return sorted[0];
    }
    let raw = q * (sorted.len() - 1) as f64;
    let low = raw.floor() as usize;
    if low + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let fraction = raw - low as f64;
    sorted[low] + (sorted[low + 1] - sorted[low]) * fraction
}

/// Distribution of both episode metrics over repeated evaluation runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalStats {
    pub runs: usize,
    pub queue: SummaryStats,
    pub wait: SummaryStats,
}

impl EvalStats {
    pub fn from_metric_pairs(queues: &[f64], waits: &[f64]) -> Option<Self> {
        debug_assert_eq!(queues.len(), waits.len());
        Some(EvalStats {
            runs: queues.len(),
            queue: SummaryStats::from_samples(queues)?,
            wait: SummaryStats::from_samples(waits)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_element_sample_hand_computed() {
        // Sorted: [2, 4, 4, 5, 10]; quartile indices 1, 2, 3 land exactly.
        let s = SummaryStats::from_samples(&[10.0, 4.0, 2.0, 5.0, 4.0]).unwrap();
        assert_eq!(s.min, 2.0);
        assert_eq!(s.lower_quartile, 4.0);
        assert_eq!(s.median, 4.0);
        assert_eq!(s.upper_quartile, 5.0);
        assert_eq!(s.max, 10.0);
        assert_eq!(s.mean, 5.0);
    }

    #[test]
    fn interpolated_quartiles() {
        // Four elements: q1 at index 0.75 → 1 + 0.75·(2−1) = 1.75.
        let s = SummaryStats::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.lower_quartile, 1.75);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.upper_quartile, 3.25);
    }

    #[test]
    fn single_sample_collapses() {
        let s = SummaryStats::from_samples(&[3.5]).unwrap();
        assert_eq!(
            (s.min, s.lower_quartile, s.median, s.upper_quartile, s.max),
            (3.5, 3.5, 3.5, 3.5, 3.5)
        );
    }

    #[test]
    fn empty_sample_has_no_stats() {
        assert!(SummaryStats::from_samples(&[]).is_none());
    }

    #[test]
    fn quartile_ordering_invariant() {
        let samples: Vec<f64> = (0..101).map(|i| ((i * 7919) % 101) as f64).collect();
        let s = SummaryStats::from_samples(&samples).unwrap();
        assert!(s.min <= s.lower_quartile);
        assert!(s.lower_quartile <= s.median);
        assert!(s.median <= s.upper_quartile);
        assert!(s.upper_quartile <= s.max);
    }
}
