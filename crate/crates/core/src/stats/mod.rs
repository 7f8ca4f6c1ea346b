//! Central tendency and threshold analytics over score datasets.
//!
//! All functions are pure. Scores arrive as exact rationals and are viewed as
//! `f64` here; the mean uses compensated summation so large classes do not
//! drift from the exact value.

mod breakdown;
mod charts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::Id;
use crate::score::Score;

pub use breakdown::criterion_breakdown;
pub use charts::{bar_chart_data, pie_chart_data, ChartData, ChartKind, ChartPoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset value at index {0} is not finite")]
    NonFinite(usize),
    #[error("no name known for student {0}")]
    UnknownStudent(Id),
    #[error("records belong to more than one assignment")]
    MixedAssignments,
    #[error("record for student {student} has no valid level for criterion {criterion:?}")]
    InconsistentRecord { student: Id, criterion: String },
}

/// A list of finite score values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Dataset, StatsError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
        Ok(Dataset { values })
    }

    pub fn from_scores<'a>(scores: impl IntoIterator<Item = &'a Score>) -> Dataset {
        Dataset { values: scores.into_iter().map(Score::to_f64).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    fn min_max(&self) -> Result<(f64, f64), StatsError> {
        let first = *self.values.first().ok_or(StatsError::EmptyDataset)?;
        Ok(self.values.iter().fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }
}

/// Summary statistics of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Every value with the highest frequency, ascending.
    pub modes: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl StatsSummary {
    /// True when every value occurs equally often, i.e. no value dominates.
    pub fn is_uniform(&self) -> bool {
        self.modes.len() > 1 && self.modes.len() == self.n
    }
}

/// Arithmetic mean, `(x1 + ... + xn) / n`.
pub fn mean(d: &Dataset) -> Result<f64, StatsError> {
    let (lo, hi) = d.min_max()?;
    // Neumaier's variant of Kahan summation
    let mut sum = 0.0_f64;
    let mut compensation = 0.0_f64;
    for &x in d.values() {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            compensation += (sum - t) + x;
        } else {
            compensation += (x - t) + sum;
        }
        sum = t;
    }
    let m = (sum + compensation) / d.len() as f64;
    // the exact mean lies in [min, max]; keep rounding from escaping it
    Ok(m.clamp(lo, hi))
}

/// Middle value of the sorted data; for even `n`, the mean of the two middle
/// values.
pub fn median(d: &Dataset) -> Result<f64, StatsError> {
    if d.is_empty() {
        return Err(StatsError::EmptyDataset);
    }
    let sorted = d.sorted();
    let n = sorted.len();
    if n % 2 == 1 {
        Ok(sorted[(n - 1) / 2])
    } else {
        Ok(midpoint(sorted[n / 2 - 1], sorted[n / 2]))
    }
}

/// `(a + b) / 2` rounded once to nearest, without overflow.
fn midpoint(a: f64, b: f64) -> f64 {
    if a.abs() <= 1.0 && b.abs() <= 1.0 {
        // small operands: the sum cannot overflow and halving it is exact
        (a + b) / 2.0
    } else {
        // both halves are exact, so only the addition rounds
        a / 2.0 + b / 2.0
    }
}

/// All most-frequent values, ascending. When every value is distinct each
/// one is returned.
pub fn mode(d: &Dataset) -> Result<Vec<f64>, StatsError> {
    if d.is_empty() {
        return Err(StatsError::EmptyDataset);
    }
    let sorted = d.sorted();
    let mut runs: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match runs.last_mut() {
            Some((value, count)) if *value == v => *count += 1,
            _ => runs.push((v, 1)),
        }
    }
    let best = runs.iter().map(|(_, c)| *c).max().unwrap_or(0);
    Ok(runs.into_iter().filter(|(_, c)| *c == best).map(|(v, _)| v).collect())
}

pub fn central_tendency(d: &Dataset) -> Result<StatsSummary, StatsError> {
    let (min, max) = d.min_max()?;
    Ok(StatsSummary { n: d.len(), mean: mean(d)?, median: median(d)?, modes: mode(d)?, min, max })
}

/// Counts of values strictly below `threshold` and at or above it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub below: usize,
    pub at_or_above: usize,
}

pub fn threshold_partition(d: &Dataset, threshold: f64) -> Partition {
    let below = d.values().iter().filter(|&&x| x < threshold).count();
    Partition { below, at_or_above: d.len() - below }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn ds(values: &[f64]) -> Dataset {
        Dataset::new(values.to_vec()).unwrap()
    }

    fn exact_mean(values: &[f64]) -> f64 {
        let mut sum = BigRational::zero();
        for v in values {
            sum += BigRational::from_float(*v).unwrap();
        }
        (sum / BigRational::from_integer(BigInt::from(values.len()))).to_f64().unwrap()
    }

    fn frequency_modes(values: &[f64]) -> Vec<f64> {
        let mut counts: HashMap<u64, (f64, usize)> = HashMap::new();
        for v in values {
            counts.entry(v.to_bits()).or_insert((*v, 0)).1 += 1;
        }
        let best = counts.values().map(|(_, c)| *c).max().unwrap();
        let mut modes: Vec<f64> = counts.values().filter(|(_, c)| *c == best).map(|(v, _)| *v).collect();
        modes.sort_by(f64::total_cmp);
        modes
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&ds(&[5.0])).unwrap(), 5.0);
        assert_eq!(mean(&ds(&[2.0, 4.0, 6.0])).unwrap(), 4.0);
        assert_eq!(mean(&ds(&[])), Err(StatsError::EmptyDataset));
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&ds(&[5.0, 1.0, 3.0])).unwrap(), 3.0);
        assert_eq!(median(&ds(&[7.0, 1.0, 5.0, 3.0])).unwrap(), 4.0);
        assert_eq!(median(&ds(&[])), Err(StatsError::EmptyDataset));
        assert_eq!(median(&ds(&[f64::MAX, f64::MAX])).unwrap(), f64::MAX);
    }

    #[test]
    fn mode_examples() {
        assert_eq!(mode(&ds(&[2.0, 2.0, 3.0])).unwrap(), vec![2.0]);
        assert_eq!(mode(&ds(&[1.0, 1.0, 2.0, 2.0, 3.0])).unwrap(), frequency_modes(&[1.0, 1.0, 2.0, 2.0, 3.0]));
        assert_eq!(mode(&ds(&[1.0, 1.0, 2.0, 2.0, 3.0])).unwrap(), vec![1.0, 2.0]);
        assert_eq!(mode(&ds(&[1.0, 2.0, 3.0])).unwrap(), frequency_modes(&[3.0, 1.0, 2.0]));
        assert_eq!(mode(&ds(&[1.0, 2.0, 3.0])).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(mode(&ds(&[])), Err(StatsError::EmptyDataset));
    }

    #[test]
    fn summary_examples() {
        let s = central_tendency(&ds(&[4.0, 4.0])).unwrap();
        assert_eq!(s, StatsSummary { n: 2, mean: 4.0, median: 4.0, modes: vec![4.0], min: 4.0, max: 4.0 });
        assert!(!s.is_uniform());

        let values = [1.0, 2.0, 2.0, 9.0];
        let s = central_tendency(&ds(&values)).unwrap();
        assert_eq!(s.mean, exact_mean(&values));
        assert_eq!(s.mean, 3.5);
        assert_eq!(s.median, 2.0);
        assert_eq!(s.modes, vec![2.0]);
        assert!(central_tendency(&ds(&[1.0, 2.0])).unwrap().is_uniform());
    }

    #[test]
    fn partition_examples() {
        let d = ds(&[40.0, 55.0, 60.0, 75.0]);
        assert_eq!(threshold_partition(&d, 60.0), Partition { below: 2, at_or_above: 2 });
        assert_eq!(threshold_partition(&d, 39.0), Partition { below: 0, at_or_above: 4 });
        assert_eq!(threshold_partition(&d, f64::NEG_INFINITY), Partition { below: 0, at_or_above: 4 });
        assert_eq!(threshold_partition(&d, 76.0), Partition { below: 4, at_or_above: 0 });
        assert_eq!(threshold_partition(&ds(&[]), 1.0), Partition { below: 0, at_or_above: 0 });
    }

    #[test]
    fn rejects_non_finite_values() {
        assert_eq!(Dataset::new(vec![1.0, f64::NAN]), Err(StatsError::NonFinite(1)));
    }

    #[test]
    fn constant_dataset_mean_stays_in_range() {
        let d = ds(&[0.1, 0.1, 0.1]);
        let m = mean(&d).unwrap();
        assert_eq!(m, 0.1);
    }

    fn dataset_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec((0u32..=200).prop_map(|v| v as f64 / 2.0), 1..200)
    }

    proptest! {
        #[test]
        fn permutation_invariance(values in dataset_strategy(), seed in any::<u64>()) {
            let mut shuffled = values.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let (a, b) = (ds(&values), ds(&shuffled));
            prop_assert!((mean(&a).unwrap() - mean(&b).unwrap()).abs() <= 1e-9);
            prop_assert_eq!(median(&a).unwrap(), median(&b).unwrap());
            prop_assert_eq!(mode(&a).unwrap(), mode(&b).unwrap());
            prop_assert_eq!(threshold_partition(&a, 50.0), threshold_partition(&b, 50.0));
        }

        #[test]
        fn location_bounds(values in dataset_strategy()) {
            let s = central_tendency(&ds(&values)).unwrap();
            prop_assert!(s.min <= s.mean && s.mean <= s.max);
            prop_assert!(s.min <= s.median && s.median <= s.max);
        }

        #[test]
        fn duplication_preserves_center(values in dataset_strategy()) {
            let doubled: Vec<f64> = values.iter().chain(values.iter()).copied().collect();
            let (a, b) = (ds(&values), ds(&doubled));
            prop_assert!((mean(&a).unwrap() - mean(&b).unwrap()).abs() <= 1e-9);
            prop_assert_eq!(median(&a).unwrap(), median(&b).unwrap());
            prop_assert_eq!(mode(&a).unwrap(), mode(&b).unwrap());
        }

        #[test]
        fn modes_are_maximal(values in dataset_strategy()) {
            let modes = mode(&ds(&values)).unwrap();
            let freq = |x: f64| values.iter().filter(|&&v| v == x).count();
            let top = modes.iter().map(|&m| freq(m)).max().unwrap();
            prop_assert!(modes.iter().all(|&m| freq(m) == top));
            prop_assert!(values.iter().all(|&v| freq(v) <= top));
            prop_assert_eq!(modes, frequency_modes(&values));
        }

        #[test]
        fn partition_sums_and_bounds(values in dataset_strategy(), t in -10.0f64..110.0) {
            let d = ds(&values);
            let p = threshold_partition(&d, t);
            prop_assert_eq!(p.below + p.at_or_above, values.len());
            prop_assert_eq!(p.below, values.iter().filter(|&&v| v < t).count());
            let s = central_tendency(&d).unwrap();
            prop_assert_eq!(threshold_partition(&d, s.min - 1.0), Partition { below: 0, at_or_above: values.len() });
            prop_assert_eq!(threshold_partition(&d, s.max + 1.0), Partition { below: values.len(), at_or_above: 0 });
        }

        #[test]
        fn mean_is_linear(values in dataset_strategy(), alpha in -3.0f64..3.0, beta in -50.0f64..50.0) {
            let scaled: Vec<f64> = values.iter().map(|v| alpha * v + beta).collect();
            let lhs = mean(&ds(&scaled)).unwrap();
            let rhs = alpha * mean(&ds(&values)).unwrap() + beta;
            prop_assert!((lhs - rhs).abs() <= 1e-9, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn mean_matches_exact_rational(values in dataset_strategy()) {
            prop_assert!((mean(&ds(&values)).unwrap() - exact_mean(&values)).abs() <= 1e-9);
        }
    }
}
