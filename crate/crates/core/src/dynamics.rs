//! Home base, displacements and the four per-arc emotion dynamics metrics:
//! average, variability, rise rate and recovery rate.
//!
//! The home base is the band `mean ± k·sd` around the arc mean. Membership is
//! tested as `(p - mean)² ≤ k²·variance`, which is the same interval without
//! taking a square root, so classification stays exact for rational scalars.
//!
//! A displacement is a maximal run of consecutive points outside the home
//! base. Its peak is the point furthest from the mean (earliest on ties).
//! Rise rate divides the peak distance by the number of words from the last
//! in-home point to the peak; recovery rate divides it by the number of words
//! from the peak to the first in-home point after it. A run that starts at the
//! first point has no rise; one still open at the last point has no recovery.

use serde::Serialize;
use thiserror::Error;

use crate::arcs::EmotionArc;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("emotion arc is empty")]
    EmptyArc,
    #[error("home base multiplier k must be non-negative")]
    NegativeK,
    #[error("displacement is truncated ({0:?}); the requested rate is undefined")]
    TruncatedDisplacement(Truncation),
}

/// Standard deviation convention for the home base and variability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deviation {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1 (zero for a single point).
    Sample,
}

/// Reference from which a peak's distance is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakReference {
    /// The home-base center.
    #[default]
    Mean,
    /// The nearest home-base boundary.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsConfig<T> {
    pub k: T,
    pub deviation: Deviation,
    pub peak_reference: PeakReference,
}

impl<T: Scalar> Default for DynamicsConfig<T> {
    fn default() -> Self {
        Self { k: T::one(), deviation: Deviation::Population, peak_reference: PeakReference::Mean }
    }
}

impl<T: Scalar> DynamicsConfig<T> {
    pub fn with_k(k: T) -> Self {
        Self { k, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomeBase<T> {
    pub mean: T,
    pub variance: T,
    pub stdev: T,
    pub k: T,
    pub low: T,
    pub high: T,
}

impl<T: Scalar> HomeBase<T> {
    pub fn contains(&self, point: T) -> bool {
        if self.variance.is_zero() {
            return true;
        }
        let d = point - self.mean;
        d * d <= self.k * self.k * self.variance
    }

    /// Distance of `point` from the mean.
    pub fn distance(&self, point: T) -> T {
        (point - self.mean).abs()
    }
}

pub fn home_base<T: Scalar>(points: &[T], config: &DynamicsConfig<T>) -> Result<HomeBase<T>, DynamicsError> {
    let first = *points.first().ok_or(DynamicsError::EmptyArc)?;
    if config.k < T::zero() {
        return Err(DynamicsError::NegativeK);
    }
    let (mean, variance) = if points.iter().all(|&p| p == first) {
        (first, T::zero())
    } else {
        let n = points.len();
        let mean = points.iter().fold(T::zero(), |acc, &p| acc + p) / T::from_count(n);
        let ss = points.iter().fold(T::zero(), |acc, &p| acc + (p - mean) * (p - mean));
        let divisor = match config.deviation {
            Deviation::Population => n,
            Deviation::Sample => n - 1,
        };
        let variance = if divisor == 0 { T::zero() } else { ss / T::from_count(divisor) };
        (mean, variance)
    };
    let stdev = variance.sqrt();
    Ok(HomeBase {
        mean,
        variance,
        stdev,
        k: config.k,
        low: mean - config.k * stdev,
        high: mean + config.k * stdev,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    None,
    /// The run begins at the first arc point.
    AtStart,
    /// The run is still open at the last arc point.
    AtEnd,
    /// The run spans the whole arc.
    Both,
}

impl Truncation {
    pub fn has_start(self) -> bool {
        matches!(self, Truncation::None | Truncation::AtEnd)
    }

    pub fn has_end(self) -> bool {
        matches!(self, Truncation::None | Truncation::AtStart)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Displacement {
    /// Last in-home index before the run; absent when truncated at the start.
    pub pre_exit_idx: Option<usize>,
    pub exit_idx: usize,
    pub peak_idx: usize,
    /// First in-home index after the run; absent when truncated at the end.
    pub return_idx: Option<usize>,
    pub direction: Direction,
    pub truncated: Truncation,
}

impl Displacement {
    /// Last index of the out-of-home run.
    pub fn last_idx(&self, arc_len: usize) -> usize {
        self.return_idx.unwrap_or(arc_len) - 1
    }
}

pub fn find_displacements<T: Scalar>(points: &[T], hb: &HomeBase<T>) -> Vec<Displacement> {
    let n = points.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if hb.contains(points[i]) {
            i += 1;
            continue;
        }
        let exit = i;
        let mut peak = i;
        while i < n && !hb.contains(points[i]) {
            if hb.distance(points[i]) > hb.distance(points[peak]) {
                peak = i;
            }
            i += 1;
        }
        let return_idx = (i < n).then_some(i);
        let truncated = match (exit == 0, return_idx.is_none()) {
            (false, false) => Truncation::None,
            (true, false) => Truncation::AtStart,
            (false, true) => Truncation::AtEnd,
            (true, true) => Truncation::Both,
        };
        out.push(Displacement {
            pre_exit_idx: exit.checked_sub(1),
            exit_idx: exit,
            peak_idx: peak,
            return_idx,
            direction: if points[peak] > hb.mean { Direction::Above } else { Direction::Below },
            truncated,
        });
    }
    out
}

fn peak_distance<T: Scalar>(d: &Displacement, points: &[T], hb: &HomeBase<T>, reference: PeakReference) -> T {
    let from_mean = hb.distance(points[d.peak_idx]);
    match reference {
        PeakReference::Mean => from_mean,
        PeakReference::Boundary => from_mean - hb.k * hb.stdev,
    }
}

/// Peak distance per word on the way from the last in-home point to the peak.
pub fn rise_rate<T: Scalar>(
    d: &Displacement,
    arc: &EmotionArc<T>,
    hb: &HomeBase<T>,
    reference: PeakReference,
) -> Result<T, DynamicsError> {
    let pre = d.pre_exit_idx.ok_or(DynamicsError::TruncatedDisplacement(d.truncated))?;
    let words = (d.peak_idx - pre) * arc.step;
    Ok(peak_distance(d, &arc.points, hb, reference) / T::from_count(words))
}

/// Peak distance per word on the way from the peak back into the home base.
pub fn recovery_rate<T: Scalar>(
    d: &Displacement,
    arc: &EmotionArc<T>,
    hb: &HomeBase<T>,
    reference: PeakReference,
) -> Result<T, DynamicsError> {
    let ret = d.return_idx.ok_or(DynamicsError::TruncatedDisplacement(d.truncated))?;
    let words = (ret - d.peak_idx) * arc.step;
    Ok(peak_distance(d, &arc.points, hb, reference) / T::from_count(words))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UedMetrics<T> {
    pub doc_id: String,
    pub dimension: String,
    pub average: T,
    pub variability: T,
    pub rise_rate: Option<T>,
    pub recovery_rate: Option<T>,
    pub n_displacements: usize,
    pub n_complete: usize,
    pub n_truncated: usize,
    pub arc_len: usize,
}

/// Average and variability come from the home base. Rise and recovery rates
/// are means over complete displacements only; truncated ones are counted in
/// `n_truncated` but contribute no rate. Peak direction is ignored.
pub fn ued_metrics<T: Scalar>(arc: &EmotionArc<T>, config: &DynamicsConfig<T>) -> Result<UedMetrics<T>, DynamicsError> {
    let hb = home_base(&arc.points, config)?;
    let displacements = find_displacements(&arc.points, &hb);

    let complete: Vec<&Displacement> = displacements.iter().filter(|d| d.truncated == Truncation::None).collect();
    let rises = complete
        .iter()
        .map(|d| rise_rate(d, arc, &hb, config.peak_reference))
        .collect::<Result<Vec<_>, _>>()?;
    let recoveries = complete
        .iter()
        .map(|d| recovery_rate(d, arc, &hb, config.peak_reference))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(UedMetrics {
        doc_id: arc.doc_id.clone(),
        dimension: arc.dimension.clone(),
        average: hb.mean,
        variability: hb.stdev,
        rise_rate: crate::scalar::mean(&rises),
        recovery_rate: crate::scalar::mean(&recoveries),
        n_displacements: displacements.len(),
        n_complete: complete.len(),
        n_truncated: displacements.len() - complete.len(),
        arc_len: arc.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    fn arc<T: Scalar>(points: Vec<T>) -> EmotionArc<T> {
        EmotionArc { doc_id: "d".into(), dimension: "valence".into(), points, window: 5, step: 1 }
    }

    fn q(points: &[(i64, i64)]) -> Vec<Q> {
        points.iter().map(|&(n, d)| Q::new(n, d)).collect()
    }

    #[test]
    fn home_base_single_spike() {
        let hb = home_base(&q(&[(0, 1), (0, 1), (1, 1), (0, 1), (0, 1)]), &DynamicsConfig::default()).unwrap();
        assert_eq!(hb.mean, Q::new(1, 5));
        assert_eq!(hb.stdev, Q::new(2, 5));
        assert_eq!((hb.low, hb.high), (Q::new(-1, 5), Q::new(3, 5)));
    }

    #[test]
    fn home_base_constant_and_empty() {
        let hb = home_base(&[0.3, 0.3, 0.3], &DynamicsConfig::default()).unwrap();
        assert_eq!((hb.low, hb.mean, hb.high, hb.stdev), (0.3, 0.3, 0.3, 0.0));
        assert!(hb.contains(0.3));
        assert_eq!(home_base::<f64>(&[], &DynamicsConfig::default()), Err(DynamicsError::EmptyArc));
        assert_eq!(home_base(&[1.0], &DynamicsConfig::with_k(-1.0)), Err(DynamicsError::NegativeK));
    }

    #[test]
    fn sample_deviation() {
        let cfg = DynamicsConfig { deviation: Deviation::Sample, ..DynamicsConfig::default() };
        let hb = home_base(&q(&[(0, 1), (1, 1)]), &cfg).unwrap();
        assert_eq!(hb.variance, Q::new(1, 2));
        let hb = home_base(&[2.0], &DynamicsConfig { deviation: Deviation::Sample, ..DynamicsConfig::default() }).unwrap();
        assert_eq!(hb.stdev, 0.0);
    }

    #[test]
    fn spike_has_one_complete_displacement() {
        let a = arc(q(&[(0, 1), (0, 1), (1, 1), (0, 1), (0, 1)]));
        let hb = home_base(&a.points, &DynamicsConfig::default()).unwrap();
        let ds = find_displacements(&a.points, &hb);
        assert_eq!(
            ds,
            [Displacement {
                pre_exit_idx: Some(1),
                exit_idx: 2,
                peak_idx: 2,
                return_idx: Some(3),
                direction: Direction::Above,
                truncated: Truncation::None,
            }]
        );
        assert_eq!(rise_rate(&ds[0], &a, &hb, PeakReference::Mean).unwrap(), Q::new(4, 5));
        assert_eq!(recovery_rate(&ds[0], &a, &hb, PeakReference::Mean).unwrap(), Q::new(4, 5));
        let m = ued_metrics(&a, &DynamicsConfig::default()).unwrap();
        assert_eq!((m.average, m.variability), (Q::new(1, 5), Q::new(2, 5)));
        assert_eq!((m.rise_rate, m.recovery_rate), (Some(Q::new(4, 5)), Some(Q::new(4, 5))));
        assert_eq!((m.n_displacements, m.n_complete, m.n_truncated, m.arc_len), (1, 1, 0, 5));
    }

    #[test]
    fn plateau_with_truncated_ends() {
        let a = arc(q(&[(0, 1), (1, 2), (1, 1), (1, 1), (1, 2), (0, 1)]));
        let hb = home_base(&a.points, &DynamicsConfig::default()).unwrap();
        assert_eq!(hb.mean, Q::new(1, 2));
        assert_eq!(hb.variance, Q::new(1, 6));
        let ds = find_displacements(&a.points, &hb);
        assert_eq!(ds.len(), 3);
        assert_eq!((ds[0].truncated, ds[0].exit_idx, ds[0].direction), (Truncation::AtStart, 0, Direction::Below));
        assert_eq!(
            (ds[1].pre_exit_idx, ds[1].exit_idx, ds[1].peak_idx, ds[1].return_idx),
            (Some(1), 2, 2, Some(4))
        );
        assert_eq!(ds[1].direction, Direction::Above);
        assert_eq!((ds[2].truncated, ds[2].exit_idx, ds[2].direction), (Truncation::AtEnd, 5, Direction::Below));

        assert_eq!(rise_rate(&ds[1], &a, &hb, PeakReference::Mean).unwrap(), Q::new(1, 2));
        assert_eq!(recovery_rate(&ds[1], &a, &hb, PeakReference::Mean).unwrap(), Q::new(1, 4));
        assert_eq!(
            rise_rate(&ds[0], &a, &hb, PeakReference::Mean),
            Err(DynamicsError::TruncatedDisplacement(Truncation::AtStart))
        );
        assert_eq!(
            recovery_rate(&ds[2], &a, &hb, PeakReference::Mean),
            Err(DynamicsError::TruncatedDisplacement(Truncation::AtEnd))
        );

        let m = ued_metrics(&a, &DynamicsConfig::default()).unwrap();
        assert_eq!((m.rise_rate, m.recovery_rate), (Some(Q::new(1, 2)), Some(Q::new(1, 4))));
        assert_eq!((m.n_complete, m.n_truncated), (1, 2));
    }

    #[test]
    fn truncated_runs_contribute_no_rates() {
        // a single excursion still open at the end: rise is definable but not averaged
        let a = arc(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let hb = home_base(&a.points, &DynamicsConfig::default()).unwrap();
        let ds = find_displacements(&a.points, &hb);
        assert_eq!(ds[0].truncated, Truncation::AtEnd);
        assert!(rise_rate(&ds[0], &a, &hb, PeakReference::Mean).is_ok());
        let m = ued_metrics(&a, &DynamicsConfig::default()).unwrap();
        assert_eq!((m.rise_rate, m.recovery_rate, m.n_displacements, m.n_truncated), (None, None, 1, 1));
    }

    #[test]
    fn constant_arc_has_no_displacements() {
        let m = ued_metrics(&arc(vec![0.5, 0.5, 0.5]), &DynamicsConfig::default()).unwrap();
        assert_eq!((m.average, m.variability, m.rise_rate, m.recovery_rate), (0.5, 0.0, None, None));
        assert_eq!(m.n_displacements, 0);
        let m = ued_metrics(&arc(vec![0.1; 7]), &DynamicsConfig::default()).unwrap();
        assert_eq!((m.average, m.variability, m.n_displacements), (0.1, 0.0, 0));
    }

    #[test]
    fn zero_k_can_truncate_both_ends() {
        let a = arc(vec![0.0, 1.0]);
        let hb = home_base(&a.points, &DynamicsConfig::with_k(0.0)).unwrap();
        let ds = find_displacements(&a.points, &hb);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].truncated, Truncation::Both);
        let m = ued_metrics(&a, &DynamicsConfig::with_k(0.0)).unwrap();
        assert_eq!((m.rise_rate, m.recovery_rate, m.n_truncated), (None, None, 1));
    }

    #[test]
    fn boundary_reference_subtracts_band() {
        let a = arc(q(&[(0, 1), (0, 1), (1, 1), (0, 1), (0, 1)]));
        let hb = home_base(&a.points, &DynamicsConfig::default()).unwrap();
        let ds = find_displacements(&a.points, &hb);
        assert_eq!(rise_rate(&ds[0], &a, &hb, PeakReference::Boundary).unwrap(), Q::new(2, 5));
    }

    #[test]
    fn period_lengths_scale_with_step() {
        let mut a = arc(q(&[(0, 1), (0, 1), (1, 1), (0, 1), (0, 1)]));
        a.step = 2;
        let m = ued_metrics(&a, &DynamicsConfig::default()).unwrap();
        assert_eq!(m.rise_rate, Some(Q::new(2, 5)));
    }

    proptest! {
        #[test]
        fn out_of_home_points_partitioned(points in proptest::collection::vec(-1.0f64..1.0, 1..50), k in 0.0f64..2.5) {
            let hb = home_base(&points, &DynamicsConfig::with_k(k)).unwrap();
            let ds = find_displacements(&points, &hb);
            let mut owner = vec![0usize; points.len()];
            for d in &ds {
                for slot in &mut owner[d.exit_idx..=d.last_idx(points.len())] {
                    *slot += 1;
                }
                prop_assert!(!hb.contains(points[d.peak_idx]));
                if d.truncated == Truncation::None {
                    prop_assert!(d.pre_exit_idx.unwrap() + 1 == d.exit_idx);
                    prop_assert!(d.exit_idx <= d.peak_idx && d.peak_idx < d.return_idx.unwrap());
                }
            }
            for (i, &p) in points.iter().enumerate() {
                prop_assert_eq!(owner[i], usize::from(!hb.contains(p)));
            }
        }

        #[test]
        fn rates_positive_and_deterministic(points in proptest::collection::vec(-1.0f64..1.0, 1..50), k in 0.1f64..2.5) {
            let a = arc(points);
            let cfg = DynamicsConfig::with_k(k);
            let m = ued_metrics(&a, &cfg).unwrap();
            prop_assert!(m.rise_rate.is_none_or(|r| r > 0.0));
            prop_assert!(m.recovery_rate.is_none_or(|r| r > 0.0));
            prop_assert_eq!(m.rise_rate.is_some(), m.n_complete >= 1);
            prop_assert_eq!(m.recovery_rate.is_some(), m.n_complete >= 1);
            if m.variability == 0.0 {
                prop_assert_eq!(m.n_displacements, 0);
            }
            let again = ued_metrics(&a, &cfg).unwrap();
            prop_assert_eq!(format!("{m:?}"), format!("{again:?}"));
        }
    }
}
