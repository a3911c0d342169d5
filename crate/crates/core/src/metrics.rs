//! Objective-function mathematics: weighted sensor distance, ellipsoidal
//! sensor regions, the interval alignment of two sensors and the
//! (length, area, alignment) score of a pattern.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Recording, SensorPosition};
use crate::engine::PatternGenotype;
use crate::error::{Error, Result};

/// Axis weights of the ellipsoidal distance; all strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Weights {
    pub const UNIT: Weights = Weights {
        w1: 1.0,
        w2: 1.0,
        w3: 1.0,
    };

    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let w = Self { w1, w2, w3 };
        if w.is_valid() {
            Ok(w)
        } else {
            Err(Error::Domain(format!("weights must be positive and finite: {w1}, {w2}, {w3}")))
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.w1, self.w2, self.w3]
            .iter()
            .all(|w| w.is_finite() && *w > 0.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w1, self.w2, self.w3]
    }
}

/// Inclusive time interval `[t1, t2]` with 1-based steps and `t1 < t2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub t1: usize,
    pub t2: usize,
}

impl Interval {
    pub const fn new(t1: usize, t2: usize) -> Self {
        Self { t1, t2 }
    }

    /// Checked constructor against a recording length.
    pub fn within(t1: usize, t2: usize, n_steps: usize) -> Result<Self> {
        if t1 >= 1 && t1 < t2 && t2 <= n_steps {
            Ok(Self { t1, t2 })
        } else {
            Err(Error::Domain(format!(
                "interval [{t1}, {t2}] is not within [1, {n_steps}] with t1 < t2"
            )))
        }
    }

    /// Duration `t2 - t1`.
    pub fn len(&self) -> usize {
        self.t2 - self.t1
    }

    pub fn is_empty(&self) -> bool {
        self.t2 <= self.t1
    }

    /// Number of time steps covered, `t2 - t1 + 1`.
    pub fn cells(&self) -> usize {
        self.t2 - self.t1 + 1
    }

    /// Length of the intersection, on the same scale as [`Interval::len`].
    pub fn overlap(&self, other: &Interval) -> usize {
        self.t2.min(other.t2).saturating_sub(self.t1.max(other.t1))
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.t1.min(other.t1), self.t2.max(other.t2))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.t1, self.t2)
    }
}

/// An alignment value, or "undefined" when the formula divides by zero.
///
/// Undefined sorts below every real, fails every threshold and is
/// serialized as `null`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alignment(Option<f64>);

impl Alignment {
    pub const UNDEFINED: Alignment = Alignment(None);

    /// Non-finite inputs map to undefined.
    pub fn new(v: f64) -> Self {
        if v.is_finite() {
            Alignment(Some(v))
        } else {
            Alignment::UNDEFINED
        }
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }

    /// Strict threshold test; undefined always fails.
    pub fn exceeds(self, threshold: f64) -> bool {
        self.0.is_some_and(|v| v > threshold)
    }
}

impl PartialOrd for Alignment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.0, other.0) {
            (None, None) => Some(Ordering::Equal),
            (None, Some(_)) => Some(Ordering::Less),
            (Some(_), None) => Some(Ordering::Greater),
            (Some(a), Some(b)) => a.partial_cmp(&b),
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.3}"),
            None => f.write_str("undef"),
        }
    }
}

/// The objective triple `(length, area, alignment)`, all maximized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub length: usize,
    pub area: usize,
    pub alignment: Alignment,
}

thread_local! {
    static CELL_TOUCHES: Cell<u64> = const { Cell::new(0) };
}

/// Number of (sensor, step) cells read by [`alignment_pair`] on this thread.
pub fn cell_touches() -> u64 {
    CELL_TOUCHES.with(Cell::get)
}

pub fn reset_cell_touches() {
    CELL_TOUCHES.with(|c| c.set(0));
}

pub fn weighted_distance(p: &SensorPosition, q: &SensorPosition, w: &Weights) -> f64 {
    let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
    (w.w1 * dx * dx + w.w2 * dy * dy + w.w3 * dz * dz).sqrt()
}

/// Sensors strictly closer than `radius` to `center` under `d_w`, ascending.
pub fn ball(rec: &Recording, center: usize, w: &Weights, radius: f64) -> Result<Vec<usize>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    if center == 0 || center > rec.n_sensors() {
        return Err(Error::Domain(format!(
            "sensor {center} outside [1, {}]",
            rec.n_sensors()
        )));
    }
    Ok(ball_unchecked(rec, center, w, radius))
}

pub(crate) fn ball_unchecked(rec: &Recording, center: usize, w: &Weights, radius: f64) -> Vec<usize> {
    let c = rec.position(center);
    rec.positions()
        .iter()
        .enumerate()
        .filter(|(_, p)| weighted_distance(&c, p, w) < radius)
        .map(|(k, _)| k + 1)
        .collect()
}

pub fn mean_activity(rec: &Recording, i: usize, interval: Interval) -> f64 {
    let xs = rec.window(i, interval);
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Interval alignment of sensor `j` against sensor `i`:
/// `cos(C_i, C_j) * (1 - |mean_i - mean_j| / |mean_i|)` over the interval.
///
/// Not symmetric in `(i, j)`. Zero-energy signals or a zero mean for `i`
/// give [`Alignment::UNDEFINED`].
pub fn alignment_pair(rec: &Recording, i: usize, j: usize, interval: Interval) -> Alignment {
    let a = rec.window(i, interval);
    let b = rec.window(j, interval);
    CELL_TOUCHES.with(|c| c.set(c.get() + b.len() as u64));

    let (mut dot, mut ea, mut eb, mut sa, mut sb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        ea += x * x;
        eb += y * y;
        sa += x;
        sb += y;
    }
    if ea == 0.0 || eb == 0.0 {
        return Alignment::UNDEFINED;
    }
    let n = a.len() as f64;
    let (ma, mb) = (sa / n, sb / n);
    if ma == 0.0 {
        return Alignment::UNDEFINED;
    }
    let cosine = dot / (ea * eb).sqrt();
    Alignment::new(cosine * (1.0 - (ma - mb).abs() / ma.abs()))
}

/// Largest radius keeping every strictly-inside non-center sensor above
/// `min_sigma`: the distance to the nearest sensor failing the threshold,
/// or one past the farthest sensor when none fails.
///
/// Returns `None` when the resulting region would hold no sensor other than
/// the center.
pub fn radius_from_threshold(
    rec: &Recording,
    i: usize,
    interval: Interval,
    w: &Weights,
    min_sigma: f64,
) -> Option<f64> {
    let c = rec.position(i);
    let mut nearest_fail = f64::INFINITY;
    let mut farthest = 0.0f64;
    let mut dists = Vec::with_capacity(rec.n_sensors());
    for k in rec.sensor_ids().filter(|&k| k != i) {
        let d = weighted_distance(&c, &rec.position(k), w);
        farthest = farthest.max(d);
        dists.push(d);
        if !alignment_pair(rec, i, k, interval).exceeds(min_sigma) && d < nearest_fail {
            nearest_fail = d;
        }
    }
    if nearest_fail.is_infinite() {
        return Some(farthest + 1.0);
    }
    dists
        .iter()
        .any(|&d| d < nearest_fail)
        .then_some(nearest_fail)
}

/// Scores the region `ball(center, w, radius)` over `interval`, returning
/// the score and the region's sensors.
pub fn score_region(
    rec: &Recording,
    center: usize,
    w: &Weights,
    interval: Interval,
    radius: f64,
) -> (ScoreVector, Vec<usize>) {
    let sensors = ball_unchecked(rec, center, w, radius);
    let alignment = region_alignment(rec, center, &sensors, interval);
    let scores = ScoreVector {
        length: interval.len(),
        area: sensors.len(),
        alignment,
    };
    (scores, sensors)
}

/// Mean of `alignment_pair(center, j)` over the region, center included.
pub fn region_alignment(rec: &Recording, center: usize, sensors: &[usize], interval: Interval) -> Alignment {
    if sensors.is_empty() {
        return Alignment::UNDEFINED;
    }
    let mut total = 0.0;
    for &j in sensors {
        match alignment_pair(rec, center, j, interval).value() {
            Some(v) => total += v,
            None => return Alignment::UNDEFINED,
        }
    }
    Alignment::new(total / sensors.len() as f64)
}

pub fn score(rec: &Recording, x: &PatternGenotype) -> ScoreVector {
    score_region(rec, x.center, &x.weights, x.interval, x.radius).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(values: &[&[f64]]) -> Recording {
        let positions = (0..values.len())
            .map(|k| SensorPosition::new(k as f64, 0.0, 0.0))
            .collect();
        Recording::new(positions, values.iter().map(|r| r.to_vec()).collect(), "t").unwrap()
    }

    #[test]
    fn distance_examples() {
        let o = SensorPosition::new(0.0, 0.0, 0.0);
        assert_eq!(weighted_distance(&o, &SensorPosition::new(3.0, 4.0, 0.0), &Weights::UNIT), 5.0);
        assert_eq!(weighted_distance(&o, &o, &Weights::UNIT), 0.0);
        let w = Weights::new(4.0, 1.0, 1.0).unwrap();
        assert_eq!(weighted_distance(&SensorPosition::new(1.0, 0.0, 0.0), &o, &w), 2.0);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(Weights::new(0.0, 1.0, 1.0).is_err());
        assert!(Weights::new(1.0, -1.0, 1.0).is_err());
        assert!(Weights::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn ball_examples() {
        let rec = line(&[&[1.0, 1.0][..]; 5]);
        assert_eq!(ball(&rec, 3, &Weights::UNIT, 1.5).unwrap(), vec![2, 3, 4]);
        assert_eq!(ball(&rec, 3, &Weights::UNIT, 0.5).unwrap(), vec![3]);
        assert_eq!(ball(&rec, 3, &Weights::UNIT, 100.0).unwrap().len(), 5);
        // strict inequality at exactly r
        assert_eq!(ball(&rec, 3, &Weights::UNIT, 1.0).unwrap(), vec![3]);
        assert!(matches!(ball(&rec, 3, &Weights::UNIT, 0.0), Err(Error::Domain(_))));
        assert!(ball(&rec, 3, &Weights::UNIT, -1.0).is_err());
    }

    #[test]
    fn mean_examples() {
        let rec = line(&[&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]]);
        assert_eq!(mean_activity(&rec, 1, Interval::new(1, 3)), 2.0);
        assert_eq!(mean_activity(&rec, 1, Interval::new(2, 3)), 2.5);
        assert_eq!(mean_activity(&rec, 2, Interval::new(1, 3)), 4.0);
    }

    #[test]
    fn alignment_hand_examples() {
        let iv = Interval::new(1, 3);
        let same = line(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]);
        assert_eq!(alignment_pair(&same, 1, 2, iv).value(), Some(1.0));
        let anti = line(&[&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]]);
        assert_eq!(alignment_pair(&anti, 1, 2, iv).value(), Some(1.0));
        let zero = line(&[&[1.0, 1.0], &[1.0, 3.0]]);
        assert_eq!(alignment_pair(&zero, 1, 2, Interval::new(1, 2)).value(), Some(0.0));
    }

    #[test]
    fn alignment_undefined_cases() {
        let iv = Interval::new(1, 2);
        let silent = line(&[&[0.0, 0.0], &[1.0, 2.0]]);
        assert!(!alignment_pair(&silent, 1, 2, iv).is_defined());
        assert!(!alignment_pair(&silent, 2, 1, iv).is_defined());
        let zero_mean = line(&[&[1.0, -1.0], &[1.0, 2.0]]);
        assert!(!alignment_pair(&zero_mean, 1, 2, iv).is_defined());
        // j's mean may be zero; only i's mean is a denominator
        assert!(alignment_pair(&zero_mean, 2, 1, iv).is_defined());
        assert!(!Alignment::UNDEFINED.exceeds(f64::NEG_INFINITY));
    }

    #[test]
    fn alignment_is_not_symmetric() {
        let rec = line(&[&[1.0, 2.0], &[2.0, 5.0]]);
        let iv = Interval::new(1, 2);
        let ij = alignment_pair(&rec, 1, 2, iv).value().unwrap();
        let ji = alignment_pair(&rec, 2, 1, iv).value().unwrap();
        assert!((ij - ji).abs() > 0.1, "{ij} vs {ji}");
    }

    #[test]
    fn radius_examples() {
        let iv = Interval::new(1, 3);
        // sensor 2 identical to 1, sensor 3 silent (undefined alignment)
        let rec = line(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]]);
        let r = radius_from_threshold(&rec, 1, iv, &Weights::UNIT, 0.5).unwrap();
        assert_eq!(r, 2.0);
        assert_eq!(ball(&rec, 1, &Weights::UNIT, r).unwrap(), vec![1, 2]);

        let all = line(&[&[1.0, 2.0, 3.0][..]; 4]);
        let r = radius_from_threshold(&all, 2, iv, &Weights::UNIT, 0.9).unwrap();
        assert_eq!(r, 3.0);
        assert_eq!(ball(&all, 2, &Weights::UNIT, r).unwrap().len(), 4);

        let none = line(&[&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(radius_from_threshold(&none, 1, iv, &Weights::UNIT, 0.5), None);
    }

    #[test]
    fn singleton_score() {
        let rec = line(&[&[1.0, 2.0, 3.0], &[5.0, 1.0, 0.5]]);
        let (s, sensors) = score_region(&rec, 1, &Weights::UNIT, Interval::new(1, 3), 0.5);
        assert_eq!(sensors, vec![1]);
        assert_eq!(s.area, 1);
        assert_eq!(s.length, 2);
        assert_eq!(s.alignment.value(), Some(1.0));
    }

    #[test]
    fn undefined_sorts_lowest() {
        assert!(Alignment::UNDEFINED < Alignment::new(-1e300));
        assert!(Alignment::new(0.1) > Alignment::new(0.0));
        assert_eq!(Alignment::new(f64::NAN), Alignment::UNDEFINED);
    }

    #[test]
    fn cell_counter_counts_partner_cells() {
        let rec = line(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]);
        reset_cell_touches();
        alignment_pair(&rec, 1, 2, Interval::new(1, 3));
        alignment_pair(&rec, 1, 2, Interval::new(2, 3));
        assert_eq!(cell_touches(), 5);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -50.0..50.0f64
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_monotone(
            a in (coord(), coord(), coord()),
            b in (coord(), coord(), coord()),
            w in (0.01..10.0f64, 0.01..10.0f64, 0.01..10.0f64),
            bump in 0.0..5.0f64,
        ) {
            let p = SensorPosition::new(a.0, a.1, a.2);
            let q = SensorPosition::new(b.0, b.1, b.2);
            let w = Weights::new(w.0, w.1, w.2).unwrap();
            let d = weighted_distance(&p, &q, &w);
            prop_assert!(d >= 0.0);
            prop_assert_eq!(d, weighted_distance(&q, &p, &w));
            prop_assert_eq!(d == 0.0, p == q);
            let heavier = Weights { w1: w.w1 + bump, ..w };
            prop_assert!(weighted_distance(&p, &q, &heavier) >= d);
        }

        #[test]
        fn alignment_invariant_to_common_positive_scaling(
            xs in proptest::collection::vec(0.5..20.0f64, 6),
            ys in proptest::collection::vec(-20.0..20.0f64, 6),
            lambda in 1e-3..1e3f64,
        ) {
            let iv = Interval::new(1, 6);
            let base = line(&[&xs, &ys]);
            let sx: Vec<f64> = xs.iter().map(|v| v * lambda).collect();
            let sy: Vec<f64> = ys.iter().map(|v| v * lambda).collect();
            let scaled = line(&[&sx, &sy]);
            let a = alignment_pair(&base, 1, 2, iv).value().unwrap();
            let b = alignment_pair(&scaled, 1, 2, iv).value().unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
        }

        #[test]
        fn self_alignment_is_one(xs in proptest::collection::vec(0.1..20.0f64, 2..30)) {
            let n = xs.len();
            let rec = line(&[&xs, &xs]);
            let s = alignment_pair(&rec, 1, 1, Interval::new(1, n)).value().unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
