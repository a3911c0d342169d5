//! Constrained initialization and the variation operators.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{MinerConfig, MinerRng, PatternGenotype};
use crate::dataset::Recording;
use crate::metrics::{self, Interval, Weights};

/// Learning rate of the log-normal step-size update over the four
/// continuous genes `(w1, w2, w3, r)`.
pub(crate) const TAU: f64 = 0.353_553_390_593_273_8; // 1 / sqrt(2 * 4)
pub(crate) const MIN_GENE: f64 = 1e-6;
pub(crate) const MIN_STEP: f64 = 1e-9;

pub(crate) fn initial_step_sizes(w: &Weights, radius: f64) -> [f64; 4] {
    let s = |v: f64| 0.1 * v.abs() + 0.01;
    [s(w.w1), s(w.w2), s(w.w3), s(radius)]
}

/// Onset uniform in `[floor, n_steps - 1]`, duration `round(N(min_len,
/// min_len / 10))` clamped so that `1 <= t2 - t1` and `t2 <= n_steps`.
pub fn sample_interval(rng: &mut MinerRng, floor: usize, n_steps: usize, min_len: usize) -> Interval {
    debug_assert!(floor >= 1 && floor < n_steps);
    let t1 = rng.random_range(floor..n_steps);
    let mean = min_len as f64;
    let draw = Normal::new(mean, mean / 10.0)
        .expect("positive standard deviation")
        .sample(rng)
        .round();
    let room = n_steps - t1;
    let len = if draw < 1.0 { 1 } else { (draw as usize).min(room) };
    Interval::new(t1, t1 + len)
}

/// Smallest positive distance from `center` to another sensor, used as the
/// radius of seeds whose threshold region is empty.
pub(crate) fn minimal_radius(rec: &Recording, center: usize, w: &Weights) -> f64 {
    let c = rec.position(center);
    rec.sensor_ids()
        .filter(|&k| k != center)
        .map(|k| metrics::weighted_distance(&c, &rec.position(k), w))
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min)
        .min(1.0e12)
}

/// Constrained sampling of a fresh pattern: uniform center, Euclidean
/// weights, sampled interval and the threshold-derived radius.
pub fn init_pattern(cfg: &MinerConfig, rec: &Recording, rng: &mut MinerRng) -> PatternGenotype {
    let center = rng.random_range(1..=rec.n_sensors());
    let interval = sample_interval(rng, cfg.t1_floor_or(1), rec.n_steps(), cfg.min_len);
    let w = Weights::UNIT;
    let radius = metrics::radius_from_threshold(rec, center, interval, &w, cfg.min_sigma)
        .unwrap_or_else(|| minimal_radius(rec, center, &w));
    PatternGenotype::new(center, w, interval, radius)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    /// Move the center to a sensor of the current region.
    Center,
    /// Self-adaptive Gaussian mutation of weights and radius.
    Strategy,
    /// Move one interval bound by one step.
    Interval,
    /// Replace by a freshly initialized pattern.
    Fresh,
}

impl MutationKind {
    pub const ALL: [MutationKind; 4] = [Self::Center, Self::Strategy, Self::Interval, Self::Fresh];

    pub(crate) fn draw(rng: &mut MinerRng) -> Self {
        Self::ALL[rng.random_range(0..4)]
    }
}

/// Applies one uniformly chosen mutation sub-operator.
pub fn mutate(x: &PatternGenotype, rec: &Recording, cfg: &MinerConfig, rng: &mut MinerRng) -> PatternGenotype {
    let kind = MutationKind::draw(rng);
    mutate_with(kind, x, rec, cfg, rng)
}

pub fn mutate_with(
    kind: MutationKind,
    x: &PatternGenotype,
    rec: &Recording,
    cfg: &MinerConfig,
    rng: &mut MinerRng,
) -> PatternGenotype {
    match kind {
        MutationKind::Center => {
            let region = metrics::ball_unchecked(rec, x.center, &x.weights, x.radius);
            let mut y = x.clone();
            if !region.is_empty() {
                y.center = region[rng.random_range(0..region.len())];
            }
            y
        }
        MutationKind::Strategy => {
            let (weights, radius, step_sizes) = self_adapt(&x.weights, x.radius, &x.step_sizes, rng);
            PatternGenotype {
                weights,
                radius,
                step_sizes,
                ..x.clone()
            }
        }
        MutationKind::Interval => PatternGenotype {
            interval: shift_bound(x.interval, cfg.t1_floor_or(1), rec.n_steps(), rng),
            ..x.clone()
        },
        MutationKind::Fresh => init_pattern(cfg, rec, rng),
    }
}

/// Log-normal update of each step size, then a Gaussian perturbation of
/// each gene with its own step; genes and steps are kept positive.
pub(crate) fn self_adapt(
    w: &Weights,
    radius: f64,
    steps: &[f64; 4],
    rng: &mut MinerRng,
) -> (Weights, f64, [f64; 4]) {
    let genes = [w.w1, w.w2, w.w3, radius];
    let mut new_steps = [0.0; 4];
    let mut new_genes = [0.0; 4];
    for k in 0..4 {
        let z: f64 = rng.sample(StandardNormal);
        new_steps[k] = (steps[k] * (TAU * z).exp()).clamp(MIN_STEP, 1e12);
        let z: f64 = rng.sample(StandardNormal);
        let g = genes[k] + new_steps[k] * z;
        new_genes[k] = if g.is_finite() { g.max(MIN_GENE) } else { genes[k] };
    }
    let weights = Weights {
        w1: new_genes[0],
        w2: new_genes[1],
        w3: new_genes[2],
    };
    (weights, new_genes[3], new_steps)
}

/// Moves a uniformly chosen bound one step in a uniformly chosen direction,
/// leaving the interval unchanged if that would leave
/// `floor <= t1 < t2 <= n_steps`.
pub(crate) fn shift_bound(iv: Interval, floor: usize, n_steps: usize, rng: &mut MinerRng) -> Interval {
    let lower = rng.random_bool(0.5);
    let up = rng.random_bool(0.5);
    let step = |v: usize| if up { v + 1 } else { v.saturating_sub(1) };
    let moved = if lower {
        Interval::new(step(iv.t1), iv.t2)
    } else {
        Interval::new(iv.t1, step(iv.t2))
    };
    if moved.t1 >= floor && moved.t1 < moved.t2 && moved.t2 <= n_steps {
        moved
    } else {
        iv
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossoverKind {
    /// Take the mate's center.
    Center,
    /// Take the mate's weights, radius and step sizes.
    Ellipsoid,
    /// Take the hull of both intervals.
    MergeIntervals,
}

impl CrossoverKind {
    pub const ALL: [CrossoverKind; 3] = [Self::Center, Self::Ellipsoid, Self::MergeIntervals];

    pub(crate) fn draw(rng: &mut MinerRng) -> Self {
        Self::ALL[rng.random_range(0..3)]
    }
}

/// Applies one uniformly chosen crossover to `x` with mate `y`. Callers
/// must check restricted mating first.
pub fn crossover(x: &PatternGenotype, y: &PatternGenotype, rng: &mut MinerRng) -> PatternGenotype {
    crossover_with(CrossoverKind::draw(rng), x, y)
}

pub fn crossover_with(kind: CrossoverKind, x: &PatternGenotype, y: &PatternGenotype) -> PatternGenotype {
    match kind {
        CrossoverKind::Center => PatternGenotype {
            center: y.center,
            ..x.clone()
        },
        CrossoverKind::Ellipsoid => PatternGenotype {
            weights: y.weights,
            radius: y.radius,
            step_sizes: y.step_sizes,
            ..x.clone()
        },
        CrossoverKind::MergeIntervals => PatternGenotype {
            interval: x.interval.hull(&y.interval),
            ..x.clone()
        },
    }
}
