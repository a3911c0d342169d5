//! Discriminant patterns over a pair of (positive, negative) recordings.
//!
//! Sensor positions may differ between settings, so a pattern is anchored
//! on a pair of sensors `(i, j)` that are mutually nearest across settings.
//! It is scored in both settings, and its activity difference `d` (mean over
//! the positive region minus mean over the negative region) must exceed
//! `min_d` in magnitude.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Recording};
use crate::engine::{
    self, initial_step_sizes, minimal_radius, sample_interval, self_adapt, shift_bound,
    CrossoverKind, Evaluation, MinerConfig, MinerRng, MutationKind, SearchOutcome, SearchSpace,
    DISCRIMINANT_T1_FLOOR,
};
use crate::error::{Error, Result};
use crate::metrics::{self, Alignment, Interval, ScoreVector, Weights};
use crate::momoo::{ParetoArchive, Support};

#[derive(Clone, Debug, PartialEq)]
pub struct PairedRecording {
    positive: Recording,
    negative: Recording,
}

impl PairedRecording {
    pub fn new(positive: Recording, negative: Recording) -> Result<Self> {
        if positive.n_sensors() != negative.n_sensors() {
            return Err(Error::Dimension(format!(
                "positive setting has {} sensors, negative has {}",
                positive.n_sensors(),
                negative.n_sensors()
            )));
        }
        Ok(Self { positive, negative })
    }

    pub fn positive(&self) -> &Recording {
        &self.positive
    }

    pub fn negative(&self) -> &Recording {
        &self.negative
    }

    pub fn n_sensors(&self) -> usize {
        self.positive.n_sensors()
    }

    /// Intervals are validated against the shorter recording.
    pub fn n_steps(&self) -> usize {
        self.positive.n_steps().min(self.negative.n_steps())
    }

    /// The same pair with the roles of the settings exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            positive: self.negative.clone(),
            negative: self.positive.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantGenotype {
    pub center_pos: usize,
    pub center_neg: usize,
    pub weights: Weights,
    pub interval: Interval,
    pub radius: f64,
    pub step_sizes: [f64; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantScores {
    pub area_pos: usize,
    pub area_neg: usize,
    pub align_pos: Alignment,
    pub align_neg: Alignment,
    pub length: usize,
    pub d: f64,
}

impl DiscriminantScores {
    /// The vector used for domination: `(length, min area, min alignment)`,
    /// or `|σ⁺ − σ⁻|` in place of the alignment when `gap` is set.
    pub fn objectives(&self, gap: bool) -> ScoreVector {
        let alignment = match (self.align_pos.value(), self.align_neg.value()) {
            (Some(a), Some(b)) if gap => Alignment::new((a - b).abs()),
            (Some(a), Some(b)) => Alignment::new(a.min(b)),
            _ => Alignment::UNDEFINED,
        };
        ScoreVector {
            length: self.length,
            area: self.area_pos.min(self.area_neg),
            alignment,
        }
    }
}

fn nearest(target: &dataset::SensorPosition, candidates: &Recording, w: &Weights) -> usize {
    let mut best = (f64::INFINITY, 0);
    for k in candidates.sensor_ids() {
        let d = metrics::weighted_distance(target, &candidates.position(k), w);
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}

/// Mutual-nearest pairing of positive sensor `i`: `j` is the negative
/// sensor nearest to `i`, and `i` must in turn be the positive sensor
/// nearest to `j`. Ties go to the smallest index.
pub fn pair_centers(pr: &PairedRecording, i: usize, w: &Weights) -> Option<(usize, usize)> {
    let j = nearest(&pr.positive.position(i), &pr.negative, w);
    let back = nearest(&pr.negative.position(j), &pr.positive, w);
    (back == i).then_some((i, j))
}

fn region_mean(rec: &Recording, sensors: &[usize], interval: Interval) -> f64 {
    let mut total = 0.0;
    for &k in sensors {
        total += rec.window(k, interval).iter().sum::<f64>();
    }
    total / (sensors.len() * interval.cells()) as f64
}

fn score_parts(pr: &PairedRecording, x: &DiscriminantGenotype) -> (DiscriminantScores, Vec<usize>) {
    let iv = x.interval;
    let pos = metrics::ball_unchecked(&pr.positive, x.center_pos, &x.weights, x.radius);
    let neg = metrics::ball_unchecked(&pr.negative, x.center_neg, &x.weights, x.radius);
    let scores = DiscriminantScores {
        area_pos: pos.len(),
        area_neg: neg.len(),
        align_pos: metrics::region_alignment(&pr.positive, x.center_pos, &pos, iv),
        align_neg: metrics::region_alignment(&pr.negative, x.center_neg, &neg, iv),
        length: iv.len(),
        d: region_mean(&pr.positive, &pos, iv) - region_mean(&pr.negative, &neg, iv),
    };
    (scores, pos)
}

pub fn discriminant_score(pr: &PairedRecording, x: &DiscriminantGenotype) -> DiscriminantScores {
    score_parts(pr, x).0
}

/// Both regions large enough, both alignments defined, `|d| > min_d` and
/// onset not before the floor (200 unless configured).
pub fn is_admissible_disc(x: &DiscriminantGenotype, s: &DiscriminantScores, cfg: &MinerConfig) -> bool {
    s.area_pos.min(s.area_neg) >= cfg.min_area
        && s.align_pos.is_defined()
        && s.align_neg.is_defined()
        && s.d.abs() > cfg.min_d.unwrap_or(0.0)
        && x.interval.t1 >= cfg.t1_floor_or(DISCRIMINANT_T1_FLOOR)
}

pub struct DiscriminantSpace<'a> {
    pr: &'a PairedRecording,
    cfg: &'a MinerConfig,
}

impl<'a> DiscriminantSpace<'a> {
    pub fn new(pr: &'a PairedRecording, cfg: &'a MinerConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.min_d.is_none() {
            return Err(Error::Config(
                "discriminant mining needs min_d, the minimal activity difference".into(),
            ));
        }
        cfg.validate_against(pr.n_steps(), DISCRIMINANT_T1_FLOOR)?;
        Ok(Self { pr, cfg })
    }

    fn floor(&self) -> usize {
        self.cfg.t1_floor_or(DISCRIMINANT_T1_FLOOR)
    }

    fn radius_in(rec: &Recording, center: usize, iv: Interval, w: &Weights, min_sigma: f64) -> f64 {
        metrics::radius_from_threshold(rec, center, iv, w, min_sigma)
            .unwrap_or_else(|| minimal_radius(rec, center, w))
    }

    pub fn init_pattern(&self, rng: &mut MinerRng) -> Result<DiscriminantGenotype> {
        let n = self.pr.n_sensors();
        let w = Weights::UNIT;
        let pair = (0..n).find_map(|_| pair_centers(self.pr, rng.random_range(1..=n), &w));
        let (i, j) = pair.ok_or_else(|| {
            Error::Init(format!(
                "no mutual-nearest sensor pair found in {n} draws; check that both settings share a sensor geometry"
            ))
        })?;
        let interval = sample_interval(rng, self.floor(), self.pr.n_steps(), self.cfg.min_len);
        let radius = Self::radius_in(&self.pr.positive, i, interval, &w, self.cfg.min_sigma)
            .min(Self::radius_in(&self.pr.negative, j, interval, &w, self.cfg.min_sigma));
        Ok(DiscriminantGenotype {
            center_pos: i,
            center_neg: j,
            weights: w,
            interval,
            radius,
            step_sizes: initial_step_sizes(&w, radius),
        })
    }

    fn repaired(&self, mut x: DiscriminantGenotype, center: usize, w: Weights) -> Option<DiscriminantGenotype> {
        let (i, j) = pair_centers(self.pr, center, &w)?;
        x.center_pos = i;
        x.center_neg = j;
        x.weights = w;
        Some(x)
    }

    pub fn mutate_with(&self, kind: MutationKind, x: &DiscriminantGenotype, rng: &mut MinerRng) -> DiscriminantGenotype {
        match kind {
            MutationKind::Center => {
                let region = metrics::ball_unchecked(&self.pr.positive, x.center_pos, &x.weights, x.radius);
                let k = region[rng.random_range(0..region.len())];
                self.repaired(x.clone(), k, x.weights).unwrap_or_else(|| x.clone())
            }
            MutationKind::Strategy => {
                let (w, radius, step_sizes) = self_adapt(&x.weights, x.radius, &x.step_sizes, rng);
                let moved = DiscriminantGenotype {
                    radius,
                    step_sizes,
                    ..x.clone()
                };
                // weights that break the pairing are not taken
                self.repaired(moved.clone(), x.center_pos, w).unwrap_or(moved)
            }
            MutationKind::Interval => DiscriminantGenotype {
                interval: shift_bound(x.interval, self.floor(), self.pr.n_steps(), rng),
                ..x.clone()
            },
            MutationKind::Fresh => self.init_pattern(rng).unwrap_or_else(|_| x.clone()),
        }
    }

    pub fn crossover_with(&self, kind: CrossoverKind, x: &DiscriminantGenotype, y: &DiscriminantGenotype) -> DiscriminantGenotype {
        match kind {
            CrossoverKind::Center => self
                .repaired(x.clone(), y.center_pos, x.weights)
                .unwrap_or_else(|| x.clone()),
            CrossoverKind::Ellipsoid => {
                let taken = DiscriminantGenotype {
                    radius: y.radius,
                    step_sizes: y.step_sizes,
                    ..x.clone()
                };
                self.repaired(taken, x.center_pos, y.weights)
                    .unwrap_or_else(|| x.clone())
            }
            CrossoverKind::MergeIntervals => DiscriminantGenotype {
                interval: x.interval.hull(&y.interval),
                ..x.clone()
            },
        }
    }
}

impl SearchSpace for DiscriminantSpace<'_> {
    type Genotype = DiscriminantGenotype;

    fn init(&self, rng: &mut MinerRng) -> Result<DiscriminantGenotype> {
        self.init_pattern(rng)
    }

    fn evaluate(&self, g: &DiscriminantGenotype) -> Evaluation {
        let (s, sensors) = score_parts(self.pr, g);
        Evaluation {
            scores: s.objectives(self.cfg.alignment_gap_objective),
            support: Support::new(g.center_pos, sensors, g.interval),
            admissible: is_admissible_disc(g, &s, self.cfg),
        }
    }

    fn mutate(&self, g: &DiscriminantGenotype, rng: &mut MinerRng) -> DiscriminantGenotype {
        let kind = MutationKind::ALL[rng.random_range(0..4)];
        self.mutate_with(kind, g, rng)
    }

    fn crossover(&self, x: &DiscriminantGenotype, y: &DiscriminantGenotype, rng: &mut MinerRng) -> DiscriminantGenotype {
        let kind = CrossoverKind::ALL[rng.random_range(0..3)];
        self.crossover_with(kind, x, y)
    }
}

pub fn run_discriminant(cfg: &MinerConfig, pr: &PairedRecording) -> Result<ParetoArchive<DiscriminantGenotype>> {
    run_discriminant_with_threads(cfg, pr, 1).map(|o| o.archive)
}

pub fn run_discriminant_with_threads(
    cfg: &MinerConfig,
    pr: &PairedRecording,
    threads: usize,
) -> Result<SearchOutcome<DiscriminantGenotype>> {
    let space = DiscriminantSpace::new(pr, cfg)?;
    engine::run_search(&space, cfg, threads)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingFiles {
    pub positions: PathBuf,
    pub activities: PathBuf,
}

/// Names the positive and negative recordings; relative paths resolve
/// against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedManifest {
    pub positive: RecordingFiles,
    pub negative: RecordingFiles,
}

impl PairedManifest {
    pub fn load(path: &Path) -> Result<PairedRecording> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: PairedManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let load = |f: &RecordingFiles, label: &str| {
            dataset::load_recording(&base.join(&f.positions), &base.join(&f.activities))
                .map(|r| r.with_label(label))
        };
        PairedRecording::new(load(&manifest.positive, "positive")?, load(&manifest.negative, "negative")?)
    }
}

/// Loads a pair from two data directories in the single-recording layout.
pub fn load_paired_dirs(pos_dir: &Path, neg_dir: &Path) -> Result<PairedRecording> {
    PairedRecording::new(dataset::load_dir(pos_dir)?, dataset::load_dir(neg_dir)?)
}
