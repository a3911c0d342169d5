//! Brute-force miner for desk-size instances: enumerate every Euclidean
//! region and interval on a discretization grid, score them all and keep
//! the candidates that no other candidate p-mo-dominates (exact inclusion).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Recording;
use crate::engine::{is_admissible, MinerConfig, PatternGenotype};
use crate::error::{Error, Result};
use crate::metrics::{self, Interval, Weights};
use crate::momoo::{self, ArchiveEntry, InclusionMode, Support};

/// Upper bound on `N × radius levels × starts × length levels`.
pub const MAX_GRID_CANDIDATES: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusLevels {
    /// The string `"all"`: one level per distinct inter-sensor distance plus
    /// one past the largest, so every Euclidean region is reachable.
    All(AllDistances),
    Levels(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllDistances {
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radius_levels: RadiusLevels,
    /// Onsets are `t1_floor, t1_floor + t_stride, ...`.
    pub t_stride: usize,
    /// Interval lengths (`t2 - t1`).
    pub len_levels: Vec<usize>,
}

impl GridSpec {
    pub fn full(n_steps: usize) -> Self {
        Self {
            radius_levels: RadiusLevels::All(AllDistances::All),
            t_stride: 1,
            len_levels: (1..n_steps).collect(),
        }
    }

    fn validate(&self, n_steps: usize) -> Result<()> {
        if self.t_stride == 0 || self.t_stride > n_steps {
            return Err(Error::Config(format!(
                "t_stride must lie in [1, {n_steps}], got {}",
                self.t_stride
            )));
        }
        if self.len_levels.is_empty() || self.len_levels.contains(&0) {
            return Err(Error::Config("len_levels must be non-empty and positive".into()));
        }
        if let RadiusLevels::Levels(levels) = &self.radius_levels {
            if levels.is_empty() || levels.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(Error::Config("radius levels must be non-empty and positive".into()));
            }
        }
        Ok(())
    }

    /// Sorted, deduplicated radius levels for a recording.
    pub fn radii(&self, rec: &Recording) -> Vec<f64> {
        let mut levels = match &self.radius_levels {
            RadiusLevels::Levels(v) => v.clone(),
            RadiusLevels::All(_) => {
                let mut d = Vec::new();
                for i in rec.sensor_ids() {
                    for k in i + 1..=rec.n_sensors() {
                        let v = metrics::weighted_distance(&rec.position(i), &rec.position(k), &Weights::UNIT);
                        if v > 0.0 {
                            d.push(v);
                        }
                    }
                }
                let top = d.iter().copied().fold(0.0f64, f64::max);
                d.push(top + 1.0);
                d
            }
        };
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }
}

fn onsets(floor: usize, stride: usize, n_steps: usize) -> Vec<usize> {
    (floor..n_steps).step_by(stride).collect()
}

/// Scores every admissible grid cell with Euclidean weights.
///
/// Radius levels that reproduce the previous level's sensor set at the
/// same center are skipped, so each distinct region appears once.
pub fn enumerate_candidates(
    rec: &Recording,
    grid: &GridSpec,
    cfg: &MinerConfig,
) -> Result<Vec<ArchiveEntry<PatternGenotype>>> {
    enumerate_candidates_with_threads(rec, grid, cfg, 1)
}

pub fn enumerate_candidates_with_threads(
    rec: &Recording,
    grid: &GridSpec,
    cfg: &MinerConfig,
    threads: usize,
) -> Result<Vec<ArchiveEntry<PatternGenotype>>> {
    grid.validate(rec.n_steps())?;
    let floor = cfg.t1_floor_or(1);
    let radii = grid.radii(rec);
    let starts = onsets(floor, grid.t_stride, rec.n_steps());
    let total = rec.n_sensors() as u128 * radii.len() as u128 * starts.len() as u128 * grid.len_levels.len() as u128;
    if total > MAX_GRID_CANDIDATES {
        return Err(Error::GridTooLarge {
            candidates: total,
            limit: MAX_GRID_CANDIDATES,
        });
    }

    let mut regions: Vec<(usize, f64, Vec<usize>)> = Vec::new();
    for center in rec.sensor_ids() {
        let mut previous: Option<Vec<usize>> = None;
        for &r in &radii {
            let sensors = metrics::ball_unchecked(rec, center, &Weights::UNIT, r);
            if previous.as_ref() != Some(&sensors) {
                previous = Some(sensors.clone());
                regions.push((center, r, sensors));
            }
        }
    }

    let cells: Vec<(usize, Interval)> = regions
        .iter()
        .enumerate()
        .flat_map(|(k, _)| {
            starts.iter().flat_map(move |&t1| {
                grid.len_levels
                    .iter()
                    .filter(move |&&len| t1 + len <= rec.n_steps())
                    .map(move |&len| (k, Interval::new(t1, t1 + len)))
            })
        })
        .collect();

    let score = |&(k, iv): &(usize, Interval)| {
        let (center, r, ref sensors) = regions[k];
        let genotype = PatternGenotype::new(center, Weights::UNIT, iv, r);
        let scores = metrics::score_region(rec, center, &Weights::UNIT, iv, r).0;
        is_admissible(&genotype, &scores, cfg).then(|| ArchiveEntry {
            support: Support::new(center, sensors.clone(), iv),
            genotype,
            scores,
        })
    };
    let out: Vec<Option<ArchiveEntry<PatternGenotype>>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(score).collect())
    } else {
        cells.iter().map(score).collect()
    };
    Ok(out.into_iter().flatten().collect())
}

/// Candidates not p-mo-dominated (exact inclusion) by any other candidate.
pub fn oracle_front<G: Clone>(cands: &[ArchiveEntry<G>], p: f64) -> Vec<ArchiveEntry<G>> {
    cands
        .iter()
        .filter(|y| {
            !cands
                .iter()
                .any(|x| momoo::pmo_dominates(x, y, p, InclusionMode::Exact))
        })
        .cloned()
        .collect()
}
