//! Steady-state evolutionary search over spatio-temporal patterns.
//!
//! One offspring is produced, scored and placed per step. Parents are drawn
//! from admissible members by an archive-guided tournament, the offspring is
//! offered to a bounded Pareto archive (fast p-inclusion) and replaces a
//! non-admissible member or the loser of an inverse tournament.

mod config;
mod operators;
mod selection;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Recording;
use crate::error::{Error, Result};
use crate::metrics::{self, Interval, ScoreVector, Weights};
use crate::momoo::{self, ArchiveEntry, InclusionMode, ParetoArchive, Support};

pub use config::{MinerConfig, ARCHIVE_FACTOR, DISCRIMINANT_T1_FLOOR};
pub use operators::{
    crossover, crossover_with, init_pattern, mutate, mutate_with, sample_interval, CrossoverKind,
    MutationKind,
};
pub(crate) use operators::{initial_step_sizes, minimal_radius, self_adapt, shift_bound};
pub use selection::{member_crowding, select_parent, select_replacement, ARCHIVE_SAMPLE};

/// RNG used throughout the miner; seeded from [`MinerConfig::seed`].
pub type MinerRng = ChaCha8Rng;

/// The pattern genotype `(center, weights, interval, radius)` plus the
/// self-adaptive step sizes for `(w1, w2, w3, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternGenotype {
    pub center: usize,
    pub weights: Weights,
    pub interval: Interval,
    pub radius: f64,
    pub step_sizes: [f64; 4],
}

impl PatternGenotype {
    pub fn new(center: usize, weights: Weights, interval: Interval, radius: f64) -> Self {
        Self {
            center,
            weights,
            interval,
            radius,
            step_sizes: operators::initial_step_sizes(&weights, radius),
        }
    }
}

/// What the loop needs to know about a scored genotype.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Objective vector used for domination.
    pub scores: ScoreVector,
    pub support: Support,
    pub admissible: bool,
}

#[derive(Clone, Debug)]
pub struct Member<G> {
    pub genotype: G,
    pub eval: Evaluation,
}

/// A pattern search problem: genotype representation, scoring and variation.
pub trait SearchSpace: Sync {
    type Genotype: Clone + Send + Sync;

    fn init(&self, rng: &mut MinerRng) -> Result<Self::Genotype>;

    fn evaluate(&self, g: &Self::Genotype) -> Evaluation;

    fn mutate(&self, g: &Self::Genotype, rng: &mut MinerRng) -> Self::Genotype;

    fn crossover(&self, x: &Self::Genotype, y: &Self::Genotype, rng: &mut MinerRng) -> Self::Genotype;

    /// Restricted mating: fast p-inclusion in either direction.
    fn mates_ok(&self, x: &Evaluation, y: &Evaluation) -> bool {
        momoo::p_included_fast(&x.support, &y.support) || momoo::p_included_fast(&y.support, &x.support)
    }
}

/// Single-recording search space.
pub struct PatternSpace<'a> {
    rec: &'a Recording,
    cfg: &'a MinerConfig,
}

impl<'a> PatternSpace<'a> {
    pub fn new(rec: &'a Recording, cfg: &'a MinerConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.validate_against(rec.n_steps(), 1)?;
        Ok(Self { rec, cfg })
    }
}

impl SearchSpace for PatternSpace<'_> {
    type Genotype = PatternGenotype;

    fn init(&self, rng: &mut MinerRng) -> Result<PatternGenotype> {
        Ok(init_pattern(self.cfg, self.rec, rng))
    }

    fn evaluate(&self, g: &PatternGenotype) -> Evaluation {
        let (scores, sensors) =
            metrics::score_region(self.rec, g.center, &g.weights, g.interval, g.radius);
        Evaluation {
            admissible: is_admissible(g, &scores, self.cfg),
            support: Support::new(g.center, sensors, g.interval),
            scores,
        }
    }

    fn mutate(&self, g: &PatternGenotype, rng: &mut MinerRng) -> PatternGenotype {
        mutate(g, self.rec, self.cfg, rng)
    }

    fn crossover(&self, x: &PatternGenotype, y: &PatternGenotype, rng: &mut MinerRng) -> PatternGenotype {
        crossover(x, y, rng)
    }
}

/// Area threshold met, alignment defined and onset not before the floor.
pub fn is_admissible(x: &PatternGenotype, s: &ScoreVector, cfg: &MinerConfig) -> bool {
    s.area >= cfg.min_area && s.alignment.is_defined() && x.interval.t1 >= cfg.t1_floor_or(1)
}

/// Restricted-mating predicate on two genotypes of the same recording.
pub fn mates_ok(x: &PatternGenotype, y: &PatternGenotype, rec: &Recording) -> bool {
    let support = |g: &PatternGenotype| {
        Support::new(
            g.center,
            metrics::ball_unchecked(rec, g.center, &g.weights, g.radius),
            g.interval,
        )
    };
    let (sx, sy) = (support(x), support(y));
    momoo::p_included_fast(&sx, &sy) || momoo::p_included_fast(&sy, &sx)
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<G> {
    pub archive: ParetoArchive<G>,
    /// Number of `evaluate` calls; always equals the budget.
    pub evaluations: usize,
    /// Cells read by alignment computations while building and scoring the
    /// initial population.
    pub init_cell_touches: u64,
}

/// Runs the steady-state loop on a search space.
///
/// `threads > 1` parallelizes the initial population only; every initial
/// individual draws from its own seed, so results do not depend on the
/// thread count.
pub fn run_search<S: SearchSpace>(
    space: &S,
    cfg: &MinerConfig,
    threads: usize,
) -> Result<SearchOutcome<S::Genotype>> {
    cfg.validate()?;
    let pop_size = cfg.pop_size;
    let mut rng = MinerRng::seed_from_u64(cfg.seed);
    let mut archive = ParetoArchive::new(cfg.archive_capacity(), cfg.p, InclusionMode::Fast);

    let seeds: Vec<u64> = (0..pop_size).map(|_| rng.random()).collect();
    let build = |seed: &u64| -> Result<(Member<S::Genotype>, u64)> {
        let before = metrics::cell_touches();
        let mut local = MinerRng::seed_from_u64(*seed);
        let genotype = space.init(&mut local)?;
        let eval = space.evaluate(&genotype);
        Ok((Member { genotype, eval }, metrics::cell_touches() - before))
    };
    let built: Vec<(Member<S::Genotype>, u64)> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(build).collect::<Result<_>>())?
    } else {
        seeds.iter().map(build).collect::<Result<_>>()?
    };
    let init_cell_touches = built.iter().map(|(_, c)| c).sum();
    let mut pop: Vec<Member<S::Genotype>> = built.into_iter().map(|(m, _)| m).collect();
    let mut evaluations = pop_size;

    for m in &pop {
        if m.eval.admissible {
            archive.insert(ArchiveEntry {
                genotype: m.genotype.clone(),
                scores: m.eval.scores,
                support: m.eval.support.clone(),
            });
        }
    }

    while evaluations < cfg.eval_budget {
        let offspring = match select_parent(&pop, &archive, &mut rng) {
            None => space.init(&mut rng)?,
            Some(pi) => {
                assert!(pop[pi].eval.admissible, "non-admissible parent selected");
                let parent = &pop[pi].genotype;
                if rng.random::<f64>() < cfg.mutation_rate {
                    space.mutate(parent, &mut rng)
                } else {
                    match find_mate(space, &pop, pi, &mut rng) {
                        Some(mi) => {
                            assert!(pop[mi].eval.admissible, "non-admissible mate selected");
                            space.crossover(parent, &pop[mi].genotype, &mut rng)
                        }
                        None => space.mutate(parent, &mut rng),
                    }
                }
            }
        };
        let eval = space.evaluate(&offspring);
        evaluations += 1;
        if eval.admissible {
            archive.insert(ArchiveEntry {
                genotype: offspring.clone(),
                scores: eval.scores,
                support: eval.support.clone(),
            });
        }
        let slot = select_replacement(&pop, &archive, &mut rng);
        pop[slot] = Member {
            genotype: offspring,
            eval,
        };
    }

    Ok(SearchOutcome {
        archive,
        evaluations,
        init_cell_touches,
    })
}

/// Up to `pop.len()` random probes for an admissible mate other than the
/// parent that passes restricted mating.
fn find_mate<S: SearchSpace>(
    space: &S,
    pop: &[Member<S::Genotype>],
    parent: usize,
    rng: &mut MinerRng,
) -> Option<usize> {
    for _ in 0..pop.len() {
        let k = rng.random_range(0..pop.len());
        if k != parent && pop[k].eval.admissible && space.mates_ok(&pop[parent].eval, &pop[k].eval) {
            return Some(k);
        }
    }
    None
}

/// Mines one recording and returns the final archive.
pub fn run(cfg: &MinerConfig, rec: &Recording) -> Result<ParetoArchive<PatternGenotype>> {
    run_with_threads(cfg, rec, 1).map(|o| o.archive)
}

pub fn run_with_threads(
    cfg: &MinerConfig,
    rec: &Recording,
    threads: usize,
) -> Result<SearchOutcome<PatternGenotype>> {
    let space = PatternSpace::new(rec, cfg)?;
    run_search(&space, cfg, threads)
}
