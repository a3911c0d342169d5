use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Archive capacity as a multiple of the population size.
pub const ARCHIVE_FACTOR: usize = 10;

/// Default onset floor in discriminant mode.
pub const DISCRIMINANT_T1_FLOOR: usize = 200;

/// User thresholds and evolutionary parameters.
///
/// Field names are the JSON config keys. The loop defaults are population
/// 200, 40,000 evaluations and mutation/crossover rates 0.7/0.3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    /// Mean initial interval length.
    pub min_len: usize,
    /// Minimal pairwise alignment used to size initial regions.
    pub min_sigma: f64,
    /// Minimal area of an admissible pattern.
    pub min_area: usize,
    /// Inclusion ratio for p-mo domination.
    pub p: f64,
    pub pop_size: usize,
    pub eval_budget: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub seed: u64,
    /// Earliest admissible onset; 1 for plain mining, 200 in discriminant
    /// mode when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1_floor: Option<usize>,
    /// Minimal |activity difference| between settings (discriminant only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_d: Option<f64>,
    /// Discriminant mode: use `|σ⁺ − σ⁻|` as the alignment objective
    /// instead of `min(σ⁺, σ⁻)`.
    pub alignment_gap_objective: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            min_len: 10,
            min_sigma: 0.9,
            min_area: 3,
            p: 0.5,
            pop_size: 200,
            eval_budget: 40_000,
            mutation_rate: 0.7,
            crossover_rate: 0.3,
            seed: 0,
            t1_floor: None,
            min_d: None,
            alignment_gap_objective: false,
        }
    }
}

impl MinerConfig {
    pub fn archive_capacity(&self) -> usize {
        ARCHIVE_FACTOR * self.pop_size
    }

    pub fn t1_floor_or(&self, default: usize) -> usize {
        self.t1_floor.unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.pop_size < 2 {
            return bad(format!("pop_size must be at least 2, got {}", self.pop_size));
        }
        if self.eval_budget < self.pop_size {
            return bad(format!(
                "eval_budget ({}) must be at least pop_size ({})",
                self.eval_budget, self.pop_size
            ));
        }
        for (name, r) in [("mutation_rate", self.mutation_rate), ("crossover_rate", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} must lie in [0, 1], got {r}"));
            }
        }
        if (self.mutation_rate + self.crossover_rate - 1.0).abs() > 1e-9 {
            return bad(format!(
                "mutation_rate + crossover_rate must equal 1, got {}",
                self.mutation_rate + self.crossover_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if self.min_len == 0 {
            return bad("min_len must be at least 1".into());
        }
        if self.min_area == 0 {
            return bad("min_area must be at least 1".into());
        }
        if !self.min_sigma.is_finite() {
            return bad("min_sigma must be finite".into());
        }
        if self.t1_floor == Some(0) {
            return bad("t1_floor is 1-based and must be at least 1".into());
        }
        if let Some(d) = self.min_d {
            if !(d.is_finite() && d >= 0.0) {
                return bad(format!("min_d must be a non-negative number, got {d}"));
            }
        }
        Ok(())
    }

    /// Checks the onset floor leaves room for an interval in `n_steps`.
    pub fn validate_against(&self, n_steps: usize, default_floor: usize) -> Result<()> {
        let floor = self.t1_floor_or(default_floor);
        if floor >= n_steps {
            return Err(Error::Config(format!(
                "t1_floor ({floor}) leaves no interval in a recording of {n_steps} steps"
            )));
        }
        Ok(())
    }
}
