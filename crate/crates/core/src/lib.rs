//! Evolutionary mining of stable and discriminant spatio-temporal patterns
//! in multi-sensor recordings.
//!
//! A pattern is a time interval together with an axis-weighted ellipsoid of
//! sensors centered on one sensor. Patterns are scored by duration, area and
//! the mean interval alignment of their sensors with the center, and are
//! compared with a Pareto domination that only applies between patterns whose
//! supports overlap, so that distinct regions each keep their own optima.
//!
//! * [`dataset`] – recordings, CSV ingestion and a planted-pattern generator
//! * [`metrics`] – distances, regions, alignment and the score triple
//! * [`momoo`] – domination relations and the bounded Pareto archive
//! * [`engine`] – the steady-state evolutionary miner
//! * [`discriminant`] – paired-setting patterns whose activity differs
//! * [`oracle`] – brute-force grid enumeration for small instances
//! * [`report`] – JSON-lines output schema and result audits
//! * [`cli`] – the `stpm` command-line front end

pub mod cli;
pub mod dataset;
pub mod discriminant;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod momoo;
pub mod oracle;
pub mod report;

pub use dataset::{generate_synthetic, load_recording, PlantedPattern, Recording, SensorPosition, SynthSpec};
pub use engine::{run, MinerConfig, PatternGenotype};
pub use error::{Error, Result};
pub use metrics::{Alignment, Interval, ScoreVector, Weights};
pub use momoo::{ArchiveEntry, InclusionMode, ParetoArchive, Support};
