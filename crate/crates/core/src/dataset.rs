//! Recordings: sensor positions plus an N×T activity matrix, CSV ingestion,
//! and a synthetic generator with planted ground-truth patterns.
//!
//! Sensor ids and time steps are 1-based everywhere in the public API.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SensorPosition {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// One experimental setting: `N` sensors observed over `T` time steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    positions: Vec<SensorPosition>,
    /// Row-major `N × T`.
    activities: Vec<f64>,
    n_steps: usize,
    label: String,
}

impl Recording {
    pub fn new(
        positions: Vec<SensorPosition>,
        rows: Vec<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::Dimension(format!(
                "need at least 2 sensors, got {}",
                positions.len()
            )));
        }
        if rows.len() != positions.len() {
            return Err(Error::Dimension(format!(
                "{} positions but {} activity rows",
                positions.len(),
                rows.len()
            )));
        }
        let n_steps = rows[0].len();
        if n_steps < 2 {
            return Err(Error::Dimension(format!(
                "need at least 2 time steps, got {n_steps}"
            )));
        }
        if let Some(k) = positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::Data(format!("sensor {} has a non-finite position", k + 1)));
        }
        let mut activities = Vec::with_capacity(rows.len() * n_steps);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != n_steps {
                return Err(Error::Dimension(format!(
                    "activity row {} has {} values, expected {n_steps}",
                    k + 1,
                    row.len()
                )));
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "non-finite activity at sensor {}, step {}",
                    k + 1,
                    t + 1
                )));
            }
            activities.extend(row);
        }
        Ok(Self {
            positions,
            activities,
            n_steps,
            label: label.into(),
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn positions(&self) -> &[SensorPosition] {
        &self.positions
    }

    /// Position of sensor `id` (1-based).
    pub fn position(&self, id: usize) -> SensorPosition {
        self.positions[id - 1]
    }

    /// Full activity curve of sensor `id` (1-based).
    pub fn series(&self, id: usize) -> &[f64] {
        let start = (id - 1) * self.n_steps;
        &self.activities[start..start + self.n_steps]
    }

    /// Activity of sensor `id` restricted to the inclusive interval.
    pub fn window(&self, id: usize, interval: Interval) -> &[f64] {
        &self.series(id)[interval.t1 - 1..interval.t2]
    }

    pub fn contains_interval(&self, interval: Interval) -> bool {
        interval.t1 >= 1 && interval.t1 < interval.t2 && interval.t2 <= self.n_steps
    }

    pub fn sensor_ids(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n_sensors()
    }

    /// Write the recording in the two-file CSV format read by [`load_recording`].
    pub fn save(&self, positions_path: &Path, activities_path: &Path) -> Result<()> {
        let mut pos = String::from("id,x,y,z\n");
        for (k, p) in self.positions.iter().enumerate() {
            pos.push_str(&format!("{},{},{},{}\n", k + 1, p.x, p.y, p.z));
        }
        write_file(positions_path, pos.as_bytes())?;

        let mut act = String::with_capacity(self.activities.len() * 8);
        for id in self.sensor_ids() {
            let row = self.series(id);
            for (t, v) in row.iter().enumerate() {
                if t > 0 {
                    act.push(',');
                }
                act.push_str(&v.to_string());
            }
            act.push('\n');
        }
        write_file(activities_path, act.as_bytes())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Adds `delta` to every listed (sensor, step) cell.
    pub fn offset_cells(&mut self, sensors: &BTreeSet<usize>, interval: Interval, delta: f64) {
        for &id in sensors {
            let start = (id - 1) * self.n_steps;
            for v in &mut self.activities[start + interval.t1 - 1..start + interval.t2] {
                *v += delta;
            }
        }
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_value(path: &Path, line: u64, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("cannot parse {field:?} as a number")))
}

fn csv_reader(path: &Path, has_headers: bool) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Loads a recording from a positions CSV (`id,x,y,z` with header) and an
/// activities CSV (no header, one row of `T` values per sensor).
pub fn load_recording(positions_path: &Path, activities_path: &Path) -> Result<Recording> {
    let mut positions = Vec::new();
    let mut rdr = csv_reader(positions_path, true)?;
    let header = rdr
        .headers()
        .map_err(|e| parse_err(positions_path, 1, e.to_string()))?
        .clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != ["id", "x", "y", "z"] {
        return Err(parse_err(positions_path, 1, "expected header id,x,y,z"));
    }
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(positions_path, line, e.to_string())
        })?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            return Err(parse_err(
                positions_path,
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        let id: usize = rec[0]
            .parse()
            .map_err(|_| parse_err(positions_path, line, format!("bad sensor id {:?}", &rec[0])))?;
        if id != positions.len() + 1 {
            return Err(parse_err(
                positions_path,
                line,
                format!("sensor ids must be 1-based and contiguous; expected {}, found {id}", positions.len() + 1),
            ));
        }
        let p = SensorPosition::new(
            parse_value(positions_path, line, &rec[1])?,
            parse_value(positions_path, line, &rec[2])?,
            parse_value(positions_path, line, &rec[3])?,
        );
        if !p.is_finite() {
            return Err(Error::Data(format!(
                "{}:{line}: non-finite coordinate",
                positions_path.display()
            )));
        }
        positions.push(p);
    }

    let mut rows = Vec::new();
    for rec in csv_reader(activities_path, false)?.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(activities_path, line, e.to_string())
        })?;
        let line = line_of(&rec);
        let row = rec
            .iter()
            .map(|f| parse_value(activities_path, line, f))
            .collect::<Result<Vec<_>>>()?;
        if let Some(t) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "{}:{line}: non-finite activity at step {}",
                activities_path.display(),
                t + 1
            )));
        }
        rows.push(row);
    }

    let label = activities_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Recording::new(positions, rows, label)
}

pub const POSITIONS_FILE: &str = "positions.csv";
pub const ACTIVITIES_FILE: &str = "activities.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Loads `positions.csv` and `activities.csv` from a data directory.
pub fn load_dir(dir: &Path) -> Result<Recording> {
    let rec = load_recording(&dir.join(POSITIONS_FILE), &dir.join(ACTIVITIES_FILE))?;
    let label = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(rec.with_label(label))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedPattern {
    pub sensor_ids: BTreeSet<usize>,
    pub interval: Interval,
    pub base_amplitude: f64,
    pub noise_sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_sensors: usize,
    pub n_steps: usize,
    #[serde(default)]
    pub planted: Vec<PlantedPattern>,
    pub background_sigma: f64,
    /// Defaults to `10 * background_sigma`, which keeps sensor means away
    /// from zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_offset: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn mean_offset(&self) -> f64 {
        self.mean_offset.unwrap_or(10.0 * self.background_sigma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sensors < 2 || self.n_steps < 2 {
            return Err(Error::Spec("n_sensors and n_steps must both be at least 2".into()));
        }
        if !(self.background_sigma.is_finite() && self.background_sigma > 0.0) {
            return Err(Error::Spec("background_sigma must be positive".into()));
        }
        if !self.mean_offset().is_finite() {
            return Err(Error::Spec("mean_offset must be finite".into()));
        }
        for (k, p) in self.planted.iter().enumerate() {
            let tag = k + 1;
            if p.sensor_ids.is_empty() {
                return Err(Error::Spec(format!("planted pattern {tag} has no sensors")));
            }
            if let Some(&bad) = p.sensor_ids.iter().find(|&&s| s == 0 || s > self.n_sensors) {
                return Err(Error::Spec(format!(
                    "planted pattern {tag}: sensor {bad} outside [1, {}]",
                    self.n_sensors
                )));
            }
            let iv = p.interval;
            if !(iv.t1 >= 1 && iv.t1 < iv.t2 && iv.t2 <= self.n_steps) {
                return Err(Error::Spec(format!(
                    "planted pattern {tag}: interval [{}, {}] not within [1, {}] with t1 < t2",
                    iv.t1, iv.t2, self.n_steps
                )));
            }
            if !p.base_amplitude.is_finite() || !(p.noise_sigma.is_finite() && p.noise_sigma >= 0.0) {
                return Err(Error::Spec(format!(
                    "planted pattern {tag}: amplitude must be finite and noise_sigma non-negative"
                )));
            }
        }
        for (a, pa) in self.planted.iter().enumerate() {
            for (b, pb) in self.planted.iter().enumerate().skip(a + 1) {
                let shares_time = pa.interval.t1 <= pb.interval.t2 && pb.interval.t1 <= pa.interval.t2;
                if shares_time && pa.sensor_ids.intersection(&pb.sensor_ids).next().is_some() {
                    return Err(Error::Spec(format!(
                        "planted patterns {} and {} share (sensor, step) cells",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Side length of the square grid used to lay out `n` sensors.
fn grid_side(n: usize) -> usize {
    let mut side = (n as f64).sqrt().floor() as usize;
    while side * side < n {
        side += 1;
    }
    side.max(1)
}

/// Planar unit-spaced grid layout, filled row by row.
pub fn grid_layout(n: usize) -> Vec<SensorPosition> {
    let side = grid_side(n);
    (0..n)
        .map(|k| SensorPosition::new((k % side) as f64, (k / side) as f64, 0.0))
        .collect()
}

/// Sensors of [`grid_layout`]`(n)` within Euclidean distance `radius`
/// (inclusive) of `center`. Handy for building spatially compact planted sets.
pub fn grid_disc(n: usize, center: usize, radius: f64) -> BTreeSet<usize> {
    let layout = grid_layout(n);
    let c = layout[center - 1];
    layout
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let (dx, dy, dz) = (p.x - c.x, p.y - c.y, p.z - c.z);
            (dx * dx + dy * dy + dz * dz).sqrt() <= radius
        })
        .map(|(k, _)| k + 1)
        .collect()
}

/// Random-walk waveform of `len` samples with unit peak amplitude.
fn waveform(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut acc = 0.0;
    let mut s: Vec<f64> = (0..len)
        .map(|_| {
            acc += rng.sample::<f64, _>(StandardNormal);
            acc
        })
        .collect();
    let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        s.iter_mut().for_each(|v| *v /= peak);
    }
    s
}

/// Writes a generated recording and its planted patterns into `dir` using
/// the data-directory layout.
pub fn save_dir(dir: &Path, rec: &Recording, planted: &[PlantedPattern]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    rec.save(&dir.join(POSITIONS_FILE), &dir.join(ACTIVITIES_FILE))?;
    let mut truth = serde_json::to_string_pretty(planted)?;
    truth.push('\n');
    write_file(&dir.join(GROUND_TRUTH_FILE), truth.as_bytes())
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<PlantedPattern>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Generates a recording on a grid layout. Background cells are
/// `mean_offset + N(0, background_sigma)`; planted cells are
/// `mean_offset + base_amplitude * s(t) + N(0, noise_sigma)` with one
/// waveform `s` shared by all sensors of a pattern.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Recording, Vec<PlantedPattern>)> {
    spec.validate()?;
    let (n, t) = (spec.n_sensors, spec.n_steps);
    let offset = spec.mean_offset();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..t)
                .map(|_| offset + spec.background_sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();

    for p in &spec.planted {
        let iv = p.interval;
        let s = waveform(&mut rng, iv.t2 - iv.t1 + 1);
        for &id in &p.sensor_ids {
            let row = &mut rows[id - 1];
            for (k, tt) in (iv.t1..=iv.t2).enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                row[tt - 1] = offset + p.base_amplitude * s[k] + p.noise_sigma * z;
            }
        }
    }

    let rec = Recording::new(grid_layout(n), rows, format!("synthetic-{}", spec.seed))?;
    Ok((rec, spec.planted.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::alignment_pair;

    fn spec_with(planted: Vec<PlantedPattern>) -> SynthSpec {
        SynthSpec {
            n_sensors: 16,
            n_steps: 40,
            planted,
            background_sigma: 1.0,
            mean_offset: None,
            seed: 3,
        }
    }

    #[test]
    fn round_trip_two_sensors() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Recording::new(
            vec![SensorPosition::new(0.0, 0.0, 0.0), SensorPosition::new(1.0, 0.0, 0.0)],
            vec![vec![1.0, 2.5, -3.0], vec![0.1, 0.2, 1e-17]],
            "x",
        )
        .unwrap();
        let (p, a) = (dir.path().join("p.csv"), dir.path().join("a.csv"));
        rec.save(&p, &a).unwrap();
        let back = load_recording(&p, &a).unwrap();
        assert_eq!(back.n_sensors(), 2);
        assert_eq!(back.n_steps(), 3);
        assert_eq!(back.positions(), rec.positions());
        assert_eq!(back.series(2), rec.series(2));
    }

    #[test]
    fn row_count_mismatch_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let (p, a) = (dir.path().join("p.csv"), dir.path().join("a.csv"));
        fs::write(&p, "id,x,y,z\n1,0,0,0\n2,1,0,0\n").unwrap();
        fs::write(&a, "1,2\n3,4\n5,6\n").unwrap();
        assert!(matches!(load_recording(&p, &a), Err(Error::Dimension(_))));
    }

    #[test]
    fn nan_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let (p, a) = (dir.path().join("p.csv"), dir.path().join("a.csv"));
        fs::write(&p, "id,x,y,z\r\n1,0,0,0\r\n2,1,0,0\r\n").unwrap();
        fs::write(&a, "1,NaN\r\n3,4\r\n").unwrap();
        assert!(matches!(load_recording(&p, &a), Err(Error::Data(_))));
    }

    #[test]
    fn malformed_value_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let (p, a) = (dir.path().join("p.csv"), dir.path().join("a.csv"));
        fs::write(&p, "id,x,y,z\n1,0,0,0\n2,1,zz,0\n").unwrap();
        fs::write(&a, "1,2\n3,4\n").unwrap();
        match load_recording(&p, &a) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (p, a) = (dir.path().join("p.csv"), dir.path().join("a.csv"));
        fs::write(&p, "id,x,y,z\n1,0,0,0\n2,1,0,0\n").unwrap();
        fs::write(&a, "1,2,3\n3,4\n").unwrap();
        assert!(matches!(load_recording(&p, &a), Err(Error::Dimension(_))));
    }

    #[test]
    fn overlapping_planted_patterns_rejected() {
        let a = PlantedPattern {
            sensor_ids: [1, 2].into(),
            interval: Interval::new(1, 10),
            base_amplitude: 3.0,
            noise_sigma: 0.0,
        };
        let b = PlantedPattern {
            sensor_ids: [2, 3].into(),
            interval: Interval::new(10, 20),
            ..a.clone()
        };
        assert!(matches!(generate_synthetic(&spec_with(vec![a, b])), Err(Error::Spec(_))));
    }

    #[test]
    fn noise_free_pattern_is_perfectly_aligned() {
        let planted = PlantedPattern {
            sensor_ids: [1, 2, 5, 6].into(),
            interval: Interval::new(5, 30),
            base_amplitude: 4.0,
            noise_sigma: 0.0,
        };
        let (rec, truth) = generate_synthetic(&spec_with(vec![planted.clone()])).unwrap();
        assert_eq!(truth, vec![planted.clone()]);
        for &i in &planted.sensor_ids {
            assert_eq!(rec.window(i, planted.interval), rec.window(1, planted.interval));
            for &j in &planted.sensor_ids {
                let s = alignment_pair(&rec, i, j, planted.interval).value().unwrap();
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = spec_with(vec![]);
        let (a, _) = generate_synthetic(&spec).unwrap();
        let (b, _) = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_synthetic(&SynthSpec { seed: 4, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn grid_disc_is_compact() {
        // 5x5 grid, center sensor 13 sits at (2,2).
        let disc = grid_disc(25, 13, 1.0);
        assert_eq!(disc, [8, 12, 13, 14, 18].into());
    }
}
