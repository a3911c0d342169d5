//! Python bindings for `stpm-core`.
//!
//! Structured values (configs, synthetic specs, grids, results) cross the
//! boundary as plain dicts and lists using the same field names as the JSON
//! files the `stpm` command reads and writes.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

use stpm_core::discriminant::{self, PairedRecording};
use stpm_core::engine::{self, MinerConfig, PatternGenotype, DISCRIMINANT_T1_FLOOR};
use stpm_core::metrics::{self, Alignment, Interval, ScoreVector, Weights};
use stpm_core::momoo;
use stpm_core::oracle::{enumerate_candidates_with_threads, oracle_front, GridSpec};
use stpm_core::report::{EntryRecord, RunReport, SummaryRecord};
use stpm_core::{dataset, Error, Recording, SensorPosition, SynthSpec};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| err(e.into()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| err(e.into()))
}

fn weights(w: (f64, f64, f64)) -> PyResult<Weights> {
    Weights::new(w.0, w.1, w.2).map_err(err)
}

fn interval(rec: &Recording, t1: usize, t2: usize) -> PyResult<Interval> {
    Interval::within(t1, t2, rec.n_steps()).map_err(err)
}

fn check_sensor(rec: &Recording, id: usize) -> PyResult<()> {
    if (1..=rec.n_sensors()).contains(&id) {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!("sensor {id} outside 1..={}", rec.n_sensors())))
    }
}

/// A multi-sensor recording: sensor positions plus an N × T activity matrix.
/// Sensors and steps are numbered from 1.
#[pyclass(name = "Recording", module = "stpm", frozen)]
struct PyRecording {
    inner: Recording,
}

#[pymethods]
impl PyRecording {
    #[new]
    #[pyo3(signature = (positions, activities, label = ""))]
    fn new(positions: Vec<(f64, f64, f64)>, activities: Vec<Vec<f64>>, label: &str) -> PyResult<Self> {
        let positions = positions.into_iter().map(|(x, y, z)| SensorPosition::new(x, y, z)).collect();
        let inner = Recording::new(positions, activities, label).map_err(err)?;
        Ok(Self { inner })
    }

    /// Reads a positions CSV and an activities CSV.
    #[staticmethod]
    fn load(positions: std::path::PathBuf, activities: std::path::PathBuf) -> PyResult<Self> {
        let inner = dataset::load_recording(&positions, &activities).map_err(err)?;
        Ok(Self { inner })
    }

    /// Reads `positions.csv` and `activities.csv` from a data directory.
    #[staticmethod]
    fn load_dir(dir: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::load_dir(&dir).map_err(err)?,
        })
    }

    fn save(&self, positions: std::path::PathBuf, activities: std::path::PathBuf) -> PyResult<()> {
        self.inner.save(&positions, &activities).map_err(err)
    }

    #[getter]
    fn n_sensors(&self) -> usize {
        self.inner.n_sensors()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps()
    }

    #[getter]
    fn label(&self) -> &str {
        self.inner.label()
    }

    fn position(&self, sensor: usize) -> PyResult<(f64, f64, f64)> {
        check_sensor(&self.inner, sensor)?;
        let p = self.inner.position(sensor);
        Ok((p.x, p.y, p.z))
    }

    fn series(&self, sensor: usize) -> PyResult<Vec<f64>> {
        check_sensor(&self.inner, sensor)?;
        Ok(self.inner.series(sensor).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "Recording(n_sensors={}, n_steps={}, label={:?})",
            self.inner.n_sensors(),
            self.inner.n_steps(),
            self.inner.label()
        )
    }
}

/// Miner thresholds and evolutionary parameters. Keyword arguments use the
/// JSON config keys; unset ones keep their defaults.
#[pyclass(name = "MinerConfig", module = "stpm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMinerConfig {
    inner: MinerConfig,
}

#[pymethods]
impl PyMinerConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let inner: MinerConfig = match kwargs {
            Some(d) => from_py(d.as_any())?,
            None => MinerConfig::default(),
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    /// A copy with the given fields changed.
    #[pyo3(signature = (**kwargs))]
    fn replace(&self, py: Python<'_>, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let merged = to_py(py, &self.inner)?;
        let merged = merged.bind(py).cast::<PyDict>()?.clone();
        if let Some(d) = kwargs {
            merged.update(d.as_mapping())?;
        }
        let inner: MinerConfig = from_py(merged.as_any())?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner)
    }

    fn __getattr__(&self, py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
        let d = to_py(py, &self.inner)?;
        let d = d.bind(py).cast::<PyDict>()?.clone();
        match d.get_item(name)? {
            Some(v) => Ok(v.unbind()),
            None if name == "t1_floor" || name == "min_d" => Ok(py.None()),
            None => Err(pyo3::exceptions::PyAttributeError::new_err(name.to_string())),
        }
    }

    fn __repr__(&self) -> String {
        format!("MinerConfig({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

fn config_or_default(config: Option<&PyMinerConfig>) -> MinerConfig {
    config.map_or_else(MinerConfig::default, |c| c.inner.clone())
}

/// Generates a planted-pattern recording from a spec dict; returns the
/// recording and the planted patterns as dicts.
#[pyfunction]
fn generate_synthetic(py: Python<'_>, spec: &Bound<'_, PyAny>) -> PyResult<(PyRecording, Py<PyAny>)> {
    let spec: SynthSpec = from_py(spec)?;
    let (inner, planted) = dataset::generate_synthetic(&spec).map_err(err)?;
    Ok((PyRecording { inner }, to_py(py, &planted)?))
}

/// Axis-weighted Euclidean distance between two positions.
#[pyfunction]
#[pyo3(signature = (p, q, w = (1.0, 1.0, 1.0)))]
fn weighted_distance(p: (f64, f64, f64), q: (f64, f64, f64), w: (f64, f64, f64)) -> PyResult<f64> {
    let p = SensorPosition::new(p.0, p.1, p.2);
    let q = SensorPosition::new(q.0, q.1, q.2);
    Ok(metrics::weighted_distance(&p, &q, &weights(w)?))
}

/// Alignment of sensors `i` and `j` over `[t1, t2]`, or None when undefined.
#[pyfunction]
fn alignment_pair(rec: &PyRecording, i: usize, j: usize, t1: usize, t2: usize) -> PyResult<Option<f64>> {
    check_sensor(&rec.inner, i)?;
    check_sensor(&rec.inner, j)?;
    let iv = interval(&rec.inner, t1, t2)?;
    Ok(metrics::alignment_pair(&rec.inner, i, j, iv).value())
}

/// Scores the pattern centered on `center` over `[t1, t2]` with the given
/// radius and axis weights; returns length, area, alignment and sensors.
#[pyfunction]
#[pyo3(signature = (rec, center, t1, t2, radius, w = (1.0, 1.0, 1.0)))]
fn score(
    py: Python<'_>,
    rec: &PyRecording,
    center: usize,
    t1: usize,
    t2: usize,
    radius: f64,
    w: (f64, f64, f64),
) -> PyResult<Py<PyAny>> {
    check_sensor(&rec.inner, center)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(PyValueError::new_err("radius must be positive"));
    }
    let w = weights(w)?;
    let x = PatternGenotype::new(center, w, interval(&rec.inner, t1, t2)?, radius);
    let s = metrics::score(&rec.inner, &x);
    let sensors = metrics::ball(&rec.inner, center, &w, radius).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("length", s.length)?;
    d.set_item("area", s.area)?;
    d.set_item("alignment", s.alignment.value())?;
    d.set_item("sensors", sensors)?;
    Ok(d.into_any().unbind())
}

/// Pareto domination of score triples `(length, area, alignment)`, where an
/// alignment of None is undefined.
#[pyfunction]
fn pareto_dominates(a: (usize, usize, Option<f64>), b: (usize, usize, Option<f64>)) -> bool {
    let sv = |(length, area, al): (usize, usize, Option<f64>)| ScoreVector {
        length,
        area,
        alignment: al.map_or(Alignment::UNDEFINED, Alignment::new),
    };
    momoo::pareto_dominates(&sv(a), &sv(b))
}

fn report(py: Python<'_>, entries: Vec<EntryRecord>, summary: SummaryRecord) -> PyResult<Py<PyAny>> {
    let d = PyDict::new(py);
    d.set_item("entries", to_py(py, &entries)?)?;
    d.set_item("summary", to_py(py, &summary)?)?;
    Ok(d.into_any().unbind())
}

/// Mines stable patterns; returns `{"entries": [...], "summary": {...}}`
/// with the fields of the `mine` result file.
#[pyfunction]
#[pyo3(signature = (rec, config = None, threads = 1))]
fn mine(py: Python<'_>, rec: &PyRecording, config: Option<&PyMinerConfig>, threads: usize) -> PyResult<Py<PyAny>> {
    let mut cfg = config_or_default(config);
    cfg.t1_floor = Some(cfg.t1_floor_or(1));
    let outcome = py
        .detach(|| engine::run_with_threads(&cfg, &rec.inner, threads))
        .map_err(err)?;
    let entries: Vec<EntryRecord> = outcome.archive.entries().iter().map(EntryRecord::from_pattern).collect();
    let mut s = SummaryRecord::new("mine", &cfg, entries.len());
    s.evaluations = Some(outcome.evaluations);
    report(py, entries, s)
}

/// Mines patterns whose activity differs between two settings by more than
/// `min_d`.
#[pyfunction]
#[pyo3(signature = (positive, negative, min_d, config = None, threads = 1))]
fn mine_discriminant(
    py: Python<'_>,
    positive: &PyRecording,
    negative: &PyRecording,
    min_d: f64,
    config: Option<&PyMinerConfig>,
    threads: usize,
) -> PyResult<Py<PyAny>> {
    let mut cfg = config_or_default(config);
    cfg.min_d = Some(min_d);
    cfg.validate().map_err(err)?;
    cfg.t1_floor = Some(cfg.t1_floor_or(DISCRIMINANT_T1_FLOOR));
    let pr = PairedRecording::new(positive.inner.clone(), negative.inner.clone()).map_err(err)?;
    let outcome = py
        .detach(|| discriminant::run_discriminant_with_threads(&cfg, &pr, threads))
        .map_err(err)?;
    let entries: Vec<EntryRecord> = outcome
        .archive
        .entries()
        .iter()
        .map(|e| EntryRecord::from_discriminant(e, discriminant::discriminant_score(&pr, &e.genotype)))
        .collect();
    let mut s = SummaryRecord::new("mine-disc", &cfg, entries.len());
    s.evaluations = Some(outcome.evaluations);
    report(py, entries, s)
}

/// Enumerates Euclidean candidates on a grid (the full grid when `grid` is
/// None) and returns their front in the same shape as `mine`.
#[pyfunction]
#[pyo3(signature = (rec, grid = None, config = None, threads = 1))]
fn oracle(
    py: Python<'_>,
    rec: &PyRecording,
    grid: Option<&Bound<'_, PyAny>>,
    config: Option<&PyMinerConfig>,
    threads: usize,
) -> PyResult<Py<PyAny>> {
    let mut cfg = config_or_default(config);
    cfg.t1_floor = Some(cfg.t1_floor_or(1));
    let grid: GridSpec = match grid {
        Some(g) => from_py(g)?,
        None => GridSpec::full(rec.inner.n_steps()),
    };
    let cands = py
        .detach(|| enumerate_candidates_with_threads(&rec.inner, &grid, &cfg, threads))
        .map_err(err)?;
    let front = oracle_front(&cands, cfg.p);
    let entries: Vec<EntryRecord> = front.iter().map(EntryRecord::from_pattern).collect();
    let mut s = SummaryRecord::new("oracle", &cfg, entries.len());
    s.seed = None;
    s.candidates = Some(cands.len());
    report(py, entries, s)
}

/// Parses a JSON-lines result file written by `stpm`.
#[pyfunction]
fn load_result(py: Python<'_>, path: std::path::PathBuf) -> PyResult<Py<PyAny>> {
    let r = RunReport::load(&path).map_err(err)?;
    report(py, r.entries, r.summary)
}

#[pymodule]
fn stpm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRecording>()?;
    m.add_class::<PyMinerConfig>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_distance, m)?)?;
    m.add_function(wrap_pyfunction!(alignment_pair, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_dominates, m)?)?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(mine_discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(load_result, m)?)?;
    Ok(())
}
