//! Python bindings: configs, deployments, the exact oracle, seeded runs and
//! the regret fit. Structured results come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use ::noma_son::env::{generate_scenario, Environment, NetworkScenario};
use ::noma_son::harness::fit::Band;
use ::noma_son::harness::run::{exploration_lengths, oracle_report, RegretPoint};
use ::noma_son::harness::{self as h, Method};
use ::noma_son::noma::{self, LadderOrder, SinrLadder};
use ::noma_son::schedule::ExploreMode;
use ::noma_son::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn curve(points: &[RegretPoint]) -> Vec<(u64, f64)> {
    points.iter().map(|p| (p.t, p.regret)).collect()
}

/// Experiment configuration. Defaults to the four-AP deployment.
#[pyclass(name = "RunConfig", module = "noma_son", skip_from_py_object)]
#[derive(Clone)]
struct PyRunConfig(h::RunConfig);

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let cfg = match json {
            Some(text) => serde_json::from_str::<h::RunConfig>(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => h::RunConfig::paper(),
        };
        cfg.validate().map_err(py_err)?;
        Ok(Self(cfg))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Git-style SHA-256 of the pretty-printed config, as written to `config.sha256`.
    fn hash(&self) -> PyResult<String> {
        let mut text = self.to_json()?;
        text.push('\n');
        Ok(h::content_hash(text.as_bytes()))
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.0.seeds.clone()
    }

    #[setter]
    fn set_seeds(&mut self, seeds: Vec<u64>) -> PyResult<()> {
        if seeds.is_empty() {
            return Err(PyValueError::new_err("at least one seed is required"));
        }
        self.0.seeds = seeds;
        Ok(())
    }

    #[getter]
    fn method(&self) -> &'static str {
        match self.0.method {
            Method::Proposed => "proposed",
            Method::Ucb => "ucb",
        }
    }

    #[setter]
    fn set_method(&mut self, method: &str) -> PyResult<()> {
        self.0.method = method.parse().map_err(py_err)?;
        Ok(())
    }

    #[getter]
    fn explore_mode(&self) -> &'static str {
        match self.0.algorithm.explore_mode {
            ExploreMode::Constant => "constant",
            ExploreMode::Decreasing => "decreasing",
        }
    }

    #[setter]
    fn set_explore_mode(&mut self, mode: &str) -> PyResult<()> {
        self.0.algorithm.explore_mode = mode.parse().map_err(py_err)?;
        Ok(())
    }

    /// `(channel, power, ucb)` horizons in slots.
    #[getter]
    fn horizons(&self) -> (u64, u64, u64) {
        let hz = &self.0.horizons;
        (hz.channel, hz.power, hz.ucb)
    }

    #[setter]
    fn set_horizons(&mut self, horizons: (u64, u64, u64)) -> PyResult<()> {
        let (channel, power, ucb) = horizons;
        if channel == 0 || power == 0 || ucb == 0 {
            return Err(PyValueError::new_err("horizons must be positive"));
        }
        self.0.horizons = h::Horizons { channel, power, ucb };
        Ok(())
    }

    #[pyo3(signature = (channel = None, power = None))]
    fn set_explore_lengths(&mut self, channel: Option<u64>, power: Option<u64>) -> PyResult<()> {
        if channel == Some(0) || power == Some(0) {
            return Err(PyValueError::new_err("exploration lengths must be positive"));
        }
        self.0.algorithm.channel_explore_len = channel;
        self.0.algorithm.power_explore_len = power;
        Ok(())
    }

    #[getter]
    fn trace_stride(&self) -> u64 {
        self.0.output.trace_stride
    }

    #[setter]
    fn set_trace_stride(&mut self, stride: u64) -> PyResult<()> {
        if stride == 0 {
            return Err(PyValueError::new_err("trace stride must be positive"));
        }
        self.0.output.trace_stride = stride;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(method={:?}, explore_mode={:?}, seeds={:?})",
            self.method(),
            self.explore_mode(),
            self.0.seeds
        )
    }
}

/// One drawn deployment: AP positions, gains and the SINR ladder.
#[pyclass(name = "Scenario", module = "noma_son", frozen)]
struct PyScenario(NetworkScenario);

#[pymethods]
impl PyScenario {
    #[staticmethod]
    #[pyo3(signature = (config, seed = 0))]
    fn generate(config: &PyRunConfig, seed: u64) -> PyResult<Self> {
        generate_scenario(&config.0.scenario, seed).map(Self).map_err(py_err)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn aps(&self) -> usize {
        self.0.ap_count()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channel_count()
    }

    #[getter]
    fn channels_per_ap(&self) -> Vec<usize> {
        self.0.channels_per_ap.clone()
    }

    #[getter]
    fn positions_m(&self) -> Vec<[f64; 2]> {
        self.0.positions_m.clone()
    }

    /// Amplitude gains `h[k][m]`.
    #[getter]
    fn gains(&self) -> Vec<Vec<f64>> {
        self.0.gains.clone()
    }

    #[getter]
    fn noise_power_w(&self) -> f64 {
        self.0.noise_power_w
    }

    /// Linear SINR targets, strongest first.
    #[getter]
    fn sinr_targets(&self) -> Vec<f64> {
        self.0.ladder.gammas().to_vec()
    }

    /// Mean channel reward of AP `k` on channel `m` shared by `occupancy` APs.
    fn channel_mean(&self, k: usize, m: usize, occupancy: usize) -> PyResult<f64> {
        if k >= self.aps() || m >= self.channels() || occupancy == 0 {
            return Err(PyValueError::new_err("AP, channel or occupancy out of range"));
        }
        let env = Environment::new(self.0.clone()).map_err(py_err)?;
        Ok(env.channel_rewards().mean(k, m, occupancy))
    }

    /// Exact optima and exploration lengths under `config`.
    fn oracle<'py>(&self, py: Python<'py>, config: &PyRunConfig) -> PyResult<Bound<'py, PyAny>> {
        let env = Environment::new(self.0.clone()).map_err(py_err)?;
        let report = oracle_report(&self.0, &env, &config.0).map_err(py_err)?;
        let (channel, power) = exploration_lengths(&config.0, &report);
        let out = to_py(py, &report)?;
        out.set_item("channel_explore_len", channel)?;
        out.set_item("power_explore_len", power)?;
        Ok(out)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Scenario(seed={}, aps={}, channels={})", self.0.seed, self.aps(), self.channels())
    }
}

/// Result of one seeded run.
#[pyclass(name = "SeedOutcome", module = "noma_son", frozen)]
struct PySeedOutcome(h::SeedOutcome);

#[pymethods]
impl PySeedOutcome {
    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn method(&self) -> &'static str {
        match self.0.method {
            Method::Proposed => "proposed",
            Method::Ucb => "ucb",
        }
    }

    /// Channel-stage summary, or `None` for the baseline.
    #[getter]
    fn channel<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.channel)
    }

    #[getter]
    fn power<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.power)
    }

    #[getter]
    fn ucb<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.ucb)
    }

    /// Converged `sum_rate_bps`, `total_power_w` and `energy_efficiency`.
    #[getter]
    fn converged<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.converged())
    }

    /// `(t, regret)` of the channel stage, or of the baseline.
    #[getter]
    fn channel_regret(&self) -> Vec<(u64, f64)> {
        match (&self.0.channel, &self.0.ucb) {
            (Some(c), _) => curve(&c.regret),
            (None, Some(u)) => curve(&u.regret),
            _ => Vec::new(),
        }
    }

    #[getter]
    fn power_regret(&self) -> Vec<(u64, f64)> {
        self.0.power.as_ref().map(|p| curve(&p.regret)).unwrap_or_default()
    }

    #[getter]
    fn scenario(&self) -> PyScenario {
        PyScenario(self.0.scenario.clone())
    }

    /// Writes the seed's files under `dir/seed-<seed>/`.
    fn write(&self, dir: std::path::PathBuf, config: &PyRunConfig) -> PyResult<()> {
        std::fs::create_dir_all(&dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        h::write_run(&dir, &config.0, std::slice::from_ref(&self.0)).map_err(py_err)?;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("SeedOutcome(seed={}, method={:?})", self.0.seed, self.method())
    }
}

/// Runs one seed. The GIL is released while it runs.
#[pyfunction]
fn simulate(py: Python<'_>, config: &PyRunConfig, seed: u64) -> PyResult<PySeedOutcome> {
    let cfg = config.0.clone();
    py.detach(move || h::simulate_seed(&cfg, seed))
        .map(PySeedOutcome)
        .map_err(py_err)
}

/// Runs every seed of the config in parallel; fails on the first failing seed.
#[pyfunction]
fn simulate_all(py: Python<'_>, config: &PyRunConfig) -> PyResult<Vec<PySeedOutcome>> {
    let cfg = config.0.clone();
    let runs = py.detach(move || h::simulate(&cfg)).map_err(py_err)?;
    Ok(runs.into_iter().map(PySeedOutcome).collect())
}

/// Least-squares `a` of `regret ≈ a·ln(t)²` over points with `t > t_start`.
#[pyfunction]
#[pyo3(signature = (points, t_start = 0.0, band = None))]
fn fit_log_square<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64)>,
    t_start: f64,
    band: Option<(f64, f64)>,
) -> PyResult<Bound<'py, PyAny>> {
    let band = band.map(|(lo, hi)| Band { lo, hi });
    let fit = h::fit_log_square(&points, t_start, band).map_err(py_err)?;
    to_py(py, &fit)
}

/// Shannon rate in bit/s for a linear SINR.
#[pyfunction]
fn rate_for_sinr(gamma: f64, bandwidth_hz: f64) -> PyResult<f64> {
    noma::rate_for_sinr(gamma, bandwidth_hz).map_err(py_err)
}

#[pyfunction]
fn db_to_linear(db: f64) -> f64 {
    noma::db_to_linear(db)
}

/// Received power levels in watts for SINR targets in dB, strongest first.
#[pyfunction]
fn power_levels(sinr_db: Vec<f64>, noise_power_w: f64) -> PyResult<Vec<f64>> {
    let ladder = SinrLadder::from_db(&sinr_db, LadderOrder::default()).map_err(py_err)?;
    let set = noma::power_levels(&ladder, noise_power_w).map_err(py_err)?;
    Ok(set.levels().to_vec())
}

/// SIC stability report for SINR targets in dB.
#[pyfunction]
fn check_sic_stability<'py>(py: Python<'py>, sinr_db: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    let ladder = SinrLadder::from_db(&sinr_db, LadderOrder::default()).map_err(py_err)?;
    to_py(py, &noma::check_sic_stability(&ladder))
}

#[pyfunction]
fn content_hash(data: &[u8]) -> String {
    h::content_hash(data)
}

#[pymodule]
#[pyo3(name = "noma_son")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySeedOutcome>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_all, m)?)?;
    m.add_function(wrap_pyfunction!(fit_log_square, m)?)?;
    m.add_function(wrap_pyfunction!(rate_for_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(power_levels, m)?)?;
    m.add_function(wrap_pyfunction!(check_sic_stability, m)?)?;
    m.add_function(wrap_pyfunction!(content_hash, m)?)?;
    Ok(())
}
