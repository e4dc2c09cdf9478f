use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::ScenarioConfig;
use crate::error::{Error, Result};
use crate::oracle::DEFAULT_PROFILE_CAP;
use crate::schedule::ExploreMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Proposed,
    Ucb,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Method::Proposed),
            "ucb" => Ok(Method::Ucb),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Algorithm constants shared by the channel and power stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub epsilon: f64,
    pub c1: f64,
    pub c2: u64,
    pub delta: f64,
    /// Applies to the channel stage; power exploration always uses the constant length.
    pub explore_mode: ExploreMode,
    /// Fixed channel exploration length; derived from the bounds when absent.
    pub channel_explore_len: Option<u64>,
    /// Upper limit applied to the derived channel exploration length.
    pub channel_explore_cap: u64,
    pub power_explore_len: Option<u64>,
    pub power_explore_cap: u64,
    /// Confidence parameter of the AP-count estimate.
    pub eta: f64,
    /// Per-epoch error budget, reported through `T_h` only.
    pub gamma_e: f64,
    /// `c = c_multiplier · K̂·N` in the channel game and `c_multiplier · K_m` in the power game.
    pub c_multiplier: f64,
    pub profile_cap: u64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            epsilon: 5e-5,
            c1: 3000.0,
            c2: 5000,
            delta: 0.0,
            explore_mode: ExploreMode::Constant,
            channel_explore_len: None,
            channel_explore_cap: 120_000,
            power_explore_len: None,
            power_explore_cap: 7_000,
            eta: 0.05,
            gamma_e: 0.05,
            c_multiplier: 1.0,
            profile_cap: DEFAULT_PROFILE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UcbConfig {
    pub alpha: f64,
}

impl Default for UcbConfig {
    fn default() -> Self {
        Self { alpha: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Horizons {
    pub channel: u64,
    pub power: u64,
    /// Slots played by the baseline.
    pub ucb: u64,
}

impl Default for Horizons {
    fn default() -> Self {
        Self {
            channel: 2_000_000,
            power: 1_000_000,
            ucb: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Every `trace_stride`-th slot is written to the trace and regret curves.
    pub trace_stride: u64,
    /// Slots averaged into one metrics row.
    pub metrics_block: u64,
    /// Reporting only: seconds per slot.
    pub slot_duration_s: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            trace_stride: 100,
            metrics_block: 1000,
            slot_duration_s: 62.5e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub ucb: UcbConfig,
    #[serde(default)]
    pub horizons: Horizons,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Deployment seed shared by every run; each run draws its own when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_seed: Option<u64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl RunConfig {
    pub fn paper() -> Self {
        Self {
            scenario: ScenarioConfig::paper(),
            algorithm: AlgorithmConfig::default(),
            ucb: UcbConfig::default(),
            horizons: Horizons::default(),
            seeds: default_seeds(),
            scenario_seed: None,
            method: Method::Proposed,
            output: OutputConfig::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let a = &self.algorithm;
        if !(0.0..1.0).contains(&a.epsilon) {
            return Err(Error::Config("epsilon must be in [0, 1)".into()));
        }
        if !(a.c1 > 0.0) || a.c2 == 0 || !(a.delta >= 0.0) || !(a.c_multiplier > 0.0) {
            return Err(Error::Config("c1, c2, c_multiplier must be positive and delta >= 0".into()));
        }
        if a.channel_explore_len == Some(0) || a.power_explore_len == Some(0) {
            return Err(Error::Config("exploration lengths must be positive".into()));
        }
        if a.channel_explore_cap == 0 || a.power_explore_cap == 0 {
            return Err(Error::Config("exploration caps must be positive".into()));
        }
        if !(a.eta > 0.0) || !(a.gamma_e > 0.0) {
            return Err(Error::Config("eta and gamma_e must be positive".into()));
        }
        if !(self.ucb.alpha > 0.0) {
            return Err(Error::Config("ucb alpha must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let h = &self.horizons;
        if h.channel == 0 || h.power == 0 || h.ucb == 0 {
            return Err(Error::Config("horizons must be positive".into()));
        }
        let o = &self.output;
        if o.trace_stride == 0 || o.metrics_block == 0 || !(o.slot_duration_s > 0.0) {
            return Err(Error::Config("output stride, block and slot duration must be positive".into()));
        }
        Ok(())
    }
}

/// Parses `A..B` (exclusive) or `A..=B` into a seed list.
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("seed range {s:?} must look like A..B or A..=B"));
    let (lo, hi, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        return Err(bad());
    };
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    let seeds: Vec<u64> = if inclusive { (lo..=hi).collect() } else { (lo..hi).collect() };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}
