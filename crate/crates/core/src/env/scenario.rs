use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noma::{LadderOrder, SinrLadder};

/// Log-distance path loss `intercept + slope·log10(d_km)` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            intercept_db: 128.1,
            slope_db: 37.6,
        }
    }
}

impl PathLossModel {
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        self.intercept_db + self.slope_db * (distance_m / 1000.0).log10()
    }
}

fn default_min_distance() -> f64 {
    10.0
}
fn default_shadowing() -> f64 {
    4.0
}
fn default_half_width() -> f64 {
    0.05
}

/// User-facing scenario description; SINR targets in dB, noise density in mW/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub aps: usize,
    pub channels: usize,
    /// Uniform `N`, used for every AP without an override.
    pub channels_per_ap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels_per_ap_overrides: Option<Vec<usize>>,
    /// `β`, the number of APs SIC can separate on one channel.
    pub noma_cap: usize,
    pub sinr_db: Vec<f64>,
    #[serde(default)]
    pub ladder_order: LadderOrder,
    pub cell_radius_m: f64,
    #[serde(default = "default_min_distance")]
    pub min_distance_m: f64,
    /// Per-channel power budget of each AP in watts.
    pub budgets_w: Vec<f64>,
    pub bandwidth_hz: f64,
    pub noise_density_mw_per_hz: f64,
    #[serde(default)]
    pub path_loss: PathLossModel,
    /// Standard deviation of per-(AP, channel) log-normal shadowing; 0 disables it.
    #[serde(default = "default_shadowing")]
    pub shadowing_sigma_db: f64,
    /// SINR weight `w1` per AP; `w2 = 1 - w1`. Defaults to 0.5 everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sinr_weights: Option<Vec<f64>>,
    /// Cap on the half-width of the uniform reward noise.
    #[serde(default = "default_half_width")]
    pub reward_half_width: f64,
}

impl ScenarioConfig {
    /// The four-AP, four-channel deployment used throughout the experiments.
    pub fn paper() -> Self {
        Self {
            aps: 4,
            channels: 4,
            channels_per_ap: 2,
            channels_per_ap_overrides: None,
            noma_cap: 2,
            sinr_db: vec![24.0, 4.77],
            ladder_order: LadderOrder::Strict,
            cell_radius_m: 150.0,
            min_distance_m: default_min_distance(),
            budgets_w: vec![1.0, 1.0, 2.0, 2.0],
            bandwidth_hz: 2.5e6,
            noise_density_mw_per_hz: 4e-18,
            path_loss: PathLossModel::default(),
            shadowing_sigma_db: default_shadowing(),
            sinr_weights: None,
            reward_half_width: default_half_width(),
        }
    }

    /// Same radio parameters with a different `(K, M, N, β)` shape.
    pub fn with_shape(aps: usize, channels: usize, per_ap: usize, cap: usize) -> Self {
        let mut cfg = Self::paper();
        cfg.aps = aps;
        cfg.channels = channels;
        cfg.channels_per_ap = per_ap;
        cfg.noma_cap = cap;
        cfg.budgets_w = (0..aps).map(|k| if k < aps / 2 { 1.0 } else { 2.0 }).collect();
        cfg
    }

    pub fn channels_per_ap(&self) -> Vec<usize> {
        match &self.channels_per_ap_overrides {
            Some(v) => v.clone(),
            None => vec![self.channels_per_ap; self.aps],
        }
    }

    pub fn noise_power_w(&self) -> f64 {
        // mW/Hz · Hz = mW
        self.noise_density_mw_per_hz * self.bandwidth_hz * 1e-3
    }

    pub fn ladder(&self) -> Result<SinrLadder> {
        SinrLadder::from_db(&self.sinr_db, self.ladder_order)
    }

    pub fn sinr_weights(&self) -> Vec<f64> {
        self.sinr_weights
            .clone()
            .unwrap_or_else(|| vec![0.5; self.aps])
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |msg: String| Err(Error::Config(msg));
        if self.aps == 0 {
            return cfg_err("at least one AP is required".into());
        }
        if self.channels == 0 || self.channels > crate::actions::MAX_CHANNELS {
            return cfg_err(format!("channel count {} out of range", self.channels));
        }
        let per_ap = self.channels_per_ap();
        if per_ap.len() != self.aps {
            return cfg_err(format!(
                "{} channels-per-AP overrides for {} APs",
                per_ap.len(),
                self.aps
            ));
        }
        if let Some(n) = per_ap.iter().find(|&&n| n == 0 || n > self.channels) {
            return cfg_err(format!("channels per AP {n} must be in 1..={}", self.channels));
        }
        if self.noma_cap == 0 {
            return cfg_err("noma_cap must be >= 1".into());
        }
        let demand: usize = per_ap.iter().sum();
        if self.noma_cap * self.channels < demand {
            return cfg_err(format!(
                "beta*M = {} cannot host {} channel selections",
                self.noma_cap * self.channels,
                demand
            ));
        }
        if self.sinr_db.len() < self.noma_cap {
            return cfg_err(format!(
                "{} SINR levels cannot separate beta = {} APs",
                self.sinr_db.len(),
                self.noma_cap
            ));
        }
        self.ladder().map_err(|e| Error::Config(e.to_string()))?;
        for (name, v) in [
            ("cell_radius_m", self.cell_radius_m),
            ("min_distance_m", self.min_distance_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_density_mw_per_hz", self.noise_density_mw_per_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg_err(format!("{name} = {v} must be positive"));
            }
        }
        if self.min_distance_m >= self.cell_radius_m {
            return cfg_err("min_distance_m must be below cell_radius_m".into());
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return cfg_err("shadowing_sigma_db must be >= 0".into());
        }
        if !(self.reward_half_width >= 0.0 && self.reward_half_width <= 0.5) {
            return cfg_err("reward_half_width must be in [0, 0.5]".into());
        }
        if self.budgets_w.len() != self.aps {
            return cfg_err(format!(
                "{} budgets for {} APs",
                self.budgets_w.len(),
                self.aps
            ));
        }
        if self.budgets_w.iter().any(|b| !(*b >= 0.0)) {
            return cfg_err("budgets must be >= 0".into());
        }
        let w = self.sinr_weights();
        if w.len() != self.aps || w.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return cfg_err("sinr_weights must hold one value in [0, 1] per AP".into());
        }
        Ok(())
    }
}

/// Ground truth of one deployment. Only the environment and the oracle read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkScenario {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub channels_per_ap: Vec<usize>,
    pub positions_m: Vec<[f64; 2]>,
    pub distances_m: Vec<f64>,
    /// Amplitude gains `h[k][m]`, with `h² = 10^(-loss/10)`.
    pub gains: Vec<Vec<f64>>,
    pub budgets_w: Vec<Vec<f64>>,
    pub ladder: SinrLadder,
    pub noise_power_w: f64,
    pub sinr_weights: Vec<f64>,
    pub power_weights: Vec<f64>,
}

impl NetworkScenario {
    pub fn ap_count(&self) -> usize {
        self.config.aps
    }

    pub fn channel_count(&self) -> usize {
        self.config.channels
    }

    pub fn noma_cap(&self) -> usize {
        self.config.noma_cap
    }

    pub fn level_count(&self) -> usize {
        self.ladder.len()
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.config.bandwidth_hz
    }

    pub fn gain(&self, k: usize, m: usize) -> f64 {
        self.gains[k][m]
    }

    /// Builds a scenario around explicit amplitude gains, bypassing geometry.
    pub fn from_gains(config: ScenarioConfig, gains: Vec<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        if gains.len() != config.aps || gains.iter().any(|row| row.len() != config.channels) {
            return Err(Error::Config("gain matrix must be K x M".into()));
        }
        if gains.iter().flatten().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::Config("all gains must be positive".into()));
        }
        let k = config.aps;
        Ok(Self::assemble(config, 0, vec![[0.0; 2]; k], vec![0.0; k], gains))
    }

    fn assemble(
        config: ScenarioConfig,
        seed: u64,
        positions_m: Vec<[f64; 2]>,
        distances_m: Vec<f64>,
        gains: Vec<Vec<f64>>,
    ) -> Self {
        let sinr_weights = config.sinr_weights();
        let power_weights = sinr_weights.iter().map(|w| 1.0 - w).collect();
        let budgets_w = config
            .budgets_w
            .iter()
            .map(|&b| vec![b; config.channels])
            .collect();
        Self {
            channels_per_ap: config.channels_per_ap(),
            ladder: config.ladder().expect("validated"),
            noise_power_w: config.noise_power_w(),
            positions_m,
            distances_m,
            gains,
            budgets_w,
            sinr_weights,
            power_weights,
            seed,
            config,
        }
    }
}

/// Drops APs uniformly in the cell annulus `[min_distance, radius]` around the
/// MBS and derives per-channel gains from path loss plus optional shadowing.
pub fn generate_scenario(config: &ScenarioConfig, seed: u64) -> Result<NetworkScenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shadowing = Normal::new(0.0, config.shadowing_sigma_db)
        .map_err(|e| Error::Config(format!("shadowing: {e}")))?;

    let (r0, r1) = (config.min_distance_m, config.cell_radius_m);
    let mut positions = Vec::with_capacity(config.aps);
    let mut distances = Vec::with_capacity(config.aps);
    let mut gains = Vec::with_capacity(config.aps);
    for _ in 0..config.aps {
        // Area-uniform radius within the annulus.
        let u: f64 = rng.random();
        let r = (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        positions.push([r * theta.cos(), r * theta.sin()]);
        distances.push(r);

        let loss = config.path_loss.loss_db(r);
        let row = (0..config.channels)
            .map(|_| {
                let shadow = if config.shadowing_sigma_db > 0.0 {
                    shadowing.sample(&mut rng)
                } else {
                    0.0
                };
                10f64.powf(-(loss + shadow) / 20.0)
            })
            .collect();
        gains.push(row);
    }
    Ok(NetworkScenario::assemble(
        config.clone(),
        seed,
        positions,
        distances,
        gains,
    ))
}
