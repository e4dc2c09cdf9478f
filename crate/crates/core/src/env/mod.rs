//! Ground truth: deployment, mean-reward tables and the feedback each AP sees.

mod rewards;
mod scenario;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use rewards::{build_channel_rewards, build_power_rewards, ChannelRewardTable, PowerRewardTable};
pub use scenario::{generate_scenario, NetworkScenario, PathLossModel, ScenarioConfig};

use crate::actions::ChannelSet;
use crate::error::{Error, Result};
use crate::noma::{power_levels, rate_for_sinr, PowerLevelSet};

/// Draws from `Uniform[μ - w, μ + w]` with `w = min(μ, 1 - μ, w_max)`.
pub fn sample_reward<R: Rng + ?Sized>(mu: f64, w_max: f64, rng: &mut R) -> f64 {
    let w = mu.min(1.0 - mu).min(w_max);
    if w <= 0.0 {
        return mu;
    }
    rng.random_range(mu - w..=mu + w)
}

/// What an AP learns about one channel it transmitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelObservation {
    pub channel: usize,
    pub occupancy: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFeedback {
    pub observations: Vec<ChannelObservation>,
}

impl ChannelFeedback {
    pub fn total_reward(&self) -> f64 {
        self.observations.iter().map(|o| o.reward).sum()
    }
}

/// Power-stage feedback: a reward sample, or nothing when SIC failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerFeedback {
    Reward(f64),
    Silence,
}

impl PowerFeedback {
    /// Silence reads as a zero reward.
    pub fn value(self) -> f64 {
        match self {
            PowerFeedback::Reward(x) => x,
            PowerFeedback::Silence => 0.0,
        }
    }

    pub fn is_silent(self) -> bool {
        matches!(self, PowerFeedback::Silence)
    }
}

/// One AP transmitting on one channel at one received-power level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transmission {
    pub ap: usize,
    pub channel: usize,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhysicalMetrics {
    pub sum_rate_bps: f64,
    /// Power radiated by every transmitting AP, decodable or not.
    pub total_power_w: f64,
    /// Power of the decodable transmissions only.
    pub decoded_power_w: f64,
    pub energy_efficiency: f64,
}

pub struct Environment {
    scenario: NetworkScenario,
    channel: ChannelRewardTable,
    power: Option<PowerRewardTable>,
    /// `μ_P` under the true gains.
    truth: PowerRewardTable,
    levels: PowerLevelSet,
    rates_bps: Vec<f64>,
}

impl Environment {
    pub fn new(scenario: NetworkScenario) -> Result<Self> {
        let channel = build_channel_rewards(&scenario);
        let levels = power_levels(&scenario.ladder, scenario.noise_power_w)?;
        let rates_bps = scenario
            .ladder
            .gammas()
            .iter()
            .map(|&g| rate_for_sinr(g, scenario.bandwidth_hz()))
            .collect::<Result<_>>()?;
        let truth = build_power_rewards(&scenario, &scenario.gains)?;
        Ok(Self {
            scenario,
            channel,
            power: None,
            truth,
            levels,
            rates_bps,
        })
    }

    pub fn scenario(&self) -> &NetworkScenario {
        &self.scenario
    }

    pub fn channel_rewards(&self) -> &ChannelRewardTable {
        &self.channel
    }

    pub fn power_levels(&self) -> &PowerLevelSet {
        &self.levels
    }

    /// Installs the power-reward table the power stage samples from.
    pub fn set_power_rewards(&mut self, table: PowerRewardTable) {
        self.power = Some(table);
    }

    pub fn power_rewards(&self) -> Result<&PowerRewardTable> {
        self.power
            .as_ref()
            .ok_or_else(|| Error::Contract("power rewards not installed".into()))
    }

    pub fn true_power_rewards(&self) -> &PowerRewardTable {
        &self.truth
    }

    pub fn w_max(&self) -> f64 {
        self.scenario.config.reward_half_width
    }

    /// One channel-stage slot. Actions may use fewer than `N_k` channels, as
    /// exploration samples a single channel.
    pub fn step_channel<R: Rng + ?Sized>(
        &self,
        actions: &[ChannelSet],
        rng: &mut R,
    ) -> Result<Vec<ChannelFeedback>> {
        self.check_profile(actions)?;
        let occ = self.channel.occupancy(actions);
        Ok(actions
            .iter()
            .enumerate()
            .map(|(k, set)| ChannelFeedback {
                observations: set
                    .iter()
                    .map(|m| ChannelObservation {
                        channel: m,
                        occupancy: occ[m],
                        reward: sample_reward(self.channel.mean(k, m, occ[m]), self.w_max(), rng),
                    })
                    .collect(),
            })
            .collect())
    }

    fn check_profile(&self, actions: &[ChannelSet]) -> Result<()> {
        if actions.len() != self.scenario.ap_count() {
            return Err(Error::Contract(format!(
                "{} actions for {} APs",
                actions.len(),
                self.scenario.ap_count()
            )));
        }
        for (k, set) in actions.iter().enumerate() {
            let n = self.scenario.channels_per_ap[k];
            if set.is_empty() || set.len() > n || set.span() > self.scenario.channel_count() {
                return Err(Error::Contract(format!(
                    "AP {k} action {set} must pick 1..={n} channels below {}",
                    self.scenario.channel_count()
                )));
            }
        }
        Ok(())
    }

    pub fn expected_channel_sum(&self, actions: &[ChannelSet]) -> f64 {
        self.channel.expected_sum(actions)
    }

    /// One power-stage slot on channel `m`; `choices` pairs each AP on `m`
    /// with its level.
    pub fn step_power<R: Rng + ?Sized>(
        &self,
        m: usize,
        choices: &[(usize, usize)],
        rng: &mut R,
    ) -> Result<Vec<PowerFeedback>> {
        let table = self.power_rewards()?;
        for &(k, l) in choices {
            if !table.is_feasible(k, m, l) {
                return Err(Error::Contract(format!(
                    "level {l} is not feasible for AP {k} on channel {m}"
                )));
            }
        }
        let decodable = self.decodable(choices);
        Ok(choices
            .iter()
            .map(|&(k, l)| {
                if decodable {
                    PowerFeedback::Reward(sample_reward(table.mean(k, m, l), self.w_max(), rng))
                } else {
                    PowerFeedback::Silence
                }
            })
            .collect())
    }

    /// At most `β` APs, all at distinct levels.
    pub fn decodable(&self, choices: &[(usize, usize)]) -> bool {
        choices.len() <= self.scenario.noma_cap() && rewards::levels_distinct(choices)
    }

    /// Transmit power an AP radiates to land at `level` given the true gain.
    pub fn true_transmit_power(&self, k: usize, m: usize, level: usize) -> f64 {
        let h = self.scenario.gain(k, m);
        self.levels.level(level) / (h * h)
    }

    pub fn rate_bps(&self, level: usize) -> f64 {
        self.rates_bps[level]
    }

    /// Rate, power and energy efficiency of a full allocation.
    ///
    /// A channel is decodable when at most `β` APs use it at distinct levels.
    pub fn physical_metrics(&self, allocation: &[Transmission]) -> PhysicalMetrics {
        let channels = self.scenario.channel_count();
        let mut per_channel: Vec<Vec<(usize, usize)>> = vec![Vec::new(); channels];
        for t in allocation {
            per_channel[t.channel].push((t.ap, t.level));
        }
        let mut out = PhysicalMetrics::default();
        for (m, choices) in per_channel.iter().enumerate() {
            let decodable = self.decodable(choices);
            for &(k, l) in choices {
                let p = self.true_transmit_power(k, m, l);
                out.total_power_w += p;
                if decodable {
                    out.decoded_power_w += p;
                    out.sum_rate_bps += self.rates_bps[l];
                }
            }
        }
        out.energy_efficiency = if out.total_power_w > 0.0 {
            out.sum_rate_bps / out.total_power_w
        } else {
            0.0
        };
        out
    }
}
