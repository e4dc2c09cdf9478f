use serde::{Deserialize, Serialize};

use crate::actions::ChannelSet;
use crate::env::NetworkScenario;
use crate::error::{Error, Result};
use crate::noma::{power_levels, transmit_power};

/// Mean channel rewards `μ(k, m, k_m)`.
///
/// Sole occupancy earns the gain normalised by the best gain in the network;
/// sharing with `k_m - 1` others divides it by `k_m`, and more than `β` APs on
/// a channel earn nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRewardTable {
    aps: usize,
    channels: usize,
    noma_cap: usize,
    /// Indexed `[k][m][k_m - 1]` for `k_m ≤ β`.
    means: Vec<f64>,
    mu_max: f64,
}

impl ChannelRewardTable {
    /// Shared occupancy divides the solo mean.
    pub fn from_solo_means(
        aps: usize,
        channels: usize,
        noma_cap: usize,
        solo: Vec<f64>,
        mu_max: f64,
    ) -> Result<Self> {
        if solo.len() != aps * channels {
            return Err(Error::Data("solo mean table must be K x M".into()));
        }
        let means = solo
            .iter()
            .flat_map(|&mu| (1..=noma_cap).map(move |occ| mu / occ as f64))
            .collect();
        Self::from_means(aps, channels, noma_cap, means, mu_max)
    }

    /// Arbitrary means laid out `[k][m][k_m - 1]`, `k_m = 1..=β`.
    pub fn from_means(aps: usize, channels: usize, noma_cap: usize, means: Vec<f64>, mu_max: f64) -> Result<Self> {
        if noma_cap == 0 || means.len() != aps * channels * noma_cap {
            return Err(Error::Data("mean table must be K x M x β".into()));
        }
        if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Data("channel means must lie in [0, 1]".into()));
        }
        Ok(Self {
            aps,
            channels,
            noma_cap,
            means,
            mu_max,
        })
    }

    /// Copy with every `μ(k, m, k_m)` replaced by `f(k, m, k_m, μ)`.
    pub fn with_means(&self, mut f: impl FnMut(usize, usize, usize, f64) -> f64) -> Result<Self> {
        let mut means = self.means.clone();
        for k in 0..self.aps {
            for m in 0..self.channels {
                for occ in 1..=self.noma_cap {
                    let i = self.idx(k, m, occ);
                    means[i] = f(k, m, occ, means[i]);
                }
            }
        }
        Self::from_means(self.aps, self.channels, self.noma_cap, means, self.mu_max)
    }

    fn idx(&self, k: usize, m: usize, occupancy: usize) -> usize {
        (k * self.channels + m) * self.noma_cap + occupancy - 1
    }

    pub fn aps(&self) -> usize {
        self.aps
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn noma_cap(&self) -> usize {
        self.noma_cap
    }

    /// `μ_M^max`, the largest amplitude gain, broadcast to every AP.
    pub fn mu_max(&self) -> f64 {
        self.mu_max
    }

    pub fn solo(&self, k: usize, m: usize) -> f64 {
        self.mean(k, m, 1)
    }

    pub fn mean(&self, k: usize, m: usize, occupancy: usize) -> f64 {
        if occupancy == 0 || occupancy > self.noma_cap {
            0.0
        } else {
            self.means[self.idx(k, m, occupancy)]
        }
    }

    /// Occupancy of every channel under a joint action.
    pub fn occupancy(&self, profile: &[ChannelSet]) -> Vec<usize> {
        let mut occ = vec![0; self.channels];
        for set in profile {
            for m in set.iter() {
                occ[m] += 1;
            }
        }
        occ
    }

    /// Expected system reward `Σ_k Σ_m a_k(m)·μ(k, m, k_m)` of a joint action.
    pub fn expected_sum(&self, profile: &[ChannelSet]) -> f64 {
        let occ = self.occupancy(profile);
        profile
            .iter()
            .enumerate()
            .map(|(k, set)| set.iter().map(|m| self.mean(k, m, occ[m])).sum::<f64>())
            .sum()
    }
}

pub fn build_channel_rewards(scenario: &NetworkScenario) -> ChannelRewardTable {
    let mu_max = scenario
        .gains
        .iter()
        .flatten()
        .copied()
        .fold(f64::MIN, f64::max);
    let solo = scenario.gains.iter().flatten().map(|h| h / mu_max).collect();
    ChannelRewardTable::from_solo_means(
        scenario.ap_count(),
        scenario.channel_count(),
        scenario.noma_cap(),
        solo,
        mu_max,
    )
    .expect("normalised gains lie in [0, 1]")
}

/// Mean power-level rewards `μ_P(k, m, v_l)` and the feasible level sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRewardTable {
    aps: usize,
    channels: usize,
    levels: usize,
    mu: Vec<f64>,
    transmit_w: Vec<f64>,
    feasible: Vec<Vec<usize>>,
    inv_power_max: f64,
}

impl PowerRewardTable {
    fn idx(&self, k: usize, m: usize, l: usize) -> usize {
        (k * self.channels + m) * self.levels + l
    }

    pub fn aps(&self) -> usize {
        self.aps
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Zero for infeasible levels.
    pub fn mean(&self, k: usize, m: usize, l: usize) -> f64 {
        self.mu[self.idx(k, m, l)]
    }

    /// Transmit power computed from the gain estimate; infinite when the
    /// estimate cannot support transmission.
    pub fn transmit_power(&self, k: usize, m: usize, l: usize) -> f64 {
        self.transmit_w[self.idx(k, m, l)]
    }

    pub fn feasible(&self, k: usize, m: usize) -> &[usize] {
        &self.feasible[k * self.channels + m]
    }

    pub fn is_feasible(&self, k: usize, m: usize, l: usize) -> bool {
        self.feasible(k, m).contains(&l)
    }

    /// `max (1/p)` over feasible triples.
    pub fn inv_power_max(&self) -> f64 {
        self.inv_power_max
    }

    /// Copy with every feasible `μ_P(k, m, v_l)` replaced by `f(k, m, l, μ_P)`.
    pub fn with_means(&self, mut f: impl FnMut(usize, usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for k in 0..self.aps {
            for m in 0..self.channels {
                for &l in self.feasible(k, m) {
                    let i = self.idx(k, m, l);
                    out.mu[i] = f(k, m, l, self.mu[i]);
                }
            }
        }
        out
    }

    /// `(k, m)` pairs that cannot use any level.
    pub fn infeasible_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.aps)
            .flat_map(|k| (0..self.channels).map(move |m| (k, m)))
            .filter(|&(k, m)| self.feasible(k, m).is_empty())
            .collect()
    }

    /// Expected reward on channel `m` for `(ap, level)` choices, zero on a collision.
    pub fn expected_channel_sum(&self, m: usize, choices: &[(usize, usize)], noma_cap: usize) -> f64 {
        if !levels_distinct(choices) || choices.len() > noma_cap {
            return 0.0;
        }
        choices.iter().map(|&(k, l)| self.mean(k, m, l)).sum()
    }
}

pub(crate) fn levels_distinct(choices: &[(usize, usize)]) -> bool {
    choices
        .iter()
        .enumerate()
        .all(|(i, a)| choices[i + 1..].iter().all(|b| a.1 != b.1))
}

/// Builds `μ_P` from the gain estimates each AP will use to set its transmit power.
pub fn build_power_rewards(
    scenario: &NetworkScenario,
    gain_estimates: &[Vec<f64>],
) -> Result<PowerRewardTable> {
    let (aps, channels) = (scenario.ap_count(), scenario.channel_count());
    if gain_estimates.len() != aps || gain_estimates.iter().any(|r| r.len() != channels) {
        return Err(Error::Data("gain estimates must be K x M".into()));
    }
    let set = power_levels(&scenario.ladder, scenario.noise_power_w)?;
    let levels = set.len();

    let mut transmit_w = Vec::with_capacity(aps * channels * levels);
    let mut feasible = Vec::with_capacity(aps * channels);
    let mut inv_power_max = 0.0f64;
    for k in 0..aps {
        for m in 0..channels {
            let budget = scenario.budgets_w[k][m];
            let mut ok = Vec::new();
            for l in 0..levels {
                let p = transmit_power(set.level(l), gain_estimates[k][m]).unwrap_or(f64::INFINITY);
                transmit_w.push(p);
                if p <= budget {
                    ok.push(l);
                    inv_power_max = inv_power_max.max(1.0 / p);
                }
            }
            feasible.push(ok);
        }
    }

    let gamma_max = scenario.ladder.gamma_max();
    let mut mu = vec![0.0; aps * channels * levels];
    for k in 0..aps {
        let (w1, w2) = (scenario.sinr_weights[k], scenario.power_weights[k]);
        for m in 0..channels {
            for &l in &feasible[k * channels + m] {
                let i = (k * channels + m) * levels + l;
                let p = transmit_w[i];
                let sinr_term = scenario.ladder.gamma(l) / gamma_max;
                let power_term = (1.0 / p) / inv_power_max;
                mu[i] = (w1 * sinr_term + w2 * power_term).clamp(0.0, 1.0);
            }
        }
    }

    Ok(PowerRewardTable {
        aps,
        channels,
        levels,
        mu,
        transmit_w,
        feasible,
        inv_power_max,
    })
}
