//! Brute-force optimum, reward gaps, phase-length bounds and regret.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpace, ChannelSet};
use crate::env::{ChannelRewardTable, PowerRewardTable};
use crate::error::{Error, Result};

pub const DEFAULT_PROFILE_CAP: u64 = 10_000_000;

/// Sums within this relative distance of the optimum count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSolution {
    pub profile: Vec<ChannelSet>,
    pub j1: f64,
    /// Best sum strictly below `j1`; `None` when every profile ties.
    pub j2: Option<f64>,
    pub delta: f64,
    pub profiles: u64,
    /// Profiles attaining `j1`.
    pub optimal_profiles: u64,
    /// Occupancy `k*_m` of the optimal profile.
    pub occupancy: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    pub channel: usize,
    pub aps: Vec<usize>,
    /// Level of each AP in `aps`.
    pub levels: Vec<usize>,
    pub j1: f64,
    pub j2: Option<f64>,
    pub delta: f64,
    pub profiles: u64,
}

fn profile_count(sizes: &[usize], cap: u64) -> Result<u64> {
    let total = sizes.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
    if total > cap as u128 {
        return Err(Error::EnumerationCap {
            profiles: total,
            cap,
        });
    }
    Ok(total as u64)
}

/// Mixed-radix decode with the first player most significant, so profile
/// indices follow lexicographic order of the per-player indices.
fn decode(mut index: u64, sizes: &[usize], out: &mut [usize]) {
    for (slot, &s) in out.iter_mut().zip(sizes).rev() {
        *slot = (index % s as u64) as usize;
        index /= s as u64;
    }
}

struct Scan {
    j1: f64,
    best: u64,
    optimal: u64,
    j2: Option<f64>,
    profiles: u64,
}

/// Two exhaustive passes: the maximum, then the first optimal profile and the
/// runner-up. Both reductions are order independent.
fn scan<F>(sizes: &[usize], cap: u64, score: F) -> Result<Scan>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let profiles = profile_count(sizes, cap)?;
    let eval = |i: u64| {
        let mut idx = vec![0; sizes.len()];
        decode(i, sizes, &mut idx);
        score(&idx)
    };
    let j1 = (0..profiles)
        .into_par_iter()
        .map(eval)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * j1.abs().max(1.0);
    let (best, optimal, j2) = (0..profiles)
        .into_par_iter()
        .map(|i| {
            let s = eval(i);
            if s >= j1 - tol {
                (i, 1u64, None)
            } else {
                (u64::MAX, 0, Some(s))
            }
        })
        .reduce(
            || (u64::MAX, 0, None),
            |a, b| {
                let j2 = match (a.2, b.2) {
                    (Some(x), Some(y)) => Some(f64::max(x, y)),
                    (x, y) => x.or(y),
                };
                (a.0.min(b.0), a.1 + b.1, j2)
            },
        );
    Ok(Scan {
        j1,
        best,
        optimal,
        j2,
        profiles,
    })
}

/// Exhaustive search for the channel profile with the highest expected sum.
pub fn solve_channel(table: &ChannelRewardTable, per_ap: &[usize], cap: u64) -> Result<ChannelSolution> {
    if per_ap.len() != table.aps() {
        return Err(Error::Data(format!(
            "{} channel counts for {} APs",
            per_ap.len(),
            table.aps()
        )));
    }
    let spaces = per_ap
        .iter()
        .map(|&n| ActionSpace::new(table.channels(), n))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = spaces.iter().map(|s| s.len()).collect();
    let profile_of = |idx: &[usize]| -> Vec<ChannelSet> {
        idx.iter().zip(&spaces).map(|(&i, s)| s.get(i)).collect()
    };
    let s = scan(&sizes, cap, |idx| table.expected_sum(&profile_of(idx)))?;

    let mut idx = vec![0; sizes.len()];
    decode(s.best, &sizes, &mut idx);
    let profile = profile_of(&idx);
    let demand: usize = per_ap.iter().sum();
    let delta = gap(s.j1, s.j2, 2 * demand, "channel");
    Ok(ChannelSolution {
        occupancy: table.occupancy(&profile),
        profile,
        j1: s.j1,
        j2: s.j2,
        delta,
        profiles: s.profiles,
        optimal_profiles: s.optimal,
    })
}

fn gap(j1: f64, j2: Option<f64>, denominator: usize, what: &str) -> f64 {
    match j2 {
        Some(j2) => (j1 - j2) / denominator as f64,
        None => {
            log::warn!("{what} optimum ties with every profile; gap is 0");
            0.0
        }
    }
}

/// Exhaustive search over the level profiles of the APs on channel `m`.
/// Collided profiles score 0.
pub fn solve_power(
    table: &PowerRewardTable,
    m: usize,
    aps: &[usize],
    noma_cap: usize,
    cap: u64,
) -> Result<PowerSolution> {
    if aps.is_empty() {
        return Err(Error::Data(format!("no AP on channel {m}")));
    }
    let arms: Vec<&[usize]> = aps.iter().map(|&k| table.feasible(k, m)).collect();
    if let Some(pos) = arms.iter().position(|a| a.is_empty()) {
        return Err(Error::Data(format!(
            "AP {} has no feasible level on channel {m}",
            aps[pos]
        )));
    }
    let sizes: Vec<usize> = arms.iter().map(|a| a.len()).collect();
    let choices_of = |idx: &[usize]| -> Vec<(usize, usize)> {
        idx.iter()
            .zip(aps.iter().zip(&arms))
            .map(|(&i, (&k, a))| (k, a[i]))
            .collect()
    };
    let s = scan(&sizes, cap, |idx| {
        table.expected_channel_sum(m, &choices_of(idx), noma_cap)
    })?;
    let mut idx = vec![0; sizes.len()];
    decode(s.best, &sizes, &mut idx);
    Ok(PowerSolution {
        channel: m,
        aps: aps.to_vec(),
        levels: choices_of(&idx).into_iter().map(|(_, l)| l).collect(),
        j1: s.j1,
        j2: s.j2,
        delta: gap(s.j1, s.j2, 2 * aps.len(), "power"),
        profiles: s.profiles,
    })
}

/// APs sharing each channel under a channel profile.
pub fn channel_members(profile: &[ChannelSet], channels: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); channels];
    for (k, set) in profile.iter().enumerate() {
        for m in set.iter() {
            members[m].push(k);
        }
    }
    members
}

/// Solves every occupied channel of a frozen channel profile.
pub fn solve_all_power(
    table: &PowerRewardTable,
    profile: &[ChannelSet],
    noma_cap: usize,
    cap: u64,
) -> Result<Vec<PowerSolution>> {
    channel_members(profile, table.channels())
        .iter()
        .enumerate()
        .filter(|(_, aps)| !aps.is_empty())
        .map(|(m, aps)| solve_power(table, m, aps, noma_cap, cap))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsInput {
    pub aps: usize,
    pub channels: usize,
    pub noma_cap: usize,
    pub levels: usize,
    pub delta: f64,
    pub delta_p: f64,
    pub eta: f64,
    /// Per-epoch error budget `γ_e`, used only for the reference `T_h`.
    pub gamma_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLengths {
    pub t_mu_hat: u64,
    pub t_p0: u64,
    pub t_k_hat: u64,
    pub t_c0: u64,
    /// Cumulative exploration horizon `T_h` behind `t_mu_hat`.
    pub t_h: f64,
}

fn ceil_u64(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil() as u64
    }
}

pub fn phase_length_bounds(p: &BoundsInput) -> Result<PhaseLengths> {
    if p.channels < 2 {
        return Err(Error::Undefined("channel bounds need M >= 2".into()));
    }
    if p.levels < 2 {
        return Err(Error::Undefined("power bound needs L >= 2".into()));
    }
    if !(p.delta > 0.0) || !(p.delta_p > 0.0) {
        return Err(Error::Domain(format!(
            "gaps must be positive (delta = {}, delta_p = {})",
            p.delta, p.delta_p
        )));
    }
    if !(p.eta > 0.0) {
        return Err(Error::Domain("eta must be positive".into()));
    }
    let (k, m, beta, l) = (p.aps as f64, p.channels as f64, p.noma_cap as f64, p.levels as f64);

    let scale = 2.0 * m * ((k - 1.0) / (m - 1.0)).exp() / (m - 1.0).powf(1.0 - beta);
    let raw_mu = scale / (p.delta * p.delta);
    let t_mu_hat = ceil_u64(raw_mu);
    let t_p0 = ceil_u64(2.0 * l * ((beta - 1.0) / (l - 1.0)).exp() / (p.delta_p * p.delta_p));

    let log_term = (2.0 / p.eta).ln();
    let t_k_hat = if log_term <= 0.0 {
        log::warn!("eta = {} leaves no confidence requirement; T_K is 0", p.eta);
        0
    } else {
        ceil_u64(2.08 * log_term * m * m * (2.0 * (m * beta - 1.0) / (m - 1.0)).exp())
    };
    let t_h = raw_mu * (4.0 * k * m * beta / p.gamma_e).ln();
    Ok(PhaseLengths {
        t_mu_hat,
        t_p0,
        t_k_hat,
        t_c0: t_mu_hat.max(t_k_hat),
        t_h,
    })
}

/// Running expected regret against a fixed optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretAccumulator {
    optimum: f64,
    total: f64,
}

impl RegretAccumulator {
    pub fn new(optimum: f64) -> Self {
        Self { optimum, total: 0.0 }
    }

    /// Adds one slot's expected reward and returns the cumulative regret.
    pub fn push(&mut self, achieved: f64) -> f64 {
        self.total += self.optimum - achieved;
        self.total
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Cumulative channel-stage regret of a sequence of joint actions.
pub fn regret_accumulate(
    trace: &[Vec<ChannelSet>],
    table: &ChannelRewardTable,
    solution: &ChannelSolution,
) -> Result<Vec<f64>> {
    if solution.profile.len() != table.aps() {
        return Err(Error::Data("oracle solved a different table".into()));
    }
    let mut acc = RegretAccumulator::new(solution.j1);
    trace
        .iter()
        .map(|profile| {
            if profile.len() != table.aps() {
                return Err(Error::Data(format!(
                    "trace profile has {} actions for {} APs",
                    profile.len(),
                    table.aps()
                )));
            }
            Ok(acc.push(table.expected_sum(profile)))
        })
        .collect()
}

/// Power-stage regret of one slot, summed over the solved channels.
/// `choices[i]` holds the `(ap, level)` pairs played on `solutions[i].channel`.
pub fn power_slot_regret(
    table: &PowerRewardTable,
    solutions: &[PowerSolution],
    choices: &[Vec<(usize, usize)>],
    noma_cap: usize,
) -> Result<f64> {
    if solutions.len() != choices.len() {
        return Err(Error::Data("one choice list per solved channel".into()));
    }
    Ok(solutions
        .iter()
        .zip(choices)
        .map(|(s, c)| s.j1 - table.expected_channel_sum(s.channel, c, noma_cap))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Players weighting the bound: `Σ N_k` for channels, `K` for power.
    pub players: f64,
    pub explore_len: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub t: f64,
    pub exploration: f64,
    pub matching: f64,
    /// Exploitation regret is only known to be bounded by a constant.
    pub exploitation: &'static str,
    pub envelope: f64,
}

pub const EXPLOITATION_BOUND: &str = "constant (unknown A_3)";

/// Closed-form exploration and matching regret bounds at horizon `t`.
pub fn regret_bound(p: &BoundParams, t: f64) -> BoundPoint {
    let epochs = (t / p.c2 + 2.0).ln();
    let exploration = p.players * p.explore_len * epochs;
    let matching = p.players * p.c1 * epochs.powf(2.0 + p.delta);
    BoundPoint {
        t,
        exploration,
        matching,
        exploitation: EXPLOITATION_BOUND,
        envelope: exploration + matching,
    }
}

pub fn regret_bound_curves(p: &BoundParams, horizons: &[f64]) -> Vec<BoundPoint> {
    horizons.iter().map(|&t| regret_bound(p, t)).collect()
}
