use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Method, RunConfig};
use crate::actions::ChannelSet;
use crate::channel_agent::{ApChannelAgent, ChannelAgentParams, Phase};
use crate::env::{build_power_rewards, generate_scenario, Environment, NetworkScenario, PhysicalMetrics, Transmission};
use crate::error::{Error, Result};
use crate::oracle::{
    channel_members, phase_length_bounds, solve_all_power, solve_channel, BoundsInput, ChannelSolution, PhaseLengths,
    PowerSolution,
};
use crate::power_agent::{ApPowerAgent, PowerAgentParams};
use crate::schedule::{ExploreMode, ScheduleParams};
use crate::ucb::{ucb_step, CompositeArm, UcbAgent};

const CHANNEL_STREAM: u64 = 1;
const POWER_STREAM: u64 = 2;
const UCB_STREAM: u64 = 3;

/// Oracle view of one deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub channel: ChannelSolution,
    /// Power optimum on the optimal channel profile under the true gains.
    pub power: Vec<PowerSolution>,
    /// Smallest per-channel power gap.
    pub delta_p: f64,
    pub bounds: Option<PhaseLengths>,
    pub bounds_error: Option<String>,
}

pub fn oracle_report(scenario: &NetworkScenario, env: &Environment, cfg: &RunConfig) -> Result<OracleReport> {
    let cap = cfg.algorithm.profile_cap;
    let channel = solve_channel(env.channel_rewards(), &scenario.channels_per_ap, cap)?;
    let power = solve_all_power(env.true_power_rewards(), &channel.profile, scenario.noma_cap(), cap)?;
    let delta_p = power.iter().map(|p| p.delta).fold(f64::INFINITY, f64::min);
    let input = BoundsInput {
        aps: scenario.ap_count(),
        channels: scenario.channel_count(),
        noma_cap: scenario.noma_cap(),
        levels: scenario.level_count(),
        delta: channel.delta,
        delta_p,
        eta: cfg.algorithm.eta,
        gamma_e: cfg.algorithm.gamma_e,
    };
    let (bounds, bounds_error) = match phase_length_bounds(&input) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(OracleReport {
        channel,
        power,
        delta_p,
        bounds,
        bounds_error,
    })
}

/// Exploration lengths actually used: explicit values, else the bounds capped.
pub fn exploration_lengths(cfg: &RunConfig, oracle: &OracleReport) -> (u64, u64) {
    let a = &cfg.algorithm;
    let channel = a.channel_explore_len.unwrap_or_else(|| match &oracle.bounds {
        Some(b) => b.t_c0.clamp(1, a.channel_explore_cap),
        None => a.channel_explore_cap,
    });
    let power = a.power_explore_len.unwrap_or_else(|| match &oracle.bounds {
        Some(b) => b.t_p0.clamp(1, a.power_explore_cap),
        None => a.power_explore_cap,
    });
    (channel, power)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u64,
    pub stage: &'static str,
    pub epoch: u32,
    pub phase: &'static str,
    /// Channel subsets per AP, `|`-separated.
    pub actions: String,
    /// `ap:channel:level` triples, `|`-separated; empty in the channel stage.
    pub levels: String,
    pub expected_reward: f64,
    /// Expected reward of each AP, `|`-separated.
    pub ap_rewards: String,
    pub occupancy: String,
    pub sum_rate_bps: Option<f64>,
    pub total_power_w: Option<f64>,
    pub energy_efficiency: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    pub t: u64,
    pub sum_rate_bps: f64,
    pub total_power_w: f64,
    pub energy_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretPoint {
    pub t: u64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelEpoch {
    pub epoch: u32,
    /// First exploitation slot.
    pub exploit_start: u64,
    pub profile: Vec<ChannelSet>,
    pub optimal: bool,
    pub k_hat: Vec<usize>,
    /// Relative error of the estimates used in this epoch.
    pub estimation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEpoch {
    pub epoch: u32,
    pub exploit_start: u64,
    /// `(ap, channel, level)` of every participant.
    pub levels: Vec<Transmission>,
    pub optimal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRate {
    pub epoch: u32,
    pub phase: &'static str,
    pub slots: u64,
    pub mean_rate_bps: f64,
}

/// Regret split by the phase the slot was played in.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhaseRegret {
    pub explore: f64,
    pub matching: f64,
    pub exploit: f64,
}

impl PhaseRegret {
    fn add(&mut self, phase: Phase, r: f64) {
        match phase {
            Phase::Explore => self.explore += r,
            Phase::Matching => self.matching += r,
            Phase::Exploit => self.exploit += r,
        }
    }
}

/// First exploitation slot after which every epoch exploited the optimum.
fn convergence_slot(epochs: impl DoubleEndedIterator<Item = (u64, bool)>) -> Option<u64> {
    let mut slot = None;
    for (start, optimal) in epochs.rev() {
        if !optimal {
            break;
        }
        slot = Some(start);
    }
    slot
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Converged {
    pub from_slot: u64,
    pub sum_rate_bps: f64,
    pub total_power_w: f64,
    /// Mean rate over mean power.
    pub energy_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStage {
    pub explore_len: u64,
    pub horizon: u64,
    pub first_epoch_end: u64,
    pub epochs: Vec<ChannelEpoch>,
    pub final_profile: Vec<ChannelSet>,
    pub final_optimal: bool,
    /// `J1` minus the expected sum of the final profile.
    pub final_gap: f64,
    pub convergence_slot: Option<u64>,
    pub convergence_seconds: Option<f64>,
    pub k_hat: Vec<usize>,
    pub total_regret: f64,
    pub phase_regret: PhaseRegret,
    #[serde(skip)]
    pub regret: Vec<RegretPoint>,
    /// Relative error of the final estimates.
    pub estimation_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerStage {
    pub explore_len: u64,
    pub horizon: u64,
    pub first_epoch_end: u64,
    /// `(ap, channel)` pairs with no feasible level under their gain estimate.
    pub abstained: Vec<(usize, usize)>,
    pub solutions: Vec<PowerSolution>,
    pub epochs: Vec<PowerEpoch>,
    pub final_levels: Vec<Transmission>,
    pub final_optimal: bool,
    pub final_gap: f64,
    pub convergence_slot: Option<u64>,
    pub convergence_seconds: Option<f64>,
    pub total_regret: f64,
    pub phase_regret: PhaseRegret,
    pub phase_rates: Vec<PhaseRate>,
    pub converged: Converged,
    #[serde(skip)]
    pub regret: Vec<RegretPoint>,
    #[serde(skip)]
    pub metrics: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UcbStage {
    pub horizon: u64,
    pub arms: usize,
    pub most_played: Vec<CompositeArm>,
    pub total_channel_regret: f64,
    pub converged: Converged,
    #[serde(skip)]
    pub regret: Vec<RegretPoint>,
    #[serde(skip)]
    pub metrics: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub scenario_seed: u64,
    pub method: Method,
    pub channel: Option<ChannelStage>,
    pub power: Option<PowerStage>,
    pub ucb: Option<UcbStage>,
    #[serde(skip)]
    pub oracle: OracleReport,
    #[serde(skip)]
    pub scenario: NetworkScenario,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl SeedOutcome {
    /// Converged physical metrics of whichever method ran.
    pub fn converged(&self) -> Option<Converged> {
        match self.method {
            Method::Proposed => self.power.as_ref().map(|p| p.converged),
            Method::Ucb => self.ucb.as_ref().map(|u| u.converged),
        }
    }
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join("|")
}

fn levels_field(tx: &[Transmission]) -> String {
    join(tx.iter().map(|t| format!("{}:{}:{}", t.ap, t.channel, t.level)))
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Running sums for block-averaged metrics and the converged tail.
struct MetricsSink {
    block: u64,
    tail_from: u64,
    acc: (f64, f64, u64),
    tail: (f64, f64, u64),
    rows: Vec<MetricsRow>,
}

impl MetricsSink {
    fn new(block: u64, horizon: u64) -> Self {
        Self {
            block,
            tail_from: horizon - horizon / 10,
            acc: (0.0, 0.0, 0),
            tail: (0.0, 0.0, 0),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, t: u64, m: &PhysicalMetrics) {
        self.acc.0 += m.sum_rate_bps;
        self.acc.1 += m.total_power_w;
        self.acc.2 += 1;
        if t >= self.tail_from {
            self.tail.0 += m.sum_rate_bps;
            self.tail.1 += m.total_power_w;
            self.tail.2 += 1;
        }
        if self.acc.2 == self.block {
            self.flush(t + 1);
        }
    }

    fn flush(&mut self, t: u64) {
        if self.acc.2 == 0 {
            return;
        }
        let n = self.acc.2 as f64;
        let (rate, power) = (self.acc.0 / n, self.acc.1 / n);
        self.rows.push(MetricsRow {
            t,
            sum_rate_bps: rate,
            total_power_w: power,
            energy_efficiency: if power > 0.0 { rate / power } else { 0.0 },
        });
        self.acc = (0.0, 0.0, 0);
    }

    fn finish(mut self, horizon: u64) -> (Vec<MetricsRow>, Converged) {
        self.flush(horizon);
        let n = self.tail.2.max(1) as f64;
        let (rate, power) = (self.tail.0 / n, self.tail.1 / n);
        let converged = Converged {
            from_slot: self.tail_from,
            sum_rate_bps: rate,
            total_power_w: power,
            energy_efficiency: if power > 0.0 { rate / power } else { 0.0 },
        };
        (self.rows, converged)
    }
}

fn schedule(cfg: &RunConfig, explore_len: u64, mode: ExploreMode) -> ScheduleParams {
    ScheduleParams {
        explore_len,
        c1: cfg.algorithm.c1,
        c2: cfg.algorithm.c2,
        delta: cfg.algorithm.delta,
        mode,
    }
}

/// Relative Frobenius error `‖μ̂ - μ‖ / ‖μ‖` over every `(k, m, k_m ≤ β)`.
pub fn estimation_error(agents: &[ApChannelAgent], env: &Environment) -> f64 {
    let table = env.channel_rewards();
    let (mut err, mut norm) = (0.0, 0.0);
    for (k, agent) in agents.iter().enumerate() {
        for m in 0..table.channels() {
            for occ in 1..=table.noma_cap() {
                let mu = table.mean(k, m, occ);
                err += (agent.mu_hat(m, occ) - mu).powi(2);
                norm += mu * mu;
            }
        }
    }
    (err / norm).sqrt()
}

fn channel_ap_rewards(env: &Environment, actions: &[ChannelSet]) -> Vec<f64> {
    let table = env.channel_rewards();
    let occ = table.occupancy(actions);
    actions
        .iter()
        .enumerate()
        .map(|(k, set)| set.iter().map(|m| table.mean(k, m, occ[m])).sum())
        .collect()
}

fn channel_stage(
    cfg: &RunConfig,
    env: &Environment,
    oracle: &OracleReport,
    explore_len: u64,
    seed: u64,
    trace: &mut Vec<TraceRow>,
) -> Result<(ChannelStage, Vec<ApChannelAgent>)> {
    let sc = env.scenario();
    let params = ChannelAgentParams {
        schedule: schedule(cfg, explore_len, cfg.algorithm.explore_mode),
        epsilon: cfg.algorithm.epsilon,
        c_multiplier: cfg.algorithm.c_multiplier,
        noma_cap: sc.noma_cap(),
        mu_max: env.channel_rewards().mu_max(),
    };
    let mut agents = sc
        .channels_per_ap
        .iter()
        .map(|&n| ApChannelAgent::new(sc.channel_count(), n, params))
        .collect::<Result<Vec<_>>>()?;
    let first_epoch_end = agents[0].plan().total();

    let horizon = cfg.horizons.channel;
    let stride = cfg.output.trace_stride;
    let j1 = oracle.channel.j1;
    let mut rng = stream(seed, CHANNEL_STREAM);
    let mut actions = vec![ChannelSet::EMPTY; agents.len()];
    let mut regret = 0.0;
    let mut by_phase = PhaseRegret::default();
    let mut curve = Vec::with_capacity((horizon / stride) as usize + 1);
    let mut epochs = Vec::new();

    for t in 0..horizon {
        let (epoch, phase) = (agents[0].epoch(), agents[0].phase());
        for (a, slot) in agents.iter_mut().zip(actions.iter_mut()) {
            *slot = a.act(&mut rng)?;
        }
        let feedback = env.step_channel(&actions, &mut rng)?;
        let expected = env.expected_channel_sum(&actions);
        regret += j1 - expected;
        by_phase.add(phase, j1 - expected);
        for (a, fb) in agents.iter_mut().zip(&feedback) {
            a.observe(fb, &mut rng)?;
        }
        if phase == Phase::Matching && agents[0].phase() == Phase::Exploit {
            let profile: Vec<ChannelSet> = agents.iter().map(|a| a.exploit_choice().expect("just set")).collect();
            epochs.push(ChannelEpoch {
                epoch,
                exploit_start: t + 1,
                optimal: profile == oracle.channel.profile,
                profile,
                k_hat: agents.iter().map(|a| a.k_hat()).collect(),
                estimation_error: estimation_error(&agents, env),
            });
        }
        if (t + 1) % stride == 0 || t + 1 == horizon {
            curve.push(RegretPoint { t: t + 1, regret });
            trace.push(TraceRow {
                t: t + 1,
                stage: "channel",
                epoch,
                phase: phase.as_str(),
                actions: join(&actions),
                levels: String::new(),
                expected_reward: expected,
                ap_rewards: join(channel_ap_rewards(env, &actions)),
                occupancy: join(env.channel_rewards().occupancy(&actions)),
                sum_rate_bps: None,
                total_power_w: None,
                energy_efficiency: None,
            });
        }
    }

    let final_profile: Vec<ChannelSet> = agents
        .iter()
        .map(|a| a.exploit_choice().unwrap_or_else(|| a.exploit_action()))
        .collect();
    let convergence = convergence_slot(epochs.iter().map(|e| (e.exploit_start, e.optimal)));
    let stage = ChannelStage {
        explore_len,
        horizon,
        first_epoch_end,
        epochs,
        final_optimal: final_profile == oracle.channel.profile,
        final_gap: j1 - env.expected_channel_sum(&final_profile),
        convergence_slot: convergence,
        convergence_seconds: convergence.map(|t| t as f64 * cfg.output.slot_duration_s),
        phase_regret: by_phase,
        final_profile,
        k_hat: agents.iter().map(|a| a.k_hat()).collect(),
        total_regret: regret,
        regret: curve,
        estimation_error: estimation_error(&agents, env),
    };
    Ok((stage, agents))
}

struct PowerGame {
    channel: usize,
    agents: Vec<(usize, ApPowerAgent)>,
    choices: Vec<(usize, usize)>,
}

#[allow(clippy::too_many_arguments)]
fn power_stage(
    cfg: &RunConfig,
    env: &mut Environment,
    profile: &[ChannelSet],
    estimates: Vec<Vec<f64>>,
    explore_len: u64,
    seed: u64,
    trace: &mut Vec<TraceRow>,
) -> Result<PowerStage> {
    let table = build_power_rewards(env.scenario(), &estimates)?;
    env.set_power_rewards(table);
    let env = &*env;
    let table = env.power_rewards()?;
    let sc = env.scenario();
    let params = PowerAgentParams {
        schedule: schedule(cfg, explore_len, ExploreMode::Constant),
        epsilon: cfg.algorithm.epsilon,
        c_multiplier: cfg.algorithm.c_multiplier,
    };

    let mut abstained = Vec::new();
    let mut games = Vec::new();
    for (m, members) in channel_members(profile, sc.channel_count()).into_iter().enumerate() {
        let occupancy = members.len();
        let mut agents = Vec::new();
        for k in members {
            let arms = table.feasible(k, m).to_vec();
            if arms.is_empty() {
                log::warn!("AP {k} has no feasible level on channel {m}; it stays silent");
                abstained.push((k, m));
                continue;
            }
            agents.push((k, ApPowerAgent::new(m, arms, occupancy, params)?));
        }
        if !agents.is_empty() {
            games.push(PowerGame {
                channel: m,
                choices: Vec::with_capacity(agents.len()),
                agents,
            });
        }
    }
    if games.is_empty() {
        return Err(Error::Data("no AP can transmit in the power stage".into()));
    }

    let solutions = games
        .iter()
        .map(|g| {
            let aps: Vec<usize> = g.agents.iter().map(|(k, _)| *k).collect();
            crate::oracle::solve_power(table, g.channel, &aps, sc.noma_cap(), cfg.algorithm.profile_cap)
        })
        .collect::<Result<Vec<_>>>()?;
    let optimum: Vec<Transmission> = solutions
        .iter()
        .flat_map(|s| {
            s.aps
                .iter()
                .zip(&s.levels)
                .map(|(&ap, &level)| Transmission { ap, channel: s.channel, level })
        })
        .collect();
    let j1: f64 = solutions.iter().map(|s| s.j1).sum();
    let first_epoch_end = games[0].agents[0].1.plan().total();

    let horizon = cfg.horizons.power;
    let stride = cfg.output.trace_stride;
    let mut rng = stream(seed, POWER_STREAM);
    let mut sink = MetricsSink::new(cfg.output.metrics_block, horizon);
    let mut regret = 0.0;
    let mut by_phase = PhaseRegret::default();
    let mut curve = Vec::with_capacity((horizon / stride) as usize + 1);
    let mut epochs = Vec::new();
    let mut ap_rewards = vec![0.0; sc.ap_count()];
    let mut phase_rates: Vec<PhaseRate> = Vec::new();
    let mut tx = Vec::new();

    for t in 0..horizon {
        let lead = &games[0].agents[0].1;
        let (epoch, phase) = (lead.epoch(), lead.phase());
        tx.clear();
        ap_rewards.iter_mut().for_each(|r| *r = 0.0);
        let mut expected = 0.0;
        for g in games.iter_mut() {
            g.choices.clear();
            for (k, a) in g.agents.iter_mut() {
                g.choices.push((*k, a.act(&mut rng)?));
            }
            let feedback = env.step_power(g.channel, &g.choices, &mut rng)?;
            expected += table.expected_channel_sum(g.channel, &g.choices, sc.noma_cap());
            if env.decodable(&g.choices) {
                for &(k, l) in &g.choices {
                    ap_rewards[k] += table.mean(k, g.channel, l);
                }
            }
            for ((_, a), fb) in g.agents.iter_mut().zip(feedback) {
                a.observe(fb, &mut rng)?;
            }
            tx.extend(g.choices.iter().map(|&(ap, level)| Transmission {
                ap,
                channel: g.channel,
                level,
            }));
        }
        regret += j1 - expected;
        by_phase.add(phase, j1 - expected);
        let metrics = env.physical_metrics(&tx);
        sink.push(t, &metrics);

        match phase_rates.last_mut() {
            Some(p) if p.epoch == epoch && p.phase == phase.as_str() => {
                p.slots += 1;
                p.mean_rate_bps += (metrics.sum_rate_bps - p.mean_rate_bps) / p.slots as f64;
            }
            _ => phase_rates.push(PhaseRate {
                epoch,
                phase: phase.as_str(),
                slots: 1,
                mean_rate_bps: metrics.sum_rate_bps,
            }),
        }

        if phase == Phase::Matching && games[0].agents[0].1.phase() == Phase::Exploit {
            let levels = exploit_levels(&games);
            epochs.push(PowerEpoch {
                epoch,
                exploit_start: t + 1,
                optimal: levels == optimum,
                levels,
            });
        }
        if (t + 1) % stride == 0 || t + 1 == horizon {
            curve.push(RegretPoint { t: t + 1, regret });
            trace.push(TraceRow {
                t: t + 1,
                stage: "power",
                epoch,
                phase: phase.as_str(),
                actions: join(profile),
                levels: levels_field(&tx),
                expected_reward: expected,
                ap_rewards: join(&ap_rewards),
                occupancy: join(games.iter().map(|g| format!("{}:{}", g.channel, g.agents.len()))),
                sum_rate_bps: Some(metrics.sum_rate_bps),
                total_power_w: Some(metrics.total_power_w),
                energy_efficiency: Some(metrics.energy_efficiency),
            });
        }
    }

    let (metrics, converged) = sink.finish(horizon);
    let final_levels = final_levels(&games);
    let final_expected: f64 = games
        .iter()
        .map(|g| {
            let choices: Vec<(usize, usize)> = final_levels
                .iter()
                .filter(|t| t.channel == g.channel)
                .map(|t| (t.ap, t.level))
                .collect();
            table.expected_channel_sum(g.channel, &choices, sc.noma_cap())
        })
        .sum();
    let convergence = convergence_slot(epochs.iter().map(|e| (e.exploit_start, e.optimal)));
    Ok(PowerStage {
        explore_len,
        horizon,
        first_epoch_end,
        abstained,
        final_optimal: final_levels == optimum,
        final_gap: j1 - final_expected,
        convergence_slot: convergence,
        convergence_seconds: convergence.map(|t| t as f64 * cfg.output.slot_duration_s),
        phase_regret: by_phase,
        final_levels,
        solutions,
        epochs,
        total_regret: regret,
        phase_rates,
        converged,
        regret: curve,
        metrics,
    })
}

fn exploit_levels(games: &[PowerGame]) -> Vec<Transmission> {
    games
        .iter()
        .flat_map(|g| {
            g.agents.iter().map(move |(k, a)| Transmission {
                ap: *k,
                channel: g.channel,
                level: a.exploit_choice().expect("exploitation started"),
            })
        })
        .collect()
}

fn final_levels(games: &[PowerGame]) -> Vec<Transmission> {
    games
        .iter()
        .flat_map(|g| {
            g.agents.iter().map(move |(k, a)| Transmission {
                ap: *k,
                channel: g.channel,
                level: a.exploit_choice().unwrap_or_else(|| a.exploit_action()),
            })
        })
        .collect()
}

fn ucb_stage(
    cfg: &RunConfig,
    env: &Environment,
    oracle: &OracleReport,
    seed: u64,
    trace: &mut Vec<TraceRow>,
) -> Result<UcbStage> {
    let sc = env.scenario();
    let mut rng = stream(seed, UCB_STREAM);
    let mut agents = sc
        .channels_per_ap
        .iter()
        .map(|&n| UcbAgent::shuffled(sc.channel_count(), n, sc.level_count(), cfg.ucb.alpha, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let horizon = cfg.horizons.ucb;
    let stride = cfg.output.trace_stride;
    let mut sink = MetricsSink::new(cfg.output.metrics_block, horizon);
    let mut regret = 0.0;
    let mut curve = Vec::with_capacity((horizon / stride) as usize + 1);
    let mut picks = vec![0usize; agents.len()];
    let mut sets = vec![ChannelSet::EMPTY; agents.len()];

    for t in 0..horizon {
        for ((a, p), s) in agents.iter().zip(picks.iter_mut()).zip(sets.iter_mut()) {
            *p = a.select();
            *s = a.arm(*p).channels;
        }
        let arms: Vec<&CompositeArm> = agents.iter().zip(&picks).map(|(a, &p)| a.arm(p)).collect();
        let step = ucb_step(env, &arms, &mut rng)?;
        for ((a, &p), &r) in agents.iter_mut().zip(&picks).zip(&step.rewards) {
            a.update(p, r);
        }
        let expected = env.expected_channel_sum(&sets);
        regret += oracle.channel.j1 - expected;
        let metrics = env.physical_metrics(&step.transmissions);
        sink.push(t, &metrics);
        if (t + 1) % stride == 0 || t + 1 == horizon {
            curve.push(RegretPoint { t: t + 1, regret });
            trace.push(TraceRow {
                t: t + 1,
                stage: "ucb",
                epoch: 0,
                phase: "ucb",
                actions: join(&sets),
                levels: levels_field(&step.transmissions),
                expected_reward: step.expected.iter().sum(),
                ap_rewards: join(&step.expected),
                occupancy: join(env.channel_rewards().occupancy(&sets)),
                sum_rate_bps: Some(metrics.sum_rate_bps),
                total_power_w: Some(metrics.total_power_w),
                energy_efficiency: Some(metrics.energy_efficiency),
            });
        }
    }
    let (metrics, converged) = sink.finish(horizon);
    Ok(UcbStage {
        horizon,
        arms: agents[0].arm_count(),
        most_played: agents.iter().map(|a| a.arm(a.most_played()).clone()).collect(),
        total_channel_regret: regret,
        converged,
        regret: curve,
        metrics,
    })
}

/// Runs one seed end to end, in memory.
pub fn simulate_seed(cfg: &RunConfig, seed: u64) -> Result<SeedOutcome> {
    cfg.validate()?;
    let scenario_seed = cfg.scenario_seed.unwrap_or(seed);
    let scenario = generate_scenario(&cfg.scenario, scenario_seed)?;
    let mut env = Environment::new(scenario.clone())?;
    let oracle = oracle_report(&scenario, &env, cfg)?;
    let (channel_len, power_len) = exploration_lengths(cfg, &oracle);
    let mut trace = Vec::new();

    let (channel, power, ucb) = match cfg.method {
        Method::Proposed => {
            let (stage, agents) = channel_stage(cfg, &env, &oracle, channel_len, seed, &mut trace)?;
            let estimates = agents.iter().map(|a| a.gain_estimates()).collect();
            let power = power_stage(
                cfg,
                &mut env,
                &stage.final_profile,
                estimates,
                power_len,
                seed,
                &mut trace,
            )?;
            (Some(stage), Some(power), None)
        }
        Method::Ucb => (None, None, Some(ucb_stage(cfg, &env, &oracle, seed, &mut trace)?)),
    };
    Ok(SeedOutcome {
        seed,
        scenario_seed,
        method: cfg.method,
        channel,
        power,
        ucb,
        oracle,
        scenario,
        trace,
    })
}

/// Runs every seed of the config in parallel; results follow the seed order.
/// Fails on the first seed that fails.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<SeedOutcome>> {
    simulate_all(cfg)?.into_iter().map(|(_, r)| r).collect()
}

/// Like [`simulate`] but keeps going past seeds that fail.
pub fn simulate_all(cfg: &RunConfig) -> Result<Vec<(u64, Result<SeedOutcome>)>> {
    cfg.validate()?;
    Ok(cfg.seeds.par_iter().map(|&s| (s, simulate_seed(cfg, s))).collect())
}
