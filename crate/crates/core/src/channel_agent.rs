//! Per-AP channel learner: exploration, matching and exploitation epochs.
//!
//! The agent sees nothing but its own [`ChannelFeedback`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpace, ChannelSet};
use crate::env::ChannelFeedback;
use crate::error::{Error, Result};
use crate::matching::{MoodMachine, Mood};
use crate::schedule::{epoch_schedule, EpochPlan, ScheduleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Explore,
    Matching,
    Exploit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Matching => "matching",
            Phase::Exploit => "exploit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelAgentParams {
    pub schedule: ScheduleParams,
    pub epsilon: f64,
    /// `c = multiplier · K̂ · N`.
    pub c_multiplier: f64,
    /// NOMA cap `β`, broadcast by the MBS.
    pub noma_cap: usize,
    /// Gain normaliser `μ_max`, broadcast by the MBS.
    pub mu_max: f64,
}

/// Sample sums and counts indexed by `[channel][occupancy - 1]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OccupancyStats {
    sums: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
}

impl OccupancyStats {
    fn new(channels: usize) -> Self {
        Self {
            sums: vec![Vec::new(); channels],
            counts: vec![Vec::new(); channels],
        }
    }

    fn add(&mut self, m: usize, occupancy: usize, x: f64) {
        let i = occupancy - 1;
        if self.sums[m].len() <= i {
            self.sums[m].resize(i + 1, 0.0);
            self.counts[m].resize(i + 1, 0);
        }
        self.sums[m][i] += x;
        self.counts[m][i] += 1;
    }

    pub fn count(&self, m: usize, occupancy: usize) -> u64 {
        self.counts[m].get(occupancy - 1).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Serializable as a debugging snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct ApChannelAgent {
    #[serde(skip)]
    space: ActionSpace,
    channels: usize,
    per_action: usize,
    params: ChannelAgentParams,
    stats: OccupancyStats,
    /// `μ̂[m][k_m - 1]`; entries never observed stay 0.
    mu_hat: Vec<Vec<f64>>,
    explored: u64,
    collisions: u64,
    k_hat: usize,
    matcher: MoodMachine,
    u_max: f64,
    exploit: Option<usize>,
    plan: EpochPlan,
    phase: Phase,
    /// Slots already spent in the current phase.
    elapsed: u64,
    /// Action played in the pending slot.
    pending: Option<ChannelSet>,
}

impl ApChannelAgent {
    pub fn new(channels: usize, per_action: usize, params: ChannelAgentParams) -> Result<Self> {
        let space = ActionSpace::new(channels, per_action)?;
        if params.noma_cap == 0 || !(params.mu_max > 0.0) {
            return Err(Error::Config("noma_cap and mu_max must be positive".into()));
        }
        if !(0.0..1.0).contains(&params.epsilon) || !(params.c_multiplier > 0.0) {
            return Err(Error::Config("epsilon must be in [0, 1), c multiplier > 0".into()));
        }
        let plan = epoch_schedule(1, &params.schedule)?;
        let actions = space.len();
        Ok(Self {
            space,
            channels,
            per_action,
            stats: OccupancyStats::new(channels),
            mu_hat: vec![Vec::new(); channels],
            explored: 0,
            collisions: 0,
            k_hat: 1,
            matcher: MoodMachine::new(actions, params.epsilon, params.c_multiplier * per_action as f64),
            u_max: 0.0,
            exploit: None,
            plan,
            phase: Phase::Explore,
            elapsed: 0,
            pending: None,
            params,
        })
    }

    fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn action_space(&self) -> &ActionSpace {
        self.space()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn epoch(&self) -> u32 {
        self.plan.epoch
    }

    pub fn plan(&self) -> &EpochPlan {
        &self.plan
    }

    pub fn k_hat(&self) -> usize {
        self.k_hat
    }

    pub fn collisions(&self) -> u64 {
        self.collisions
    }

    pub fn explored(&self) -> u64 {
        self.explored
    }

    pub fn stats(&self) -> &OccupancyStats {
        &self.stats
    }

    pub fn mood(&self) -> Mood {
        self.matcher.mood()
    }

    pub fn matcher(&self) -> &MoodMachine {
        &self.matcher
    }

    /// `μ̂(m, k_m)`, 0 where nothing was observed.
    pub fn mu_hat(&self, m: usize, occupancy: usize) -> f64 {
        if occupancy == 0 {
            return 0.0;
        }
        self.mu_hat[m].get(occupancy - 1).copied().unwrap_or(0.0)
    }

    /// Action chosen for exploitation in the current epoch, once matching ended.
    pub fn exploit_choice(&self) -> Option<ChannelSet> {
        self.exploit.map(|i| self.space().get(i))
    }

    /// Uniform single channel.
    pub fn explore_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        if self.phase != Phase::Explore {
            return Err(Error::Contract(format!(
                "explore_step called in {} phase",
                self.phase.as_str()
            )));
        }
        Ok(ChannelSet::single(rng.random_range(0..self.channels)))
    }

    pub fn explore_update(&mut self, feedback: &ChannelFeedback) -> Result<()> {
        if feedback.observations.len() != 1 {
            return Err(Error::Contract("exploration observes exactly one channel".into()));
        }
        let o = feedback.observations[0];
        if o.channel >= self.channels || o.occupancy == 0 {
            return Err(Error::Contract(format!("bad observation {o:?}")));
        }
        self.stats.add(o.channel, o.occupancy, o.reward);
        self.explored += 1;
        if o.occupancy > 1 {
            self.collisions += 1;
        }
        Ok(())
    }

    /// Refreshes `μ̂` and `K̂` from everything explored so far.
    pub fn finalize_exploration(&mut self) -> Result<()> {
        if self.explored == 0 {
            return Err(Error::Contract("no exploration samples".into()));
        }
        for m in 0..self.channels {
            self.mu_hat[m] = self.stats.sums[m]
                .iter()
                .zip(&self.stats.counts[m])
                .enumerate()
                .map(|(i, (&s, &c))| {
                    if c > 0 {
                        s / c as f64
                    } else {
                        self.mu_hat[m].get(i).copied().unwrap_or(0.0)
                    }
                })
                .collect();
        }
        self.k_hat = estimate_ap_count(
            self.explored,
            self.collisions,
            self.channels,
            self.params.noma_cap * self.channels,
        );
        self.u_max = self.compute_u_max();
        self.matcher
            .set_exponent(self.params.c_multiplier * (self.k_hat * self.per_action) as f64);
        Ok(())
    }

    fn compute_u_max(&self) -> f64 {
        let mut solo: Vec<f64> = (0..self.channels).map(|m| self.mu_hat(m, 1)).collect();
        solo.sort_by(|a, b| b.total_cmp(a));
        solo.iter().take(self.per_action).sum()
    }

    /// Best-case reward: sole occupancy on the `N` best channels.
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn matching_choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        if self.phase != Phase::Matching {
            return Err(Error::Contract(format!(
                "matching_choose called in {} phase",
                self.phase.as_str()
            )));
        }
        Ok(self.space().get(self.matcher.choose(rng)))
    }

    /// Utilities `μ̂(m, k_m)` of the chosen channels, in channel order.
    pub fn utilities(&self, feedback: &ChannelFeedback) -> Vec<f64> {
        let mut obs = feedback.observations.clone();
        obs.sort_by_key(|o| o.channel);
        obs.iter().map(|o| self.mu_hat(o.channel, o.occupancy)).collect()
    }

    pub fn matching_transition<R: Rng + ?Sized>(
        &mut self,
        action: ChannelSet,
        feedback: &ChannelFeedback,
        rng: &mut R,
    ) -> Result<Mood> {
        let index = self
            .space()
            .index_of(action)
            .ok_or_else(|| Error::Contract(format!("{action} is not an action of this AP")))?;
        let u = self.utilities(feedback);
        if u.len() != self.per_action {
            return Err(Error::Contract("feedback must cover every chosen channel".into()));
        }
        Ok(self.matcher.transition(index, &u, self.u_max, rng))
    }

    /// Most content action of the finished matching phase.
    pub fn exploit_action(&self) -> ChannelSet {
        match self.matcher.most_content() {
            Some(i) => self.space().get(i),
            None => {
                log::debug!("no content play recorded; falling back to the best solo channels");
                self.top_channels()
            }
        }
    }

    fn top_channels(&self) -> ChannelSet {
        let mut order: Vec<usize> = (0..self.channels).collect();
        order.sort_by(|&a, &b| self.mu_hat(b, 1).total_cmp(&self.mu_hat(a, 1)).then(a.cmp(&b)));
        ChannelSet::from_channels(&order[..self.per_action]).expect("distinct channels")
    }

    /// `ĥ[m] = μ̂(m, 1) · μ_max`.
    pub fn gain_estimates(&self) -> Vec<f64> {
        (0..self.channels)
            .map(|m| self.mu_hat(m, 1) * self.params.mu_max)
            .collect()
    }

    /// Action for the next slot, following the epoch schedule.
    pub fn act<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<ChannelSet> {
        if self.pending.is_some() {
            return Err(Error::Contract("act called twice without observe".into()));
        }
        let a = match self.phase {
            Phase::Explore => self.explore_step(rng)?,
            Phase::Matching => self.matching_choose(rng)?,
            Phase::Exploit => self.exploit_choice().expect("set when matching ends"),
        };
        self.pending = Some(a);
        Ok(a)
    }

    pub fn observe<R: Rng + ?Sized>(&mut self, feedback: &ChannelFeedback, rng: &mut R) -> Result<()> {
        let action = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe called without act".into()))?;
        match self.phase {
            Phase::Explore => self.explore_update(feedback)?,
            Phase::Matching => {
                self.matching_transition(action, feedback, rng)?;
            }
            Phase::Exploit => {}
        }
        self.elapsed += 1;
        self.advance()
    }

    fn phase_len(&self) -> u64 {
        match self.phase {
            Phase::Explore => self.plan.explore,
            Phase::Matching => self.plan.matching,
            Phase::Exploit => self.plan.exploit,
        }
    }

    fn advance(&mut self) -> Result<()> {
        while self.elapsed >= self.phase_len() {
            self.elapsed = 0;
            match self.phase {
                Phase::Explore => {
                    self.finalize_exploration()?;
                    self.matcher.reset_counts();
                    self.phase = Phase::Matching;
                }
                Phase::Matching => {
                    self.exploit = Some(
                        self.space()
                            .index_of(self.exploit_action())
                            .expect("fallback is a valid action"),
                    );
                    self.phase = Phase::Exploit;
                }
                Phase::Exploit => {
                    self.plan = epoch_schedule(self.plan.epoch + 1, &self.params.schedule)?;
                    self.phase = Phase::Explore;
                }
            }
        }
        Ok(())
    }
}

/// `K̂ = min(round(ln((T - b)/T) / ln(1 - 1/M) + 1), cap)`.
pub fn estimate_ap_count(explored: u64, collisions: u64, channels: usize, cap: usize) -> usize {
    if explored == 0 || collisions == 0 {
        return 1;
    }
    if collisions >= explored || channels == 1 {
        return cap;
    }
    let t = explored as f64;
    let ratio = (t - collisions as f64) / t;
    let k = (ratio.ln() / (1.0 - 1.0 / channels as f64).ln() + 1.0).round();
    (k.max(1.0) as usize).min(cap)
}
