//! Per-AP, per-channel power-level learner.
//!
//! The same three phases as the channel learner, played over the feasible
//! received-power levels with a single arm per slot.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel_agent::Phase;
use crate::env::PowerFeedback;
use crate::error::{Error, Result};
use crate::matching::{Mood, MoodMachine};
use crate::schedule::{epoch_schedule, EpochPlan, ScheduleParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAgentParams {
    pub schedule: ScheduleParams,
    pub epsilon: f64,
    /// `c = multiplier · K_m`.
    pub c_multiplier: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApPowerAgent {
    channel: usize,
    /// Feasible level indices, ascending.
    arms: Vec<usize>,
    occupancy: usize,
    params: PowerAgentParams,
    sums: Vec<f64>,
    counts: Vec<u64>,
    silent: u64,
    mu_hat: Vec<f64>,
    matcher: MoodMachine,
    u_max: f64,
    exploit: Option<usize>,
    plan: EpochPlan,
    phase: Phase,
    elapsed: u64,
    pending: Option<usize>,
}

impl ApPowerAgent {
    /// `occupancy` is `K_m`, the number of APs the channel stage left on `channel`.
    pub fn new(channel: usize, arms: Vec<usize>, occupancy: usize, params: PowerAgentParams) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Data(format!("no feasible power level on channel {channel}")));
        }
        if occupancy == 0 {
            return Err(Error::Contract("occupancy includes the agent itself".into()));
        }
        if !(0.0..1.0).contains(&params.epsilon) || !(params.c_multiplier > 0.0) {
            return Err(Error::Config("epsilon must be in [0, 1), c multiplier > 0".into()));
        }
        let mut arms = arms;
        arms.sort_unstable();
        arms.dedup();
        let n = arms.len();
        Ok(Self {
            channel,
            occupancy,
            sums: vec![0.0; n],
            counts: vec![0; n],
            silent: 0,
            mu_hat: vec![0.0; n],
            matcher: MoodMachine::new(n, params.epsilon, params.c_multiplier * occupancy as f64),
            u_max: 0.0,
            exploit: None,
            plan: epoch_schedule(1, &params.schedule)?,
            phase: Phase::Explore,
            elapsed: 0,
            pending: None,
            arms,
            params,
        })
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn arms(&self) -> &[usize] {
        &self.arms
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

    pub fn mood(&self) -> Mood {
        self.matcher.mood()
    }

    pub fn matcher(&self) -> &MoodMachine {
        &self.matcher
    }

    /// Exploration slots that ended in a collision.
    pub fn silent_samples(&self) -> u64 {
        self.silent
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// `μ̂_P` of a level, 0 when unseen or not an arm.
    pub fn mu_hat(&self, level: usize) -> f64 {
        self.arm_index(level).map_or(0.0, |i| self.mu_hat[i])
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    fn arm_index(&self, level: usize) -> Option<usize> {
        self.arms.binary_search(&level).ok()
    }

    pub fn exploit_choice(&self) -> Option<usize> {
        self.exploit.map(|i| self.arms[i])
    }

    pub fn explore_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.phase != Phase::Explore {
            return Err(Error::Contract(format!(
                "power explore step called in {} phase",
                self.phase.as_str()
            )));
        }
        Ok(self.arms[rng.random_range(0..self.arms.len())])
    }

    /// Collisions carry no information about the level's reward, so only
    /// decoded samples enter the estimate.
    pub fn explore_update(&mut self, level: usize, feedback: PowerFeedback) -> Result<()> {
        let i = self
            .arm_index(level)
            .ok_or_else(|| Error::Contract(format!("level {level} is not an arm")))?;
        match feedback {
            PowerFeedback::Reward(x) => {
                self.sums[i] += x;
                self.counts[i] += 1;
            }
            PowerFeedback::Silence => self.silent += 1,
        }
        Ok(())
    }

    pub fn finalize_exploration(&mut self) {
        for i in 0..self.arms.len() {
            if self.counts[i] > 0 {
                self.mu_hat[i] = self.sums[i] / self.counts[i] as f64;
            }
        }
        self.u_max = self.mu_hat.iter().copied().fold(0.0, f64::max);
    }

    pub fn matching_choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.phase != Phase::Matching {
            return Err(Error::Contract(format!(
                "power matching step called in {} phase",
                self.phase.as_str()
            )));
        }
        Ok(self.arms[self.matcher.choose(rng)])
    }

    /// Utility is `μ̂_P(level)` when decoded and 0 on silence.
    pub fn matching_transition<R: Rng + ?Sized>(
        &mut self,
        level: usize,
        feedback: PowerFeedback,
        rng: &mut R,
    ) -> Result<Mood> {
        let i = self
            .arm_index(level)
            .ok_or_else(|| Error::Contract(format!("level {level} is not an arm")))?;
        let u = if feedback.is_silent() { 0.0 } else { self.mu_hat[i] };
        Ok(self.matcher.transition(i, &[u], self.u_max, rng))
    }

    /// Most content level; lowest index (strongest level) on ties.
    pub fn exploit_action(&self) -> usize {
        match self.matcher.most_content() {
            Some(i) => self.arms[i],
            None => {
                log::debug!("power agent on channel {} never content; using best estimate", self.channel);
                let mut best = 0;
                for i in 1..self.arms.len() {
                    if self.mu_hat[i] > self.mu_hat[best] {
                        best = i;
                    }
                }
                self.arms[best]
            }
        }
    }

    pub fn act<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        if self.pending.is_some() {
            return Err(Error::Contract("act called twice without observe".into()));
        }
        let level = match self.phase {
            Phase::Explore => self.explore_step(rng)?,
            Phase::Matching => self.matching_choose(rng)?,
            Phase::Exploit => self.exploit_choice().expect("set when matching ends"),
        };
        self.pending = Some(level);
        Ok(level)
    }

    pub fn observe<R: Rng + ?Sized>(&mut self, feedback: PowerFeedback, rng: &mut R) -> Result<()> {
        let level = self
            .pending
            .take()
            .ok_or_else(|| Error::Contract("observe called without act".into()))?;
        match self.phase {
            Phase::Explore => self.explore_update(level, feedback)?,
            Phase::Matching => {
                self.matching_transition(level, feedback, rng)?;
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
                    self.finalize_exploration();
                    self.matcher.reset_counts();
                    self.phase = Phase::Matching;
                }
                Phase::Matching => {
                    let level = self.exploit_action();
                    self.exploit = self.arm_index(level);
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
