//! Two-dimensional UCB baseline: each AP runs UCB1 over every pairing of a
//! channel subset with one power level per chosen channel.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{ActionSpace, ChannelSet};
use crate::env::{sample_reward, Environment, Transmission};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeArm {
    pub channels: ChannelSet,
    /// Level per chosen channel, in ascending channel order.
    pub levels: Vec<usize>,
}

impl CompositeArm {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.channels.iter().zip(self.levels.iter().copied())
    }
}

/// Arms in subset-major order; within a subset, level tuples count up with
/// the first channel most significant.
pub fn composite_arms(channels: usize, per_ap: usize, levels: usize) -> Result<Vec<CompositeArm>> {
    if levels == 0 {
        return Err(Error::Config("at least one power level is required".into()));
    }
    let space = ActionSpace::new(channels, per_ap)?;
    let tuples = (levels as u64)
        .checked_pow(per_ap as u32)
        .filter(|&n| n <= 1 << 20)
        .ok_or_else(|| Error::Config("too many composite arms".into()))?;
    let mut arms = Vec::with_capacity(space.len() * tuples as usize);
    for &set in space.actions() {
        for t in 0..tuples {
            let mut rest = t;
            let mut lv = vec![0; per_ap];
            for slot in lv.iter_mut().rev() {
                *slot = (rest % levels as u64) as usize;
                rest /= levels as u64;
            }
            arms.push(CompositeArm {
                channels: set,
                levels: lv,
            });
        }
    }
    Ok(arms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbAgent {
    arms: Vec<CompositeArm>,
    counts: Vec<u64>,
    means: Vec<f64>,
    t: u64,
    alpha: f64,
    /// Rewards are divided by this to keep the index in `[0, 1]` units.
    scale: f64,
}

impl UcbAgent {
    pub fn new(channels: usize, per_ap: usize, levels: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config("UCB alpha must be positive".into()));
        }
        let arms = composite_arms(channels, per_ap, levels)?;
        let n = arms.len();
        Ok(Self {
            arms,
            counts: vec![0; n],
            means: vec![0.0; n],
            t: 0,
            alpha,
            scale: per_ap as f64,
        })
    }

    /// Same arms in an order drawn from `rng`. Identical agents that share
    /// one order sweep and break ties in lockstep and collide forever.
    pub fn shuffled<R: Rng + ?Sized>(
        channels: usize,
        per_ap: usize,
        levels: usize,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut agent = Self::new(channels, per_ap, levels, alpha)?;
        agent.arms.shuffle(rng);
        Ok(agent)
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn arm(&self, i: usize) -> &CompositeArm {
        &self.arms[i]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn index(&self, i: usize) -> f64 {
        if self.counts[i] == 0 {
            return f64::INFINITY;
        }
        let t = self.t.max(1) as f64;
        self.means[i] + (self.alpha * t.ln() / self.counts[i] as f64).sqrt()
    }

    /// Sweep first, then the highest index with ties to the lowest arm.
    pub fn select(&self) -> usize {
        if (self.t as usize) < self.arms.len() {
            return self.t as usize;
        }
        let mut best = 0;
        let mut best_index = self.index(0);
        for i in 1..self.arms.len() {
            let v = self.index(i);
            if v > best_index {
                best = i;
                best_index = v;
            }
        }
        best
    }

    /// Records a reward in `[0, N]`.
    pub fn update(&mut self, arm: usize, reward: f64) {
        let x = reward / self.scale;
        self.t += 1;
        self.counts[arm] += 1;
        self.means[arm] += (x - self.means[arm]) / self.counts[arm] as f64;
    }

    /// Most pulled arm, lowest index on ties.
    pub fn most_played(&self) -> usize {
        let best = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == best).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbStep {
    pub rewards: Vec<f64>,
    /// Per-AP expected reward of the joint play.
    pub expected: Vec<f64>,
    pub transmissions: Vec<Transmission>,
}

/// Plays one slot of composite arms.
///
/// A pair whose level does not fit the budget under the true gain is left
/// silent. Each transmitting pair earns a channel sample times a power sample
/// when its channel is decodable, and nothing otherwise.
pub fn ucb_step<R: Rng + ?Sized>(env: &Environment, arms: &[&CompositeArm], rng: &mut R) -> Result<UcbStep> {
    let sc = env.scenario();
    if arms.len() != sc.ap_count() {
        return Err(Error::Contract(format!("{} arms for {} APs", arms.len(), sc.ap_count())));
    }
    let truth = env.true_power_rewards();
    let mut transmissions = Vec::new();
    for (k, arm) in arms.iter().enumerate() {
        if arm.channels.len() != arm.levels.len() || arm.channels.span() > sc.channel_count() {
            return Err(Error::Contract(format!("malformed composite arm for AP {k}")));
        }
        for (m, l) in arm.pairs() {
            if l >= sc.level_count() {
                return Err(Error::Contract(format!("level {l} out of range")));
            }
            if truth.is_feasible(k, m, l) {
                transmissions.push(Transmission { ap: k, channel: m, level: l });
            }
        }
    }
    let mut per_channel: Vec<Vec<(usize, usize)>> = vec![Vec::new(); sc.channel_count()];
    for t in &transmissions {
        per_channel[t.channel].push((t.ap, t.level));
    }
    let decodable: Vec<bool> = per_channel.iter().map(|c| env.decodable(c)).collect();

    let mut rewards = vec![0.0; arms.len()];
    let mut expected = vec![0.0; arms.len()];
    let table = env.channel_rewards();
    for t in &transmissions {
        let occ = per_channel[t.channel].len();
        let mu = table.mean(t.ap, t.channel, occ);
        let mu_p = truth.mean(t.ap, t.channel, t.level);
        let x = sample_reward(mu, env.w_max(), rng);
        let xp = sample_reward(mu_p, env.w_max(), rng);
        if decodable[t.channel] {
            rewards[t.ap] += x * xp;
            expected[t.ap] += mu * mu_p;
        }
    }
    Ok(UcbStep {
        rewards,
        expected,
        transmissions,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::env::{generate_scenario, ScenarioConfig};

    #[test]
    fn paper_arm_count() {
        let arms = composite_arms(4, 2, 2).unwrap();
        assert_eq!(arms.len(), 24);
        assert_eq!(arms[0].channels.to_vec(), vec![0, 1]);
        assert_eq!(arms[0].levels, vec![0, 0]);
        assert_eq!(arms[1].levels, vec![0, 1]);
        assert_eq!(arms[2].levels, vec![1, 0]);
        assert_eq!(arms[4].channels.to_vec(), vec![0, 2]);
    }

    #[test]
    fn sweep_then_exploit() {
        let mut a = UcbAgent::new(4, 2, 2, 2.0).unwrap();
        for t in 0..24 {
            assert_eq!(a.select(), t);
            a.update(t, if t == 7 { 2.0 } else { 0.0 });
        }
        assert!(a.counts().iter().all(|&c| c >= 1));
        assert_eq!(a.counts().iter().sum::<u64>(), 24);
        for _ in 0..5000 {
            let i = a.select();
            a.update(i, if i == 7 { 2.0 } else { 0.0 });
        }
        assert_eq!(a.select(), 7);
        assert_eq!(a.most_played(), 7);
    }

    #[test]
    fn shuffled_keeps_the_arm_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = UcbAgent::shuffled(4, 2, 2, 2.0, &mut rng).unwrap();
        let b = UcbAgent::shuffled(4, 2, 2, 2.0, &mut rng).unwrap();
        let mut sorted_a: Vec<_> = (0..24).map(|i| a.arm(i).clone()).collect();
        let order_b: Vec<_> = (0..24).map(|i| b.arm(i).clone()).collect();
        assert_ne!(sorted_a, order_b);
        let key = |x: &CompositeArm| (x.channels.to_vec(), x.levels.clone());
        sorted_a.sort_by_key(key);
        assert_eq!(sorted_a, composite_arms(4, 2, 2).unwrap());
    }

    #[test]
    fn index_grows_with_mean() {
        let mut a = UcbAgent::new(2, 1, 1, 2.0).unwrap();
        a.update(0, 0.3);
        a.update(1, 0.3);
        assert_eq!(a.select(), 0);
        let before = a.index(1);
        a.means[1] = 0.6;
        assert!(a.index(1) > before);
        assert_eq!(a.select(), 1);
    }

    #[test]
    fn collisions_pay_nothing() {
        let sc = generate_scenario(&ScenarioConfig::paper(), 1).unwrap();
        let env = Environment::new(sc).unwrap();
        let arm = CompositeArm {
            channels: ChannelSet::from_channels(&[0, 1]).unwrap(),
            levels: vec![0, 0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let step = ucb_step(&env, &[&arm, &arm, &arm, &arm], &mut rng).unwrap();
        assert!(step.rewards.iter().all(|&r| r == 0.0));
        assert_eq!(step.transmissions.len(), 8);
        assert_eq!(env.physical_metrics(&step.transmissions).sum_rate_bps, 0.0);
    }

    #[test]
    fn rewards_bounded_by_n() {
        let sc = generate_scenario(&ScenarioConfig::paper(), 2).unwrap();
        let env = Environment::new(sc).unwrap();
        let arms = composite_arms(4, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..200 {
            let pick: Vec<&CompositeArm> = (0..4).map(|k| &arms[(i * 7 + k * 5) % 24]).collect();
            let step = ucb_step(&env, &pick, &mut rng).unwrap();
            assert!(step.rewards.iter().all(|&r| (0.0..=2.0).contains(&r)));
        }
    }
}
