//! Content/discontent trial-and-error dynamics shared by the channel and power games.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mood {
    Content,
    #[default]
    Discontent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub action: usize,
    pub utilities: Vec<f64>,
}

/// Mood, baseline and per-action content counters of one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodMachine {
    actions: usize,
    epsilon: f64,
    exponent: f64,
    mood: Mood,
    baseline: Option<Baseline>,
    content_counts: Vec<u64>,
    clamped: u64,
}

impl MoodMachine {
    /// `exponent` is the constant `c` in the experimentation probability `ε^c`.
    pub fn new(actions: usize, epsilon: f64, exponent: f64) -> Self {
        assert!(actions > 0, "a player needs at least one action");
        Self {
            actions,
            epsilon,
            exponent,
            mood: Mood::Discontent,
            baseline: None,
            content_counts: vec![0; actions],
            clamped: 0,
        }
    }

    pub fn mood(&self) -> Mood {
        self.mood
    }

    pub fn baseline(&self) -> Option<&Baseline> {
        self.baseline.as_ref()
    }

    pub fn content_counts(&self) -> &[u64] {
        &self.content_counts
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn set_exponent(&mut self, c: f64) {
        self.exponent = c;
    }

    /// Transitions whose utility sum exceeded `u_max`.
    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    /// Clears the counters at the start of a matching phase. Mood and
    /// baseline carry over.
    pub fn reset_counts(&mut self) {
        self.content_counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match (&self.mood, &self.baseline) {
            (Mood::Content, Some(b)) => {
                let experiment = self.epsilon.powf(self.exponent);
                if self.actions > 1 && rng.random::<f64>() < experiment {
                    // Uniform over the other actions.
                    let j = rng.random_range(0..self.actions - 1);
                    if j >= b.action {
                        j + 1
                    } else {
                        j
                    }
                } else {
                    b.action
                }
            }
            _ => rng.random_range(0..self.actions),
        }
    }

    /// Updates the mood after playing `action` and observing `utilities`.
    pub fn transition<R: Rng + ?Sized>(
        &mut self,
        action: usize,
        utilities: &[f64],
        u_max: f64,
        rng: &mut R,
    ) -> Mood {
        let unchanged = self.mood == Mood::Content
            && self
                .baseline
                .as_ref()
                .is_some_and(|b| b.action == action && b.utilities == utilities);

        if utilities.contains(&0.0) {
            self.mood = Mood::Discontent;
            self.baseline = Some(Baseline {
                action,
                utilities: utilities.to_vec(),
            });
        } else if !unchanged {
            let total: f64 = utilities.iter().sum();
            let mut gap = u_max - total;
            if gap < 0.0 {
                self.clamped += 1;
                log::debug!("utility {total} above u_max {u_max}; acceptance clamped to 1");
                gap = 0.0;
            }
            let accept = rng.random::<f64>() < self.epsilon.powf(gap);
            self.mood = if accept { Mood::Content } else { Mood::Discontent };
            self.baseline = Some(Baseline {
                action,
                utilities: utilities.to_vec(),
            });
        }

        if self.mood == Mood::Content {
            self.content_counts[action] += 1;
        }
        self.mood
    }

    /// Most content action, lowest index on ties; `None` if never content.
    pub fn most_content(&self) -> Option<usize> {
        let best = *self.content_counts.iter().max()?;
        if best == 0 {
            return None;
        }
        self.content_counts.iter().position(|&c| c == best)
    }
}
