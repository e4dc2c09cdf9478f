//! Channel subsets and their enumeration order.
//!
//! An AP's action is a set of `N` distinct channels. Action indices follow the
//! lexicographic order of the sorted channel lists, so `{0,1} < {0,2} < {1,2}`;
//! this order fixes tie-breaking and the layout of every per-action table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest channel count representable by [`ChannelSet`].
pub const MAX_CHANNELS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct ChannelSet(u64);

impl ChannelSet {
    pub const EMPTY: ChannelSet = ChannelSet(0);

    pub fn single(channel: usize) -> Self {
        assert!(channel < MAX_CHANNELS);
        ChannelSet(1 << channel)
    }

    pub fn from_channels(channels: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &m in channels {
            if m >= MAX_CHANNELS {
                return Err(Error::Contract(format!("channel {m} out of range")));
            }
            if bits & (1 << m) != 0 {
                return Err(Error::Contract(format!("channel {m} listed twice")));
            }
            bits |= 1 << m;
        }
        Ok(ChannelSet(bits))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, channel: usize) -> bool {
        channel < MAX_CHANNELS && self.0 & (1 << channel) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Channels in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let m = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(m)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Highest channel index plus one, or zero when empty.
    pub fn span(self) -> usize {
        MAX_CHANNELS - self.0.leading_zeros() as usize
    }
}

impl fmt::Debug for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for ChannelSet {
    /// `0+2+3` style; `-` for the empty set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let mut first = true;
        for m in self.iter() {
            if !first {
                f.write_str("+")?;
            }
            write!(f, "{m}")?;
            first = false;
        }
        Ok(())
    }
}

impl From<ChannelSet> for Vec<usize> {
    fn from(s: ChannelSet) -> Self {
        s.to_vec()
    }
}

impl TryFrom<Vec<usize>> for ChannelSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        ChannelSet::from_channels(&v)
    }
}

/// All `C(M, N)` channel subsets of one AP, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    channels: usize,
    per_action: usize,
    actions: Vec<ChannelSet>,
}

impl ActionSpace {
    pub fn new(channels: usize, per_action: usize) -> Result<Self> {
        if channels == 0 || channels > MAX_CHANNELS {
            return Err(Error::Config(format!(
                "channel count {channels} must be in 1..={MAX_CHANNELS}"
            )));
        }
        if per_action == 0 || per_action > channels {
            return Err(Error::Config(format!(
                "channels per AP {per_action} must be in 1..={channels}"
            )));
        }
        let actions = combinations(channels, per_action)
            .map(|c| ChannelSet::from_channels(&c).expect("distinct in-range channels"))
            .collect();
        Ok(Self {
            channels,
            per_action,
            actions,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn per_action(&self) -> usize {
        self.per_action
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn get(&self, index: usize) -> ChannelSet {
        self.actions[index]
    }

    pub fn actions(&self) -> &[ChannelSet] {
        &self.actions
    }

    pub fn index_of(&self, set: ChannelSet) -> Option<usize> {
        // Lexicographic order on sorted lists is not the numeric order of the
        // bitmask, so fall back to a scan; spaces are tiny.
        self.actions.iter().position(|&a| a == set)
    }
}

/// Lexicographic `k`-combinations of `0..n`.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let next = {
            let c = current.as_mut().unwrap();
            let mut i = k;
            loop {
                if i == 0 {
                    break None;
                }
                i -= 1;
                if c[i] < n - k + i {
                    c[i] += 1;
                    for j in i + 1..k {
                        c[j] = c[j - 1] + 1;
                    }
                    break Some(());
                }
            }
        };
        if next.is_none() {
            current = None;
        }
        Some(out)
    })
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
