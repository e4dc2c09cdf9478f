//! Epoch lengths: exploration, matching, then a doubling exploitation phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExploreMode {
    #[default]
    Constant,
    /// Exploration length divided by the epoch index.
    Decreasing,
}

impl std::str::FromStr for ExploreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ExploreMode::Constant),
            "decreasing" => Ok(ExploreMode::Decreasing),
            other => Err(Error::Config(format!("unknown explore mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub explore_len: u64,
    pub c1: f64,
    pub c2: u64,
    pub delta: f64,
    pub mode: ExploreMode,
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        if self.explore_len == 0 || self.c2 == 0 || !(self.c1 > 0.0) || !(self.delta >= 0.0) {
            return Err(Error::Config(format!(
                "schedule constants must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochPlan {
    pub epoch: u32,
    pub explore: u64,
    pub matching: u64,
    pub exploit: u64,
    /// `c2·2^l` overflowed and was clamped to `u64::MAX`.
    pub saturated: bool,
}

impl EpochPlan {
    pub fn total(&self) -> u64 {
        self.explore
            .saturating_add(self.matching)
            .saturating_add(self.exploit)
    }
}

/// Phase lengths of epoch `l` (1-based).
pub fn epoch_schedule(l: u32, params: &ScheduleParams) -> Result<EpochPlan> {
    if l == 0 {
        return Err(Error::Contract("epochs are numbered from 1".into()));
    }
    params.validate()?;
    let explore = match params.mode {
        ExploreMode::Constant => params.explore_len,
        ExploreMode::Decreasing => params.explore_len.div_ceil(l as u64),
    };
    let matching = (params.c1 * (l as f64).powf(1.0 + params.delta)).ceil() as u64;
    let (exploit, saturated) = match 1u64.checked_shl(l).and_then(|p| params.c2.checked_mul(p)) {
        Some(v) if l < 64 => (v, false),
        _ => {
            log::warn!("exploitation length c2*2^{l} saturates");
            (u64::MAX, true)
        }
    };
    Ok(EpochPlan {
        epoch: l,
        explore,
        matching,
        exploit,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mode: ExploreMode, explore_len: u64) -> ScheduleParams {
        ScheduleParams {
            explore_len,
            c1: 3000.0,
            c2: 5000,
            delta: 0.0,
            mode,
        }
    }

    #[test]
    fn first_epoch_with_experiment_constants() {
        let p = epoch_schedule(1, &params(ExploreMode::Constant, 777)).unwrap();
        assert_eq!((p.explore, p.matching, p.exploit), (777, 3000, 10_000));
    }

    #[test]
    fn decreasing_divides_by_epoch() {
        let p = epoch_schedule(3, &params(ExploreMode::Decreasing, 9000)).unwrap();
        assert_eq!(p.explore, 3000);
        let p = epoch_schedule(4, &params(ExploreMode::Decreasing, 9001)).unwrap();
        assert_eq!(p.explore, 2251);
    }

    #[test]
    fn exploitation_geometric_sum() {
        let pr = params(ExploreMode::Constant, 10);
        for big_l in 1..20u32 {
            let sum: u64 = (1..=big_l).map(|l| epoch_schedule(l, &pr).unwrap().exploit).sum();
            assert_eq!(sum, 5000 * ((1u64 << (big_l + 1)) - 2));
        }
    }

    #[test]
    fn matching_grows_with_delta() {
        let mut pr = params(ExploreMode::Constant, 10);
        pr.delta = 0.5;
        assert_eq!(epoch_schedule(4, &pr).unwrap().matching, 24_000);
    }

    #[test]
    fn saturation_and_errors() {
        let pr = params(ExploreMode::Constant, 10);
        let p = epoch_schedule(70, &pr).unwrap();
        assert!(p.saturated);
        assert_eq!(p.exploit, u64::MAX);
        assert!(epoch_schedule(0, &pr).is_err());
        assert!(epoch_schedule(1, &params(ExploreMode::Constant, 0)).is_err());
        assert_eq!("decreasing".parse::<ExploreMode>().unwrap(), ExploreMode::Decreasing);
        assert!("other".parse::<ExploreMode>().is_err());
    }
}
