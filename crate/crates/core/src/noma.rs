//! Uplink NOMA power-ladder arithmetic.
//!
//! An AP that targets SINR `Γ_l` on a channel must arrive at the receiver with
//! power `v_l` such that, after successive interference cancellation has
//! removed every stronger signal, `Γ_l = v_l / (V_l + N0·Bc)` where `V_l` is the
//! sum of all weaker levels. Solving backwards from the weakest level gives
//!
//! ```text
//! v_l = Γ_l · N0Bc · Π_{l' > l} (Γ_l' + 1)
//! ```
//!
//! All powers are in watts and all SINR values linear; dB only appears at the
//! configuration boundary through [`db_to_linear`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Ordering requirement placed on a [`SinrLadder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LadderOrder {
    /// `Γ_1 > Γ_2 > … > Γ_L`.
    #[default]
    Strict,
    /// Any positive targets; only the direct `v_l > V_l` check decides SIC stability.
    Relaxed,
}

/// The `L` SINR targets available on every channel, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrLadder {
    gammas: Vec<f64>,
    order: LadderOrder,
}

impl SinrLadder {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        Self::with_order(gammas, LadderOrder::Strict)
    }

    pub fn relaxed(gammas: Vec<f64>) -> Result<Self> {
        Self::with_order(gammas, LadderOrder::Relaxed)
    }

    pub fn with_order(gammas: Vec<f64>, order: LadderOrder) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Domain("SINR ladder needs at least one level".into()));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::Domain(format!("SINR target {g} is not positive")));
        }
        if order == LadderOrder::Strict && gammas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Domain(format!(
                "SINR targets {gammas:?} are not strictly descending"
            )));
        }
        Ok(Self { gammas, order })
    }

    pub fn from_db(gammas_db: &[f64], order: LadderOrder) -> Result<Self> {
        Self::with_order(gammas_db.iter().copied().map(db_to_linear).collect(), order)
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn gamma(&self, level: usize) -> f64 {
        self.gammas[level]
    }

    /// `Γ_max`, the first (highest) target.
    pub fn gamma_max(&self) -> f64 {
        self.gammas[0]
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn order(&self) -> LadderOrder {
        self.order
    }
}

/// Received power levels `v_l` paired with the noise power they were built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLevelSet {
    levels: Vec<f64>,
    noise_power: f64,
}

impl PowerLevelSet {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> f64 {
        self.levels[l]
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `V_l`: power of the weaker, not yet cancelled, levels.
    pub fn interference(&self, l: usize) -> f64 {
        self.levels[l + 1..].iter().sum()
    }

    /// SINR seen by level `l` when every level is occupied.
    pub fn sinr(&self, l: usize) -> f64 {
        self.levels[l] / (self.interference(l) + self.noise_power)
    }

    pub fn is_strictly_descending(&self) -> bool {
        self.levels.windows(2).all(|w| w[0] > w[1])
    }
}

/// Shannon rate in bit/s for a linear SINR over `bandwidth_hz`.
pub fn rate_for_sinr(gamma_linear: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(gamma_linear >= 0.0) || !gamma_linear.is_finite() {
        return Err(Error::Domain(format!("SINR {gamma_linear} must be >= 0")));
    }
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(Error::Domain(format!("bandwidth {bandwidth_hz} must be > 0")));
    }
    Ok(bandwidth_hz * (1.0 + gamma_linear).log2())
}

pub fn power_levels(ladder: &SinrLadder, noise_power: f64) -> Result<PowerLevelSet> {
    if !(noise_power > 0.0) || !noise_power.is_finite() {
        return Err(Error::Domain(format!("noise power {noise_power} must be > 0")));
    }
    let gammas = ladder.gammas();
    let mut levels = vec![0.0; gammas.len()];
    // Running Π_{l' > l} (Γ_l' + 1), empty product for the weakest level.
    let mut tail = 1.0;
    for l in (0..gammas.len()).rev() {
        levels[l] = gammas[l] * noise_power * tail;
        tail *= gammas[l] + 1.0;
    }
    Ok(PowerLevelSet {
        levels,
        noise_power,
    })
}

/// Per-level detail of a SIC stability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMargin {
    pub level: usize,
    pub gamma: f64,
    /// Closed-form lower bound `2^(L-l-1)·Γ_L / Π_{l'>l}(Γ_l'+1)` on `Γ_l`.
    pub closed_form_threshold: f64,
    pub closed_form_ok: bool,
    /// Received power at unit noise.
    pub power: f64,
    /// Sum of the weaker received powers at unit noise.
    pub interference: f64,
    pub direct_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicReport {
    /// `v_l > V_l` for every level except the weakest.
    pub stable: bool,
    /// Whether every level clears the closed-form threshold. This is implied by
    /// `stable` but the converse does not hold.
    pub closed_form_holds: bool,
    pub margins: Vec<LevelMargin>,
}

/// Checks that every received level exceeds the sum of the levels decoded after it.
///
/// The direct condition is scale free in the noise power, so levels are built
/// at unit noise.
pub fn check_sic_stability(ladder: &SinrLadder) -> SicReport {
    let gammas = ladder.gammas();
    let big_l = gammas.len();
    let set = power_levels(ladder, 1.0).expect("unit noise is valid");
    let gamma_last = gammas[big_l - 1];

    let mut margins = Vec::with_capacity(big_l.saturating_sub(1));
    let mut tail = gamma_last + 1.0;
    for l in (0..big_l.saturating_sub(1)).rev() {
        let exponent = (big_l - l - 2) as i32;
        let threshold = 2f64.powi(exponent) * gamma_last / tail;
        let interference = set.interference(l);
        margins.push(LevelMargin {
            level: l,
            gamma: gammas[l],
            closed_form_threshold: threshold,
            closed_form_ok: gammas[l] > threshold,
            power: set.level(l),
            interference,
            direct_ok: set.level(l) > interference,
        });
        tail *= gammas[l] + 1.0;
    }
    margins.reverse();

    SicReport {
        stable: margins.iter().all(|m| m.direct_ok),
        closed_form_holds: margins.iter().all(|m| m.closed_form_ok),
        margins,
    }
}

/// Transmit power `v / ĥ²` needed to land at received level `v`.
///
/// Returns `None` when the gain estimate cannot support any transmission.
pub fn transmit_power(level: f64, gain_estimate: f64) -> Option<f64> {
    if !(gain_estimate > 0.0) || !gain_estimate.is_finite() {
        return None;
    }
    Some(level / (gain_estimate * gain_estimate))
}

/// Indices of the levels whose transmit power fits within `budget`.
pub fn feasible_power_levels(set: &PowerLevelSet, gain_estimate: f64, budget: f64) -> Vec<usize> {
    set.levels()
        .iter()
        .enumerate()
        .filter_map(|(l, &v)| match transmit_power(v, gain_estimate) {
            Some(p) if p <= budget => Some(l),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    const NOISE: f64 = 1e-14;

    fn paper_ladder() -> SinrLadder {
        SinrLadder::new(vec![251.1886, 2.9992]).unwrap()
    }

    /// Forward substitution on `v_l - Γ_l·Σ_{l'>l} v_l' = Γ_l·N`, solved from the
    /// weakest level upwards without using the closed-form product.
    fn levels_by_substitution(gammas: &[f64], noise: f64) -> Vec<f64> {
        let mut v = vec![0.0; gammas.len()];
        for l in (0..gammas.len()).rev() {
            let weaker: f64 = v[l + 1..].iter().sum();
            v[l] = gammas[l] * (weaker + noise);
        }
        v
    }

    #[test]
    fn rate_examples() {
        let r = rate_for_sinr(251.1886, 2.5e6).unwrap();
        assert_relative_eq!(r, 1.9946e7, max_relative = 1e-4);
        assert_eq!(rate_for_sinr(0.0, 2.5e6).unwrap(), 0.0);
        // 2.5e6 · log2(3.9992)
        let r = rate_for_sinr(db_to_linear(4.77), 2.5e6).unwrap();
        assert_relative_eq!(r, 4.999e6, max_relative = 2e-4);
    }

    #[test]
    fn rate_rejects_negative_inputs() {
        assert!(matches!(rate_for_sinr(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(rate_for_sinr(1.0, 0.0), Err(Error::Domain(_))));
        assert!(rate_for_sinr(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn single_level_is_empty_product() {
        let ladder = SinrLadder::new(vec![7.5]).unwrap();
        let set = power_levels(&ladder, NOISE).unwrap();
        assert_eq!(set.levels(), &[7.5 * NOISE]);
    }

    #[test]
    fn paper_ladder_levels() {
        let set = power_levels(&paper_ladder(), NOISE).unwrap();
        let expected = levels_by_substitution(&[251.1886, 2.9992], NOISE);
        assert_relative_eq!(set.level(1), 2.9992e-14, max_relative = 1e-12);
        assert_relative_eq!(set.level(0), 1.00455e-11, max_relative = 1e-5);
        for (a, b) in set.levels().iter().zip(&expected) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
    }

    #[test]
    fn paper_ladder_is_sic_stable() {
        let report = check_sic_stability(&paper_ladder());
        assert!(report.stable);
        assert!(report.closed_form_holds);
        assert_eq!(report.margins.len(), 1);
        let set = power_levels(&paper_ladder(), NOISE).unwrap();
        assert!(set.level(0) > set.level(1));
    }

    #[test]
    fn boundary_of_last_pair_is_unstable() {
        // Γ_L + 1 a power of two keeps Γ_L/(Γ_L+1)·(Γ_L+1) exact.
        for gl in [1.0, 3.0, 7.0, 15.0] {
            let ladder = SinrLadder::relaxed(vec![gl / (gl + 1.0), gl]).unwrap();
            let report = check_sic_stability(&ladder);
            assert!(!report.stable, "Γ_L = {gl}");
            assert!(!report.closed_form_holds, "Γ_L = {gl}");
        }
    }

    #[test]
    fn single_level_is_vacuously_stable() {
        let report = check_sic_stability(&SinrLadder::new(vec![0.01]).unwrap());
        assert!(report.stable && report.closed_form_holds);
        assert!(report.margins.is_empty());
    }

    #[test]
    fn closed_form_is_weaker_than_direct_condition() {
        // Clears 2Γ_3/Π but not 1 - 1/Π on the first level.
        let ladder = SinrLadder::new(vec![0.21, 0.2, 0.1]).unwrap();
        let report = check_sic_stability(&ladder);
        assert!(report.closed_form_holds);
        assert!(!report.stable);
    }

    #[test]
    fn ladder_validation() {
        assert!(SinrLadder::new(vec![]).is_err());
        assert!(SinrLadder::new(vec![2.0, 2.0]).is_err());
        assert!(SinrLadder::new(vec![1.0, 2.0]).is_err());
        assert!(SinrLadder::new(vec![1.0, -2.0]).is_err());
        assert!(SinrLadder::relaxed(vec![2.0, 2.0]).is_ok());
        let db = SinrLadder::from_db(&[24.0, 4.77], LadderOrder::Strict).unwrap();
        assert_relative_eq!(db.gamma(0), 251.1886, max_relative = 1e-6);
        assert_relative_eq!(db.gamma(1), 2.9992, max_relative = 1e-4);
    }

    #[test]
    fn transmit_power_examples() {
        assert_eq!(transmit_power(3e-14, 1.0), Some(3e-14));
        let h = 10f64.powf(-9.05).sqrt();
        assert_relative_eq!(
            transmit_power(1.0046e-11, h).unwrap(),
            0.01127,
            max_relative = 1e-3
        );
        assert_eq!(transmit_power(1.0, 0.0), None);
    }

    #[test]
    fn feasible_levels_examples() {
        let set = power_levels(&paper_ladder(), NOISE).unwrap();
        let h = 10f64.powf(-9.05).sqrt();
        assert_eq!(feasible_power_levels(&set, h, f64::INFINITY), vec![0, 1]);
        assert!(feasible_power_levels(&set, h, 0.0).is_empty());
        assert_eq!(feasible_power_levels(&set, h, 1.0), vec![0, 1]);
        // Only the weak level fits a 1 mW budget at 100 m.
        assert_eq!(feasible_power_levels(&set, h, 1e-3), vec![1]);
        assert!(feasible_power_levels(&set, 0.0, 1.0).is_empty());
    }

    fn strict_ladder() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..500.0, 1..6).prop_map(|mut g| {
            g.sort_by(|a, b| b.partial_cmp(a).unwrap());
            g.dedup();
            g
        })
    }

    proptest! {
        #[test]
        fn sinr_round_trip(gammas in strict_ladder(), noise_exp in -16i32..-8) {
            let noise = 10f64.powi(noise_exp);
            let ladder = SinrLadder::new(gammas.clone()).unwrap();
            let set = power_levels(&ladder, noise).unwrap();
            for (l, g) in gammas.iter().enumerate() {
                let rel = (set.sinr(l) - g).abs() / g;
                prop_assert!(rel < 1e-9, "level {} rel err {}", l, rel);
            }
            prop_assert!(set.is_strictly_descending());
        }

        #[test]
        fn stable_implies_descending_and_dominant(gammas in prop::collection::vec(0.01f64..50.0, 1..6)) {
            let ladder = SinrLadder::relaxed(gammas).unwrap();
            let report = check_sic_stability(&ladder);
            if report.stable {
                let set = power_levels(&ladder, 1.0).unwrap();
                prop_assert!(set.is_strictly_descending());
                for l in 0..set.len() - 1 {
                    prop_assert!(set.level(l) > set.interference(l));
                }
                prop_assert!(report.closed_form_holds);
            }
        }

        #[test]
        fn rate_monotone_and_linear(g in 0.0f64..1e4, dg in 1e-6f64..10.0, bw in 1.0f64..1e8) {
            let r = rate_for_sinr(g, bw).unwrap();
            prop_assert!(rate_for_sinr(g + dg, bw).unwrap() > r);
            let r2 = rate_for_sinr(g, 2.0 * bw).unwrap();
            prop_assert!((r2 - 2.0 * r).abs() <= 1e-9 * r2.max(1.0));
        }

        #[test]
        fn transmit_power_inverts_gain(v in 1e-16f64..1.0, h in 1e-8f64..10.0) {
            let p = transmit_power(v, h).unwrap();
            prop_assert!((p * h * h - v).abs() <= 1e-12 * v);
        }

        #[test]
        fn feasible_set_monotone_in_budget(b1 in 0.0f64..2.0, extra in 0.0f64..2.0, h2_db in -110.0f64..-80.0) {
            let set = power_levels(&paper_ladder(), NOISE).unwrap();
            let h = db_to_linear(h2_db).sqrt();
            let small = feasible_power_levels(&set, h, b1);
            let large = feasible_power_levels(&set, h, b1 + extra);
            prop_assert!(small.iter().all(|l| large.contains(l)));
        }
    }
}
