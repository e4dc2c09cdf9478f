use std::sync::OnceLock;

use noma_son::harness::{simulate, simulate_seed, RunConfig, SeedOutcome};
use noma_son::schedule::{epoch_schedule, ExploreMode, ScheduleParams};

const SEEDS: [u64; 4] = [0, 1, 2, 3];

fn config(mode: ExploreMode) -> RunConfig {
    let mut cfg = RunConfig::paper();
    cfg.seeds = SEEDS.to_vec();
    cfg.horizons.channel = 500_000;
    cfg.horizons.power = 200_000;
    cfg.algorithm.explore_mode = mode;
    cfg.output.trace_stride = 1000;
    cfg
}

fn runs(mode: ExploreMode) -> &'static [SeedOutcome] {
    static CONSTANT: OnceLock<Vec<SeedOutcome>> = OnceLock::new();
    static DECREASING: OnceLock<Vec<SeedOutcome>> = OnceLock::new();
    let cell = match mode {
        ExploreMode::Constant => &CONSTANT,
        ExploreMode::Decreasing => &DECREASING,
    };
    cell.get_or_init(|| simulate(&config(mode)).unwrap())
}

fn both() -> impl Iterator<Item = &'static SeedOutcome> {
    runs(ExploreMode::Constant).iter().chain(runs(ExploreMode::Decreasing))
}

#[test]
fn power_exploitation_beats_exploration_in_every_epoch() {
    for o in both() {
        let p = o.power.as_ref().unwrap();
        let epochs: Vec<u32> = p.epochs.iter().map(|e| e.epoch).collect();
        for l in epochs {
            let rate = |phase: &str| {
                p.phase_rates
                    .iter()
                    .find(|r| r.epoch == l && r.phase == phase && r.slots > 0)
                    .map(|r| r.mean_rate_bps)
            };
            if let (Some(explore), Some(exploit)) = (rate("explore"), rate("exploit")) {
                assert!(
                    explore < exploit,
                    "seed {} epoch {l}: explore {explore} vs exploit {exploit}",
                    o.seed
                );
            }
        }
    }
}

#[test]
fn decreasing_exploration_costs_less_exploration_regret() {
    let constant = runs(ExploreMode::Constant);
    let decreasing = runs(ExploreMode::Decreasing);
    for (c, d) in constant.iter().zip(decreasing) {
        assert_eq!(c.seed, d.seed);
        let (cc, dc) = (c.channel.as_ref().unwrap(), d.channel.as_ref().unwrap());
        assert!(cc.epochs.len() > 1, "needs a second epoch to differ");
        assert!(
            dc.phase_regret.explore < cc.phase_regret.explore,
            "seed {}: {} vs {}",
            c.seed,
            dc.phase_regret.explore,
            cc.phase_regret.explore
        );
    }
}

#[test]
fn phase_regret_adds_up_to_the_total() {
    for o in both() {
        let c = o.channel.as_ref().unwrap();
        let r = c.phase_regret;
        assert!((r.explore + r.matching + r.exploit - c.total_regret).abs() <= 1e-6 * c.total_regret.max(1.0));
        let p = o.power.as_ref().unwrap();
        let r = p.phase_regret;
        assert!((r.explore + r.matching + r.exploit - p.total_regret).abs() <= 1e-6 * p.total_regret.max(1.0));
    }
}

#[test]
fn regret_curves_never_decrease() {
    for o in both() {
        for curve in [&o.channel.as_ref().unwrap().regret, &o.power.as_ref().unwrap().regret] {
            assert!(!curve.is_empty());
            for w in curve.windows(2) {
                assert!(w[1].t > w[0].t);
                assert!(w[1].regret >= w[0].regret - 1e-9, "seed {} at t = {}", o.seed, w[1].t);
            }
        }
    }
}

#[test]
fn epochs_follow_the_schedule() {
    for mode in [ExploreMode::Constant, ExploreMode::Decreasing] {
        let cfg = config(mode);
        for o in runs(mode) {
            let c = o.channel.as_ref().unwrap();
            let params = ScheduleParams {
                explore_len: c.explore_len,
                c1: cfg.algorithm.c1,
                c2: cfg.algorithm.c2,
                delta: cfg.algorithm.delta,
                mode,
            };
            let mut start = 0;
            for e in &c.epochs {
                let plan = epoch_schedule(e.epoch, &params).unwrap();
                assert_eq!(e.exploit_start, start + plan.explore + plan.matching, "epoch {}", e.epoch);
                start += plan.total();
            }
            let first = epoch_schedule(1, &params).unwrap();
            assert_eq!(c.first_epoch_end, first.total());
        }
    }
}

#[test]
fn convergence_time_is_slots_times_slot_duration() {
    let slot = RunConfig::paper().output.slot_duration_s;
    for o in both() {
        let c = o.channel.as_ref().unwrap();
        match (c.convergence_slot, c.convergence_seconds) {
            (Some(s), Some(secs)) => {
                assert!((secs - s as f64 * slot).abs() < 1e-12);
                assert!(c.final_optimal);
            }
            (None, None) => assert!(!c.final_optimal),
            other => panic!("inconsistent convergence {other:?}"),
        }
        let p = o.power.as_ref().unwrap();
        if let (Some(s), Some(secs)) = (p.convergence_slot, p.convergence_seconds) {
            assert!((secs - s as f64 * slot).abs() < 1e-12);
        }
    }
}

#[test]
fn trace_runs_channel_then_power() {
    for o in both() {
        let first_power = o.trace.iter().position(|r| r.stage == "power").unwrap();
        assert!(o.trace[..first_power].iter().all(|r| r.stage == "channel"));
        assert!(o.trace[first_power..].iter().all(|r| r.stage == "power"));
        for w in o.trace[..first_power].windows(2).chain(o.trace[first_power..].windows(2)) {
            assert!(w[1].t > w[0].t);
        }
        assert!(o.trace[first_power..].iter().all(|r| r.sum_rate_bps.is_some()));
    }
}

#[test]
fn seeds_are_reproducible() {
    let cfg = config(ExploreMode::Constant);
    let again = simulate_seed(&cfg, SEEDS[1]).unwrap();
    assert_eq!(&again, &runs(ExploreMode::Constant)[1]);
}

