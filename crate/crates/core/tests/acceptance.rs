//! End-to-end acceptance checks. Runs every criterion, prints one
//! `criterion N [PASS|FAIL]` line for each in order, and exits non-zero when
//! any criterion is not met. An argument filters criteria by name.

use std::cell::RefCell;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noma_son::actions::ChannelSet;
use noma_son::channel_agent::{ApChannelAgent, ChannelAgentParams};
use noma_son::env::{build_power_rewards, generate_scenario, Environment, ScenarioConfig};
use noma_son::harness::fit::LogSquareFit;
use noma_son::harness::run::{RegretPoint, SeedOutcome};
use noma_son::harness::{fit_log_square, simulate, write_run, Method, RunConfig};
use noma_son::noma::{check_sic_stability, power_levels, rate_for_sinr, LadderOrder, SinrLadder};
use noma_son::oracle::{phase_length_bounds, solve_channel, solve_power, BoundsInput, DEFAULT_PROFILE_CAP};
use noma_son::schedule::{ExploreMode, ScheduleParams};
use noma_son::ucb::{composite_arms, UcbAgent};

thread_local! {
    static LINE: RefCell<Option<(bool, String)>> = const { RefCell::new(None) };
}

fn report(n: u32, name: &str, pass: bool, detail: impl AsRef<str>) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2} [{tag}] {name}: {}", detail.as_ref());
    LINE.with(|l| *l.borrow_mut() = Some((pass, line)));
}

const SEEDS: u64 = 10;

fn paper_runs(mode: ExploreMode, method: Method) -> Vec<SeedOutcome> {
    let mut cfg = RunConfig::paper();
    cfg.seeds = (0..SEEDS).collect();
    cfg.algorithm.explore_mode = mode;
    cfg.method = method;
    cfg.output.trace_stride = 1000;
    simulate(&cfg).expect("simulation runs")
}

fn constant_runs() -> &'static [SeedOutcome] {
    static RUNS: OnceLock<Vec<SeedOutcome>> = OnceLock::new();
    RUNS.get_or_init(|| paper_runs(ExploreMode::Constant, Method::Proposed))
}

fn decreasing_runs() -> &'static [SeedOutcome] {
    static RUNS: OnceLock<Vec<SeedOutcome>> = OnceLock::new();
    RUNS.get_or_init(|| paper_runs(ExploreMode::Decreasing, Method::Proposed))
}

fn ucb_runs() -> &'static [SeedOutcome] {
    static RUNS: OnceLock<Vec<SeedOutcome>> = OnceLock::new();
    RUNS.get_or_init(|| paper_runs(ExploreMode::Constant, Method::Ucb))
}

fn mean_curve(curves: &[&Vec<RegretPoint>]) -> Vec<(f64, f64)> {
    let n = curves[0].len();
    assert!(curves.iter().all(|c| c.len() == n));
    (0..n)
        .map(|i| {
            let t = curves[0][i].t as f64;
            (t, curves.iter().map(|c| c[i].regret).sum::<f64>() / curves.len() as f64)
        })
        .collect()
}

fn channel_fit(runs: &[SeedOutcome], t_start: u64) -> LogSquareFit {
    let curves: Vec<_> = runs.iter().map(|o| &o.channel.as_ref().unwrap().regret).collect();
    fit_log_square(&mean_curve(&curves), t_start as f64, None).unwrap()
}

fn criterion_01_rates_and_power_ladder() {
    let ladder = SinrLadder::from_db(&[24.0, 4.77], LadderOrder::Strict).unwrap();
    let bw = 2.5e6;
    let rates: Vec<f64> = ladder.gammas().iter().map(|&g| rate_for_sinr(g, bw).unwrap()).collect();
    // Shannon by hand: 10^(dB/10) then B·log2(1 + Γ).
    let by_hand: Vec<f64> = [24.0f64, 4.77].iter().map(|db| bw * (1.0 + 10f64.powf(db / 10.0)).log2()).collect();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let rates_ok = rel(rates[0], 20e6) <= 5e-3 && rel(rates[1], 5e6) <= 5e-3;
    let hand_ok = rates.iter().zip(&by_hand).all(|(a, b)| rel(*a, *b) < 1e-12);

    let noise = ScenarioConfig::paper().noise_power_w();
    let set = power_levels(&ladder, noise).unwrap();
    let v = set.levels();
    let worst_round_trip = (0..v.len())
        .map(|l| {
            let sinr = v[l] / (v[l + 1..].iter().sum::<f64>() + noise);
            rel(sinr, ladder.gamma(l))
        })
        .fold(0.0, f64::max);
    let stable = check_sic_stability(&ladder).stable;
    report(
        1,
        "rates, ladder round trip, SIC stability",
        rates_ok && hand_ok && worst_round_trip <= 1e-9 && stable,
        format!(
            "rates {:.4} / {:.4} Mbps, round-trip error {worst_round_trip:.1e}, stable {stable}",
            rates[0] / 1e6,
            rates[1] / 1e6
        ),
    );
}

fn criterion_02_composite_arm_count() {
    let arms = composite_arms(4, 2, 2).unwrap().len();
    let agent = UcbAgent::new(4, 2, 2, 2.0).unwrap().arm_count();
    // C(4, 2) subsets times 2^2 level pairs.
    let expected = 6 * 4;
    report(2, "composite arm count", arms == expected && agent == expected, format!("{arms} arms"));
}

fn perturb_channel_instance(rng: &mut ChaCha8Rng) -> Option<(bool, f64)> {
    let aps = rng.random_range(1..=4);
    let channels = rng.random_range(1..=4);
    let per_ap = rng.random_range(1..=2.min(channels));
    let solo: Vec<f64> = (0..aps * channels).map(|_| rng.random_range(0.05..1.0)).collect();
    let table = noma_son::env::ChannelRewardTable::from_solo_means(aps, channels, 2, solo, 1.0).unwrap();
    let per = vec![per_ap; aps];
    let sol = solve_channel(&table, &per, DEFAULT_PROFILE_CAP).unwrap();
    if !(sol.delta > 0.0) {
        return None;
    }
    let d = sol.delta * (1.0 - 1e-9);
    let occ = table.occupancy(&sol.profile);
    let used = |k: usize, m: usize, o: usize| sol.profile[k].iter().any(|c| c == m) && occ[m] == o;
    let mut ok = true;
    // Adversarial: shrink every entry the optimum uses, inflate the rest.
    let adv = table
        .with_means(|k, m, o, mu| (if used(k, m, o) { mu - d } else { mu + d }).clamp(0.0, 1.0))
        .unwrap();
    ok &= solve_channel(&adv, &per, DEFAULT_PROFILE_CAP).unwrap().profile == sol.profile;
    for _ in 0..20 {
        let noisy = table
            .with_means(|_, _, _, mu| (mu + rng.random_range(-d..d)).clamp(0.0, 1.0))
            .unwrap();
        ok &= solve_channel(&noisy, &per, DEFAULT_PROFILE_CAP).unwrap().profile == sol.profile;
    }
    Some((ok, sol.delta))
}

fn perturb_power_instance(rng: &mut ChaCha8Rng) -> Option<bool> {
    let channels = rng.random_range(1..=4);
    let aps = rng.random_range(1..=(2 * channels).min(4));
    let mut cfg = ScenarioConfig::with_shape(aps, channels, 1, 2);
    cfg.sinr_weights = Some((0..aps).map(|_| rng.random_range(0.0..=1.0)).collect());
    let sc = generate_scenario(&cfg, rng.random()).unwrap();
    let table = build_power_rewards(&sc, &sc.gains).unwrap();
    let m = rng.random_range(0..channels);
    let mut members: Vec<usize> = (0..aps).filter(|&k| !table.feasible(k, m).is_empty()).collect();
    if members.is_empty() {
        return None;
    }
    while members.len() > 2 {
        members.remove(rng.random_range(0..members.len()));
    }
    let sol = solve_power(&table, m, &members, 2, DEFAULT_PROFILE_CAP).unwrap();
    if !(sol.delta > 0.0) {
        return None;
    }
    let d = sol.delta * (1.0 - 1e-9);
    let used = |k: usize, l: usize| members.iter().zip(&sol.levels).any(|(&a, &b)| a == k && b == l);
    let mut ok = true;
    let adv = table.with_means(|k, mm, l, mu| if mm == m && used(k, l) { mu - d } else { mu + d });
    ok &= solve_power(&adv, m, &members, 2, DEFAULT_PROFILE_CAP).unwrap().levels == sol.levels;
    for _ in 0..20 {
        let noisy = table.with_means(|_, _, _, mu| mu + rng.random_range(-d..d));
        ok &= solve_power(&noisy, m, &members, 2, DEFAULT_PROFILE_CAP).unwrap().levels == sol.levels;
    }
    Some(ok)
}

fn criterion_03_argmax_survives_small_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut channel_pass, mut channel_n, mut skipped) = (0, 0, 0);
    while channel_n < 100 {
        match perturb_channel_instance(&mut rng) {
            Some((ok, _)) => {
                channel_n += 1;
                channel_pass += ok as usize;
            }
            None => skipped += 1,
        }
    }
    let (mut power_pass, mut power_n) = (0, 0);
    while power_n < 100 {
        if let Some(ok) = perturb_power_instance(&mut rng) {
            power_n += 1;
            power_pass += ok as usize;
        }
    }
    report(
        3,
        "argmax invariant under sub-gap perturbations",
        channel_pass == 100 && power_pass == 100,
        format!("channel {channel_pass}/100, power {power_pass}/100 ({skipped} zero-gap channel instances skipped)"),
    );
}

fn criterion_04_ap_count_estimate() {
    let cfg = ScenarioConfig::paper();
    let bounds = phase_length_bounds(&BoundsInput {
        aps: cfg.aps,
        channels: cfg.channels,
        noma_cap: cfg.noma_cap,
        levels: 2,
        delta: 0.1,
        delta_p: 0.1,
        eta: 0.05,
        gamma_e: 0.05,
    })
    .unwrap();
    let slots = bounds.t_k_hat;
    let trials = 200;
    let mut correct = 0;
    for trial in 0..trials {
        let sc = generate_scenario(&cfg, trial).unwrap();
        let env = Environment::new(sc).unwrap();
        let params = ChannelAgentParams {
            schedule: ScheduleParams {
                explore_len: slots,
                c1: 1.0,
                c2: 1,
                delta: 0.0,
                mode: ExploreMode::Constant,
            },
            epsilon: 5e-5,
            c_multiplier: 1.0,
            noma_cap: cfg.noma_cap,
            mu_max: env.channel_rewards().mu_max(),
        };
        let mut agents: Vec<ApChannelAgent> =
            (0..cfg.aps).map(|_| ApChannelAgent::new(cfg.channels, 2, params).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
        let mut actions = vec![ChannelSet::EMPTY; cfg.aps];
        for _ in 0..slots {
            for (a, slot) in agents.iter_mut().zip(actions.iter_mut()) {
                *slot = a.act(&mut rng).unwrap();
            }
            let fb = env.step_channel(&actions, &mut rng).unwrap();
            for (a, f) in agents.iter_mut().zip(&fb) {
                a.observe(f, &mut rng).unwrap();
            }
        }
        if agents.iter().all(|a| a.k_hat() == cfg.aps) {
            correct += 1;
        }
    }
    let rate = correct as f64 / trials as f64;
    report(
        4,
        "AP-count estimate after the uniform exploration bound",
        rate >= 0.95,
        format!("{correct}/{trials} trials with every AP exact after {slots} slots"),
    );
}

fn criterion_05_estimation_accuracy() {
    let errs = |runs: &[SeedOutcome]| -> Vec<f64> {
        runs.iter().map(|o| o.channel.as_ref().unwrap().estimation_error).collect()
    };
    let (c, d) = (errs(constant_runs()), errs(decreasing_runs()));
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    report(
        5,
        "relative estimation error at the end of the channel stage",
        max(&c) <= 5e-4 && max(&d) <= 5e-4,
        format!(
            "constant max {:.2e} mean {:.2e}; decreasing max {:.2e} mean {:.2e}; limit 5e-4 per seed",
            max(&c),
            mean(&c),
            max(&d),
            mean(&d)
        ),
    );
}

fn epoch4_optimal(cfg: &RunConfig, seeds: u64) -> (usize, usize) {
    let mut cfg = cfg.clone();
    cfg.seeds = (0..seeds).collect();
    cfg.horizons.channel = 750_000;
    cfg.horizons.power = 1_000;
    cfg.output.trace_stride = 10_000;
    let runs = simulate(&cfg).unwrap();
    let hits = runs
        .iter()
        .filter(|o| {
            let c = o.channel.as_ref().unwrap();
            let e = c.epochs.iter().find(|e| e.epoch == 4).expect("epoch 4 reached");
            e.optimal
        })
        .count();
    (hits, runs.len())
}

fn criterion_06_convergence_to_optimum() {
    let shaped = |k, m, n, b| {
        let mut cfg = RunConfig::paper();
        cfg.scenario = ScenarioConfig::with_shape(k, m, n, b);
        cfg
    };
    let (a, an) = epoch4_optimal(&shaped(2, 2, 1, 2), 20);
    let (b, bn) = epoch4_optimal(&shaped(2, 3, 1, 2), 20);
    let (p, pn) = epoch4_optimal(&RunConfig::paper(), 20);
    report(
        6,
        "epoch-4 exploitation profile equals the optimum",
        a == an && b == bn && p as f64 >= 0.8 * pn as f64,
        format!("2x2: {a}/{an}, 2x3: {b}/{bn} (need all); 4x4: {p}/{pn} (need 80%)"),
    );
}

fn criterion_07_channel_regret_shape() {
    let t_start = constant_runs()[0].channel.as_ref().unwrap().first_epoch_end;
    let c = channel_fit(constant_runs(), t_start);
    let d = channel_fit(decreasing_runs(), t_start);
    report(
        7,
        "channel regret follows a·ln(t)² and decreasing exploration lowers a",
        c.r2 >= 0.95 && d.a < c.a,
        format!(
            "constant a = {:.0} (R² {:.3}, centred {:.3}); decreasing a = {:.0} (R² {:.3})",
            c.a, c.r2, c.r2_centered, d.a, d.r2
        ),
    );
}

fn criterion_08_power_regret_much_smaller() {
    let runs = constant_runs();
    let c = channel_fit(runs, runs[0].channel.as_ref().unwrap().first_epoch_end);
    let curves: Vec<_> = runs.iter().map(|o| &o.power.as_ref().unwrap().regret).collect();
    let t0 = runs[0].power.as_ref().unwrap().first_epoch_end;
    let p = fit_log_square(&mean_curve(&curves), t0 as f64, None).unwrap();
    let ratio = p.a / c.a;
    report(
        8,
        "power-stage coefficient below 10% of the channel-stage one",
        ratio < 0.1,
        format!("power a = {:.1} (R² {:.3}), channel a = {:.0}, ratio {ratio:.3}", p.a, p.r2, c.a),
    );
}

fn criterion_09_energy_efficiency() {
    let mean = |runs: &[SeedOutcome], f: fn(&noma_son::harness::run::Converged) -> f64| {
        runs.iter().map(|o| f(&o.converged().unwrap())).sum::<f64>() / runs.len() as f64
    };
    let (p, u) = (constant_runs(), ucb_runs());
    let ee = mean(p, |c| c.energy_efficiency) / mean(u, |c| c.energy_efficiency);
    let rate = mean(p, |c| c.sum_rate_bps) / mean(u, |c| c.sum_rate_bps);
    let (pw_p, pw_u) = (mean(p, |c| c.total_power_w), mean(u, |c| c.total_power_w));
    let pass = ee >= 2.0 && (rate - 1.0).abs() <= 0.05 && pw_p < pw_u;
    let grade = if pass {
        "full"
    } else if (1.5..2.0).contains(&ee) {
        "partial"
    } else {
        "not met"
    };
    report(
        9,
        "energy efficiency against the UCB baseline",
        pass,
        format!(
            "EE ratio {ee:.3}, rate ratio {rate:.3}, power {pw_p:.4} W vs {pw_u:.4} W ({grade})"
        ),
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run_in_pool(threads: usize, cfg: &RunConfig, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let outcomes = simulate(cfg).unwrap();
        write_run(dir, cfg, &outcomes).unwrap();
    });
    dir_bytes(dir)
}

fn criterion_10_deterministic_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut all_same = true;
    let mut files = 0;
    for method in [Method::Proposed, Method::Ucb] {
        let mut cfg = RunConfig::paper();
        cfg.seeds = vec![3, 4, 5];
        cfg.method = method;
        cfg.horizons.channel = 300_000;
        cfg.horizons.power = 60_000;
        cfg.horizons.ucb = 60_000;
        let base = tmp.path().join(format!("{method:?}"));
        let a = run_in_pool(1, &cfg, &base.join("a"));
        let b = run_in_pool(1, &cfg, &base.join("b"));
        let c = run_in_pool(4, &cfg, &base.join("c"));
        files += a.len();
        all_same &= !a.is_empty() && a == b && a == c;
    }
    report(
        10,
        "byte-identical outputs across runs and thread counts",
        all_same,
        format!("{files} files compared three ways"),
    );
}

const CRITERIA: [(&str, fn()); 10] = [
    ("criterion_01_rates_and_power_ladder", criterion_01_rates_and_power_ladder),
    ("criterion_02_composite_arm_count", criterion_02_composite_arm_count),
    ("criterion_03_argmax_survives_small_perturbations", criterion_03_argmax_survives_small_perturbations),
    ("criterion_04_ap_count_estimate", criterion_04_ap_count_estimate),
    ("criterion_05_estimation_accuracy", criterion_05_estimation_accuracy),
    ("criterion_06_convergence_to_optimum", criterion_06_convergence_to_optimum),
    ("criterion_07_channel_regret_shape", criterion_07_channel_regret_shape),
    ("criterion_08_power_regret_much_smaller", criterion_08_power_regret_much_smaller),
    ("criterion_09_energy_efficiency", criterion_09_energy_efficiency),
    ("criterion_10_deterministic_outputs", criterion_10_deterministic_outputs),
];

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panicked".into())
}

fn main() -> ExitCode {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let selected: Vec<_> = CRITERIA
        .iter()
        .filter(|(name, _)| filter.as_ref().is_none_or(|f| name.contains(f.as_str())))
        .collect();
    panic::set_hook(Box::new(|_| {}));
    let results: Vec<(bool, String)> = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|&&(name, f)| {
                s.spawn(move || {
                    let outcome = panic::catch_unwind(AssertUnwindSafe(f));
                    let line = LINE.with(|l| l.borrow_mut().take());
                    match (line, outcome) {
                        (Some(line), Ok(())) => line,
                        (_, Err(p)) => (false, format!("{name} [FAIL] panicked: {}", panic_message(&*p))),
                        (None, Ok(())) => (false, format!("{name} [FAIL] reported nothing")),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("caught above")).collect()
    });
    let _ = panic::take_hook();

    let failed = results.iter().filter(|(pass, _)| !pass).count();
    for (_, line) in &results {
        println!("{line}");
    }
    println!("\nacceptance: {} passed; {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
