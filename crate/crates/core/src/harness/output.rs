use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::run::{MetricsRow, RegretPoint, SeedOutcome};
use crate::error::{Error, ErrorReport, Result};

/// Git-style object hash: SHA-256 over `blob <len>\0<content>`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_regret(path: &Path, rows: &[RegretPoint]) -> Result<()> {
    write_csv(path, rows)
}

fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_csv(path, rows)
}

/// Writes the config and its hash; returns the hash.
pub fn write_config(dir: &Path, cfg: &RunConfig) -> Result<String> {
    let mut text = serde_json::to_string_pretty(cfg)?;
    text.push('\n');
    let hash = content_hash(text.as_bytes());
    write_bytes(&dir.join("config.json"), text.as_bytes())?;
    write_bytes(&dir.join("config.sha256"), format!("{hash}\n").as_bytes())?;
    Ok(hash)
}

#[derive(Serialize)]
struct SeedSummary<'a> {
    config_hash: &'a str,
    #[serde(flatten)]
    outcome: &'a SeedOutcome,
    /// Horizon of the method in seconds at the configured slot duration.
    seconds: f64,
}

/// Writes one seed's files under `dir/seed-<seed>/`.
pub fn write_seed(dir: &Path, cfg: &RunConfig, hash: &str, outcome: &SeedOutcome) -> Result<()> {
    let dir = dir.join(format!("seed-{}", outcome.seed));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_config(&dir, cfg)?;
    write_json(&dir.join("scenario.json"), &outcome.scenario)?;
    write_json(&dir.join("oracle.json"), &outcome.oracle)?;
    write_csv(&dir.join("trace.csv"), &outcome.trace)?;
    let slots = match (&outcome.channel, &outcome.power, &outcome.ucb) {
        (Some(c), Some(p), _) => {
            write_regret(&dir.join("regret_channel.csv"), &c.regret)?;
            write_regret(&dir.join("regret_power.csv"), &p.regret)?;
            write_metrics(&dir.join("metrics.csv"), &p.metrics)?;
            c.horizon + p.horizon
        }
        (_, _, Some(u)) => {
            write_regret(&dir.join("regret_channel.csv"), &u.regret)?;
            write_metrics(&dir.join("metrics.csv"), &u.metrics)?;
            u.horizon
        }
        _ => 0,
    };
    let summary = SeedSummary {
        config_hash: hash,
        outcome,
        seconds: slots as f64 * cfg.output.slot_duration_s,
    };
    write_json(&dir.join("summary.json"), &summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seeds: Vec<SeedLine>,
    pub skipped: Vec<SkippedSeed>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSeed {
    pub seed: u64,
    pub report: ErrorReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedLine {
    pub seed: u64,
    pub channel_optimal: Option<bool>,
    pub power_optimal: Option<bool>,
    pub channel_gap: Option<f64>,
    pub convergence_seconds: Option<f64>,
    pub channel_regret: f64,
    pub power_regret: Option<f64>,
    pub sum_rate_bps: f64,
    pub total_power_w: f64,
    pub energy_efficiency: f64,
}

pub fn summarize(hash: &str, outcomes: &[SeedOutcome]) -> RunSummary {
    let seeds = outcomes
        .iter()
        .map(|o| {
            let conv = o.converged().unwrap_or_default();
            SeedLine {
                seed: o.seed,
                channel_optimal: o.channel.as_ref().map(|c| c.final_optimal),
                power_optimal: o.power.as_ref().map(|p| p.final_optimal),
                channel_gap: o.channel.as_ref().map(|c| c.final_gap),
                convergence_seconds: o.channel.as_ref().and_then(|c| c.convergence_seconds),
                channel_regret: o
                    .channel
                    .as_ref()
                    .map(|c| c.total_regret)
                    .or(o.ucb.as_ref().map(|u| u.total_channel_regret))
                    .unwrap_or(0.0),
                power_regret: o.power.as_ref().map(|p| p.total_regret),
                sum_rate_bps: conv.sum_rate_bps,
                total_power_w: conv.total_power_w,
                energy_efficiency: conv.energy_efficiency,
            }
        })
        .collect();
    RunSummary {
        config_hash: hash.to_string(),
        seeds,
        skipped: Vec::new(),
    }
}

/// Writes every output of a finished run into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, outcomes: &[SeedOutcome]) -> Result<RunSummary> {
    write_outputs(dir, cfg, outcomes, Vec::new())
}

/// Writes the seeds that ran and lists the ones that failed in the summary.
pub fn write_results(dir: &Path, cfg: &RunConfig, results: Vec<(u64, Result<SeedOutcome>)>) -> Result<RunSummary> {
    let mut outcomes = Vec::new();
    let mut skipped = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                log::warn!("seed {seed} skipped: {e}");
                skipped.push(SkippedSeed {
                    seed,
                    report: e.report(),
                });
            }
        }
    }
    write_outputs(dir, cfg, &outcomes, skipped)
}

fn write_outputs(
    dir: &Path,
    cfg: &RunConfig,
    outcomes: &[SeedOutcome],
    skipped: Vec<SkippedSeed>,
) -> Result<RunSummary> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hash = write_config(dir, cfg)?;
    for o in outcomes {
        write_seed(dir, cfg, &hash, o)?;
    }
    let mut summary = summarize(&hash, outcomes);
    summary.skipped = skipped;
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
