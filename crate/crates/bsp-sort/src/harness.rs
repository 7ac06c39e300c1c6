//! Run orchestration: generate inputs, execute a sort, verify the output
//! against the sequential oracle, and emit machine- or human-readable
//! reports and tables.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algos::{
    sort_det_bsp, sort_iran_bsp, sort_ran_bsp, ImbalanceStats, OversamplingConfig, PhaseReport,
    SortOutcome,
};
use crate::benchgen::{self, DistKind, DistributionSpec};
use crate::bsp::{BspParams, CostLedger, ExecMode, RunOptions};
use crate::costmodel::{self, Prediction};
use crate::error::{Error, Result};
use crate::kernels::SeqSorter;
use crate::record::{Record, TaggedKey};

/// The five benchmarked algorithm variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algo {
    /// Deterministic oversampling, radixsort locally.
    Dsr,
    /// Deterministic oversampling, quicksort locally.
    Dsq,
    /// Randomized oversampling (sort-first), radixsort locally.
    Rsr,
    /// Randomized oversampling (sort-first), quicksort locally.
    Rsq,
    /// Traditional sample-sort baseline.
    RanBaseline,
}

impl Algo {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text.to_ascii_lowercase().as_str() {
            "dsr" => Algo::Dsr,
            "dsq" => Algo::Dsq,
            "rsr" => Algo::Rsr,
            "rsq" => Algo::Rsq,
            "ran-baseline" | "ran" => Algo::RanBaseline,
            _ => {
                return Err(Error::config(format!(
                    "unknown algorithm '{}'; expected dsr|dsq|rsr|rsq|ran-baseline",
                    text
                )))
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Algo::Dsr => "dsr",
            Algo::Dsq => "dsq",
            Algo::Rsr => "rsr",
            Algo::Rsq => "rsq",
            Algo::RanBaseline => "ran-baseline",
        }
    }

    pub fn deterministic(&self) -> bool {
        matches!(self, Algo::Dsr | Algo::Dsq)
    }

    /// The sorter the variant name pins down (the baseline takes a flag).
    pub fn sorter(&self, override_: Option<SeqSorter>) -> SeqSorter {
        match self {
            Algo::Dsr | Algo::Rsr => SeqSorter::Radix,
            Algo::Dsq | Algo::Rsq => SeqSorter::Quick,
            Algo::RanBaseline => override_.unwrap_or(SeqSorter::Quick),
        }
    }

    pub fn all() -> [Algo; 5] {
        [Algo::Dsr, Algo::Dsq, Algo::Rsr, Algo::Rsq, Algo::RanBaseline]
    }
}

/// Everything needed to execute one benchmark run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algo: Algo,
    pub dist: DistributionSpec,
    /// Oversampling control: omega for the deterministic family, omega^2 for
    /// the randomized family. Defaults per algorithm when absent.
    pub omega: Option<f64>,
    pub seq_override: Option<SeqSorter>,
    pub params: BspParams,
    pub preset_name: String,
    pub mode: ExecMode,
    pub verify: bool,
    pub reps: u32,
}

impl RunConfig {
    pub fn new(algo: Algo, dist: DistributionSpec) -> Self {
        RunConfig {
            algo,
            dist,
            omega: None,
            seq_override: None,
            params: BspParams { p: dist.p, l: 910.0, g: 1.47 },
            preset_name: "t3d-16".into(),
            mode: ExecMode::Parallel,
            verify: true,
            reps: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verification {
    pub sorted: bool,
    pub permutation: bool,
    pub stability: bool,
    pub bound: bool,
}

impl Verification {
    pub fn all_pass(&self) -> bool {
        self.sorted && self.permutation && self.stability && self.bound
    }
}

/// Machine-readable record of one run (schema_version 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub algo: String,
    pub dist: String,
    pub dist_provenance: String,
    pub n: u64,
    pub p: usize,
    pub omega: f64,
    pub sample_per_proc: u64,
    pub seed: u64,
    pub seq_sorter: String,
    pub mode: String,
    pub preset: String,
    pub oversubscribed: bool,
    pub notes: Vec<String>,
    pub phases: PhaseReport,
    pub imbalance: ImbalanceStats,
    pub supersteps: u64,
    pub total_words: u64,
    pub max_h: u64,
    pub total_charged: f64,
    pub ledger: CostLedger,
    pub prediction: Prediction,
    pub verification: Option<Verification>,
    /// Wall seconds per repetition; `seconds` is their mean.
    pub rep_seconds: Vec<f64>,
    pub seconds: f64,
    pub min_seconds: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verification.as_ref().map(|v| v.all_pass()).unwrap_or(true)
    }
}

/// Replace reserved sentinel keys (`i64::MAX`) by `i64::MAX - 1`; returns how
/// many keys were biased.
pub fn bias_sentinels(keys: &mut [i64]) -> u64 {
    let mut biased = 0;
    for k in keys.iter_mut() {
        if *k == i64::MAX {
            *k = i64::MAX - 1;
            biased += 1;
        }
    }
    biased
}

/// Dispatch one sort call; returns the outcome and the oversampling
/// configuration actually used.
pub fn run_sort_once<R: Record>(
    algo: Algo,
    inputs: Vec<Vec<R>>,
    omega: Option<f64>,
    seq_override: Option<SeqSorter>,
    seed: u64,
    params: &BspParams,
    opts: &RunOptions,
) -> Result<(SortOutcome<R>, OversamplingConfig)> {
    let n: u64 = inputs.iter().map(|v| v.len() as u64).sum();
    let p = params.p;
    let sorter = algo.sorter(seq_override);
    let cfg = if algo.deterministic() {
        OversamplingConfig::deterministic(n, p, omega)?
    } else {
        OversamplingConfig::randomized(n, p, omega)?
    };
    let outcome = match algo {
        Algo::Dsr | Algo::Dsq => sort_det_bsp(inputs, &cfg, sorter, params, opts)?,
        Algo::Rsr | Algo::Rsq => sort_iran_bsp(inputs, &cfg, sorter, seed, params, opts)?,
        Algo::RanBaseline => sort_ran_bsp(inputs, &cfg, sorter, seed, params, opts)?,
    };
    Ok((outcome, cfg))
}

fn predict_for(algo: Algo, n: u64, p: usize, params: &BspParams, omega: f64) -> Prediction {
    match algo {
        Algo::Dsr | Algo::Dsq => costmodel::predict_det(n, p, params, omega),
        Algo::Rsr | Algo::Rsq => costmodel::predict_iran(n, p, params, omega),
        Algo::RanBaseline => costmodel::predict_ran(n, p, params, omega),
    }
}

/// Execute a configured run: generate, sort (`reps` times), verify, predict.
pub fn execute_run(cfg: &RunConfig) -> Result<RunReport> {
    if cfg.params.p != cfg.dist.p {
        return Err(Error::config("machine p and distribution p disagree"));
    }
    if cfg.reps < 1 {
        return Err(Error::config("reps must be >= 1"));
    }
    let opts = RunOptions { mode: cfg.mode, ..Default::default() };
    let mut notes = Vec::new();

    let mut rep_seconds = Vec::with_capacity(cfg.reps as usize);
    let mut first: Option<(SortOutcome<i64>, OversamplingConfig)> = None;
    for _ in 0..cfg.reps {
        let inputs = benchgen::gen(&cfg.dist)?;
        let start = Instant::now();
        let result = run_sort_once::<i64>(
            cfg.algo,
            inputs,
            cfg.omega,
            cfg.seq_override,
            cfg.dist.seed,
            &cfg.params,
            &opts,
        )?;
        rep_seconds.push(start.elapsed().as_secs_f64());
        if first.is_none() {
            first = Some(result);
        }
    }
    let (outcome, oversampling) = first.unwrap();
    notes.extend(oversampling.notes.iter().cloned());

    let verification = if cfg.verify {
        Some(verify_outcome(cfg, &opts, &outcome)?)
    } else {
        None
    };

    let hw = std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1);
    if cfg.dist.p > hw {
        notes.push(format!(
            "p = {} oversubscribes {} hardware threads; timings are indicative only",
            cfg.dist.p, hw
        ));
    }

    let seconds = rep_seconds.iter().sum::<f64>() / rep_seconds.len() as f64;
    let min_seconds = rep_seconds.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(RunReport {
        schema_version: 1,
        algo: cfg.algo.label().into(),
        dist: cfg.dist.kind.label(),
        dist_provenance: benchgen::describe(&cfg.dist),
        n: cfg.dist.n,
        p: cfg.dist.p,
        omega: oversampling.omega,
        sample_per_proc: oversampling.s,
        seed: cfg.dist.seed,
        seq_sorter: cfg.algo.sorter(cfg.seq_override).label().into(),
        mode: match cfg.mode {
            ExecMode::Parallel => "parallel".into(),
            ExecMode::Sequential => "sequential".into(),
        },
        preset: cfg.preset_name.clone(),
        oversubscribed: cfg.dist.p > hw,
        notes,
        phases: outcome.phases,
        imbalance: outcome.imbalance.clone(),
        supersteps: outcome.ledger.supersteps(),
        total_words: outcome.ledger.total_words,
        max_h: outcome.ledger.max_h(),
        total_charged: outcome.ledger.total_charged,
        ledger: outcome.ledger,
        prediction: predict_for(
            cfg.algo,
            cfg.dist.n,
            cfg.dist.p,
            &cfg.params,
            oversampling.omega,
        ),
        verification,
        seconds,
        min_seconds,
        rep_seconds,
    })
}

fn verify_outcome(
    cfg: &RunConfig,
    opts: &RunOptions,
    outcome: &SortOutcome<i64>,
) -> Result<Verification> {
    let inputs = benchgen::gen(&cfg.dist)?;
    let flat: Vec<i64> = outcome.outputs.iter().flatten().copied().collect();
    let sorted = flat.windows(2).all(|w| w[0] <= w[1]);
    let mut oracle: Vec<i64> = inputs.iter().flatten().copied().collect();
    oracle.sort_unstable();
    let permutation = flat == oracle;

    // end-to-end stability is unobservable on bare keys, so rerun the same
    // spec with origin-tagged records and compare against the stable oracle
    let tagged: Vec<Vec<TaggedKey>> = inputs
        .iter()
        .enumerate()
        .map(|(r, arr)| {
            arr.iter()
                .enumerate()
                .map(|(i, &key)| TaggedKey { key, tag: ((r as u64) << 40) | i as u64 })
                .collect()
        })
        .collect();
    let mut stable_oracle: Vec<TaggedKey> = tagged.iter().flatten().copied().collect();
    stable_oracle.sort_by_key(|t| t.key);
    let (shadow, _) = run_sort_once::<TaggedKey>(
        cfg.algo,
        tagged,
        cfg.omega,
        cfg.seq_override,
        cfg.dist.seed,
        &cfg.params,
        opts,
    )?;
    let shadow_flat: Vec<TaggedKey> = shadow.outputs.iter().flatten().copied().collect();
    let stability = shadow_flat == stable_oracle;

    Ok(Verification {
        sorted,
        permutation,
        stability,
        bound: outcome.imbalance.bound_satisfied,
    })
}

/// Repeated seeded runs for imbalance statistics (no verification).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u32,
    pub target_expansion: f64,
    pub within_target: u32,
    pub max_expansion: f64,
    pub expansions: Vec<f64>,
}

pub fn imbalance_trials(cfg: &RunConfig, trials: u32) -> Result<TrialStats> {
    let opts = RunOptions { mode: cfg.mode, ..Default::default() };
    let mut expansions = Vec::with_capacity(trials as usize);
    let mut target = 0.0;
    for t in 0..trials {
        let dist = DistributionSpec { seed: cfg.dist.seed + t as u64, ..cfg.dist };
        let inputs = benchgen::gen(&dist)?;
        let (outcome, oversampling) = run_sort_once::<i64>(
            cfg.algo,
            inputs,
            cfg.omega,
            cfg.seq_override,
            dist.seed,
            &cfg.params,
            &opts,
        )?;
        target = 1.0 + 1.0 / oversampling.omega;
        expansions.push(outcome.imbalance.bucket_expansion);
    }
    let within = expansions.iter().filter(|&&e| e <= target).count() as u32;
    let max = expansions.iter().cloned().fold(0.0f64, f64::max);
    Ok(TrialStats {
        trials,
        target_expansion: target,
        within_target: within,
        max_expansion: max,
        expansions,
    })
}

/// A cross product of runs: one algorithm, several sizes and distributions.
#[derive(Debug, Clone)]
pub struct BenchmarkSuite {
    pub algo: Algo,
    pub sizes: Vec<u64>,
    pub dists: Vec<DistKind>,
    pub p: usize,
    pub seed: u64,
    pub reps: u32,
    pub params: BspParams,
    pub preset_name: String,
    pub mode: ExecMode,
    pub verify: bool,
}

impl BenchmarkSuite {
    pub fn run(&self) -> Result<Vec<RunReport>> {
        if self.reps < 1 {
            return Err(Error::config("repetitions must be >= 1"));
        }
        let mut reports = Vec::new();
        for &n in &self.sizes {
            for &kind in &self.dists {
                let cfg = RunConfig {
                    algo: self.algo,
                    dist: DistributionSpec { kind, n, p: self.p, seed: self.seed },
                    omega: None,
                    seq_override: None,
                    params: self.params,
                    preset_name: self.preset_name.clone(),
                    mode: self.mode,
                    verify: self.verify,
                    reps: self.reps,
                };
                reports.push(execute_run(&cfg)?);
            }
        }
        Ok(reports)
    }
}

/// The seven benchmark distributions in table order.
pub fn all_dists() -> Vec<DistKind> {
    vec![
        DistKind::U,
        DistKind::G,
        DistKind::GG(2),
        DistKind::B,
        DistKind::S,
        DistKind::DD,
        DistKind::WR,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(match text.to_ascii_lowercase().as_str() {
            "text" => OutputFormat::Text,
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            _ => return Err(Error::config(format!("unknown format '{}'", text))),
        })
    }
}

fn size_label(n: u64) -> String {
    const M: u64 = 1024 * 1024;
    const K: u64 = 1024;
    if n % M == 0 {
        format!("{}M", n / M)
    } else if n % K == 0 {
        format!("{}K", n / K)
    } else {
        n.to_string()
    }
}

/// Mean-seconds table, sizes as rows and distributions as columns.
pub fn render_table(reports: &[RunReport], format: OutputFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::config("no runs to tabulate"));
    }
    let mut sizes: Vec<u64> = reports.iter().map(|r| r.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut dists: Vec<String> = Vec::new();
    for r in reports {
        if !dists.contains(&r.dist) {
            dists.push(r.dist.clone());
        }
    }
    let cell = |n: u64, d: &str| -> Option<f64> {
        reports.iter().find(|r| r.n == n && r.dist == d).map(|r| r.seconds)
    };
    match format {
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = sizes
                .iter()
                .map(|&n| {
                    let mut row = serde_json::Map::new();
                    row.insert("size".into(), size_label(n).into());
                    for d in &dists {
                        if let Some(s) = cell(n, d) {
                            row.insert(d.clone(), s.into());
                        }
                    }
                    serde_json::Value::Object(row)
                })
                .collect();
            Ok(serde_json::to_string_pretty(&rows).unwrap())
        }
        OutputFormat::Csv => {
            let mut out = String::from("size");
            for d in &dists {
                out.push(',');
                out.push_str(d);
            }
            out.push('\n');
            for &n in &sizes {
                out.push_str(&size_label(n));
                for d in &dists {
                    out.push(',');
                    if let Some(s) = cell(n, d) {
                        out.push_str(&format!("{:.6}", s));
                    }
                }
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Text => {
            let algo = &reports[0].algo;
            let mut out = format!(
                "mean seconds, algorithm [{}], p = {} ({} reps)\n",
                algo, reports[0].p, reports[0].rep_seconds.len()
            );
            out.push_str(&format!("{:>8}", "size"));
            for d in &dists {
                out.push_str(&format!("{:>10}", format!("[{}]", d)));
            }
            out.push('\n');
            for &n in &sizes {
                out.push_str(&format!("{:>8}", size_label(n)));
                for d in &dists {
                    match cell(n, d) {
                        Some(s) => out.push_str(&format!("{:>10.4}", s)),
                        None => out.push_str(&format!("{:>10}", "-")),
                    }
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Phase table: absolute seconds and percent of total per run column.
pub fn render_phases(reports: &[RunReport], format: OutputFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::config("no runs to tabulate"));
    }
    let labels = ["Ph1", "Ph2", "Ph3", "Ph4", "Ph5", "Ph6", "Ph7"];
    let col_name = |r: &RunReport| format!("{}x{}", size_label(r.n), r.p);
    let extract = |r: &RunReport| -> Vec<f64> {
        r.phases.entries().iter().map(|(_, e)| e.seconds).collect()
    };
    match format {
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "run": col_name(r),
                        "seconds": extract(r),
                        "total": r.phases.total_seconds,
                    })
                })
                .collect();
            Ok(serde_json::to_string_pretty(&rows).unwrap())
        }
        OutputFormat::Csv => {
            let mut out = String::from("phase");
            for r in reports {
                out.push_str(&format!(",{}_s,{}_pct", col_name(r), col_name(r)));
            }
            out.push('\n');
            for (i, label) in labels.iter().enumerate() {
                out.push_str(label);
                for r in reports {
                    let secs = extract(r);
                    let pct = 100.0 * secs[i] / r.phases.total_seconds.max(1e-12);
                    out.push_str(&format!(",{:.6},{:.2}", secs[i], pct));
                }
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Text => {
            let mut out = format!("phase breakdown, algorithm [{}]\n", reports[0].algo);
            out.push_str(&format!("{:<6}", "phase"));
            for r in reports {
                out.push_str(&format!("{:>16}", col_name(r)));
                out.push_str(&format!("{:>8}", "%"));
            }
            out.push('\n');
            for (i, label) in labels.iter().enumerate() {
                out.push_str(&format!("{:<6}", label));
                for r in reports {
                    let secs = extract(r);
                    let pct = 100.0 * secs[i] / r.phases.total_seconds.max(1e-12);
                    out.push_str(&format!("{:>16.4}{:>8.2}", secs[i], pct));
                }
                out.push('\n');
            }
            out.push_str(&format!("{:<6}", "total"));
            for r in reports {
                out.push_str(&format!("{:>16.4}{:>8}", r.phases.total_seconds, "100"));
            }
            out.push('\n');
            Ok(out)
        }
    }
}

/// Prediction table over presets.
pub fn render_predictions(preds: &[Prediction], format: OutputFormat) -> Result<String> {
    if preds.is_empty() {
        return Err(Error::config("no predictions to tabulate"));
    }
    match format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(preds).unwrap()),
        OutputFormat::Csv => {
            let mut out =
                String::from("algo,n,p,omega,pi,mu,efficiency,speedup,efficiency_with_slack,flags\n");
            for pr in preds {
                out.push_str(&format!(
                    "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.2},{:.4},{}\n",
                    pr.algo,
                    pr.n,
                    pr.p,
                    pr.omega,
                    pr.pi,
                    pr.mu,
                    pr.efficiency,
                    pr.speedup,
                    pr.efficiency_with_slack,
                    pr.violated_preconditions.len()
                ));
            }
            Ok(out)
        }
        OutputFormat::Text => {
            let mut out = format!(
                "{:>6} {:>10} {:>5} {:>7} {:>8} {:>8} {:>7} {:>9} {:>10} flags\n",
                "algo", "n", "p", "omega", "pi", "mu", "eff", "speedup", "eff+slack"
            );
            for pr in preds {
                out.push_str(&format!(
                    "{:>6} {:>10} {:>5} {:>7.3} {:>8.4} {:>8.4} {:>7.3} {:>9.2} {:>10.3} {}\n",
                    pr.algo,
                    pr.n,
                    pr.p,
                    pr.omega,
                    pr.pi,
                    pr.mu,
                    pr.efficiency,
                    pr.speedup,
                    pr.efficiency_with_slack,
                    if pr.violated_preconditions.is_empty() {
                        "-".to_string()
                    } else {
                        pr.violated_preconditions.join("; ")
                    }
                ));
            }
            Ok(out)
        }
    }
}

/// Short human-readable summary of one run.
pub fn render_run_text(r: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "[{}] on [{}] n={} p={} seed={} omega={:.3} sample/proc={} ({})\n",
        r.algo, r.dist, r.n, r.p, r.seed, r.omega, r.sample_per_proc, r.dist_provenance
    ));
    out.push_str(&format!(
        "  wall {:.4}s (min {:.4}s over {} reps), supersteps {}, words {}, max h {}, charged {:.0}\n",
        r.seconds,
        r.min_seconds,
        r.rep_seconds.len(),
        r.supersteps,
        r.total_words,
        r.max_h,
        r.total_charged
    ));
    out.push_str(&format!(
        "  imbalance: n_max {} vs {} {:.0} ({}), expansion {:.4}\n",
        r.imbalance.n_max_observed,
        if r.imbalance.bound_is_hard { "hard bound" } else { "whp target" },
        r.imbalance.n_max_bound,
        if r.imbalance.bound_satisfied { "ok" } else { "VIOLATED" },
        r.imbalance.bucket_expansion
    ));
    for (label, e) in r.phases.entries() {
        if e.seconds > 0.0 || e.ops > 0 {
            out.push_str(&format!(
                "  {:<16} {:>9.4}s {:>6.2}% ops {:>12} steps {}..{}\n",
                label,
                e.seconds,
                100.0 * e.seconds / r.phases.total_seconds.max(1e-12),
                e.ops,
                e.first_step,
                e.last_step
            ));
        }
    }
    out.push_str(&format!(
        "  model: pi {:.4} mu {:.4} efficiency {:.3} (with slack {:.3})\n",
        r.prediction.pi, r.prediction.mu, r.prediction.efficiency, r.prediction.efficiency_with_slack
    ));
    match &r.verification {
        Some(v) => out.push_str(&format!(
            "  verify: sorted {} permutation {} stability {} bound {}\n",
            v.sorted, v.permutation, v.stability, v.bound
        )),
        None => out.push_str("  verify: skipped\n"),
    }
    for note in &r.notes {
        out.push_str(&format!("  note: {}\n", note));
    }
    out
}

/// Verdict of comparing a dumped output file against the sorted input file.
#[derive(Debug, Clone, PartialEq)]
pub enum FileVerdict {
    Pass { n: usize },
    /// Same multiset, wrong order: first deviating index.
    OrderMismatch { first_bad_index: usize },
    /// Different multiset entirely.
    MultisetMismatch { detail: String },
}

pub fn verify_files(input: &std::path::Path, output: &std::path::Path) -> Result<FileVerdict> {
    let input_keys = benchgen::load_keys(input)?;
    let output_keys = benchgen::load_keys(output)?;
    let mut oracle = input_keys;
    oracle.sort_unstable();
    if output_keys == oracle {
        return Ok(FileVerdict::Pass { n: oracle.len() });
    }
    if output_keys.len() != oracle.len() {
        return Ok(FileVerdict::MultisetMismatch {
            detail: format!("{} keys in output, {} in input", output_keys.len(), oracle.len()),
        });
    }
    let mut sorted_output = output_keys.clone();
    sorted_output.sort_unstable();
    if sorted_output != oracle {
        let idx = sorted_output.iter().zip(&oracle).position(|(a, b)| a != b).unwrap();
        return Ok(FileVerdict::MultisetMismatch {
            detail: format!(
                "multisets differ (first at sorted position {}: {} vs {})",
                idx, sorted_output[idx], oracle[idx]
            ),
        });
    }
    let first = output_keys.iter().zip(&oracle).position(|(a, b)| a != b).unwrap();
    Ok(FileVerdict::OrderMismatch { first_bad_index: first })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg(algo: Algo, kind: DistKind, n: u64, p: usize) -> RunConfig {
        let mut cfg = RunConfig::new(algo, DistributionSpec { kind, n, p, seed: 1 });
        cfg.preset_name = "test".into();
        cfg
    }

    #[test]
    fn execute_run_verifies() {
        let report = execute_run(&quick_cfg(Algo::Dsr, DistKind::U, 1 << 12, 4)).unwrap();
        assert!(report.passed());
        let v = report.verification.as_ref().unwrap();
        assert!(v.sorted && v.permutation && v.stability && v.bound);
        assert_eq!(report.p, 4);
        assert!(report.seconds > 0.0);
    }

    #[test]
    fn duplicate_distribution_stable_verdict() {
        let report = execute_run(&quick_cfg(Algo::Rsq, DistKind::DD, 1 << 13, 8)).unwrap();
        assert!(report.passed(), "{:?}", report.verification);
    }

    #[test]
    fn identical_spec_identical_non_timing_fields() {
        let cfg = quick_cfg(Algo::Rsr, DistKind::S, 1 << 12, 4);
        let a = execute_run(&cfg).unwrap();
        let b = execute_run(&cfg).unwrap();
        assert_eq!(a.imbalance.n_max_observed, b.imbalance.n_max_observed);
        assert_eq!(a.supersteps, b.supersteps);
        assert_eq!(a.total_words, b.total_words);
        assert_eq!(a.max_h, b.max_h);
        let hs =
            |r: &RunReport| r.ledger.steps.iter().map(|s| (s.x, s.h)).collect::<Vec<_>>();
        assert_eq!(hs(&a), hs(&b));
    }

    #[test]
    fn non_power_of_two_p_rejected() {
        let err = execute_run(&quick_cfg(Algo::Dsr, DistKind::U, 999 * 3, 3)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn suite_and_tables() {
        let suite = BenchmarkSuite {
            algo: Algo::Dsq,
            sizes: vec![1 << 10, 1 << 11],
            dists: vec![DistKind::U, DistKind::DD],
            p: 2,
            seed: 3,
            reps: 2,
            params: BspParams::new(2, 910.0, 1.47).unwrap(),
            preset_name: "test".into(),
            mode: ExecMode::Parallel,
            verify: false,
        };
        let reports = suite.run().unwrap();
        assert_eq!(reports.len(), 4);
        let text = render_table(&reports, OutputFormat::Text).unwrap();
        assert!(text.contains("1K") && text.contains("[dd]"));
        let csv = render_table(&reports, OutputFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 3);
        // single-cell table
        let single = render_table(&reports[..1], OutputFormat::Csv).unwrap();
        assert_eq!(single.lines().count(), 2);
        assert!(render_table(&[], OutputFormat::Text).is_err());

        let phases = render_phases(&reports, OutputFormat::Text).unwrap();
        assert!(phases.contains("Ph2"));
        // percentages sum to ~100 per column
        for r in &reports {
            let total: f64 = r.phases.entries().iter().map(|(_, e)| e.seconds).sum();
            assert!((total - r.phases.total_seconds).abs() <= 1e-9 + 0.001 * total);
        }
    }

    #[test]
    fn imbalance_trials_collects_expansions() {
        let cfg = quick_cfg(Algo::Rsr, DistKind::U, 1 << 12, 4);
        let stats = imbalance_trials(&cfg, 5).unwrap();
        assert_eq!(stats.trials, 5);
        assert_eq!(stats.expansions.len(), 5);
        assert!(stats.max_expansion >= 1.0);
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = execute_run(&quick_cfg(Algo::Dsq, DistKind::B, 1 << 10, 2)).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.schema_version, 1);
        assert_eq!(back.algo, report.algo);
        assert_eq!(back.imbalance.n_max_observed, report.imbalance.n_max_observed);
    }

    #[test]
    fn file_verification_verdicts() {
        let dir = std::env::temp_dir().join(format!("bspsort-harness-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let input = dir.join("in.bin");
        let output = dir.join("out.bin");
        let keys = vec![5i64, 3, 9, 1];
        benchgen::dump_keys(&input, &[keys.clone()]).unwrap();

        benchgen::dump_keys(&output, &[vec![1i64, 3, 5, 9]]).unwrap();
        assert_eq!(verify_files(&input, &output).unwrap(), FileVerdict::Pass { n: 4 });

        benchgen::dump_keys(&output, &[vec![1i64, 5, 3, 9]]).unwrap();
        assert_eq!(
            verify_files(&input, &output).unwrap(),
            FileVerdict::OrderMismatch { first_bad_index: 1 }
        );

        benchgen::dump_keys(&output, &[vec![1i64, 3, 5, 8]]).unwrap();
        assert!(matches!(
            verify_files(&input, &output).unwrap(),
            FileVerdict::MultisetMismatch { .. }
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bias_reserved_keys() {
        let mut keys = vec![1, i64::MAX, i64::MAX, 7];
        assert_eq!(bias_sentinels(&mut keys), 2);
        assert_eq!(keys, vec![1, i64::MAX - 1, i64::MAX - 1, 7]);
    }
}
