//! Command-line harness for the BSP sorting library.
//!
//! Subcommands: `run` one benchmark, `table` a size-by-distribution sweep,
//! `phases` a per-phase breakdown, `predict` analytic efficiency tables,
//! `gen` input files, `verify` an output file against its input. Exit status
//! is 0 only when all verification verdicts pass.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bsp_sort::benchgen::{self, DistKind, DistributionSpec};
use bsp_sort::bsp::{BspParams, ExecMode};
use bsp_sort::costmodel::{self, MachinePreset};
use bsp_sort::harness::{
    self, execute_run, Algo, BenchmarkSuite, FileVerdict, OutputFormat, RunConfig,
};
use bsp_sort::kernels::SeqSorter;

#[derive(Parser)]
#[command(name = "bspsort", version, about = "BSP sorting benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MachineArgs {
    /// Machine preset for L and g (see also BSPSORT_PRESET_FILE)
    #[arg(long, default_value = "t3d-16")]
    preset: String,
    /// Worker scheduling: parallel threads or serialized for debugging
    #[arg(long, default_value = "par", value_parser = parse_mode)]
    mode: ExecMode,
}

fn parse_mode(text: &str) -> Result<ExecMode, String> {
    match text {
        "par" | "parallel" => Ok(ExecMode::Parallel),
        "seq" | "sequential" => Ok(ExecMode::Sequential),
        _ => Err("expected par|seq".into()),
    }
}

fn parse_dist(text: &str) -> Result<DistKind, String> {
    DistKind::parse(text).map_err(|e| e.to_string())
}

fn parse_algo(text: &str) -> Result<Algo, String> {
    Algo::parse(text).map_err(|e| e.to_string())
}

fn parse_seq(text: &str) -> Result<SeqSorter, String> {
    match text {
        "quick" => Ok(SeqSorter::Quick),
        "radix" => Ok(SeqSorter::Radix),
        _ => Err("expected quick|radix".into()),
    }
}

fn parse_format(text: &str) -> Result<OutputFormat, String> {
    OutputFormat::parse(text).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one generated input and verify the output
    Run {
        /// dsr|dsq|rsr|rsq|ran-baseline
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        /// u|g|b|gg:<g>|s|dd|wr
        #[arg(long, value_parser = parse_dist, default_value = "u")]
        dist: DistKind,
        /// Total keys (must be divisible by p)
        #[arg(long)]
        n: u64,
        /// Logical processors (power of two for dsr/dsq/rsr/rsq)
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Oversampling control: omega (dsr/dsq) or omega^2 (rsr/rsq/ran-baseline)
        #[arg(long)]
        omega: Option<f64>,
        /// Sequential sorter for ran-baseline
        #[arg(long, value_parser = parse_seq)]
        seq: Option<SeqSorter>,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        /// Repeat with consecutive seeds and report imbalance statistics
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, value_parser = parse_format, default_value = "text")]
        format: OutputFormat,
        /// Dump the sorted output as little-endian i64 (rank order)
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Dump the generated input as little-endian i64 (rank order)
        #[arg(long)]
        dump_input: Option<PathBuf>,
        /// Skip output verification
        #[arg(long)]
        no_verify: bool,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Size-by-distribution mean-seconds table for one algorithm
    Table {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        /// Comma-separated total sizes
        #[arg(long, value_delimiter = ',', default_value = "1048576")]
        sizes: Vec<u64>,
        /// Comma-separated distributions (default: all seven)
        #[arg(long, value_delimiter = ',', value_parser = parse_dist)]
        dists: Option<Vec<DistKind>>,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Repetitions per cell (mean reported)
        #[arg(long, default_value_t = 4)]
        reps: u32,
        #[arg(long)]
        no_verify: bool,
        #[arg(long, value_parser = parse_format, default_value = "text")]
        format: OutputFormat,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Phase time and percentage breakdown over processor counts
    Phases {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[arg(long, value_parser = parse_dist, default_value = "u")]
        dist: DistKind,
        #[arg(long, value_delimiter = ',', default_value = "1048576")]
        sizes: Vec<u64>,
        /// Comma-separated processor counts
        #[arg(long, value_delimiter = ',', default_value = "4")]
        procs: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        #[arg(long, value_parser = parse_format, default_value = "text")]
        format: OutputFormat,
        #[command(flatten)]
        machine: MachineArgs,
    },
    /// Analytic efficiency predictions over machine presets
    Predict {
        #[arg(long, value_parser = parse_algo)]
        algo: Algo,
        #[arg(long, default_value_t = 1 << 23)]
        n: u64,
        /// Preset names, or "all" for the whole catalog
        #[arg(long, value_delimiter = ',', default_value = "all")]
        presets: Vec<String>,
        /// Override the preset processor count
        #[arg(long)]
        p: Option<usize>,
        /// omega (det) or omega^2 (randomized); defaults per algorithm
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, value_parser = parse_format, default_value = "text")]
        format: OutputFormat,
    },
    /// Generate a benchmark input file (little-endian i64, rank order)
    Gen {
        #[arg(long, value_parser = parse_dist)]
        dist: DistKind,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a dumped output file against the sorted input file
    Verify { input: PathBuf, output: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}

fn machine_params(machine: &MachineArgs, p: usize) -> bsp_sort::Result<BspParams> {
    let preset = costmodel::find_preset(&machine.preset)?;
    Ok(preset.params_with_p(p))
}

fn run(cli: Cli) -> bsp_sort::Result<ExitCode> {
    match cli.command {
        Command::Run {
            algo,
            dist,
            n,
            p,
            seed,
            omega,
            seq,
            reps,
            trials,
            format,
            dump,
            dump_input,
            no_verify,
            machine,
        } => {
            let cfg = RunConfig {
                algo,
                dist: DistributionSpec { kind: dist, n, p, seed },
                omega,
                seq_override: seq,
                params: machine_params(&machine, p)?,
                preset_name: machine.preset.clone(),
                mode: machine.mode,
                verify: !no_verify,
                reps,
            };
            if let Some(trials) = trials {
                let stats = harness::imbalance_trials(&cfg, trials)?;
                match format {
                    OutputFormat::Json => {
                        println!("{}", serde_json::to_string_pretty(&stats).unwrap())
                    }
                    _ => {
                        println!(
                            "{} trials of [{}] on [{}] n={} p={}: expansion <= {:.4} in {}/{} runs, max {:.4}",
                            stats.trials,
                            algo.label(),
                            dist.label(),
                            n,
                            p,
                            stats.target_expansion,
                            stats.within_target,
                            stats.trials,
                            stats.max_expansion
                        );
                    }
                }
                return Ok(ExitCode::SUCCESS);
            }
            if let Some(path) = &dump_input {
                benchgen::dump_keys(path, &benchgen::gen(&cfg.dist)?)?;
            }
            let report = execute_run(&cfg)?;
            if let Some(path) = &dump {
                let inputs = benchgen::gen(&cfg.dist)?;
                let opts = bsp_sort::bsp::RunOptions { mode: cfg.mode, ..Default::default() };
                let (outcome, _) = harness::run_sort_once::<i64>(
                    algo, inputs, omega, seq, seed, &cfg.params, &opts,
                )?;
                benchgen::dump_keys(path, &outcome.outputs)?;
            }
            match format {
                OutputFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
                OutputFormat::Csv => {
                    println!("algo,dist,n,p,seed,seconds,min_seconds,supersteps,max_h,n_max,passed");
                    println!(
                        "{},{},{},{},{},{:.6},{:.6},{},{},{},{}",
                        report.algo,
                        report.dist,
                        report.n,
                        report.p,
                        report.seed,
                        report.seconds,
                        report.min_seconds,
                        report.supersteps,
                        report.max_h,
                        report.imbalance.n_max_observed,
                        report.passed()
                    );
                }
                OutputFormat::Text => print!("{}", harness::render_run_text(&report)),
            }
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Table { algo, sizes, dists, p, seed, reps, no_verify, format, machine } => {
            let suite = BenchmarkSuite {
                algo,
                sizes,
                dists: dists.unwrap_or_else(harness::all_dists),
                p,
                seed,
                reps,
                params: machine_params(&machine, p)?,
                preset_name: machine.preset.clone(),
                mode: machine.mode,
                verify: !no_verify,
            };
            let reports = suite.run()?;
            print!("{}", harness::render_table(&reports, format)?);
            Ok(if reports.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Phases { algo, dist, sizes, procs, seed, reps, format, machine } => {
            let mut reports = Vec::new();
            for &n in &sizes {
                for &p in &procs {
                    let cfg = RunConfig {
                        algo,
                        dist: DistributionSpec { kind: dist, n, p, seed },
                        omega: None,
                        seq_override: None,
                        params: machine_params(&machine, p)?,
                        preset_name: machine.preset.clone(),
                        mode: machine.mode,
                        verify: false,
                        reps,
                    };
                    reports.push(execute_run(&cfg)?);
                }
            }
            print!("{}", harness::render_phases(&reports, format)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { algo, n, presets, p, omega, format } => {
            let catalog = costmodel::preset_catalog()?;
            let chosen: Vec<MachinePreset> = if presets.len() == 1 && presets[0] == "all" {
                catalog
            } else {
                presets
                    .iter()
                    .map(|name| costmodel::find_preset(name))
                    .collect::<bsp_sort::Result<_>>()?
            };
            let mut preds = Vec::new();
            for preset in &chosen {
                let p = p.unwrap_or(preset.p);
                let params = preset.params_with_p(p);
                let lgn = (n as f64).log2();
                let omega = omega.unwrap_or(if algo.deterministic() { lgn.log2() } else { lgn });
                let w = if algo.deterministic() { omega } else { omega.sqrt() };
                preds.push(match algo {
                    Algo::Dsr | Algo::Dsq => costmodel::predict_det(n, p, &params, w),
                    Algo::Rsr | Algo::Rsq => costmodel::predict_iran(n, p, &params, w),
                    Algo::RanBaseline => costmodel::predict_ran(n, p, &params, w),
                });
            }
            print!("{}", harness::render_predictions(&preds, format)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { dist, n, p, seed, out } => {
            let spec = DistributionSpec { kind: dist, n, p, seed };
            benchgen::dump_keys(&out, &benchgen::gen(&spec)?)?;
            println!("wrote {} keys to {} ({})", n, out.display(), benchgen::describe(&spec));
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { input, output } => match harness::verify_files(&input, &output)? {
            FileVerdict::Pass { n } => {
                println!("pass: {} keys sorted and a permutation of the input", n);
                Ok(ExitCode::SUCCESS)
            }
            FileVerdict::OrderMismatch { first_bad_index } => {
                println!("FAIL: output deviates from sorted order at index {}", first_bad_index);
                Ok(ExitCode::FAILURE)
            }
            FileVerdict::MultisetMismatch { detail } => {
                println!("FAIL: output is not a permutation of the input: {}", detail);
                Ok(ExitCode::FAILURE)
            }
        },
    }
}
