//! The parallel sorting algorithms.
//!
//! All three share the superstep engine and the duplicate-transparent
//! machinery: samples are origin-tagged records, so splitter comparisons are
//! strict even on all-equal input, routing preserves sender order, and the
//! final merge breaks ties by sender rank.
//!
//! - [`sort_det_bsp`]: deterministic regular oversampling. Locally sorted
//!   data is sampled at `r*p` evenly spaced positions per processor, the
//!   sample is sorted in parallel (bitonic on blocks), `p-1` evenly spaced
//!   splitters are broadcast, keys are routed in one superstep, and each
//!   processor stably merges what it received. The per-processor key count
//!   after routing is hard-bounded by `(1 + 1/ceil(w))*(n/p) + ceil(w)*p`.
//! - [`sort_iran_bsp`]: same sort-first structure, but each processor draws
//!   `s = 2*w^2*lg n` random sample positions instead; the imbalance target
//!   `(1 + 1/w)*(n/p)` then holds with high probability.
//! - [`sort_ran_bsp`]: the traditional sample-sort baseline — a global
//!   random sample is gathered to rank 0 and sorted there, splitters are
//!   plain keys, every key binary-searches its destination, and received
//!   data is sorted (not merged) locally. Kept for A/B comparison.

use serde::{Deserialize, Serialize};

use crate::bsp::{BspParams, CostLedger, EngineReport, ProcessorContext, RunOptions};
use crate::error::{Error, Result};
use crate::kernels::{
    self, multiway_merge, select_random_sample, select_regular_sample, splitter_search, SeqSorter,
};
use crate::primitives::{
    best_broadcast_arity, bitonic_sort_blocks, broadcast, incoming_counts, route_records,
};
use crate::record::{decode_all, encode_all, Record, SampleRecord};
use crate::rng::Prng;

/// Phase ids used in ledgers and reports.
pub mod phase {
    pub const INIT: u8 = 1;
    pub const SEQSORT: u8 = 2;
    pub const SAMPLING: u8 = 3;
    pub const PREFIX: u8 = 4;
    pub const ROUTING: u8 = 5;
    pub const MERGING: u8 = 6;
    pub const TERMINATION: u8 = 7;
}

const SAMPLE_RNG_DOMAIN: u64 = 0x53414D_504C45; // sampling stream tag

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    Deterministic,
    Randomized,
}

/// Oversampling control: `omega` trades sample size against the worst-case
/// key imbalance after routing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OversamplingConfig {
    pub mode: SampleMode,
    pub omega: f64,
    /// Deterministic oversampling ratio `ceil(omega)`.
    pub r: u64,
    /// Per-processor sample size: `r*p` deterministic, `2*omega^2*lg n` randomized.
    pub s: u64,
    /// Clamps applied and analytic preconditions not met (informational).
    pub notes: Vec<String>,
}

impl OversamplingConfig {
    /// Deterministic configuration; `omega` defaults to `lg lg n`.
    pub fn deterministic(n: u64, p: usize, omega: Option<f64>) -> Result<Self> {
        if n < p as u64 {
            return Err(Error::config("need n >= p"));
        }
        let lgn = (n as f64).log2().max(1.0);
        let mut notes = Vec::new();
        let explicit = omega.is_some();
        let omega = omega.unwrap_or_else(|| lgn.log2().max(1.0));
        if omega <= 0.0 {
            return Err(Error::config("omega must be positive"));
        }
        let mut r = (omega.ceil() as u64).max(1);
        let cap = n.div_ceil(p as u64);
        if r * p as u64 > cap {
            if explicit {
                return Err(Error::config(format!(
                    "sample size r*p = {} exceeds the {} keys per processor",
                    r * p as u64,
                    cap
                )));
            }
            let clamped = (cap / p as u64).max(1);
            notes.push(format!("r clamped {} -> {} to fit n/p keys per processor", r, clamped));
            r = clamped;
        }
        let w = r as f64;
        if (p as f64).powi(2) * w * w > n as f64 / lgn {
            notes.push(format!(
                "p^2*w^2 = {:.0} exceeds n/lg n = {:.0}; imbalance analysis regime not met",
                (p as f64).powi(2) * w * w,
                n as f64 / lgn
            ));
        }
        Ok(OversamplingConfig { mode: SampleMode::Deterministic, omega, r, s: r * p as u64, notes })
    }

    /// Randomized configuration; `omega^2` defaults to `lg n`.
    pub fn randomized(n: u64, p: usize, omega_sq: Option<f64>) -> Result<Self> {
        if n < p as u64 {
            return Err(Error::config("need n >= p"));
        }
        let lgn = (n as f64).log2().max(1.0);
        let mut notes = Vec::new();
        let explicit = omega_sq.is_some();
        let omega_sq = omega_sq.unwrap_or(lgn);
        if omega_sq <= 0.0 {
            return Err(Error::config("omega^2 must be positive"));
        }
        let omega = omega_sq.sqrt();
        let formula = (2.0 * omega_sq * lgn).ceil() as u64;
        let mut s = formula.max(1);
        if p > 1 {
            if explicit {
                if s * p as u64 >= n {
                    return Err(Error::config(format!(
                        "total sample s*p = {} is not smaller than the input n = {}",
                        s * p as u64,
                        n
                    )));
                }
            } else {
                let half = (n / (2 * p as u64)).max(1);
                if s > half {
                    notes.push(format!("s clamped {} -> {} to keep the sample below n/2", s, half));
                    s = half;
                }
            }
            let w = omega;
            if 2.0 * p as f64 * w * w * (p as f64).log2() >= n as f64 / 2.0 {
                notes.push("2*p*w^2*lg p >= n/2; high-probability analysis regime not met".into());
            }
        }
        Ok(OversamplingConfig { mode: SampleMode::Randomized, omega, r: omega.ceil() as u64, s, notes })
    }
}

/// Wall time, operation count, and superstep range of one phase.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub seconds: f64,
    pub ops: u64,
    pub first_step: u64,
    pub last_step: u64,
}

/// Per-phase breakdown (wall seconds on rank 0's timeline, so entries sum to
/// the total within timer resolution; ops are max over processors).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhaseReport {
    pub ph1_init: PhaseEntry,
    pub ph2_seqsort: PhaseEntry,
    pub ph3_sampling: PhaseEntry,
    pub ph4_prefix: PhaseEntry,
    pub ph5_routing: PhaseEntry,
    pub ph6_merging: PhaseEntry,
    pub ph7_termination: PhaseEntry,
    pub total_seconds: f64,
}

impl PhaseReport {
    fn from_engine(report: &EngineReport) -> Self {
        let mut out = PhaseReport::default();
        for ph in &report.phases {
            let slot = match ph.id {
                0 | phase::INIT => &mut out.ph1_init,
                phase::SEQSORT => &mut out.ph2_seqsort,
                phase::SAMPLING => &mut out.ph3_sampling,
                phase::PREFIX => &mut out.ph4_prefix,
                phase::ROUTING => &mut out.ph5_routing,
                phase::MERGING => &mut out.ph6_merging,
                _ => &mut out.ph7_termination,
            };
            slot.seconds += ph.seconds;
            slot.ops += ph.ops;
            if slot.first_step == 0 {
                slot.first_step = ph.first_step;
            }
            slot.last_step = slot.last_step.max(ph.last_step);
            out.total_seconds += ph.seconds;
        }
        out
    }

    pub fn entries(&self) -> [(&'static str, &PhaseEntry); 7] {
        [
            ("Ph1 Init", &self.ph1_init),
            ("Ph2 SeqSort", &self.ph2_seqsort),
            ("Ph3 Sampling", &self.ph3_sampling),
            ("Ph4 Prefix", &self.ph4_prefix),
            ("Ph5 Routing", &self.ph5_routing),
            ("Ph6 Merging", &self.ph6_merging),
            ("Ph7 Termination", &self.ph7_termination),
        ]
    }
}

/// Key imbalance after routing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImbalanceStats {
    /// Max records (including pads) held by any processor after routing.
    pub n_max_observed: u64,
    /// Hard bound (deterministic) or high-probability target (randomized).
    pub n_max_bound: f64,
    pub bound_is_hard: bool,
    pub bound_satisfied: bool,
    /// `n_max_observed / (n/p)`.
    pub bucket_expansion: f64,
    pub sample_records_per_proc: u64,
}

/// Everything a sort run produces besides exit status: per-processor sorted
/// outputs plus instrumentation.
#[derive(Debug, Clone)]
pub struct SortOutcome<R> {
    pub outputs: Vec<Vec<R>>,
    pub phases: PhaseReport,
    pub imbalance: ImbalanceStats,
    pub ledger: CostLedger,
}

/// Hard per-processor bound of the deterministic algorithm:
/// `ceil((1 + 1/r) * n/p) + r*p`.
pub fn det_n_max_bound(n: u64, p: usize, r: u64) -> u64 {
    let rp = r * p as u64;
    ((r + 1) as u128 * n as u128).div_ceil(rp as u128) as u64 + rp
}

struct Plan {
    n: u64,
    p: usize,
    cap: usize,
    r: u64,
    s: u64,
    sorter: SeqSorter,
    sampling: Sampling,
}

#[derive(Clone, Copy)]
enum Sampling {
    Regular,
    Random { seed: u64 },
}

struct WorkerOut<R> {
    data: Vec<R>,
    received_padded: u64,
}

fn validate_inputs<R: Record>(inputs: &[Vec<R>], p: usize, require_pow2: bool) -> Result<u64> {
    if inputs.len() != p {
        return Err(Error::config(format!("expected {} input arrays, got {}", p, inputs.len())));
    }
    if require_pow2 && !p.is_power_of_two() {
        return Err(Error::config(format!(
            "p = {} must be a power of two (parallel sample sort is bitonic)",
            p
        )));
    }
    let n: u64 = inputs.iter().map(|v| v.len() as u64).sum();
    if n < p as u64 {
        return Err(Error::config(format!("need n >= p (n = {}, p = {})", n, p)));
    }
    let cap = n.div_ceil(p as u64) as usize;
    for (k, v) in inputs.iter().enumerate() {
        if v.len() > cap {
            return Err(Error::config(format!(
                "input must be evenly distributed: rank {} holds {} > ceil(n/p) = {}",
                k,
                v.len(),
                cap
            )));
        }
        if v.iter().any(|r| r.is_sentinel()) {
            return Err(Error::input(format!(
                "rank {} input contains the reserved sentinel key; bias it first",
                k
            )));
        }
    }
    Ok(n)
}

/// Deterministic regular-oversampling sort.
pub fn sort_det_bsp<R: Record>(
    inputs: Vec<Vec<R>>,
    cfg: &OversamplingConfig,
    sorter: SeqSorter,
    params: &BspParams,
    opts: &RunOptions,
) -> Result<SortOutcome<R>> {
    if cfg.mode != SampleMode::Deterministic {
        return Err(Error::config("sort_det_bsp needs a deterministic oversampling config"));
    }
    let p = params.p;
    let n = validate_inputs(&inputs, p, true)?;
    let plan = Plan {
        n,
        p,
        cap: n.div_ceil(p as u64) as usize,
        r: cfg.r,
        s: cfg.s,
        sorter,
        sampling: Sampling::Regular,
    };
    let bound = det_n_max_bound(n, p, cfg.r) as f64;
    run_oversampling_sort(inputs, plan, params, opts, bound, true, cfg.s)
}

/// Randomized oversampling sort with the deterministic algorithm's
/// sort-first structure.
pub fn sort_iran_bsp<R: Record>(
    inputs: Vec<Vec<R>>,
    cfg: &OversamplingConfig,
    sorter: SeqSorter,
    seed: u64,
    params: &BspParams,
    opts: &RunOptions,
) -> Result<SortOutcome<R>> {
    if cfg.mode != SampleMode::Randomized {
        return Err(Error::config("sort_iran_bsp needs a randomized oversampling config"));
    }
    let p = params.p;
    let n = validate_inputs(&inputs, p, true)?;
    if p > 1 && cfg.s * p as u64 >= n {
        return Err(Error::config(format!(
            "total sample s*p = {} is not smaller than the input n = {}",
            cfg.s * p as u64,
            n
        )));
    }
    let plan = Plan {
        n,
        p,
        cap: n.div_ceil(p as u64) as usize,
        r: cfg.r,
        s: cfg.s,
        sorter,
        sampling: Sampling::Random { seed },
    };
    let bound = (1.0 + 1.0 / cfg.omega) * (n as f64 / p as f64);
    run_oversampling_sort(inputs, plan, params, opts, bound, false, cfg.s)
}

fn run_oversampling_sort<R: Record>(
    inputs: Vec<Vec<R>>,
    plan: Plan,
    params: &BspParams,
    opts: &RunOptions,
    bound: f64,
    bound_is_hard: bool,
    sample_per_proc: u64,
) -> Result<SortOutcome<R>> {
    let n = plan.n;
    let p = plan.p;
    let (outs, report) = if p == 1 {
        crate::bsp::run_bsp(params, opts, inputs, |ctx, mut local: Vec<R>| {
            single_processor_sort(ctx, &mut local, plan.sorter);
            let len = local.len() as u64;
            Ok(WorkerOut { data: local, received_padded: len })
        })?
    } else {
        let plan = &plan;
        crate::bsp::run_bsp(params, opts, inputs, move |ctx, local: Vec<R>| {
            oversampling_worker(ctx, local, plan)
        })?
    };
    Ok(assemble(outs, report, n, p, bound, bound_is_hard, sample_per_proc))
}

fn single_processor_sort<R: Record>(ctx: &mut ProcessorContext, local: &mut Vec<R>, sorter: SeqSorter) {
    ctx.phase(phase::INIT);
    ctx.phase(phase::SEQSORT);
    let cost = sorter.sort(local);
    ctx.add_ops(cost.ops());
    ctx.phase(phase::TERMINATION);
}

fn assemble<R: Record>(
    outs: Vec<WorkerOut<R>>,
    report: EngineReport,
    n: u64,
    p: usize,
    bound: f64,
    bound_is_hard: bool,
    sample_per_proc: u64,
) -> SortOutcome<R> {
    let observed = outs.iter().map(|o| o.received_padded).max().unwrap_or(0);
    let satisfied = if bound_is_hard {
        observed <= bound as u64
    } else {
        (observed as f64) <= bound
    };
    let imbalance = ImbalanceStats {
        n_max_observed: observed,
        n_max_bound: bound,
        bound_is_hard,
        bound_satisfied: satisfied,
        bucket_expansion: observed as f64 / (n as f64 / p as f64),
        sample_records_per_proc: sample_per_proc,
    };
    SortOutcome {
        outputs: outs.into_iter().map(|o| o.data).collect(),
        phases: PhaseReport::from_engine(&report),
        imbalance,
        ledger: report.ledger,
    }
}

/// The shared pipeline of the deterministic and randomized oversampling
/// sorts; they differ only in how the local sample is selected.
fn oversampling_worker<R: Record>(
    ctx: &mut ProcessorContext,
    mut local: Vec<R>,
    plan: &Plan,
) -> Result<WorkerOut<R>> {
    let p = plan.p;
    let rank = ctx.rank();
    let my_pid = rank as u32;

    ctx.phase(phase::INIT);
    // pad so every processor holds the same count; for the regular sample the
    // count must also be a multiple of s so all segments are equal
    let n_loc = match plan.sampling {
        Sampling::Regular => {
            let x = (plan.cap as u64).div_ceil(plan.s);
            (plan.s * x) as usize
        }
        Sampling::Random { .. } => plan.cap,
    };

    ctx.phase(phase::SEQSORT);
    let cost = plan.sorter.sort(&mut local);
    ctx.add_ops(cost.ops());

    ctx.phase(phase::SAMPLING);
    kernels::pad_to(&mut local, n_loc);
    let sample = match plan.sampling {
        Sampling::Regular => select_regular_sample(&local, plan.r, p, my_pid)?,
        Sampling::Random { seed } => {
            let mut rng = Prng::stream(seed ^ SAMPLE_RNG_DOMAIN, rank);
            select_random_sample(&local, plan.s as usize, &mut rng, my_pid)?
        }
    };
    ctx.add_ops(sample.len() as u64);
    let block = bitonic_sort_blocks(ctx, sample)?;

    // splitter i is the last record of sorted sample block i-1; gather the
    // p-1 of them on rank 0, then tree-broadcast
    if rank < p - 1 {
        ctx.send(0, encode_all(&[*block.last().expect("sample block is nonempty")]))?;
    }
    ctx.sync()?;
    let splitter_words = if rank == 0 {
        let mut words = Vec::with_capacity((p - 1) * SampleRecord::WIRE_WORDS);
        for msg in ctx.take_inbox() {
            words.extend_from_slice(&msg.payload);
        }
        words
    } else {
        Vec::new()
    };
    let arity = best_broadcast_arity((p - 1) * SampleRecord::WIRE_WORDS, ctx.params());
    let words = broadcast(ctx, 0, &splitter_words, arity)?;
    let splitters: Vec<SampleRecord> = decode_all(&words);
    debug_assert_eq!(splitters.len(), p - 1);

    ctx.phase(phase::PREFIX);
    let (boundaries, cost) = splitter_search(&local, &splitters, my_pid);
    ctx.add_ops(cost.ops());
    let mut counts = Vec::with_capacity(p);
    let mut prev = 0usize;
    for &b in &boundaries {
        counts.push((b - prev) as u64);
        prev = b;
    }
    let incoming = incoming_counts(ctx, &counts)?;

    ctx.phase(phase::ROUTING);
    let mut runs_out: Vec<(usize, Vec<R>)> = Vec::with_capacity(p);
    let mut start = 0usize;
    for (d, &b) in boundaries.iter().enumerate() {
        runs_out.push((d, local[start..b].to_vec()));
        start = b;
    }
    drop(local);
    let received = route_records::<R>(ctx, runs_out)?;
    for (sender, run) in &received {
        debug_assert_eq!(run.len() as u64, incoming[*sender]);
    }

    ctx.phase(phase::MERGING);
    let expected: u64 = incoming.iter().sum();
    let (mut merged, cost) = multiway_merge(received.into_iter().map(|(_, run)| run).collect());
    ctx.add_ops(cost.ops());
    debug_assert_eq!(merged.len() as u64, expected);

    ctx.phase(phase::TERMINATION);
    let received_padded = merged.len() as u64;
    kernels::strip_sentinels(&mut merged);
    Ok(WorkerOut { data: merged, received_padded })
}

/// Traditional sample-sort baseline: gather a global random sample on
/// rank 0, sort it there, broadcast plain-key splitters, route every key by
/// binary search, then sort locally.
pub fn sort_ran_bsp<R: Record>(
    inputs: Vec<Vec<R>>,
    cfg: &OversamplingConfig,
    sorter: SeqSorter,
    seed: u64,
    params: &BspParams,
    opts: &RunOptions,
) -> Result<SortOutcome<R>> {
    if cfg.mode != SampleMode::Randomized {
        return Err(Error::config("sort_ran_bsp needs a randomized oversampling config"));
    }
    let p = params.p;
    let n = validate_inputs(&inputs, p, false)?;
    if p > 1 && cfg.s * p as u64 >= n {
        return Err(Error::config(format!(
            "total sample s*p = {} is not smaller than the input n = {}",
            cfg.s * p as u64,
            n
        )));
    }
    if (p as u64) * (p as u64) > n {
        // advisable regime only; still runs
    }
    let s = cfg.s;
    let bound = (1.0 + 1.0 / cfg.omega) * (n as f64 / p as f64);

    let (outs, report) = if p == 1 {
        crate::bsp::run_bsp(params, opts, inputs, |ctx, mut local: Vec<R>| {
            single_processor_sort(ctx, &mut local, sorter);
            let len = local.len() as u64;
            Ok(WorkerOut { data: local, received_padded: len })
        })?
    } else {
        crate::bsp::run_bsp(params, opts, inputs, move |ctx, local: Vec<R>| {
            baseline_worker(ctx, local, s, sorter, seed)
        })?
    };
    Ok(assemble(outs, report, n, p, bound, false, s))
}

fn baseline_worker<R: Record>(
    ctx: &mut ProcessorContext,
    local: Vec<R>,
    s: u64,
    sorter: SeqSorter,
    seed: u64,
) -> Result<WorkerOut<R>> {
    let p = ctx.p();
    let rank = ctx.rank();
    let mut rng = Prng::stream(seed ^ SAMPLE_RNG_DOMAIN, rank);

    ctx.phase(phase::INIT);
    let sample_total = s * p as u64 - 1;

    ctx.phase(phase::SAMPLING);
    // scatter sample quotas: draw processor identifiers uniformly and send
    // each to the processor it names
    let mut my_draws = sample_total / p as u64;
    if (rank as u64) < sample_total % p as u64 {
        my_draws += 1;
    }
    let mut per_dest = vec![0u64; p];
    for _ in 0..my_draws {
        per_dest[rng.below(p as u64) as usize] += 1;
    }
    for (d, &c) in per_dest.iter().enumerate() {
        if c > 0 {
            ctx.send(d, vec![d as u64; c as usize])?;
        }
    }
    ctx.sync()?;
    let quota: u64 = ctx.take_inbox().iter().map(|m| m.payload.len() as u64).sum();
    let quota = quota.min(local.len() as u64) as usize;

    // draw that many keys uniformly without replacement, ship them to rank 0
    let picks = select_random_sample(&local, quota, &mut rng, rank as u32)?;
    ctx.add_ops(quota as u64);
    ctx.send(0, picks.iter().map(|r| r.key as u64).collect())?;
    ctx.sync()?;

    let splitter_words = if rank == 0 {
        let mut sample: Vec<i64> = Vec::new();
        for msg in ctx.take_inbox() {
            sample.extend(msg.payload.iter().map(|&w| w as i64));
        }
        if sample.len() < p - 1 {
            return Err(Error::config("gathered sample smaller than p-1 splitters"));
        }
        let cost = sorter.sort(&mut sample);
        ctx.add_ops(cost.ops());
        let m = sample.len();
        (1..p).map(|i| sample[i * m / p] as u64).collect()
    } else {
        Vec::new()
    };
    let arity = best_broadcast_arity(p - 1, ctx.params());
    let splitters: Vec<i64> =
        broadcast(ctx, 0, &splitter_words, arity)?.iter().map(|&w| w as i64).collect();

    ctx.phase(phase::PREFIX);
    // binary search of every key into the splitters; keys equal to a splitter
    // all land in that splitter's bucket
    let mut buckets: Vec<Vec<R>> = (0..p).map(|_| Vec::new()).collect();
    let lgp = (usize::BITS - (p - 1).leading_zeros()) as u64;
    for r in &local {
        let dest = splitters.partition_point(|sp| *sp < r.key());
        buckets[dest].push(*r);
    }
    ctx.add_ops(local.len() as u64 * (lgp + 1));
    drop(local);
    let counts: Vec<u64> = buckets.iter().map(|b| b.len() as u64).collect();
    let _incoming = incoming_counts(ctx, &counts)?;

    ctx.phase(phase::ROUTING);
    let received = route_records::<R>(ctx, buckets.into_iter().enumerate().collect())?;

    ctx.phase(phase::SEQSORT);
    let mut merged: Vec<R> = Vec::new();
    for (_, run) in received {
        merged.extend_from_slice(&run);
    }
    let cost = sorter.sort(&mut merged);
    ctx.add_ops(cost.ops());

    ctx.phase(phase::TERMINATION);
    let received_padded = merged.len() as u64;
    Ok(WorkerOut { data: merged, received_padded })
}
