//! Superstep execution engine for `p` logical processors.
//!
//! A program is a per-processor closure that alternates local computation
//! with [`ProcessorContext::sync`] calls. Messages staged with
//! [`ProcessorContext::send`] during superstep `k` are delivered at the
//! barrier and become readable in superstep `k+1`, ordered by sender rank
//! (per-sender staging order preserved). Nothing else crosses processor
//! boundaries.
//!
//! Every barrier appends one [`SuperstepLedger`] entry charging
//! `max(L, x + g*h)`, where `x` is the largest operation count any processor
//! reported for the superstep (via [`ProcessorContext::add_ops`]) and `h` is
//! the realized h-relation: the largest per-processor word count sent or
//! received. Self-sends count like any other message.
//!
//! Two execution modes produce identical outputs and ledgers: `Parallel`
//! runs the workers on OS threads; `Sequential` serializes them (one worker
//! computes at a time, in rank order) for deterministic debugging.

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// BSP machine description in basic-operation units: `p` processors,
/// synchronization latency `l`, and per-word communication gap `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BspParams {
    pub p: usize,
    pub l: f64,
    pub g: f64,
}

impl BspParams {
    pub fn new(p: usize, l: f64, g: f64) -> Result<Self> {
        if p < 1 {
            return Err(Error::config("p must be >= 1"));
        }
        if l < 0.0 || g < 0.0 {
            return Err(Error::config("L and g must be >= 0"));
        }
        Ok(BspParams { p, l, g })
    }
}

/// Cost of one superstep: `max(L, x + g*h)`.
pub fn charge_superstep(x: u64, h: u64, params: &BspParams) -> f64 {
    params.l.max(x as f64 + params.g * h as f64)
}

/// A message delivered at a barrier. `sender` is the staging processor's rank.
#[derive(Debug, Clone)]
pub struct Message {
    pub sender: usize,
    pub payload: Vec<u64>,
}

/// Per-superstep cost record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuperstepLedger {
    /// 1-based superstep index.
    pub step: u64,
    /// Max operations reported by any processor.
    pub x: u64,
    /// Realized h-relation: max over processors of max(words sent, words received).
    pub h: u64,
    /// Total words delivered at the barrier.
    pub words: u64,
    /// `max(L, x + g*h)`.
    pub charged: f64,
}

/// All superstep records of a run plus totals.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub steps: Vec<SuperstepLedger>,
    pub total_charged: f64,
    pub total_words: u64,
}

impl CostLedger {
    pub fn supersteps(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn max_h(&self) -> u64 {
        self.steps.iter().map(|s| s.h).max().unwrap_or(0)
    }
}

/// Wall time and operation count attributed to one phase id, with the
/// superstep range it covered. Seconds are measured on rank 0's timeline, so
/// phase times partition the run exactly; ops are the max over ranks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSample {
    pub id: u8,
    pub seconds: f64,
    pub ops: u64,
    pub first_step: u64,
    pub last_step: u64,
}

/// Ledger plus phase breakdown returned by [`run_bsp`].
#[derive(Debug, Clone, Default)]
pub struct EngineReport {
    pub ledger: CostLedger,
    pub phases: Vec<PhaseSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecMode {
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub mode: ExecMode,
    /// A program exceeding this many supersteps is reported as a protocol
    /// violation (deadlock guard; programs here have statically known counts).
    pub superstep_budget: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { mode: ExecMode::Parallel, superstep_budget: 1_000_000 }
    }
}

struct EngineState {
    arrived: usize,
    done: usize,
    generation: u64,
    turn: usize,
    done_flags: Vec<bool>,
    staging: Vec<Vec<Message>>,
    inboxes: Vec<Vec<Message>>,
    step_ops: Vec<u64>,
    sent_words: Vec<u64>,
    recv_words: Vec<u64>,
    sync_counts: Vec<u64>,
    final_ops: u64,
    ledger: Vec<SuperstepLedger>,
    violation: Option<String>,
}

struct Shared {
    params: BspParams,
    sequential: bool,
    budget: u64,
    state: Mutex<EngineState>,
    cv: Condvar,
}

impl Shared {
    fn flag_violation(&self, state: &mut EngineState, msg: String) {
        if state.violation.is_none() {
            state.violation = Some(msg);
        }
        self.cv.notify_all();
    }

    fn advance_turn(&self, state: &mut EngineState) {
        let p = self.params.p;
        let mut next = (state.turn + 1) % p;
        for _ in 0..p {
            if !state.done_flags[next] {
                break;
            }
            next = (next + 1) % p;
        }
        state.turn = next;
        self.cv.notify_all();
    }

    /// Deliver staged messages, close the ledger entry, open the next superstep.
    fn deliver(&self, state: &mut EngineState) {
        let p = self.params.p;
        let mut words_total = 0u64;
        for dest in 0..p {
            state.staging[dest].sort_by_key(|m| m.sender);
            let recv: u64 = state.staging[dest].iter().map(|m| m.payload.len() as u64).sum();
            state.recv_words[dest] = recv;
            words_total += recv;
            state.inboxes[dest] = std::mem::take(&mut state.staging[dest]);
        }
        let x = state.step_ops.iter().copied().max().unwrap_or(0);
        let h = (0..p)
            .map(|r| state.sent_words[r].max(state.recv_words[r]))
            .max()
            .unwrap_or(0);
        state.ledger.push(SuperstepLedger {
            step: state.generation + 1,
            x,
            h,
            words: words_total,
            charged: charge_superstep(x, h, &self.params),
        });
        state.step_ops.iter_mut().for_each(|v| *v = 0);
        state.sent_words.iter_mut().for_each(|v| *v = 0);
        state.recv_words.iter_mut().for_each(|v| *v = 0);
        state.generation += 1;
        state.arrived = 0;
        // first non-done rank computes first in sequential mode
        state.turn = (0..p).find(|&r| !state.done_flags[r]).unwrap_or(0);
        self.cv.notify_all();
    }
}

/// Rank-local handle a superstep program uses to communicate and to report
/// operation counts and phase transitions.
pub struct ProcessorContext {
    rank: usize,
    shared: Arc<Shared>,
    outbox: Vec<Staged>,
    inbox: Vec<Message>,
    pending_ops: u64,
    sync_count: u64,
    current_phase: u8,
    phase_ops: BTreeMap<u8, u64>,
    // rank 0 only: (phase, superstep at entry, instant)
    phase_marks: Vec<(u8, u64, Instant)>,
}

struct Staged {
    dest: usize,
    payload: Vec<u64>,
}

impl ProcessorContext {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn p(&self) -> usize {
        self.shared.params.p
    }

    pub fn params(&self) -> &BspParams {
        &self.shared.params
    }

    /// Completed barriers so far (the current superstep is `superstep() + 1`).
    pub fn superstep(&self) -> u64 {
        self.sync_count
    }

    /// Stage `payload` for delivery to `dest` at the next barrier. Empty
    /// payloads are legal and count zero words; self-sends are delivered next
    /// superstep like any other message.
    pub fn send(&mut self, dest: usize, payload: Vec<u64>) -> Result<()> {
        if dest >= self.p() {
            return Err(Error::protocol(format!(
                "rank {}: send destination {} out of range (p={})",
                self.rank,
                dest,
                self.p()
            )));
        }
        self.outbox.push(Staged { dest, payload });
        Ok(())
    }

    /// Report `n` basic operations performed in the current superstep.
    pub fn add_ops(&mut self, n: u64) {
        self.pending_ops += n;
        *self.phase_ops.entry(self.current_phase).or_insert(0) += n;
    }

    /// Mark a phase transition (for the phase breakdown of the report).
    pub fn phase(&mut self, id: u8) {
        self.current_phase = id;
        if self.rank == 0 {
            self.phase_marks.push((id, self.sync_count, Instant::now()));
        }
    }

    /// Messages delivered at the most recent barrier, ordered by sender rank.
    pub fn take_inbox(&mut self) -> Vec<Message> {
        std::mem::take(&mut self.inbox)
    }

    /// Barrier: flush staged messages and operation counts, wait for all
    /// processors, pick up the messages addressed to this rank.
    pub fn sync(&mut self) -> Result<()> {
        let shared = Arc::clone(&self.shared);
        let mut state = shared.state.lock().unwrap();
        if let Some(v) = &state.violation {
            return Err(Error::protocol(v.clone()));
        }
        if state.done > 0 {
            let msg = format!(
                "rank {} synchronizes at superstep {} after another worker finished \
                 (unequal superstep counts)",
                self.rank,
                state.generation + 1
            );
            shared.flag_violation(&mut state, msg.clone());
            return Err(Error::protocol(msg));
        }
        if state.generation >= shared.budget {
            let msg = format!("superstep budget ({}) exceeded", shared.budget);
            shared.flag_violation(&mut state, msg.clone());
            return Err(Error::protocol(msg));
        }
        for m in self.outbox.drain(..) {
            state.sent_words[self.rank] += m.payload.len() as u64;
            state.staging[m.dest].push(Message { sender: self.rank, payload: m.payload });
        }
        state.step_ops[self.rank] = self.pending_ops;
        self.pending_ops = 0;
        state.sync_counts[self.rank] += 1;
        self.sync_count += 1;
        state.arrived += 1;
        let my_generation = state.generation;
        if shared.sequential {
            shared.advance_turn(&mut state);
        }
        if state.arrived == shared.params.p {
            shared.deliver(&mut state);
        } else {
            while state.generation == my_generation && state.violation.is_none() {
                state = shared.cv.wait(state).unwrap();
            }
        }
        if let Some(v) = &state.violation {
            return Err(Error::protocol(v.clone()));
        }
        self.inbox = std::mem::take(&mut state.inboxes[self.rank]);
        drop(state);
        self.wait_for_turn()?;
        Ok(())
    }

    fn wait_for_turn(&self) -> Result<()> {
        if !self.shared.sequential {
            return Ok(());
        }
        let shared = &self.shared;
        let mut state = shared.state.lock().unwrap();
        while state.turn != self.rank && state.violation.is_none() {
            state = shared.cv.wait(state).unwrap();
        }
        match &state.violation {
            Some(v) => Err(Error::protocol(v.clone())),
            None => Ok(()),
        }
    }

    fn finish(&mut self) {
        let shared = Arc::clone(&self.shared);
        let mut state = shared.state.lock().unwrap();
        if state.arrived > 0 {
            let msg = format!(
                "rank {} finished while other workers wait at superstep {} \
                 (unequal superstep counts)",
                self.rank,
                state.generation + 1
            );
            shared.flag_violation(&mut state, msg);
        }
        state.final_ops = state.final_ops.max(self.pending_ops);
        state.done += 1;
        state.done_flags[self.rank] = true;
        if shared.sequential && state.turn == self.rank {
            shared.advance_turn(&mut state);
        }
    }
}

/// Run one superstep program on `p` logical processors.
///
/// `inputs` must have exactly `p` entries; entry `k` is moved to rank `k`.
/// All processors execute `program`; the returned outputs are ordered by
/// rank. Execution is deterministic given inputs (any randomness must come
/// in through them).
pub fn run_bsp<I, O, F>(
    params: &BspParams,
    opts: &RunOptions,
    inputs: Vec<I>,
    program: F,
) -> Result<(Vec<O>, EngineReport)>
where
    I: Send,
    O: Send,
    F: Fn(&mut ProcessorContext, I) -> Result<O> + Sync,
{
    let p = params.p;
    if inputs.len() != p {
        return Err(Error::config(format!(
            "expected {} per-processor inputs, got {}",
            p,
            inputs.len()
        )));
    }
    let shared = Arc::new(Shared {
        params: *params,
        sequential: opts.mode == ExecMode::Sequential,
        budget: opts.superstep_budget,
        state: Mutex::new(EngineState {
            arrived: 0,
            done: 0,
            generation: 0,
            turn: 0,
            done_flags: vec![false; p],
            staging: (0..p).map(|_| Vec::new()).collect(),
            inboxes: (0..p).map(|_| Vec::new()).collect(),
            step_ops: vec![0; p],
            sent_words: vec![0; p],
            recv_words: vec![0; p],
            sync_counts: vec![0; p],
            final_ops: 0,
            ledger: Vec::new(),
            violation: None,
        }),
        cv: Condvar::new(),
    });

    struct WorkerOut<O> {
        result: Result<O>,
        phase_ops: BTreeMap<u8, u64>,
        phase_marks: Vec<(u8, u64, Instant)>,
        end: Instant,
    }

    let program = &program;
    let mut outs: Vec<Option<WorkerOut<O>>> = (0..p).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(p);
        for (rank, input) in inputs.into_iter().enumerate() {
            let shared = Arc::clone(&shared);
            handles.push(scope.spawn(move || {
                let mut ctx = ProcessorContext {
                    rank,
                    shared,
                    outbox: Vec::new(),
                    inbox: Vec::new(),
                    pending_ops: 0,
                    sync_count: 0,
                    current_phase: 0,
                    phase_ops: BTreeMap::new(),
                    phase_marks: Vec::new(),
                };
                if rank == 0 {
                    ctx.phase_marks.push((0, 0, Instant::now()));
                }
                let result = match ctx.wait_for_turn() {
                    Ok(()) => {
                        let caught = std::panic::catch_unwind(std::panic::AssertUnwindSafe(
                            || program(&mut ctx, input),
                        ));
                        match caught {
                            Ok(r) => r,
                            Err(payload) => {
                                let what = payload
                                    .downcast_ref::<&str>()
                                    .map(|s| s.to_string())
                                    .or_else(|| payload.downcast_ref::<String>().cloned())
                                    .unwrap_or_else(|| "unknown panic".into());
                                Err(Error::Other(format!("rank {} panicked: {}", rank, what)))
                            }
                        }
                    }
                    Err(e) => Err(e),
                };
                if result.is_err() {
                    let mut state = ctx.shared.state.lock().unwrap();
                    let shared = Arc::clone(&ctx.shared);
                    shared.flag_violation(
                        &mut state,
                        format!("rank {} failed: {}", rank, result.as_ref().err().unwrap()),
                    );
                    state.done += 1;
                    state.done_flags[rank] = true;
                } else {
                    ctx.finish();
                }
                WorkerOut {
                    result,
                    phase_ops: std::mem::take(&mut ctx.phase_ops),
                    phase_marks: std::mem::take(&mut ctx.phase_marks),
                    end: Instant::now(),
                }
            }));
        }
        for (rank, h) in handles.into_iter().enumerate() {
            outs[rank] = Some(h.join().expect("bsp worker panicked"));
        }
    });

    let mut outs: Vec<WorkerOut<O>> = outs.into_iter().map(Option::unwrap).collect();
    // propagate the lowest-rank error
    if let Some(pos) = outs.iter().position(|o| o.result.is_err()) {
        match outs.swap_remove(pos).result {
            Err(e) => return Err(e),
            Ok(_) => unreachable!(),
        }
    }

    let state = shared.state.lock().unwrap();
    if let Some(v) = &state.violation {
        return Err(Error::protocol(v.clone()));
    }
    let first = state.sync_counts[0];
    if state.sync_counts.iter().any(|&c| c != first) {
        return Err(Error::protocol("unequal superstep counts across processors"));
    }

    let mut steps = state.ledger.clone();
    // compute executed after the last barrier closes an implicit final superstep
    if state.final_ops > 0 {
        steps.push(SuperstepLedger {
            step: state.generation + 1,
            x: state.final_ops,
            h: 0,
            words: 0,
            charged: charge_superstep(state.final_ops, 0, params),
        });
    }
    let ledger = CostLedger {
        total_charged: steps.iter().map(|s| s.charged).sum(),
        total_words: steps.iter().map(|s| s.words).sum(),
        steps,
    };

    // phase breakdown: seconds from rank 0's partition of its own timeline,
    // ops as the max over ranks
    let mut phases: Vec<PhaseSample> = Vec::new();
    let marks = outs[0].phase_marks.clone();
    let end = outs[0].end;
    for (i, &(id, step_at, t)) in marks.iter().enumerate() {
        let until = if i + 1 < marks.len() { marks[i + 1].2 } else { end };
        let step_end = if i + 1 < marks.len() { marks[i + 1].1 } else { ledger.supersteps() };
        let secs = until.duration_since(t).as_secs_f64();
        match phases.iter_mut().find(|ph| ph.id == id) {
            Some(ph) => {
                ph.seconds += secs;
                ph.last_step = ph.last_step.max(step_end);
            }
            None => phases.push(PhaseSample {
                id,
                seconds: secs,
                ops: 0,
                first_step: step_at + 1,
                last_step: step_end,
            }),
        }
    }
    for out in &outs {
        for (&id, &ops) in &out.phase_ops {
            if let Some(ph) = phases.iter_mut().find(|ph| ph.id == id) {
                ph.ops = ph.ops.max(ops);
            }
        }
    }

    let outputs = outs.into_iter().map(|o| o.result.unwrap()).collect();
    Ok((outputs, EngineReport { ledger, phases }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: usize) -> BspParams {
        BspParams::new(p, 0.0, 1.0).unwrap()
    }

    #[test]
    fn charging_rule() {
        let pr = BspParams::new(2, 130.0, 1.0).unwrap();
        assert_eq!(charge_superstep(0, 0, &pr), 130.0);
        assert_eq!(charge_superstep(1000, 0, &pr), 1000.0);
        let pr = BspParams::new(2, 10.0, 2.0).unwrap();
        assert_eq!(charge_superstep(3, 5, &pr), 13.0);
    }

    #[test]
    fn identity_program_single_processor() {
        let (out, report) = run_bsp(
            &params(1),
            &RunOptions::default(),
            vec![vec![5i64]],
            |_ctx, input: Vec<i64>| Ok(input),
        )
        .unwrap();
        assert_eq!(out, vec![vec![5]]);
        assert!(report.ledger.steps.iter().all(|s| s.h == 0));
    }

    #[test]
    fn delivery_ordered_by_sender() {
        let (out, _) = run_bsp(
            &params(4),
            &RunOptions::default(),
            vec![(), (), (), ()],
            |ctx, _| {
                ctx.send(0, vec![ctx.rank() as u64])?;
                ctx.sync()?;
                let inbox = ctx.take_inbox();
                if ctx.rank() == 0 {
                    let got: Vec<u64> = inbox.iter().map(|m| m.payload[0]).collect();
                    Ok(got)
                } else {
                    Ok(vec![])
                }
            },
        )
        .unwrap();
        assert_eq!(out[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn isolation_no_same_superstep_reads() {
        let (out, _) = run_bsp(
            &params(2),
            &RunOptions::default(),
            vec![(), ()],
            |ctx, _| {
                ctx.send((ctx.rank() + 1) % 2, vec![7])?;
                let before = ctx.take_inbox().len();
                ctx.sync()?;
                let after = ctx.take_inbox().len();
                ctx.sync()?;
                let stale = ctx.take_inbox().len();
                Ok((before, after, stale))
            },
        )
        .unwrap();
        for (before, after, stale) in out {
            assert_eq!(before, 0);
            assert_eq!(after, 1);
            assert_eq!(stale, 0);
        }
    }

    #[test]
    fn ledger_records_h_and_charge() {
        let pr = BspParams::new(2, 10.0, 2.0).unwrap();
        let (_, report) = run_bsp(
            &pr,
            &RunOptions::default(),
            vec![(), ()],
            |ctx, _| {
                if ctx.rank() == 0 {
                    ctx.send(1, vec![0; 5])?;
                }
                ctx.add_ops(3);
                ctx.sync()?;
                Ok(())
            },
        )
        .unwrap();
        let step = &report.ledger.steps[0];
        assert_eq!(step.x, 3);
        assert_eq!(step.h, 5);
        assert_eq!(step.charged, 13.0);
    }

    #[test]
    fn conservation_words_sent_equals_received() {
        let (out, report) = run_bsp(
            &params(4),
            &RunOptions::default(),
            vec![(), (), (), ()],
            |ctx, _| {
                let r = ctx.rank();
                for d in 0..ctx.p() {
                    ctx.send(d, vec![r as u64; r + d + 1])?;
                }
                ctx.sync()?;
                let received: u64 =
                    ctx.take_inbox().iter().map(|m| m.payload.len() as u64).sum();
                Ok(received)
            },
        )
        .unwrap();
        let sent_total: u64 = (0..4u64)
            .map(|r| (0..4u64).map(|d| r + d + 1).sum::<u64>())
            .sum();
        assert_eq!(out.iter().sum::<u64>(), sent_total);
        assert_eq!(report.ledger.steps[0].words, sent_total);
    }

    #[test]
    fn self_send_delivered_next_superstep() {
        let (out, _) = run_bsp(
            &params(1),
            &RunOptions::default(),
            vec![()],
            |ctx, _| {
                ctx.send(0, vec![42])?;
                ctx.sync()?;
                Ok(ctx.take_inbox()[0].payload[0])
            },
        )
        .unwrap();
        assert_eq!(out, vec![42]);
    }

    #[test]
    fn dest_out_of_range_is_error() {
        let err = run_bsp(
            &params(2),
            &RunOptions::default(),
            vec![(), ()],
            |ctx, _| {
                ctx.send(5, vec![1])?;
                ctx.sync()?;
                Ok(())
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn unequal_superstep_counts_reported() {
        let err = run_bsp(
            &params(2),
            &RunOptions::default(),
            vec![(), ()],
            |ctx, _| {
                if ctx.rank() == 0 {
                    ctx.sync()?;
                }
                Ok(())
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn superstep_budget_enforced() {
        let opts = RunOptions { superstep_budget: 3, ..Default::default() };
        let err = run_bsp(&params(2), &opts, vec![(), ()], |ctx, _| loop {
            ctx.sync()?;
        })
        .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    fn scan_program(ctx: &mut ProcessorContext, seed: u64) -> Result<Vec<u64>> {
        // two-superstep program with data-dependent traffic
        let mut x = seed;
        let mut out = Vec::new();
        for round in 0..3u64 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(round);
            let dest = (x % ctx.p() as u64) as usize;
            ctx.send(dest, vec![x, ctx.rank() as u64])?;
            ctx.add_ops(1 + x % 7);
            ctx.sync()?;
            for m in ctx.take_inbox() {
                out.push(m.payload[0] ^ (m.sender as u64));
            }
        }
        Ok(out)
    }

    #[test]
    fn sequential_and_parallel_modes_identical() {
        let inputs: Vec<u64> = (0..8).map(|i| 1000 + i).collect();
        let par = run_bsp(
            &params(8),
            &RunOptions { mode: ExecMode::Parallel, ..Default::default() },
            inputs.clone(),
            scan_program,
        )
        .unwrap();
        let seq = run_bsp(
            &params(8),
            &RunOptions { mode: ExecMode::Sequential, ..Default::default() },
            inputs,
            scan_program,
        )
        .unwrap();
        assert_eq!(par.0, seq.0);
        let charges =
            |r: &EngineReport| r.ledger.steps.iter().map(|s| (s.x, s.h, s.words)).collect::<Vec<_>>();
        assert_eq!(charges(&par.1), charges(&seq.1));
    }

    #[test]
    fn deterministic_across_repeat_runs() {
        let run = || {
            run_bsp(
                &params(4),
                &RunOptions::default(),
                (0..4u64).collect(),
                scan_program,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.0, b.0);
        assert_eq!(
            a.1.ledger.steps.iter().map(|s| s.h).collect::<Vec<_>>(),
            b.1.ledger.steps.iter().map(|s| s.h).collect::<Vec<_>>()
        );
    }

    #[test]
    fn trailing_compute_closes_final_superstep() {
        let (_, report) = run_bsp(
            &params(2),
            &RunOptions::default(),
            vec![(), ()],
            |ctx, _| {
                ctx.sync()?;
                ctx.add_ops(11);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(report.ledger.steps.len(), 2);
        assert_eq!(report.ledger.steps[1].x, 11);
        assert_eq!(report.ledger.steps[1].h, 0);
    }
}
