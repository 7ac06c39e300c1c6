//! Sequential building blocks: stable local sorts, loser-tree multiway
//! merge, sample selection, and splitter binary search with duplicate
//! tie-breaking.
//!
//! All kernels are pure functions over caller-owned buffers and report their
//! work as a [`KernelCost`] (comparisons + element moves) so superstep
//! programs can feed the cost ledger.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{Record, SampleRecord};
use crate::rng::Prng;

/// Work performed by a kernel, in the units the cost model charges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelCost {
    pub comparisons: u64,
    pub moves: u64,
}

impl KernelCost {
    pub fn ops(&self) -> u64 {
        self.comparisons + self.moves
    }
}

impl std::ops::AddAssign for KernelCost {
    fn add_assign(&mut self, rhs: Self) {
        self.comparisons += rhs.comparisons;
        self.moves += rhs.moves;
    }
}

/// Sequential sorter choice. Both are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeqSorter {
    Quick,
    Radix,
}

impl SeqSorter {
    pub fn sort<R: Record>(&self, data: &mut [R]) -> KernelCost {
        match self {
            SeqSorter::Quick => seq_sort_quick(data),
            SeqSorter::Radix => seq_sort_radix(data),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SeqSorter::Quick => "quick",
            SeqSorter::Radix => "radix",
        }
    }
}

const INSERTION_CUTOFF: usize = 24;

/// Stable quicksort. Classic quicksort is unstable, so the comparator runs
/// on `(key, original index)` pairs — a strict order, which also removes the
/// equal-key quadratic risk — and the records are permuted afterwards.
pub fn seq_sort_quick<R: Record>(data: &mut [R]) -> KernelCost {
    let mut cost = KernelCost::default();
    let n = data.len();
    if n < 2 {
        return cost;
    }
    let mut pairs: Vec<(i64, u64)> =
        data.iter().enumerate().map(|(i, r)| (r.key(), i as u64)).collect();
    quick_rec(&mut pairs, &mut cost);
    let scratch: Vec<R> = pairs.iter().map(|&(_, i)| data[i as usize]).collect();
    data.copy_from_slice(&scratch);
    cost.moves += 2 * n as u64;
    cost
}

fn quick_rec(a: &mut [(i64, u64)], cost: &mut KernelCost) {
    let mut a = a;
    while a.len() > INSERTION_CUTOFF {
        let pivot = median_of_three(a, cost);
        // Hoare partition; elements are pairwise distinct
        let (mut i, mut j) = (0usize, a.len() - 1);
        loop {
            while {
                cost.comparisons += 1;
                a[i] < pivot
            } {
                i += 1;
            }
            while {
                cost.comparisons += 1;
                a[j] > pivot
            } {
                j -= 1;
            }
            if i >= j {
                break;
            }
            a.swap(i, j);
            cost.moves += 1;
            i += 1;
            j -= 1;
        }
        let split = j + 1;
        let (lo, hi) = a.split_at_mut(split);
        // recurse into the smaller side, iterate on the larger
        if lo.len() < hi.len() {
            quick_rec(lo, cost);
            a = hi;
        } else {
            quick_rec(hi, cost);
            a = lo;
        }
    }
    insertion_sort(a, cost);
}

fn median_of_three(a: &[(i64, u64)], cost: &mut KernelCost) -> (i64, u64) {
    let (x, y, z) = (a[0], a[a.len() / 2], a[a.len() - 1]);
    cost.comparisons += 3;
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    if z < lo {
        lo
    } else if z > hi {
        hi
    } else {
        z
    }
}

fn insertion_sort(a: &mut [(i64, u64)], cost: &mut KernelCost) {
    for i in 1..a.len() {
        let v = a[i];
        let mut j = i;
        while j > 0 {
            cost.comparisons += 1;
            if a[j - 1] <= v {
                break;
            }
            a[j] = a[j - 1];
            cost.moves += 1;
            j -= 1;
        }
        a[j] = v;
        cost.moves += 1;
    }
}

/// Stable LSD radixsort: eight 8-bit passes over the key, sign handled by
/// biasing the top bit. Passes whose byte column is constant are skipped.
pub fn seq_sort_radix<R: Record>(data: &mut [R]) -> KernelCost {
    let mut cost = KernelCost::default();
    let n = data.len();
    if n < 2 {
        return cost;
    }
    let biased = |r: &R| (r.key() as u64) ^ (1 << 63);

    let mut hist = [[0u64; 256]; 8];
    for r in data.iter() {
        let k = biased(r);
        for (pass, h) in hist.iter_mut().enumerate() {
            h[((k >> (8 * pass)) & 0xFF) as usize] += 1;
        }
    }
    cost.moves += n as u64;

    let mut src: Vec<R> = data.to_vec();
    let mut dst: Vec<R> = vec![R::sentinel(); n];
    let mut in_src = true;
    for pass in 0..8 {
        let h = &hist[pass];
        if h.iter().any(|&c| c == n as u64) {
            continue; // constant byte column
        }
        let mut offsets = [0u64; 256];
        let mut acc = 0u64;
        for b in 0..256 {
            offsets[b] = acc;
            acc += h[b];
        }
        let (from, to) = if in_src { (&src, &mut dst) } else { (&dst, &mut src) };
        for r in from.iter() {
            let b = ((biased(r) >> (8 * pass)) & 0xFF) as usize;
            to[offsets[b] as usize] = *r;
            offsets[b] += 1;
        }
        in_src = !in_src;
        cost.moves += n as u64;
    }
    data.copy_from_slice(if in_src { &src } else { &dst });
    cost.moves += n as u64;
    cost
}

/// Stable q-way merge with a loser tree. Equal keys are emitted in run-id
/// order (then within-run order), which is the stability contract the
/// parallel merge phase needs; comparisons stay within `n*ceil(lg q) + O(q)`.
pub fn multiway_merge<R: Record>(runs: Vec<Vec<R>>) -> (Vec<R>, KernelCost) {
    let mut cost = KernelCost::default();
    let runs: Vec<Vec<R>> = runs.into_iter().filter(|r| !r.is_empty()).collect();
    let total: usize = runs.iter().map(|r| r.len()).sum();
    let q = runs.len();
    let mut out = Vec::with_capacity(total);
    if q == 0 {
        return (out, cost);
    }
    if q == 1 {
        cost.moves += total as u64;
        let mut runs = runs;
        return (runs.pop().unwrap(), cost);
    }

    const DONE: (i64, usize) = (i64::MAX, usize::MAX);
    let m = q.next_power_of_two();
    let mut cursor = vec![0usize; q];
    let mut head: Vec<(i64, usize)> = (0..m)
        .map(|i| if i < q { (runs[i][0].key(), i) } else { DONE })
        .collect();

    // build: winners bubble up, internal nodes keep losers
    let mut tree = vec![usize::MAX; m];
    fn build(
        node: usize,
        m: usize,
        head: &[(i64, usize)],
        tree: &mut [usize],
        cost: &mut KernelCost,
    ) -> usize {
        if node >= m {
            return node - m;
        }
        let l = build(2 * node, m, head, tree, cost);
        let r = build(2 * node + 1, m, head, tree, cost);
        cost.comparisons += 1;
        let (win, lose) = if head[l] <= head[r] { (l, r) } else { (r, l) };
        tree[node] = lose;
        win
    }
    let mut winner = build(1, m, &head, &mut tree, &mut cost);

    while head[winner] != DONE {
        let run = head[winner].1;
        out.push(runs[run][cursor[run]]);
        cost.moves += 1;
        cursor[run] += 1;
        head[winner] = if cursor[run] < runs[run].len() {
            (runs[run][cursor[run]].key(), run)
        } else {
            DONE
        };
        // replay against the losers on the path to the root
        let mut node = (winner + m) / 2;
        while node >= 1 {
            cost.comparisons += 1;
            if head[tree[node]] < head[winner] {
                std::mem::swap(&mut tree[node], &mut winner);
            }
            node /= 2;
        }
    }
    (out, cost)
}

/// Evenly spaced sample of `r*p` origin-tagged records from a sorted local
/// array whose length is a multiple of `r*p` (pad first): the last element of
/// each of the `s = r*p` equal segments, so the final pick is the local
/// maximum.
pub fn select_regular_sample<R: Record>(
    sorted: &[R],
    r: u64,
    p: usize,
    my_pid: u32,
) -> Result<Vec<SampleRecord>> {
    let s = r as usize * p;
    let len = sorted.len();
    if s == 0 || len < s {
        return Err(Error::config(format!(
            "local array of {} records cannot provide a regular sample of size r*p = {}",
            len, s
        )));
    }
    if len % s != 0 {
        return Err(Error::config(format!(
            "local array length {} is not a multiple of the sample size {}; pad it first",
            len, s
        )));
    }
    let x = len / s;
    Ok((1..=s)
        .map(|j| {
            let idx = x * j - 1;
            SampleRecord::new(sorted[idx].key(), my_pid, idx as u64)
        })
        .collect())
}

/// `s` distinct positions drawn uniformly without replacement, returned in
/// increasing position order as origin-tagged records.
pub fn select_random_sample<R: Record>(
    sorted: &[R],
    s: usize,
    rng: &mut Prng,
    my_pid: u32,
) -> Result<Vec<SampleRecord>> {
    let len = sorted.len();
    if s > len {
        return Err(Error::config(format!(
            "random sample of {} from a local array of {} records",
            s, len
        )));
    }
    // Floyd's algorithm
    let mut picks: BTreeSet<u64> = BTreeSet::new();
    for i in (len - s)..len {
        let j = rng.below(i as u64 + 1);
        if !picks.insert(j) {
            picks.insert(i as u64);
        }
    }
    Ok(picks
        .into_iter()
        .map(|idx| SampleRecord::new(sorted[idx as usize].key(), my_pid, idx))
        .collect())
}

/// Bucket boundaries of a sorted local array against `p-1` splitters.
///
/// `boundaries[d]` is the number of local records strictly below splitter `d`
/// under the `(key, pid, index)` order, where the local record at index `j`
/// compares as `(key, my_pid, j)`; the final entry is the array length.
/// Bucket `d` is `[boundaries[d-1], boundaries[d])`.
pub fn splitter_search<R: Record>(
    local: &[R],
    splitters: &[SampleRecord],
    my_pid: u32,
) -> (Vec<usize>, KernelCost) {
    let mut cost = KernelCost::default();
    let mut boundaries = Vec::with_capacity(splitters.len() + 1);
    for sp in splitters {
        let (mut lo, mut hi) = (0usize, local.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            cost.comparisons += 1;
            let probe = SampleRecord::new(local[mid].key(), my_pid, mid as u64);
            if probe < *sp {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        boundaries.push(lo);
    }
    boundaries.push(local.len());
    debug_assert!(boundaries.windows(2).all(|w| w[0] <= w[1]));
    (boundaries, cost)
}

/// Extend with sentinel records up to `target` elements.
pub fn pad_to<R: Record>(v: &mut Vec<R>, target: usize) {
    debug_assert!(target >= v.len());
    v.resize(target, R::sentinel());
}

/// Drop the sentinel suffix of a sorted array (exact inverse of [`pad_to`]
/// after sorting; sentinels order above all real records).
pub fn strip_sentinels<R: Record>(v: &mut Vec<R>) {
    let cut = v.partition_point(|r| !r.is_sentinel());
    debug_assert!(v[cut..].iter().all(|r| r.is_sentinel()));
    v.truncate(cut);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::TaggedKey;

    fn random_keys(n: usize, seed: u64) -> Vec<i64> {
        let mut rng = Prng::new(seed);
        (0..n).map(|_| rng.key31() - (1 << 30)).collect()
    }

    #[test]
    fn sorts_agree_with_oracle() {
        for sorter in [SeqSorter::Quick, SeqSorter::Radix] {
            let mut empty: Vec<i64> = vec![];
            sorter.sort(&mut empty);
            assert!(empty.is_empty());

            let mut small = vec![3i64, 1, 2];
            sorter.sort(&mut small);
            assert_eq!(small, vec![1, 2, 3]);

            let mut keys = random_keys(100_000, 42);
            let mut oracle = keys.clone();
            oracle.sort_unstable();
            sorter.sort(&mut keys);
            assert_eq!(keys, oracle, "{:?}", sorter);
        }
    }

    #[test]
    fn quick_and_radix_identical() {
        let mut a = random_keys(10_000, 7);
        let mut b = a.clone();
        seq_sort_quick(&mut a);
        seq_sort_radix(&mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn sorts_are_stable() {
        let mut rng = Prng::new(3);
        for sorter in [SeqSorter::Quick, SeqSorter::Radix] {
            let mut data: Vec<TaggedKey> = (0..5000)
                .map(|i| TaggedKey { key: rng.below(50) as i64, tag: i })
                .collect();
            let mut oracle = data.clone();
            oracle.sort_by_key(|t| t.key); // std stable sort
            sorter.sort(&mut data);
            assert_eq!(data, oracle, "{:?}", sorter);
        }
    }

    #[test]
    fn quick_comparison_envelope() {
        // sanity envelope for the op ledger: <= 2 n ln n on random inputs
        let n = 100_000usize;
        let mut total = 0u64;
        let trials = 3;
        for seed in 0..trials {
            let mut keys = random_keys(n, 100 + seed);
            total += seq_sort_quick(&mut keys).comparisons;
        }
        let avg = total as f64 / trials as f64;
        let bound = 2.0 * n as f64 * (n as f64).ln();
        assert!(avg <= bound, "avg {} > bound {}", avg, bound);
    }

    #[test]
    fn merge_basic_and_stable() {
        let (out, _) = multiway_merge(vec![vec![1i64, 3], vec![2, 4]]);
        assert_eq!(out, vec![1, 2, 3, 4]);

        // run ids break ties: both records of run 0 precede run 1's
        let run0 = vec![TaggedKey { key: 7, tag: 0 }, TaggedKey { key: 7, tag: 1 }];
        let run1 = vec![TaggedKey { key: 7, tag: 2 }];
        let (out, _) = multiway_merge(vec![run0, run1]);
        assert_eq!(out.iter().map(|t| t.tag).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn merge_matches_sorted_concatenation() {
        let mut rng = Prng::new(11);
        let mut runs: Vec<Vec<i64>> = Vec::new();
        let mut all: Vec<i64> = Vec::new();
        for _ in 0..8 {
            let len = 1000 + rng.below(500) as usize;
            let mut run: Vec<i64> = (0..len).map(|_| rng.key31()).collect();
            run.sort_unstable();
            all.extend_from_slice(&run);
            runs.push(run);
        }
        let n = all.len();
        let (out, cost) = multiway_merge(runs);
        all.sort_unstable();
        assert_eq!(out, all);
        // n * ceil(lg 8) + O(q) comparisons
        assert!(cost.comparisons <= n as u64 * 3 + 16, "comps {}", cost.comparisons);
    }

    #[test]
    fn merge_edge_cases() {
        let (out, _) = multiway_merge::<i64>(vec![]);
        assert!(out.is_empty());
        let (out, _) = multiway_merge(vec![vec![], vec![5i64], vec![]]);
        assert_eq!(out, vec![5]);
    }

    #[test]
    fn regular_sample_even_spacing() {
        let keys: Vec<i64> = (1..=12).collect();
        let sample = select_regular_sample(&keys, 1, 3, 0).unwrap();
        assert_eq!(sample.iter().map(|s| s.key).collect::<Vec<_>>(), vec![4, 8, 12]);
        assert_eq!(sample.iter().map(|s| s.origin_index).collect::<Vec<_>>(), vec![3, 7, 11]);

        // r=1, p=1: just the local maximum
        let sample = select_regular_sample(&keys, 1, 1, 2).unwrap();
        assert_eq!(sample.len(), 1);
        assert_eq!(sample[0].key, 12);

        // all-equal keys stay distinct through origin tags
        let equal = vec![9i64; 8];
        let sample = select_regular_sample(&equal, 2, 2, 1).unwrap();
        for w in sample.windows(2) {
            assert!(w[0] < w[1]);
        }

        assert!(select_regular_sample(&keys, 5, 3, 0).is_err());
    }

    #[test]
    fn random_sample_whole_array_and_first_draw() {
        let keys: Vec<i64> = (0..10).collect();
        let mut rng = Prng::new(5);
        let sample = select_random_sample(&keys, 10, &mut rng, 0).unwrap();
        assert_eq!(sample.iter().map(|s| s.key).collect::<Vec<_>>(), keys);

        // s=1 lands on the rng's first draw mod n_local
        let mut a = Prng::new(17);
        let expect = a.below(10);
        let mut b = Prng::new(17);
        let sample = select_random_sample(&keys, 1, &mut b, 0).unwrap();
        assert_eq!(sample[0].origin_index, expect);

        assert!(select_random_sample(&keys, 11, &mut rng, 0).is_err());
    }

    #[test]
    fn random_sample_position_frequencies() {
        // 10^4 trials, n=10, s=2: each position within 5 sigma of uniform
        let keys: Vec<i64> = (0..10).collect();
        let mut rng = Prng::new(23);
        let trials = 10_000;
        let mut hist = [0u64; 10];
        for _ in 0..trials {
            for rec in select_random_sample(&keys, 2, &mut rng, 0).unwrap() {
                hist[rec.origin_index as usize] += 1;
            }
        }
        let expect = trials as f64 * 2.0 / 10.0;
        let sigma = (trials as f64 * 0.2 * 0.8).sqrt();
        for &c in &hist {
            assert!((c as f64 - expect).abs() < 5.0 * sigma, "hist={:?}", hist);
        }
    }

    #[test]
    fn splitter_search_tag_order() {
        let keys = vec![1i64, 2, 3, 4];
        // splitter key 3 tagged (pid 0, idx 0); local pid 1 owns the 3
        let (b, _) = splitter_search(&keys, &[SampleRecord::new(3, 0, 0)], 1);
        assert_eq!(b, vec![2, 4]);

        // splitter above everything
        let (b, _) = splitter_search(&keys, &[SampleRecord::new(100, 0, 0)], 1);
        assert_eq!(b[0], 4);

        // all keys equal to the splitter key, splitter tagged with the top pid
        let equal = vec![7i64; 6];
        let (b, _) = splitter_search(&equal, &[SampleRecord::new(7, 3, u64::MAX)], 1);
        assert_eq!(b[0], 6);
        let (b, _) = splitter_search(&equal, &[SampleRecord::new(7, 0, 0)], 1);
        assert_eq!(b[0], 0);
    }

    #[test]
    fn splitter_search_matches_linear_scan() {
        let mut rng = Prng::new(31);
        for _ in 0..20 {
            let n = 200 + rng.below(200) as usize;
            let mut keys: Vec<i64> = (0..n).map(|_| rng.below(40) as i64).collect();
            keys.sort_unstable();
            let p = 8;
            let my_pid = rng.below(p as u64) as u32;
            let splitters: Vec<SampleRecord> = {
                let mut s: Vec<SampleRecord> = (0..p - 1)
                    .map(|_| {
                        SampleRecord::new(
                            rng.below(40) as i64,
                            rng.below(p as u64) as u32,
                            rng.below(64),
                        )
                    })
                    .collect();
                s.sort();
                s
            };
            let (fast, _) = splitter_search(&keys, &splitters, my_pid);
            for (d, sp) in splitters.iter().enumerate() {
                let slow = keys
                    .iter()
                    .enumerate()
                    .filter(|(j, k)| SampleRecord::new(**k, my_pid, *j as u64) < *sp)
                    .count();
                assert_eq!(fast[d], slow);
            }
        }
    }

    #[test]
    fn pad_strip_round_trip() {
        let mut v = vec![1i64, 2];
        pad_to(&mut v, 4);
        assert_eq!(v, vec![1, 2, i64::MAX, i64::MAX]);
        strip_sentinels(&mut v);
        assert_eq!(v, vec![1, 2]);
    }
}
