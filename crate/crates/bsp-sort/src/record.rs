//! Sortable record types and their 64-bit wire encoding.
//!
//! The engine moves flat sequences of 64-bit words between processors, so
//! everything routed by the sorting algorithms implements [`Record`]: a fixed
//! word count, a primary sort key, and a reserved sentinel value that orders
//! above every real record (used for padding).
//!
//! Duplicate keys are handled by tagging *sample* keys with the processor id
//! and array index of their origin ([`SampleRecord`]); the resulting
//! `(key, pid, index)` order is strict, so splitter comparisons never see a
//! tie even when every input key is equal.

use std::cmp::Ordering;

/// A fixed-size element the engine can ship between processors.
pub trait Record: Copy + Send + Sync + 'static {
    /// Words occupied on the wire.
    const WIRE_WORDS: usize;

    /// Primary sort key.
    fn key(&self) -> i64;

    /// Reserved padding element, strictly above every real record.
    fn sentinel() -> Self;

    fn is_sentinel(&self) -> bool;

    fn encode(&self, out: &mut Vec<u64>);

    fn decode(words: &[u64]) -> Self;
}

/// Plain 64-bit signed sort key. `i64::MAX` is reserved as the sentinel;
/// callers feeding untrusted data should bias it down first (the harness
/// does, with a note in the report).
impl Record for i64 {
    const WIRE_WORDS: usize = 1;

    #[inline]
    fn key(&self) -> i64 {
        *self
    }

    fn sentinel() -> Self {
        i64::MAX
    }

    #[inline]
    fn is_sentinel(&self) -> bool {
        *self == i64::MAX
    }

    #[inline]
    fn encode(&self, out: &mut Vec<u64>) {
        out.push(*self as u64);
    }

    #[inline]
    fn decode(words: &[u64]) -> Self {
        words[0] as i64
    }
}

/// A key carrying an opaque payload tag. The pipeline never looks at the tag;
/// it exists so tests (and curious users) can observe end-to-end stability of
/// the full sort on duplicate-heavy data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedKey {
    pub key: i64,
    pub tag: u64,
}

impl Record for TaggedKey {
    const WIRE_WORDS: usize = 2;

    #[inline]
    fn key(&self) -> i64 {
        self.key
    }

    fn sentinel() -> Self {
        TaggedKey { key: i64::MAX, tag: u64::MAX }
    }

    #[inline]
    fn is_sentinel(&self) -> bool {
        self.key == i64::MAX && self.tag == u64::MAX
    }

    #[inline]
    fn encode(&self, out: &mut Vec<u64>) {
        out.push(self.key as u64);
        out.push(self.tag);
    }

    #[inline]
    fn decode(words: &[u64]) -> Self {
        TaggedKey { key: words[0] as i64, tag: words[1] }
    }
}

/// A sample key tagged with its origin: the processor that holds it and its
/// index in that processor's locally sorted array. The derived lexicographic
/// `(key, origin_pid, origin_index)` order is strict for distinct origins,
/// which is exactly what splitter selection and partitioning rely on.
///
/// Exactly three 64-bit words, in memory and on the wire.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SampleRecord {
    pub key: i64,
    pub origin_pid: u32,
    pub origin_index: u64,
}

impl SampleRecord {
    pub fn new(key: i64, origin_pid: u32, origin_index: u64) -> Self {
        SampleRecord { key, origin_pid, origin_index }
    }
}

/// Strict comparison under the `(key, origin_pid, origin_index)` order.
/// Never returns `Equal` for records with distinct origins.
#[inline]
pub fn cmp_tagged(a: &SampleRecord, b: &SampleRecord) -> Ordering {
    a.cmp(b)
}

impl Record for SampleRecord {
    const WIRE_WORDS: usize = 3;

    #[inline]
    fn key(&self) -> i64 {
        self.key
    }

    fn sentinel() -> Self {
        SampleRecord { key: i64::MAX, origin_pid: u32::MAX, origin_index: u64::MAX }
    }

    #[inline]
    fn is_sentinel(&self) -> bool {
        self.origin_pid == u32::MAX && self.origin_index == u64::MAX
    }

    #[inline]
    fn encode(&self, out: &mut Vec<u64>) {
        out.push(self.key as u64);
        out.push(self.origin_pid as u64);
        out.push(self.origin_index);
    }

    #[inline]
    fn decode(words: &[u64]) -> Self {
        SampleRecord {
            key: words[0] as i64,
            origin_pid: words[1] as u32,
            origin_index: words[2],
        }
    }
}

/// Encode a slice of records into a fresh word buffer.
pub fn encode_all<R: Record>(records: &[R]) -> Vec<u64> {
    let mut out = Vec::with_capacity(records.len() * R::WIRE_WORDS);
    for r in records {
        r.encode(&mut out);
    }
    out
}

/// Decode a word buffer produced by [`encode_all`].
pub fn decode_all<R: Record>(words: &[u64]) -> Vec<R> {
    debug_assert_eq!(words.len() % R::WIRE_WORDS, 0);
    words.chunks_exact(R::WIRE_WORDS).map(R::decode).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_record_is_three_words() {
        assert_eq!(std::mem::size_of::<SampleRecord>(), 24);
        assert_eq!(SampleRecord::WIRE_WORDS, 3);
    }

    #[test]
    fn tagged_order_key_then_pid_then_index() {
        // key decides
        assert_eq!(
            cmp_tagged(&SampleRecord::new(5, 0, 3), &SampleRecord::new(7, 2, 0)),
            Ordering::Less
        );
        // pid decides
        assert_eq!(
            cmp_tagged(&SampleRecord::new(5, 1, 3), &SampleRecord::new(5, 2, 0)),
            Ordering::Less
        );
        // index decides
        assert_eq!(
            cmp_tagged(&SampleRecord::new(5, 1, 3), &SampleRecord::new(5, 1, 4)),
            Ordering::Less
        );
    }

    #[test]
    fn tagged_order_is_strict_on_distinct_origins() {
        let a = SampleRecord::new(42, 3, 17);
        let b = SampleRecord::new(42, 3, 18);
        assert_ne!(cmp_tagged(&a, &b), Ordering::Equal);
        assert_eq!(cmp_tagged(&a, &a), Ordering::Equal);
    }

    #[test]
    fn wire_round_trip() {
        let recs = vec![
            SampleRecord::new(-9, 1, 0),
            SampleRecord::new(0, 0, 7),
            SampleRecord::sentinel(),
        ];
        let words = encode_all(&recs);
        assert_eq!(words.len(), 9);
        assert_eq!(decode_all::<SampleRecord>(&words), recs);

        let keys: Vec<i64> = vec![i64::MIN, -1, 0, 1, i64::MAX - 1];
        assert_eq!(decode_all::<i64>(&encode_all(&keys)), keys);
    }
}
