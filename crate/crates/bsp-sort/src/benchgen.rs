//! Deterministic, seedable generators for the seven benchmark input
//! distributions, over 31-bit keys in `[0, 2^31)`.
//!
//! Given the same [`DistributionSpec`] the generator produces identical
//! per-processor arrays on every platform and for any worker count. The
//! `dd` and `wr` constructions are reconstructions (their original
//! definitions are underspecified); correctness of the sorts never depends
//! on their exact shape.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Prng;

/// One past the maximum key value: 2^31.
pub const INT_MAX: i64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    /// Uniform in `[0, 2^31)`.
    U,
    /// Gaussian approximation: mean of four uniform draws.
    G,
    /// Bucket sorted: each processor's array is `p` consecutive uniform
    /// slices of the value range.
    B,
    /// g-group: processors in groups of `g`; bucket `i` of a group-`j`
    /// processor covers value slice `(j*g + p/2 + i) mod p`.
    GG(u32),
    /// Staggered: processor `i < p/2` covers slice `2i+1`, processor
    /// `i >= p/2` covers slice `i - p/2`.
    S,
    /// Deterministic duplicates: huge constant runs at exponentially
    /// shrinking scales (reconstruction).
    DD,
    /// Worst case for regular sampling: processor `i` holds the sorted
    /// cyclic sequence `i, i+p, i+2p, ...` scaled into the value range
    /// (reconstruction).
    WR,
}

impl DistKind {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.to_ascii_lowercase();
        Ok(match t.as_str() {
            "u" => DistKind::U,
            "g" => DistKind::G,
            "b" => DistKind::B,
            "s" => DistKind::S,
            "dd" => DistKind::DD,
            "wr" => DistKind::WR,
            _ => {
                // gg:<g> and the <g>-g spelling
                if let Some(g) = t.strip_prefix("gg:").and_then(|v| v.parse::<u32>().ok()) {
                    DistKind::GG(g)
                } else if let Some(g) =
                    t.strip_suffix("-g").and_then(|v| v.parse::<u32>().ok())
                {
                    DistKind::GG(g)
                } else {
                    return Err(Error::config(format!(
                        "unknown distribution '{}'; expected u|g|b|gg:<g>|s|dd|wr",
                        text
                    )));
                }
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            DistKind::U => "u".into(),
            DistKind::G => "g".into(),
            DistKind::B => "b".into(),
            DistKind::GG(g) => format!("{}-g", g),
            DistKind::S => "s".into(),
            DistKind::DD => "dd".into(),
            DistKind::WR => "wr".into(),
        }
    }
}

/// What to generate: distribution, total keys, processor count, base seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistKind,
    pub n: u64,
    pub p: usize,
    pub seed: u64,
}

/// Human-readable provenance string for reports.
pub fn describe(spec: &DistributionSpec) -> String {
    match spec.kind {
        DistKind::U => "uniform[0,2^31)".into(),
        DistKind::G => "gaussian approx: mean of four uniform[0,2^31) draws".into(),
        DistKind::B => "bucket sorted: p uniform range slices per processor".into(),
        DistKind::GG(g) => format!("{}-group: rotated range slices within processor groups", g),
        DistKind::S => "staggered range slices per processor".into(),
        DistKind::DD => {
            "deterministic duplicates (reconstruction): constant runs at halving scales".into()
        }
        DistKind::WR => {
            "worst-case for regular sampling (reconstruction): cyclic i, i+p, i+2p, ... scaled"
                .into()
        }
    }
}

fn validate(spec: &DistributionSpec) -> Result<()> {
    if spec.p == 0 {
        return Err(Error::config("p must be >= 1"));
    }
    if spec.n == 0 || spec.n % spec.p as u64 != 0 {
        return Err(Error::config(format!(
            "n = {} must be positive and divisible by p = {}",
            spec.n, spec.p
        )));
    }
    if let DistKind::GG(g) = spec.kind {
        if g == 0 || spec.p % g as usize != 0 {
            return Err(Error::config(format!(
                "group size {} must divide p = {}",
                g, spec.p
            )));
        }
    }
    Ok(())
}

/// Generate the per-processor key arrays for `spec`.
pub fn gen(spec: &DistributionSpec) -> Result<Vec<Vec<i64>>> {
    validate(spec)?;
    let p = spec.p;
    let n_loc = (spec.n / p as u64) as usize;
    let slice = INT_MAX / p as i64;
    let mut out = Vec::with_capacity(p);
    for i in 0..p {
        let mut rng = Prng::stream(spec.seed, i);
        let mut keys = Vec::with_capacity(n_loc);
        match spec.kind {
            DistKind::U => {
                for _ in 0..n_loc {
                    keys.push(rng.key31());
                }
            }
            DistKind::G => {
                for _ in 0..n_loc {
                    let sum: i64 = (0..4).map(|_| rng.key31()).sum();
                    keys.push(sum / 4);
                }
            }
            DistKind::B => {
                for b in 0..p {
                    let cnt = n_loc / p + usize::from(b < n_loc % p);
                    let lo = b as i64 * slice;
                    for _ in 0..cnt {
                        keys.push(lo + rng.below(slice as u64) as i64);
                    }
                }
            }
            DistKind::GG(g) => {
                let g = g as usize;
                let group = i / g;
                for b in 0..g {
                    let cnt = n_loc / g + usize::from(b < n_loc % g);
                    let m = (group * g + p / 2 + b) % p;
                    let lo = m as i64 * slice;
                    for _ in 0..cnt {
                        keys.push(lo + rng.below(slice as u64) as i64);
                    }
                }
            }
            DistKind::S => {
                let m = if i < p / 2 { 2 * i + 1 } else { i - p / 2 };
                let lo = m as i64 * slice;
                for _ in 0..n_loc {
                    keys.push(lo + rng.below(slice as u64) as i64);
                }
            }
            DistKind::DD => {
                keys = dd_processor(spec.n, p, n_loc, i);
            }
            DistKind::WR => {
                for j in 0..n_loc {
                    let v = (i as u128 + j as u128 * p as u128) * INT_MAX as u128
                        / spec.n as u128;
                    keys.push(v as i64);
                }
            }
        }
        debug_assert_eq!(keys.len(), n_loc);
        out.push(keys);
    }
    Ok(out)
}

/// Constant value of the i-th duplicate scale: `lg(n / (p * 2^(i-1)))`,
/// clamped at zero.
fn dd_value(n: u64, p: usize, i: u32) -> i64 {
    let lgn = 63 - n.leading_zeros() as i64;
    let lgp = (usize::BITS - 1 - p.leading_zeros()) as i64;
    (lgn - lgp - (i as i64 - 1)).max(0)
}

fn dd_processor(n: u64, p: usize, n_loc: usize, rank: usize) -> Vec<i64> {
    // leading blocks of p/2, p/4, ... processors hold one constant each; the
    // last processor recursively halves its own array with later constants
    let mut start = 0usize;
    let mut size = p / 2;
    let mut i = 1u32;
    while size >= 1 && start + size <= p - 1 {
        if (start..start + size).contains(&rank) {
            return vec![dd_value(n, p, i); n_loc];
        }
        start += size;
        size /= 2;
        i += 1;
    }
    debug_assert_eq!(rank, p - 1);
    let mut keys = Vec::with_capacity(n_loc);
    let mut pos = 0usize;
    while pos < n_loc {
        let sz = ((n_loc - pos) / 2).max(1);
        keys.extend(std::iter::repeat(dd_value(n, p, i)).take(sz));
        pos += sz;
        i += 1;
    }
    keys
}

/// Dump keys as little-endian 64-bit words (rank order, concatenated).
pub fn dump_keys(path: &Path, arrays: &[Vec<i64>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for arr in arrays {
        for k in arr {
            f.write_all(&k.to_le_bytes())?;
        }
    }
    f.flush()?;
    Ok(())
}

/// Load a little-endian 64-bit binary key file.
pub fn load_keys(path: &Path) -> Result<Vec<i64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::input(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
