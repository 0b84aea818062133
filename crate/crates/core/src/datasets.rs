//! Synthetic key generation and key-file I/O.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. ChaCha is a counter-based stream cipher generator whose
//! output is fully specified, so generated key sets are identical on every
//! platform.
//!
//! Binary key files hold a little-endian `u64` count followed by that many
//! little-endian `u64` keys in non-decreasing order. Text key files hold one
//! decimal key per line.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::KeySet;

/// Seeded generator used by every randomized component.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    Normal,
    Exponential,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Uniform, Distribution::Normal, Distribution::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Normal => "normal",
            Distribution::Exponential => "exponential",
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Distribution::Uniform => rng.gen::<f64>(),
            Distribution::Normal => rng.sample(StandardNormal),
            Distribution::Exponential => rng.sample(Exp1),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown distribution `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyFormat {
    Bin,
    Txt,
}

impl FromStr for KeyFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" => Ok(KeyFormat::Bin),
            "txt" => Ok(KeyFormat::Txt),
            _ => Err(Error::InvalidParameter(format!("unknown key format `{s}`"))),
        }
    }
}

/// Synthetic key set: `n` draws, min-max scaled to `[0, range]`, rounded and
/// deduplicated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub distribution: Distribution,
    pub seed: u64,
    pub range: u64,
    pub n: usize,
}

/// `n` consecutive keys of a sorted key file from a random start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub path: PathBuf,
    pub n: usize,
    pub seed: u64,
    pub format: KeyFormat,
}

/// Generates a key set. Rounding is half away from zero. Duplicates created
/// by rounding are dropped without resampling, so the result may hold fewer
/// than `n` keys; the extremes are always `0` and `range`.
pub fn generate(spec: &SynthSpec) -> Result<KeySet> {
    if spec.range == 0 {
        return Err(Error::InvalidParameter("range must be at least 1".into()));
    }
    if spec.n < 2 {
        return Err(Error::InvalidParameter("at least two samples are required".into()));
    }
    let mut rng = rng(spec.seed);
    let raw: Vec<f64> = (0..spec.n).map(|_| spec.distribution.sample(&mut rng)).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::DegenerateSample);
    }
    let r = spec.range as f64;
    let mut keys: Vec<u64> = raw.iter().map(|&x| ((x - lo) / (hi - lo) * r).round() as u64).collect();
    keys.sort_unstable();
    keys.dedup();
    KeySet::new(keys).map_err(|_| Error::DegenerateSample)
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedFile(msg.into())
}

fn check_sorted(keys: &[u64], base: usize) -> Result<()> {
    match keys.windows(2).position(|w| w[0] > w[1]) {
        Some(p) => Err(malformed(format!("keys decrease at position {}", base + p + 1))),
        None => Ok(()),
    }
}

/// Header count of a binary key file, validated against the file length.
fn bin_header(file: &mut File) -> Result<u64> {
    let len = file.metadata()?.len();
    let mut header = [0u8; 8];
    file.read_exact(&mut header).map_err(|_| malformed("missing count header"))?;
    let count = u64::from_le_bytes(header);
    if count.checked_mul(8).and_then(|b| b.checked_add(8)) != Some(len) {
        return Err(malformed(format!("header announces {count} keys but the file holds {len} bytes")));
    }
    Ok(count)
}

fn read_bin_range(file: &mut File, start: u64, count: usize) -> Result<Vec<u64>> {
    file.seek(SeekFrom::Start(8 + 8 * start))?;
    let mut buf = vec![0u8; count * 8];
    file.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_txt(path: &Path) -> Result<Vec<u64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut keys = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        keys.push(t.parse::<u64>().map_err(|e| malformed(format!("line {}: {e}", i + 1)))?);
    }
    Ok(keys)
}

/// Reads every key of a key file, which must be non-decreasing.
pub fn read_keys(path: &Path, format: KeyFormat) -> Result<Vec<u64>> {
    let keys = match format {
        KeyFormat::Bin => {
            let mut f = File::open(path)?;
            let count = bin_header(&mut f)?;
            read_bin_range(&mut f, 0, count as usize)?
        }
        KeyFormat::Txt => read_txt(path)?,
    };
    check_sorted(&keys, 0)?;
    Ok(keys)
}

/// Reads a key file as a [`KeySet`], deduplicating repeated keys.
pub fn read_keyset(path: &Path, format: KeyFormat) -> Result<KeySet> {
    let mut keys = read_keys(path, format)?;
    keys.dedup();
    KeySet::new(keys)
}

pub fn write_keys(path: &Path, keys: &[u64], format: KeyFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        KeyFormat::Bin => {
            w.write_all(&(keys.len() as u64).to_le_bytes())?;
            for k in keys {
                w.write_all(&k.to_le_bytes())?;
            }
        }
        KeyFormat::Txt => {
            for k in keys {
                writeln!(w, "{k}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Extracts `n` distinct consecutive keys starting at a uniformly random
/// position with room for `n` keys. Duplicates inside the slice are dropped
/// and the slice extends forward until it holds `n` distinct keys or the
/// file ends.
pub fn load_slice(spec: &SliceSpec) -> Result<KeySet> {
    if spec.n < 2 {
        return Err(Error::InvalidParameter("slices need at least two keys".into()));
    }
    let mut rng = rng(spec.seed);
    let mut out: Vec<u64> = Vec::with_capacity(spec.n);
    let push_distinct = |chunk: &[u64], out: &mut Vec<u64>| {
        for &k in chunk {
            if out.len() == spec.n {
                break;
            }
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
    };
    match spec.format {
        KeyFormat::Bin => {
            let mut f = File::open(&spec.path)?;
            let count = bin_header(&mut f)?;
            if count < spec.n as u64 {
                return Err(Error::FileTooSmall { available: count as usize, needed: spec.n });
            }
            let mut pos = rng.gen_range(0..=count - spec.n as u64);
            let mut last: Option<u64> = None;
            while out.len() < spec.n && pos < count {
                let take = ((spec.n - out.len()) as u64).max(1024).min(count - pos) as usize;
                let chunk = read_bin_range(&mut f, pos, take)?;
                if let (Some(prev), Some(&first)) = (last, chunk.first()) {
                    if first < prev {
                        return Err(malformed(format!("keys decrease at position {pos}")));
                    }
                }
                check_sorted(&chunk, pos as usize)?;
                last = chunk.last().copied();
                push_distinct(&chunk, &mut out);
                pos += take as u64;
            }
        }
        KeyFormat::Txt => {
            let keys = read_keys(&spec.path, KeyFormat::Txt)?;
            if keys.len() < spec.n {
                return Err(Error::FileTooSmall { available: keys.len(), needed: spec.n });
            }
            let start = rng.gen_range(0..=keys.len() - spec.n);
            push_distinct(&keys[start..], &mut out);
        }
    }
    KeySet::new(out).map_err(|_| Error::DegenerateSample)
}
