use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Independent seed for one stage of a seeded run.
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut buf = seed.to_le_bytes().to_vec();
    buf.extend_from_slice(stage.as_bytes());
    fnv1a(&buf)
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn sort_desc_by_score<T: AsRef<str>>(items: &mut [(T, f64)]) {
    items.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.as_ref().cmp(b.0.as_ref()))
    });
}
