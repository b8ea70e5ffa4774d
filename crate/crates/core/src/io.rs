//! Binary model persistence and text export.
//!
//! Layout (little-endian):
//!
//! ```text
//! header   magic "ADGM" | version u32 | V u64 | D u32 | T u32 | alpha f64 | total_tokens u64
//! vocab    V × (len u32 | UTF-8 bytes | freq u64)                  in id order
//! codes    V × (len u16 | node ids u32 × len | sign bits ⌈len/8⌉)  bit set = +1
//! counts   f64 × V·T
//! input    f32 × V·T·D
//! output   f32 × (V−1)·D
//! crc32    u32 over every preceding byte
//! ```

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::huffman::HuffmanCode;
use crate::math::Scalar;
use crate::model::SenseModel;

pub const MAGIC: &[u8; 4] = b"ADGM";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 40;

/// Serialize a model to bytes.
pub fn model_to_bytes(model: &SenseModel<f32>) -> Vec<u8> {
    let v = model.num_words();
    let (t, d) = (model.senses(), model.dim());
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * v * t + 4 * (v * t * d + v * d) + 32 * v);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(v as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u32).to_le_bytes());
    buf.extend_from_slice(&(t as u32).to_le_bytes());
    buf.extend_from_slice(&model.alpha().to_le_bytes());
    buf.extend_from_slice(&model.vocab().total_tokens().to_le_bytes());

    for (word, &freq) in model.vocab().words().iter().zip(model.vocab().freqs()) {
        buf.extend_from_slice(&(word.len() as u32).to_le_bytes());
        buf.extend_from_slice(word.as_bytes());
        buf.extend_from_slice(&freq.to_le_bytes());
    }

    for w in 0..v as u32 {
        let path = model.code().path(w);
        buf.extend_from_slice(&(path.len() as u16).to_le_bytes());
        for &n in path.nodes {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        let mut bits = vec![0u8; path.len().div_ceil(8)];
        for (i, &s) in path.signs.iter().enumerate() {
            if s > 0 {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        buf.extend_from_slice(&bits);
    }

    for &c in model.counts() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for &x in model.input().iter().chain(model.output()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn save_model(model: &SenseModel<f32>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&model_to_bytes(model))?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SenseModel<f32>> {
    model_from_bytes(&fs::read(path)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::CorruptModel("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f32_block(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::CorruptModel("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect())
    }

    fn f64_block(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::CorruptModel("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }
}

/// Parse and verify a serialized model.
pub fn model_from_bytes(bytes: &[u8]) -> Result<SenseModel<f32>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).map_err(|_| Error::CorruptModel("bad magic".into()))? != MAGIC {
        return Err(Error::CorruptModel("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let v = usize::try_from(r.u64()?).map_err(|_| Error::CorruptModel("vocabulary too large".into()))?;
    let d = r.u32()? as usize;
    let t = r.u32()? as usize;
    let alpha = r.f64()?;
    let total_tokens = r.u64()?;
    // Each word needs at least 14 bytes; reject absurd sizes before allocating.
    if v.saturating_mul(14) > bytes.len() || d == 0 || t == 0 {
        return Err(Error::CorruptModel("implausible header".into()));
    }

    let mut entries = Vec::with_capacity(v);
    for _ in 0..v {
        let len = r.u32()? as usize;
        let word = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::CorruptModel("word is not UTF-8".into()))?
            .to_owned();
        entries.push((word, r.u64()?));
    }

    let mut paths = Vec::with_capacity(v);
    for _ in 0..v {
        let len = r.u16()? as usize;
        let mut nodes = Vec::with_capacity(len);
        for _ in 0..len {
            nodes.push(r.u32()?);
        }
        let bits = r.take(len.div_ceil(8))?;
        let signs = (0..len)
            .map(|i| if bits[i / 8] >> (i % 8) & 1 == 1 { 1i8 } else { -1i8 })
            .collect();
        paths.push((nodes, signs));
    }

    let vt = v.checked_mul(t).ok_or_else(|| Error::CorruptModel("size overflow".into()))?;
    let counts = r.f64_block(vt)?;
    let input = r.f32_block(vt.checked_mul(d).ok_or_else(|| Error::CorruptModel("size overflow".into()))?)?;
    let output = r.f32_block(v.saturating_sub(1) * d)?;

    let body_end = r.pos;
    let stored = r.u32()?;
    if r.pos != bytes.len() {
        return Err(Error::CorruptModel(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let vocab = Vocabulary::from_parts(entries);
    if vocab.total_tokens() != total_tokens {
        return Err(Error::CorruptModel("token total disagrees with frequencies".into()));
    }
    let code = HuffmanCode::from_paths(paths)?;
    SenseModel::from_parts(vocab, code, d, t, alpha, input, output, counts)
}

/// Write one line per retained `(word, sense)`: `word#k prob v1 … vD`, where
/// senses with prior probability ≤ `epsilon` are dropped.
pub fn export_text<F: Scalar + std::fmt::Display, W: Write>(
    model: &SenseModel<F>,
    epsilon: f64,
    mut out: W,
) -> io::Result<usize> {
    let mut lines = 0;
    for w in 0..model.num_words() as u32 {
        let prior = model.prior_sense_probs(w);
        for (k, &p) in prior.probs().iter().enumerate() {
            if p <= epsilon {
                continue;
            }
            write!(out, "{}#{} {}", model.vocab().word(w), k, p)?;
            for x in model.in_vec(w, k) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
            lines += 1;
        }
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{train, TrainingConfig};

    fn trained() -> SenseModel<f32> {
        let text = "a b c a b d a c e b a d c a b e a b c d a ".repeat(30);
        let cfg = TrainingConfig {
            dim: 6,
            senses: 3,
            min_count: 1,
            window: 4,
            epochs: 2,
            seed: 42,
            ..TrainingConfig::default()
        };
        train(text.split_whitespace(), &cfg).unwrap()
    }

    fn block_sizes(m: &SenseModel<f32>) -> (usize, usize) {
        let vocab: usize = m.vocab().words().iter().map(|w| 4 + w.len() + 8).sum();
        let code: usize = (0..m.num_words() as u32)
            .map(|w| {
                let l = m.code().path(w).len();
                2 + 4 * l + l.div_ceil(8)
            })
            .sum();
        (vocab, code)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = trained();
        let bytes = model_to_bytes(&m);
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_bytes(&back), bytes);
    }

    #[test]
    fn file_size_matches_layout() {
        let m = trained();
        let (v, t, d) = (m.num_words(), m.senses(), m.dim());
        let (vocab, code) = block_sizes(&m);
        let want = HEADER_LEN + vocab + code + 8 * v * t + 4 * (v * t * d + (v - 1) * d) + 4;
        assert_eq!(model_to_bytes(&m).len(), want);
    }

    #[test]
    fn detects_corruption() {
        let m = trained();
        let bytes = model_to_bytes(&m);

        let mut flipped = bytes.clone();
        let at = bytes.len() - 20;
        flipped[at] ^= 0x01;
        assert!(matches!(model_from_bytes(&flipped), Err(Error::ChecksumMismatch { .. })));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(model_from_bytes(&magic), Err(Error::CorruptModel(_))));

        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(model_from_bytes(&version), Err(Error::UnsupportedVersion(9))));

        assert!(matches!(model_from_bytes(&bytes[..bytes.len() - 7]), Err(Error::CorruptModel(_))));
        assert!(model_from_bytes(&[]).is_err());
    }

    #[test]
    fn export_line_count() {
        let m = trained();
        let mut buf = Vec::new();
        let n = export_text(&m, 1e-3, &mut buf).unwrap();
        let want: usize = (0..m.num_words() as u32).map(|w| m.sense_count(w, 1e-3)).sum();
        assert_eq!(n, want);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), want);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("a#0 "));
        assert_eq!(first.split(' ').count(), 2 + m.dim());
    }
}
