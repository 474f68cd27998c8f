//! ECX: a single-file binary container for per-occurrence, per-layer vectors.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic    4 bytes  "ECX1"
//! version  u16      1
//! flags    u16      0
//! L        u32      layer count (layer 0 is the embedding layer)
//! D        u32      hidden size
//! V        u32      vocab entries
//! N        u64      record count
//! vocab    V x (u16 byte length, UTF-8 bytes); word_id = entry index
//! records  N x (word_id u32, sentence_id u32, position u32, L x D f32 layer-major)
//! ```
//!
//! Reading validates everything and never returns a partially repaired dataset.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::corpus::{OccurrenceKey, WordOccurrence};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ECX1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: u64 = 28;
/// word_id, sentence_id and position.
pub const RECORD_PREFIX_LEN: u64 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub word_id: u32,
    pub sentence_id: u32,
    pub position: u32,
    /// `num_layers * dim` values, layer-major.
    pub vectors: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn occurrence(&self) -> WordOccurrence {
        WordOccurrence {
            word_id: self.word_id,
            sentence_id: self.sentence_id,
            position: self.position,
        }
    }

    pub fn layer(&self, layer: usize, dim: usize) -> &[f32] {
        &self.vectors[layer * dim..(layer + 1) * dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    pub num_layers: usize,
    pub dim: usize,
    pub vocab: Vec<String>,
    pub records: Vec<EmbeddingRecord>,
}

/// All vectors of one layer, copied into a contiguous `N x D` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSlice {
    pub layer: usize,
    pub points: Array2<f32>,
    /// Row `i` of `points` belongs to `keys[i]`.
    pub keys: Vec<WordOccurrence>,
}

impl EmbeddingDataset {
    pub fn record_len(&self) -> u64 {
        RECORD_PREFIX_LEN + 4 * (self.num_layers * self.dim) as u64
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.dim == 0 {
            return Err(Error::InvalidDataset(format!(
                "L = {} and D = {} must both be at least 1",
                self.num_layers, self.dim
            )));
        }
        if u32::try_from(self.num_layers).is_err()
            || u32::try_from(self.dim).is_err()
            || u32::try_from(self.vocab.len()).is_err()
        {
            return Err(Error::InvalidDataset("header field exceeds u32".into()));
        }
        if let Some(w) = self.vocab.iter().find(|w| w.len() > u16::MAX as usize) {
            return Err(Error::InvalidDataset(format!(
                "vocab entry of {} bytes exceeds the u16 length prefix",
                w.len()
            )));
        }
        let width = self.num_layers * self.dim;
        let mut seen = HashSet::with_capacity(self.records.len());
        for (i, rec) in self.records.iter().enumerate() {
            if rec.vectors.len() != width {
                return Err(Error::InvalidDataset(format!(
                    "record {i} has {} values, expected {width}",
                    rec.vectors.len()
                )));
            }
            if rec.word_id as usize >= self.vocab.len() {
                return Err(Error::InvalidDataset(format!(
                    "record {i} references word_id {} beyond vocab of {}",
                    rec.word_id,
                    self.vocab.len()
                )));
            }
            if let Some(j) = rec.vectors.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    record: i,
                    layer: j / self.dim,
                    component: j % self.dim,
                });
            }
            if !seen.insert((rec.word_id, rec.sentence_id, rec.position)) {
                return Err(Error::InvalidDataset(format!(
                    "record {i} duplicates occurrence ({}, {}, {})",
                    rec.word_id, rec.sentence_id, rec.position
                )));
            }
        }
        Ok(())
    }

    /// Encodes the dataset. Fails before producing any bytes if invalid.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let vocab_len: usize = self.vocab.iter().map(|w| 2 + w.len()).sum();
        let total =
            HEADER_LEN as usize + vocab_len + self.records.len() * self.record_len() as usize;
        let mut buf = Vec::with_capacity(total);
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&(self.num_layers as u32).to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.vocab.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for word in &self.vocab {
            buf.extend_from_slice(&(word.len() as u16).to_le_bytes());
            buf.extend_from_slice(word.as_bytes());
        }
        for rec in &self.records {
            buf.extend_from_slice(&rec.word_id.to_le_bytes());
            buf.extend_from_slice(&rec.sentence_id.to_le_bytes());
            buf.extend_from_slice(&rec.position.to_le_bytes());
            for v in &rec.vectors {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        debug_assert_eq!(buf.len(), total);
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let actual = bytes.len() as u64;
        let mut r = ByteReader { bytes, pos: 0 };

        let magic: [u8; 4] = r.take(4, HEADER_LEN)?.try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic { found: magic });
        }
        let version = r.u16(HEADER_LEN)?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion { found: version });
        }
        let flags = r.u16(HEADER_LEN)?;
        if flags != 0 {
            return Err(Error::UnsupportedFlags { found: flags });
        }
        let num_layers = r.u32(HEADER_LEN)? as usize;
        let dim = r.u32(HEADER_LEN)? as usize;
        let vocab_size = r.u32(HEADER_LEN)? as usize;
        let num_records = r.u64(HEADER_LEN)?;
        if num_layers == 0 || dim == 0 {
            return Err(Error::InvalidDataset(format!(
                "L = {num_layers} and D = {dim} must both be at least 1"
            )));
        }

        let mut vocab = Vec::with_capacity(vocab_size.min(1 << 20));
        for i in 0..vocab_size {
            // Lower bound: the rest of the vocab needs at least its length prefixes.
            let min_rest = r.pos as u64 + 2 * (vocab_size - i) as u64;
            let len = r.u16(min_rest)? as usize;
            let raw = r.take(len, r.pos as u64 + len as u64)?;
            let word = std::str::from_utf8(raw).map_err(|_| {
                Error::InvalidDataset(format!("vocab entry {i} is not valid UTF-8"))
            })?;
            vocab.push(word.to_owned());
        }

        let record_len = RECORD_PREFIX_LEN + 4 * (num_layers as u64) * (dim as u64);
        let expected = num_records
            .checked_mul(record_len)
            .and_then(|n| n.checked_add(r.pos as u64))
            .ok_or_else(|| Error::InvalidDataset("record section size overflows".into()))?;
        if actual < expected {
            return Err(Error::Truncated { expected, actual });
        }
        if actual > expected {
            return Err(Error::TrailingBytes { expected, actual });
        }

        let width = num_layers * dim;
        let mut records = Vec::with_capacity(num_records as usize);
        for _ in 0..num_records {
            let word_id = r.u32(expected)?;
            let sentence_id = r.u32(expected)?;
            let position = r.u32(expected)?;
            let raw = r.take(4 * width, expected)?;
            let vectors = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            records.push(EmbeddingRecord {
                word_id,
                sentence_id,
                position,
                vectors,
            });
        }

        let ds = EmbeddingDataset {
            num_layers,
            dim,
            vocab,
            records,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Copies layer `layer` of every record into a contiguous matrix.
    pub fn slice_layer(&self, layer: usize) -> Result<LayerSlice> {
        if layer >= self.num_layers {
            return Err(Error::LayerOutOfRange {
                layer,
                num_layers: self.num_layers,
            });
        }
        let mut data = Vec::with_capacity(self.records.len() * self.dim);
        for rec in &self.records {
            data.extend_from_slice(rec.layer(layer, self.dim));
        }
        let points = Array2::from_shape_vec((self.records.len(), self.dim), data)
            .map_err(|e| Error::Invariant(e.to_string()))?;
        Ok(LayerSlice {
            layer,
            points,
            keys: self
                .records
                .iter()
                .map(EmbeddingRecord::occurrence)
                .collect(),
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = OccurrenceKey> + '_ {
        self.records.iter().map(|r| r.occurrence().key())
    }
}

pub fn write_dataset(ds: &EmbeddingDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = ds.to_bytes()?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingDataset::from_bytes(&bytes)
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    /// `expected` is the smallest total file size consistent with what has
    /// been read so far; it is reported when the input runs out.
    fn take(&mut self, n: usize, expected: u64) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: expected.max(end as u64),
                actual: self.bytes.len() as u64,
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self, expected: u64) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2, expected)?.try_into().unwrap(),
        ))
    }

    fn u32(&mut self, expected: u64) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, expected)?.try_into().unwrap(),
        ))
    }

    fn u64(&mut self, expected: u64) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8, expected)?.try_into().unwrap(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(num_layers: usize, dim: usize) -> EmbeddingDataset {
        EmbeddingDataset {
            num_layers,
            dim,
            vocab: vec!["sea".into(), "tree".into()],
            records: vec![EmbeddingRecord {
                word_id: 1,
                sentence_id: 0,
                position: 2,
                vectors: (0..num_layers * dim)
                    .map(|i| i as f32 * 0.5 - 1.0)
                    .collect(),
            }],
        }
    }

    #[test]
    fn single_record_file_size() {
        let ds = tiny(2, 3);
        let bytes = ds.to_bytes().unwrap();
        let vocab = (2 + 3) + (2 + 4);
        assert_eq!(bytes.len() as u64, HEADER_LEN + vocab + (12 + 2 * 3 * 4));
    }

    #[test]
    fn header_is_little_endian() {
        let bytes = tiny(2, 3).to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"ECX1");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[3, 0, 0, 0]);
        assert_eq!(&bytes[16..20], &[2, 0, 0, 0]);
        assert_eq!(&bytes[20..28], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[28..30], &[3, 0]);
        assert_eq!(&bytes[30..33], b"sea");
    }

    #[test]
    fn nan_is_rejected_before_writing() {
        let mut ds = tiny(1, 2);
        ds.records[0].vectors[1] = f32::NAN;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ecx");
        assert!(matches!(
            write_dataset(&ds, &path),
            Err(Error::NonFinite {
                record: 0,
                layer: 0,
                component: 1
            })
        ));
        assert!(!path.exists());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = tiny(1, 1).to_bytes().unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            EmbeddingDataset::from_bytes(&bytes),
            Err(Error::BadMagic { found }) if &found == b"XXXX"
        ));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = tiny(1, 1).to_bytes().unwrap();
        bytes[4] = 2;
        assert!(matches!(
            EmbeddingDataset::from_bytes(&bytes),
            Err(Error::UnsupportedVersion { found: 2 })
        ));
    }

    #[test]
    fn truncated_records_name_sizes() {
        let bytes = tiny(2, 3).to_bytes().unwrap();
        let cut = &bytes[..bytes.len() - 5];
        match EmbeddingDataset::from_bytes(cut) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(actual, cut.len() as u64);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_header_and_vocab() {
        let bytes = tiny(2, 3).to_bytes().unwrap();
        for len in [0, 3, 10, 27, 29, 31] {
            assert!(
                matches!(
                    EmbeddingDataset::from_bytes(&bytes[..len]),
                    Err(Error::Truncated { .. })
                ),
                "len {len}"
            );
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut bytes = tiny(1, 1).to_bytes().unwrap();
        bytes.push(0);
        assert!(matches!(
            EmbeddingDataset::from_bytes(&bytes),
            Err(Error::TrailingBytes { .. })
        ));
    }

    #[test]
    fn nan_payload_on_read() {
        let mut bytes = tiny(1, 2).to_bytes().unwrap();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            EmbeddingDataset::from_bytes(&bytes),
            Err(Error::NonFinite {
                record: 0,
                layer: 0,
                component: 1
            })
        ));
    }

    #[test]
    fn out_of_vocab_word_id_on_read() {
        let mut ds = tiny(1, 1);
        ds.records[0].word_id = 0;
        let mut bytes = ds.to_bytes().unwrap();
        let off = bytes.len() - 16;
        bytes[off..off + 4].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            EmbeddingDataset::from_bytes(&bytes),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn duplicate_occurrence_is_invalid() {
        let mut ds = tiny(1, 1);
        ds.records.push(ds.records[0].clone());
        assert!(matches!(ds.validate(), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn layer_out_of_range() {
        let ds = tiny(2, 3);
        assert!(matches!(
            ds.slice_layer(2),
            Err(Error::LayerOutOfRange {
                layer: 2,
                num_layers: 2
            })
        ));
    }

    #[test]
    fn single_layer_slice_is_identity() {
        let ds = tiny(1, 4);
        let s = ds.slice_layer(0).unwrap();
        assert_eq!(
            s.points.as_slice().unwrap(),
            ds.records[0].vectors.as_slice()
        );
        assert_eq!(s.keys, vec![ds.records[0].occurrence()]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = EmbeddingDataset> {
            (1usize..4, 1usize..5, 1usize..6, 0usize..12).prop_flat_map(|(l, d, v, n)| {
                let vocab = prop::collection::vec("[a-zA-Z]{1,6}", v);
                let bits = prop::collection::vec(
                    prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO,
                    l * d,
                );
                let recs = prop::collection::vec((0..v as u32, bits), n);
                (Just(l), Just(d), vocab, recs).prop_map(|(l, d, vocab, recs)| EmbeddingDataset {
                    num_layers: l,
                    dim: d,
                    vocab,
                    records: recs
                        .into_iter()
                        .enumerate()
                        .map(|(i, (w, vectors))| EmbeddingRecord {
                            word_id: w,
                            sentence_id: i as u32,
                            position: 0,
                            vectors,
                        })
                        .collect(),
                })
            })
        }

        proptest! {
            #[test]
            fn round_trip_is_bit_exact(ds in dataset()) {
                let bytes = ds.to_bytes().unwrap();
                let back = EmbeddingDataset::from_bytes(&bytes).unwrap();
                prop_assert_eq!(&back.vocab, &ds.vocab);
                prop_assert_eq!(back.records.len(), ds.records.len());
                for (a, b) in back.records.iter().zip(&ds.records) {
                    let abits: Vec<u32> = a.vectors.iter().map(|v| v.to_bits()).collect();
                    let bbits: Vec<u32> = b.vectors.iter().map(|v| v.to_bits()).collect();
                    prop_assert_eq!(abits, bbits);
                    prop_assert_eq!(a.occurrence(), b.occurrence());
                }
                prop_assert_eq!(bytes, back.to_bytes().unwrap());
            }

            #[test]
            fn layer_slices_partition_records(ds in dataset()) {
                let slices: Vec<LayerSlice> =
                    (0..ds.num_layers).map(|l| ds.slice_layer(l).unwrap()).collect();
                for (i, rec) in ds.records.iter().enumerate() {
                    let restacked: Vec<f32> = slices
                        .iter()
                        .flat_map(|s| s.points.row(i).to_vec())
                        .collect();
                    prop_assert_eq!(&restacked, &rec.vectors);
                }
            }
        }
    }
}
