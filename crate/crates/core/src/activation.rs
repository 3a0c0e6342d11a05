//! Binary activation dumps: one file per (model, dataset, concept).
//!
//! Layout, all integers little-endian, no padding and no trailer:
//!
//! | bytes        | content                                                  |
//! |--------------|----------------------------------------------------------|
//! | 4            | magic `GPRB`                                             |
//! | 2            | format version, `u16` (= 1)                              |
//! | 4            | header length `H`, `u32`                                 |
//! | H            | UTF-8 JSON header (model_id, dataset_name, concept, num_layers, units_per_layer, num_examples) |
//! | E            | labels, one byte each, `0` or `1`                        |
//! | 4·L·U·E      | `f32` scores in `[layer][unit][example]` order           |

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::country::CountryCode;

pub const MAGIC: &[u8; 4] = b"GPRB";
pub const FORMAT_VERSION: u16 = 1;
const PREAMBLE_LEN: usize = 4 + 2 + 4;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("bad magic at offset {offset}")]
    BadMagic { offset: u64 },
    #[error("unsupported format version {version} at offset {offset}")]
    UnsupportedVersion { offset: u64, version: u16 },
    #[error("truncated payload at offset {offset}: expected {expected} bytes, found {found}")]
    TruncatedPayload { offset: u64, expected: u64, found: u64 },
    #[error("invalid label byte {value} at offset {offset}")]
    InvalidLabel { offset: u64, value: u8 },
    #[error("non-finite score at offset {offset}")]
    NonFiniteScore { offset: u64 },
    #[error("malformed header at offset {offset}: {message}")]
    BadHeader { offset: u64, message: String },
    #[error("{count} unexpected trailing bytes at offset {offset}")]
    TrailingBytes { offset: u64, count: u64 },
    #[error("labels need at least one positive and one negative")]
    DegenerateLabels,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite score at layer {layer}, unit {unit}, example {example}")]
    NonFiniteValue { layer: usize, unit: usize, example: usize },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    model_id: String,
    dataset_name: String,
    concept: CountryCode,
    num_layers: usize,
    units_per_layer: usize,
    num_examples: usize,
}

/// Per-example pooled unit responses for one concept dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDump {
    model_id: String,
    dataset_name: String,
    concept: CountryCode,
    num_layers: usize,
    units_per_layer: usize,
    labels: Vec<bool>,
    scores: Vec<f32>,
}

fn non_finite(scores: &[f32], units_per_layer: usize, e: usize) -> Option<DumpError> {
    scores.iter().position(|s| !s.is_finite()).map(|i| {
        let per_layer = units_per_layer * e;
        DumpError::NonFiniteValue { layer: i / per_layer, unit: (i % per_layer) / e, example: i % e }
    })
}

impl ActivationDump {
    /// `scores` is `[layer][unit][example]`, length `num_layers * units_per_layer * labels.len()`.
    pub fn new(
        model_id: impl Into<String>,
        dataset_name: impl Into<String>,
        concept: CountryCode,
        num_layers: usize,
        units_per_layer: usize,
        labels: Vec<bool>,
        scores: Vec<f32>,
    ) -> Result<Self, DumpError> {
        let e = labels.len();
        if num_layers == 0 || units_per_layer == 0 || e == 0 {
            return Err(DumpError::Shape("all dimensions must be positive".into()));
        }
        let expected = num_layers
            .checked_mul(units_per_layer)
            .and_then(|n| n.checked_mul(e))
            .ok_or_else(|| DumpError::Shape("dimensions overflow".into()))?;
        if scores.len() != expected {
            return Err(DumpError::Shape(format!("{} scores for {num_layers}x{units_per_layer}x{e}", scores.len())));
        }
        if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
            return Err(DumpError::DegenerateLabels);
        }
        if let Some(err) = non_finite(&scores, units_per_layer, e) {
            return Err(err);
        }
        Ok(Self {
            model_id: model_id.into(),
            dataset_name: dataset_name.into(),
            concept,
            num_layers,
            units_per_layer,
            labels,
            scores,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dataset_name(&self) -> &str {
        &self.dataset_name
    }

    pub fn concept(&self) -> CountryCode {
        self.concept
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn units_per_layer(&self) -> usize {
        self.units_per_layer
    }

    pub fn num_examples(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    /// The contiguous per-example scores of one unit.
    pub fn unit_scores(&self, layer: usize, unit: usize) -> &[f32] {
        assert!(layer < self.num_layers && unit < self.units_per_layer, "unit ({layer}, {unit}) out of range");
        let e = self.labels.len();
        let start = (layer * self.units_per_layer + unit) * e;
        &self.scores[start..start + e]
    }

    fn header(&self) -> Header {
        Header {
            model_id: self.model_id.clone(),
            dataset_name: self.dataset_name.clone(),
            concept: self.concept,
            num_layers: self.num_layers,
            units_per_layer: self.units_per_layer,
            num_examples: self.labels.len(),
        }
    }

    /// Serialized size in bytes.
    pub fn encoded_len(&self) -> usize {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        PREAMBLE_LEN + header.len() + self.labels.len() + 4 * self.scores.len()
    }
}

pub fn write_dump<W: Write>(dump: &ActivationDump, mut sink: W) -> Result<u64, DumpError> {
    if let Some(err) = non_finite(&dump.scores, dump.units_per_layer, dump.labels.len()) {
        return Err(err);
    }
    let header = serde_json::to_vec(&dump.header()).expect("header serializes");
    let header_len = u32::try_from(header.len()).map_err(|_| DumpError::Shape("header too long".into()))?;
    let mut buf = Vec::with_capacity(PREAMBLE_LEN + header.len() + dump.labels.len() + 4 * dump.scores.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&header_len.to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend(dump.labels.iter().map(|&l| u8::from(l)));
    for s in &dump.scores {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(buf.len() as u64)
}

pub fn read_dump<R: Read>(mut source: R) -> Result<ActivationDump, DumpError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode(&bytes)
}

fn take(bytes: &[u8], offset: usize, len: usize) -> Result<&[u8], DumpError> {
    match offset.checked_add(len).filter(|&e| e <= bytes.len()) {
        Some(end) => Ok(&bytes[offset..end]),
        None => Err(DumpError::TruncatedPayload {
            offset: bytes.len() as u64,
            expected: len as u64,
            found: bytes.len().saturating_sub(offset) as u64,
        }),
    }
}

fn decode(bytes: &[u8]) -> Result<ActivationDump, DumpError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(DumpError::BadMagic { offset: 0 });
    }
    let version = u16::from_le_bytes(take(bytes, 4, 2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(DumpError::UnsupportedVersion { offset: 4, version });
    }
    let header_len = u32::from_le_bytes(take(bytes, 6, 4)?.try_into().unwrap()) as usize;
    let header_bytes = take(bytes, PREAMBLE_LEN, header_len)?;
    let header: Header = serde_json::from_slice(header_bytes)
        .map_err(|e| DumpError::BadHeader { offset: PREAMBLE_LEN as u64, message: e.to_string() })?;
    let (l, u, e) = (header.num_layers, header.units_per_layer, header.num_examples);
    let bad_shape = |m: &str| DumpError::BadHeader { offset: PREAMBLE_LEN as u64, message: m.to_string() };
    if l == 0 || u == 0 || e == 0 {
        return Err(bad_shape("dimensions must be positive"));
    }
    let n_scores = l
        .checked_mul(u)
        .and_then(|n| n.checked_mul(e))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| bad_shape("dimensions overflow"))?;

    let labels_at = PREAMBLE_LEN + header_len;
    let label_bytes = take(bytes, labels_at, e)?;
    let mut labels = Vec::with_capacity(e);
    for (i, &b) in label_bytes.iter().enumerate() {
        match b {
            0 => labels.push(false),
            1 => labels.push(true),
            value => return Err(DumpError::InvalidLabel { offset: (labels_at + i) as u64, value }),
        }
    }

    let scores_at = labels_at + e;
    let score_bytes = take(bytes, scores_at, 4 * n_scores)?;
    let mut scores = Vec::with_capacity(n_scores);
    for (i, chunk) in score_bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(DumpError::NonFiniteScore { offset: (scores_at + 4 * i) as u64 });
        }
        scores.push(v);
    }
    let end = scores_at + 4 * n_scores;
    if end != bytes.len() {
        return Err(DumpError::TrailingBytes { offset: end as u64, count: (bytes.len() - end) as u64 });
    }
    ActivationDump::new(header.model_id, header.dataset_name, header.concept, l, u, labels, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    fn tiny() -> ActivationDump {
        ActivationDump::new("toy", "USA-eng", cc("IND"), 1, 1, vec![true, false], vec![0.5, -1.25]).unwrap()
    }

    #[test]
    fn size_arithmetic() {
        let d = tiny();
        let header = br#"{"model_id":"toy","dataset_name":"USA-eng","concept":"IND","num_layers":1,"units_per_layer":1,"num_examples":2}"#;
        let mut buf = Vec::new();
        let n = write_dump(&d, &mut buf).unwrap();
        assert_eq!(n as usize, 10 + header.len() + 2 + 8);
        assert_eq!(n as usize, d.encoded_len());
        assert_eq!(&buf[10..10 + header.len()], header);
        assert_eq!(read_dump(&buf[..]).unwrap(), d);
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        let nan = ActivationDump::new("m", "d", cc("IND"), 1, 1, vec![true, false], vec![f32::NAN, 0.0]);
        assert!(matches!(nan, Err(DumpError::NonFiniteValue { example: 0, .. })));
        let all_pos = ActivationDump::new("m", "d", cc("IND"), 1, 1, vec![true, true], vec![0.0, 0.0]);
        assert!(matches!(all_pos, Err(DumpError::DegenerateLabels)));
        let short = ActivationDump::new("m", "d", cc("IND"), 2, 1, vec![true, false], vec![0.0, 0.0]);
        assert!(matches!(short, Err(DumpError::Shape(_))));
    }

    #[test]
    fn corrupt_files() {
        let mut buf = Vec::new();
        write_dump(&tiny(), &mut buf).unwrap();

        let mut bad = buf.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_dump(&bad[..]), Err(DumpError::BadMagic { offset: 0 })));

        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(read_dump(&bad[..]), Err(DumpError::UnsupportedVersion { offset: 4, version: 2 })));

        let cut = &buf[..buf.len() - 3];
        match read_dump(cut) {
            Err(DumpError::TruncatedPayload { offset, expected, found }) => {
                assert_eq!(offset as usize, cut.len());
                assert_eq!(expected, 8);
                assert_eq!(found, 5);
            }
            other => panic!("{other:?}"),
        }

        let label_at = buf.len() - 8 - 2;
        let mut bad = buf.clone();
        bad[label_at + 1] = 7;
        assert!(matches!(read_dump(&bad[..]), Err(DumpError::InvalidLabel { offset, value: 7 }) if offset as usize == label_at + 1));

        let mut bad = buf.clone();
        let at = buf.len() - 4;
        bad[at..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(read_dump(&bad[..]), Err(DumpError::NonFiniteScore { offset }) if offset as usize == at));

        let mut bad = buf.clone();
        bad.push(0);
        assert!(matches!(read_dump(&bad[..]), Err(DumpError::TrailingBytes { count: 1, .. })));

        assert!(matches!(read_dump(&buf[..2]), Err(DumpError::BadMagic { .. })));
    }
}
