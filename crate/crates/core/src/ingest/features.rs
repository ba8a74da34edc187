//! Per-protein sequence feature tables: text and binary serialization plus
//! a self-contained k-mer hashing featurizer.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::SequenceRecord;

const MAGIC: &[u8; 4] = b"FTB1";

/// Protein id -> fixed-dimension feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Result<FeatureTable> {
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        Ok(FeatureTable {
            dim,
            rows: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, id: String, row: Vec<f64>) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::shape(format!(
                "feature row for {id} has length {}, table dimension is {}",
                row.len(),
                self.dim
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite feature value for {id}")));
        }
        if self.rows.insert(id.clone(), row).is_some() {
            return Err(Error::Format(format!("duplicate feature row for {id}")));
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.rows.get(id).map(|r| r.as_slice())
    }

    /// Ids in sorted order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(|k| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Text form: header "protein-id <dim>", then one id + floats per line.
    pub fn to_text_string(&self) -> String {
        let mut out = format!("protein-id {}\n", self.dim);
        for (id, row) in &self.rows {
            out.push_str(id);
            for v in row {
                out.push(' ');
                out.push_str(&format!("{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    /// Binary form: magic "HSE1", u32 row count, u32 dimension, then per row
    /// a u32 id length, the UTF-8 id, and dim little-endian f64 values.
    pub fn to_binary_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.rows.len() * (8 + self.dim * 8));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (id, row) in &self.rows {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

/// Load a feature table from either serialized form: bytes starting with the
/// binary magic are decoded directly, anything else is treated as text.
pub fn load_feature_table(bytes: &[u8]) -> Result<FeatureTable> {
    if bytes.starts_with(MAGIC) {
        load_binary(bytes)
    } else {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::Format("feature table is neither binary nor UTF-8 text".into()))?;
        load_text(text)
    }
}

fn load_text(text: &str) -> Result<FeatureTable> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty feature table".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 || fields[0] != "protein-id" {
        return Err(Error::parse(1, "expected header 'protein-id <dim>'".to_string()));
    }
    let dim: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(1, format!("bad dimension {:?}", fields[1])))?;
    let mut table = FeatureTable::new(dim)?;
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-empty line has a first token");
        let mut row = Vec::with_capacity(dim);
        for raw in fields {
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad feature value {raw:?}")))?;
            row.push(v);
        }
        if row.len() != dim {
            return Err(Error::parse(
                lineno,
                format!("row for {id} has {} of {dim} values", row.len()),
            ));
        }
        table.insert(id.to_string(), row)?;
    }
    Ok(table)
}

fn load_binary(bytes: &[u8]) -> Result<FeatureTable> {
    let mut pos = MAGIC.len();
    let read_u32 = |pos: &mut usize| -> Result<u32> {
        let end = *pos + 4;
        let slice = bytes
            .get(*pos..end)
            .ok_or_else(|| Error::Format("truncated binary feature table".into()))?;
        *pos = end;
        Ok(u32::from_le_bytes(slice.try_into().expect("4-byte slice")))
    };
    let count = read_u32(&mut pos)? as usize;
    let dim = read_u32(&mut pos)? as usize;
    let mut table = FeatureTable::new(dim)?;
    for _ in 0..count {
        let id_len = read_u32(&mut pos)? as usize;
        let id_bytes = bytes
            .get(pos..pos + id_len)
            .ok_or_else(|| Error::Format("truncated binary feature table".into()))?;
        pos += id_len;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| Error::Format("feature table id is not UTF-8".into()))?
            .to_string();
        let mut row = Vec::with_capacity(dim);
        for _ in 0..dim {
            let slice = bytes
                .get(pos..pos + 8)
                .ok_or_else(|| Error::Format("truncated binary feature table".into()))?;
            pos += 8;
            row.push(f64::from_le_bytes(slice.try_into().expect("8-byte slice")));
        }
        table.insert(id, row)?;
    }
    if pos != bytes.len() {
        return Err(Error::Format("trailing bytes after binary feature table".into()));
    }
    Ok(table)
}

/// Hashed 3-mer count features, L2-normalized per protein. A stand-in for a
/// learned sequence encoder so the pipeline runs self-contained; nothing
/// about it is pretrained.
pub fn toy_sequence_features(records: &[SequenceRecord], dim: usize) -> Result<FeatureTable> {
    const K: usize = 3;
    let mut table = FeatureTable::new(dim)?;
    for rec in records {
        let mut row = vec![0.0f64; dim];
        let bytes = rec.sequence.as_bytes();
        if bytes.len() < K {
            log::warn!("sequence {} shorter than {K}; zero feature vector", rec.id);
        } else {
            for kmer in bytes.windows(K) {
                row[fnv1a(kmer) as usize % dim] += 1.0;
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        table.insert(rec.id.clone(), row)?;
    }
    Ok(table)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureTable {
        let mut t = FeatureTable::new(4).unwrap();
        t.insert("p1".into(), vec![0.0, 1.0, -2.5, 3.25]).unwrap();
        t.insert("p2".into(), vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        t
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        let text = t.to_text_string();
        let back = load_feature_table(text.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn binary_round_trip() {
        let t = sample();
        let bytes = t.to_binary_bytes();
        let back = load_feature_table(&bytes).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn ragged_row_rejected() {
        let text = "protein-id 4\np1 1 2 3\n";
        assert!(load_feature_table(text.as_bytes()).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(FeatureTable::new(0).is_err());
        assert!(load_feature_table(b"protein-id 0\n").is_err());
    }

    #[test]
    fn paper_scale_dimension_accepted() {
        let mut t = FeatureTable::new(1280).unwrap();
        t.insert("p1".into(), vec![0.5; 1280]).unwrap();
        let back = load_feature_table(&t.to_binary_bytes()).unwrap();
        assert_eq!(back.dim(), 1280);
    }

    #[test]
    fn truncated_binary_rejected() {
        let bytes = sample().to_binary_bytes();
        assert!(load_feature_table(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = "protein-id 2\np1 1 2\np1 3 4\n";
        assert!(load_feature_table(text.as_bytes()).is_err());
    }

    #[test]
    fn toy_features_are_normalized_and_deterministic() {
        let recs = vec![
            SequenceRecord {
                id: "p1".into(),
                sequence: "ACDEFGHIKLMNPQRSTVWY".into(),
            },
            SequenceRecord {
                id: "p2".into(),
                sequence: "AC".into(), // shorter than k
            },
        ];
        let a = toy_sequence_features(&recs, 16).unwrap();
        let b = toy_sequence_features(&recs, 16).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.get("p1").unwrap().iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(a.get("p2").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_sequences_get_identical_features() {
        let recs = vec![
            SequenceRecord {
                id: "a".into(),
                sequence: "ACDEACDE".into(),
            },
            SequenceRecord {
                id: "b".into(),
                sequence: "ACDEACDE".into(),
            },
        ];
        let t = toy_sequence_features(&recs, 32).unwrap();
        assert_eq!(t.get("a"), t.get("b"));
    }
}
