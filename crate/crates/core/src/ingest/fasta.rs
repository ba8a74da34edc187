//! FASTA sequence parsing.

use crate::error::{Error, Result};

/// One protein sequence. Letters are uppercase; the alphabet is the 20
/// canonical amino acids plus B, Z, U, O, and X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    pub sequence: String,
}

/// Parse FASTA text. Record ids are the first whitespace-delimited token of
/// the header; wrapped sequence lines are concatenated and folded to
/// uppercase.
pub fn parse_fasta(text: &str) -> Result<Vec<SequenceRecord>> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    let mut current: Option<(usize, String, String)> = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some(rec) = current.take() {
                records.push(finish_record(rec)?);
            }
            let id = header.split_whitespace().next().ok_or_else(|| {
                Error::parse(lineno, "header with no id".to_string())
            })?;
            current = Some((lineno, id.to_string(), String::new()));
        } else {
            let Some((_, _, seq)) = current.as_mut() else {
                return Err(Error::parse(lineno, "sequence data before any header".to_string()));
            };
            for ch in line.chars() {
                if !ch.is_ascii_alphabetic() {
                    return Err(Error::parse(
                        lineno,
                        format!("invalid sequence character {ch:?}"),
                    ));
                }
                seq.push(ch.to_ascii_uppercase());
            }
        }
    }
    if let Some(rec) = current.take() {
        records.push(finish_record(rec)?);
    }
    let mut ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Format(format!("duplicate sequence id {}", dup[0])));
    }
    Ok(records)
}

fn finish_record((lineno, id, sequence): (usize, String, String)) -> Result<SequenceRecord> {
    if sequence.is_empty() {
        return Err(Error::parse(lineno, format!("empty sequence for {id}")));
    }
    Ok(SequenceRecord { id, sequence })
}

/// Serialize records with 60-column wrapping.
pub fn write_fasta(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push('>');
        out.push_str(&rec.id);
        out.push('\n');
        for chunk in rec.sequence.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii sequence"));
            out.push('\n');
        }
    }
    out
}
