//! Annotation records and the temporal dataset split.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// One dated annotation: protein, term, annotation date. An optional fourth
/// evidence column is accepted and ignored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnnotationRecord {
    pub protein: String,
    pub term: String,
    pub date: NaiveDate,
}

/// Train / validation / test protein id lists, pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn contains(&self, protein: &str) -> bool {
        self.train.iter().any(|p| p == protein)
            || self.valid.iter().any(|p| p == protein)
            || self.test.iter().any(|p| p == protein)
    }

    /// All proteins across the three parts, sorted.
    pub fn all(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .cloned()
            .collect();
        all.sort();
        all
    }
}

fn valid_go_id(term: &str) -> bool {
    term.len() == 10
        && term.starts_with("GO:")
        && term[3..].bytes().all(|b| b.is_ascii_digit())
}

/// Parse TSV rows "protein-id<TAB>GO id<TAB>ISO date[<TAB>evidence]".
/// Duplicate rows are removed and the result is sorted.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        if !valid_go_id(fields[1]) {
            return Err(Error::parse(lineno, format!("malformed GO id {:?}", fields[1])));
        }
        let date = NaiveDate::parse_from_str(fields[2], "%Y-%m-%d")
            .map_err(|_| Error::parse(lineno, format!("malformed date {:?}", fields[2])))?;
        records.push(AnnotationRecord {
            protein: fields[0].to_string(),
            term: fields[1].to_string(),
            date,
        });
    }
    records.sort();
    records.dedup();
    Ok(records)
}

/// Serialize annotation records back to their TSV form.
pub fn write_annotations(records: &[AnnotationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{}\t{}\t{}\n", r.protein, r.term, r.date.format("%Y-%m-%d")));
    }
    out
}

/// Assign each protein to a split by its earliest annotation date:
/// before `t1` is training, `[t1, t2)` validation, `[t2, t3]` test, and
/// anything later is excluded.
pub fn temporal_split(
    annotations: &[AnnotationRecord],
    t1: NaiveDate,
    t2: NaiveDate,
    t3: NaiveDate,
) -> Result<DatasetSplit> {
    if !(t1 < t2 && t2 < t3) {
        return Err(Error::Config(format!(
            "split dates must be ordered: {t1} < {t2} < {t3} fails"
        )));
    }
    let mut earliest: BTreeMap<&str, NaiveDate> = BTreeMap::new();
    for rec in annotations {
        earliest
            .entry(rec.protein.as_str())
            .and_modify(|d| {
                if rec.date < *d {
                    *d = rec.date;
                }
            })
            .or_insert(rec.date);
    }
    let mut split = DatasetSplit {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    for (protein, date) in earliest {
        if date < t1 {
            split.train.push(protein.to_string());
        } else if date < t2 {
            split.valid.push(protein.to_string());
        } else if date <= t3 {
            split.test.push(protein.to_string());
        }
    }
    Ok(split)
}
