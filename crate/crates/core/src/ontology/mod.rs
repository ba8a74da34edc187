//! Gene Ontology handling: DAG parsing, ancestor closure over annotations,
//! per-branch binary label matrices, and information-content weights.

mod dag;
mod ic;
mod labels;

pub use dag::{GoDag, GoTerm, LinkKind};
pub use ic::{compute_ic, IcWeights};
pub use labels::LabelMatrix;

use std::fmt;

use crate::error::{Error, Result};

/// One of the three independent ontology branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    /// biological_process
    Bpo,
    /// molecular_function
    Mfo,
    /// cellular_component
    Cco,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Bpo, Branch::Mfo, Branch::Cco];

    /// Parse an ontology namespace string as it appears in stanza files.
    pub fn from_namespace(s: &str) -> Option<Branch> {
        match s {
            "biological_process" => Some(Branch::Bpo),
            "molecular_function" => Some(Branch::Mfo),
            "cellular_component" => Some(Branch::Cco),
            _ => None,
        }
    }

    /// Accepts the short code (case-insensitive) or the full namespace.
    pub fn parse(s: &str) -> Result<Branch> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "bpo" | "bp" => Ok(Branch::Bpo),
            "mfo" | "mf" => Ok(Branch::Mfo),
            "cco" | "cc" => Ok(Branch::Cco),
            _ => Branch::from_namespace(s).ok_or_else(|| {
                Error::Config(format!(
                    "unknown ontology branch {s:?} (expected BPO, MFO, or CCO)"
                ))
            }),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Branch::Bpo => "BPO",
            Branch::Mfo => "MFO",
            Branch::Cco => "CCO",
        }
    }

    pub fn namespace(&self) -> &'static str {
        match self {
            Branch::Bpo => "biological_process",
            Branch::Mfo => "molecular_function",
            Branch::Cco => "cellular_component",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}
