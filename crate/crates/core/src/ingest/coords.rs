//! Residue coordinate parsing: a simple whitespace format and the fixed-width
//! ATOM-record subset of PDB files restricted to Cα atoms.

use crate::error::{Error, Result};

/// One residue with its Cα position in Ångström.
#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub index: u32,
    pub aa: char,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Residue {
    pub fn distance(&self, other: &Residue) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Ordered Cα trace of one protein.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateRecord {
    pub id: String,
    pub residues: Vec<Residue>,
}

impl CoordinateRecord {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// Parse coordinates for one protein. Text containing ATOM records is read
/// as a PDB subset (first model, first chain, Cα atoms only); anything else
/// is read as "index aa x y z" lines.
pub fn parse_coords(id: &str, text: &str) -> Result<CoordinateRecord> {
    let is_pdb = text
        .lines()
        .any(|l| l.starts_with("ATOM  ") || l.starts_with("HETATM"));
    let residues = if is_pdb {
        parse_pdb_ca(text)?
    } else {
        parse_simple(text)?
    };
    if residues.is_empty() {
        return Err(Error::Format(format!("no residues found for {id}")));
    }
    check_monotone(&residues)?;
    Ok(CoordinateRecord {
        id: id.to_string(),
        residues,
    })
}

fn check_monotone(residues: &[Residue]) -> Result<()> {
    for w in residues.windows(2) {
        if w[1].index <= w[0].index {
            return Err(Error::Format(format!(
                "residue indices must increase strictly: {} then {}",
                w[0].index, w[1].index
            )));
        }
    }
    Ok(())
}

fn parse_simple(text: &str) -> Result<Vec<Residue>> {
    let mut residues = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                lineno,
                format!("expected 'index aa x y z', got {} fields", fields.len()),
            ));
        }
        let index: u32 = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad residue index {:?}", fields[0])))?;
        let aa = parse_aa_letter(fields[1])
            .ok_or_else(|| Error::parse(lineno, format!("bad amino-acid letter {:?}", fields[1])))?;
        let mut xyz = [0.0f64; 3];
        for (slot, raw) in xyz.iter_mut().zip(&fields[2..5]) {
            *slot = raw
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad coordinate {raw:?}")))?;
            if !slot.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite coordinate {raw:?}")));
            }
        }
        residues.push(Residue {
            index,
            aa,
            x: xyz[0],
            y: xyz[1],
            z: xyz[2],
        });
    }
    Ok(residues)
}

fn parse_aa_letter(s: &str) -> Option<char> {
    let mut chars = s.chars();
    let c = chars.next()?;
    if chars.next().is_some() || !c.is_ascii_alphabetic() {
        return None;
    }
    Some(c.to_ascii_uppercase())
}

/// Fixed-width ATOM record fields (1-based columns): atom name 13-16,
/// altLoc 17, resName 18-20, chain 22, resSeq 23-26, x/y/z 31-38/39-46/47-54.
fn parse_pdb_ca(text: &str) -> Result<Vec<Residue>> {
    let mut residues = Vec::new();
    let mut chain: Option<char> = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") {
            continue;
        }
        if line.len() < 54 {
            return Err(Error::parse(lineno, "ATOM record shorter than 54 columns".to_string()));
        }
        let atom_name = line[12..16].trim();
        if atom_name != "CA" {
            continue;
        }
        let alt_loc = line.as_bytes()[16] as char;
        if alt_loc != ' ' && alt_loc != 'A' {
            continue;
        }
        let this_chain = line.as_bytes()[21] as char;
        match chain {
            None => chain = Some(this_chain),
            Some(c) if c != this_chain => continue,
            Some(_) => {}
        }
        let res_name = line[17..20].trim();
        let aa = three_letter_to_one(res_name).unwrap_or_else(|| {
            log::warn!("unknown residue name {res_name:?} at line {lineno}; using X");
            'X'
        });
        let index: u32 = line[22..26]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad residue number {:?}", &line[22..26])))?;
        let parse_f = |range: std::ops::Range<usize>| -> Result<f64> {
            let raw = line[range].trim();
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad coordinate {raw:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite coordinate {raw:?}")));
            }
            Ok(v)
        };
        residues.push(Residue {
            index,
            aa,
            x: parse_f(30..38)?,
            y: parse_f(38..46)?,
            z: parse_f(46..54)?,
        });
    }
    Ok(residues)
}

fn three_letter_to_one(name: &str) -> Option<char> {
    let c = match name {
        "ALA" => 'A',
        "ARG" => 'R',
        "ASN" => 'N',
        "ASP" => 'D',
        "CYS" => 'C',
        "GLN" => 'Q',
        "GLU" => 'E',
        "GLY" => 'G',
        "HIS" => 'H',
        "ILE" => 'I',
        "LEU" => 'L',
        "LYS" => 'K',
        "MET" => 'M',
        "PHE" => 'F',
        "PRO" => 'P',
        "SER" => 'S',
        "THR" => 'T',
        "TRP" => 'W',
        "TYR" => 'Y',
        "VAL" => 'V',
        "SEC" => 'U',
        "PYL" => 'O',
        "ASX" => 'B',
        "GLX" => 'Z',
        "UNK" => 'X',
        _ => return None,
    };
    Some(c)
}

/// Serialize to the simple "index aa x y z" format.
pub fn write_coords(record: &CoordinateRecord) -> String {
    let mut out = String::new();
    for r in &record.residues {
        out.push_str(&format!("{} {} {:.3} {:.3} {:.3}\n", r.index, r.aa, r.x, r.y, r.z));
    }
    out
}
