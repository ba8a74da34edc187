//! Byte-level helpers shared by the binary checkpoint formats: a bounds-
//! checked little-endian cursor plus tag encodings for enums that appear in
//! checkpoints.

use crate::error::{Error, Result};
use crate::numeric::Activation;
use crate::ontology::Branch;

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated checkpoint".to_string()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub(crate) fn branch_tag(branch: Branch) -> u8 {
    match branch {
        Branch::Bpo => 0,
        Branch::Mfo => 1,
        Branch::Cco => 2,
    }
}

pub(crate) fn parse_branch_tag(tag: u8) -> Result<Branch> {
    match tag {
        0 => Ok(Branch::Bpo),
        1 => Ok(Branch::Mfo),
        2 => Ok(Branch::Cco),
        other => Err(Error::Format(format!("unknown branch tag {other}"))),
    }
}

pub(crate) fn push_activation(out: &mut Vec<u8>, act: Activation) {
    let (tag, slope) = match act {
        Activation::Relu => (0u8, 0.0),
        Activation::LeakyRelu(s) => (1, s),
        Activation::Sigmoid => (2, 0.0),
        Activation::Tanh => (3, 0.0),
    };
    out.push(tag);
    out.extend_from_slice(&slope.to_le_bytes());
}

pub(crate) fn read_activation(r: &mut Reader) -> Result<Activation> {
    let tag = r.u8()?;
    let slope = r.f64()?;
    match tag {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::LeakyRelu(slope)),
        2 => Ok(Activation::Sigmoid),
        3 => Ok(Activation::Tanh),
        other => Err(Error::Format(format!("unknown activation tag {other}"))),
    }
}
