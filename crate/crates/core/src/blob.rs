//! Tiny self-describing tensor container used for model snapshots. Fixed
//! little-endian layout, no compression, no alignment games — the goal is
//! byte-for-byte reproducible files, not speed.
//!
//! Layout: `b"BRTB"`, format version (u16), metadata entries (name → u64),
//! then named tensors. Each tensor records its dtype (f32 or f64), its dims,
//! and the raw element bytes in little-endian order.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"BRTB";
const VERSION: u16 = 1;

const DTYPE_F32: u8 = 1;
const DTYPE_F64: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match self {
            TensorData::F32(v) => Some(v),
            TensorData::F64(_) => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match self {
            TensorData::F64(v) => Some(v),
            TensorData::F32(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: TensorData,
}

impl Tensor {
    pub fn f32(name: &str, dims: &[u32], data: Vec<f32>) -> Self {
        Self { name: String::from(name), dims: dims.to_vec(), data: TensorData::F32(data) }
    }

    pub fn f64(name: &str, dims: &[u32], data: Vec<f64>) -> Self {
        Self { name: String::from(name), dims: dims.to_vec(), data: TensorData::F64(data) }
    }
}

/// A decoded (or to-be-encoded) snapshot: ordered metadata plus ordered
/// tensors. Order is part of the format so that encode∘decode is the
/// identity on bytes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Blob {
    pub meta: Vec<(String, u64)>,
    pub tensors: Vec<Tensor>,
}

impl Blob {
    pub fn meta_value(&self, name: &str) -> Option<u64> {
        self.meta.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        for (name, value) in &self.meta {
            write_str(&mut out, name);
            out.extend_from_slice(&value.to_le_bytes());
        }
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            write_str(&mut out, &t.name);
            let dtype = match t.data {
                TensorData::F32(_) => DTYPE_F32,
                TensorData::F64(_) => DTYPE_F64,
            };
            out.push(dtype);
            out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
            for &d in &t.dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            match &t.data {
                TensorData::F32(v) => {
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                TensorData::F64(v) => {
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::InvalidBlob("bad magic"));
        }
        if r.u16()? != VERSION {
            return Err(Error::InvalidBlob("unsupported version"));
        }
        let meta_count = r.u32()? as usize;
        let mut meta = Vec::with_capacity(meta_count.min(1024));
        for _ in 0..meta_count {
            let name = r.string()?;
            let value = r.u64()?;
            meta.push((name, value));
        }
        let tensor_count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(tensor_count.min(1024));
        for _ in 0..tensor_count {
            let name = r.string()?;
            let dtype = r.u8()?;
            let ndims = r.u32()? as usize;
            let mut dims = Vec::with_capacity(ndims.min(16));
            let mut count: usize = 1;
            for _ in 0..ndims {
                let d = r.u32()?;
                count = count
                    .checked_mul(d as usize)
                    .ok_or(Error::InvalidBlob("tensor element count overflow"))?;
                dims.push(d);
            }
            let data = match dtype {
                DTYPE_F32 => {
                    let raw = r.take(count.checked_mul(4).ok_or(Error::InvalidBlob(
                        "tensor byte count overflow",
                    ))?)?;
                    TensorData::F32(
                        raw.chunks_exact(4)
                            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                            .collect(),
                    )
                }
                DTYPE_F64 => {
                    let raw = r.take(count.checked_mul(8).ok_or(Error::InvalidBlob(
                        "tensor byte count overflow",
                    ))?)?;
                    TensorData::F64(
                        raw.chunks_exact(8)
                            .map(|c| {
                                f64::from_le_bytes([
                                    c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7],
                                ])
                            })
                            .collect(),
                    )
                }
                _ => return Err(Error::InvalidBlob("unknown dtype")),
            };
            tensors.push(Tensor { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::InvalidBlob("trailing bytes"));
        }
        Ok(Self { meta, tensors })
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::InvalidBlob("truncated"))?;
        if end > self.bytes.len() {
            return Err(Error::InvalidBlob("truncated"));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        core::str::from_utf8(raw)
            .map(String::from)
            .map_err(|_| Error::InvalidBlob("non-utf8 name"))
    }
}
