//! RSPG framed tensor files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic "RSPG" | u16 version = 1 | u8 dtype | u8 ndim | ndim x u64 dims
//! | row-major payload | u32 metadata length | UTF-8 JSON metadata
//! ```
//!
//! dtype 0 is float32, dtype 1 is complex64 stored as interleaved re/im float32.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::{Complex32, Complex64};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::types::{CirFrameSeries, RadarParams};

pub const MAGIC: [u8; 4] = *b"RSPG";
pub const VERSION: u16 = 1;
const MAX_DIM: u64 = 1 << 32;

pub type Metadata = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    Float32 = 0,
    Complex64 = 1,
}

impl DType {
    fn element_bytes(self) -> usize {
        match self {
            DType::Float32 => 4,
            DType::Complex64 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    Float32(Vec<f32>),
    Complex64(Vec<Complex32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
}

impl Tensor {
    pub fn real(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Self::checked(dims, TensorData::Float32(data))
    }

    pub fn complex(dims: Vec<usize>, data: Vec<Complex32>) -> Result<Self> {
        Self::checked(dims, TensorData::Complex64(data))
    }

    fn checked(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        let t = Self { dims, data };
        let n = element_count(&t.dims)?;
        if n != t.len() {
            return Err(Error::param(format!(
                "tensor dims {:?} imply {n} elements, payload has {}",
                t.dims,
                t.len()
            )));
        }
        Ok(t)
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            TensorData::Float32(_) => DType::Float32,
            TensorData::Complex64(_) => DType::Complex64,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            TensorData::Float32(v) => v.len(),
            TensorData::Complex64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serialize into the RSPG byte layout.
    pub fn encode(&self, metadata: &Metadata) -> Result<Vec<u8>> {
        if self.dims.len() > u8::MAX as usize {
            return Err(Error::param("tensor rank exceeds 255"));
        }
        for &d in &self.dims {
            if d as u64 > MAX_DIM {
                return Err(Error::param(format!("dimension {d} exceeds 2^32")));
            }
        }
        let meta = serde_json::to_vec(metadata)?;
        let meta_len = u32::try_from(meta.len()).map_err(|_| Error::param("metadata too large"))?;

        let payload = self.len() * self.dtype().element_bytes();
        let mut out = Vec::with_capacity(8 + 8 * self.dims.len() + payload + 4 + meta.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.dtype() as u8);
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        match &self.data {
            TensorData::Float32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::Complex64(v) => v.iter().for_each(|c| {
                out.extend_from_slice(&c.re.to_le_bytes());
                out.extend_from_slice(&c.im.to_le_bytes());
            }),
        }
        out.extend_from_slice(&meta_len.to_le_bytes());
        out.extend_from_slice(&meta);
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<(Self, Metadata)> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::format("RSPG", "magic mismatch"));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != VERSION {
            return Err(Error::Unsupported(format!("RSPG version {version}")));
        }
        let dtype = match r.take(1)?[0] {
            0 => DType::Float32,
            1 => DType::Complex64,
            other => return Err(Error::format("RSPG", format!("unknown dtype {other}"))),
        };
        let ndim = r.take(1)?[0] as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let d = u64::from_le_bytes(r.array()?);
            if d > MAX_DIM {
                return Err(Error::format("RSPG", format!("dimension {d} exceeds 2^32")));
            }
            dims.push(d as usize);
        }
        let count = element_count(&dims).map_err(|_| Error::format("RSPG", "dimension overflow"))?;
        let payload_len = count
            .checked_mul(dtype.element_bytes())
            .ok_or_else(|| Error::format("RSPG", "dimension overflow"))?;
        let payload = r.take(payload_len)?;
        let data = match dtype {
            DType::Float32 => TensorData::Float32(
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            DType::Complex64 => TensorData::Complex64(
                payload
                    .chunks_exact(8)
                    .map(|c| {
                        Complex32::new(
                            f32::from_le_bytes(c[..4].try_into().unwrap()),
                            f32::from_le_bytes(c[4..].try_into().unwrap()),
                        )
                    })
                    .collect(),
            ),
        };
        let meta_len = u32::from_le_bytes(r.array()?) as usize;
        let meta_bytes = r.take(meta_len)?;
        let metadata: Metadata = serde_json::from_slice(meta_bytes)
            .map_err(|e| Error::format("RSPG", format!("metadata: {e}")))?;
        if r.pos != bytes.len() {
            return Err(Error::format("RSPG", "trailing bytes after metadata"));
        }
        Ok((Tensor { dims, data }, metadata))
    }
}

fn element_count(dims: &[usize]) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::param("tensor element count overflows"))
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("RSPG", "truncated payload"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }
}

pub fn save_tensor(tensor: &Tensor, path: impl AsRef<Path>, metadata: &Metadata) -> Result<()> {
    let path = path.as_ref();
    let bytes = tensor.encode(metadata)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<(Tensor, Metadata)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::decode(&bytes)
}

/// Pack a CIR stream as a complex64 `[receiver, bin, slow_time]` tensor with radar metadata.
pub fn cir_to_tensor(cir: &CirFrameSeries) -> (Tensor, Metadata) {
    let data: Vec<Complex32> = cir
        .as_slice()
        .iter()
        .map(|c| Complex32::new(c.re as f32, c.im as f32))
        .collect();
    let dims = vec![cir.num_receivers(), cir.num_range_bins(), cir.num_samples()];
    let mut meta = Metadata::new();
    meta.insert("kind".into(), Value::from("cir"));
    meta.insert("radar".into(), serde_json::to_value(cir.params).expect("radar params serialize"));
    (Tensor { dims, data: TensorData::Complex64(data) }, meta)
}

pub fn cir_from_tensor(tensor: &Tensor, metadata: &Metadata) -> Result<CirFrameSeries> {
    let TensorData::Complex64(values) = &tensor.data else {
        return Err(Error::format("RSPG", "CIR tensor must be complex64"));
    };
    if tensor.dims.len() != 3 {
        return Err(Error::format("RSPG", "CIR tensor must have 3 dimensions"));
    }
    let mut params: RadarParams = match metadata.get("radar") {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::format("RSPG", format!("radar metadata: {e}")))?,
        None => RadarParams::default(),
    };
    params.num_receivers = tensor.dims[0];
    params.num_range_bins = tensor.dims[1];
    let data = values
        .iter()
        .map(|c| Complex64::new(c.re as f64, c.im as f64))
        .collect();
    CirFrameSeries::from_raw(params, tensor.dims[2], data)
        .map_err(|e| Error::format("RSPG", e.to_string()))
}

pub fn save_cir(cir: &CirFrameSeries, path: impl AsRef<Path>, extra: &Metadata) -> Result<()> {
    let (t, mut meta) = cir_to_tensor(cir);
    meta.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
    save_tensor(&t, path, &meta)
}

pub fn load_cir(path: impl AsRef<Path>) -> Result<CirFrameSeries> {
    let (t, meta) = load_tensor(path)?;
    cir_from_tensor(&t, &meta)
}
