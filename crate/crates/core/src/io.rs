//! Raw binary field format.
//!
//! Layout (all integers little-endian `u32`, payload little-endian `f64`):
//!
//! ```text
//! b"GPF1" | rank | dims[rank] | kind (0 = real, 1 = complex re,im interleaved) | payload
//! ```
//!
//! The payload is row-major over `dims`. Several records may be concatenated
//! in one file; [`read_record`] consumes exactly one.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{OctError, Result};

pub const MAGIC: &[u8; 4] = b"GPF1";

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::Real(v) => v.len(),
            Payload::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> u32 {
        match self {
            Payload::Real(_) => 0,
            Payload::Complex(_) => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub dims: Vec<u32>,
    pub payload: Payload,
}

impl FieldRecord {
    pub fn real(dims: Vec<u32>, data: Vec<f64>) -> Result<Self> {
        Self::checked(dims, Payload::Real(data))
    }

    pub fn complex(dims: Vec<u32>, data: Vec<Complex64>) -> Result<Self> {
        Self::checked(dims, Payload::Complex(data))
    }

    fn checked(dims: Vec<u32>, payload: Payload) -> Result<Self> {
        let expected: usize = dims.iter().map(|&d| d as usize).product();
        if expected != payload.len() {
            return Err(OctError::Format(format!(
                "dims {dims:?} describe {expected} values, payload has {}",
                payload.len()
            )));
        }
        Ok(Self { dims, payload })
    }

    pub fn into_real(self) -> Result<Vec<f64>> {
        match self.payload {
            Payload::Real(v) => Ok(v),
            Payload::Complex(_) => Err(OctError::Format("expected real payload".into())),
        }
    }

    pub fn into_complex(self) -> Result<Vec<Complex64>> {
        match self.payload {
            Payload::Complex(v) => Ok(v),
            Payload::Real(_) => Err(OctError::Format("expected complex payload".into())),
        }
    }
}

pub fn write_record<W: Write>(w: &mut W, record: &FieldRecord) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(record.dims.len() as u32).to_le_bytes())?;
    for d in &record.dims {
        w.write_all(&d.to_le_bytes())?;
    }
    w.write_all(&record.payload.kind().to_le_bytes())?;
    match &record.payload {
        Payload::Real(v) => {
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Payload::Complex(v) => {
            for z in v {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn to_bytes(record: &FieldRecord) -> Vec<u8> {
    let mut buf = Vec::new();
    write_record(&mut buf, record).expect("writing to a Vec cannot fail");
    buf
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_record<R: Read>(r: &mut R) -> Result<FieldRecord> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(OctError::Format(format!("bad magic {magic:?}")));
    }
    let rank = read_u32(r)? as usize;
    if rank == 0 || rank > 8 {
        return Err(OctError::Format(format!("unsupported rank {rank}")));
    }
    let dims = (0..rank).map(|_| read_u32(r)).collect::<Result<Vec<_>>>()?;
    let count: usize = dims.iter().map(|&d| d as usize).product();
    let payload = match read_u32(r)? {
        0 => Payload::Real((0..count).map(|_| read_f64(r)).collect::<Result<_>>()?),
        1 => Payload::Complex(
            (0..count)
                .map(|_| Ok(Complex64::new(read_f64(r)?, read_f64(r)?)))
                .collect::<Result<_>>()?,
        ),
        k => return Err(OctError::Format(format!("unknown value kind {k}"))),
    };
    Ok(FieldRecord { dims, payload })
}
