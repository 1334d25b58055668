//! RVOL: a JSON sidecar header plus a raw little-endian sample file.
//!
//! For a volume named `scan`, the header lives in `scan.json`:
//!
//! ```json
//! {"size":[256,256,64],"spacing":[1.0,1.0,5.0],"dtype":"u16"}
//! ```
//!
//! and exactly `Sx*Sy*Sz` samples, x varying fastest, live in `scan.raw`.
//! Label volumes use `u32` with 0 for background.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dtype, Sample, Spacing, Volume};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvolHeader {
    pub size: [usize; 3],
    pub spacing: Spacing,
    pub dtype: Dtype,
}

/// A volume of any supported sample type, as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyVolume {
    U8(Volume<u8>),
    U16(Volume<u16>),
    U32(Volume<u32>),
    F32(Volume<f32>),
}

impl AnyVolume {
    pub fn dtype(&self) -> Dtype {
        match self {
            AnyVolume::U8(_) => Dtype::U8,
            AnyVolume::U16(_) => Dtype::U16,
            AnyVolume::U32(_) => Dtype::U32,
            AnyVolume::F32(_) => Dtype::F32,
        }
    }

    pub fn size(&self) -> [usize; 3] {
        match self {
            AnyVolume::U8(v) => v.size(),
            AnyVolume::U16(v) => v.size(),
            AnyVolume::U32(v) => v.size(),
            AnyVolume::F32(v) => v.size(),
        }
    }

    pub fn to_f32(&self) -> Volume<f32> {
        match self {
            AnyVolume::U8(v) => v.to_f32(),
            AnyVolume::U16(v) => v.to_f32(),
            AnyVolume::U32(v) => v.to_f32(),
            AnyVolume::F32(v) => v.clone(),
        }
    }

    /// Interprets the volume as a label map. Float volumes are rejected.
    pub fn into_labels(self) -> Result<Volume<u32>> {
        match self {
            AnyVolume::U8(v) => Ok(v.map(u32::from)),
            AnyVolume::U16(v) => Ok(v.map(u32::from)),
            AnyVolume::U32(v) => Ok(v),
            AnyVolume::F32(_) => Err(Error::invalid("dtype", "label volumes must be integer-typed")),
        }
    }
}

/// Header and data paths for a volume name. A trailing `.json` or `.raw`
/// extension on `name` is ignored.
pub fn paths(name: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let name = name.as_ref();
    let stem = match name.extension().and_then(|e| e.to_str()) {
        Some("json") | Some("raw") => name.with_extension(""),
        _ => name.to_path_buf(),
    };
    let mut header = stem.clone().into_os_string();
    header.push(".json");
    let mut raw = stem.into_os_string();
    raw.push(".raw");
    (header.into(), raw.into())
}

pub fn write<T: Sample>(name: impl AsRef<Path>, v: &Volume<T>) -> Result<()> {
    let (header_path, raw_path) = paths(name);
    let header = RvolHeader {
        size: v.size(),
        spacing: v.spacing(),
        dtype: T::DTYPE,
    };
    fs::write(&header_path, serde_json::to_vec(&header)?).map_err(|e| Error::io(&header_path, e))?;
    let mut bytes = Vec::with_capacity(v.len() * T::DTYPE.byte_width());
    for &s in v.data() {
        s.write_le(&mut bytes);
    }
    fs::write(&raw_path, bytes).map_err(|e| Error::io(&raw_path, e))
}

pub fn read_header(name: impl AsRef<Path>) -> Result<RvolHeader> {
    let (header_path, _) = paths(name);
    let text = fs::read(&header_path).map_err(|e| Error::io(&header_path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::Format {
        path: header_path,
        reason: e.to_string(),
    })
}

pub fn read(name: impl AsRef<Path>) -> Result<AnyVolume> {
    let header = read_header(&name)?;
    let (_, raw_path) = paths(&name);
    let bytes = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let n: usize = header.size.iter().product();
    let width = header.dtype.byte_width();
    if bytes.len() != n * width {
        return Err(Error::Format {
            path: raw_path,
            reason: format!(
                "expected {} bytes for {:?} {:?}, found {}",
                n * width,
                header.size,
                header.dtype,
                bytes.len()
            ),
        });
    }
    fn decode<T: Sample>(h: &RvolHeader, bytes: &[u8]) -> Result<Volume<T>> {
        let width = T::DTYPE.byte_width();
        let data = bytes.chunks_exact(width).map(T::read_le).collect();
        Volume::new(h.size, h.spacing, data)
    }
    Ok(match header.dtype {
        Dtype::U8 => AnyVolume::U8(decode(&header, &bytes)?),
        Dtype::U16 => AnyVolume::U16(decode(&header, &bytes)?),
        Dtype::U32 => AnyVolume::U32(decode(&header, &bytes)?),
        Dtype::F32 => AnyVolume::F32(decode(&header, &bytes)?),
    })
}
