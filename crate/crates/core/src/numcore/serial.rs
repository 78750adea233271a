//! Weight file format: 4-byte magic `GGNP`, little-endian `u32` header
//! length, UTF-8 JSON header, then `payload_len` little-endian floats of
//! the header's `dtype`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"GGNP";
pub const FORMAT_VERSION: u32 = 1;

/// Per-channel standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsHeader {
    pub format_version: u32,
    pub kind: String,
    pub architecture: serde_json::Value,
    pub shapes: Vec<usize>,
    pub scaler: Option<ScalerStats>,
    pub seed: u64,
    pub dtype: String,
    pub payload_len: usize,
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn write_params<T: Scalar, W: Write>(mut out: W, header: &ParamsHeader, payload: &[T]) -> Result<()> {
    if header.payload_len != payload.len() || header.dtype != T::DTYPE {
        return Err(Error::Format("header does not describe the payload".into()));
    }
    let json = serde_json::to_vec(header)?;
    let mut buf = Vec::with_capacity(8 + json.len() + payload.len() * T::BYTES);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for &v in payload {
        v.write_le(&mut buf);
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_params<T: Scalar, R: Read>(mut input: R) -> Result<(ParamsHeader, Vec<T>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a parameter file (bad magic)".into()));
    }
    let hlen = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    let body = bytes.get(8..8 + hlen).ok_or_else(|| Error::Format("truncated header".into()))?;
    let header: ParamsHeader = serde_json::from_slice(body)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format_version {}", header.format_version)));
    }
    if header.dtype != T::DTYPE {
        return Err(Error::Format(format!("payload is {}, requested {}", header.dtype, T::DTYPE)));
    }
    let payload = &bytes[8 + hlen..];
    if payload.len() != header.payload_len * T::BYTES {
        return Err(Error::Format(format!(
            "payload has {} bytes, header promises {} values",
            payload.len(),
            header.payload_len
        )));
    }
    let values = payload.chunks_exact(T::BYTES).map(T::read_le).collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(n: usize, dtype: &str) -> ParamsHeader {
        ParamsHeader {
            format_version: FORMAT_VERSION,
            kind: "test".into(),
            architecture: serde_json::json!({"layers": 1}),
            shapes: vec![n],
            scaler: Some(ScalerStats { mean: vec![0.1, 1.0 / 3.0], std: vec![2.5, 1e-300] }),
            seed: 42,
            dtype: dtype.into(),
            payload_len: n,
            extra: serde_json::Value::Null,
        }
    }

    #[test]
    fn bit_exact_round_trip() {
        let payload = vec![0.1f64, -0.0, 1e-310, f64::MAX, std::f64::consts::PI];
        let mut buf = Vec::new();
        write_params(&mut buf, &header(5, "f64"), &payload).unwrap();
        let (h, back) = read_params::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(h, header(5, "f64"));
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&payload));
    }

    #[test]
    fn rejects_wrong_dtype_and_truncation() {
        let mut buf = Vec::new();
        write_params(&mut buf, &header(2, "f32"), &[1.0f32, 2.0]).unwrap();
        assert!(read_params::<f64, _>(buf.as_slice()).is_err());
        buf.pop();
        assert!(read_params::<f32, _>(buf.as_slice()).is_err());
        assert!(read_params::<f32, _>(&b"nope"[..]).is_err());
    }
}
