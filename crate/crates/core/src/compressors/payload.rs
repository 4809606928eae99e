use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wire format version written into every header.
pub const FORMAT_VERSION: u8 = 1;

/// Fixed header size: codec id (1), version (1), dimension (8), seed (8),
/// scalar count (2). Scalars follow as little-endian `f64`, then the body.
pub const HEADER_BYTES: usize = 20;

/// Uplink codec identifier. The discriminant is the first byte on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum CodecId {
    /// Dense update, `f32` per coordinate.
    None = 0,
    MrnBinary = 1,
    MrnSigned = 2,
    SignStochastic = 3,
    Topk = 4,
    Terngrad = 5,
    Drive = 6,
}

impl CodecId {
    pub const ALL: [CodecId; 7] = [
        CodecId::None,
        CodecId::MrnBinary,
        CodecId::MrnSigned,
        CodecId::SignStochastic,
        CodecId::Topk,
        CodecId::Terngrad,
        CodecId::Drive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CodecId::None => "none",
            CodecId::MrnBinary => "mrn_binary",
            CodecId::MrnSigned => "mrn_signed",
            CodecId::SignStochastic => "sign_stochastic",
            CodecId::Topk => "topk",
            CodecId::Terngrad => "terngrad",
            CodecId::Drive => "drive",
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| *c as u8 == b)
    }

    /// Codecs whose update is learned during local training rather than
    /// compressed afterwards.
    pub fn is_mrn(self) -> bool {
        matches!(self, CodecId::MrnBinary | CodecId::MrnSigned)
    }

    pub fn scalar_count(self) -> usize {
        match self {
            CodecId::SignStochastic | CodecId::Terngrad | CodecId::Drive => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for CodecId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sign" | "signsgd" => Ok(CodecId::SignStochastic),
            "fedavg" | "dense" => Ok(CodecId::None),
            "fedmrn" => Ok(CodecId::MrnBinary),
            "fedmrns" => Ok(CodecId::MrnSigned),
            _ => Self::ALL
                .into_iter()
                .find(|c| c.name() == s)
                .ok_or_else(|| format!("unknown codec `{s}`")),
        }
    }
}

/// One client's uplink message.
#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub codec: CodecId,
    pub dim: usize,
    /// Shared-randomness seed (noise seed for mask codecs, rotation seed for
    /// DRIVE), zero otherwise.
    pub seed: u64,
    pub scalars: Vec<f64>,
    pub body: Vec<u8>,
}

impl Payload {
    /// Exact serialized size in bytes.
    pub fn payload_bytes(&self) -> usize {
        HEADER_BYTES + 8 * self.scalars.len() + self.body.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload_bytes());
        out.push(self.codec as u8);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.scalars.len() as u16).to_le_bytes());
        for s in &self.scalars {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Decode(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        let codec =
            CodecId::from_byte(bytes[0]).ok_or_else(|| Error::Decode(format!("unknown codec id {}", bytes[0])))?;
        if bytes[1] != FORMAT_VERSION {
            return Err(Error::Decode(format!("unsupported format version {}", bytes[1])));
        }
        let dim = u64::from_le_bytes(bytes[2..10].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
        let n_scalars = u16::from_le_bytes(bytes[18..20].try_into().unwrap()) as usize;
        let body_start = HEADER_BYTES + 8 * n_scalars;
        if bytes.len() < body_start {
            return Err(Error::Decode("truncated scalar block".into()));
        }
        let scalars = bytes[HEADER_BYTES..body_start]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let p = Payload {
            codec,
            dim,
            seed,
            scalars,
            body: bytes[body_start..].to_vec(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks scalar count and body length against the codec's layout.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Decode("zero dimension".into()));
        }
        if self.scalars.len() != self.codec.scalar_count() {
            return Err(Error::Decode(format!(
                "{} expects {} scalars, found {}",
                self.codec,
                self.codec.scalar_count(),
                self.scalars.len()
            )));
        }
        let len = self.body.len();
        let ok = match self.codec {
            CodecId::None => len == 4 * d,
            CodecId::MrnBinary | CodecId::MrnSigned | CodecId::SignStochastic => len == d.div_ceil(8),
            CodecId::Terngrad => len == (2 * d).div_ceil(8),
            CodecId::Topk => len.is_multiple_of(12) && len > 0 && len / 12 <= d,
            CodecId::Drive => len == d.next_power_of_two().div_ceil(8) || len == d.div_ceil(8),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Decode(format!(
                "{} body of {len} bytes does not fit dimension {d}",
                self.codec
            )))
        }
    }
}
