//! Scalar element types the simulator and kernels are generic over.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{NumCast, Signed, ToPrimitive};

/// On-disk element type code shared by the sparse and dense file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    I32,
    F32,
    F64,
    I64,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::I32 => 0,
            DType::F32 => 1,
            DType::F64 => 2,
            DType::I64 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::I32),
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            3 => Some(DType::I64),
            _ => None,
        }
    }

    pub fn size_bytes(self) -> usize {
        match self {
            DType::I32 | DType::F32 => 4,
            DType::F64 | DType::I64 => 8,
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, DType::I32 | DType::I64)
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::I32 => "i32",
            DType::F32 => "f32",
            DType::F64 => "f64",
            DType::I64 => "i64",
        }
    }
}

impl FromStr for DType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i32" => Ok(DType::I32),
            "f32" => Ok(DType::F32),
            "f64" => Ok(DType::F64),
            "i64" => Ok(DType::I64),
            other => Err(format!("unknown dtype `{other}` (expected i32, f32, f64 or i64)")),
        }
    }
}

impl Display for DType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A numeric matrix element.
///
/// Integer elements give exact arithmetic; floating-point elements accumulate
/// in the order instructions are executed.
pub trait Element:
    Copy
    + Debug
    + Display
    + Default
    + PartialEq
    + PartialOrd
    + Signed
    + NumCast
    + ToPrimitive
    + FromStr
    + Send
    + Sync
    + 'static
{
    const DTYPE: DType;

    fn write_le(self, out: &mut Vec<u8>);

    /// Decodes one element from exactly `DTYPE.size_bytes()` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;

    /// Raw bit pattern, used for output digests.
    fn to_bits_u64(self) -> u64;
}

macro_rules! impl_element {
    ($t:ty, $dtype:expr, $bits:expr) => {
        impl Element for $t {
            const DTYPE: DType = $dtype;

            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; std::mem::size_of::<$t>()];
                buf.copy_from_slice(bytes);
                <$t>::from_le_bytes(buf)
            }

            fn to_bits_u64(self) -> u64 {
                #[allow(clippy::redundant_closure_call)]
                ($bits)(self)
            }
        }
    };
}

impl_element!(i32, DType::I32, |x: i32| x as u32 as u64);
impl_element!(i64, DType::I64, |x: i64| x as u64);
impl_element!(f32, DType::F32, |x: f32| x.to_bits() as u64);
impl_element!(f64, DType::F64, |x: f64| x.to_bits());

/// Converts a small integer (index, count) into an element.
pub(crate) fn from_usize<T: Element>(v: usize) -> T {
    <T as NumCast>::from(v).expect("index value representable in element type")
}
