//! `ACTV1` binary container for stimulus × position × unit activations.
//!
//! Layout, all little-endian:
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 4     | magic `ACTV` (`41 43 54 56`)            |
//! | 4     | u32 version, always 1                   |
//! | 4     | u32 n_stimuli                           |
//! | 4     | u32 seq_len (1 when already pooled)     |
//! | 4     | u32 n_units                             |
//! | 4·N   | f32 values, row-major (stimulus, position, unit) |

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"ACTV";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum ActvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not an ACTV1 file (magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported ACTV version {0}")]
    Version(u32),
    #[error("payload holds {got} bytes, header promises {expected}")]
    Length { expected: u64, got: u64 },
    #[error("data length {got} does not match shape {n_stimuli}x{seq_len}x{n_units}")]
    Shape {
        n_stimuli: usize,
        seq_len: usize,
        n_units: usize,
        got: usize,
    },
}

/// Raw activations before sequence pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawActivations {
    pub n_stimuli: usize,
    pub seq_len: usize,
    pub n_units: usize,
    pub data: Vec<f32>,
}

impl RawActivations {
    pub fn new(n_stimuli: usize, seq_len: usize, n_units: usize, data: Vec<f32>) -> Result<Self, ActvError> {
        let expected = n_stimuli.checked_mul(seq_len).and_then(|v| v.checked_mul(n_units));
        if expected != Some(data.len()) {
            return Err(ActvError::Shape {
                n_stimuli,
                seq_len,
                n_units,
                got: data.len(),
            });
        }
        Ok(Self {
            n_stimuli,
            seq_len,
            n_units,
            data,
        })
    }

    pub fn get(&self, stimulus: usize, position: usize, unit: usize) -> f32 {
        self.data[(stimulus * self.seq_len + position) * self.n_units + unit]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), ActvError> {
        let dim = |v: usize| {
            u32::try_from(v).map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32"))
        };
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(&MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&dim(self.n_stimuli)?.to_le_bytes());
        header.extend_from_slice(&dim(self.seq_len)?.to_le_bytes());
        header.extend_from_slice(&dim(self.n_units)?.to_le_bytes());
        w.write_all(&header)?;
        let mut body = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            body.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&body)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ActvError> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4-byte slice"));
        let magic: [u8; 4] = header[..4].try_into().expect("4-byte slice");
        if magic != MAGIC {
            return Err(ActvError::BadMagic(magic));
        }
        if word(4) != VERSION {
            return Err(ActvError::Version(word(4)));
        }
        let (n_stimuli, seq_len, n_units) = (word(8) as usize, word(12) as usize, word(16) as usize);
        let expected = 4 * u64::from(word(8)) * u64::from(word(12)) * u64::from(word(16));
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() as u64 != expected {
            return Err(ActvError::Length {
                expected,
                got: body.len() as u64,
            });
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        Self::new(n_stimuli, seq_len, n_units, data)
    }

    pub fn write(&self, path: &Path) -> Result<(), ActvError> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn read(path: &Path) -> Result<Self, ActvError> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
