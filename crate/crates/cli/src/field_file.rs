//! Binary field container.
//!
//! Layout, all little-endian: magic `F3DF`, `u32` version, `u8` rank,
//! `u32` nx, ny, nz, `f64` L, then `2·rank·nx·ny·nz` `f64` values as
//! interleaved (re, im) pairs, x fastest, components outermost.

use std::io::{Read, Write};
use std::path::Path;

use fracmax_core::spectral::{Grid3, ScalarField, VectorField3, C64};

use crate::error::{CliError, CliResult};

pub const MAGIC: [u8; 4] = *b"F3DF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 12 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub rank: u8,
    pub dims: [u32; 3],
    pub l: f64,
    pub data: Vec<C64>,
}

impl FieldFile {
    pub fn from_scalar(u: &ScalarField) -> Self {
        Self::build(1, u.grid(), u.values().to_vec())
    }

    pub fn from_vector(v: &VectorField3) -> Self {
        Self::build(3, v.grid(), v.to_flat())
    }

    fn build(rank: u8, grid: &Grid3, data: Vec<C64>) -> Self {
        let n = grid.n() as u32;
        Self {
            rank,
            dims: [n; 3],
            l: grid.l(),
            data,
        }
    }

    fn points(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.rank);
        for d in self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&self.l.to_le_bytes());
        for c in &self.data {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    /// Parses a buffer; `Err` carries the reason only.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        if bytes.len() < HEADER_LEN {
            return Err(format!("truncated header ({} bytes)", bytes.len()));
        }
        if bytes[0..4] != MAGIC {
            return Err(format!("bad magic bytes {:?}", &bytes[0..4]));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let rank = bytes[8];
        if rank != 1 && rank != 3 {
            return Err(format!("rank must be 1 or 3, got {rank}"));
        }
        let dims = [u32_at(9), u32_at(13), u32_at(17)];
        let l = f64::from_le_bytes(bytes[21..29].try_into().expect("8 bytes"));
        let count = dims.iter().map(|&d| d as usize).product::<usize>() * rank as usize;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != 16 * count {
            return Err(format!("payload has {} bytes, expected {}", payload.len(), 16 * count));
        }
        let data = payload
            .chunks_exact(16)
            .map(|ch| {
                C64::new(
                    f64::from_le_bytes(ch[0..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(ch[8..16].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Self { rank, dims, l, data })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| CliError::FieldFormat {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn grid(&self) -> Result<Grid3, String> {
        let [nx, ny, nz] = self.dims;
        if nx != ny || ny != nz {
            return Err(format!("non-cubic grid {nx}x{ny}x{nz}"));
        }
        Grid3::new(nx as usize, self.l).map_err(|e| e.to_string())
    }

    pub fn to_vector(&self) -> Result<VectorField3, String> {
        if self.rank != 3 {
            return Err(format!("expected a rank-3 field, got rank {}", self.rank));
        }
        let grid = self.grid()?;
        debug_assert_eq!(self.data.len(), 3 * self.points());
        VectorField3::from_flat(&grid, &self.data).map_err(|e| e.to_string())
    }

    pub fn to_scalar(&self) -> Result<ScalarField, String> {
        if self.rank != 1 {
            return Err(format!("expected a rank-1 field, got rank {}", self.rank));
        }
        let grid = self.grid()?;
        ScalarField::new(&grid, self.data.clone()).map_err(|e| e.to_string())
    }
}

pub fn write_vector(path: &Path, v: &VectorField3) -> CliResult<()> {
    FieldFile::from_vector(v).write(path)
}

pub fn write_scalar(path: &Path, u: &ScalarField) -> CliResult<()> {
    FieldFile::from_scalar(u).write(path)
}

pub fn read_vector(path: &Path) -> CliResult<VectorField3> {
    FieldFile::read(path)?
        .to_vector()
        .map_err(|reason| CliError::FieldFormat {
            path: path.to_path_buf(),
            reason,
        })
}
