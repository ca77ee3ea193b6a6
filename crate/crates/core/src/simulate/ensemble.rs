//! Path ensembles and their file formats.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FellerError, Result};

pub const FLPE_MAGIC: &[u8; 4] = b"FLPE";
pub const FLPE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExactLevy,
    EulerFrozen,
}

/// Root seed and the stream id of path 0; path `p` uses stream `stream_offset + p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub root_seed: u64,
    pub stream_offset: u64,
}

impl SeedLineage {
    pub fn streams(&self, n_paths: usize) -> std::ops::Range<u64> {
        self.stream_offset..self.stream_offset + n_paths as u64
    }
}

/// Simulated paths on a common time grid, stored path-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub dimension: usize,
    /// Stored times, `0 = t_0 < … < t_M`.
    pub time_grid: Vec<f64>,
    pub start: Vec<f64>,
    pub scheme: Scheme,
    pub seed_lineage: SeedLineage,
    /// Simulation steps between stored times.
    pub decimation: usize,
    #[serde(skip)]
    pub positions: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    n_paths: usize,
    dimension: usize,
    time_grid: Vec<f64>,
    start: Vec<f64>,
    scheme: Scheme,
    seed_lineage: SeedLineage,
    decimation: usize,
}

impl PathEnsemble {
    pub fn n_times(&self) -> usize {
        self.time_grid.len()
    }

    /// State of path `p` at stored time index `k`.
    #[inline]
    pub fn position(&self, p: usize, k: usize) -> &[f64] {
        let d = self.dimension;
        let off = (p * self.n_times() + k) * d;
        &self.positions[off..off + d]
    }

    /// All stored states of path `p`, time-major.
    pub fn path(&self, p: usize) -> &[f64] {
        let len = self.n_times() * self.dimension;
        &self.positions[p * len..(p + 1) * len]
    }

    /// Index of the stored time equal to `t` (relative tolerance 1e-12).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.time_grid.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    pub fn require_time_index(&self, t: f64) -> Result<usize> {
        self.time_index(t)
            .ok_or_else(|| FellerError::precondition(format!("time {t} is not on the ensemble grid")))
    }

    /// Size in bytes of the FLPE encoding.
    pub fn encoded_len(&self) -> Result<usize> {
        Ok(4 + 4 + 8 + self.header_json()?.len() + 8 * self.positions.len())
    }

    fn header_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(&Header {
            n_paths: self.n_paths,
            dimension: self.dimension,
            time_grid: self.time_grid.clone(),
            start: self.start.clone(),
            scheme: self.scheme,
            seed_lineage: self.seed_lineage,
            decimation: self.decimation,
        })?)
    }

    /// FLPE encoding: magic, `u32` version, `u64` header length, JSON header,
    /// then little-endian `f64` positions.
    pub fn write_flpe<W: Write>(&self, mut w: W) -> Result<()> {
        let header = self.header_json()?;
        w.write_all(FLPE_MAGIC)?;
        w.write_all(&FLPE_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u64).to_le_bytes())?;
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * 4096);
        for chunk in self.positions.chunks(4096) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_flpe<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FLPE_MAGIC {
            return Err(FellerError::config("not an FLPE ensemble file"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != FLPE_VERSION {
            return Err(FellerError::config(format!("unsupported FLPE version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let len = usize::try_from(u64::from_le_bytes(b8))
            .map_err(|_| FellerError::config("FLPE header length overflows"))?;
        let mut header = vec![0u8; len];
        r.read_exact(&mut header)?;
        let h: Header = serde_json::from_slice(&header)?;
        let count = h.n_paths * h.time_grid.len() * h.dimension;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() != 8 * count {
            return Err(FellerError::config(format!(
                "FLPE payload holds {} bytes, header implies {}",
                raw.len(),
                8 * count
            )));
        }
        let positions = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self {
            n_paths: h.n_paths,
            dimension: h.dimension,
            time_grid: h.time_grid,
            start: h.start,
            scheme: h.scheme,
            seed_lineage: h.seed_lineage,
            decimation: h.decimation,
            positions,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_flpe(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_flpe(BufReader::new(File::open(path)?))
    }

    /// One row per (path, time): `path,step,t,x1,…,xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let coords: Vec<String> = (1..=self.dimension).map(|i| format!("x{i}")).collect();
        writeln!(w, "path,step,t,{}", coords.join(","))?;
        for p in 0..self.n_paths {
            for (k, t) in self.time_grid.iter().enumerate() {
                let xs: Vec<String> = self.position(p, k).iter().map(|v| v.to_string()).collect();
                writeln!(w, "{p},{k},{t},{}", xs.join(","))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
