use std::io::{BufRead, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeedLineage, StreamRng};

/// Rows per random stream. Chunk `c` of a batch draws from
/// `lineage.derive("chunk", c)`, so output is independent of thread count.
pub const CHUNK_ROWS: usize = 4096;

const BINARY_MAGIC: &[u8; 4] = b"BAB1";

/// `count × dim` samples, row-major, with the lineage that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub dim: usize,
    pub count: usize,
    pub data: Vec<f64>,
    pub lineage: SeedLineage,
}

impl SampleBatch {
    /// Fills `count` rows by calling `draw(rng, row)` per row, chunk-parallel.
    pub fn generate<F>(dim: usize, count: usize, lineage: SeedLineage, draw: F) -> Self
    where
        F: Fn(&mut StreamRng, &mut [f64]) + Sync,
    {
        let mut data = vec![0.0; dim * count];
        if dim > 0 {
            data.par_chunks_mut(CHUNK_ROWS * dim)
                .enumerate()
                .for_each(|(c, chunk)| {
                    let mut rng = lineage.derive("chunk", c as u64).rng();
                    for row in chunk.chunks_exact_mut(dim) {
                        draw(&mut rng, row);
                    }
                });
        }
        Self {
            dim,
            count,
            data,
            lineage,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], lineage: SeedLineage) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "sample row",
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            dim,
            count: rows.len(),
            data,
            lineage,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.count)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Keeps the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> SampleBatch {
        let mut data = Vec::with_capacity(cols.len() * self.count);
        for r in self.rows() {
            data.extend(cols.iter().map(|&c| r[c]));
        }
        SampleBatch {
            dim: cols.len(),
            count: self.count,
            data,
            lineage: self.lineage,
        }
    }

    /// CSV with a header row of coordinate labels `x1, …, xd`.
    /// Values use Rust's shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for r in self.rows() {
            line.clear();
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:?}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, lineage: SeedLineage) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let dim = header.split(',').count();
        let mut data = Vec::new();
        let mut count = 0;
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = 0;
            for f in line.split(',') {
                let v: f64 = f.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad number {f:?}", n + 2))
                })?;
                data.push(v);
                fields += 1;
            }
            if fields != dim {
                return Err(Error::DimensionMismatch {
                    what: "CSV row",
                    expected: dim,
                    found: fields,
                });
            }
            count += 1;
        }
        Ok(Self {
            dim,
            count,
            data,
            lineage,
        })
    }

    /// Compact column format: magic `BAB1`, `dim: u32`, `count: u64`, then
    /// each column as `count` little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.count as u64).to_le_bytes())?;
        for j in 0..self.dim {
            for r in self.rows() {
                w.write_all(&r[j].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, lineage: SeedLineage) -> Result<Self> {
        let io = |e: std::io::Error| Error::InvalidArgument(e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::InvalidArgument("not a sample batch file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4).map_err(io)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8).map_err(io)?;
        let count = u64::from_le_bytes(b8) as usize;
        let mut data = vec![0.0; dim * count];
        for j in 0..dim {
            for i in 0..count {
                r.read_exact(&mut b8).map_err(io)?;
                data[i * dim + j] = f64::from_le_bytes(b8);
            }
        }
        Ok(Self {
            dim,
            count,
            data,
            lineage,
        })
    }
}
