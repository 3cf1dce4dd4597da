use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChainParams, Mode};
use crate::error::{input, Result};

/// Leading bytes of a binary sample file.
pub const BLOCK_MAGIC: [u8; 4] = *b"ULAB";
/// magic (4) + rows as u64 LE (8) + cols as u32 LE (4).
pub const BLOCK_HEADER_LEN: usize = 16;

/// Provenance stored next to a block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMeta {
    pub mode: Mode,
    pub params: ChainParams,
    pub potential: String,
}

/// Row-major `rows × cols` matrix of retained iterates.
///
/// Single-chain blocks hold `X_{m+1..m+n}`; parallel blocks hold the last
/// iterate of chain `k` in row `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBlock {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    meta: Option<BlockMeta>,
}

impl SampleBlock {
    pub fn from_rows(cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(input("sample block needs at least one column"));
        }
        if data.len() % cols != 0 {
            return Err(input(format!(
                "{} values do not fill rows of width {cols}",
                data.len()
            )));
        }
        Ok(SampleBlock {
            rows: data.len() / cols,
            cols,
            data,
            meta: None,
        })
    }

    pub(crate) fn with_meta(mut self, meta: BlockMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn meta(&self) -> Option<&BlockMeta> {
        self.meta.as_ref()
    }

    /// Path of the JSON sidecar for a binary block file.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Writes the binary matrix file and, when metadata is present, its sidecar.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&BLOCK_MAGIC)?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u32).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        if let Some(meta) = &self.meta {
            let f = File::create(Self::sidecar_path(path))?;
            serde_json::to_writer_pretty(f, meta)?;
        }
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; BLOCK_HEADER_LEN];
        r.read_exact(&mut header)?;
        if header[..4] != BLOCK_MAGIC {
            return Err(input(format!("{} is not a sample block file", path.display())));
        }
        let rows = u64::from_le_bytes(header[4..12].try_into().expect("8 bytes")) as usize;
        let cols = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != rows * cols * 8 {
            return Err(input(format!(
                "expected {} payload bytes for {rows}x{cols}, found {}",
                rows * cols * 8,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let mut block = SampleBlock::from_rows(cols, data)?;
        let sidecar = Self::sidecar_path(path);
        if sidecar.exists() {
            block.meta = Some(serde_json::from_reader(File::open(sidecar)?)?);
        }
        Ok(block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_file_layout_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("block.bin");
        let block = SampleBlock::from_rows(2, vec![1.0, 2.0, 3.0, -4.5, 0.25, 6.0])
            .unwrap()
            .with_meta(BlockMeta {
                mode: Mode::SingleChain,
                params: ChainParams::new(0.1, 5, 3, 9),
                potential: "test".into(),
            });
        block.write_to(&path).unwrap();

        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), BLOCK_HEADER_LEN + 6 * 8);
        assert_eq!(&bytes[..4], b"ULAB");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[16 + 24..16 + 32].try_into().unwrap()), -4.5);

        let back = SampleBlock::read_from(&path).unwrap();
        assert_eq!(back, block);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, [0u8; 24]).unwrap();
        assert!(SampleBlock::read_from(&path).is_err());
    }

    #[test]
    fn ragged_data_rejected() {
        assert!(SampleBlock::from_rows(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(SampleBlock::from_rows(0, vec![]).is_err());
    }
}
