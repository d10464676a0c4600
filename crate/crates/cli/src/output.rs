//! Output directory with CSV tables, GPF1 fields and a checksum manifest.

use std::fs;
use std::path::{Path, PathBuf};

use bec_oct::io::{to_bytes, FieldRecord};
use bec_oct::{SpaceGrid, WaveField};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST: &str = "manifest.csv";

/// Round-trip exact float text (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn record(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.record(name);
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write_bytes(name, &bytes)
    }

    /// Writes `<stem>.gpf` and its `<stem>_axes.csv`.
    pub fn write_field(&mut self, stem: &str, record: &FieldRecord, axes: &[(&str, Vec<f64>)]) -> Result<()> {
        self.write_bytes(&format!("{stem}.gpf"), &to_bytes(record))?;
        let rows: Vec<Vec<Cell>> = axes
            .iter()
            .flat_map(|(name, values)| {
                values
                    .iter()
                    .enumerate()
                    .map(move |(i, v)| vec![Cell::S(name.to_string()), Cell::U(i), Cell::F(*v)])
            })
            .collect();
        self.write_csv(&format!("{stem}_axes.csv"), &["axis", "index", "value"], &rows)
    }

    pub fn write_state(&mut self, stem: &str, psi: &WaveField) -> Result<()> {
        let grid = psi.grid();
        let record = FieldRecord::complex(state_dims(grid), psi.values().to_vec())?;
        self.write_field(stem, &record, &space_axes(grid))
    }

    /// Writes the manifest of every file written so far.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.written.sort();
        let mut rows = Vec::new();
        for name in &self.written {
            let bytes = fs::read(self.root.join(name))?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            rows.push(vec![Cell::S(name.clone()), Cell::U(bytes.len()), Cell::S(hex)]);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["file", "bytes", "sha256"])?;
        for row in &rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        let path = self.root.join(MANIFEST);
        fs::write(&path, bytes)?;
        Ok(path)
    }
}

pub fn state_dims(grid: &SpaceGrid) -> Vec<u32> {
    match grid.y {
        Some(ay) => vec![grid.x.n as u32, ay.n as u32],
        None => vec![grid.x.n as u32],
    }
}

pub fn space_axes(grid: &SpaceGrid) -> Vec<(&'static str, Vec<f64>)> {
    let mut axes = vec![("x", grid.x.coords())];
    if let Some(ay) = grid.y {
        axes.push(("y", ay.coords()));
    }
    axes
}
