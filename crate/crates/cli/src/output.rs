//! CSV tables, PPM heatmaps and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CELLSCOPE_VERSION");

/// One emitted file, held in memory until the whole run has succeeded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// A CSV table preceded by `#` metadata lines.
pub struct Table {
    header: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>, columns: &[&'static str]) -> Self {
        Table {
            header,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        // adding zero turns -0 into 0
        self.rows.push(row.into_iter().map(|v| v + 0.0).collect());
    }

    pub fn into_file(self, name: String) -> Result<OutputFile> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(format!("# cellscope {VERSION}\n").as_bytes());
        for line in &self.header {
            bytes.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(bytes);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        Ok(OutputFile {
            name,
            bytes: w.into_inner().map_err(|e| e.into_error())?,
        })
    }
}

/// Section rows `(m, n, Q, P, value)` read back from a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionGrid {
    pub q_cells: usize,
    pub p_cells: usize,
    /// Indexed `[m * p_cells + n]`.
    pub values: Vec<f64>,
    pub q_range: (f64, f64),
    pub p_range: (f64, f64),
}

pub fn read_section(text: &str) -> Result<SectionGrid> {
    let body: String =
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .fold(String::new(), |mut acc, l| {
                acc.push_str(l);
                acc.push('\n');
                acc
            });
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let expected = ["m", "n", "Q", "P", "value"];
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        bail!("section CSV must have columns m,n,Q,P,value");
    }
    let mut cells = BTreeMap::new();
    let (mut q_range, mut p_range) = (
        (f64::INFINITY, f64::NEG_INFINITY),
        (f64::INFINITY, f64::NEG_INFINITY),
    );
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .with_context(|| format!("row {}: bad number {:?}", line + 1, &record[i]))
        };
        let (m, n) = (parse(0)?, parse(1)?);
        if m < 0.0 || n < 0.0 || m.fract() != 0.0 || n.fract() != 0.0 {
            bail!(
                "row {}: cell indices must be non-negative integers",
                line + 1
            );
        }
        let (q, p) = (parse(2)?, parse(3)?);
        q_range = (q_range.0.min(q), q_range.1.max(q));
        p_range = (p_range.0.min(p), p_range.1.max(p));
        if cells.insert((m as usize, n as usize), parse(4)?).is_some() {
            bail!("cell ({m}, {n}) appears twice");
        }
    }
    if cells.is_empty() {
        bail!("section CSV has no rows");
    }
    let q_cells = cells.keys().map(|k| k.0).max().unwrap() + 1;
    let p_cells = cells.keys().map(|k| k.1).max().unwrap() + 1;
    if cells.len() != q_cells * p_cells {
        bail!(
            "ragged grid: {} rows for a {q_cells} x {p_cells} bounding grid",
            cells.len()
        );
    }
    Ok(SectionGrid {
        q_cells,
        p_cells,
        values: cells.into_values().collect(),
        q_range,
        p_range,
    })
}

/// Binary PPM with `block`-pixel square cells, `Q` to the right and `P` up,
/// on a linear blue-to-red scale between the grid minimum and maximum.
pub fn render_ppm(grid: &SectionGrid, block: usize) -> Vec<u8> {
    let block = block.max(1);
    let (lo, hi) = grid
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    let (w, h) = (grid.q_cells * block, grid.p_cells * block);
    let mut out = String::new();
    writeln!(out, "P6").unwrap();
    writeln!(
        out,
        "# Q {}..{} P {}..{} value {}..{}",
        grid.q_range.0, grid.q_range.1, grid.p_range.0, grid.p_range.1, lo, hi
    )
    .unwrap();
    write!(out, "{w} {h}\n255\n").unwrap();
    let mut bytes = out.into_bytes();
    for row in 0..h {
        let n = grid.p_cells - 1 - row / block;
        for col in 0..w {
            let m = col / block;
            let v = grid.values[m * grid.p_cells + n];
            let s = if span > 0.0 { (v - lo) / span } else { 0.0 };
            bytes.extend_from_slice(&color(s));
        }
    }
    bytes
}

fn color(s: f64) -> [u8; 3] {
    let s = s.clamp(0.0, 1.0);
    let c = |x: f64| (255.0 * x).round() as u8;
    [c(s), c(1.0 - (2.0 * s - 1.0).abs()), c(1.0 - s)]
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub version: &'static str,
    pub config: serde_json::Value,
    pub scale: crate::config::Scale,
    pub seed: u64,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn entries(files: &[OutputFile]) -> Vec<FileEntry> {
    files
        .iter()
        .map(|f| FileEntry {
            path: f.name.clone(),
            bytes: f.bytes.len(),
            sha256: sha256_hex(&f.bytes),
        })
        .collect()
}

pub fn write_all(dir: &Path, files: &[OutputFile], manifest: &RunManifest) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for f in files {
        let path = dir.join(&f.name);
        std::fs::write(&path, &f.bytes)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section(rows: &[(usize, usize, f64)]) -> String {
        let mut t = Table::new(vec!["test".into()], &["m", "n", "Q", "P", "value"]);
        for &(m, n, v) in rows {
            t.push(vec![m as f64, n as f64, m as f64 * 0.5, n as f64 * 0.5, v]);
        }
        String::from_utf8(t.into_file("s.csv".into()).unwrap().bytes).unwrap()
    }

    #[test]
    fn section_round_trip() {
        let text = section(&[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)]);
        assert!(text.starts_with("# cellscope "));
        let g = read_section(&text).unwrap();
        assert_eq!((g.q_cells, g.p_cells), (2, 2));
        assert_eq!(g.values, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.q_range, (0.0, 0.5));
    }

    #[test]
    fn ragged_grids_are_rejected() {
        let text = section(&[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        assert!(read_section(&text)
            .unwrap_err()
            .to_string()
            .contains("ragged"));
        let text = section(&[(0, 0, 1.0), (0, 0, 2.0)]);
        assert!(read_section(&text).is_err());
    }

    fn pixels(img: &[u8]) -> &[u8] {
        // skip the four header lines
        let mut seen = 0;
        let start = img
            .iter()
            .position(|&b| {
                seen += usize::from(b == b'\n');
                seen == 4
            })
            .unwrap();
        &img[start + 1..]
    }

    #[test]
    fn single_cell_is_one_block() {
        let g = read_section(&section(&[(0, 0, 5.0)])).unwrap();
        let img = render_ppm(&g, 3);
        let px = pixels(&img);
        assert_eq!(px.len(), 27);
        assert!(px.chunks(3).all(|c| c == px.chunks(3).next().unwrap()));
    }

    #[test]
    fn constant_grid_is_uniform() {
        let g = read_section(&section(&[
            (0, 0, 2.0),
            (0, 1, 2.0),
            (1, 0, 2.0),
            (1, 1, 2.0),
        ]))
        .unwrap();
        let img = render_ppm(&g, 2);
        let px = pixels(&img);
        assert_eq!(px.len(), 16 * 3);
        assert!(px.chunks(3).all(|c| c == [0, 0, 255]));
    }

    #[test]
    fn p_increases_upward() {
        let g = read_section(&section(&[(0, 0, 0.0), (0, 1, 1.0)])).unwrap();
        let px = render_ppm(&g, 1);
        let px = pixels(&px);
        assert_eq!(&px[..3], &[255, 0, 0]);
        assert_eq!(&px[3..], &[0, 0, 255]);
    }
}
