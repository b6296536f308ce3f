//! Snapshot-by-snapshot distance between two run directories.

use std::fs;
use std::path::Path;

use bpf_core::{Field, Grid1D, Norm};

use crate::jobs::{Result, SimError};

/// Snapshot file read back: its time, node positions and named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotTable {
    pub t: f64,
    pub x: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SnapshotTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub field: String,
    pub distance: f64,
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> SimError {
    SimError::Usage(format!("{}: {msg}", path.display()))
}

pub fn read_snapshot(path: &Path, t: f64) -> Result<SnapshotTable> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let names: Vec<String> = lines
        .next()
        .ok_or_else(|| bad(path, "no column row"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if names.first().map(String::as_str) != Some("x") {
        return Err(bad(path, "first column must be x"));
    }
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != names.len() {
            return Err(bad(path, format!("row {} has {} cells", row + 1, cells.len())));
        }
        for (col, cell) in cells.iter().enumerate() {
            let cell = cell.trim();
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse().map_err(|_| bad(path, format!("bad number `{cell}`")))?
            };
            data[col].push(v);
        }
    }
    let mut columns: Vec<(String, Vec<f64>)> = names.into_iter().zip(data).collect();
    let x = columns.remove(0).1;
    Ok(SnapshotTable { t, x, columns })
}

/// Snapshot files in `dir`, sorted by time.
pub fn list_snapshots(dir: &Path) -> Result<Vec<(f64, std::path::PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if let Some(t) = name
            .strip_prefix("snapshot_")
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|t| t.parse::<f64>().ok())
        {
            out.push((t, path));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale
}

/// Node stride `r` with `fine.x[r i] = coarse.x[i]`, if the grids nest.
fn nesting(fine: &[f64], coarse: &[f64]) -> Option<usize> {
    if coarse.len() < 2 || fine.len() < coarse.len() || !(fine.len() - 1).is_multiple_of(coarse.len() - 1) {
        return None;
    }
    let r = (fine.len() - 1) / (coarse.len() - 1);
    let scale = (coarse[coarse.len() - 1] - coarse[0]).abs().max(1.0);
    coarse
        .iter()
        .enumerate()
        .all(|(i, x)| close(fine[r * i], *x, scale))
        .then_some(r)
}

/// Distances per common snapshot time and field. The finer of two nested
/// grids is restricted to the coarse nodes.
pub fn compare_dirs(a: &Path, b: &Path, fields: &[String], norm: Norm) -> Result<Vec<CompareRow>> {
    let sa = list_snapshots(a)?;
    let sb = list_snapshots(b)?;
    let mut rows = Vec::new();
    for (ta, pa) in &sa {
        let Some((_, pb)) = sb.iter().find(|(tb, _)| close(*ta, *tb, ta.abs().max(1.0))) else {
            continue;
        };
        let (xa, xb) = (read_snapshot(pa, *ta)?, read_snapshot(pb, *ta)?);
        let (fine, coarse, fine_is_a) = if xa.x.len() >= xb.x.len() {
            (&xa, &xb, true)
        } else {
            (&xb, &xa, false)
        };
        let r = nesting(&fine.x, &coarse.x)
            .ok_or_else(|| SimError::Usage(format!("snapshot t = {ta}: grids are neither equal nor nested")))?;
        let n = coarse.x.len() - 1;
        let grid = Grid1D::new(coarse.x[0], coarse.x[n], n)?;
        for name in fields {
            let (Some(cf), Some(ff)) = (coarse.column(name), fine.column(name)) else {
                return Err(SimError::Usage(format!("snapshot t = {ta}: no column `{name}`")));
            };
            let restricted: Vec<f64> = (0..=n).map(|i| ff[r * i]).collect();
            let (va, vb) = if fine_is_a {
                (restricted, cf.to_vec())
            } else {
                (cf.to_vec(), restricted)
            };
            let d = Field::new(grid, va)?.distance(&Field::new(grid, vb)?, norm)?;
            rows.push(CompareRow {
                t: *ta,
                field: name.clone(),
                distance: d,
            });
        }
    }
    if rows.is_empty() {
        return Err(SimError::Usage(format!(
            "no snapshot times in common between {} and {}",
            a.display(),
            b.display()
        )));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_grids_detected() {
        let coarse: Vec<f64> = (0..=4).map(|i| -1.0 + 0.5 * i as f64).collect();
        let fine: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
        assert_eq!(nesting(&fine, &coarse), Some(2));
        assert_eq!(nesting(&coarse, &coarse), Some(1));
        let odd: Vec<f64> = (0..=6).map(|i| -1.0 + i as f64 / 3.0).collect();
        assert_eq!(nesting(&odd, &coarse), None);
    }
}
