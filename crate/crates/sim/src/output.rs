//! CSV writers. Floats use 17 significant digits; `None` is an empty cell.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bpf_core::run::{DiagnosticsRecord, Snapshot};
use bpf_core::transforms::TransformReport;

use crate::config::fmt_real;

pub const DIAGNOSTICS_COLUMNS: &[&str] = &[
    "t",
    "mass_f",
    "mass_g",
    "mass_h",
    "mass_u",
    "price_zero_crossing",
    "price_mass",
    "price_argmax_mu",
    "price_mean_mu",
    "price_median_mu",
    "gap_h2_u2",
    "max_u2_minus_h2",
    "overlap_fg",
    "max_ux",
    "dt_used",
];

pub const SNAPSHOT_COLUMNS: &[&str] = &["x", "f", "g", "h", "u", "mu"];

pub const TRANSFORM_COLUMNS: &[&str] = &["dx", "dt_out", "series_length", "heat_residual_FG", "heat_residual_fSg"];

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Table with `# ` header lines, a column row, then data rows.
pub fn table(header: &[String], columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(header: &[String], records: &[DiagnosticsRecord]) -> String {
    table(
        header,
        DIAGNOSTICS_COLUMNS,
        records.iter().map(|r| {
            vec![
                real(r.t),
                real(r.mass_f),
                real(r.mass_g),
                real(r.mass_h),
                real(r.mass_u),
                opt(r.price_zero_crossing),
                opt(r.price_mass),
                opt(r.price_argmax_mu),
                opt(r.price_mean_mu),
                opt(r.price_median_mu),
                real(r.gap_h2_u2),
                real(r.max_u2_minus_h2),
                real(r.overlap_fg),
                real(r.max_ux),
                real(r.dt_used),
            ]
        }),
    )
}

pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_{}.csv", fmt_real(t))
}

pub fn snapshot_csv(header: &[String], snap: &Snapshot) -> String {
    let o = &snap.obs;
    let grid = o.h.grid();
    let mut lines = header.to_vec();
    lines.push(format!("# t = {}", fmt_real(snap.t)));
    table(
        &lines,
        SNAPSHOT_COLUMNS,
        (0..grid.len()).map(|i| {
            vec![
                real(grid.x(i)),
                real(o.f.values()[i]),
                real(o.g.values()[i]),
                real(o.h.values()[i]),
                real(o.u.values()[i]),
                opt(o.mu.as_ref().map(|m| m.values()[i])),
            ]
        }),
    )
}

pub fn transform_csv(header: &[String], reports: &[TransformReport]) -> String {
    table(
        header,
        TRANSFORM_COLUMNS,
        reports.iter().map(|r| {
            vec![
                real(r.dx),
                real(r.dt_out),
                r.series_length.to_string(),
                real(r.heat_residual_fg),
                real(r.heat_residual_fsg),
            ]
        }),
    )
}

/// Writes `diagnostics.csv` and one file per snapshot; returns the paths.
pub fn write_run(
    dir: &Path,
    header: &[String],
    records: &[DiagnosticsRecord],
    snapshots: &[Snapshot],
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(snapshots.len() + 1);
    let diag = dir.join("diagnostics.csv");
    fs::write(&diag, diagnostics_csv(header, records))?;
    paths.push(diag);
    for snap in snapshots {
        let path = dir.join(snapshot_name(snap.t));
        fs::write(&path, snapshot_csv(header, snap))?;
        paths.push(path);
    }
    Ok(paths)
}

/// `# key = value` line.
pub fn meta(key: &str, value: impl std::fmt::Display) -> String {
    let mut s = String::new();
    let _ = write!(s, "# {key} = {value}");
    s
}
