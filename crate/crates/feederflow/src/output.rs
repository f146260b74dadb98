//! CSV/JSON/text emission. Every file is written to a temporary sibling and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use feederflow_core::{Field, Grid, Profile};
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

/// Header plus rows of already formatted cells.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// One row per sample: segment id, arclength, then one cell per field.
pub fn sampled_rows<'a>(
    ids: &'a [&'a str],
    grid: &'a Grid,
    fields: &'a [Option<&'a Field>],
) -> impl Iterator<Item = Vec<String>> + 'a {
    (0..grid.len()).flat_map(move |i| {
        grid.segment(i).abscissae().iter().enumerate().map(move |(k, &x)| {
            let mut row = Vec::with_capacity(2 + fields.len());
            row.push(ids[i].to_string());
            row.push(num(x));
            row.extend(fields.iter().map(|f| f.map(|f| num(f[i][k])).unwrap_or_default()));
            row
        })
    })
}

pub const PROFILE_HEADER: [&str; 6] = ["segment_id", "x_km", "theta_rad", "v_pu", "s_pu", "w_pu_per_km"];

pub fn profile_csv(ids: &[&str], profile: &Profile) -> Result<Vec<u8>> {
    let fields = [Some(&profile.theta), Some(&profile.v), Some(&profile.s), Some(&profile.w)];
    csv_bytes(&PROFILE_HEADER, sampled_rows(ids, &profile.grid, &fields))
}

/// Right-aligned columns separated by two spaces.
pub fn aligned_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        parts.join("  ")
    };
    let mut out = line(&mut header.iter().copied());
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
        out.push('\n');
    }
    out
}
