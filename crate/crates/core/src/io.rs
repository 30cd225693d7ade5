//! CSV and JSON artifacts. Floats are written with `{:e}`, which round-trips exactly.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::evolution::Trajectory;

/// Rows `t,x,u` for every stored snapshot; `stride` thins the spatial grid.
pub fn trajectory_csv(traj: &Trajectory, stride: usize) -> String {
    let stride = stride.max(1);
    let mut out = String::from("t,x,u\n");
    for s in &traj.snapshots {
        for i in (0..s.len()).step_by(stride) {
            out.push_str(&format!("{:e},{:e},{:e}\n", s.t, s.x(i), s.values[i]));
        }
    }
    out
}

/// Equal-length columns under `header`.
pub fn series_csv(header: &str, columns: &[&[f64]]) -> String {
    let mut out = format!("{header}\n");
    let n = columns.first().map_or(0, |c| c.len());
    for k in 0..n {
        let row: Vec<String> = columns.iter().map(|c| format!("{:e}", c[k])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}
