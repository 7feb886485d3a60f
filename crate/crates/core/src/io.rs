//! Artifact serialization: CSV snapshots and series, JSON reports, and a
//! self-describing binary snapshot format.

use std::io::Write as _;
use std::path::Path;

use crate::analysis::{ConvergenceTable, WeakResidualReport};
use crate::diagnostics::StepSeries;
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, MAX_CELLS};
use crate::state::{to_polar, State};

/// Snapshot CSV: one row per cell, columns x, u, v, r, angle.
pub fn snapshot_csv(state: &State, grid: &Grid) -> String {
    let polar = to_polar(state);
    let mut out = String::from("x,u,v,r,angle\n");
    for j in 0..state.n_cells() {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            grid.cell_center(j),
            state.u[j],
            state.v[j],
            polar.r[j],
            polar.angle[j]
        ));
    }
    out
}

/// Per-step series CSV: step, t, dt, l1_r, l2_r, linf_r, bv_angle,
/// ratio_min, ratio_max.
pub fn series_csv(series: &StepSeries) -> String {
    let mut out = String::from("step,t,dt,l1_r,l2_r,linf_r,bv_angle,ratio_min,ratio_max\n");
    for i in 0..series.step.len() {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            series.step[i],
            series.t[i],
            series.dt[i],
            series.l1_r[i],
            series.l2_r[i],
            series.linf_r[i],
            series.bv_angle[i],
            series.ratio_min[i],
            series.ratio_max[i]
        ));
    }
    out
}

/// Convergence-table CSV: one row per refinement pair.
pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut out =
        String::from("n_coarse,n_fine,l1_error_r,l1_error_u,l1_error_v,rate_r,rate_u,rate_v\n");
    for k in 0..table.l1_errors_r.len() {
        let rate = |v: &Vec<f64>| {
            if k < v.len() {
                format!("{:.17e}", v[k])
            } else {
                String::new()
            }
        };
        out.push_str(&format!(
            "{},{},{:.17e},{:.17e},{:.17e},{},{},{}\n",
            table.resolutions[k],
            table.resolutions[k + 1],
            table.l1_errors_r[k],
            table.l1_errors_u[k],
            table.l1_errors_v[k],
            rate(&table.rates_r),
            rate(&table.rates_u),
            rate(&table.rates_v)
        ));
    }
    out
}

/// Weak-residual CSV: one row per (resolution, test function).
pub fn weak_residual_csv(rows: &[(usize, WeakResidualReport)]) -> String {
    let mut out = String::from("n_cells,test_function,residual_u,residual_v\n");
    for (n, rep) in rows {
        out.push_str(&format!(
            "{},\"{}\",{:.17e},{:.17e}\n",
            n, rep.test_function_id, rep.residual_u, rep.residual_v
        ));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    write_text(path, &(text + "\n"))
}

/// Magic prefix of the binary snapshot format.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"KKSNAP01";

/// Binary snapshot layout (all little-endian):
///   magic [8] | x_min f64 | x_max f64 | n_cells u64 | boundary u8 |
///   t f64 | u[n_cells] f64 | v[n_cells] f64
pub fn encode_snapshot(state: &State, grid: &Grid) -> Vec<u8> {
    let n = state.n_cells();
    let mut out = Vec::with_capacity(8 + 8 + 8 + 8 + 1 + 8 + 16 * n);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&grid.x_min.to_le_bytes());
    out.extend_from_slice(&grid.x_max.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.push(match grid.boundary {
        Boundary::Outflow => 0,
        Boundary::Periodic => 1,
    });
    out.extend_from_slice(&state.t.to_le_bytes());
    for &x in state.u.iter().chain(state.v.iter()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Input("snapshot truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

/// Decode a binary snapshot. Never panics on malformed input: every length
/// and field is validated before use.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(Grid, State)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != SNAPSHOT_MAGIC {
        return Err(Error::Input("snapshot magic mismatch".into()));
    }
    let x_min = r.f64()?;
    let x_max = r.f64()?;
    let n = r.u64()?;
    if n == 0 || n > MAX_CELLS as u64 {
        return Err(Error::Input(format!("snapshot cell count {n} out of range")));
    }
    let n = n as usize;
    let boundary = match r.u8()? {
        0 => Boundary::Outflow,
        1 => Boundary::Periodic,
        b => return Err(Error::Input(format!("unknown boundary tag {b}"))),
    };
    let t = r.f64()?;
    if bytes.len() - r.pos != 16 * n {
        return Err(Error::Input(format!(
            "snapshot payload length {} does not match {} cells",
            bytes.len() - r.pos,
            n
        )));
    }
    let grid = Grid::new(x_min, x_max, n, boundary)?;
    let mut u = Vec::with_capacity(n);
    for _ in 0..n {
        u.push(r.f64()?);
    }
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        v.push(r.f64()?);
    }
    let state = State { t, u, v };
    if !state.is_finite() || !t.is_finite() {
        return Err(Error::Input("snapshot contains non-finite values".into()));
    }
    Ok((grid, state))
}
