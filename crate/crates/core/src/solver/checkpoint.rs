//! Plain-text checkpoints: a short `#` header followed by one row per
//! regular node (`n1 n2 c u`), `u` padded with `0` on the last row.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::grid::{FieldState, Grid1D, GridError};

const MAGIC: &str = "# autotumor-checkpoint v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (missing header)")]
    BadMagic,
    #[error("missing or malformed header field `{0}`")]
    Header(&'static str),
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn write_checkpoint<W: Write>(mut w: W, state: &FieldState, gamma: f64) -> io::Result<()> {
    let g = &state.grid;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "# x_min {:e}", g.x_min())?;
    writeln!(w, "# dx {:e}", g.dx())?;
    writeln!(w, "# n_cells {}", g.n_cells())?;
    writeln!(w, "# t {:e}", state.t)?;
    writeln!(w, "# gamma {:e}", gamma)?;
    for i in 0..g.n_cells() {
        let u = state.u.values().get(i).copied().unwrap_or(0.0);
        writeln!(
            w,
            "{:e} {:e} {:e} {:e}",
            state.n1.values()[i],
            state.n2.values()[i],
            state.c.values()[i],
            u
        )?;
    }
    Ok(())
}

/// Returns the state and the `γ` it was written with.
pub fn read_checkpoint<R: BufRead>(r: R) -> Result<(FieldState, f64), CheckpointError> {
    let mut lines = r.lines().enumerate();
    let mut next_line = || -> Result<Option<(usize, String)>, CheckpointError> {
        match lines.next() {
            Some((i, l)) => Ok(Some((i + 1, l?))),
            None => Ok(None),
        }
    };
    match next_line()? {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(CheckpointError::BadMagic),
    }
    let mut header = |key: &'static str| -> Result<String, CheckpointError> {
        let (_, l) = next_line()?.ok_or(CheckpointError::Header(key))?;
        l.strip_prefix("# ")
            .and_then(|rest| rest.strip_prefix(key))
            .map(|v| v.trim().to_string())
            .ok_or(CheckpointError::Header(key))
    };
    let x_min: f64 = header("x_min")?.parse().map_err(|_| CheckpointError::Header("x_min"))?;
    let dx: f64 = header("dx")?.parse().map_err(|_| CheckpointError::Header("dx"))?;
    let n_cells: usize = header("n_cells")?
        .parse()
        .map_err(|_| CheckpointError::Header("n_cells"))?;
    let t: f64 = header("t")?.parse().map_err(|_| CheckpointError::Header("t"))?;
    let gamma: f64 = header("gamma")?.parse().map_err(|_| CheckpointError::Header("gamma"))?;
    let grid = Grid1D::new(x_min, dx, n_cells)?;

    let (mut n1, mut n2, mut c, mut u) = (
        Vec::with_capacity(n_cells),
        Vec::with_capacity(n_cells),
        Vec::with_capacity(n_cells),
        Vec::with_capacity(n_cells),
    );
    while let Some((line, text)) = next_line()? {
        if text.trim().is_empty() {
            continue;
        }
        let cols: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse::<f64>).collect();
        let cols = cols.map_err(|e| CheckpointError::Row {
            line,
            reason: e.to_string(),
        })?;
        if cols.len() != 4 {
            return Err(CheckpointError::Row {
                line,
                reason: format!("expected 4 columns, found {}", cols.len()),
            });
        }
        n1.push(cols[0]);
        n2.push(cols[1]);
        c.push(cols[2]);
        u.push(cols[3]);
    }
    u.pop();
    Ok((FieldState::new(grid, n1, n2, c, u, t)?, gamma))
}
