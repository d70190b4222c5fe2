//! Text formats for [`ScalarField`].
//!
//! CSV layout: a header row `nx,ny`, then one `i,j,x,y,value` line per node in
//! storage order. Floats are written with Rust's shortest round-trip
//! formatting, so a read after a write is bit-exact.
//!
//! Matrix layout (used for masks): `ny` whitespace-separated rows of `nx`
//! values. The first row is the top edge `y = 1`, so the file reads like a
//! picture of the field.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn write_csv<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let grid = field.grid();
    writeln!(w, "{},{}", grid.nx(), grid.ny())?;
    for (i, j) in grid.nodes() {
        writeln!(w, "{},{},{},{},{}", i, j, grid.x(i), grid.y(j), field.get(i, j))?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<ScalarField> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or(Error::Parse { line: 1, reason: "empty file".into() })??;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse { line: 1, reason: format!("bad header `{header}`: {e}") })?;
    if dims.len() != 2 {
        return Err(Error::Parse { line: 1, reason: format!("expected `nx,ny`, got `{header}`") });
    }
    let grid = Grid2D::new(dims[0], dims[1])?;
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Parse { line: lineno, reason: format!("expected 5 columns, got {}", parts.len()) });
        }
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse { line: lineno, reason: format!("bad index `{s}`: {e}") })
        };
        let (i, j) = (parse_idx(parts[0])?, parse_idx(parts[1])?);
        if i >= grid.nx() || j >= grid.ny() {
            return Err(Error::Parse { line: lineno, reason: format!("node ({i}, {j}) outside grid") });
        }
        let v: f64 = parts[4]
            .parse()
            .map_err(|e| Error::Parse { line: lineno, reason: format!("bad value `{}`: {e}", parts[4]) })?;
        values[grid.index(i, j)] = v;
        seen += 1;
    }
    if seen != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), actual: seen });
    }
    ScalarField::new(grid, values)
}

pub fn save_csv(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<ScalarField> {
    read_csv(File::open(path)?)
}

pub fn write_matrix<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let grid = field.grid();
    for j in (0..grid.ny()).rev() {
        let row: Vec<String> = (0..grid.nx()).map(|i| field.get(i, j).to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<ScalarField> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: n + 1, reason: e.to_string() })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: n + 1,
                    reason: format!("ragged matrix: expected {} columns, got {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let ny = rows.len();
    let nx = rows.first().map_or(0, Vec::len);
    let grid = Grid2D::new(nx, ny)?;
    let mut values = vec![0.0; grid.len()];
    for (r, row) in rows.iter().enumerate() {
        let j = ny - 1 - r;
        values[j * nx..(j + 1) * nx].copy_from_slice(row);
    }
    ScalarField::new(grid, values)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<ScalarField> {
    read_matrix(File::open(path)?)
}

pub fn save_matrix(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(field, &mut w)?;
    w.flush()?;
    Ok(())
}
