//! CSV emission. Every file starts with `#`-prefixed comment lines carrying
//! the resolved configuration (sorted, defaults included), then a column
//! header, then data rows. Floats are written in shortest round-trip
//! scientific notation, so identical runs produce byte-identical files and
//! parsing a value back yields the exact double that was written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::WignerGrid;
use crate::{Error, Result};

/// Shortest round-trip scientific form of one value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn open(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() && !dir.exists() {
            return Err(Error::InvalidInput(format!(
                "output directory {} does not exist",
                dir.display()
            )));
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_comments<'a, I>(w: &mut impl Write, comments: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    for (k, v) in comments {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

/// Write a table: comments, one header line, one line per row.
pub fn write_csv<'a, I>(
    path: &Path,
    comments: I,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Internal(format!(
                "row width {} does not match {} columns",
                row.len(),
                columns.len()
            )));
        }
    }
    let mut w = open(path)?;
    write_comments(&mut w, comments)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Write a Wigner grid: comments plus grid geometry, then the density
/// matrix in row-major order, one Y_b row per line.
pub fn write_wigner_csv<'a, I>(path: &Path, comments: I, grid: &WignerGrid) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut w = open(path)?;
    write_comments(&mut w, comments)?;
    writeln!(w, "# x_min = {}", fmt_f64(grid.x[0]))?;
    writeln!(w, "# x_max = {}", fmt_f64(*grid.x.last().unwrap()))?;
    writeln!(w, "# y_min = {}", fmt_f64(grid.y[0]))?;
    writeln!(w, "# y_max = {}", fmt_f64(*grid.y.last().unwrap()))?;
    writeln!(w, "# dx = {}", fmt_f64(grid.dx))?;
    writeln!(w, "# dy = {}", fmt_f64(grid.dy))?;
    writeln!(w, "# n_points = {}", grid.x.len())?;
    writeln!(w, "# rows scan Y_b bottom to top; columns scan X_b left to right")?;
    for row in &grid.values {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}
