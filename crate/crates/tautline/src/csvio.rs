//! CSV reading and writing for the command-line tools.
//!
//! Dialect: comma-separated, required header row, decimal point, UTF-8.
//! Floats are written with 17 significant digits so values round-trip
//! exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_field(field: &str, line: usize, col: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::InvalidData(format!(
            "line {line}, column {col}: cannot parse '{}' as a number",
            field.trim()
        ))
    })
}

/// Parsed input data: optional design column plus responses.
#[derive(Debug, Clone)]
pub struct XyData {
    pub x: Option<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Reads a data CSV with header `x,y` or `y`; the design column is
/// optional and defaults to 1..n downstream.
pub fn read_xy<R: BufRead>(reader: R) -> Result<XyData> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(Error::InvalidData(format!("read error: {e}"))),
        None => return Err(Error::InvalidData("empty file (header row required)".into())),
    };
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let x_col = cols.iter().position(|c| c == "x");
    let y_col = cols.iter().position(|c| c == "y").ok_or_else(|| {
        Error::InvalidData(format!(
            "line 1: header must name a 'y' column, got '{header}'"
        ))
    })?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::InvalidData(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::InvalidData(format!(
                "line {lineno}: expected {} fields, got {}",
                cols.len(),
                fields.len()
            )));
        }
        if let Some(xc) = x_col {
            x.push(parse_field(fields[xc], lineno, xc + 1)?);
        }
        y.push(parse_field(fields[y_col], lineno, y_col + 1)?);
    }
    if y.is_empty() {
        return Err(Error::InvalidData("no data rows".into()));
    }
    Ok(XyData {
        x: x_col.map(|_| x),
        y,
    })
}

/// Reads a single-column CSV of per-gap penalties (header `lambda`).
pub fn read_lambda<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let data = read_column(reader, "lambda")?;
    Ok(data)
}

fn read_column<R: BufRead>(reader: R, name: &str) -> Result<Vec<f64>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        _ => return Err(Error::InvalidData("empty file (header row required)".into())),
    };
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let col = cols.iter().position(|c| c == name).ok_or_else(|| {
        Error::InvalidData(format!("line 1: header must name a '{name}' column"))
    })?;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::InvalidData(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::InvalidData(format!(
                "line {}: expected {} fields, got {}",
                idx + 1,
                cols.len(),
                fields.len()
            )));
        }
        out.push(parse_field(fields[col], idx + 1, col + 1)?);
    }
    Ok(out)
}

/// Writes the fitted-values CSV: `x,y,fitted,segment_id`.
pub fn write_fit<W: Write>(
    mut w: W,
    x: &[f64],
    y: &[f64],
    fitted: &[f64],
    segment_ids: &[usize],
) -> std::io::Result<()> {
    writeln!(w, "x,y,fitted,segment_id")?;
    for i in 0..y.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(x[i]),
            fmt_f64(y[i]),
            fmt_f64(fitted[i]),
            segment_ids[i]
        )?;
    }
    Ok(())
}

/// Writes the tube diagnostic CSV: `k,cumsum,lambda_hi,lambda_lo`. For
/// one-sided losses the cumsum column carries the right-derivative sums.
pub fn write_tube<W: Write>(
    mut w: W,
    cumsum: &[f64],
    lambda_at: impl Fn(usize) -> f64,
) -> std::io::Result<()> {
    writeln!(w, "k,cumsum,lambda_hi,lambda_lo")?;
    for (i, &c) in cumsum.iter().enumerate() {
        let k = i + 1;
        let l = lambda_at(k);
        writeln!(w, "{},{},{},{}", k, fmt_f64(c), fmt_f64(l), fmt_f64(-l))?;
    }
    Ok(())
}

/// Writes a per-gap penalty CSV (header `lambda`).
pub fn write_lambda<W: Write>(mut w: W, gaps: &[f64]) -> std::io::Result<()> {
    writeln!(w, "lambda")?;
    for &g in gaps {
        writeln!(w, "{}", fmt_f64(g))?;
    }
    Ok(())
}

/// Writes a signal/sample CSV: `index,x,f_true[,y]`.
pub fn write_signal<W: Write>(
    mut w: W,
    f: &[f64],
    y: Option<&[f64]>,
) -> std::io::Result<()> {
    let n = f.len();
    if y.is_some() {
        writeln!(w, "index,x,f_true,y")?;
    } else {
        writeln!(w, "index,x,f_true")?;
    }
    for i in 0..n {
        let x = (i + 1) as f64 / n as f64;
        match y {
            Some(y) => writeln!(
                w,
                "{},{},{},{}",
                i + 1,
                fmt_f64(x),
                fmt_f64(f[i]),
                fmt_f64(y[i])
            )?,
            None => writeln!(w, "{},{},{}", i + 1, fmt_f64(x), fmt_f64(f[i]))?,
        }
    }
    Ok(())
}
