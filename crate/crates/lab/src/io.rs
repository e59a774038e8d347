//! Plot-ready CSV files and a raw binary field dump.
//!
//! Every CSV starts with the schema line [`FORMAT_HEADER`].
//!
//! Binary layout, all little endian: `u64` axis count, one `u64` node count
//! per axis, one `(lo, hi)` pair of `f64` per axis, then the values as `f64`
//! in row-major order (last axis fastest).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use carnot_core::{GridSpec, HessianMatrix, HomPoly2, NodeSet, ScalarField};
use serde::Serialize;

use crate::LabError;

pub const FORMAT_HEADER: &str = "# carnot-obstacle-lab v1";

/// Compact grid identifier, e.g. `33x33x33[-1,1]x[-1,1]x[-1,1]`.
pub fn grid_id(grid: &GridSpec) -> String {
    let dims: Vec<String> = grid.dims().iter().map(|d| d.to_string()).collect();
    let bounds: Vec<String> = grid.lo().iter().zip(grid.hi()).map(|(a, b)| format!("[{a},{b}]")).collect();
    format!("{}{}", dims.join("x"), bounds.join("x"))
}

/// Point coordinates joined with `;` so they fit in one CSV cell.
pub fn format_point(x: &[f64]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Writes node coordinates, values, validity and (optionally) an active flag.
pub fn write_field_csv(path: &Path, field: &ScalarField, active: Option<&NodeSet>) -> Result<(), LabError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{FORMAT_HEADER}")?;
    writeln!(out, "# grid {}", grid_id(field.grid()))?;
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=grid.ndim()).map(|a| format!("x{a}")).collect();
    header.push("u".into());
    header.push("valid".into());
    if active.is_some() {
        header.push("active".into());
    }
    w.write_record(&header)?;
    let mut x = vec![0.0; grid.ndim()];
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..grid.len() {
        grid.point_into(i, &mut x);
        rec.clear();
        rec.extend(x.iter().map(|v| v.to_string()));
        rec.push(field.get(i).to_string());
        rec.push(u8::from(field.is_valid(i)).to_string());
        if let Some(a) = active {
            rec.push(u8::from(a.contains(i)).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_binary(path: &Path, field: &ScalarField) -> Result<(), LabError> {
    let grid = field.grid();
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&(grid.ndim() as u64).to_le_bytes())?;
    for &d in grid.dims() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for (lo, hi) in grid.lo().iter().zip(grid.hi()) {
        out.write_all(&lo.to_le_bytes())?;
        out.write_all(&hi.to_le_bytes())?;
    }
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dump written by [`write_field_binary`]; every node is valid.
pub fn read_field_binary(path: &Path) -> Result<ScalarField, LabError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let mut word = || -> Result<[u8; 8], LabError> {
        let chunk = bytes.get(pos..pos + 8).ok_or_else(|| LabError::Io("truncated field dump".into()))?;
        pos += 8;
        Ok(chunk.try_into().expect("eight bytes"))
    };
    let naxes = u64::from_le_bytes(word()?) as usize;
    if naxes == 0 || naxes > 64 {
        return Err(LabError::Io(format!("implausible axis count {naxes}")));
    }
    let dims: Vec<usize> = (0..naxes).map(|_| word().map(|w| u64::from_le_bytes(w) as usize)).collect::<Result<_, _>>()?;
    let mut lo = Vec::with_capacity(naxes);
    let mut hi = Vec::with_capacity(naxes);
    for _ in 0..naxes {
        lo.push(f64::from_le_bytes(word()?));
        hi.push(f64::from_le_bytes(word()?));
    }
    let grid = GridSpec::new(lo, hi, dims).map_err(|e| LabError::Io(e.to_string()))?;
    let values: Vec<f64> = (0..grid.len()).map(|_| word().map(f64::from_le_bytes)).collect::<Result<_, _>>()?;
    ScalarField::from_values(grid, values).map_err(|e| LabError::Io(e.to_string()))
}

/// One line of a diagnostic report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub x0: String,
    pub r: Option<f64>,
    pub r2: Option<f64>,
    pub quantity: String,
    /// Empty when the quantity is undefined (e.g. a decay exponent between two empty sets).
    pub value: Option<f64>,
    pub h: f64,
    pub grid_id: String,
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<(), LabError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{FORMAT_HEADER}")?;
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["x0", "r", "r2", "quantity", "value", "h", "grid_id"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Coefficients of `p` and entries of `P` as report rows.
pub fn polynomial_rows(p: &HomPoly2, hess: &HessianMatrix, base: &ReportRow) -> Vec<ReportRow> {
    let m = p.m();
    let mut rows = Vec::new();
    let mut push = |q: String, v: f64| rows.push(ReportRow { quantity: q, value: Some(v), ..base.clone() });
    push("a0".into(), p.a0);
    for (j, b) in p.b.iter().enumerate() {
        push(format!("b{}", j + 1), *b);
    }
    for i in 0..m {
        for j in 0..m {
            push(format!("c{}_{}", i + 1, j + 1), p.c_at(i, j));
        }
    }
    for (k, c) in p.c2.iter().enumerate() {
        push(format!("c2_{}", m + k + 1), *c);
    }
    for i in 0..m {
        for j in 0..m {
            push(format!("P{}_{}", i + 1, j + 1), hess.get(i, j));
        }
    }
    rows
}
