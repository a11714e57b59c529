//! CSV form of sampled functions.
//!
//! Header `t` followed by `v` (scalar), `v0..v{N-1}` (coordinate) or `idx`
//! (finite space). Values are written with the shortest representation that
//! parses back to the same `f64`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gage::{GageKind, GageSpace, Point};
use crate::gridfn::{Grid, SampledFunction};

fn value_columns(space: &GageSpace) -> Vec<String> {
    match space.kind() {
        GageKind::Scalar => vec!["v".into()],
        GageKind::Coordinate { dim } => (0..*dim).map(|i| format!("v{i}")).collect(),
        GageKind::Finite { .. } => vec!["idx".into()],
    }
}

pub fn read_function_csv<R: Read>(reader: R, space: Arc<GageSpace>, label: &str) -> Result<SampledFunction> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: label.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut expected = vec!["t".to_string()];
    expected.extend(value_columns(&space));
    let got: Vec<&str> = headers.iter().collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(parse_err(1, format!("expected header {expected:?}, got {got:?}")));
    }
    let mut t = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64> {
            let s = &rec[i];
            let v: f64 = s
                .parse()
                .map_err(|_| parse_err(line, format!("cannot parse {s:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value {s:?}")));
            }
            Ok(v)
        };
        let ti = num(0)?;
        if let Some(&prev) = t.last() {
            if ti <= prev {
                return Err(parse_err(line, format!("t = {ti} does not increase")));
            }
        }
        t.push(ti);
        let point = match space.kind() {
            GageKind::Scalar => Point::Real(num(1)?),
            GageKind::Coordinate { dim } => Point::Vector((1..=*dim).map(num).collect::<Result<Vec<_>>>()?),
            GageKind::Finite { points, .. } => {
                let s = &rec[1];
                let i: usize = s
                    .parse()
                    .map_err(|_| parse_err(line, format!("cannot parse {s:?} as an index")))?;
                if i >= points.len() {
                    return Err(parse_err(line, format!("index {i} out of range")));
                }
                Point::Index(i)
            }
        };
        values.push(point);
    }
    if t.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    SampledFunction::new(Grid::new(t)?, values, space)
}

pub fn write_function_csv<W: Write>(writer: W, f: &SampledFunction) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    header.extend(value_columns(f.space()));
    w.write_record(&header)?;
    for (t, v) in f.grid().points().iter().zip(f.values()) {
        let mut row = vec![t.to_string()];
        match v {
            Point::Real(x) => row.push(x.to_string()),
            Point::Vector(c) => row.extend(c.iter().map(f64::to_string)),
            Point::Index(i) => row.push(i.to_string()),
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn load_function(path: &Path, space: Arc<GageSpace>) -> Result<SampledFunction> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_function_csv(file, space, &path.display().to_string())
}

pub fn save_function(path: &Path, f: &SampledFunction) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_function_csv(file, f)
}

pub fn function_to_csv_string(f: &SampledFunction) -> Result<String> {
    let mut buf = Vec::new();
    write_function_csv(&mut buf, f)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
