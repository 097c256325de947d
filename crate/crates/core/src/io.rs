//! File formats: grid CSV with NaN holes, 0/1 mask CSV, point clouds,
//! tagged point CSV, coefficient magnitudes and JSON reports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridMask, UniformGrid};
use crate::holefill::PointTag;
use crate::spectral::coefficient_magnitudes;

/// Shortest text that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line: line as usize, message: message.into() }
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).comment(Some(b'#')).from_reader(input)
}

fn map_csv(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_error(line, e.to_string())
}

/// Rows `(multi-index, value)` of an indexed CSV whose last column is named
/// `value_column`; the grid size is inferred from the largest index.
fn read_indexed<R: Read>(input: R, value_column: &str) -> Result<(usize, usize, Vec<(Vec<usize>, String, u64)>)> {
    let mut rdr = csv_reader(input);
    let header = rdr.headers().map_err(map_csv)?.clone();
    let d = header.len().saturating_sub(1);
    if d == 0 {
        return Err(parse_error(1, format!("expected columns index_0,…,index_{{d-1}},{value_column}")));
    }
    for (a, name) in header.iter().take(d).enumerate() {
        if name != format!("index_{a}") {
            return Err(parse_error(1, format!("column {a} is `{name}`, expected `index_{a}`")));
        }
    }
    if &header[d] != value_column {
        return Err(parse_error(1, format!("last column is `{}`, expected `{value_column}`", &header[d])));
    }
    let mut rows = Vec::new();
    let mut n = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(map_csv)?;
        let line = record_line(&rec);
        let index = rec
            .iter()
            .take(d)
            .map(|s| s.parse::<usize>().map_err(|_| parse_error(line, format!("`{s}` is not a grid index"))))
            .collect::<Result<Vec<_>>>()?;
        n = n.max(index.iter().max().map_or(0, |m| m + 1));
        rows.push((index, rec[d].to_string(), line));
    }
    if rows.is_empty() {
        return Err(parse_error(1, "no data rows"));
    }
    Ok((d, n, rows))
}

/// Reads `index_0,…,index_{d-1},value`; `NaN` or an empty field marks an
/// unknown value. Every grid point must appear exactly once.
pub fn parse_grid_csv<R: Read>(input: R, box_origin: f64, box_edge: f64) -> Result<GridFunction> {
    let (d, n, rows) = read_indexed(input, "value")?;
    let grid = UniformGrid::new(d, n, vec![box_origin; d], box_edge)?;
    if rows.len() != grid.len() {
        return Err(Error::InvalidGrid(format!("{} rows for a grid of {n}^{d} = {} points", rows.len(), grid.len())));
    }
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (index, text, line) in rows {
        let flat = grid.flat_index(&index);
        if std::mem::replace(&mut seen[flat], true) {
            return Err(parse_error(line, format!("grid point {index:?} appears twice")));
        }
        values[flat] = if text.is_empty() {
            f64::NAN
        } else {
            let v: f64 = text.parse().map_err(|_| parse_error(line, format!("`{text}` is not a number")))?;
            if v.is_infinite() {
                return Err(parse_error(line, "infinite values are not allowed"));
            }
            v
        };
    }
    GridFunction::from_values_with_nan(grid, values)
}

pub fn read_grid_csv(path: &Path, box_origin: f64, box_edge: f64) -> Result<GridFunction> {
    parse_grid_csv(BufReader::new(File::open(path)?), box_origin, box_edge)
}

/// Reads `index_0,…,index_{d-1},known` with 0/1 entries for `grid`.
pub fn parse_mask_csv<R: Read>(input: R, grid: &UniformGrid) -> Result<GridMask> {
    let (d, _, rows) = read_indexed(input, "known")?;
    if d != grid.dim() || rows.len() != grid.len() {
        return Err(Error::InvalidGrid(format!("mask has {} rows of dimension {d}; the grid has {}", rows.len(), grid.len())));
    }
    let mut known = vec![None; grid.len()];
    for (index, text, line) in rows {
        if index.iter().any(|&i| i >= grid.points_per_axis()) {
            return Err(parse_error(line, format!("index {index:?} is outside the grid")));
        }
        let flag = match text.as_str() {
            "0" => false,
            "1" => true,
            other => return Err(parse_error(line, format!("mask entry `{other}` is not 0 or 1"))),
        };
        if known[grid.flat_index(&index)].replace(flag).is_some() {
            return Err(parse_error(line, format!("grid point {index:?} appears twice")));
        }
    }
    Ok(GridMask::new(known.into_iter().map(|k| k.unwrap_or(false)).collect()))
}

pub fn read_mask_csv(path: &Path, grid: &UniformGrid) -> Result<GridMask> {
    parse_mask_csv(BufReader::new(File::open(path)?), grid)
}

fn index_header(d: usize, prefix: &str, last: &str) -> Vec<String> {
    (0..d).map(|a| format!("{prefix}_{a}")).chain(std::iter::once(last.to_string())).collect()
}

/// Row-major grid CSV; unknown points are written as `NaN`.
pub fn write_grid_csv<W: Write>(out: W, gf: &GridFunction) -> Result<()> {
    let grid = gf.grid();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(index_header(grid.dim(), "index", "value"))?;
    for (flat, v) in gf.values_with_nan().into_iter().enumerate() {
        let mut rec: Vec<String> = grid.multi_index(flat).iter().map(|i| i.to_string()).collect();
        rec.push(format_f64(v));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mask_csv<W: Write>(out: W, grid: &UniformGrid, mask: &GridMask) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(index_header(grid.dim(), "index", "known"))?;
    for flat in 0..grid.len() {
        let mut rec: Vec<String> = grid.multi_index(flat).iter().map(|i| i.to_string()).collect();
        rec.push(if mask.is_known(flat) { "1" } else { "0" }.into());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `k_0,…,k_{d-1},abs_c` with `|c_k| / N^d` of a complete grid function.
pub fn write_coefficients_csv<W: Write>(out: W, gf: &GridFunction) -> Result<()> {
    let grid = gf.grid();
    let mags = coefficient_magnitudes(gf)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(index_header(grid.dim(), "k", "abs_c"))?;
    for (flat, m) in mags.into_iter().enumerate() {
        let mut rec: Vec<String> = grid.multi_index(flat).iter().map(|i| i.to_string()).collect();
        rec.push(format_f64(m));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CloudHeader {
    pub ambient: usize,
    pub intrinsic: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloudFile {
    pub points: Vec<Vec<f64>>,
    pub header: Option<CloudHeader>,
}

fn parse_header(line: &str, lineno: usize) -> Result<Option<CloudHeader>> {
    let body = line.trim_start_matches('#');
    let mut ambient = None;
    let mut intrinsic = None;
    for tok in body.split_whitespace() {
        if let Some((key, value)) = tok.split_once('=') {
            let v = value.parse::<usize>().map_err(|_| Error::Parse { line: lineno, message: format!("bad header value `{tok}`") })?;
            match key {
                "ambient" => ambient = Some(v),
                "intrinsic" => intrinsic = Some(v),
                _ => {}
            }
        }
    }
    match (ambient, intrinsic) {
        (Some(ambient), Some(intrinsic)) => Ok(Some(CloudHeader { ambient, intrinsic })),
        (None, None) => Ok(None),
        _ => Err(Error::Parse { line: lineno, message: "header needs both ambient= and intrinsic=".into() }),
    }
}

/// One point per line, comma- or whitespace-separated. Lines starting with
/// `#` are comments except an `# ambient=n intrinsic=d` header; a leading
/// line of column names is skipped.
pub fn parse_point_cloud<R: Read>(input: R) -> Result<CloudFile> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut header = None;
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(h) = parse_header(line, lineno)? {
                header = Some(h);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parsed: Vec<Option<f64>> = fields.iter().map(|s| s.parse::<f64>().ok()).collect();
        if points.is_empty() && parsed.iter().all(Option::is_none) {
            continue;
        }
        let p = parsed
            .iter()
            .zip(&fields)
            .map(|(v, s)| match v {
                Some(v) if v.is_finite() => Ok(*v),
                _ => Err(Error::Parse { line: lineno, message: format!("`{s}` is not a finite number") }),
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = points.first() {
            if first.len() != p.len() {
                return Err(Error::Parse { line: lineno, message: format!("{} coordinates, expected {}", p.len(), first.len()) });
            }
        }
        points.push(p);
    }
    if let (Some(h), Some(p)) = (header, points.first()) {
        if h.ambient != p.len() {
            return Err(Error::Parse { line: 1, message: format!("header says ambient={} but points have {}", h.ambient, p.len()) });
        }
    }
    Ok(CloudFile { points, header })
}

pub fn read_point_cloud(path: &Path) -> Result<CloudFile> {
    parse_point_cloud(BufReader::new(File::open(path)?))
}

pub fn write_point_cloud<W: Write>(out: W, points: &[Vec<f64>], intrinsic: usize) -> Result<()> {
    let mut out = BufWriter::new(out);
    let n = points.first().map_or(0, Vec::len);
    writeln!(out, "# ambient={n} intrinsic={intrinsic}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=n).map(|a| format!("x_{a}")))?;
    for p in points {
        w.write_record(p.iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// `x_1,…,x_n,tag` with tag `known` or `imputed`.
pub fn write_tagged_points<W: Write>(out: W, points: &[Vec<f64>], tags: &[PointTag]) -> Result<()> {
    let n = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=n).map(|a| format!("x_{a}")).chain(std::iter::once("tag".to_string())))?;
    for (p, t) in points.iter().zip(tags) {
        let tag = match t {
            PointTag::Known => "known",
            PointTag::Imputed => "imputed",
        };
        w.write_record(p.iter().map(|v| format_f64(*v)).chain(std::iter::once(tag.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_tagged_points<R: Read>(input: R) -> Result<(Vec<Vec<f64>>, Vec<PointTag>)> {
    let mut rdr = csv_reader(input);
    let width = rdr.headers().map_err(map_csv)?.len();
    if width < 2 {
        return Err(parse_error(1, "expected columns x_1,…,x_n,tag"));
    }
    let mut points = Vec::new();
    let mut tags = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(map_csv)?;
        let line = record_line(&rec);
        let p = rec
            .iter()
            .take(width - 1)
            .map(|s| s.parse::<f64>().map_err(|_| parse_error(line, format!("`{s}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        tags.push(match &rec[width - 1] {
            "known" => PointTag::Known,
            "imputed" => PointTag::Imputed,
            other => return Err(parse_error(line, format!("unknown tag `{other}`"))),
        });
        points.push(p);
    }
    Ok((points, tags))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_keeps_holes_and_bits() {
        let grid = UniformGrid::periodic(2, 5).unwrap();
        let gf = GridFunction::from_fn(grid.clone(), |x| (x[0] * 0.37).sin() / 3.0 + x[1] * 1e-7)
            .with_unknown(|i| i % 7 == 3);
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &gf).unwrap();
        let back = parse_grid_csv(&buf[..], 0.0, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(back.mask(), gf.mask());
        for i in gf.mask().known_indices() {
            assert_eq!(back.raw_values()[i].to_bits(), gf.raw_values()[i].to_bits());
        }
        assert!(String::from_utf8(buf).unwrap().starts_with("index_0,index_1,value\n0,0,"));
    }

    #[test]
    fn malformed_grid_reports_the_line() {
        let text = "index_0,value\n0,1.0\n1,abc\n2,3\n";
        match parse_grid_csv(text.as_bytes(), 0.0, 1.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let ragged = "index_0,value\n0,1.0\n1\n";
        assert!(matches!(parse_grid_csv(ragged.as_bytes(), 0.0, 1.0), Err(Error::Parse { line: 3, .. })));
        let dup = "index_0,value\n0,1\n0,2\n";
        assert!(matches!(parse_grid_csv(dup.as_bytes(), 0.0, 1.0), Err(Error::InvalidGrid(_))));
        let bad_header = "i,value\n0,1\n";
        assert!(matches!(parse_grid_csv(bad_header.as_bytes(), 0.0, 1.0), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn mask_round_trip() {
        let grid = UniformGrid::periodic(1, 4).unwrap();
        let mask = GridMask::new(vec![true, false, true, true]);
        let mut buf = Vec::new();
        write_mask_csv(&mut buf, &grid, &mask).unwrap();
        assert_eq!(parse_mask_csv(&buf[..], &grid).unwrap(), mask);
        let bad = "index_0,known\n0,1\n1,2\n2,1\n3,1\n";
        assert!(matches!(parse_mask_csv(bad.as_bytes(), &grid), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn clouds_with_and_without_header() {
        let text = "# ambient=3 intrinsic=2\nx_1,x_2,x_3\n0,0,1\n1 2 3\n";
        let c = parse_point_cloud(text.as_bytes()).unwrap();
        assert_eq!(c.header, Some(CloudHeader { ambient: 3, intrinsic: 2 }));
        assert_eq!(c.points, vec![vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]]);
        let plain = parse_point_cloud("1 2\n3 4\n".as_bytes()).unwrap();
        assert!(plain.header.is_none() && plain.points.len() == 2);
        assert!(matches!(parse_point_cloud("1 2\n3\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_point_cloud("# ambient=2 intrinsic=1\n1 2 3\n".as_bytes()), Err(Error::Parse { .. })));

        let pts = vec![vec![0.1, -2.5e-9, 3.0], vec![1.0 / 3.0, 0.0, 1e300]];
        let mut buf = Vec::new();
        write_point_cloud(&mut buf, &pts, 2).unwrap();
        let back = parse_point_cloud(&buf[..]).unwrap();
        assert_eq!(back.points, pts);
        assert_eq!(back.header.unwrap().intrinsic, 2);
    }

    #[test]
    fn tagged_points_round_trip() {
        let pts = vec![vec![0.5, 1.0 / 7.0], vec![-1e-12, 2.0]];
        let tags = vec![PointTag::Known, PointTag::Imputed];
        let mut buf = Vec::new();
        write_tagged_points(&mut buf, &pts, &tags).unwrap();
        assert_eq!(parse_tagged_points(&buf[..]).unwrap(), (pts, tags));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, -0.0, 1.0, 1e-20, 123456.789, 1.0 / 3.0, 6.02e23, -4.5e-5] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(format_f64(f64::NAN), "NaN");
    }
}
