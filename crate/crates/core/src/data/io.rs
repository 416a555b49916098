//! Columnar text format for datasets.
//!
//! ```text
//! # nx=3 nu=3 T=6000
//! w0,w1,w2,v0,v1,v2,y0,y1,y2,y_tilde0,y_tilde1,y_tilde2
//! ...one row per time k = 0..=T...
//! ```
//!
//! Values are written with the shortest representation that round-trips.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{DataError, Dataset, SignalRecord};

/// A dataset read from disk plus load-time warnings.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub dataset: Dataset,
    /// Set when `T < (nu+1) nx + nu`. Such files load fine; synthesis rejects them.
    pub below_length_bound: bool,
}

pub fn column_names(nx: usize, nu: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(3 * nx + nu);
    names.extend((0..nx).map(|i| format!("w{i}")));
    names.extend((0..nu).map(|i| format!("v{i}")));
    names.extend((0..nx).map(|i| format!("y{i}")));
    names.extend((0..nx).map(|i| format!("y_tilde{i}")));
    names
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write_dataset_to(dataset, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_dataset_to(dataset: &Dataset, out: &mut impl Write) -> Result<(), DataError> {
    let (nx, nu) = (dataset.nx(), dataset.nu());
    writeln!(out, "# nx={nx} nu={nu} T={}", dataset.horizon())?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(column_names(nx, nu))?;
    let records = [dataset.w(), dataset.v(), dataset.y(), dataset.y_tilde()];
    let mut row: Vec<String> = Vec::with_capacity(3 * nx + nu);
    for k in 0..=dataset.horizon() {
        row.clear();
        for rec in records {
            row.extend(rec.sample(k).iter().map(|x| format!("{x:?}")));
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(usize, usize, usize), DataError> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| DataError::Malformed("missing '# nx=.. nu=.. T=..' header".into()))?;
    let (mut nx, mut nu, mut t) = (None, None, None);
    for tok in body.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| DataError::Malformed(format!("bad header token '{tok}'")))?;
        let val: usize = val
            .parse()
            .map_err(|_| DataError::Malformed(format!("bad header value '{tok}'")))?;
        match key {
            "nx" => nx = Some(val),
            "nu" => nu = Some(val),
            "T" => t = Some(val),
            _ => return Err(DataError::Malformed(format!("unknown header key '{key}'"))),
        }
    }
    match (nx, nu, t) {
        (Some(nx), Some(nu), Some(t)) if nx > 0 && nu > 0 && t > 0 => Ok((nx, nu, t)),
        _ => Err(DataError::Malformed(
            "header must give positive nx, nu and T".into(),
        )),
    }
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<DatasetFile, DataError> {
    let file = File::open(path)?;
    read_dataset_from(BufReader::new(file))
}

pub fn read_dataset_from(mut input: impl BufRead) -> Result<DatasetFile, DataError> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let (nx, nu, t) = parse_header(&header)?;
    let width = 3 * nx + nu;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let names = rdr.headers()?.clone();
    if names.len() != width {
        return Err(DataError::Malformed(format!(
            "expected {width} columns for nx={nx} nu={nu}, found {}",
            names.len()
        )));
    }
    for (got, want) in names.iter().zip(column_names(nx, nu)) {
        if got.trim() != want {
            return Err(DataError::Malformed(format!(
                "unexpected column '{got}' (wanted '{want}')"
            )));
        }
    }

    let mut data = DMatrix::zeros(width, t + 1);
    let mut rows = 0usize;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if k > t {
            return Err(DataError::HorizonMismatch(format!(
                "header says T={t} but the file has more rows"
            )));
        }
        if rec.len() != width {
            return Err(DataError::Malformed(format!(
                "row {k} has {} fields",
                rec.len()
            )));
        }
        for (i, field) in rec.iter().enumerate() {
            data[(i, k)] = field
                .trim()
                .parse()
                .map_err(|_| DataError::Malformed(format!("row {k}: bad number '{field}'")))?;
        }
        rows += 1;
    }
    if rows != t + 1 {
        return Err(DataError::HorizonMismatch(format!(
            "header says T={t} ({} rows) but the file has {rows}",
            t + 1
        )));
    }

    let block = |start: usize, len: usize| SignalRecord::new(data.rows(start, len).into_owned());
    let dataset = Dataset::new(
        block(0, nx)?,
        block(nx, nu)?,
        block(nx + nu, nx)?,
        block(2 * nx + nu, nx)?,
    )?;
    let below_length_bound = !dataset.meets_length_bound();
    if below_length_bound {
        log::warn!(
            "dataset horizon T={} is below the synthesis minimum {}",
            dataset.horizon(),
            Dataset::min_horizon(nx, nu)
        );
    }
    Ok(DatasetFile {
        dataset,
        below_length_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_dataset(t: usize) -> Dataset {
        let rec = |dim: usize, phase: f64| {
            SignalRecord::new(DMatrix::from_fn(dim, t + 1, |i, j| {
                ((i as f64 + 1.0) * j as f64 * 0.37 + phase).sin() / 3.0
            }))
            .unwrap()
        };
        Dataset::new(rec(2, 0.0), rec(1, 1.0), rec(2, 2.0), rec(2, 3.0)).unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let d = sample_dataset(20);
        let mut buf = Vec::new();
        write_dataset_to(&d, &mut buf).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert_eq!(back.dataset, d);
        assert!(!back.below_length_bound);
    }

    #[test]
    fn header_and_row_count_must_agree() {
        let d = sample_dataset(20);
        let mut buf = Vec::new();
        write_dataset_to(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replacen("T=20", "T=21", 1);
        assert!(matches!(
            read_dataset_from(text.as_bytes()),
            Err(DataError::HorizonMismatch(_))
        ));
    }

    #[test]
    fn short_horizon_loads_with_flag() {
        let d = sample_dataset(4);
        let mut buf = Vec::new();
        write_dataset_to(&d, &mut buf).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert!(back.below_length_bound);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(read_dataset_from("nx=1\n".as_bytes()).is_err());
        assert!(read_dataset_from("# nx=1 nu=1 T=2\nw0,v0,y0\n".as_bytes()).is_err());
        let bad = "# nx=1 nu=1 T=1\nw0,v0,y0,y_tilde0\n0,0,0,0\n0,x,0,0\n";
        assert!(read_dataset_from(bad.as_bytes()).is_err());
    }
}
