//! File formats: dense CSV (header "M,N", rows are variables, columns are
//! samples), 1-indexed whitespace docword triplets for counts, loadings
//! CSV, and JSON diagnostics sidecars. Dense CSV uses the shortest
//! round-trip float formatting, so integer data round-trips bit exactly.

use cca_core::{Matrix, ViewMatrix};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub enum IoError {
    Io(String),
    Format(String),
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IoError::Io(m) => write!(f, "{m}"),
            IoError::Format(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for IoError {}

pub type IoResult<T> = Result<T, IoError>;

fn read_to_string(path: &Path) -> IoResult<String> {
    fs::read_to_string(path).map_err(|e| IoError::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, content: &str) -> IoResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| IoError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, content).map_err(|e| IoError::Io(format!("{}: {e}", path.display())))
}

/// Dense matrix as CSV with a leading "M,N" header line.
pub fn write_dense_csv(path: &Path, m: &Matrix) -> IoResult<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{},{}", m.nrows(), m.ncols());
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    write_string(path, &out)
}

pub fn read_dense_csv(path: &Path) -> IoResult<Matrix> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| IoError::Format(format!("{}: empty file", path.display())))?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(IoError::Format(format!(
            "{}:1: header must be \"M,N\", got {header:?}",
            path.display()
        )));
    }
    let parse_dim = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| IoError::Format(format!("{}:1: bad dimension {s:?}", path.display())))
    };
    let (m, n) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut data = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                IoError::Format(format!(
                    "{}:{}: bad value {field:?}",
                    path.display(),
                    idx + 1
                ))
            })?;
            data.push(v);
            count += 1;
        }
        if count != n {
            return Err(IoError::Format(format!(
                "{}:{}: expected {n} values, got {count}",
                path.display(),
                idx + 1
            )));
        }
    }
    if rows != m {
        return Err(IoError::Format(format!(
            "{}: expected {m} rows, got {rows}",
            path.display()
        )));
    }
    Matrix::from_shape_vec((m, n), data)
        .map_err(|e| IoError::Format(format!("{}: {e}", path.display())))
}

/// Docword triplets: one "sample_id variable_id count" line each,
/// 1-indexed, whitespace separated. The variable count `m` is supplied;
/// the sample count is the largest sample id seen.
pub fn read_triplets(path: &Path, m: usize) -> IoResult<ViewMatrix> {
    let text = read_to_string(path)?;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut n = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(IoError::Format(format!(
                "{}:{}: expected 3 fields, got {}",
                path.display(),
                idx + 1,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            IoError::Format(format!(
                "{}:{}: bad {what} {:?}",
                path.display(),
                idx + 1,
                line
            ))
        };
        let sample: usize = fields[0].parse().map_err(|_| bad("sample id"))?;
        let var: usize = fields[1].parse().map_err(|_| bad("variable id"))?;
        let count: f64 = fields[2].parse().map_err(|_| bad("count"))?;
        if sample == 0 || var == 0 {
            return Err(bad("1-indexed id"));
        }
        if var > m {
            return Err(IoError::Format(format!(
                "{}:{}: variable id {var} exceeds M = {m}",
                path.display(),
                idx + 1
            )));
        }
        n = n.max(sample);
        entries.push((sample - 1, var - 1, count));
    }
    if entries.is_empty() {
        return Err(IoError::Format(format!(
            "{}: no triplet entries found",
            path.display()
        )));
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (sample, var, count) in entries {
        cols[sample].push((var, count));
    }
    for col in &mut cols {
        col.sort_by_key(|&(row, _)| row);
    }
    ViewMatrix::sparse(m, n, cols).map_err(|e| IoError::Format(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    DenseCsv,
    Triplets,
}

impl std::str::FromStr for DataFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense-csv" => Ok(DataFormat::DenseCsv),
            "docword-triplets" => Ok(DataFormat::Triplets),
            other => Err(format!(
                "unknown format {other:?}; expected dense-csv or docword-triplets"
            )),
        }
    }
}

/// One view from disk. Triplets need the variable count; dense CSV
/// carries its own dimensions.
pub fn read_view(path: &Path, format: DataFormat, m: Option<usize>) -> IoResult<ViewMatrix> {
    match format {
        DataFormat::DenseCsv => Ok(ViewMatrix::Dense(read_dense_csv(path)?)),
        DataFormat::Triplets => {
            let m = m.ok_or_else(|| {
                IoError::Format("docword-triplets input needs --m1/--m2 variable counts".into())
            })?;
            read_triplets(path, m)
        }
    }
}

/// A sample-aligned pair of views; sample counts must agree.
pub fn read_view_pair(
    p1: &Path,
    p2: &Path,
    format: DataFormat,
    m1: Option<usize>,
    m2: Option<usize>,
) -> IoResult<(ViewMatrix, ViewMatrix)> {
    let x1 = read_view(p1, format, m1)?;
    let x2 = read_view(p2, format, m2)?;
    if x1.nsamples() != x2.nsamples() {
        return Err(IoError::Format(format!(
            "views are not sample-aligned: {} has N = {}, {} has N = {}",
            p1.display(),
            x1.nsamples(),
            p2.display(),
            x2.nsamples()
        )));
    }
    Ok((x1, x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("cca-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dense_csv_round_trip_integers_exact() {
        let m = array![[1.0, 2.0, 3.0], [4.0, 0.0, 6.0]];
        let path = tmp("ints.csv");
        write_dense_csv(&path, &m).unwrap();
        let back = read_dense_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn dense_csv_round_trip_floats_exact() {
        let m = array![[0.1, -2.5e-7], [std::f64::consts::PI, 1e300]];
        let path = tmp("floats.csv");
        write_dense_csv(&path, &m).unwrap();
        let back = read_dense_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn triplets_example() {
        let path = tmp("trip.txt");
        write_string(&path, "1 1 2\n2 3 1\n").unwrap();
        let v = read_triplets(&path, 3).unwrap();
        let d = v.to_dense();
        assert_eq!(d.dim(), (3, 2));
        assert_eq!(d[[0, 0]], 2.0);
        assert_eq!(d[[2, 1]], 1.0);
        assert_eq!(d.sum(), 3.0);
    }

    #[test]
    fn triplets_empty_file_rejected() {
        let path = tmp("empty.txt");
        write_string(&path, "").unwrap();
        assert!(read_triplets(&path, 3).is_err());
    }

    #[test]
    fn malformed_lines_cite_line_numbers() {
        let path = tmp("bad.txt");
        write_string(&path, "1 1 2\nnot a line\n").unwrap();
        let err = read_triplets(&path, 3).unwrap_err().to_string();
        assert!(err.contains(":2"), "no line number in {err}");
    }

    #[test]
    fn pair_alignment_checked() {
        let p1 = tmp("a.txt");
        let p2 = tmp("b.txt");
        write_string(&p1, "1 1 2\n2 1 1\n").unwrap();
        write_string(&p2, "1 1 5\n").unwrap();
        let err = read_view_pair(&p1, &p2, DataFormat::Triplets, Some(2), Some(2)).unwrap_err();
        assert!(err.to_string().contains("sample-aligned"));
    }
}
