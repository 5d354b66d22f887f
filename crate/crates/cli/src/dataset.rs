//! Two-column CSV data and pseudo-observations.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Raw,
    Pseudo,
    SurvivalPseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<(f64, f64)>,
    pub kind: DataKind,
}

impl Dataset {
    pub fn raw(rows: Vec<(f64, f64)>) -> Self {
        Self { rows, kind: DataKind::Raw }
    }

    /// Treats the rows as copula observations; all values must lie in `(0, 1)`.
    pub fn as_pseudo(self) -> CliResult<Self> {
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| !in_unit(r.0) || !in_unit(r.1)) {
            return Err(CliError::input(format!(
                "row {} = ({}, {}) is not inside (0, 1)^2; use --pseudo for raw data",
                i + 1,
                r.0,
                r.1
            )));
        }
        Ok(Self { rows: self.rows, kind: DataKind::Pseudo })
    }

    /// Rank transform `r_i / (n + 1)` of each column, averaging ties.
    pub fn pseudo_observations(&self) -> Self {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.0).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.1).collect();
        let (u, v) = (scaled_ranks(&xs), scaled_ranks(&ys));
        Self { rows: u.into_iter().zip(v).collect(), kind: DataKind::Pseudo }
    }

    /// `(1 − u, 1 − v)` of pseudo-observations.
    pub fn survival(&self) -> Self {
        let kind = match self.kind {
            DataKind::SurvivalPseudo => DataKind::Pseudo,
            _ => DataKind::SurvivalPseudo,
        };
        Self { rows: self.rows.iter().map(|&(u, v)| (1.0 - u, 1.0 - v)).collect(), kind }
    }
}

fn in_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// Average ranks of `x` (1-based) divided by `n + 1`.
pub fn scaled_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) as f64 + (j + 1) as f64);
        for k in i..=j {
            out[idx[k]] = rank / (n + 1) as f64;
        }
        i = j + 1;
    }
    out
}

/// Reads two numeric columns; a first row that does not parse is taken as a header.
pub fn read_pairs<R: Read>(reader: R) -> CliResult<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::input(format!("line {}: expected 2 columns, found {}", i + 1, rec.len())));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => rows.push((a, b)),
            _ if i == 0 => continue,
            _ => return Err(CliError::input(format!("line {}: non-numeric value", i + 1))),
        }
    }
    Ok(rows)
}

pub fn read_pairs_file(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    read_pairs(file)
}

/// Writes rows with a header, using shortest round-trip formatting.
pub fn write_pairs<W: Write>(writer: W, header: (&str, &str), rows: &[(f64, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([header.0, header.1])?;
    for &(a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_and_without_header() {
        let a = read_pairs("u,v\n0.1,0.2\n0.3, 0.4\n".as_bytes()).unwrap();
        let b = read_pairs("0.1,0.2\n0.3,0.4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![(0.1, 0.2), (0.3, 0.4)]);
    }

    #[test]
    fn rejects_malformed_rows() {
        assert!(read_pairs("0.1,0.2\nx,0.4\n".as_bytes()).is_err());
        assert!(read_pairs("0.1,0.2,0.3\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip_preserves_values() {
        let rows = vec![(0.123456789012345678, 1e-300), (std::f64::consts::PI, -2.5e17)];
        let mut buf = Vec::new();
        write_pairs(&mut buf, ("a", "b"), &rows).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn ranks_average_ties() {
        let r = scaled_ranks(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(r, vec![3.5 / 5.0, 1.0 / 5.0, 3.5 / 5.0, 2.0 / 5.0]);
    }

    #[test]
    fn pseudo_observations_lie_inside_the_square() {
        let d = Dataset::raw(vec![(10.0, -1.0), (0.0, 5.0), (3.0, 3.0)]).pseudo_observations();
        assert!(d.rows.iter().all(|&(u, v)| in_unit(u) && in_unit(v)));
        let back = d.survival().survival();
        assert_eq!(back.kind, DataKind::Pseudo);
        for (a, b) in back.rows.iter().zip(&d.rows) {
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        }
    }
}
