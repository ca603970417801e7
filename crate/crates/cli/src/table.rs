//! Numeric CSV tables: comma-separated, header row required, `.` decimals.

use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::data(format!("bad header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(CliError::data("missing header row"));
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row_no = i + 1;
            let rec = rec.map_err(|e| CliError::data(format!("row {row_no}: {e}")))?;
            let row = rec
                .iter()
                .enumerate()
                .map(|(j, field)| {
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            CliError::data(format!(
                                "row {row_no}, column {} ('{}'): invalid number '{field}'",
                                j + 1,
                                header[j]
                            ))
                        })
                })
                .collect::<CliResult<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::data("no data rows"));
        }
        Ok(Self { header, rows })
    }

    pub fn width(&self) -> usize {
        self.header.len()
    }

    /// Splits into `d` input columns plus the final output column.
    pub fn split_output(&self) -> CliResult<(Vec<Vec<f64>>, Vec<f64>)> {
        if self.width() < 2 {
            return Err(CliError::data(
                "training data needs at least one input column and one output column",
            ));
        }
        let d = self.width() - 1;
        Ok(self.rows.iter().map(|r| (r[..d].to_vec(), r[d])).unzip())
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.5, -2.25e-7, 3e20, 1.0 / 3.0, 6.02e23, -1e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(2.5e-9), "2.5e-9");
        assert_eq!(num(0.125), "0.125");
    }

    #[test]
    fn parses_and_splits() {
        let t = Table::parse("x1, x2 ,y\n1,2,3\n4,5.5,-6e-1\n").unwrap();
        assert_eq!(t.header, vec!["x1", "x2", "y"]);
        let (x, y) = t.split_output().unwrap();
        assert_eq!(x, vec![vec![1.0, 2.0], vec![4.0, 5.5]]);
        assert_eq!(y, vec![3.0, -0.6]);
    }

    #[test]
    fn reports_row_and_column() {
        let err = Table::parse("x,y\n1,2\n3,abc\n").unwrap_err().to_string();
        assert!(err.contains("row 2, column 2"), "{err}");
        assert!(Table::parse("x,y\n1,2,3\n").is_err());
        assert!(Table::parse("x,y\n").is_err());
        assert!(Table::parse("x,y\n1,NaN\n").is_err());
    }
}
