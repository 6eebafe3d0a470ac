//! CSV persistence for weight matrices (readouts, channel maps, trained
//! decoders): one header row naming the output columns, then one row per
//! neuron / input channel.

use super::CodecError;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCsv {
    pub column_names: Vec<String>,
    /// Row-major, `rows.len() * column_names.len()` values.
    pub values: Vec<f64>,
    pub n_rows: usize,
}

impl MatrixCsv {
    pub fn new(column_names: Vec<String>, values: Vec<f64>) -> Result<Self, CodecError> {
        let cols = column_names.len().max(1);
        if values.len() % cols != 0 {
            return Err(CodecError::DimensionMismatch {
                expected: cols,
                got: values.len() % cols,
            });
        }
        let n_rows = values.len() / cols;
        Ok(MatrixCsv { column_names, values, n_rows })
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn to_string(&self) -> String {
        let mut out = self.column_names.join(",");
        out.push('\n');
        let cols = self.n_cols();
        for r in 0..self.n_rows {
            let row: Vec<String> =
                self.values[r * cols..(r + 1) * cols].iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CodecError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| CodecError::Csv {
                path: origin.to_string(),
                line: 1,
                message: "empty file".to_string(),
            })?;
        let column_names: Vec<String> =
            header.split(',').map(|s| s.trim().to_string()).collect();
        if column_names.iter().any(|c| c.is_empty()) {
            return Err(CodecError::Csv {
                path: origin.to_string(),
                line: 1,
                message: "empty column name in header".to_string(),
            });
        }
        let cols = column_names.len();
        let mut values = Vec::new();
        let mut n_rows = 0;
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(CodecError::Csv {
                    path: origin.to_string(),
                    line: idx + 1,
                    message: format!("expected {cols} fields, found {}", fields.len()),
                });
            }
            for field in fields {
                let v: f64 = field.trim().parse().map_err(|_| CodecError::Csv {
                    path: origin.to_string(),
                    line: idx + 1,
                    message: format!("not a number: {field:?}"),
                })?;
                values.push(v);
            }
            n_rows += 1;
        }
        Ok(MatrixCsv { column_names, values, n_rows })
    }

    pub fn load(path: &Path) -> Result<Self, CodecError> {
        let text = fs::read_to_string(path).map_err(|source| CodecError::Io {
            path: path.display().to_string(),
            source,
        })?;
        MatrixCsv::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<(), CodecError> {
        fs::write(path, self.to_string()).map_err(|source| CodecError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
