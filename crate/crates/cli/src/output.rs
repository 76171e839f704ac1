//! CSV tables: versioned schema, provenance columns and a reader.

use std::io::{Read, Write};

use crate::CliError;

/// Bumped whenever a column set changes.
pub const SCHEMA_VERSION: &str = "1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Excluded from the determinism contract.
pub const TIMING_COLUMN: &str = "wall_time_s";

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Header plus rows; the first three columns are always schema, version and
/// master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut header = vec![
            "schema".to_string(),
            "version".to_string(),
            "seed".to_string(),
        ];
        header.extend(columns.iter().map(|c| c.to_string()));
        Table {
            header,
            rows: Vec::new(),
        }
    }

    /// Appends a row; `cells` must match the columns given to [`Table::new`].
    pub fn push(&mut self, seed: u64, cells: Vec<String>) {
        assert_eq!(
            cells.len() + 3,
            self.header.len(),
            "row width must match the header"
        );
        let mut row = vec![
            SCHEMA_VERSION.to_string(),
            VERSION.to_string(),
            seed.to_string(),
        ];
        row.extend(cells);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wr.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            wr.write_record(r).map_err(csv_err)?;
        }
        wr.flush().map_err(CliError::Io)
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Reads a table written by [`Table::write`], checking the schema version.
    pub fn read<R: Read>(r: R) -> Result<Self, CliError> {
        let mut rd = csv::ReaderBuilder::new().from_reader(r);
        let header: Vec<String> = rd
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(String::from)
            .collect();
        if header.first().map(String::as_str) != Some("schema") {
            return Err(CliError::Config(
                "not a shefk table: first column must be `schema`".into(),
            ));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            if &rec[0] != SCHEMA_VERSION {
                return Err(CliError::Config(format!(
                    "schema version {} is not supported",
                    &rec[0]
                )));
            }
            rows.push(rec.iter().map(String::from).collect());
        }
        Ok(Table { header, rows })
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
