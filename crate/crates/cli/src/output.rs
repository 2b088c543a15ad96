//! Report emission: the JSON envelope printed to stdout, the per-command
//! CSV tables, and plot-ready series files.
//!
//! Everything written to stdout or to files is deterministic in the inputs:
//! floats go through the standard shortest-round-trip formatter and map
//! keys are sorted, so identical invocations produce identical bytes.
//! Timing is reported on stderr only, to keep that guarantee.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Schema tag stamped into every report envelope.
pub const SCHEMA: &str = "kgs-report/1";

/// Envelope around one command's results: the command name, an echo of the
/// parsed inputs (graph document plus resolved flags), the command-specific
/// results, and any capability warnings.
#[derive(Serialize)]
pub struct Bundle {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub warnings: Vec<String>,
}

impl Bundle {
    pub fn new(command: &str, inputs: Value, results: Value, warnings: Vec<String>) -> Self {
        Bundle {
            schema: SCHEMA,
            command: command.to_string(),
            inputs,
            results,
            warnings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// A rectangular table with fixed, documented columns; the CSV face of a
/// command's results.
pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(headers: Vec<S>) -> Self {
        CsvTable {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: Vec<S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.headers.len(), "ragged CSV row");
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory CSV write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush"))
            .expect("CSV output is UTF-8")
    }
}

/// Write `x y` rows, one point per line, for plotting.
pub fn write_series(path: &Path, points: &[(f64, f64)]) -> std::io::Result<()> {
    let mut text = String::new();
    for (x, y) in points {
        text.push_str(&format!("{x} {y}\n"));
    }
    std::fs::write(path, text)
}
