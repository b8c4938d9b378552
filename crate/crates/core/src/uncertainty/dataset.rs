use crate::error::{CoreError, Result};
use std::path::Path;

/// Which role a block of forecast-error samples plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ErrorSplit {
    Shape,
    Size,
    Reconstruction,
    Evaluation,
    Test,
}

/// Daily forecast errors, each flattened bus-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDataset {
    pub split: ErrorSplit,
    pub days: Vec<i64>,
    pub samples: Vec<Vec<f64>>,
}

impl ErrorDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A wide table with a `day` column followed by one column per
/// (bus, period) pair in bus-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub buses: usize,
    pub periods: usize,
    pub days: Vec<i64>,
    pub rows: Vec<Vec<f64>>,
}

impl ProfileTable {
    pub fn new(buses: usize, periods: usize) -> Self {
        ProfileTable {
            buses,
            periods,
            days: vec![],
            rows: vec![],
        }
    }

    pub fn push(&mut self, day: i64, row: Vec<f64>) {
        assert_eq!(row.len(), self.buses * self.periods);
        self.days.push(day);
        self.rows.push(row);
    }

    pub fn header(buses: usize, periods: usize) -> Vec<String> {
        let mut h = vec!["day".to_string()];
        for i in 0..buses {
            for t in 0..periods {
                h.push(format!("b{i}_t{t}"));
            }
        }
        h
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::header(self.buses, self.periods)).expect("in-memory write");
        for (day, row) in self.days.iter().zip(&self.rows) {
            let mut rec = vec![day.to_string()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Parses a table with a known shape; `origin` names the source in
    /// error messages.
    pub fn from_csv_str(text: &str, buses: usize, periods: usize, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| CoreError::Csv {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
        let expected = Self::header(buses, periods);
        let header = r.headers().map_err(|e| err(1, e.to_string()))?;
        if header.len() != expected.len() || header.get(0) != Some("day") {
            return Err(err(1, format!("expected {} columns starting with `day`, found {}", expected.len(), header.len())));
        }
        let mut table = ProfileTable::new(buses, periods);
        for (k, rec) in r.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| err(line, e.to_string()))?;
            if rec.len() != expected.len() {
                return Err(err(line, format!("row has {} fields, expected {}", rec.len(), expected.len())));
            }
            let day = rec[0].trim().parse::<i64>().map_err(|e| err(line, format!("day: {e}")))?;
            let row = (1..rec.len())
                .map(|c| {
                    rec[c]
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(line, format!("column {} (`{}`) is not a finite number", c + 1, &rec[c])))
                })
                .collect::<Result<Vec<f64>>>()?;
            table.push(day, row);
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>, buses: usize, periods: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, buses, periods, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = ProfileTable::new(2, 2);
        t.push(0, vec![1.5, -2.0, 0.1, 3.0]);
        t.push(1, vec![0.0, 1e-12, 7.25, -0.5]);
        let text = t.to_csv_string();
        assert!(text.starts_with("day,b0_t0,b0_t1,b1_t0,b1_t1\n"));
        assert_eq!(ProfileTable::from_csv_str(&text, 2, 2, "mem").unwrap(), t);
    }

    #[test]
    fn truncated_row_names_line() {
        let text = "day,b0_t0,b0_t1\n0,1,2\n1,3\n";
        match ProfileTable::from_csv_str(text, 1, 2, "f.csv") {
            Err(CoreError::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
