//! Streaming CSV time series and JSONL event logs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{Event, ExperimentReport, Metric};

/// Shortest decimal text that parses back to the same double.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

pub struct CsvWriter {
    out: BufWriter<File>,
    path: PathBuf,
    columns: usize,
}

impl CsvWriter {
    /// Creates the file and writes the header `t,<columns>`.
    pub fn create(path: &Path, columns: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = CsvWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            columns: columns.len(),
        };
        let header = std::iter::once("t").chain(columns.iter().copied()).collect::<Vec<_>>().join(",");
        w.line(&header)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn write_row(&mut self, t: f64, values: &[f64]) -> Result<()> {
        if values.len() != self.columns {
            return Err(Error::Shape(format!("row has {} values for {} columns", values.len(), self.columns)));
        }
        let mut s = format_f64(t);
        for v in values {
            s.push(',');
            s.push_str(&format_f64(*v));
        }
        self.line(&s)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Streams `(t, values)` records into a CSV file.
pub fn write_records(path: &Path, columns: &[&str], records: impl IntoIterator<Item = (f64, Vec<f64>)>) -> Result<()> {
    let mut w = CsvWriter::create(path, columns)?;
    for (t, v) in records {
        w.write_row(t, &v)?;
    }
    w.finish()
}

/// Header and rows of a CSV written by [`CsvWriter`].
pub fn read_records(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?.split(',').map(str::to_string).collect(),
        None => Vec::new(),
    };
    let mut rows = Vec::new();
    for l in lines {
        let l = l.map_err(|e| Error::io(path, e))?;
        let row = l
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|_| Error::Shape(format!("bad number `{f}` in {}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes every series metric of a report to `<dir>/<metric>.csv`.
pub fn write_report_series(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for (name, metric) in &report.metrics {
        if let Metric::Series(s) = metric {
            let path = dir.join(format!("{name}.csv"));
            write_records(&path, &[name.as_str()], s.t.iter().zip(&s.values).map(|(t, v)| (*t, vec![*v])))?;
            out.push(path);
        }
    }
    Ok(out)
}

/// Append-only JSONL log, one object per line.
pub struct EventLog {
    out: BufWriter<File>,
    path: PathBuf,
}

impl EventLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(EventLog {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn log(&mut self, event: &Event) -> Result<()> {
        let line = serde_json::to_string(event).expect("events serialize");
        writeln!(self.out, "{line}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_events(path: &Path) -> Result<Vec<Event>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Shape(format!("bad event line: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_records(&p, &["h", "g"], std::iter::empty()).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "t,h,g\n");
    }

    #[test]
    fn one_record_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let vals = vec![0.1 + 0.2, -1e-310, f64::MAX];
        write_records(&p, &["a", "b", "c"], [(1.0 / 3.0, vals.clone())]).unwrap();
        let (h, rows) = read_records(&p).unwrap();
        assert_eq!(h, vec!["t", "a", "b", "c"]);
        assert_eq!(rows.len(), 1);
        assert_eq!((1.0f64 / 3.0).to_bits(), rows[0][0].to_bits());
        for (a, b) in vals.iter().zip(&rows[0][1..]) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn events_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        let ev = vec![
            Event::Collision {
                seed: 3,
                eps: None,
                i: 1,
                j: 4,
                distance: 5e-5,
                t: 0.25,
            },
            Event::CflRejection { dt: 0.1, bound: 0.01 },
            Event::Merge { pair: 3, t: 1.5 },
        ];
        let mut log = EventLog::create(&p).unwrap();
        for e in &ev {
            log.log(e).unwrap();
        }
        log.finish().unwrap();
        assert_eq!(read_events(&p).unwrap(), ev);
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("{\"event\":\"collision\""));
    }
}
