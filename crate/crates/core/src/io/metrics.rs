use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::{CovarianceMatrix, EvalReport};
use crate::game::InstanceSpace;
use crate::trainer::MetricRecord;

const CSV_COLUMNS: [&str; 15] = [
    "iteration",
    "phase",
    "kind",
    "q_loss",
    "obverter_loss",
    "neg_objective",
    "clamped",
    "accuracy",
    "level0",
    "level1",
    "level2",
    "level_inf",
    "hard_accuracy",
    "mean_gain",
    "validity",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(r: &MetricRecord) -> Vec<String> {
    let kind = r
        .kind
        .map(|k| serde_json::to_value(k).expect("kind serializes").as_str().unwrap_or_default().to_string())
        .unwrap_or_default();
    vec![
        r.iteration.to_string(),
        r.phase.to_string(),
        kind,
        opt(r.q_loss),
        opt(r.obverter_loss),
        opt(r.neg_objective),
        opt(r.clamped),
        opt(r.accuracy),
        opt(r.level0),
        opt(r.level1),
        opt(r.level2),
        opt(r.level_inf),
        opt(r.hard_accuracy),
        opt(r.mean_gain),
        opt(r.validity),
    ]
}

/// Appends metric records to `<stem>.jsonl` and a `<stem>.csv` mirror,
/// flushing both after every record.
pub struct MetricsWriter {
    json_path: PathBuf,
    json: BufWriter<File>,
    csv: csv::Writer<File>,
    last_iteration: u64,
}

impl MetricsWriter {
    pub fn create(json_path: &Path) -> Result<Self> {
        let csv_path = json_path.with_extension("csv");
        let json = BufWriter::new(File::create(json_path).map_err(|e| Error::io(json_path, e))?);
        let mut csv = csv::Writer::from_path(&csv_path).map_err(|e| Error::Data(format!("{}: {e}", csv_path.display())))?;
        csv.write_record(CSV_COLUMNS)
            .map_err(|e| Error::Data(format!("{}: {e}", csv_path.display())))?;
        Ok(MetricsWriter {
            json_path: json_path.to_path_buf(),
            json,
            csv,
            last_iteration: 0,
        })
    }

    pub fn write(&mut self, record: &MetricRecord) -> Result<()> {
        if record.iteration < self.last_iteration {
            return Err(Error::Protocol(format!(
                "metric at iteration {} after iteration {}",
                record.iteration, self.last_iteration
            )));
        }
        self.last_iteration = record.iteration;
        let line = serde_json::to_string(record).expect("record serializes");
        let p = &self.json_path;
        writeln!(self.json, "{line}").map_err(|e| Error::io(p, e))?;
        self.json.flush().map_err(|e| Error::io(p, e))?;
        self.csv
            .write_record(csv_row(record))
            .and_then(|_| self.csv.flush().map_err(csv::Error::from))
            .map_err(|e| Error::Data(format!("metrics csv: {e}")))
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let l = l.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&l).map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Covariance grid with a header row of attribute names and one row per message.
pub fn write_covariance_csv(path: &Path, cov: &CovarianceMatrix, space: &InstanceSpace) -> Result<()> {
    let err = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header = vec!["message".to_string()];
    header.extend((0..cov.vocab).map(|a| space.attr_name(a)));
    w.write_record(&header).map_err(err)?;
    for (m, row) in cov.rows().enumerate() {
        let mut rec = vec![space.attr_name(m)];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per evaluated game.
pub fn write_eval_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let err = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in &report.results {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
