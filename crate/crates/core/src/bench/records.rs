use std::io::Write;
use std::path::Path;

use super::Method;
use crate::error::{Error, Result};

pub const RECORDS_HEADER: [&str; 10] = [
    "method",
    "dataset",
    "density",
    "repetition",
    "rmse",
    "mae",
    "mape",
    "wall_time_seconds",
    "converged",
    "mask_hash",
];

/// One method run on one (density, repetition) cell. Metrics are `None`
/// when the method failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: Method,
    pub dataset: String,
    pub density: f64,
    pub repetition: usize,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub mape: Option<f64>,
    pub wall_time_seconds: Option<f64>,
    pub converged: bool,
    pub mask_hash: String,
}

impl ResultRecord {
    pub fn failed(&self) -> bool {
        self.rmse.is_none()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Streams records as CSV, flushing after every batch.
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(RECORDS_HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    pub fn write_batch(&mut self, records: &[ResultRecord]) -> Result<()> {
        for r in records {
            self.inner.write_record([
                r.method.name().to_string(),
                r.dataset.clone(),
                r.density.to_string(),
                r.repetition.to_string(),
                opt(r.rmse),
                opt(r.mae),
                opt(r.mape),
                opt(r.wall_time_seconds),
                r.converged.to_string(),
                r.mask_hash.clone(),
            ])?;
        }
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_records(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut w = RecordWriter::new(std::fs::File::create(path)?)?;
    w.write_batch(records)
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RECORDS_HEADER {
        return Err(err(1, format!("expected header {}", RECORDS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let num = |col: usize| -> Result<f64> {
            row[col].parse::<f64>().map_err(|_| err(line, format!("bad {} {:?}", RECORDS_HEADER[col], &row[col])))
        };
        let opt_num = |col: usize| -> Result<Option<f64>> {
            if row[col].is_empty() {
                Ok(None)
            } else {
                num(col).map(Some)
            }
        };
        out.push(ResultRecord {
            method: row[0].parse().map_err(|_| err(line, format!("unknown method {:?}", &row[0])))?,
            dataset: row[1].to_string(),
            density: num(2)?,
            repetition: row[3].parse().map_err(|_| err(line, format!("bad repetition {:?}", &row[3])))?,
            rmse: opt_num(4)?,
            mae: opt_num(5)?,
            mape: opt_num(6)?,
            wall_time_seconds: opt_num(7)?,
            converged: row[8].parse().map_err(|_| err(line, format!("bad converged flag {:?}", &row[8])))?,
            mask_hash: row[9].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ResultRecord> {
        vec![
            ResultRecord {
                method: Method::Tgsr,
                dataset: "synthetic".into(),
                density: 0.1,
                repetition: 0,
                rmse: Some(0.1 + 0.2),
                mae: Some(1.0 / 3.0),
                mape: None,
                wall_time_seconds: None,
                converged: true,
                mask_hash: "00ff00ff00ff00ff".into(),
            },
            ResultRecord {
                method: Method::Timegnn,
                dataset: "a,b".into(),
                density: 0.7,
                repetition: 3,
                rmse: None,
                mae: None,
                mape: None,
                wall_time_seconds: Some(1.25),
                converged: false,
                mask_hash: "0123456789abcdef".into(),
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("records.csv");
        write_records(&p, &sample()).unwrap();
        assert_eq!(read_records(&p).unwrap(), sample());
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("method,dataset,density,repetition,rmse,mae,mape,wall_time_seconds,converged,mask_hash\n"));
        assert!(text.contains("tgsr,synthetic,0.1,0,0.30000000000000004,"));
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "method,dataset\n").unwrap();
        assert!(read_records(&p).is_err());
        std::fs::write(&p, format!("{}\nnni,d,0.1,0,1,1,1,,true,x\n", RECORDS_HEADER.join(","))).unwrap();
        assert!(read_records(&p).is_err());
    }
}
