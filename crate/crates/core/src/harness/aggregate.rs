use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

/// Pointwise mean and standard deviation across runs.
pub fn aggregate(runs: &[Vec<f64>]) -> Result<MeanStd> {
    let first = runs.first().ok_or_else(|| Error::Data("nothing to aggregate".into()))?;
    if let Some(bad) = runs.iter().find(|r| r.len() != first.len()) {
        return Err(Error::Data(format!(
            "curve lengths differ: {} vs {}",
            first.len(),
            bad.len()
        )));
    }
    let n = runs.len() as f64;
    let mean: Vec<f64> = (0..first.len())
        .map(|i| runs.iter().map(|r| r[i]).sum::<f64>() / n)
        .collect();
    let std = (0..first.len())
        .map(|i| {
            let var = runs.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / n;
            var.sqrt()
        })
        .collect();
    Ok(MeanStd { mean, std })
}

/// A headered numeric CSV: first column is the time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Data(format!("{}: non-numeric field {field:?}", path.display())))?;
            col.push(v);
        }
    }
    Ok(Table { headers, columns })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

/// Aggregates the same CSV from several runs into `t, <col>_mean, <col>_std`.
pub fn aggregate_tables(tables: &[Table]) -> Result<Table> {
    let first = tables.first().ok_or_else(|| Error::Data("no tables".into()))?;
    for t in tables {
        if t.headers != first.headers {
            return Err(Error::Data("tables have different columns".into()));
        }
        if t.columns[0] != first.columns[0] {
            return Err(Error::Data("tables have different time axes".into()));
        }
    }
    let mut headers = vec![first.headers[0].clone()];
    let mut columns = vec![first.columns[0].clone()];
    for (c, name) in first.headers.iter().enumerate().skip(1) {
        let runs: Vec<Vec<f64>> = tables.iter().map(|t| t.columns[c].clone()).collect();
        let ms = aggregate(&runs)?;
        headers.push(format!("{name}_mean"));
        headers.push(format!("{name}_std"));
        columns.push(ms.mean);
        columns.push(ms.std);
    }
    Ok(Table { headers, columns })
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(&table.headers).map_err(|e| csv_err(path, e))?;
    let rows = table.columns.first().map_or(0, Vec::len);
    for i in 0..rows {
        w.write_record(table.columns.iter().map(|c| c[i].to_string()))
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_zero_spread() {
        let r = aggregate(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(r.std, vec![0.0; 3]);
        let d = aggregate(&[vec![1.0, 5.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(d.std, vec![0.0; 2]);
    }

    #[test]
    fn mean_and_std() {
        let r = aggregate(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(r.mean, vec![2.0]);
        assert_eq!(r.std, vec![1.0]);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(aggregate(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table {
            headers: vec!["t".into(), "x".into()],
            columns: vec![vec![1.0, 2.0], vec![0.5, 0.25]],
        };
        let p = dir.path().join("a.csv");
        write_table(&p, &t).unwrap();
        let back = read_table(&p).unwrap();
        assert_eq!(back, t);
        let agg = aggregate_tables(&[t.clone(), t]).unwrap();
        assert_eq!(agg.headers, vec!["t", "x_mean", "x_std"]);
    }
}
