use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Qiu,
    Sobolev,
    IdwBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Qiu => "qiu",
            Method::Sobolev => "sobolev",
            Method::IdwBaseline => "idw-baseline",
        }
    }

    pub fn is_iterative(self) -> bool {
        self != Method::IdwBaseline
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qiu" => Ok(Method::Qiu),
            "sobolev" => Ok(Method::Sobolev),
            "idw-baseline" => Ok(Method::IdwBaseline),
            _ => Err(Error::InvalidParameter(format!(
                "unknown method {s:?} (expected qiu, sobolev or idw-baseline)"
            ))),
        }
    }
}

/// One reconstruction trial. Wall time is kept out of the CSV so that
/// result files are reproducible; see [`ResultTable::write_timings_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub density: f64,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub trial: usize,
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub density: f64,
    pub trials: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub stderr_mse: f64,
    pub mean_iterations: f64,
    pub median_iterations: f64,
    pub nonconverged: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl ResultTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Per (method, density) statistics, ordered by method then density.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(Method, u64), Vec<&ResultRow>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((r.method, ordered_bits(r.density))).or_default().push(r);
        }
        groups
            .into_values()
            .map(|rows| {
                let mse: Vec<f64> = rows.iter().map(|r| r.mse).collect();
                let its: Vec<f64> = rows.iter().map(|r| r.iterations as f64).collect();
                let sd = std_dev(&mse);
                SummaryRow {
                    method: rows[0].method,
                    density: rows[0].density,
                    trials: rows.len(),
                    mean_mse: mean(&mse),
                    std_mse: sd,
                    stderr_mse: sd / (rows.len() as f64).sqrt(),
                    mean_iterations: mean(&its),
                    median_iterations: median(&its),
                    nonconverged: rows.iter().filter(|r| !r.converged).count(),
                }
            })
            .collect()
    }

    /// Header: `method,density,lambda,epsilon,beta,trial,mse,iterations,converged`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.rows)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        Ok(Self { rows: read_rows(input)? })
    }

    /// Header: `method,density,trial,wall_time_s`.
    pub fn write_timings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "density", "trial", "wall_time_s"])?;
        for r in &self.rows {
            w.write_record([
                r.method.name().to_string(),
                r.density.to_string(),
                r.trial.to_string(),
                format!("{:.6}", r.wall_time_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Header: `method,density,trials,mean_mse,std_mse,stderr_mse,mean_iterations,median_iterations,nonconverged`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, &self.summary())
    }
}

/// Density keys sort numerically for the nonnegative values used here.
fn ordered_bits(x: f64) -> u64 {
    x.to_bits()
}

/// Mean MSE of one grid point over the search trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub method: Method,
    pub density: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub mean_mse: f64,
    pub nonconverged_trials: usize,
}

/// Header: `method,density,lambda,epsilon,mean_mse,nonconverged_trials`.
pub fn write_grid_csv<W: Write>(out: W, points: &[GridPoint]) -> Result<()> {
    write_rows(out, points)
}

pub fn read_grid_csv<R: Read>(input: R) -> Result<Vec<GridPoint>> {
    read_rows(input)
}

fn write_rows<W: Write, S: Serialize>(out: W, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read, S: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<S>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: Method, density: f64, trial: usize, mse: f64, iterations: usize) -> ResultRow {
        ResultRow {
            method,
            density,
            lambda: Some(0.5),
            epsilon: (method == Method::Sobolev).then_some(2.0),
            beta: Some(1.0),
            trial,
            mse,
            iterations,
            converged: true,
            wall_time_s: 0.25,
        }
    }

    #[test]
    fn summary_statistics() {
        let t = ResultTable {
            rows: vec![
                row(Method::Sobolev, 0.5, 0, 1.0, 10),
                row(Method::Qiu, 0.5, 0, 2.0, 30),
                row(Method::Qiu, 0.5, 1, 4.0, 20),
                row(Method::Qiu, 0.3, 0, 9.0, 50),
            ],
        };
        let s = t.summary();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].method, s[0].density), (Method::Qiu, 0.3));
        assert_eq!(s[1].mean_mse, 3.0);
        assert!((s[1].std_mse - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s[1].median_iterations, 25.0);
        assert_eq!(s[2].std_mse, 0.0);
    }

    #[test]
    fn csv_round_trip_omits_wall_time() {
        let t = ResultTable {
            rows: vec![row(Method::Qiu, 0.5, 0, 0.125, 7), {
                let mut r = row(Method::IdwBaseline, 0.5, 0, 0.5, 0);
                r.lambda = None;
                r.beta = None;
                r
            }],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,density,lambda,epsilon,beta,trial,mse,iterations,converged\n"));
        assert!(text.contains("idw-baseline,0.5,,,,0,0.5,0,true"));
        assert!(!text.contains("0.25"));
        let back = ResultTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows[0].mse, 0.125);
        assert_eq!(back.rows[1].lambda, None);
        assert_eq!(back.rows[0].wall_time_s, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
