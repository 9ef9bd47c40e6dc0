//! Time-varying graph signals, sampling masks, and the smoothness
//! functionals built on the temporal difference operator.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{invalid, Error, Result};
use crate::scalar::{dot, Real};
use crate::spectral::ShiftedOperator;
use crate::sparse::CsrMatrix;

/// `N x M` signal matrix stored column-major, so the flat storage is `vec(X)`
/// and column `t` is the graph signal at time step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvSignal<T> {
    n_nodes: usize,
    n_steps: usize,
    values: Vec<T>,
}

impl<T: Real> TvSignal<T> {
    pub fn zeros(n_nodes: usize, n_steps: usize) -> Self {
        Self {
            n_nodes,
            n_steps,
            values: vec![T::zero(); n_nodes * n_steps],
        }
    }

    /// From `vec(X)`; rejects non-finite entries.
    pub fn from_vec(n_nodes: usize, n_steps: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_nodes * n_steps {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_nodes}x{n_steps} signal",
                values.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!(
                "non-finite value at node {}, step {}",
                p % n_nodes.max(1),
                p / n_nodes.max(1)
            ));
        }
        Ok(Self {
            n_nodes,
            n_steps,
            values,
        })
    }

    pub fn from_fn(n_nodes: usize, n_steps: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_nodes * n_steps);
        for t in 0..n_steps {
            for i in 0..n_nodes {
                values.push(f(i, t));
            }
        }
        Self {
            n_nodes,
            n_steps,
            values,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_nodes, self.n_steps)
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize) -> T {
        self.values[t * self.n_nodes + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, v: T) {
        self.values[t * self.n_nodes + i] = v;
    }

    pub fn column(&self, t: usize) -> &[T] {
        &self.values[t * self.n_nodes..(t + 1) * self.n_nodes]
    }

    pub fn column_mut(&mut self, t: usize) -> &mut [T] {
        &mut self.values[t * self.n_nodes..(t + 1) * self.n_nodes]
    }

    /// `vec(X)`.
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn frobenius_sq(&self) -> T {
        dot(&self.values, &self.values)
    }

    pub fn frobenius(&self) -> T {
        self.frobenius_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        DenseMatrix::from_col_major(self.n_nodes, self.n_steps, self.values.clone())
            .expect("shape is consistent")
    }

    fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// Binary sampling matrix `J` with the observations `Y = J ∘ X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask<T> {
    mask: Vec<bool>,
    observed: TvSignal<T>,
}

impl<T: Real> SamplingMask<T> {
    /// Pairs a mask with observations, zeroing observations outside the mask.
    pub fn new(mask: Vec<bool>, mut observed: TvSignal<T>) -> Result<Self> {
        if mask.len() != observed.as_slice().len() {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, signal has {}",
                mask.len(),
                observed.as_slice().len()
            )));
        }
        for (y, &j) in observed.as_mut_slice().iter_mut().zip(&mask) {
            if !j {
                *y = T::zero();
            }
        }
        Ok(Self { mask, observed })
    }

    pub fn n_nodes(&self) -> usize {
        self.observed.n_nodes()
    }

    pub fn n_steps(&self) -> usize {
        self.observed.n_steps()
    }

    #[inline]
    pub fn is_sampled(&self, i: usize, t: usize) -> bool {
        self.mask[t * self.observed.n_nodes() + i]
    }

    /// Mask in `vec(J)` order.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn observed(&self) -> &TvSignal<T> {
        &self.observed
    }

    pub fn n_sampled(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Nodes never observed at any time step.
    pub fn never_sampled_nodes(&self) -> Vec<usize> {
        let n = self.n_nodes();
        (0..n)
            .filter(|&i| (0..self.n_steps()).all(|t| !self.is_sampled(i, t)))
            .collect()
    }

    /// Coordinate list `t i`, one sampled entry per line.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> Result<()> {
        for t in 0..self.n_steps() {
            for i in 0..self.n_nodes() {
                if self.is_sampled(i, t) {
                    writeln!(out, "{t} {i}")?;
                }
            }
        }
        Ok(())
    }
}

/// The `M x (M-1)` bidiagonal temporal difference operator `D_h`, applied as
/// a stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalDiffOp {
    n_steps: usize,
}

impl TemporalDiffOp {
    pub fn new(n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return invalid(format!("temporal differences need M >= 2, got {n_steps}"));
        }
        Ok(Self { n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// `X D_h`: column `t` is `x_{t+1} - x_t`.
    pub fn apply<T: Real>(&self, x: &TvSignal<T>) -> Result<TvSignal<T>> {
        self.check(x)?;
        let n = x.n_nodes();
        let mut out = TvSignal::zeros(n, self.n_steps - 1);
        for t in 0..self.n_steps - 1 {
            let (a, b) = (x.column(t), x.column(t + 1));
            for ((o, &lo), &hi) in out.column_mut(t).iter_mut().zip(a).zip(b) {
                *o = hi - lo;
            }
        }
        Ok(out)
    }

    /// `X D_h D_hᵀ` written into `out`: the second-difference stencil
    /// with weights `[1, 2, ..., 2, 1]` on the diagonal.
    pub fn second_difference_into<T: Real>(&self, x: &[T], n_nodes: usize, out: &mut [T]) {
        let m = self.n_steps;
        debug_assert_eq!(x.len(), n_nodes * m);
        debug_assert_eq!(out.len(), n_nodes * m);
        for t in 0..m {
            let col = &x[t * n_nodes..(t + 1) * n_nodes];
            let dst = &mut out[t * n_nodes..(t + 1) * n_nodes];
            let prev = (t > 0).then(|| &x[(t - 1) * n_nodes..t * n_nodes]);
            let next = (t + 1 < m).then(|| &x[(t + 1) * n_nodes..(t + 2) * n_nodes]);
            for i in 0..n_nodes {
                let mut acc = T::zero();
                if let Some(p) = prev {
                    acc = acc + (col[i] - p[i]);
                }
                if let Some(q) = next {
                    acc = acc + (col[i] - q[i]);
                }
                dst[i] = acc;
            }
        }
    }

    /// Dense `D_h`, for oracles and small problems.
    pub fn dense<T: Real>(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.n_steps, self.n_steps - 1, |r, c| {
            if r == c {
                -T::one()
            } else if r == c + 1 {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Dense `D_h D_hᵀ`.
    pub fn dense_gram<T: Real>(&self) -> DenseMatrix<T> {
        let d = self.dense::<T>();
        d.matmul(&d.transpose()).expect("conformal")
    }

    fn check<T: Real>(&self, x: &TvSignal<T>) -> Result<()> {
        if x.n_steps() != self.n_steps {
            return Err(Error::DimensionMismatch(format!(
                "operator built for M = {}, signal has M = {}",
                self.n_steps,
                x.n_steps()
            )));
        }
        Ok(())
    }
}

/// Column differences `x_{t+1} - x_t`.
pub fn temporal_diff<T: Real>(x: &TvSignal<T>) -> Result<TvSignal<T>> {
    TemporalDiffOp::new(x.n_steps())?.apply(x)
}

/// `tr(Xᵀ L X) = Σ_t x_tᵀ L x_t`.
pub fn smoothness_s2<T: Real>(x: &TvSignal<T>, l: &CsrMatrix<T>) -> Result<T> {
    if l.dim() != x.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "Laplacian is {0}x{0}, signal has {1} nodes",
            l.dim(),
            x.n_nodes()
        )));
    }
    let mut lx = vec![T::zero(); x.n_nodes()];
    let mut total = T::zero();
    for t in 0..x.n_steps() {
        l.matvec_into(x.column(t), &mut lx);
        total = total + dot(x.column(t), &lx);
    }
    Ok(total)
}

/// `tr(Xᵀ (L + εI)^β X)`.
pub fn sobolev_seminorm_tv<T: Real>(
    x: &TvSignal<T>,
    l: &CsrMatrix<T>,
    epsilon: T,
    beta: T,
) -> Result<T> {
    if beta == T::one() {
        if epsilon < T::zero() {
            return invalid("epsilon must be nonnegative");
        }
        let v = smoothness_s2(x, l)? + epsilon * x.frobenius_sq();
        return finite(v);
    }
    let op = ShiftedOperator::new(l, epsilon, beta)?;
    let sx = op.apply_signal(x)?;
    finite(dot(x.as_slice(), sx.as_slice()))
}

fn finite<T: Real>(v: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericalOverflow("Sobolev seminorm is not finite".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MseScope {
    #[default]
    All,
    UnsampledOnly,
}

/// Mean squared entrywise error over the selected entries.
pub fn mse<T: Real>(
    estimate: &TvSignal<T>,
    truth: &TvSignal<T>,
    scope: MseScope,
    mask: Option<&SamplingMask<T>>,
) -> Result<T> {
    estimate.ensure_same_shape(truth)?;
    let pairs = estimate.as_slice().iter().zip(truth.as_slice());
    let (sum, count) = match scope {
        MseScope::All => pairs.fold((T::zero(), 0usize), |(s, c), (&a, &b)| {
            (s + (a - b) * (a - b), c + 1)
        }),
        MseScope::UnsampledOnly => {
            let mask = mask.ok_or_else(|| {
                Error::InvalidParameter("unsampled-only MSE needs a sampling mask".into())
            })?;
            if mask.mask().len() != truth.as_slice().len() {
                return Err(Error::DimensionMismatch("mask vs signal".into()));
            }
            pairs
                .zip(mask.mask())
                .filter(|(_, &j)| !j)
                .fold((T::zero(), 0usize), |(s, c), ((&a, &b), _)| {
                    (s + (a - b) * (a - b), c + 1)
                })
        }
    };
    if count == 0 {
        return Err(Error::EmptySelection("no entries to average".into()));
    }
    Ok(sum / T::from_usize_exact(count))
}

/// A signal with its node and time-step labels, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSignal<T> {
    pub signal: TvSignal<T>,
    pub node_labels: Vec<String>,
    pub time_labels: Vec<String>,
}

impl<T: Real> LabeledSignal<T> {
    pub fn with_default_labels(signal: TvSignal<T>) -> Self {
        let node_labels = (0..signal.n_nodes()).map(|i| i.to_string()).collect();
        let time_labels = (0..signal.n_steps()).map(|t| t.to_string()).collect();
        Self {
            signal,
            node_labels,
            time_labels,
        }
    }

    /// CSV: header `node,<time labels...>`, then one row per node. Values
    /// carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["node".to_string()];
        header.extend(self.time_labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.node_labels.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.signal.n_steps() + 1);
            rec.push(label.clone());
            for t in 0..self.signal.n_steps() {
                rec.push(format!("{:.16e}", self.signal.get(i, t).as_f64()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() < 2 {
            return Err(Error::Parse {
                path: source.into(),
                line: 1,
                message: "header needs a node column and at least one time column".into(),
            });
        }
        let time_labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut node_labels = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(r as u64 + 2);
            if rec.len() != header.len() {
                return Err(Error::Parse {
                    path: source.into(),
                    line,
                    message: format!("expected {} fields, found {}", header.len(), rec.len()),
                });
            }
            node_labels.push(rec[0].to_string());
            let mut row = Vec::with_capacity(time_labels.len());
            for (c, cell) in rec.iter().enumerate().skip(1) {
                let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    Error::Cell {
                        path: source.into(),
                        row: line,
                        column: c,
                        header: header[c].to_string(),
                        value: cell.to_string(),
                    }
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        let (n, m) = (rows.len(), time_labels.len());
        let signal = TvSignal::from_fn(n, m, |i, t| T::lit(rows[i][t]));
        Ok(Self {
            signal,
            node_labels,
            time_labels,
        })
    }
}
