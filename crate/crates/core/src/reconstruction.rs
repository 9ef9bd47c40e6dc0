//! The time-varying reconstruction problem
//!
//! `min_X ½‖J ∘ X - Y‖_F² + (λ/2) tr((X D_h)ᵀ (L + εI)^β X D_h)`
//!
//! solved matrix-free by conjugate gradient on its stationarity system
//! `J ∘ X + λ (L + εI)^β X D_h D_hᵀ = Y`. The Laplacian-quadratic-form method
//! is the special case `ε = 0, β = 1`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geo_graph::GeoGraph;
use crate::scalar::{dot, Real};
use crate::spectral::{fmt_extended, ShiftedOperator};
use crate::tv_signal::{SamplingMask, TemporalDiffOp, TvSignal};

pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Laplacian quadratic form on temporal differences (`ε = 0`, `β = 1`).
    Qiu,
    /// Sobolev norm on temporal differences.
    Sobolev,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Qiu => "qiu",
            Variant::Sobolev => "sobolev",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReconProblem<'a, T> {
    operator: ShiftedOperator<'a, T>,
    mask: &'a SamplingMask<T>,
    temporal: TemporalDiffOp,
    lambda: T,
    tol: T,
    max_iters: usize,
    variant: Variant,
}

impl<'a, T: Real> ReconProblem<'a, T> {
    pub fn qiu(graph: &'a GeoGraph<T>, mask: &'a SamplingMask<T>, lambda: T) -> Result<Self> {
        let op = ShiftedOperator::new(graph.laplacian(), T::zero(), T::one())?;
        Self::with_operator(op, mask, lambda, Variant::Qiu)
    }

    pub fn sobolev(
        graph: &'a GeoGraph<T>,
        mask: &'a SamplingMask<T>,
        lambda: T,
        epsilon: T,
        beta: T,
    ) -> Result<Self> {
        let op = ShiftedOperator::new(graph.laplacian(), epsilon, beta)?;
        Self::with_operator(op, mask, lambda, Variant::Sobolev)
    }

    /// Binds a prebuilt operator; the Qiu variant requires `ε = 0, β = 1`.
    pub fn with_operator(
        operator: ShiftedOperator<'a, T>,
        mask: &'a SamplingMask<T>,
        lambda: T,
        variant: Variant,
    ) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return invalid(format!("lambda = {lambda} must be positive and finite"));
        }
        if variant == Variant::Qiu
            && (operator.epsilon() != T::zero() || operator.beta() != T::one())
        {
            return invalid("the qiu variant fixes epsilon = 0 and beta = 1");
        }
        let n = operator.laplacian().dim();
        if mask.n_nodes() != n {
            return Err(Error::DimensionMismatch(format!(
                "graph has {n} nodes, mask has {}",
                mask.n_nodes()
            )));
        }
        let temporal = TemporalDiffOp::new(mask.n_steps())?;
        let max_iters = 20 * n * mask.n_steps();
        Ok(Self {
            operator,
            mask,
            temporal,
            lambda,
            tol: T::lit(DEFAULT_TOL),
            max_iters,
            variant,
        })
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters.max(1);
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.mask.n_nodes()
    }

    pub fn n_steps(&self) -> usize {
        self.mask.n_steps()
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn epsilon(&self) -> T {
        self.operator.epsilon()
    }

    pub fn beta(&self) -> T {
        self.operator.beta()
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn mask(&self) -> &SamplingMask<T> {
        self.mask
    }

    pub fn operator(&self) -> &ShiftedOperator<'a, T> {
        &self.operator
    }

    fn check_shape(&self, x: &TvSignal<T>) -> Result<()> {
        if x.shape() != (self.n_nodes(), self.n_steps()) {
            return Err(Error::DimensionMismatch(format!(
                "problem is {}x{}, signal is {:?}",
                self.n_nodes(),
                self.n_steps(),
                x.shape()
            )));
        }
        Ok(())
    }

    /// `½‖J ∘ X - Y‖_F² + (λ/2) tr((X D_h)ᵀ (L + εI)^β X D_h)`.
    pub fn objective(&self, x: &TvSignal<T>) -> Result<T> {
        self.check_shape(x)?;
        let half = T::lit(0.5);
        let fidelity = x
            .as_slice()
            .iter()
            .zip(self.mask.observed().as_slice())
            .zip(self.mask.mask())
            .filter(|(_, &j)| j)
            .fold(T::zero(), |acc, ((&xv, &yv), _)| acc + (xv - yv) * (xv - yv));
        let diff = self.temporal.apply(x)?;
        let sdiff = self.operator.apply_signal(&diff)?;
        let reg = dot(diff.as_slice(), sdiff.as_slice());
        let value = half * fidelity + half * self.lambda * reg;
        if !value.is_finite() {
            return Err(Error::NumericalOverflow("objective is not finite".into()));
        }
        Ok(value)
    }

    /// `J ∘ X - Y + λ (L + εI)^β X D_h D_hᵀ`.
    pub fn gradient(&self, x: &TvSignal<T>) -> Result<TvSignal<T>> {
        self.check_shape(x)?;
        let mut g = self.hessian_apply(x)?;
        for (gv, &yv) in g.as_mut_slice().iter_mut().zip(self.mask.observed().as_slice()) {
            *gv = *gv - yv;
        }
        Ok(g)
    }

    /// `J ∘ V + λ (L + εI)^β V D_h D_hᵀ`.
    pub fn hessian_apply(&self, v: &TvSignal<T>) -> Result<TvSignal<T>> {
        self.check_shape(v)?;
        let mut out = TvSignal::zeros(self.n_nodes(), self.n_steps());
        let mut scratch = vec![T::zero(); v.as_slice().len()];
        self.hessian_apply_into(v.as_slice(), out.as_mut_slice(), &mut scratch);
        Ok(out)
    }

    fn hessian_apply_into(&self, v: &[T], out: &mut [T], scratch: &mut [T]) {
        self.temporal
            .second_difference_into(v, self.n_nodes(), scratch);
        self.operator.apply_columns(scratch, out);
        for ((o, &vv), &j) in out.iter_mut().zip(v).zip(self.mask.mask()) {
            *o = self.lambda * *o;
            if j {
                *o = *o + vv;
            }
        }
    }

    /// Conjugate gradient from `X₀ = Y`, stopping at
    /// `‖H X - Y‖_F / ‖Y‖_F ≤ tol` or after `max_iters` iterations.
    pub fn solve(&self) -> Result<SolveReport<T>> {
        let y = self.mask.observed().as_slice();
        let (n, m) = (self.n_nodes(), self.n_steps());
        let len = n * m;
        let possibly_singular =
            self.epsilon() == T::zero() && !self.mask.never_sampled_nodes().is_empty();
        let b_norm = dot(y, y).sqrt();
        if b_norm == T::zero() {
            let x_hat = TvSignal::zeros(n, m);
            let objective_value = self.objective(&x_hat)?;
            return Ok(SolveReport {
                x_hat,
                iterations: 0,
                residual_history: vec![T::zero()],
                objective_value,
                converged: true,
                possibly_singular,
            });
        }

        let mut x = y.to_vec();
        let mut scratch = vec![T::zero(); len];
        let mut hp = vec![T::zero(); len];
        self.hessian_apply_into(&x, &mut hp, &mut scratch);
        let mut r: Vec<T> = y.iter().zip(&hp).map(|(&b, &a)| b - a).collect();
        let mut p = r.clone();
        let mut rs = dot(&r, &r);
        let mut rel = rs.sqrt() / b_norm;
        let mut residual_history = vec![rel];
        let mut iterations = 0;

        while rel > self.tol && iterations < self.max_iters {
            self.hessian_apply_into(&p, &mut hp, &mut scratch);
            let curvature = dot(&p, &hp);
            if !curvature.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "non-finite curvature at iteration {iterations}"
                )));
            }
            if curvature <= T::zero() {
                // Search direction in the null space of a singular Hessian.
                break;
            }
            let alpha = rs / curvature;
            for ((xi, ri), (&pi, &hi)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&hp)) {
                *xi = *xi + alpha * pi;
                *ri = *ri - alpha * hi;
            }
            let rs_next = dot(&r, &r);
            iterations += 1;
            rel = rs_next.sqrt() / b_norm;
            if !rel.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "residual became non-finite at iteration {iterations}"
                )));
            }
            residual_history.push(rel);
            let beta = rs_next / rs;
            for (pi, &ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
            rs = rs_next;
        }

        let x_hat = TvSignal::from_vec(n, m, x)
            .map_err(|_| Error::NumericalFailure("solution is not finite".into()))?;
        let objective_value = self.objective(&x_hat)?;
        Ok(SolveReport {
            x_hat,
            iterations,
            residual_history,
            objective_value,
            converged: rel <= self.tol,
            possibly_singular,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub x_hat: TvSignal<T>,
    pub iterations: usize,
    /// Relative residual before the first iteration, then after each one.
    pub residual_history: Vec<T>,
    pub objective_value: T,
    pub converged: bool,
    /// `ε = 0` and some node is never observed, so the Hessian may be singular.
    pub possibly_singular: bool,
}

impl<T: Real> SolveReport<T> {
    pub fn final_residual(&self) -> T {
        *self.residual_history.last().expect("history starts with the initial residual")
    }

    /// CSV with header `iteration,residual`.
    pub fn write_residuals_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "residual"])?;
        for (k, r) in self.residual_history.iter().enumerate() {
            w.write_record([k.to_string(), format!("{:.16e}", r.as_f64())])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `key = value` summary block.
    pub fn summary(&self) -> String {
        format!(
            "iterations = {}\nconverged = {}\nfinal_residual = {}\nobjective = {}\npossibly_singular = {}\n",
            self.iterations,
            self.converged,
            fmt_extended(self.final_residual()),
            fmt_extended(self.objective_value),
            self.possibly_singular,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo_graph::{Metric, NodeTable};
    use crate::sampling::observe;

    fn small_graph() -> GeoGraph<f64> {
        let nodes = NodeTable::unlabeled(vec![
            (0.0, 0.0),
            (0.5, 0.2),
            (1.0, 1.0),
            (0.2, 1.4),
            (1.5, 0.1),
        ])
        .unwrap();
        GeoGraph::build(&nodes, 2, Metric::EuclideanDegrees).unwrap()
    }

    fn signal() -> TvSignal<f64> {
        TvSignal::from_fn(5, 4, |i, t| (i as f64 * 0.7).sin() + 0.3 * t as f64)
    }

    #[test]
    fn lambda_must_be_positive() {
        let g = small_graph();
        let mask = observe(vec![true; 20], &signal()).unwrap();
        assert!(ReconProblem::qiu(&g, &mask, 0.0).is_err());
        assert!(ReconProblem::qiu(&g, &mask, -1.0).is_err());
    }

    #[test]
    fn qiu_variant_rejects_shift() {
        let g = small_graph();
        let mask = observe(vec![true; 20], &signal()).unwrap();
        let op = ShiftedOperator::new(g.laplacian(), 0.5, 1.0).unwrap();
        assert!(ReconProblem::with_operator(op, &mask, 1.0, Variant::Qiu).is_err());
    }

    #[test]
    fn full_sampling_tiny_lambda_returns_observations() {
        let g = small_graph();
        let x = signal();
        let mask = observe(vec![true; 20], &x).unwrap();
        let rep = ReconProblem::sobolev(&g, &mask, 1e-9, 0.5, 1.0).unwrap().solve().unwrap();
        let err: f64 = rep
            .x_hat
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-6 * x.frobenius());
        assert!(rep.converged);
    }

    #[test]
    fn constant_in_time_has_no_regulariser() {
        let g = small_graph();
        let x = TvSignal::from_fn(5, 4, |i, _| i as f64);
        let mut mask_bits = vec![true; 20];
        mask_bits[3] = false;
        let mask = observe(mask_bits, &signal()).unwrap();
        let p = ReconProblem::sobolev(&g, &mask, 3.0, 1.0, 1.0).unwrap();
        let fid: f64 = (0..5)
            .flat_map(|i| (0..4).map(move |t| (i, t)))
            .filter(|&(i, t)| mask.is_sampled(i, t))
            .map(|(i, t)| (x.get(i, t) - mask.observed().get(i, t)).powi(2))
            .sum();
        assert!((p.objective(&x).unwrap() - 0.5 * fid).abs() < 1e-12);
    }

    #[test]
    fn zero_observations_give_zero_solution() {
        let g = small_graph();
        let mask = observe(vec![false; 20], &signal()).unwrap();
        let rep = ReconProblem::qiu(&g, &mask, 1.0).unwrap().solve().unwrap();
        assert!(rep.x_hat.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(rep.iterations, 0);
        assert!(rep.possibly_singular);
    }

    #[test]
    fn hessian_of_zero_is_zero() {
        let g = small_graph();
        let mask = observe(vec![true; 20], &signal()).unwrap();
        let p = ReconProblem::sobolev(&g, &mask, 2.0, 0.3, 2.0).unwrap();
        let h = p.hessian_apply(&TvSignal::zeros(5, 4)).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let g = small_graph();
        let x = signal();
        let bits: Vec<bool> = (0..20).map(|k| k % 3 != 1).collect();
        let mask = observe(bits, &x).unwrap();
        let p = ReconProblem::sobolev(&g, &mask, 0.8, 0.2, 1.0).unwrap();
        let rep = p.solve().unwrap();
        let grad = p.gradient(&rep.x_hat).unwrap();
        assert!(grad.frobenius() <= 2.0 * p.tol() * mask.observed().frobenius());
    }

    #[test]
    fn report_outputs() {
        let g = small_graph();
        let mask = observe(vec![true; 20], &signal()).unwrap();
        let rep = ReconProblem::qiu(&g, &mask, 1.0).unwrap().solve().unwrap();
        let mut buf = Vec::new();
        rep.write_residuals_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,residual\n0,"));
        assert_eq!(text.lines().count(), rep.residual_history.len() + 1);
        assert!(rep.summary().contains(&format!("iterations = {}", rep.iterations)));
    }
}
