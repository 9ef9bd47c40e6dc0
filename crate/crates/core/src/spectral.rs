//! Eigenstructure utilities: dense symmetric decompositions, extreme
//! eigenvalue estimation, the shifted Laplacian power `(L + εI)^β`, and the
//! conditioning checks for shifted Laplacians and Kronecker-structured
//! Hessians.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::error::{invalid, Error, Result};
use crate::scalar::{dot, Real};
use crate::sparse::CsrMatrix;
use crate::tv_signal::TvSignal;

/// Largest dimension for which dense decompositions are attempted.
pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Eigenvalues at or below this fraction of the spectral radius count as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-10;

/// Ascending eigenvalues with orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomp<T> {
    eigenvalues: Vec<T>,
    eigenvectors: DenseMatrix<T>,
}

impl<T: Real> SpectralDecomp<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DenseMatrix<T> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> T {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// `U f(Λ) Uᵀ x`.
    pub fn apply_function(&self, f: impl Fn(T) -> T, x: &[T]) -> Vec<T> {
        let u = &self.eigenvectors;
        let n = self.dim();
        let mut y = vec![T::zero(); n];
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let uk = u.column(k);
            let coeff = f(lam) * dot(uk, x);
            for (yi, &ui) in y.iter_mut().zip(uk) {
                *yi = *yi + coeff * ui;
            }
        }
        y
    }
}

/// Full symmetric eigendecomposition with the default size cap.
pub fn dense_eig<T: Real>(a: &DenseMatrix<T>) -> Result<SpectralDecomp<T>> {
    dense_eig_capped(a, DEFAULT_DENSE_CAP)
}

pub fn dense_eig_capped<T: Real>(a: &DenseMatrix<T>, cap: usize) -> Result<SpectralDecomp<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > cap {
        return Err(Error::UnsupportedConfiguration(format!(
            "dense eigendecomposition of N = {n} exceeds the cap of {cap}; use extreme_eig"
        )));
    }
    if a.asymmetry() > T::lit(1e-12) * a.max_abs().max(T::one()) {
        return invalid("matrix is not symmetric");
    }
    let eig = nalgebra::SymmetricEigen::new(a.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&k| T::lit(eig.eigenvalues[k])).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, c| T::lit(eig.eigenvectors[(i, order[c])]));
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// A symmetric linear operator applied matrix-free.
pub trait SymmetricOperator<T: Real> {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[T], y: &mut [T]);

    /// Materialises the operator by applying it to the unit basis.
    fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply_into(&e, &mut col);
            for (i, &v) in col.iter().enumerate() {
                out[(i, j)] = v;
            }
            e[j] = T::zero();
        }
        out
    }
}

impl<T: Real> SymmetricOperator<T> for CsrMatrix<T> {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.matvec_into(x, y);
    }
}

impl<T: Real> SymmetricOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub dense_cap: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 20_000,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

/// Extreme eigenvalue of a symmetric operator: a dense decomposition for the
/// minimum below the cap, Lanczos otherwise.
pub fn extreme_eig<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    which: Which,
    opts: EigOptions,
) -> Result<T> {
    let n = op.dim();
    if n == 0 {
        return invalid("empty operator");
    }
    if which == Which::Min && n <= opts.dense_cap {
        return Ok(dense_eig_capped(&op.to_dense(), n)?.min());
    }
    let (lo, hi) = lanczos_extremes(op, opts)?;
    Ok(match which {
        Which::Min => lo,
        Which::Max => hi,
    })
}

/// Both extreme eigenvalues by Lanczos with full reorthogonalisation. Stops
/// once the Ritz residual of each extreme pair is below `tol·max|θ|`.
pub fn lanczos_extremes<T: Real, O: SymmetricOperator<T> + ?Sized>(
    op: &O,
    opts: EigOptions,
) -> Result<(T, T)> {
    let n = op.dim();
    if n == 0 {
        return invalid("empty operator");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_e16e);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nq = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= nq);

    let steps = n.min(opts.max_iters.max(1));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut xt = vec![T::zero(); n];
    let mut yt = vec![T::zero(); n];
    let mut best = (f64::NAN, f64::NAN);
    for j in 0..steps {
        for (d, &v) in xt.iter_mut().zip(&q) {
            *d = T::lit(v);
        }
        op.apply_into(&xt, &mut yt);
        let mut w: Vec<f64> = yt.iter().map(|v| v.as_f64()).collect();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure("Lanczos produced a non-finite vector".into()));
        }
        let a: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bnext = w.iter().map(|v| v * v).sum::<f64>().sqrt();

        let k = alpha.len();
        let tri = nalgebra::DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::new(tri);
        let (mut imin, mut imax) = (0, 0);
        for i in 0..k {
            if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                imin = i;
            }
            if eig.eigenvalues[i] > eig.eigenvalues[imax] {
                imax = i;
            }
        }
        let (lo, hi) = (eig.eigenvalues[imin], eig.eigenvalues[imax]);
        best = (lo, hi);
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        let res_lo = bnext * eig.eigenvectors[(k - 1, imin)].abs();
        let res_hi = bnext * eig.eigenvectors[(k - 1, imax)].abs();
        let exhausted = bnext <= 1e-14 * scale || j + 1 == n;
        if exhausted || (res_lo <= opts.tol * scale && res_hi <= opts.tol * scale) {
            return Ok((T::lit(lo), T::lit(hi)));
        }
        beta.push(bnext);
        q = w.into_iter().map(|v| v / bnext).collect();
    }
    Err(Error::EstimationFailed {
        best: best.1,
        iterations: steps,
    })
}

/// How `(L + εI)^β` is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// `β = 1`: one sparse product plus a scaled add.
    SparseLinear,
    /// Integer `β ≥ 0`: that many sparse applications.
    RepeatedSparse(u32),
    /// Any other `β`, through a dense eigendecomposition.
    DenseSpectral,
}

/// `(L + εI)^β` bound to a Laplacian.
#[derive(Debug, Clone)]
pub struct ShiftedOperator<'a, T> {
    laplacian: &'a CsrMatrix<T>,
    epsilon: T,
    beta: T,
    strategy: Strategy,
    decomp: Option<Arc<SpectralDecomp<T>>>,
}

impl<'a, T: Real> ShiftedOperator<'a, T> {
    pub fn new(laplacian: &'a CsrMatrix<T>, epsilon: T, beta: T) -> Result<Self> {
        Self::with_cap(laplacian, epsilon, beta, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(laplacian: &'a CsrMatrix<T>, epsilon: T, beta: T, cap: usize) -> Result<Self> {
        let strategy = Self::validate(epsilon, beta)?;
        let decomp = match strategy {
            Strategy::DenseSpectral => {
                if laplacian.dim() > cap {
                    return Err(Error::UnsupportedConfiguration(format!(
                        "β = {beta} needs a dense eigendecomposition but N = {} exceeds the cap {cap}",
                        laplacian.dim()
                    )));
                }
                Some(Arc::new(dense_eig_capped(&laplacian.to_dense(), cap)?))
            }
            _ => None,
        };
        Ok(Self {
            laplacian,
            epsilon,
            beta,
            strategy,
            decomp,
        })
    }

    /// Reuses a precomputed decomposition of the same Laplacian.
    pub fn with_decomposition(
        laplacian: &'a CsrMatrix<T>,
        epsilon: T,
        beta: T,
        decomp: Arc<SpectralDecomp<T>>,
    ) -> Result<Self> {
        if decomp.dim() != laplacian.dim() {
            return Err(Error::DimensionMismatch("decomposition vs Laplacian".into()));
        }
        let strategy = Self::validate(epsilon, beta)?;
        Ok(Self {
            laplacian,
            epsilon,
            beta,
            strategy,
            decomp: (strategy == Strategy::DenseSpectral).then_some(decomp),
        })
    }

    fn validate(epsilon: T, beta: T) -> Result<Strategy> {
        if !(epsilon >= T::zero()) || !epsilon.is_finite() {
            return invalid(format!("epsilon = {epsilon} must be finite and >= 0"));
        }
        if !beta.is_finite() {
            return invalid("beta must be finite");
        }
        if epsilon == T::zero() && beta < T::zero() {
            return Err(Error::SingularOperator(
                "(L + 0·I)^β with β < 0 inverts a singular Laplacian".into(),
            ));
        }
        Ok(if beta == T::one() {
            Strategy::SparseLinear
        } else if beta >= T::zero() && beta.fract() == T::zero() && beta <= T::lit(64.0) {
            Strategy::RepeatedSparse(beta.to_u32().expect("small integer"))
        } else {
            Strategy::DenseSpectral
        })
    }

    /// The shared eigendecomposition when the power needs one.
    pub fn decomposition(&self) -> Option<&Arc<SpectralDecomp<T>>> {
        self.decomp.as_ref()
    }

    pub fn laplacian(&self) -> &'a CsrMatrix<T> {
        self.laplacian
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// `y = L x + ε x`; the add is skipped when `ε = 0`.
    #[inline]
    fn apply_linear(&self, x: &[T], y: &mut [T]) {
        self.laplacian.matvec_into(x, y);
        if self.epsilon != T::zero() {
            for (yi, &xi) in y.iter_mut().zip(x) {
                *yi = *yi + self.epsilon * xi;
            }
        }
    }

    /// `y = (L + εI)^β x` for one graph signal.
    pub fn apply_vec(&self, x: &[T], y: &mut [T]) {
        match self.strategy {
            Strategy::SparseLinear => self.apply_linear(x, y),
            Strategy::RepeatedSparse(0) => y.copy_from_slice(x),
            Strategy::RepeatedSparse(p) => {
                let mut cur = x.to_vec();
                for step in 0..p {
                    self.apply_linear(&cur, y);
                    if step + 1 < p {
                        cur.copy_from_slice(y);
                    }
                }
            }
            Strategy::DenseSpectral => {
                let d = self.decomp.as_ref().expect("dense strategy carries a decomposition");
                let (eps, beta) = (self.epsilon, self.beta);
                let out = d.apply_function(|lam| (lam + eps).max(T::zero()).powf(beta), x);
                y.copy_from_slice(&out);
            }
        }
    }

    /// Applies the operator to each column of a flat column-major `N x m` block.
    pub fn apply_columns(&self, x: &[T], out: &mut [T]) {
        let n = self.laplacian.dim();
        debug_assert_eq!(x.len(), out.len());
        for (xc, oc) in x.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
            self.apply_vec(xc, oc);
        }
    }

    pub fn apply_signal(&self, x: &TvSignal<T>) -> Result<TvSignal<T>> {
        if x.n_nodes() != self.laplacian.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {0}x{0}, signal has {1} nodes",
                self.laplacian.dim(),
                x.n_nodes()
            )));
        }
        let mut out = TvSignal::zeros(x.n_nodes(), x.n_steps());
        self.apply_columns(x.as_slice(), out.as_mut_slice());
        Ok(out)
    }
}

impl<T: Real> SymmetricOperator<T> for ShiftedOperator<'_, T> {
    fn dim(&self) -> usize {
        self.laplacian.dim()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.apply_vec(x, y);
    }
}

/// `(L + εI)^β X`.
pub fn apply_shifted_power<T: Real>(op: &ShiftedOperator<'_, T>, x: &TvSignal<T>) -> Result<TvSignal<T>> {
    op.apply_signal(x)
}

/// `λ_max / λ_min` for a symmetric PSD spectrum; infinite when `λ_min` is zero
/// relative to `λ_max`.
pub fn spectral_condition<T: Real>(lambda_min: T, lambda_max: T) -> T {
    if lambda_max <= T::zero() {
        return T::infinity();
    }
    if lambda_min <= T::lit(ZERO_EIGENVALUE_RTOL) * lambda_max {
        return T::infinity();
    }
    lambda_max / lambda_min
}

/// `λ_max / λ_min⁺` over the nonzero part of a PSD spectrum.
pub fn effective_condition<T: Real>(eigenvalues: &[T]) -> T {
    let top = eigenvalues.iter().copied().fold(T::zero(), T::max);
    let floor = T::lit(ZERO_EIGENVALUE_RTOL) * top;
    let bottom = eigenvalues
        .iter()
        .copied()
        .filter(|&v| v > floor)
        .fold(T::infinity(), T::min);
    if bottom.is_infinite() {
        T::infinity()
    } else {
        top / bottom
    }
}

/// Conditioning of `L + εI` with the perturbation sandwich for `Ψ = εI`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport<T> {
    pub n_nodes: usize,
    pub epsilon: T,
    pub lambda_min: T,
    pub lambda_max: T,
    /// `κ(L)`; infinite for a Laplacian.
    pub kappa_l: T,
    pub kappa_shifted: T,
    /// `σ_max(L + Ψ) / σ_max(Ψ)`.
    pub lower_bound: T,
    /// `(σ_max(L) + σ_max(Ψ)) / σ_min(L + Ψ)`.
    pub upper_bound: T,
    pub sandwich_ok: bool,
    pub weyl_ok: bool,
}

impl<T: Real> PerturbationReport<T> {
    /// One `key = value` per line.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_nodes = {}", self.n_nodes);
        for (k, v) in [
            ("epsilon", self.epsilon),
            ("lambda_min", self.lambda_min),
            ("lambda_max", self.lambda_max),
            ("kappa_l", self.kappa_l),
            ("kappa_shifted", self.kappa_shifted),
            ("lower_bound", self.lower_bound),
            ("upper_bound", self.upper_bound),
        ] {
            let _ = writeln!(s, "{k} = {}", fmt_extended(v));
        }
        let _ = writeln!(s, "sandwich_ok = {}", self.sandwich_ok);
        let _ = writeln!(s, "weyl_ok = {}", self.weyl_ok);
        s
    }
}

pub(crate) fn fmt_extended<T: Real>(v: T) -> String {
    if v.is_infinite() {
        if v > T::zero() { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.16e}", v.as_f64())
    }
}

/// `κ(L + εI) = (λ_N + ε) / (λ_1 + ε)` and the perturbation bounds.
pub fn condition_number_shifted<T: Real>(
    l: &CsrMatrix<T>,
    epsilon: T,
    opts: EigOptions,
) -> Result<PerturbationReport<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InfiniteConditionNumber);
    }
    let n = l.dim();
    let slack = T::lit(1e-10);
    let (lambda_min, lambda_max, weyl_ok) = if n <= opts.dense_cap {
        let base = dense_eig_capped(&l.to_dense(), opts.dense_cap)?;
        let shift = DenseMatrix::identity(n).scale(epsilon);
        let weyl = weyl_check(&l.to_dense(), &shift, T::lit(1e-9) * (base.max() + epsilon).max(T::one()))?;
        (base.min(), base.max(), weyl.holds)
    } else {
        let lo = extreme_eig(l, Which::Min, opts)?;
        let hi = extreme_eig(l, Which::Max, opts)?;
        let op = ShiftedOperator::new(l, epsilon, T::one())?;
        let nu_hi = extreme_eig(&op, Which::Max, opts)?;
        let tol = T::lit(opts.tol.sqrt()) * (hi + epsilon);
        let ok = (nu_hi - (hi + epsilon)).abs() <= tol;
        (lo, hi, ok)
    };
    let shifted_min = lambda_min + epsilon;
    let shifted_max = lambda_max + epsilon;
    let kappa_shifted = shifted_max / shifted_min;
    let lower_bound = shifted_max / epsilon;
    let upper_bound = (lambda_max + epsilon) / shifted_min;
    let sandwich_ok = lower_bound <= kappa_shifted * (T::one() + slack)
        && kappa_shifted <= upper_bound * (T::one() + slack);
    Ok(PerturbationReport {
        n_nodes: n,
        epsilon,
        lambda_min,
        lambda_max,
        kappa_l: spectral_condition(lambda_min, lambda_max),
        kappa_shifted,
        lower_bound,
        upper_bound,
        sandwich_ok,
        weyl_ok,
    })
}

/// Per-index margins of the eigenvalue interlacing
/// `λ_i + ψ_1 ≤ ν_i ≤ λ_i + ψ_N` for `ν = eig(L + Ψ)`.
#[derive(Debug, Clone)]
pub struct WeylReport<T> {
    pub holds: bool,
    /// `ν_i - (λ_i + ψ_1)`.
    pub lower_margins: Vec<T>,
    /// `(λ_i + ψ_N) - ν_i`.
    pub upper_margins: Vec<T>,
    pub first_violation: Option<usize>,
}

pub fn weyl_check<T: Real>(
    l: &DenseMatrix<T>,
    psi: &DenseMatrix<T>,
    slack: T,
) -> Result<WeylReport<T>> {
    if l.rows() != psi.rows() || l.cols() != psi.cols() || !l.is_square() {
        return Err(Error::DimensionMismatch("Weyl check needs equal square matrices".into()));
    }
    let lam = dense_eig(l)?;
    let psi_eig = dense_eig(psi)?;
    let nu = dense_eig(&l.add(psi)?)?;
    let (psi_1, psi_n) = (psi_eig.min(), psi_eig.max());
    let mut lower_margins = Vec::with_capacity(lam.dim());
    let mut upper_margins = Vec::with_capacity(lam.dim());
    let mut first_violation = None;
    for (i, (&li, &ni)) in lam.eigenvalues().iter().zip(nu.eigenvalues()).enumerate() {
        let lo = ni - (li + psi_1);
        let hi = (li + psi_n) - ni;
        if (lo < -slack || hi < -slack) && first_violation.is_none() {
            first_violation = Some(i);
        }
        lower_margins.push(lo);
        upper_margins.push(hi);
    }
    Ok(WeylReport {
        holds: first_violation.is_none(),
        lower_margins,
        upper_margins,
        first_violation,
    })
}

/// Eigenvalues of `D_h D_hᵀ` (the path-graph Laplacian on `M` vertices):
/// `2 - 2 cos(πk/M)`, ascending.
pub fn temporal_gram_spectrum<T: Real>(n_steps: usize) -> Vec<T> {
    let m = n_steps as f64;
    (0..n_steps)
        .map(|k| T::lit(2.0 - 2.0 * (std::f64::consts::PI * k as f64 / m).cos()))
        .collect()
}

/// Condition numbers of the regulariser blocks of the two Hessians.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianConditioning<T> {
    /// Effective `κ(D_h D_hᵀ)` over its nonzero spectrum.
    pub kappa_temporal: T,
    pub kappa_laplacian: T,
    pub kappa_shifted: T,
    /// `κ(D_h D_hᵀ) κ(L)`.
    pub kappa_qiu: T,
    /// `κ(D_h D_hᵀ) κ(L + εI)`.
    pub kappa_sobolev: T,
    pub sobolev_better: bool,
}

impl<T: Real> HessianConditioning<T> {
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("kappa_temporal", self.kappa_temporal),
            ("kappa_laplacian", self.kappa_laplacian),
            ("kappa_shifted", self.kappa_shifted),
            ("kappa_qiu", self.kappa_qiu),
            ("kappa_sobolev", self.kappa_sobolev),
        ] {
            let _ = writeln!(s, "{k} = {}", fmt_extended(v));
        }
        let _ = writeln!(s, "sobolev_better = {}", self.sobolev_better);
        s
    }
}

/// Compares `κ(λ D_hD_hᵀ ⊗ L)` with `κ(λ D_hD_hᵀ ⊗ (L + εI))` through the
/// product rule for Kronecker condition numbers (λ cancels).
pub fn hessian_condition_compare<T: Real>(
    l: &CsrMatrix<T>,
    n_steps: usize,
    lambda: T,
    epsilon: T,
    opts: EigOptions,
) -> Result<HessianConditioning<T>> {
    if n_steps < 2 {
        return invalid("need M >= 2 time steps");
    }
    if !(lambda > T::zero()) {
        return invalid("lambda must be positive");
    }
    let report = condition_number_shifted(l, epsilon, opts)?;
    let kappa_temporal = effective_condition(&temporal_gram_spectrum::<T>(n_steps));
    let kappa_qiu = kappa_temporal * report.kappa_l;
    let kappa_sobolev = kappa_temporal * report.kappa_shifted;
    Ok(HessianConditioning {
        kappa_temporal,
        kappa_laplacian: report.kappa_l,
        kappa_shifted: report.kappa_shifted,
        kappa_qiu,
        kappa_sobolev,
        sobolev_better: kappa_sobolev < kappa_qiu,
    })
}
