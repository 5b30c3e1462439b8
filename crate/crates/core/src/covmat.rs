//! Observation grids, covariance assembly and the `V⁻¹` contractions behind
//! the estimators and the likelihood.
//!
//! `V⁻¹` is never formed. Every contraction goes through forward solves
//! against the Cholesky factor `L` of `V = L Lᵀ`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::fmt_g17;
use crate::kernels::KernelSpec;
use crate::linalg::{cholesky, dot, forward_solve, DenseMatrix};
use crate::scalar::Scalar;

/// Relative pivot threshold: a pivot must exceed `PD_REL_TOL * max diag(V)`.
pub const PD_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// `t_i = scale * i^alpha`
    Power,
    /// `t_i = scale * ratio^i`
    Geometric,
    /// Caller-supplied times.
    Explicit,
}

impl std::str::FromStr for GridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(GridMode::Power),
            "geometric" => Ok(GridMode::Geometric),
            "explicit" => Ok(GridMode::Explicit),
            _ => Err(Error::InvalidGridParams(format!("unknown grid mode '{s}'"))),
        }
    }
}

/// Strictly increasing positive observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    times: Vec<T>,
    mode: GridMode,
    /// Power exponent, geometric ratio, or NaN for explicit grids.
    param: T,
    scale: T,
}

impl<T: Scalar> TimeGrid<T> {
    /// Wraps caller-supplied times after checking `0 < t₁ < … < tₙ`.
    pub fn from_times(times: Vec<T>) -> Result<Self> {
        check_times(&times)?;
        Ok(Self { times, mode: GridMode::Explicit, param: T::nan(), scale: T::one() })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn param(&self) -> T {
        self.param
    }

    pub fn scale(&self) -> T {
        self.scale
    }
}

fn check_times<T: Scalar>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGridParams("grid needs at least one time".into()));
    }
    if !(times[0] > T::zero()) {
        return Err(Error::InvalidGridParams(format!("first time must be positive, got {}", times[0])));
    }
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGridParams(format!(
            "times must be strictly increasing (t[{}] = {}, t[{}] = {})",
            i,
            times[i],
            i + 1,
            times[i + 1]
        )));
    }
    if !times[times.len() - 1].is_finite() {
        return Err(Error::InvalidGridParams("times overflow".into()));
    }
    Ok(())
}

/// Builds a power (`scale * i^alpha`) or geometric (`scale * a^i`) grid,
/// `i = 1..=n`.
pub fn make_grid<T: Scalar>(n: usize, mode: GridMode, alpha_or_ratio: T, scale: T) -> Result<TimeGrid<T>> {
    if n == 0 {
        return Err(Error::InvalidGridParams("n must be at least 1".into()));
    }
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::InvalidGridParams(format!("scale must be positive, got {scale}")));
    }
    let times: Vec<T> = match mode {
        GridMode::Power => {
            if !(alpha_or_ratio > T::zero()) || !alpha_or_ratio.is_finite() {
                return Err(Error::InvalidGridParams(format!("alpha must be positive, got {alpha_or_ratio}")));
            }
            (1..=n).map(|i| scale * T::from_count(i).powf(alpha_or_ratio)).collect()
        }
        GridMode::Geometric => {
            if !(alpha_or_ratio > T::one()) || !alpha_or_ratio.is_finite() {
                return Err(Error::InvalidGridParams(format!("geometric ratio must exceed 1, got {alpha_or_ratio}")));
            }
            (1..=n).map(|i| scale * alpha_or_ratio.powi(i as i32)).collect()
        }
        GridMode::Explicit => {
            return Err(Error::InvalidGridParams("explicit grids are built with TimeGrid::from_times".into()))
        }
    };
    check_times(&times)?;
    Ok(TimeGrid { times, mode, param: alpha_or_ratio, scale })
}

/// `V = (R(tᵢ, tⱼ))` with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel<T> {
    v: DenseMatrix<T>,
    chol: DenseMatrix<T>,
    min_pivot: T,
    trace: T,
}

impl<T: Scalar> CovarianceModel<T> {
    /// Factors an already assembled covariance matrix.
    pub fn from_matrix(v: DenseMatrix<T>) -> Result<Self> {
        let chol = cholesky(&v, T::lit(PD_REL_TOL))?;
        let min_pivot = chol.diagonal().fold(T::infinity(), |m, x| m.min(x));
        let trace = v.trace();
        Ok(Self { v, chol, min_pivot, trace })
    }

    pub fn v(&self) -> &DenseMatrix<T> {
        &self.v
    }

    /// Lower-triangular `L` with `V = L Lᵀ`.
    pub fn chol(&self) -> &DenseMatrix<T> {
        &self.chol
    }

    /// Smallest diagonal entry of `L`.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn trace(&self) -> T {
        self.trace
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// `log |V| = 2 Σ log Lᵢᵢ`.
    pub fn log_det(&self) -> T {
        T::lit(2.0) * self.chol.diagonal().map(|x| x.ln()).sum::<T>()
    }

    /// Solves `L y = x`.
    pub fn whiten(&self, x: &[T]) -> Result<Vec<T>> {
        forward_solve(&self.chol, x)
    }

    /// Writes `V` as row-major CSV with full-precision fields.
    pub fn write_v_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix_csv(&self.v, out)
    }

    /// Writes `L` as row-major CSV with full-precision fields.
    pub fn write_chol_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_matrix_csv(&self.chol, out)
    }
}

/// Assembles `V` on `grid` and factors it. Counterexample kernels are
/// accepted here so that their positive-definiteness failure is observable.
pub fn build_covariance<T: Scalar>(spec: &KernelSpec<T>, grid: &TimeGrid<T>) -> Result<CovarianceModel<T>> {
    let t = grid.times();
    let n = t.len();
    let mut v = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let r = spec.eval_unchecked(t[j], t[i]);
            v[(i, j)] = r;
            v[(j, i)] = r;
        }
    }
    CovarianceModel::from_matrix(v)
}

pub fn write_matrix_csv<T: Scalar, W: Write>(m: &DenseMatrix<T>, mut out: W) -> io::Result<()> {
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|x| fmt_g17(x.as_f64())).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// `t'V⁻¹t`, `t'V⁻¹X`, `X'V⁻¹X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForms<T> {
    pub ttt: T,
    pub ttx: T,
    pub xtx: T,
}

/// Whitened time and observation vectors: `L a = t`, `L b = X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitened<T> {
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Whitened<T> {
    pub fn quad_forms(&self) -> QuadForms<T> {
        QuadForms { ttt: dot(&self.a, &self.a), ttx: dot(&self.a, &self.b), xtx: dot(&self.b, &self.b) }
    }
}

fn check_dims<T: Scalar>(model: &CovarianceModel<T>, grid: &TimeGrid<T>, x: Option<&[T]>) -> Result<()> {
    let n = model.dim();
    if grid.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: grid.len() });
    }
    if let Some(x) = x {
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
    }
    Ok(())
}

pub fn whiten_pair<T: Scalar>(model: &CovarianceModel<T>, grid: &TimeGrid<T>, x: &[T]) -> Result<Whitened<T>> {
    check_dims(model, grid, Some(x))?;
    Ok(Whitened { a: model.whiten(grid.times())?, b: model.whiten(x)? })
}

pub fn quadratic_forms<T: Scalar>(model: &CovarianceModel<T>, grid: &TimeGrid<T>, x: &[T]) -> Result<QuadForms<T>> {
    Ok(whiten_pair(model, grid, x)?.quad_forms())
}

/// `t'V⁻¹t` alone.
pub fn ttt<T: Scalar>(model: &CovarianceModel<T>, grid: &TimeGrid<T>) -> Result<T> {
    check_dims(model, grid, None)?;
    let a = model.whiten(grid.times())?;
    Ok(dot(&a, &a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBound<T> {
    /// `t'V⁻¹t`
    pub lhs: T,
    /// `t't / trace(V)`, a lower bound since `λ_max <= trace(V)`.
    pub rhs: T,
    pub holds: bool,
}

pub fn spectral_lower_bound_check<T: Scalar>(
    model: &CovarianceModel<T>,
    grid: &TimeGrid<T>,
) -> Result<SpectralBound<T>> {
    let lhs = ttt(model, grid)?;
    let tt: T = grid.times().iter().map(|&t| t * t).sum();
    let rhs = tt / model.trace();
    Ok(SpectralBound { lhs, rhs, holds: lhs >= rhs - T::lit(1e-10) })
}

/// Exact Gaussian log-likelihood of `X = μt + σG`, `G ~ N(0, V)`.
pub fn log_likelihood<T: Scalar>(
    model: &CovarianceModel<T>,
    grid: &TimeGrid<T>,
    x: &[T],
    mu: T,
    sigma2: T,
) -> Result<T> {
    if !(sigma2 > T::zero()) {
        return Err(Error::NonPositiveSigma2(sigma2.as_f64()));
    }
    check_dims(model, grid, Some(x))?;
    let resid: Vec<T> = x.iter().zip(grid.times()).map(|(&xi, &ti)| xi - mu * ti).collect();
    let r = model.whiten(&resid)?;
    let n = T::from_count(x.len());
    let half = T::lit(0.5);
    let two_pi = T::lit(2.0) * T::PI();
    Ok(-half * n * (two_pi * sigma2).ln() - half * model.log_det() - dot(&r, &r) / (T::lit(2.0) * sigma2))
}
