//! Closed-form maximum-likelihood estimators of drift and volatility, their
//! standardized errors, and the exact finite-sample moments used as oracles.

use serde::{Deserialize, Serialize};

use crate::covmat::{whiten_pair, CovarianceModel, QuadForms, TimeGrid, Whitened};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates<T> {
    pub mu_hat: T,
    /// Always `>= 0`: computed as a whitened residual norm.
    pub sigma2_hat: T,
    pub n: usize,
    /// `t'V⁻¹t`
    pub ttt: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardized<T> {
    /// `sqrt(t'V⁻¹t) (μ̂ - μ) / σ`, exactly N(0,1).
    pub y_n: T,
    /// `sqrt(n/2) (σ̂² - σ²) / σ²`
    pub q_n: T,
    /// `Q_n - E[Q_n]` with `E[Q_n] = -1/sqrt(2n)`.
    pub q_bar_n: T,
}

/// Exact moments of the estimators and of the Gaussian quadratic forms
/// `t'V⁻¹G` and `G'V⁻¹G` under `G ~ N(0, V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOracle<T> {
    pub mean_mu_hat: T,
    pub var_mu_hat: T,
    pub mean_sigma2_hat: T,
    pub var_sigma2_hat: T,
    pub mse_sigma2_hat: T,
    pub mean_q_n: T,
    /// `E(t'V⁻¹G)² = t'V⁻¹t`
    pub m2_linear: T,
    /// `E(t'V⁻¹G)⁴ = 3 (t'V⁻¹t)²`
    pub m4_linear: T,
    /// `E(G'V⁻¹G) = n`
    pub mean_quad: T,
    /// `E(G'V⁻¹G)² = n(n+2)`
    pub m2_quad: T,
    /// `E(G'V⁻¹G · t'V⁻¹G) = 0`
    pub cross_12: T,
    /// `E(G'V⁻¹G · (t'V⁻¹G)²) = (n+2) t'V⁻¹t`
    pub cross_22: T,
}

/// Estimates from already whitened vectors (`L a = t`, `L b = X`).
pub fn estimate_whitened<T: Scalar>(w: &Whitened<T>) -> Result<Estimates<T>> {
    let n = w.a.len();
    if n < 2 {
        return Err(Error::InsufficientObservations { needed: 2, found: n });
    }
    let ttt = dot(&w.a, &w.a);
    let mu_hat = dot(&w.a, &w.b) / ttt;
    let rss: T = w.a.iter().zip(&w.b).map(|(&a, &b)| (b - mu_hat * a).powi(2)).sum();
    Ok(Estimates { mu_hat, sigma2_hat: rss / T::from_count(n), n, ttt })
}

pub fn estimate<T: Scalar>(model: &CovarianceModel<T>, grid: &TimeGrid<T>, x: &[T]) -> Result<Estimates<T>> {
    estimate_whitened(&whiten_pair(model, grid, x)?)
}

/// Drift estimate alone; defined for `n >= 1`.
pub fn estimate_drift<T: Scalar>(model: &CovarianceModel<T>, grid: &TimeGrid<T>, x: &[T]) -> Result<T> {
    let q = whiten_pair(model, grid, x)?.quad_forms();
    Ok(q.ttx / q.ttt)
}

/// Volatility estimate written as the difference of quadratic-form products.
/// Kept as a cross-check for the residual form; it can go slightly negative
/// under roundoff.
pub fn sigma2_from_quad_forms<T: Scalar>(q: &QuadForms<T>, n: usize) -> T {
    (q.xtx * q.ttt - q.ttx * q.ttx) / (T::from_count(n) * q.ttt)
}

pub fn standardize<T: Scalar>(est: &Estimates<T>, mu_true: T, sigma2_true: T) -> Result<Standardized<T>> {
    if !(sigma2_true > T::zero()) {
        return Err(Error::NonPositiveSigma2(sigma2_true.as_f64()));
    }
    let n = T::from_count(est.n);
    let two = T::lit(2.0);
    let y_n = est.ttt.sqrt() * (est.mu_hat - mu_true) / sigma2_true.sqrt();
    let q_n = (n / two).sqrt() * (est.sigma2_hat - sigma2_true) / sigma2_true;
    let q_bar_n = q_n + T::one() / (two * n).sqrt();
    Ok(Standardized { y_n, q_n, q_bar_n })
}

/// `E[Q_n] = -1/sqrt(2n)`.
pub fn mean_q_n<T: Scalar>(n: usize) -> T {
    -T::one() / (T::lit(2.0) * T::from_count(n)).sqrt()
}

pub fn theoretical_moments<T: Scalar>(n: usize, ttt: T, mu: T, sigma2: T) -> Result<MomentOracle<T>> {
    if n < 2 {
        return Err(Error::InsufficientObservations { needed: 2, found: n });
    }
    if !(ttt > T::zero()) {
        return Err(Error::NonPositiveArgument(ttt.as_f64()));
    }
    if !(sigma2 > T::zero()) {
        return Err(Error::NonPositiveSigma2(sigma2.as_f64()));
    }
    let nf = T::from_count(n);
    let one = T::one();
    let two = T::lit(2.0);
    let s4 = sigma2 * sigma2;
    Ok(MomentOracle {
        mean_mu_hat: mu,
        var_mu_hat: sigma2 / ttt,
        mean_sigma2_hat: (nf - one) * sigma2 / nf,
        var_sigma2_hat: two * (nf - one) * s4 / (nf * nf),
        mse_sigma2_hat: (two * nf - one) * s4 / (nf * nf),
        mean_q_n: mean_q_n(n),
        m2_linear: ttt,
        m4_linear: T::lit(3.0) * ttt * ttt,
        mean_quad: nf,
        m2_quad: nf * (nf + two),
        cross_12: T::zero(),
        cross_22: (nf + two) * ttt,
    })
}

/// JSON shape of an estimation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub n: usize,
    pub ttt: f64,
    #[serde(rename = "Y_n", skip_serializing_if = "Option::is_none", default)]
    pub y_n: Option<f64>,
    #[serde(rename = "Q_n", skip_serializing_if = "Option::is_none", default)]
    pub q_n: Option<f64>,
    #[serde(rename = "Q_bar_n", skip_serializing_if = "Option::is_none", default)]
    pub q_bar_n: Option<f64>,
}

impl EstimateRecord {
    pub fn new<T: Scalar>(est: &Estimates<T>, std: Option<&Standardized<T>>) -> Self {
        Self {
            mu_hat: est.mu_hat.as_f64(),
            sigma2_hat: est.sigma2_hat.as_f64(),
            n: est.n,
            ttt: est.ttt.as_f64(),
            y_n: std.map(|s| s.y_n.as_f64()),
            q_n: std.map(|s| s.q_n.as_f64()),
            q_bar_n: std.map(|s| s.q_bar_n.as_f64()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmat::{build_covariance, make_grid, GridMode};
    use crate::kernels::{Family, KernelSpec};

    fn bm2() -> (CovarianceModel<f64>, TimeGrid<f64>) {
        let spec = KernelSpec::new(Family::Fbm, 0.5, 1.0).unwrap();
        let grid = make_grid(2, GridMode::Power, 1.0, 1.0).unwrap();
        (build_covariance(&spec, &grid).unwrap(), grid)
    }

    #[test]
    fn hand_oracle() {
        let (model, grid) = bm2();
        let est = estimate(&model, &grid, &[1.0, 3.0]).unwrap();
        assert!((est.mu_hat - 1.5).abs() < 1e-12);
        assert!((est.sigma2_hat - 0.25).abs() < 1e-12);
        assert_eq!(est.n, 2);
        assert_eq!(est.ttt, 2.0);
    }

    #[test]
    fn noiseless_and_homogeneity() {
        let spec = KernelSpec::new(Family::SubFbm, 0.3, 1.0).unwrap();
        let grid = make_grid(6, GridMode::Power, 1.2, 0.5).unwrap();
        let model = build_covariance(&spec, &grid).unwrap();
        let x: Vec<f64> = grid.times().iter().map(|t| -0.75 * t).collect();
        let est = estimate(&model, &grid, &x).unwrap();
        assert!((est.mu_hat + 0.75).abs() < 1e-12);
        assert!(est.sigma2_hat < 1e-24);

        let x = [0.3, -0.2, 1.1, 0.9, 2.5, 1.7];
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = estimate(&model, &grid, &x).unwrap();
        let b = estimate(&model, &grid, &x2).unwrap();
        assert!((b.mu_hat - 2.0 * a.mu_hat).abs() < 1e-12);
        assert!((b.sigma2_hat - 4.0 * a.sigma2_hat).abs() < 1e-12 * b.sigma2_hat.max(1.0));
    }

    #[test]
    fn drift_only_at_single_observation() {
        let model =
            CovarianceModel::from_matrix(crate::linalg::DenseMatrix::from_rows(&[vec![2.0_f64]]).unwrap()).unwrap();
        let grid = TimeGrid::from_times(vec![2.0]).unwrap();
        assert!((estimate_drift(&model, &grid, &[3.0]).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(estimate(&model, &grid, &[3.0]), Err(Error::InsufficientObservations { needed: 2, found: 1 }));
    }

    #[test]
    fn standardize_examples() {
        let est = Estimates { mu_hat: 0.3_f64, sigma2_hat: 2.0, n: 8, ttt: 5.0 };
        let s = standardize(&est, 0.3, 2.0).unwrap();
        assert_eq!((s.y_n, s.q_n), (0.0, 0.0));
        assert!((s.q_bar_n - 0.25).abs() < 1e-15);

        let (model, grid) = bm2();
        let est = estimate(&model, &grid, &[1.0, 3.0]).unwrap();
        let s = standardize(&est, 1.0, 1.0).unwrap();
        assert!((s.y_n - 0.5 * 2.0_f64.sqrt()).abs() < 1e-12);
        assert!((s.q_n + 0.75).abs() < 1e-12);
        assert!((s.q_bar_n + 0.25).abs() < 1e-12);
        assert_eq!(mean_q_n::<f64>(2), -0.5);
        assert_eq!(standardize(&est, 1.0, 0.0), Err(Error::NonPositiveSigma2(0.0)));
    }

    #[test]
    fn moment_oracle_examples() {
        let m = theoretical_moments(2, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(m.var_mu_hat, 0.5);
        assert_eq!(m.mean_sigma2_hat, 0.5);
        assert_eq!(m.mse_sigma2_hat, 0.75);
        assert_eq!(m.mean_q_n, -0.5);
        let m = theoretical_moments(3, 2.0, 1.0, 1.0).unwrap();
        assert_eq!((m.m4_linear, m.mean_quad, m.m2_quad, m.cross_22), (12.0, 3.0, 15.0, 10.0));
        assert_eq!(m.cross_12, 0.0);
        let m = theoretical_moments(10, 3.7_f64, 2.0, 1.3).unwrap();
        let bias = m.mean_sigma2_hat - 1.3;
        assert!((m.var_sigma2_hat - (m.mse_sigma2_hat - bias * bias)).abs() < 1e-14);
        assert!(theoretical_moments(1, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn record_json_keys() {
        let est = Estimates { mu_hat: 1.5, sigma2_hat: 0.25, n: 2, ttt: 2.0 };
        let json = serde_json::to_string(&EstimateRecord::new(&est, None)).unwrap();
        assert_eq!(json, r#"{"mu_hat":1.5,"sigma2_hat":0.25,"n":2,"ttt":2.0}"#);
        let s = standardize(&est, 1.0, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(EstimateRecord::new(&est, Some(&s))).unwrap();
        for key in ["mu_hat", "sigma2_hat", "n", "ttt", "Y_n", "Q_n", "Q_bar_n"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
