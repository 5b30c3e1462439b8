use crate::covmat::{build_covariance, TimeGrid};
use crate::error::Result;
use crate::estimator::estimate;
use crate::kernels::{Family, KernelSpec};

use super::{Check, ExperimentKind, ExperimentReport, RowKey};

const TAG: &str = "hand-oracle";
const HAND_TOL: f64 = 1e-12;

/// Brownian motion on `t = (1, 2)` with `X = (1, 3)`: `μ̂ = 3/2`, `σ̂² = 1/4`.
pub fn hand_oracle_report(seed: u64) -> Result<ExperimentReport> {
    let spec = KernelSpec::new(Family::Fbm, 0.5, 1.0)?;
    let grid = TimeGrid::from_times(vec![1.0, 2.0])?;
    let model = build_covariance(&spec, &grid)?;
    let est = estimate(&model, &grid, &[1.0, 3.0])?;
    let key = RowKey::new(TAG).family(Family::Fbm, 0.5, 1.0).n(2);
    let rows = vec![
        key.row("mu_hat", est.mu_hat, 1.5, HAND_TOL, Check::Within),
        key.row("sigma2_hat", est.sigma2_hat, 0.25, HAND_TOL, Check::Within),
    ];
    let config = serde_json::json!({ "kernel": "fbm", "H": 0.5, "t": [1.0, 2.0], "data": [1.0, 3.0] });
    Ok(ExperimentReport::new(TAG, seed, config, rows))
}

/// The hand oracle followed by every experiment under its shipped config,
/// with the master seed replaced by `seed`.
pub fn verify_all(seed: u64) -> Result<Vec<ExperimentReport>> {
    let mut reports = vec![hand_oracle_report(seed)?];
    for kind in ExperimentKind::ALL {
        let mut cfg = kind.default_config();
        cfg.master_seed = seed;
        reports.push(kind.run(&cfg)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_oracle_passes() {
        let r = hand_oracle_report(0).unwrap();
        assert!(r.passed);
        assert_eq!(r.rows.len(), 2);
    }
}
