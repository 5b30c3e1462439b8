use crate::dist::{chi2_cdf, ks_critical_1pct, ks_statistic_unsorted, qbar_cdf_exact, std_normal_cdf};
use crate::error::Result;
use crate::estimator::mean_q_n;

use super::{correlation, derive_seed, simulate, Check, ExperimentConfig, ExperimentReport, Summary};

const TAG: &str = "clt";

/// Exact finite-n laws of the standardized errors: `Yₙ ~ N(0,1)`,
/// `nσ̂²/σ² ~ χ²ₙ₋₁`, and the distance of `Q̄ₙ` from `Φ`.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.min_n(2)?;
    let k = cfg.se_multiplier;
    let sigma2 = cfg.sigma2();
    let m = cfg.replications;
    let crit = ks_critical_1pct(m);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let (spec, grid, model) = cfg.setup(n)?;
        let reps = simulate(&spec, &grid, &model, cfg.mu, cfg.sigma, derive_seed(cfg.master_seed, TAG, n), m)?;
        let key = cfg.key(TAG).n(n);
        let nf = n as f64;
        let y: Vec<f64> = reps.iter().map(|r| r.y_n).collect();
        let q: Vec<f64> = reps.iter().map(|r| r.q_n).collect();
        let qbar: Vec<f64> = reps.iter().map(|r| r.q_bar_n).collect();
        let chi: Vec<f64> = reps.iter().map(|r| nf * r.sigma2_hat / sigma2).collect();

        let ks_y = ks_statistic_unsorted(&y, std_normal_cdf)?;
        let ks_chi = ks_statistic_unsorted(&chi, |x| chi2_cdf(n - 1, x))?;
        let ks_qbar_exact = ks_statistic_unsorted(&qbar, |z| qbar_cdf_exact(n, z))?;
        let ks_qbar_normal = ks_statistic_unsorted(&qbar, std_normal_cdf)?;
        let bound = (2.0 * nf - 1.0).sqrt() / nf;
        rows.push(key.row("ks_Y_normal", ks_y, 0.0, crit, Check::AtMost));
        rows.push(key.row("ks_chi2", ks_chi, 0.0, crit, Check::AtMost));
        rows.push(key.row("ks_Qbar_exact", ks_qbar_exact, 0.0, crit, Check::AtMost));
        rows.push(key.row("ks_Qbar_normal", ks_qbar_normal, bound, crit, Check::AtMost));
        rows.push(key.row("corr_Y_Q", correlation(&y, &q), 0.0, k / (m as f64).sqrt(), Check::Within));

        let sy = Summary::of(y.iter().copied());
        let sq = Summary::of(q.iter().copied());
        rows.push(key.row("mean_Y", sy.mean, 0.0, k * sy.se_mean(), Check::Within));
        rows.push(key.row("var_Y", sy.var, 1.0, k * sy.se_var(), Check::Within));
        rows.push(key.row("mean_Q", sq.mean, mean_q_n(n), k * sq.se_mean(), Check::Within));
        rows.push(key.row("var_Q", sq.var, (nf - 1.0) / nf, k * sq.se_var(), Check::Within));
    }
    Ok(ExperimentReport::new(TAG, cfg.master_seed, cfg.to_json(), rows))
}
