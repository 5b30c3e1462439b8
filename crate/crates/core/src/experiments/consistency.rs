use crate::covmat::{spectral_lower_bound_check, GridMode};
use crate::error::Result;

use super::{derive_seed, ols_slope, simulate, Check, ExperimentConfig, ExperimentReport, Summary};

const TAG: &str = "consistency";

/// Allowed distance between the fitted log-log slope of `Var(μ̂)` and
/// `α(β−2)`.
pub const SLOPE_TOLERANCE: f64 = 0.3;

/// MSE decay of both estimators along `n_list`.
pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.min_n(2)?;
    let k = cfg.se_multiplier;
    let sigma2 = cfg.sigma2();
    let law = cfg.kernel_spec()?.variance_power_law()?;
    let mut rows = Vec::new();
    let mut exact_var = Vec::new();
    let mut mc_mse = Vec::new();
    for &n in &cfg.n_list {
        let (spec, grid, model) = cfg.setup(n)?;
        let key = cfg.key(TAG).n(n);
        let nf = n as f64;

        let sb = spectral_lower_bound_check(&model, &grid)?;
        let var = sigma2 / sb.lhs;
        let tt: f64 = grid.times().iter().map(|t| t * t).sum();
        let trace_law: f64 = grid.times().iter().map(|&t| law.eval(t)).sum();
        let bound = sigma2 * trace_law / tt;
        exact_var.push(var);
        rows.push(key.row("var_mu_hat_vs_bound", var, bound, 1e-12 * bound, Check::AtMost));
        rows.push(key.flag("spectral_bound", sb.holds));

        let reps =
            simulate(&spec, &grid, &model, cfg.mu, cfg.sigma, derive_seed(cfg.master_seed, TAG, n), cfg.replications)?;
        let bias = Summary::of(reps.iter().map(|r| r.mu_hat - cfg.mu));
        let mse_mu = Summary::of(reps.iter().map(|r| (r.mu_hat - cfg.mu).powi(2)));
        let mse_s2 = Summary::of(reps.iter().map(|r| (r.sigma2_hat - sigma2).powi(2)));
        mc_mse.push(mse_mu.mean);
        rows.push(key.row("bias_mu_hat", bias.mean, 0.0, k * bias.se_mean(), Check::Within));
        rows.push(key.row("mse_mu_hat", mse_mu.mean, var, k * mse_mu.se_mean(), Check::Within));
        let oracle_s2 = (2.0 * nf - 1.0) * sigma2 * sigma2 / (nf * nf);
        rows.push(key.row("mse_sigma2_hat", mse_s2.mean, oracle_s2, k * mse_s2.se_mean(), Check::Within));
    }

    let key = cfg.key(TAG);
    rows.push(key.flag("var_mu_hat_decreasing", exact_var.windows(2).all(|w| w[1] < w[0])));
    if cfg.mode == GridMode::Power && cfg.n_list.len() >= 2 {
        let target = cfg.alpha * (law.exponent - 2.0);
        let ln_n: Vec<f64> = cfg.n_list.iter().map(|&n| (n as f64).ln()).collect();
        let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
        rows.push(key.row(
            "slope_exact_var",
            ols_slope(&ln_n, &ln(&exact_var)),
            target,
            SLOPE_TOLERANCE,
            Check::Within,
        ));
        rows.push(key.row("slope_mc_mse", ols_slope(&ln_n, &ln(&mc_mse)), target, SLOPE_TOLERANCE, Check::Within));
    }
    Ok(ExperimentReport::new(TAG, cfg.master_seed, cfg.to_json(), rows))
}
