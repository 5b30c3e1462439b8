use crate::covmat::ttt;
use crate::error::Result;
use crate::estimator::theoretical_moments;

use super::{derive_seed, simulate, Check, ExperimentConfig, ExperimentReport, Summary};

const TAG: &str = "moments";

/// Statistic of `(t'V⁻¹G, G'V⁻¹G)` whose mean is checked.
type Moment = fn(f64, f64) -> f64;

/// Monte Carlo estimator moments and Gaussian quadratic-form moments against
/// their exact values.
pub fn run_moment_checks(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.min_n(2)?;
    let k = cfg.se_multiplier;
    let sigma2 = cfg.sigma2();
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let (spec, grid, model) = cfg.setup(n)?;
        let tvt = ttt(&model, &grid)?;
        let o = theoretical_moments(n, tvt, cfg.mu, sigma2)?;
        let reps =
            simulate(&spec, &grid, &model, cfg.mu, cfg.sigma, derive_seed(cfg.master_seed, TAG, n), cfg.replications)?;
        let key = cfg.key(TAG).n(n);

        let mu = Summary::of(reps.iter().map(|r| r.mu_hat));
        let s2 = Summary::of(reps.iter().map(|r| r.sigma2_hat));
        let sq_err = Summary::of(reps.iter().map(|r| (r.sigma2_hat - sigma2).powi(2)));
        let qn = Summary::of(reps.iter().map(|r| r.q_n));
        rows.push(key.row("mean_mu_hat", mu.mean, o.mean_mu_hat, k * mu.se_mean(), Check::Within));
        rows.push(key.row("var_mu_hat", mu.var, o.var_mu_hat, k * mu.se_var(), Check::Within));
        rows.push(key.row("mean_sigma2_hat", s2.mean, o.mean_sigma2_hat, k * s2.se_mean(), Check::Within));
        rows.push(key.row("var_sigma2_hat", s2.var, o.var_sigma2_hat, k * s2.se_var(), Check::Within));
        rows.push(key.row("mse_sigma2_hat", sq_err.mean, o.mse_sigma2_hat, k * sq_err.se_mean(), Check::Within));
        rows.push(key.row("mean_Q_n", qn.mean, o.mean_q_n, k * qn.se_mean(), Check::Within));

        let lemma: [(&str, f64, Moment); 6] = [
            ("E_lin2", o.m2_linear, |l, _| l * l),
            ("E_lin4", o.m4_linear, |l, _| l.powi(4)),
            ("E_quad", o.mean_quad, |_, q| q),
            ("E_quad2", o.m2_quad, |_, q| q * q),
            ("E_quad_lin", o.cross_12, |l, q| q * l),
            ("E_quad_lin2", o.cross_22, |l, q| q * l * l),
        ];
        for (name, oracle, f) in lemma {
            let s = Summary::of(reps.iter().map(|r| f(r.lin, r.quad)));
            rows.push(key.row(name, s.mean, oracle, k * s.se_mean(), Check::Within));
        }
    }
    Ok(ExperimentReport::new(TAG, cfg.master_seed, cfg.to_json(), rows))
}
