use rand::Rng;
use rayon::prelude::*;

use crate::covmat::{build_covariance, spectral_lower_bound_check, TimeGrid};
use crate::error::Result;
use crate::kernels::{draw_admissible_params, Family, KernelSpec};
use crate::sampler::SeedSpec;

use super::{derive_seed, ols_slope, Check, ExperimentConfig, ExperimentReport, ReportRow, RowKey};

const TAG: &str = "pd-audit";

/// Relative tolerance of the diagonal power law.
pub const POWER_LAW_REL_TOL: f64 = 1e-12;
const RECONSTRUCTION_TOL: f64 = 1e-10;
const FIT_TOL: f64 = 1e-9;
/// Log-spaced diagonal probe on `[1e-3, 1e3]`.
const LAW_POINTS: usize = 61;
const LAW_LOG10_RANGE: (f64, f64) = (-3.0, 3.0);
/// Random grids: `t₁ ~ U(GRID_STEP)`, increments `~ U(GRID_STEP)`.
const GRID_STEP: (f64, f64) = (0.05, 2.0);

/// Parameters for the per-family power-law fit.
const CANONICAL: [(Family, f64, f64); 9] = [
    (Family::Xhk, 0.4, 0.6),
    (Family::Fbm, 0.75, 1.0),
    (Family::FbmOdd, 0.75, 1.0),
    (Family::SubFbm, 0.75, 1.0),
    (Family::NProc, 0.3, 1.0),
    (Family::ZProc, 0.3, 1.0),
    (Family::MixedMhk, 0.3, 0.5),
    (Family::BiFbm, 0.6, 0.8),
    (Family::SubBiFbm, 0.6, 0.8),
];

/// Strictly increasing grid with additive uniform steps.
pub fn random_additive_grid<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<TimeGrid<f64>> {
    let mut t = 0.0;
    let times = (0..n)
        .map(|_| {
            t += rng.random_range(GRID_STEP.0..GRID_STEP.1);
            t
        })
        .collect();
    TimeGrid::from_times(times)
}

fn log_spaced() -> Vec<f64> {
    let (lo, hi) = LAW_LOG10_RANGE;
    (0..LAW_POINTS).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (LAW_POINTS - 1) as f64)).collect()
}

/// Largest `|R(t,t) - c t^β| / max(1, c t^β)` over the log-spaced probe.
fn power_law_deviation(spec: &KernelSpec<f64>) -> Result<f64> {
    let law = spec.variance_power_law()?;
    let mut worst: f64 = 0.0;
    for t in log_spaced() {
        let fit = law.eval(t);
        worst = worst.max((spec.eval(t, t)? - fit).abs() / fit.max(1.0));
    }
    Ok(worst)
}

/// One factorization attempt.
struct Trial {
    pd: bool,
    min_pivot: f64,
    reconstruction: f64,
    spectral_ok: bool,
}

fn trial(spec: &KernelSpec<f64>, grid: &TimeGrid<f64>) -> Result<Trial> {
    match build_covariance(spec, grid) {
        Ok(model) => {
            let v = model.v();
            let llt = model.chol().mul_transpose_self();
            let n = v.dim();
            let mut err: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    err = err.max((llt[(i, j)] - v[(i, j)]).abs());
                }
            }
            Ok(Trial {
                pd: true,
                min_pivot: model.min_pivot(),
                reconstruction: err / v.max_abs(),
                spectral_ok: spectral_lower_bound_check(&model, grid)?.holds,
            })
        }
        Err(crate::Error::NotPositiveDefinite { .. }) => {
            Ok(Trial { pd: false, min_pivot: f64::NAN, reconstruction: f64::NAN, spectral_ok: false })
        }
        Err(e) => Err(e),
    }
}

struct Draw {
    h: f64,
    k: f64,
    /// One trial per entry of `n_list`.
    trials: Vec<Trial>,
}

fn run_draws(cfg: &ExperimentConfig, family: Family, ns: &[usize]) -> Result<Vec<Draw>> {
    let master = derive_seed(cfg.master_seed, &format!("{TAG}/{}", family.id()), 0);
    (0..cfg.draws as u64)
        .into_par_iter()
        .map(|d| {
            let mut rng = SeedSpec::new(master, d).rng();
            let (h, k) = draw_admissible_params(family, 0.0, &mut rng);
            let spec = KernelSpec::new(family, h, k)?;
            let trials =
                ns.iter().map(|&n| trial(&spec, &random_additive_grid(n, &mut rng)?)).collect::<Result<Vec<_>>>()?;
            Ok(Draw { h, k, trials })
        })
        .collect()
}

fn family_key(family: Family) -> RowKey {
    RowKey { family: Some(family), ..RowKey::new(TAG) }
}

fn catalog_rows(cfg: &ExperimentConfig, family: Family) -> Result<Vec<ReportRow>> {
    let ns = &cfg.n_list;
    let draws = run_draws(cfg, family, ns)?;
    let key = family_key(family);
    let mut rows = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let passed = draws.iter().filter(|d| d.trials[i].pd).count();
        rows.push(key.clone().n(n).row(
            "pd_pass_fraction",
            passed as f64 / draws.len() as f64,
            1.0,
            0.0,
            Check::Within,
        ));
    }
    let trials = || draws.iter().flat_map(|d| &d.trials);
    let total = trials().count();
    let pd: Vec<&Trial> = trials().filter(|t| t.pd).collect();
    rows.push(key.row("pd_pass_fraction", pd.len() as f64 / total as f64, 1.0, 0.0, Check::Within));
    let min_pivot = pd.iter().map(|t| t.min_pivot).fold(f64::INFINITY, f64::min);
    if !pd.is_empty() {
        rows.push(key.row("min_pivot", min_pivot, 0.0, 0.0, Check::Above));
        let recon = pd.iter().map(|t| t.reconstruction).fold(0.0, f64::max);
        rows.push(key.row("max_reconstruction_error", recon, 0.0, RECONSTRUCTION_TOL, Check::AtMost));
        let spectral = pd.iter().filter(|t| t.spectral_ok).count() as f64 / pd.len() as f64;
        rows.push(key.row("spectral_bound_fraction", spectral, 1.0, 0.0, Check::Within));
    }

    let mut max_beta = f64::NEG_INFINITY;
    let mut max_dev: f64 = 0.0;
    for d in &draws {
        let spec = KernelSpec::new(family, d.h, d.k)?;
        max_beta = max_beta.max(spec.variance_power_law()?.exponent);
        max_dev = max_dev.max(power_law_deviation(&spec)?);
    }
    rows.push(key.row("max_beta", max_beta, 2.0, 0.0, Check::Below));
    rows.push(key.row("power_law_max_rel_dev", max_dev, 0.0, POWER_LAW_REL_TOL, Check::AtMost));

    let &(_, h, k) = CANONICAL.iter().find(|c| c.0 == family).expect("catalog family");
    let spec = KernelSpec::new(family, h, k)?;
    let law = spec.variance_power_law()?;
    let ckey = RowKey::new(TAG).family(family, h, k);
    rows.push(ckey.row("power_law_rel_dev", power_law_deviation(&spec)?, 0.0, POWER_LAW_REL_TOL, Check::AtMost));
    rows.push(ckey.row("beta", law.exponent, 2.0, 0.0, Check::Below));
    let ts = log_spaced();
    let ln_t: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ln_r = ts.iter().map(|&t| Ok(spec.eval(t, t)?.ln())).collect::<Result<Vec<f64>>>()?;
    let beta = ols_slope(&ln_t, &ln_r);
    let ln_c = ln_r.iter().zip(&ln_t).map(|(r, t)| r - beta * t).sum::<f64>() / ts.len() as f64;
    rows.push(ckey.row("fitted_beta", beta, law.exponent, FIT_TOL, Check::Within));
    rows.push(ckey.row("fitted_log_c", ln_c, law.coefficient.ln(), FIT_TOL, Check::Within));
    Ok(rows)
}

fn counterexample_rows(cfg: &ExperimentConfig, family: Family) -> Result<Vec<ReportRow>> {
    let first_bad = if family == Family::CeCosine { 3 } else { 2 };
    let ns: Vec<usize> = cfg.n_list.iter().copied().filter(|&n| n >= first_bad).collect();
    let key = family_key(family);
    let mut rows = Vec::new();
    if ns.is_empty() {
        return Ok(rows);
    }
    let draws = run_draws(cfg, family, &ns)?;
    for (i, &n) in ns.iter().enumerate() {
        let failed = draws.iter().filter(|d| !d.trials[i].pd).count();
        rows.push(key.clone().n(n).row(
            "pd_fail_fraction",
            failed as f64 / draws.len() as f64,
            1.0,
            0.0,
            Check::Within,
        ));
    }
    if family == Family::CeCosine {
        let spec = KernelSpec::new(family, 1.0, 1.0)?;
        let grid = TimeGrid::from_times(vec![1.0, 2.0, 3.0])?;
        rows.push(key.n(3).flag("pd_fail_grid_1_2_3", !trial(&spec, &grid)?.pd));
    }
    Ok(rows)
}

/// Cholesky positive-definiteness sweep over every kernel family on random
/// admissible parameters and random grids of each size in `n_list`, plus the
/// diagonal power-law checks. `kernel`, `H`, `K` and grid settings of the
/// config are not used.
pub fn run_pd_audit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    cfg.min_n(1)?;
    let mut rows = Vec::new();
    for family in Family::CATALOG {
        rows.extend(catalog_rows(cfg, family)?);
    }
    for family in Family::COUNTEREXAMPLES {
        rows.extend(counterexample_rows(cfg, family)?);
    }
    Ok(ExperimentReport::new(TAG, cfg.master_seed, cfg.to_json(), rows))
}
