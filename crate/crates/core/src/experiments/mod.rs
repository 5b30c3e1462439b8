//! Seeded Monte Carlo and exact-evaluation harness.
//!
//! Each experiment turns an [`ExperimentConfig`] into an [`ExperimentReport`]
//! whose rows pair an empirical value with its oracle and tolerance. Monte
//! Carlo tolerances are `se_multiplier` standard errors (default 5).
//!
//! Replication `r` of experiment `tag` at sample size `n` draws from
//! `SeedSpec::new(derive_seed(master, tag, n), r)`. Replications run on the
//! rayon pool and are collected in index order, so reports do not depend on
//! the thread count.

mod berry_esseen;
mod clt;
mod consistency;
mod moments;
mod pd_audit;
mod report;
mod verify;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covmat::Whitened;
use crate::covmat::{build_covariance, make_grid, CovarianceModel, GridMode, TimeGrid};
use crate::error::{Error, Result};
use crate::estimator::{estimate_whitened, standardize};
use crate::kernels::{Family, KernelSpec};
use crate::linalg::dot;
use crate::sampler::{sample_path, SeedSpec};

pub use berry_esseen::{run_berry_esseen, BE_GAP_FACTOR, BE_GAP_MAX, BE_MIN_RATIO};
pub use clt::run_clt;
pub use consistency::{run_consistency, SLOPE_TOLERANCE};
pub use moments::run_moment_checks;
pub use pd_audit::{random_additive_grid, run_pd_audit, POWER_LAW_REL_TOL};
pub use report::{Check, ExperimentReport, ReportRow, RowKey, CSV_HEADER};
pub use verify::{hand_oracle_report, verify_all};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Consistency,
    Clt,
    BerryEsseen,
    Moments,
    PdAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Consistency,
        ExperimentKind::Clt,
        ExperimentKind::BerryEsseen,
        ExperimentKind::Moments,
        ExperimentKind::PdAudit,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::Clt => "clt",
            ExperimentKind::BerryEsseen => "berry-esseen",
            ExperimentKind::Moments => "moments",
            ExperimentKind::PdAudit => "pd-audit",
        }
    }

    /// Shipped default configuration.
    pub fn default_config(self) -> ExperimentConfig {
        let text = match self {
            ExperimentKind::Consistency => include_str!("../../configs/consistency.json"),
            ExperimentKind::Clt => include_str!("../../configs/clt.json"),
            ExperimentKind::BerryEsseen => include_str!("../../configs/berry-esseen.json"),
            ExperimentKind::Moments => include_str!("../../configs/moments.json"),
            ExperimentKind::PdAudit => include_str!("../../configs/pd-audit.json"),
        };
        serde_json::from_str(text).expect("shipped config parses")
    }

    pub fn run(self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        match self {
            ExperimentKind::Consistency => run_consistency(cfg),
            ExperimentKind::Clt => run_clt(cfg),
            ExperimentKind::BerryEsseen => run_berry_esseen(cfg),
            ExperimentKind::Moments => run_moment_checks(cfg),
            ExperimentKind::PdAudit => run_pd_audit(cfg),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

/// Parameters of one experiment run. JSON keys match the CLI flag names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: Family,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub mode: GridMode,
    /// Power exponent or geometric ratio.
    pub alpha: f64,
    pub scale: f64,
    #[serde(rename = "n")]
    pub n_list: Vec<usize>,
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "reps")]
    pub replications: usize,
    #[serde(rename = "seed")]
    pub master_seed: u64,
    pub z_probe: Vec<f64>,
    pub se_multiplier: f64,
    /// Parameter draws per family in the PD audit.
    pub draws: usize,
    /// z-grid nodes for the sup-distance scan.
    pub points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kernel: Family::Fbm,
            h: 0.7,
            k: 1.0,
            mode: GridMode::Power,
            alpha: 1.0,
            scale: 1.0,
            n_list: vec![10],
            mu: 2.0,
            sigma: 1.0,
            replications: 20_000,
            master_seed: 42,
            z_probe: vec![-1.0, 0.0, 1.0],
            se_multiplier: 5.0,
            draws: 50,
            points: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replications < 100 {
            return bad(format!("reps must be at least 100, got {}", self.replications));
        }
        if self.n_list.is_empty() {
            return bad("n list is empty".into());
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return bad("n list must be strictly increasing".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::NonPositiveSigma(self.sigma));
        }
        if !self.mu.is_finite() {
            return bad(format!("mu must be finite, got {}", self.mu));
        }
        if !(self.se_multiplier > 0.0 && self.se_multiplier.is_finite()) {
            return bad(format!("se_multiplier must be positive, got {}", self.se_multiplier));
        }
        if self.z_probe.iter().any(|z| !z.is_finite()) {
            return bad("z_probe values must be finite".into());
        }
        if self.points < 100 {
            return bad(format!("points must be at least 100, got {}", self.points));
        }
        if self.draws == 0 {
            return bad("draws must be positive".into());
        }
        if self.mode == GridMode::Explicit {
            return Err(Error::InvalidGridParams("experiments need a power or geometric grid".into()));
        }
        self.kernel_spec()?;
        make_grid(1, self.mode, self.alpha, self.scale)?;
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec<f64>> {
        KernelSpec::new(self.kernel, self.h, self.k)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    fn sigma2(&self) -> f64 {
        self.sigma * self.sigma
    }

    fn min_n(&self, needed: usize) -> Result<()> {
        match self.n_list.first() {
            Some(&n) if n < needed => Err(Error::InsufficientObservations { needed, found: n }),
            _ => Ok(()),
        }
    }

    /// Grid and covariance model for one sample size.
    fn setup(&self, n: usize) -> Result<(KernelSpec<f64>, TimeGrid<f64>, CovarianceModel<f64>)> {
        let spec = self.kernel_spec()?;
        spec.require_catalog()?;
        let grid = make_grid(n, self.mode, self.alpha, self.scale)?;
        let model = build_covariance(&spec, &grid)?;
        Ok((spec, grid, model))
    }

    fn key(&self, experiment: &str) -> RowKey {
        RowKey::new(experiment).family(self.kernel, self.h, self.k)
    }
}

/// Per-(experiment, n) master seed: FNV-1a over the tag, mixed with `n` and
/// the master seed through the SplitMix64 finalizer.
pub fn derive_seed(master: u64, tag: &str, n: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = master ^ h ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything measured on one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replication {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub y_n: f64,
    pub q_n: f64,
    pub q_bar_n: f64,
    /// `t'V⁻¹G`
    pub lin: f64,
    /// `G'V⁻¹G`
    pub quad: f64,
}

/// Simulates `reps` paths in parallel; output is in replication order.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    spec: &KernelSpec<f64>,
    grid: &TimeGrid<f64>,
    model: &CovarianceModel<f64>,
    mu: f64,
    sigma: f64,
    master: u64,
    reps: usize,
) -> Result<Vec<Replication>> {
    let a = model.whiten(grid.times())?;
    let sigma2 = sigma * sigma;
    (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let path = sample_path(spec, grid, model, mu, sigma, SeedSpec::new(master, r))?;
            let w = Whitened { a: a.clone(), b: model.whiten(&path.x)? };
            let est = estimate_whitened(&w)?;
            let st = standardize(&est, mu, sigma2)?;
            let wg = model.whiten(&path.g)?;
            Ok(Replication {
                mu_hat: est.mu_hat,
                sigma2_hat: est.sigma2_hat,
                y_n: st.y_n,
                q_n: st.q_n,
                q_bar_n: st.q_bar_n,
                lin: dot(&a, &wg),
                quad: dot(&wg, &wg),
            })
        })
        .collect()
}

/// Sample summary with standard errors for the mean and the variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub m: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// Fourth central moment.
    pub m4: f64,
}

impl Summary {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let m = xs.len();
        let mf = m as f64;
        let mean = xs.iter().sum::<f64>() / mf;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (mf - 1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / mf;
        Self { m, mean, var, m4 }
    }

    pub fn se_mean(&self) -> f64 {
        (self.var / self.m as f64).sqrt()
    }

    /// Delta-method standard error of the sample variance.
    pub fn se_var(&self) -> f64 {
        ((self.m4 - self.var * self.var).max(0.0) / self.m as f64).sqrt()
    }
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let sx = Summary::of(x.iter().copied());
    let sy = Summary::of(y.iter().copied());
    let cov = x.iter().zip(y).map(|(a, b)| (a - sx.mean) * (b - sy.mean)).sum::<f64>() / (x.len() as f64 - 1.0);
    cov / (sx.var * sy.var).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
