use rayon::prelude::*;

use crate::dist::{qbar_cdf_exact, std_normal_cdf, std_normal_third_derivative, sup_distance_default};
use crate::error::{Error, Result};
use crate::fmt::fmt_g17;

use super::{Check, ExperimentConfig, ExperimentReport, RowKey};

const TAG: &str = "berry-esseen";

/// Required lower bound on `min rₙ` over `n >= BE_N0`.
pub const BE_MIN_RATIO: f64 = 0.1;
/// `|gap(BE_GAP_FINAL_N)|` must be below `|gap(BE_GAP_REF_N)| / BE_GAP_FACTOR`.
pub const BE_GAP_FACTOR: f64 = 5.0;
/// Absolute ceiling on `|gap(BE_GAP_FINAL_N)|`.
pub const BE_GAP_MAX: f64 = 0.01;
const BE_RATIO_SLACK: f64 = 1e-9;
const BE_N0: usize = 5;
const BE_GAP_REF_N: usize = 100;
const BE_GAP_FINAL_N: usize = 10_000;
const BE_MAX_N: usize = 100_000;

/// Exact evaluation of the normal-approximation error of `Q̄ₙ`; no
/// randomness is involved.
pub fn run_berry_esseen(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if let Some(&n) = cfg.n_list.iter().find(|&&n| !(2..=BE_MAX_N).contains(&n)) {
        return Err(Error::InvalidConfig(format!("berry-esseen needs n in [2, {BE_MAX_N}], got {n}")));
    }
    let key = RowKey::new(TAG);
    let sups =
        cfg.n_list.par_iter().map(|&n| sup_distance_default::<f64>(n, cfg.points)).collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    // gaps[z][i] for n_list[i]
    let mut gaps = vec![Vec::new(); cfg.z_probe.len()];
    for (&n, sup) in cfg.n_list.iter().zip(&sups) {
        let key = key.clone().n(n);
        let nf = n as f64;
        let scale = nf / (2.0 * nf - 1.0).sqrt();
        let b_n = 1.0 / scale;
        let r_n = scale * sup.d;
        ratios.push((n, r_n));
        rows.push(key.row("sup_distance", sup.d, b_n, 0.0, Check::AtMost));
        rows.push(key.row("ratio_r_n", r_n, 1.0, BE_RATIO_SLACK, Check::AtMost));
        rows.push(key.row("ratio_r_n_positive", r_n, 0.0, 0.0, Check::Above));
        for (j, &z) in cfg.z_probe.iter().enumerate() {
            let dev = scale * (qbar_cdf_exact(n, z) - std_normal_cdf(z));
            let limit = -std_normal_third_derivative(z) / 3.0;
            gaps[j].push((n, dev - limit));
            rows.push(key.row(format!("scaled_dev_z={}", fmt_g17(z)), dev, limit, 1.0 + limit.abs(), Check::Within));
        }
    }

    let tail: Vec<f64> = ratios.iter().filter(|(n, _)| *n >= BE_N0).map(|&(_, r)| r).collect();
    if !tail.is_empty() {
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(key.row("min_ratio", min, BE_MIN_RATIO, 0.0, Check::Above));
    }
    let decreasing = sups.windows(2).all(|w| w[1].d < w[0].d);
    rows.push(key.flag("sup_distance_decreasing", decreasing));

    for (j, &z) in cfg.z_probe.iter().enumerate() {
        let zs = fmt_g17(z);
        let at = |n: usize| gaps[j].iter().find(|(m, _)| *m == n).map(|&(_, g)| g.abs());
        let late: Vec<f64> = gaps[j].iter().filter(|(n, _)| *n >= BE_GAP_REF_N).map(|&(_, g)| g.abs()).collect();
        if late.len() >= 2 {
            rows.push(key.flag(format!("gap_decreasing_z={zs}"), late.windows(2).all(|w| w[1] < w[0])));
        }
        if let (Some(g_ref), Some(g_fin)) = (at(BE_GAP_REF_N), at(BE_GAP_FINAL_N)) {
            let fkey = key.clone().n(BE_GAP_FINAL_N);
            rows.push(fkey.row(format!("gap_reduction_z={zs}"), g_fin, g_ref / BE_GAP_FACTOR, 0.0, Check::Below));
            rows.push(fkey.row(format!("gap_final_z={zs}"), g_fin, BE_GAP_MAX, 0.0, Check::Below));
        }
    }
    Ok(ExperimentReport::new(TAG, cfg.master_seed, cfg.to_json(), rows))
}
