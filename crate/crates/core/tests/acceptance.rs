//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.

use std::process::Command;
use std::time::Instant;

use gpdrift::covmat::{build_covariance, TimeGrid};
use gpdrift::estimator::estimate;
use gpdrift::experiments::{
    run_berry_esseen, run_clt, run_consistency, run_moment_checks, run_pd_audit, ExperimentConfig, ExperimentKind,
    ExperimentReport, ReportRow,
};
use gpdrift::{Family, KernelSpec};

fn verdict(id: u32, title: &str, ok: bool, started: Instant, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {id}: {tag} {title} ({:.2?}) {detail}", started.elapsed());
    assert!(ok, "criterion {id} failed: {detail}");
}

fn rows<'a>(r: &'a ExperimentReport, stats: &'a [&str]) -> impl Iterator<Item = &'a ReportRow> {
    r.rows.iter().filter(move |x| stats.contains(&x.statistic.as_str()))
}

fn failing(it: impl Iterator<Item = impl std::borrow::Borrow<ReportRow>>) -> Vec<String> {
    it.filter(|r| !r.borrow().pass)
        .map(|r| {
            let r = r.borrow();
            let fam = r.family.map(|f| f.id()).unwrap_or("-");
            format!("{fam}/{}/n={:?}: {} vs {}", r.statistic, r.n, r.empirical, r.oracle)
        })
        .collect()
}

#[test]
fn criterion_1_hand_oracle() {
    let t0 = Instant::now();
    let spec = KernelSpec::new(Family::Fbm, 0.5, 1.0).unwrap();
    let grid = TimeGrid::from_times(vec![1.0, 2.0]).unwrap();
    let model = build_covariance(&spec, &grid).unwrap();
    let est = estimate(&model, &grid, &[1.0, 3.0]).unwrap();
    let ok = (est.mu_hat - 1.5).abs() <= 1e-12 && (est.sigma2_hat - 0.25).abs() <= 1e-12;
    verdict(1, "hand-oracle estimation", ok, t0, &format!("mu_hat={} sigma2_hat={}", est.mu_hat, est.sigma2_hat));
}

#[test]
fn criterion_2_pd_witness() {
    let t0 = Instant::now();
    let cfg = ExperimentKind::PdAudit.default_config();
    assert_eq!(cfg.n_list, (2..=40).collect::<Vec<_>>());
    assert_eq!(cfg.draws, 50);
    let r = run_pd_audit(&cfg).unwrap();
    let overall: Vec<&ReportRow> =
        r.rows.iter().filter(|x| x.statistic == "pd_pass_fraction" && x.n.is_none()).collect();
    assert_eq!(overall.len(), 9);
    let fractions: Vec<String> =
        overall.iter().map(|x| format!("{}={:.3}", x.family.unwrap().id(), x.empirical)).collect();
    let ce = r.rows.iter().filter(|x| x.statistic.starts_with("pd_fail"));
    let mut bad = failing(overall.iter().copied());
    bad.extend(failing(ce));
    bad.extend(failing(rows(&r, &["min_pivot"])));
    verdict(
        2,
        "PD theorem witness",
        bad.is_empty(),
        t0,
        &format!("pass fractions [{}]; failing: {:?}", fractions.join(" "), bad),
    );
}

#[test]
fn criterion_3_power_law() {
    let t0 = Instant::now();
    let cfg = ExperimentConfig { n_list: vec![2], ..ExperimentKind::PdAudit.default_config() };
    let r = run_pd_audit(&cfg).unwrap();
    let checked = rows(&r, &["power_law_max_rel_dev", "power_law_rel_dev", "max_beta", "beta"]).count();
    let bad = failing(rows(&r, &["power_law_max_rel_dev", "power_law_rel_dev", "max_beta", "beta", "fitted_beta"]));
    let worst = rows(&r, &["power_law_max_rel_dev"]).map(|x| x.empirical).fold(0.0, f64::max);
    let ok = checked == 36 && bad.is_empty();
    verdict(3, "power-law witness", ok, t0, &format!("worst rel dev {worst:e}; failing: {bad:?}"));
}

#[test]
fn criterion_4_estimator_moments() {
    let t0 = Instant::now();
    let cfg = ExperimentKind::Moments.default_config();
    assert_eq!((cfg.n_list.as_slice(), cfg.replications, cfg.h, cfg.mu, cfg.sigma), (&[10][..], 20_000, 0.7, 2.0, 1.0));
    let r = run_moment_checks(&cfg).unwrap();
    let stats = ["mean_mu_hat", "var_mu_hat", "mean_sigma2_hat", "mse_sigma2_hat"];
    let oracle = |s| r.find(s, Some(10)).unwrap().oracle;
    assert!((oracle("mean_sigma2_hat") - 0.9).abs() < 1e-15);
    assert!((oracle("mse_sigma2_hat") - 0.19).abs() < 1e-15);
    let bad = failing(rows(&r, &stats));
    verdict(
        4,
        "exact moment formulas",
        rows(&r, &stats).count() == 4 && bad.is_empty(),
        t0,
        &format!("failing: {bad:?}"),
    );
}

#[test]
fn criterion_5_quadratic_form_lemma() {
    let t0 = Instant::now();
    let r = run_moment_checks(&ExperimentKind::Moments.default_config()).unwrap();
    let stats = ["E_lin4", "E_quad", "E_quad2", "E_quad_lin", "E_quad_lin2"];
    let bad = failing(rows(&r, &stats));
    let detail: Vec<String> =
        rows(&r, &stats).map(|x| format!("{}={:.4}/{:.4}", x.statistic, x.empirical, x.oracle)).collect();
    verdict(5, "quadratic-form moments", rows(&r, &stats).count() == 5 && bad.is_empty(), t0, &detail.join(" "));
}

#[test]
fn criterion_6_exact_laws() {
    let t0 = Instant::now();
    let cfg = ExperimentKind::Clt.default_config();
    assert_eq!((cfg.n_list.as_slice(), cfg.replications), (&[10][..], 20_000));
    let r = run_clt(&cfg).unwrap();
    let corr = r.find("corr_Y_Q", Some(10)).unwrap();
    assert!((corr.tolerance - 5.0 / (2e4f64).sqrt()).abs() < 1e-15);
    let stats = ["ks_Y_normal", "ks_chi2", "ks_Qbar_exact", "corr_Y_Q"];
    let bad = failing(rows(&r, &stats));
    let detail: Vec<String> = rows(&r, &stats).map(|x| format!("{}={:.4}", x.statistic, x.empirical)).collect();
    verdict(6, "exact finite-n laws", bad.is_empty(), t0, &detail.join(" "));
}

#[test]
fn criterion_7_berry_esseen() {
    let t0 = Instant::now();
    let cfg = ExperimentKind::BerryEsseen.default_config();
    let r = run_berry_esseen(&cfg).unwrap();
    let sweep = [5, 10, 20, 50, 100, 200, 500];
    let mut bad = failing(r.rows.iter().filter(|x| {
        x.n.is_some_and(|n| sweep.contains(&n)) && x.statistic.starts_with("sup_distance")
            || x.statistic.starts_with("ratio_r_n")
    }));
    bad.extend(failing(rows(&r, &["min_ratio"])));
    let gaps =
        r.rows.iter().filter(|x| x.statistic.starts_with("gap_reduction") || x.statistic.starts_with("gap_final"));
    assert_eq!(gaps.clone().count(), 6);
    bad.extend(failing(gaps));
    let min_r = r.find("min_ratio", None).unwrap().empirical;
    verdict(7, "Berry-Esseen exact sweep", bad.is_empty(), t0, &format!("min r_n={min_r:.5}; failing: {bad:?}"));
}

#[test]
fn criterion_8_consistency_rate() {
    let t0 = Instant::now();
    let cfg = ExperimentKind::Consistency.default_config();
    assert_eq!(cfg.n_list, vec![50, 100, 200, 400]);
    let r = run_consistency(&cfg).unwrap();
    let slope = r.find("slope_exact_var", None).unwrap();
    let bad = failing(rows(&r, &["slope_exact_var", "var_mu_hat_decreasing"]));
    verdict(
        8,
        "consistency rate",
        bad.is_empty(),
        t0,
        &format!("slope={:.4} target={}", slope.empirical, slope.oracle),
    );
}

#[test]
fn criterion_9_determinism() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_gpdrift"))
            .args(["verify-all", "--seed", "42", "--out"])
            .arg(&path)
            .env_remove("GPDRIFT_SEED")
            .status()
            .unwrap();
        (status.code(), std::fs::read(&path).unwrap())
    };
    let (code_a, a) = run("a.csv");
    let (code_b, b) = run("b.csv");
    let ok = !a.is_empty() && a == b && code_a == code_b && t0.elapsed().as_secs() < 360;
    verdict(9, "verify-all determinism", ok, t0, &format!("{} bytes, exit codes {code_a:?}/{code_b:?}", a.len()));
}
