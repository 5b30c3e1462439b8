//! Special functions against statrs as an independent implementation.

use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use gpdrift::dist::{chi2_cdf, gamma_p, log_gamma, std_normal_cdf};

proptest! {
    #[test]
    fn log_gamma_agrees(x in 0.05f64..200.0) {
        let ours: f64 = log_gamma(x).unwrap();
        prop_assert!((ours - ln_gamma(x)).abs() <= 1e-12 * (1.0 + ln_gamma(x).abs()), "x={}", x);
    }

    #[test]
    fn gamma_p_agrees(a in 0.1f64..300.0, x in 0.0f64..400.0) {
        let ours: f64 = gamma_p(a, x);
        prop_assert!((ours - gamma_lr(a, x)).abs() <= 1e-11, "a={} x={}", a, x);
    }

    #[test]
    fn chi2_agrees(k in 1usize..2000, u in 0.0f64..3.0) {
        let x = u * k as f64;
        let reference = ChiSquared::new(k as f64).unwrap().cdf(x);
        prop_assert!((chi2_cdf(k, x) - reference).abs() <= 1e-10, "k={} x={}", k, x);
    }

    // statrs' normal CDF carries ~1e-10 relative error; the frozen
    // high-precision values live in the unit tests.
    #[test]
    fn normal_agrees(z in -12.0f64..12.0) {
        let reference = Normal::standard().cdf(z);
        prop_assert!((std_normal_cdf(z) - reference).abs() <= 1e-9 * reference.min(1.0 - reference).max(1e-300) + 1e-15, "z={}", z);
    }
}
