//! Covariance functions for the nine-member Gaussian process catalog, plus
//! two counterexample kernels that break positive definiteness or the
//! variance growth bound.
//!
//! Parameters are validated on strict open intervals. Every catalog kernel has
//! a diagonal that is exactly homogeneous in `t`, `R(t, t) = c t^β`, which
//! [`KernelSpec::variance_power_law`] returns in closed form.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::log_gamma;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Family {
    /// Time-changed Lei-Nualart process `X^K(t^{2H})`.
    Xhk,
    /// Fractional Brownian motion.
    Fbm,
    /// Odd part of a two-sided fBm.
    FbmOdd,
    /// Sub-fractional Brownian motion.
    SubFbm,
    NProc,
    ZProc,
    /// Mixture of fBm and the `X^{2H}` process.
    MixedMhk,
    /// Bifractional Brownian motion.
    BiFbm,
    /// Sub-bifractional Brownian motion.
    SubBiFbm,
    /// `|st|^{2H}`: rank one, not positive definite.
    CeProduct,
    /// `cos(s - t)`: rank two, not positive definite.
    CeCosine,
}

impl Family {
    pub const CATALOG: [Family; 9] = [
        Family::Xhk,
        Family::Fbm,
        Family::FbmOdd,
        Family::SubFbm,
        Family::NProc,
        Family::ZProc,
        Family::MixedMhk,
        Family::BiFbm,
        Family::SubBiFbm,
    ];

    pub const COUNTEREXAMPLES: [Family; 2] = [Family::CeProduct, Family::CeCosine];

    pub const ALL: [Family; 11] = [
        Family::Xhk,
        Family::Fbm,
        Family::FbmOdd,
        Family::SubFbm,
        Family::NProc,
        Family::ZProc,
        Family::MixedMhk,
        Family::BiFbm,
        Family::SubBiFbm,
        Family::CeProduct,
        Family::CeCosine,
    ];

    /// Stable lowercase identifier used on the command line and in reports.
    pub fn id(self) -> &'static str {
        match self {
            Family::Xhk => "xhk",
            Family::Fbm => "fbm",
            Family::FbmOdd => "fbm-odd",
            Family::SubFbm => "subfbm",
            Family::NProc => "nproc",
            Family::ZProc => "zproc",
            Family::MixedMhk => "mhk",
            Family::BiFbm => "bifbm",
            Family::SubBiFbm => "subbifbm",
            Family::CeProduct => "ce-product",
            Family::CeCosine => "ce-cosine",
        }
    }

    pub fn is_counterexample(self) -> bool {
        matches!(self, Family::CeProduct | Family::CeCosine)
    }

    /// Whether the second parameter `K` is meaningful for this family.
    pub fn uses_k(self) -> bool {
        matches!(self, Family::Xhk | Family::MixedMhk | Family::BiFbm | Family::SubBiFbm)
    }

    /// Whether the family takes any parameter at all.
    pub fn uses_h(self) -> bool {
        self != Family::CeCosine
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kernel family '{s}'")))
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.id().to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A kernel family together with validated parameters.
///
/// Single-parameter families store `k = 1`; `ce-cosine` stores `h = k = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    family: Family,
    h: T,
    k: T,
}

/// Diagonal growth law `R(t, t) = coefficient * t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw<T> {
    pub coefficient: T,
    pub exponent: T,
}

impl<T: Scalar> PowerLaw<T> {
    pub fn eval(&self, t: T) -> T {
        self.coefficient * pow0(t, self.exponent)
    }
}

fn open(x: impl Scalar, lo: f64, hi: f64) -> bool {
    let x = x.as_f64();
    x > lo && x < hi
}

fn out_of_range(msg: &str) -> Error {
    Error::ParameterOutOfRange(msg.to_string())
}

/// `x^e` for `x >= 0`, with `0^e = 0` for every positive exponent.
#[inline]
fn pow0<T: Scalar>(x: T, e: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.powf(e)
    }
}

/// Validates `(h, k)` for `family` and builds the spec.
pub fn validate_params<T: Scalar>(family: Family, h: T, k: T) -> Result<KernelSpec<T>> {
    KernelSpec::new(family, h, k)
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(family: Family, h: T, k: T) -> Result<Self> {
        let one = T::one();
        let hk = h * k;
        let k_split = |k: T| open(k, 0.0, 1.0) || open(k, 1.0, 2.0);
        match family {
            Family::Fbm | Family::FbmOdd | Family::SubFbm => {
                if !open(h, 0.0, 1.0) {
                    return Err(out_of_range("H must lie in (0,1)"));
                }
                Ok(Self { family, h, k: one })
            }
            Family::NProc | Family::ZProc => {
                if !open(h, 0.0, 0.5) {
                    return Err(out_of_range("H must lie in (0,1/2)"));
                }
                Ok(Self { family, h, k: one })
            }
            Family::MixedMhk => {
                if !open(h, 0.0, 0.5) {
                    return Err(out_of_range("H must lie in (0,1/2)"));
                }
                if !open(k, 0.0, 1.0) {
                    return Err(out_of_range("K must lie in (0,1)"));
                }
                Ok(Self { family, h, k })
            }
            Family::Xhk | Family::BiFbm => {
                if !open(h, 0.0, 1.0) {
                    return Err(out_of_range("H must lie in (0,1)"));
                }
                if !k_split(k) {
                    return Err(out_of_range("K must lie in (0,1) or (1,2)"));
                }
                if !open(hk, 0.0, 1.0) {
                    return Err(out_of_range("HK must lie in (0,1)"));
                }
                Ok(Self { family, h, k })
            }
            Family::SubBiFbm => {
                let regime_a = open(h, 0.0, 1.0) && open(k, 0.0, 1.0) && open(hk, 0.0, 1.0);
                let regime_b = open(h, 0.0, 0.5) && open(k, 0.0, 1.0);
                if regime_a || regime_b {
                    Ok(Self { family, h, k })
                } else if !open(k, 0.0, 1.0) {
                    Err(out_of_range("K must lie in (0,1)"))
                } else {
                    Err(out_of_range("H must lie in (0,1) with HK in (0,1)"))
                }
            }
            Family::CeProduct => {
                if !(h > T::zero()) || !h.is_finite() {
                    return Err(out_of_range("H must be positive"));
                }
                Ok(Self { family, h, k: one })
            }
            Family::CeCosine => Ok(Self { family, h: one, k: one }),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn k(&self) -> T {
        self.k
    }

    /// Prefactor of the `X^K(t^{2H})` covariance for the current `K`.
    fn xhk_normalization(&self) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        let k = self.k;
        if k < one {
            // Γ(1-K) / (K(2-K))
            log_gamma(one - k).expect("1-K > 0").exp() / (k * (two - k))
        } else {
            // Γ(2-K) / (K(K-1))
            log_gamma(two - k).expect("2-K > 0").exp() / (k * (k - one))
        }
    }

    /// Covariance `R(s, t)`, symmetric in its arguments.
    pub fn eval(&self, s: T, t: T) -> Result<T> {
        if !(s >= T::zero()) {
            return Err(Error::NegativeTime(s.as_f64()));
        }
        if !(t >= T::zero()) {
            return Err(Error::NegativeTime(t.as_f64()));
        }
        Ok(self.eval_unchecked(s, t))
    }

    /// [`Self::eval`] without the sign checks on `s` and `t`.
    pub fn eval_unchecked(&self, s: T, t: T) -> T {
        let half = T::lit(0.5);
        let one = T::one();
        let two = T::lit(2.0);
        let h2 = two * self.h;
        let k = self.k;
        let gap = (t - s).abs();
        match self.family {
            Family::Xhk => {
                let bracket = pow0(t, h2 * k) + pow0(s, h2 * k) - pow0(pow0(t, h2) + pow0(s, h2), k);
                let sign = if k < one { one } else { -one };
                self.xhk_normalization() * sign * bracket
            }
            Family::Fbm => half * (pow0(s, h2) + pow0(t, h2) - pow0(gap, h2)),
            Family::FbmOdd => pow0(t + s, h2) - pow0(gap, h2),
            Family::SubFbm => pow0(s, h2) + pow0(t, h2) - half * (pow0(s + t, h2) + pow0(gap, h2)),
            Family::NProc => pow0(s + t, h2) - pow0(s.max(t), h2),
            Family::ZProc => pow0(s.max(t), h2) - pow0(gap, h2),
            Family::MixedMhk => half * (pow0(t, h2) + pow0(s, h2) - k * pow0(t + s, h2) - (one - k) * pow0(gap, h2)),
            Family::BiFbm => (pow0(pow0(s, h2) + pow0(t, h2), k) - pow0(gap, h2 * k)) / two.powf(k),
            Family::SubBiFbm => pow0(pow0(s, h2) + pow0(t, h2), k) - half * (pow0(t + s, h2 * k) + pow0(gap, h2 * k)),
            Family::CeProduct => pow0((s * t).abs(), h2),
            Family::CeCosine => (s - t).cos(),
        }
    }

    /// Closed-form `(c, β)` with `R(t, t) = c t^β`.
    pub fn variance_power_law(&self) -> Result<PowerLaw<T>> {
        let one = T::one();
        let two = T::lit(2.0);
        let h2 = two * self.h;
        let k = self.k;
        let (coefficient, exponent) = match self.family {
            Family::Xhk => {
                let bracket = if k < one { two - two.powf(k) } else { two.powf(k) - two };
                (self.xhk_normalization() * bracket, h2 * k)
            }
            Family::Fbm | Family::ZProc => (one, h2),
            Family::FbmOdd => (two.powf(h2), h2),
            Family::SubFbm => (two - two.powf(h2 - one), h2),
            Family::NProc => (two.powf(h2) - one, h2),
            Family::MixedMhk => (one - k * two.powf(h2 - one), h2),
            Family::BiFbm => (one, h2 * k),
            Family::SubBiFbm => (two.powf(k) - two.powf(h2 * k - one), h2 * k),
            Family::CeProduct | Family::CeCosine => return Err(Error::UnsupportedFamily(self.family)),
        };
        Ok(PowerLaw { coefficient, exponent })
    }

    /// Rejects counterexample kernels on estimator-facing paths.
    pub fn require_catalog(&self) -> Result<()> {
        if self.family.is_counterexample() {
            Err(Error::UnsupportedFamily(self.family))
        } else {
            Ok(())
        }
    }
}

/// Draws admissible `(H, K)` for a catalog family.
///
/// Each open interval `(a, b)` is sampled on `[a + m(b-a), b - m(b-a)]`
/// with `m = margin`, so `margin = 0` samples the full range.
pub fn draw_admissible_params<R: Rng + ?Sized>(family: Family, margin: f64, rng: &mut R) -> (f64, f64) {
    let mut u = |lo: f64, hi: f64| {
        let w = hi - lo;
        let (a, b) = (lo + margin * w, hi - margin * w);
        loop {
            let x = rng.random_range(a..b);
            if x > lo && x < hi {
                return x;
            }
        }
    };
    match family {
        Family::Fbm | Family::FbmOdd | Family::SubFbm => (u(0.0, 1.0), 1.0),
        Family::NProc | Family::ZProc => (u(0.0, 0.5), 1.0),
        Family::MixedMhk => (u(0.0, 0.5), u(0.0, 1.0)),
        Family::SubBiFbm => (u(0.0, 1.0), u(0.0, 1.0)),
        Family::Xhk | Family::BiFbm => {
            if u(0.0, 1.0) < 0.5 {
                (u(0.0, 1.0), u(0.0, 1.0))
            } else {
                let k = u(1.0, 2.0);
                (u(0.0, 1.0 / k), k)
            }
        }
        Family::CeProduct => (u(0.0, 1.0), 1.0),
        Family::CeCosine => (1.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(f: Family, h: f64, k: f64) -> KernelSpec<f64> {
        KernelSpec::new(f, h, k).unwrap()
    }

    #[test]
    fn ids_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.id().parse::<Family>().unwrap(), f);
        }
        assert!("fBm".parse::<Family>().is_err());
    }

    #[test]
    fn validation_examples() {
        assert!(KernelSpec::new(Family::Fbm, 0.5, 1.0).is_ok());
        assert_eq!(
            KernelSpec::new(Family::BiFbm, 0.9, 1.5),
            Err(Error::ParameterOutOfRange("HK must lie in (0,1)".into()))
        );
        assert!(matches!(KernelSpec::new(Family::ZProc, 0.5, 1.0), Err(Error::ParameterOutOfRange(_))));
    }

    #[test]
    fn validation_boundaries_are_open() {
        for h in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(KernelSpec::new(Family::Fbm, h, 1.0).is_err(), "H = {h}");
        }
        assert!(KernelSpec::new(Family::Xhk, 0.5, 1.0).is_err());
        assert!(KernelSpec::new(Family::Xhk, 0.5, 2.0).is_err());
        assert!(KernelSpec::new(Family::Xhk, 0.7, 1.5).is_err());
        assert!(KernelSpec::new(Family::Xhk, 0.6, 1.6).is_ok());
        assert!(KernelSpec::new(Family::Xhk, 0.6, 1.2).is_ok());
        assert!(KernelSpec::new(Family::MixedMhk, 0.25, 1.0).is_err());
        assert!(KernelSpec::new(Family::MixedMhk, 0.5, 0.5).is_err());
        assert!(KernelSpec::new(Family::SubBiFbm, 0.7, 0.9).is_ok());
        assert!(KernelSpec::new(Family::SubBiFbm, 0.3, 1.2).is_err());
        assert!(KernelSpec::new(Family::CeProduct, 0.0, 1.0).is_err());
        assert!(KernelSpec::new(Family::CeCosine, f64::NAN, f64::NAN).is_ok());
    }

    #[test]
    fn single_parameter_families_store_unit_k() {
        assert_eq!(spec(Family::Fbm, 0.3, 7.0).k(), 1.0);
        assert_eq!(spec(Family::ZProc, 0.3, 0.2).k(), 1.0);
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(spec(Family::Fbm, 0.5, 1.0).eval(1.0, 2.0).unwrap(), 1.0);
        assert!((spec(Family::Fbm, 0.75, 1.0).eval(2.0, 2.0).unwrap() - 2.0_f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(spec(Family::FbmOdd, 0.5, 1.0).eval(1.0, 2.0).unwrap(), 2.0);
        assert_eq!(spec(Family::SubFbm, 0.5, 1.0).eval(1.0, 2.0).unwrap(), 1.0);
        let cos = spec(Family::CeCosine, 1.0, 1.0);
        for s in [0.0, 0.3, 17.0] {
            assert_eq!(cos.eval(s, s).unwrap(), 1.0);
        }
    }

    #[test]
    fn zero_time_is_zero_variance() {
        for f in Family::CATALOG {
            let (h, k) = match f {
                Family::NProc | Family::ZProc | Family::MixedMhk => (0.3, 0.5),
                _ => (0.4, 0.5),
            };
            let s = spec(f, h, k);
            assert_eq!(s.eval(0.0, 0.0).unwrap(), 0.0, "{f}");
            assert!(s.eval(1.0, 1.0).unwrap().is_finite());
        }
        assert_eq!(spec(Family::CeCosine, 1.0, 1.0).eval(0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_time_rejected() {
        let s = spec(Family::Fbm, 0.5, 1.0);
        assert_eq!(s.eval(-1.0, 1.0), Err(Error::NegativeTime(-1.0)));
        assert!(s.eval(1.0, -0.5).is_err());
    }

    #[test]
    fn power_law_examples() {
        let pl = spec(Family::Fbm, 0.3, 1.0).variance_power_law().unwrap();
        assert_eq!(pl.coefficient, 1.0);
        assert!((pl.exponent - 0.6).abs() < 1e-15);

        let pl = spec(Family::SubFbm, 0.75, 1.0).variance_power_law().unwrap();
        assert!((pl.coefficient - (2.0 - 2.0_f64.sqrt())).abs() < 1e-15);
        assert_eq!(pl.exponent, 1.5);

        let pl = spec(Family::BiFbm, 0.5, 0.5).variance_power_law().unwrap();
        assert_eq!(pl.coefficient, 1.0);
        assert_eq!(pl.exponent, 0.5);

        let pl = spec(Family::NProc, 0.25, 1.0).variance_power_law().unwrap();
        assert!((pl.coefficient - (2.0_f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(pl.exponent, 0.5);

        for f in Family::COUNTEREXAMPLES {
            assert_eq!(spec(f, 0.5, 1.0).variance_power_law(), Err(Error::UnsupportedFamily(f)));
        }
    }

    #[test]
    fn xhk_coefficients_against_direct_gamma() {
        // Γ(0.5) = √π, Γ(0.5) for K = 1.5 as well
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let pl = spec(Family::Xhk, 0.4, 0.5).variance_power_law().unwrap();
        let expect = sqrt_pi * (2.0 - 2.0_f64.sqrt()) / (0.5 * 1.5);
        assert!((pl.coefficient - expect).abs() < 1e-13);
        let pl = spec(Family::Xhk, 0.4, 1.5).variance_power_law().unwrap();
        let expect = sqrt_pi * (2.0_f64.powf(1.5) - 2.0) / (1.5 * 0.5);
        assert!((pl.coefficient - expect).abs() < 1e-13);
    }

    #[test]
    fn reduction_identities_at_half() {
        let fbm = spec(Family::Fbm, 0.5, 1.0);
        let sub = spec(Family::SubFbm, 0.5, 1.0);
        let odd = spec(Family::FbmOdd, 0.5, 1.0);
        for &(s, t) in &[(0.1, 0.2), (1.0, 5.0), (3.3, 0.7), (2.0, 2.0), (0.0, 4.0)] {
            let m: f64 = f64::min(s, t);
            assert!((fbm.eval(s, t).unwrap() - m).abs() < 1e-12);
            assert!((sub.eval(s, t).unwrap() - m).abs() < 1e-12);
            assert!((odd.eval(s, t).unwrap() - 2.0 * m).abs() < 1e-12);
        }
    }

    #[test]
    fn draws_are_admissible() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for f in Family::ALL {
            for _ in 0..500 {
                let (h, k) = draw_admissible_params(f, 0.0, &mut rng);
                assert!(KernelSpec::new(f, h, k).is_ok(), "{f} {h} {k}");
            }
        }
    }
}
