//! Special functions and exact-distribution oracles.
//!
//! Everything here is generic over [`Scalar`] and pure. The incomplete gamma
//! function switches from the power series to the Lentz continued fraction at
//! `x = a + 1`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on series / continued-fraction iterations. Large shape
/// parameters (chi-square with ~10^5 degrees of freedom) need O(sqrt(a))
/// terms, far below this.
const MAX_ITER: usize = 100_000;

/// One-sample KS critical value coefficient at the 1% level (asymptotic).
pub const KS_CRIT_1PCT: f64 = 1.63;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma<T: Scalar>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::NonPositiveArgument(x.as_f64()));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma_pos(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::from_count(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`; 0 for `x <= 0`.
pub fn gamma_p<T: Scalar>(a: T, x: T) -> T {
    gamma_pq(a, x).0
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q<T: Scalar>(a: T, x: T) -> T {
    gamma_pq(a, x).1
}

/// Returns `(P, Q)`, each computed on the side that avoids cancellation.
fn gamma_pq<T: Scalar>(a: T, x: T) -> (T, T) {
    let zero = T::zero();
    let one = T::one();
    debug_assert!(a > zero);
    if x <= zero {
        return (zero, one);
    }
    if x.is_infinite() {
        return (one, zero);
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma_pos(a);
    if x < a + one {
        let p = series_p(a, x, log_prefactor);
        (p, one - p)
    } else {
        let q = continued_fraction_q(a, x, log_prefactor);
        (one - q, q)
    }
}

fn series_p<T: Scalar>(a: T, x: T, log_prefactor: T) -> T {
    let eps = T::epsilon();
    let mut ap = a;
    let mut term = T::one() / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += T::one();
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    (sum.ln() + log_prefactor).exp().min(T::one())
}

fn continued_fraction_q<T: Scalar>(a: T, x: T, log_prefactor: T) -> T {
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let one = T::one();
    let two = T::lit(2.0);
    let mut b = x + one - a;
    let mut c = one / tiny;
    let mut d = one / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = T::from_count(i);
        let an = -fi * (fi - a);
        b += two;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let delta = d * c;
        h *= delta;
        if (delta - one).abs() < eps {
            break;
        }
    }
    (h.ln() + log_prefactor).exp().min(one)
}

/// Standard normal density `φ(z)`.
pub fn std_normal_pdf<T: Scalar>(z: T) -> T {
    let inv_sqrt_2pi = T::one() / (T::lit(2.0) * T::PI()).sqrt();
    inv_sqrt_2pi * (-T::lit(0.5) * z * z).exp()
}

/// Standard normal CDF `Φ(z)`, via `erfc(x) = Q(1/2, x^2)`.
pub fn std_normal_cdf<T: Scalar>(z: T) -> T {
    let half = T::lit(0.5);
    if z.is_nan() {
        return z;
    }
    let tail = half * gamma_q(half, half * z * z);
    if z < T::zero() {
        tail
    } else {
        T::one() - tail
    }
}

/// Third derivative of `Φ`: `(z^2 - 1) φ(z)`.
pub fn std_normal_third_derivative<T: Scalar>(z: T) -> T {
    (z * z - T::one()) * std_normal_pdf(z)
}

/// Chi-square CDF with `k >= 1` degrees of freedom; 0 for `x <= 0`.
pub fn chi2_cdf<T: Scalar>(k: usize, x: T) -> T {
    assert!(k >= 1, "chi-square needs at least one degree of freedom");
    if x <= T::zero() {
        return T::zero();
    }
    let half = T::lit(0.5);
    gamma_p(T::from_count(k) * half, x * half)
}

/// Exact finite-sample CDF of the centred variance statistic `Q̄ₙ`.
///
/// `n σ̂²/σ²` is chi-square with `n - 1` degrees of freedom, so
/// `Q̄ₙ = (χ²ₙ₋₁ - (n-1)) / sqrt(2n)`.
pub fn qbar_cdf_exact<T: Scalar>(n: usize, z: T) -> T {
    assert!(n >= 2, "Q̄ₙ is defined for n >= 2");
    let dof = T::from_count(n - 1);
    chi2_cdf(n - 1, dof + z * (T::lit(2.0) * T::from_count(n)).sqrt())
}

/// Lower end of the support of `Q̄ₙ`.
pub fn qbar_support_lower<T: Scalar>(n: usize) -> T {
    -T::from_count(n - 1) / (T::lit(2.0) * T::from_count(n)).sqrt()
}

/// Default search window for [`sup_distance`]: one unit below the support
/// boundary of `Q̄ₙ` up to `z = 10`.
pub fn default_sup_window<T: Scalar>(n: usize) -> (T, T) {
    (qbar_support_lower::<T>(n) - T::one(), T::lit(10.0))
}

/// A CDF tabulated on a sorted grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfGrid<T> {
    pub z_values: Vec<T>,
    pub f_values: Vec<T>,
}

impl<T: Scalar> CdfGrid<T> {
    /// Tabulates `cdf` on `points` equispaced nodes spanning `[z_lo, z_hi]`.
    pub fn tabulate(cdf: impl Fn(T) -> T, z_lo: T, z_hi: T, points: usize) -> Result<Self> {
        if !(z_lo < z_hi) || points < 2 {
            return Err(Error::InvalidConfig(format!(
                "CDF grid needs z_lo < z_hi and at least 2 points (got [{z_lo}, {z_hi}], {points})"
            )));
        }
        let step = (z_hi - z_lo) / T::from_count(points - 1);
        let z_values: Vec<T> = (0..points).map(|i| z_lo + step * T::from_count(i)).collect();
        let f_values = z_values.iter().map(|&z| cdf(z)).collect();
        Ok(Self { z_values, f_values })
    }

    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    /// True when `F` is nondecreasing along the grid.
    pub fn is_monotone(&self) -> bool {
        self.f_values.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupDistance<T> {
    pub d: T,
    pub argmax_z: T,
}

/// `sup_z |P(Q̄ₙ <= z) - Φ(z)|` over `[z_lo, z_hi]`.
///
/// Dense grid scan followed by golden-section refinement around the best
/// node. The support boundary of `Q̄ₙ` is always a candidate because the
/// exact CDF has a kink there (for n = 2 the supremum sits on it).
pub fn sup_distance<T: Scalar>(n: usize, z_lo: T, z_hi: T, points: usize) -> Result<SupDistance<T>> {
    if points < 100 {
        return Err(Error::InvalidConfig(format!("sup_distance needs >= 100 points, got {points}")));
    }
    if n < 2 {
        return Err(Error::InsufficientObservations { needed: 2, found: n });
    }
    let diff = |z: T| (qbar_cdf_exact(n, z) - std_normal_cdf(z)).abs();
    let grid = CdfGrid::tabulate(|z| qbar_cdf_exact(n, z) - std_normal_cdf(z), z_lo, z_hi, points)?;
    let (mut best_idx, mut best) = (0, T::zero());
    for (i, v) in grid.f_values.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            best_idx = i;
        }
    }
    let lo = grid.z_values[best_idx.saturating_sub(1)];
    let hi = grid.z_values[(best_idx + 1).min(points - 1)];
    let (mut z_best, mut d_best) = golden_section_max(&diff, lo, hi);
    if best > d_best {
        d_best = best;
        z_best = grid.z_values[best_idx];
    }
    let boundary = qbar_support_lower::<T>(n);
    if boundary >= z_lo && boundary <= z_hi {
        let v = diff(boundary);
        if v > d_best {
            d_best = v;
            z_best = boundary;
        }
    }
    Ok(SupDistance { d: d_best, argmax_z: z_best })
}

/// [`sup_distance`] over [`default_sup_window`] with `points` nodes.
pub fn sup_distance_default<T: Scalar>(n: usize, points: usize) -> Result<SupDistance<T>> {
    let (lo, hi) = default_sup_window::<T>(n);
    sup_distance(n, lo, hi, points)
}

fn golden_section_max<T: Scalar>(f: &impl Fn(T) -> T, mut a: T, mut b: T) -> (T, T) {
    let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon() * (T::one() + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let z = (a + b) / T::lit(2.0);
    (z, f(z))
}

/// One-sample Kolmogorov-Smirnov statistic of sorted `samples` against `cdf`.
pub fn ks_statistic<T: Scalar>(samples: &[T], cdf: impl Fn(T) -> T) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    debug_assert!(samples.windows(2).all(|w| w[0] <= w[1]), "samples must be sorted");
    let m = T::from_count(samples.len());
    let mut d = T::zero();
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let below = (f - T::from_count(i) / m).abs();
        let above = (f - T::from_count(i + 1) / m).abs();
        d = d.max(below).max(above);
    }
    Ok(d)
}

/// Sorts a copy of `samples` (NaN last) and returns the KS statistic.
pub fn ks_statistic_unsorted<T: Scalar>(samples: &[T], cdf: impl Fn(T) -> T) -> Result<T> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    ks_statistic(&sorted, cdf)
}

/// KS critical value at the 1% level for `m` samples.
pub fn ks_critical_1pct(m: usize) -> f64 {
    KS_CRIT_1PCT / (m as f64).sqrt()
}
