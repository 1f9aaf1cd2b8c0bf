//! Special functions and the distribution quantiles the interval
//! constructors need: logistic link, log-gamma, regularized incomplete beta
//! and gamma functions, Student t and standard normal CDFs and quantiles.
//!
//! All functions are pure and generic over [`Scalar`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A probability strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability<T>(T);

impl<T: Scalar> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value > T::zero() && value < T::one() {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!(
                "probability must lie in (0, 1), got {value}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// `1 - p`.
    #[inline]
    pub fn complement(self) -> Self {
        Self(T::one() - self.0)
    }

    /// The two-sided upper quantile level `1 - alpha / 2`.
    pub fn upper_two_sided(self) -> Self {
        Self(T::one() - self.0 / T::lit(2.0))
    }
}

/// Degrees of freedom of a Student t distribution (a positive integer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegreesOfFreedom(u64);

impl DegreesOfFreedom {
    pub fn new(value: u64) -> Result<Self> {
        if value >= 1 {
            Ok(Self(value))
        } else {
            Err(Error::Domain("degrees of freedom must be >= 1".into()))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    fn as_scalar<T: Scalar>(self) -> T {
        T::from_u64(self.0).expect("degrees of freedom representable")
    }
}

/// Saturation threshold of [`expit`] in double precision.
const EXPIT_SATURATION: f64 = 36.0;

/// Logistic function `1 / (1 + exp(-x))`, saturating to exactly 0 or 1 for
/// `|x| > 36`.
#[inline]
pub fn expit<T: Scalar>(x: T) -> T {
    let cut = T::lit(EXPIT_SATURATION);
    if x > cut {
        T::one()
    } else if x < -cut {
        T::zero()
    } else if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `log(p / (1 - p))`.
#[inline]
pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn log1p_exp<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

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

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn log_gamma<T: Scalar>(x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // Reflection keeps the series in its accurate range.
        let pi = T::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma_unchecked(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_count(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    T::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

const MAX_SERIES_ITER: usize = 10_000;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_continued_fraction<T: Scalar>(a: T, b: T, x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..=MAX_SERIES_ITER {
        let m = T::from_count(m);
        let m2 = two * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        h = h * d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta<T: Scalar>(a: T, b: T, x: T) -> Result<T> {
    if !(a > T::zero() && b > T::zero()) {
        return Err(Error::Domain(format!(
            "reg_inc_beta requires a, b > 0 (got a = {a}, b = {b})"
        )));
    }
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain(format!(
            "reg_inc_beta requires x in [0, 1], got {x}"
        )));
    }
    Ok(reg_inc_beta_unchecked(a, b, x))
}

fn reg_inc_beta_unchecked<T: Scalar>(a: T, b: T, x: T) -> T {
    let one = T::one();
    if x == T::zero() {
        return T::zero();
    }
    if x == one {
        return one;
    }
    let ln_front = ln_gamma_unchecked(a + b) - ln_gamma_unchecked(a) - ln_gamma_unchecked(b)
        + a * x.ln()
        + b * (-x).ln_1p();
    let front = ln_front.exp();
    if x < (a + one) / (a + b + T::lit(2.0)) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        one - front * beta_continued_fraction(b, a, one - x) / b
    }
}

/// Regularized lower incomplete gamma `P(a, x)` and upper `Q(a, x)`.
fn reg_inc_gamma_pq<T: Scalar>(a: T, x: T) -> (T, T) {
    let one = T::one();
    if x <= T::zero() {
        return (T::zero(), one);
    }
    let eps = T::epsilon();
    let ln_front = a * x.ln() - x - ln_gamma_unchecked(a);
    if x < a + one {
        let mut ap = a;
        let mut del = one / a;
        let mut sum = del;
        for _ in 0..MAX_SERIES_ITER {
            ap = ap + one;
            del = del * x / ap;
            sum = sum + del;
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        let p = sum * ln_front.exp();
        (p, one - p)
    } else {
        let tiny = T::min_positive_value() / eps;
        let mut b = x + one - a;
        let mut c = one / tiny;
        let mut d = one / b;
        let mut h = d;
        for i in 1..=MAX_SERIES_ITER {
            let i = T::from_count(i);
            let an = -i * (i - a);
            b = b + T::lit(2.0);
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = d.recip();
            let del = d * c;
            h = h * del;
            if (del - one).abs() <= eps {
                break;
            }
        }
        let q = ln_front.exp() * h;
        (one - q, q)
    }
}

/// Standard normal CDF.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let half = T::lit(0.5);
    let (p, q) = reg_inc_gamma_pq(half, x * x * half);
    if x >= T::zero() {
        half + half * p
    } else {
        half * q
    }
}

/// Standard normal upper tail `1 - Phi(x)` for `x >= 0`, without
/// cancellation.
fn normal_upper_tail<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    let (p, q) = reg_inc_gamma_pq(half, x * x * half);
    if x >= T::zero() {
        half * q
    } else {
        half + half * p
    }
}

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    T::lit(1.0 / (2.0 * std::f64::consts::PI).sqrt()) * (-(x * x) / T::lit(2.0)).exp()
}

/// Inverse standard normal CDF.
pub fn normal_quantile<T: Scalar>(p: Probability<T>) -> T {
    let p = p.value();
    let half = T::lit(0.5);
    if p == half {
        return T::zero();
    }
    // Solve on the upper tail so that small tail areas keep full precision.
    let tail = if p > half { T::one() - p } else { p };
    let mut z = T::lit(acklam_upper(tail.to_f64_lossy()));
    // Halley refinement on the tail equation 1 - Phi(z) = tail.
    for _ in 0..4 {
        let e = normal_upper_tail(z) - tail;
        let u = -e / normal_pdf(z);
        let step = u / (T::one() + z * u / T::lit(2.0));
        z = z - step;
        if step.abs() <= T::epsilon() * z.abs().max(T::one()) {
            break;
        }
    }
    if p > half {
        z
    } else {
        -z
    }
}

/// Acklam's rational approximation of the upper-tail quantile, used as the
/// starting point for refinement.
fn acklam_upper(tail: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    // Lower-tail quantile at `tail`, then flip sign.
    let p = tail;
    let lower = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    -lower
}

/// Upper tail `P(T > x)` of a Student t variable, for `x >= 0`.
fn t_upper_tail<T: Scalar>(df: T, x: T) -> T {
    let half = T::lit(0.5);
    let x2 = x * x;
    if x2 < df {
        // Near the centre the complementary form avoids cancellation.
        half - half * reg_inc_beta_unchecked(half, df * half, x2 / (df + x2))
    } else {
        half * reg_inc_beta_unchecked(df * half, half, df / (df + x2))
    }
}

/// Student t CDF with `df` degrees of freedom.
pub fn t_cdf<T: Scalar>(df: DegreesOfFreedom, x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let nu: T = df.as_scalar();
    if x.is_infinite() {
        return if x > T::zero() { T::one() } else { T::zero() };
    }
    let tail = t_upper_tail(nu, x.abs());
    if x >= T::zero() {
        T::one() - tail
    } else {
        tail
    }
}

/// Student t density.
pub fn t_pdf<T: Scalar>(df: DegreesOfFreedom, x: T) -> T {
    let nu: T = df.as_scalar();
    let half = T::lit(0.5);
    let ln_norm = ln_gamma_unchecked((nu + T::one()) * half)
        - ln_gamma_unchecked(nu * half)
        - half * (nu * T::lit(std::f64::consts::PI)).ln();
    (ln_norm - (nu + T::one()) * half * (x * x / nu).ln_1p()).exp()
}

/// Quantile of the Student t distribution: the `x` with `t_cdf(df, x) = p`.
///
/// Bracketing followed by safeguarded Newton iterations; a Newton step that
/// leaves the bracket falls back to bisection, which keeps `df = 1` (Cauchy
/// tails) well behaved.
pub fn t_quantile<T: Scalar>(df: DegreesOfFreedom, p: Probability<T>) -> T {
    let p = p.value();
    let half = T::lit(0.5);
    if p == half {
        return T::zero();
    }
    let nu: T = df.as_scalar();
    let tail = if p > half { T::one() - p } else { p };

    // Find x >= 0 with upper tail equal to `tail`; the tail is decreasing.
    let mut lo = T::zero();
    let mut hi = normal_quantile(Probability(T::one() - tail)).max(T::one());
    let mut guard = 0;
    while t_upper_tail(nu, hi) > tail {
        lo = hi;
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 2_000 || hi.is_infinite() {
            break;
        }
    }
    let mut x = (lo + hi) * half;
    for _ in 0..500 {
        let f = t_upper_tail(nu, x) - tail;
        if f == T::zero() {
            break;
        }
        if f > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx of the upper tail is -pdf.
        let newton = x + f / t_pdf(df, x);
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * half
        };
        let done = (next - x).abs() <= T::lit(4.0) * T::epsilon() * x.abs().max(T::one())
            || (hi - lo) <= T::lit(4.0) * T::epsilon() * hi.abs().max(T::one());
        x = next;
        if done {
            break;
        }
    }
    if p > half {
        x
    } else {
        -x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prob(p: f64) -> Probability<f64> {
        Probability::new(p).unwrap()
    }

    fn df(v: u64) -> DegreesOfFreedom {
        DegreesOfFreedom::new(v).unwrap()
    }

    #[test]
    fn expit_values() {
        assert_eq!(expit(0.0_f64), 0.5);
        assert!((expit(-0.2_f64) - 0.450166).abs() < 1e-6);
        assert!((expit(3.5_f64) - 0.970688).abs() < 1e-6);
        assert_eq!(expit(40.0_f64), 1.0);
        assert_eq!(expit(-40.0_f64), 0.0);
        assert_eq!(expit(f64::MAX), 1.0);
        assert!(expit(-1e300_f64) == 0.0);
    }

    #[test]
    fn expit_symmetry() {
        let mut x = -30.0_f64;
        while x <= 30.0 {
            assert!((expit(x) + expit(-x) - 1.0).abs() <= 1e-15, "x = {x}");
            x += 0.01;
        }
    }

    #[test]
    fn log_gamma_known_values() {
        assert!((log_gamma(1.0_f64).unwrap()).abs() < 1e-14);
        assert!((log_gamma(2.0_f64).unwrap()).abs() < 1e-14);
        assert!((log_gamma(0.5_f64).unwrap() - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln(9!) = ln(362880)
        assert!((log_gamma(10.0_f64).unwrap() - 362_880_f64.ln()).abs() < 1e-12);
        assert!(log_gamma(0.0_f64).is_err());
        assert!(log_gamma(-1.0_f64).is_err());
    }

    #[test]
    fn reg_inc_beta_edges() {
        assert!((reg_inc_beta(1.0, 1.0, 0.3_f64).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(reg_inc_beta(2.5, 3.0, 0.0_f64).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(2.5, 3.0, 1.0_f64).unwrap(), 1.0);
        // I_x(a, 1) = x^a
        assert!((reg_inc_beta(3.0, 1.0, 0.7_f64).unwrap() - 0.343).abs() < 1e-14);
        assert!(reg_inc_beta(0.0, 1.0, 0.5_f64).is_err());
        assert!(reg_inc_beta(1.0, 1.0, 1.5_f64).is_err());
    }

    #[test]
    fn reg_inc_beta_monotone() {
        let mut prev = 0.0;
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let v = reg_inc_beta(2.5, 0.5, x).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn t_cdf_values() {
        assert_eq!(t_cdf(df(5), 0.0_f64), 0.5);
        assert!((t_cdf(df(5), 2.570582_f64) - 0.975).abs() < 1e-6);
        // Cauchy closed form.
        assert!((t_cdf(df(1), 1.0_f64) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn t_quantile_values() {
        assert_eq!(t_quantile(df(7), prob(0.5)), 0.0);
        assert!((t_quantile(df(1), prob(0.975)) - 12.7062).abs() < 1e-4);
        assert!((t_quantile(df(2), prob(0.975)) - 4.30265).abs() < 1e-5);
        assert!((t_quantile(df(5), prob(0.975)) - 2.570582).abs() < 1e-6);
        // df = 2 closed form: t = (2p - 1) / sqrt(2 p (1 - p))
        let p: f64 = 0.9;
        let exact = (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
        assert!((t_quantile(df(2), prob(p)) - exact).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_values() {
        assert_eq!(normal_quantile(prob(0.5)), 0.0);
        assert!((normal_quantile(prob(0.975)) - 1.959964).abs() < 1e-6);
        assert!((normal_quantile(prob(0.025)) + 1.959964).abs() < 1e-6);
        assert!((normal_cdf(normal_quantile(prob(1e-12))) - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(0.0_f64).is_err());
        assert!(Probability::new(1.0_f64).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert!(Probability::new(-0.2_f64).is_err());
        assert!(DegreesOfFreedom::new(0).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let q = t_quantile(df(5), Probability::new(0.975_f32).unwrap());
        assert!((q - 2.570582).abs() < 1e-4);
        let z = normal_quantile(Probability::new(0.975_f32).unwrap());
        assert!((z - 1.959964).abs() < 1e-5);
        assert_eq!(expit(0.0_f32), 0.5);
    }

    #[test]
    fn quantile_round_trip_grid() {
        for d in 1..=200 {
            let mut p = 0.001;
            while p < 0.9995 {
                let q = t_quantile(df(d), prob(p));
                let back = t_cdf(df(d), q);
                assert!((back - p).abs() < 1e-9, "df={d} p={p} back={back}");
                p += 0.0145;
            }
        }
        let mut p = 0.001;
        while p < 0.9995 {
            let z = normal_quantile(prob(p));
            assert!((normal_cdf(z) - p).abs() < 1e-10);
            p += 0.0037;
        }
    }

    #[test]
    fn t_quantile_monotone_and_limit() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..999 {
            let q = t_quantile(df(3), prob(i as f64 / 1000.0));
            assert!(q > prev);
            prev = q;
        }
        let mut prev = f64::INFINITY;
        for d in 1..=300 {
            let q = t_quantile(df(d), prob(0.975));
            assert!(q < prev, "df = {d}");
            prev = q;
        }
        let z = normal_quantile(prob(0.975));
        // The gap first drops below 0.01 at df = 240; at df = 200 it is 0.01193.
        assert!((t_quantile(df(200), prob(0.975)) - z - 0.011_932_239).abs() < 1e-8);
        for d in [240, 500, 1000, 10_000] {
            assert!((t_quantile(df(d), prob(0.975)) - z).abs() < 0.01);
        }
    }
}
