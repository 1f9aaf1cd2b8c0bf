//! Logistic regression by Newton–Raphson / iteratively reweighted least
//! squares, with optional case weights and offsets. Outcomes may be
//! fractional (quasi-binomial), which the sequential regressions need.

use crate::error::{Error, FitError, Result};
use crate::numerics::{expit, log1p_exp};
use crate::scalar::Scalar;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Domain(format!(
                "design matrix data has length {}, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Intercept column followed by the given covariate columns.
    pub fn with_intercept(columns: &[&[T]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Domain("covariate columns differ in length".into()));
        }
        let cols = columns.len() + 1;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.push(T::one());
            data.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Self { rows, cols, data })
    }

    /// Intercept-only design with `rows` rows.
    pub fn intercept(rows: usize) -> Self {
        Self {
            rows,
            cols: 1,
            data: vec![T::one(); rows],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit<T> {
    pub coefficients: Vec<T>,
    pub iterations: usize,
    pub log_likelihood: T,
    /// Max-norm of the log-likelihood gradient at `coefficients`.
    pub max_score: T,
}

impl<T: Scalar> LogisticFit<T> {
    #[inline]
    pub fn linear_predictor(&self, row: &[T]) -> T {
        dot(&self.coefficients, row)
    }

    #[inline]
    pub fn predict(&self, row: &[T]) -> T {
        expit(self.linear_predictor(row))
    }
}

const MAX_ITER: usize = 100;
const SCORE_TOL: f64 = 1e-8;
const REL_LL_TOL: f64 = 1e-10;
/// A fitted linear predictor beyond this magnitude means the likelihood is
/// being maximized at infinity.
const SEPARATION_ETA: f64 = 30.0;

/// Unweighted maximum-likelihood logistic regression.
pub fn fit_logistic<T: Scalar>(x: &DesignMatrix<T>, y: &[T]) -> Result<LogisticFit<T>, FitError> {
    fit_logistic_weighted(x, y, None, None)
}

/// Weighted logistic regression with an optional offset on the linear
/// predictor. `y` must lie in `[0, 1]`; weights must be non-negative.
///
/// Converged when the score max-norm drops below 1e-8, or when the relative
/// log-likelihood change drops below 1e-10 (followed by one polishing
/// Newton step). Fails after 100 iterations.
pub fn fit_logistic_weighted<T: Scalar>(
    x: &DesignMatrix<T>,
    y: &[T],
    weights: Option<&[T]>,
    offset: Option<&[T]>,
) -> Result<LogisticFit<T>, FitError> {
    let n = x.rows();
    let p = x.cols();
    assert_eq!(y.len(), n, "outcome length must match design rows");
    if let Some(w) = weights {
        assert_eq!(w.len(), n, "weight length must match design rows");
    }
    if let Some(o) = offset {
        assert_eq!(o.len(), n, "offset length must match design rows");
    }
    let weight = |i: usize| weights.map_or(T::one(), |w| w[i]);
    let off = |i: usize| offset.map_or(T::zero(), |o| o[i]);

    let effective = (0..n).filter(|&i| weight(i) > T::zero()).count();
    if effective <= p {
        return Err(FitError::TooFewObservations {
            needed: p,
            got: effective,
        });
    }
    let (mut pos, mut neg) = (T::zero(), T::zero());
    for i in 0..n {
        pos = pos + weight(i) * y[i];
        neg = neg + weight(i) * (T::one() - y[i]);
    }
    if pos <= T::zero() || neg <= T::zero() {
        // All outcomes at one boundary: the MLE sits at infinity.
        return Err(FitError::Separation);
    }

    let log_lik = |beta: &[T]| -> T {
        let mut ll = T::zero();
        for i in 0..n {
            let w = weight(i);
            if w == T::zero() {
                continue;
            }
            let eta = off(i) + dot(beta, x.row(i));
            ll = ll + w * (y[i] * eta - log1p_exp(eta));
        }
        ll
    };

    let mut beta = vec![T::zero(); p];
    let mut ll = log_lik(&beta);
    let mut polishing = false;
    let mut score = vec![T::zero(); p];
    let mut info = vec![T::zero(); p * p];

    for iter in 0..=MAX_ITER {
        score.iter_mut().for_each(|s| *s = T::zero());
        info.iter_mut().for_each(|h| *h = T::zero());
        let mut max_eta = T::zero();
        for i in 0..n {
            let w = weight(i);
            if w == T::zero() {
                continue;
            }
            let row = x.row(i);
            let lin = dot(&beta, row);
            let eta = off(i) + lin;
            max_eta = max_eta.max(lin.abs());
            let mu = expit(eta);
            let r = w * (y[i] - mu);
            let v = w * mu * (T::one() - mu);
            for a in 0..p {
                score[a] = score[a] + r * row[a];
                let va = v * row[a];
                for b in 0..=a {
                    info[a * p + b] = info[a * p + b] + va * row[b];
                }
            }
        }
        if !ll.is_finite() || score.iter().any(|s| !s.is_finite()) {
            return Err(FitError::NonFinite("logistic score"));
        }
        let max_score = score.iter().fold(T::zero(), |m, s| m.max(s.abs()));
        if max_score < T::lit(SCORE_TOL) || polishing {
            if max_eta > T::lit(SEPARATION_ETA) {
                return Err(FitError::Separation);
            }
            return Ok(LogisticFit {
                coefficients: beta,
                iterations: iter,
                log_likelihood: ll,
                max_score,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        for a in 0..p {
            for b in 0..a {
                info[b * p + a] = info[a * p + b];
            }
        }
        let delta = cholesky_solve(&mut info, &score, p).ok_or(FitError::Singular)?;

        let mut step = T::one();
        let mut candidate = beta.clone();
        let mut new_ll;
        loop {
            for k in 0..p {
                candidate[k] = beta[k] + step * delta[k];
            }
            new_ll = log_lik(&candidate);
            if new_ll >= ll - T::lit(1e-12) * ll.abs().max(T::one()) || step < T::lit(1e-10) {
                break;
            }
            step = step / T::lit(2.0);
        }
        let rel = (new_ll - ll).abs() / ll.abs().max(T::lit(1e-300));
        beta = candidate;
        ll = new_ll;
        if rel < T::lit(REL_LL_TOL) {
            polishing = true;
        }
    }
    Err(FitError::NonConvergence {
        iterations: MAX_ITER,
    })
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Solve `A x = b` for symmetric positive definite `A` (row-major, `p x p`,
/// overwritten by its Cholesky factor).
fn cholesky_solve<T: Scalar>(a: &mut [T], b: &[T], p: usize) -> Option<Vec<T>> {
    let scale = (0..p).fold(T::zero(), |m, i| m.max(a[i * p + i].abs()));
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d = d - a[j * p + k] * a[j * p + k];
        }
        if !(d > T::epsilon() * T::lit(1e3) * scale) {
            return None;
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s = s - a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    let mut z = b.to_vec();
    for i in 0..p {
        for k in 0..i {
            z[i] = z[i] - a[i * p + k] * z[k];
        }
        z[i] = z[i] / a[i * p + i];
    }
    for i in (0..p).rev() {
        for k in i + 1..p {
            z[i] = z[i] - a[k * p + i] * z[k];
        }
        z[i] = z[i] / a[i * p + i];
    }
    Some(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resampling::SeedSpec;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn intercept_only_is_logit_of_mean() {
        let y: Vec<f64> = (0..400).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let fit = fit_logistic(&DesignMatrix::intercept(y.len()), &y).unwrap();
        assert!((fit.coefficients[0] - (-1.098_612)).abs() < 1e-6);
        assert!((fit.coefficients[0] - (1.0_f64 / 3.0).ln()).abs() < 1e-10);
        assert!(fit.max_score < 1e-8);
    }

    #[test]
    fn null_slope_is_near_zero() {
        let mut rng = SeedSpec::new(21, 0).rng();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let fit = fit_logistic(&DesignMatrix::with_intercept(&[&xs]).unwrap(), &y).unwrap();
        assert!(fit.coefficients[1].abs() < 0.05);
        assert!(fit.coefficients[0].abs() < 0.05);
    }

    #[test]
    fn recovers_generating_coefficients() {
        let mut rng = SeedSpec::new(5, 1).rng();
        let n = 1_000_000;
        let mut w = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        for _ in 0..n {
            let w0: f64 = StandardNormal.sample(&mut rng);
            let p = expit(-0.2 + 0.4 * w0);
            w.push(w0);
            a.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        }
        let fit = fit_logistic(&DesignMatrix::with_intercept(&[&w]).unwrap(), &a).unwrap();
        assert!((fit.coefficients[0] + 0.2).abs() < 0.02);
        assert!((fit.coefficients[1] - 0.4).abs() < 0.02);
        assert!(fit.max_score < 1e-8);
    }

    #[test]
    fn separation_is_detected() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v >= 10.0 { 1.0 } else { 0.0 }).collect();
        let d = DesignMatrix::with_intercept(&[&x]).unwrap();
        assert!(matches!(
            fit_logistic(&d, &y),
            Err(FitError::Separation) | Err(FitError::NonConvergence { .. })
        ));
        let zeros = vec![0.0; 20];
        assert_eq!(fit_logistic(&d, &zeros), Err(FitError::Separation));
    }

    #[test]
    fn collinear_design_is_singular() {
        let x: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
        let y: Vec<f64> = (0..30).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let d = DesignMatrix::with_intercept(&[&x, &x]).unwrap();
        assert_eq!(fit_logistic(&d, &y), Err(FitError::Singular));
    }

    #[test]
    fn weighted_offset_intercept_solves_weighted_score() {
        let y = [0.2_f64, 0.9, 0.4, 0.0, 1.0, 0.7];
        let w = [1.0, 3.0, 0.5, 2.0, 0.0, 1.5];
        let off = [0.1, -0.3, 1.2, 0.0, 5.0, -2.0];
        let fit =
            fit_logistic_weighted(&DesignMatrix::intercept(6), &y, Some(&w), Some(&off)).unwrap();
        let eps = fit.coefficients[0];
        let score: f64 = (0..6).map(|i| w[i] * (y[i] - expit(off[i] + eps))).sum();
        assert!(score.abs() < 1e-8);
    }

    #[test]
    fn works_in_f32() {
        let y: Vec<f32> = (0..200).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let fit = fit_logistic_weighted(&DesignMatrix::intercept(200), &y, None, None);
        // f32 cannot reach a 1e-8 score; the likelihood criterion stops it.
        let fit = fit.unwrap();
        assert!((fit.coefficients[0] - 0.25_f32.ln()).abs() < 1e-4);
    }
}
