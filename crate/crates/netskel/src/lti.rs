//! Scalar transfer functions in the delay operator and per-frequency matrix
//! fields: the numeric substrate everything else is built on.
//!
//! Polynomials are in `z^{-1}`, so a coefficient at index `j` multiplies
//! `z^{-j}` and evaluation on the unit circle substitutes `z = e^{i omega}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold below which a denominator value counts as vanished.
pub const DEN_VANISH_REL: f64 = 1e-12;

/// Condition-estimate ceiling for per-frequency inversion.
pub const COND_LIMIT: f64 = 1e12;

/// Polynomial in the delay operator: `c[0] + c[1] z^{-1} + ... + c[L] z^{-L}`.
///
/// Kept in canonical form with trailing zero coefficients trimmed, so two
/// equal polynomials compare equal structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPolynomial {
    coeffs: Vec<f64>,
}

impl LaurentPolynomial {
    /// Builds a polynomial from coefficients ordered `z^0, z^{-1}, ...`.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// The constant polynomial `1`.
    pub fn one() -> Self {
        Self::new(vec![1.0])
    }

    /// `gain * z^{-lag}`.
    pub fn delay(gain: f64, lag: usize) -> Self {
        let mut coeffs = vec![0.0; lag + 1];
        coeffs[lag] = gain;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest delay power carrying a nonzero coefficient (0 for constants
    /// and for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Value at `z = e^{i omega}`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * Complex64::from_polar(1.0, -omega * j as f64))
            .sum()
    }

    /// Values at every grid frequency.
    pub fn eval_on_grid(&self, grid: &FrequencyGrid) -> Vec<Complex64> {
        (0..grid.size()).map(|k| self.eval(grid.omega(k))).collect()
    }
}

/// Real-rational transfer function `num(z^{-1}) / den(z^{-1})`.
///
/// The denominator is normalized so its `z^0` coefficient is exactly 1,
/// which keeps the representation unique and makes the direct-feedthrough
/// coefficient of the numerator directly readable.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransfer {
    num: LaurentPolynomial,
    den: LaurentPolynomial,
}

impl RationalTransfer {
    pub fn new(num: LaurentPolynomial, den: LaurentPolynomial) -> Result<Self> {
        let lead = den.coeffs().first().copied().unwrap_or(0.0);
        if lead == 0.0 {
            return Err(Error::InvalidModel(
                "transfer denominator must have a nonzero z^0 coefficient".into(),
            ));
        }
        let normalize = |p: &LaurentPolynomial| {
            LaurentPolynomial::new(p.coeffs().iter().map(|c| c / lead).collect())
        };
        Ok(Self {
            num: normalize(&num),
            den: normalize(&den),
        })
    }

    /// Finite impulse response: `num` over a unit denominator.
    pub fn fir(coeffs: Vec<f64>) -> Self {
        Self {
            num: LaurentPolynomial::new(coeffs),
            den: LaurentPolynomial::one(),
        }
    }

    /// Static gain.
    pub fn constant(gain: f64) -> Self {
        Self::fir(vec![gain])
    }

    /// `gain * z^{-lag}` over a unit denominator.
    pub fn delayed_gain(gain: f64, lag: usize) -> Self {
        Self {
            num: LaurentPolynomial::delay(gain, lag),
            den: LaurentPolynomial::one(),
        }
    }

    pub fn num(&self) -> &LaurentPolynomial {
        &self.num
    }

    pub fn den(&self) -> &LaurentPolynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Direct-feedthrough coefficient: the `z^0` numerator coefficient.
    pub fn feedthrough(&self) -> f64 {
        self.num.coeffs().first().copied().unwrap_or(0.0)
    }

    /// Larger of the numerator and denominator degrees.
    pub fn order(&self) -> usize {
        self.num.degree().max(self.den.degree())
    }

    /// Value at `z = e^{i omega}` without a vanishing-denominator guard.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.num.eval(omega) / self.den.eval(omega)
    }

    /// Values at every grid frequency, rejecting grids where the denominator
    /// numerically vanishes.
    pub fn eval_on_grid(&self, grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
        let floor = DEN_VANISH_REL * self.den.max_abs_coeff();
        let mut out = Vec::with_capacity(grid.size());
        for k in 0..grid.size() {
            let d = self.den.eval(grid.omega(k));
            if d.norm() < floor {
                return Err(Error::DenominatorVanishes { index: k });
            }
            out.push(self.num.eval(grid.omega(k)) / d);
        }
        Ok(out)
    }
}

/// Uniform grid of `N` angular frequencies `omega_k = 2 pi k / N`.
///
/// `N` must be a power of two so transforms and the conjugate-symmetric
/// half-grid layout stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyGrid {
    size: usize,
}

impl FrequencyGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid size must be a power of two >= 2, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Index of the Nyquist frequency; the half grid is `0..=half()`.
    pub fn half(&self) -> usize {
        self.size / 2
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.size as f64
    }
}

/// One dense complex matrix per grid frequency.
#[derive(Debug, Clone)]
pub struct ComplexMatrixField {
    grid: FrequencyGrid,
    mats: Vec<DMatrix<Complex64>>,
}

impl ComplexMatrixField {
    pub fn new(grid: FrequencyGrid, mats: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if mats.len() != grid.size() {
            return Err(Error::InvalidInput(format!(
                "matrix field has {} entries for a grid of {}",
                mats.len(),
                grid.size()
            )));
        }
        let dim = mats.first().map(|m| m.nrows()).unwrap_or(0);
        if mats.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::InvalidInput(
                "matrix field entries must be square and uniformly sized".into(),
            ));
        }
        Ok(Self { grid, mats })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    /// Matrix dimension (all entries share it).
    pub fn dim(&self) -> usize {
        self.mats.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn at(&self, k: usize) -> &DMatrix<Complex64> {
        &self.mats[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DMatrix<Complex64>> {
        self.mats.iter()
    }

    /// Per-frequency inverse via LU with partial pivoting.
    ///
    /// Fails with the offending frequency index when the condition estimate
    /// `||A||_F * ||A^-1||_F` exceeds the ceiling or the residual
    /// `A * A^-1 - I` is not small.
    pub fn inverse(&self) -> Result<Self> {
        let dim = self.dim();
        let eye = DMatrix::<Complex64>::identity(dim, dim);
        let mut out = Vec::with_capacity(self.mats.len());
        for (k, m) in self.mats.iter().enumerate() {
            let inv = m
                .clone()
                .lu()
                .try_inverse()
                .ok_or(Error::SingularAtFrequency {
                    index: k,
                    cond: f64::INFINITY,
                })?;
            let cond = m.norm() * inv.norm();
            if !cond.is_finite() || cond > COND_LIMIT {
                return Err(Error::SingularAtFrequency { index: k, cond });
            }
            let residual = (m * &inv - &eye).norm() / eye.norm();
            if residual > 1e-10 {
                return Err(Error::SingularAtFrequency { index: k, cond });
            }
            out.push(inv);
        }
        Self::new(self.grid, out)
    }
}

/// Matrix covariance sequence `R(tau)` for `tau` in `-M..=M`.
///
/// Stored two-sided with the reflection `R(-tau) = R(tau)^T` made exact at
/// construction after being verified within tolerance.
#[derive(Debug, Clone)]
pub struct CovarianceSequence {
    n: usize,
    max_lag: usize,
    /// Index `tau + max_lag` holds `R(tau)`.
    mats: Vec<DMatrix<f64>>,
}

impl CovarianceSequence {
    /// Builds from matrices for `tau = -M..=M` (in that order), verifying the
    /// two-sided reflection within `1e-10` relative and then snapping the
    /// negative lags to the exact transpose of the positive ones.
    pub fn from_two_sided(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        if mats.len() % 2 == 0 || mats.is_empty() {
            return Err(Error::InvalidInput(
                "covariance sequence needs an odd number of lag matrices".into(),
            ));
        }
        let max_lag = mats.len() / 2;
        let n = mats[0].nrows();
        if mats.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::InvalidInput(
                "covariance matrices must be square and uniformly sized".into(),
            ));
        }
        let scale = mats[max_lag].norm().max(1e-300);
        let mut mats = mats;
        for tau in 1..=max_lag {
            let pos = mats[max_lag + tau].clone();
            let neg = &mats[max_lag - tau];
            if (neg - pos.transpose()).norm() > 1e-10 * scale {
                return Err(Error::InvalidInput(format!(
                    "covariance reflection violated at lag {tau}"
                )));
            }
            mats[max_lag - tau] = pos.transpose();
        }
        Ok(Self { n, max_lag, mats })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// `R(tau)`; panics if `|tau|` exceeds the stored range.
    pub fn at(&self, tau: i64) -> &DMatrix<f64> {
        let idx = tau + self.max_lag as i64;
        &self.mats[usize::try_from(idx).expect("lag out of range")]
    }

    /// Scalar entry `R(tau)[a, b] = E[y_a(t) y_b(t - tau)]`.
    pub fn entry(&self, tau: i64, a: usize, b: usize) -> f64 {
        self.at(tau)[(a, b)]
    }

    /// Stationary variance of one node.
    pub fn variance(&self, a: usize) -> f64 {
        self.entry(0, a, a)
    }
}
