//! Non-causal and finite-lag causal Wiener estimation, plus the separation
//! predicates built on them: component-zero tests for full filters, delayed
//! components, and lag-zero coefficients.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lti::{CovarianceSequence, COND_LIMIT};
use crate::spectrum::{inverse_transform, SpectralDensity};

/// Relative energy allowed beyond the trusted lag range before the finite
/// truncation is declared unsound.
const TAIL_REL: f64 = 1e-6;
/// Energy ratio (scaled by process power, relative to the target's
/// variance) below which a filter block is numerical noise rather than
/// signal: such blocks are exempt from the tail-soundness check, since
/// roundoff spreads uniformly over lags and would otherwise read as a
/// heavy tail. The corresponding amplitude, 1e-9, sits far below any
/// usable separation tolerance.
const NEGLIGIBLE_REL: f64 = 1e-18;
/// Relative ridge added to an ill-conditioned Gram matrix.
const RIDGE_REL: f64 = 1e-10;
/// Relative imaginary residue allowed when real coefficients are extracted
/// from a frequency-domain solve.
const IMAG_REL: f64 = 1e-8;

/// Which lags of a regressor block a regression column set covers.
///
/// `Present` supplies lags `0..=M`; `Delayed` supplies `1..=M`, realizing
/// regression on a strictly past copy of the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LagClass {
    Present,
    Delayed,
}

/// Which part of a component a separation test measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestSpan {
    /// Every lag of the block.
    All,
    /// Only the lag-zero coefficient (strict-causality test).
    ZeroLag,
    /// Only lags `>= 1` (delayed-component test).
    DelayedOnly,
}

/// A finite-lag regression design: target node plus lag-classed regressors.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct RegressorSpec {
    target: usize,
    entries: Vec<(usize, LagClass)>,
    max_lag: usize,
}

impl RegressorSpec {
    /// Validates and canonicalizes (sorts) the entry list. A node may appear
    /// in at most one lag class, since `Delayed` lags are a subset of
    /// `Present` lags and duplicated columns would make the normal equations
    /// singular. The target itself may appear only as `Delayed` (regression
    /// on its own strict past).
    pub fn new(
        target: usize,
        entries: impl IntoIterator<Item = (usize, LagClass)>,
        max_lag: usize,
    ) -> Result<Self> {
        if max_lag == 0 {
            return Err(Error::InvalidSpec("max lag must be at least 1".into()));
        }
        let mut sorted: Vec<(usize, LagClass)> = entries.into_iter().collect();
        sorted.sort_unstable();
        let mut seen = BTreeSet::new();
        for &(node, class) in &sorted {
            if !seen.insert(node) {
                return Err(Error::InvalidSpec(format!(
                    "node {node} listed more than once; present lags already cover delayed lags"
                )));
            }
            if node == target && class == LagClass::Present {
                return Err(Error::InvalidSpec(format!(
                    "target {target} may only appear as a delayed regressor"
                )));
            }
        }
        Ok(Self {
            target,
            entries: sorted,
            max_lag,
        })
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn entries(&self) -> &[(usize, LagClass)] {
        &self.entries
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn class_of(&self, node: usize) -> Option<LagClass> {
        self.entries
            .iter()
            .find(|&&(n, _)| n == node)
            .map(|&(_, c)| c)
    }

    /// Flat column layout of the design: one `(node, lag)` per column,
    /// ordered by the canonical entry order.
    fn columns(&self) -> Vec<(usize, i64)> {
        let mut cols = Vec::new();
        for &(node, class) in &self.entries {
            let start = match class {
                LagClass::Present => 0,
                LagClass::Delayed => 1,
            };
            for lag in start..=self.max_lag as i64 {
                cols.push((node, lag));
            }
        }
        cols
    }
}

/// An estimated Wiener filter: coefficients per `(node, lag)`, per-node
/// component norms, lag-zero magnitudes, the residual variance, and whether
/// ridge regularization was needed.
#[derive(Debug, Clone)]
pub struct WienerResult {
    target: usize,
    coefficients: BTreeMap<(usize, i64), f64>,
    component_norms: BTreeMap<usize, f64>,
    zero_lag_magnitude: BTreeMap<usize, f64>,
    residual_variance: f64,
    regularized: bool,
    /// Root variances of the target and every regressor node; used to put
    /// component contributions in common (target-signal) units.
    rms: BTreeMap<usize, f64>,
}

impl WienerResult {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, i64), f64> {
        &self.coefficients
    }

    pub fn coefficient(&self, node: usize, lag: i64) -> f64 {
        self.coefficients.get(&(node, lag)).copied().unwrap_or(0.0)
    }

    pub fn component_norms(&self) -> &BTreeMap<usize, f64> {
        &self.component_norms
    }

    pub fn component_norm(&self, node: usize) -> f64 {
        self.component_norms.get(&node).copied().unwrap_or(0.0)
    }

    pub fn zero_lag_magnitude(&self, node: usize) -> f64 {
        self.zero_lag_magnitude.get(&node).copied().unwrap_or(0.0)
    }

    pub fn residual_variance(&self) -> f64 {
        self.residual_variance
    }

    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn rms(&self, node: usize) -> f64 {
        self.rms.get(&node).copied().unwrap_or(0.0)
    }

    /// Root sum of squares of a node's coefficients over the given span.
    pub fn span_norm(&self, node: usize, span: TestSpan) -> f64 {
        let sq: f64 = self
            .coefficients
            .range((node, i64::MIN)..=(node, i64::MAX))
            .filter(|&(&(_, lag), _)| match span {
                TestSpan::All => true,
                TestSpan::ZeroLag => lag == 0,
                TestSpan::DelayedOnly => lag >= 1,
            })
            .map(|(_, &c)| c * c)
            .sum();
        sq.sqrt()
    }

    /// Contribution margin of a node's span: its norm in target-signal units
    /// (coefficient norm times the node's root variance), relative to the
    /// largest contribution in the filter, floored by the target's own root
    /// variance so an all-zero filter yields margin 0 rather than 0/0.
    pub fn margin(&self, node: usize, span: TestSpan) -> f64 {
        let denom = self
            .component_norms
            .iter()
            .map(|(&k, &norm)| norm * self.rms(k))
            .fold(self.rms(self.target), f64::max);
        if denom <= 0.0 {
            return 0.0;
        }
        self.span_norm(node, span) * self.rms(node) / denom
    }

    fn from_columns(
        target: usize,
        columns: &[(usize, i64)],
        coeffs: &[f64],
        residual_variance: f64,
        regularized: bool,
        rms: BTreeMap<usize, f64>,
    ) -> Self {
        let mut coefficients = BTreeMap::new();
        let mut sq_norms: BTreeMap<usize, f64> = BTreeMap::new();
        let mut zero_lag_magnitude = BTreeMap::new();
        for (&(node, lag), &c) in columns.iter().zip(coeffs) {
            coefficients.insert((node, lag), c);
            *sq_norms.entry(node).or_insert(0.0) += c * c;
            if lag == 0 {
                zero_lag_magnitude.insert(node, c.abs());
            }
        }
        let component_norms = sq_norms.into_iter().map(|(n, s)| (n, s.sqrt())).collect();
        Self {
            target,
            coefficients,
            component_norms,
            zero_lag_magnitude,
            residual_variance,
            regularized,
            rms,
        }
    }
}

/// Outcome of a separation test: the margin, the verdict at the tolerance
/// used, the design that produced it, and whether regularization makes the
/// verdict less trustworthy.
#[derive(Debug, Clone)]
pub struct SeparationVerdict {
    pub separated: bool,
    pub margin: f64,
    pub witness: RegressorSpec,
    pub low_confidence: bool,
}

/// Non-causal Wiener filter of `target` on the listed regressor processes:
/// per-frequency solve of the normal equations in the spectral domain,
/// inverse-transformed and truncated to lags `-max_lag..=max_lag`.
///
/// Energy at lags beyond half the kept range must stay below
/// `tail_tolerance` (floored at a fixed numeric minimum) as a fraction of
/// the total, otherwise the truncation is unsound and `TailTooHeavy` is
/// returned. Truncation slack below the separation tolerance cannot flip a
/// verdict, so callers deciding separations at tolerance `eps` pass `eps`.
pub fn noncausal_wiener(
    s: &SpectralDensity,
    target: usize,
    regressors: &BTreeSet<usize>,
    max_lag: usize,
    tail_tolerance: f64,
) -> Result<WienerResult> {
    let n = s.n();
    let size = s.grid().size();
    if target >= n || regressors.iter().any(|&r| r >= n) {
        return Err(Error::InvalidSpec(format!(
            "node index out of range for {n} nodes"
        )));
    }
    if regressors.contains(&target) {
        return Err(Error::InvalidSpec(format!(
            "target {target} cannot regress on itself non-causally"
        )));
    }
    if max_lag == 0 || 2 * max_lag > size {
        return Err(Error::InvalidSpec(format!(
            "max lag {max_lag} incompatible with grid size {size}"
        )));
    }
    let mut rms = BTreeMap::new();
    for &node in regressors.iter().chain(std::iter::once(&target)) {
        let mean: f64 = (0..size).map(|k| s.at(k)[(node, node)].re).sum::<f64>() / size as f64;
        rms.insert(node, mean.max(0.0).sqrt());
    }
    let nodes: Vec<usize> = regressors.iter().copied().collect();
    if nodes.is_empty() {
        let residual = rms[&target].powi(2);
        return Ok(WienerResult::from_columns(
            target,
            &[],
            &[],
            residual,
            false,
            rms,
        ));
    }
    let m = nodes.len();

    // Per-frequency rows of W = S_{target,X} S_{X,X}^{-1} and the residual
    // spectral density S_jj - W S_{X,target}.
    let per_freq: Vec<Result<(Vec<Complex64>, f64)>> = (0..size)
        .into_par_iter()
        .map(|k| {
            let full = s.at(k);
            let mut sub = DMatrix::<Complex64>::zeros(m, m);
            for (a, &na) in nodes.iter().enumerate() {
                for (b, &nb) in nodes.iter().enumerate() {
                    sub[(a, b)] = full[(na, nb)];
                }
            }
            let cross = DVector::<Complex64>::from_iterator(
                m,
                nodes.iter().map(|&na| full[(target, na)]),
            );
            let inv = match sub.clone().lu().try_inverse() {
                Some(inv) => {
                    let cond = sub.norm() * inv.norm();
                    if cond > COND_LIMIT {
                        return Err(Error::SingularRegressorSpectrum { index: k, cond });
                    }
                    inv
                }
                None => {
                    return Err(Error::SingularRegressorSpectrum {
                        index: k,
                        cond: f64::INFINITY,
                    })
                }
            };
            // Row vector w = cross^T inv  (inv is the inverse of a Hermitian
            // matrix, so w_b = sum_a cross_a inv[(a, b)]).
            let w: Vec<Complex64> = (0..m)
                .map(|b| (0..m).map(|a| cross[a] * inv[(a, b)]).sum())
                .collect();
            let explained: Complex64 = (0..m).map(|a| w[a] * cross[a].conj()).sum();
            let resid = (full[(target, target)] - explained).re;
            Ok((w, resid))
        })
        .collect();
    let mut rows = Vec::with_capacity(size);
    let mut residual = 0.0;
    for entry in per_freq {
        let (w, resid) = entry?;
        residual += resid / size as f64;
        rows.push(w);
    }

    // Inverse-transform each regressor's frequency response to lag space.
    let mut columns = Vec::new();
    let mut coeffs = Vec::new();
    let scale: f64 = rms.values().map(|r| r * r).sum::<f64>().max(1e-300);
    let mut worst_imag: f64 = 0.0;
    let target_var = rms[&target].powi(2);
    for (b, &node) in nodes.iter().enumerate() {
        let freq: Vec<Complex64> = rows.iter().map(|w| w[b]).collect();
        let lagged = inverse_transform(&freq);
        let total: f64 = lagged.iter().map(|c| c.norm_sqr()).sum();
        let tail: f64 = lagged
            .iter()
            .enumerate()
            .filter(|&(idx, _)| {
                let tau = if idx <= size / 2 {
                    idx as i64
                } else {
                    idx as i64 - size as i64
                };
                tau.unsigned_abs() as usize > max_lag / 2
            })
            .map(|(_, c)| c.norm_sqr())
            .sum();
        let noise_block = total * rms[&node].powi(2) <= NEGLIGIBLE_REL * target_var;
        let tail_limit = TAIL_REL.max(tail_tolerance);
        if !noise_block && tail > tail_limit * total {
            return Err(Error::TailTooHeavy {
                fraction: tail / total,
                limit: tail_limit,
            });
        }
        for lag in -(max_lag as i64)..=max_lag as i64 {
            let idx = lag.rem_euclid(size as i64) as usize;
            worst_imag = worst_imag.max(lagged[idx].im.abs());
            columns.push((node, lag));
            coeffs.push(lagged[idx].re);
        }
    }
    if worst_imag * worst_imag > IMAG_REL * scale {
        return Err(Error::ResolutionTooCoarse {
            detail: format!(
                "imaginary residue {worst_imag:.3e} in lag-domain filter coefficients"
            ),
        });
    }
    Ok(WienerResult::from_columns(
        target,
        &columns,
        &coeffs,
        residual.clamp(0.0, target_var),
        false,
        rms,
    ))
}

/// Finite-lag causal Wiener filter: least-squares solution of the normal
/// equations assembled from exact covariances.
///
/// The Gram matrix is solved by Cholesky; if its diagonal conditioning
/// estimate exceeds the trusted limit, a small ridge proportional to the
/// trace is added and the result is marked `regularized`. Energy in the last
/// quarter of the lag range must stay below `tail_tolerance` (floored at a
/// fixed numeric minimum) as a fraction of the total, else `TailTooHeavy`.
pub fn causal_wiener(
    r: &CovarianceSequence,
    spec: &RegressorSpec,
    tail_tolerance: f64,
) -> Result<WienerResult> {
    let n = r.n();
    let m = spec.max_lag();
    if spec.target() >= n || spec.entries().iter().any(|&(node, _)| node >= n) {
        return Err(Error::InvalidSpec(format!(
            "node index out of range for {n} nodes"
        )));
    }
    if m > r.max_lag() {
        return Err(Error::InvalidSpec(format!(
            "regression lag {m} exceeds available covariance lag {}",
            r.max_lag()
        )));
    }
    let mut rms = BTreeMap::new();
    rms.insert(spec.target(), r.variance(spec.target()).max(0.0).sqrt());
    for &(node, _) in spec.entries() {
        rms.insert(node, r.variance(node).max(0.0).sqrt());
    }
    let target_var = r.variance(spec.target()).max(0.0);
    let columns = spec.columns();
    if columns.is_empty() {
        return Ok(WienerResult::from_columns(
            spec.target(),
            &[],
            &[],
            target_var,
            false,
            rms,
        ));
    }
    let dim = columns.len();
    // Gram entry for columns (a, l), (b, k): E[y_a(t-l) y_b(t-k)] = R(k-l)_{ab}.
    let gram = DMatrix::<f64>::from_fn(dim, dim, |p, q| {
        let (a, l) = columns[p];
        let (b, k) = columns[q];
        r.entry(k - l, a, b)
    });
    // Cross-covariance with the target: E[y_j(t) y_a(t-l)] = R(l)_{ja}.
    let cross = DVector::<f64>::from_iterator(
        dim,
        columns.iter().map(|&(a, l)| r.entry(l, spec.target(), a)),
    );

    let mut regularized = false;
    let solve = |g: DMatrix<f64>| -> Option<(DVector<f64>, f64)> {
        let chol = g.cholesky()?;
        let diag = chol.l_dirty().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &d in diag.iter() {
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let cond = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
        Some((chol.solve(&cross), cond))
    };
    let coeffs = match solve(gram.clone()) {
        Some((c, cond)) if cond <= COND_LIMIT => c,
        _ => {
            regularized = true;
            let ridge = RIDGE_REL * gram.trace();
            if ridge <= 0.0 {
                return Err(Error::GramSingular);
            }
            let ridged = gram + DMatrix::<f64>::identity(dim, dim) * ridge;
            match solve(ridged) {
                Some((c, _)) => c,
                None => return Err(Error::GramSingular),
            }
        }
    };

    // Truncation soundness: the last quarter of the lag range must carry a
    // negligible share of the squared coefficient mass.
    let tail_start = (m - (m / 4).max(1)) as i64;
    let total: f64 = coeffs.iter().map(|c| c * c).sum();
    let tail: f64 = columns
        .iter()
        .zip(coeffs.iter())
        .filter(|&(&(_, lag), _)| lag > tail_start)
        .map(|(_, c)| c * c)
        .sum();
    let scaled_total: f64 = columns
        .iter()
        .zip(coeffs.iter())
        .map(|(&(node, _), c)| c * c * rms[&node].powi(2))
        .sum();
    let noise_solution = scaled_total <= NEGLIGIBLE_REL * target_var;
    let tail_limit = TAIL_REL.max(tail_tolerance);
    if !noise_solution && tail > tail_limit * total {
        return Err(Error::TailTooHeavy {
            fraction: tail / total,
            limit: tail_limit,
        });
    }

    let residual = (target_var - cross.dot(&coeffs)).clamp(0.0, target_var);
    Ok(WienerResult::from_columns(
        spec.target(),
        &columns,
        coeffs.as_slice(),
        residual,
        regularized,
        rms,
    ))
}

/// Non-causal Wiener separation: is `tested`'s component of the filter
/// estimating `target` from `cond ∪ {tested}` identically zero?
pub fn wsep(
    s: &SpectralDensity,
    target: usize,
    cond: &BTreeSet<usize>,
    tested: usize,
    max_lag: usize,
    eps: f64,
) -> Result<SeparationVerdict> {
    if tested == target || cond.contains(&tested) || cond.contains(&target) {
        return Err(Error::InvalidSpec(format!(
            "separation test needs distinct target {target}, tested {tested}, and conditioning set"
        )));
    }
    let mut regressors = cond.clone();
    regressors.insert(tested);
    let result = noncausal_wiener(s, target, &regressors, max_lag, eps)?;
    let margin = result.margin(tested, TestSpan::All);
    let witness = RegressorSpec::new(
        target,
        regressors.iter().map(|&n| (n, LagClass::Present)),
        max_lag,
    )?;
    Ok(SeparationVerdict {
        separated: margin < eps,
        margin,
        witness,
        low_confidence: result.regularized(),
    })
}

/// Causal Wiener separation: is the tested block's component of the causal
/// filter estimating `target` from the conditioning design identically zero?
///
/// The tested block may be `Present` (all lags) or `Delayed` (lags ≥ 1). If
/// the conditioning set already lists the tested node as `Present` while the
/// tested block is `Delayed`, the node enters the design once and the test
/// measures its delayed sub-span.
pub fn cwsep(
    r: &CovarianceSequence,
    target: usize,
    cond: &[(usize, LagClass)],
    tested: (usize, LagClass),
    max_lag: usize,
    eps: f64,
) -> Result<SeparationVerdict> {
    let (tested_node, tested_class) = tested;
    if tested_node == target && tested_class == LagClass::Present {
        return Err(Error::InvalidSpec(format!(
            "cannot test the present component of the target {target} itself"
        )));
    }
    let mut entries: Vec<(usize, LagClass)> = Vec::new();
    let mut span = match tested_class {
        LagClass::Present => TestSpan::All,
        LagClass::Delayed => TestSpan::DelayedOnly,
    };
    let mut tested_included = false;
    for &(node, class) in cond {
        if node == tested_node {
            match (class, tested_class) {
                (LagClass::Present, LagClass::Delayed) => {
                    // The present block subsumes the tested delayed lags.
                    span = TestSpan::DelayedOnly;
                    tested_included = true;
                    entries.push((node, LagClass::Present));
                }
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "conditioning set masks the tested block of node {node}"
                    )));
                }
            }
        } else {
            entries.push((node, class));
        }
    }
    if !tested_included {
        entries.push((tested_node, tested_class));
    }
    let spec = RegressorSpec::new(target, entries, max_lag)?;
    let result = causal_wiener(r, &spec, eps)?;
    let margin = result.margin(tested_node, span);
    Ok(SeparationVerdict {
        separated: margin < eps,
        margin,
        witness: spec,
        low_confidence: result.regularized(),
    })
}

/// Strict-causality test: in the causal filter estimating `target` from
/// `tested` (present) plus the given present/delayed conditioning sets, is
/// the tested node's lag-zero coefficient zero?
pub fn strictly_causal_component(
    r: &CovarianceSequence,
    target: usize,
    tested: usize,
    present: &BTreeSet<usize>,
    delayed: &BTreeSet<usize>,
    max_lag: usize,
    eps: f64,
) -> Result<SeparationVerdict> {
    if present.contains(&tested) || delayed.contains(&tested) || tested == target {
        return Err(Error::InvalidSpec(format!(
            "tested node {tested} must appear exactly once, as the present regressor under test"
        )));
    }
    let entries = std::iter::once((tested, LagClass::Present))
        .chain(present.iter().map(|&n| (n, LagClass::Present)))
        .chain(delayed.iter().map(|&n| (n, LagClass::Delayed)));
    let spec = RegressorSpec::new(target, entries, max_lag)?;
    let result = causal_wiener(r, &spec, eps)?;
    let margin = result.margin(tested, TestSpan::ZeroLag);
    Ok(SeparationVerdict {
        separated: margin < eps,
        margin,
        witness: spec,
        low_confidence: result.regularized(),
    })
}
