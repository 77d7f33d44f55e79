//! Independent reference implementations used to cross-check the analytic
//! pipeline: sample-based filter estimation by ordinary least squares,
//! random generation of admissible models, and an exhaustive-pool variant
//! of the edge-removability search.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::lti::{CovarianceSequence, FrequencyGrid};
use crate::model::Ldim;
use crate::reconstruct::{search_edge_over_pool, EdgeRemovalEvidence, ReconstructSettings};
use crate::wiener::{LagClass, RegressorSpec};

/// Least-squares filter estimate from one simulated trajectory, with
/// per-coefficient standard errors.
#[derive(Debug, Clone)]
pub struct OlsEstimate {
    coefficients: BTreeMap<(usize, i64), f64>,
    standard_errors: BTreeMap<(usize, i64), f64>,
    samples: usize,
}

impl OlsEstimate {
    pub fn coefficient(&self, node: usize, lag: i64) -> f64 {
        self.coefficients.get(&(node, lag)).copied().unwrap_or(0.0)
    }

    pub fn standard_error(&self, node: usize, lag: i64) -> f64 {
        self.standard_errors
            .get(&(node, lag))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> &BTreeMap<(usize, i64), f64> {
        &self.coefficients
    }

    pub fn samples(&self) -> usize {
        self.samples
    }
}

/// Fits the causal filter described by `spec` to a simulated trajectory of
/// the model by ordinary least squares — no spectra or analytic
/// covariances involved, so the result is an independent check on the
/// covariance-based solver. The trajectory includes a burn-in long enough
/// for initial-state transients to wash out.
pub fn ols_wiener(
    model: &Ldim,
    spec: &RegressorSpec,
    samples: usize,
    seed: u64,
) -> Result<OlsEstimate> {
    if spec.target() >= model.n() || spec.entries().iter().any(|&(n, _)| n >= model.n()) {
        return Err(Error::InvalidInput(format!(
            "regression involves nodes outside the {}-node model",
            model.n()
        )));
    }
    let m = spec.max_lag();
    let mut columns: Vec<(usize, i64)> = Vec::new();
    for &(node, class) in spec.entries() {
        let start = match class {
            LagClass::Present => 0,
            LagClass::Delayed => 1,
        };
        for lag in start..=m as i64 {
            columns.push((node, lag));
        }
    }
    let p = columns.len();
    if samples <= p + 1 {
        return Err(Error::InvalidInput(format!(
            "{samples} samples cannot identify {p} coefficients"
        )));
    }
    let burn = 10 * m + 100;
    let y = model.simulate(burn + samples, seed)?;

    let design = DMatrix::<f64>::from_fn(samples, p, |row, col| {
        let (node, lag) = columns[col];
        y[(node, burn + row - lag as usize)]
    });
    let target = DVector::<f64>::from_fn(samples, |row, _| y[(spec.target(), burn + row)]);

    let gram = design.transpose() * &design;
    let cross = design.transpose() * &target;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(Error::GramSingular)?;
    let beta = chol.solve(&cross);
    let residual = &target - &design * &beta;
    let dof = (samples - p) as f64;
    let sigma2 = residual.norm_squared() / dof;
    let gram_inv = chol.inverse();

    let mut coefficients = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for (idx, &key) in columns.iter().enumerate() {
        coefficients.insert(key, beta[idx]);
        standard_errors.insert(key, (sigma2 * gram_inv[(idx, idx)]).max(0.0).sqrt());
    }
    Ok(OlsEstimate {
        coefficients,
        standard_errors,
        samples,
    })
}

/// Draws a random admissible model: a triangle-free skeleton with randomly
/// oriented edges (so no two-cycles), coefficient magnitudes in
/// `[0.3, 2]` with random signs, each edge delayed by one step with
/// probability `delay_prob`. Candidate draws whose instantaneous edges
/// form a cycle, or whose feedback loops are too hot to admit a stationary
/// causal trajectory, or whose dynamics matrix is near-singular on the
/// unit circle, are rejected and resampled; after 1000 failed rounds the
/// generation itself fails.
pub fn gen_utf(n: usize, density: f64, delay_prob: f64, seed: u64) -> Result<Ldim> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "a network needs at least two nodes, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&density) || !(0.0..=1.0).contains(&delay_prob) {
        return Err(Error::InvalidInput(format!(
            "probabilities must lie in [0, 1], got density {density} and delay probability {delay_prob}"
        )));
    }
    const ROUNDS: usize = 1000;
    const STABILITY_PROBE_STEPS: usize = 4096;
    for round in 0..ROUNDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round as u64);

        // Triangle-free skeleton: edges that would close a triangle are
        // skipped rather than resampled, which keeps generation fast.
        let mut skeleton = UndirectedGraph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(density) && !share_a_neighbor(&skeleton, i, j) {
                    skeleton
                        .add_edge(i, j)
                        .expect("pair indices are in range and distinct");
                }
            }
        }

        let mut builder = Ldim::builder(n);
        for (a, b) in skeleton.edges() {
            let (from, to) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            let magnitude = rng.random_range(0.3..=2.0);
            let gain = if rng.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            };
            builder = if rng.random_bool(delay_prob) {
                builder.delayed_gain(from, to, gain)
            } else {
                builder.gain(from, to, gain)
            };
        }
        let model = match builder.build() {
            Ok(model) => model,
            // Instantaneous edges formed a cycle: resample.
            Err(Error::AlgebraicLoop { .. }) => continue,
            Err(e) => return Err(e),
        };
        debug_assert!(model.validate_utf().is_utf());

        // Keep only models with a usable spectrum and a stationary causal
        // trajectory (explosive feedback loops diverge within the probe).
        if model.psd(&FrequencyGrid::new(64).unwrap()).is_err() {
            continue;
        }
        if model.simulate(STABILITY_PROBE_STEPS, 0).is_err() {
            continue;
        }
        return Ok(model);
    }
    Err(Error::GenerationFailed { rounds: ROUNDS })
}

fn share_a_neighbor(g: &UndirectedGraph, i: usize, j: usize) -> bool {
    let ni = g.neighbors(i);
    g.neighbors(j).iter().any(|x| ni.contains(x))
}

/// Edge-removability search over the maximal conditioning pool (all other
/// nodes) instead of the bound-graph neighborhood. Exponential in the node
/// count, so only suitable for small networks, where it serves as ground
/// truth for the neighborhood-restricted search.
pub fn brute_force_md(
    r: &CovarianceSequence,
    edge: (usize, usize),
    settings: &ReconstructSettings,
) -> Result<EdgeRemovalEvidence> {
    let (a, b) = if edge.0 < edge.1 {
        edge
    } else {
        (edge.1, edge.0)
    };
    if a == b || b >= r.n() {
        return Err(Error::InvalidInput(format!(
            "edge ({}, {}) is not a valid node pair",
            edge.0, edge.1
        )));
    }
    let pool: BTreeSet<usize> = (0..r.n()).filter(|&x| x != a && x != b).collect();
    search_edge_over_pool(r, &pool, (a, b), settings)
}
