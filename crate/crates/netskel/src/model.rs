//! Linear dynamic network models: nodes driven by independent noise plus
//! rational transfer functions along directed edges, with direct
//! feedthroughs allowed as long as the zero-lag dependencies stay acyclic.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::lti::{ComplexMatrixField, FrequencyGrid, RationalTransfer};
use crate::spectrum::SpectralDensity;

/// Trajectory guard: a sample beyond this magnitude counts as divergence.
const DIVERGENCE_GUARD: f64 = 1e9;

/// Noise channel: white Gaussian innovations scaled by `variance` and
/// shaped by a rational coloring filter (unit by default).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel {
    variance: f64,
    coloring: RationalTransfer,
}

impl NoiseChannel {
    pub fn white(variance: f64) -> Self {
        Self {
            variance,
            coloring: RationalTransfer::constant(1.0),
        }
    }

    pub fn colored(variance: f64, coloring: RationalTransfer) -> Self {
        Self { variance, coloring }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn coloring(&self) -> &RationalTransfer {
        &self.coloring
    }
}

/// Network model `y = e + H y` with zero-diagonal rational `H` and
/// independent noise channels `e`.
///
/// Edges with a nonzero direct feedthrough must form an acyclic dependency
/// graph so the model is well posed as a sample recursion; this is enforced
/// at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Ldim {
    n: usize,
    /// `(from, to)` keyed transfers; entry `(i, j)` is the filter applied to
    /// `y_i` when forming `y_j`.
    transfers: BTreeMap<(usize, usize), RationalTransfer>,
    noise: Vec<NoiseChannel>,
}

/// Collects edges and noise channels, validating everything at `build`.
#[derive(Debug, Clone)]
pub struct LdimBuilder {
    n: usize,
    transfers: Vec<(usize, usize, RationalTransfer)>,
    noise: Vec<NoiseChannel>,
}

impl LdimBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            transfers: Vec::new(),
            noise: vec![NoiseChannel::white(1.0); n],
        }
    }

    /// Adds the edge `from -> to` with the given transfer.
    pub fn edge(mut self, from: usize, to: usize, transfer: RationalTransfer) -> Self {
        self.transfers.push((from, to, transfer));
        self
    }

    /// Static gain edge.
    pub fn gain(self, from: usize, to: usize, gain: f64) -> Self {
        self.edge(from, to, RationalTransfer::constant(gain))
    }

    /// Unit-delayed gain edge.
    pub fn delayed_gain(self, from: usize, to: usize, gain: f64) -> Self {
        self.edge(from, to, RationalTransfer::delayed_gain(gain, 1))
    }

    pub fn noise(mut self, node: usize, channel: NoiseChannel) -> Self {
        if node < self.n {
            self.noise[node] = channel;
        } else {
            // Deferred: build reports the range error with context.
            self.transfers.push((node, node, RationalTransfer::constant(0.0)));
        }
        self
    }

    pub fn build(self) -> Result<Ldim> {
        let mut transfers = BTreeMap::new();
        for (from, to, t) in self.transfers {
            if from >= self.n || to >= self.n {
                return Err(Error::InvalidModel(format!(
                    "edge ({from}, {to}) out of range for {} nodes",
                    self.n
                )));
            }
            if from == to {
                return Err(Error::InvalidModel(format!(
                    "self edge at node {from}: the transfer matrix diagonal must be zero"
                )));
            }
            if t.is_zero() {
                return Err(Error::InvalidModel(format!(
                    "edge ({from}, {to}) has an identically zero transfer; omit it instead"
                )));
            }
            if transfers.insert((from, to), t).is_some() {
                return Err(Error::InvalidModel(format!(
                    "duplicate edge ({from}, {to})"
                )));
            }
        }
        for (i, ch) in self.noise.iter().enumerate() {
            if !(ch.variance > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "noise variance at node {i} must be positive"
                )));
            }
            if ch.coloring.is_zero() {
                return Err(Error::InvalidModel(format!(
                    "noise coloring at node {i} is identically zero"
                )));
            }
        }
        let model = Ldim {
            n: self.n,
            transfers,
            noise: self.noise,
        };
        if let Err(cycle) = model.zero_lag_graph().topological_order() {
            return Err(Error::AlgebraicLoop { cycle });
        }
        Ok(model)
    }
}

/// Structural diagnosis of the model-class requirements: no directed
/// 2-cycles and a triangle-free skeleton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtfReport {
    pub two_cycles: Vec<(usize, usize)>,
    pub skeleton_triangles: Vec<(usize, usize, usize)>,
}

impl UtfReport {
    pub fn is_utf(&self) -> bool {
        self.two_cycles.is_empty() && self.skeleton_triangles.is_empty()
    }
}

impl Ldim {
    pub fn builder(n: usize) -> LdimBuilder {
        LdimBuilder::new(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn transfer(&self, from: usize, to: usize) -> Option<&RationalTransfer> {
        self.transfers.get(&(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &RationalTransfer)> {
        self.transfers.iter().map(|(&(f, t), tr)| (f, t, tr))
    }

    pub fn noise(&self, node: usize) -> &NoiseChannel {
        &self.noise[node]
    }

    /// Directed graph with an edge wherever the transfer is nonzero.
    pub fn causal_graph(&self) -> DirectedGraph {
        DirectedGraph::with_edges(self.n, self.transfers.keys().copied())
            .expect("edges validated at build")
    }

    /// Subgraph of edges with a nonzero direct feedthrough.
    pub fn zero_lag_graph(&self) -> DirectedGraph {
        let edges = self
            .transfers
            .iter()
            .filter(|(_, t)| t.feedthrough() != 0.0)
            .map(|(&e, _)| e);
        DirectedGraph::with_edges(self.n, edges).expect("edges validated at build")
    }

    /// Checks the model-class requirements and reports every violation.
    pub fn validate_utf(&self) -> UtfReport {
        let g = self.causal_graph();
        UtfReport {
            two_cycles: g.two_cycles(),
            skeleton_triangles: g.skeleton().triangles(),
        }
    }

    /// Largest lag order appearing in any transfer or coloring.
    pub fn max_order(&self) -> usize {
        let edge_order = self.transfers.values().map(|t| t.order()).max().unwrap_or(0);
        let noise_order = self
            .noise
            .iter()
            .map(|c| c.coloring.order())
            .max()
            .unwrap_or(0);
        edge_order.max(noise_order)
    }

    /// Output power spectral density on the grid:
    /// `S = (I - H)^-1 Phi_e (I - H)^-H` per frequency.
    pub fn psd(&self, grid: &FrequencyGrid) -> Result<SpectralDensity> {
        let needed = 2 * self.max_order() * 8;
        if grid.size() < needed {
            return Err(Error::ResolutionTooCoarse {
                detail: format!(
                    "model memory of order {} needs a grid of at least {needed} points, got {}",
                    self.max_order(),
                    grid.size()
                ),
            });
        }
        // Transfer evaluations, shared across frequencies.
        let mut evals = BTreeMap::new();
        for (&(from, to), t) in &self.transfers {
            evals.insert((from, to), t.eval_on_grid(grid)?);
        }
        let mut noise_psd = Vec::with_capacity(self.n);
        for (i, ch) in self.noise.iter().enumerate() {
            let f = ch.coloring.eval_on_grid(grid)?;
            let spec: Vec<f64> = f.iter().map(|v| ch.variance * v.norm_sqr()).collect();
            if spec.iter().any(|&s| s < 1e-12 * ch.variance) {
                return Err(Error::InvalidModel(format!(
                    "noise spectrum at node {i} vanishes on the grid"
                )));
            }
            noise_psd.push(spec);
        }
        let mats = (0..grid.size())
            .map(|k| {
                let mut a = DMatrix::<Complex64>::identity(self.n, self.n);
                for (&(from, to), vals) in &evals {
                    a[(to, from)] = -vals[k];
                }
                a
            })
            .collect();
        let response = ComplexMatrixField::new(*grid, mats)?.inverse()?;
        let half = (0..=grid.half())
            .map(|k| {
                let t = response.at(k);
                let mut scaled = t.clone();
                for (j, spec) in noise_psd.iter().enumerate() {
                    scaled.column_mut(j).scale_mut(spec[k]);
                }
                &scaled * t.adjoint()
            })
            .collect();
        SpectralDensity::from_half(*grid, half)
    }

    /// Draws one trajectory of `len` samples (columns) with zero initial
    /// conditions and a fixed seed.
    pub fn simulate(&self, len: usize, seed: u64) -> Result<DMatrix<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = self
            .topological_zero_lag_order()
            .expect("acyclicity enforced at build");

        struct Filt {
            num: Vec<f64>,
            den: Vec<f64>,
            out_hist: Vec<f64>,
        }
        impl Filt {
            fn new(t: &RationalTransfer) -> Self {
                Self {
                    num: t.num().coeffs().to_vec(),
                    den: t.den().coeffs().to_vec(),
                    out_hist: vec![0.0; t.den().coeffs().len().max(1)],
                }
            }
            /// Advances one step given a lookup for the input at `t - p`.
            fn step(&mut self, t: usize, input: impl Fn(usize) -> f64) -> f64 {
                let ring = self.out_hist.len();
                let mut v = 0.0;
                for (p, &c) in self.num.iter().enumerate() {
                    if c != 0.0 && t >= p {
                        v += c * input(p);
                    }
                }
                for (q, &d) in self.den.iter().enumerate().skip(1) {
                    if d != 0.0 && t >= q {
                        v -= d * self.out_hist[(t - q) % ring];
                    }
                }
                self.out_hist[t % ring] = v;
                v
            }
        }

        // Noise shaping state per node, edge filter state per edge.
        let mut noise_filts: Vec<Filt> = self
            .noise
            .iter()
            .map(|ch| Filt::new(&ch.coloring))
            .collect();
        let mut innov_hist: Vec<Vec<f64>> = self
            .noise
            .iter()
            .map(|ch| vec![0.0; ch.coloring.num().coeffs().len().max(1)])
            .collect();
        let mut edge_filts: BTreeMap<(usize, usize), Filt> = self
            .transfers
            .iter()
            .map(|(&e, t)| (e, Filt::new(t)))
            .collect();
        let incoming: Vec<Vec<(usize, usize)>> = (0..self.n)
            .map(|j| {
                self.transfers
                    .keys()
                    .filter(|&&(_, to)| to == j)
                    .copied()
                    .collect()
            })
            .collect();

        let mut y = DMatrix::<f64>::zeros(self.n, len);
        let mut e_now = vec![0.0; self.n];
        for t in 0..len {
            for i in 0..self.n {
                let w: f64 = StandardNormal.sample(&mut rng);
                let hist_len = innov_hist[i].len();
                innov_hist[i][t % hist_len] = w;
                let hist = &innov_hist[i];
                let shaped = noise_filts[i].step(t, |p| hist[(t - p) % hist_len]);
                e_now[i] = self.noise[i].variance.sqrt() * shaped;
            }
            for &j in &order {
                let mut v = e_now[j];
                for &(from, to) in &incoming[j] {
                    let filt = edge_filts.get_mut(&(from, to)).expect("keyed above");
                    v += filt.step(t, |p| y[(from, t - p)]);
                }
                if !v.is_finite() || v.abs() > DIVERGENCE_GUARD {
                    return Err(Error::DivergenceDetected { node: j, step: t });
                }
                y[(j, t)] = v;
            }
        }
        Ok(y)
    }

    fn topological_zero_lag_order(&self) -> std::result::Result<Vec<usize>, Vec<usize>> {
        self.zero_lag_graph().topological_order()
    }
}
