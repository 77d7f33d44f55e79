//! File formats: model description files, spectral-density dumps,
//! reconstruction reports, and sample matrices.
//!
//! Every file format numbers nodes `1..=n` (the `y1, y2, …` convention);
//! the library API is 0-based throughout. Conversion happens here and
//! nowhere else.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{FrequencyGrid, LaurentPolynomial, RationalTransfer};
use crate::model::{Ldim, NoiseChannel};
use crate::reconstruct::{ReconstructionReport, TriangleDiagnostic};
use crate::spectrum::SpectralDensity;
use crate::wiener::{LagClass, RegressorSpec};

// ---------------------------------------------------------------------------
// Model description files (TOML)
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n: usize,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
    #[serde(default)]
    noise: Vec<NoiseEntry>,
}

/// One directed channel `from → to` with rational dynamics; coefficient
/// lists are ordered `z⁰, z⁻¹, …` and the denominator defaults to `[1.0]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    from: usize,
    to: usize,
    num_coeffs: Vec<f64>,
    den_coeffs: Option<Vec<f64>>,
}

/// Innovation channel for one node, listed positionally for nodes `1..=n`.
/// Coloring is an optional FIR filter applied to the white innovation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseEntry {
    variance: f64,
    coloring_coeffs: Option<Vec<f64>>,
}

fn to_internal(node: usize, n: usize, what: &str) -> Result<usize> {
    if node == 0 || node > n {
        return Err(Error::InvalidInput(format!(
            "{what} node {node} is outside 1..={n}"
        )));
    }
    Ok(node - 1)
}

/// Parses a model description from TOML text.
pub fn parse_model(text: &str) -> Result<Ldim> {
    let file: ModelFile =
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("model file: {e}")))?;
    let mut builder = Ldim::builder(file.n);
    for edge in &file.edges {
        let from = to_internal(edge.from, file.n, "edge source")?;
        let to = to_internal(edge.to, file.n, "edge target")?;
        let num = LaurentPolynomial::new(edge.num_coeffs.clone());
        let den = LaurentPolynomial::new(edge.den_coeffs.clone().unwrap_or_else(|| vec![1.0]));
        builder = builder.edge(from, to, RationalTransfer::new(num, den)?);
    }
    if !file.noise.is_empty() {
        if file.noise.len() != file.n {
            return Err(Error::InvalidInput(format!(
                "noise table must list one entry per node (expected {}, got {})",
                file.n,
                file.noise.len()
            )));
        }
        for (node, entry) in file.noise.iter().enumerate() {
            let channel = match &entry.coloring_coeffs {
                Some(coeffs) => NoiseChannel::colored(
                    entry.variance,
                    RationalTransfer::fir(coeffs.clone()),
                ),
                None => NoiseChannel::white(entry.variance),
            };
            builder = builder.noise(node, channel);
        }
    }
    builder.build()
}

/// Reads and parses a model description file.
pub fn read_model(path: &Path) -> Result<Ldim> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Spectral-density dumps (JSON)
// ---------------------------------------------------------------------------

/// On-disk shape of a spectral density: the conjugate-symmetric half of the
/// frequency grid, each matrix stored row-major as `[re, im]` pairs.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PsdDump {
    grid_size: usize,
    nodes: usize,
    half: Vec<Vec<Vec<[f64; 2]>>>,
}

const DUMP_DIGITS: i32 = 12;

/// Rounds to [`DUMP_DIGITS`] significant digits so dumps are byte-stable
/// and a dump → load → dump cycle is a fixed point.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(DUMP_DIGITS - 1 - mag);
    (x * scale).round() / scale
}

/// Serializes the half-grid of a spectral density as JSON.
pub fn psd_to_json(s: &SpectralDensity) -> String {
    let grid = s.grid();
    let n = s.n();
    let half = (0..=grid.half())
        .map(|k| {
            let m = s.at(k);
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| [round_sig(m[(i, j)].re), round_sig(m[(i, j)].im)])
                        .collect()
                })
                .collect()
        })
        .collect();
    let dump = PsdDump {
        grid_size: grid.size(),
        nodes: n,
        half,
    };
    serde_json::to_string(&dump).expect("spectral density dump serializes")
}

/// Parses a JSON spectral-density dump back into a validated density.
pub fn parse_psd_json(text: &str) -> Result<SpectralDensity> {
    let dump: PsdDump =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("psd dump: {e}")))?;
    if dump.nodes == 0 {
        return Err(Error::InvalidInput("psd dump has zero nodes".into()));
    }
    let grid = FrequencyGrid::new(dump.grid_size)?;
    let mut half = Vec::with_capacity(dump.half.len());
    for (k, rows) in dump.half.iter().enumerate() {
        if rows.len() != dump.nodes || rows.iter().any(|r| r.len() != dump.nodes) {
            return Err(Error::InvalidInput(format!(
                "psd dump matrix at frequency index {k} is not {0}×{0}",
                dump.nodes
            )));
        }
        half.push(DMatrix::from_fn(dump.nodes, dump.nodes, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        }));
    }
    SpectralDensity::from_half(grid, half)
}

/// Reads and parses a spectral-density dump file.
pub fn read_psd(path: &Path) -> Result<SpectralDensity> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_psd_json(&text).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Reconstruction reports (JSON and DOT)
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ReportDoc {
    status: &'static str,
    nodes: usize,
    moral_bound_edges: Vec<[usize; 2]>,
    output_edges: Vec<[usize; 2]>,
    triangles: Vec<TriangleDoc>,
}

#[derive(Serialize)]
struct TriangleDoc {
    nodes: [usize; 3],
    removable_edges: Vec<EdgeDoc>,
}

#[derive(Serialize)]
struct EdgeDoc {
    edge: [usize; 2],
    subsets_searched: usize,
    low_confidence: bool,
    witnesses: WitnessDoc,
}

#[derive(Serialize)]
struct WitnessDoc {
    md1: Option<SpecDoc>,
    md2: Option<SpecDoc>,
    md3: Option<SpecDoc>,
}

/// A conditioning design: which node is regressed and which regressors are
/// taken with present lags versus strictly delayed lags only.
#[derive(Serialize)]
struct SpecDoc {
    target: usize,
    present: Vec<usize>,
    delayed: Vec<usize>,
}

fn spec_doc(spec: &Option<RegressorSpec>) -> Option<SpecDoc> {
    spec.as_ref().map(|s| SpecDoc {
        target: s.target() + 1,
        present: s
            .entries()
            .iter()
            .filter(|(_, c)| *c == LagClass::Present)
            .map(|(node, _)| node + 1)
            .collect(),
        delayed: s
            .entries()
            .iter()
            .filter(|(_, c)| *c == LagClass::Delayed)
            .map(|(node, _)| node + 1)
            .collect(),
    })
}

fn triangle_doc(t: &TriangleDiagnostic) -> TriangleDoc {
    TriangleDoc {
        nodes: [t.nodes.0 + 1, t.nodes.1 + 1, t.nodes.2 + 1],
        removable_edges: t
            .removable_edges
            .iter()
            .map(|e| EdgeDoc {
                edge: [e.edge.0 + 1, e.edge.1 + 1],
                subsets_searched: e.subsets_searched,
                low_confidence: e.low_confidence,
                witnesses: WitnessDoc {
                    md1: spec_doc(&e.md1_witness),
                    md2: spec_doc(&e.md2_witness),
                    md3: spec_doc(&e.md3_witness),
                },
            })
            .collect(),
    }
}

fn one_based_edges(edges: impl Iterator<Item = (usize, usize)>) -> Vec<[usize; 2]> {
    edges.map(|(i, j)| [i + 1, j + 1]).collect()
}

/// Renders a reconstruction report as JSON with 1-based node numbers.
pub fn report_to_json(report: &ReconstructionReport) -> String {
    let doc = ReportDoc {
        status: report.status.as_str(),
        nodes: report.nodes,
        moral_bound_edges: one_based_edges(report.moral_bound.edges()),
        output_edges: one_based_edges(report.output.edges()),
        triangles: report.triangles.iter().map(triangle_doc).collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Renders a reconstruction report as a DOT graph: kept edges solid,
/// edges removed from the conditional-dependence bound dashed.
pub fn report_to_dot(report: &ReconstructionReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("// status: {}\n", report.status.as_str()));
    out.push_str("graph skeleton {\n");
    for node in 0..report.nodes {
        out.push_str(&format!("  y{};\n", node + 1));
    }
    for (i, j) in report.output.edges() {
        out.push_str(&format!("  y{} -- y{};\n", i + 1, j + 1));
    }
    for (i, j) in report.moral_bound.edges() {
        if !report.output.has_edge(i, j) {
            out.push_str(&format!(
                "  y{} -- y{} [style=dashed, label=\"removed\"];\n",
                i + 1,
                j + 1
            ));
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Serialize)]
struct VerdictDoc {
    separated: bool,
    margin: f64,
    low_confidence: bool,
    design: Option<SpecDoc>,
}

/// Renders a separation verdict as JSON with 1-based node numbers.
pub fn verdict_to_json(v: &crate::wiener::SeparationVerdict) -> String {
    let witness = Some(v.witness.clone());
    let doc = VerdictDoc {
        separated: v.separated,
        margin: v.margin,
        low_confidence: v.low_confidence,
        design: spec_doc(&witness),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("verdict serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// Sample matrices (CSV)
// ---------------------------------------------------------------------------

/// Renders a node × time sample matrix as CSV: header `y1,…,yn`, one row
/// per time step.
pub fn samples_to_csv(samples: &DMatrix<f64>) -> String {
    let n = samples.nrows();
    let mut out = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for t in 0..samples.ncols() {
        let row: Vec<String> = (0..n).map(|i| format!("{}", samples[(i, t)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a CSV sample file produced by [`samples_to_csv`] (or any file
/// with a `y1,…,yn` header and one time step per row) into a node × time
/// matrix.
pub fn parse_csv_samples(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("csv samples: empty file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = names.len();
    for (i, name) in names.iter().enumerate() {
        if *name != format!("y{}", i + 1) {
            return Err(Error::InvalidInput(format!(
                "csv samples: expected header column y{}, got {name:?}",
                i + 1
            )));
        }
    }
    let mut values: Vec<f64> = Vec::new();
    let mut steps = 0usize;
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != n {
            return Err(Error::InvalidInput(format!(
                "csv samples: row {} has {} fields, expected {n}",
                row + 1,
                fields.len()
            )));
        }
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                Error::InvalidInput(format!("csv samples: bad number {field:?} in row {}", row + 1))
            })?;
            values.push(v);
        }
        steps += 1;
    }
    if steps == 0 {
        return Err(Error::InvalidInput("csv samples: no data rows".into()));
    }
    // Values arrived row-major (time-major); DMatrix::from_row_slice wants the
    // transpose of our node × time layout, so build time × node and transpose.
    Ok(DMatrix::from_row_slice(steps, n, &values).transpose())
}

/// Reads and parses a CSV sample file.
pub fn read_csv_samples(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_csv_samples(&text)
}

// ---------------------------------------------------------------------------
// Averaged periodogram (experimental measured-data path)
// ---------------------------------------------------------------------------

/// Estimates a spectral density from measured samples by the averaged,
/// lag-window-smoothed periodogram: the record is demeaned, split into
/// `⌊T/N⌋` disjoint segments, the rank-one segment periodograms are
/// averaged, and the average is smoothed with a triangular lag window of
/// half-width `smoothing_lags`. Averaging and the triangular window both
/// preserve positive semidefiniteness, and the window confines estimation
/// noise to low lags so downstream filter truncation stays sound.
///
/// This is a statistical estimate, not the exact density the
/// reconstruction guarantees assume; results from it are best-effort.
/// Requires at least `8·grid_size` samples.
pub fn periodogram(
    samples: &DMatrix<f64>,
    grid_size: usize,
    smoothing_lags: usize,
) -> Result<SpectralDensity> {
    let grid = FrequencyGrid::new(grid_size)?;
    let n = samples.nrows();
    let t = samples.ncols();
    if n == 0 {
        return Err(Error::InvalidInput("periodogram: no channels".into()));
    }
    if t < 8 * grid_size {
        return Err(Error::InvalidInput(format!(
            "periodogram: need at least {} samples for grid size {grid_size}, got {t}",
            8 * grid_size
        )));
    }
    if smoothing_lags == 0 || 4 * smoothing_lags > grid_size {
        return Err(Error::InvalidInput(format!(
            "periodogram: smoothing window {smoothing_lags} must be positive and at most a \
             quarter of the grid size {grid_size}"
        )));
    }
    let segments = t / grid_size;
    let means: Vec<f64> = (0..n).map(|i| samples.row(i).mean()).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(grid_size);
    let mut acc = vec![DMatrix::<Complex64>::zeros(n, n); grid_size];
    let mut spectra = vec![vec![Complex64::ZERO; grid_size]; n];
    for s in 0..segments {
        let start = s * grid_size;
        for (i, row) in spectra.iter_mut().enumerate() {
            for (tau, slot) in row.iter_mut().enumerate() {
                *slot = Complex64::new(samples[(i, start + tau)] - means[i], 0.0);
            }
            fft.process(row);
        }
        for (k, slot) in acc.iter_mut().enumerate() {
            let x = DMatrix::from_fn(n, 1, |i, _| spectra[i][k]);
            *slot += &x * x.adjoint();
        }
    }
    let scale = 1.0 / (grid_size as f64 * segments as f64);

    // Lag-window smoothing, entry by entry: inverse-transform the raw
    // estimate, taper the covariances with a triangular window vanishing
    // beyond `smoothing_lags`, and transform back.
    let inverse = planner.plan_fft_inverse(grid_size);
    let window = |tau: usize| -> f64 {
        let dist = tau.min(grid_size - tau) as f64;
        (1.0 - dist / (smoothing_lags as f64 + 1.0)).max(0.0)
    };
    let mut smoothed = vec![DMatrix::<Complex64>::zeros(n, n); grid_size];
    let mut buf = vec![Complex64::ZERO; grid_size];
    for i in 0..n {
        for j in 0..n {
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = acc[k][(i, j)] * scale;
            }
            inverse.process(&mut buf);
            for (tau, slot) in buf.iter_mut().enumerate() {
                *slot *= window(tau) / grid_size as f64;
            }
            fft.process(&mut buf);
            for (k, slot) in buf.iter().enumerate() {
                smoothed[k][(i, j)] = *slot;
            }
        }
    }
    let half: Vec<DMatrix<Complex64>> = smoothed
        .into_iter()
        .take(grid.half() + 1)
        .map(|m| (&m + m.adjoint()) * Complex64::new(0.5, 0.0))
        .collect();
    SpectralDensity::from_half(grid, half)
}
