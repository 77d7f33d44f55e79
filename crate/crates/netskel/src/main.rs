//! Command-line interface: model validation, spectral-density dumps,
//! separation queries, skeleton reconstruction with certificates, and
//! simulation export.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netskel::config::{OutputFormat, RunConfig};
use netskel::error::{Error, Result};
use netskel::io;
use netskel::lti::FrequencyGrid;
use netskel::reconstruct::Status;
use netskel::spectrum::SpectralDensity;
use netskel::wiener::{cwsep, wsep, LagClass};

/// Reconstructs the undirected skeleton of a linear dynamic network from
/// its output power spectral density.
///
/// The result is either certified exact or flagged as a sparser skeleton
/// that the spectrum cannot distinguish from the truth; reported edges are
/// never false positives. Configuration is read from the file named by
/// NETSKEL_CONFIG (default ./netskel.toml if present); flags override it.
#[derive(Parser)]
#[command(name = "netskel", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Frequency-grid size (even, at least 4; at least 4× the lag horizon)
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Lag horizon for covariances and filter truncation
    #[arg(long, global = true, value_name = "M")]
    max_lag: Option<usize>,
    /// Separation tolerance on normalized filter margins
    #[arg(long, global = true, value_name = "EPS")]
    eps: Option<f64>,
    /// Largest conditioning pool an edge probe will search exhaustively
    #[arg(long, global = true, value_name = "K")]
    search_cap: Option<usize>,
    /// RNG seed for simulation
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,
    /// Output format for reconstruction reports
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Let edge probes regress on the target's own strict past as well
    #[arg(long, global = true)]
    target_self_lags: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Relation {
    /// Zero full-conditional dependence at all lags
    Wsep,
    /// Zero causal-conditional dependence (delayed blocks allowed)
    Cwsep,
}

#[derive(Subcommand)]
enum Command {
    /// Check the class conditions: no feedback between node pairs and a
    /// triangle-free skeleton. Exits 0 when they hold, 1 when they fail.
    Validate {
        /// Model description file
        model: PathBuf,
    },
    /// Compute the output spectral density and dump it as JSON on stdout
    Psd {
        /// Model description file
        model: PathBuf,
    },
    /// Reconstruct the skeleton and print a report. Exit code mirrors the
    /// certificate: 0 exact, 3 flagged sparser-than-truth, 4 assumption
    /// violation.
    Reconstruct {
        /// Model description file (TOML) or spectral-density dump (JSON)
        input: Option<PathBuf>,
        /// Estimate the density from CSV samples by a smoothed averaged
        /// periodogram. This is a statistical estimate outside the exactness
        /// guarantees; pair it with an --eps matched to the sampling noise
        /// (e.g. 0.05) and treat the result as best-effort.
        #[arg(long, value_name = "CSV", conflicts_with = "input")]
        experimental_from_csv: Option<PathBuf>,
    },
    /// Evaluate one separation relation and print the verdict as JSON
    Query {
        /// Model description file (TOML) or spectral-density dump (JSON)
        input: PathBuf,
        /// Which relation to test
        #[arg(value_enum)]
        relation: Relation,
        /// Target node, e.g. y2 or 2
        #[arg(long)]
        target: String,
        /// Comma-separated conditioning nodes; suffix :d marks a
        /// delayed-only block (cwsep only), e.g. y1,y3:d
        #[arg(long, default_value = "", hide_default_value = true)]
        cond: String,
        /// Tested node, e.g. y4; suffix :d tests its delayed block (cwsep)
        #[arg(long)]
        tested: String,
    },
    /// Simulate the model and print a CSV sample matrix on stdout
    Simulate {
        /// Model description file
        model: PathBuf,
        /// Number of time steps
        #[arg(long, value_name = "T")]
        steps: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_) | Error::InvalidSpec(_) | Error::InvalidModel(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut config = RunConfig::load()?;
    let o = &cli.overrides;
    if let Some(v) = o.grid {
        config.grid_size = v;
    }
    if let Some(v) = o.max_lag {
        config.max_lag = v;
    }
    if let Some(v) = o.eps {
        config.epsilon = v;
    }
    if let Some(v) = o.search_cap {
        config.search_cap = v;
    }
    if let Some(v) = o.seed {
        config.seed = v;
    }
    if let Some(v) = o.format {
        config.format = match v {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Dot => OutputFormat::Dot,
        };
    }
    if o.target_self_lags {
        config.target_self_lags = true;
    }
    config.validate()?;

    match &cli.command {
        Command::Validate { model } => cmd_validate(model),
        Command::Psd { model } => cmd_psd(model, &config),
        Command::Reconstruct {
            input,
            experimental_from_csv,
        } => cmd_reconstruct(input.as_deref(), experimental_from_csv.as_deref(), &config),
        Command::Query {
            input,
            relation,
            target,
            cond,
            tested,
        } => cmd_query(input, *relation, target, cond, tested, &config),
        Command::Simulate { model, steps } => cmd_simulate(model, *steps, &config),
    }
}

fn cmd_validate(model: &Path) -> Result<u8> {
    let model = io::read_model(model)?;
    let report = model.validate_utf();
    if report.is_utf() {
        println!("UTF: true");
        Ok(0)
    } else if let Some((i, j)) = report.two_cycles.first() {
        println!("UTF: false (two-cycle {},{})", i + 1, j + 1);
        Ok(1)
    } else {
        let (i, j, k) = report.skeleton_triangles[0];
        println!("UTF: false (triangle {},{},{})", i + 1, j + 1, k + 1);
        Ok(1)
    }
}

fn cmd_psd(model: &Path, config: &RunConfig) -> Result<u8> {
    let model = io::read_model(model)?;
    let grid = FrequencyGrid::new(config.grid_size)?;
    let s = model.psd(&grid)?;
    println!("{}", io::psd_to_json(&s));
    Ok(0)
}

/// Loads a spectral density from either a model description (TOML) or a
/// density dump (JSON), distinguished by content. A dump keeps its own
/// grid; a model is evaluated on the configured grid.
fn load_density(path: &Path, config: &RunConfig) -> Result<SpectralDensity> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        io::parse_psd_json(&text)
            .map_err(|e| annotate(e, path))
    } else {
        let model = io::parse_model(&text).map_err(|e| annotate(e, path))?;
        let grid = FrequencyGrid::new(config.grid_size)?;
        model.psd(&grid)
    }
}

fn annotate(e: Error, path: &Path) -> Error {
    match e {
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{}: {msg}", path.display())),
        other => other,
    }
}

fn cmd_reconstruct(
    input: Option<&Path>,
    from_csv: Option<&Path>,
    config: &RunConfig,
) -> Result<u8> {
    let s = match (input, from_csv) {
        (Some(path), None) => load_density(path, config)?,
        (None, Some(path)) => {
            let samples = io::read_csv_samples(path)?;
            // Smooth to half the lag horizon so estimation noise stays in
            // lags the filter truncation can absorb.
            io::periodogram(&samples, config.grid_size, (config.max_lag / 2).max(1))?
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "reconstruct needs an input file or --experimental-from-csv".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let report = netskel::reconstruct::utf_sr(&s, &config.reconstruct_settings())?;
    match config.format {
        OutputFormat::Json => print!("{}", io::report_to_json(&report)),
        OutputFormat::Dot => print!("{}", io::report_to_dot(&report)),
    }
    Ok(match report.status {
        Status::CertifiedExact => 0,
        Status::FlaggedLowerBound => 3,
        Status::AssumptionViolation => 4,
    })
}

/// Parses a node token: `y3` or `3`, optionally suffixed `:d` for the
/// delayed-only block. Numbers in commands are 1-based.
fn parse_node(token: &str, n: usize) -> Result<(usize, LagClass)> {
    let (name, class) = match token.strip_suffix(":d") {
        Some(rest) => (rest, LagClass::Delayed),
        None => (token, LagClass::Present),
    };
    let digits = name.strip_prefix('y').unwrap_or(name);
    let index: usize = digits
        .parse()
        .map_err(|_| Error::InvalidInput(format!("cannot parse node {token:?}")))?;
    if index == 0 || index > n {
        return Err(Error::InvalidInput(format!(
            "node {token:?} is outside 1..={n}"
        )));
    }
    Ok((index - 1, class))
}

fn parse_node_list(list: &str, n: usize) -> Result<Vec<(usize, LagClass)>> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_node(t, n))
        .collect()
}

fn cmd_query(
    input: &Path,
    relation: Relation,
    target: &str,
    cond: &str,
    tested: &str,
    config: &RunConfig,
) -> Result<u8> {
    let s = load_density(input, config)?;
    let n = s.n();
    let (target, target_class) = parse_node(target, n)?;
    if target_class != LagClass::Present {
        return Err(Error::InvalidInput(
            "the target node cannot carry a :d suffix".into(),
        ));
    }
    let cond = parse_node_list(cond, n)?;
    let (tested_node, tested_class) = parse_node(tested, n)?;
    if tested_node == target || cond.iter().any(|(node, _)| *node == target) {
        return Err(Error::InvalidInput(
            "self-queries are not defined: the target cannot appear as tested or conditioning node"
                .into(),
        ));
    }
    let verdict = match relation {
        Relation::Wsep => {
            if tested_class != LagClass::Present || cond.iter().any(|(_, c)| *c != LagClass::Present)
            {
                return Err(Error::InvalidInput(
                    "delayed-block markers (:d) only apply to cwsep".into(),
                ));
            }
            let set = cond.iter().map(|(node, _)| *node).collect();
            wsep(
                &s,
                target,
                &set,
                tested_node,
                config.max_lag,
                config.epsilon,
            )?
        }
        Relation::Cwsep => {
            let r = s.covariances(config.max_lag)?;
            cwsep(
                &r,
                target,
                &cond,
                (tested_node, tested_class),
                config.max_lag,
                config.epsilon,
            )?
        }
    };
    print!("{}", io::verdict_to_json(&verdict));
    Ok(0)
}

fn cmd_simulate(model: &Path, steps: usize, config: &RunConfig) -> Result<u8> {
    let model = io::read_model(model)?;
    let samples = model.simulate(steps, config.seed)?;
    print!("{}", io::samples_to_csv(&samples));
    Ok(0)
}
