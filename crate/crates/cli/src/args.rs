use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "aggregate",
    version,
    about = "Collective error of compressed majority-vote aggregation"
)]
pub struct Cli {
    /// Worker threads for sweeps and simulations (default: machine parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Rate-distortion function R(D) or its inverse D(R).
    Rd(RdArgs),
    /// Noise thresholds p1, p0 and p* as JSON.
    Thresholds(ModelArgs),
    /// Optimal and pessimistic rates with decay rates over a noise grid (CSV).
    SweepRates(SweepRatesArgs),
    /// Exact and asymptotic collective error against lossless aggregation (CSV).
    ErrorCurve(ErrorCurveArgs),
    /// Measured capacity-scaling exponent for a list of factors (JSON).
    Scaling(ScalingArgs),
    /// Monte Carlo batch with its analytic prediction (JSON).
    Simulate(SimulateArgs),
    /// Check a distortion table against the Shannon bound (JSON, exit 3 on failure).
    ValidateTable(ValidateTableArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rd(_) => "rd",
            Command::Thresholds(_) => "thresholds",
            Command::SweepRates(_) => "sweep-rates",
            Command::ErrorCurve(_) => "error-curve",
            Command::Scaling(_) => "scaling",
            Command::Simulate(_) => "simulate",
            Command::ValidateTable(_) => "validate-table",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Simulate(a) => Some(a.seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct RdArgs {
    /// Print R(D) for this distortion.
    #[arg(long, value_parser = parse_number)]
    pub dist: Option<f64>,
    /// Print D(R) for this rate.
    #[arg(long, value_parser = parse_number)]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// `shannon` or `table:<path>`.
    #[arg(long, default_value = "shannon")]
    pub model: ModelSpec,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepRatesArgs {
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long)]
    pub p_grid: Grid,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ErrorCurveArgs {
    #[arg(long)]
    pub p_grid: Grid,
    /// Comma-separated rates; fractions such as `2/3` are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_number, default_value = "1,2/3")]
    pub rates: Vec<f64>,
    #[arg(long, value_parser = parse_number)]
    pub lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_parser = parse_number)]
    pub p: f64,
    #[arg(long, value_parser = parse_number)]
    pub r: f64,
    /// Base capacity; each factor beta is evaluated at beta * lambda.
    #[arg(long, value_parser = parse_number)]
    pub lambda: f64,
    #[arg(long, value_delimiter = ',', value_parser = parse_number, default_value = "1,2,4")]
    pub betas: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_number)]
    pub p: f64,
    #[arg(long, value_parser = parse_number)]
    pub r: f64,
    #[arg(long, value_parser = parse_number)]
    pub lambda: f64,
    /// Total bit positions; overrides --trials.
    #[arg(long)]
    pub bits: Option<u64>,
    /// Bits per trial block.
    #[arg(long, default_value_t = aggregation_core::simulate::DEFAULT_BLOCK_BITS)]
    pub block: u64,
    #[arg(long, default_value_t = aggregation_core::simulate::DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Refuse runs with more than this many bit positions.
    #[arg(long, default_value_t = aggregation_core::simulate::DEFAULT_BUDGET_CAP)]
    pub budget_cap: u128,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateTableArgs {
    pub path: PathBuf,
}

/// Accepts plain decimals and `a/b` fractions.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("'{s}': {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("'{s}': {e}"))?;
            num / den
        }
        None => s.parse().map_err(|e| format!("'{s}': {e}"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("'{s}' is not a finite number"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Shannon,
    Table(PathBuf),
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shannon" => Ok(ModelSpec::Shannon),
            _ => match s.strip_prefix("table:") {
                Some(path) if !path.is_empty() => Ok(ModelSpec::Table(path.into())),
                _ => Err(format!(
                    "unknown model '{s}' (expected shannon or table:<path>)"
                )),
            },
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ModelSpec::Shannon => s.serialize_str("shannon"),
            ModelSpec::Table(path) => s.serialize_str(&format!("table:{}", path.display())),
        }
    }
}

/// Noise grid, kept together with the text it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: String,
    pub values: Vec<f64>,
}

const MAX_GRID_POINTS: usize = 10_000_000;

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [start, stop, step] => {
                let (start, stop, step) = (
                    parse_number(start)?,
                    parse_number(stop)?,
                    parse_number(step)?,
                );
                if step <= 0.0 || stop < start {
                    return Err(format!("grid '{s}' needs start <= stop and step > 0"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if n > MAX_GRID_POINTS {
                    return Err(format!("grid '{s}' has {n} points"));
                }
                // index-based so the points do not drift; 12 decimals keeps
                // 0.1 + 0.005 * 1 printing as 0.105
                (0..n)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
            [_] => s
                .split(',')
                .map(parse_number)
                .collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("grid '{s}' is neither start:stop:step nor a list")),
        };
        Ok(Grid {
            spec: s.to_owned(),
            values,
        })
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.spec)
    }
}
