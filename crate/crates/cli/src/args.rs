use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "szego", version, about = "Szegő kernel and equivariant embedding campaigns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Dimensions d_m of the level-m spaces.
    Dims(CommonArgs),
    /// Exact round-sphere monomial norms.
    Norms(CommonArgs),
    /// Kernel values S_m(x, y).
    Kernel(CommonArgs),
    /// Diagonal expansion fit.
    Fit(CommonArgs),
    /// Vanishing certificate on a singular stratum.
    Vanish(CommonArgs),
    /// Ratio diagnostics near a singular point.
    Ratio(CommonArgs),
    /// Circle averages Q_m u of a polynomial.
    Project(CommonArgs),
    /// Equivariant embedding certificate.
    Embed(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dims(_) => "dims",
            Command::Norms(_) => "norms",
            Command::Kernel(_) => "kernel",
            Command::Fit(_) => "fit",
            Command::Vanish(_) => "vanish",
            Command::Ratio(_) => "ratio",
            Command::Project(_) => "project",
            Command::Embed(_) => "embed",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Dims(a)
            | Command::Norms(a)
            | Command::Kernel(a)
            | Command::Fit(a)
            | Command::Vanish(a)
            | Command::Ratio(a)
            | Command::Project(a)
            | Command::Embed(a) => a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureChoice {
    /// Round-exact on spheres; compliant quadrature elsewhere and for fit/ratio.
    Auto,
    Round,
    Compliant,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Preset manifold: `sphere` or `example2`.
    #[arg(long, conflicts_with = "manifold")]
    pub preset: Option<String>,
    /// JSON manifold description.
    #[arg(long)]
    pub manifold: Option<PathBuf>,
    /// Ambient dimension for the sphere preset.
    #[arg(long)]
    pub n: Option<usize>,
    /// Action weights, comma separated; implies the sphere preset if none is given.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<u32>>,
    /// Level, inclusive range `a..b`, or embedding parameter.
    #[arg(long = "m", visible_alias = "m-range")]
    pub m: Option<LevelRange>,
    /// Lower bound for the minimal embedding weight.
    #[arg(long)]
    pub m0: Option<u32>,
    /// Extra embedding levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub extra_levels: Vec<u32>,
    /// Point of X as comma-separated complex numbers (`1`, `0.5+0.5i`); radially projected.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<PointArg>,
    /// Second kernel argument; defaults to --point.
    #[arg(long, allow_hyphen_values = true)]
    pub point2: Option<PointArg>,
    /// Polynomial in the JSON term format, inline or as a file path.
    #[arg(long)]
    pub function: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo sample count for compliant quadrature.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Immersion samples for `embed`, neighbourhood points for `ratio`.
    #[arg(long)]
    pub points: Option<usize>,
    /// Separation pairs.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Worker cap; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory for CSV and JSON reports; CSV goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Contract tolerance override.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value_t = MeasureChoice::Auto)]
    pub measure: MeasureChoice,
    /// Directory for cached bases.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

/// Inclusive level range; a single value is the range `m..=m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub start: u32,
    pub end: u32,
}

impl LevelRange {
    pub fn levels(&self) -> Vec<u32> {
        (self.start..=self.end).collect()
    }
}

impl FromStr for LevelRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parse = |t: &str| t.trim().parse::<u32>().with_context(|| format!("bad level {t:?}"));
        let (start, end) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let m = parse(s)?;
                (m, m)
            }
        };
        if start > end {
            bail!("empty level range {s:?}");
        }
        Ok(Self { start, end })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointArg(pub Vec<Complex64>);

impl FromStr for PointArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        s.split(',')
            .map(|t| {
                let t = t.trim();
                Complex64::from_str(t).map_err(|_| anyhow!("bad coordinate {t:?}"))
            })
            .collect::<anyhow::Result<_>>()
            .map(PointArg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!("7".parse::<LevelRange>().unwrap().levels(), vec![7]);
        assert_eq!("2..4".parse::<LevelRange>().unwrap().levels(), vec![2, 3, 4]);
        assert_eq!("2..=4".parse::<LevelRange>().unwrap().levels(), vec![2, 3, 4]);
        assert!("5..4".parse::<LevelRange>().is_err());
        assert!("a".parse::<LevelRange>().is_err());
    }

    #[test]
    fn points() {
        let p: PointArg = "0,1".parse().unwrap();
        assert_eq!(p.0, vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let p: PointArg = "0.5+0.5i,-0.5i".parse().unwrap();
        assert_eq!(p.0, vec![Complex64::new(0.5, 0.5), Complex64::new(0.0, -0.5)]);
        assert!("x".parse::<PointArg>().is_err());
    }
}
