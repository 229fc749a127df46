//! Run configuration: built-in defaults, then an optional `key = value`
//! config file, then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use toroskew::Family;

use crate::dataset::Unit;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "toroskew", version, about = "Sine-skewed toroidal distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Fit a model (or compare models) to angles in a CSV file.
    Fit { input: PathBuf },
    /// Draw from a model given by flags or --model-file.
    Sample,
    /// Evaluate a bivariate density on a grid and locate its modes.
    Grid,
    /// Mean direction, concentration, variance, skewness and kurtosis.
    Moments,
    /// Likelihood-ratio test of lambda = 0 on a CSV file.
    TestSymmetry { input: PathBuf },
}

#[derive(Debug, Default, Args)]
pub struct Options {
    /// Base family: uniform, sine, cosine or wc.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Fit the sine-skewed version.
    #[arg(long, global = true)]
    pub skewed: bool,
    /// Number of mixture components.
    #[arg(long, global = true, value_name = "K")]
    pub mixture: Option<usize>,
    /// Fit and rank S, SS, C, SC, WC and SWC.
    #[arg(long, global = true)]
    pub compare: bool,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Input angle unit: rad or deg.
    #[arg(long, global = true)]
    pub unit: Option<String>,
    /// Angle columns, by 0-based index or header name (e.g. 1,2 or phi,psi).
    #[arg(long, global = true)]
    pub columns: Option<String>,
    /// Column with labels; each label's rows are fitted separately.
    #[arg(long, global = true, value_name = "COL")]
    pub group_by: Option<String>,
    /// Optimizer starts per fit.
    #[arg(long, global = true, value_name = "N")]
    pub starts: Option<usize>,
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// File of `key = value` lines overriding the defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Location, comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    /// Dependence: r for bivariate models, the upper triangle of R otherwise.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub dep: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Number of draws.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// JSON model (single or mixture), as written in fit reports.
    #[arg(long, global = true, value_name = "PATH")]
    pub model_file: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long, global = true, value_name = "R")]
    pub resolution: Option<usize>,
    /// k-means initial partitions per mixture fit.
    #[arg(long, global = true)]
    pub n_init: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Sample,
    Grid,
    Moments,
    TestSymmetry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub family: Family,
    pub skewed: bool,
    pub mixture: usize,
    pub compare: bool,
    pub seed: u64,
    pub unit: Unit,
    pub columns: Option<Vec<String>>,
    pub group_by: Option<String>,
    pub starts: usize,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub n: usize,
    pub resolution: usize,
    pub n_init: usize,
    pub mu: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub dep: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub model_file: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Usage(format!("invalid value '{v}' for {key}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|t| parse::<f64>(key, t)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Usage(format!("invalid value '{v}' for {key}"))),
    }
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: None,
            family: Family::Sine,
            skewed: false,
            mixture: 1,
            compare: false,
            seed: 0,
            unit: Unit::Radians,
            columns: None,
            group_by: None,
            starts: 20,
            tol: 1e-8,
            out: None,
            n: 1000,
            resolution: 200,
            n_init: 5,
            mu: None,
            kappa: None,
            dep: None,
            lambda: None,
            dim: None,
            model_file: None,
        }
    }

    /// Set one option from its textual form. Keys use `_` or `-`.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let k = key.trim().replace('-', "_");
        match k.as_str() {
            "model" => {
                self.family = value.parse().map_err(|_| CliError::Usage(format!("unknown model '{value}'")))?
            }
            "skewed" => self.skewed = parse_bool(&k, value)?,
            "mixture" => self.mixture = parse(&k, value)?,
            "compare" => self.compare = parse_bool(&k, value)?,
            "seed" => self.seed = parse(&k, value)?,
            "unit" => self.unit = value.parse()?,
            "columns" => self.columns = Some(value.split(',').map(|s| s.trim().to_string()).collect()),
            "group_by" => self.group_by = Some(value.trim().to_string()),
            "starts" => self.starts = parse(&k, value)?,
            "tol" => self.tol = parse(&k, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "n" => self.n = parse(&k, value)?,
            "resolution" => self.resolution = parse(&k, value)?,
            "n_init" => self.n_init = parse(&k, value)?,
            "mu" => self.mu = Some(parse_list(&k, value)?),
            "kappa" => self.kappa = Some(parse_list(&k, value)?),
            "dep" => self.dep = Some(parse_list(&k, value)?),
            "lambda" => self.lambda = Some(parse_list(&k, value)?),
            "dim" => self.dim = Some(parse(&k, value)?),
            "model_file" => self.model_file = Some(PathBuf::from(value.trim())),
            "input" => self.input = Some(PathBuf::from(value.trim())),
            _ => return Err(CliError::Usage(format!("unknown option '{key}'"))),
        }
        Ok(())
    }

    /// Apply a `key = value` file; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            self.apply(k, v)?;
        }
        Ok(())
    }

    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, input) = match cli.command {
            CommandArgs::Fit { input } => (Command::Fit, Some(input)),
            CommandArgs::Sample => (Command::Sample, None),
            CommandArgs::Grid => (Command::Grid, None),
            CommandArgs::Moments => (Command::Moments, None),
            CommandArgs::TestSymmetry { input } => (Command::TestSymmetry, Some(input)),
        };
        let mut cfg = RunConfig::new(command);
        let o = cli.options;
        if let Some(p) = &o.config {
            cfg.apply_file(p)?;
        }
        cfg.input = input.or(cfg.input);
        let text: [(&str, Option<String>); 17] = [
            ("model", o.model),
            ("mixture", o.mixture.map(|v| v.to_string())),
            ("seed", o.seed.map(|v| v.to_string())),
            ("unit", o.unit),
            ("columns", o.columns),
            ("group_by", o.group_by),
            ("starts", o.starts.map(|v| v.to_string())),
            ("tol", o.tol.map(|v| v.to_string())),
            ("mu", o.mu),
            ("kappa", o.kappa),
            ("dep", o.dep),
            ("lambda", o.lambda),
            ("dim", o.dim.map(|v| v.to_string())),
            ("n", o.n.map(|v| v.to_string())),
            ("resolution", o.resolution.map(|v| v.to_string())),
            ("n_init", o.n_init.map(|v| v.to_string())),
            ("out", o.out.map(|p| p.to_string_lossy().into_owned())),
        ];
        for (k, v) in text {
            if let Some(v) = v {
                cfg.apply(k, &v)?;
            }
        }
        if let Some(p) = o.model_file {
            cfg.model_file = Some(p);
        }
        cfg.skewed |= o.skewed;
        cfg.compare |= o.compare;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check paths and counts before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(CliError::Data(format!("input file {} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.model_file {
            if !p.is_file() {
                return Err(CliError::Usage(format!("model file {} does not exist", p.display())));
            }
        }
        if let Some(out) = &self.out {
            let dir = out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
            }
        }
        if self.mixture == 0 {
            return Err(CliError::Usage("--mixture must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(CliError::Usage("--starts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Usage("--tol must be positive".into()));
        }
        if self.resolution == 0 {
            return Err(CliError::Usage("--resolution must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_config_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# defaults for a run\nmodel = wc\nseed = 7\nstarts=3\nlambda = 0.1,-0.2").unwrap();
        let cli = Cli::parse_from([
            "toroskew",
            "sample",
            "--config",
            f.path().to_str().unwrap(),
            "--seed",
            "9",
            "--kappa",
            "0.3,0.4",
        ]);
        let cfg = RunConfig::from_cli(cli).unwrap();
        assert_eq!(cfg.family, Family::WrappedCauchy);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.starts, 3);
        assert_eq!(cfg.lambda, Some(vec![0.1, -0.2]));
        assert_eq!(cfg.kappa, Some(vec![0.3, 0.4]));
    }

    #[test]
    fn negative_lists_and_errors() {
        let cli = Cli::parse_from(["toroskew", "sample", "--mu", "-1,2", "--lambda", "-0.5,0.25"]);
        let cfg = RunConfig::from_cli(cli).unwrap();
        assert_eq!(cfg.mu, Some(vec![-1.0, 2.0]));
        let mut cfg = RunConfig::new(Command::Sample);
        assert!(matches!(cfg.apply("seed", "-1"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.apply("colour", "red"), Err(CliError::Usage(_))));
        assert!(matches!(cfg.apply("model", "gauss"), Err(CliError::Usage(_))));
        let cli = Cli::parse_from(["toroskew", "fit", "/nonexistent.csv"]);
        assert!(matches!(RunConfig::from_cli(cli), Err(CliError::Data(_))));
        let cli = Cli::parse_from(["toroskew", "sample", "--out", "/nonexistent/dir/x.csv"]);
        assert!(matches!(RunConfig::from_cli(cli), Err(CliError::Usage(_))));
    }
}
