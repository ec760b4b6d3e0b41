//! Flag definitions and JSON config merging.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use crate::error::CliError;

/// Environment variable naming the directory relative `--output` paths resolve against.
pub const OUT_DIR_ENV: &str = "CHAINFAIR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "chainfair",
    version,
    about = "Emission probabilities, fairness and timing analyses for chains of 802.11 pairs",
    after_help = "Exit status: 0 on success, 2 on usage or input errors, 3 when a solver or optimizer fails, 1 when output cannot be written."
)]
pub struct Cli {
    /// JSON object whose keys are long flag names of the subcommand; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent. Relative paths resolve against $CHAINFAIR_OUT_DIR when it is set.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Newton,
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    SingleSite,
    Synchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    FirstPair,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IfsArg {
    Excluded,
    Difs,
    Eifs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emission probabilities of every pair. CSV columns: pair,x
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Newton)]
        method: MethodArg,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Fairness-optimal alpha. CSV columns: name,value (alpha_hat, objective, evaluations, unimodal)
    Optimize {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Mean entropy over an alpha grid. CSV columns: alpha,objective (empty when unsolved)
    Sweep {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        from: f64,
        #[arg(long, default_value_t = 0.99)]
        to: f64,
        #[arg(long, default_value_t = 99)]
        points: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Borderless ring: probability for --alpha, or alpha for --prob. CSV columns: name,value
    Ring {
        #[arg(long, conflicts_with = "prob", required_unless_present = "prob")]
        alpha: Option<f64>,
        #[arg(long)]
        prob: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Central emission probability at the optimum. CSV columns: n,alpha_hat,central_prob
    Flat {
        #[arg(long, value_delimiter = ',', default_value = "100,500,1000,2000")]
        ns: Vec<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Optimal alpha against chain length. CSV columns: n,alpha_hat (empty when unsolved)
    Curve {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "2,3,4,5,6,8,10,15,20,30,50,75,100,150,200,300,500"
        )]
        ns: Vec<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo of one backoff round on a circle. CSV columns: pair,frequency
    Circle {
        #[arg(long, default_value_t = 101)]
        pairs: usize,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent random streams; the result depends on this value.
        #[arg(long, default_value_t = 8)]
        shards: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Slot-level stochastic simulation. CSV columns: pair_index,x_hat,stderr
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        /// Slots discarded before averaging; 10% of --steps when absent.
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PolicyArg::SingleSite)]
        policy: PolicyArg,
        #[command(flatten)]
        out: Output,
    },
    /// Exact stationary marginals beside the mean-field solution. CSV columns: pair,exact,meanfield,difference
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Largest mean-field error over a grid. CSV columns: n,alpha,gap
    Gap {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8")]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.75,0.862")]
        alphas: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Least-squares alpha for a pair,rate trace. CSV columns: name,value (alpha_fit, sse, pairs)
    Fit {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        lo: f64,
        #[arg(long, default_value_t = 0.99)]
        hi: f64,
        #[arg(long, value_enum, default_value_t = NormArg::FirstPair)]
        normalization: NormArg,
        #[command(flatten)]
        out: Output,
    },
    /// Normalized trace against the model. CSV columns: pair,observed,model,residual
    Compare {
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        /// Model alpha; the least-squares fit when absent.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_enum, default_value_t = NormArg::FirstPair)]
        normalization: NormArg,
        #[command(flatten)]
        out: Output,
    },
    /// Frame size in bytes giving --alpha at --rate Mbit/s. CSV columns: name,value (bytes)
    Packet {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        rate: f64,
        #[arg(long, value_enum, default_value_t = IfsArg::Excluded)]
        ifs: IfsArg,
        #[command(flatten)]
        out: Output,
    },
    /// Send time, wait time and alpha of a frame. CSV columns: name,value (t_send, t_wait, alpha)
    Timing {
        #[arg(long)]
        bytes: u32,
        #[arg(long, default_value_t = 2.0)]
        rate: f64,
        #[arg(long, value_enum, default_value_t = IfsArg::Excluded)]
        ifs: IfsArg,
        #[command(flatten)]
        out: Output,
    },
}

impl Command {
    pub fn output(&self) -> &Output {
        match self {
            Command::Solve { out, .. }
            | Command::Optimize { out, .. }
            | Command::Sweep { out, .. }
            | Command::Ring { out, .. }
            | Command::Flat { out, .. }
            | Command::Curve { out, .. }
            | Command::Circle { out, .. }
            | Command::Simulate { out, .. }
            | Command::Exact { out, .. }
            | Command::Gap { out, .. }
            | Command::Fit { out, .. }
            | Command::Compare { out, .. }
            | Command::Packet { out, .. }
            | Command::Timing { out, .. } => out,
        }
    }
}

#[derive(Debug)]
pub enum ParseError {
    /// Help, version or a malformed command line; clap renders it.
    Clap(clap::Error),
    Cli(CliError),
}

fn config_value(key: &str, v: &Value) -> Result<Option<String>, String> {
    match v {
        Value::String(s) => Ok(Some(s.clone())),
        Value::Number(n) => Ok(Some(n.to_string())),
        Value::Bool(true) => Ok(Some(String::new())),
        Value::Bool(false) | Value::Null => Ok(None),
        Value::Array(items) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(format!("`{key}`: list items must be numbers or strings")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| Some(v.join(","))),
        Value::Object(_) => Err(format!("`{key}`: nested objects are not supported")),
    }
}

/// `--config` value and subcommand name, found by scanning tokens so that
/// flags supplied only by the config file do not fail a first parse.
fn locate(argv: &[OsString]) -> (Option<PathBuf>, Option<String>) {
    let mut config = None;
    let mut sub = None;
    let mut it = argv.iter().skip(1);
    while let Some(tok) = it.next() {
        let tok = tok.to_string_lossy();
        if tok == "--config" {
            config = it.next().map(PathBuf::from);
        } else if let Some(v) = tok.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if sub.is_none() && !tok.starts_with('-') {
            sub = Some(tok.into_owned());
        }
    }
    (config, sub)
}

fn given_on_command_line(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    argv.iter().any(|t| {
        let t = t.to_string_lossy();
        t == flag || t.starts_with(&prefix)
    })
}

/// Parses `argv`, filling flags not given on the command line from the
/// `--config` file.
pub fn parse<I, T>(argv: I) -> Result<Cli, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let root = Cli::command();
    if let (Some(path), Some(name)) = locate(&argv) {
        if let Some(sub) = root.find_subcommand(&name) {
            let config_err = |message: String| {
                ParseError::Cli(CliError::Config {
                    path: path.clone(),
                    message,
                })
            };
            let text = std::fs::read_to_string(&path).map_err(|e| config_err(e.to_string()))?;
            let json: Value = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
            let Value::Object(map) = json else {
                return Err(config_err("top level must be an object".into()));
            };
            let mut extra = Vec::new();
            for (key, value) in &map {
                let arg = sub
                    .get_arguments()
                    .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
                    .ok_or_else(|| config_err(format!("unknown key `{key}` for `{name}`")))?;
                if given_on_command_line(&argv, key) {
                    continue;
                }
                let takes_value = arg.get_action().takes_values();
                match config_value(key, value).map_err(config_err)? {
                    Some(v) if takes_value => extra.push(OsString::from(format!("--{key}={v}"))),
                    Some(v) if v.is_empty() => extra.push(OsString::from(format!("--{key}"))),
                    Some(_) => return Err(config_err(format!("`{key}` is a switch; use true"))),
                    None => {}
                }
            }
            argv.extend(extra);
        }
    }
    let matches = root.try_get_matches_from(&argv).map_err(ParseError::Clap)?;
    Cli::from_arg_matches(&matches).map_err(ParseError::Clap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn config(json: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        f
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_fills_missing_flags() {
        let f = config(r#"{"n": 7, "alpha": 0.4, "method": "fixed-point"}"#);
        let p = f.path().to_str().unwrap();
        let cli = parse(["chainfair", "solve", "--config", p]).unwrap();
        match cli.command {
            Command::Solve {
                n, alpha, method, ..
            } => {
                assert_eq!((n, alpha, method), (7, 0.4, MethodArg::FixedPoint));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn flags_override_config() {
        let f = config(r#"{"n": 7, "alpha": 0.4}"#);
        let p = f.path().to_str().unwrap();
        let cli = parse(["chainfair", "--config", p, "solve", "--alpha", "0.6"]).unwrap();
        match cli.command {
            Command::Solve { n, alpha, .. } => assert_eq!((n, alpha), (7, 0.6)),
            _ => panic!(),
        }
    }

    #[test]
    fn config_lists_and_kebab_keys() {
        let f = config(r#"{"ns": [10, 20], "format": "svg"}"#);
        let p = f.path().to_str().unwrap();
        let cli = parse(["chainfair", "curve", "--config", p]).unwrap();
        match cli.command {
            Command::Curve { ns, out } => {
                assert_eq!(ns, vec![10, 20]);
                assert_eq!(out.format, Format::Svg);
            }
            _ => panic!(),
        }
        let f = config(r#"{"n": 3, "alpha": 0.5, "burn-in": 10, "steps": 100}"#);
        let p = f.path().to_str().unwrap();
        match parse(["chainfair", "simulate", "--config", p])
            .unwrap()
            .command
        {
            Command::Simulate { burn_in, steps, .. } => {
                assert_eq!((burn_in, steps), (Some(10), 100))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let f = config(r#"{"n": 7, "alpha": 0.4, "colour": "red"}"#);
        let p = f.path().to_str().unwrap();
        assert!(matches!(
            parse(["chainfair", "solve", "--config", p]),
            Err(ParseError::Cli(CliError::Config { .. }))
        ));
    }

    #[test]
    fn missing_required_flag_is_a_clap_error() {
        assert!(matches!(
            parse(["chainfair", "solve", "--n", "3"]),
            Err(ParseError::Clap(_))
        ));
    }
}
