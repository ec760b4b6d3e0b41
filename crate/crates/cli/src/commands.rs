//! Subcommand bodies. Each one returns the rendered output so that runs
//! are easy to compare byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use chainfair_core::asymptotics::{
    alpha_for_ring_prob, circle_backoff_shard, flat_value, optimal_alpha_curve, ring_fixed_point,
    CircleWins,
};
use chainfair_core::fairness::{maximize, sweep};
use chainfair_core::fit::{compare_normalized, fit_alpha_with, FitOptions, Normalization};
use chainfair_core::sim::{exact_stationary, meanfield_gap, simulate, SimConfig, UpdatePolicy};
use chainfair_core::solver::{solve, Method};
use chainfair_core::timing::{
    alpha_of_packet, packet_for_alpha, t_send, t_wait, FrameSpec, IfsAccounting, MacTiming,
};
use chainfair_core::{ChainParams, SolveOptions};
use rayon::prelude::*;

use crate::args::{Cli, Command, Format, IfsArg, MethodArg, NormArg, PolicyArg, OUT_DIR_ENV};
use crate::error::{CliError, Context, Result};
use crate::plot::{BarChart, LineChart};
use crate::table::{cell, profile_table, read_trace, Table};

/// What a subcommand produced, before formatting.
pub enum Rendered {
    Table(Table),
    Chart(String),
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Newton => Method::Newton,
            MethodArg::FixedPoint => Method::FixedPoint,
        }
    }
}

impl From<NormArg> for Normalization {
    fn from(m: NormArg) -> Self {
        match m {
            NormArg::FirstPair => Normalization::FirstPair,
            NormArg::Max => Normalization::Max,
        }
    }
}

impl From<PolicyArg> for UpdatePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::SingleSite => UpdatePolicy::RandomSingleSite,
            PolicyArg::Synchronous => UpdatePolicy::SynchronousRandomOrder,
        }
    }
}

fn timing_for(ifs: IfsArg) -> MacTiming {
    MacTiming {
        ifs_in_wait: match ifs {
            IfsArg::Excluded => IfsAccounting::Excluded,
            IfsArg::Difs => IfsAccounting::Difs,
            IfsArg::Eifs => IfsAccounting::Eifs,
        },
        ..MacTiming::default()
    }
}

fn no_chart(command: &str) -> CliError {
    CliError::Usage(format!("`{command}` has no chart; use --format csv"))
}

fn read_input(path: &Path) -> Result<chainfair_core::fit::ThroughputTrace> {
    let file = fs::File::open(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    read_trace(file, &path.display().to_string())
}

fn line(title: String, x_label: &str, y_label: &str, points: Vec<(f64, f64)>) -> Rendered {
    Rendered::Chart(
        LineChart {
            title,
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
        }
        .to_svg(),
    )
}

fn bars(title: String, x_label: &str, y_label: &str, series: Vec<(String, Vec<f64>)>) -> Rendered {
    let n = series.first().map_or(0, |s| s.1.len());
    Rendered::Chart(
        BarChart {
            title,
            x_label: x_label.into(),
            y_label: y_label.into(),
            categories: (1..=n).map(|i| i.to_string()).collect(),
            series,
        }
        .to_svg(),
    )
}

/// Splits `trials` over `shards` streams and sums them; deterministic in
/// `(seed, shards)` whatever the thread count.
fn circle_parallel(pairs: usize, trials: u64, seed: u64, shards: u64) -> Result<CircleWins> {
    if shards == 0 || shards > trials {
        return Err(CliError::Usage(
            "--shards must be between 1 and --trials".into(),
        ));
    }
    let parts: Vec<CircleWins> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let share = trials / shards + u64::from(s < trials % shards);
            circle_backoff_shard(pairs, share, seed, s).context("circle")
        })
        .collect::<Result<_>>()?;
    let mut total = CircleWins {
        trials: 0,
        wins: vec![0; pairs],
    };
    for p in parts {
        total.trials += p.trials;
        for (a, b) in total.wins.iter_mut().zip(&p.wins) {
            *a += b;
        }
    }
    Ok(total)
}

pub fn execute(command: &Command) -> Result<Rendered> {
    let svg = command.output().format == Format::Svg;
    Ok(match command {
        Command::Solve {
            n,
            alpha,
            method,
            tol,
            ..
        } => {
            let params = ChainParams::new(*n, *alpha).context("solve")?;
            let opts = SolveOptions::with_tol(*tol);
            let x = solve(&params, (*method).into(), &opts).context("solve")?;
            if svg {
                line(
                    format!("Emission probabilities, n = {n}, alpha = {alpha}"),
                    "pair",
                    "x",
                    x.iter()
                        .enumerate()
                        .map(|(i, &v)| ((i + 1) as f64, v))
                        .collect(),
                )
            } else {
                Rendered::Table(profile_table(&x))
            }
        }
        Command::Optimize { n, tol, .. } => {
            if svg {
                return Err(no_chart("optimize"));
            }
            let r = maximize(*n, *tol).context("optimize")?;
            let mut t = Table::key_value();
            t.push_kv("alpha_hat", r.alpha_hat);
            t.push_kv("objective", r.value);
            t.push_kv("evaluations", r.evaluations);
            t.push_kv("unimodal", r.unimodal);
            Rendered::Table(t)
        }
        Command::Sweep {
            n,
            from,
            to,
            points,
            ..
        } => {
            if *points < 2 || !(from < to) {
                return Err(CliError::Usage(
                    "sweep needs --points >= 2 and --from < --to".into(),
                ));
            }
            ChainParams::new(*n, *from).context("sweep")?;
            ChainParams::new(*n, *to).context("sweep")?;
            let step = (to - from) / (*points - 1) as f64;
            let alphas: Vec<f64> = (0..*points).map(|k| from + step * k as f64).collect();
            let rows: Vec<_> = alphas
                .par_iter()
                .map(|&a| sweep(*n, &[a]).remove(0))
                .collect();
            if svg {
                line(
                    format!("Mean entropy against alpha, n = {n}"),
                    "alpha",
                    "J",
                    rows.iter()
                        .filter_map(|r| r.value.map(|v| (r.alpha, v)))
                        .collect(),
                )
            } else {
                let mut t = Table::new(["alpha", "objective"]);
                for r in rows {
                    t.push(vec![r.alpha.to_string(), cell(r.value)]);
                }
                Rendered::Table(t)
            }
        }
        Command::Ring { alpha, prob, .. } => {
            if svg {
                return Err(no_chart("ring"));
            }
            let mut t = Table::key_value();
            match (alpha, prob) {
                (Some(a), _) => {
                    t.push_kv("alpha", a);
                    t.push_kv("x", ring_fixed_point(*a).context("ring")?.x);
                }
                (None, Some(p)) => {
                    t.push_kv("x", p);
                    t.push_kv("alpha", alpha_for_ring_prob(*p).context("ring")?);
                }
                (None, None) => return Err(CliError::Usage("ring needs --alpha or --prob".into())),
            }
            Rendered::Table(t)
        }
        Command::Flat { ns, .. } => {
            let rows: Vec<_> = ns
                .par_iter()
                .map(|&n| flat_value(n).map_err(|e| CliError::model(format!("flat n={n}"), e)))
                .collect::<Result<_>>()?;
            if svg {
                line(
                    "Central emission probability at the optimum".into(),
                    "n",
                    "central x",
                    ns.iter()
                        .zip(&rows)
                        .map(|(&n, r)| (n as f64, r.central_prob))
                        .collect(),
                )
            } else {
                let mut t = Table::new(["n", "alpha_hat", "central_prob"]);
                for (n, r) in ns.iter().zip(rows) {
                    t.push(vec![
                        n.to_string(),
                        r.alpha_hat.to_string(),
                        r.central_prob.to_string(),
                    ]);
                }
                Rendered::Table(t)
            }
        }
        Command::Curve { ns, .. } => {
            let rows: Vec<_> = ns
                .par_iter()
                .map(|&n| optimal_alpha_curve(&[n]).remove(0))
                .collect();
            if svg {
                line(
                    "Optimal alpha against chain length".into(),
                    "n",
                    "alpha_hat",
                    rows.iter()
                        .filter_map(|r| r.alpha_hat.as_ref().ok().map(|&a| (r.n as f64, a)))
                        .collect(),
                )
            } else {
                let mut t = Table::new(["n", "alpha_hat"]);
                for r in rows {
                    t.push(vec![r.n.to_string(), cell(r.alpha_hat.ok())]);
                }
                Rendered::Table(t)
            }
        }
        Command::Circle {
            pairs,
            trials,
            seed,
            shards,
            ..
        } => {
            let w = circle_parallel(*pairs, *trials, *seed, *shards)?;
            let f = w.frequencies();
            if svg {
                line(
                    format!("Backoff win frequency on a circle of {pairs} pairs"),
                    "pair",
                    "frequency",
                    f.iter()
                        .enumerate()
                        .map(|(i, &v)| ((i + 1) as f64, v))
                        .collect(),
                )
            } else {
                let mut t = Table::new(["pair", "frequency"]);
                for (i, v) in f.iter().enumerate() {
                    t.push(vec![(i + 1).to_string(), v.to_string()]);
                }
                Rendered::Table(t)
            }
        }
        Command::Simulate {
            n,
            alpha,
            steps,
            burn_in,
            seed,
            policy,
            ..
        } => {
            let mut cfg = SimConfig::new(*n, *alpha, *steps, *seed);
            if let Some(b) = burn_in {
                cfg.burn_in = *b;
            }
            cfg.policy = (*policy).into();
            let est = simulate(&cfg).context("simulate")?;
            if svg {
                bars(
                    format!("Simulated emission frequencies, n = {n}, alpha = {alpha}"),
                    "pair",
                    "x_hat",
                    vec![("simulated".into(), est.x_hat)],
                )
            } else {
                let mut t = Table::new(["pair_index", "x_hat", "stderr"]);
                for i in 0..*n {
                    t.push(vec![
                        (i + 1).to_string(),
                        est.x_hat[i].to_string(),
                        est.stderr[i].to_string(),
                    ]);
                }
                Rendered::Table(t)
            }
        }
        Command::Exact { n, alpha, .. } => {
            let params = ChainParams::new(*n, *alpha).context("exact")?;
            let exact = exact_stationary(*n, *alpha).context("exact")?;
            let mf = solve(&params, Method::Newton, &SolveOptions::default()).context("exact")?;
            if svg {
                bars(
                    format!("Exact and mean-field probabilities, n = {n}, alpha = {alpha}"),
                    "pair",
                    "x",
                    vec![
                        ("exact".into(), exact),
                        ("mean field".into(), mf.into_inner()),
                    ],
                )
            } else {
                let mut t = Table::new(["pair", "exact", "meanfield", "difference"]);
                for i in 0..*n {
                    t.push(vec![
                        (i + 1).to_string(),
                        exact[i].to_string(),
                        mf[i].to_string(),
                        (mf[i] - exact[i]).to_string(),
                    ]);
                }
                Rendered::Table(t)
            }
        }
        Command::Gap { ns, alphas, .. } => {
            if svg {
                return Err(no_chart("gap"));
            }
            let grid: Vec<(usize, f64)> = ns
                .iter()
                .flat_map(|&n| alphas.iter().map(move |&a| (n, a)))
                .collect();
            let gaps: Vec<f64> = grid
                .par_iter()
                .map(|&(n, a)| {
                    meanfield_gap(n, a)
                        .map_err(|e| CliError::model(format!("gap n={n} alpha={a}"), e))
                })
                .collect::<Result<_>>()?;
            let mut t = Table::new(["n", "alpha", "gap"]);
            for ((n, a), g) in grid.iter().zip(gaps) {
                t.push(vec![n.to_string(), a.to_string(), g.to_string()]);
            }
            Rendered::Table(t)
        }
        Command::Fit {
            input,
            lo,
            hi,
            normalization,
            ..
        } => {
            if svg {
                return Err(no_chart("fit"));
            }
            let trace = read_input(input)?;
            let opts = FitOptions {
                lo: *lo,
                hi: *hi,
                normalization: (*normalization).into(),
                ..FitOptions::default()
            };
            let r = fit_alpha_with(&trace, &opts).context("fit")?;
            let mut t = Table::key_value();
            t.push_kv("alpha_fit", r.alpha_fit);
            t.push_kv("sse", r.sse);
            t.push_kv("pairs", trace.len());
            Rendered::Table(t)
        }
        Command::Compare {
            input,
            alpha,
            normalization,
            ..
        } => {
            let trace = read_input(input)?;
            let how: Normalization = (*normalization).into();
            let alpha = match alpha {
                Some(a) => *a,
                None => {
                    let opts = FitOptions {
                        normalization: how,
                        ..FitOptions::default()
                    };
                    fit_alpha_with(&trace, &opts).context("compare")?.alpha_fit
                }
            };
            let rows = compare_normalized(&trace, alpha, how).context("compare")?;
            if svg {
                bars(
                    format!("Normalized throughput against the model, alpha = {alpha:.4}"),
                    "pair",
                    "normalized rate",
                    vec![
                        ("observed".into(), rows.iter().map(|r| r.observed).collect()),
                        ("model".into(), rows.iter().map(|r| r.model).collect()),
                    ],
                )
            } else {
                let mut t = Table::new(["pair", "observed", "model", "residual"]);
                for r in rows {
                    t.push(vec![
                        r.pair.to_string(),
                        r.observed.to_string(),
                        r.model.to_string(),
                        r.residual.to_string(),
                    ]);
                }
                Rendered::Table(t)
            }
        }
        Command::Packet {
            alpha, rate, ifs, ..
        } => {
            if svg {
                return Err(no_chart("packet"));
            }
            let bytes = packet_for_alpha(*alpha, *rate, &timing_for(*ifs)).context("packet")?;
            let mut t = Table::key_value();
            t.push_kv("bytes", bytes);
            Rendered::Table(t)
        }
        Command::Timing {
            bytes, rate, ifs, ..
        } => {
            if svg {
                return Err(no_chart("timing"));
            }
            let timing = timing_for(*ifs);
            let frame = FrameSpec::new(*bytes, *rate).context("timing")?;
            let alpha = alpha_of_packet(&frame, &timing).context("timing")?;
            let mut t = Table::key_value();
            t.push_kv("t_send", t_send(&frame, &timing));
            t.push_kv("t_wait", t_wait(&timing));
            t.push_kv("alpha", alpha);
            Rendered::Table(t)
        }
    })
}

/// Output path after applying [`OUT_DIR_ENV`] to relative paths.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn render(r: &Rendered) -> Result<Vec<u8>> {
    match r {
        Rendered::Table(t) => {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            Ok(buf)
        }
        Rendered::Chart(s) => Ok(s.clone().into_bytes()),
    }
}

/// Runs a parsed command line, writing to `--output` or to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    let bytes = render(&execute(&cli.command)?)?;
    match &cli.command.output().output {
        Some(path) => {
            let path = resolve_output(path);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, bytes)?;
        }
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}
