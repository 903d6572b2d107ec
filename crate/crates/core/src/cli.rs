//! Command-line surface: argument parsing, validation and dispatch.
//!
//! Every tabular output starts with metadata lines (`# key=value` for CSV and
//! text, a leading `{"meta": ...}` object for JSON lines) that echo a
//! canonical command line reproducing the run. The thread count is left out
//! of the echo since results do not depend on it.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{bounds_table, Smaller};
use crate::construct::{
    empirical_min_n, generate_certified, monte_carlo_success, Certifier, RNG_NAME, SEED_SCHEME,
};
use crate::empty_box::{candidate_box_count, largest_empty_box_with, SearchOptions};
use crate::error::{Error, Result};
use crate::grid::{k_from_epsilon, GridParams, PointSet, DEFAULT_ENUM_LIMIT, ENUM_LIMIT_ENV};
use crate::io::{read_point_set, write_point_set};
use crate::partition::{core_box, count_audit};
use crate::probability::{audit_hit_probability, check_key_inequality, rational_to_f64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CERTIFICATE_FAIL: i32 = 3;
pub const EXIT_GUARD_EXCEEDED: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Largest `k` accepted by `ineq-check` (it evaluates `2^k - 2` terms).
pub const INEQ_MAX_K: u32 = 26;

#[derive(Parser, Debug)]
#[command(
    name = "dispgrid",
    version,
    about = "Random dyadic-grid point sets with certified dispersion, and exact audits of the bounds behind them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Enumeration limit; defaults to $DISPGRID_ENUM_LIMIT or 10^8.
    #[arg(long, global = true)]
    pub enum_limit: Option<u64>,

    /// Disable the enumeration limit entirely.
    #[arg(long, global = true)]
    pub no_guard: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    #[value(name = "json-lines", alias = "jsonl")]
    JsonLines,
    Text,
}

/// Exactly one of `--k` / `--eps`.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Resolution {
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Sample until a point set certifies dispersion <= 2^-k, then write it.
    Gen {
        #[command(flatten)]
        res: Resolution,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_attempts: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a grid point-set file against every feasible core box.
    Certify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, conflicts_with = "eps")]
        k: Option<u32>,
        #[arg(long)]
        eps: Option<f64>,
        /// On failure, also compute the exact dispersion (within the limit).
        #[arg(long)]
        confirm_exact: bool,
    },
    /// Exact dispersion of a point-set file.
    Disp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        prune: bool,
    },
    /// Monte Carlo certification rate of random point sets.
    Mc {
        #[command(flatten)]
        res: Resolution,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Smallest n whose estimated certification rate reaches a target.
    MinN {
        #[command(flatten)]
        res: Resolution,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1 << 20)]
        max_n: usize,
    },
    /// Table of closed-form sample-size bounds.
    Bounds {
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        d_list: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hit-probability lower bound over all feasible classes.
    ProbAudit {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        k_list: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        d_list: Vec<usize>,
    },
    /// Exact feasible-class counts against the counting bounds.
    CountAudit {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        k_list: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        d_list: Vec<usize>,
    },
    /// The key one-dimensional inequality for a range of k.
    IneqCheck {
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long, default_value_t = 20)]
        k_max: u32,
    },
}

/// Resolved grid resolution, remembering whether it came from `--eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedK {
    pub params: GridParams,
    pub eps: Option<f64>,
}

impl ResolvedK {
    fn flag(&self) -> String {
        match self.eps {
            Some(e) => format!("--eps {e}"),
            None => format!("--k {}", self.params.k()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Gen {
        res: ResolvedK,
        d: usize,
        n: usize,
        seed: u64,
        max_attempts: u64,
        out: Option<PathBuf>,
    },
    Certify {
        input: PathBuf,
        res: Option<ResolvedK>,
        confirm_exact: bool,
    },
    Disp {
        input: PathBuf,
        prune: bool,
    },
    Mc {
        res: ResolvedK,
        d: usize,
        n: usize,
        trials: u64,
        seed: u64,
    },
    MinN {
        res: ResolvedK,
        d: usize,
        target: f64,
        trials: u64,
        seed: u64,
        max_n: usize,
    },
    Bounds {
        eps_list: Vec<f64>,
        d_list: Vec<usize>,
        out: Option<PathBuf>,
    },
    ProbAudit {
        ks: Vec<GridParams>,
        d_list: Vec<usize>,
    },
    CountAudit {
        ks: Vec<GridParams>,
        d_list: Vec<usize>,
    },
    IneqCheck {
        k_min: u32,
        k_max: u32,
    },
}

/// A validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub threads: Option<usize>,
    pub enum_limit: u128,
    pub format: Format,
}

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for {flag}: {msg}"))
}

fn resolve(res: &Resolution) -> std::result::Result<ResolvedK, CliError> {
    match (res.k, res.eps) {
        (Some(k), None) => Ok(ResolvedK {
            params: GridParams::new(k).map_err(|e| usage("--k", e))?,
            eps: None,
        }),
        (None, Some(eps)) => Ok(ResolvedK {
            params: k_from_epsilon(eps).map_err(|e| usage("--eps", e))?,
            eps: Some(eps),
        }),
        _ => Err(CliError::Usage(
            "exactly one of --k or --eps is required".into(),
        )),
    }
}

fn at_least(flag: &str, value: u64, min: u64) -> std::result::Result<(), CliError> {
    if value < min {
        Err(usage(flag, format!("must be at least {min}, got {value}")))
    } else {
        Ok(())
    }
}

fn grid_list(ks: &[u32]) -> std::result::Result<Vec<GridParams>, CliError> {
    ks.iter()
        .map(|&k| GridParams::new(k).map_err(|e| usage("--k-list", e)))
        .collect()
}

/// Parses and validates `argv` (including the program name).
pub fn parse_cli<I, T>(argv: I) -> std::result::Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    if let Some(t) = cli.threads {
        at_least("--threads", t as u64, 1)?;
    }
    let enum_limit = if cli.no_guard {
        u128::MAX
    } else if let Some(l) = cli.enum_limit {
        l as u128
    } else if let Ok(v) = std::env::var(ENUM_LIMIT_ENV) {
        v.trim()
            .parse::<u128>()
            .map_err(|_| usage(ENUM_LIMIT_ENV, format!("'{v}' is not an integer")))?
    } else {
        DEFAULT_ENUM_LIMIT
    };

    let command = match cli.command {
        CliCommand::Gen {
            res,
            d,
            n,
            seed,
            max_attempts,
            out,
        } => {
            at_least("--d", d as u64, 1)?;
            at_least("--n", n as u64, 1)?;
            at_least("--max-attempts", max_attempts, 1)?;
            Command::Gen {
                res: resolve(&res)?,
                d,
                n,
                seed,
                max_attempts,
                out,
            }
        }
        CliCommand::Certify {
            input,
            k,
            eps,
            confirm_exact,
        } => {
            let res = match (k, eps) {
                (None, None) => None,
                _ => Some(resolve(&Resolution { k, eps })?),
            };
            Command::Certify {
                input,
                res,
                confirm_exact,
            }
        }
        CliCommand::Disp { input, prune } => Command::Disp { input, prune },
        CliCommand::Mc {
            res,
            d,
            n,
            trials,
            seed,
        } => {
            at_least("--d", d as u64, 1)?;
            at_least("--n", n as u64, 1)?;
            at_least("--trials", trials, 1)?;
            Command::Mc {
                res: resolve(&res)?,
                d,
                n,
                trials,
                seed,
            }
        }
        CliCommand::MinN {
            res,
            d,
            target,
            trials,
            seed,
            max_n,
        } => {
            at_least("--d", d as u64, 1)?;
            at_least("--trials", trials, 1)?;
            at_least("--max-n", max_n as u64, 1)?;
            if !(target > 0.0 && target < 1.0) {
                return Err(usage(
                    "--target",
                    format!("must lie in (0, 1), got {target}"),
                ));
            }
            Command::MinN {
                res: resolve(&res)?,
                d,
                target,
                trials,
                seed,
                max_n,
            }
        }
        CliCommand::Bounds {
            eps_list,
            d_list,
            out,
        } => {
            for &e in &eps_list {
                if !(e > 0.0 && e < 0.5) {
                    return Err(usage("--eps-list", format!("{e} is outside (0, 1/2)")));
                }
            }
            for &d in &d_list {
                at_least("--d-list", d as u64, 2)?;
            }
            Command::Bounds {
                eps_list,
                d_list,
                out,
            }
        }
        CliCommand::ProbAudit { k_list, d_list } => {
            for &d in &d_list {
                at_least("--d-list", d as u64, 1)?;
            }
            Command::ProbAudit {
                ks: grid_list(&k_list)?,
                d_list,
            }
        }
        CliCommand::CountAudit { k_list, d_list } => {
            for &d in &d_list {
                at_least("--d-list", d as u64, 1)?;
            }
            Command::CountAudit {
                ks: grid_list(&k_list)?,
                d_list,
            }
        }
        CliCommand::IneqCheck { k_min, k_max } => {
            at_least("--k-min", k_min as u64, 2)?;
            if k_max < k_min || k_max > INEQ_MAX_K {
                return Err(usage(
                    "--k-max",
                    format!("must lie in {k_min}..={INEQ_MAX_K}, got {k_max}"),
                ));
            }
            Command::IneqCheck { k_min, k_max }
        }
    };
    Ok(RunConfig {
        command,
        threads: cli.threads,
        enum_limit,
        format: cli.format,
    })
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Canonical command line reproducing this run.
    pub fn rerun_command(&self) -> String {
        let mut s = String::from("dispgrid ");
        let _ = self.write_subcommand(&mut s);
        if self.enum_limit == u128::MAX {
            s.push_str(" --no-guard");
        } else if self.enum_limit != DEFAULT_ENUM_LIMIT {
            let _ = write!(s, " --enum-limit {}", self.enum_limit);
        }
        match self.format {
            Format::Csv => {}
            Format::JsonLines => s.push_str(" --format json-lines"),
            Format::Text => s.push_str(" --format text"),
        }
        s
    }

    fn write_subcommand(&self, s: &mut String) -> std::fmt::Result {
        match &self.command {
            Command::Gen {
                res,
                d,
                n,
                seed,
                max_attempts,
                out,
            } => {
                write!(
                    s,
                    "gen {} --d {d} --n {n} --seed {seed} --max-attempts {max_attempts}",
                    res.flag()
                )?;
                match out {
                    Some(p) => write!(s, " --out {}", p.display()),
                    None => Ok(()),
                }
            }
            Command::Certify {
                input,
                res,
                confirm_exact,
            } => {
                write!(s, "certify --in {}", input.display())?;
                if let Some(r) = res {
                    write!(s, " {}", r.flag())?;
                }
                if *confirm_exact {
                    write!(s, " --confirm-exact")?;
                }
                Ok(())
            }
            Command::Disp { input, prune } => {
                write!(s, "disp --in {}{}", input.display(), if *prune { " --prune" } else { "" })
            }
            Command::Mc {
                res,
                d,
                n,
                trials,
                seed,
            } => write!(
                s,
                "mc {} --d {d} --n {n} --trials {trials} --seed {seed}",
                res.flag()
            ),
            Command::MinN {
                res,
                d,
                target,
                trials,
                seed,
                max_n,
            } => write!(
                s,
                "min-n {} --d {d} --target {target} --trials {trials} --seed {seed} --max-n {max_n}",
                res.flag()
            ),
            Command::Bounds {
                eps_list,
                d_list,
                out,
            } => {
                write!(s, "bounds --eps-list {} --d-list {}", join(eps_list), join(d_list))?;
                match out {
                    Some(p) => write!(s, " --out {}", p.display()),
                    None => Ok(()),
                }
            }
            Command::ProbAudit { ks, d_list } => write!(
                s,
                "prob-audit --k-list {} --d-list {}",
                join(&ks.iter().map(|p| p.k()).collect::<Vec<_>>()),
                join(d_list)
            ),
            Command::CountAudit { ks, d_list } => write!(
                s,
                "count-audit --k-list {} --d-list {}",
                join(&ks.iter().map(|p| p.k()).collect::<Vec<_>>()),
                join(d_list)
            ),
            Command::IneqCheck { k_min, k_max } => {
                write!(s, "ineq-check --k-min {k_min} --k-max {k_max}")
            }
        }
    }

    fn metadata(&self) -> Vec<(String, String)> {
        let mut meta = vec![
            (
                "dispgrid".to_string(),
                env!("CARGO_PKG_VERSION").to_string(),
            ),
            ("rerun".to_string(), self.rerun_command()),
        ];
        let res = match &self.command {
            Command::Gen { res, .. } | Command::Mc { res, .. } | Command::MinN { res, .. } => {
                Some(*res)
            }
            Command::Certify { res, .. } => *res,
            _ => None,
        };
        if let Some(r) = res {
            if let Some(e) = r.eps {
                meta.push(("eps".into(), e.to_string()));
            }
            meta.push(("k".into(), r.params.k().to_string()));
        }
        if matches!(
            self.command,
            Command::Gen { .. } | Command::Mc { .. } | Command::MinN { .. }
        ) {
            meta.push(("rng".into(), RNG_NAME.into()));
            meta.push(("seed_scheme".into(), SEED_SCHEME.into()));
        }
        meta
    }
}

/// A single output cell.
#[derive(Clone, Debug)]
enum Cell {
    Int(u128),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Cell {
    fn plain(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Str(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => serde_json::to_string(x).unwrap_or_else(|_| "null".into()),
            Cell::Str(s) => serde_json::to_string(s).unwrap_or_else(|_| "\"\"".into()),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as u128)
    }
}
impl From<u128> for Cell {
    fn from(v: u128) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u128)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u128)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Str(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format, meta: &[(String, String)]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        match format {
            Format::Csv | Format::Text => {
                for (k, v) in meta {
                    writeln!(out, "# {k}={v}")?;
                }
                if format == Format::Csv {
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(&self.columns).map_err(csv_err)?;
                    for row in &self.rows {
                        w.write_record(row.iter().map(Cell::plain))
                            .map_err(csv_err)?;
                    }
                    w.flush()?;
                } else {
                    for row in &self.rows {
                        let line: Vec<String> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| format!("{c}={}", v.plain()))
                            .collect();
                        writeln!(out, "{}", line.join(" "))?;
                    }
                }
            }
            Format::JsonLines => {
                let fields: Vec<String> = meta
                    .iter()
                    .map(|(k, v)| {
                        format!(
                            "{}:{}",
                            Cell::from(k.as_str()).json(),
                            Cell::from(v.as_str()).json()
                        )
                    })
                    .collect();
                writeln!(out, "{{\"meta\":{{{}}}}}", fields.join(","))?;
                for row in &self.rows {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("{}:{}", Cell::from(*c).json(), v.json()))
                        .collect();
                    writeln!(out, "{{{}}}", fields.join(","))?;
                }
            }
        }
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Outcome of a completed run: rendered output and exit status.
pub struct RunOutput {
    pub stdout: Vec<u8>,
    pub exit_code: i32,
}

/// Executes `config` inside a thread pool of the requested size.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_inner(config))
        }
        None => run_inner(config),
    }
}

fn run_inner(config: &RunConfig) -> Result<RunOutput> {
    let meta = config.metadata();
    let limit = config.enum_limit;
    let mut exit_code = EXIT_OK;
    let mut file_out: Option<PathBuf> = None;

    let table = match &config.command {
        Command::Gen {
            res,
            d,
            n,
            seed,
            max_attempts,
            out,
        } => {
            let g = generate_certified(res.params, *d, *n, *seed, *max_attempts, limit)?;
            let mut t = Table::new(&[
                "k",
                "d",
                "n",
                "distinct_points",
                "attempts",
                "attempt_seed",
                "out",
            ]);
            let points = PointSet::Grid(g.points);
            let target = out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into());
            t.push(vec![
                res.params.k().into(),
                (*d).into(),
                (*n).into(),
                points.distinct_count().into(),
                g.attempts.into(),
                g.seed.into(),
                target.into(),
            ]);
            let file_meta: Vec<String> = meta
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .chain([
                    format!("attempts={}", g.attempts),
                    format!("attempt_seed={}", g.seed),
                    format!("certified=disp<=2^-{}", res.params.k()),
                ])
                .collect();
            match out {
                Some(path) => write_point_set(&points, path, &file_meta)?,
                None => {
                    // No file: the point set itself is the output.
                    let mut buf = Vec::new();
                    crate::io::write_point_set_to(&mut buf, &points, &file_meta)?;
                    return Ok(RunOutput {
                        stdout: buf,
                        exit_code,
                    });
                }
            }
            t
        }
        Command::Certify {
            input,
            res,
            confirm_exact,
        } => {
            let points = read_point_set(input)?;
            let PointSet::Grid(grid) = &points else {
                return Err(Error::Domain(
                    "certify needs a grid point set (repr=grid)".into(),
                ));
            };
            let params = match res {
                Some(r) if r.params != grid.params() => {
                    return Err(Error::ResolutionMismatch {
                        expected: r.params.k(),
                        found: grid.params().k(),
                    })
                }
                Some(r) => r.params,
                None => grid.params(),
            };
            let certifier = Certifier::new(params, grid.dim(), limit)?;
            let cert = certifier.certify(grid)?;
            let mut t = Table::new(&[
                "k",
                "d",
                "n",
                "pass",
                "checked_classes",
                "witness_class",
                "witness_core_box",
                "exact_dispersion",
            ]);
            let (wc, wb) = match &cert.witness {
                Some(c) => (c.to_string(), core_box(c)?.to_string()),
                None => (String::new(), String::new()),
            };
            let exact = if !cert.pass && *confirm_exact {
                let r = largest_empty_box_with(&points, SearchOptions { limit, prune: true })?;
                r.volume.to_string()
            } else {
                String::new()
            };
            t.push(vec![
                params.k().into(),
                grid.dim().into(),
                grid.len().into(),
                cert.pass.into(),
                cert.checked_classes.into(),
                wc.into(),
                wb.into(),
                exact.into(),
            ]);
            if !cert.pass {
                exit_code = EXIT_CERTIFICATE_FAIL;
            }
            t
        }
        Command::Disp { input, prune } => {
            let points = read_point_set(input)?;
            let candidates = candidate_box_count(&points);
            let r = largest_empty_box_with(
                &points,
                SearchOptions {
                    limit,
                    prune: *prune,
                },
            )?;
            let mut t = Table::new(&[
                "d",
                "n",
                "repr",
                "candidate_boxes",
                "volume",
                "volume_f64",
                "witness",
            ]);
            t.push(vec![
                points.dim().into(),
                points.len().into(),
                points.repr_name().into(),
                candidates.into(),
                r.volume.to_string().into(),
                r.volume.to_f64().into(),
                r.witness.to_string().into(),
            ]);
            t
        }
        Command::Mc {
            res,
            d,
            n,
            trials,
            seed,
        } => {
            let s = monte_carlo_success(res.params, *d, *n, *trials, *seed, limit)?;
            let mut t = Table::new(&[
                "k",
                "d",
                "n",
                "trials",
                "successes",
                "success_rate",
                "ci_low",
                "ci_high",
                "master_seed",
                "rng",
            ]);
            t.push(vec![
                s.k.into(),
                s.d.into(),
                s.n.into(),
                s.trials.into(),
                s.successes.into(),
                s.success_rate.into(),
                s.ci_low.into(),
                s.ci_high.into(),
                s.master_seed.into(),
                s.rng.into(),
            ]);
            t
        }
        Command::MinN {
            res,
            d,
            target,
            trials,
            seed,
            max_n,
        } => {
            let r = empirical_min_n(res.params, *d, *target, *trials, *seed, *max_n, limit)?;
            let mut t = Table::new(&[
                "k",
                "d",
                "target_rate",
                "trials",
                "seed",
                "n_star",
                "rate_at_n_star",
                "rate_below",
                "n_required",
                "within_n_required",
            ]);
            t.push(vec![
                r.k.into(),
                r.d.into(),
                r.target_rate.into(),
                r.trials.into(),
                r.seed.into(),
                r.n_star.into(),
                r.rate_at_n_star.into(),
                r.rate_below.into(),
                r.n_required.into(),
                r.within_n_required.into(),
            ]);
            t
        }
        Command::Bounds {
            eps_list,
            d_list,
            out,
        } => {
            let rows = bounds_table(eps_list, d_list)?;
            let mut t = Table::new(&[
                "eps",
                "d",
                "k",
                "n_required",
                "N_theorem1",
                "N_abstract",
                "N_rudolf",
                "better_of_two",
                "A_k",
                "A_k_exceeds_d",
            ]);
            for r in rows {
                t.push(vec![
                    r.eps.into(),
                    r.d.into(),
                    r.k.into(),
                    r.n_required.into(),
                    r.n_theorem1.into(),
                    r.n_abstract.into(),
                    r.n_rudolf.into(),
                    match r.better_of_two {
                        Smaller::Theorem1 => "theorem1",
                        Smaller::Rudolf => "rudolf",
                    }
                    .into(),
                    r.a_k.into(),
                    r.a_k_exceeds_d.into(),
                ]);
            }
            file_out = out.clone();
            t
        }
        Command::ProbAudit { ks, d_list } => {
            let mut t = Table::new(&[
                "k",
                "d",
                "min_hit_probability",
                "bound",
                "pass",
                "classes",
                "min_hit_f64",
                "chain_pass",
            ]);
            for &params in ks {
                for &d in d_list {
                    let a = audit_hit_probability(params, d, limit)?;
                    if !a.pass() {
                        exit_code = EXIT_FAILURE;
                    }
                    t.push(vec![
                        params.k().into(),
                        d.into(),
                        a.min_hit_probability.to_string().into(),
                        a.lower_bound.to_string().into(),
                        a.bound_violations.is_empty().into(),
                        a.classes.into(),
                        rational_to_f64(&a.min_hit_probability).into(),
                        a.chain_violations.is_empty().into(),
                    ]);
                }
            }
            t
        }
        Command::CountAudit { ks, d_list } => {
            let mut t = Table::new(&[
                "k",
                "d",
                "exact_feasible_count",
                "sum_paper_p_count",
                "ln_pair_count_bound",
            ]);
            for &params in ks {
                for &d in d_list {
                    let a = count_audit(params, d, limit)?;
                    t.push(vec![
                        a.k.into(),
                        a.d.into(),
                        a.exact_feasible_count.into(),
                        a.sum_paper_p_count.into(),
                        a.ln_pair_count_bound.into(),
                    ]);
                }
            }
            t
        }
        Command::IneqCheck { k_min, k_max } => {
            let mut t = Table::new(&["k", "lhs_min", "rhs", "margin", "pass", "argmin_j"]);
            for k in *k_min..=*k_max {
                let r = check_key_inequality(GridParams::new(k)?);
                if !r.holds {
                    exit_code = EXIT_FAILURE;
                }
                t.push(vec![
                    r.k.into(),
                    r.lhs_min.into(),
                    r.rhs.into(),
                    r.margin.into(),
                    r.holds.into(),
                    r.argmin_j.into(),
                ]);
            }
            t
        }
    };

    let rendered = table.render(config.format, &meta)?;
    match file_out {
        Some(path) => {
            fs::write(&path, &rendered)?;
            Ok(RunOutput {
                stdout: format!("wrote {}\n", path.display()).into_bytes(),
                exit_code,
            })
        }
        None => Ok(RunOutput {
            stdout: rendered,
            exit_code,
        }),
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::GuardExceeded { .. } => EXIT_GUARD_EXCEEDED,
        Error::Io(_) | Error::Parse { .. } => EXIT_IO,
        Error::AttemptsExhausted { .. } => EXIT_CERTIFICATE_FAIL,
        _ => EXIT_FAILURE,
    }
}

/// Full CLI entry point; returns the process exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_cli(argv) {
        Ok(c) => c,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match run(&config) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(&out.stdout)
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return EXIT_IO;
            }
            out.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::AttemptsExhausted {
                witness: Some(w), ..
            } = &e
            {
                eprintln!("furthest attempt missed class {w}");
            }
            exit_code_for(&e)
        }
    }
}
