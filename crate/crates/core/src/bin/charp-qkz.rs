use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use charp_qkz::suites::{self, KappaFilter, RunConfig, Suite};
use charp_qkz::{Error, Result};

/// Polynomial solutions of the rational sl2 qKZ equations in characteristic p.
#[derive(Parser)]
#[command(name = "charp-qkz", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the p-hypergeometric solutions for one triple.
    Solve(Single),
    /// Run verification suites over a sweep; exits 1 if any check fails.
    Verify(Sweep),
    /// Per-axis p-curvature data at sampled points.
    Curvature(Single),
    /// Orthogonality of solutions for steps kappa and -kappa.
    Ortho(Single),
    /// Summary table over a sweep.
    Report(Sweep),
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the rendering to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Single {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    n: usize,
    /// Step: `c` in F_p or `a+b*g` in F_{p^2}.
    #[arg(long, allow_hyphen_values = true)]
    kappa: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Sweep {
    /// Primes, e.g. `5,7` (default 5,7,11,13).
    #[arg(long)]
    p: Option<String>,
    /// Sizes, e.g. `2,3` or `2..5` (default 2..5).
    #[arg(long)]
    n: Option<String>,
    /// Steps, comma separated (default: every nonzero element of F_p).
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    /// Comma-separated suite names (default: all).
    #[arg(long)]
    suites: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[command(flatten)]
    output: Output,
    #[arg(long, hide = true)]
    sabotage: bool,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid {what} {x:?}")))
        })
        .collect()
}

fn parse_range(s: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| Error::Parse(format!("invalid range {s:?}")))?;
        let b = b.trim().trim_start_matches('=');
        let b: usize = b.parse().map_err(|_| Error::Parse(format!("invalid range {s:?}")))?;
        return Ok((a..=b).collect());
    }
    parse_list(s, "size")
}

impl Sweep {
    fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig {
            seed: self.seed,
            points: self.points,
            sabotage: self.sabotage,
            ..RunConfig::default()
        };
        if let Some(p) = &self.p {
            c.primes = parse_list(p, "prime")?;
            for &p in &c.primes {
                charp_qkz::ffield::make_field(p, 1)?;
            }
        }
        if let Some(n) = &self.n {
            c.n_values = parse_range(n)?;
        }
        if let Some(k) = &self.kappa {
            c.kappas = KappaFilter::List(k.split(',').map(|s| s.trim().to_string()).collect());
        }
        if let Some(s) = &self.suites {
            c.suites = parse_list::<Suite>(s, "suite")?;
        }
        Ok(c)
    }
}

fn emit(output: &Output, json: &Value, text: impl FnOnce() -> String) -> Result<()> {
    let rendered = match output.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(json).expect("serializable")),
        Format::Text => text(),
    };
    match &output.out {
        Some(path) => fs::write(path, rendered).map_err(|e| Error::Domain(format!("{}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve(a) => {
            let params = suites::params_from(a.p, a.n, &a.kappa)?;
            let json = suites::solve_json(&params)?;
            let text = suites::solve_text(&params)?;
            emit(&a.output, &json, || text)?;
            Ok(true)
        }
        Command::Verify(s) => {
            let config = s.config()?;
            for reason in suites::sweep(&config)?.1 {
                eprintln!("skipped {reason}");
            }
            let out = suites::run(&config)?;
            emit(&s.output, &out.to_json(), || out.to_text())?;
            Ok(out.passed())
        }
        Command::Curvature(a) => {
            let params = suites::params_from(a.p, a.n, &a.kappa)?;
            let json = suites::curvature_json(&params, a.points, a.seed)?;
            emit(&a.output, &json, || {
                let mut t = String::new();
                for r in json["records"].as_array().into_iter().flatten() {
                    let mut line = format!("point {} a={}:", r["point"], r["a"]);
                    for (k, v) in r.as_object().into_iter().flatten() {
                        if k != "point" && k != "a" {
                            line.push_str(&format!(" {k}={v}"));
                        }
                    }
                    t.push_str(&line);
                    t.push('\n');
                }
                t
            })?;
            Ok(true)
        }
        Command::Ortho(a) => {
            let params = suites::params_from(a.p, a.n, &a.kappa)?;
            let json = suites::ortho_json(&params)?;
            let passed = json["passed"] == Value::Bool(true);
            emit(&a.output, &json, || {
                let mut t = String::new();
                for e in json["entries"].as_array().into_iter().flatten() {
                    let zero = e["zero"] == Value::Bool(true);
                    t.push_str(&format!("{} {}\n", if zero { "ok  " } else { "FAIL" }, e["name"].as_str().unwrap_or("")));
                }
                t
            })?;
            Ok(passed)
        }
        Command::Report(s) => {
            let config = s.config()?;
            let rows = suites::report_rows(&config)?;
            let json = serde_json::json!({"schema": suites::SCHEMA, "rows": rows});
            emit(&s.output, &json, || suites::report_text(&rows))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
