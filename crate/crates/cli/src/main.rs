use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use recurfrac_core::asymptotics::{b_exponent, dim_formula, jarnik_classify, jarnik_partial_sum, khintchine_classify};
use recurfrac_core::coding::{pi_eval, recurrence_distance, CodedPoint};
use recurfrac_core::experiments::{covering_exponent, liminf_statistic, recurrent_fraction, sample_point, Provenance};
use recurfrac_core::ifs::cylinder_interval;
use recurfrac_core::measure::{ahlfors_scan, DEFAULT_DEPTH};
use recurfrac_core::numeric::{format_rational, parse_rational, to_f64};
use recurfrac_core::recurrence::{level_table, quasi_independence, DEFAULT_LEVEL_CAP};
use recurfrac_core::verify::run_suite;
use recurfrac_core::{DimensionFunction, Error, GammaExpr, IfsConfig, Interval, RateFunction, Word};

mod svg;

#[derive(Parser)]
#[command(name = "recurfrac", version, about = "Quantitative recurrence experiments on self-similar sets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// IFS configuration JSON: {"rho": "1/3", "L": 2, "translations": ["0", "2/3"]}. Defaults to
    /// the middle-third Cantor system.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized subcommands (required by them).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write a static SVG plot here.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite; exit 1 with a JSON report on any violation.
    Verify,
    /// Recurrence distances |T^n x - x| along one orbit.
    Orbit {
        /// Period of an exact point, e.g. 1,2.
        #[arg(long, value_delimiter = ',', conflicts_with = "sample")]
        period: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',', requires = "period")]
        preperiod: Option<Vec<u32>>,
        /// Draw a typical point instead (needs --seed).
        #[arg(long)]
        sample: bool,
        #[arg(long = "N", default_value_t = 20)]
        horizon: usize,
    },
    /// Per-level measures of A_n, the measure verdict, and optionally a Monte Carlo fraction.
    Dichotomy {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long = "N")]
        horizon: usize,
        /// Monte Carlo samples (needs --seed).
        #[arg(long)]
        samples: Option<usize>,
        /// Horizon of the Monte Carlo run; defaults to N.
        #[arg(long = "mc-N")]
        mc_horizon: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Hausdorff verdict with partial sums of the governing series.
    Jarnik {
        /// Dimension function, e.g. power:gamma/2 or powerlog:gamma:1.
        #[arg(long)]
        f: String,
        #[arg(long)]
        phi: String,
        #[arg(long = "N", default_value_t = 60)]
        horizon: usize,
    },
    /// Covering-exponent estimate of dim_H R(phi) next to gamma/(1+b).
    Dimension {
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long = "N")]
        horizon: usize,
    },
    /// Pairwise overlap ratio of the level sets inside a ball.
    QuasiIndep {
        #[arg(long)]
        phi: String,
        #[arg(long = "N")]
        horizon: usize,
        /// Region as lo,hi (rationals); defaults to [0,1].
        #[arg(long, conflicts_with = "cylinder")]
        ball: Option<String>,
        /// Region as the cylinder of a word, e.g. 2,1.
        #[arg(long, value_delimiter = ',')]
        cylinder: Option<Vec<u32>>,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Distribution of min_{n<=N} n^(1/alpha) |T^n x - x| over typical points.
    Liminf {
        /// Exponent, e.g. gamma or gamma/2.
        #[arg(long)]
        alpha: String,
        #[arg(long = "N")]
        horizon: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// mu(B(x, r)) / r^gamma over sampled balls against the regularity constants.
    Ahlfors {
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        r_min: f64,
        #[arg(long, default_value_t = 0.25)]
        r_max: f64,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
}

enum Failure {
    Usage(String),
    Verification(Value),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(report)) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> std::result::Result<IfsConfig, Failure> {
    match path {
        None => Ok(IfsConfig::middle_third()),
        Some(p) => Ok(IfsConfig::from_path(p)?),
    }
}

fn require_seed(g: &Global, what: &str) -> std::result::Result<u64, Failure> {
    g.seed.ok_or_else(|| Failure::Usage(format!("{what} is randomized and needs --seed")))
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    let config = load_config(g.config.as_deref())?;
    let out = Output::new(g)?;
    match &cli.command {
        Command::Verify => {
            let report = run_suite(&config)?;
            let value = serde_json::to_value(&report).unwrap();
            if !report.passed {
                return Err(Failure::Verification(value));
            }
            out.summary("verify", &value)
        }
        Command::Orbit { period, preperiod, sample, horizon } => orbit(&config, g, &out, period.as_deref(), preperiod.as_deref(), *sample, *horizon),
        Command::Dichotomy { phi, k, horizon, samples, mc_horizon, depth } => {
            let phi = RateFunction::parse_any(phi)?;
            let (rows, union) = level_table(&config, &phi, *k, *horizon, *depth, DEFAULT_LEVEL_CAP)?;
            let verdict = khintchine_classify(&config, &phi)?;
            let params = json!({"command": "dichotomy", "ifs": config.spec(), "phi": phi, "k": k, "N": horizon, "depth": depth});
            let mut summary = json!({
                "phi": phi.to_string(),
                "verdict": verdict,
                "mu_union": union.value_f64(),
                "mu_union_err": union.error_f64(),
                "provenance": Provenance::for_params(&params),
            });
            if let Some(samples) = samples {
                let seed = require_seed(g, "the Monte Carlo fraction")?;
                let mc = recurrent_fraction(&config, &phi, mc_horizon.unwrap_or(*horizon), *k, *samples, seed)?;
                summary["monte_carlo"] = serde_json::to_value(&mc).unwrap();
            }
            if let Some(path) = &g.plot {
                let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.cumulative)).collect();
                svg::write(path, "cumulative mu(A_k ∪ ... ∪ A_n)", "n", "measure", &pts, None)?;
            }
            out.table("dichotomy", &rows, summary)
        }
        Command::Jarnik { f, phi, horizon } => {
            let f = DimensionFunction::parse_any(f)?;
            let phi = RateFunction::parse_any(phi)?;
            let verdict = jarnik_classify(&config, &f, &phi)?;
            let rows = (1..=*horizon)
                .map(|n| Ok(PartialSumRow { n, partial_sum: jarnik_partial_sum(&config, &f, &phi, n)? }))
                .collect::<Result<Vec<_>, Error>>()?;
            let gamma = config.gamma();
            let summary = json!({
                "f": f.to_string(),
                "phi": phi.to_string(),
                "verdict": verdict,
                "doubling_constant": f.doubling_constant(gamma),
                "monotone": f.monotone_flag(&config),
                "provenance": Provenance::for_params(&json!({"command": "jarnik", "ifs": config.spec(), "f": f, "phi": phi, "N": horizon})),
            });
            if let Some(path) = &g.plot {
                let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.partial_sum.log10())).collect();
                svg::write(path, "Hausdorff series partial sums", "N", "log10 partial sum", &pts, None)?;
            }
            out.table("jarnik", &rows, summary)
        }
        Command::Dimension { phi, k, horizon } => {
            let phi = RateFunction::parse_any(phi)?;
            let report = covering_exponent(&config, &phi, *k, *horizon)?;
            let b = b_exponent(&config, &phi, phi.table_len())?;
            let formula = dim_formula(&config, b.value)?;
            let rows: Vec<CurveRow> = report.curve.iter().map(|&(s, log10_sum)| CurveRow { s, log10_sum }).collect();
            let summary = json!({
                "phi": phi.to_string(),
                "estimate": report.s,
                "b": b,
                "formula": formula,
                "gap": report.s - formula,
                "k": k,
                "N": horizon,
                "provenance": Provenance::for_params(&json!({"command": "dimension", "ifs": config.spec(), "phi": phi, "k": k, "N": horizon})),
            });
            if let Some(path) = &g.plot {
                let pts: Vec<(f64, f64)> = report.curve.clone();
                svg::write(path, "log10 of the cover sum", "s", "log10 sum", &pts, Some(0.0))?;
            }
            out.table("dimension", &rows, summary)
        }
        Command::QuasiIndep { phi, horizon, ball, cylinder, depth } => {
            let phi = RateFunction::parse_any(phi)?;
            let region = match (ball, cylinder) {
                (Some(b), _) => parse_ball(b)?,
                (None, Some(w)) => cylinder_interval(&config, &Word::new(w.clone()))?,
                (None, None) => Interval::unit(),
            };
            let report = quasi_independence(&config, &region, &phi, *horizon, *depth, DEFAULT_LEVEL_CAP)?;
            let rows: Vec<LevelMeasureRow> = report
                .per_level
                .iter()
                .enumerate()
                .map(|(i, m)| LevelMeasureRow { n: i + 1, mu_an: m.value_f64(), mu_an_err: m.error_f64() })
                .collect();
            let summary = json!({
                "phi": phi.to_string(),
                "ball": region.to_string(),
                "mu_ball": report.mu_ball.value_f64(),
                "sum_single": report.sum_single.value_f64(),
                "sum_pairs": report.sum_pairs.value_f64(),
                "ratio": report.ratio,
                "pz_lower": report.pz_lower,
                "mu_union": report.union.value_f64(),
                "mu_union_err": report.union.error_f64(),
                "pz_consistent": report.pz_consistent(),
                "provenance": Provenance::for_params(&json!({"command": "quasi-indep", "ifs": config.spec(), "phi": phi, "N": horizon, "ball": region.to_string()})),
            });
            out.table("quasi_indep", &rows, summary)
        }
        Command::Liminf { alpha, horizon, samples } => {
            let seed = require_seed(g, "liminf")?;
            let alpha_expr: GammaExpr = alpha.parse()?;
            let report = liminf_statistic(&config, alpha_expr.eval(config.gamma()), *horizon, *samples, seed)?;
            let summary = json!({
                "alpha": alpha_expr.to_string(),
                "alpha_value": report.alpha,
                "N": horizon,
                "lower": report.lower,
                "upper": report.upper,
                "provenance": report.provenance,
            });
            if let Some(path) = &g.plot {
                let mut v: Vec<f64> = report.samples.iter().map(|s| s.hi).collect();
                v.sort_by(f64::total_cmp);
                let pts: Vec<(f64, f64)> = v.iter().enumerate().map(|(i, x)| ((i + 1) as f64 / v.len() as f64, *x)).collect();
                svg::write(path, "empirical quantiles of the statistic", "quantile", "statistic", &pts, None)?;
            }
            out.table("liminf", &report.samples, summary)
        }
        Command::Ahlfors { samples, r_min, r_max, depth } => {
            let seed = require_seed(g, "ahlfors")?;
            let (report, rows) = ahlfors_scan(&config, *samples, *r_min, *r_max, seed, *depth)?;
            let value = json!({
                "report": report,
                "provenance": Provenance { seed: Some(seed), ..Provenance::for_params(&json!({"command": "ahlfors", "ifs": config.spec(), "samples": samples, "r_min": r_min, "r_max": r_max, "depth": depth, "seed": seed})) },
            });
            if let Some(path) = &g.plot {
                let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.r.log10(), r.ratio)).collect();
                svg::scatter(path, "mu(B(x,r)) / r^gamma", "log10 r", "ratio", &pts, &[report.bound_lo, report.bound_hi])?;
            }
            if !report.within_bounds() {
                return Err(Failure::Verification(value));
            }
            out.table("ahlfors", &rows, value)
        }
    }
}

fn parse_ball(s: &str) -> std::result::Result<Interval, Failure> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| Failure::Usage(format!("ball must be lo,hi: {s}")))?;
    Interval::try_new(parse_rational(lo.trim())?, parse_rational(hi.trim())?).ok_or_else(|| Failure::Usage(format!("empty ball: {s}")))
}

#[derive(Serialize)]
struct PartialSumRow {
    n: usize,
    partial_sum: f64,
}

#[derive(Serialize)]
struct CurveRow {
    s: f64,
    log10_sum: f64,
}

#[derive(Serialize)]
struct LevelMeasureRow {
    n: usize,
    #[serde(rename = "mu_An")]
    mu_an: f64,
    #[serde(rename = "mu_An_err")]
    mu_an_err: f64,
}

#[derive(Serialize)]
struct OrbitRow {
    n: usize,
    lo: String,
    hi: String,
    lo_f64: f64,
    hi_f64: f64,
}

fn orbit(config: &IfsConfig, g: &Global, out: &Output, period: Option<&[u32]>, preperiod: Option<&[u32]>, sample: bool, horizon: usize) -> Outcome {
    let point: CodedPoint = match (period, sample) {
        (Some(p), _) => pi_eval(config, &Word::new(preperiod.unwrap_or(&[]).to_vec()), &Word::new(p.to_vec()))?,
        (None, true) => sample_point(config, require_seed(g, "orbit --sample")?, horizon + 64)?,
        (None, false) => return Err(Failure::Usage("orbit needs --period or --sample".into())),
    };
    let rows = (1..=horizon)
        .map(|n| {
            let d = recurrence_distance(config, &point, n)?;
            Ok(OrbitRow { n, lo: format_rational(&d.lo), hi: format_rational(&d.hi), lo_f64: to_f64(&d.lo), hi_f64: to_f64(&d.hi) })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let summary = json!({
        "kind": point.kind(),
        "coding": point.to_spec(),
        "value": point.value().map(format_rational),
        "seed": g.seed.filter(|_| sample),
    });
    out.table("orbit", &rows, summary)
}

struct Output {
    dir: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn new(g: &Global) -> std::result::Result<Self, Failure> {
        if let Some(dir) = &g.out {
            fs::create_dir_all(dir)?;
        }
        Ok(Self { dir: g.out.clone(), format: g.format })
    }

    fn summary(&self, name: &str, value: &Value) -> Outcome {
        let text = serde_json::to_string_pretty(value).unwrap() + "\n";
        match &self.dir {
            Some(dir) => fs::write(dir.join(format!("{name}.json")), text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }

    /// CSV rows plus a JSON summary, or one JSON document holding both.
    fn table<R: Serialize>(&self, name: &str, rows: &[R], mut summary: Value) -> Outcome {
        match self.format {
            Format::Json => {
                summary["rows"] = serde_json::to_value(rows).unwrap();
                self.summary(name, &summary)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r).map_err(|e| Failure::Usage(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
                match &self.dir {
                    Some(dir) => {
                        fs::write(dir.join(format!("{name}.csv")), bytes)?;
                        self.summary(name, &summary)
                    }
                    None => {
                        std::io::stdout().write_all(&bytes)?;
                        eprintln!("{}", serde_json::to_string_pretty(&summary).unwrap());
                        Ok(())
                    }
                }
            }
        }
    }
}
