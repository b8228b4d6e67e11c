//! `finsleroid` command-line tool.
//!
//! Exit codes: 0 success, 1 a verification identity failed, 2 usage,
//! configuration or IO error.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use finsleroid::background::Frame;
use finsleroid::config::Config;
use finsleroid::finsleroid::{cartan_trace, evaluate_k, inverse_metric, lower_y, metric_tensor};
use finsleroid::geodesics::{finsleroid_spray, integrate_geodesic, k_monitor};
use finsleroid::spray::geodesic_spray_closed;
use finsleroid::verify::run_verify;
use finsleroid::Error;

#[derive(Parser)]
#[command(name = "finsleroid", version, about = "Finsleroid metric evaluation, identity verification and geodesics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every identity over seeded random samples.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        samples: usize,
        /// write the JSON report here
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the metric quantities at one point as JSON.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// comma-separated coordinates
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// comma-separated vector components
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Integrate a geodesic of the Finsleroid spray and write it as CSV.
    Geodesic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        #[arg(long, allow_hyphen_values = true)]
        t_end: f64,
        #[arg(long, allow_hyphen_values = true)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_csv(what: &str, s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Config(format!("--{what}: {e} in {p:?}"))))
        .collect()
}

fn cmd_verify(config: PathBuf, seed: u64, samples: usize, json: Option<PathBuf>) -> Result<bool, Error> {
    let cfg = Config::load(&config)?;
    let report = run_verify(&cfg, seed, samples)?;
    print!("{}", report.table());
    if let Some(path) = json {
        std::fs::write(path, report.to_json())?;
    }
    Ok(report.pass)
}

/// Fields that need `q > q_min` are left out and named under `"singular"`.
fn cmd_eval(config: PathBuf, x: &str, y: &str) -> Result<Value, Error> {
    let cfg = Config::load(&config)?;
    let space = cfg.space()?;
    let charge = cfg.charge()?;
    let (x, y) = (parse_csv("x", x)?, parse_csv("y", y)?);
    if x.len() != space.dim() || y.len() != space.dim() {
        return Err(Error::Config(format!("--x and --y need {} components", space.dim())));
    }
    let geom = space.geometry_at(&x)?;
    let frame = Frame::new(&geom, &y)?;
    let ke = evaluate_k(&charge, &frame)?;
    let (k, bf) = (ke.k, ke.b_form);

    let mut out = Map::new();
    out.insert("x".into(), json!(x));
    out.insert("y".into(), json!(y));
    out.insert("g".into(), json!(charge.g));
    out.insert("K".into(), json!(k));
    out.insert("B".into(), json!(bf));
    out.insert("Phi".into(), json!(ke.phi));
    out.insert("S".into(), json!(frame.s));
    out.insert("b".into(), json!(frame.b));
    out.insert("q".into(), json!(frame.q));
    out.insert("q_min".into(), json!(frame.q_min()));
    out.insert("in_finsleroid".into(), json!(k <= 1.0));
    out.insert("y_lower".into(), json!(lower_y(&charge, &frame, k, bf)));

    let mut singular = Vec::new();
    let off_axis = |r: Result<Value, Error>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NearCollinear { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let conn = space.connection_at(&x, &cfg.diff)?;
    let metric = off_axis(metric_tensor(&charge, &frame, k, bf).map(|(g, det)| json!([g.to_rows(), det])))?;
    let fields = [
        ("g_lower", metric.as_ref().map(|m| m[0].clone())),
        ("det_ratio", metric.as_ref().map(|m| m[1].clone())),
        ("g_upper", off_axis(inverse_metric(&charge, &frame, k, bf).map(|m| json!(m.to_rows())))?),
        ("A_lower", off_axis(cartan_trace(&charge, &frame, k, bf).map(|a| json!(a)))?),
        ("G", off_axis(geodesic_spray_closed(&charge, &frame, &conn).map(|g| json!(g)))?),
    ];
    for (name, v) in fields {
        match v {
            Some(v) => {
                out.insert(name.into(), v);
            }
            None => singular.push(name),
        }
    }
    out.insert("singular".into(), json!(singular));
    Ok(Value::Object(out))
}

fn cmd_geodesic(config: PathBuf, x0: &str, y0: &str, t_end: f64, step: f64, out: PathBuf) -> Result<String, Error> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("--step must be positive, got {step}")));
    }
    let cfg = Config::load(&config)?;
    let space = cfg.space()?;
    let charge = cfg.charge()?;
    let (x0, y0) = (parse_csv("x0", x0)?, parse_csv("y0", y0)?);
    if x0.len() != space.dim() || y0.len() != space.dim() {
        return Err(Error::Config(format!("--x0 and --y0 need {} components", space.dim())));
    }
    let trace = integrate_geodesic(
        finsleroid_spray(&space, charge, cfg.diff),
        &x0,
        &y0,
        t_end,
        step,
        Some(k_monitor(&space, charge)),
    )?;
    trace.write_csv(BufWriter::new(File::create(&out)?))?;
    let drift = trace.max_k_drift.map_or("n/a".to_string(), |d| format!("{d:.3e}"));
    Ok(format!(
        "points={} t_final={} max_K_drift={} truncated={}",
        trace.len(),
        trace.times.last().copied().unwrap_or(0.0),
        drift,
        trace.truncated
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { config, seed, samples, json } => cmd_verify(config, seed, samples, json).map(|pass| {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
        Command::Eval { config, x, y } => cmd_eval(config, &x, &y).map(|v| {
            println!("{}", serde_json::to_string_pretty(&v).expect("JSON values always serialize"));
            ExitCode::SUCCESS
        }),
        Command::Geodesic { config, x0, y0, t_end, step, out } => {
            cmd_geodesic(config, &x0, &y0, t_end, step, out).map(|summary| {
                println!("{summary}");
                ExitCode::SUCCESS
            })
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
