use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use gdw_core::bulk_kernel::{kernel_descent_grid, limiting_bulk_params, sine_kernel, solve_bulk_geometry};
use gdw_core::checks::{check_contours, check_descent_bounds, check_fredholm, check_identities};
use gdw_core::edge_kernel::{airy_kernel, edge_constants, edge_kernel_grid, solve_edge_geometry};
use gdw_core::ensembles::{compose_gauss_divisible, sample_wigner, ElementLaw, EnsembleSpec};
use gdw_core::experiments::{run_experiment, Check, ExperimentConfig, ExperimentKind};
use gdw_core::fredholm::tw_table;
use gdw_core::spectral::{eigenvalues, SpectrumScale};

#[derive(Parser)]
#[command(name = "gdw", version, about = "Gaussian-divisible Wigner matrices: sampling, kernels, Tracy-Widom and Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Matrix size
    #[arg(long)]
    n: Option<usize>,
    /// Variance of the Gaussian component
    #[arg(long)]
    kappa: Option<f64>,
    /// Entry law: gaussian, rademacher, uniform, student_t:<df>, symmetric_pareto:<a>, zero
    #[arg(long)]
    law: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Flat JSON object with any of the keys above (flags win)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scale {
    /// X/sqrt(n)
    X,
    /// sqrt(n) X
    #[value(name = "sqrt-n-x")]
    SqrtNX,
    /// sqrt(n) W
    #[value(name = "sqrt-n-w")]
    SqrtNW,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Identities,
    Contours,
    Bounds,
    Fredholm,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues of one sample of W = X + sqrt(kappa) V (or of X).
    #[command(after_help = "CSV columns: index,value")]
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "sqrt-n-w")]
        scale: Scale,
        /// Sample X only
        #[arg(long)]
        wigner_only: bool,
    },
    /// Bulk kernel K(u, v) on a grid for one sampled X, against the sine kernel.
    #[command(after_help = "CSV columns: u,v,kernel,sine")]
    BulkKernel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        #[arg(long, default_value_t = 2.0)]
        span: f64,
        #[arg(long, default_value_t = 9)]
        points: usize,
    },
    /// Scaled edge kernel on a grid for one sampled X, against the Airy kernel.
    #[command(after_help = "CSV columns: xi,eta,kernel,airy")]
    EdgeKernel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        span: f64,
        #[arg(long, default_value_t = 9)]
        points: usize,
    },
    /// Tracy-Widom distribution function on a grid.
    #[command(after_help = "CSV columns: t,F")]
    TwTable {
        #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Monte Carlo experiment: edge | bulk | lemmas | events.
    #[command(after_help = "CSV columns:\n  edge:   replica,lambda_max,scaled\n  bulk:   replica,laplace,gap_empty,window_count\n  lemmas: n,re_z,im_z,var_mn,bias_mn,bias_se,scaled_var,stat_moment\n  events: n,replica,B,C,V,F,G,H_prime,H\nSummary and checks go to stderr; exit code 2 if a check fails.")]
    Experiment {
        #[arg(value_parser = parse_kind)]
        kind: ExperimentKind,
        #[command(flatten)]
        common: Common,
        /// Bulk center d (window at floor(d n))
        #[arg(long, allow_hyphen_values = true)]
        d: Option<f64>,
        #[arg(long)]
        psi_height: Option<f64>,
        #[arg(long)]
        gap: Option<f64>,
    },
    /// Deterministic self-checks; exit code 2 on failure.
    #[command(after_help = "CSV columns: name,value,bound,pass")]
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: gdw_core::error::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Checks,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Config file merged with the flags that were given.
fn merged(common: &Common) -> Result<Map<String, Value>, Failure> {
    let mut m = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text)? {
                Value::Object(m) => m,
                _ => return Err(Failure::Usage("config must be a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    if let Some(n) = common.n {
        m.insert("n".into(), json!(n));
    }
    if let Some(k) = common.kappa {
        m.insert("kappa".into(), json!(k));
    }
    if let Some(s) = common.seed {
        m.insert("seed".into(), json!(s));
    }
    if let Some(r) = common.replicas {
        m.insert("replicas".into(), json!(r));
    }
    if let Some(l) = &common.law {
        let law: ElementLaw = l.parse()?;
        m.insert("law".into(), json!(law.name()));
        match law.param() {
            Some(p) => m.insert("law_param".into(), json!(p)),
            None => m.remove("law_param"),
        };
    }
    for (key, default) in [("n", json!(100)), ("kappa", json!(1.0)), ("law", json!("gaussian")), ("seed", json!(1))] {
        m.entry(key).or_insert(default);
    }
    Ok(m)
}

fn ensemble(common: &Common) -> Result<EnsembleSpec, Failure> {
    Ok(serde_json::from_value(Value::Object(merged(common)?))?)
}

fn grid(span: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    (0..points).map(|k| -span + 2.0 * span * k as f64 / (points - 1) as f64).collect()
}

fn rows_out(out: &Option<PathBuf>, format: Format, header: &[&str], rows: &[Vec<f64>], extra: Value) -> Outcome {
    match format {
        Format::Csv => {
            let mut s = header.join(",");
            s.push('\n');
            for r in rows {
                s.push_str(&r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(","));
                s.push('\n');
            }
            emit(out, &s)
        }
        Format::Json => {
            let mut obj = match extra {
                Value::Object(m) => m,
                _ => Map::new(),
            };
            obj.insert("columns".into(), json!(header));
            obj.insert("rows".into(), json!(rows));
            emit(out, &(serde_json::to_string_pretty(&Value::Object(obj))? + "\n"))
        }
    }
}

fn report_checks(checks: &[Check]) -> Outcome {
    for c in checks {
        eprintln!("{} {} = {:e} (bound {:e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run(cmd: Cmd) -> Outcome {
    match cmd {
        Cmd::Sample { common, scale, wigner_only } => {
            let spec = ensemble(&common)?;
            let h = if wigner_only { sample_wigner(&spec)? } else { compose_gauss_divisible(&spec)? };
            let sc = match scale {
                Scale::X => SpectrumScale::XOverSqrtN,
                Scale::SqrtNX => SpectrumScale::SqrtNX,
                Scale::SqrtNW => SpectrumScale::SqrtNW,
            };
            let ev = eigenvalues(&h, sc)?;
            match common.format {
                Format::Csv => emit(&common.out, &ev.to_csv()),
                Format::Json => emit(&common.out, &(serde_json::to_string_pretty(&ev)? + "\n")),
            }
        }
        Cmd::BulkKernel { common, d, span, points } => {
            let spec = ensemble(&common)?;
            if !(spec.kappa > 0.0) {
                return Err(Failure::Usage("bulk-kernel needs kappa > 0".into()));
            }
            let (delta, _) = limiting_bulk_params(d, spec.kappa)?;
            let n = spec.n as f64;
            let s = spec.kappa * n;
            let c = d / spec.kappa + delta;
            let ys = eigenvalues(&sample_wigner(&spec)?, SpectrumScale::XOverSqrtN)?.values;
            let nu: Vec<f64> = ys.iter().map(|y| n * y - c * s).collect();
            let g = solve_bulk_geometry(&nu, s)?;
            let us = grid(span, points);
            let k = kernel_descent_grid(&g, &us, &us)?;
            let mut rows = Vec::new();
            for (i, &u) in us.iter().enumerate() {
                for (j, &v) in us.iter().enumerate() {
                    rows.push(vec![u, v, k[i][j], sine_kernel(g.b, u, v)]);
                }
            }
            rows_out(&common.out, common.format, &["u", "v", "kernel", "sine"], &rows, json!({"b": g.b, "d": g.d, "a": g.a, "S": s}))
        }
        Cmd::EdgeKernel { common, span, points } => {
            let spec = ensemble(&common)?;
            let c = edge_constants(spec.kappa)?;
            let n = spec.n as f64;
            let s = spec.kappa * n;
            let ys = eigenvalues(&sample_wigner(&spec)?, SpectrumScale::XOverSqrtN)?.values;
            let nu: Vec<f64> = ys.iter().map(|y| n * y).collect();
            let g = solve_edge_geometry(&nu, s, c.alpha0, c.beta0)?;
            if !g.in_f {
                eprintln!("note: sample is outside F_n for the default window");
            }
            let xs = grid(span, points);
            let k = edge_kernel_grid(&g, &xs, &xs)?;
            let mut rows = Vec::new();
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in xs.iter().enumerate() {
                    rows.push(vec![x, y, k[i][j], airy_kernel(x, y)]);
                }
            }
            rows_out(&common.out, common.format, &["xi", "eta", "kernel", "airy"], &rows, json!({"b": g.b, "a": g.a, "d": g.d, "S": s, "in_f": g.in_f}))
        }
        Cmd::TwTable { from, to, step, out, format } => {
            let t = tw_table(from, to, step)?;
            let rows: Vec<Vec<f64>> = t.into_iter().map(|(t, f)| vec![t, f]).collect();
            rows_out(&out, format, &["t", "F"], &rows, json!({}))
        }
        Cmd::Experiment { kind, common, d, psi_height, gap } => {
            let mut m = merged(&common)?;
            m.insert("experiment".into(), serde_json::to_value(kind)?);
            for (key, v) in [("d", d), ("psi_height", psi_height), ("gap", gap)] {
                if let Some(v) = v {
                    m.insert(key.into(), json!(v));
                }
            }
            if let Some(p) = &common.out {
                m.insert("out".into(), json!(p.display().to_string()));
            }
            let cfg = ExperimentConfig::from_json(&Value::Object(m).to_string())?;
            let out = common.out.clone().or_else(|| cfg.out.clone().map(PathBuf::from));
            let report = run_experiment(&cfg)?;
            match common.format {
                Format::Csv => emit(&out, &report.table.to_csv())?,
                Format::Json => emit(&out, &(report.to_json() + "\n"))?,
            }
            for (k, v) in &report.summary {
                eprintln!("{k} = {v}");
            }
            eprintln!("wall clock {:.2} s", report.wall_clock_s);
            report_checks(&report.checks)
        }
        Cmd::Check { suite, seed, out, format } => {
            let checks = match suite {
                Suite::Identities => check_identities(seed)?,
                Suite::Contours => check_contours(seed)?,
                Suite::Bounds => check_descent_bounds(seed)?,
                Suite::Fredholm => check_fredholm(seed)?,
            };
            match format {
                Format::Csv => {
                    let mut s = String::from("name,value,bound,pass\n");
                    for c in &checks {
                        s.push_str(&format!("\"{}\",{:e},{:e},{}\n", c.name, c.value, c.bound, c.pass));
                    }
                    emit(&out, &s)?;
                }
                Format::Json => emit(&out, &(serde_json::to_string_pretty(&checks)? + "\n"))?,
            }
            report_checks(&checks)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
