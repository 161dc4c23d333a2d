use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use unimon::circuit::CircuitParams;
use unimon::model::{linear_analysis, ModelKind};
use unimon::observables::analytic_kerr;
use unimon::sweep::{
    comparison_csv, convergence_csv, convergence_json, format_float, on_pool, oracle_compare, point_row, run_convergence, run_sweep,
    sweep_csv, sweep_json, worker_cap, EvalConfig, Study, SweepParameter, SweepSpec,
};
use unimon::units::GHZ;
use unimon::{Result, UnimonError};

#[derive(Parser)]
#[command(name = "unimon", version, about = "Multimode spectra of a junction-embedded half-wavelength resonator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration document; the reference device when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; `.json` selects JSON, anything else CSV. Stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// single_mode, renormalized, multimode, oracle or analytic.
    #[arg(long, default_value = "multimode")]
    model: String,
    /// Lowest normal modes kept exactly in the multimode model.
    #[arg(long)]
    m0: Option<usize>,
    /// Multimode energy cutoff [GHz].
    #[arg(long)]
    cutoff_ghz: Option<f64>,
    /// Worker threads; falls back to UNIMON_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Observables of a single configuration.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep one parameter over a linear range.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// xj_over_l, ej_ghz, zc_ohm, phi_diff_over_phi0, e_cutoff_ghz or mode_count.
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Convergence study: cutoff, mode_count or grid.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        study: Option<String>,
        /// Comma-separated control values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Flux-grid reference against the multimode pipeline over the same modes.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        /// Grid points per coordinate.
        #[arg(long)]
        points: Option<usize>,
        /// Skip the refined-grid Cauchy check.
        #[arg(long)]
        no_refine: bool,
    },
    /// Harmonic-basis Kerr estimates per normal mode.
    Analytic {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        modes: usize,
    },
}

/// Circuit parameters plus the optional `sweep` and `convergence` sections.
struct Document {
    params: CircuitParams,
    sweep: Option<Value>,
    convergence: Option<Value>,
}

fn load(path: Option<&Path>) -> Result<Document> {
    let Some(path) = path else {
        return Ok(Document { params: CircuitParams::reference_device(), sweep: None, convergence: None });
    };
    let text = std::fs::read_to_string(path).map_err(|e| UnimonError::Config(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| UnimonError::Parse { key: "<document>".into(), reason: e.to_string() })?;
    let Value::Object(mut map) = value else {
        return Err(UnimonError::Config("configuration must be a JSON object".into()));
    };
    let sweep = map.remove("sweep");
    let convergence = map.remove("convergence");
    let params = CircuitParams::from_config_map(&map)?;
    Ok(Document { params, sweep, convergence })
}

fn eval_config(common: &Common) -> Result<EvalConfig> {
    let model: ModelKind = common.model.parse()?;
    let mut eval = EvalConfig::new(model);
    if let Some(m0) = common.m0 {
        eval.multimode.lower_modes = m0;
    }
    if let Some(c) = common.cutoff_ghz {
        if !(c > 0.0) {
            return Err(UnimonError::Validation(format!("--cutoff-ghz must be positive, got {c}")));
        }
        eval.multimode.cutoff = c * GHZ;
    }
    Ok(eval)
}

fn is_json(out: Option<&Path>) -> bool {
    out.and_then(|p| p.extension()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn emit(out: Option<&Path>, csv: impl FnOnce() -> String, json: impl FnOnce() -> Value) -> Result<()> {
    let text = if is_json(out) {
        let mut s = serde_json::to_string_pretty(&json()).map_err(|e| UnimonError::Internal(e.to_string()))?;
        s.push('\n');
        s
    } else {
        csv()
    };
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn section_field<'a>(section: Option<&'a Map<String, Value>>, key: &str) -> Option<&'a Value> {
    section.and_then(|s| s.get(key))
}

fn sweep_spec(
    doc: &Document,
    param: Option<String>,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<usize>,
) -> Result<SweepSpec> {
    let section = match &doc.sweep {
        None => None,
        Some(Value::Object(m)) => Some(m),
        Some(_) => return Err(UnimonError::Config("`sweep` must be an object".into())),
    };
    if let Some(m) = section {
        if let Some(k) = m.keys().find(|k| !["parameter", "start", "stop", "points"].contains(&k.as_str())) {
            return Err(UnimonError::UnknownKey(format!("sweep.{k}")));
        }
    }
    let number = |key: &str, flag: Option<f64>| -> Result<f64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match section_field(section, key) {
            None => Err(UnimonError::MissingKey(format!("sweep.{key}"))),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| UnimonError::Parse { key: format!("sweep.{key}"), reason: format!("expected a number, got {v}") }),
        }
    };
    let parameter: SweepParameter = match param {
        Some(p) => p.parse()?,
        None => match section_field(section, "parameter") {
            Some(Value::String(s)) => s.parse()?,
            Some(v) => {
                return Err(UnimonError::Parse { key: "sweep.parameter".into(), reason: format!("expected a string, got {v}") })
            }
            None => return Err(UnimonError::MissingKey("sweep.parameter".into())),
        },
    };
    let points = match points {
        Some(p) => p,
        None => match section_field(section, "points") {
            Some(v) => v.as_u64().ok_or_else(|| UnimonError::Parse {
                key: "sweep.points".into(),
                reason: format!("expected a positive integer, got {v}"),
            })? as usize,
            None => return Err(UnimonError::MissingKey("sweep.points".into())),
        },
    };
    Ok(SweepSpec { parameter, start: number("start", start)?, stop: number("stop", stop)?, points })
}

fn convergence_spec(doc: &Document, study: Option<String>, values: Vec<f64>) -> Result<(Study, Vec<f64>)> {
    let section = match &doc.convergence {
        None => None,
        Some(Value::Object(m)) => Some(m),
        Some(_) => return Err(UnimonError::Config("`convergence` must be an object".into())),
    };
    if let Some(m) = section {
        if let Some(k) = m.keys().find(|k| !["study", "values"].contains(&k.as_str())) {
            return Err(UnimonError::UnknownKey(format!("convergence.{k}")));
        }
    }
    let study: Study = match study {
        Some(s) => s.parse()?,
        None => match section_field(section, "study") {
            Some(Value::String(s)) => s.parse()?,
            Some(v) => {
                return Err(UnimonError::Parse { key: "convergence.study".into(), reason: format!("expected a string, got {v}") })
            }
            None => return Err(UnimonError::MissingKey("convergence.study".into())),
        },
    };
    let values = if !values.is_empty() {
        values
    } else {
        match section_field(section, "values") {
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| {
                    v.as_f64().ok_or_else(|| UnimonError::Parse {
                        key: "convergence.values".into(),
                        reason: format!("expected a number, got {v}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            Some(v) => {
                return Err(UnimonError::Parse { key: "convergence.values".into(), reason: format!("expected an array, got {v}") })
            }
            None => return Err(UnimonError::MissingKey("convergence.values".into())),
        }
    };
    Ok((study, values))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Spectrum { common } => {
            let doc = load(common.config.as_deref())?;
            let eval = eval_config(&common)?;
            let workers = worker_cap(common.workers)?;
            let rows = vec![on_pool(workers, || point_row(doc.params.xj_over_l(), &doc.params, &eval))?];
            if rows[0].status != "ok" {
                log::error!("{}", rows[0].error.clone().unwrap_or_default());
            }
            emit(common.out.as_deref(), || sweep_csv("xj_over_l", &rows), || sweep_json("xj_over_l", &rows))
        }
        Command::Sweep { common, param, start, stop, points } => {
            let doc = load(common.config.as_deref())?;
            let spec = sweep_spec(&doc, param, start, stop, points)?;
            let eval = eval_config(&common)?;
            let workers = worker_cap(common.workers)?;
            let rows = run_sweep(&spec, &doc.params, &eval, workers)?;
            let name = spec.parameter.name();
            emit(common.out.as_deref(), || sweep_csv(name, &rows), || sweep_json(name, &rows))
        }
        Command::Converge { common, study, values } => {
            let doc = load(common.config.as_deref())?;
            let (study, values) = convergence_spec(&doc, study, values)?;
            let eval = eval_config(&common)?;
            let workers = worker_cap(common.workers)?;
            let rows = run_convergence(study, &values, &doc.params, &eval, workers)?;
            emit(common.out.as_deref(), || convergence_csv(study, &rows), || convergence_json(study, &rows))
        }
        Command::OracleCompare { common, levels, points, no_refine } => {
            let doc = load(common.config.as_deref())?;
            let mut eval = eval_config(&common)?;
            if common.cutoff_ghz.is_none() {
                eval.multimode.cutoff = 300.0 * GHZ;
            }
            eval.oracle.points = points;
            eval.oracle.refine = !no_refine;
            let workers = worker_cap(common.workers)?;
            let c = on_pool(workers, || oracle_compare(&doc.params, &eval, levels))??;
            log::info!(
                "oracle: {} coordinates, {} points, alpha {:?} Hz vs multimode {:?} Hz",
                c.coordinates,
                c.points,
                c.oracle_alpha,
                c.multimode_alpha
            );
            emit(
                common.out.as_deref(),
                || comparison_csv(&c),
                || serde_json::to_value(&c).unwrap_or(Value::Null),
            )
        }
        Command::Analytic { common, modes } => {
            let doc = load(common.config.as_deref())?;
            let linear = linear_analysis(&doc.params)?;
            let a = analytic_kerr(&linear.modes, doc.params.josephson_energy);
            let n = modes.min(linear.modes.len());
            let csv = || {
                let mut s = String::from("mode,frequency_hz,lambda,self_kerr_hz,relative_decline,ej_star_hz\n");
                for m in 0..n {
                    s.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        m + 1,
                        format_float(linear.modes.frequency_hz(m)),
                        format_float(a.lambda[m]),
                        format_float(a.self_kerr[m]),
                        format_float(a.relative_decline(m)),
                        format_float(a.ej_star)
                    ));
                }
                s
            };
            let json = || {
                Value::Array(
                    (0..n)
                        .map(|m| {
                            serde_json::json!({
                                "mode": m + 1,
                                "frequency_hz": linear.modes.frequency_hz(m),
                                "lambda": a.lambda[m],
                                "self_kerr_hz": a.self_kerr[m],
                                "relative_decline": a.relative_decline(m),
                                "ej_star_hz": a.ej_star,
                            })
                        })
                        .collect(),
                )
            };
            emit(common.out.as_deref(), csv, json)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
