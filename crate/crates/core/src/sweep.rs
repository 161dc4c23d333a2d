//! Parameter sweeps and convergence studies over independent points, with
//! CSV/JSON emission.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::circuit::CircuitParams;
use crate::error::{Result, UnimonError};
use crate::model::{
    higher_mode_renormalization, linear_analysis, solve_multimode, solve_single_mode_model, ModelKind, MultimodeConfig,
};
use crate::observables::{analytic_kerr, NumericalKerr, OBSERVED_MODES};
use crate::oracle::{solve_oracle, OracleConfig};
use crate::units::GHZ;

/// Environment variable read when no explicit worker count is given.
pub const WORKERS_ENV: &str = "UNIMON_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    XjOverL,
    EjGhz,
    ZcOhm,
    PhiDiffOverPhi0,
    ECutoffGhz,
    ModeCount,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::XjOverL => "xj_over_l",
            SweepParameter::EjGhz => "ej_ghz",
            SweepParameter::ZcOhm => "zc_ohm",
            SweepParameter::PhiDiffOverPhi0 => "phi_diff_over_phi0",
            SweepParameter::ECutoffGhz => "e_cutoff_ghz",
            SweepParameter::ModeCount => "mode_count",
        }
    }
}

impl FromStr for SweepParameter {
    type Err = UnimonError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "xj_over_l" => SweepParameter::XjOverL,
            "ej_ghz" => SweepParameter::EjGhz,
            "zc_ohm" => SweepParameter::ZcOhm,
            "phi_diff_over_phi0" => SweepParameter::PhiDiffOverPhi0,
            "e_cutoff_ghz" => SweepParameter::ECutoffGhz,
            "mode_count" => SweepParameter::ModeCount,
            other => return Err(UnimonError::Validation(format!("unknown sweep parameter '{other}'"))),
        })
    }
}

/// How a single point is evaluated.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub model: ModelKind,
    pub multimode: MultimodeConfig,
    pub oracle: OracleConfig,
}

impl EvalConfig {
    pub fn new(model: ModelKind) -> Self {
        EvalConfig { model, multimode: MultimodeConfig::default(), oracle: OracleConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Checks the point count and that every point is a valid circuit.
    pub fn validate(&self, base: &CircuitParams, eval: &EvalConfig) -> Result<()> {
        if self.points < 2 {
            return Err(UnimonError::Validation(format!("sweep needs at least 2 points, got {}", self.points)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(UnimonError::Validation("sweep range must be finite".into()));
        }
        for v in self.values() {
            let (params, _) = apply(self.parameter, v, base, eval)?;
            params.validate()?;
        }
        Ok(())
    }
}

/// Parameters and evaluation settings at one sweep value.
pub fn apply(
    parameter: SweepParameter,
    value: f64,
    base: &CircuitParams,
    eval: &EvalConfig,
) -> Result<(CircuitParams, EvalConfig)> {
    let mut params = base.clone();
    let mut eval = eval.clone();
    match parameter {
        SweepParameter::XjOverL => params.junction_position = value * base.half_length,
        SweepParameter::EjGhz => params.josephson_energy = value * GHZ,
        SweepParameter::ZcOhm => {
            if !(value > 0.0) {
                return Err(UnimonError::Validation(format!("zc_ohm must be positive, got {value}")));
            }
            params = base.with_impedance(value);
        }
        SweepParameter::PhiDiffOverPhi0 => params.phi_diff = value,
        SweepParameter::ECutoffGhz => {
            if !(value > 0.0) {
                return Err(UnimonError::Validation(format!("e_cutoff_ghz must be positive, got {value}")));
            }
            eval.multimode.cutoff = value * GHZ;
        }
        SweepParameter::ModeCount => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(UnimonError::Validation(format!("mode_count must be a positive integer, got {value}")));
            }
            params.mode_count_override = Some(value as usize);
        }
    }
    Ok((params, eval))
}

/// Observables of one configuration; `None` marks a gap (hybridized,
/// unlabeled or not provided by the model).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointObservables {
    /// f_m [Hz], m = 1..3.
    pub frequencies: [Option<f64>; OBSERVED_MODES],
    /// α_m(i, k) [Hz] in the order (0,0), (0,1), (1,0), (1,1).
    pub anharmonicities: [[Option<f64>; 4]; OBSERVED_MODES],
    /// K_nm(i) [Hz] for (n,m) = (1,2), (1,3), (2,3) and i = 0, 1.
    pub cross_kerr: [[Option<f64>; 2]; 3],
    pub ej_ratio: Option<f64>,
}

impl PointObservables {
    fn empty() -> Self {
        PointObservables {
            frequencies: [None; OBSERVED_MODES],
            anharmonicities: [[None; 4]; OBSERVED_MODES],
            cross_kerr: [[None; 2]; 3],
            ej_ratio: None,
        }
    }

    fn from_numerical(k: &NumericalKerr, ej_ratio: Option<f64>) -> Self {
        let mut out = PointObservables::empty();
        for m in 0..OBSERVED_MODES {
            out.frequencies[m] = k.frequencies.get(m).copied().flatten();
            for (j, (i, kk)) in OCCUPATIONS.iter().enumerate() {
                out.anharmonicities[m][j] = k.alpha(m + 1, *i, *kk);
            }
        }
        for (p, (n, m)) in PAIRS.iter().enumerate() {
            for i in 0..2 {
                out.cross_kerr[p][i] = k.kerr(*n, *m, i);
            }
        }
        out.ej_ratio = ej_ratio;
        out
    }

    pub fn alpha(&self, mode: usize, i: usize, k: usize) -> Option<f64> {
        let j = OCCUPATIONS.iter().position(|o| *o == (i, k))?;
        self.anharmonicities.get(mode.checked_sub(1)?)?[j]
    }

    pub fn kerr(&self, n: usize, m: usize, i: usize) -> Option<f64> {
        let p = PAIRS.iter().position(|p| *p == (n.min(m), n.max(m)))?;
        *self.cross_kerr[p].get(i)?
    }

    fn values(&self) -> Vec<Option<f64>> {
        let mut v: Vec<Option<f64>> = self.frequencies.to_vec();
        for row in &self.anharmonicities {
            v.extend_from_slice(row);
        }
        for row in &self.cross_kerr {
            v.extend_from_slice(row);
        }
        v.push(self.ej_ratio);
        v
    }

    /// Number of missing observables.
    pub fn gaps(&self) -> usize {
        self.values().iter().filter(|v| v.is_none()).count()
    }
}

const OCCUPATIONS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];
const PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

fn observable_columns() -> Vec<String> {
    let mut c: Vec<String> = (1..=OBSERVED_MODES).map(|m| format!("f{m}_hz")).collect();
    for m in 1..=OBSERVED_MODES {
        for (i, k) in OCCUPATIONS {
            c.push(format!("alpha{m}_{i}{k}_hz"));
        }
    }
    for (n, m) in PAIRS {
        for i in 0..2 {
            c.push(format!("k{n}{m}_{i}_hz"));
        }
    }
    c.push("ej_ratio".into());
    c
}

pub fn evaluate_point(params: &CircuitParams, eval: &EvalConfig) -> Result<PointObservables> {
    match eval.model {
        ModelKind::SingleMode | ModelKind::Renormalized => {
            let renormalize = eval.model == ModelKind::Renormalized;
            let levels = solve_single_mode_model(params, renormalize, &eval.multimode.grid)?;
            let ratio = if renormalize {
                levels.spectra.first().and_then(|s| s.as_ref()).map(|s| s.problem.cos_amplitude / params.josephson_energy)
            } else {
                None
            };
            Ok(PointObservables::from_numerical(&NumericalKerr::from_levels(&levels), ratio))
        }
        ModelKind::Multimode => {
            let solution = solve_multimode(params, &eval.multimode)?;
            let ratio = solution.renormalization.ratio();
            Ok(PointObservables::from_numerical(&NumericalKerr::from_levels(&solution), Some(ratio)))
        }
        ModelKind::Oracle => {
            let spectrum = solve_oracle(params, &eval.oracle)?;
            let mut out = PointObservables::empty();
            let d = spectrum.aux_modes.len() + 1;
            let mut label = vec![0; d];
            let e0 = spectrum.level_of(&label);
            label[0] = 1;
            out.frequencies[0] = e0.and_then(|e0| spectrum.level_of(&label).map(|e| e - e0));
            out.anharmonicities[0][0] = spectrum.lowest_anharmonicity();
            Ok(out)
        }
        ModelKind::Analytic => {
            let linear = linear_analysis(params)?;
            let modes = &linear.modes;
            if modes.len() < OBSERVED_MODES {
                return Err(UnimonError::Validation(format!(
                    "analytic model needs at least {OBSERVED_MODES} modes, got {}",
                    modes.len()
                )));
            }
            let a = analytic_kerr(modes, params.josephson_energy);
            let mut out = PointObservables::empty();
            for m in 0..OBSERVED_MODES {
                out.frequencies[m] = Some(modes.frequency_hz(m));
                let spectators: Vec<usize> = (0..OBSERVED_MODES).filter(|&x| x != m).collect();
                for (j, (i, k)) in OCCUPATIONS.iter().enumerate() {
                    out.anharmonicities[m][j] = Some(a.anharmonicity(m, (spectators[0], *i), (spectators[1], *k)));
                }
            }
            for (p, (n, m)) in PAIRS.iter().enumerate() {
                let t = 6 - n - m;
                for i in 0..2 {
                    out.cross_kerr[p][i] = Some(a.cross_kerr(n - 1, m - 1, (t - 1, i)));
                }
            }
            out.ej_ratio = Some(a.ej_star / params.josephson_energy);
            Ok(out)
        }
    }
}

/// One evaluated point; `status` is `ok` or the error code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRow {
    pub value: f64,
    pub status: String,
    pub error: Option<String>,
    pub observables: PointObservables,
    /// Wall time [s]; emitted in JSON only, so that CSV stays reproducible.
    pub wall_time: f64,
}

fn isolated<T>(f: impl FnOnce() -> Result<T>) -> Result<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(UnimonError::Internal(msg))
        }
    }
}

fn row(value: f64, result: Result<PointObservables>, started: Instant) -> PointRow {
    let wall_time = started.elapsed().as_secs_f64();
    match result {
        Ok(observables) => PointRow { value, status: "ok".into(), error: None, observables, wall_time },
        Err(e) => {
            log::warn!("point {value}: {e}");
            PointRow {
                value,
                status: e.code().into(),
                error: Some(e.to_string()),
                observables: PointObservables::empty(),
                wall_time,
            }
        }
    }
}

/// A single configuration as a row keyed by `value`, with the same fault
/// isolation as a sweep point.
pub fn point_row(value: f64, params: &CircuitParams, eval: &EvalConfig) -> PointRow {
    let started = Instant::now();
    row(value, isolated(|| evaluate_point(params, eval)), started)
}

/// Worker count from an explicit value or `UNIMON_WORKERS`.
pub fn worker_cap(explicit: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = explicit {
        if n == 0 {
            return Err(UnimonError::Validation("worker count must be positive".into()));
        }
        return Ok(Some(n));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(UnimonError::Validation(format!("{WORKERS_ENV} must be a positive integer, got '{s}'"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a pool of `workers` threads, or on the current pool.
pub fn on_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| UnimonError::Resource(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn sort_by_value<T>(rows: &mut [T], key: impl Fn(&T) -> f64) {
    rows.sort_by(|a, b| key(a).total_cmp(&key(b)));
}

/// Every point of the sweep; point failures become row error codes.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &CircuitParams,
    eval: &EvalConfig,
    workers: Option<usize>,
) -> Result<Vec<PointRow>> {
    spec.validate(base, eval)?;
    let values = spec.values();
    let mut rows = on_pool(workers, || {
        values
            .par_iter()
            .map(|&v| {
                let started = Instant::now();
                let result = isolated(|| {
                    let (params, eval) = apply(spec.parameter, v, base, eval)?;
                    evaluate_point(&params, &eval)
                });
                row(v, result, started)
            })
            .collect::<Vec<_>>()
    })?;
    sort_by_value(&mut rows, |r| r.value);
    Ok(rows)
}

pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn sweep_columns(parameter: &str) -> Vec<String> {
    let mut c = vec![parameter.to_string(), "status".into()];
    c.extend(observable_columns());
    c.push("gaps".into());
    c
}

pub fn sweep_csv(parameter: &str, rows: &[PointRow]) -> String {
    let mut out = sweep_columns(parameter).join(",");
    out.push('\n');
    for r in rows {
        let mut fields = vec![format_float(r.value), r.status.clone()];
        fields.extend(r.observables.values().into_iter().map(cell));
        fields.push(r.observables.gaps().to_string());
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

fn number(x: Option<f64>) -> Value {
    x.and_then(serde_json::Number::from_f64).map(Value::Number).unwrap_or(Value::Null)
}

pub fn sweep_json(parameter: &str, rows: &[PointRow]) -> Value {
    let names = sweep_columns(parameter);
    let items = rows
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert(names[0].clone(), number(Some(r.value)));
            obj.insert("status".into(), Value::String(r.status.clone()));
            for (name, v) in names[2..].iter().zip(r.observables.values()) {
                obj.insert(name.clone(), number(v));
            }
            obj.insert("gaps".into(), r.observables.gaps().into());
            obj.insert("error".into(), r.error.clone().map(Value::String).unwrap_or(Value::Null));
            obj.insert("wall_time_s".into(), number(Some(r.wall_time)));
            Value::Object(obj)
        })
        .collect();
    Value::Array(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    /// α₁(0,0) of the multimode model against E_cutoff [GHz].
    Cutoff,
    /// Ẽ_J/E_J seen by the lowest mode against the total mode count.
    ModeCount,
    /// Lowest five multimode eigenvalues against single-mode grid points.
    Grid,
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::Cutoff => "cutoff",
            Study::ModeCount => "mode_count",
            Study::Grid => "grid",
        }
    }

    pub fn control(&self) -> &'static str {
        match self {
            Study::Cutoff => "e_cutoff_ghz",
            Study::ModeCount => "mode_count",
            Study::Grid => "grid_points",
        }
    }

    pub fn quantities(&self) -> Vec<String> {
        match self {
            Study::Cutoff => vec!["alpha1_00_hz".into()],
            Study::ModeCount => vec!["ej_ratio".into(), "last_factor_defect".into()],
            Study::Grid => (0..5).map(|i| format!("e{i}_hz")).collect(),
        }
    }
}

impl FromStr for Study {
    type Err = UnimonError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cutoff" => Study::Cutoff,
            "mode_count" => Study::ModeCount,
            "grid" => Study::Grid,
            other => return Err(UnimonError::Validation(format!("unknown convergence study '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub control: f64,
    pub status: String,
    pub error: Option<String>,
    pub quantities: Vec<Option<f64>>,
    /// Change from the previous row.
    pub differences: Vec<Option<f64>>,
    pub wall_time: f64,
}

fn study_point(study: Study, control: f64, base: &CircuitParams, eval: &EvalConfig) -> Result<Vec<Option<f64>>> {
    match study {
        Study::Cutoff => {
            let (params, eval) = apply(SweepParameter::ECutoffGhz, control, base, eval)?;
            let solution = solve_multimode(&params, &eval.multimode)?;
            Ok(vec![NumericalKerr::from_levels(&solution).alpha(1, 0, 0)])
        }
        Study::ModeCount => {
            let (params, eval) = apply(SweepParameter::ModeCount, control, base, eval)?;
            let (_, report) = higher_mode_renormalization(&params, 1, &eval.multimode.grid)?;
            let last = report.factor_magnitudes().last().map(|f| 1.0 - f);
            Ok(vec![Some(report.ratio()), last])
        }
        Study::Grid => {
            if control < 3.0 || control.fract() != 0.0 {
                return Err(UnimonError::Validation(format!("grid points must be an integer >= 3, got {control}")));
            }
            let mut eval = eval.clone();
            eval.multimode.grid.points = control as usize | 1;
            let solution = solve_multimode(base, &eval.multimode)?;
            Ok((0..5).map(|i| solution.spectrum.values.get(i).copied()).collect())
        }
    }
}

pub fn run_convergence(
    study: Study,
    controls: &[f64],
    base: &CircuitParams,
    eval: &EvalConfig,
    workers: Option<usize>,
) -> Result<Vec<ConvergenceRow>> {
    if controls.len() < 2 {
        return Err(UnimonError::Validation("a convergence study needs at least 2 control values".into()));
    }
    if controls.iter().any(|c| !c.is_finite()) {
        return Err(UnimonError::Validation("control values must be finite".into()));
    }
    base.validate()?;
    let width = study.quantities().len();
    let mut rows = on_pool(workers, || {
        controls
            .par_iter()
            .map(|&c| {
                let started = Instant::now();
                let result = isolated(|| study_point(study, c, base, eval));
                let wall_time = started.elapsed().as_secs_f64();
                match result {
                    Ok(quantities) => ConvergenceRow {
                        control: c,
                        status: "ok".into(),
                        error: None,
                        quantities,
                        differences: vec![None; width],
                        wall_time,
                    },
                    Err(e) => ConvergenceRow {
                        control: c,
                        status: e.code().into(),
                        error: Some(e.to_string()),
                        quantities: vec![None; width],
                        differences: vec![None; width],
                        wall_time,
                    },
                }
            })
            .collect::<Vec<_>>()
    })?;
    sort_by_value(&mut rows, |r| r.control);
    for i in 1..rows.len() {
        for q in 0..width {
            rows[i].differences[q] = match (rows[i].quantities[q], rows[i - 1].quantities[q]) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
        }
    }
    Ok(rows)
}

pub fn convergence_columns(study: Study) -> Vec<String> {
    let q = study.quantities();
    let mut c = vec![study.control().to_string(), "status".into()];
    c.extend(q.iter().cloned());
    c.extend(q.iter().map(|n| format!("delta_{n}")));
    c
}

pub fn convergence_csv(study: Study, rows: &[ConvergenceRow]) -> String {
    let mut out = convergence_columns(study).join(",");
    out.push('\n');
    for r in rows {
        let mut fields = vec![format_float(r.control), r.status.clone()];
        fields.extend(r.quantities.iter().copied().map(cell));
        fields.extend(r.differences.iter().copied().map(cell));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn convergence_json(study: Study, rows: &[ConvergenceRow]) -> Value {
    let names = convergence_columns(study);
    let items = rows
        .iter()
        .map(|r| {
            let mut obj = Map::new();
            obj.insert(names[0].clone(), number(Some(r.control)));
            obj.insert("status".into(), Value::String(r.status.clone()));
            let values = r.quantities.iter().chain(r.differences.iter());
            for (name, v) in names[2..].iter().zip(values) {
                obj.insert(name.clone(), number(*v));
            }
            obj.insert("error".into(), r.error.clone().map(Value::String).unwrap_or(Value::Null));
            obj.insert("wall_time_s".into(), number(Some(r.wall_time)));
            Value::Object(obj)
        })
        .collect();
    Value::Array(items)
}

/// One level of the oracle comparison; energies are E_n − E_0 [Hz].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub level: usize,
    pub oracle: f64,
    pub multimode: Option<f64>,
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub coordinates: usize,
    pub points: usize,
    pub cauchy: Option<f64>,
    pub oracle_alpha: Option<f64>,
    pub multimode_alpha: Option<f64>,
    pub rows: Vec<ComparisonRow>,
}

/// Oracle against the multimode pipeline over the same modes: every normal
/// mode of `params` is kept exactly.
pub fn oracle_compare(params: &CircuitParams, eval: &EvalConfig, levels: usize) -> Result<OracleComparison> {
    let mut oracle_cfg = eval.oracle.clone();
    oracle_cfg.eigenpairs = oracle_cfg.eigenpairs.max(levels + 1);
    let oracle = solve_oracle(params, &oracle_cfg)?;
    let linear = linear_analysis(params)?;
    let mut mm = eval.multimode.clone();
    mm.lower_modes = linear.modes.len();
    mm.extra_eigenpairs = mm.extra_eigenpairs.max(levels + 1);
    let solution = crate::model::solve_multimode_from(linear, &mm)?;
    let values = &solution.spectrum.values;
    let rows = oracle
        .transitions()
        .into_iter()
        .take(levels)
        .enumerate()
        .map(|(i, o)| {
            let m = values.get(i + 1).map(|e| e - values[0]);
            ComparisonRow { level: i + 1, oracle: o, multimode: m, difference: m.map(|m| m - o) }
        })
        .collect();
    Ok(OracleComparison {
        coordinates: oracle.aux_modes.len() + 1,
        points: oracle.points,
        cauchy: oracle.cauchy,
        oracle_alpha: oracle.lowest_anharmonicity(),
        multimode_alpha: NumericalKerr::from_levels(&solution).alpha(1, 0, 0),
        rows,
    })
}

pub fn comparison_csv(c: &OracleComparison) -> String {
    let mut out = String::from("level,oracle_hz,multimode_hz,difference_hz\n");
    for r in &c.rows {
        let _ = writeln!(out, "{},{},{},{}", r.level, format_float(r.oracle), cell(r.multimode), cell(r.difference));
    }
    out
}
