//! Circuit parameters, the derived lumped quantities of the auxiliary-mode
//! description, the dc-flux relation and the resonator kernel.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Result, UnimonError};
use crate::units::{GHZ, PLANCK, REDUCED_FLUX_QUANTUM};

/// Default 2Δ_gap/h used for the auxiliary-mode cutoff.
pub const DEFAULT_GAP_FREQUENCY_HZ: f64 = 1400.0 * GHZ;

const CONFIG_KEYS: &[&str] = &[
    "total_length_mm",
    "inductance_per_length_uH_per_m",
    "capacitance_per_length_pF_per_m",
    "ej_ghz",
    "cj_fF",
    "xj_over_l",
    "phi_diff_over_phi0",
    "gap_frequency_ghz",
    "mode_count_override",
];

/// Physical inputs, SI internally. `josephson_energy` and `gap_frequency` are
/// frequencies E/h in Hz; `phi_diff` is in units of Φ0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub half_length: f64,
    pub inductance_per_length: f64,
    pub capacitance_per_length: f64,
    pub josephson_energy: f64,
    pub junction_capacitance: f64,
    pub junction_position: f64,
    pub phi_diff: f64,
    pub gap_frequency: f64,
    pub mode_count_override: Option<usize>,
}

impl CircuitParams {
    /// The reference device: 8 mm resonator, 0.821 µH/m, 87.1 pF/m,
    /// E_J/h = 19 GHz, junction at x_J/l = 0.51, biased at the sweet spot.
    pub fn reference_device() -> Self {
        CircuitParams {
            half_length: 4.0e-3,
            inductance_per_length: 0.821e-6,
            capacitance_per_length: 87.1e-12,
            josephson_energy: 19.0 * GHZ,
            junction_capacitance: 0.0,
            junction_position: 0.51 * 4.0e-3,
            phi_diff: 0.5,
            gap_frequency: DEFAULT_GAP_FREQUENCY_HZ,
            mode_count_override: None,
        }
    }

    /// Parse and validate a flat JSON configuration document.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| UnimonError::Parse {
            key: "<document>".into(),
            reason: e.to_string(),
        })?;
        let map = value
            .as_object()
            .ok_or_else(|| UnimonError::Config("configuration must be a JSON object".into()))?;
        Self::from_config_map(map)
    }

    pub fn from_config_map(map: &Map<String, Value>) -> Result<Self> {
        if let Some(key) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(UnimonError::UnknownKey(key.clone()));
        }
        let total_length_mm = required_number(map, "total_length_mm")?;
        let half_length = 0.5 * total_length_mm * 1e-3;
        let xj_over_l = required_number(map, "xj_over_l")?;
        let gap_ghz = optional_number(map, "gap_frequency_ghz")?
            .unwrap_or(DEFAULT_GAP_FREQUENCY_HZ / GHZ);
        let mode_count_override = match map.get("mode_count_override") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let n = v.as_u64().ok_or_else(|| UnimonError::Parse {
                    key: "mode_count_override".into(),
                    reason: format!("expected a positive integer, got {v}"),
                })?;
                Some(n as usize)
            }
        };
        let params = CircuitParams {
            half_length,
            inductance_per_length: required_number(map, "inductance_per_length_uH_per_m")? * 1e-6,
            capacitance_per_length: required_number(map, "capacitance_per_length_pF_per_m")? * 1e-12,
            josephson_energy: required_number(map, "ej_ghz")? * GHZ,
            junction_capacitance: optional_number(map, "cj_fF")?.unwrap_or(0.0) * 1e-15,
            junction_position: xj_over_l * half_length,
            phi_diff: required_number(map, "phi_diff_over_phi0")?,
            gap_frequency: gap_ghz * GHZ,
            mode_count_override,
        };
        params.validate()?;
        Ok(params)
    }

    /// The configuration document describing these parameters.
    pub fn to_config_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("total_length_mm".into(), (2.0 * self.half_length * 1e3).into());
        map.insert(
            "inductance_per_length_uH_per_m".into(),
            (self.inductance_per_length * 1e6).into(),
        );
        map.insert(
            "capacitance_per_length_pF_per_m".into(),
            (self.capacitance_per_length * 1e12).into(),
        );
        map.insert("ej_ghz".into(), (self.josephson_energy / GHZ).into());
        map.insert("cj_fF".into(), (self.junction_capacitance * 1e15).into());
        map.insert("xj_over_l".into(), self.xj_over_l().into());
        map.insert("phi_diff_over_phi0".into(), self.phi_diff.into());
        map.insert("gap_frequency_ghz".into(), (self.gap_frequency / GHZ).into());
        if let Some(m) = self.mode_count_override {
            map.insert("mode_count_override".into(), m.into());
        }
        Value::Object(map)
    }

    pub fn xj_over_l(&self) -> f64 {
        self.junction_position / self.half_length
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("total_length_mm", self.half_length),
            ("inductance_per_length_uH_per_m", self.inductance_per_length),
            ("capacitance_per_length_pF_per_m", self.capacitance_per_length),
            ("ej_ghz", self.josephson_energy),
            ("gap_frequency_ghz", self.gap_frequency),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(UnimonError::Validation(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.junction_capacitance.is_finite() && self.junction_capacitance >= 0.0) {
            return Err(UnimonError::Validation("cj_fF must be non-negative".into()));
        }
        if !self.phi_diff.is_finite() {
            return Err(UnimonError::Validation("phi_diff_over_phi0 must be finite".into()));
        }
        let ratio = self.xj_over_l();
        if !(ratio.is_finite() && ratio.abs() <= 1.0 + 1e-12) {
            return Err(UnimonError::Validation(format!("|xj_over_l| must not exceed 1, got {ratio}")));
        }
        if self.mode_count_override == Some(0) {
            return Err(UnimonError::Validation("mode_count_override must be positive".into()));
        }
        let ratio = self.single_valuedness_ratio();
        if ratio >= 1.0 {
            return Err(UnimonError::Multivalued { ratio });
        }
        Ok(())
    }

    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.inductance_per_length * self.capacitance_per_length).sqrt()
    }

    pub fn impedance(&self) -> f64 {
        (self.inductance_per_length / self.capacitance_per_length).sqrt()
    }

    /// L_J = (Φ0/2π)²/E_J.
    pub fn josephson_inductance(&self) -> f64 {
        REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / (self.josephson_energy * PLANCK)
    }

    /// 2lL_l/L_J; the dc-flux relation has a unique root only below one.
    pub fn single_valuedness_ratio(&self) -> f64 {
        2.0 * self.half_length * self.inductance_per_length / self.josephson_inductance()
    }

    /// Lowest auxiliary-mode angular frequency πv/(2l).
    pub fn fundamental_frequency(&self) -> f64 {
        PI * self.phase_velocity() / (2.0 * self.half_length)
    }

    /// Keep Ω_1 fixed and move the line to a new characteristic impedance.
    pub fn with_impedance(&self, impedance: f64) -> Self {
        let v = self.phase_velocity();
        CircuitParams {
            inductance_per_length: impedance / v,
            capacitance_per_length: 1.0 / (impedance * v),
            ..self.clone()
        }
    }
}

fn required_number(map: &Map<String, Value>, key: &str) -> Result<f64> {
    optional_number(map, key)?.ok_or_else(|| UnimonError::MissingKey(key.into()))
}

fn optional_number(map: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| UnimonError::Parse {
            key: key.into(),
            reason: format!("expected a number, got {v}"),
        }),
    }
}

/// cos(θ + mπ/2) with the quarter-turn applied exactly, so that e.g. odd
/// modes at x_J = 0 give an exact zero.
pub fn quarter_shifted_cos(theta: f64, m: i64) -> f64 {
    match m.rem_euclid(4) {
        0 => theta.cos(),
        1 => -theta.sin(),
        2 => -theta.cos(),
        _ => theta.sin(),
    }
}

/// Quantities that follow from the line and the junction alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineQuantities {
    pub phase_velocity: f64,
    pub impedance: f64,
    pub josephson_inductance: f64,
    pub critical_current: f64,
    /// Ω_m for m = 1..=M [rad/s].
    pub aux_frequencies: Vec<f64>,
}

impl LineQuantities {
    pub fn mode_count(&self) -> usize {
        self.aux_frequencies.len()
    }
}

/// Full set of lumped quantities of the auxiliary-mode Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub line: LineQuantities,
    pub effective_capacitance: f64,
    pub effective_inductance: f64,
    /// ξ_m for m = 1..=M.
    pub couplings: Vec<f64>,
    /// Pole residues r_m for m = 1..=M.
    pub residues: Vec<f64>,
    /// Dimensionless dc phase 2πφ0/Φ0.
    pub dc_phase: f64,
}

impl DerivedParams {
    pub fn mode_count(&self) -> usize {
        self.line.mode_count()
    }

    pub fn aux_frequencies(&self) -> &[f64] {
        &self.line.aux_frequencies
    }
}

pub fn derive_basic(params: &CircuitParams) -> LineQuantities {
    let v = params.phase_velocity();
    let l_j = params.josephson_inductance();
    let omega_1 = params.fundamental_frequency();
    let mode_count = params.mode_count_override.unwrap_or_else(|| {
        let f1 = omega_1 / (2.0 * PI);
        (params.gap_frequency * (1.0 + 1e-12) / f1).floor() as usize
    });
    LineQuantities {
        phase_velocity: v,
        impedance: params.impedance(),
        josephson_inductance: l_j,
        critical_current: REDUCED_FLUX_QUANTUM / l_j,
        aux_frequencies: (1..=mode_count).map(|m| m as f64 * omega_1).collect(),
    }
}

/// Root of (θ_diff − θ)/(2lL_l)·(Φ0/2π) − I_c sin θ = 0 for the dc phase θ.
///
/// In phase units the relation reads g(θ) = θ_diff − θ − β sin θ with
/// β = 2lL_l/L_J. For β < 1, g is strictly decreasing and the root lies in
/// [θ_diff − β, θ_diff + β].
pub fn solve_dc_flux(params: &CircuitParams, _line: &LineQuantities) -> Result<f64> {
    let beta = params.single_valuedness_ratio();
    if beta >= 1.0 {
        return Err(UnimonError::Multivalued { ratio: beta });
    }
    let target = 2.0 * PI * params.phi_diff;
    let g = |theta: f64| target - theta - beta * theta.sin();
    let dg = |theta: f64| -1.0 - beta * theta.cos();
    // Residual in units of I_c: |g|/β.
    let tolerance = 1e-12 * beta.max(f64::MIN_POSITIVE);

    let (mut lo, mut hi) = (target - beta - 1e-12, target + beta + 1e-12);
    if g(lo) < 0.0 || g(hi) > 0.0 {
        return Err(UnimonError::Numerical(format!(
            "dc-flux bracket [{lo}, {hi}] does not enclose a root (g = {}, {})",
            g(lo),
            g(hi)
        )));
    }
    let mut theta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let value = g(theta);
        if value.abs() <= tolerance {
            return Ok(theta);
        }
        if value > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let newton = theta - value / dg(theta);
        theta = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 4.0 * f64::EPSILON * theta.abs().max(1.0) {
            break;
        }
    }
    if g(theta).abs() <= tolerance.max(4.0 * f64::EPSILON * theta.abs().max(1.0)) {
        Ok(theta)
    } else {
        Err(UnimonError::Numerical(format!(
            "dc-flux root finder did not converge in [{lo}, {hi}], residual {}",
            g(theta)
        )))
    }
}

/// Completes the lumped description: C_eff, L_eff, ξ_m and r_m for the chosen
/// number of auxiliary modes.
pub fn aux_mode_set(params: &CircuitParams, line: LineQuantities, dc_phase: f64) -> Result<DerivedParams> {
    let l = params.half_length;
    let ll = params.inductance_per_length;
    let x = params.junction_position;
    let v = line.phase_velocity;

    let mut sum_capacitive = 0.0;
    let mut sum_inductive = 0.0;
    let mut shapes = Vec::with_capacity(line.mode_count());
    for (idx, &omega) in line.aux_frequencies.iter().enumerate() {
        let m = idx as i64 + 1;
        let shape = quarter_shifted_cos(omega * x / v, m);
        let sq = shape * shape;
        sum_capacitive += sq / (omega * omega * l * ll);
        sum_inductive += sq / (l * ll);
        shapes.push(shape);
    }
    let c_eff = params.junction_capacitance
        + params.capacitance_per_length * (l * l + 3.0 * x * x) / (6.0 * l)
        - sum_capacitive;
    if !(c_eff > 0.0) {
        return Err(UnimonError::Config(format!(
            "effective capacitance {c_eff:e} F is not positive for M = {} (increase C_J or lower the mode count)",
            line.mode_count()
        )));
    }
    let l_eff = 1.0 / (1.0 / (2.0 * l * ll) + sum_inductive);
    let couplings = line
        .aux_frequencies
        .iter()
        .zip(&shapes)
        .map(|(&omega, &shape)| (c_eff / (l * ll)).sqrt() * omega * shape)
        .collect();
    let residues = (1..=line.mode_count() as i64).map(|m| residue(params, v, m)).collect();
    Ok(DerivedParams {
        line,
        effective_capacitance: c_eff,
        effective_inductance: l_eff,
        couplings,
        residues,
        dc_phase,
    })
}

/// Residue of the kernel at the pole Ω_m; defined for negative m as well.
pub fn residue(params: &CircuitParams, phase_velocity: f64, m: i64) -> f64 {
    let omega = PI * phase_velocity * m as f64 / (2.0 * params.half_length);
    let shape = quarter_shifted_cos(omega * params.junction_position / phase_velocity, m);
    omega * shape * shape / (2.0 * params.half_length * params.inductance_per_length)
}

/// derive_basic → solve_dc_flux → aux_mode_set.
pub fn derive(params: &CircuitParams) -> Result<DerivedParams> {
    params.validate()?;
    let line = derive_basic(params);
    let dc_phase = solve_dc_flux(params, &line)?;
    aux_mode_set(params, line, dc_phase)
}

/// The frequency-domain kernel of the resonator seen from the junction.
#[derive(Debug, Clone)]
pub struct Kernel {
    half_length: f64,
    junction_position: f64,
    inductance_per_length: f64,
    phase_velocity: f64,
    params: CircuitParams,
}

impl Kernel {
    pub fn new(params: &CircuitParams) -> Self {
        Kernel {
            half_length: params.half_length,
            junction_position: params.junction_position,
            inductance_per_length: params.inductance_per_length,
            phase_velocity: params.phase_velocity(),
            params: params.clone(),
        }
    }

    fn pole(&self, m: usize) -> f64 {
        PI * self.phase_velocity * m as f64 / (2.0 * self.half_length)
    }

    /// K̃(ω) = k cos[k(x_J + l)] cos[k(x_J − l)] / (L_l sin 2kl), k = ω/v.
    pub fn direct(&self, omega: f64) -> Result<f64> {
        let k = omega / self.phase_velocity;
        let (l, x) = (self.half_length, self.junction_position);
        if (k * l).abs() < 1e-6 {
            // removable point at ω = 0
            return Ok(self.maclaurin(omega, 4));
        }
        let denominator = self.inductance_per_length * (2.0 * k * l).sin();
        let numerator = k * (k * (x + l)).cos() * (k * (x - l)).cos();
        let nearest = (2.0 * k * l / PI).round();
        if ((2.0 * k * l) - nearest * PI).abs() < 1e-13 * nearest.abs().max(1.0) {
            if numerator.abs() > 1e-12 * k.abs() {
                return Err(UnimonError::Singularity { omega });
            }
        }
        Ok(numerator / denominator)
    }

    /// Taylor coefficients c_n of K̃(ω) = Σ c_n ωⁿ for n = 0..=order.
    pub fn maclaurin_coefficients(&self, order: usize) -> Vec<f64> {
        // K̃ = [cos(ak) + cos(bk)] / [2 L_l · sin(bk)/k], a = 2x_J, b = 2l.
        let a = 2.0 * self.junction_position;
        let b = 2.0 * self.half_length;
        let mut numerator = vec![0.0; order + 1];
        let mut denominator = vec![0.0; order + 1];
        let mut factorial = 1.0;
        for n in 0..=order {
            if n > 0 {
                factorial *= n as f64;
            }
            if n % 2 == 0 {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                numerator[n] = sign * (a.powi(n as i32) + b.powi(n as i32)) / factorial;
                denominator[n] = sign * b.powi(n as i32 + 1) / (factorial * (n as f64 + 1.0));
            }
        }
        let mut quotient = vec![0.0; order + 1];
        for n in 0..=order {
            let mut acc = numerator[n];
            for i in 1..=n {
                acc -= denominator[i] * quotient[n - i];
            }
            quotient[n] = acc / denominator[0];
        }
        let scale = 1.0 / (2.0 * self.inductance_per_length);
        quotient
            .iter()
            .enumerate()
            .map(|(n, q)| q * scale / self.phase_velocity.powi(n as i32))
            .collect()
    }

    fn maclaurin(&self, omega: f64, order: usize) -> f64 {
        self.maclaurin_coefficients(order)
            .iter()
            .enumerate()
            .map(|(n, c)| c * omega.powi(n as i32))
            .sum()
    }

    /// Maclaurin part to `series_order` plus `mode_count` pole terms, each
    /// with its geometric-series counterterm truncated at the same order.
    pub fn pole_expansion(&self, omega: f64, mode_count: usize, series_order: usize) -> Result<f64> {
        let top = self.pole(mode_count.max(1));
        let ratio = (omega / top).abs();
        if ratio >= 1.0 {
            return Err(UnimonError::Domain { ratio });
        }
        let mut total = self.maclaurin(omega, series_order);
        for m in 1..=mode_count {
            let pole = self.pole(m);
            let r = residue(&self.params, self.phase_velocity, m as i64);
            if r == 0.0 {
                continue;
            }
            let denominator = omega * omega - pole * pole;
            if denominator.abs() < 1e-14 * pole * pole {
                return Err(UnimonError::Singularity { omega });
            }
            let mut counter = 0.0;
            let x = omega / pole;
            for n in (0..=series_order).step_by(2) {
                counter += 2.0 * x.powi(n as i32);
            }
            total += 2.0 * r * pole / denominator + r / pole * counter;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_params() -> CircuitParams {
        CircuitParams::reference_device()
    }

    #[test]
    fn ingest_reference_document() {
        let doc = r#"{"total_length_mm": 8.0, "inductance_per_length_uH_per_m": 0.821,
            "capacitance_per_length_pF_per_m": 87.1, "ej_ghz": 19.0, "xj_over_l": 0.51,
            "phi_diff_over_phi0": 0.5}"#;
        let p = CircuitParams::from_config_str(doc).unwrap();
        assert!((p.half_length - 0.004).abs() < 1e-15);
        assert_eq!(p.junction_capacitance, 0.0);
        assert_eq!(p.gap_frequency, DEFAULT_GAP_FREQUENCY_HZ);
        assert!((p.junction_position - 0.51 * 0.004).abs() < 1e-15);
    }

    #[test]
    fn ingest_errors() {
        let missing = r#"{"total_length_mm": 8.0, "inductance_per_length_uH_per_m": 0.821,
            "capacitance_per_length_pF_per_m": 87.1, "xj_over_l": 0.51, "phi_diff_over_phi0": 0.5}"#;
        assert_eq!(CircuitParams::from_config_str(missing), Err(UnimonError::MissingKey("ej_ghz".into())));

        let out_of_range = r#"{"total_length_mm": 8.0, "inductance_per_length_uH_per_m": 0.821,
            "capacitance_per_length_pF_per_m": 87.1, "ej_ghz": 19.0, "xj_over_l": 1.5,
            "phi_diff_over_phi0": 0.5}"#;
        assert!(matches!(CircuitParams::from_config_str(out_of_range), Err(UnimonError::Validation(_))));

        let not_numeric = r#"{"total_length_mm": "eight", "inductance_per_length_uH_per_m": 0.821,
            "capacitance_per_length_pF_per_m": 87.1, "ej_ghz": 19.0, "xj_over_l": 0.5,
            "phi_diff_over_phi0": 0.5}"#;
        assert!(matches!(CircuitParams::from_config_str(not_numeric), Err(UnimonError::Parse { .. })));

        let typo = r#"{"total_length_mm": 8.0, "inductance_per_length_uH_per_m": 0.821,
            "capacitance_per_length_pF_per_m": 87.1, "ej_ghz": 19.0, "xj_over_l": 0.5,
            "phi_diff_over_phi0": 0.5, "ej_gz": 3}"#;
        assert_eq!(CircuitParams::from_config_str(typo), Err(UnimonError::UnknownKey("ej_gz".into())));
    }

    #[test]
    fn config_document_round_trip() {
        let mut p = table_params();
        p.junction_capacitance = 1e-15;
        p.mode_count_override = Some(12);
        let back = CircuitParams::from_config_map(p.to_config_json().as_object().unwrap()).unwrap();
        assert!((back.junction_capacitance - p.junction_capacitance).abs() < 1e-27);
        assert_eq!(back.mode_count_override, Some(12));
        assert!((back.junction_position - p.junction_position).abs() < 1e-15);
    }

    #[test]
    fn basic_quantities() {
        let p = table_params();
        let line = derive_basic(&p);
        let f1 = line.aux_frequencies[0] / (2.0 * PI);
        assert!((f1 / 1e9 - 7.39).abs() / 7.39 < 5e-3, "f1 = {f1}");
        assert!((line.impedance - 97.1).abs() / 97.1 < 5e-3);
        assert!((line.phase_velocity - 1.183e8).abs() / 1.183e8 < 1e-3);
        assert!((line.josephson_inductance - 8.60e-9).abs() / 8.60e-9 < 1e-3);
        // harmonic ladder
        for (i, w) in line.aux_frequencies.iter().enumerate() {
            assert!((w / line.aux_frequencies[0] - (i + 1) as f64).abs() < 1e-12);
        }
        assert!((p.single_valuedness_ratio() - 0.763).abs() < 1e-3);
    }

    #[test]
    fn gap_cutoff_sets_mode_count() {
        let mut p = table_params();
        p.gap_frequency = 740.0e9;
        assert_eq!(derive_basic(&p).mode_count(), 100);
        p.mode_count_override = Some(7);
        assert_eq!(derive_basic(&p).mode_count(), 7);
    }

    #[test]
    fn dc_flux_roots() {
        let mut p = table_params();
        let line = derive_basic(&p);
        let theta = solve_dc_flux(&p, &line).unwrap();
        assert!((theta - PI).abs() < 1e-12);
        p.phi_diff = 0.0;
        assert_eq!(solve_dc_flux(&p, &line).unwrap(), 0.0);
        p.phi_diff = 0.31;
        let theta = solve_dc_flux(&p, &line).unwrap();
        let beta = p.single_valuedness_ratio();
        let residual = 2.0 * PI * 0.31 - theta - beta * theta.sin();
        assert!(residual.abs() < 1e-12 * beta);
    }

    #[test]
    fn multivalued_regime_rejected() {
        let mut p = table_params();
        p.josephson_energy = 30e9;
        assert!(matches!(p.validate(), Err(UnimonError::Multivalued { .. })));
    }

    #[test]
    fn center_junction_decouples_odd_modes() {
        let mut p = table_params();
        p.junction_position = 0.0;
        p.mode_count_override = Some(10);
        let d = derive(&p).unwrap();
        for (i, xi) in d.couplings.iter().enumerate() {
            if (i + 1) % 2 == 1 {
                assert_eq!(*xi, 0.0);
            } else {
                assert!(xi.abs() > 0.0);
            }
        }
    }

    #[test]
    fn effective_capacitance_without_modes() {
        let mut p = table_params();
        p.junction_position = 0.0;
        p.mode_count_override = None;
        p.gap_frequency = 1.0e9; // below Ω_1: M = 0
        let d = derive(&p).unwrap();
        assert_eq!(d.mode_count(), 0);
        let expected = 87.1e-12 * 0.004 / 6.0;
        assert!((d.effective_capacitance - expected).abs() < 1e-12 * expected);
        assert!((d.effective_capacitance - 58.07e-15).abs() < 0.01e-15);
    }

    #[test]
    fn coupling_residue_relation() {
        let mut p = table_params();
        p.mode_count_override = Some(40);
        let d = derive(&p).unwrap();
        let v = d.line.phase_velocity;
        for m in 1..=40usize {
            let xi = d.couplings[m - 1];
            let lhs = xi * xi;
            let rhs = 2.0 * d.residues[m - 1] * d.line.aux_frequencies[m - 1] * d.effective_capacitance;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
            let r = residue(&p, v, m as i64);
            assert_eq!(r, -residue(&p, v, -(m as i64)));
        }
    }

    #[test]
    fn effective_capacitance_decreases_with_mode_count() {
        let mut p = table_params();
        let mut last = f64::INFINITY;
        for m in [1usize, 2, 5, 10, 50, 100, 189] {
            p.mode_count_override = Some(m);
            let c = derive(&p).unwrap().effective_capacitance;
            assert!(c < last && c > 0.0);
            last = c;
        }
    }

    #[test]
    fn kernel_removable_point() {
        let p = table_params();
        let k = Kernel::new(&p);
        let k0 = 1.0 / (2.0 * p.half_length * p.inductance_per_length);
        assert!((k.direct(1e-3).unwrap() - k0).abs() < 1e-9 * k0);
        let expansion = k.pole_expansion(1e-3, 100, 2).unwrap();
        assert!((expansion - k0).abs() < 1e-6 * k0);
    }

    #[test]
    fn kernel_pole_detection() {
        let mut p = table_params();
        p.junction_position = 0.3 * p.half_length;
        let k = Kernel::new(&p);
        let omega_2 = 2.0 * p.fundamental_frequency();
        assert!(matches!(k.direct(omega_2), Err(UnimonError::Singularity { .. })));
        assert!(matches!(k.pole_expansion(omega_2 * 1.5, 2, 2), Err(UnimonError::Domain { .. })));
    }

    #[test]
    fn maclaurin_matches_effective_capacitance_term() {
        let p = table_params();
        let coefficients = Kernel::new(&p).maclaurin_coefficients(2);
        let (l, x) = (p.half_length, p.junction_position);
        // −K̃''(0)/2 is the line's contribution to C_eff.
        let expected = p.capacitance_per_length * (l * l + 3.0 * x * x) / (6.0 * l);
        assert!((-coefficients[2] - expected).abs() < 1e-12 * expected);
        assert_eq!(coefficients[1], 0.0);
    }
}
