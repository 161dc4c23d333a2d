//! Linearized auxiliary-mode circuit and its normal modes.

use faer::Mat;
use serde::Serialize;

use crate::circuit::DerivedParams;
use crate::eigen::symmetric_eigen;
use crate::error::{Result, UnimonError};
use crate::units::{charging_energy_hz, inductive_energy_hz};

/// Modes with |c_m| below this are treated as decoupled from the junction.
pub const DECOUPLING_THRESHOLD: f64 = 1e-12;

/// Inverse-inductance matrix over (Ψ, χ_1, …, χ_M); the capacitance matrix is
/// C_eff times the identity.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub inverse_inductance: Mat<f64>,
    pub inverse_capacitance: f64,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.inverse_inductance.nrows()
    }
}

pub fn build_linear_system(derived: &DerivedParams, dc_phase: f64) -> LinearSystem {
    let m = derived.mode_count();
    let c_eff = derived.effective_capacitance;
    let l_j = derived.line.josephson_inductance;
    let omegas = derived.aux_frequencies();
    let mut a = Mat::<f64>::zeros(m + 1, m + 1);
    a[(0, 0)] = 1.0 / derived.effective_inductance + dc_phase.cos() / l_j;
    for i in 1..=m {
        a[(i, i)] = c_eff * omegas[i - 1] * omegas[i - 1];
        a[(0, i)] = derived.couplings[i - 1];
        a[(i, 0)] = derived.couplings[i - 1];
    }
    LinearSystem { inverse_inductance: a, inverse_capacitance: 1.0 / c_eff }
}

#[derive(Debug, Clone)]
pub struct NormalModes {
    /// ω_m [rad/s], ascending.
    pub frequencies: Vec<f64>,
    /// c_m = U[0, m].
    pub weights: Vec<f64>,
    pub transform: Mat<f64>,
    /// E_{C,m}/h [Hz]; zero for decoupled modes.
    pub charging: Vec<f64>,
    /// E_{L,m}/h [Hz]; infinite for decoupled modes.
    pub inductive: Vec<f64>,
    /// L̃_m [H].
    pub inductance: Vec<f64>,
    pub decoupled: Vec<bool>,
}

impl NormalModes {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequency_hz(&self, m: usize) -> f64 {
        self.frequencies[m] / (2.0 * std::f64::consts::PI)
    }

    /// λ_m² = 4E_{C,m}/(ω_m/2π).
    pub fn zero_point_squared(&self, m: usize) -> f64 {
        if self.decoupled[m] {
            0.0
        } else {
            4.0 * self.charging[m] / self.frequency_hz(m)
        }
    }

    /// Max-norm of UᵀU − I.
    pub fn orthogonality_defect(&self) -> f64 {
        let u = &self.transform;
        let g = u.transpose() * u;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Diagonalizes the inverse-inductance matrix. Auxiliary modes with exactly
/// zero coupling are split off beforehand so that they come out exact.
pub fn normal_mode_transform(system: &LinearSystem) -> Result<NormalModes> {
    let a = &system.inverse_inductance;
    let n = a.nrows();
    let c_eff = 1.0 / system.inverse_capacitance;
    let coupled: Vec<usize> = (0..n).filter(|&i| i == 0 || a[(0, i)] != 0.0).collect();
    let isolated: Vec<usize> = (1..n).filter(|&i| a[(0, i)] == 0.0).collect();

    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    let k = coupled.len();
    let block = Mat::<f64>::from_fn(k, k, |i, j| a[(coupled[i], coupled[j])]);
    let (s, u) = symmetric_eigen(block.as_ref())?;
    for col in 0..k {
        let mut v = vec![0.0; n];
        for row in 0..k {
            v[coupled[row]] = u[(row, col)];
        }
        pairs.push((s[col], v));
    }
    for &i in &isolated {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        pairs.push((a[(i, i)], v));
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    if let Some((d, _)) = pairs.iter().find(|(d, _)| !(*d > 0.0)) {
        return Err(UnimonError::Instability(format!(
            "normal-mode stiffness {d:e} <= 0; the linearized circuit has no stable minimum"
        )));
    }

    let mut transform = Mat::<f64>::zeros(n, n);
    let mut frequencies = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut decoupled = Vec::with_capacity(n);
    for (col, (d, mut v)) in pairs.into_iter().enumerate() {
        let lead = if v[0].abs() >= DECOUPLING_THRESHOLD {
            v[0]
        } else {
            v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0)
        };
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (row, x) in v.iter().enumerate() {
            transform[(row, col)] = *x;
        }
        frequencies.push((d / c_eff).sqrt());
        weights.push(v[0]);
        decoupled.push(v[0].abs() < DECOUPLING_THRESHOLD);
    }
    Ok(NormalModes {
        frequencies,
        weights,
        transform,
        charging: Vec::new(),
        inductive: Vec::new(),
        inductance: Vec::new(),
        decoupled,
    })
}

/// Fills in L̃_m, E_{C,m} and E_{L,m}.
pub fn mode_energies(mut modes: NormalModes, derived: &DerivedParams, dc_phase: f64) -> Result<NormalModes> {
    let c_eff = derived.effective_capacitance;
    let l_j = derived.line.josephson_inductance;
    let n = modes.len();
    modes.charging = Vec::with_capacity(n);
    modes.inductive = Vec::with_capacity(n);
    modes.inductance = Vec::with_capacity(n);
    for m in 0..n {
        let c = modes.weights[m];
        let omega = modes.frequencies[m];
        let denominator = c_eff * omega * omega - dc_phase.cos() * c * c / l_j;
        if !(denominator > 0.0) {
            return Err(UnimonError::Regime(format!(
                "effective inductance of normal mode {} is not positive",
                m + 1
            )));
        }
        let inductance = 1.0 / denominator;
        modes.inductance.push(inductance);
        if modes.decoupled[m] {
            modes.charging.push(0.0);
            modes.inductive.push(f64::INFINITY);
        } else {
            modes.charging.push(c * c * charging_energy_hz(c_eff));
            modes.inductive.push(inductive_energy_hz(inductance * c * c));
        }
    }
    Ok(modes)
}

/// build_linear_system → normal_mode_transform → mode_energies.
pub fn compute_normal_modes(derived: &DerivedParams) -> Result<NormalModes> {
    let system = build_linear_system(derived, derived.dc_phase);
    let modes = normal_mode_transform(&system)?;
    mode_energies(modes, derived, derived.dc_phase)
}

/// Plain serializable view for dumps.
#[derive(Debug, Clone, Serialize)]
pub struct NormalModeRow {
    pub index: usize,
    pub frequency_ghz: f64,
    pub weight: f64,
    pub charging_ghz: f64,
    pub inductive_ghz: f64,
    pub decoupled: bool,
}

impl NormalModes {
    pub fn rows(&self) -> Vec<NormalModeRow> {
        (0..self.len())
            .map(|m| NormalModeRow {
                index: m + 1,
                frequency_ghz: self.frequency_hz(m) / 1e9,
                weight: self.weights[m],
                charging_ghz: self.charging[m] / 1e9,
                inductive_ghz: self.inductive[m] / 1e9,
                decoupled: self.decoupled[m],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{derive, CircuitParams};
    use crate::units::{PLANCK, REDUCED_FLUX_QUANTUM};

    fn setup(xj_over_l: f64, modes: usize) -> DerivedParams {
        let mut p = CircuitParams::reference_device();
        p.junction_position = xj_over_l * p.half_length;
        p.mode_count_override = Some(modes);
        derive(&p).unwrap()
    }

    #[test]
    fn zero_modes_gives_scalar_system() {
        let mut p = CircuitParams::reference_device();
        p.gap_frequency = 1e9;
        let d = derive(&p).unwrap();
        let s = build_linear_system(&d, d.dc_phase);
        assert_eq!(s.dim(), 1);
        let expected = 1.0 / d.effective_inductance - 1.0 / d.line.josephson_inductance;
        assert!((s.inverse_inductance[(0, 0)] - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn center_junction_entries() {
        let d = setup(0.0, 2);
        let s = build_linear_system(&d, d.dc_phase);
        assert_eq!(s.inverse_inductance[(0, 1)], 0.0);
        assert!(s.inverse_inductance[(0, 2)] != 0.0);
    }

    #[test]
    fn decoupled_modes_are_exact() {
        let d = setup(0.0, 16);
        let modes = compute_normal_modes(&d).unwrap();
        let omegas = d.aux_frequencies();
        let mut seen = 0;
        for m in 0..modes.len() {
            if modes.decoupled[m] {
                seen += 1;
                assert_eq!(modes.weights[m], 0.0);
                assert_eq!(modes.charging[m], 0.0);
                let w = modes.frequencies[m];
                assert!(omegas.iter().step_by(2).any(|o| (o - w).abs() <= 2.0 * f64::EPSILON * o));
            }
        }
        assert_eq!(seen, 8);
    }

    #[test]
    fn orthogonality_and_weights() {
        let d = setup(0.51, 60);
        let modes = compute_normal_modes(&d).unwrap();
        assert!(modes.orthogonality_defect() < 1e-10);
        let total: f64 = modes.weights.iter().map(|c| c * c).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(modes.weights.iter().all(|c| *c >= 0.0));
        for w in modes.frequencies.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn reconstruction() {
        let d = setup(0.3, 30);
        let system = build_linear_system(&d, d.dc_phase);
        let modes = compute_normal_modes(&d).unwrap();
        let n = modes.len();
        let diag = Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                d.effective_capacitance * modes.frequencies[i].powi(2)
            } else {
                0.0
            }
        });
        let rebuilt = &modes.transform * &diag * modes.transform.transpose();
        let diff = (&rebuilt - &system.inverse_inductance).norm_l2();
        assert!(diff < 1e-9 * system.inverse_inductance.norm_l2());
    }

    #[test]
    fn exactly_one_mode_below_fundamental() {
        let d = setup(0.51, 16);
        let modes = compute_normal_modes(&d).unwrap();
        let omega_1 = d.aux_frequencies()[0];
        assert!(modes.frequencies[0] < omega_1);
        assert_eq!(modes.frequencies.iter().filter(|w| **w < omega_1).count(), 1);
    }

    #[test]
    fn energy_identities() {
        let d = setup(0.51, 40);
        let modes = compute_normal_modes(&d).unwrap();
        let ej = 19e9;
        for m in 0..modes.len() {
            let c = modes.weights[m];
            let lhs = modes.inductive[m] * c * c * modes.inductance[m] * PLANCK;
            let rhs = REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM;
            assert!((lhs - rhs).abs() < 1e-12 * rhs);
            // harmonic frequency of the single-mode quadratic part at the sweet spot
            let f = (8.0 * modes.charging[m] * (modes.inductive[m] - ej)).sqrt();
            assert!((f - modes.frequency_hz(m)).abs() < 1e-9 * f);
        }
    }

    #[test]
    fn mirror_symmetry_of_frequencies() {
        let a = compute_normal_modes(&setup(0.37, 25)).unwrap();
        let b = compute_normal_modes(&setup(-0.37, 25)).unwrap();
        for (x, y) in a.frequencies.iter().zip(&b.frequencies) {
            assert!((x - y).abs() < 1e-10 * x);
        }
    }

    #[test]
    fn uncoupled_system_is_permutation() {
        let mut d = setup(0.4, 5);
        d.couplings.iter_mut().for_each(|x| *x = 0.0);
        let system = build_linear_system(&d, d.dc_phase);
        let modes = normal_mode_transform(&system).unwrap();
        let lowest = (system.inverse_inductance[(0, 0)] * system.inverse_capacitance).sqrt();
        assert!(modes.frequencies.iter().any(|w| (w - lowest).abs() < 1e-12 * lowest));
        for col in 0..modes.len() {
            let ones = (0..modes.len()).filter(|&r| modes.transform[(r, col)] == 1.0).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn unstable_bias_is_reported() {
        let mut d = setup(0.51, 4);
        d.effective_inductance *= 10.0;
        let system = build_linear_system(&d, std::f64::consts::PI);
        assert!(matches!(normal_mode_transform(&system), Err(UnimonError::Instability(_))));
    }
}
