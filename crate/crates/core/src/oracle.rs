//! Direct flux-grid diagonalization of the auxiliary-mode Hamiltonian for
//! up to three coupled coordinates: the junction phase and the coupled
//! auxiliary fluxes, all with mass C_eff.
//!
//! In phases z = (φ, 2πχ_m/Φ_0) the Hamiltonian reads
//! H = Σ_i 4E_C n_i² + ½ zᵀKz + E_J sin θ φ − E_J cos(φ − θ)
//! with K built from 1/(2lL_l) + Σ ξ_m²/(C_effΩ_m²), ξ_m and C_effΩ_m².

use faer::Mat;
use log::debug;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{derive, CircuitParams, DerivedParams};
use crate::eigen::{dense_lowest, lanczos_lowest, symmetric_eigen, LanczosParams, SymmetricOperator, DENSE_LIMIT};
use crate::error::{Result, UnimonError};
use crate::normal_modes::DECOUPLING_THRESHOLD;
use crate::units::{charging_energy_hz, PLANCK, REDUCED_FLUX_QUANTUM};

pub const MAX_COORDINATES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Points per axis; `None` uses 301 for two coordinates and 101 for three.
    pub points: Option<usize>,
    /// Half-width per axis in harmonic lengths of the linearized problem.
    pub harmonic_widths: f64,
    pub eigenpairs: usize,
    /// Also solve on a 1.5x finer grid and report the change.
    pub refine: bool,
    pub lanczos: LanczosParams,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            points: None,
            harmonic_widths: 8.0,
            eigenpairs: 6,
            refine: true,
            lanczos: LanczosParams { subspace: Some(40), max_restarts: 5000, tolerance: 1e-9 },
        }
    }
}

pub fn default_points(coordinates: usize) -> usize {
    match coordinates {
        0 | 1 => 1001,
        2 => 301,
        _ => 101,
    }
}

#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub derived: DerivedParams,
    /// 1-based indices of the coupled auxiliary modes kept as coordinates.
    pub aux_modes: Vec<usize>,
    /// Linear stiffness in phase units [Hz/rad²], coordinate 0 the junction.
    pub stiffness: Vec<Vec<f64>>,
    /// E_C of C_eff [Hz].
    pub charging: f64,
    pub josephson: f64,
    pub dc_phase: f64,
    pub half_widths: Vec<f64>,
    pub points: usize,
}

impl OracleProblem {
    pub fn coordinates(&self) -> usize {
        self.stiffness.len()
    }

    pub fn potential(&self, z: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..z.len() {
            for j in 0..z.len() {
                quad += self.stiffness[i][j] * z[i] * z[j];
            }
        }
        let theta = self.dc_phase;
        0.5 * quad + self.josephson * (theta.sin() * z[0] - (z[0] - theta).cos())
    }

    /// Stiffness with the Josephson curvature at the minimum added.
    fn linearized(&self) -> Mat<f64> {
        let d = self.coordinates();
        let mut k = Mat::<f64>::from_fn(d, d, |i, j| self.stiffness[i][j]);
        k[(0, 0)] += self.josephson * self.dc_phase.cos();
        k
    }

    /// Harmonic frequencies ω/2π of the linearized problem, ascending.
    pub fn harmonic_frequencies(&self) -> Result<Vec<f64>> {
        let (values, _) = symmetric_eigen(self.linearized().as_ref())?;
        values
            .iter()
            .map(|&k| {
                if k > 0.0 {
                    Ok((8.0 * self.charging * k).sqrt())
                } else {
                    Err(UnimonError::Regime(format!("linearized oracle stiffness {k:e} Hz is not positive")))
                }
            })
            .collect()
    }

    /// √(2⟨z_i²⟩) of the linearized ground state for each coordinate.
    fn harmonic_lengths(&self) -> Result<Vec<f64>> {
        let (values, vectors) = symmetric_eigen(self.linearized().as_ref())?;
        let d = self.coordinates();
        let mut out = vec![0.0; d];
        for (n, &k) in values.iter().enumerate() {
            if !(k > 0.0) {
                return Err(UnimonError::Regime(format!("linearized oracle stiffness {k:e} Hz is not positive")));
            }
            // ⟨y²⟩ = ½√(8E_C/k) along each eigenvector
            let var = 0.5 * (8.0 * self.charging / k).sqrt();
            for i in 0..d {
                out[i] += vectors[(i, n)] * vectors[(i, n)] * var;
            }
        }
        Ok(out.into_iter().map(|v| (2.0 * v).sqrt()).collect())
    }
}

/// Grid problem over the junction phase and the coupled auxiliary modes
/// of `params`.
pub fn oracle_problem(params: &CircuitParams, config: &OracleConfig) -> Result<OracleProblem> {
    let derived = derive(params)?;
    let c_eff = derived.effective_capacitance;
    let omegas = derived.aux_frequencies();
    let largest = derived.couplings.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let aux_modes: Vec<usize> = (0..derived.mode_count())
        .filter(|&i| derived.couplings[i].abs() > DECOUPLING_THRESHOLD * largest)
        .map(|i| i + 1)
        .collect();
    let d = aux_modes.len() + 1;
    if d > MAX_COORDINATES {
        return Err(UnimonError::Resource(format!(
            "flux-grid reference supports at most {MAX_COORDINATES} coupled coordinates, got {d}"
        )));
    }
    let to_hz = REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / PLANCK;
    let two_l_ll = 2.0 * params.half_length * params.inductance_per_length;
    let mut a = vec![vec![0.0; d]; d];
    a[0][0] = 1.0 / two_l_ll;
    for i in 0..derived.mode_count() {
        a[0][0] += derived.couplings[i] * derived.couplings[i] / (c_eff * omegas[i] * omegas[i]);
    }
    for (slot, &m) in aux_modes.iter().enumerate() {
        let i = m - 1;
        a[slot + 1][slot + 1] = c_eff * omegas[i] * omegas[i];
        a[0][slot + 1] = derived.couplings[i];
        a[slot + 1][0] = derived.couplings[i];
    }
    let stiffness: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x * to_hz).collect()).collect();
    let points = config.points.unwrap_or_else(|| default_points(d));
    if points < 5 || points % 2 == 0 {
        return Err(UnimonError::Validation(format!("oracle grid needs an odd point count >= 5, got {points}")));
    }
    let mut problem = OracleProblem {
        aux_modes,
        stiffness,
        charging: charging_energy_hz(c_eff),
        josephson: params.josephson_energy,
        dc_phase: derived.dc_phase,
        half_widths: Vec::new(),
        points,
        derived,
    };
    problem.half_widths = problem.harmonic_lengths()?.iter().map(|l| config.harmonic_widths * l).collect();
    Ok(problem)
}

/// Tensor grid operator with a fourth-order central stencil per axis.
struct GridOperator {
    dims: Vec<usize>,
    strides: Vec<usize>,
    /// −4E_C/(12h²) per axis.
    kinetic: Vec<f64>,
    diagonal: Vec<f64>,
    norm: f64,
}

impl GridOperator {
    fn new(problem: &OracleProblem, points: usize) -> Self {
        let d = problem.coordinates();
        let dims = vec![points; d];
        let mut strides = vec![1; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let centre = (points - 1) / 2;
        let spacing: Vec<f64> = problem.half_widths.iter().map(|w| w / centre as f64).collect();
        let kinetic: Vec<f64> = spacing.iter().map(|h| 4.0 * problem.charging / (12.0 * h * h)).collect();
        let total: usize = dims.iter().product();
        let diagonal: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut z = [0.0; MAX_COORDINATES];
                let mut rest = flat;
                for i in 0..d {
                    let idx = rest / strides[i];
                    rest %= strides[i];
                    z[i] = (idx as f64 - centre as f64) * spacing[i];
                }
                problem.potential(&z[..d]) + kinetic.iter().sum::<f64>() * 30.0
            })
            .collect();
        let max_diag = diagonal.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let norm = max_diag + kinetic.iter().map(|k| 34.0 * k).sum::<f64>();
        GridOperator { dims, strides, kinetic, diagonal, norm }
    }

    fn total(&self) -> usize {
        self.diagonal.len()
    }
}

impl SymmetricOperator for GridOperator {
    fn dim(&self) -> usize {
        self.total()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.dims.len();
        y.par_iter_mut().enumerate().for_each(|(flat, out)| {
            let mut acc = self.diagonal[flat] * x[flat];
            let mut rest = flat;
            for i in 0..d {
                let idx = rest / self.strides[i];
                rest %= self.strides[i];
                let s = self.strides[i];
                let n = self.dims[i];
                let k = self.kinetic[i];
                // −4E_C ∂² ≈ −4E_C(−f₋₂ + 16f₋₁ − 30f₀ + 16f₁ − f₂)/12h²
                let mut off = 0.0;
                if idx >= 1 {
                    off -= 16.0 * x[flat - s];
                }
                if idx >= 2 {
                    off += x[flat - 2 * s];
                }
                if idx + 1 < n {
                    off -= 16.0 * x[flat + s];
                }
                if idx + 2 < n {
                    off += x[flat + 2 * s];
                }
                acc += k * off;
            }
            *out = acc;
        });
    }

    fn norm_estimate(&self) -> f64 {
        self.norm
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSpectrum {
    pub aux_modes: Vec<usize>,
    pub points: usize,
    /// Lowest eigenenergies [Hz] on the production grid.
    pub energies: Vec<f64>,
    /// Same on the refined grid, when requested.
    pub refined: Option<Vec<f64>>,
    /// Largest change of a transition energy under refinement [Hz].
    pub cauchy: Option<f64>,
    /// max|ψ(z) − ψ(−z)| / max|ψ| of the ground state.
    pub parity_defect: f64,
    /// Non-interacting harmonic occupations assigned to each level by order.
    pub labels: Vec<Vec<usize>>,
}

impl OracleSpectrum {
    /// E_n − E_0 for n = 1..
    pub fn transitions(&self) -> Vec<f64> {
        self.energies[1..].iter().map(|e| e - self.energies[0]).collect()
    }

    pub fn level_of(&self, label: &[usize]) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.energies[i])
    }

    /// Second difference of the lowest-mode ladder.
    pub fn lowest_anharmonicity(&self) -> Option<f64> {
        let d = self.aux_modes.len() + 1;
        let mut label = vec![0; d];
        let e0 = self.level_of(&label)?;
        label[0] = 1;
        let e1 = self.level_of(&label)?;
        label[0] = 2;
        let e2 = self.level_of(&label)?;
        Some(e2 - 2.0 * e1 + e0)
    }
}

fn solve_grid(problem: &OracleProblem, points: usize, config: &OracleConfig) -> Result<(Vec<f64>, f64)> {
    let op = GridOperator::new(problem, points);
    debug!("oracle grid: {} coordinates, {} points per axis, {} unknowns", problem.coordinates(), points, op.total());
    let pairs = if op.total() < DENSE_LIMIT {
        let n = op.total();
        let mut dense = Mat::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            op.apply(&e, &mut y);
            e[j] = 0.0;
            for i in 0..n {
                dense[(i, j)] = y[i];
            }
        }
        dense_lowest(dense.as_ref(), config.eigenpairs)?
    } else {
        lanczos_lowest(&op, config.eigenpairs, &config.lanczos)?
    };
    let ground = &pairs.vectors[0];
    let peak = ground.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = ground.len();
    let parity = (0..n).map(|i| (ground[i] - ground[n - 1 - i]).abs()).fold(0.0f64, f64::max) / peak;
    Ok((pairs.values, parity))
}

/// Orders harmonic product states of the linearized problem and pairs them
/// with the eigenvalues; ties within `tie` [Hz] leave the later ones
/// unlabeled (empty label).
fn order_labels(frequencies: &[f64], count: usize, tie: f64) -> Vec<Vec<usize>> {
    let d = frequencies.len();
    let mut states: Vec<(f64, Vec<usize>)> = Vec::new();
    let max_n = count + 2;
    let mut current = vec![0usize; d];
    loop {
        let e: f64 = current.iter().zip(frequencies).map(|(n, f)| *n as f64 * f).sum();
        states.push((e, current.clone()));
        let mut i = 0;
        loop {
            if i == d {
                break;
            }
            current[i] += 1;
            if current.iter().sum::<usize>() <= max_n {
                break;
            }
            current[i] = 0;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    states.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    (0..count)
        .map(|n| {
            let close = |m: usize| m < states.len() && (states[m].0 - states[n].0).abs() < tie;
            if (n > 0 && close(n - 1)) || close(n + 1) {
                Vec::new()
            } else {
                states[n].1.clone()
            }
        })
        .collect()
}

pub fn oracle_solve(problem: &OracleProblem, config: &OracleConfig) -> Result<OracleSpectrum> {
    let (energies, parity_defect) = solve_grid(problem, problem.points, config)?;
    let (refined, cauchy) = if config.refine {
        let fine_points = problem.points + (problem.points - 1) / 2;
        let fine_points = if fine_points % 2 == 0 { fine_points + 1 } else { fine_points };
        let (fine, _) = solve_grid(problem, fine_points, config)?;
        let change = (1..energies.len().min(fine.len()))
            .map(|i| ((fine[i] - fine[0]) - (energies[i] - energies[0])).abs())
            .fold(0.0f64, f64::max);
        (Some(fine), Some(change))
    } else {
        (None, None)
    };
    // harmonic frequencies with the junction-like mode first: sort ascending
    let frequencies = problem.harmonic_frequencies()?;
    let labels = order_labels(&frequencies, energies.len(), 0.05 * frequencies[0]);
    Ok(OracleSpectrum {
        aux_modes: problem.aux_modes.clone(),
        points: problem.points,
        energies,
        refined,
        cauchy,
        parity_defect,
        labels,
    })
}

pub fn solve_oracle(params: &CircuitParams, config: &OracleConfig) -> Result<OracleSpectrum> {
    let problem = oracle_problem(params, config)?;
    oracle_solve(&problem, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::GHZ;

    fn params(xj: f64, m: usize) -> CircuitParams {
        let mut p = CircuitParams::reference_device();
        p.junction_position = xj * p.half_length;
        p.junction_capacitance = 1e-15;
        p.mode_count_override = Some(m);
        p
    }

    #[test]
    fn labels_follow_harmonic_order() {
        let labels = order_labels(&[4.0, 15.0], 5, 0.1);
        assert_eq!(labels, vec![vec![0, 0], vec![1, 0], vec![2, 0], vec![3, 0], vec![0, 1]]);
        let tied = order_labels(&[4.0, 8.0], 3, 0.1);
        assert_eq!(tied[2], Vec::<usize>::new());
    }

    #[test]
    fn too_many_coordinates_is_resource_error() {
        let r = oracle_problem(&params(0.51, 3), &OracleConfig::default());
        assert!(matches!(r, Err(UnimonError::Resource(_))));
    }

    #[test]
    fn odd_modes_drop_out_at_the_centre() {
        let p = oracle_problem(&params(0.0, 4), &OracleConfig::default()).unwrap();
        assert_eq!(p.aux_modes, vec![2, 4]);
    }

    #[test]
    fn harmonic_limit_without_aux_modes() {
        // tiny E_J: levels spaced by 1/(2π√(L_eff C_eff)) within grid error
        let mut p = params(0.0, 1);
        p.josephson_energy = 1e3;
        let cfg = OracleConfig { refine: false, eigenpairs: 4, ..Default::default() };
        let problem = oracle_problem(&p, &cfg).unwrap();
        assert!(problem.aux_modes.is_empty());
        let s = oracle_solve(&problem, &cfg).unwrap();
        let l = 2.0 * p.half_length * p.inductance_per_length;
        let c = problem.derived.effective_capacitance;
        let expected = 1.0 / (2.0 * std::f64::consts::PI * (l * c).sqrt());
        for t in s.transitions().windows(2) {
            assert!(((t[1] - t[0]) - expected).abs() < 1e-6 * expected);
        }
        assert!((s.transitions()[0] - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn mirror_symmetric_in_junction_position() {
        let cfg = OracleConfig { refine: false, points: Some(121), ..Default::default() };
        let a = solve_oracle(&params(0.4, 1), &cfg).unwrap();
        let b = solve_oracle(&params(-0.4, 1), &cfg).unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            assert!((x - y).abs() < 1e-6 * x.abs().max(1.0 * GHZ));
        }
    }

    #[test]
    fn sweet_spot_ground_state_is_even() {
        let cfg = OracleConfig { refine: false, points: Some(121), ..Default::default() };
        let s = solve_oracle(&params(0.0, 2), &cfg).unwrap();
        assert!(s.parity_defect < 1e-6, "{}", s.parity_defect);
    }
}
