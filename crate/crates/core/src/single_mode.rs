//! One-dimensional single-mode Hamiltonians
//! H_m = −4E_C d²/dφ² + ½E_L φ² + E_J[sin θ φ − cos(φ − θ)]
//! on a uniform phase grid, their operator matrix elements, and the
//! renormalized Josephson energy carried by higher-mode vacua.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, UnimonError};
use crate::normal_modes::NormalModes;
use crate::tridiag::SymTridiagonal;
use crate::units::GHZ;

/// Grid and convergence controls for the single-mode solver.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Points on the coarsest grid, odd.
    pub points: usize,
    /// Lower bound on the half-width in harmonic lengths of the well.
    pub harmonic_widths: f64,
    /// Potential margin above the highest requested energy [Hz].
    pub margin: f64,
    /// Required agreement of extrapolated energies under refinement [Hz].
    pub tolerance: f64,
    /// Coarse-grid doublings tried before giving up on `tolerance`.
    pub max_refinements: usize,
    /// Half-width enlargements tried on boundary-amplitude failures.
    pub max_widenings: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points: 2001,
            harmonic_widths: 8.0,
            margin: 20.0 * GHZ,
            tolerance: 10e3,
            max_refinements: 3,
            max_widenings: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleModeProblem {
    /// 0-based normal-mode index.
    pub mode: usize,
    pub charging: f64,
    pub inductive: f64,
    pub josephson: f64,
    pub dc_phase: f64,
    /// Amplitude of the cosine term; equals `josephson` unless renormalized.
    pub cos_amplitude: f64,
    /// Extra phase s in cos(φ − θ + s).
    pub cos_phase: f64,
    pub half_width: f64,
    pub points: usize,
}

impl SingleModeProblem {
    pub fn potential(&self, phi: f64) -> f64 {
        let theta = self.dc_phase;
        0.5 * self.inductive * phi * phi + self.josephson * theta.sin() * phi
            - self.cos_amplitude * (phi - theta + self.cos_phase).cos()
    }

    /// Curvature of the potential at φ = 0.
    pub fn curvature(&self) -> f64 {
        self.inductive + self.cos_amplitude * (self.dc_phase - self.cos_phase).cos()
    }

    /// Same mode with the cosine term replaced by
    /// −amplitude·cos(φ − θ + phase); the half-width is kept.
    pub fn renormalized(&self, amplitude: f64, phase: f64) -> Self {
        SingleModeProblem { cos_amplitude: amplitude, cos_phase: phase, ..self.clone() }
    }

    pub fn harmonic_frequency(&self) -> f64 {
        (8.0 * self.charging * self.curvature().max(1e-3 * self.inductive)).sqrt()
    }

    /// Ground-state width (8E_C/K)^{1/4} of the harmonic approximation.
    pub fn harmonic_length(&self) -> f64 {
        (8.0 * self.charging / self.curvature().max(1e-3 * self.inductive)).powf(0.25)
    }

    /// Builds a problem whose half-width satisfies both the energy rule
    /// (potential at the edges at least `energy_budget + margin` above the
    /// minimum) and the harmonic-length floor.
    pub fn new(
        mode: usize,
        charging: f64,
        inductive: f64,
        josephson: f64,
        dc_phase: f64,
        energy_budget: f64,
        grid: &GridConfig,
    ) -> Result<Self> {
        if !(charging > 0.0) {
            return Err(UnimonError::Internal(format!(
                "single-mode solve of mode {} needs E_C > 0",
                mode + 1
            )));
        }
        if grid.points < 3 || grid.points % 2 == 0 {
            return Err(UnimonError::Validation(format!(
                "grid point count must be odd and at least 3, got {}",
                grid.points
            )));
        }
        let mut problem = SingleModeProblem {
            mode,
            charging,
            inductive,
            josephson,
            dc_phase,
            cos_amplitude: josephson,
            cos_phase: 0.0,
            half_width: 0.0,
            points: grid.points,
        };
        let sigma = problem.harmonic_length();
        let target = energy_budget + grid.margin;
        let step = 0.25 * sigma;
        let mut phi = sigma;
        let mut v_min = problem.potential(0.0);
        let mut tries = 0;
        loop {
            v_min = v_min.min(problem.potential(phi)).min(problem.potential(-phi));
            let edge = problem.potential(phi).min(problem.potential(-phi));
            if edge - v_min >= target {
                break;
            }
            phi += step;
            tries += 1;
            if tries > 1_000_000 {
                return Err(UnimonError::Numerical(format!(
                    "could not bracket the potential of mode {} at {target:e} Hz",
                    mode + 1
                )));
            }
        }
        problem.half_width = phi.max(grid.harmonic_widths * sigma);
        Ok(problem)
    }

    fn interior_grid(&self, points: usize) -> (Vec<f64>, f64) {
        let h = 2.0 * self.half_width / (points - 1) as f64;
        let centre = (points - 1) / 2;
        let phis = (1..points - 1).map(|i| (i as f64 - centre as f64) * h).collect();
        (phis, h)
    }

    fn operator(&self, points: usize) -> (SymTridiagonal, Vec<f64>, f64) {
        let (phis, h) = self.interior_grid(points);
        let kinetic = 4.0 * self.charging / (h * h);
        let diag = phis.iter().map(|&p| 2.0 * kinetic + self.potential(p)).collect();
        let off = vec![-kinetic; phis.len() - 1];
        (SymTridiagonal::new(diag, off), phis, h)
    }

    /// Number of levels within `window` of the ground level on the coarse
    /// grid.
    pub fn levels_within(&self, window: f64) -> usize {
        let (t, _, _) = self.operator(self.points);
        let ground = t.eigenvalue(0);
        t.count_below(ground + window * (1.0 + 1e-12) + 1e-9).max(1)
    }
}

/// Eigenpairs and operator matrix elements of one single-mode Hamiltonian.
#[derive(Debug, Clone)]
pub struct SingleModeSpectrum {
    pub mode: usize,
    pub problem: SingleModeProblem,
    /// E_{m,j}/h [Hz], ascending.
    pub energies: Vec<f64>,
    /// Interior points of the finest grid.
    pub grid: Vec<f64>,
    pub spacing: f64,
    /// Eigenvectors with Σψ²·h = 1.
    pub vectors: Vec<Vec<f64>>,
    /// Largest extrapolated-energy change seen under refinement [Hz].
    pub convergence: f64,
    pub cos: Vec<Vec<f64>>,
    pub sin: Vec<Vec<f64>>,
    pub phase: Vec<Vec<f64>>,
}

impl SingleModeSpectrum {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// ⟨j|e^{iφ}|k⟩ = C[j,k] + iS[j,k].
    pub fn exp(&self, j: usize, k: usize) -> Complex64 {
        Complex64::new(self.cos[j][k], self.sin[j][k])
    }

    pub fn transition(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Lowest `level_cap` eigenpairs of the problem as given (no adaptive
/// widening). Energies come from two Richardson extrapolations over the
/// nested grids N, 2N−1, 4N−3; vectors from the finest grid.
pub fn solve_single_mode(problem: &SingleModeProblem, level_cap: usize, grid: &GridConfig) -> Result<SingleModeSpectrum> {
    if level_cap == 0 {
        return Err(UnimonError::Validation("level cap must be at least 1".into()));
    }
    let mut points = problem.points;
    let mut worst = f64::INFINITY;
    for _ in 0..=grid.max_refinements {
        let grids = [points, 2 * points - 1, 4 * points - 3];
        let (t0, _, _) = problem.operator(grids[0]);
        let (t1, _, _) = problem.operator(grids[1]);
        let (t2, phis, h) = problem.operator(grids[2]);
        let k = level_cap.min(t0.dim());
        let e0 = t0.lowest_eigenvalues(k);
        let e1 = t1.lowest_eigenvalues(k);
        let (e2, raw) = t2.lowest_pairs(k);
        let mut energies = Vec::with_capacity(k);
        worst = 0.0;
        for j in 0..k {
            let first = richardson(e0[j], e1[j]);
            let second = richardson(e1[j], e2[j]);
            worst = worst.max((second - first).abs());
            energies.push(second);
        }
        if worst < grid.tolerance {
            let scale = 1.0 / h.sqrt();
            let vectors: Vec<Vec<f64>> = raw
                .into_iter()
                .map(|v| v.into_iter().map(|x| x * scale).collect())
                .collect();
            for v in &vectors {
                let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let edge = v[0].abs().max(v[v.len() - 1].abs());
                if edge > 1e-8 * peak {
                    return Err(UnimonError::GridTooNarrow { mode: problem.mode + 1, amplitude: edge / peak });
                }
            }
            let mut spectrum = SingleModeSpectrum {
                mode: problem.mode,
                problem: SingleModeProblem { points, ..problem.clone() },
                energies,
                grid: phis,
                spacing: h,
                vectors,
                convergence: worst,
                cos: Vec::new(),
                sin: Vec::new(),
                phase: Vec::new(),
            };
            operator_matrix_elements(&mut spectrum);
            return Ok(spectrum);
        }
        points = 2 * points - 1;
    }
    Err(UnimonError::Numerical(format!(
        "mode {} energies not converged under grid refinement: change {worst:.3e} Hz exceeds {:.3e} Hz",
        problem.mode + 1,
        grid.tolerance
    )))
}

/// Solves and widens the grid while the boundary-amplitude check fails.
pub fn solve_adaptive(problem: &SingleModeProblem, level_cap: usize, grid: &GridConfig) -> Result<SingleModeSpectrum> {
    let mut current = problem.clone();
    let mut attempt = 0;
    loop {
        match solve_single_mode(&current, level_cap, grid) {
            Err(UnimonError::GridTooNarrow { .. }) if attempt < grid.max_widenings => {
                attempt += 1;
                current.half_width *= 1.5;
            }
            other => return other,
        }
    }
}

fn projected(vectors: &[Vec<f64>], weight: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let mut out = vec![vec![0.0; n]; n];
    for j in 0..n {
        let wj: Vec<f64> = vectors[j].iter().zip(weight).map(|(a, w)| a * w).collect();
        for k in j..n {
            let value = wj.iter().zip(&vectors[k]).map(|(a, b)| a * b).sum::<f64>() * h;
            out[j][k] = value;
            out[k][j] = value;
        }
    }
    out
}

/// Quadrature of cos φ, sin φ and φ between all retained levels. The
/// projections are symmetric by construction.
pub fn operator_matrix_elements(spectrum: &mut SingleModeSpectrum) {
    let cos: Vec<f64> = spectrum.grid.iter().map(|p| p.cos()).collect();
    let sin: Vec<f64> = spectrum.grid.iter().map(|p| p.sin()).collect();
    let h = spectrum.spacing;
    spectrum.cos = projected(&spectrum.vectors, &cos, h);
    spectrum.sin = projected(&spectrum.vectors, &sin, h);
    spectrum.phase = projected(&spectrum.vectors, &spectrum.grid, h);
}

/// Per-mode and aggregate renormalization of the Josephson energy by the
/// vacua of the higher modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormalizationReport {
    /// 0-based normal-mode indices of the higher modes.
    pub modes: Vec<usize>,
    /// f_k = ⟨0|e^{iφ}|0⟩ per higher mode as (re, im).
    pub factors: Vec<(f64, f64)>,
    /// ⟨0|φ|0⟩ per higher mode.
    pub mean_phases: Vec<f64>,
    pub bare: f64,
    /// Ẽ_J = E_J Π|f_k| [Hz].
    pub renormalized: f64,
    /// Σ arg f_k.
    pub phase_shift: f64,
    /// λ_k² per higher mode.
    pub zero_point_squared: Vec<f64>,
    /// E_J Π exp(−λ_k²/2) [Hz].
    pub harmonic: f64,
}

impl RenormalizationReport {
    pub fn ratio(&self) -> f64 {
        self.renormalized / self.bare
    }

    pub fn mean_phase_total(&self) -> f64 {
        self.mean_phases.iter().sum()
    }

    pub fn factor_magnitudes(&self) -> Vec<f64> {
        self.factors.iter().map(|(re, im)| re.hypot(*im)).collect()
    }
}

/// Vacuum solve of every coupled mode in `first..modes.len()`; decoupled
/// modes yield `None`.
pub fn solve_higher_modes(
    modes: &NormalModes,
    first: usize,
    josephson: f64,
    dc_phase: f64,
    grid: &GridConfig,
) -> Result<Vec<Option<SingleModeSpectrum>>> {
    (first..modes.len())
        .into_par_iter()
        .map(|m| {
            if modes.decoupled[m] {
                return Ok(None);
            }
            let problem = SingleModeProblem::new(
                m,
                modes.charging[m],
                modes.inductive[m],
                josephson,
                dc_phase,
                0.0,
                grid,
            )?;
            solve_adaptive(&problem, 1, grid).map(Some)
        })
        .collect()
}

/// Combines higher-mode vacuum factors; `higher[i]` belongs to mode
/// `first + i`.
pub fn renormalization(
    modes: &NormalModes,
    first: usize,
    higher: &[Option<SingleModeSpectrum>],
    josephson: f64,
) -> RenormalizationReport {
    let mut factors = Vec::with_capacity(higher.len());
    let mut mean_phases = Vec::with_capacity(higher.len());
    let mut zero_point_squared = Vec::with_capacity(higher.len());
    let mut magnitude = 1.0;
    let mut phase_shift = 0.0;
    let mut harmonic_exponent = 0.0;
    for (i, spectrum) in higher.iter().enumerate() {
        let m = first + i;
        let lambda_sq = modes.zero_point_squared(m);
        zero_point_squared.push(lambda_sq);
        harmonic_exponent += 0.5 * lambda_sq;
        match spectrum {
            Some(s) => {
                let f = s.exp(0, 0);
                magnitude *= f.norm();
                phase_shift += f.arg();
                factors.push((f.re, f.im));
                mean_phases.push(s.phase[0][0]);
            }
            None => {
                factors.push((1.0, 0.0));
                mean_phases.push(0.0);
            }
        }
    }
    RenormalizationReport {
        modes: (first..first + higher.len()).collect(),
        factors,
        mean_phases,
        bare: josephson,
        renormalized: josephson * magnitude,
        phase_shift,
        zero_point_squared,
        harmonic: josephson * (-harmonic_exponent).exp(),
    }
}
