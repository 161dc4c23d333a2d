//! End-to-end model pipelines: bare single-mode, renormalized single-mode
//! and the truncated multimode diagonalization.

use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{enumerate_basis, MultimodeBasis, DEFAULT_BASIS_LIMIT};
use crate::circuit::{derive, CircuitParams, DerivedParams};
use crate::eigen::lowest_eigenpairs;
use crate::error::{Result, UnimonError};
use crate::hamiltonian::{assemble_hamiltonian, AssemblyOptions, Couplings};
use crate::labeling::{label_eigenstates, MultimodeSpectrum, DEFAULT_OVERLAP_THRESHOLD};
use crate::normal_modes::{compute_normal_modes, NormalModes};
use crate::observables::{required_occupations, LevelTable, OBSERVED_MODES};
use crate::single_mode::{
    renormalization, solve_adaptive, solve_higher_modes, GridConfig, RenormalizationReport, SingleModeProblem,
    SingleModeSpectrum,
};
use crate::units::GHZ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleMode,
    Renormalized,
    Multimode,
    Oracle,
    Analytic,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::SingleMode => "single_mode",
            ModelKind::Renormalized => "renormalized",
            ModelKind::Multimode => "multimode",
            ModelKind::Oracle => "oracle",
            ModelKind::Analytic => "analytic",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = UnimonError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_mode" => Ok(ModelKind::SingleMode),
            "renormalized" => Ok(ModelKind::Renormalized),
            "multimode" => Ok(ModelKind::Multimode),
            "oracle" => Ok(ModelKind::Oracle),
            "analytic" => Ok(ModelKind::Analytic),
            other => Err(UnimonError::Validation(format!(
                "unknown model '{other}'; expected single_mode, renormalized, multimode, oracle or analytic"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultimodeConfig {
    /// M_0: lowest normal modes kept exactly (decoupled ones included in the
    /// count).
    pub lower_modes: usize,
    /// E_cutoff relative to the product ground state [Hz].
    pub cutoff: f64,
    pub grid: GridConfig,
    pub assembly: AssemblyOptions,
    pub basis_limit: usize,
    pub overlap_threshold: f64,
    /// Eigenpairs computed beyond those needed for the observables.
    pub extra_eigenpairs: usize,
}

impl Default for MultimodeConfig {
    fn default() -> Self {
        MultimodeConfig {
            lower_modes: 3,
            cutoff: 150.0 * GHZ,
            grid: GridConfig::default(),
            assembly: AssemblyOptions::default(),
            basis_limit: DEFAULT_BASIS_LIMIT,
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            extra_eigenpairs: 10,
        }
    }
}

/// Linear analysis shared by every model.
#[derive(Debug, Clone)]
pub struct LinearAnalysis {
    pub params: CircuitParams,
    pub derived: DerivedParams,
    pub modes: NormalModes,
}

pub fn linear_analysis(params: &CircuitParams) -> Result<LinearAnalysis> {
    params.validate()?;
    let derived = derive(params)?;
    let modes = compute_normal_modes(&derived)?;
    Ok(LinearAnalysis { params: params.clone(), derived, modes })
}

/// Single-mode solve keeping every level within `budget` plus one guard
/// level above it.
fn solve_with_guard(problem: &SingleModeProblem, budget: f64, grid: &GridConfig) -> Result<SingleModeSpectrum> {
    let mut cap = problem.levels_within(budget) + 1;
    loop {
        let s = solve_adaptive(problem, cap, grid)?;
        let last = s.energies[s.levels() - 1] - s.energies[0];
        if last > budget || s.levels() < cap {
            return Ok(s);
        }
        cap += 2;
    }
}

fn harmonic_occupation_energy(modes: &NormalModes, occ: &[usize]) -> f64 {
    occ.iter().enumerate().map(|(m, &n)| n as f64 * modes.frequency_hz(m)).sum()
}

#[derive(Debug, Clone)]
pub struct MultimodeSolution {
    pub linear: LinearAnalysis,
    /// Normal-mode indices carried by the product basis.
    pub basis_modes: Vec<usize>,
    /// M_0 actually used (capped by the mode count).
    pub lower_modes: usize,
    pub spectra: Vec<SingleModeSpectrum>,
    pub renormalization: RenormalizationReport,
    pub basis: MultimodeBasis,
    pub nnz: usize,
    pub spectrum: MultimodeSpectrum,
}

impl MultimodeSolution {
    /// Basis label of the coupled part of an occupation vector over the
    /// lowest normal modes, plus the harmonic energy of the decoupled part.
    fn split(&self, occ: &[usize]) -> Option<(Vec<usize>, f64)> {
        if occ.iter().enumerate().any(|(m, &n)| n > 0 && m >= self.lower_modes) {
            return None;
        }
        let mut label = Vec::with_capacity(self.basis_modes.len());
        let mut extra = 0.0;
        for (m, &n) in occ.iter().enumerate().take(self.lower_modes) {
            if self.linear.modes.decoupled[m] {
                extra += n as f64 * self.linear.modes.frequency_hz(m);
            }
        }
        for &m in &self.basis_modes {
            label.push(occ.get(m).copied().unwrap_or(0));
        }
        Some((label, extra))
    }

    /// Energies of labeled, non-hybridized states over the lowest modes.
    pub fn energy(&self, occ: &[usize]) -> Option<f64> {
        let (label, extra) = self.split(occ)?;
        self.spectrum.clean_energy(&label).map(|e| e + extra)
    }
}

impl LevelTable for MultimodeSolution {
    fn level(&self, occ: [usize; OBSERVED_MODES]) -> Option<f64> {
        self.energy(&occ)
    }
}

/// Number of eigenpairs needed so every required label can be resolved.
fn eigenpair_count(basis: &MultimodeBasis, labels: &[Vec<usize>], extra: usize) -> usize {
    let ground = basis.energies[0];
    let needed = labels
        .iter()
        .filter_map(|l| basis.index_of(l))
        .map(|i| basis.energies[i] - ground)
        .fold(0.0f64, f64::max);
    let window = needed * 1.1 + 2.0 * GHZ;
    let inside = basis.energies.iter().filter(|e| **e - ground <= window).count();
    (inside + extra).min(basis.len())
}

pub fn solve_multimode(params: &CircuitParams, config: &MultimodeConfig) -> Result<MultimodeSolution> {
    let linear = linear_analysis(params)?;
    solve_multimode_from(linear, config)
}

pub fn solve_multimode_from(linear: LinearAnalysis, config: &MultimodeConfig) -> Result<MultimodeSolution> {
    if config.lower_modes == 0 {
        return Err(UnimonError::Validation("M_0 must be at least 1".into()));
    }
    if !(config.cutoff >= 0.0) {
        return Err(UnimonError::Validation("E_cutoff must be non-negative".into()));
    }
    let modes = &linear.modes;
    let ej = linear.params.josephson_energy;
    let theta = linear.derived.dc_phase;
    let m0 = config.lower_modes.min(modes.len());
    let basis_modes: Vec<usize> = (0..m0).filter(|&m| !modes.decoupled[m]).collect();
    let higher = solve_higher_modes(modes, m0, ej, theta, &config.grid)?;
    let renorm = renormalization(modes, m0, &higher, ej);
    debug!("Ẽ_J/E_J = {:.6} over {} higher modes", renorm.ratio(), renorm.modes.len());
    let spectra: Vec<SingleModeSpectrum> = basis_modes
        .par_iter()
        .map(|&m| {
            let problem =
                SingleModeProblem::new(m, modes.charging[m], modes.inductive[m], ej, theta, config.cutoff, &config.grid)?;
            solve_with_guard(&problem, config.cutoff, &config.grid)
        })
        .collect::<Result<_>>()?;
    let levels: Vec<Vec<f64>> = spectra.iter().map(|s| s.energies.clone()).collect();
    let basis = enumerate_basis(&levels, config.cutoff, config.basis_limit)?;
    info!(
        "multimode basis: M_0 = {m0}, {} coupled modes, E_cutoff = {:.1} GHz, {} states",
        basis_modes.len(),
        config.cutoff / GHZ,
        basis.len()
    );
    let refs: Vec<&SingleModeSpectrum> = spectra.iter().collect();
    let couplings = Couplings::new(ej, theta, &renorm);
    let matrix = assemble_hamiltonian(&basis, &refs, &couplings, &config.assembly)?;
    debug!("assembled matrix: {} nonzeros", matrix.nnz());
    let mut solution = MultimodeSolution {
        linear,
        basis_modes,
        lower_modes: m0,
        spectra,
        renormalization: renorm,
        basis,
        nnz: matrix.nnz(),
        spectrum: MultimodeSpectrum::empty(),
    };
    let labels: Vec<Vec<usize>> =
        required_occupations().iter().filter_map(|o| solution.split(o).map(|(l, _)| l)).collect();
    let k = eigenpair_count(&solution.basis, &labels, config.extra_eigenpairs);
    let pairs = lowest_eigenpairs(&matrix, k)?;
    solution.spectrum = label_eigenstates(&pairs, &solution.basis, config.overlap_threshold);
    Ok(solution)
}

/// Levels from independent one-dimensional solves, one mode excited at a
/// time.
#[derive(Debug, Clone)]
pub struct SingleModeLevels {
    pub linear: LinearAnalysis,
    /// Spectra of the observed modes; `None` for decoupled modes.
    pub spectra: Vec<Option<SingleModeSpectrum>>,
    pub renormalization: Option<RenormalizationReport>,
}

impl LevelTable for SingleModeLevels {
    fn level(&self, occ: [usize; OBSERVED_MODES]) -> Option<f64> {
        let excited: Vec<usize> = (0..OBSERVED_MODES).filter(|&m| occ[m] > 0).collect();
        match excited.as_slice() {
            [] => Some(0.0),
            [m] => {
                let m = *m;
                if m >= self.spectra.len() {
                    return None;
                }
                match &self.spectra[m] {
                    Some(s) => (occ[m] < s.levels()).then(|| s.energies[occ[m]] - s.energies[0]),
                    None => {
                        let mut o = vec![0; m + 1];
                        o[m] = occ[m];
                        Some(harmonic_occupation_energy(&self.linear.modes, &o))
                    }
                }
            }
            _ => None,
        }
    }
}

/// Renormalization by the vacua of every coupled mode from `first` (0-based)
/// upward.
pub fn higher_mode_renormalization(
    params: &CircuitParams,
    first: usize,
    grid: &GridConfig,
) -> Result<(LinearAnalysis, RenormalizationReport)> {
    let linear = linear_analysis(params)?;
    let first = first.min(linear.modes.len());
    let ej = params.josephson_energy;
    let higher = solve_higher_modes(&linear.modes, first, ej, linear.derived.dc_phase, grid)?;
    let report = renormalization(&linear.modes, first, &higher, ej);
    Ok((linear, report))
}

/// Bare (`renormalize = false`) or renormalized single-mode models for the
/// observed modes. The renormalized cosine amplitude of mode m is
/// E_J Π_{k≠m} |⟨0|e^{iφ_k}|0⟩| with the phases of the factors added to
/// the cosine argument.
pub fn solve_single_mode_model(params: &CircuitParams, renormalize: bool, grid: &GridConfig) -> Result<SingleModeLevels> {
    let linear = linear_analysis(params)?;
    let modes = &linear.modes;
    let ej = params.josephson_energy;
    let theta = linear.derived.dc_phase;
    let observed = OBSERVED_MODES.min(modes.len());
    let (vacua, report) = if renormalize {
        let all = solve_higher_modes(modes, 0, ej, theta, grid)?;
        let higher_report = renormalization(modes, observed, &all[observed..], ej);
        (Some(all), Some(higher_report))
    } else {
        (None, None)
    };
    let spectra = (0..observed)
        .into_par_iter()
        .map(|m| {
            if modes.decoupled[m] {
                return Ok(None);
            }
            let mut problem = SingleModeProblem::new(m, modes.charging[m], modes.inductive[m], ej, theta, 10.0 * GHZ, grid)?;
            if let Some(vacua) = &vacua {
                let (mut magnitude, mut phase) = (1.0, 0.0);
                for (k, v) in vacua.iter().enumerate() {
                    if k == m {
                        continue;
                    }
                    if let Some(s) = v {
                        let f = s.exp(0, 0);
                        magnitude *= f.norm();
                        phase += f.arg();
                    }
                }
                problem = problem.renormalized(ej * magnitude, phase);
            }
            solve_adaptive(&problem, 4, grid).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SingleModeLevels { linear, spectra, renormalization: report })
}
