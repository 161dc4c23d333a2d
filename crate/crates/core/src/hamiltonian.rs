//! Truncated multimode Hamiltonian in the product basis of single-mode
//! eigenstates.
//!
//! With θ the dc phase, s the higher-mode phase shift, Φ_h the sum of
//! higher-mode vacuum phases and Ẽ_J the renormalized amplitude:
//!
//! H = Σ_m diag(E_m) + E_J Σ_m (cos θ C_m + sin θ S_m)
//!     − E_J cos θ Σ_{l<k} P_l P_k − E_J cos θ Φ_h Σ_l P_l
//!     − Ẽ_J Re[e^{−i(θ − s)} Π_m X_m]
//!
//! The product term is evaluated entrywise, which is exact because every
//! X_m is complex symmetric.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::MultimodeBasis;
use crate::eigen::CsrMatrix;
use crate::error::{Result, UnimonError};
use crate::single_mode::{RenormalizationReport, SingleModeSpectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOptions {
    /// Drop product-term entries whose magnitude bound falls below this [Hz].
    pub prune_tolerance: f64,
    /// Keep only diag(E_m) (test harness for the non-interacting limit).
    pub interactions: bool,
    /// Stored-entry budget before assembly gives up with a resource error.
    pub max_nonzeros: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { prune_tolerance: 100.0, interactions: true, max_nonzeros: 40_000_000 }
    }
}

/// Scalars entering the interaction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    pub josephson: f64,
    pub dc_phase: f64,
    pub renormalized: f64,
    pub phase_shift: f64,
    pub mean_phase: f64,
}

impl Couplings {
    pub fn new(josephson: f64, dc_phase: f64, renorm: &RenormalizationReport) -> Self {
        Couplings {
            josephson,
            dc_phase,
            renormalized: renorm.renormalized,
            phase_shift: renorm.phase_shift,
            mean_phase: renorm.mean_phase_total(),
        }
    }

    /// No higher modes: Ẽ_J = E_J and no shifts.
    pub fn bare(josephson: f64, dc_phase: f64) -> Self {
        Couplings { josephson, dc_phase, renormalized: josephson, phase_shift: 0.0, mean_phase: 0.0 }
    }
}

fn relative_levels(spectra: &[&SingleModeSpectrum]) -> Vec<Vec<f64>> {
    spectra
        .iter()
        .map(|s| s.energies.iter().map(|e| e - s.energies[0]).collect())
        .collect()
}

pub fn assemble_hamiltonian(
    basis: &MultimodeBasis,
    spectra: &[&SingleModeSpectrum],
    couplings: &Couplings,
    options: &AssemblyOptions,
) -> Result<CsrMatrix> {
    let modes = spectra.len();
    if basis.modes() != modes {
        return Err(UnimonError::Internal(format!(
            "basis has {} modes but {} spectra were supplied",
            basis.modes(),
            modes
        )));
    }
    for label in &basis.labels {
        for (m, &j) in label.iter().enumerate() {
            if j >= spectra[m].levels() {
                return Err(UnimonError::Internal(format!(
                    "basis label {label:?} needs level {j} of mode {} which has only {} levels",
                    spectra[m].mode + 1,
                    spectra[m].levels()
                )));
            }
        }
    }
    let relative = relative_levels(spectra);
    let ej = couplings.josephson;
    let (sin_t, cos_t) = couplings.dc_phase.sin_cos();
    let rotation = Complex64::from_polar(1.0, -(couplings.dc_phase - couplings.phase_shift));
    // |X_m[j, j']| bounds for pruning
    let magnitudes: Vec<Vec<Vec<f64>>> = spectra
        .iter()
        .map(|s| {
            (0..s.levels())
                .map(|j| (0..s.levels()).map(|k| s.cos[j][k].hypot(s.sin[j][k])).collect())
                .collect()
        })
        .collect();

    let stored = AtomicUsize::new(0);
    let rows: Vec<Vec<(usize, f64)>> = (0..basis.len())
        .into_par_iter()
        .map(|a| {
            if stored.load(Ordering::Relaxed) > options.max_nonzeros {
                return Vec::new();
            }
            let la = &basis.labels[a];
            let mut row: Vec<(usize, f64)> = vec![(a, basis.energies[a])];
            if !options.interactions {
                return row;
            }
            let mut lb = la.clone();
            // single-mode terms and the mean-field term
            for m in 0..modes {
                let s = spectra[m];
                for j in 0..s.levels() {
                    lb[m] = j;
                    if let Some(b) = basis.index_of(&lb) {
                        let value = ej * (cos_t * s.cos[la[m]][j] + sin_t * s.sin[la[m]][j])
                            - ej * cos_t * couplings.mean_phase * s.phase[la[m]][j];
                        row.push((b, value));
                    }
                }
                lb[m] = la[m];
            }
            // pair terms
            if cos_t != 0.0 {
                for l in 0..modes {
                    for k in l + 1..modes {
                        let (sl, sk) = (spectra[l], spectra[k]);
                        for jl in 0..sl.levels() {
                            let pl = sl.phase[la[l]][jl];
                            if pl == 0.0 {
                                continue;
                            }
                            lb[l] = jl;
                            for jk in 0..sk.levels() {
                                lb[k] = jk;
                                if let Some(b) = basis.index_of(&lb) {
                                    row.push((b, -ej * cos_t * pl * sk.phase[la[k]][jk]));
                                }
                            }
                            lb[k] = la[k];
                        }
                        lb[l] = la[l];
                    }
                }
            }
            // exponential product, depth-first over the basis tree
            let mut target = vec![0usize; modes];
            product_row(
                basis,
                spectra,
                &relative,
                &magnitudes,
                la,
                &mut target,
                0,
                0.0,
                couplings.renormalized,
                couplings.renormalized.abs(),
                Complex64::new(1.0, 0.0),
                rotation,
                options.prune_tolerance,
                &mut row,
            );
            stored.fetch_add(row.len(), Ordering::Relaxed);
            row
        })
        .collect();
    let total = stored.into_inner();
    if total > options.max_nonzeros {
        return Err(UnimonError::Resource(format!(
            "multimode Hamiltonian needs more than {} stored entries ({} basis states); lower E_cutoff or M_0",
            options.max_nonzeros,
            basis.len()
        )));
    }
    Ok(CsrMatrix::from_rows(rows).symmetrized())
}

#[allow(clippy::too_many_arguments)]
fn product_row(
    basis: &MultimodeBasis,
    spectra: &[&SingleModeSpectrum],
    relative: &[Vec<f64>],
    magnitudes: &[Vec<Vec<f64>>],
    source: &[usize],
    target: &mut Vec<usize>,
    depth: usize,
    used: f64,
    scale: f64,
    bound: f64,
    product: Complex64,
    rotation: Complex64,
    tolerance: f64,
    row: &mut Vec<(usize, f64)>,
) {
    if depth == spectra.len() {
        if let Some(b) = basis.index_of(target) {
            row.push((b, -scale * (rotation * product).re));
        }
        return;
    }
    let s = spectra[depth];
    let i = source[depth];
    for j in 0..s.levels() {
        let e = relative[depth][j];
        if used + e > basis.cutoff {
            break;
        }
        let next_bound = bound * magnitudes[depth][i][j];
        if next_bound < tolerance {
            continue;
        }
        target[depth] = j;
        product_row(
            basis,
            spectra,
            relative,
            magnitudes,
            source,
            target,
            depth + 1,
            used + e,
            scale,
            next_bound,
            product * s.exp(i, j),
            rotation,
            tolerance,
            row,
        );
    }
    target[depth] = 0;
}

/// cos(Σφ_m) entry from the even-subset expansion
/// Σ_{S even} (−1)^{|S|/2} Π_{m∈S} S_m Π_{m∉S} C_m.
pub fn cos_sum_by_expansion(spectra: &[&SingleModeSpectrum], a: &[usize], b: &[usize]) -> (f64, usize) {
    let n = spectra.len();
    let mut total = 0.0;
    let mut terms = 0;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size % 2 == 1 {
            continue;
        }
        terms += 1;
        let sign = if (size / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let mut value = sign;
        for m in 0..n {
            let s = spectra[m];
            value *= if mask & (1 << m) != 0 { s.sin[a[m]][b[m]] } else { s.cos[a[m]][b[m]] };
        }
        total += value;
    }
    (total, terms)
}

/// cos(Σφ_m) entry from the exponential product Re Π X_m.
pub fn cos_sum_by_product(spectra: &[&SingleModeSpectrum], a: &[usize], b: &[usize]) -> f64 {
    spectra
        .iter()
        .enumerate()
        .fold(Complex64::new(1.0, 0.0), |acc, (m, s)| acc * s.exp(a[m], b[m]))
        .re
}
