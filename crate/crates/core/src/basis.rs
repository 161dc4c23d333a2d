//! Energy-cutoff product basis over the lower modes.

use std::collections::HashMap;

use crate::error::{Result, UnimonError};

pub const DEFAULT_BASIS_LIMIT: usize = 200_000;

/// Downward-closed set of product labels (j_1, …, j_n) in lexicographic
/// order, with Σ(E_{m,j_m} − E_{m,0}) ≤ E_cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodeBasis {
    pub labels: Vec<Vec<usize>>,
    /// Non-interacting energies Σ E_{m,j_m} [Hz].
    pub energies: Vec<f64>,
    index: HashMap<Vec<usize>, usize>,
    pub cutoff: f64,
}

impl MultimodeBasis {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.labels.first().map_or(0, |l| l.len())
    }

    pub fn index_of(&self, label: &[usize]) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Depth-first enumeration. `levels[m]` holds the energies E_{m,j} of mode
/// m in ascending order.
pub fn enumerate_basis(levels: &[Vec<f64>], cutoff: f64, limit: usize) -> Result<MultimodeBasis> {
    let relative: Vec<Vec<f64>> = levels
        .iter()
        .map(|e| e.iter().map(|x| x - e[0]).collect())
        .collect();
    let ground: f64 = levels.iter().map(|e| e[0]).sum();
    let mut labels = Vec::new();
    let mut energies = Vec::new();
    let mut current = vec![0usize; levels.len()];
    descend(&relative, cutoff, limit, 0, 0.0, &mut current, &mut labels, &mut energies)?;
    let energies: Vec<f64> = energies.into_iter().map(|e| e + ground).collect();
    let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    Ok(MultimodeBasis { labels, energies, index, cutoff })
}

#[allow(clippy::too_many_arguments)]
fn descend(
    relative: &[Vec<f64>],
    cutoff: f64,
    limit: usize,
    depth: usize,
    used: f64,
    current: &mut Vec<usize>,
    labels: &mut Vec<Vec<usize>>,
    energies: &mut Vec<f64>,
) -> Result<()> {
    if depth == relative.len() {
        if labels.len() >= limit {
            return Err(UnimonError::Resource(format!(
                "product basis exceeds {limit} states at E_cutoff = {:.1} GHz; lower the cutoff or the mode count",
                cutoff / 1e9
            )));
        }
        labels.push(current.clone());
        energies.push(used);
        return Ok(());
    }
    let levels = &relative[depth];
    for (j, e) in levels.iter().enumerate() {
        if used + e > cutoff {
            break;
        }
        current[depth] = j;
        descend(relative, cutoff, limit, depth + 1, used + e, current, labels, energies)?;
    }
    current[depth] = 0;
    Ok(())
}

/// Number of levels of each mode that lie within the cutoff, for checking
/// that the single-mode solves retained enough.
pub fn levels_needed(levels: &[f64], cutoff: f64) -> usize {
    levels.iter().filter(|e| **e - levels[0] <= cutoff).count()
}
