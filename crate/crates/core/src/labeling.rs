//! Maximum-overlap labeling of multimode eigenstates by product labels.

use std::collections::HashMap;

use serde::Serialize;

use crate::basis::MultimodeBasis;
use crate::eigen::Eigenpairs;

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledState {
    pub label: Vec<usize>,
    /// Index into the ascending eigenvalue list.
    pub eigen_index: usize,
    /// Energy [Hz].
    pub energy: f64,
    /// |⟨label|α⟩|.
    pub overlap: f64,
    pub hybridized: bool,
}

/// Two eigenstates whose best label coincided.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Collision {
    pub label: Vec<usize>,
    pub winner: usize,
    pub loser: usize,
    pub winner_overlap: f64,
    pub loser_overlap: f64,
}

#[derive(Debug, Clone)]
pub struct MultimodeSpectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Labeled states in eigenvalue order.
    pub states: Vec<LabeledState>,
    /// Eigenstates left without a label after a collision.
    pub unlabeled: Vec<usize>,
    pub collisions: Vec<Collision>,
    by_label: HashMap<Vec<usize>, usize>,
}

impl MultimodeSpectrum {
    pub fn empty() -> Self {
        MultimodeSpectrum {
            values: Vec::new(),
            vectors: Vec::new(),
            states: Vec::new(),
            unlabeled: Vec::new(),
            collisions: Vec::new(),
            by_label: HashMap::new(),
        }
    }

    pub fn state(&self, label: &[usize]) -> Option<&LabeledState> {
        self.by_label.get(label).map(|&i| &self.states[i])
    }

    /// Energy of a label that exists and is not hybridized.
    pub fn clean_energy(&self, label: &[usize]) -> Option<f64> {
        self.state(label).filter(|s| !s.hybridized).map(|s| s.energy)
    }
}

pub fn label_eigenstates(pairs: &Eigenpairs, basis: &MultimodeBasis, threshold: f64) -> MultimodeSpectrum {
    let mut best: Vec<(usize, f64)> = Vec::with_capacity(pairs.values.len());
    for v in &pairs.vectors {
        let (b, amp) = v
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        best.push((b, amp));
    }
    // owner of each basis label
    let mut owner: HashMap<usize, usize> = HashMap::new();
    let mut collisions = Vec::new();
    let mut unlabeled = Vec::new();
    for (n, &(b, amp)) in best.iter().enumerate() {
        match owner.get(&b).copied() {
            None => {
                owner.insert(b, n);
            }
            Some(prev) => {
                let prev_amp = best[prev].1;
                let (winner, loser) = if amp > prev_amp { (n, prev) } else { (prev, n) };
                collisions.push(Collision {
                    label: basis.labels[b].clone(),
                    winner,
                    loser,
                    winner_overlap: best[winner].1,
                    loser_overlap: best[loser].1,
                });
                owner.insert(b, winner);
                unlabeled.push(loser);
            }
        }
    }
    unlabeled.sort_unstable();
    let mut assigned: Vec<(usize, usize)> = owner.into_iter().map(|(b, n)| (n, b)).collect();
    assigned.sort_unstable();
    let mut states = Vec::with_capacity(assigned.len());
    let mut by_label = HashMap::new();
    for (n, b) in assigned {
        let amp = best[n].1;
        by_label.insert(basis.labels[b].clone(), states.len());
        states.push(LabeledState {
            label: basis.labels[b].clone(),
            eigen_index: n,
            energy: pairs.values[n],
            overlap: amp,
            hybridized: amp * amp < threshold,
        });
    }
    MultimodeSpectrum {
        values: pairs.values.clone(),
        vectors: pairs.vectors.clone(),
        states,
        unlabeled,
        collisions,
        by_label,
    }
}
