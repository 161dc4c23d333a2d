//! Transition frequencies, occupation-dependent anharmonicities and
//! cross-Kerr shifts from labeled levels, plus the harmonic-basis Kerr
//! estimates.

use serde::Serialize;

use crate::normal_modes::NormalModes;

/// Modes covered by the numerical observables.
pub const OBSERVED_MODES: usize = 3;

/// Energy [Hz] of the state with the given occupations of the three lowest
/// normal modes (all other modes in their ground state), if resolvable.
pub trait LevelTable {
    fn level(&self, occupations: [usize; OBSERVED_MODES]) -> Option<f64>;
}

fn occupations(mode: usize, level: usize, others: [(usize, usize); 2]) -> [usize; OBSERVED_MODES] {
    let mut occ = [0; OBSERVED_MODES];
    occ[mode] = level;
    for (m, n) in others {
        occ[m] = n;
    }
    occ
}

/// The two modes other than `m`, ascending.
fn spectators(m: usize) -> [usize; 2] {
    match m {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

fn third(n: usize, m: usize) -> usize {
    3 - n - m
}

/// (E_{m,1} − E_{m,0}) with the other modes in their ground state.
pub fn transition_frequency(levels: &dyn LevelTable, m: usize) -> Option<f64> {
    let e0 = levels.level([0; OBSERVED_MODES])?;
    let mut occ = [0; OBSERVED_MODES];
    occ[m] = 1;
    let e1 = levels.level(occ)?;
    Some(e1 - e0)
}

/// α_m(i, k): second difference of mode m's ladder with the two spectator
/// modes (ascending index) occupied by i and k.
pub fn anharmonicity(levels: &dyn LevelTable, m: usize, i: usize, k: usize) -> Option<f64> {
    let [a, b] = spectators(m);
    let at = |j| levels.level(occupations(m, j, [(a, i), (b, k)]));
    let (e0, e1, e2) = (at(0)?, at(1)?, at(2)?);
    Some((e2 - e1) - (e1 - e0))
}

/// K_nm(i): mixed difference of modes n and m with the remaining mode
/// occupied by i.
pub fn cross_kerr(levels: &dyn LevelTable, n: usize, m: usize, i: usize) -> Option<f64> {
    let t = third(n, m);
    let at = |jn: usize, jm: usize| {
        let mut occ = [0; OBSERVED_MODES];
        occ[n] = jn;
        occ[m] = jm;
        occ[t] = i;
        levels.level(occ)
    };
    Some((at(1, 1)? - at(0, 1)?) - (at(1, 0)? - at(0, 0)?))
}

/// All occupation vectors the numerical observables may need.
pub fn required_occupations() -> Vec<[usize; OBSERVED_MODES]> {
    let mut out = Vec::new();
    for a in 0..=2 {
        for b in 0..=2 {
            for c in 0..=2 {
                let twos = [a, b, c].iter().filter(|&&x| x == 2).count();
                if twos <= 1 {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnharmonicityEntry {
    /// 1-based mode index.
    pub mode: usize,
    pub occupations: (usize, usize),
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossKerrEntry {
    /// 1-based mode indices.
    pub modes: (usize, usize),
    pub third: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericalKerr {
    pub frequencies: Vec<Option<f64>>,
    pub anharmonicities: Vec<AnharmonicityEntry>,
    pub cross_kerr: Vec<CrossKerrEntry>,
}

impl NumericalKerr {
    pub fn from_levels(levels: &dyn LevelTable) -> Self {
        let frequencies = (0..OBSERVED_MODES).map(|m| transition_frequency(levels, m)).collect();
        let mut anharmonicities = Vec::new();
        for m in 0..OBSERVED_MODES {
            for i in 0..=1 {
                for k in 0..=1 {
                    anharmonicities.push(AnharmonicityEntry {
                        mode: m + 1,
                        occupations: (i, k),
                        value: anharmonicity(levels, m, i, k),
                    });
                }
            }
        }
        let mut cross = Vec::new();
        for (n, m) in [(0, 1), (0, 2), (1, 2)] {
            for i in 0..=1 {
                cross.push(CrossKerrEntry { modes: (n + 1, m + 1), third: i, value: cross_kerr(levels, n, m, i) });
            }
        }
        NumericalKerr { frequencies, anharmonicities, cross_kerr: cross }
    }

    pub fn alpha(&self, mode: usize, i: usize, k: usize) -> Option<f64> {
        self.anharmonicities
            .iter()
            .find(|e| e.mode == mode && e.occupations == (i, k))
            .and_then(|e| e.value)
    }

    pub fn kerr(&self, n: usize, m: usize, i: usize) -> Option<f64> {
        self.cross_kerr
            .iter()
            .find(|e| e.modes == (n.min(m), n.max(m)) && e.third == i)
            .and_then(|e| e.value)
    }
}

/// Harmonic-basis Kerr estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticKerr {
    /// λ_m over all normal modes.
    pub lambda: Vec<f64>,
    /// E_J Π exp(−λ_m²/2) [Hz].
    pub ej_star: f64,
    /// K_mm [Hz] over all normal modes.
    pub self_kerr: Vec<f64>,
}

pub fn analytic_kerr(modes: &NormalModes, josephson: f64) -> AnalyticKerr {
    let lambda_sq: Vec<f64> = (0..modes.len()).map(|m| modes.zero_point_squared(m)).collect();
    let ej_star = josephson * (-0.5 * lambda_sq.iter().sum::<f64>()).exp();
    let self_kerr = lambda_sq.iter().map(|l2| 0.5 * ej_star * l2 * l2).collect();
    AnalyticKerr { lambda: lambda_sq.iter().map(|x| x.sqrt()).collect(), ej_star, self_kerr }
}

impl AnalyticKerr {
    pub fn cross(&self, m: usize, n: usize) -> f64 {
        2.0 * (self.self_kerr[m] * self.self_kerr[n]).sqrt()
    }

    /// −√(2K_kk/E_J*), the relative decline per excitation of mode k.
    pub fn relative_decline(&self, k: usize) -> f64 {
        -(2.0 * self.self_kerr[k] / self.ej_star).sqrt()
    }

    /// α_m(N_n, N_k) for spectator modes n and k.
    pub fn anharmonicity(&self, m: usize, (n, occ_n): (usize, usize), (k, occ_k): (usize, usize)) -> f64 {
        let (nn, nk) = (occ_n as f64, occ_k as f64);
        self.self_kerr[m]
            * (1.0 + self.relative_decline(n) * nn + self.relative_decline(k) * nk
                + self.cross(n, k) / self.ej_star * nn * nk)
    }

    /// K_nm(N_k).
    pub fn cross_kerr(&self, n: usize, m: usize, (k, occ_k): (usize, usize)) -> f64 {
        self.cross(n, m) * (1.0 + self.relative_decline(k) * occ_k as f64)
    }

    /// Change of α_m/K_mm when mode n is excited on top of one excitation in
    /// mode k, in closed form λ_n²(λ_k² − 1).
    pub fn second_correction(&self, n: usize, k: usize) -> f64 {
        let (ln, lk) = (self.lambda[n] * self.lambda[n], self.lambda[k] * self.lambda[k]);
        ln * (lk - 1.0)
    }
}
