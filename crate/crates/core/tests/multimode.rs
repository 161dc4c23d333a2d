use unimon::circuit::CircuitParams;
use unimon::eigen::{dense_lowest, lanczos_lowest, LanczosParams};
use unimon::hamiltonian::{assemble_hamiltonian, Couplings};
use unimon::model::{solve_multimode, ModelKind, MultimodeConfig, MultimodeSolution};
use unimon::observables::NumericalKerr;
use unimon::oracle::OracleConfig;
use unimon::sweep::{oracle_compare, EvalConfig};
use unimon::units::GHZ;

fn device(xj: f64, modes: usize) -> CircuitParams {
    let mut p = CircuitParams::reference_device();
    p.junction_position = xj * p.half_length;
    p.junction_capacitance = 1e-15;
    p.mode_count_override = Some(modes);
    p
}

fn rebuild(p: &CircuitParams, sol: &MultimodeSolution, cfg: &MultimodeConfig) -> unimon::eigen::CsrMatrix {
    let spectra: Vec<_> = sol.spectra.iter().collect();
    let couplings = Couplings::new(p.josephson_energy, sol.linear.derived.dc_phase, &sol.renormalization);
    assemble_hamiltonian(&sol.basis, &spectra, &couplings, &cfg.assembly).unwrap()
}

#[test]
fn dense_and_lanczos_agree_on_a_real_hamiltonian() {
    let p = device(0.51, 8);
    let cfg = MultimodeConfig { lower_modes: 4, cutoff: 150.0 * GHZ, ..Default::default() };
    let sol = solve_multimode(&p, &cfg).unwrap();
    let n = sol.basis.len();
    assert!((1500..4000).contains(&n), "basis size {n}");
    let m = rebuild(&p, &sol, &cfg);
    let dense = dense_lowest(m.to_dense().as_ref(), 12).unwrap();
    let lanczos = lanczos_lowest(&m, 12, &LanczosParams::default()).unwrap();
    for (a, b) in dense.values.iter().zip(&lanczos.values) {
        assert!((a - b).abs() < 1e3, "{a} vs {b}");
    }
}

#[test]
fn eigenvalues_do_not_rise_with_the_cutoff() {
    let p = device(0.3, 6);
    let mut previous: Option<Vec<f64>> = None;
    for cut in [15.0, 25.0, 35.0, 45.0] {
        let cfg = MultimodeConfig { lower_modes: 3, cutoff: cut * GHZ, ..Default::default() };
        let sol = solve_multimode(&p, &cfg).unwrap();
        let m = rebuild(&p, &sol, &cfg);
        let k = 6.min(sol.basis.len());
        let values = dense_lowest(m.to_dense().as_ref(), k).unwrap().values;
        if let Some(prev) = &previous {
            for (a, b) in values.iter().zip(prev) {
                assert!(*a <= b + 1e-6 * b.abs(), "cutoff {cut}: {a} > {b}");
            }
        }
        previous = Some(values);
    }
}

#[test]
fn ground_state_is_never_hybridized() {
    for i in -4..=4 {
        let xj = 0.25 * i as f64;
        let p = device(xj, 8);
        let cfg = MultimodeConfig { lower_modes: 3, cutoff: 60.0 * GHZ, ..Default::default() };
        let sol = solve_multimode(&p, &cfg).unwrap();
        let ground = vec![0; sol.basis_modes.len()];
        let st = sol.spectrum.state(&ground).expect("ground state labeled");
        assert_eq!(st.eigen_index, 0, "x_J/l = {xj}");
        assert!(!st.hybridized, "x_J/l = {xj}: overlap {}", st.overlap);
    }
}

#[test]
fn mirror_symmetric_observables() {
    let cfg = MultimodeConfig { lower_modes: 3, cutoff: 50.0 * GHZ, ..Default::default() };
    let a = NumericalKerr::from_levels(&solve_multimode(&device(0.4, 6), &cfg).unwrap());
    let b = NumericalKerr::from_levels(&solve_multimode(&device(-0.4, 6), &cfg).unwrap());
    for (x, y) in a.frequencies.iter().zip(&b.frequencies) {
        let (x, y) = (x.unwrap(), y.unwrap());
        assert!((x - y).abs() < 1e-6 * x);
    }
    let (x, y) = (a.alpha(1, 0, 0).unwrap(), b.alpha(1, 0, 0).unwrap());
    assert!((x - y).abs() < 10.0, "{x} vs {y}");
}

#[test]
fn two_coordinate_oracle_matches_multimode() {
    let p = device(0.0, 2);
    let mut eval = EvalConfig::new(ModelKind::Multimode);
    eval.multimode.cutoff = 250.0 * GHZ;
    eval.oracle = OracleConfig { points: Some(201), refine: false, ..Default::default() };
    let c = oracle_compare(&p, &eval, 5).unwrap();
    assert_eq!(c.coordinates, 2);
    for r in &c.rows {
        let d = r.difference.expect("multimode level present");
        assert!(d.abs() < 2e6, "level {}: {d} Hz", r.level);
    }
}
