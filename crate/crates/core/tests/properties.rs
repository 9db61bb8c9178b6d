//! Property suites: invariants of the basis operations, the spectral
//! engine, the entropy layer, and the extraction rules, checked over
//! randomized inputs.

use approx::assert_abs_diff_eq;
use entprop::series::{detect_recurrence, TimeGrid, TimeSeries};
use entprop::{
    apply_cnot, apply_pauli, build_hamiltonian, diagonal_average, eigendecompose, expectation,
    fit_velocity, microcanonical_average, mutual_information, neel_state, reduced_density_matrix,
    renyi2_entropy, run_protocol, threshold_variants, total_magnetization, von_neumann_entropy,
    EntropyBase, FitMode, ModelParams, PauliAxis, ProtocolConfig, SiteSubset, StateVector,
    Thresholds,
};
use ndarray::Array1;
use num_complex::Complex64;
use proptest::prelude::*;

/// Strategy for a normalized L-site state with uniformly drawn components.
fn arb_state(l: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1usize << l).prop_filter_map(
        "state needs nonzero norm",
        move |parts| {
            let norm_sq: f64 = parts.iter().map(|(r, i)| r * r + i * i).sum();
            if norm_sq < 1e-6 {
                return None;
            }
            let norm = norm_sq.sqrt();
            let amp = Array1::from_iter(
                parts
                    .iter()
                    .map(|&(r, i)| Complex64::new(r / norm, i / norm)),
            );
            Some(StateVector::from_amplitudes(amp, l).unwrap())
        },
    )
}

fn arb_axis() -> impl Strategy<Value = PauliAxis> {
    prop_oneof![Just(PauliAxis::X), Just(PauliAxis::Y), Just(PauliAxis::Z)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_is_norm_preserving_involution(
        (state, site) in (1usize..=5).prop_flat_map(|l| (arb_state(l), 0..l)),
        axis in arb_axis(),
    ) {
        let once = apply_pauli(&state, axis, site).unwrap();
        prop_assert!((once.norm() - 1.0).abs() <= 1e-12);
        let twice = apply_pauli(&once, axis, site).unwrap();
        for (a, b) in twice.amplitudes().iter().zip(state.amplitudes().iter()) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn cnot_is_norm_preserving_involution(
        (state, control, target) in (2usize..=5).prop_flat_map(|l| (arb_state(l), 0..l, 0..l)),
    ) {
        prop_assume!(control != target);
        let once = apply_cnot(&state, control, target).unwrap();
        prop_assert!((once.norm() - 1.0).abs() <= 1e-12);
        let twice = apply_cnot(&once, control, target).unwrap();
        for (a, b) in twice.amplitudes().iter().zip(state.amplitudes().iter()) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn hamiltonian_matches_pauli_composition(
        l in 2usize..=5,
        j in -2.0..2.0f64,
        j_nnn in -2.0..2.0f64,
        hz in -2.0..2.0f64,
        hx in -2.0..2.0f64,
        z_pick in 0usize..32,
    ) {
        let p = ModelParams { j, j_nnn: if l >= 3 { j_nnn } else { 0.0 }, hz, hx, sites: l };
        let h = build_hamiltonian(&p).unwrap();
        let z = z_pick % (1 << l);
        let mut amp = Array1::<Complex64>::zeros(1 << l);
        amp[z] = Complex64::new(1.0, 0.0);
        let e_z = StateVector::from_amplitudes(amp, l).unwrap();
        let column = h.apply(&e_z).unwrap();

        // Assemble the same column term by term from Pauli applications.
        let mut acc = Array1::<Complex64>::zeros(1 << l);
        for i in 0..l - 1 {
            let zz = apply_pauli(&apply_pauli(&e_z, PauliAxis::Z, i).unwrap(), PauliAxis::Z, i + 1).unwrap();
            acc = acc - zz.amplitudes() * Complex64::new(p.j, 0.0);
        }
        for i in 0..l.saturating_sub(2) {
            let zz = apply_pauli(&apply_pauli(&e_z, PauliAxis::Z, i).unwrap(), PauliAxis::Z, i + 2).unwrap();
            acc = acc - zz.amplitudes() * Complex64::new(p.j_nnn, 0.0);
        }
        for i in 0..l {
            acc = acc + apply_pauli(&e_z, PauliAxis::Z, i).unwrap().amplitudes() * Complex64::new(p.hz, 0.0);
            acc = acc + apply_pauli(&e_z, PauliAxis::X, i).unwrap().amplitudes() * Complex64::new(p.hx, 0.0);
        }
        for (a, b) in column.amplitudes().iter().zip(acc.iter()) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_traceless_and_diagonal_without_transverse_field(
        l in 2usize..=5,
        j in -2.0..2.0f64,
        hz in -2.0..2.0f64,
    ) {
        let p = ModelParams { j, j_nnn: 0.0, hz, hx: 0.0, sites: l };
        let h = build_hamiltonian(&p).unwrap();
        prop_assert!(h.trace().abs() <= 1e-9);
        let m = h.matrix();
        for r in 0..h.dim() {
            for c in 0..h.dim() {
                if r != c {
                    prop_assert!(m[(r, c)] == 0.0);
                }
            }
        }
    }

    #[test]
    fn entropy_bounds_and_base_change(
        (state, mask) in (2usize..=5).prop_flat_map(|l| (arb_state(l), 1u64..(1u64 << l))),
    ) {
        let l = state.sites();
        let subset = SiteSubset::from_mask(mask, l).unwrap();
        let rho = reduced_density_matrix(&state, &subset).unwrap();
        let bits = von_neumann_entropy(&rho, EntropyBase::Two).unwrap();
        let nats = von_neumann_entropy(&rho, EntropyBase::E).unwrap();
        // Pure global state: S is capped by the smaller side of the cut.
        let cap = subset.len().min(l - subset.len());
        prop_assert!(bits >= 0.0);
        prop_assert!(bits <= cap as f64 + 1e-9, "S = {bits} over cap {cap}");
        prop_assert!((nats - bits * std::f64::consts::LN_2).abs() <= 1e-12);
        let r2 = renyi2_entropy(&rho);
        prop_assert!(r2 <= bits + 1e-9, "Renyi-2 {r2} above von Neumann {bits}");
    }

    #[test]
    fn complement_symmetry_and_subadditivity(
        (state, mask) in (3usize..=5).prop_flat_map(|l| (arb_state(l), 1u64..((1u64 << l) - 1))),
    ) {
        let l = state.sites();
        let subset = SiteSubset::from_mask(mask, l).unwrap();
        let comp = subset.complement().unwrap();
        let s = von_neumann_entropy(&reduced_density_matrix(&state, &subset).unwrap(), EntropyBase::Two).unwrap();
        let sc = von_neumann_entropy(&reduced_density_matrix(&state, &comp).unwrap(), EntropyBase::Two).unwrap();
        prop_assert!((s - sc).abs() <= 1e-9, "S(A) = {s} vs S(comp) = {sc}");
        // Split the complement in two for a subadditivity probe.
        let indices = comp.site_indices();
        if indices.len() >= 2 {
            let a = SiteSubset::from_sites(&indices[..1], l).unwrap();
            let b = SiteSubset::from_sites(&indices[1..], l).unwrap();
            let mi = mutual_information(&state, &a, &b).unwrap();
            prop_assert!(mi >= 0.0);
        }
    }

    #[test]
    fn evolution_composes_and_conserves(
        t1 in 0.0..3.0f64,
        t2 in 0.0..3.0f64,
        state in arb_state(4),
    ) {
        let p = ModelParams::chaotic_ising(4);
        let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
        let a = dec.overlaps(&state).unwrap();
        let direct = dec.evolve(&a, t1 + t2);
        let first = dec.evolve(&a, t1);
        let a2 = dec.overlaps(&first).unwrap();
        let second = dec.evolve(&a2, t2);
        for (u, w) in direct.amplitudes().iter().zip(second.amplitudes().iter()) {
            prop_assert!((u - w).norm() <= 1e-10);
        }
        prop_assert!((direct.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn diagonal_average_ignores_global_phase(
        phase in 0.0..std::f64::consts::TAU,
        state in arb_state(3),
    ) {
        let p = ModelParams::extended_chaotic_ising(3);
        let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
        let full = SiteSubset::from_mask(0b111, 3).unwrap();
        let op = entprop::magnetization_operator(&full).unwrap();
        let rotated = StateVector::from_amplitudes(
            state.amplitudes() * Complex64::from_polar(1.0, phase),
            3,
        ).unwrap();
        let d1 = diagonal_average(&dec, &dec.overlaps(&state).unwrap(), &op).unwrap();
        let d2 = diagonal_average(&dec, &dec.overlaps(&rotated).unwrap(), &op).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-12);
    }

    #[test]
    fn fit_recovers_exact_lines(
        v in -5.0..5.0f64,
        c in -10.0..10.0f64,
        n in 3usize..8,
    ) {
        let pts: Vec<(f64, f64)> = (1..=n).map(|k| {
            let t = k as f64;
            (t, v * t + c)
        }).collect();
        let fit = fit_velocity(&pts, FitMode::All).unwrap();
        prop_assert!((fit.velocity - v).abs() <= 1e-9);
        prop_assert!((fit.intercept - c).abs() <= 1e-8);
        prop_assert!(fit.r_squared >= 1.0 - 1e-9);
    }
}

/// The shell grows monotonically with its half-width.
#[test]
fn microcanonical_shell_grows_with_width() {
    let p = ModelParams::chaotic_ising(5);
    let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
    let full = SiteSubset::from_mask(0b11111, 5).unwrap();
    let op = entprop::magnetization_operator(&full).unwrap();
    let e0 = expectation(&neel_state(5).unwrap(), &build_hamiltonian(&p).unwrap()).unwrap();
    let mut last = 0usize;
    for k in 0..10 {
        let d_e = 0.05 * 2f64.powi(k);
        let avg = microcanonical_average(&dec, &op, e0, d_e).unwrap();
        assert!(avg.shell_count >= last, "shell shrank as dE grew");
        last = avg.shell_count;
    }
    assert_eq!(last, dec.dim());
}

/// Norm and energy are conserved along a trajectory.
#[test]
fn norm_and_energy_conservation() {
    let p = ModelParams::chaotic_ising(6);
    let h = build_hamiltonian(&p).unwrap();
    let dec = eigendecompose(&h).unwrap();
    let psi0 = neel_state(6).unwrap();
    let a = dec.overlaps(&psi0).unwrap();
    let e0 = expectation(&psi0, &h).unwrap();
    let grid = TimeGrid::new(0.1, 3.0).unwrap();
    for state in dec.evolve_series(&a, &grid) {
        assert!((state.norm() - 1.0).abs() <= 1e-12);
        let e = expectation(&state, &h).unwrap();
        assert!(
            (e - e0).abs() <= 1e-9 * (1.0 + e0.abs()),
            "energy drifted to {e} from {e0}"
        );
    }
}

/// Saturating series are not flagged; series that dip out of the plateau
/// band or never reach it are.
#[test]
fn recurrence_detection_on_synthetic_series() {
    let dt = 0.1;
    // Monotone saturation at 3.
    let ramp: Vec<f64> = (0..=100)
        .map(|k| 3.0 * (1.0 - (-(k as f64) * dt).exp()))
        .collect();
    let r = detect_recurrence(&TimeSeries::new(dt, ramp).unwrap(), 0.05);
    assert!(r.t_enter.is_some());
    assert!(r.t_exit.is_none());
    assert!(!r.flagged);

    // Rise to 3, dip to 1.5 around t in [4, 6], return to 3.
    let dip: Vec<f64> = (0..=100)
        .map(|k| {
            let t = k as f64 * dt;
            let base = 3.0 * (t / 2.0).min(1.0);
            if (4.0..6.0).contains(&t) {
                1.5
            } else {
                base
            }
        })
        .collect();
    let r = detect_recurrence(&TimeSeries::new(dt, dip).unwrap(), 0.05);
    assert!(r.t_enter.is_some());
    assert!(r.t_exit.is_some());
    assert!(r.t_reenter.is_some());
    assert!(r.flagged);

    // A constant negative trace never reaches its own band edge.
    let r = detect_recurrence(&TimeSeries::new(dt, vec![-1.0; 50]).unwrap(), 0.05);
    assert!(r.t_enter.is_none());
    assert!(r.flagged);
}

/// Dwell gating: a blip shorter than the dwell window is not a crossing.
#[test]
fn sustained_crossing_ignores_short_blips() {
    let mut values = vec![0.0; 40];
    for v in values.iter_mut().take(13).skip(10) {
        *v = 1.0;
    }
    for v in values.iter_mut().skip(25) {
        *v = 1.0;
    }
    let s = TimeSeries::new(0.5, values).unwrap();
    let t = s.first_sustained_above(0.5, 5).unwrap();
    assert_abs_diff_eq!(t, 12.5, epsilon = 1e-12);
    assert!(s.first_sustained_above(0.5, 40).is_none());
}

/// Structural facts of a short protocol run: zero initial block entropies
/// for a Néel bulk, a probe pinned at one bit, and coincidence of the two
/// variants before their split.
#[test]
fn protocol_run_structure_at_small_size() {
    let mut cfg = ProtocolConfig::new(ModelParams::chaotic_ising(6));
    cfg.d_list = vec![2, 3];
    cfg.dt = 0.05;
    cfg.t_max = 6.0;
    let run = run_protocol(&cfg).unwrap();
    for s0 in run.probe_entropy.values() {
        assert!((s0 - 1.0).abs() <= 1e-9, "probe entropy drifted to {s0}");
    }
    for record in &run.records {
        assert_abs_diff_eq!(record.s_a.values()[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(record.s_b.values()[0], 0.0, epsilon = 1e-10);
        if let Some(t_diff) = record.t_diff {
            let guard = t_diff - cfg.thresholds.dwell as f64 * cfg.dt;
            let mut max_gap = 0.0f64;
            for k in 0..record.s_a.len() {
                if record.s_a.time(k) < guard {
                    max_gap = max_gap.max((record.s_b.values()[k] - record.s_a.values()[k]).abs());
                }
            }
            assert!(
                max_gap <= cfg.thresholds.eps_split,
                "variants differ by {max_gap} before the split"
            );
        }
    }
}

/// The sweep has nine uniquely labeled, valid settings centered on the
/// baseline.
#[test]
fn threshold_sweep_is_well_formed() {
    let base = Thresholds::default();
    let variants = threshold_variants(&base);
    assert_eq!(variants.len(), 9);
    let mut labels: Vec<&str> = variants.iter().map(|(l, _)| l.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    assert_eq!(labels.len(), 9, "labels must be unique");
    for (_, t) in &variants {
        t.validate().unwrap();
    }
}

/// Without the longitudinal field the model has a symmetry (a global spin
/// flip around x combined with reflection) that commutes with evolution,
/// maps the Néel state to itself, and reverses the sign of the total
/// magnetization, so M_z(t) vanishes identically rather than relaxing.
#[test]
fn ti_magnetization_is_identically_zero_from_neel() {
    let p = ModelParams::transverse_ising(1.05, 8);
    let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
    let a = dec.overlaps(&neel_state(8).unwrap()).unwrap();
    let all = SiteSubset::from_mask(0xFF, 8).unwrap();
    let grid = TimeGrid::new(0.5, 6.0).unwrap();
    for state in dec.evolve_series(&a, &grid) {
        let m = total_magnetization(&state, &all).unwrap();
        assert!(m.abs() <= 1e-12, "M_z(t) = {m} should vanish by symmetry");
    }
}

/// Volume law: the saturated block entropy of the extended chain grows
/// with the block size while the block stays at most half the register.
#[test]
fn eci_plateau_entropy_grows_with_block_size() {
    let mut cfg = ProtocolConfig::new(ModelParams::extended_chaotic_ising(8));
    cfg.d_list = vec![1, 2, 3, 4];
    cfg.dt = 0.05;
    cfg.t_max = 8.0;
    let run = run_protocol(&cfg).unwrap();
    let plateaus: Vec<f64> = run.records.iter().map(|r| r.s_a.plateau()).collect();
    for pair in plateaus.windows(2) {
        assert!(
            pair[1] >= pair[0] - 1e-9,
            "plateau entropies {plateaus:?} must be non-decreasing in d"
        );
    }
}
