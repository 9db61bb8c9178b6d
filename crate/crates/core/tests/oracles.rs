//! Numerical oracles: independently derived reference values and
//! brute-force reimplementations that pin down the engine's conventions.

use approx::assert_abs_diff_eq;
use entprop::basis::neel_bits;
use entprop::series::TimeGrid;
use entprop::{
    build_hamiltonian, eigendecompose, neel_state, product_state, reduced_density_matrix,
    run_protocol, ti_vmax, ti_vmax_numeric, total_magnetization, ModelParams, ProtocolConfig,
    SiteSubset, StateVector,
};
use entprop::{von_neumann_entropy, EntropyBase};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Spectral evolution of a single spin in a transverse field against the
/// closed form exp(-i h_x t sigma_x)|0> = cos(h_x t)|0> - i sin(h_x t)|1>.
/// The cosines are frozen reference values evaluated independently.
#[test]
fn single_spin_evolution_matches_closed_form() {
    let hx = 1.4;
    let p = ModelParams {
        j: 0.0,
        j_nnn: 0.0,
        hz: 0.0,
        hx,
        sites: 1,
    };
    let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
    let a = dec.overlaps(&product_state(0, 1).unwrap()).unwrap();
    // (t, cos(h_x t), sign of sin(h_x t)).
    let frozen = [
        (0.3, 0.913_088_940_312_308_3, 1.0),
        (1.1, 0.030_791_459_082_466_16, 1.0),
        (2.4, -0.976_243_775_672_409_9, -1.0),
    ];
    for (t, cos, sin_sign) in frozen {
        let psi = dec.evolve(&a, t);
        let amp = psi.amplitudes();
        let sin = sin_sign * (1.0f64 - cos * cos).sqrt();
        assert_abs_diff_eq!(amp[0].re, cos, epsilon = 1e-12);
        assert_abs_diff_eq!(amp[0].im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(amp[1].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(amp[1].im, -sin, epsilon = 1e-12);
    }
}

fn random_state(l: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let dim = 1usize << l;
    let mut amp = Array1::<Complex64>::zeros(dim);
    for z in 0..dim {
        amp[z] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amp.mapv(|z| z / norm), l).unwrap()
}

/// Index-summation partial trace: an explicit double loop over the full
/// register, matching configurations on the complement sites.
fn brute_force_rdm(v: &StateVector, mask: u64) -> Array2<Complex64> {
    let l = v.sites();
    let kept: Vec<usize> = (0..l).filter(|i| mask >> i & 1 == 1).collect();
    let comp_mask = !mask & ((1u64 << l) - 1);
    let gather = |z: usize| -> usize {
        kept.iter()
            .enumerate()
            .fold(0, |acc, (j, &p)| acc | (((z >> p) & 1) << j))
    };
    let dim = 1usize << l;
    let amp = v.amplitudes();
    let mut rho = Array2::<Complex64>::zeros((1 << kept.len(), 1 << kept.len()));
    for z in 0..dim {
        for w in 0..dim {
            if (z as u64 & comp_mask) == (w as u64 & comp_mask) {
                rho[(gather(z), gather(w))] += amp[z] * amp[w].conj();
            }
        }
    }
    rho
}

/// Scatter-table partial trace equals the brute-force oracle on every
/// subset of every register up to four sites, over 100+ random states.
#[test]
fn partial_trace_matches_brute_force_oracle() {
    for l in 1..=4usize {
        let mut rng = ChaCha8Rng::seed_from_u64(0xE17A + l as u64);
        for _ in 0..30 {
            let v = random_state(l, &mut rng);
            for mask in 1..(1u64 << l) {
                let subset = SiteSubset::from_mask(mask, l).unwrap();
                let rho = reduced_density_matrix(&v, &subset).unwrap();
                let oracle = brute_force_rdm(&v, mask);
                for r in 0..rho.dim() {
                    for c in 0..rho.dim() {
                        let defect = (rho.elem()[(r, c)] - oracle[(r, c)]).norm();
                        assert!(
                            defect <= 1e-12,
                            "L = {l}, mask = {mask:#b}, element ({r}, {c}) off by {defect:.3e}"
                        );
                    }
                }
            }
        }
    }
}

/// The diagonal-ensemble average agrees with the trapezoidal long-time
/// average of <M_z(t)> over T = 200 within 0.05 for the chaotic chain.
#[test]
fn diagonal_average_matches_long_time_average() {
    let p = ModelParams::chaotic_ising(8);
    let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
    let psi0 = neel_state(8).unwrap();
    let a = dec.overlaps(&psi0).unwrap();
    let full = SiteSubset::from_mask(0xFF, 8).unwrap();
    let op = entprop::magnetization_operator(&full).unwrap();
    let diag = entprop::diagonal_average(&dec, &a, &op).unwrap();

    let dt = 0.02;
    let grid = TimeGrid::new(dt, 200.0).unwrap();
    let states = dec.evolve_series(&a, &grid);
    let vals: Vec<f64> = states
        .iter()
        .map(|s| total_magnetization(s, &full).unwrap())
        .collect();
    let trapezoid: f64 = dt * (vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[vals.len() - 1]));
    let long_time = trapezoid / (dt * (vals.len() - 1) as f64);
    assert!(
        (diag - long_time).abs() <= 0.05,
        "diagonal {diag:.6} vs long-time {long_time:.6}"
    );
}

/// Numeric maximization of the group velocity reproduces the closed form
/// on both sides of the critical field.
#[test]
fn numeric_group_velocity_matches_closed_form() {
    for hx in [0.0, 0.4, 0.5, 0.8, 1.0, 1.25, 1.5, 2.0] {
        let gap = (ti_vmax_numeric(hx) - ti_vmax(hx)).abs();
        assert!(gap <= 1e-6, "h_x = {hx}: numeric off by {gap:.3e}");
    }
}

/// The variant-(a) entropy series of the probe-extended register equals the
/// plain N-site simulation of the same block: the probe is inert.
#[test]
fn variant_a_matches_bulk_only_simulation() {
    let n = 8;
    let p = ModelParams::chaotic_ising(n);
    let mut cfg = ProtocolConfig::new(p);
    cfg.d_list = vec![2, 3];
    cfg.dt = 0.05;
    cfg.t_max = 4.0;
    let run = run_protocol(&cfg).unwrap();

    let dec = eigendecompose(&build_hamiltonian(&p).unwrap()).unwrap();
    let a = dec.overlaps(&neel_state(n).unwrap()).unwrap();
    let grid = TimeGrid::new(cfg.dt, cfg.t_max).unwrap();
    let states = dec.evolve_series(&a, &grid);
    for record in &run.records {
        let block = SiteSubset::last(record.d, n).unwrap();
        for (k, state) in states.iter().enumerate() {
            let s = von_neumann_entropy(
                &reduced_density_matrix(state, &block).unwrap(),
                EntropyBase::Two,
            )
            .unwrap();
            let gap = (s - record.s_a.values()[k]).abs();
            assert!(
                gap <= 1e-9,
                "d = {}, sample {k}: bulk-only {s:.12} vs variant a {:.12}",
                record.d,
                record.s_a.values()[k]
            );
        }
    }
}

/// Néel-state conventions: site 0 up, alternating, odd sites down.
#[test]
fn neel_bit_pattern_alternates() {
    assert_eq!(neel_bits(4), 0b1010);
    assert_eq!(neel_bits(5), 0b01010);
    let v = neel_state(4).unwrap();
    assert_abs_diff_eq!(v.amplitudes()[0b1010].re, 1.0, epsilon = 1e-15);
    let full = SiteSubset::from_mask(0b1111, 4).unwrap();
    assert_abs_diff_eq!(
        total_magnetization(&v, &full).unwrap(),
        0.0,
        epsilon = 1e-14
    );
}
