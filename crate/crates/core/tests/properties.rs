//! Invariants over randomized parameters.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use giantbic_core::quadrature::{integrate, principal_value};
use giantbic_core::spectrum::{self_energy_integral, BandSide};
use giantbic_core::{
    bic_condition, boc_energies, build_hamiltonian, classify_states, detect_peaks, diagonalize,
    dispersion, evolve, fft_spectrum, m_integral, momentum_profile, resonant_momentum,
    ClassifyOptions, Complex64, InitialState, Lattice, SystemParams, TimeGrid,
};

fn params(omega: f64, g: f64, n: usize, phi: f64) -> SystemParams {
    SystemParams::new(omega, 0.0, 1.0, g, n, phi).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Δ + 2ξ cos q written as a product so it stays accurate near ±K.
fn pole_free_denominator(q: f64, k: f64, hopping: f64) -> f64 {
    -4.0 * hopping * ((q + k) / 2.0).sin() * ((q - k) / 2.0).sin()
}

fn m_by_quadrature(p: &SystemParams) -> f64 {
    let k = resonant_momentum(p).unwrap();
    let n = p.leg_separation as f64;
    principal_value(
        |q| (1.0 + (q * n + p.phase).cos()) / pole_free_denominator(q, k, p.hopping),
        -PI,
        PI,
        &[-k, k],
        1e-13,
    )
    .value
}

/// Parameters on the BIC manifold: K = mπ/N and φ = π − KN.
fn bic_point(n: usize, m: usize, g: f64) -> SystemParams {
    let k = m as f64 * PI / n as f64;
    let phi = (PI - k * n as f64).rem_euclid(2.0 * PI);
    params(-2.0 * k.cos(), g, n, phi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_hermitian_with_two_legs(
        omega in -3.0..3.0f64,
        g in 0.01..2.0f64,
        n in 1usize..12,
        phi in -7.0..7.0f64,
        extra in 0usize..40,
    ) {
        let p = params(omega, g, n, phi);
        let lattice = Lattice::centered(n + 8 + extra, n).unwrap();
        let dense = build_hamiltonian(&p, &lattice).unwrap().to_dense();
        let dim = dense.nrows();
        let mut off_diagonal = 0;
        let mut atom_entries = 0;
        for i in 0..dim {
            for j in 0..dim {
                prop_assert_eq!(dense[(i, j)], dense[(j, i)].conj());
                if i != j && dense[(i, j)] != Complex64::new(0.0, 0.0) {
                    off_diagonal += 1;
                    if i == 0 || j == 0 {
                        atom_entries += 1;
                    }
                }
            }
        }
        prop_assert_eq!(atom_entries, 4);
        prop_assert_eq!(off_diagonal, 2 * (lattice.total_sites - 1) + 4);
    }

    #[test]
    fn phase_is_two_pi_periodic(
        omega in -3.0..3.0f64,
        g in 0.01..2.0f64,
        n in 1usize..12,
        phi in -PI..PI,
    ) {
        let lattice = Lattice::centered(n + 20, n).unwrap();
        let a = build_hamiltonian(&params(omega, g, n, phi), &lattice).unwrap().to_dense();
        let b = build_hamiltonian(&params(omega, g, n, phi + 2.0 * PI), &lattice)
            .unwrap()
            .to_dense();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                prop_assert!((a[(i, j)] - b[(i, j)]).norm() <= 1e-14 * g.max(1.0));
            }
        }
    }

    #[test]
    fn resonant_momentum_lies_on_the_dispersion(
        omega in -1.999..1.999f64,
        cavity in -1.0..1.0f64,
        hopping in 0.2..3.0f64,
    ) {
        let p = SystemParams::new(cavity + omega * hopping, cavity, hopping, 0.1, 3, 0.0).unwrap();
        let k = resonant_momentum(&p).unwrap();
        prop_assert!(k > 0.0 && k < PI);
        prop_assert!((dispersion(k, &p) - p.omega_atom).abs() <= 1e-12 * hopping.max(1.0));
    }

    #[test]
    fn fft_satisfies_parseval(seed in any::<u64>(), len in 256usize..1500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let series: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = series.iter().sum::<f64>() / len as f64;
        let direct: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
        let spectrum = fft_spectrum(&series, 0.05).unwrap();
        prop_assert!((spectrum.parseval_energy() - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn single_tone_is_found_within_one_bin(bin in 5.0..900.0f64, amplitude in 0.01..10.0f64) {
        let dt = 0.05;
        let n = 2048;
        let resolution = 2.0 * PI / (n as f64 * dt);
        let omega = bin * resolution;
        let series: Vec<f64> = (0..n).map(|k| amplitude * (omega * k as f64 * dt).cos()).collect();
        let report = detect_peaks(&fft_spectrum(&series, dt).unwrap(), 0.05).unwrap();
        let top = report.peaks.first().expect("a peak");
        prop_assert!((top.frequency - omega).abs() <= resolution);
    }

    #[test]
    fn m_closed_form_matches_principal_value(
        k in 0.15..(PI - 0.15),
        n in 1usize..16,
        phi in -PI..PI,
    ) {
        let p = params(-2.0 * k.cos(), 0.1, n, phi);
        let closed = m_integral(&p).unwrap();
        let quad = m_by_quadrature(&p);
        prop_assert!((closed - quad).abs() <= 1e-9, "closed {} vs quadrature {}", closed, quad);
    }

    #[test]
    fn self_energy_matches_quadrature(
        eps in 2.05..8.0f64,
        below in any::<bool>(),
        n in 1usize..24,
        phi in 0.0..(2.0 * PI),
    ) {
        let eps = if below { -eps } else { eps };
        let p = params(0.0, 0.1, n, phi);
        let closed = self_energy_integral(&p, eps).unwrap();
        let quad = integrate(
            |k| (1.0 + (k * n as f64 + phi).cos()) / (eps + 2.0 * k.cos()),
            -PI,
            PI,
            0.0,
            1e-13,
        )
        .value;
        prop_assert!((closed - quad).abs() <= 1e-9 * quad.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_scales_with_the_energy_unit(
        omega in -3.0..3.0f64,
        g in 0.05..1.5f64,
        n in 1usize..8,
        phi in -PI..PI,
        scale in 0.1..10.0f64,
        shift in -5.0..5.0f64,
    ) {
        let lattice = Lattice::centered(61, n).unwrap();
        let base = params(omega, g, n, phi);
        let scaled = SystemParams::new(
            scale * omega + shift, shift, scale, scale * g, n, phi,
        ).unwrap();
        let a = diagonalize(&build_hamiltonian(&base, &lattice).unwrap()).unwrap();
        let b = diagonalize(&build_hamiltonian(&scaled, &lattice).unwrap()).unwrap();
        for (ea, eb) in a.energies().iter().zip(b.energies()) {
            prop_assert!((scale * ea + shift - eb).abs() <= 1e-11 * scale.max(1.0) * (1.0 + shift.abs()));
        }
    }

    #[test]
    fn diagonalization_is_deterministic(
        omega in -3.0..3.0f64,
        g in 0.05..1.5f64,
        n in 1usize..8,
        phi in -PI..PI,
    ) {
        let lattice = Lattice::centered(51, n).unwrap();
        let h = build_hamiltonian(&params(omega, g, n, phi), &lattice).unwrap();
        let a = diagonalize(&h).unwrap();
        let b = diagonalize(&h).unwrap();
        prop_assert_eq!(a.energies(), b.energies());
        prop_assert!(a.states() == b.states());
    }

    #[test]
    fn bic_manifold_is_detected(
        n in 2usize..12,
        m_frac in 0.0..1.0f64,
        g in 0.05..1.0f64,
        detune in 1e-3..PI,
    ) {
        let m = 1 + ((n - 1) as f64 * m_frac) as usize % (n - 1);
        let p = bic_point(n, m, g);
        let check = bic_condition(&p).unwrap();
        prop_assert!(check.holds && check.compact_support());
        prop_assert!(m_integral(&p).unwrap().abs() <= 1e-9);
        prop_assert!(!bic_condition(&p.with_phase(p.phase + detune)).unwrap().holds);

        let lattice = Lattice::centered(4 * n + 81, n).unwrap();
        let decomp = diagonalize(&build_hamiltonian(&p, &lattice).unwrap()).unwrap();
        let nearest = decomp
            .energies()
            .iter()
            .map(|e| (e - p.omega_atom).abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(nearest <= 1e-10);
        let bound = classify_states(&decomp, &ClassifyOptions::default()).unwrap();
        let bic = bound.bic.expect("BIC classified");
        prop_assert!((bic.energy - p.omega_atom).abs() <= 1e-10);
    }

    #[test]
    fn eigenbasis_is_complete(
        omega in -3.0..3.0f64,
        g in 0.05..1.5f64,
        n in 1usize..8,
        phi in -PI..PI,
        seed in any::<u64>(),
    ) {
        let lattice = Lattice::centered(71, n).unwrap();
        let decomp = diagonalize(&build_hamiltonian(&params(omega, g, n, phi), &lattice).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, decomp.dimension());
        let total: f64 = decomp.coefficients(&psi).iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn evolution_conserves_norm(
        omega in -3.0..3.0f64,
        g in 0.05..1.5f64,
        n in 1usize..8,
        phi in -PI..PI,
    ) {
        let lattice = Lattice::centered(81, n).unwrap();
        let decomp = diagonalize(&build_hamiltonian(&params(omega, g, n, phi), &lattice).unwrap()).unwrap();
        let grid = TimeGrid::new(0.1, 60.0).unwrap();
        let sites: Vec<isize> = (0..=n as isize).collect();
        let traj = evolve(&decomp, &InitialState::ExcitedAtom, &grid, &sites).unwrap();
        prop_assert!(traj.max_norm_error() <= 1e-10);
        let e0 = traj.energy[0];
        prop_assert!(traj.energy.iter().all(|e| (e - e0).abs() <= 1e-10 * (1.0 + e0.abs())));
    }
}

#[test]
fn momentum_profile_is_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n_c = rng.gen_range(16..300);
        let lattice = Lattice::centered(n_c, 3).unwrap();
        let psi = random_state(&mut rng, n_c + 1);
        let photon: f64 = psi[1..].iter().map(|z| z.norm_sqr()).sum();
        let profile = momentum_profile(&psi, &lattice);
        let total: f64 = profile.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        assert!((total - photon).abs() <= 1e-12, "{total} vs {photon}");
        assert!(profile.momenta.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn bic_momentum_profile_peaks_at_resonance() {
    let p = params(-1.0, 0.1, 6, PI);
    let lattice = Lattice::centered(401, 6).unwrap();
    let decomp = diagonalize(&build_hamiltonian(&p, &lattice).unwrap()).unwrap();
    let bound = classify_states(&decomp, &ClassifyOptions::default()).unwrap();
    let bic = bound.bic.expect("BIC");
    let profile = momentum_profile(&bic.state, &lattice);
    let (k_peak, _) = profile
        .momenta
        .iter()
        .zip(&profile.amplitudes)
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .unwrap();
    let k = resonant_momentum(&p).unwrap();
    assert!((k_peak.abs() - k).abs() <= 0.2, "peak at {k_peak}, K = {k}");
}

#[test]
fn tone_in_noise_is_resolved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let dt = 0.05;
    let n = 4096;
    let resolution = 2.0 * PI / (n as f64 * dt);
    for _ in 0..10 {
        let omega = rng.gen_range(20.0..400.0) * resolution;
        let series: Vec<f64> = (0..n)
            .map(|k| (omega * k as f64 * dt).cos() + noise.sample(&mut rng))
            .collect();
        let report = detect_peaks(&fft_spectrum(&series, dt).unwrap(), 0.5).unwrap();
        let top = report.peaks.first().expect("tone");
        assert!((top.frequency - omega).abs() <= resolution);
    }
}

#[test]
fn weak_coupling_roots_approach_the_band_edges() {
    let mut previous = (f64::INFINITY, f64::INFINITY);
    for g in [0.4, 0.2, 0.1, 0.05] {
        let roots = boc_energies(&params(-1.0, g, 6, 0.0)).unwrap();
        let lower = roots.iter().find(|r| r.side == BandSide::Lower).expect("lower root");
        let upper = roots.iter().find(|r| r.side == BandSide::Upper).expect("upper root");
        let gaps = (-2.0 - lower.energy, upper.energy - 2.0);
        assert!(gaps.0 > 0.0 && gaps.1 > 0.0);
        assert!(gaps.0 < previous.0 && gaps.1 < previous.1, "g = {g}: {gaps:?}");
        previous = gaps;
    }
    assert!(previous.0 < 1e-3 && previous.1 < 1e-3, "{previous:?}");
}

#[test]
fn resonant_atom_has_mirror_symmetric_roots() {
    for g in [0.3, 0.6] {
        for n in [2, 4, 6] {
            let roots = boc_energies(&params(0.0, g, n, 0.0)).unwrap();
            assert_eq!(roots.len(), 2);
            let sum: f64 = roots.iter().map(|r| r.energy).sum();
            assert!(sum.abs() <= 1e-10, "g = {g}, N = {n}: E_L + E_U = {sum:e}");
        }
    }
}

#[test]
fn boc_roots_match_eigenvalues_on_random_draws() {
    let n_c = 2001;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    for _ in 0..20 {
        let omega = rng.gen_range(-1.9..1.9);
        let g = rng.gen_range(0.2..=0.5);
        let n = rng.gen_range(1..=10);
        let phi = rng.gen_range(-PI..PI);
        let p = params(omega, g, n, phi);
        let lattice = Lattice::centered(n_c, n).unwrap();
        let margin = lattice.margin(n) as f64;
        let energies = diagonalize(&build_hamiltonian(&p, &lattice).unwrap()).unwrap();
        let energies = energies.energies();
        for root in boc_energies(&p).unwrap() {
            // roots hugging the band edge are not resolved by a finite chain
            if root.decay_constant * margin < 20.0 {
                continue;
            }
            let numeric = match root.side {
                BandSide::Lower => energies[0],
                BandSide::Upper => energies[energies.len() - 1],
            };
            assert!(
                (numeric - root.energy).abs() <= 1e-6,
                "Omega = {omega}, g = {g}, N = {n}, phi = {phi}: {} vs {numeric}",
                root.energy
            );
            compared += 1;
        }
    }
    assert!(compared >= 20, "only {compared} roots compared");
}
