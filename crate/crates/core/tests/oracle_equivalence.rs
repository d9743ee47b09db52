//! The analytic closed forms and the numerical propagators must reach the
//! same amplitudes along independent routes, and the full time-dependent
//! model must converge to the effective one as the detuning grows.

use cavsim_core::hamiltonian::{
    stage_a_effective, stage_a_rotating, stage_b_effective, PhysicalParams,
};
use cavsim_core::oracle::{stage_a_coeffs, Variant};
use cavsim_core::propagator::{evolve_timedep, populations, Selector};
use cavsim_core::protocol::compare_models;
use cavsim_core::space::{build_space, AtomLevel, BasisLabel};
use cavsim_core::verify::{stage_a_equivalence_with, stage_b_equivalence_with};

#[test]
fn closed_forms_match_propagator_on_random_draws() {
    let dev = stage_a_equivalence_with(|s, p| stage_a_effective(s, p), 100, 2024).unwrap();
    assert!(dev < 1e-8, "stage A deviation {dev}");
    for variant in [Variant::Qubit, Variant::Qutrit] {
        let dev =
            stage_b_equivalence_with(|s, p| stage_b_effective(s, p), variant, 100, 2025).unwrap();
        assert!(dev < 1e-8, "stage B ({variant}) deviation {dev}");
    }
}

/// Full stage-A model, qubit drive, delta = 10: after t1 the driven branch
/// is empty up to the adiabatic-elimination error.
#[test]
fn full_model_empties_driven_branch_at_t1() {
    let space = build_space(1).unwrap();
    let params = PhysicalParams::default();
    let rot = stage_a_rotating(space, &params).unwrap();
    let start = space
        .basis_state(&BasisLabel::new(AtomLevel::GA, AtomLevel::G0, 0, 0))
        .unwrap();
    let t1 = 2.5 * std::f64::consts::PI;
    let traj = evolve_timedep(&rot, &start, t1, 50, 1e-10).unwrap();
    let p_ga = traj
        .final_state()
        .population(&BasisLabel::new(AtomLevel::GA, AtomLevel::G0, 0, 0))
        .unwrap();
    // the closed form gives exactly zero; the full model leaks O(g/delta)
    let exact = stage_a_coeffs(1.0, 2.0_f64.sqrt(), 10.0, t1)
        .unwrap()
        .c1
        .norm_sqr();
    assert!(exact < 1e-20);
    assert!(p_ga < 0.05, "driven branch population {p_ga}");
}

/// The full/effective population deviation shrinks as delta^-2; measured
/// at delta = 10 and 50, and extrapolated four decades out.
#[test]
fn deviation_scales_quadratically_with_detuning() {
    let mut devs = Vec::new();
    for delta in [10.0, 50.0] {
        let params = PhysicalParams { delta, ..Default::default() };
        let cmp = compare_models(Variant::Qubit, &params, 1, 150, 1e-9).unwrap();
        devs.push(cmp.max_population_deviation);
    }
    // frozen from brute-force runs: 0.107 at delta=10, 0.0042 at delta=50
    assert!(devs[0] > 0.08 && devs[0] < 0.12, "delta=10 deviation {}", devs[0]);
    assert!(devs[1] < 0.006, "delta=50 deviation {}", devs[1]);
    // at least linear shrink (measured: quadratic)
    assert!(devs[1] <= devs[0] / 5.0 * 1.5);
    // quadratic extrapolation to delta = 1e4 lands far below 1e-3
    let extrapolated = devs[0] * (10.0 / 1e4) * (10.0 / 1e4);
    assert!(extrapolated < 1e-3);
}

/// Excited-state population in the full model stays at the measured
/// transient scale and falls off quadratically in the detuning.
#[test]
fn excited_population_shrinks_with_detuning() {
    let mut maxima = Vec::new();
    for delta in [10.0, 50.0] {
        let params = PhysicalParams { delta, ..Default::default() };
        let cmp = compare_models(Variant::Qubit, &params, 1, 150, 1e-9).unwrap();
        maxima.push(cmp.max_excited_population);
    }
    assert!(maxima[0] > 0.08 && maxima[0] < 0.12, "delta=10 excited max {}", maxima[0]);
    assert!(maxima[1] < maxima[0] / 10.0, "delta=50 excited max {}", maxima[1]);
}

/// The effective model agrees with itself across sampling densities: the
/// trajectory endpoint must not depend on the sample grid.
#[test]
fn endpoint_independent_of_sampling() {
    let space = build_space(2).unwrap();
    let params = PhysicalParams::default();
    let h = stage_a_effective(space, &params).unwrap();
    let start = space
        .basis_state(&BasisLabel::new(AtomLevel::GA, AtomLevel::G0, 0, 0))
        .unwrap();
    let t1 = 2.5 * std::f64::consts::PI;
    let coarse = cavsim_core::propagator::sample_constant(&h, &start, t1, 7).unwrap();
    let fine = cavsim_core::propagator::sample_constant(&h, &start, t1, 401).unwrap();
    let dev = coarse
        .final_state()
        .amplitudes()
        .iter()
        .zip(fine.final_state().amplitudes().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(dev < 1e-11, "endpoint drifted across sampling: {dev}");
    // and the photon curve endpoint matches the closed form (qubit: 1)
    let pp = populations(&fine, &[Selector::Photon]).unwrap();
    assert!((pp[0].last().unwrap() - 1.0).abs() < 1e-9);
}
