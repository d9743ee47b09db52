//! Protocol-level properties exercised through the full pipeline,
//! including the costlier full-model runs.

use cavsim_core::hamiltonian::PhysicalParams;
use cavsim_core::oracle::Variant;
use cavsim_core::propagator::{populations, Selector};
use cavsim_core::protocol::{compare_models, run_protocol, Model, ProtocolConfig};
use cavsim_core::space::AtomLevel;

fn config(variant: Variant, model: Model) -> ProtocolConfig {
    let mut c = ProtocolConfig::new(variant, model, PhysicalParams::default()).unwrap();
    c.sample_count = 150;
    c
}

/// No run ever populates the two-photon sector: the excitation charge caps
/// the photon number at one, in both models and variants, with and without
/// decay.
#[test]
fn two_photon_sector_stays_empty_at_nmax_2() {
    for variant in [Variant::Qubit, Variant::Qutrit] {
        for model in [Model::Effective, Model::Full] {
            for kappa in [0.0, 0.05] {
                let mut c = config(variant, model);
                c.params.kappa = kappa;
                let r = run_protocol(&c).unwrap();
                assert!(
                    r.multi_photon_max < 1e-10,
                    "{variant}/{model} kappa={kappa}: two-photon population {}",
                    r.multi_photon_max
                );
            }
        }
    }
}

/// Atom B sits exactly in g0 until stage B starts, in the full model too.
#[test]
fn handoff_leaves_atom_b_untouched() {
    for model in [Model::Effective, Model::Full] {
        let r = run_protocol(&config(Variant::Qutrit, model)).unwrap();
        let space = r.final_state.space();
        let after_a = r.stage_a_trajectory.final_state();
        let stray: f64 = space
            .labels()
            .filter(|l| l.atom_b != AtomLevel::G0)
            .map(|l| after_a.population(&l).unwrap())
            .sum();
        assert!(stray < 1e-12, "{model}: atom B population {stray} before stage B");
    }
}

/// Decay-free determinism in the full model: unit success probability and
/// a final state close to the target (up to adiabatic-elimination error).
#[test]
fn full_model_endpoints_frozen() {
    // conditional fidelities measured by brute force at delta = 10:
    // qubit 0.926, qutrit 0.909
    let r = run_protocol(&config(Variant::Qubit, Model::Full)).unwrap();
    assert!((r.success_probability - 1.0).abs() < 1e-8);
    assert!(
        r.fidelity_conditional > 0.92 && r.fidelity_conditional < 0.94,
        "qubit full-model fidelity {}",
        r.fidelity_conditional
    );
    let r = run_protocol(&config(Variant::Qutrit, Model::Full)).unwrap();
    assert!((r.success_probability - 1.0).abs() < 1e-8);
    assert!(
        r.fidelity_conditional > 0.89 && r.fidelity_conditional < 0.93,
        "qutrit full-model fidelity {}",
        r.fidelity_conditional
    );
}

/// Qutrit comparison numbers frozen from brute force at delta = 10:
/// population deviation 0.217 (dominated by the drive transient,
/// omega_a = (1+sqrt(3)) g), excited-state maximum 0.217.
#[test]
fn qutrit_model_comparison_frozen() {
    let cmp = compare_models(Variant::Qutrit, &PhysicalParams::default(), 1, 150, 1e-9).unwrap();
    assert!(
        cmp.max_population_deviation > 0.17 && cmp.max_population_deviation < 0.26,
        "deviation {}",
        cmp.max_population_deviation
    );
    assert!(
        cmp.max_excited_population > 0.17 && cmp.max_excited_population < 0.26,
        "excited population {}",
        cmp.max_excited_population
    );
    assert!(
        cmp.final_state_fidelity > 0.89,
        "model fidelity {}",
        cmp.final_state_fidelity
    );
}

/// Photon bookkeeping across the whole protocol (effective model, no
/// decay): the photon probability peaks at the hand-off value and returns
/// to zero.
#[test]
fn photon_appears_then_disappears() {
    for (variant, peak) in [(Variant::Qubit, 1.0), (Variant::Qutrit, 2.0 / 3.0)] {
        let r = run_protocol(&config(variant, Model::Effective)).unwrap();
        let a = populations(&r.stage_a_trajectory, &[Selector::Photon]).unwrap();
        let b = populations(&r.stage_b_trajectory, &[Selector::Photon]).unwrap();
        assert!((a[0].last().unwrap() - peak).abs() < 1e-6, "{variant} hand-off photon");
        assert!((b[0].first().unwrap() - peak).abs() < 1e-6, "{variant} stage-B start");
        assert!(b[0].last().unwrap().abs() < 1e-6, "{variant} final photon");
    }
}

/// A sweep over kappa with the full model stays consistent with the
/// effective model at the operating point (success probabilities agree to
/// the adiabatic-elimination error).
#[test]
fn models_agree_on_success_probability_under_decay() {
    let kappa = 2.6 / 750.0;
    let mut p = Vec::new();
    for model in [Model::Effective, Model::Full] {
        let mut c = config(Variant::Qubit, model);
        c.params.kappa = kappa;
        p.push(run_protocol(&c).unwrap().success_probability);
    }
    assert!(
        (p[0] - p[1]).abs() < 0.01,
        "success probabilities diverge: effective {} vs full {}",
        p[0],
        p[1]
    );
}
