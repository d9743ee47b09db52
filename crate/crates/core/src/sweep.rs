//! Parameter sweeps and the effective-parameter/cooperativity calculator.
//!
//! A sweep reruns the protocol over a uniform grid of one parameter and
//! tabulates per-stage success probabilities and conditional fidelities
//! (the decay-free endpoint of a kappa sweep reproduces the ideal run).
//! Grid points are independent and evaluated in parallel; rows are merged
//! back in index order, so output is deterministic.

use rayon::prelude::*;

use crate::hamiltonian::PhysicalParams;
use crate::oracle::schedule;
use crate::protocol::{run_protocol, ProtocolConfig, SimResult};
use crate::{Result, SimError};

/// Which knob a sweep turns.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    /// Cavity decay rate; the schedule is unchanged.
    Kappa,
    /// Detuning; stage durations are re-derived per point.
    Delta,
    /// Photon truncation (values are rounded to the nearest integer).
    NMax,
    /// Hand-off delay between the stages.
    Delay,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepParameter::Kappa => write!(f, "kappa"),
            SweepParameter::Delta => write!(f, "delta"),
            SweepParameter::NMax => write!(f, "n_max"),
            SweepParameter::Delay => write!(f, "delay"),
        }
    }
}

/// A one-dimensional sweep specification.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub base: ProtocolConfig,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.min > self.max {
            return Err(SimError::InvalidRequest(format!(
                "sweep range is empty: min {} > max {}",
                self.min, self.max
            )));
        }
        if self.steps < 2 {
            return Err(SimError::InvalidRequest(format!(
                "sweep needs at least 2 steps (got {})",
                self.steps
            )));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
            .collect()
    }

    /// Base config with the swept parameter applied.
    fn config_at(&self, value: f64) -> Result<ProtocolConfig> {
        let mut config = self.base.clone();
        match self.parameter {
            SweepParameter::Kappa => {
                config.params.kappa = value;
            }
            SweepParameter::Delta => {
                config.params.delta = value;
                if !config.schedule.overridden {
                    config.schedule = schedule(config.variant, &config.params)?;
                }
            }
            SweepParameter::NMax => {
                let rounded = value.round();
                if rounded < 1.0 {
                    return Err(SimError::TruncationTooSmall);
                }
                config.n_max = rounded as usize;
            }
            SweepParameter::Delay => {
                if value < 0.0 {
                    return Err(SimError::InvalidRequest(format!(
                        "delay must be nonnegative (got {value})"
                    )));
                }
                config.schedule.delay = value;
            }
        }
        Ok(config)
    }
}

/// Scores extracted from one sweep grid point.
#[derive(Copy, Clone, Debug)]
pub struct SweepScores {
    /// Success probability at the end of stage A.
    pub p_a: f64,
    /// Conditional fidelity against the stage-A target.
    pub f_a: f64,
    /// End-to-end success probability.
    pub p_b: f64,
    /// End-to-end conditional fidelity.
    pub f_b: f64,
}

impl From<&SimResult> for SweepScores {
    fn from(r: &SimResult) -> Self {
        SweepScores {
            p_a: r.stage_a.success_probability,
            f_a: r.stage_a.fidelity_conditional,
            p_b: r.success_probability,
            f_b: r.fidelity_conditional,
        }
    }
}

/// One sweep row; point failures are carried per-row instead of aborting
/// the sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: std::result::Result<SweepScores, String>,
}

/// Run the sweep. Rows come back ordered by parameter value regardless of
/// the parallel execution order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = spec.grid();
    Ok(grid
        .par_iter()
        .map(|&value| {
            let outcome = spec
                .config_at(value)
                .and_then(|config| run_protocol(&config))
                .map(|r| SweepScores::from(&r))
                .map_err(|e| e.to_string());
            SweepRow { value, outcome }
        })
        .collect())
}

/// The adiabatic-elimination figures of merit for a parameter set.
#[derive(Copy, Clone, Debug)]
pub struct EffectiveDiagnostics {
    /// Effective Raman coupling `omega_a * g_a / delta`.
    pub omega_eff: f64,
    /// Effective atomic decay `omega_a^2 * gamma / delta^2`.
    pub gamma_eff: f64,
    /// Cooperativity `g_a^2 / (kappa * gamma)`; infinite when either rate
    /// vanishes.
    pub cooperativity: f64,
    /// True when `omega_eff >= 10 * gamma_eff` and `omega_eff >= 10 * kappa`
    /// (the operational reading of "much greater than").
    pub strong_coupling_ok: bool,
}

/// Compute the effective-coupling diagnostics from the stage-A drive and
/// coupling.
pub fn effective_params(params: &PhysicalParams) -> Result<EffectiveDiagnostics> {
    if !(params.delta > 0.0) {
        return Err(SimError::InvalidParams(format!(
            "delta must be > 0 (got {})",
            params.delta
        )));
    }
    let omega_eff = params.omega_a * params.g_a / params.delta;
    let gamma_eff = params.omega_a * params.omega_a * params.gamma / (params.delta * params.delta);
    let denom = params.kappa * params.gamma;
    let cooperativity = if denom == 0.0 {
        f64::INFINITY
    } else {
        params.g_a * params.g_a / denom
    };
    let strong_coupling_ok =
        omega_eff >= 10.0 * gamma_eff && omega_eff >= 10.0 * params.kappa;
    Ok(EffectiveDiagnostics {
        omega_eff,
        gamma_eff,
        cooperativity,
        strong_coupling_ok,
    })
}
