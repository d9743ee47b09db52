//! Subcommand implementations and the clap surface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cavsim_core::oracle::Variant;
use cavsim_core::propagator::populations;
use cavsim_core::protocol::{figure_selectors, run_protocol, ProtocolConfig, SimResult, Stage};
use cavsim_core::sweep::{effective_params, sweep, SweepRow, SweepSpec};
use cavsim_core::verify;
use cavsim_core::SimError;

use crate::config::{parse_model, parse_sweep_param, parse_variant, ConfigError, RunConfig};
use crate::csvfmt::fmt_sig;
use crate::plot;

/// Exit status carried through command execution.
#[derive(Debug)]
pub struct CliError {
    /// 1 = numerical failure, 2 = configuration error.
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::StepUnderflow { .. } | SimError::StageFailure { .. } => {
                CliError::numerical(e.to_string())
            }
            other => CliError::config(other.to_string()),
        }
    }
}

/// Simulator for two-stage atomic entanglement generation in a bimodal
/// cavity under large detuning.
#[derive(Parser, Debug)]
#[command(name = "cavsim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by the run-based subcommands; every flag mirrors a
/// config-file key and wins over the file value.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Protocol variant: qubit | qutrit.
    #[arg(long, value_parser = clap_variant)]
    pub variant: Option<Variant>,
    /// Dynamical model: full | effective.
    #[arg(long, value_parser = clap_model)]
    pub model: Option<cavsim_core::protocol::Model>,
    /// Detuning in units of g_a.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Cavity field decay rate in units of g_a.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Excited-state decay rate in units of g_a.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Stage-B coupling in units of g_a.
    #[arg(long)]
    pub g_b: Option<f64>,
    /// Stage-A drive override (derived from the variant when absent).
    #[arg(long)]
    pub omega_a: Option<f64>,
    /// Stage-B drive override.
    #[arg(long)]
    pub omega_b: Option<f64>,
    /// Photon truncation per mode.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Trajectory samples per stage.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Local error tolerance of the adaptive integrator.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Stage-A duration override.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Hand-off delay override.
    #[arg(long)]
    pub delay: Option<f64>,
    /// Stage-B duration override.
    #[arg(long)]
    pub stage_b_duration: Option<f64>,
    /// Output path for the CSV artifact.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn clap_variant(s: &str) -> Result<Variant, String> {
    parse_variant(s).map_err(|e| e.0)
}

fn clap_model(s: &str) -> Result<cavsim_core::protocol::Model, String> {
    parse_model(s).map_err(|e| e.0)
}

fn clap_sweep_param(s: &str) -> Result<cavsim_core::sweep::SweepParameter, String> {
    parse_sweep_param(s).map_err(|e| e.0)
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the protocol once and write the trajectory CSV plus a plot
    /// script.
    Simulate(Overrides),
    /// Sweep one parameter, writing a table of per-stage success
    /// probabilities and fidelities plus a plot script.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Swept parameter: kappa | delta | n_max | delay.
        #[arg(long, value_parser = clap_sweep_param)]
        param: Option<cavsim_core::sweep::SweepParameter>,
        /// Lower end of the sweep range.
        #[arg(long)]
        min: Option<f64>,
        /// Upper end of the sweep range.
        #[arg(long)]
        max: Option<f64>,
        /// Number of grid points.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the analytic-vs-numeric equivalence suite and invariant checks.
    Verify {
        /// Bound on the oracle-equivalence deviation.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Print the effective coupling, effective decay and cooperativity for
    /// a parameter set.
    Diagnose(Overrides),
}

impl Overrides {
    fn to_run_config(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            variant: self.variant,
            model: self.model,
            g_b: self.g_b,
            omega_a: self.omega_a,
            omega_b: self.omega_b,
            delta: self.delta,
            kappa: self.kappa,
            gamma: self.gamma,
            n_max: self.n_max,
            samples: self.samples,
            tolerance: self.tolerance,
            t1: self.t1,
            delay: self.delay,
            stage_b_duration: self.stage_b_duration,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            ..Default::default()
        };
        Ok(file.merged_with(&flags))
    }
}

/// Render the trajectory CSV: global dimensionless time, stage tag, the
/// figure population columns (unused ones written as 0) and the squared
/// norm.
pub fn trajectory_csv(result: &SimResult, config: &ProtocolConfig) -> String {
    let header = ["t", "stage", "P1", "P2", "P3", "P4", "P5", "Pp", "norm2"];
    let mut rows: Vec<Vec<String>> = Vec::new();
    let g_a = config.params.g_a;
    for (stage, tag, traj, t_offset) in [
        (Stage::A, "A", &result.stage_a_trajectory, 0.0),
        (
            Stage::B,
            "B",
            &result.stage_b_trajectory,
            result.schedule.t1 + result.schedule.delay,
        ),
    ] {
        let named = figure_selectors(config.variant, stage);
        let selectors: Vec<_> = named.iter().map(|(_, s)| s.clone()).collect();
        let curves = populations(traj, &selectors).expect("selectors valid for run space");
        // split off the photon curve (always the last selector)
        let photon = &curves[curves.len() - 1];
        let states = &curves[..curves.len() - 1];
        for (k, (t, norm)) in traj.times().iter().zip(traj.norms()).enumerate() {
            let mut row = Vec::with_capacity(header.len());
            row.push(fmt_sig(g_a * (t + t_offset)));
            row.push(tag.to_string());
            for c in 0..5 {
                row.push(fmt_sig(states.get(c).map_or(0.0, |s| s[k])));
            }
            row.push(fmt_sig(photon[k]));
            row.push(fmt_sig(*norm));
            rows.push(row);
        }
    }
    crate::csvfmt::write_csv(&header, &rows)
}

/// Human-readable run summary (printed after `simulate`).
pub fn summary_block(result: &SimResult, config: &ProtocolConfig) -> String {
    let s = &result.schedule;
    let mut out = String::new();
    out.push_str(&format!("run: {}\n", result.config_summary));
    out.push_str(&format!(
        "schedule{}: omega_a={} omega_b={} t1={} delay={} stage_b_duration={}\n",
        if s.overridden { " (overridden)" } else { "" },
        fmt_sig(s.omega_a),
        fmt_sig(s.omega_b),
        fmt_sig(s.t1),
        fmt_sig(s.delay),
        fmt_sig(s.stage_b_duration),
    ));
    out.push_str(&format!(
        "stage A: P_A={} F_A(cond)={} F_A(uncond)={}\n",
        fmt_sig(result.stage_a.success_probability),
        fmt_sig(result.stage_a.fidelity_conditional),
        fmt_sig(result.stage_a.fidelity_unconditional),
    ));
    out.push_str(&format!(
        "final:   P={} F(cond)={} F(uncond)={}\n",
        fmt_sig(result.success_probability),
        fmt_sig(result.fidelity_conditional),
        fmt_sig(result.fidelity_unconditional),
    ));
    let advisory = if config.params.large_detuning_ok() {
        "ok"
    } else {
        "NOT satisfied (delta < 5 max(g, omega); effective model unreliable)"
    };
    out.push_str(&format!("large-detuning premise: {advisory}\n"));
    out
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn script_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("gp")
}

fn csv_file_name(csv_path: &Path) -> String {
    csv_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out.csv".to_string())
}

pub fn cmd_simulate(overrides: &Overrides) -> Result<(), CliError> {
    let run = overrides.to_run_config()?;
    let config = run.to_protocol_config()?;
    let result = run_protocol(&config)?;
    let csv_path = PathBuf::from(run.out.as_deref().unwrap_or("trajectory.csv"));
    write_artifact(&csv_path, &trajectory_csv(&result, &config))?;
    let script = plot::trajectory_script(&csv_file_name(&csv_path), config.variant);
    write_artifact(&script_path(&csv_path), &script)?;
    print!("{}", summary_block(&result, &config));
    println!(
        "wrote {} and {}",
        csv_path.display(),
        script_path(&csv_path).display()
    );
    Ok(())
}

/// Render the sweep CSV (`<param>,P_A,F_A,P_B,F_B`); failed grid points are
/// kept as comment lines so the numeric rows stay clean.
pub fn sweep_csv(rows: &[SweepRow], parameter: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("{parameter},P_A,F_A,P_B,F_B\n"));
    for row in rows {
        match &row.outcome {
            Ok(s) => {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_sig(row.value),
                    fmt_sig(s.p_a),
                    fmt_sig(s.f_a),
                    fmt_sig(s.p_b),
                    fmt_sig(s.f_b),
                ));
            }
            Err(msg) => {
                out.push_str(&format!("# {} failed: {}\n", fmt_sig(row.value), msg));
            }
        }
    }
    out
}

pub fn cmd_sweep(
    overrides: &Overrides,
    param: Option<cavsim_core::sweep::SweepParameter>,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
) -> Result<(), CliError> {
    let mut run = overrides.to_run_config()?;
    if param.is_some() {
        run.sweep_param = param;
    }
    if min.is_some() {
        run.sweep_min = min;
    }
    if max.is_some() {
        run.sweep_max = max;
    }
    if steps.is_some() {
        run.sweep_steps = steps;
    }
    let spec: SweepSpec = run.to_sweep_spec()?;
    let rows = sweep(&spec)?;
    let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
    let param_name = spec.parameter.to_string();
    let csv_path = PathBuf::from(run.out.as_deref().unwrap_or("sweep.csv"));
    write_artifact(&csv_path, &sweep_csv(&rows, &param_name))?;
    let script = plot::sweep_script(&csv_file_name(&csv_path), &param_name);
    write_artifact(&script_path(&csv_path), &script)?;
    println!(
        "swept {} over [{}, {}] in {} steps ({} failed); wrote {} and {}",
        param_name,
        fmt_sig(spec.min),
        fmt_sig(spec.max),
        spec.steps,
        failures,
        csv_path.display(),
        script_path(&csv_path).display()
    );
    Ok(())
}

pub fn cmd_verify(tolerance: f64) -> Result<(), CliError> {
    let reports = verify::run_all(tolerance)?;
    let mut all_ok = true;
    for r in &reports {
        println!(
            "{} {} ({})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all_ok &= r.passed;
    }
    if all_ok {
        println!("verify: all {} checks passed", reports.len());
        Ok(())
    } else {
        Err(CliError::numerical("verification checks failed".to_string()))
    }
}

pub fn cmd_diagnose(overrides: &Overrides) -> Result<(), CliError> {
    let run = overrides.to_run_config()?;
    let config = run.to_protocol_config()?;
    let d = effective_params(&config.params)?;
    println!(
        "parameters: g_a={} omega_a={} delta={} kappa={} gamma={}",
        fmt_sig(config.params.g_a),
        fmt_sig(config.params.omega_a),
        fmt_sig(config.params.delta),
        fmt_sig(config.params.kappa),
        fmt_sig(config.params.gamma),
    );
    println!("omega_eff = omega g / delta = {}", fmt_sig(d.omega_eff));
    println!("gamma_eff = omega^2 gamma / delta^2 = {}", fmt_sig(d.gamma_eff));
    println!(
        "cooperativity g^2/(kappa gamma) = {}",
        if d.cooperativity.is_infinite() {
            "inf".to_string()
        } else {
            fmt_sig(d.cooperativity)
        }
    );
    println!(
        "strong coupling (omega_eff >> gamma_eff and omega_eff >> kappa): {}",
        if d.strong_coupling_ok { "satisfied" } else { "NOT satisfied" }
    );
    Ok(())
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Simulate(overrides) => cmd_simulate(overrides),
        Command::Sweep { overrides, param, min, max, steps } => {
            cmd_sweep(overrides, *param, *min, *max, *steps)
        }
        Command::Verify { tolerance } => cmd_verify(*tolerance),
        Command::Diagnose(overrides) => cmd_diagnose(overrides),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
