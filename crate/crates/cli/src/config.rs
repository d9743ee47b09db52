//! Flat key=value run configuration.
//!
//! The file format is UTF-8 text, one `key = value` pair per line, `#`
//! starts a comment. Unknown keys are rejected with their line number. All
//! physical values are in units of `g_a`. Command-line flags override file
//! values.

use cavsim_core::hamiltonian::PhysicalParams;
use cavsim_core::oracle::{schedule, Variant};
use cavsim_core::propagator::{DEFAULT_SAMPLE_COUNT, DEFAULT_TOLERANCE};
use cavsim_core::protocol::{Model, ProtocolConfig};
use cavsim_core::sweep::{SweepParameter, SweepSpec};

/// A configuration problem; always maps to exit code 2.
#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type ConfigResult<T> = Result<T, ConfigError>;

/// External representation of a run: every field optional so that file
/// values and flag overrides can be merged before defaults apply.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub variant: Option<Variant>,
    pub model: Option<Model>,
    pub g_b: Option<f64>,
    pub omega_a: Option<f64>,
    pub omega_b: Option<f64>,
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    pub n_max: Option<usize>,
    pub samples: Option<usize>,
    pub tolerance: Option<f64>,
    pub t1: Option<f64>,
    pub delay: Option<f64>,
    pub stage_b_duration: Option<f64>,
    pub out: Option<String>,
    pub sweep_param: Option<SweepParameter>,
    pub sweep_min: Option<f64>,
    pub sweep_max: Option<f64>,
    pub sweep_steps: Option<usize>,
}

pub fn parse_variant(s: &str) -> ConfigResult<Variant> {
    match s {
        "qubit" => Ok(Variant::Qubit),
        "qutrit" => Ok(Variant::Qutrit),
        other => Err(ConfigError(format!(
            "variant must be 'qubit' or 'qutrit', got '{other}'"
        ))),
    }
}

pub fn parse_model(s: &str) -> ConfigResult<Model> {
    match s {
        "full" => Ok(Model::Full),
        "effective" => Ok(Model::Effective),
        other => Err(ConfigError(format!(
            "model must be 'full' or 'effective', got '{other}'"
        ))),
    }
}

pub fn parse_sweep_param(s: &str) -> ConfigResult<SweepParameter> {
    match s {
        "kappa" => Ok(SweepParameter::Kappa),
        "delta" => Ok(SweepParameter::Delta),
        "n_max" => Ok(SweepParameter::NMax),
        "delay" => Ok(SweepParameter::Delay),
        other => Err(ConfigError(format!(
            "sweep parameter must be one of kappa|delta|n_max|delay, got '{other}'"
        ))),
    }
}

impl RunConfig {
    /// Parse a config file body, attributing every problem to its line.
    pub fn parse(text: &str) -> ConfigResult<RunConfig> {
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {lineno}: expected key=value, got '{line}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            config
                .set(key, value)
                .map_err(|e| ConfigError(format!("line {lineno}: {}", e.0)))?;
        }
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> ConfigResult<()> {
        fn num(key: &str, value: &str) -> ConfigResult<f64> {
            value
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("key '{key}': '{value}' is not a number")))
        }
        fn int(key: &str, value: &str) -> ConfigResult<usize> {
            value
                .parse::<usize>()
                .map_err(|_| ConfigError(format!("key '{key}': '{value}' is not a nonnegative integer")))
        }
        match key {
            "variant" => self.variant = Some(parse_variant(value)?),
            "model" => self.model = Some(parse_model(value)?),
            "g_b" => self.g_b = Some(num(key, value)?),
            "omega_a" => self.omega_a = Some(num(key, value)?),
            "omega_b" => self.omega_b = Some(num(key, value)?),
            "delta" => self.delta = Some(num(key, value)?),
            "kappa" => self.kappa = Some(num(key, value)?),
            "gamma" => self.gamma = Some(num(key, value)?),
            "n_max" => self.n_max = Some(int(key, value)?),
            "samples" => self.samples = Some(int(key, value)?),
            "tolerance" => self.tolerance = Some(num(key, value)?),
            "t1" => self.t1 = Some(num(key, value)?),
            "delay" => self.delay = Some(num(key, value)?),
            "stage_b_duration" => self.stage_b_duration = Some(num(key, value)?),
            "out" => self.out = Some(value.to_string()),
            "sweep_param" => self.sweep_param = Some(parse_sweep_param(value)?),
            "sweep_min" => self.sweep_min = Some(num(key, value)?),
            "sweep_max" => self.sweep_max = Some(num(key, value)?),
            "sweep_steps" => self.sweep_steps = Some(int(key, value)?),
            unknown => {
                return Err(ConfigError(format!("unknown key '{unknown}'")));
            }
        }
        Ok(())
    }

    /// Overlay `other` (flag overrides) on top of `self` (file values).
    pub fn merged_with(mut self, other: &RunConfig) -> RunConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field.clone(); })*
            };
        }
        take!(
            variant, model, g_b, omega_a, omega_b, delta, kappa, gamma, n_max, samples,
            tolerance, t1, delay, stage_b_duration, out, sweep_param, sweep_min, sweep_max,
            sweep_steps
        );
        self
    }

    /// Resolve into a protocol configuration, deriving the schedule and
    /// flagging it as overridden when any timing or drive was set by hand.
    pub fn to_protocol_config(&self) -> ConfigResult<ProtocolConfig> {
        let variant = self.variant.unwrap_or(Variant::Qubit);
        let model = self.model.unwrap_or(Model::Effective);
        let params = PhysicalParams {
            g_a: 1.0,
            g_b: self.g_b.unwrap_or(1.0),
            // drive defaults come from the derived schedule below
            omega_a: f64::NAN,
            omega_b: f64::NAN,
            delta: self.delta.unwrap_or(10.0),
            kappa: self.kappa.unwrap_or(0.0),
            gamma: self.gamma.unwrap_or(0.0),
        };
        let probe = PhysicalParams {
            omega_a: 0.0,
            omega_b: 0.0,
            ..params
        };
        probe
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        let mut sched =
            schedule(variant, &probe).map_err(|e| ConfigError(e.to_string()))?;
        let mut overridden = false;
        if let Some(v) = self.omega_a {
            sched.omega_a = v;
            overridden = true;
        }
        if let Some(v) = self.omega_b {
            sched.omega_b = v;
            overridden = true;
        }
        if let Some(v) = self.t1 {
            sched.t1 = v;
            overridden = true;
        }
        if let Some(v) = self.delay {
            sched.delay = v;
            overridden = true;
        }
        if let Some(v) = self.stage_b_duration {
            sched.stage_b_duration = v;
            overridden = true;
        }
        sched.overridden = overridden;
        let params = PhysicalParams {
            omega_a: sched.omega_a,
            omega_b: sched.omega_b,
            ..params
        };
        Ok(ProtocolConfig {
            variant,
            model,
            params,
            schedule: sched,
            n_max: self.n_max.unwrap_or(2),
            sample_count: self.samples.unwrap_or(DEFAULT_SAMPLE_COUNT),
            tolerance: self.tolerance.unwrap_or(DEFAULT_TOLERANCE),
        })
    }

    /// Resolve into a sweep specification (defaults: kappa over [0, 0.2]
    /// in 50 steps).
    pub fn to_sweep_spec(&self) -> ConfigResult<SweepSpec> {
        let base = self.to_protocol_config()?;
        Ok(SweepSpec {
            parameter: self.sweep_param.unwrap_or(SweepParameter::Kappa),
            min: self.sweep_min.unwrap_or(0.0),
            max: self.sweep_max.unwrap_or(0.2),
            steps: self.sweep_steps.unwrap_or(50),
            base,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = "\
# comment line
variant = qutrit
model = full
delta = 20     # trailing comment
kappa = 0.01
n_max = 1
samples = 100
out = run.csv
";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.variant, Some(Variant::Qutrit));
        assert_eq!(c.model, Some(Model::Full));
        assert_eq!(c.delta, Some(20.0));
        assert_eq!(c.n_max, Some(1));
        assert_eq!(c.out.as_deref(), Some("run.csv"));
    }

    #[test]
    fn unknown_key_reports_line_number() {
        let text = "variant = qubit\nomega_x = 3\n";
        let err = RunConfig::parse(text).unwrap_err();
        assert!(err.0.contains("line 2"), "{}", err.0);
        assert!(err.0.contains("omega_x"), "{}", err.0);
    }

    #[test]
    fn bad_value_reports_line_number() {
        let text = "delta = fast\n";
        let err = RunConfig::parse(text).unwrap_err();
        assert!(err.0.contains("line 1"), "{}", err.0);
        assert!(err.0.contains("delta"), "{}", err.0);
    }

    #[test]
    fn flag_overrides_win() {
        let file = RunConfig::parse("delta = 10\nkappa = 0.1\n").unwrap();
        let flags = RunConfig {
            kappa: Some(0.0),
            ..Default::default()
        };
        let merged = file.merged_with(&flags);
        assert_eq!(merged.delta, Some(10.0));
        assert_eq!(merged.kappa, Some(0.0));
    }

    #[test]
    fn derived_schedule_and_overrides() {
        let c = RunConfig::parse("variant = qubit\ndelta = 10\n").unwrap();
        let pc = c.to_protocol_config().unwrap();
        assert!(!pc.schedule.overridden);
        assert!((pc.schedule.t1 - 2.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!((pc.params.omega_a - 2.0_f64.sqrt()).abs() < 1e-12);

        let c = RunConfig::parse("variant = qubit\nomega_a = 1.5\n").unwrap();
        let pc = c.to_protocol_config().unwrap();
        assert!(pc.schedule.overridden);
        assert!((pc.params.omega_a - 1.5).abs() < 1e-12);
        // timing formula stays variant-derived even when the drive moves
        assert!((pc.schedule.t1 - 2.5 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sweep_defaults() {
        let c = RunConfig::default();
        let spec = c.to_sweep_spec().unwrap();
        assert_eq!(spec.steps, 50);
        assert_eq!(spec.parameter, SweepParameter::Kappa);
        assert_eq!(spec.max, 0.2);
    }
}
