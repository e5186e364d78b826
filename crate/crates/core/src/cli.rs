//! Batch interface: a JSON config and/or flags in, JSON or CSV out.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 bad input, 3 degenerate
//! structure where a nondegenerate one is required.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::canonical::{alt_hamiltonian_observable, energy_observable, mode_integral_name, mode_integrals};
use crate::deformation::{deformed_field, invariant_directions, Potential, PotentialSpec};
use crate::dynamics::{trajectory, uniform_grid, ExactPropagator, Flow, Observable, PhaseState};
use crate::error::Error;
use crate::poisson::{alt_structure, dirac_structure, GammaWeights};
use crate::spectrum::{verify_identities, FrequencySpectrum};
use crate::verify::{run_suite, SuiteConfig};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;

const DEFAULT_T_END: f64 = 10.0;
const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    /// Symmetric-polynomial tables and the identity report.
    Spectrum,
    /// Dirac structure, or the alternative one when gamma is given.
    Structure,
    /// Exact trajectory as CSV.
    Simulate,
    /// RK4 trajectory of the deformed dynamics as CSV.
    Deform,
    /// Full property suite.
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "oddpu", version, about = "Odd-order Pais-Uhlenbeck oscillator toolkit")]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// Command to run; may instead come from the config file.
    command: Option<CommandName>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Frequencies, comma separated.
    #[arg(long, value_delimiter = ',')]
    omegas: Option<Vec<f64>>,
    /// Weights γ_{0,1}, γ_{0,2}, γ_{1,1}, … (2n values).
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Initial jet vector x1, x2, d1_x1, … (4n+2 values).
    #[arg(long, value_delimiter = ',')]
    state: Option<Vec<f64>>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Sampling interval; also the RK4 step for `deform`.
    #[arg(long)]
    dt: Option<f64>,
    /// Potential as inline JSON or a path to a JSON file.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

/// Potential given either inline or as a path.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PotentialSource {
    Inline(PotentialSpec),
    Path(PathBuf),
}

/// Everything a command may need; unset fields fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub omegas: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub state: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub potential: Option<PotentialSource>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n_max: Option<usize>,
    pub trials: Option<usize>,
}

/// A failed run: exit code and message for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn bad_input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_BAD_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Degenerate(_) => EXIT_DEGENERATE,
            Error::Integration { .. } => EXIT_FAIL,
            _ => EXIT_BAD_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::bad_input(format!("config: {e}")))
    }

    fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&read(path)?)
    }

    fn override_with(self, f: Flags) -> CliResult<Self> {
        let potential = match f.potential {
            Some(text) if text.trim_start().starts_with('{') => {
                Some(PotentialSource::Inline(PotentialSpec::from_json(&text)?))
            }
            Some(path) => Some(PotentialSource::Path(path.into())),
            None => self.potential,
        };
        Ok(Self {
            command: f.command.or(self.command),
            omegas: f.omegas.or(self.omegas),
            gamma: f.gamma.or(self.gamma),
            state: f.state.or(self.state),
            t_end: f.t_end.or(self.t_end),
            dt: f.dt.or(self.dt),
            potential,
            seed: f.seed.or(self.seed),
            out: f.out.or(self.out),
            n_max: f.n_max.or(self.n_max),
            trials: f.trials.or(self.trials),
        })
    }

    fn spectrum(&self) -> CliResult<FrequencySpectrum> {
        let omegas = self
            .omegas
            .clone()
            .ok_or_else(|| CliError::bad_input("missing omegas"))?;
        Ok(FrequencySpectrum::new(omegas)?)
    }

    fn gamma(&self, spec: &FrequencySpectrum) -> CliResult<Option<GammaWeights>> {
        match &self.gamma {
            None => Ok(None),
            Some(values) => {
                if values.len() != 2 * spec.n() {
                    return Err(CliError::bad_input(format!(
                        "gamma needs {} values for {} modes, got {}",
                        2 * spec.n(),
                        spec.n(),
                        values.len()
                    )));
                }
                Ok(Some(GammaWeights::from_flat(values)?))
            }
        }
    }

    fn initial_state(&self, spec: &FrequencySpectrum) -> CliResult<PhaseState> {
        let values = self.state.as_ref().ok_or_else(|| CliError::bad_input("missing state"))?;
        Ok(PhaseState::for_spectrum(spec, values, 0.0)?)
    }

    fn grid(&self) -> CliResult<Vec<f64>> {
        let t_end = self.t_end.unwrap_or(DEFAULT_T_END);
        let dt = self.dt.unwrap_or(DEFAULT_DT);
        Ok(uniform_grid(0.0, t_end, dt)?)
    }

    fn potential_spec(&self) -> CliResult<Option<PotentialSpec>> {
        match &self.potential {
            None => Ok(None),
            Some(PotentialSource::Inline(p)) => {
                p.validate()?;
                Ok(Some(p.clone()))
            }
            Some(PotentialSource::Path(path)) => Ok(Some(PotentialSpec::from_json(&read(path)?)?)),
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub pass: bool,
}

impl Output {
    fn json(value: &impl Serialize, pass: bool) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        Self { text, pass }
    }

    fn csv(text: String) -> Self {
        Self { text, pass: true }
    }
}

#[derive(Debug, Serialize)]
struct SpectrumReport {
    omegas: Vec<f64>,
    reordered: bool,
    sigma: Vec<f64>,
    /// `reduced_sigma[k][m] = σ_{m,k}`.
    reduced_sigma: Vec<Vec<f64>>,
    rho: Vec<f64>,
    /// `(k, P_{2k})` for `k = 0..=2n`.
    complete_homogeneous: Vec<(i64, f64)>,
    identities: crate::spectrum::IdentityReport,
    pass: bool,
}

fn cmd_spectrum(config: &RunConfig) -> CliResult<Output> {
    let spec = config.spectrum()?;
    let n = spec.n();
    let identities = verify_identities(&spec, -(n as i64) + 1..=6);
    let pass = identities.all_pass();
    let report = SpectrumReport {
        omegas: spec.omegas().to_vec(),
        reordered: spec.was_reordered(),
        sigma: spec.sigmas().to_vec(),
        reduced_sigma: (0..n)
            .map(|k| (0..n).map(|m| spec.reduced_sigma(m, k).expect("in range")).collect())
            .collect(),
        rho: spec.rhos().to_vec(),
        complete_homogeneous: (0..=2 * n as i64).map(|k| (k, spec.complete_homog(k))).collect(),
        identities,
        pass,
    };
    Ok(Output::json(&report, pass))
}

fn cmd_structure(config: &RunConfig) -> CliResult<Output> {
    let spec = config.spectrum()?;
    let structure = match config.gamma(&spec)? {
        Some(g) => alt_structure(&spec, &g)?,
        None => dirac_structure(&spec),
    };
    Ok(Output::json(&structure.to_json(&spec)?, true))
}

fn cmd_simulate(config: &RunConfig) -> CliResult<Output> {
    let spec = config.spectrum()?;
    let gamma = config.gamma(&spec)?;
    let state = config.initial_state(&spec)?;
    let grid = config.grid()?;
    let propagator = ExactPropagator::new(&spec)?;

    let h = energy_observable(&spec);
    let hcal = gamma.as_ref().map(|g| alt_hamiltonian_observable(&spec, g)).transpose()?;
    let js = mode_integrals(&spec);
    let mut names = vec!["H".to_string()];
    let mut observables: Vec<&dyn Observable> = vec![&h];
    if let Some(hc) = &hcal {
        names.push("Hcal".into());
        observables.push(hc);
    }
    for k in 0..spec.n() {
        for c in 0..2 {
            names.push(mode_integral_name(k, c));
            observables.push(&js[2 * k + c]);
        }
    }
    let columns: Vec<(&str, &dyn Observable)> = names.iter().map(String::as_str).zip(observables).collect();
    let table = trajectory(&Flow::Exact(&propagator), &state, &grid, &columns)?;
    Ok(Output::csv(table.to_csv()))
}

fn cmd_deform(config: &RunConfig) -> CliResult<Output> {
    let spec = config.spectrum()?;
    let g = config.gamma(&spec)?.unwrap_or_else(|| GammaWeights::dirac(spec.n()));
    let state = config.initial_state(&spec)?;
    let grid = config.grid()?;
    let dt = config.dt.unwrap_or(DEFAULT_DT);
    let potential = match config.potential_spec()? {
        Some(p) => Some(Potential::new(p, invariant_directions(&spec, &g)?)?),
        None => None,
    };
    let field = deformed_field(&spec, &g, potential.as_ref())?;
    let rhs = |u: &DVector<f64>| field.eval(u);
    let hcal = |u: &DVector<f64>| field.energy(u) - field.potential_value(u);
    let u = |u: &DVector<f64>| field.potential_value(u);
    let htilde = |u: &DVector<f64>| field.energy(u);
    let columns: [(&str, &dyn Observable); 3] = [("Hcal", &hcal), ("U", &u), ("Htilde", &htilde)];
    let table = trajectory(&Flow::Stepped { field: &rhs, dt }, &state, &grid, &columns)?;
    Ok(Output::csv(table.to_csv()))
}

fn cmd_verify(config: &RunConfig) -> CliResult<Output> {
    let defaults = SuiteConfig::default();
    let suite = SuiteConfig {
        n_max: config.n_max.unwrap_or(defaults.n_max),
        trials: config.trials.unwrap_or(defaults.trials),
        seed: config.seed.unwrap_or(defaults.seed),
    };
    if suite.n_max == 0 || suite.trials == 0 {
        return Err(CliError::bad_input("n_max and trials must be positive"));
    }
    let report = run_suite(&suite);
    Ok(Output::json(&report, report.pass))
}

/// Runs a fully resolved config without touching the output destination.
pub fn execute(config: &RunConfig) -> CliResult<Output> {
    match config.command {
        Some(CommandName::Spectrum) => cmd_spectrum(config),
        Some(CommandName::Structure) => cmd_structure(config),
        Some(CommandName::Simulate) => cmd_simulate(config),
        Some(CommandName::Deform) => cmd_deform(config),
        Some(CommandName::Verify) => cmd_verify(config),
        None => Err(CliError::bad_input("no command given (flag or config \"command\")")),
    }
}

/// Parses arguments, runs the command, writes its output and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let flags = match Flags::try_parse_from(args) {
        Ok(f) => f,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match resolve(flags).and_then(|c| execute(&c).and_then(|o| emit(&c, o))) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn resolve(flags: Flags) -> CliResult<RunConfig> {
    let base = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    base.override_with(flags)
}

fn emit(config: &RunConfig, output: Output) -> CliResult<u8> {
    match &config.out {
        Some(path) => std::fs::write(path, &output.text)
            .map_err(|e| CliError::bad_input(format!("{}: {e}", path.display())))?,
        None => print!("{}", output.text),
    }
    Ok(if output.pass { EXIT_PASS } else { EXIT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> RunConfig {
        RunConfig::from_json(json).unwrap()
    }

    #[test]
    fn flags_override_config_values() {
        let base = config(r#"{"command":"simulate","omegas":[1,2],"dt":0.5}"#);
        let flags = Flags::try_parse_from(["oddpu", "--omegas", "3", "--gamma=-1,1"]).unwrap();
        let merged = base.override_with(flags).unwrap();
        assert_eq!(merged.command, Some(CommandName::Simulate));
        assert_eq!(merged.omegas, Some(vec![3.0]));
        assert_eq!(merged.gamma, Some(vec![-1.0, 1.0]));
        assert_eq!(merged.dt, Some(0.5));
    }

    #[test]
    fn potential_accepts_inline_object_or_path() {
        let c = config(r#"{"potential":{"degree":2,"coeffs":[{"i":1,"j":0,"value":1.5}]}}"#);
        assert!(matches!(c.potential, Some(PotentialSource::Inline(_))));
        let c = config(r#"{"potential":"u.json"}"#);
        assert_eq!(c.potential, Some(PotentialSource::Path("u.json".into())));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert_eq!(RunConfig::from_json(r#"{"omega":[1]}"#).unwrap_err().code, EXIT_BAD_INPUT);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::Degenerate("s".into())).code, EXIT_DEGENERATE);
        assert_eq!(CliError::from(Error::InvalidSpectrum("x".into())).code, EXIT_BAD_INPUT);
        assert_eq!(CliError::from(Error::Integration { t: 1.0 }).code, EXIT_FAIL);
    }

    #[test]
    fn single_mode_spectrum_reports_unit_residue() {
        let out = execute(&config(r#"{"command":"spectrum","omegas":[1]}"#)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["rho"][0], 1.0);
        assert!(out.pass);
    }

    #[test]
    fn structure_defaults_to_dirac() {
        let dirac = execute(&config(r#"{"command":"structure","omegas":[1]}"#)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&dirac.text).unwrap();
        assert!(v["gamma"].is_null());
        assert_eq!(v["degenerate"], false);
    }

    #[test]
    fn missing_command_is_bad_input() {
        assert_eq!(execute(&RunConfig::default()).unwrap_err().code, EXIT_BAD_INPUT);
    }
}
