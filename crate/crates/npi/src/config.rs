//! Experiment configuration: TOML parsing, validation and rendering.
//!
//! Parsing never stops at the first problem. Unknown keys, malformed
//! sections and violated invariants are all collected into one list of
//! [`Diagnostic`]s, and unknown keys come with the closest valid spelling.

use std::fmt;

use npi_core::integrator::ThermostatSpec;
use npi_core::observables::Builtin;
use npi_core::thermal::{ChainParams, FluxEstimator, ProfileMode, RegionLayout};
use npi_core::types::SystemSpec;
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{NpiError, Result};
use crate::quantum::{MatrixSpec, StateSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Equilibrium,
    NpiGradient,
    Lindblad,
    Redfield,
    OscillatorBenchmark,
}

impl Mode {
    pub const ALL: [Mode; 5] =
        [Mode::Equilibrium, Mode::NpiGradient, Mode::Lindblad, Mode::Redfield, Mode::OscillatorBenchmark];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Equilibrium => "equilibrium",
            Mode::NpiGradient => "npi_gradient",
            Mode::Lindblad => "lindblad",
            Mode::Redfield => "redfield",
            Mode::OscillatorBenchmark => "oscillator_benchmark",
        }
    }

    /// Modes that run one sub-experiment per entry of the bead list.
    pub fn is_sweep(self) -> bool {
        matches!(self, Mode::Equilibrium | Mode::NpiGradient | Mode::OscillatorBenchmark)
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Mode::Equilibrium => &["thermostat", "run"],
            Mode::NpiGradient => &["thermostat", "run", "branches", "gradient"],
            Mode::Lindblad => &["lindblad"],
            Mode::Redfield => &["redfield"],
            Mode::OscillatorBenchmark => &["oscillator"],
        }
    }

    fn allowed(self) -> &'static [&'static str] {
        match self {
            Mode::Equilibrium => &["system", "chain", "thermostat", "run"],
            Mode::NpiGradient => &["system", "chain", "thermostat", "run", "branches", "gradient", "profile"],
            Mode::Lindblad => &["lindblad"],
            Mode::Redfield => &["redfield"],
            Mode::OscillatorBenchmark => &["oscillator"],
        }
    }
}

/// Periodic Morse/Lennard-Jones chain preset (see [`ChainParams`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSection {
    #[serde(default = "ChainSection::default_n")]
    pub n_particles: usize,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default = "ChainSection::default_depth")]
    pub morse_depth: f64,
    #[serde(default = "ChainSection::default_width")]
    pub morse_width: f64,
    #[serde(default = "ChainSection::default_eps")]
    pub lj_epsilon: f64,
    #[serde(default = "ChainSection::default_sigma")]
    pub lj_sigma: f64,
    #[serde(default = "ChainSection::default_cutoff")]
    pub lj_cutoff: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl ChainSection {
    fn default_n() -> usize {
        32
    }
    fn default_depth() -> f64 {
        5.0
    }
    fn default_width() -> f64 {
        2.0
    }
    fn default_eps() -> f64 {
        0.1
    }
    fn default_sigma() -> f64 {
        // puts the Lennard-Jones minimum at twice the lattice spacing
        2.0 / 2f64.powf(1.0 / 6.0)
    }
    fn default_cutoff() -> f64 {
        3.0
    }

    pub fn params(&self) -> ChainParams {
        ChainParams {
            n_particles: self.n_particles,
            mass: self.mass,
            spacing: self.spacing,
            morse_depth: self.morse_depth,
            morse_width: self.morse_width,
            lj_epsilon: self.lj_epsilon,
            lj_sigma: self.lj_sigma,
            lj_cutoff: self.lj_cutoff,
        }
    }
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            n_particles: Self::default_n(),
            mass: 1.0,
            spacing: 1.0,
            morse_depth: Self::default_depth(),
            morse_width: Self::default_width(),
            lj_epsilon: Self::default_eps(),
            lj_sigma: Self::default_sigma(),
            lj_cutoff: Self::default_cutoff(),
            beta: 1.0,
            hbar: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub dt: f64,
    pub equilibration_steps: usize,
    pub production_steps: usize,
    #[serde(default = "RunSection::default_stride")]
    pub record_stride: usize,
    #[serde(default = "RunSection::default_observables")]
    pub observables: Vec<String>,
    /// One entry per particle; required for explicit systems, ignored for the chain preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_positions: Option<Vec<Vec<f64>>>,
}

impl RunSection {
    fn default_stride() -> usize {
        10
    }
    fn default_observables() -> Vec<String> {
        ["potential", "kinetic", "temperature", "energy_primitive", "energy_virial"].map(String::from).to_vec()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSection {
    pub n_branches: usize,
    pub spacing_steps: usize,
    pub branch_length_steps: usize,
    #[serde(default = "BranchSection::default_stride")]
    pub record_stride: usize,
    #[serde(default = "BranchSection::default_noise")]
    pub noise: npi_core::dnemd::BranchNoise,
    #[serde(default)]
    pub switch_on_steps: usize,
    #[serde(default = "BranchSection::default_stream")]
    pub first_stream: u64,
}

impl BranchSection {
    fn default_stride() -> usize {
        20
    }
    fn default_noise() -> npi_core::dnemd::BranchNoise {
        npi_core::dnemd::BranchNoise::Fresh
    }
    fn default_stream() -> u64 {
        1000
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSection {
    pub t_hot: f64,
    pub t_cold: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    /// Thermostat the internal ring modes of unbathed particles at this temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal_t: Option<f64>,
    #[serde(default = "GradientSection::default_estimator")]
    pub flux_estimator: FluxEstimator,
    /// Fraction of each branch, counted from its end, used for steady-state averages.
    #[serde(default = "GradientSection::default_window")]
    pub average_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<RegionLayout>,
}

impl GradientSection {
    fn default_estimator() -> FluxEstimator {
        FluxEstimator::BeadAverage
    }
    fn default_window() -> f64 {
        0.5
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSection {
    #[serde(default = "ProfileSection::default_bins")]
    pub n_bins: usize,
    #[serde(default = "ProfileSection::default_mode")]
    pub mode: ProfileMode,
}

impl ProfileSection {
    fn default_bins() -> usize {
        20
    }
    fn default_mode() -> ProfileMode {
        ProfileMode::BeadKinetic
    }
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { n_bins: Self::default_bins(), mode: Self::default_mode() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    pub operator: MatrixSpec,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedOperator {
    pub name: String,
    pub operator: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladSection {
    #[serde(default = "one")]
    pub hbar: f64,
    pub hamiltonian: MatrixSpec,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
    pub initial: StateSpec,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default)]
    pub observables: Vec<NamedOperator>,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedfieldModel {
    /// Qubit with a tilted system-bath coupling and a zero-temperature bath.
    TiltedQubit,
    /// Explicit Hamiltonian, couplings and rate table.
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub omega: f64,
    pub gamma: f64,
    #[serde(default)]
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSection {
    pub thetas: Vec<f64>,
    pub n_polar: usize,
    pub n_azimuth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedfieldSection {
    pub model: RedfieldModel,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub w0: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default)]
    pub gamma_0: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "RedfieldSection::default_alpha2")]
    pub alpha2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<RateSpec>,
    pub initial: StateSpec,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "RedfieldSection::default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

impl RedfieldSection {
    fn default_alpha2() -> f64 {
        0.1
    }
    fn default_tolerance() -> f64 {
        1e-6
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSection {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub tau: f64,
    pub dt: f64,
    pub equilibration_steps: usize,
    pub production_steps: usize,
    #[serde(default = "OscillatorSection::default_stride")]
    pub record_stride: usize,
    /// Relative tolerance against the finite-P analytic energy.
    #[serde(default = "OscillatorSection::default_tolerance")]
    pub tolerance: f64,
}

impl OscillatorSection {
    fn default_stride() -> usize {
        5
    }
    fn default_tolerance() -> f64 {
        0.02
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beads: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermostat: Option<ThermostatSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<BranchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lindblad: Option<LindbladSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redfield: Option<RedfieldSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillator: Option<OscillatorSection>,
}

/// One configuration problem, located by a dotted key path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Default)]
struct Diagnostics {
    list: Vec<Diagnostic>,
    /// Valid keys suggested as replacements for unknown ones; a missing-field
    /// error for one of these is the same fault and is not reported twice.
    suggested: Vec<String>,
}

impl Diagnostics {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.list.push(Diagnostic { path: path.into(), message: message.into() });
    }
}

const TOP_KEYS: &[&str] = &[
    "mode",
    "seed",
    "output",
    "beads",
    "system",
    "chain",
    "thermostat",
    "run",
    "branches",
    "gradient",
    "profile",
    "lindblad",
    "redfield",
    "oscillator",
];
const SYSTEM_KEYS: &[&str] = &["masses", "dimension", "box_length", "periodic", "beta", "hbar", "topology"];
const CHAIN_KEYS: &[&str] = &[
    "n_particles",
    "mass",
    "spacing",
    "morse_depth",
    "morse_width",
    "lj_epsilon",
    "lj_sigma",
    "lj_cutoff",
    "beta",
    "hbar",
];
const RUN_KEYS: &[&str] =
    &["dt", "equilibration_steps", "production_steps", "record_stride", "observables", "initial_positions"];
const BRANCH_KEYS: &[&str] = &[
    "n_branches",
    "spacing_steps",
    "branch_length_steps",
    "record_stride",
    "noise",
    "switch_on_steps",
    "first_stream",
];
const GRADIENT_KEYS: &[&str] =
    &["t_hot", "t_cold", "gamma", "internal_t", "flux_estimator", "average_fraction", "layout"];
const LAYOUT_KEYS: &[&str] = &["axis", "boundaries", "roles"];
const PROFILE_KEYS: &[&str] = &["n_bins", "mode"];
const LINDBLAD_KEYS: &[&str] =
    &["hbar", "hamiltonian", "jumps", "initial", "t_final", "dt", "record_every", "observables"];
const REDFIELD_KEYS: &[&str] = &[
    "model",
    "hbar",
    "w0",
    "theta",
    "gamma",
    "gamma_0",
    "shift",
    "alpha2",
    "hamiltonian",
    "couplings",
    "rates",
    "initial",
    "t_final",
    "dt",
    "record_every",
    "tolerance",
    "scan",
];
const OSCILLATOR_KEYS: &[&str] = &[
    "omega",
    "mass",
    "beta",
    "hbar",
    "tau",
    "dt",
    "equilibration_steps",
    "production_steps",
    "record_stride",
    "tolerance",
];
const MATRIX_KEYS: &[&str] = &["preset", "scale", "re", "im"];
const STATE_KEYS: &[&str] = &["preset", "re", "im"];
const JUMP_KEYS: &[&str] = &["operator", "rate"];
const NAMED_KEYS: &[&str] = &["name", "operator"];
const RATE_KEYS: &[&str] = &["omega", "gamma", "shift"];
const SCAN_KEYS: &[&str] = &["thetas", "n_polar", "n_azimuth"];

fn term_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "harmonic_bond" => &["kind", "i", "j", "k", "r0"],
        "morse" => &["kind", "i", "j", "depth", "width", "r0"],
        "lennard_jones" => &["kind", "i", "j", "epsilon", "sigma", "cutoff"],
        "harmonic_angle" => &["kind", "i", "j", "k", "k_theta", "theta0"],
        "external_well" => &["kind", "i", "k_ext", "center"],
        _ => return None,
    })
}

fn thermostat_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "none" => &["kind"],
        "pile_l" => &["kind", "tau", "target_t"],
        "region_langevin" => &["kind", "layout", "targets", "internal_t"],
        _ => return None,
    })
}

/// Closest valid key within a small edit distance.
pub fn nearest_key<'a>(key: &str, valid: &[&'a str]) -> Option<&'a str> {
    valid
        .iter()
        .map(|v| (strsim::levenshtein(key, v), *v))
        .filter(|(d, v)| *d <= (v.len() / 3).max(2))
        .min_by_key(|(d, _)| *d)
        .map(|(_, v)| v)
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn check_keys(value: &Value, path: &str, valid: &[&str], diags: &mut Diagnostics) {
    let Some(table) = value.as_table() else { return };
    for key in table.keys() {
        if valid.contains(&key.as_str()) {
            continue;
        }
        let message = match nearest_key(key, valid) {
            Some(s) => {
                diags.suggested.push(join(path, s));
                format!("unknown key `{key}`; did you mean `{s}`?")
            }
            None => format!("unknown key `{key}`; valid keys are {}", valid.join(", ")),
        };
        diags.push(join(path, key), message);
    }
}

fn check_nested(value: &Value, path: &str, key: &str, valid: &[&str], diags: &mut Diagnostics) {
    if let Some(v) = value.get(key) {
        check_keys(v, &join(path, key), valid, diags);
    }
}

fn check_array(value: &Value, path: &str, key: &str, valid: &[&str], diags: &mut Diagnostics) {
    if let Some(items) = value.get(key).and_then(Value::as_array) {
        for (k, item) in items.iter().enumerate() {
            check_keys(item, &format!("{}[{k}]", join(path, key)), valid, diags);
        }
    }
}

fn check_tagged(
    value: &Value,
    path: &str,
    lookup: fn(&str) -> Option<&'static [&'static str]>,
    diags: &mut Diagnostics,
) {
    if let Some(kind) = value.get("kind").and_then(Value::as_str) {
        if let Some(valid) = lookup(kind) {
            check_keys(value, path, valid, diags);
        }
    }
}

fn walk_unknown_keys(root: &Value, diags: &mut Diagnostics) {
    check_keys(root, "", TOP_KEYS, diags);
    if let Some(s) = root.get("system") {
        check_keys(s, "system", SYSTEM_KEYS, diags);
        if let Some(terms) = s.get("topology").and_then(Value::as_array) {
            for (k, t) in terms.iter().enumerate() {
                check_tagged(t, &format!("system.topology[{k}]"), term_keys, diags);
            }
        }
    }
    if let Some(s) = root.get("chain") {
        check_keys(s, "chain", CHAIN_KEYS, diags);
    }
    if let Some(s) = root.get("thermostat") {
        check_tagged(s, "thermostat", thermostat_keys, diags);
    }
    if let Some(s) = root.get("run") {
        check_keys(s, "run", RUN_KEYS, diags);
    }
    if let Some(s) = root.get("branches") {
        check_keys(s, "branches", BRANCH_KEYS, diags);
    }
    if let Some(s) = root.get("gradient") {
        check_keys(s, "gradient", GRADIENT_KEYS, diags);
        check_nested(s, "gradient", "layout", LAYOUT_KEYS, diags);
    }
    if let Some(s) = root.get("profile") {
        check_keys(s, "profile", PROFILE_KEYS, diags);
    }
    if let Some(s) = root.get("lindblad") {
        check_keys(s, "lindblad", LINDBLAD_KEYS, diags);
        check_nested(s, "lindblad", "hamiltonian", MATRIX_KEYS, diags);
        check_nested(s, "lindblad", "initial", STATE_KEYS, diags);
        check_array(s, "lindblad", "jumps", JUMP_KEYS, diags);
        check_array(s, "lindblad", "observables", NAMED_KEYS, diags);
        for list in ["jumps", "observables"] {
            if let Some(items) = s.get(list).and_then(Value::as_array) {
                for (k, item) in items.iter().enumerate() {
                    check_nested(item, &format!("lindblad.{list}[{k}]"), "operator", MATRIX_KEYS, diags);
                }
            }
        }
    }
    if let Some(s) = root.get("redfield") {
        check_keys(s, "redfield", REDFIELD_KEYS, diags);
        check_nested(s, "redfield", "hamiltonian", MATRIX_KEYS, diags);
        check_nested(s, "redfield", "initial", STATE_KEYS, diags);
        check_nested(s, "redfield", "scan", SCAN_KEYS, diags);
        check_array(s, "redfield", "couplings", MATRIX_KEYS, diags);
        check_array(s, "redfield", "rates", RATE_KEYS, diags);
    }
    if let Some(s) = root.get("oscillator") {
        check_keys(s, "oscillator", OSCILLATOR_KEYS, diags);
    }
}

/// Deserializes one section; unknown keys were reported already and are stripped first.
fn section<T: serde::de::DeserializeOwned>(root: &Value, key: &str, diags: &mut Diagnostics) -> Option<T> {
    let value = root.get(key)?;
    match value.clone().try_into::<T>() {
        Ok(v) => Some(v),
        Err(e) => {
            let msg = e.message().to_string();
            let duplicate = diags.suggested.iter().any(|s| {
                s.strip_prefix(key).and_then(|rest| rest.strip_prefix('.')).is_some_and(|field| {
                    let field = field.rsplit('.').next().unwrap_or(field);
                    msg.contains(&format!("`{field}`"))
                })
            });
            if !duplicate {
                diags.push(key, msg);
            }
            None
        }
    }
}

fn scalar<T: serde::de::DeserializeOwned>(root: &Value, key: &str, diags: &mut Diagnostics) -> Option<T> {
    section(root, key, diags)
}

/// Parses and validates a configuration document, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: Value = match text.parse::<toml::Table>() {
        Ok(t) => Value::Table(t),
        Err(e) => {
            return Err(NpiError::Config(vec![Diagnostic {
                path: String::new(),
                message: format!("not valid TOML: {e}"),
            }]))
        }
    };
    let mut diags = Diagnostics::default();
    walk_unknown_keys(&root, &mut diags);

    let mode: Option<Mode> = scalar(&root, "mode", &mut diags);
    if root.get("mode").is_none() {
        diags.push("mode", format!("missing; choose one of {}", Mode::ALL.map(Mode::name).join(", ")));
    }
    let seed: Option<u64> = scalar(&root, "seed", &mut diags);
    if root.get("seed").is_none() {
        diags.push("seed", "missing");
    }
    let output: Option<String> = scalar(&root, "output", &mut diags);
    let beads: Option<Vec<usize>> = scalar(&root, "beads", &mut diags);

    let mut cfg = ExperimentConfig {
        mode: mode.unwrap_or(Mode::Equilibrium),
        seed: seed.unwrap_or(0),
        output,
        beads: beads.clone().unwrap_or_default(),
        system: section(&root, "system", &mut diags),
        chain: section(&root, "chain", &mut diags),
        thermostat: section(&root, "thermostat", &mut diags),
        run: section(&root, "run", &mut diags),
        branches: section(&root, "branches", &mut diags),
        gradient: section(&root, "gradient", &mut diags),
        profile: section(&root, "profile", &mut diags),
        lindblad: section(&root, "lindblad", &mut diags),
        redfield: section(&root, "redfield", &mut diags),
        oscillator: section(&root, "oscillator", &mut diags),
    };
    if cfg.mode == Mode::NpiGradient && cfg.profile.is_none() && root.get("profile").is_none() {
        cfg.profile = Some(ProfileSection::default());
    }
    if let Some(mode) = mode {
        // sections present in the document, parsed or not
        let present = |k: &str| root.get(k).is_some();
        validate_into(&cfg, mode, &present, beads.is_some(), &mut diags);
    }
    if diags.list.is_empty() {
        Ok(cfg)
    } else {
        Err(NpiError::Config(diags.list))
    }
}

/// Checks the invariants of an already-typed configuration.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let mut diags = Diagnostics::default();
    let present = |k: &str| match k {
        "system" => cfg.system.is_some(),
        "chain" => cfg.chain.is_some(),
        "thermostat" => cfg.thermostat.is_some(),
        "run" => cfg.run.is_some(),
        "branches" => cfg.branches.is_some(),
        "gradient" => cfg.gradient.is_some(),
        "profile" => cfg.profile.is_some(),
        "lindblad" => cfg.lindblad.is_some(),
        "redfield" => cfg.redfield.is_some(),
        "oscillator" => cfg.oscillator.is_some(),
        _ => false,
    };
    validate_into(cfg, cfg.mode, &present, !cfg.beads.is_empty(), &mut diags);
    if diags.list.is_empty() {
        Ok(())
    } else {
        Err(NpiError::Config(diags.list))
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn validate_into(
    cfg: &ExperimentConfig,
    mode: Mode,
    present: &dyn Fn(&str) -> bool,
    has_beads: bool,
    diags: &mut Diagnostics,
) {
    let m = mode.name();
    for s in mode.required() {
        if !present(s) {
            diags.push(*s, format!("section [{s}] is required by mode {m}"));
        }
    }
    for s in [
        "system",
        "chain",
        "thermostat",
        "run",
        "branches",
        "gradient",
        "profile",
        "lindblad",
        "redfield",
        "oscillator",
    ] {
        if present(s) && !mode.allowed().contains(&s) {
            diags.push(s, format!("section [{s}] is not used by mode {m}"));
        }
    }
    if mode.is_sweep() {
        if !has_beads || cfg.beads.is_empty() {
            if has_beads || !diags.list.iter().any(|d| d.path == "beads") {
                diags.push("beads", "bead list must not be empty for a sweep");
            }
        } else if cfg.beads.contains(&0) {
            diags.push("beads", "bead counts must be at least 1");
        } else {
            let mut sorted = cfg.beads.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != cfg.beads.len() {
                diags.push("beads", "bead counts must be distinct");
            }
        }
    } else if has_beads {
        diags.push("beads", format!("mode {m} takes no bead list"));
    }

    if matches!(mode, Mode::Equilibrium | Mode::NpiGradient) {
        validate_md(cfg, mode, present, diags);
    }
    if mode == Mode::Lindblad {
        if let Some(l) = &cfg.lindblad {
            validate_lindblad(l, diags);
        }
    }
    if mode == Mode::Redfield {
        if let Some(r) = &cfg.redfield {
            validate_redfield(r, diags);
        }
    }
    if mode == Mode::OscillatorBenchmark {
        if let Some(o) = &cfg.oscillator {
            for (name, v) in [
                ("omega", o.omega),
                ("mass", o.mass),
                ("beta", o.beta),
                ("hbar", o.hbar),
                ("tau", o.tau),
                ("dt", o.dt),
                ("tolerance", o.tolerance),
            ] {
                if !positive(v) {
                    diags.push(format!("oscillator.{name}"), format!("must be positive, got {v}"));
                }
            }
            if o.production_steps == 0 || o.record_stride == 0 {
                diags.push("oscillator", "production_steps and record_stride must be positive");
            }
        }
    }
}

fn validate_md(cfg: &ExperimentConfig, mode: Mode, present: &dyn Fn(&str) -> bool, diags: &mut Diagnostics) {
    match (present("system"), present("chain")) {
        (false, false) => diags.push("system", "either [system] or [chain] is required"),
        (true, true) => diags.push("chain", "[system] and [chain] are mutually exclusive"),
        _ => {}
    }
    let spec = match (&cfg.system, &cfg.chain) {
        (Some(s), None) => match s.validate() {
            Ok(()) => Some(s.clone()),
            Err(e) => {
                diags.push("system", e.to_string());
                None
            }
        },
        (None, Some(c)) => match c.params().spec(c.beta, c.hbar) {
            Ok(s) => Some(s),
            Err(e) => {
                diags.push("chain", e.to_string());
                None
            }
        },
        _ => None,
    };
    if let Some(t) = &cfg.thermostat {
        if matches!(t, ThermostatSpec::RegionLangevin { .. }) {
            diags.push("thermostat", "region baths are configured in [gradient]; use pile_l or none here");
        } else if let Err(e) = t.validate() {
            diags.push("thermostat", e.to_string());
        }
    }
    if let Some(r) = &cfg.run {
        if !positive(r.dt) {
            diags.push("run.dt", format!("must be positive, got {}", r.dt));
        }
        if r.record_stride == 0 {
            diags.push("run.record_stride", "must be at least 1");
        }
        if mode == Mode::Equilibrium && r.production_steps == 0 {
            diags.push("run.production_steps", "must be at least 1");
        }
        if let Some(spec) = &spec {
            for name in &r.observables {
                if Builtin::parse(name, spec).is_err() {
                    let names: Vec<&str> =
                        npi_core::observables::BUILTIN_NAMES.iter().map(|s| s.split(':').next().unwrap_or(s)).collect();
                    let hint = nearest_key(name.split(':').next().unwrap_or(name), &names)
                        .map(|s| format!("; did you mean `{s}`?"))
                        .unwrap_or_default();
                    diags.push("run.observables", format!("unknown observable `{name}`{hint}"));
                }
            }
            match (&r.initial_positions, cfg.system.is_some()) {
                (None, true) => diags.push("run.initial_positions", "required for an explicit [system]"),
                (Some(x), _) if x.len() != spec.n_particles() || x.iter().any(|p| p.len() != spec.dimension) => diags
                    .push(
                        "run.initial_positions",
                        format!("need {} entries of length {}", spec.n_particles(), spec.dimension),
                    ),
                _ => {}
            }
        }
    }
    if mode != Mode::NpiGradient {
        return;
    }
    if let Some(b) = &cfg.branches {
        if b.n_branches == 0 || b.spacing_steps == 0 || b.record_stride == 0 || b.branch_length_steps == 0 {
            diags.push("branches", "n_branches, spacing_steps, branch_length_steps and record_stride must be positive");
        } else if b.branch_length_steps % b.record_stride != 0 {
            diags.push("branches.record_stride", "must divide branch_length_steps");
        }
        if b.switch_on_steps >= b.branch_length_steps && b.branch_length_steps > 0 {
            diags.push("branches.switch_on_steps", "must be shorter than the branch");
        }
    }
    if let Some(g) = &cfg.gradient {
        if !(g.t_cold > 0.0 && g.t_hot > g.t_cold && g.t_hot.is_finite()) {
            diags.push("gradient", format!("need T_hot > T_cold > 0 (got t_hot = {}, t_cold = {})", g.t_hot, g.t_cold));
        }
        if !positive(g.gamma) {
            diags.push("gradient.gamma", format!("must be positive, got {}", g.gamma));
        }
        if let Some(t) = g.internal_t {
            if !positive(t) {
                diags.push("gradient.internal_t", format!("must be positive, got {t}"));
            }
        }
        if !(g.average_fraction > 0.0 && g.average_fraction <= 1.0) {
            diags.push("gradient.average_fraction", format!("must lie in (0, 1], got {}", g.average_fraction));
        }
        if let Some(l) = &g.layout {
            if let Err(e) = l.validate() {
                diags.push("gradient.layout", e.to_string());
            }
        }
        if g.flux_estimator != FluxEstimator::Centroid {
            if let Some(spec) = &spec {
                if spec.topology.iter().any(|t| matches!(t, npi_core::potentials::PotentialTerm::HarmonicAngle { .. }))
                {
                    diags.push(
                        "gradient.flux_estimator",
                        "angle terms have no pair flux; remove them for gradient runs",
                    );
                }
            }
        }
    }
    if let Some(p) = &cfg.profile {
        if p.n_bins == 0 {
            diags.push("profile.n_bins", "must be at least 1");
        }
    }
}

fn validate_lindblad(l: &LindbladSection, diags: &mut Diagnostics) {
    let dim = match l.hamiltonian.build() {
        Ok(h) => Some(h.nrows()),
        Err(e) => {
            diags.push("lindblad.hamiltonian", e);
            None
        }
    };
    for (k, j) in l.jumps.iter().enumerate() {
        if !(j.rate >= 0.0 && j.rate.is_finite()) {
            diags.push(format!("lindblad.jumps[{k}].rate"), format!("must be non-negative, got {}", j.rate));
        }
        match j.operator.build() {
            Ok(m) if dim.is_some_and(|d| d != m.nrows()) => {
                diags.push(format!("lindblad.jumps[{k}].operator"), "dimension differs from the Hamiltonian")
            }
            Err(e) => diags.push(format!("lindblad.jumps[{k}].operator"), e),
            _ => {}
        }
    }
    for (k, o) in l.observables.iter().enumerate() {
        match o.operator.build() {
            Ok(m) if dim.is_some_and(|d| d != m.nrows()) => {
                diags.push(format!("lindblad.observables[{k}]"), "dimension differs from the Hamiltonian")
            }
            Err(e) => diags.push(format!("lindblad.observables[{k}]"), e),
            _ => {}
        }
    }
    if let Some(d) = dim {
        if let Err(e) = l.initial.build(d) {
            diags.push("lindblad.initial", e);
        }
    }
    if !positive(l.hbar) {
        diags.push("lindblad.hbar", "must be positive");
    }
    if !positive(l.dt) || !(l.t_final >= 0.0) || l.record_every == 0 {
        diags.push("lindblad", "need dt > 0, t_final >= 0 and record_every >= 1");
    }
}

fn validate_redfield(r: &RedfieldSection, diags: &mut Diagnostics) {
    let dim = match r.model {
        RedfieldModel::TiltedQubit => Some(2),
        RedfieldModel::General => match &r.hamiltonian {
            None => {
                diags.push("redfield.hamiltonian", "required for the general model");
                None
            }
            Some(h) => match h.build() {
                Ok(m) => Some(m.nrows()),
                Err(e) => {
                    diags.push("redfield.hamiltonian", e);
                    None
                }
            },
        },
    };
    if r.model == RedfieldModel::General {
        if r.couplings.is_empty() {
            diags.push("redfield.couplings", "at least one coupling operator is required");
        }
        for (k, c) in r.couplings.iter().enumerate() {
            match c.build() {
                Ok(m) if dim.is_some_and(|d| d != m.nrows()) => {
                    diags.push(format!("redfield.couplings[{k}]"), "dimension differs from the Hamiltonian")
                }
                Err(e) => diags.push(format!("redfield.couplings[{k}]"), e),
                _ => {}
            }
        }
    }
    if let Some(d) = dim {
        if let Err(e) = r.initial.build(d) {
            diags.push("redfield.initial", e);
        }
    }
    if !positive(r.dt) || !(r.t_final >= 0.0) || r.record_every == 0 {
        diags.push("redfield", "need dt > 0, t_final >= 0 and record_every >= 1");
    }
    if !positive(r.hbar) || !(r.alpha2 >= 0.0) {
        diags.push("redfield", "need hbar > 0 and alpha2 >= 0");
    }
    if let Some(s) = &r.scan {
        if r.model != RedfieldModel::TiltedQubit {
            diags.push("redfield.scan", "scans are defined for the tilted_qubit model only");
        } else if s.thetas.is_empty() || s.n_polar == 0 || s.n_azimuth == 0 {
            diags.push("redfield.scan", "need at least one angle and one initial state");
        }
    }
}

/// TOML text that parses back to the same configuration.
pub fn render_config(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| NpiError::Serialization(e.to_string()))
}
