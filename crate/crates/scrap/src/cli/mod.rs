//! Scenario runner: every computation in the crate as a reproducible `scrap`
//! subcommand driven by a JSON config, with CSV/JSON outputs and a manifest
//! of content digests.

mod commands;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{ConservationReport, IntegratorConfig};
use crate::error::{Error, Result};
use crate::inhom::{LinearInhom, SpaceTimePerturbation, StabilityAxis};
use crate::landscape::GridSpec;
use crate::model::{PulseParams, ReducedCoords};

#[derive(Parser, Debug)]
#[command(name = "scrap", version, about = "SCRAP dynamics, optimal pulses, robustness maps and geometric phases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Adiabatic efficiency map, adiabaticity map and critical points.
    AdiabaticMap(RunArgs),
    /// Full-dynamics efficiency maps P^a and P^b with their maxima.
    BlochMap(RunArgs),
    /// Single SCRAP trajectory with adiabatic reference and correction.
    Simulate(SimulateArgs),
    /// Optimal pulses by shooting on the Pontryagin extremal system.
    Pmp(PmpArgs),
    /// Per-position trajectory families under an inhomogeneous perturbation.
    Ensemble(EnsembleArgs),
    /// Stability maps of the optimal Stark field over perturbation parameters.
    Stability(StabilityArgs),
    /// Winding number and geometric phase of a control path.
    Geophase(GeophaseArgs),
    /// Re-check the content digests recorded in a run manifest.
    Verify {
        /// Output directory containing manifest.json.
        dir: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON scenario config; paper defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides config and SCRAP_OUT).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for grid sweeps (default: hardware parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Probe time override.
    #[arg(long)]
    pub probe_time: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Reduced Stark centre offset.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Reduced Stark width.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PmpArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Cost functional: energy | fixed-pump-energy | mixed-adiabatic.
    #[arg(long)]
    pub cost: Option<String>,
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Perturbation kind: linear | zt.
    #[arg(long)]
    pub kind: Option<String>,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Scan axis: A | k | w.
    #[arg(long)]
    pub axis: Option<String>,
}

#[derive(Args, Debug)]
pub struct GeophaseArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Path CSV (t,delta,omega) instead of the configured generator.
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Accept an open path and report the polar functional with a warning.
    #[arg(long)]
    pub allow_open: bool,
}

/// Cost selector resolved against the config's pulse and perturbation blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostTag {
    Energy,
    FixedPumpEnergy,
    EnsembleLinear,
    EnsembleZt,
    MixedAdiabatic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub random_restarts: usize,
    /// Initial unknowns tried before the deterministic ladder.
    pub initial_guess: Option<Vec<f64>>,
}

impl Default for ShootingSettings {
    fn default() -> Self {
        ShootingSettings {
            tolerance: 1e-6,
            max_iterations: 60,
            random_restarts: 24,
            initial_guess: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSettings {
    /// linear | zt
    pub kind: String,
    pub k: f64,
    pub amplitude: f64,
    pub temporal_frequency: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Positions sampled across the window for trajectory bundles.
    pub z_count: usize,
}

impl Default for PerturbationSettings {
    fn default() -> Self {
        PerturbationSettings {
            kind: "linear".into(),
            k: 0.01,
            amplitude: 0.05,
            temporal_frequency: 20.0,
            z_min: 0.0,
            z_max: 1.0,
            z_count: 3,
        }
    }
}

impl PerturbationSettings {
    pub fn linear(&self) -> LinearInhom {
        LinearInhom { k: self.k, z_min: self.z_min, z_max: self.z_max }
    }

    pub fn zt(&self, window: (f64, f64)) -> SpaceTimePerturbation {
        SpaceTimePerturbation {
            amplitude: self.amplitude,
            temporal_frequency: self.temporal_frequency,
            spatial_wavevector: self.k,
            t_start: window.0,
            t_end: window.1,
            z_min: self.z_min,
            z_max: self.z_max,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySettings {
    /// A | k | w
    pub axis: String,
    pub param_min: f64,
    pub param_max: f64,
    pub n_param: usize,
    pub n_z: usize,
    /// Probe time as a fraction of the window.
    pub probe_fraction: f64,
    /// Cross-z spread threshold as a fraction of max_t |delta*|.
    pub threshold: f64,
}

impl Default for StabilitySettings {
    fn default() -> Self {
        StabilitySettings {
            axis: "A".into(),
            param_min: 0.0,
            param_max: 0.25,
            n_param: 11,
            n_z: 11,
            probe_fraction: 0.4,
            threshold: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeophaseSettings {
    /// circle | cpr-pair | file
    pub source: String,
    pub circle_radius: f64,
    pub circle_samples: usize,
    pub file: Option<PathBuf>,
    pub allow_open: bool,
}

impl Default for GeophaseSettings {
    fn default() -> Self {
        GeophaseSettings {
            source: "circle".into(),
            circle_radius: 1.0,
            circle_samples: 720,
            file: None,
            allow_open: false,
        }
    }
}

/// One JSON document per run; CLI flags override individual fields and the
/// resolved result is echoed next to the outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Set by the runner to the executed subcommand.
    pub scenario: Option<String>,
    pub pulse: PulseParams,
    pub integrator: IntegratorConfig,
    pub window: (f64, f64),
    /// Defaults to `t_p + 3 sigma_p` where a probe is needed.
    pub probe_time: Option<f64>,
    pub grid: GridSpec,
    /// Stark cell for `simulate`; the pulse block's own (t_s, sigma_s) when absent.
    pub reduced: Option<ReducedCoords>,
    /// Uniform output samples per trajectory.
    pub samples: usize,
    pub cost: CostTag,
    pub shooting: ShootingSettings,
    pub perturbation: PerturbationSettings,
    pub stability: StabilitySettings,
    pub geophase: GeophaseSettings,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: None,
            pulse: crate::model::default_pulse_params(),
            integrator: IntegratorConfig::default(),
            window: (0.0, 100.0),
            probe_time: None,
            grid: GridSpec::paper_default(),
            reduced: None,
            samples: 2001,
            cost: CostTag::Energy,
            shooting: ShootingSettings::default(),
            perturbation: PerturbationSettings::default(),
            stability: StabilitySettings::default(),
            geophase: GeophaseSettings::default(),
            out_dir: None,
            seed: 0,
            workers: None,
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn resolve(run: &RunArgs, scenario: &str) -> Result<Self> {
        let mut cfg = match &run.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        cfg.scenario = Some(scenario.to_string());
        if let Some(seed) = run.seed {
            cfg.seed = seed;
        }
        if let Some(w) = run.workers {
            cfg.workers = Some(w);
        }
        if let Some(t) = run.probe_time {
            cfg.probe_time = Some(t);
        }
        if let Some(out) = &run.out {
            cfg.out_dir = Some(out.clone());
        }
        cfg.pulse.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.integrator.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(cfg.window.1 > cfg.window.0) {
            return Err(Error::InvalidConfig("window must have positive length".into()));
        }
        Ok(cfg)
    }

    pub fn probe_or_default(&self) -> f64 {
        self.probe_time
            .unwrap_or(self.pulse.t_p + 3.0 * self.pulse.sigma_p)
    }

    /// Output directory: flag/config, then $SCRAP_OUT/<scenario>, then
    /// ./scrap-out/<scenario>.
    pub fn out_dir(&self) -> PathBuf {
        if let Some(d) = &self.out_dir {
            return d.clone();
        }
        let scenario = self.scenario.as_deref().unwrap_or("run");
        match std::env::var_os("SCRAP_OUT") {
            Some(root) => PathBuf::from(root).join(scenario),
            None => PathBuf::from("scrap-out").join(scenario),
        }
    }

    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex_digest(text.as_bytes())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario: String,
    pub config_hash: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub files: Vec<FileDigest>,
    pub conservation: Option<ConservationReport>,
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Collects output files, recording a digest per file for the manifest.
pub struct RunWriter {
    dir: PathBuf,
    scenario: String,
    config_hash: String,
    started_unix_ms: u64,
    files: Vec<FileDigest>,
    pub conservation: Option<ConservationReport>,
}

impl RunWriter {
    pub fn create(cfg: &ScenarioConfig) -> Result<Self> {
        let dir = cfg.out_dir();
        std::fs::create_dir_all(&dir)?;
        let mut w = RunWriter {
            dir,
            scenario: cfg.scenario.clone().unwrap_or_else(|| "run".into()),
            config_hash: cfg.hash(),
            started_unix_ms: now_ms(),
            files: Vec::new(),
            conservation: None,
        };
        w.write("resolved-config.json", serde_json::to_vec_pretty(cfg)?.as_slice())?;
        Ok(w)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: hex_digest(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, serde_json::to_vec_pretty(value)?.as_slice())
    }

    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: self.scenario.clone(),
            config_hash: self.config_hash.clone(),
            started_unix_ms: self.started_unix_ms,
            finished_unix_ms: now_ms(),
            files: self.files.clone(),
            conservation: self.conservation,
        };
        let path = self.dir.join("manifest.json");
        std::fs::write(path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidParams(_) | Error::Json(_) => 2,
        Error::ShootingFailed { .. } | Error::StepUnderflow { .. } | Error::TooManyFailures { .. } => 3,
        Error::ConicalIntersection
        | Error::DegenerateWidth
        | Error::MissingDerivatives
        | Error::RefinementNeeded { .. }
        | Error::OutsideWindow { .. }
        | Error::NotApplicable(_) => 4,
        Error::Io(_) => 1,
    }
}

/// Run inside a rayon pool sized by the config (default: all cores).
fn with_pool<T>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(f)
}

/// Parse argv, run, and translate errors to exit codes. The binary is a thin
/// wrapper around this.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run_command(command: Command) -> Result<()> {
    match command {
        Command::AdiabaticMap(run) => {
            let cfg = ScenarioConfig::resolve(&run, "adiabatic-map")?;
            with_pool(cfg.workers, || commands::adiabatic_map(&cfg))
        }
        Command::BlochMap(run) => {
            let cfg = ScenarioConfig::resolve(&run, "bloch-map")?;
            with_pool(cfg.workers, || commands::bloch_map(&cfg))
        }
        Command::Simulate(args) => {
            let mut cfg = ScenarioConfig::resolve(&args.run, "simulate")?;
            match (args.tau, args.sigma, cfg.reduced) {
                (Some(tau), Some(sigma), _) => cfg.reduced = Some(ReducedCoords { tau, sigma }),
                (None, None, _) => {}
                (tau, sigma, Some(rc)) => {
                    cfg.reduced =
                        Some(ReducedCoords { tau: tau.unwrap_or(rc.tau), sigma: sigma.unwrap_or(rc.sigma) })
                }
                _ => {
                    return Err(Error::InvalidConfig(
                        "--tau and --sigma must be given together unless the config has a reduced block".into(),
                    ))
                }
            }
            with_pool(cfg.workers, || commands::simulate(&cfg))
        }
        Command::Pmp(args) => {
            let mut cfg = ScenarioConfig::resolve(&args.run, "pmp")?;
            if let Some(c) = &args.cost {
                cfg.cost = parse_cost_tag(c)?;
            }
            with_pool(cfg.workers, || commands::pmp(&cfg))
        }
        Command::Ensemble(args) => {
            let mut cfg = ScenarioConfig::resolve(&args.run, "ensemble")?;
            if let Some(k) = &args.kind {
                cfg.perturbation.kind = k.clone();
            }
            with_pool(cfg.workers, || commands::ensemble(&cfg))
        }
        Command::Stability(args) => {
            let mut cfg = ScenarioConfig::resolve(&args.run, "stability")?;
            if let Some(a) = &args.axis {
                cfg.stability.axis = a.clone();
            }
            with_pool(cfg.workers, || commands::stability(&cfg))
        }
        Command::Geophase(args) => {
            let mut cfg = ScenarioConfig::resolve(&args.run, "geophase")?;
            if let Some(p) = &args.path {
                cfg.geophase.source = "file".into();
                cfg.geophase.file = Some(p.clone());
            }
            if args.allow_open {
                cfg.geophase.allow_open = true;
            }
            with_pool(cfg.workers, || commands::geophase(&cfg))
        }
        Command::Verify { dir } => commands::verify(&dir),
    }
}

pub fn parse_cost_tag(s: &str) -> Result<CostTag> {
    match s {
        "energy" => Ok(CostTag::Energy),
        "fixed-pump-energy" => Ok(CostTag::FixedPumpEnergy),
        "ensemble-linear" => Ok(CostTag::EnsembleLinear),
        "ensemble-zt" => Ok(CostTag::EnsembleZt),
        "mixed-adiabatic" => Ok(CostTag::MixedAdiabatic),
        other => Err(Error::InvalidConfig(format!("unknown cost tag '{other}'"))),
    }
}

pub fn parse_axis(s: &str) -> Result<StabilityAxis> {
    match s {
        "A" | "a" | "amplitude" => Ok(StabilityAxis::Amplitude),
        "k" | "wavevector" => Ok(StabilityAxis::SpatialWavevector),
        "w" | "frequency" => Ok(StabilityAxis::TemporalFrequency),
        other => Err(Error::InvalidConfig(format!("unknown stability axis '{other}'"))),
    }
}
