//! Scenario configuration: a TOML file with strict parsing and defaults
//! matching the reference scenario (R = 0.25, Δz = 6, φ0 = 21, Δp = 0.05).

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use wavepacket_core::cache::{build_default_cache, QuadratureCache};
use wavepacket_core::packet::PacketSpec;
use wavepacket_core::pulse::{Constants, GaussianSinePulse, Pulse, OMEGA_800NM_AU, SPEED_OF_LIGHT_AU};
use wavepacket_core::Vec3;

pub const SNAPSHOT_LABELS: [&str; 6] = ["i", "ii", "iii", "iv", "v", "vi"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub pulse: PulseConfig,
    pub packet: PacketConfig,
    pub times: TimesConfig,
    pub grid: GridConfig,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseModel {
    GaussianSine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub model: PulseModel,
    /// Peak of A/c² before the envelope (R).
    pub amplitude: f64,
    pub delta_z: f64,
    pub phi0: f64,
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_override: Option<f64>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            model: PulseModel::GaussianSine,
            amplitude: 0.25,
            delta_z: 6.0,
            phi0: 21.0,
            omega: OMEGA_800NM_AU,
            c_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    pub p0: Vec3,
    pub x0: Vec3,
    /// Lab-frame Δp_x = Δp_z (equal to the tilde-frame width).
    pub dp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp_y: Option<f64>,
    /// Overrides the z-tilde width for a non-axially-symmetric packet.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp_tilde_z: Option<f64>,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self {
            p0: [0.0; 3],
            x0: [0.0; 3],
            dp: 0.05,
            dp_y: None,
            dp_tilde_z: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimesConfig {
    pub t_start: f64,
    /// Defaults to the end of the pulse support.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub n_samples: usize,
    pub named_snapshots: Vec<String>,
}

impl Default for TimesConfig {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: None,
            n_samples: 201,
            named_snapshots: SNAPSHOT_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xz,
    Xy,
    Yz,
}

impl Plane {
    /// Indices of the two in-plane lab axes.
    pub fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xz => (0, 2),
            Plane::Xy => (0, 1),
            Plane::Yz => (1, 2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::Xz => "xz",
            Plane::Xy => "xy",
            Plane::Yz => "yz",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Full edge length of the slice in a.u.
    pub extent: f64,
    pub n: usize,
    pub plane: Plane,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            extent: 70.0,
            n: 256,
            plane: Plane::Xz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Sample seed; `WPL_SEED` takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub superposition_samples: usize,
    pub n_quad: usize,
    /// Half-width of the momentum integration in units of Δp.
    pub p_span_widths: f64,
    pub residual_samples: usize,
    pub residual_momentum: Vec3,
    /// The residual runs at amplitude `residual_scale * R`.
    pub residual_scale: f64,
    pub kz_bound: f64,
    pub xy_bound: f64,
    pub h_x: f64,
    pub h_t: f64,
    pub normalization_grid: usize,
    pub box_sigmas: f64,
    /// RK4 step; defaults to a two-hundredth of the carrier period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rk4_dt: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: None,
            superposition_samples: 100,
            n_quad: 64,
            p_span_widths: 6.0,
            residual_samples: 200,
            residual_momentum: [0.0; 3],
            residual_scale: 0.125,
            kz_bound: 0.1,
            xy_bound: 100.0,
            h_x: 1e-2,
            h_t: 1e-4,
            normalization_grid: 128,
            box_sigmas: 6.0,
            rk4_dt: None,
        }
    }
}

/// Parses TOML; unknown keys are errors.
pub fn parse(text: &str) -> CliResult<ScenarioConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load(path: &Path) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub pulse: GaussianSinePulse,
    pub spec: PacketSpec,
    pub cache: QuadratureCache,
    pub seed: u64,
}

impl Scenario {
    /// Validates `config`, fills in derived defaults and builds the cache.
    /// `seed` is the already-resolved oracle seed.
    pub fn new(mut config: ScenarioConfig, seed: u64) -> CliResult<Self> {
        let pc = &config.pulse;
        let c = pc.c_override.unwrap_or(SPEED_OF_LIGHT_AU);
        let pulse = GaussianSinePulse::new(pc.amplitude, pc.delta_z, pc.phi0, pc.omega, Constants::new(c)?)?;
        let pk = &config.packet;
        let spec = PacketSpec::new(pk.p0, pk.x0, pk.dp, pk.dp_y.unwrap_or(pk.dp), pk.dp_tilde_z.unwrap_or(pk.dp))?;
        spec.classical_init().validate(c)?;
        let t_end = config.times.t_end.unwrap_or_else(|| pulse.support_end());
        let t_start = config.times.t_start;
        if !(t_start.is_finite() && t_start >= 0.0 && t_end.is_finite() && t_end > t_start) {
            return Err(CliError::Config(format!("need 0 <= t_start < t_end, got {t_start}, {t_end}")));
        }
        if config.times.n_samples < 2 {
            return Err(CliError::Config("times.n_samples must be >= 2".into()));
        }
        for label in &config.times.named_snapshots {
            snapshot_time(label, &pulse)?;
        }
        let g = &config.grid;
        if !(g.extent.is_finite() && g.extent > 0.0) || g.n < 2 {
            return Err(CliError::Config("grid needs extent > 0 and n >= 2".into()));
        }
        let v = &config.verify;
        if !(v.residual_scale > 0.0 && v.residual_scale <= 1.0) {
            return Err(CliError::Config("verify.residual_scale must be in (0, 1]".into()));
        }
        if !(v.kz_bound > 0.0 && v.xy_bound > 0.0) || v.residual_samples == 0 || v.superposition_samples == 0 {
            return Err(CliError::Config("verify sample bounds and counts must be positive".into()));
        }
        config.times.t_end = Some(t_end);
        config.verify.seed = Some(seed);
        let horizon = t_end.max(pulse.support_end());
        let cache = build_default_cache(Arc::new(pulse), horizon)?;
        Ok(Self {
            config,
            pulse,
            spec,
            cache,
            seed,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.config.times.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.config.times.t_end.unwrap_or_else(|| self.pulse.support_end())
    }

    /// Evenly spaced sample times over `[t_start, t_end]`.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.config.times.n_samples;
        let (a, b) = (self.t_start(), self.t_end());
        (0..n)
            .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect()
    }

    /// The resolved configuration as TOML.
    pub fn resolved_toml(&self) -> CliResult<String> {
        toml::to_string(&self.config).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Time of a named snapshot: `i` at t = 0, the others at carrier phase
/// offsets `φ - φ0` of +π, +π/2, 0, -π/2, -π for `ii` to `vi`.
pub fn snapshot_time(label: &str, pulse: &GaussianSinePulse) -> CliResult<f64> {
    let offset = match label {
        "i" => return Ok(0.0),
        "ii" => PI,
        "iii" => 0.5 * PI,
        "iv" => 0.0,
        "v" => -0.5 * PI,
        "vi" => -PI,
        other => return Err(CliError::Config(format!("unknown snapshot label {other:?}"))),
    };
    Ok((pulse.phi0 + offset) / pulse.omega)
}

/// A time given as a number or a snapshot label.
pub fn parse_time(arg: &str, pulse: &GaussianSinePulse) -> CliResult<f64> {
    match arg.parse::<f64>() {
        Ok(t) if t.is_finite() && t >= 0.0 => Ok(t),
        Ok(t) => Err(CliError::Config(format!("time must be finite and >= 0, got {t}"))),
        Err(_) => snapshot_time(arg, pulse),
    }
}
