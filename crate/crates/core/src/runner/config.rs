//! Scenario configuration: TOML text, dotted-key overrides and validation.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::Splitting;
use crate::grid::SpatialGrid;
use crate::units::{UnitSystem, ATOMIC_MASS_UNIT, RB87_MASS_U, STANDARD_GRAVITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Lowest bands of both spins.
    #[serde(rename = "fig1")]
    Fig1,
    /// Closed-form single-band trajectories.
    #[serde(rename = "semiclassical")]
    Semiclassical,
    /// One period of exact evolution with snapshots, centre-of-mass series
    /// and the semiclassical overlay.
    #[serde(rename = "fig2+fig3")]
    Fig2Fig3,
    /// Full protocol: evolution, separation, return fidelity and coherence.
    #[serde(rename = "cat")]
    Cat,
    #[serde(rename = "reverse_at_half")]
    ReverseAtHalf,
    #[serde(rename = "freeze_at_half", alias = "freeze")]
    FreezeAtHalf,
    /// Evolution to half a period followed by the microwave-rotation scan.
    #[serde(rename = "coherence")]
    Coherence,
    /// Time-step, cutoff and grid self-tests.
    #[serde(rename = "convergence")]
    Convergence,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Fig1,
        Scenario::Semiclassical,
        Scenario::Fig2Fig3,
        Scenario::Cat,
        Scenario::ReverseAtHalf,
        Scenario::FreezeAtHalf,
        Scenario::Coherence,
        Scenario::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Semiclassical => "semiclassical",
            Scenario::Fig2Fig3 => "fig2+fig3",
            Scenario::Cat => "cat",
            Scenario::ReverseAtHalf => "reverse_at_half",
            Scenario::FreezeAtHalf => "freeze_at_half",
            Scenario::Coherence => "coherence",
            Scenario::Convergence => "convergence",
        }
    }

    /// Whether the scenario propagates wave packets.
    pub fn evolves(self) -> bool {
        matches!(
            self,
            Scenario::Fig2Fig3 | Scenario::Cat | Scenario::ReverseAtHalf | Scenario::FreezeAtHalf | Scenario::Coherence
        )
    }

    /// Schedule forced by the scenario, if any.
    pub fn implied_schedule(self) -> Option<ScheduleKind> {
        match self {
            Scenario::ReverseAtHalf => Some(ScheduleKind::ReverseAtHalf),
            Scenario::FreezeAtHalf => Some(ScheduleKind::FreezeAtHalf),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "freeze" {
            return Ok(Scenario::FreezeAtHalf);
        }
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    ReverseAtHalf,
    FreezeAtHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketShape {
    #[default]
    Gaussian,
    RaisedCosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsConfig {
    pub wavelength_nm: f64,
    /// Atomic mass units.
    pub mass_u: f64,
    /// m/s²
    pub gravity: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self { wavelength_nm: 785.0, mass_u: RB87_MASS_U, gravity: STANDARD_GRAVITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    /// Vm in E_r.
    pub depth: f64,
    /// Polarization angle before the switch (radians).
    pub theta_initial: f64,
    /// Polarization angle after the switch (radians).
    pub theta_final: f64,
    /// Plane-wave cutoff L.
    pub cutoff: usize,
    /// Bands written to the band tables.
    pub bands: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { depth: 5.0, theta_initial: 0.0, theta_final: FRAC_PI_2, cutoff: crate::bands::DEFAULT_CUTOFF, bands: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    /// Quasimomentum width w in units of π/a.
    pub width: f64,
    pub shape: PacketShape,
    /// Amplitude of |0⟩ (normalized together with `beta`).
    pub alpha: f64,
    /// Amplitude of |1⟩.
    pub beta: f64,
    /// Phase of β (radians).
    pub beta_phase: f64,
}

impl Default for PacketConfig {
    fn default() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self { width: 0.1, shape: PacketShape::Gaussian, alpha: a, beta: a, beta_phase: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub sites: usize,
    pub points_per_site: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { sites: crate::grid::DEFAULT_SITES, points_per_site: crate::grid::DEFAULT_POINTS_PER_SITE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSettings {
    /// Fa/E_r.
    pub force: f64,
    /// Defaults to the scenario's schedule, else constant.
    pub schedule: Option<ScheduleKind>,
    /// Target step (τ_r); the step actually used divides the period into a
    /// multiple of `samples` steps.
    pub dt: f64,
    /// Duration in Bloch periods.
    pub periods: f64,
    /// Snapshots per run, equally spaced including both ends.
    pub snapshots: usize,
    /// Observable samples per Bloch period.
    pub samples: usize,
    /// Bands tracked for populations and the lowest-band centre of mass.
    pub tracked_bands: usize,
    /// `rkn4` (default) or `strang`.
    pub splitting: Splitting,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        Self {
            force: 0.005,
            schedule: None,
            dt: crate::evolve::DEFAULT_DT,
            periods: 1.0,
            snapshots: 7,
            samples: 256,
            tracked_bands: 4,
            splitting: Splitting::Rkn4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoherenceConfig {
    /// Rotation angle of the microwave pulse (radians).
    pub polar: f64,
    /// Azimuths sampled on [0, 2π).
    pub azimuths: usize,
    /// Random relative phases averaged for the dephased control.
    pub dephased_samples: usize,
    pub seed: u64,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        Self { polar: FRAC_PI_2, azimuths: 32, dephased_samples: 64, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    /// Sites of the reduced grid used for the time-step and grid checks.
    pub sites: usize,
    /// Duration of the checks as a fraction of the Bloch period.
    pub fraction: f64,
    /// Largest allowed change of the final ⟨ξ⟩ (lattice constants) between
    /// the two smallest steps.
    pub com_tolerance: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { sites: 128, fraction: 0.125, com_tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Parent directory of the run directory.
    pub output_dir: PathBuf,
    pub units: UnitsConfig,
    pub lattice: LatticeConfig,
    pub packet: PacketConfig,
    pub grid: GridConfig,
    pub evolution: EvolutionSettings,
    pub coherence: CoherenceConfig,
    pub convergence: ConvergenceConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Cat,
            output_dir: PathBuf::from("runs"),
            units: UnitsConfig::default(),
            lattice: LatticeConfig::default(),
            packet: PacketConfig::default(),
            grid: GridConfig::default(),
            evolution: EvolutionSettings::default(),
            coherence: CoherenceConfig::default(),
            convergence: ConvergenceConfig::default(),
        }
    }
}

/// Parse and validate TOML config text. Missing keys take their defaults;
/// unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with(text, &[])
}

/// As [`parse_config`], then apply `KEY=VALUE` overrides with dotted keys
/// (`lattice.depth=4`). Values are read as TOML and fall back to strings.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ScenarioConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not of the form KEY=VALUE")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{item}` has an empty key")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap_or(key);
    let mut node = table;
    for p in parts {
        let entry = node.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("`{field}` {reason}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let u = &self.units;
        check(u.wavelength_nm.is_finite() && u.wavelength_nm > 0.0, "units.wavelength_nm", "must be positive")?;
        check(u.mass_u.is_finite() && u.mass_u > 0.0, "units.mass_u", "must be positive")?;
        check(u.gravity.is_finite() && u.gravity > 0.0, "units.gravity", "must be positive")?;

        let l = &self.lattice;
        check(l.depth.is_finite() && l.depth >= 0.0, "lattice.depth", "must be non-negative")?;
        check(l.theta_initial.is_finite(), "lattice.theta_initial", "must be finite")?;
        check(l.theta_final.is_finite(), "lattice.theta_final", "must be finite")?;
        check(l.cutoff >= 1, "lattice.cutoff", "must be at least 1")?;
        check(l.bands >= 1 && l.bands <= 2 * l.cutoff + 1, "lattice.bands", "must be between 1 and 2·cutoff + 1")?;

        let p = &self.packet;
        check(p.width.is_finite() && p.width > 0.0 && p.width < 1.0, "packet.width", "must lie in (0, 1)")?;
        check(p.alpha.is_finite() && p.beta.is_finite(), "packet.alpha/beta", "must be finite")?;
        check(p.alpha * p.alpha + p.beta * p.beta > 0.0, "packet.alpha/beta", "must not both vanish")?;
        check(p.beta_phase.is_finite(), "packet.beta_phase", "must be finite")?;

        let g = &self.grid;
        check(g.sites >= 2 && g.sites.is_multiple_of(2), "grid.sites", "must be even and at least 2")?;
        check(g.points_per_site >= 4, "grid.points_per_site", "must be at least 4")?;

        let e = &self.evolution;
        check(e.force.is_finite() && e.force >= 0.0, "evolution.force", "must be non-negative")?;
        if self.scenario != Scenario::Fig1 {
            check(e.force > 0.0, "evolution.force", "must be positive: zero force has no Bloch period")?;
        }
        if let (Some(implied), Some(given)) = (self.scenario.implied_schedule(), e.schedule) {
            check(implied == given, "evolution.schedule", "conflicts with the scenario")?;
        }
        check(e.dt.is_finite() && e.dt > 0.0, "evolution.dt", "must be positive")?;
        check(e.periods.is_finite() && e.periods > 0.0, "evolution.periods", "must be positive")?;
        check(e.snapshots >= 2, "evolution.snapshots", "must be at least 2")?;
        check(e.samples >= 2 && e.samples.is_multiple_of(2), "evolution.samples", "must be even and at least 2")?;
        check(e.tracked_bands >= 1, "evolution.tracked_bands", "must be at least 1")?;

        let c = &self.coherence;
        check(c.polar.is_finite(), "coherence.polar", "must be finite")?;
        check(c.azimuths >= 4, "coherence.azimuths", "must be at least 4")?;
        check(c.dephased_samples >= 1, "coherence.dephased_samples", "must be at least 1")?;

        let v = &self.convergence;
        check(v.sites >= 2 && v.sites.is_multiple_of(2), "convergence.sites", "must be even and at least 2")?;
        check(v.fraction.is_finite() && v.fraction > 0.0, "convergence.fraction", "must be positive")?;
        check(v.com_tolerance.is_finite() && v.com_tolerance > 0.0, "convergence.com_tolerance", "must be positive")?;
        Ok(())
    }

    pub fn unit_system(&self) -> Result<UnitSystem> {
        UnitSystem::new(self.units.wavelength_nm * 1e-9, self.units.mass_u * ATOMIC_MASS_UNIT, self.units.gravity)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.sites, self.grid.points_per_site)
    }

    pub fn schedule_kind(&self) -> ScheduleKind {
        self.scenario.implied_schedule().or(self.evolution.schedule).unwrap_or_default()
    }

    /// Normalized (α, β) with the configured phase on β.
    pub fn amplitudes(&self) -> (num_complex::Complex64, num_complex::Complex64) {
        let p = &self.packet;
        let n = (p.alpha * p.alpha + p.beta * p.beta).sqrt();
        (
            num_complex::Complex64::new(p.alpha / n, 0.0),
            num_complex::Complex64::from_polar(p.beta / n, p.beta_phase),
        )
    }

    /// Whether both internal components are populated.
    pub fn is_spinor(&self) -> bool {
        let (a, b) = self.amplitudes();
        a.norm_sqr() > 1e-14 && b.norm_sqr() > 1e-14
    }

    /// Hex SHA-256 of the config, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = serde_json::to_string(&c).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// `<output_dir>/<scenario>-<first 16 hex digits of the hash>`.
    pub fn run_dir(&self) -> PathBuf {
        let name = self.scenario.name().replace('+', "_");
        self.output_dir.join(format!("{name}-{}", &self.hash()[..16]))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
