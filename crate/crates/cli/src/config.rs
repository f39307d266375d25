//! Experiment configuration: a TOML file with typed sections.
//!
//! Every key has a default, so an empty file (or no file) is a valid
//! configuration. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use nlfb_core::{Ball, CellGrid, Params, Preset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Energy,
    Extend,
    Replace,
    Rearrange,
    Minimize,
    Density,
    Growth,
    Verify,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Energy => "energy",
            Experiment::Extend => "extend",
            Experiment::Replace => "replace",
            Experiment::Rearrange => "rearrange",
            Experiment::Minimize => "minimize",
            Experiment::Density => "density",
            Experiment::Growth => "growth",
            Experiment::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Must match the subcommand when given.
    pub experiment: Option<Experiment>,
    pub preset: Preset,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: ParamsSection,
    pub grid: GridSection,
    pub tolerances: Tolerances,
    pub minimize: MinimizeSection,
    pub density: RadiiSection,
    pub replace: ReplaceSection,
    pub rearrange: RearrangeSection,
    pub verify: VerifySection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            experiment: None,
            preset: Preset::Lobe,
            seed: 1,
            output_dir: PathBuf::from("nlfb-out"),
            params: ParamsSection::default(),
            grid: GridSection::default(),
            tolerances: Tolerances::default(),
            minimize: MinimizeSection::default(),
            density: RadiiSection::default(),
            replace: ReplaceSection::default(),
            rearrange: RearrangeSection::default(),
            verify: VerifySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub n: usize,
    pub s: f64,
    pub sigma: f64,
    pub lambda_growth: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            n: 1,
            s: 0.75,
            sigma: 0.5,
            lambda_growth: 1.0e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// The box is `[−half_width, half_width]ⁿ`.
    pub half_width: f64,
    pub cells_per_half: usize,
    pub omega_radius: f64,
    /// Height of the extended grid.
    pub z_top: f64,
    /// Radius fraction of the cylinder where replacements are taken.
    pub cylinder_fraction: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            half_width: 2.0,
            cells_per_half: 64,
            omega_radius: 1.0,
            z_top: 1.0,
            cylinder_fraction: 0.9,
        }
    }
}

/// Tolerances of the asserted invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub kernel: f64,
    pub symmetry: f64,
    pub decomposition: f64,
    pub extension_one: f64,
    pub linearity: f64,
    pub consistency: f64,
    pub residual: f64,
    pub uniqueness: f64,
    pub bounds: f64,
    pub monotonicity: f64,
    pub increment: f64,
    pub increment_spread: f64,
    pub rearrangement: f64,
    pub nonexpansive: f64,
    pub brute_force: f64,
    /// `C` in the half-space density error `C h / r`.
    pub density_constant: f64,
    pub density_floor: f64,
    pub synthetic_slope: f64,
    pub minimizer_slope: f64,
    pub positivity: f64,
    pub comparison: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel: 1e-3,
            symmetry: 1e-10,
            decomposition: 1e-12,
            extension_one: 1e-6,
            linearity: 1e-10,
            consistency: 0.05,
            residual: 1e-8,
            uniqueness: 1e-9,
            bounds: 1e-9,
            monotonicity: 1e-8,
            increment: 1e-9,
            increment_spread: 2.0,
            rearrangement: 1e-8,
            nonexpansive: 1e-10,
            brute_force: 1e-10,
            density_constant: 1.0,
            density_floor: 0.01,
            synthetic_slope: 0.02,
            minimizer_slope: 0.15,
            positivity: 1e-9,
            comparison: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeSection {
    /// Height of the positive bump of the exterior datum.
    pub amplitude: f64,
    pub max_sweeps: usize,
    /// Annealing steps before the greedy phase; 0 disables annealing.
    pub anneal_steps: usize,
    pub anneal_temperature: f64,
    pub anneal_cooling: f64,
    /// Random competitors in the replacement comparison.
    pub competitors: usize,
}

impl Default for MinimizeSection {
    fn default() -> Self {
        MinimizeSection {
            amplitude: 5.0,
            max_sweeps: 1000,
            anneal_steps: 0,
            anneal_temperature: 0.05,
            anneal_cooling: 0.95,
            competitors: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiiSection {
    /// Radii of the density and growth tables; empty selects dyadic radii.
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplaceSection {
    /// Radius of the centered constraint set `K`.
    pub constraint_radius: f64,
    /// Value imposed on `K`.
    pub gamma: f64,
    /// Random variations in the orthogonality test.
    pub trials: usize,
}

impl Default for ReplaceSection {
    fn default() -> Self {
        ReplaceSection {
            constraint_radius: 0.25,
            gamma: 0.0,
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RearrangeSection {
    pub fields: usize,
}

impl Default for RearrangeSection {
    fn default() -> Self {
        RearrangeSection { fields: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub quick: bool,
}

/// A configuration that could not be read, parsed or validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub message: String,
    /// 1-based line and column of a parse error.
    pub location: Option<(usize, usize)>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((line, col)) => write!(
                f,
                "config error at line {line}, column {col}: {}",
                self.message
            ),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(message: String) -> ConfigError {
    ConfigError {
        message,
        location: None,
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError {
            message: e.message().to_string(),
            location: e.span().map(|s| line_col(text, s.start)),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        self.core_params()
            .map_err(|e| invalid(format!("params: {e}")))?;
        let g = &self.grid;
        let max_cells = if p.n == 1 { 256 } else { 32 };
        let finite_pos = |x: f64| x > 0.0 && x.is_finite();
        if !finite_pos(g.half_width) || g.half_width > 64.0 {
            return Err(invalid(format!(
                "grid.half_width = {} must lie in (0, 64]",
                g.half_width
            )));
        }
        if g.cells_per_half == 0 || g.cells_per_half > max_cells {
            return Err(invalid(format!(
                "grid.cells_per_half = {} must lie in [1, {max_cells}] for n = {}",
                g.cells_per_half, p.n
            )));
        }
        if !(g.omega_radius > 0.0 && g.omega_radius < g.half_width) {
            return Err(invalid(format!(
                "grid.omega_radius = {} must lie in (0, half_width)",
                g.omega_radius
            )));
        }
        if !finite_pos(g.z_top) {
            return Err(invalid(format!(
                "grid.z_top = {} must be positive",
                g.z_top
            )));
        }
        if !(g.cylinder_fraction > 0.0 && g.cylinder_fraction <= 1.0) {
            return Err(invalid(format!(
                "grid.cylinder_fraction = {} must lie in (0, 1]",
                g.cylinder_fraction
            )));
        }
        let t = serde_json::to_value(&self.tolerances).expect("tolerances serialize");
        for (key, value) in t.as_object().expect("tolerances are a table") {
            let v = value.as_f64().unwrap_or(f64::NAN);
            if !finite_pos(v) {
                return Err(invalid(format!(
                    "tolerances.{key} = {value} must be positive"
                )));
            }
        }
        let m = &self.minimize;
        if !(m.amplitude >= 0.0 && m.amplitude.is_finite()) {
            return Err(invalid(format!(
                "minimize.amplitude = {} must be nonnegative",
                m.amplitude
            )));
        }
        if m.max_sweeps == 0 {
            return Err(invalid("minimize.max_sweeps must be at least 1".into()));
        }
        if !finite_pos(m.anneal_temperature) {
            return Err(invalid(format!(
                "minimize.anneal_temperature = {} must be positive",
                m.anneal_temperature
            )));
        }
        if !(m.anneal_cooling > 0.0 && m.anneal_cooling < 1.0) {
            return Err(invalid(format!(
                "minimize.anneal_cooling = {} must lie in (0, 1)",
                m.anneal_cooling
            )));
        }
        if let Some(r) = self.density.radii.iter().find(|&&r| !finite_pos(r)) {
            return Err(invalid(format!(
                "density.radii contains {r}, radii must be positive"
            )));
        }
        let r = &self.replace;
        if !(r.constraint_radius > 0.0 && r.constraint_radius < g.cylinder_fraction) {
            return Err(invalid(format!(
                "replace.constraint_radius = {} must lie in (0, cylinder_fraction)",
                r.constraint_radius
            )));
        }
        if !(r.gamma >= 0.0 && r.gamma.is_finite()) {
            return Err(invalid(format!(
                "replace.gamma = {} must be nonnegative",
                r.gamma
            )));
        }
        if r.trials == 0 {
            return Err(invalid("replace.trials must be at least 1".into()));
        }
        if self.rearrange.fields == 0 || self.rearrange.fields > 10_000 {
            return Err(invalid(format!(
                "rearrange.fields = {} must lie in [1, 10000]",
                self.rearrange.fields
            )));
        }
        Ok(())
    }

    pub fn core_params(&self) -> nlfb_core::Result<Params> {
        let p = &self.params;
        Params::new(p.n, p.s, p.sigma)?.with_lambda(p.lambda_growth)
    }

    pub fn base_grid(&self) -> nlfb_core::Result<CellGrid> {
        CellGrid::new(
            self.params.n,
            self.grid.half_width,
            self.grid.cells_per_half,
        )
    }

    pub fn omega(&self) -> Ball {
        Ball::centered(self.grid.omega_radius)
    }

    /// Canonical serialization, the input of [`Config::hash`].
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        format!("{:x}", Sha256::digest(self.canonical().as_bytes()))
    }
}
