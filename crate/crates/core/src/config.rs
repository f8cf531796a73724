//! Run configuration read from TOML files.
//!
//! A run file names an experiment preset and optionally overrides its mesh,
//! materials, wave and time-stepping parameters:
//!
//! ```toml
//! experiment = "cartesian-wavepacket"
//! mode = "hybrid"
//! degree = 7
//!
//! [time]
//! scheme = "lsrk45"
//! cfl = 0.4
//! t_final = 5.0
//!
//! [output]
//! energy_interval = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acoustics::Medium;
use crate::error::{Error, Result};
use crate::exact::WaveSpec;
use crate::time::Scheme;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 20;

/// Packaged experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Wavepacket on a 20×20 Cartesian mesh of `[−5, 5]²`.
    CartesianWavepacket,
    /// Sine wave on the curved example mesh.
    CurvedSine,
    /// Constant state on the curved example mesh.
    FreeStream,
    /// Wavepacket scattering at a material interface at `x = 0`.
    Scattering,
    /// Plane wave on a user-supplied mesh.
    Custom,
}

impl Experiment {
    /// Kebab-case name used in files and reports.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CartesianWavepacket => "cartesian-wavepacket",
            Experiment::CurvedSine => "curved-sine",
            Experiment::FreeStream => "free-stream",
            Experiment::Scattering => "scattering",
            Experiment::Custom => "custom",
        }
    }
}

/// How element faces are coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Shared nodes on every interior face except material interfaces.
    #[default]
    Cg,
    /// Numerical fluxes on every interior face.
    Dg,
    /// Shared nodes except on declared lines, edges and material interfaces.
    Hybrid,
}

impl Mode {
    /// Lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Cg => "cg",
            Mode::Dg => "dg",
            Mode::Hybrid => "hybrid",
        }
    }
}

/// Mesh overrides. Unset fields keep the preset's values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Mesh file in the native text format; replaces the generated mesh.
    pub file: Option<PathBuf>,
    /// Elements in x for generated Cartesian meshes.
    pub nx: Option<usize>,
    /// Elements in y for generated Cartesian meshes.
    pub ny: Option<usize>,
    /// `[x0, x1, y0, y1]` for generated Cartesian meshes.
    pub bounds: Option<[f64; 4]>,
    /// Vertical lines treated with numerical fluxes in hybrid mode.
    pub dg_lines: Option<Vec<f64>>,
    /// Vertex pairs treated with numerical fluxes in hybrid mode.
    pub dg_edges: Option<Vec<[usize; 2]>>,
}

/// Time-stepping overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Runge-Kutta scheme.
    pub scheme: Option<Scheme>,
    /// Courant number.
    pub cfl: Option<f64>,
    /// Final time.
    pub t_final: Option<f64>,
    /// Fixed step size.
    pub dt: Option<f64>,
}

/// Output settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Spacing of energy samples; `0` disables sampling between the ends.
    pub energy_interval: Option<f64>,
}

/// Complete description of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Experiment preset.
    pub experiment: Experiment,
    /// Face coupling.
    #[serde(default)]
    pub mode: Mode,
    /// Polynomial degree `N`.
    pub degree: usize,
    /// Mesh overrides.
    #[serde(default)]
    pub mesh: MeshConfig,
    /// Material table override, one entry per subdomain.
    pub materials: Option<Vec<Medium>>,
    /// Wave override; the incident wave for scattering.
    pub wave: Option<WaveSpec>,
    /// State for the free-stream preset, `[p, u, v]`.
    pub constant: Option<[f64; 3]>,
    /// Time-stepping overrides.
    #[serde(default)]
    pub time: TimeConfig,
    /// Output settings.
    #[serde(default)]
    pub output: OutputConfig,
    /// Evaluate element residuals in parallel.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

impl RunConfig {
    /// Preset defaults for `experiment` at degree `degree`.
    pub fn preset(experiment: Experiment, mode: Mode, degree: usize) -> Self {
        Self {
            experiment,
            mode,
            degree,
            mesh: MeshConfig::default(),
            materials: None,
            wave: None,
            constant: None,
            time: TimeConfig::default(),
            output: OutputConfig::default(),
            parallel: true,
        }
    }

    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0);
            Error::ConfigParse {
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a TOML run file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Serializes to TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Range and consistency checks.
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_DEGREE).contains(&self.degree) {
            return Err(Error::Config(format!(
                "degree must lie in [1, {MAX_DEGREE}], got {}",
                self.degree
            )));
        }
        if let Some(cfl) = self.time.cfl {
            if !(cfl > 0.0 && cfl.is_finite()) {
                return Err(Error::Config(format!("cfl must be positive, got {cfl}")));
            }
        }
        if let Some(t) = self.time.t_final {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "t_final must be non-negative, got {t}"
                )));
            }
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some(i) = self.output.energy_interval {
            if !(i >= 0.0 && i.is_finite()) {
                return Err(Error::Config(format!(
                    "energy_interval must be non-negative, got {i}"
                )));
            }
        }
        if let Some(w) = &self.wave {
            w.validate()?;
        }
        if let Some(ms) = &self.materials {
            for m in ms {
                Medium::new(m.rho, m.c)?;
            }
        }
        if self.experiment == Experiment::Custom
            && self.mesh.file.is_none()
            && self.mesh.nx.is_none()
        {
            return Err(Error::Config(
                "custom runs need a mesh file or Cartesian mesh parameters".into(),
            ));
        }
        if self.experiment == Experiment::Custom && self.wave.is_none() {
            return Err(Error::Config("custom runs need a [wave] section".into()));
        }
        Ok(())
    }
}
