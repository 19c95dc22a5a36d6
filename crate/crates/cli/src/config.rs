//! Run configuration, read from TOML.
//!
//! Units: speeds `c` are in space per time, `z` in inverse space, grid
//! steps and widths in the co-moving coordinate `t = x + c s`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use semiwave::kernels::{SpatialLaw, TemporalLaw};
use semiwave::profile::{Birth, Removal};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub minspeed: MinspeedConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Which system to study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ModelConfig {
    /// Marine population with drifting juveniles.
    Marine {
        #[serde(default = "d::advection")]
        advection: f64,
        #[serde(default = "d::diffusivity")]
        diffusivity: f64,
        #[serde(default = "d::juvenile_death")]
        death: f64,
        #[serde(default = "d::adult_death")]
        adult_death: f64,
        #[serde(default = "d::marine_p")]
        p: f64,
    },
    /// Infectious agent with decay `alpha`, latency law and contact law.
    Epidemic {
        #[serde(default = "d::alpha")]
        alpha: f64,
        #[serde(default = "d::latency")]
        latency: TemporalLaw,
        #[serde(default = "d::spatial")]
        contact: SpatialLaw,
        #[serde(default = "d::removal")]
        removal: Removal,
        #[serde(default = "d::epidemic_birth")]
        birth: Birth,
        majorant: Option<f64>,
    },
    /// Mature population with a diffusing immature stage.
    Population {
        #[serde(default = "d::one")]
        immature_diffusivity: f64,
        #[serde(default = "d::one")]
        immature_death: f64,
        #[serde(default = "d::kernel")]
        kernel: KernelConfig,
        #[serde(default = "d::removal")]
        removal: Removal,
        #[serde(default = "d::birth")]
        birth: Birth,
        majorant: Option<f64>,
    },
    /// A single scalar equation.
    Scalar {
        #[serde(default = "d::kernel")]
        kernel: KernelConfig,
        #[serde(default = "d::removal")]
        removal: Removal,
        #[serde(default = "d::birth")]
        birth: Birth,
        majorant: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelConfig {
    Marine { advection: f64, diffusivity: f64, death: f64 },
    Separable { temporal: TemporalLaw, spatial: SpatialLaw },
    /// No delay, no dispersal.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    /// Speeds at which to tabulate the characteristic functions.
    pub c: Vec<f64>,
    pub z_min: f64,
    /// Defaults to the root-search limit at each speed.
    pub z_max: Option<f64>,
    pub points: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        DispersionConfig {
            c: vec![3.0],
            z_min: 0.0,
            z_max: None,
            points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinspeedConfig {
    /// Search bracket for both speeds; grown automatically when absent.
    pub bracket: Option<(f64, f64)>,
    pub speed_tol: f64,
}

impl Default for MinspeedConfig {
    fn default() -> Self {
        MinspeedConfig {
            bracket: None,
            speed_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// Absolute speed; overrides `c_factor`.
    pub c: Option<f64>,
    /// Speed as a multiple of the critical speed.
    pub c_factor: f64,
    /// Approach the critical speed through `c_n = (n + 1) c / n`.
    pub critical: bool,
    pub n_max: u32,
    pub window: (f64, f64),
    pub reg_n: u32,
    pub h: Option<f64>,
    pub half_width: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub residual_tol: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            c: None,
            c_factor: 1.5,
            critical: false,
            n_max: 16,
            window: (-20.0, 20.0),
            reg_n: 1000,
            h: None,
            half_width: None,
            beta: None,
            delta: None,
            tol: 1e-11,
            max_iter: 2000,
            residual_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    /// Any of `csv`, `svg`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            formats: vec!["csv".into()],
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("{field}: {why}")));
        let d = &self.dispersion;
        if d.points < 2 {
            return bad("dispersion.points", "need at least two points");
        }
        if d.c.is_empty() {
            return bad("dispersion.c", "list at least one speed");
        }
        if let Some(hi) = d.z_max {
            if !(hi > d.z_min) {
                return bad("dispersion.z_max", "must exceed z_min");
            }
        }
        if let Some((lo, hi)) = self.minspeed.bracket {
            if !(hi > lo) {
                return bad("minspeed.bracket", "upper end must exceed lower end");
            }
        }
        if !(self.minspeed.speed_tol > 0.0) {
            return bad("minspeed.speed_tol", "must be positive");
        }
        let p = &self.profile;
        for (name, v) in [("profile.tol", p.tol), ("profile.residual_tol", p.residual_tol), ("profile.c_factor", p.c_factor)] {
            if !(v > 0.0) {
                return bad(name, "must be positive");
            }
        }
        if p.max_iter == 0 || p.reg_n == 0 {
            return bad("profile", "max_iter and reg_n must be positive");
        }
        if !(p.window.1 > p.window.0) {
            return bad("profile.window", "empty window");
        }
        for f in &self.output.formats {
            if f != "csv" && f != "svg" {
                return bad("output.formats", &format!("unknown format `{f}`"));
            }
        }
        Ok(())
    }
}

/// Preset defaults.
mod d {
    use super::*;

    pub fn advection() -> f64 {
        0.02
    }
    pub fn diffusivity() -> f64 {
        100.0
    }
    pub fn juvenile_death() -> f64 {
        0.001
    }
    pub fn adult_death() -> f64 {
        0.05
    }
    pub fn marine_p() -> f64 {
        2.0
    }
    pub fn alpha() -> f64 {
        2.0
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn latency() -> TemporalLaw {
        TemporalLaw::discrete(0.5)
    }
    pub fn spatial() -> SpatialLaw {
        SpatialLaw::Gaussian {
            mean: 0.0,
            variance: 1.0,
        }
    }
    pub fn kernel() -> KernelConfig {
        KernelConfig::Separable {
            temporal: TemporalLaw::Exponential { rate: 1.0 },
            spatial: spatial(),
        }
    }
    pub fn removal() -> Removal {
        Removal::Linear { rate: 1.0 }
    }
    pub fn birth() -> Birth {
        Birth::BevertonHolt { p: 2.0, b: 1.0 }
    }
    pub fn epidemic_birth() -> Birth {
        Birth::BevertonHolt { p: 4.0, b: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults() {
        let cfg = RunConfig::parse("[model]\npreset = \"marine\"\n").unwrap();
        assert!(matches!(cfg.model, ModelConfig::Marine { p, .. } if p == 2.0));
        assert_eq!(cfg.output.formats, vec!["csv"]);
    }

    #[test]
    fn inline_scalar() {
        let text = r#"
            [model]
            preset = "scalar"
            kernel = { family = "separable", temporal = { law = "exponential", rate = 1.0 }, spatial = { law = "gaussian", mean = 0.0, variance = 1.0 } }
            removal = { kind = "linear", rate = 1.0 }
            birth = { kind = "beverton_holt", p = 2.0, b = 1.0 }
            [profile]
            c_factor = 1.5
        "#;
        let cfg = RunConfig::parse(text).unwrap();
        assert!(matches!(cfg.model, ModelConfig::Scalar { .. }));
    }

    #[test]
    fn errors_name_the_field() {
        let e = RunConfig::parse("[model]\npreset = \"marine\"\n[profile]\ntol = -1.0\n").unwrap_err();
        assert!(e.to_string().contains("profile.tol"));
        let e = RunConfig::parse("[model]\npreset = \"marine\"\n[output]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"));
    }
}
