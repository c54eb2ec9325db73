//! Case configuration, read from TOML.
//!
//! ```toml
//! case = "frame-J1"          # frame-J1 | frame-J2 | membrane-J1 | membrane-J2 | custom
//! meshes = [2, 4, 8, 16, 32] # divisions per member (frame) or per side (membrane)
//! xi = [1.0]
//! reference = 50
//! rel_tol = 1e-12
//!
//! [output]
//! dir = "out"                # overridden by SENSBOUND_OUT_DIR
//! prefix = "frame-J1"
//!
//! [custom]                   # only for case = "custom"
//! model = "membrane"         # frame | membrane
//! parameter = "beta1"        # beta1 | beta2
//! qoi = "average"            # sway | rotation | average
//! betas = [1.0, 0.125]
//! ```
//!
//! Keys other than `case` are optional and default per case.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{Parameter, FRAME_MEAN, MEMBRANE_MEAN};
use crate::linalg::DEFAULT_REL_TOL;

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "SENSBOUND_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    #[serde(rename = "frame-J1")]
    FrameJ1,
    #[serde(rename = "frame-J2")]
    FrameJ2,
    #[serde(rename = "membrane-J1")]
    MembraneJ1,
    #[serde(rename = "membrane-J2")]
    MembraneJ2,
    #[serde(rename = "custom")]
    Custom,
}

impl CaseId {
    pub const STUDIES: [CaseId; 4] = [CaseId::FrameJ1, CaseId::FrameJ2, CaseId::MembraneJ1, CaseId::MembraneJ2];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::FrameJ1 => "frame-J1",
            CaseId::FrameJ2 => "frame-J2",
            CaseId::MembraneJ1 => "membrane-J1",
            CaseId::MembraneJ2 => "membrane-J2",
            CaseId::Custom => "custom",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [CaseId::FrameJ1, CaseId::FrameJ2, CaseId::MembraneJ1, CaseId::MembraneJ2, CaseId::Custom]
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown case '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Frame,
    Membrane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QoiChoice {
    /// Horizontal displacement at C.
    Sway,
    /// Rotation at B.
    Rotation,
    /// Average deflection over the QoI box.
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCase {
    pub model: ModelChoice,
    pub parameter: ParameterChoice,
    pub qoi: QoiChoice,
    pub betas: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterChoice {
    Beta1,
    Beta2,
}

impl From<ParameterChoice> for Parameter {
    fn from(p: ParameterChoice) -> Self {
        match p {
            ParameterChoice::Beta1 => Parameter::Beta1,
            ParameterChoice::Beta2 => Parameter::Beta2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
}

/// Raw file form; missing keys take the case defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    case: CaseId,
    meshes: Option<Vec<usize>>,
    xi: Option<Vec<f64>>,
    reference: Option<usize>,
    rel_tol: Option<f64>,
    #[serde(default)]
    output: OutputConfig,
    custom: Option<CustomCase>,
}

/// A mesh study: for each mesh and `xi`, bounds on the case QoI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub case: CaseId,
    /// Divisions per member (frame) or per side (membrane), increasing, so
    /// mesh sizes decrease.
    pub meshes: Vec<usize>,
    pub xi: Vec<f64>,
    /// Divisions of the reference mesh.
    pub reference: usize,
    pub rel_tol: f64,
    pub output: OutputConfig,
    pub custom: Option<CustomCase>,
}

impl CaseConfig {
    /// Study defaults: frame meshes `h/l = 1/2 .. 1/32` against `1/50`,
    /// membrane `n = 8 .. 64` against `n = 128`, `xi = 1`.
    pub fn preset(case: CaseId) -> Self {
        let frame = matches!(case, CaseId::FrameJ1 | CaseId::FrameJ2);
        CaseConfig {
            case,
            meshes: if frame { vec![2, 4, 8, 16, 32] } else { vec![8, 16, 32, 64] },
            xi: vec![1.0],
            reference: if frame { 50 } else { 128 },
            rel_tol: DEFAULT_REL_TOL,
            output: OutputConfig::default(),
            custom: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = match (raw.case, raw.custom) {
            (CaseId::Custom, Some(custom)) => {
                let mut c = CaseConfig::preset(CaseId::Custom);
                if custom.model == ModelChoice::Frame {
                    c.meshes = vec![2, 4, 8, 16, 32];
                    c.reference = 50;
                }
                c.custom = Some(custom);
                c
            }
            (CaseId::Custom, None) => return Err(Error::Config("case 'custom' needs a [custom] table".into())),
            (_, Some(_)) => return Err(Error::Config("[custom] is only valid with case 'custom'".into())),
            (case, None) => CaseConfig::preset(case),
        };
        if let Some(m) = raw.meshes {
            c.meshes = m;
        }
        if let Some(x) = raw.xi {
            c.xi = x;
        }
        if let Some(r) = raw.reference {
            c.reference = r;
        }
        if let Some(t) = raw.rel_tol {
            c.rel_tol = t;
        }
        c.output = raw.output;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.meshes.is_empty() {
            return Err(Error::Config("at least one mesh is required".into()));
        }
        if self.meshes.iter().any(|&m| m == 0) {
            return Err(Error::Config("mesh divisions must be positive".into()));
        }
        if self.meshes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("mesh sizes must be strictly decreasing".into()));
        }
        if self.reference <= *self.meshes.last().unwrap_or(&0) {
            return Err(Error::Config("the reference mesh must be finer than every study mesh".into()));
        }
        if self.xi.is_empty() || self.xi.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::Config("xi values must be positive and finite".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config("rel_tol must lie in (0, 1)".into()));
        }
        if self.case == CaseId::Custom && self.custom.is_none() {
            return Err(Error::Config("case 'custom' needs a [custom] table".into()));
        }
        if let Some(c) = &self.custom {
            let frame_qoi = matches!(c.qoi, QoiChoice::Sway | QoiChoice::Rotation);
            if frame_qoi != (c.model == ModelChoice::Frame) {
                return Err(Error::Config("QoI does not belong to the chosen model".into()));
            }
        }
        Ok(())
    }

    /// Model, parameter, QoI and parameter values of the case.
    pub fn resolved(&self) -> (ModelChoice, Parameter, QoiChoice, [f64; 2]) {
        match self.case {
            CaseId::FrameJ1 => (ModelChoice::Frame, Parameter::Beta1, QoiChoice::Sway, FRAME_MEAN),
            CaseId::FrameJ2 => (ModelChoice::Frame, Parameter::Beta2, QoiChoice::Rotation, FRAME_MEAN),
            CaseId::MembraneJ1 => (ModelChoice::Membrane, Parameter::Beta1, QoiChoice::Average, MEMBRANE_MEAN),
            CaseId::MembraneJ2 => (ModelChoice::Membrane, Parameter::Beta2, QoiChoice::Average, MEMBRANE_MEAN),
            CaseId::Custom => {
                let c = self.custom.expect("validated custom case");
                let mean = if c.model == ModelChoice::Frame { FRAME_MEAN } else { MEMBRANE_MEAN };
                (c.model, c.parameter.into(), c.qoi, c.betas.unwrap_or(mean))
            }
        }
    }

    /// Output directory: the environment override, then the config, then
    /// the working directory.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn output_prefix(&self) -> String {
        self.output.prefix.clone().unwrap_or_else(|| self.case.name().to_string())
    }
}
