//! Run configuration, read from TOML.
//!
//! ```toml
//! [run]
//! builder = "hofstadter"          # hofstadter | diagonal | generic
//! diagnostics = ["spectrum", "distribution", "ipr"]
//!
//! [model]
//! j_x = 1.0
//! j_y = 1.0
//! h_y = 0.2
//!
//! [strip]
//! length = 500
//! boundary = "open"
//!
//! [flux]
//! value = 1.5707963267948966
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use skinlab_core::{
    BoundaryCondition, BravaisSpec, Complex64, FluxSpec, GeometryMask, HofstadterParams,
    HoppingTerm, LatticeModel, ReciprocalDiagonalParams,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub strip: StripSection,
    #[serde(default)]
    pub flux: FluxSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub winding: WindingSection,
    #[serde(default)]
    pub transfer: TransferSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuilderKind {
    Hofstadter,
    Diagonal,
    Generic,
}

impl BuilderKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Hofstadter => "hofstadter",
            Self::Diagonal => "diagonal",
            Self::Generic => "generic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub builder: BuilderKind,
    /// Absent: the subcommand's defaults. Empty: metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Diagnostic>>,
    /// Subcommands executed by `recipe --run`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commands: Vec<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Sweep,
    Winding,
    Transfer,
    Geometry2d,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Sweep => "sweep",
            Self::Winding => "winding",
            Self::Transfer => "transfer",
            Self::Geometry2d => "geometry2d",
        }
    }

    /// Diagnostics a command runs when the config does not list any.
    pub fn default_diagnostics(&self) -> Vec<Diagnostic> {
        use Diagnostic::*;
        match self {
            Self::Spectrum => vec![Spectrum, Distribution, Ipr],
            Self::Sweep => vec![Ipr],
            Self::Winding => vec![WindingBloch, WindingFlux, WindingRealspace],
            Self::Transfer => vec![Det],
            Self::Geometry2d => vec![Distribution2d, Spectrum2d, EdgeWeight],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    Spectrum,
    Distribution,
    Ipr,
    Matrix,
    Compare,
    Criterion,
    LocalRatio,
    SpectralArea,
    WindingBloch,
    WindingFlux,
    WindingRealspace,
    Det,
    IdentityGap,
    Lyapunov,
    Distribution2d,
    Spectrum2d,
    EdgeWeight,
}

impl Diagnostic {
    pub const ALL: [Diagnostic; 17] = [
        Self::Spectrum,
        Self::Distribution,
        Self::Ipr,
        Self::Matrix,
        Self::Compare,
        Self::Criterion,
        Self::LocalRatio,
        Self::SpectralArea,
        Self::WindingBloch,
        Self::WindingFlux,
        Self::WindingRealspace,
        Self::Det,
        Self::IdentityGap,
        Self::Lyapunov,
        Self::Distribution2d,
        Self::Spectrum2d,
        Self::EdgeWeight,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Distribution => "distribution",
            Self::Ipr => "ipr",
            Self::Matrix => "matrix",
            Self::Compare => "compare",
            Self::Criterion => "criterion",
            Self::LocalRatio => "local_ratio",
            Self::SpectralArea => "spectral_area",
            Self::WindingBloch => "winding_bloch",
            Self::WindingFlux => "winding_flux",
            Self::WindingRealspace => "winding_realspace",
            Self::Det => "det",
            Self::IdentityGap => "identity_gap",
            Self::Lyapunov => "lyapunov",
            Self::Distribution2d => "distribution2d",
            Self::Spectrum2d => "spectrum2d",
            Self::EdgeWeight => "edge_weight",
        }
    }

    /// The subcommand that writes this diagnostic's files.
    pub fn command(&self) -> Command {
        match self {
            Self::Spectrum
            | Self::Distribution
            | Self::Ipr
            | Self::Matrix
            | Self::Compare
            | Self::Criterion
            | Self::LocalRatio
            | Self::SpectralArea => Command::Spectrum,
            Self::WindingBloch | Self::WindingFlux | Self::WindingRealspace => Command::Winding,
            Self::Det | Self::IdentityGap | Self::Lyapunov => Command::Transfer,
            Self::Distribution2d | Self::Spectrum2d | Self::EdgeWeight => Command::Geometry2d,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Diagnostic {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| CliError::Invalid(format!("unknown diagnostic `{s}`")))
    }
}

/// Complex number as a `{ re, im }` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl ComplexValue {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }
}

impl From<ComplexValue> for Complex64 {
    fn from(v: ComplexValue) -> Self {
        Complex64::new(v.re, v.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopEntry {
    pub n_x: i64,
    pub n_y: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "one")]
    pub j_x: f64,
    #[serde(default = "one")]
    pub j_y: f64,
    #[serde(default)]
    pub h_x: f64,
    #[serde(default)]
    pub h_y: f64,
    #[serde(default = "unit_real")]
    pub kappa_x: ComplexValue,
    #[serde(default = "unit_real")]
    pub kappa_y: ComplexValue,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hops: Vec<HopEntry>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            j_x: 1.0,
            j_y: 1.0,
            h_x: 0.0,
            h_y: 0.0,
            kappa_x: unit_real(),
            kappa_y: unit_real(),
            hops: Vec::new(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn unit_real() -> ComplexValue {
    ComplexValue::new(1.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "one")]
    pub a_x: f64,
    #[serde(default = "one")]
    pub a_y: f64,
    /// Angle between the primitive vectors, radians.
    #[serde(default = "right_angle")]
    pub alpha: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            a_x: 1.0,
            a_y: 1.0,
            alpha: right_angle(),
        }
    }
}

fn right_angle() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Open,
    Periodic,
}

impl BoundaryKind {
    pub fn condition(&self) -> BoundaryCondition {
        match self {
            Self::Open => BoundaryCondition::Open,
            Self::Periodic => BoundaryCondition::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSection {
    /// Coprime cut indices; the diagonal builder always uses (1, 1).
    #[serde(default)]
    pub p: i64,
    #[serde(default = "one_i")]
    pub q: i64,
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "open")]
    pub boundary: BoundaryKind,
    #[serde(default)]
    pub k_x: f64,
}

impl Default for StripSection {
    fn default() -> Self {
        Self {
            p: 0,
            q: 1,
            length: default_length(),
            boundary: open(),
            k_x: 0.0,
        }
    }
}

fn one_i() -> i64 {
    1
}

fn default_length() -> usize {
    100
}

fn open() -> BoundaryKind {
    BoundaryKind::Open
}

/// Magnetic field. `value` is `B`; with `per_plaquette = true` it is the
/// flux `Phi = B * cell area` instead. `numerator / denominator` gives an
/// exact rational in place of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denominator: Option<i64>,
    #[serde(default)]
    pub per_plaquette: bool,
}

impl FluxSection {
    pub fn real(value: f64, per_plaquette: bool) -> Self {
        Self {
            value: Some(value),
            numerator: None,
            denominator: None,
            per_plaquette,
        }
    }

    pub fn rational(numerator: i64, denominator: i64, per_plaquette: bool) -> Self {
        Self {
            value: None,
            numerator: Some(numerator),
            denominator: Some(denominator),
            per_plaquette,
        }
    }

    pub fn resolve(&self, bravais: &BravaisSpec) -> CliResult<FluxSpec> {
        let area = if self.per_plaquette {
            bravais.cell_area()
        } else {
            1.0
        };
        let spec = match (self.value, self.numerator, self.denominator) {
            (Some(v), None, None) => FluxSpec::real(v / area)?,
            (None, Some(n), Some(d)) => {
                // keep the exact tag when the cell area is an integer
                let rounded = area.round();
                if (area - rounded).abs() < 1e-12 && rounded >= 1.0 {
                    FluxSpec::rational(n, d * rounded as i64)?
                } else {
                    FluxSpec::real(n as f64 / d as f64 / area)?
                }
            }
            (None, None, None) => FluxSpec::zero(),
            _ => {
                return Err(CliError::Invalid(
                    "flux: give either `value` or both `numerator` and `denominator`".into(),
                ))
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Triangle,
    Rectangle,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub shape: ShapeKind,
    /// Triangle side, or rectangle width.
    #[serde(default)]
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "default_band")]
    pub band: usize,
}

fn default_band() -> usize {
    3
}

impl GeometrySection {
    pub fn mask(&self) -> CliResult<GeometryMask> {
        let mask = match self.shape {
            ShapeKind::Triangle => GeometryMask::lower_triangle(self.size)?,
            ShapeKind::Rectangle => {
                GeometryMask::rectangle(self.size, self.height.unwrap_or(self.size))?
            }
            ShapeKind::Polygon => GeometryMask::polygon(self.vertices.clone())?,
        };
        Ok(mask)
    }

    pub fn describe(&self) -> String {
        match self.shape {
            ShapeKind::Triangle => format!("triangle L={}", self.size),
            ShapeKind::Rectangle => format!(
                "rectangle {}x{}",
                self.size,
                self.height.unwrap_or(self.size)
            ),
            ShapeKind::Polygon => format!("polygon {} vertices", self.vertices.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindingSection {
    #[serde(default = "origin")]
    pub base_energies: Vec<ComplexValue>,
    #[serde(default = "bloch_samples")]
    pub bloch_samples: usize,
    #[serde(default = "flux_samples")]
    pub flux_samples: usize,
}

impl Default for WindingSection {
    fn default() -> Self {
        Self {
            base_energies: origin(),
            bloch_samples: bloch_samples(),
            flux_samples: flux_samples(),
        }
    }
}

fn origin() -> Vec<ComplexValue> {
    vec![ComplexValue::new(0.0, 0.0)]
}

fn bloch_samples() -> usize {
    4096
}

fn flux_samples() -> usize {
    skinlab_core::spectral::DEFAULT_FLUX_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    /// Period for the determinant; defaults to the flux denominator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default = "origin")]
    pub energies: Vec<ComplexValue>,
    #[serde(default = "lyapunov_length")]
    pub lyapunov_length: usize,
    #[serde(default = "default_edge_budget")]
    pub edge_budget: usize,
    #[serde(default = "area_resolution")]
    pub area_resolution: usize,
}

impl Default for TransferSection {
    fn default() -> Self {
        Self {
            q: None,
            energies: origin(),
            lyapunov_length: lyapunov_length(),
            edge_budget: default_edge_budget(),
            area_resolution: area_resolution(),
        }
    }
}

fn lyapunov_length() -> usize {
    100_000
}

fn default_edge_budget() -> usize {
    skinlab_core::spectral::DEFAULT_EDGE_BUDGET
}

fn area_resolution() -> usize {
    256
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    KX,
    Flux,
    HX,
    HY,
    JX,
    JY,
    Length,
}

impl Parameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::KX => "k_x",
            Self::Flux => "flux",
            Self::HX => "h_x",
            Self::HY => "h_y",
            Self::JX => "j_x",
            Self::JY => "j_y",
            Self::Length => "length",
        }
    }
}

/// Sweep axis: either `start`/`stop`/`points` (endpoint included unless
/// `endpoint = false`) or an explicit `values` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Parameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default = "yes")]
    pub endpoint: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

fn yes() -> bool {
    true
}

impl Axis {
    pub fn range(
        parameter: Parameter,
        start: f64,
        stop: f64,
        points: usize,
        endpoint: bool,
    ) -> Self {
        Self {
            parameter,
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            endpoint,
            values: Vec::new(),
        }
    }

    pub fn list(parameter: Parameter, values: Vec<f64>) -> Self {
        Self {
            parameter,
            start: None,
            stop: None,
            points: None,
            endpoint: true,
            values,
        }
    }

    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let name = self.parameter.name();
        if !self.values.is_empty() {
            if self.start.is_some() || self.stop.is_some() || self.points.is_some() {
                return Err(CliError::Invalid(format!(
                    "axis {name}: `values` excludes start/stop/points"
                )));
            }
            return Ok(self.values.clone());
        }
        let (Some(start), Some(stop), Some(points)) = (self.start, self.stop, self.points) else {
            return Err(CliError::Invalid(format!(
                "axis {name}: needs `values` or start, stop and points"
            )));
        };
        if points == 0 {
            return Err(CliError::Invalid(format!(
                "axis {name}: step count must be positive"
            )));
        }
        if points == 1 {
            return Ok(vec![start]);
        }
        let steps = if self.endpoint { points - 1 } else { points } as f64;
        Ok((0..points)
            .map(|i| start + (stop - start) * i as f64 / steps)
            .collect())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> CliResult<()> {
        for axis in &self.sweep {
            axis.grid()?;
        }
        if self.run.builder == BuilderKind::Generic && self.model.hops.is_empty() {
            return Err(CliError::Invalid(
                "generic builder needs [[model.hops]] entries".into(),
            ));
        }
        Ok(())
    }

    pub fn diagnostics_for(&self, command: Command) -> Vec<Diagnostic> {
        match &self.run.diagnostics {
            None => command.default_diagnostics(),
            Some(list) if command == Command::Sweep => list.clone(),
            Some(list) => list
                .iter()
                .copied()
                .filter(|d| d.command() == command)
                .collect(),
        }
    }

    pub fn bravais(&self) -> CliResult<BravaisSpec> {
        Ok(BravaisSpec::new(
            self.lattice.a_x,
            self.lattice.a_y,
            self.lattice.alpha,
        )?)
    }

    pub fn flux_spec(&self) -> CliResult<FluxSpec> {
        self.flux.resolve(&self.bravais()?)
    }

    pub fn hofstadter(&self) -> CliResult<HofstadterParams> {
        let m = &self.model;
        Ok(HofstadterParams::new(m.j_x, m.j_y, m.h_x, m.h_y)?)
    }

    pub fn diagonal(&self) -> CliResult<ReciprocalDiagonalParams> {
        Ok(ReciprocalDiagonalParams::new(
            self.model.kappa_x.into(),
            self.model.kappa_y.into(),
        )?)
    }

    pub fn lattice_model(&self) -> CliResult<LatticeModel> {
        let b = self.bravais()?;
        match self.run.builder {
            BuilderKind::Hofstadter => Ok(self.hofstadter()?.lattice_model(b)?),
            BuilderKind::Diagonal => Ok(self.diagonal()?.lattice_model(b)?),
            BuilderKind::Generic => {
                let hops = self
                    .model
                    .hops
                    .iter()
                    .map(|h| HoppingTerm::new(h.n_x, h.n_y, Complex64::new(h.re, h.im)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(LatticeModel::new(b, hops)?)
            }
        }
    }

    /// Copy with one swept parameter replaced.
    pub fn with_parameter(&self, parameter: Parameter, value: f64) -> CliResult<Self> {
        let mut c = self.clone();
        match parameter {
            Parameter::KX => c.strip.k_x = value,
            Parameter::Flux => c.flux = FluxSection::real(value, c.flux.per_plaquette),
            Parameter::HX => c.model.h_x = value,
            Parameter::HY => c.model.h_y = value,
            Parameter::JX => c.model.j_x = value,
            Parameter::JY => c.model.j_y = value,
            Parameter::Length => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::Invalid(format!(
                        "length axis value {value} is not a positive integer"
                    )));
                }
                match c.geometry.as_mut() {
                    Some(g) => g.size = value as usize,
                    None => c.strip.length = value as usize,
                }
            }
        }
        Ok(c)
    }
}
