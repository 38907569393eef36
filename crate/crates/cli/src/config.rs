//! Run configuration read from TOML, with command-line overrides on top.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tunnel_core::larmor::FieldLayout;
use tunnel_core::packet::{
    PacketSpec, DEFAULT_CAPTURE_TOLERANCE, DEFAULT_K_SPAN, DEFAULT_MAX_NEGATIVE_TAIL, DEFAULT_NK,
};
use tunnel_core::{BarrierSpec, ParticleSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub particle: ParticleConfig,
    pub barrier: Option<BarrierConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub packet: Option<PacketConfig>,
    pub larmor: Option<LarmorConfig>,
    #[serde(default)]
    pub resonance: ResonanceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    /// Effective mass in units of the electron mass.
    pub mass_ratio: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self { mass_ratio: 0.067 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    /// eV; negative for a well.
    pub v0: Option<f64>,
    /// Alternative to `v0`: the dimensionless strength κ0·d, with `well`
    /// selecting the sign.
    pub kappa0_d: Option<f64>,
    #[serde(default)]
    pub well: bool,
    pub d: f64,
    #[serde(default)]
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub points: usize,
    pub emax: f64,
    /// Energy unit of the abscissa; |V0| when absent. Required when V0 = 0.
    pub reference_energy: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            points: 200,
            emax: 3.0,
            reference_energy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub l0: f64,
    #[serde(default)]
    pub x0: f64,
    /// Mean kinetic energy in eV; give this or `k0`.
    pub energy: Option<f64>,
    pub k0: Option<f64>,
    #[serde(default = "default_nk")]
    pub n_k: usize,
    #[serde(default = "default_k_span")]
    pub k_span: f64,
    #[serde(default = "default_negative_tail")]
    pub max_negative_tail: f64,
    #[serde(default = "default_capture")]
    pub capture_tolerance: f64,
    #[serde(default = "default_times")]
    pub snapshot_times: Vec<f64>,
}

fn default_nk() -> usize {
    DEFAULT_NK
}
fn default_k_span() -> f64 {
    DEFAULT_K_SPAN
}
fn default_negative_tail() -> f64 {
    DEFAULT_MAX_NEGATIVE_TAIL
}
fn default_capture() -> f64 {
    DEFAULT_CAPTURE_TOLERANCE
}
fn default_times() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LarmorConfig {
    /// Length of each field-free gap around the barrier, nm.
    pub l: f64,
    /// Distance from the barrier edge to the far end of the detector, nm.
    #[serde(rename = "L")]
    pub big_l: f64,
    pub omega_ladder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    pub n_max: u32,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        Self { n_max: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that replace the corresponding config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub points: Option<usize>,
    pub emax: Option<f64>,
    pub snapshot_times: Option<Vec<f64>>,
    pub omega_ladder: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(n) = o.points {
            self.sweep.points = n;
        }
        if let Some(x) = o.emax {
            self.sweep.emax = x;
        }
        if let Some(times) = &o.snapshot_times {
            let packet = self
                .packet
                .as_mut()
                .ok_or_else(|| CliError::Config("--snapshot-times needs a [packet] section".into()))?;
            packet.snapshot_times = times.clone();
        }
        if let Some(ladder) = &o.omega_ladder {
            let larmor = self
                .larmor
                .as_mut()
                .ok_or_else(|| CliError::Config("--omega-ladder needs a [larmor] section".into()))?;
            larmor.omega_ladder = ladder.clone();
        }
        Ok(())
    }

    pub fn particle(&self) -> Result<ParticleSpec, CliError> {
        Ok(ParticleSpec::new(self.particle.mass_ratio)?)
    }

    pub fn barrier(&self, p: &ParticleSpec) -> Result<BarrierSpec, CliError> {
        let b = self
            .barrier
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [barrier] section".into()))?;
        match (b.v0, b.kappa0_d) {
            (Some(v0), None) if !b.well => Ok(BarrierSpec::new(v0, b.d, b.a, p)?),
            (Some(_), None) => Err(CliError::Config(
                "[barrier] well = true goes with kappa0_d; give a negative v0 instead".into(),
            )),
            (None, Some(x)) => {
                let beta = if b.well { -1.0 } else { 1.0 };
                Ok(BarrierSpec::from_kappa0(x / b.d, b.d, beta, b.a, p)?)
            }
            _ => Err(CliError::Config(
                "[barrier] needs exactly one of v0 and kappa0_d".into(),
            )),
        }
    }

    pub fn packet(&self, p: &ParticleSpec) -> Result<(PacketSpec, &PacketConfig), CliError> {
        let c = self
            .packet
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [packet] section".into()))?;
        let k0 = match (c.energy, c.k0) {
            (Some(e), None) => p.wavenumber(e)?,
            (None, Some(k)) => k,
            _ => return Err(CliError::Config("[packet] needs exactly one of energy and k0".into())),
        };
        let spec = PacketSpec {
            l0: c.l0,
            x0: c.x0,
            k0,
            n_k: c.n_k,
            k_span: c.k_span,
            max_negative_tail: c.max_negative_tail,
        };
        spec.validate()?;
        Ok((spec, c))
    }

    pub fn field(&self) -> Result<(FieldLayout, &[f64]), CliError> {
        let c = self
            .larmor
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [larmor] section".into()))?;
        let first = *c
            .omega_ladder
            .first()
            .ok_or_else(|| CliError::Config("omega_ladder is empty".into()))?;
        Ok((FieldLayout::new(c.l, c.big_l, first)?, &c.omega_ladder))
    }
}

/// Comma-separated numbers, e.g. `0,29,33.5,38`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|item| parse_number(item.trim())).collect()
}

/// Comma-separated ladder where later rungs may be written relative to the
/// first one as `w/N`, e.g. `0.02,w/2,w/4`.
pub fn parse_ladder(s: &str) -> Result<Vec<f64>, CliError> {
    let mut out: Vec<f64> = Vec::new();
    for item in s.split(',').map(str::trim) {
        let mut parts = item.split('/');
        let head = parts.next().unwrap_or_default().trim();
        let mut value = if head == "w" {
            *out.first().ok_or_else(|| {
                CliError::Config(format!("'{item}': w refers to the first rung, which must be a number"))
            })?
        } else {
            parse_number(head)?
        };
        for div in parts {
            value /= parse_number(div.trim())?;
        }
        out.push(value);
    }
    Ok(out)
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::Config(format!("'{s}' is not a finite number")))
}
