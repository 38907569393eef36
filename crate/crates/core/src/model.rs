//! Units, constants and validated parameter records.
//!
//! Energies are in eV, lengths in nm and times in ps throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ħ²/2m_e in eV·nm².
pub const HBAR2_OVER_2ME: f64 = 0.0380998;

/// ħ in eV·ps.
pub const HBAR: f64 = 6.582119569e-4;

/// Effective-mass particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec {
    mass_ratio: f64,
    kinetic_coeff: f64,
}

impl ParticleSpec {
    pub fn new(mass_ratio: f64) -> Result<Self> {
        if !(mass_ratio > 0.0 && mass_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mass ratio must be positive, got {mass_ratio}"
            )));
        }
        Ok(Self {
            mass_ratio,
            kinetic_coeff: HBAR2_OVER_2ME / mass_ratio,
        })
    }

    /// GaAs conduction-band electron, m = 0.067 m_e.
    pub fn gaas() -> Self {
        Self::new(0.067).expect("valid mass ratio")
    }

    pub fn mass_ratio(&self) -> f64 {
        self.mass_ratio
    }

    /// K = ħ²/2m in eV·nm².
    pub fn kinetic_coeff(&self) -> f64 {
        self.kinetic_coeff
    }

    /// k = √(E/K).
    pub fn wavenumber(&self, energy: f64) -> Result<f64> {
        if !(energy >= 0.0) {
            return Err(Error::Domain(format!("energy must be non-negative, got {energy}")));
        }
        Ok((energy / self.kinetic_coeff).sqrt())
    }

    pub fn energy(&self, k: f64) -> f64 {
        self.kinetic_coeff * k * k
    }

    /// ħ/m in nm²/ps.
    pub fn hbar_over_mass(&self) -> f64 {
        2.0 * self.kinetic_coeff / HBAR
    }

    /// Group velocity ħk/m in nm/ps.
    pub fn velocity(&self, k: f64) -> f64 {
        self.hbar_over_mass() * k
    }

    /// Time m·D/(ħk) needed to cover `length` at the free velocity.
    pub fn traversal_time(&self, length: f64, k: f64) -> f64 {
        length / self.velocity(k)
    }
}

/// Where the energy sits relative to the barrier top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Below,
    Above,
    /// E = V0 exactly.
    Edge,
}

/// Regime and interior wavenumber κ (always ≥ 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWave {
    pub regime: Regime,
    pub kappa: f64,
}

/// Rectangular potential of height `v0` on [a, a + d].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    v0: f64,
    d: f64,
    a: f64,
    beta: f64,
    kappa0: f64,
}

impl BarrierSpec {
    pub fn new(v0: f64, d: f64, a: f64, particle: &ParticleSpec) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "barrier width must be positive, got {d}"
            )));
        }
        if !v0.is_finite() || !a.is_finite() {
            return Err(Error::InvalidParameter(
                "barrier height and position must be finite".into(),
            ));
        }
        Ok(Self {
            v0,
            d,
            a,
            beta: if v0 > 0.0 { 1.0 } else { -1.0 },
            kappa0: (v0.abs() / particle.kinetic_coeff()).sqrt(),
        })
    }

    /// Barrier (`beta = +1`) or well (`beta = -1`) with a prescribed κ0.
    pub fn from_kappa0(kappa0: f64, d: f64, beta: f64, a: f64, particle: &ParticleSpec) -> Result<Self> {
        if !(kappa0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa0 must be non-negative, got {kappa0}"
            )));
        }
        let v0 = beta.signum() * particle.kinetic_coeff() * kappa0 * kappa0;
        let mut b = Self::new(v0, d, a, particle)?;
        // keep the requested κ0 bit-exact rather than the round-tripped one
        b.kappa0 = kappa0;
        if beta < 0.0 {
            b.beta = -1.0;
        }
        Ok(b)
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }
    pub fn width(&self) -> f64 {
        self.d
    }
    pub fn left(&self) -> f64 {
        self.a
    }
    pub fn right(&self) -> f64 {
        self.a + self.d
    }
    pub fn center(&self) -> f64 {
        self.a + 0.5 * self.d
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }
    pub fn is_free(&self) -> bool {
        self.kappa0 == 0.0
    }

    /// Signed interior κ²: k² − βκ0² (positive above the barrier top).
    pub fn signed_kappa_sq(&self, k: f64) -> f64 {
        k * k - self.beta * self.kappa0 * self.kappa0
    }

    pub fn local_wavenumbers(&self, k: f64) -> LocalWave {
        let u = self.signed_kappa_sq(k);
        let regime = if u == 0.0 {
            Regime::Edge
        } else if u < 0.0 {
            Regime::Below
        } else {
            Regime::Above
        };
        LocalWave {
            regime,
            kappa: u.abs().sqrt(),
        }
    }

    /// The barrier as a one-segment potential; a zero-height barrier is the
    /// free potential.
    pub fn potential(&self) -> PiecewisePotential {
        if self.v0 == 0.0 {
            return PiecewisePotential::free();
        }
        PiecewisePotential::new(0.0, vec![Segment::new(self.a, self.right(), self.v0)])
            .expect("single segment is valid")
    }
}

/// Constant-level interval [left, right).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub left: f64,
    pub right: f64,
    pub level: f64,
}

impl Segment {
    pub fn new(left: f64, right: f64, level: f64) -> Self {
        Self { left, right, level }
    }
}

/// Piecewise-constant potential: ordered, non-overlapping segments on top of
/// a constant `background` level shared by both asymptotic regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePotential {
    background: f64,
    segments: Vec<Segment>,
}

impl PiecewisePotential {
    pub fn new(background: f64, segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.left < s.right) || !s.level.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "segment [{}, {}) with level {} is malformed",
                    s.left, s.right, s.level
                )));
            }
        }
        for w in segments.windows(2) {
            if w[0].right > w[1].left {
                return Err(Error::InvalidParameter(format!(
                    "segments [{}, {}) and [{}, {}) overlap or are out of order",
                    w[0].left, w[0].right, w[1].left, w[1].right
                )));
            }
        }
        if !background.is_finite() {
            return Err(Error::InvalidParameter("background must be finite".into()));
        }
        Ok(Self { background, segments })
    }

    pub fn free() -> Self {
        Self {
            background: 0.0,
            segments: Vec::new(),
        }
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Leftmost and rightmost edges, if any segment exists.
    pub fn extent(&self) -> Option<(f64, f64)> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        Some((first.left, last.right))
    }

    pub fn level_at(&self, x: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| x >= s.left && x < s.right)
            .map_or(self.background, |s| s.level)
    }

    /// Contiguous regions covering the structure, gaps filled with the
    /// background level.
    pub(crate) fn contiguous(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            if let Some(prev) = out.last() {
                if prev.right < s.left {
                    out.push(Segment::new(prev.right, s.left, self.background));
                }
            }
            out.push(*s);
        }
        out
    }

    /// Mirror symmetry about the midpoint of the structure (to a relative
    /// tolerance on the edge positions).
    pub fn is_symmetric(&self) -> bool {
        let Some((lo, hi)) = self.extent() else {
            return true;
        };
        let regions = self.contiguous();
        let tol = 1e-12 * (hi - lo).max(lo.abs()).max(hi.abs());
        regions.iter().zip(regions.iter().rev()).all(|(l, r)| {
            ((l.left - lo) - (hi - r.right)).abs() <= tol
                && ((l.right - lo) - (hi - r.left)).abs() <= tol
                && l.level == r.level
        })
    }
}
