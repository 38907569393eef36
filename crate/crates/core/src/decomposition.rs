//! Splitting the unit-incident state into transmission and reflection channels.
//!
//! The incident wave e^{ikx} is written as c_tr·e^{ikx} + c_ref·e^{ikx} with
//! c_tr + c_ref = 1, |c_tr|² = T, |c_ref|² = R and Re(conj(c_tr)·c_ref) = 0.
//! These three constraints fix c_tr = √T·e^{iγ} with |γ| = arctan √(R/T), up
//! to the sign of γ. The sign is taken from the reflection amplitude referred
//! to the centre of a symmetric structure, r_c: for such a structure r_c/t is
//! purely imaginary and γ_s = arctan Im(r_c/t). With this choice −dγ_s/dk is
//! the starting point x_start for barriers and wells alike.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BarrierSpec, ParticleSpec, PiecewisePotential};
use crate::numeric::{ddk, default_step};
use crate::scattering::{amplitudes, ScatteringResult, StationaryState};

type C64 = Complex64;

/// Incoming amplitudes of the two channels at one k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelAmplitudes {
    pub k: f64,
    /// arctan √(R/T), in [0, π/2).
    pub gamma: f64,
    /// Signed channel angle; |signed_gamma| = gamma.
    pub signed_gamma: f64,
    pub c_tr: C64,
    pub c_ref: C64,
}

impl ChannelAmplitudes {
    /// Channel amplitudes from the full amplitudes of a structure centred at `center`.
    pub fn from_scattering(s: &ScatteringResult, center: f64) -> Self {
        let t = s.t_amp;
        let r_c = s.r_amp * C64::from_polar(1.0, -2.0 * s.k * center);
        let gamma = s.r_amp.norm().atan2(t.norm());
        let signed_gamma = (r_c * t.conj()).im.atan2(t.norm_sqr());
        let c_tr = C64::from_polar(t.norm(), signed_gamma);
        Self {
            k: s.k,
            gamma,
            signed_gamma,
            c_tr,
            c_ref: C64::new(1.0, 0.0) - c_tr,
        }
    }
}

pub fn gamma(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<f64> {
    Ok(channel_amplitudes(b, p, k)?.gamma)
}

pub fn signed_gamma(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<f64> {
    Ok(channel_amplitudes(b, p, k)?.signed_gamma)
}

pub fn channel_amplitudes(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<ChannelAmplitudes> {
    let s = amplitudes(&b.potential(), p, k)?;
    Ok(ChannelAmplitudes::from_scattering(&s, b.center()))
}

fn require_partial_transmission(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<ScatteringResult> {
    let s = amplitudes(&b.potential(), p, k)?;
    if s.transmission == 0.0 || s.reflection == 0.0 {
        return Err(Error::Undefined(format!(
            "x_start from the channel angle is 0/0 at k = {k} (T = {}); use the closed form",
            s.transmission
        )));
    }
    Ok(s)
}

/// x_start as −dγ_s/dk; like the closed form it does not depend on where the
/// barrier sits.
pub fn x_start_from_gamma(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<f64> {
    require_partial_transmission(b, p, k)?;
    let h = default_step(k).min(0.25 * k);
    let pot = b.potential();
    let c = b.center();
    let slope = ddk(
        |kk| {
            amplitudes(&pot, p, kk)
                .map(|s| ChannelAmplitudes::from_scattering(&s, c).signed_gamma)
                .unwrap_or(f64::NAN)
        },
        k,
        h,
    );
    Ok(-slope)
}

/// |dR/dk| / (2√(RT)), the magnitude of dγ/dk from the reflection probability.
pub fn x_start_magnitude_from_reflection(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<f64> {
    let s0 = require_partial_transmission(b, p, k)?;
    let h = default_step(k).min(0.25 * k);
    let pot = b.potential();
    let dr = ddk(
        |kk| amplitudes(&pot, p, kk).map(|s| s.reflection).unwrap_or(f64::NAN),
        k,
        h,
    );
    Ok(dr.abs() / (2.0 * (s0.reflection * s0.transmission).sqrt()))
}

/// Channel-resolved stationary state of a mirror-symmetric potential.
///
/// ψ_tr = c_tr·e^{ikx} left of the structure and the full solution from the
/// left edge onwards (the backward continuation of the transmitted wave);
/// ψ_ref = ψ_full − ψ_tr, so ψ_ref vanishes identically from the left edge on.
#[derive(Debug, Clone)]
pub struct ChannelDecomposition {
    state: StationaryState,
    channels: ChannelAmplitudes,
    left: f64,
}

impl ChannelDecomposition {
    pub fn new(pot: &PiecewisePotential, p: &ParticleSpec, k: f64) -> Result<Self> {
        if !pot.is_symmetric() {
            return Err(Error::InvalidParameter(
                "channel decomposition needs a mirror-symmetric potential".into(),
            ));
        }
        let state = StationaryState::new(pot, p, k)?;
        let (left, center) = match pot.extent() {
            Some((lo, hi)) => (lo, 0.5 * (lo + hi)),
            None => (f64::NEG_INFINITY, 0.0),
        };
        let channels = ChannelAmplitudes::from_scattering(&state.result(), center);
        Ok(Self { state, channels, left })
    }

    pub fn state(&self) -> &StationaryState {
        &self.state
    }

    pub fn channels(&self) -> &ChannelAmplitudes {
        &self.channels
    }

    /// Left edge of the structure (−∞ for a free particle).
    pub fn left_edge(&self) -> f64 {
        self.left
    }

    /// (ψ_full, ψ_tr, ψ_ref) at x.
    pub fn values(&self, x: f64) -> (C64, C64, C64) {
        let full = self.state.value(x);
        if x < self.left {
            let tr = self.channels.c_tr * C64::from_polar(1.0, self.state.k() * x);
            (full, tr, full - tr)
        } else {
            (full, full, C64::new(0.0, 0.0))
        }
    }

    /// |ψ_full(a) − c_tr·e^{ika}|: how far the continued transmitted wave is
    /// from the channel's incoming plane wave at the left edge.
    pub fn edge_mismatch(&self) -> f64 {
        if !self.left.is_finite() {
            return 0.0;
        }
        let full = self.state.value(self.left);
        (full - self.channels.c_tr * C64::from_polar(1.0, self.state.k() * self.left)).norm()
    }
}

/// (ψ_tr, ψ_ref) of the unit-incident state at x.
pub fn stationary_channels(b: &BarrierSpec, p: &ParticleSpec, k: f64, x: f64) -> Result<(C64, C64)> {
    let dec = ChannelDecomposition::new(&b.potential(), p, k)?;
    let (_, tr, re) = dec.values(x);
    Ok((tr, re))
}
