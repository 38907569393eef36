//! Closed-form effective widths of a rectangular barrier or well.
//!
//! For a structure of width d all quantities are lengths: the phase width
//! D_phase, the dwell width D_dwell, the tunnelling width d_eff and the
//! starting point x_start of the transmitted centre of mass. Dividing by the
//! group velocity ħk/m turns a width into a time. They obey
//! D_phase = d_eff − x_start for every k.
//!
//! Below the barrier top the textbook displays contain sinh²(κd) in the
//! denominator; they are evaluated here after dividing through by sinh², so
//! κd of several hundred is harmless. For |κd| < 1 an equivalent form built
//! from entire functions of u = k² − βκ0² is used instead, which is regular
//! at the branch point E = V0.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BarrierSpec, ParticleSpec};
use crate::numeric::{golden_section_min, rho_entire, sinc_entire, tau_entire};
use crate::scattering::amplitudes;

/// Below this |κd| the entire-function form replaces the branch formulas.
const EDGE_WINDOW: f64 = 1.0;

/// The four widths at one k, in nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Widths {
    pub d_phase: f64,
    pub d_dwell: f64,
    pub d_eff: f64,
    pub x_start: f64,
}

/// Widths at one k together with the corresponding times (ps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimescaleRecord {
    pub k: f64,
    pub d_phase: f64,
    pub d_dwell: f64,
    pub d_eff: f64,
    pub x_start: f64,
    pub tau_phase: f64,
    pub tau_dwell: f64,
    pub tau_tun: f64,
    /// d/v, the free traversal time of the barrier width.
    pub tau_free: f64,
}

/// All four widths at wavenumber `k > 0`.
pub fn widths(b: &BarrierSpec, k: f64) -> Widths {
    let d = b.width();
    if b.is_free() {
        return Widths {
            d_phase: d,
            d_dwell: d,
            d_eff: d,
            x_start: 0.0,
        };
    }
    let u = b.signed_kappa_sq(k);
    let kappa = u.abs().sqrt();
    if kappa * d < EDGE_WINDOW {
        entire_widths(b, k, u)
    } else if u < 0.0 {
        below_widths(b, k, kappa)
    } else {
        above_widths(b, k, kappa)
    }
}

fn below_widths(b: &BarrierSpec, k: f64, kappa: f64) -> Widths {
    let d = b.width();
    let k0sq = b.kappa0().powi(2);
    let k2 = k * k;
    let x = kappa * d;
    let csch = 1.0 / x.sinh();
    let coth = 1.0 / x.tanh();
    let th2 = (0.5 * x).tanh();
    let diff = kappa * kappa - k2;
    let den = 4.0 * k2 * kappa * kappa * csch * csch + k0sq * k0sq;
    Widths {
        d_phase: (2.0 * x * k2 * diff * csch * csch + 2.0 * k0sq * k0sq * coth) / (kappa * den),
        d_dwell: k2 / kappa * (2.0 * x * diff * csch * csch + 2.0 * k0sq * coth) / den,
        d_eff: 4.0 / kappa * (k2 * csch + 0.5 * k0sq * th2) * (k0sq - k2 * x * csch) / den,
        x_start: -2.0 * k0sq * (diff * csch + k2 * x * coth * csch) / (kappa * den),
    }
}

fn above_widths(b: &BarrierSpec, k: f64, kappa: f64) -> Widths {
    let d = b.width();
    let beta = b.beta();
    let k0sq = b.kappa0().powi(2);
    let k2 = k * k;
    let x = kappa * d;
    let (sin, cos) = x.sin_cos();
    let sum = kappa * kappa + k2;
    let den = 4.0 * k2 * kappa * kappa + k0sq * k0sq * sin * sin;
    let sin_half = (0.5 * x).sin();
    Widths {
        d_phase: (2.0 * x * k2 * sum - k0sq * k0sq * (2.0 * x).sin()) / (kappa * den),
        d_dwell: k2 / kappa * (2.0 * x * sum - beta * k0sq * (2.0 * x).sin()) / den,
        d_eff: 4.0 / kappa * (k2 - beta * k0sq * sin_half * sin_half) * (k2 * x - beta * k0sq * sin) / den,
        x_start: -2.0 * beta * k0sq / kappa * (sum * sin - k2 * x * cos) / den,
    }
}

/// Same quantities written with sinc, τ and ρ of z = u d²; valid for any u.
fn entire_widths(b: &BarrierSpec, k: f64, u: f64) -> Widths {
    let d = b.width();
    let beta = b.beta();
    let k0sq = b.kappa0().powi(2);
    let k2 = k * k;
    let z = u * d * d;
    let s = d * sinc_entire(z);
    let s_half = 0.5 * d * sinc_entire(0.25 * z);
    let tau4 = tau_entire(4.0 * z);
    let den = 4.0 * k2 + k0sq * k0sq * s * s;
    Widths {
        d_phase: 2.0 * d * (2.0 * u + 3.0 * beta * k0sq + 4.0 * k0sq * k0sq * d * d * tau4) / den,
        d_dwell: 2.0 * k2 * d * (2.0 + 4.0 * beta * k0sq * d * d * tau4) / den,
        d_eff: 4.0 * d * (k2 - beta * k0sq * u * s_half * s_half) * (1.0 + beta * k0sq * d * d * tau_entire(z)) / den,
        x_start: -2.0 * beta * k0sq * (s + k2 * d.powi(3) * rho_entire(z)) / den,
    }
}

pub fn d_phase(b: &BarrierSpec, k: f64) -> f64 {
    widths(b, k).d_phase
}

pub fn d_dwell(b: &BarrierSpec, k: f64) -> f64 {
    widths(b, k).d_dwell
}

pub fn d_eff(b: &BarrierSpec, k: f64) -> f64 {
    widths(b, k).d_eff
}

pub fn x_start(b: &BarrierSpec, k: f64) -> f64 {
    widths(b, k).x_start
}

pub fn timescales(b: &BarrierSpec, p: &ParticleSpec, k: f64) -> Result<TimescaleRecord> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("wavenumber must be positive, got {k}")));
    }
    let w = widths(b, k);
    let v = p.velocity(k);
    Ok(TimescaleRecord {
        k,
        d_phase: w.d_phase,
        d_dwell: w.d_dwell,
        d_eff: w.d_eff,
        x_start: w.x_start,
        tau_phase: w.d_phase / v,
        tau_dwell: w.d_dwell / v,
        tau_tun: w.d_eff / v,
        tau_free: b.width() / v,
    })
}

/// One ratio of the k → 0 limit, with a flag for a pole of the well branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitValue {
    /// ±inf when `divergent`.
    pub value: f64,
    pub divergent: bool,
}

impl LimitValue {
    fn new(value: f64, pole_distance: f64) -> Self {
        if pole_distance.abs() < POLE_TOLERANCE || !value.is_finite() {
            Self {
                value: f64::INFINITY.copysign(value),
                divergent: true,
            }
        } else {
            Self {
                value,
                divergent: false,
            }
        }
    }
}

const POLE_TOLERANCE: f64 = 1e-9;

/// The four width ratios (width/d) at k = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongwaveLimits {
    pub kappa0_d: f64,
    pub d_phase_over_d: LimitValue,
    pub d_dwell_over_d: LimitValue,
    pub d_eff_over_d: LimitValue,
    pub x_start_over_d: LimitValue,
}

pub fn longwave_limits(b: &BarrierSpec) -> Result<LongwaveLimits> {
    let x = b.kappa0() * b.width();
    if x == 0.0 {
        return Err(Error::Domain("long-wave limits need a non-zero kappa0*d".into()));
    }
    let zero = LimitValue::new(0.0, 1.0);
    let limits = if b.beta() > 0.0 {
        LongwaveLimits {
            kappa0_d: x,
            d_phase_over_d: LimitValue::new(2.0 / (x * x.tanh()), 1.0),
            d_dwell_over_d: zero,
            d_eff_over_d: LimitValue::new(2.0 / x * (0.5 * x).tanh(), 1.0),
            x_start_over_d: LimitValue::new(-2.0 / (x * x.sinh()), 1.0),
        }
    } else {
        let (sin, cos) = x.sin_cos();
        let (sin_h, cos_h) = (0.5 * x).sin_cos();
        LongwaveLimits {
            kappa0_d: x,
            d_phase_over_d: LimitValue::new(-2.0 * cos / (x * sin), sin),
            d_dwell_over_d: zero,
            d_eff_over_d: LimitValue::new(2.0 / x * sin_h / cos_h, cos_h),
            x_start_over_d: LimitValue::new(2.0 / (x * sin), sin),
        }
    };
    Ok(limits)
}

/// Exact values at k = d/λ² next to their d → 0 targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLimit {
    pub k: f64,
    pub transmission: f64,
    pub d_dwell_over_d: f64,
    pub d_phase_over_d: f64,
    pub d_eff_over_d: f64,
    pub x_start: f64,
    pub target_transmission: f64,
    pub target_d_dwell_over_d: f64,
    pub target_d_phase_over_d: f64,
    pub target_d_eff_over_d: f64,
    pub target_x_start: f64,
}

/// Weak-structure limit with κ0 fixed and k = d/λ².
///
/// The transmission tends to T* = 4/(4 + λ⁴κ0⁴) and D_dwell/d tends to T*
/// for barriers and wells alike.
pub fn scaling_limit(lambda: f64, kappa0: f64, d: f64, beta: f64, p: &ParticleSpec) -> Result<ScalingLimit> {
    if !(lambda > 0.0 && d > 0.0) {
        return Err(Error::InvalidParameter(
            "scaling limit needs lambda > 0 and d > 0".into(),
        ));
    }
    let b = BarrierSpec::from_kappa0(kappa0, d, beta, 0.0, p)?;
    let k = d / (lambda * lambda);
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("k = d/lambda^2 = {k} is not usable")));
    }
    let w = widths(&b, k);
    let s = amplitudes(&b.potential(), p, k)?;
    let l4k4 = (lambda * kappa0).powi(4);
    let t_star = 4.0 / (4.0 + l4k4);
    let phase_star = b.beta() * 2.0 * lambda.powi(4) * kappa0 * kappa0 / ((4.0 + l4k4) * d * d);
    Ok(ScalingLimit {
        k,
        transmission: s.transmission,
        d_dwell_over_d: w.d_dwell / d,
        d_phase_over_d: w.d_phase / d,
        d_eff_over_d: w.d_eff / d,
        x_start: w.x_start,
        target_transmission: t_star,
        target_d_dwell_over_d: t_star,
        target_d_phase_over_d: phase_star,
        target_d_eff_over_d: 1.0,
        target_x_start: -phase_star * d,
    })
}

/// Width ratios at the n-th transmission resonance κd = nπ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceRecord {
    pub n: u32,
    pub k_r: f64,
    pub d_phase_over_d: f64,
    pub d_dwell_over_d: f64,
    pub d_eff_over_d: f64,
    pub x_start_over_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmittedResonance {
    pub n: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ResonanceTable {
    pub records: Vec<ResonanceRecord>,
    pub omitted: Vec<OmittedResonance>,
}

/// k_r for resonance `n`, or `None` when κ0 ≥ nπ/d in a well.
pub fn resonance_wavenumber(b: &BarrierSpec, n: u32) -> Option<f64> {
    let q = n as f64 * std::f64::consts::PI / b.width();
    let k2 = b.beta() * b.kappa0().powi(2) + q * q;
    (n >= 1 && k2 > 0.0).then(|| k2.sqrt())
}

pub fn resonance_table(b: &BarrierSpec, n_max: u32) -> ResonanceTable {
    let mut table = ResonanceTable::default();
    let d = b.width();
    for n in 1..=n_max {
        let Some(k_r) = resonance_wavenumber(b, n) else {
            table.omitted.push(OmittedResonance {
                n,
                reason: format!(
                    "k_r is imaginary: n*pi/d = {:.6} 1/nm does not exceed kappa0 = {:.6} 1/nm",
                    n as f64 * std::f64::consts::PI / d,
                    b.kappa0()
                ),
            });
            continue;
        };
        let q = b.beta() * (b.kappa0() * d).powi(2) / (n as f64 * std::f64::consts::PI).powi(2);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        table.records.push(ResonanceRecord {
            n,
            k_r,
            d_phase_over_d: 1.0 + 0.5 * q,
            d_dwell_over_d: 1.0 + 0.5 * q,
            d_eff_over_d: if n % 2 == 0 { 1.0 + q } else { 1.0 },
            x_start_over_d: sign * 0.5 * q,
        });
    }
    table
}

/// Location of the transmission maximum near resonance `n`, by minimising R(k).
pub fn resonance_peak(b: &BarrierSpec, p: &ParticleSpec, n: u32) -> Result<f64> {
    let k_r = resonance_wavenumber(b, n).ok_or_else(|| Error::Domain(format!("resonance {n} does not exist")))?;
    let spacing = std::f64::consts::PI / b.width();
    let lo = (k_r - 0.1 * spacing).max(0.5 * k_r);
    let hi = k_r + 0.1 * spacing;
    let pot = b.potential();
    let reflection = |k: f64| amplitudes(&pot, p, k).map(|s| s.reflection).unwrap_or(f64::INFINITY);
    Ok(golden_section_min(reflection, lo, hi, 1e-12 * k_r))
}

/// Lorentzian width a0 of resonance `n` from T sampled at k_r ± δ, δ = 10⁻³k_r.
pub fn lorentz_width(b: &BarrierSpec, p: &ParticleSpec, n: u32) -> Result<f64> {
    let k_r = resonance_wavenumber(b, n).ok_or_else(|| Error::Domain(format!("resonance {n} does not exist")))?;
    let delta = 1e-3 * k_r;
    let a0 = lorentz_width_with_step(b, p, n, delta)?;
    let check = lorentz_width_with_step(b, p, n, 0.5 * delta)?;
    let residual = ((a0 - check) / check).abs();
    if residual > LORENTZ_RESIDUAL {
        return Err(Error::ResonanceFit(format!(
            "resonance {n}: a0 changes by {residual:.2e} when the offset is halved; the peak is not Lorentzian at this scale"
        )));
    }
    Ok(a0)
}

const LORENTZ_RESIDUAL: f64 = 1e-3;

/// a0 with an explicit offset; the ± samples are averaged to cancel the odd term.
pub fn lorentz_width_with_step(b: &BarrierSpec, p: &ParticleSpec, n: u32, delta: f64) -> Result<f64> {
    let k_r = resonance_wavenumber(b, n).ok_or_else(|| Error::Domain(format!("resonance {n} does not exist")))?;
    if !(delta > 0.0 && delta < k_r) {
        return Err(Error::InvalidParameter(format!(
            "offset must lie in (0, k_r), got {delta}"
        )));
    }
    let pot = b.potential();
    let mut a0sq = 0.0;
    for k in [k_r - delta, k_r + delta] {
        let s = amplitudes(&pot, p, k)?;
        a0sq += 0.5 * (s.reflection / s.transmission) / (delta * delta);
    }
    Ok(a0sq.sqrt())
}
