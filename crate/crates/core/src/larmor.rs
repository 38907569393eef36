//! Larmor clock for the starting point of the transmitted sub-ensemble.
//!
//! A weak magnetic field along z fills everything outside [a − l, b + l].
//! A spin-1/2 packet that starts in the field with its spin in the x–y plane
//! at azimuth π/4 precesses while it is in the field. Reading the spin of
//! the transmitted packet when its centre of mass passes x = b + L gives
//! the time spent in the field, and with it the mean starting point
//!
//!   x_start = a + L − 2l + (ħk/mω_L)·[π/4 − arctan(⟨Sy⟩/⟨Sx⟩)],
//!
//! lengths measured from the incident centre of mass. A conventional
//! analysis, where transmitted particles start where all particles start,
//! predicts 0 for the right-hand side.
//!
//! The field is diagonal in S_z, so each spin component is a scalar packet
//! in its own potential: the two Zeeman levels ±ħω_L/2 become the
//! asymptotic backgrounds of the two components. The spin-up level is the
//! upper one, which makes ⟨S_x⟩ + i⟨S_y⟩ turn counter-clockwise.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BarrierSpec, ParticleSpec, PiecewisePotential, Segment, HBAR};
use crate::numeric::extrapolate_to_zero;
use crate::packet::{PacketEngine, PacketSpec, XGrid};
use crate::par::{self, Execution};
use crate::timescales;

type C64 = Complex64;

/// Margins are at least this many packet widths.
pub const WIDTH_FACTOR: f64 = 5.0;

/// Field-free margin `l` around the structure, detector offset `L` beyond
/// its right edge and precession frequency ω_L = gμB/ħ in 1/ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldLayout {
    pub l: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub omega_l: f64,
}

impl FieldLayout {
    pub fn new(l: f64, big_l: f64, omega_l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) || !(big_l > l && big_l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field layout needs 0 < l < L, got l = {l}, L = {big_l}"
            )));
        }
        if !(omega_l >= 0.0 && omega_l.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega_L must be >= 0, got {omega_l}")));
        }
        Ok(Self { l, big_l, omega_l })
    }

    pub fn with_omega(self, omega_l: f64) -> Result<Self> {
        Self::new(self.l, self.big_l, omega_l)
    }

    /// Zeeman energy ħω_L/2 in eV.
    pub fn zeeman_offset(&self) -> f64 {
        0.5 * HBAR * self.omega_l
    }

    /// Checks the geometry against a barrier and an incident packet: the
    /// packet has to start inside the field and every margin has to be
    /// wide compared with the packet.
    pub fn validate(&self, b: &BarrierSpec, spec: &PacketSpec) -> Result<()> {
        let entry = b.left() - self.l;
        let w = WIDTH_FACTOR * spec.l0;
        if !(entry > 0.0) {
            return Err(Error::InvalidParameter(format!("a - l = {entry} nm must be positive")));
        }
        if entry - spec.x0 < w {
            return Err(Error::InvalidParameter(format!(
                "field boundary a - l = {entry} nm is closer than {WIDTH_FACTOR} l0 to the packet at x0 = {} nm",
                spec.x0
            )));
        }
        if self.l < w {
            return Err(Error::InvalidParameter(format!(
                "l = {} nm is below {WIDTH_FACTOR} l0 = {w} nm",
                self.l
            )));
        }
        if self.big_l - self.l < w {
            return Err(Error::InvalidParameter(format!(
                "L - l = {} nm is below {WIDTH_FACTOR} l0 = {w} nm",
                self.big_l - self.l
            )));
        }
        Ok(())
    }

    /// Precession angle ω_L·(Δt_in + Δt_out) for a particle with
    /// wavenumber k that starts at the packet centre.
    pub fn precession_angle(&self, b: &BarrierSpec, spec: &PacketSpec, p: &ParticleSpec, k: f64) -> f64 {
        let path = b.left() + self.big_l - 2.0 * self.l - spec.x0;
        self.omega_l * path / p.velocity(k)
    }

    /// Largest ω_L that keeps the precession angle below π/4.
    pub fn max_omega(&self, b: &BarrierSpec, spec: &PacketSpec, p: &ParticleSpec, k: f64) -> f64 {
        let path = b.left() + self.big_l - 2.0 * self.l - spec.x0;
        FRAC_PI_4 * p.velocity(k) / path
    }

    fn check_branch(&self, b: &BarrierSpec, spec: &PacketSpec, p: &ParticleSpec, k: f64) -> Result<()> {
        let angle = self.precession_angle(b, spec, p, k);
        if angle >= FRAC_PI_4 {
            return Err(Error::BranchGuard {
                angle,
                max_omega: self.max_omega(b, spec, p, k),
            });
        }
        Ok(())
    }
}

/// (spin-up, spin-down) potentials: field / free / structure / free / field.
pub fn spin_potentials(b: &BarrierSpec, f: &FieldLayout) -> Result<(PiecewisePotential, PiecewisePotential)> {
    let (a, r) = (b.left(), b.right());
    let segments = || {
        vec![
            Segment::new(a - f.l, a, 0.0),
            Segment::new(a, r, b.v0()),
            Segment::new(r, r + f.l, 0.0),
        ]
    };
    let dz = f.zeeman_offset();
    Ok((
        PiecewisePotential::new(dz, segments())?,
        PiecewisePotential::new(-dz, segments())?,
    ))
}

/// Spin of the transmitted packet at detection, in units of ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinReadout {
    pub omega_l: f64,
    pub t_det: f64,
    pub sx: f64,
    pub sy: f64,
    /// |⟨S_x⟩ + i⟨S_y⟩| relative to its value for fully coherent components.
    pub coherence: f64,
    /// arctan(Sy/Sx) − π/4.
    pub angle: f64,
    /// ⟨k⟩ of the transmitted channel, used in the inversion.
    pub k_tr: f64,
    pub x_start_est: f64,
}

/// Inversion of the spin readout for the starting point.
pub fn invert_readout(
    sx: f64,
    sy: f64,
    a: f64,
    big_l: f64,
    l: f64,
    k: f64,
    omega_l: f64,
    p: &ParticleSpec,
) -> Result<f64> {
    if sx == 0.0 {
        return Err(Error::Domain("Sx = 0: the precession angle is ambiguous".into()));
    }
    if !(omega_l > 0.0) {
        return Err(Error::Domain("the inversion needs omega_L > 0".into()));
    }
    let bracket = FRAC_PI_4 - (sy / sx).atan();
    if bracket <= -FRAC_PI_4 {
        return Err(Error::BranchGuard {
            angle: -bracket,
            max_omega: f64::NAN,
        });
    }
    Ok(a + big_l - 2.0 * l + p.velocity(k) / omega_l * bracket)
}

/// Spin components at detection for a particle with wavenumber k that
/// starts at `x_start`, with ⟨S_x⁽⁰⁾⟩ = ⟨S_y⁽⁰⁾⟩ = `s0`.
pub fn forward_readout(
    x_start: f64,
    a: f64,
    big_l: f64,
    l: f64,
    k: f64,
    omega_l: f64,
    p: &ParticleSpec,
    s0: f64,
) -> (f64, f64) {
    let phase = omega_l / p.velocity(k) * (a + big_l - 2.0 * l - x_start) + FRAC_PI_4;
    let amp = s0 / std::f64::consts::SQRT_2;
    (amp * phase.cos(), amp * phase.sin())
}

/// Detection window: centred on b + L, reaching back to the field boundary.
fn detection_grid(b: &BarrierSpec, f: &FieldLayout, spec: &PacketSpec) -> Result<XGrid> {
    let lo = b.right() + f.l;
    let hi = b.right() + 2.0 * f.big_l - f.l;
    // Products conj(ψ↑)ψ↓ and |ψ|² only carry the spectral width, not k0.
    let band = 4.0 * spec.k_span * spec.sigma_k();
    let dx = (std::f64::consts::PI / band).min(0.25 * spec.l0);
    let n = (((hi - lo) / dx).ceil() as usize + 1).max(257);
    XGrid::new(lo, hi, n)
}

struct Window {
    rho_mean: f64,
    n_up: f64,
    n_down: f64,
    cm: f64,
    overlap: C64,
}

fn window_moments(grid: &XGrid, up: &[C64], down: &[C64]) -> Window {
    let h = grid.step();
    let mut acc = (0.0, 0.0, 0.0, C64::new(0.0, 0.0));
    let last = up.len() - 1;
    for (i, (u, d)) in up.iter().zip(down).enumerate() {
        let w = if i == 0 || i == last { 0.5 * h } else { h };
        let x = grid.lo + i as f64 * h;
        let (nu, nd) = (u.norm_sqr(), d.norm_sqr());
        acc.0 += w * nu;
        acc.1 += w * nd;
        acc.2 += w * x * 0.5 * (nu + nd);
        acc.3 += w * u.conj() * d;
    }
    let rho_mean = 0.5 * (acc.0 + acc.1);
    Window {
        rho_mean,
        n_up: acc.0,
        n_down: acc.1,
        cm: acc.2 / rho_mean,
        overlap: acc.3,
    }
}

/// Number of secant steps allowed when solving cm(t) = b + L.
const MAX_SECANT: usize = 40;

/// Runs the clock for one ω_L and inverts the readout.
pub fn run_clock(
    spec: &PacketSpec,
    b: &BarrierSpec,
    f: &FieldLayout,
    p: &ParticleSpec,
    exec: Execution,
) -> Result<SpinReadout> {
    f.validate(b, spec)?;
    if !(f.omega_l > 0.0) {
        return Err(Error::InvalidParameter("the clock needs omega_L > 0".into()));
    }
    f.check_branch(b, spec, p, spec.k0)?;
    let (pot_up, pot_down) = spin_potentials(b, f)?;
    let (up, down) = par::join(
        exec,
        || PacketEngine::new(spec, &pot_up, p, exec),
        || PacketEngine::new(spec, &pot_down, p, exec),
    );
    let (up, down) = (up?, down?);
    let (ku, kd) = (up.channel_mean_k(), down.channel_mean_k());
    let k_tr = match (ku.transmitted, kd.transmitted) {
        (Some(u), Some(d)) => 0.5 * (u + d),
        _ => return Err(Error::Undefined("nothing is transmitted".into())),
    };
    let grid = detection_grid(b, f, spec)?;
    let target = b.right() + f.big_l;
    let measure = |t: f64| -> Result<Window> {
        let (u, d) = par::join(exec, || up.transmitted_on(t, &grid), || down.transmitted_on(t, &grid));
        Ok(window_moments(&grid, &u?, &d?))
    };

    let v = p.velocity(k_tr);
    let budget = 10.0 * (target - spec.x0) / v;
    let mut t0 = (target - spec.x0) / v;
    let mut t1 = t0 * (1.0 + 1e-3);
    let mut f0 = measure(t0)?.cm - target;
    let mut f1 = measure(t1)?.cm - target;
    let mut converged = false;
    for _ in 0..MAX_SECANT {
        if f1 == f0 {
            break;
        }
        let t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
        if !(t2 > 0.0 && t2 < budget) {
            return Err(Error::DetectionTimeout { target, budget });
        }
        t0 = t1;
        f0 = f1;
        t1 = t2;
        f1 = measure(t1)?.cm - target;
        if (t1 - t0).abs() <= 1e-14 * t1 || f1.abs() <= 1e-12 * target {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::DetectionTimeout { target, budget });
    }
    let t_det = t1;
    let w = measure(t_det)?;
    if !(w.rho_mean > 0.0) {
        return Err(Error::Undefined("no transmitted weight in the detection window".into()));
    }
    // Initial spinor (1, e^{iπ/4})/√2.
    let chi = C64::from_polar(0.5, FRAC_PI_4);
    let s_plus = chi * w.overlap;
    let coherence = w.overlap.norm() / (w.n_up * w.n_down).sqrt();
    let (sx, sy) = (s_plus.re, s_plus.im);
    let x_start_est = invert_readout(sx, sy, b.left() - spec.x0, f.big_l, f.l, k_tr, f.omega_l, p)?;
    Ok(SpinReadout {
        omega_l: f.omega_l,
        t_det,
        sx,
        sy,
        coherence,
        angle: (sy / sx).atan() - FRAC_PI_4,
        k_tr,
        x_start_est,
    })
}

/// Clock readouts on an ω_L ladder and their extrapolation to ω_L → 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LarmorReport {
    pub omega_ladder: Vec<f64>,
    pub rungs: Vec<SpinReadout>,
    /// Polynomial extrapolation of x_start_est to ω_L = 0.
    pub extrapolated: f64,
    /// Closed-form x_start at k0 for the bare barrier.
    pub closed_form_target: f64,
    /// Transmission-weighted spectral mean of the closed-form x_start.
    pub packet_target: f64,
    /// Right-hand side under the assumption that transmitted particles
    /// start where all particles start.
    pub standard_prediction: f64,
}

impl LarmorReport {
    pub fn relative_error(&self) -> f64 {
        ((self.extrapolated - self.closed_form_target) / self.closed_form_target).abs()
    }
}

/// Runs the clock for each ω_L of `ladder` (descending, all > 0).
pub fn larmor_ladder(
    spec: &PacketSpec,
    b: &BarrierSpec,
    f: &FieldLayout,
    p: &ParticleSpec,
    ladder: &[f64],
    exec: Execution,
) -> Result<LarmorReport> {
    if ladder.is_empty() || ladder.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter(
            "omega ladder needs at least one positive value".into(),
        ));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "omega ladder must be strictly descending".into(),
        ));
    }
    let rungs = ladder
        .iter()
        .map(|&w| run_clock(spec, b, &f.with_omega(w)?, p, exec))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rungs.iter().map(|r| (r.omega_l, r.x_start_est)).collect();
    let extrapolated =
        extrapolate_to_zero(&points).ok_or_else(|| Error::Invariant("ladder extrapolation failed".into()))?;
    let packet_target = crate::packet::starting_point_packet(spec, b, p)? - spec.x0;
    Ok(LarmorReport {
        omega_ladder: ladder.to_vec(),
        rungs,
        extrapolated,
        closed_form_target: timescales::x_start(b, spec.k0),
        packet_target,
        standard_prediction: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_leaves_the_bare_barrier() {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(0.25, 0.5, 100.0, &p).unwrap();
        let f = FieldLayout::new(40.0, 90.0, 0.0).unwrap();
        let (up, down) = spin_potentials(&b, &f).unwrap();
        let bare = b.potential();
        for x in [-10.0, 59.0, 61.0, 100.2, 100.7, 140.0, 200.0] {
            assert_eq!(up.level_at(x), bare.level_at(x));
            assert_eq!(down.level_at(x), bare.level_at(x));
        }
    }

    #[test]
    fn zeeman_split_in_field_regions() {
        let p = ParticleSpec::gaas();
        let b = BarrierSpec::new(0.25, 0.5, 100.0, &p).unwrap();
        let f = FieldLayout::new(40.0, 90.0, 0.01).unwrap();
        let (up, down) = spin_potentials(&b, &f).unwrap();
        assert_eq!(up.segments().len() + 2, 5);
        for x in [0.0, 200.0] {
            assert!((up.level_at(x) - down.level_at(x) - HBAR * 0.01).abs() < 1e-18);
        }
        assert_eq!(up.level_at(100.2), 0.25);
        assert_eq!(down.level_at(80.0), 0.0);
    }

    #[test]
    fn untouched_spin_inverts_to_offset() {
        let p = ParticleSpec::gaas();
        let x = invert_readout(1.0, 1.0, 300.0, 200.0, 100.0, 0.5, 0.01, &p).unwrap();
        assert!((x - 300.0).abs() < 1e-12);
        assert!(invert_readout(0.0, 1.0, 300.0, 200.0, 100.0, 0.5, 0.01, &p).is_err());
    }

    #[test]
    fn layout_guards() {
        let p = ParticleSpec::gaas();
        let spec = PacketSpec::new(200.0, 0.0, 0.47).unwrap();
        let b = BarrierSpec::new(0.25, 0.5, 3000.0, &p).unwrap();
        assert!(FieldLayout::new(1000.0, 2000.0, 0.01)
            .unwrap()
            .validate(&b, &spec)
            .is_ok());
        assert!(FieldLayout::new(500.0, 2000.0, 0.01)
            .unwrap()
            .validate(&b, &spec)
            .is_err());
        assert!(FieldLayout::new(1000.0, 1500.0, 0.01)
            .unwrap()
            .validate(&b, &spec)
            .is_err());
        assert!(FieldLayout::new(2500.0, 5000.0, 0.01)
            .unwrap()
            .validate(&b, &spec)
            .is_err());
        let strong = FieldLayout::new(1000.0, 2000.0, 10.0).unwrap();
        let err = run_clock(&spec, &b, &strong, &p, Execution::Sequential).unwrap_err();
        assert!(matches!(err, Error::BranchGuard { .. }));
    }
}
