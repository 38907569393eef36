//! Exact stationary scattering on piecewise-constant potentials.
//!
//! The unit-incident solution is built by marching (ψ, ψ′) from the right
//! asymptotic region (where ψ = e^{ikx}) back through every region with the
//! exact local propagator. Inside evanescent regions the propagator's
//! exponential growth is carried as a separate logarithmic scale, so wide
//! barriers (κd of several hundred) neither overflow nor lose the decaying
//! component.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ParticleSpec, PiecewisePotential};
use crate::numeric::{cos_entire, ddk, default_step, sinc_entire, PhaseUnwrapper};
use crate::par::{self, Execution};

pub type C64 = Complex64;

/// Amplitudes of the unit-incident solution at one k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringResult {
    pub k: f64,
    pub t_amp: C64,
    pub r_amp: C64,
    pub transmission: f64,
    pub reflection: f64,
    /// arg t; unwrapped along k when produced by [`sweep`].
    pub phase_t: f64,
}

#[derive(Debug, Clone, Copy)]
struct RegionState {
    left: f64,
    right: f64,
    /// (E − level)/K, negative in evanescent regions.
    u: f64,
    /// Right-edge ψ and ψ′ of the unit-incident solution, times e^{log_scale}.
    psi: C64,
    dpsi: C64,
    log_scale: f64,
}

/// cos(√u w) and sin(√u w)/√u as `(c, s, log)` with the true values equal to
/// `(c, s)·e^{log}`.
fn propagator(u: f64, w: f64) -> (f64, f64, f64) {
    let kw = (-u).max(0.0).sqrt() * w;
    if u >= 0.0 || kw <= 1.0 {
        let z = u * w * w;
        (cos_entire(z), w * sinc_entire(z), 0.0)
    } else {
        let kappa = (-u).sqrt();
        let e = (-2.0 * kw).exp();
        (0.5 * (1.0 + e), 0.5 * (1.0 - e) / kappa, kw)
    }
}

/// Unit-incident scattering solution, evaluable at any x.
#[derive(Debug, Clone)]
pub struct StationaryState {
    k: f64,
    t: C64,
    r: C64,
    regions: Vec<RegionState>,
}

impl StationaryState {
    pub fn new(pot: &PiecewisePotential, particle: &ParticleSpec, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("scattering amplitudes need k > 0, got {k}")));
        }
        let kc = particle.kinetic_coeff();
        let bg = pot.background();
        let segments = pot.contiguous();
        if segments.is_empty() {
            return Ok(Self {
                k,
                t: C64::new(1.0, 0.0),
                r: C64::new(0.0, 0.0),
                regions: Vec::new(),
            });
        }
        let ik = C64::new(0.0, k);
        let x_right = segments.last().unwrap().right;
        let mut psi = C64::from_polar(1.0, k * x_right);
        let mut dpsi = ik * psi;
        let mut log_scale = 0.0;
        let mut regions = Vec::with_capacity(segments.len());
        for seg in segments.iter().rev() {
            let u = k * k - (seg.level - bg) / kc;
            regions.push(RegionState {
                left: seg.left,
                right: seg.right,
                u,
                psi,
                dpsi,
                log_scale,
            });
            let (c, s, lg) = propagator(u, seg.right - seg.left);
            let p_new = psi * c - dpsi * s;
            let d_new = psi * (u * s) + dpsi * c;
            psi = p_new;
            dpsi = d_new;
            log_scale += lg;
            let n = psi.norm() + dpsi.norm() / k;
            if n > 0.0 && n.is_finite() {
                psi /= n;
                dpsi /= n;
                log_scale += n.ln();
            }
        }
        regions.reverse();
        let x_left = segments[0].left;
        let a_hat = 0.5 * (psi + dpsi / ik) * C64::from_polar(1.0, -k * x_left);
        let b_hat = 0.5 * (psi - dpsi / ik) * C64::from_polar(1.0, k * x_left);
        if a_hat.norm() == 0.0 || !a_hat.is_finite() {
            return Err(Error::Invariant(format!("incident amplitude degenerate at k = {k}")));
        }
        let t = (-log_scale).exp() / a_hat;
        let r = b_hat / a_hat;
        for reg in &mut regions {
            reg.psi /= a_hat;
            reg.dpsi /= a_hat;
            reg.log_scale -= log_scale;
        }
        Ok(Self { k, t, r, regions })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn t_amp(&self) -> C64 {
        self.t
    }
    pub fn r_amp(&self) -> C64 {
        self.r
    }

    /// Leftmost and rightmost edges of the structure.
    pub fn extent(&self) -> Option<(f64, f64)> {
        Some((self.regions.first()?.left, self.regions.last()?.right))
    }

    fn region_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.extent()?;
        if x < lo || x >= hi {
            return None;
        }
        let idx = self.regions.partition_point(|r| r.right <= x);
        Some(idx.min(self.regions.len() - 1))
    }

    /// ψ(x) and ψ′(x).
    pub fn value_and_derivative(&self, x: f64) -> (C64, C64) {
        let ik = C64::new(0.0, self.k);
        let e = C64::from_polar(1.0, self.k * x);
        match self.extent() {
            None => (e, ik * e),
            Some((lo, _)) if x < lo => {
                let er = self.r * e.conj();
                (e + er, ik * (e - er))
            }
            Some((_, hi)) if x >= hi => {
                let v = self.t * e;
                (v, ik * v)
            }
            Some(_) => {
                let reg = &self.regions[self.region_index(x).expect("inside structure")];
                let (c, s, lg) = propagator(reg.u, reg.right - x);
                let scale = (reg.log_scale + lg).exp();
                let v = (reg.psi * c - reg.dpsi * s) * scale;
                let d = (reg.psi * (reg.u * s) + reg.dpsi * c) * scale;
                (v, d)
            }
        }
    }

    pub fn value(&self, x: f64) -> C64 {
        self.value_and_derivative(x).0
    }

    pub fn result(&self) -> ScatteringResult {
        ScatteringResult {
            k: self.k,
            t_amp: self.t,
            r_amp: self.r,
            transmission: self.t.norm_sqr(),
            reflection: self.r.norm_sqr(),
            phase_t: self.t.arg(),
        }
    }
}

/// Transmission and reflection amplitudes at `k` (relative to the
/// background level).
pub fn amplitudes(pot: &PiecewisePotential, particle: &ParticleSpec, k: f64) -> Result<ScatteringResult> {
    Ok(StationaryState::new(pot, particle, k)?.result())
}

/// ψ_k(x) of the unit-incident solution.
pub fn stationary_value(pot: &PiecewisePotential, particle: &ParticleSpec, k: f64, x: f64) -> Result<C64> {
    Ok(StationaryState::new(pot, particle, k)?.value(x))
}

/// Amplitudes on a monotone k-grid with the transmission phase unwrapped.
pub fn sweep(
    pot: &PiecewisePotential,
    particle: &ParticleSpec,
    ks: &[f64],
    exec: Execution,
) -> Result<Vec<ScatteringResult>> {
    let mut out = par::map_slice(ks, exec, |&k| amplitudes(pot, particle, k))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut unwrap = PhaseUnwrapper::new();
    for r in &mut out {
        r.phase_t = unwrap.push(r.phase_t);
    }
    Ok(out)
}

/// d(arg t)/dk by Richardson-extrapolated central differences.
///
/// Phases are taken relative to t(k) so the stencil never straddles a branch
/// cut.
pub fn transmission_phase_derivative(pot: &PiecewisePotential, particle: &ParticleSpec, k: f64) -> Result<f64> {
    let t0 = amplitudes(pot, particle, k)?.t_amp;
    let h = default_step(k).min(0.25 * k);
    for kk in [k - 2.0 * h, k + 2.0 * h] {
        amplitudes(pot, particle, kk)?;
    }
    Ok(ddk(
        |kk| {
            let t = amplitudes(pot, particle, kk).expect("checked above").t_amp;
            (t * t0.conj()).arg()
        },
        k,
        h,
    ))
}

/// Plane-wave transfer matrix M with (A, B)ᵀ = M (C, D)ᵀ, where
/// ψ = A e^{ikx} + B e^{−ikx} left of the structure and
/// ψ = C e^{ikx} + D e^{−ikx} right of it.
pub fn transfer_matrix(pot: &PiecewisePotential, particle: &ParticleSpec, k: f64) -> Result<[[C64; 2]; 2]> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("transfer matrix needs k > 0, got {k}")));
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let segments = pot.contiguous();
    if segments.is_empty() {
        return Ok([[one, zero], [zero, one]]);
    }
    let kc = particle.kinetic_coeff();
    let bg = pot.background();
    // (ψ, ψ′) at the left edge as a real 2×2 map of (ψ, ψ′) at the right edge
    let mut p = [[1.0, 0.0], [0.0, 1.0]];
    for seg in segments.iter().rev() {
        let u = k * k - (seg.level - bg) / kc;
        let (c, s, lg) = propagator(u, seg.right - seg.left);
        let g = lg.exp();
        let back = [[c * g, -s * g], [u * s * g, c * g]];
        p = [
            [
                back[0][0] * p[0][0] + back[0][1] * p[1][0],
                back[0][0] * p[0][1] + back[0][1] * p[1][1],
            ],
            [
                back[1][0] * p[0][0] + back[1][1] * p[1][0],
                back[1][0] * p[0][1] + back[1][1] * p[1][1],
            ],
        ];
    }
    let ik = C64::new(0.0, k);
    let x0 = segments[0].left;
    let xn = segments.last().unwrap().right;
    let w = |x: f64| {
        let e = C64::from_polar(1.0, k * x);
        let ei = e.conj();
        [[e, ei], [ik * e, -ik * ei]]
    };
    let wn = w(xn);
    // P·W(x_N)
    let pw = [
        [
            wn[0][0] * p[0][0] + wn[1][0] * p[0][1],
            wn[0][1] * p[0][0] + wn[1][1] * p[0][1],
        ],
        [
            wn[0][0] * p[1][0] + wn[1][0] * p[1][1],
            wn[0][1] * p[1][0] + wn[1][1] * p[1][1],
        ],
    ];
    // W(x_0)⁻¹ = 1/(−2ik) [[−ik e^{−ikx}, −e^{−ikx}], [−ik e^{ikx}, e^{ikx}]]
    let e0 = C64::from_polar(1.0, k * x0);
    let inv_det = one / (-2.0 * ik);
    let winv = [
        [-ik * e0.conj() * inv_det, -e0.conj() * inv_det],
        [-ik * e0 * inv_det, e0 * inv_det],
    ];
    let mut m = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = winv[i][0] * pw[0][j] + winv[i][1] * pw[1][j];
        }
    }
    Ok(m)
}
