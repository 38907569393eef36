//! Gaussian wave packets propagated by superposing exact scattering states.
//!
//! ψ(x, t) = (2π)^{-1/2} Σ_n w_n A(k_n) ψ_{k_n}(x) e^{−iE(k_n)t/ħ} on a
//! uniform k-grid. Outside the structure every ψ_k is a combination of plane
//! waves, so the sum over k runs on a phase recurrence; inside the structure
//! the stationary states are evaluated directly. No spatial grid ever has to
//! resolve the structure itself.

use num_complex::Complex64;
use serde::Serialize;

use crate::decomposition::ChannelDecomposition;
use crate::error::{Error, Result};
use crate::model::{BarrierSpec, ParticleSpec, PiecewisePotential, HBAR};
use crate::numeric::normal_upper_tail;
use crate::par::{self, Execution};
use crate::timescales;

type C64 = Complex64;

/// Default number of k-nodes.
pub const DEFAULT_NK: usize = 4096;
/// Default k-grid half-width in units of σ_k.
pub const DEFAULT_K_SPAN: f64 = 6.0;
/// Default allowance for spectral weight at k ≤ 0.
pub const DEFAULT_MAX_NEGATIVE_TAIL: f64 = 1e-12;
/// Default number of x-samples per snapshot (a lower bound; see [`XGrid::auto`]).
pub const DEFAULT_NX: usize = 8192;
/// Default norm a snapshot grid may lose before it is rejected.
pub const DEFAULT_CAPTURE_TOLERANCE: f64 = 1e-6;

/// Gaussian packet with ⟨x⟩ = x0, ⟨x²⟩ − x0² = l0² and mean wavenumber k0 at
/// t = 0. The momentum-space density has standard deviation σ_k = 1/(2 l0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketSpec {
    pub l0: f64,
    pub x0: f64,
    pub k0: f64,
    pub n_k: usize,
    pub k_span: f64,
    /// Largest tolerated weight of the Gaussian at k ≤ 0. Weight there is
    /// dropped: the grid then starts at k = 0.
    pub max_negative_tail: f64,
}

impl PacketSpec {
    pub fn new(l0: f64, x0: f64, k0: f64) -> Result<Self> {
        let spec = Self {
            l0,
            x0,
            k0,
            n_k: DEFAULT_NK,
            k_span: DEFAULT_K_SPAN,
            max_negative_tail: DEFAULT_MAX_NEGATIVE_TAIL,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_energy(l0: f64, x0: f64, energy: f64, p: &ParticleSpec) -> Result<Self> {
        Self::new(l0, x0, p.wavenumber(energy)?)
    }

    pub fn with_grid(mut self, n_k: usize, k_span: f64) -> Result<Self> {
        self.n_k = n_k;
        self.k_span = k_span;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_negative_tail(mut self, limit: f64) -> Result<Self> {
        self.max_negative_tail = limit;
        self.validate()?;
        Ok(self)
    }

    pub fn sigma_k(&self) -> f64 {
        0.5 / self.l0
    }

    /// Weight of the Gaussian density at k ≤ 0.
    pub fn negative_tail(&self) -> f64 {
        normal_upper_tail(self.k0 / self.sigma_k())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(Error::InvalidParameter(format!("l0 must be positive, got {}", self.l0)));
        }
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(Error::InvalidParameter(format!("k0 must be positive, got {}", self.k0)));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        if self.n_k < 16 || !self.n_k.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_k must be a power of two >= 16, got {}",
                self.n_k
            )));
        }
        if !(self.k_span > 0.0 && self.k_span.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k_span must be positive, got {}",
                self.k_span
            )));
        }
        if !(0.0..1.0).contains(&self.max_negative_tail) {
            return Err(Error::InvalidParameter(format!(
                "max_negative_tail must lie in [0, 1), got {}",
                self.max_negative_tail
            )));
        }
        let tail = self.negative_tail();
        if tail > self.max_negative_tail {
            return Err(Error::NegativeMomentumTail {
                fraction: tail,
                limit: self.max_negative_tail,
            });
        }
        Ok(())
    }
}

/// Sampled momentum amplitude on a uniform grid k_n = k_first + n·step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub k: Vec<f64>,
    /// Quadrature weight per node.
    pub weight: Vec<f64>,
    /// A(k_n), normalised so Σ w_n |A_n|² = 1.
    pub amplitude: Vec<C64>,
    pub step: f64,
    /// Whether the grid was cut at k = 0.
    pub truncated: bool,
}

impl Spectrum {
    /// Σ w_n |A_n|² f(k_n).
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.k
            .iter()
            .zip(&self.weight)
            .zip(&self.amplitude)
            .map(|((&k, &w), a)| w * a.norm_sqr() * f(k))
            .sum()
    }
}

/// A(k) ∝ exp(−l0²(k − k0)² − ikx0) on the grid k0 ± k_span·σ_k.
///
/// When that range reaches k ≤ 0 the grid becomes k_n = n·step, n = 1..n_k,
/// up to k0 + k_span·σ_k; the k = 0 node is skipped because every scattering
/// state vanishes there. The cut leaves |A(0⁺)| finite, which gives |ψ(x)|²
/// an algebraic 1/x² tail (see [`XGrid::auto`]). All nodes carry the same
/// weight, so the k-space and x-space norms coincide for the nodes actually
/// synthesised.
pub fn gaussian_spectrum(spec: &PacketSpec) -> Result<Spectrum> {
    spec.validate()?;
    let n = spec.n_k;
    let (first, step, truncated) = k_layout(spec);
    let k: Vec<f64> = (0..n).map(|i| first + i as f64 * step).collect();
    let mut amplitude: Vec<C64> = k
        .iter()
        .map(|&k| C64::from_polar((-(spec.l0 * (k - spec.k0)).powi(2)).exp(), -k * spec.x0))
        .collect();
    let weight = vec![step; n];
    let norm: f64 = amplitude.iter().map(|a| a.norm_sqr() * step).sum();
    let scale = norm.sqrt().recip();
    for a in &mut amplitude {
        *a *= scale;
    }
    Ok(Spectrum {
        k,
        weight,
        amplitude,
        step,
        truncated,
    })
}

/// (first node, step, cut at zero) of the k-grid.
fn k_layout(spec: &PacketSpec) -> (f64, f64, bool) {
    let half = spec.k_span * spec.sigma_k();
    if spec.k0 - half > 0.0 {
        (spec.k0 - half, 2.0 * half / (spec.n_k - 1) as f64, false)
    } else {
        let step = (spec.k0 + half) / spec.n_k as f64;
        (step, step, true)
    }
}

/// Uniform sampling of [lo, hi] with n points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl XGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) || n < 2 {
            return Err(Error::InvalidParameter(format!(
                "x-grid [{lo}, {hi}] with {n} points is malformed"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n).map(|i| self.lo + i as f64 * h).collect()
    }

    /// Grid holding the incident, transmitted and reflected packets at time
    /// t, each with an 8σ(t) margin. The point count is at least
    /// [`DEFAULT_NX`] and at least eight samples per shortest wavelength.
    ///
    /// For a spectrum cut at k = 0 the margin grows until the algebraic
    /// tail beyond it is below `tolerance`, but the grid never exceeds half
    /// the period 2π/Δk of the discrete k-sum.
    pub fn auto(spec: &PacketSpec, pot: &PiecewisePotential, p: &ParticleSpec, t: f64, tolerance: f64) -> Result<Self> {
        let sigma = spreading_width(spec, p, t);
        let v = p.velocity(spec.k0);
        let ahead = spec.x0 + v * t;
        let mut lo = spec.x0.min(ahead);
        let mut hi = spec.x0.max(ahead);
        if let Some((left, right)) = pot.extent() {
            if ahead > left {
                lo = lo.min(2.0 * left - ahead);
            }
            lo = lo.min(left);
            hi = hi.max(right);
        }
        // A spectrum cut at k = 0 leaves |ψ|² ≈ c|A(0)|²/(2πx²) far out, with
        // c ≤ 4; the margin puts half the lost norm on each side.
        let edge = gaussian_density_at_zero(spec);
        let tail = 4.0 * edge / (std::f64::consts::PI * tolerance);
        let period = 2.0 * std::f64::consts::PI / k_layout(spec).1;
        let room = (0.5 * period - (hi - lo)) / 2.0;
        let margin = (8.0 * sigma).max(tail.min(room));
        lo -= margin;
        hi += margin;
        let k_max = spec.k0 + spec.k_span * spec.sigma_k();
        let dx_max = std::f64::consts::PI / (4.0 * k_max);
        let n = (((hi - lo) / dx_max).ceil() as usize + 1).max(DEFAULT_NX);
        Self::new(lo, hi, n)
    }
}

/// |A(0)|² of the normalised Gaussian density, zero when the grid is not cut.
fn gaussian_density_at_zero(spec: &PacketSpec) -> f64 {
    if spec.k0 - spec.k_span * spec.sigma_k() > 0.0 {
        return 0.0;
    }
    let s = spec.sigma_k();
    let z = spec.k0 / s;
    (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s * (1.0 - spec.negative_tail()))
}

/// Free-packet width l0·√(1 + (ħt/(2m l0²))²).
pub fn spreading_width(spec: &PacketSpec, p: &ParticleSpec, t: f64) -> f64 {
    let s = p.kinetic_coeff() * t / (HBAR * spec.l0 * spec.l0);
    spec.l0 * (1.0 + s * s).sqrt()
}

/// Sampled packet and its channel diagnostics at one time.
///
/// When the grid contains the structure, the samples run over three pieces
/// (left of it, inside, right of it) and each edge position appears twice,
/// once with the value from either side: ψ_tr and ψ_ref jump at the left
/// edge by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketState {
    pub t: f64,
    pub grid: XGrid,
    pub x: Vec<f64>,
    pub psi_full: Vec<C64>,
    pub psi_tr: Vec<C64>,
    pub psi_ref: Vec<C64>,
    pub n_full: f64,
    pub n_tr: f64,
    pub n_ref: f64,
    pub cm_full: f64,
    pub cm_tr: f64,
    pub cm_ref: f64,
    /// Variance of |ψ_tr|² about cm_tr.
    pub spread_tr: f64,
    /// max |ψ_ref|² right of the structure, relative to max |ψ_full|².
    pub ref_beyond_structure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Inside,
    Right,
}

/// Sample positions with trapezoid weights per piece. Every piece end at a
/// structure edge gets the Euler–Maclaurin h²/12 correction, which needs
/// the density's derivative there.
struct Layout {
    x: Vec<f64>,
    side: Vec<Side>,
    weight: Vec<f64>,
    /// Steps of the (left, inside, right) pieces.
    steps: Option<(f64, f64, f64)>,
}

impl Layout {
    fn new(grid: &XGrid, extent: Option<(f64, f64)>) -> Self {
        let mut layout = Layout {
            x: Vec::new(),
            side: Vec::new(),
            weight: Vec::new(),
            steps: None,
        };
        let h = grid.step();
        match extent {
            Some((a, b)) if grid.lo < a && b < grid.hi => {
                let n_left = (((a - grid.lo) / h).round() as usize + 1).max(2);
                let n_inside = (((b - a) / h).ceil() as usize + 1).max(MIN_INSIDE);
                let n_right = (((grid.hi - b) / h).round() as usize + 1).max(2);
                let h_left = layout.piece(grid.lo, a, n_left, Side::Left);
                let h_inside = layout.piece(a, b, n_inside, Side::Inside);
                let h_right = layout.piece(b, grid.hi, n_right, Side::Right);
                layout.steps = Some((h_left, h_inside, h_right));
            }
            _ => {
                layout.piece(grid.lo, grid.hi, grid.n, Side::Left);
                for i in 0..layout.x.len() {
                    layout.side[i] = match extent {
                        None => Side::Left,
                        Some((a, _)) if layout.x[i] < a => Side::Left,
                        Some((_, b)) if layout.x[i] >= b => Side::Right,
                        Some(_) => Side::Inside,
                    };
                }
            }
        }
        layout
    }

    fn piece(&mut self, lo: f64, hi: f64, n: usize, side: Side) -> f64 {
        let h = (hi - lo) / (n - 1) as f64;
        for i in 0..n {
            self.x.push(if i + 1 == n { hi } else { lo + i as f64 * h });
            self.side.push(side);
            self.weight.push(if i == 0 || i + 1 == n { 0.5 * h } else { h });
        }
        h
    }
}

/// Density and its x-derivative at one edge sample.
#[derive(Debug, Clone, Copy, Default)]
struct EdgeSlope {
    rho: f64,
    drho: f64,
}

fn slope(psi: C64, dpsi: C64) -> EdgeSlope {
    EdgeSlope {
        rho: psi.norm_sqr(),
        drho: 2.0 * (psi.conj() * dpsi).re,
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    norm: f64,
    mean: f64,
    variance: f64,
}

/// Endpoint correction c·g′(x) for g = w·ρ.
#[derive(Debug, Clone, Copy)]
struct EdgeTerm {
    x: f64,
    coeff: f64,
    slope: EdgeSlope,
}

fn moments(layout: &Layout, psi: &[C64], edges: &[EdgeTerm]) -> Moments {
    let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    // ∫ g with g = w(x)·ρ; `dw` is w′.
    let integrate = |w: &dyn Fn(f64) -> f64, dw: &dyn Fn(f64) -> f64| -> f64 {
        let mut sum: f64 = rho
            .iter()
            .zip(&layout.x)
            .zip(&layout.weight)
            .map(|((r, &x), q)| q * r * w(x))
            .sum();
        for e in edges {
            sum += e.coeff * (dw(e.x) * e.slope.rho + w(e.x) * e.slope.drho);
        }
        sum
    };
    let norm = integrate(&|_| 1.0, &|_| 0.0);
    if norm == 0.0 {
        return Moments {
            norm,
            mean: f64::NAN,
            variance: f64::NAN,
        };
    }
    let mean = integrate(&|x| x, &|_| 1.0) / norm;
    let variance = integrate(&|x| (x - mean).powi(2), &|x| 2.0 * (x - mean)) / norm;
    Moments { norm, mean, variance }
}

#[derive(Debug, Clone)]
struct Node {
    k: f64,
    /// w A (2π)^{-1/2}
    coeff: C64,
    r: C64,
    t: C64,
    c_tr: C64,
    transmission: f64,
    channels: ChannelDecomposition,
}

/// Precomputed spectrum and scattering data for repeated snapshots.
#[derive(Debug, Clone)]
pub struct PacketEngine {
    spec: PacketSpec,
    spectrum: Spectrum,
    nodes: Vec<Node>,
    potential: PiecewisePotential,
    particle: ParticleSpec,
    exec: Execution,
    capture_tolerance: f64,
}

const RESEED: usize = 64;
/// Samples across the structure; it is usually far narrower than the grid step.
const MIN_INSIDE: usize = 33;

impl PacketEngine {
    /// The potential has to be mirror-symmetric; its background is the
    /// asymptotic level and enters E(k) = background + K k².
    pub fn new(spec: &PacketSpec, pot: &PiecewisePotential, p: &ParticleSpec, exec: Execution) -> Result<Self> {
        let spectrum = gaussian_spectrum(spec)?;
        let norm = (2.0 * std::f64::consts::PI).sqrt().recip();
        let items: Vec<usize> = (0..spectrum.k.len()).collect();
        let nodes = par::map_slice(&items, exec, |&i| -> Result<Node> {
            let k = spectrum.k[i];
            let channels = ChannelDecomposition::new(pot, p, k)?;
            let st = channels.state();
            Ok(Node {
                k,
                coeff: spectrum.amplitude[i] * (spectrum.weight[i] * norm),
                r: st.r_amp(),
                t: st.t_amp(),
                c_tr: channels.channels().c_tr,
                transmission: st.t_amp().norm_sqr(),
                channels,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: *spec,
            spectrum,
            nodes,
            potential: pot.clone(),
            particle: *p,
            exec,
            capture_tolerance: DEFAULT_CAPTURE_TOLERANCE,
        })
    }

    /// Norm a checked snapshot may lose at the grid ends.
    pub fn with_capture_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "capture tolerance must lie in (0, 1), got {tolerance}"
            )));
        }
        self.capture_tolerance = tolerance;
        Ok(self)
    }

    pub fn capture_tolerance(&self) -> f64 {
        self.capture_tolerance
    }

    pub fn spec(&self) -> &PacketSpec {
        &self.spec
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn potential(&self) -> &PiecewisePotential {
        &self.potential
    }

    /// (T̄, R̄): spectral averages of T and R.
    pub fn channel_weights(&self) -> (f64, f64) {
        let t_bar: f64 = self
            .nodes
            .iter()
            .zip(&self.spectrum.weight)
            .zip(&self.spectrum.amplitude)
            .map(|((n, w), a)| w * a.norm_sqr() * n.transmission)
            .sum();
        (t_bar, 1.0 - t_bar)
    }

    /// Spectrally weighted RMS of the per-k mismatch at the left edge
    /// between the continued transmitted wave and c_tr·e^{ika}.
    pub fn edge_mismatch(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.spectrum.weight)
            .zip(&self.spectrum.amplitude)
            .map(|((n, w), a)| w * a.norm_sqr() * n.channels.edge_mismatch().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Mean k of the incident packet and of each channel.
    pub fn channel_mean_k(&self) -> ChannelMeanK {
        let (mut inc, mut tr, mut refl, mut t_bar, mut r_bar) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((n, w), a) in self
            .nodes
            .iter()
            .zip(&self.spectrum.weight)
            .zip(&self.spectrum.amplitude)
        {
            let rho = w * a.norm_sqr();
            let reflection = n.r.norm_sqr();
            inc += rho * n.k;
            tr += rho * n.k * n.transmission;
            refl += rho * n.k * reflection;
            t_bar += rho * n.transmission;
            r_bar += rho * reflection;
        }
        ChannelMeanK {
            incident: inc,
            transmitted: (t_bar > 0.0).then(|| tr / t_bar),
            reflected: (r_bar > 0.0).then(|| refl / r_bar),
            t_bar,
            r_bar,
        }
    }

    /// Time-dependent node coefficients c_n e^{−iE_n t/ħ}.
    fn coefficients(&self, t: f64) -> Vec<C64> {
        let kc = self.particle.kinetic_coeff();
        let bg = self.potential.background();
        self.nodes
            .iter()
            .map(|n| n.coeff * C64::from_polar(1.0, -(bg + kc * n.k * n.k) * t / HBAR))
            .collect()
    }

    /// (ψ_full, ψ_tr) at every sample.
    fn synthesize(&self, coeff: &[C64], layout: &Layout) -> Vec<(C64, C64)> {
        let refl: Vec<C64> = coeff.iter().zip(&self.nodes).map(|(c, n)| c * n.r).collect();
        let tr_in: Vec<C64> = coeff.iter().zip(&self.nodes).map(|(c, n)| c * n.c_tr).collect();
        let trans: Vec<C64> = coeff.iter().zip(&self.nodes).map(|(c, n)| c * n.t).collect();
        let free = self.potential.is_empty();
        let k_first = self.spectrum.k[0];
        let dk = self.spectrum.step;
        let zero = C64::new(0.0, 0.0);
        let samples: Vec<(f64, Side)> = layout.x.iter().copied().zip(layout.side.iter().copied()).collect();
        par::map_slice(&samples, self.exec, |&(x, side)| {
            if side == Side::Inside {
                let v: C64 = coeff
                    .iter()
                    .zip(&self.nodes)
                    .map(|(c, n)| c * n.channels.state().value(x))
                    .sum();
                return (v, v);
            }
            let step = C64::from_polar(1.0, dk * x);
            let mut e = C64::from_polar(1.0, k_first * x);
            let (mut s_inc, mut s_ref, mut s_tr, mut s_t) = (zero, zero, zero, zero);
            for i in 0..coeff.len() {
                if i % RESEED == 0 {
                    e = C64::from_polar(1.0, self.nodes[i].k * x);
                }
                if side == Side::Left {
                    s_inc += coeff[i] * e;
                    s_ref += refl[i] * e.conj();
                    s_tr += tr_in[i] * e;
                } else {
                    s_t += trans[i] * e;
                }
                e *= step;
            }
            match side {
                _ if free => (s_inc, s_inc),
                Side::Left => (s_inc + s_ref, s_tr),
                _ => (s_t, s_t),
            }
        })
    }

    /// (full, tr, ref) slopes at the left edge from the left and the full
    /// slope at the right edge. ψ and ψ′ of the full state are continuous,
    /// so the left-side formulas give the full slope on both sides of a.
    fn edge_slopes(&self, coeff: &[C64], a: f64, b: f64) -> ([EdgeSlope; 3], EdgeSlope) {
        let zero = C64::new(0.0, 0.0);
        let (mut full, mut dfull, mut tr, mut dtr, mut right, mut dright) = (zero, zero, zero, zero, zero, zero);
        for (c, n) in coeff.iter().zip(&self.nodes) {
            let ik = C64::new(0.0, n.k);
            let ea = C64::from_polar(1.0, n.k * a);
            let eb = C64::from_polar(1.0, n.k * b);
            full += c * (ea + n.r * ea.conj());
            dfull += c * ik * (ea - n.r * ea.conj());
            tr += c * n.c_tr * ea;
            dtr += c * n.c_tr * ik * ea;
            right += c * n.t * eb;
            dright += c * n.t * ik * eb;
        }
        (
            [slope(full, dfull), slope(tr, dtr), slope(full - tr, dfull - dtr)],
            slope(right, dright),
        )
    }

    /// Snapshot on an explicit grid. No capture check.
    pub fn snapshot_on(&self, t: f64, grid: &XGrid) -> PacketState {
        let extent = self.potential.extent();
        let layout = Layout::new(grid, extent);
        let coeff = self.coefficients(t);
        let values = self.synthesize(&coeff, &layout);
        let mut psi_full = Vec::with_capacity(values.len());
        let mut psi_tr = Vec::with_capacity(values.len());
        let mut psi_ref = Vec::with_capacity(values.len());
        for ((full, tr), side) in values.into_iter().zip(&layout.side) {
            psi_full.push(full);
            psi_tr.push(tr);
            psi_ref.push(if *side == Side::Left {
                full - tr
            } else {
                C64::new(0.0, 0.0)
            });
        }
        let (mut e_full, mut e_tr, mut e_ref) = (Vec::new(), Vec::new(), Vec::new());
        if let (Some((hl, hi, hr)), Some((a, b))) = (layout.steps, extent) {
            let ([full_a, tr_a, ref_a], full_b) = self.edge_slopes(&coeff, a, b);
            let (cl, ci, cr) = (hl * hl / 12.0, hi * hi / 12.0, hr * hr / 12.0);
            let term = |x, coeff, slope| EdgeTerm { x, coeff, slope };
            e_full = vec![term(a, ci - cl, full_a), term(b, cr - ci, full_b)];
            e_tr = vec![term(a, -cl, tr_a), term(a, ci, full_a), term(b, cr - ci, full_b)];
            e_ref = vec![term(a, -cl, ref_a)];
        }
        let mf = moments(&layout, &psi_full, &e_full);
        let mt = moments(&layout, &psi_tr, &e_tr);
        let mr = moments(&layout, &psi_ref, &e_ref);
        let peak = psi_full.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let beyond = psi_ref
            .iter()
            .zip(&layout.side)
            .filter(|(_, s)| **s == Side::Right)
            .map(|(z, _)| z.norm_sqr())
            .fold(0.0, f64::max);
        PacketState {
            t,
            grid: *grid,
            x: layout.x,
            psi_full,
            psi_tr,
            psi_ref,
            n_full: mf.norm,
            n_tr: mt.norm,
            n_ref: mr.norm,
            cm_full: mf.mean,
            cm_tr: mt.mean,
            cm_ref: mr.mean,
            spread_tr: mt.variance,
            ref_beyond_structure: if peak > 0.0 { beyond / peak } else { 0.0 },
        }
    }

    /// ψ on a grid that lies entirely right of the structure, where only the
    /// transmitted channel lives.
    pub fn transmitted_on(&self, t: f64, grid: &XGrid) -> Result<Vec<C64>> {
        if matches!(self.potential.extent(), Some((_, b)) if grid.lo < b) {
            return Err(Error::InvalidParameter(format!(
                "grid starts at {} nm, inside or left of the structure",
                grid.lo
            )));
        }
        let layout = Layout::new(grid, self.potential.extent());
        let coeff = self.coefficients(t);
        Ok(self
            .synthesize(&coeff, &layout)
            .into_iter()
            .map(|(full, _)| full)
            .collect())
    }

    /// Snapshot on the automatic grid; fails when the grid loses more than
    /// the capture tolerance of the norm.
    pub fn snapshot(&self, t: f64) -> Result<PacketState> {
        let grid = XGrid::auto(&self.spec, &self.potential, &self.particle, t, self.capture_tolerance)?;
        self.snapshot_checked(t, &grid)
    }

    pub fn snapshot_checked(&self, t: f64, grid: &XGrid) -> Result<PacketState> {
        let state = self.snapshot_on(t, grid);
        if !(state.n_full >= 1.0 - self.capture_tolerance) {
            let width = grid.hi - grid.lo;
            return Err(Error::GridTooSmall {
                lo: grid.lo,
                hi: grid.hi,
                captured: state.n_full,
                suggested_lo: grid.lo - 0.5 * width,
                suggested_hi: grid.hi + 0.5 * width,
            });
        }
        Ok(state)
    }
}

/// Mean wavenumbers of the incident packet and of each channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelMeanK {
    pub incident: f64,
    /// `None` when T̄ = 0.
    pub transmitted: Option<f64>,
    /// `None` when R̄ = 0.
    pub reflected: Option<f64>,
    pub t_bar: f64,
    pub r_bar: f64,
}

pub fn evolve(spec: &PacketSpec, b: &BarrierSpec, p: &ParticleSpec, t: f64) -> Result<PacketState> {
    PacketEngine::new(spec, &b.potential(), p, Execution::default())?.snapshot(t)
}

/// x0 plus the transmission-weighted spectral mean of the closed-form x_start.
pub fn starting_point_packet(spec: &PacketSpec, b: &BarrierSpec, p: &ParticleSpec) -> Result<f64> {
    let spectrum = gaussian_spectrum(spec)?;
    let pot = b.potential();
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&k, &w), a) in spectrum.k.iter().zip(&spectrum.weight).zip(&spectrum.amplitude) {
        let t = crate::scattering::amplitudes(&pot, p, k)?.transmission;
        let rho = w * a.norm_sqr() * t;
        num += rho * timescales::x_start(b, k);
        den += rho;
    }
    if den == 0.0 {
        return Err(Error::Undefined("nothing is transmitted".into()));
    }
    Ok(spec.x0 + num / den)
}

pub fn channel_mean_k(spec: &PacketSpec, b: &BarrierSpec, p: &ParticleSpec) -> Result<ChannelMeanK> {
    Ok(PacketEngine::new(spec, &b.potential(), p, Execution::default())?.channel_mean_k())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub cm_tr: f64,
    pub cm_full: f64,
    pub n_ref: f64,
}

pub fn cm_trajectory(
    spec: &PacketSpec,
    b: &BarrierSpec,
    p: &ParticleSpec,
    times: &[f64],
) -> Result<Vec<TrajectoryPoint>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("snapshot times must be ascending".into()));
    }
    let engine = PacketEngine::new(spec, &b.potential(), p, Execution::default())?;
    times
        .iter()
        .map(|&t| {
            let s = engine.snapshot(t)?;
            Ok(TrajectoryPoint {
                t,
                cm_tr: s.cm_tr,
                cm_full: s.cm_full,
                n_ref: s.n_ref,
            })
        })
        .collect()
}
