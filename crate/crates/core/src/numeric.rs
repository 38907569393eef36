//! Small numerical kernels: Richardson-extrapolated derivatives, entire
//! trigonometric functions of a signed argument, and 1D search/extrapolation.

/// Default derivative step for a k-derivative at `k`.
pub fn default_step(k: f64) -> f64 {
    (1e-4 * k.abs()).max(1e-6)
}

/// Central difference with one Richardson step, O(h⁴).
///
/// Evaluates `f` at k ± h and k ± 2h.
pub fn ddk<F: Fn(f64) -> f64>(f: F, k: f64, h: f64) -> f64 {
    let d1 = f(k + h) - f(k - h);
    let d2 = f(k + 2.0 * h) - f(k - 2.0 * h);
    (8.0 * d1 - d2) / (12.0 * h)
}

const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 18;

/// cos(√z), continued to cosh(√−z) for z < 0.
pub fn cos_entire(z: f64) -> f64 {
    if z >= 0.0 {
        z.sqrt().cos()
    } else {
        (-z).sqrt().cosh()
    }
}

/// sin(√z)/√z, continued to sinh(√−z)/√−z for z < 0.
pub fn sinc_entire(z: f64) -> f64 {
    if z.abs() < SERIES_RADIUS {
        // Σ (−z)ⁿ/(2n+1)!
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..SERIES_TERMS {
            term *= -z / ((2 * n) as f64 * (2 * n + 1) as f64);
            sum += term;
        }
        sum
    } else if z > 0.0 {
        let s = z.sqrt();
        s.sin() / s
    } else {
        let s = (-z).sqrt();
        s.sinh() / s
    }
}

/// (1 − sinc_entire(z))/z.
pub fn tau_entire(z: f64) -> f64 {
    if z.abs() < SERIES_RADIUS {
        // Σ_{n≥1} (−1)^{n+1} z^{n−1}/(2n+1)!
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        for n in 2..SERIES_TERMS {
            term *= -z / ((2 * n) as f64 * (2 * n + 1) as f64);
            sum += term;
        }
        sum
    } else {
        (1.0 - sinc_entire(z)) / z
    }
}

/// (sinc_entire(z) − cos_entire(z))/z.
pub fn rho_entire(z: f64) -> f64 {
    if z.abs() < SERIES_RADIUS {
        // Σ_{n≥1} (−1)^{n+1} 2n z^{n−1}/(2n+1)!
        let mut fact_term = 1.0 / 6.0; // (−z)^{n−1}/(2n+1)!
        let mut sum = 2.0 * fact_term;
        for n in 2..SERIES_TERMS {
            fact_term *= -z / ((2 * n) as f64 * (2 * n + 1) as f64);
            sum += 2.0 * n as f64 * fact_term;
        }
        sum
    } else {
        (sinc_entire(z) - cos_entire(z)) / z
    }
}

/// Golden-section search for a minimum of a unimodal `f` on [lo, hi].
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Value at h = 0 of the interpolating polynomial through `(h_i, y_i)`
/// (Neville's scheme). With step ratios of two this is repeated Richardson
/// extrapolation.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    let h: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut p: Vec<f64> = points.iter().map(|p| p.1).collect();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            let denom = h[i] - h[i + m];
            if denom == 0.0 {
                return None;
            }
            p[i] = (h[i] * p[i + 1] - h[i + m] * p[i]) / denom;
        }
    }
    Some(p[0])
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid_uniform(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Standard normal upper tail P(Z > z).
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Removes 2π jumps from a sequence of principal-branch angles.
#[derive(Debug, Clone, Default)]
pub struct PhaseUnwrapper {
    last: Option<f64>,
    offset: f64,
}

impl PhaseUnwrapper {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, raw: f64) -> f64 {
        use std::f64::consts::{PI, TAU};
        if let Some(last) = self.last {
            let mut value = raw + self.offset;
            while value - last > PI {
                self.offset -= TAU;
                value -= TAU;
            }
            while value - last < -PI {
                self.offset += TAU;
                value += TAU;
            }
            self.last = Some(value);
            value
        } else {
            self.last = Some(raw);
            raw
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ddk_polynomial_is_exact() {
        let d = ddk(|k| k * k, 1.0, 1e-3);
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ddk_sine() {
        let d = ddk(f64::sin, 0.3, default_step(0.3));
        assert!((d - 0.3f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn ddk_is_fourth_order() {
        let f = |k: f64| (2.0 * k).exp();
        let exact = 2.0 * 2f64.exp();
        let e1 = (ddk(f, 1.0, 0.04) - exact).abs();
        let e2 = (ddk(f, 1.0, 0.02) - exact).abs();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn entire_functions_match_closed_forms() {
        for z in [-30.0, -2.0, -0.999, -0.3, -1e-6, 0.0, 1e-6, 0.4, 0.999, 2.0, 30.0] {
            let (c, s) = if z >= 0.0 {
                let w: f64 = f64::sqrt(z);
                (w.cos(), if w == 0.0 { 1.0 } else { w.sin() / w })
            } else {
                let w: f64 = f64::sqrt(-z);
                (w.cosh(), w.sinh() / w)
            };
            assert!((cos_entire(z) - c).abs() < 1e-14 * c.abs().max(1.0));
            assert!((sinc_entire(z) - s).abs() < 1e-14 * s.abs().max(1.0));
            if z.abs() > 1e-3 {
                let tau = (1.0 - s) / z;
                let rho = (s - c) / z;
                assert!((tau_entire(z) - tau).abs() < 1e-11 * tau.abs().max(1e-3), "tau at {z}");
                assert!((rho_entire(z) - rho).abs() < 1e-11 * rho.abs().max(1e-3), "rho at {z}");
            }
        }
        assert!((tau_entire(0.0) - 1.0 / 6.0).abs() < 1e-16);
        assert!((rho_entire(0.0) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn series_and_closed_forms_join_continuously() {
        for f in [sinc_entire, tau_entire, rho_entire] {
            for edge in [-1.0, 1.0] {
                let inside = f(edge * (1.0 - 1e-12));
                let outside = f(edge * (1.0 + 1e-12));
                assert!((inside - outside).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.exp() * x.cos(), 0.0, 2.0, 1e-13);
        let exact = 0.5 * (2f64.exp() * (2f64.cos() + 2f64.sin()) - 1.0);
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section_min(|x| (x - 0.7).powi(2), 0.0, 2.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-9);
    }

    #[test]
    fn neville_removes_linear_and_quadratic_terms() {
        let f = |h: f64| 3.0 + 2.0 * h - 5.0 * h * h;
        let pts: Vec<_> = [0.4, 0.2, 0.1].iter().map(|&h| (h, f(h))).collect();
        assert!((extrapolate_to_zero(&pts).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn unwrapper_removes_jumps() {
        let mut u = PhaseUnwrapper::new();
        let raw = [3.0, -3.1, -2.9, 3.1, 2.0];
        let out: Vec<f64> = raw.iter().map(|&r| u.push(r)).collect();
        for w in out.windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
    }

    #[test]
    fn normal_tail_values() {
        assert!((normal_upper_tail(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_upper_tail(3.0) - 1.349898031630094e-3).abs() < 1e-15);
    }
}
