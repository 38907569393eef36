//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use tunnel_core::decomposition::{x_start_from_gamma, x_start_magnitude_from_reflection};
use tunnel_core::larmor::{forward_readout, invert_readout};
use tunnel_core::numeric::{adaptive_simpson, ddk, default_step};
use tunnel_core::scattering::{amplitudes, StationaryState};
use tunnel_core::timescales::{
    d_dwell, d_eff, d_phase, lorentz_width, resonance_table, resonance_wavenumber, scaling_limit, widths, x_start,
};
use tunnel_core::{BarrierSpec, ParticleSpec};

struct Outcome {
    checks: Vec<(String, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn runtime(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(
            format!("runtime {:.2} s < {} s", took.as_secs_f64(), limit.as_secs()),
            took < limit,
        );
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn narrow(v0: f64) -> (ParticleSpec, BarrierSpec) {
    let p = ParticleSpec::gaas();
    (p, BarrierSpec::new(v0, 0.5, 0.0, &p).unwrap())
}

/// 200 wavenumbers with E/|V0| on (0, 3].
fn energy_grid(p: &ParticleSpec, b: &BarrierSpec) -> Vec<f64> {
    (1..=200)
        .map(|i| p.wavenumber(3.0 * i as f64 / 200.0 * b.v0().abs()).unwrap())
        .collect()
}

fn strength(kappa0_d: f64, beta: f64) -> BarrierSpec {
    let p = ParticleSpec::gaas();
    BarrierSpec::from_kappa0(kappa0_d / 0.5, 0.5, beta, 0.0, &p).unwrap()
}

fn width_identity() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    for v0 in [0.25, -0.25] {
        let (_, b) = narrow(v0);
        let mut worst: f64 = 0.0;
        // both sides of E = |V0| for the barrier
        for i in 1..=1000 {
            let k = 3.0 * b.kappa0() * i as f64 / 1000.0;
            worst = worst.max((d_phase(&b, k) - (d_eff(&b, k) - x_start(&b, k))).abs());
        }
        o.check(
            format!("V0 = {v0}: max residual {:.2e} d <= 1e-10 d", worst / b.width()),
            worst <= 1e-10 * b.width(),
        );
    }
    o.runtime(start, Duration::from_secs(1));
    o
}

fn dwell_oracle() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    for v0 in [0.25, -0.25] {
        let (p, b) = narrow(v0);
        let pot = b.potential();
        let mut worst: f64 = 0.0;
        for k in energy_grid(&p, &b) {
            let st = StationaryState::new(&pot, &p, k).unwrap();
            let integral = adaptive_simpson(&|x: f64| st.value(x).norm_sqr(), b.left(), b.right(), 1e-13);
            worst = worst.max(rel(d_dwell(&b, k), integral));
        }
        o.check(
            format!("V0 = {v0}: max relative error {worst:.2e} <= 1e-6"),
            worst <= 1e-6,
        );
    }
    o.runtime(start, Duration::from_secs(10));
    o
}

fn phase_oracle() -> Outcome {
    let mut o = Outcome::new();
    for v0 in [0.25, -0.25] {
        let (p, b) = narrow(v0);
        let pot = b.potential();
        let mut worst: f64 = 0.0;
        for k in energy_grid(&p, &b) {
            let t0 = amplitudes(&pot, &p, k).unwrap().t_amp;
            let h = default_step(k).min(0.25 * k);
            let slope = ddk(|kk| (amplitudes(&pot, &p, kk).unwrap().t_amp * t0.conj()).arg(), k, h);
            worst = worst.max(rel(d_phase(&b, k), slope + b.width()));
        }
        o.check(
            format!("V0 = {v0}: max relative error {worst:.2e} <= 1e-6"),
            worst <= 1e-6,
        );
    }
    o
}

fn starting_point_oracle() -> Outcome {
    let mut o = Outcome::new();
    for v0 in [0.25, -0.25] {
        let (p, b) = narrow(v0);
        let mut worst: f64 = 0.0;
        let mut used = 0;
        for k in energy_grid(&p, &b) {
            let s = amplitudes(&b.potential(), &p, k).unwrap();
            if !(s.transmission > 0.0 && s.transmission < 1.0) {
                continue;
            }
            used += 1;
            let g = x_start_from_gamma(&b, &p, k).unwrap().abs();
            let r = x_start_magnitude_from_reflection(&b, &p, k).unwrap();
            let c = x_start(&b, k).abs();
            worst = worst.max(rel(g, c)).max(rel(r, c)).max(rel(g, r));
        }
        o.check(
            format!("V0 = {v0}: {used} points, max pairwise error {worst:.2e} <= 1e-6"),
            worst <= 1e-6,
        );
    }
    o
}

fn longwave() -> Outcome {
    let mut o = Outcome::new();
    let k = 1e-6;
    for beta in [1.0, -1.0] {
        for x in [0.5, 1.0, 2.0] {
            let b = strength(x, beta);
            let d = b.width();
            let w = widths(&b, k);
            let (phase, eff, start) = if beta > 0.0 {
                (2.0 / (x * x.tanh()), 2.0 / x * (0.5 * x).tanh(), -2.0 / (x * x.sinh()))
            } else {
                (-2.0 / (x * x.tan()), 2.0 / x * (0.5 * x).tan(), 2.0 / (x * x.sin()))
            };
            let worst = rel(w.d_phase / d, phase)
                .max(rel(w.d_eff / d, eff))
                .max(rel(w.x_start / d, start));
            let label = if beta > 0.0 { "barrier" } else { "well" };
            o.check(
                format!(
                    "{label} kappa0 d = {x}: ratio error {worst:.1e}, D_dwell/d {:.1e}",
                    w.d_dwell / d
                ),
                worst <= 1e-4 && (w.d_dwell / d).abs() <= 1e-4,
            );
        }
        let b = strength(1.0, beta);
        let exponent = (d_dwell(&b, 1e-5) / d_dwell(&b, 1e-6)).ln() / 10f64.ln();
        o.check(
            format!("beta = {beta}: D_dwell exponent {exponent:.4}"),
            (exponent - 2.0).abs() <= 0.05,
        );
    }
    o
}

fn weak_potential() -> Outcome {
    let mut o = Outcome::new();
    let b = strength(1e-4, 1.0);
    let d = b.width();
    let k_hi = 10.0 * b.kappa0();
    let worst = (0..=2000)
        .map(|i| 1e-4 * (k_hi / 1e-4).powf(i as f64 / 2000.0))
        .map(|k| (d_eff(&b, k) / d - 1.0).abs())
        .fold(0.0, f64::max);
    o.check(format!("max |d_eff/d - 1| = {worst:.2e} <= 1e-6"), worst <= 1e-6);
    let phase = d_phase(&b, 1e-6) / d;
    o.check(format!("D_phase/d at k = 1e-6 is {phase:.3e} > 1e3"), phase > 1e3);
    o
}

fn scaling() -> Outcome {
    let mut o = Outcome::new();
    let p = ParticleSpec::gaas();
    for beta in [1.0, -1.0] {
        let mut gaps = Vec::new();
        let mut eff: f64 = 0.0;
        let mut start: f64 = 0.0;
        for d in [1e-3, 1e-4, 1e-5] {
            let s = scaling_limit(1.0, 1.0, d, beta, &p).unwrap();
            gaps.push((s.transmission - s.target_transmission).abs());
            eff = eff.max((s.d_eff_over_d - 1.0).abs());
            start = start.max(rel(s.x_start, -s.d_phase_over_d * d));
        }
        o.check(
            format!(
                "beta = {beta}: |T - T*| = {:.1e} -> {:.1e} -> {:.1e} decreasing, last <= 1e-6",
                gaps[0], gaps[1], gaps[2]
            ),
            gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] <= 1e-6,
        );
        o.check(
            format!("beta = {beta}: max |d_eff/d - 1| = {eff:.1e} <= 1e-3"),
            eff <= 1e-3,
        );
        o.check(
            format!("beta = {beta}: x_start vs -D_phase {start:.1e} <= 1e-3"),
            start <= 1e-3,
        );
    }
    o
}

fn resonances() -> Outcome {
    let mut o = Outcome::new();
    let p = ParticleSpec::gaas();
    let b = strength(2.0, 1.0);
    let d = b.width();
    let table = resonance_table(&b, 4);
    o.check(
        format!("{} resonances tabulated", table.records.len()),
        table.records.len() == 4,
    );
    for r in &table.records {
        let w = widths(&b, r.k_r);
        let gap = [
            w.d_phase / d - r.d_phase_over_d,
            w.d_dwell / d - r.d_dwell_over_d,
            w.d_eff / d - r.d_eff_over_d,
            w.x_start / d - r.x_start_over_d,
        ]
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()));
        o.check(format!("n = {}: table vs widths {gap:.1e} <= 1e-9", r.n), gap <= 1e-9);
        if r.n % 2 == 1 {
            let off = (w.d_eff / d - 1.0).abs();
            o.check(format!("n = {}: |d_eff/d - 1| = {off:.1e} <= 1e-12", r.n), off <= 1e-12);
        }
        let k_r = resonance_wavenumber(&b, r.n).unwrap();
        let a0 = lorentz_width(&b, &p, r.n).unwrap();
        let target = x_start(&b, k_r).abs();
        o.check(
            format!("n = {}: Lorentz a0 vs |x_start| {:.1e} <= 1e-3", r.n, rel(a0, target)),
            rel(a0, target) <= 1e-3,
        );
    }
    o
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn tunneltime(args: &[&str], config: &str, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_tunneltime"))
        .args(args)
        .arg("--config")
        .arg(configs().join(config))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{config}: {}", String::from_utf8_lossy(&status.stderr).trim()))
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing"))
}

fn packet_scenario() -> Outcome {
    let mut o = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    if let Err(e) = tunneltime(&["packet"], "deep_well_packet.toml", dir.path()) {
        o.check(e, false);
        return o;
    }
    o.runtime(start, Duration::from_secs(120));
    let summary = read_json(&dir.path().join("packet_summary.json"));
    let snaps = summary["snapshots"].as_array().unwrap();
    let at = |t: f64| snaps.iter().find(|s| num(s, "t") == t).unwrap();

    let n_ref = num(at(0.0), "N_ref");
    o.check(
        format!("N_ref(0) = {n_ref:.4e} within 20% of 6.5e-3"),
        (n_ref - 6.5e-3).abs() <= 0.2 * 6.5e-3,
    );

    let worst_sum = snaps
        .iter()
        .map(|s| (num(s, "N_tr") + num(s, "N_ref") - 1.0).abs())
        .fold(0.0, f64::max);
    o.check(
        format!("max |N_tr + N_ref - 1| = {worst_sum:.2e} <= 1e-8"),
        worst_sum <= 1e-8,
    );

    let b = 70.0 + 1.08e-5;
    let mut leak: f64 = 0.0;
    for s in snaps {
        let text = fs::read_to_string(dir.path().join(s["file"].as_str().unwrap())).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        let peak = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
        let beyond = rows.iter().filter(|r| r[0] > b).map(|r| r[5]).fold(0.0, f64::max);
        leak = leak.max(beyond / peak);
    }
    o.check(
        format!("max |psi_ref|^2 right of the well {leak:.1e} <= 1e-12 of the peak"),
        leak <= 1e-12,
    );

    let sep = num(&summary, "starting_point_separation");
    o.check(
        format!("|cm_tr(0) - cm_full(0)| = {sep:.3} nm in [0.3, 3]"),
        (0.3..=3.0).contains(&sep),
    );

    let (v29, v38) = (num(at(29.0), "var_tr"), num(at(38.0), "var_tr"));
    let drift = (v38 - v29).abs() / v29;
    o.check(
        format!(
            "|psi_tr|^2 second-moment drift over [29, 38] ps = {:.1}% < 10%",
            100.0 * drift
        ),
        drift < 0.1,
    );
    o
}

fn larmor_clock() -> Outcome {
    let mut o = Outcome::new();
    let p = ParticleSpec::gaas();
    let mut worst: f64 = 0.0;
    for xs in [-3.0, -0.4865, 0.0, 0.25, 12.0] {
        for omega in [0.02, 0.01, 0.005] {
            let (sx, sy) = forward_readout(xs, 20000.0, 20000.0, 10000.0, 0.47, omega, &p, 0.5);
            let back = invert_readout(sx, sy, 20000.0, 20000.0, 10000.0, 0.47, omega, &p).unwrap();
            worst = worst.max((back - xs).abs());
        }
    }
    o.check(
        format!("forward/inverse roundtrip error {worst:.1e} nm <= 1e-10"),
        worst <= 1e-10,
    );

    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    if let Err(e) = tunneltime(&["larmor"], "larmor.toml", dir.path()) {
        o.check(e, false);
        return o;
    }
    o.runtime(start, Duration::from_secs(120));
    let r = read_json(&dir.path().join("larmor_report.json"));
    let (est, target) = (num(&r, "extrapolated"), num(&r, "closed_form_target"));
    let err = rel(est, target);
    o.check(
        format!(
            "extrapolated {est:.5} nm vs closed-form {target:.5} nm: {:.1}% <= 5%",
            100.0 * err
        ),
        err <= 0.05,
    );
    let standard = num(&r, "standard_prediction");
    o.check(format!("standard_prediction = {standard}"), standard == 0.0);
    let gap = (standard - est).abs();
    let off = rel(gap, target.abs());
    o.check(
        format!(
            "|standard - estimate| = {gap:.5} nm vs |x_start| = {:.5} nm: {:.1}% <= 5%",
            target.abs(),
            100.0 * off
        ),
        off <= 0.05,
    );
    o
}

fn run_all(out: &Path) -> Result<(), String> {
    tunneltime(&["sweep"], "narrow_barrier.toml", &out.join("sweep"))?;
    tunneltime(&["sweep"], "narrow_well.toml", &out.join("sweep_well"))?;
    tunneltime(&["resonance"], "deep_well_resonance.toml", &out.join("resonance"))?;
    tunneltime(&["limits"], "well_limits.toml", &out.join("limits"))?;
    tunneltime(&["packet"], "deep_well_packet.toml", &out.join("packet"))?;
    tunneltime(&["larmor"], "larmor.toml", &out.join("larmor"))
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let mut o = Outcome::new();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        if let Err(e) = run_all(dir.path()) {
            o.check(e, false);
            return o;
        }
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    let names = |v: &[PathBuf], root: &Path| -> Vec<PathBuf> {
        v.iter().map(|p| p.strip_prefix(root).unwrap().to_path_buf()).collect()
    };
    o.check(
        format!("{} files in both runs", fa.len()),
        names(&fa, a.path()) == names(&fb, b.path()),
    );
    let differing: Vec<String> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| fs::read(x).unwrap() != fs::read(y).unwrap())
        .map(|(x, _)| x.strip_prefix(a.path()).unwrap().display().to_string())
        .collect();
    o.check(
        format!("byte-identical outputs (differing: {differing:?})"),
        differing.is_empty(),
    );
    o
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("width identity", width_identity),
        ("dwell oracle", dwell_oracle),
        ("phase oracle", phase_oracle),
        ("starting-point oracle", starting_point_oracle),
        ("long-wave limits", longwave),
        ("weak-potential touchstone", weak_potential),
        ("scaling limit", scaling),
        ("resonance suite", resonances),
        ("deep-well packet scenario", packet_scenario),
        ("Larmor clock", larmor_clock),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let verdict = if o.passed() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}  {name}", i + 1);
        for (what, ok) in &o.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAIL" });
        }
        if !o.passed() {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
