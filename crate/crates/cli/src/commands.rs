//! The five commands. Each reads a validated [`RunConfig`] and returns the
//! paths it wrote.

use std::path::PathBuf;

use serde::Serialize;
use tunnel_core::larmor::{larmor_ladder, LarmorReport};
use tunnel_core::packet::{starting_point_packet, PacketEngine, PacketState, XGrid};
use tunnel_core::par::Execution;
use tunnel_core::scattering::amplitudes;
use tunnel_core::timescales::{longwave_limits, resonance_table, widths, LimitValue};
use tunnel_core::BarrierSpec;

use crate::config::RunConfig;
use crate::output::{json, number, write_atomic, Table};
use crate::CliError;

pub const SWEEP_HEADER: [&str; 6] = [
    "E_over_V0",
    "k",
    "D_phase_over_d",
    "D_dwell_over_d",
    "d_eff_over_d",
    "x_start_over_d",
];

pub const SNAPSHOT_HEADER: [&str; 6] = ["x", "re_full", "im_full", "abs2_full", "abs2_tr", "abs2_ref"];

pub const RESONANCE_HEADER: [&str; 6] = [
    "n",
    "k_r",
    "D_phase_over_d",
    "D_dwell_over_d",
    "d_eff_over_d",
    "x_start_over_d",
];

pub const LIMITS_HEADER: [&str; 5] = ["quantity", "branch", "kappa0_d", "value", "divergent"];

/// Largest admitted |D_phase − (d_eff − x_start)| relative to the scale of
/// the terms.
const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Closed-form widths on E = (i/n)·emax·E_ref, i = 1..n.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.particle()?;
    let b = cfg.barrier(&p)?;
    let s = &cfg.sweep;
    if s.points == 0 {
        return Err(CliError::Config("sweep needs at least one point".into()));
    }
    if !(s.emax > 0.0 && s.emax.is_finite()) {
        return Err(CliError::Config(format!("emax must be positive, got {}", s.emax)));
    }
    let e_ref = match s.reference_energy {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(CliError::Config(format!("reference_energy must be positive, got {e}"))),
        None if b.v0() != 0.0 => b.v0().abs(),
        None => return Err(CliError::Config("V0 = 0 needs sweep.reference_energy".into())),
    };
    let d = b.width();
    let mut table = Table::new(&SWEEP_HEADER);
    for i in 1..=s.points {
        let x = s.emax * i as f64 / s.points as f64;
        let k = p.wavenumber(x * e_ref)?;
        let w = widths(&b, k);
        let scale = d.max(w.d_phase.abs()).max(w.x_start.abs());
        let gap = (w.d_phase - (w.d_eff - w.x_start)).abs();
        if !(gap <= IDENTITY_TOLERANCE * scale) && w.d_phase.is_finite() {
            return Err(CliError::Numeric(format!(
                "width identity fails at E/E_ref = {x}: residual {gap:e} nm"
            )));
        }
        table.row(&[x, k, w.d_phase / d, w.d_dwell / d, w.d_eff / d, w.x_start / d])?;
    }
    Ok(vec![write_atomic(&cfg.output.dir.join("sweep.csv"), table.as_str())?])
}

#[derive(Debug, Serialize)]
struct SnapshotSummary {
    t: f64,
    file: String,
    grid: XGrid,
    #[serde(rename = "N_full")]
    n_full: f64,
    #[serde(rename = "N_tr")]
    n_tr: f64,
    #[serde(rename = "N_ref")]
    n_ref: f64,
    cm_full: f64,
    cm_tr: f64,
    cm_ref: f64,
    /// Variance of |ψ_tr|² about cm_tr, nm².
    var_tr: f64,
    ref_beyond_structure: f64,
}

#[derive(Debug, Serialize)]
struct PacketSummary {
    k0: f64,
    sigma_k: f64,
    t_bar: f64,
    r_bar: f64,
    edge_mismatch: f64,
    /// x0 plus the transmission-weighted mean of the closed-form x_start.
    starting_point_packet: f64,
    /// |cm_tr(0) − cm_full(0)|.
    starting_point_separation: f64,
    snapshots: Vec<SnapshotSummary>,
}

/// Largest |ψ_ref|², relative to the peak of |ψ_full|², tolerated right of
/// the structure.
const REF_LEAK_TOLERANCE: f64 = 1e-12;

fn snapshot_table(s: &PacketState) -> Result<Table, CliError> {
    let mut table = Table::new(&SNAPSHOT_HEADER);
    for i in 0..s.x.len() {
        let f = s.psi_full[i];
        table.row(&[
            s.x[i],
            f.re,
            f.im,
            f.norm_sqr(),
            s.psi_tr[i].norm_sqr(),
            s.psi_ref[i].norm_sqr(),
        ])?;
    }
    Ok(table)
}

fn check_snapshot(s: &PacketState) -> Result<(), CliError> {
    let peak = s.psi_full.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    for ((full, tr), re) in s.psi_full.iter().zip(&s.psi_tr).zip(&s.psi_ref) {
        if (full - tr - re).norm_sqr() > 1e-24 * peak {
            return Err(CliError::Numeric(format!(
                "psi_full != psi_tr + psi_ref at t = {}",
                s.t
            )));
        }
    }
    if !(s.ref_beyond_structure <= REF_LEAK_TOLERANCE) {
        return Err(CliError::Numeric(format!(
            "reflected channel leaks past the structure at t = {}: {:e}",
            s.t, s.ref_beyond_structure
        )));
    }
    if ![s.n_full, s.n_tr, s.n_ref, s.cm_full, s.cm_tr]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(CliError::Numeric(format!("non-finite moments at t = {}", s.t)));
    }
    Ok(())
}

/// Snapshot CSVs for every requested time plus `packet_summary.json`.
pub fn packet(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.particle()?;
    let b = cfg.barrier(&p)?;
    let (spec, c) = cfg.packet(&p)?;
    if c.snapshot_times.is_empty() {
        return Err(CliError::Config("no snapshot times".into()));
    }
    let engine = PacketEngine::new(&spec, &b.potential(), &p, Execution::default())?
        .with_capture_tolerance(c.capture_tolerance)?;
    let mut written = Vec::new();
    let mut snapshots = Vec::new();
    let mut separation = None;
    for &t in &c.snapshot_times {
        let s = engine.snapshot(t)?;
        check_snapshot(&s)?;
        if t == 0.0 {
            separation = Some((s.cm_tr - s.cm_full).abs());
        }
        let file = format!("snapshot_t{t}.csv");
        written.push(write_atomic(&cfg.output.dir.join(&file), snapshot_table(&s)?.as_str())?);
        snapshots.push(SnapshotSummary {
            t,
            file,
            grid: s.grid,
            n_full: s.n_full,
            n_tr: s.n_tr,
            n_ref: s.n_ref,
            cm_full: s.cm_full,
            cm_tr: s.cm_tr,
            cm_ref: s.cm_ref,
            var_tr: s.spread_tr,
            ref_beyond_structure: s.ref_beyond_structure,
        });
    }
    let separation = match separation {
        Some(x) => x,
        None => {
            let s = engine.snapshot(0.0)?;
            (s.cm_tr - s.cm_full).abs()
        }
    };
    let mean_k = engine.channel_mean_k();
    let summary = PacketSummary {
        k0: spec.k0,
        sigma_k: spec.sigma_k(),
        t_bar: mean_k.t_bar,
        r_bar: mean_k.r_bar,
        edge_mismatch: engine.edge_mismatch(),
        starting_point_packet: starting_point_packet(&spec, &b, &p)?,
        starting_point_separation: separation,
        snapshots,
    };
    written.push(write_atomic(
        &cfg.output.dir.join("packet_summary.json"),
        &json(&summary)?,
    )?);
    Ok(written)
}

#[derive(Debug, Serialize)]
struct LarmorOutput<'a> {
    #[serde(flatten)]
    report: &'a LarmorReport,
    relative_error: f64,
    /// |standard_prediction − extrapolated|, to set against |closed_form_target|.
    standard_gap: f64,
}

/// Spin coherence below this signals lost norm in the detection window.
const MIN_COHERENCE: f64 = 1.0 - 1e-6;

/// Larmor-clock ladder, written to `larmor_report.json`.
pub fn larmor(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.particle()?;
    let b = cfg.barrier(&p)?;
    let (spec, _) = cfg.packet(&p)?;
    let (field, ladder) = cfg.field()?;
    let report = larmor_ladder(&spec, &b, &field, &p, ladder, Execution::default())?;
    if let Some(r) = report.rungs.iter().find(|r| !(r.coherence >= MIN_COHERENCE)) {
        return Err(CliError::Numeric(format!(
            "spin coherence {} at omega_L = {}",
            r.coherence, r.omega_l
        )));
    }
    if !report.extrapolated.is_finite() {
        return Err(CliError::Numeric("extrapolated estimate is not finite".into()));
    }
    let out = LarmorOutput {
        report: &report,
        relative_error: report.relative_error(),
        standard_gap: (report.standard_prediction - report.extrapolated).abs(),
    };
    Ok(vec![write_atomic(
        &cfg.output.dir.join("larmor_report.json"),
        &json(&out)?,
    )?])
}

/// Largest |T − 1| accepted at a tabulated resonance.
const RESONANCE_T_TOLERANCE: f64 = 1e-9;

/// Resonance table for n = 1..n_max; omitted resonances go to
/// `resonance_omitted.csv`.
pub fn resonance(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.particle()?;
    let b = cfg.barrier(&p)?;
    if b.is_free() {
        return Err(CliError::Config("resonances need V0 != 0".into()));
    }
    let table = resonance_table(&b, cfg.resonance.n_max);
    let pot = b.potential();
    let mut csv = Table::new(&RESONANCE_HEADER);
    for r in &table.records {
        let t = amplitudes(&pot, &p, r.k_r)?.transmission;
        if !((t - 1.0).abs() <= RESONANCE_T_TOLERANCE) {
            return Err(CliError::Numeric(format!("T = {t} at resonance n = {}", r.n)));
        }
        let mut cells = vec![r.n.to_string()];
        for v in [
            r.k_r,
            r.d_phase_over_d,
            r.d_dwell_over_d,
            r.d_eff_over_d,
            r.x_start_over_d,
        ] {
            cells.push(number(v)?);
        }
        csv.raw(&cells)?;
    }
    let mut written = vec![write_atomic(&cfg.output.dir.join("resonance.csv"), csv.as_str())?];
    if !table.omitted.is_empty() {
        let mut omitted = Table::new(&["n", "reason"]);
        for o in &table.omitted {
            eprintln!("resonance n = {} omitted: {}", o.n, o.reason);
            omitted.raw(&[o.n.to_string(), format!("\"{}\"", o.reason)])?;
        }
        written.push(write_atomic(
            &cfg.output.dir.join("resonance_omitted.csv"),
            omitted.as_str(),
        )?);
    }
    Ok(written)
}

/// k → 0 ratios, one row per quantity.
pub fn limits(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let p = cfg.particle()?;
    let b = cfg.barrier(&p)?;
    let lim = longwave_limits(&b)?;
    let branch = branch_label(&b);
    let mut csv = Table::new(&LIMITS_HEADER);
    let rows: [(&str, LimitValue); 4] = [
        ("D_phase_over_d", lim.d_phase_over_d),
        ("D_dwell_over_d", lim.d_dwell_over_d),
        ("d_eff_over_d", lim.d_eff_over_d),
        ("x_start_over_d", lim.x_start_over_d),
    ];
    for (name, v) in rows {
        csv.raw(&[
            name.to_string(),
            branch.to_string(),
            number(lim.kappa0_d)?,
            number(v.value)?,
            v.divergent.to_string(),
        ])?;
    }
    Ok(vec![write_atomic(&cfg.output.dir.join("limits.csv"), csv.as_str())?])
}

fn branch_label(b: &BarrierSpec) -> &'static str {
    if b.beta() > 0.0 {
        "barrier"
    } else {
        "well"
    }
}
