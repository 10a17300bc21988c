//! The five subcommands. Each writes its table plus the resolved
//! configuration into the output directory.

use crate::config::{snapshot_time, Scenario};
use crate::error::CliResult;
use crate::output::{ensure_dir, write_file, Cell, Table};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use wavepacket_core::cache::build_default_cache;
use wavepacket_core::classical::{default_step, integrate_rk4_at, FieldModel};
use wavepacket_core::oracle::{
    classical_comparison, normalization_check, order_scaling_check, residual_samples, scaling_ratio,
    schrodinger_residual, shifted_halton_4d, superposition_check, Gate, ScalingSetup, VerificationReport,
    SCALING_GATE,
};
use wavepacket_core::packet::{density_peak, maximum_position, snapshot, PacketFrame};
use wavepacket_core::pulse::{check_kz, Pulse};

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
/// Superposition mismatch gate.
pub const SUPERPOSITION_TOL: f64 = 1e-8;
/// Below this mismatch the quadrature is at roundoff and doubling cannot help.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;
pub const MASS_RANGE: (f64, f64) = (0.995, 1.0);
pub const MASS_CONVERGENCE: f64 = 1e-3;
/// Final velocity bound in units of R²c.
pub const MOMENTUM_TOL: f64 = 0.02;

fn prepare(sc: &Scenario, out: &Path) -> CliResult<()> {
    ensure_dir(out)?;
    write_file(&out.join(RESOLVED_CONFIG), &sc.resolved_toml()?)
}

fn rk4_step(sc: &Scenario) -> f64 {
    sc.config.verify.rk4_dt.unwrap_or_else(|| default_step(&sc.pulse))
}

/// Packet maximum and RK4 trajectory at the configured sample times.
pub fn cmd_trajectory(sc: &Scenario, out: &Path) -> CliResult<PathBuf> {
    prepare(sc, out)?;
    let times = sc.sample_times();
    let init = sc.spec.classical_init();
    let rk4 = integrate_rk4_at(&init, &times, rk4_step(sc), &sc.pulse, FieldModel::PlaneWave)?;
    let k = sc.pulse.k();
    let mut table = Table::new(&[
        "t [a.u.]",
        "x_max [a.u.]",
        "y_max [a.u.]",
        "z_max [a.u.]",
        "x_rk4 [a.u.]",
        "y_rk4 [a.u.]",
        "z_rk4 [a.u.]",
        "discrepancy [a.u.]",
    ]);
    let mut kz_max: f64 = 0.0;
    for (&t, state) in times.iter().zip(&rk4) {
        let m = maximum_position(t, &sc.spec, &sc.cache);
        kz_max = kz_max.max((k * m[2]).abs());
        let d = ((m[0] - state.x[0]).powi(2) + (m[1] - state.x[1]).powi(2) + (m[2] - state.x[2]).powi(2)).sqrt();
        table.push_nums(&[t, m[0], m[1], m[2], state.x[0], state.x[1], state.x[2], d]);
    }
    check_kz(kz_max)?;
    table.write(out, "trajectory", sc.config.output.format)
}

/// Maximum, principal angle and widths at the named snapshot times.
pub fn cmd_snapshots(sc: &Scenario, out: &Path) -> CliResult<PathBuf> {
    prepare(sc, out)?;
    let mut table = Table::new(&[
        "t [a.u.]",
        "label",
        "x_max [a.u.]",
        "z_max [a.u.]",
        "theta [rad]",
        "width_X [a.u.]",
        "width_Z [a.u.]",
        "width_y [a.u.]",
        "ratio",
    ]);
    for label in &sc.config.times.named_snapshots {
        let t = snapshot_time(label, &sc.pulse)?;
        let s = snapshot(t, &sc.spec, &sc.cache)?;
        table.push(vec![
            Cell::Num(t),
            Cell::Text(label.clone()),
            Cell::Num(s.x_max[0]),
            Cell::Num(s.x_max[2]),
            Cell::Num(s.theta),
            Cell::Num(s.width_x),
            Cell::Num(s.width_z),
            Cell::Num(s.width_y),
            Cell::Num(s.ratio),
        ]);
    }
    table.write(out, "snapshots", sc.config.output.format)
}

/// Density on an `n x n` slice centered on the density peak, in row-major
/// order (first in-plane axis outer).
pub fn cmd_density(sc: &Scenario, t: f64, out: &Path) -> CliResult<PathBuf> {
    prepare(sc, out)?;
    let grid = &sc.config.grid;
    let peak = density_peak(t, &sc.spec, &sc.cache);
    let max = maximum_position(t, &sc.spec, &sc.cache);
    let k = sc.pulse.k();
    check_kz(k * (peak[2].abs() + 0.5 * grid.extent))?;
    let (a, b) = grid.plane.axes();
    let names = ["x", "y", "z"];
    let n = grid.n;
    let step = grid.extent / (n - 1) as f64;
    let coord = |axis: usize, i: usize| peak[axis] - 0.5 * grid.extent + i as f64 * step;
    let frame = PacketFrame::new(t, &sc.spec, &sc.cache);
    let rows: Vec<Vec<[f64; 3]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut x = peak;
                    x[a] = coord(a, i);
                    x[b] = coord(b, j);
                    [x[a], x[b], frame.density(x)]
                })
                .collect()
        })
        .collect();
    let col_a = format!("{} [a.u.]", names[a]);
    let col_b = format!("{} [a.u.]", names[b]);
    let mut table = Table::new(&[&col_a, &col_b, "density [a.u.^-3]"]);
    table.meta("t [a.u.]", t);
    table.meta("plane", grid.plane.name());
    table.meta("extent [a.u.]", grid.extent);
    table.meta("n", n as f64);
    for (i, name) in names.iter().enumerate() {
        table.meta(&format!("peak_{name} [a.u.]"), peak[i]);
    }
    for (i, name) in names.iter().enumerate() {
        table.meta(&format!("max_{name} [a.u.]"), max[i]);
    }
    for row in rows {
        for v in row {
            table.push_nums(&v);
        }
    }
    table.write(out, "density", sc.config.output.format)
}

/// Vector potential, its derivative and the cumulative integrals.
pub fn cmd_pulse(sc: &Scenario, out: &Path) -> CliResult<PathBuf> {
    prepare(sc, out)?;
    let p = &sc.pulse;
    let c2 = p.c * p.c;
    let mut table = Table::new(&[
        "t [a.u.]",
        "phi [rad]",
        "A_over_c2",
        "A_prime_over_c2",
        "angle_deviation [rad]",
        "int_A [a.u.]",
        "int_A2 [a.u.]",
    ]);
    for t in sc.sample_times() {
        let a = p.a_at(t) / c2;
        let ints = sc.cache.integrals(t);
        table.push_nums(&[t, p.omega * t, a, p.a_prime_at(t) / c2, a / 4.0, ints.int_a, ints.int_a2]);
    }
    table.write(out, "pulse", sc.config.output.format)
}

/// Runs every oracle gate. Failures are recorded in the report, not
/// returned as errors.
pub fn run_verification(sc: &Scenario) -> CliResult<VerificationReport> {
    let v = &sc.config.verify;
    let mut gates = Vec::new();
    let (lo, hi) = SCALING_GATE;
    let loose = format!("in [{lo}, {hi}]");

    match superposition_check(&sc.spec, &sc.cache, v.superposition_samples, v.n_quad, v.p_span_widths, sc.seed) {
        Ok(s) => {
            gates.push(Gate::new(
                "superposition_vs_closed_form",
                s.max_rel_error,
                "<= 1e-8",
                s.max_rel_error <= SUPERPOSITION_TOL,
                format!("samples={} n_quad={}", s.samples, s.n_quad),
            ));
            let improved = s.max_rel_error_doubled < s.max_rel_error || s.max_rel_error < ROUNDOFF_FLOOR;
            gates.push(Gate::new(
                "superposition_doubling",
                s.max_rel_error_doubled,
                "< error at n_quad",
                improved,
                format!("n_quad={}", 2 * s.n_quad),
            ));
        }
        Err(e) => {
            gates.push(Gate::failed("superposition_vs_closed_form", "<= 1e-8", &e));
            gates.push(Gate::failed("superposition_doubling", "< error at n_quad", &e));
        }
    }

    let r = sc.pulse.amplitude;
    let unit = shifted_halton_4d(v.residual_samples, sc.seed);
    let res_pulse = sc.pulse.with_amplitude(r * v.residual_scale);
    let t_end = res_pulse.support_end();
    let k = res_pulse.k();
    let samples = residual_samples(&unit, v.kz_bound, v.xy_bound, k, t_end, v.h_t);
    let half_kz = residual_samples(&unit, 0.5 * v.kz_bound, v.xy_bound, k, t_end, v.h_t);
    let kz_gate = build_default_cache(Arc::new(res_pulse), t_end)
        .and_then(|cache| {
            let full = schrodinger_residual(v.residual_momentum, &samples, v.h_x, v.h_t, &cache)?;
            let half = schrodinger_residual(v.residual_momentum, &half_kz, v.h_x, v.h_t, &cache)?;
            Ok((full, half))
        });
    match kz_gate {
        Ok((full, half)) => {
            let ratio = scaling_ratio(full.residual_norm, half.residual_norm);
            gates.push(Gate::new(
                "residual_kz_halving",
                ratio.unwrap_or(0.0),
                &loose,
                ratio.is_none_or(|q| (lo..=hi).contains(&q)),
                format!(
                    "residual={:.16e} budget={:.16e} amplitude={:.16e}",
                    full.residual_norm,
                    full.budget,
                    r * v.residual_scale
                ),
            ));
        }
        Err(e) => gates.push(Gate::failed("residual_kz_halving", &loose, &e)),
    }

    let init = sc.spec.classical_init();
    let dt = rk4_step(sc);
    if r > 0.0 {
        let setup = ScalingSetup {
            init,
            dt,
            residual_momentum: v.residual_momentum,
            residual_scale: v.residual_scale,
            samples,
            h_x: v.h_x,
            h_t: v.h_t,
        };
        match order_scaling_check(&[r, 0.5 * r], &sc.pulse, &setup) {
            Ok(rows) => {
                let (a, b) = (rows[0], rows[1]);
                gates.push(Gate::new(
                    "classical_order_scaling",
                    scaling_ratio(a.discrepancy, b.discrepancy).unwrap_or(0.0),
                    &loose,
                    true,
                    format!("discrepancy/drift={:.16e}", a.discrepancy),
                ));
                gates.push(Gate::new(
                    "residual_amplitude_halving",
                    scaling_ratio(a.residual, b.residual).unwrap_or(0.0),
                    &loose,
                    true,
                    format!("residual={:.16e}", a.residual),
                ));
            }
            Err(e) => gates.push(Gate::failed("order_scaling", &loose, &e)),
        }
    } else {
        gates.push(Gate::new("order_scaling", 0.0, &loose, true, "no field".into()));
    }

    match classical_comparison(Arc::new(sc.pulse), &init, dt, FieldModel::PlaneWave) {
        Ok(cmp) => {
            let dv = cmp.final_velocity.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = r * r * sc.pulse.c;
            gates.push(Gate::new(
                "zero_net_momentum",
                dv,
                &format!("<= {MOMENTUM_TOL} R^2 c"),
                dv <= MOMENTUM_TOL * scale,
                format!("R^2 c={scale:.16e}"),
            ));
        }
        Err(e) => gates.push(Gate::failed("zero_net_momentum", "<= 0.02 R^2 c", &e)),
    }

    let n = v.normalization_grid;
    for label in &sc.config.times.named_snapshots {
        let t = snapshot_time(label, &sc.pulse)?;
        let name = format!("normalization_{label}");
        let masses = normalization_check(t, &sc.spec, &sc.cache, v.box_sigmas, n)
            .and_then(|m| Ok((m, normalization_check(t, &sc.spec, &sc.cache, v.box_sigmas, n / 2)?)));
        match masses {
            Ok((fine, coarse)) => {
                gates.push(Gate::new(
                    &name,
                    fine,
                    "in [0.995, 1.0]",
                    (MASS_RANGE.0..=MASS_RANGE.1).contains(&fine),
                    format!("n_grid={n} t={t:.16e}"),
                ));
                gates.push(Gate::new(
                    &format!("{name}_refinement"),
                    (fine - coarse).abs(),
                    "< 1e-3",
                    (fine - coarse).abs() < MASS_CONVERGENCE,
                    format!("n_grid {} -> {n}", n / 2),
                ));
            }
            Err(e) => gates.push(Gate::failed(&name, "in [0.995, 1.0]", &e)),
        }
    }
    Ok(VerificationReport { gates })
}

/// Writes `verify.txt` and returns the report with its path.
pub fn cmd_verify(sc: &Scenario, out: &Path) -> CliResult<(VerificationReport, PathBuf)> {
    prepare(sc, out)?;
    let report = run_verification(sc)?;
    let path = out.join("verify.txt");
    write_file(&path, &report.to_text())?;
    Ok((report, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Format, ScenarioConfig};

    fn scenario(edit: impl FnOnce(&mut ScenarioConfig)) -> Scenario {
        let mut cfg = ScenarioConfig::default();
        cfg.verify.superposition_samples = 6;
        cfg.verify.residual_samples = 24;
        cfg.verify.normalization_grid = 24;
        cfg.times.n_samples = 11;
        cfg.grid.n = 9;
        edit(&mut cfg);
        Scenario::new(cfg, 3).unwrap()
    }

    fn read(path: &Path) -> String {
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn trajectory_columns_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(|_| {});
        let p = cmd_trajectory(&sc, dir.path()).unwrap();
        let first = read(&p);
        assert_eq!(first, read(&cmd_trajectory(&sc, dir.path()).unwrap()));
        let lines: Vec<&str> = first.lines().collect();
        assert!(lines[0].starts_with("t [a.u.],x_max [a.u.]"));
        assert_eq!(lines.len(), 12);
        let last: Vec<f64> = lines[11].split(',').map(|s| s.parse().unwrap()).collect();
        assert!((last[3] - 282.4).abs() < 0.01 * 282.4);
        assert!(dir.path().join(RESOLVED_CONFIG).exists());
    }

    #[test]
    fn free_trajectory_is_straight() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(|c| {
            c.pulse.amplitude = 0.0;
            c.packet.p0 = [0.1, 0.0, 0.2];
        });
        let text = read(&cmd_trajectory(&sc, dir.path()).unwrap());
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((v[1] - 0.1 * v[0]).abs() < 1e-12 * v[0].max(1.0));
            assert!((v[3] - 0.2 * v[0]).abs() < 1e-12 * v[0].max(1.0));
        }
    }

    #[test]
    fn snapshot_rows() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(|_| {});
        let text = read(&cmd_snapshots(&sc, dir.path()).unwrap());
        let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0][1], "i");
        let w: f64 = rows[0][5].parse().unwrap();
        assert!((w - 2f64.sqrt() / 0.05).abs() < 1e-3);
    }

    #[test]
    fn asymmetric_packet_snapshots_fail() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(|c| c.packet.dp_tilde_z = Some(0.06));
        let err = cmd_snapshots(&sc, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn density_slice_peaks_at_center() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(|_| {});
        let t = snapshot_time("iii", &sc.pulse).unwrap();
        let text = read(&cmd_density(&sc, t, dir.path()).unwrap());
        let data: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(|s| s.parse().unwrap()).collect())
            .collect();
        assert_eq!(data.len(), 81);
        let best = data.iter().enumerate().max_by(|a, b| a.1[2].total_cmp(&b.1[2])).unwrap().0;
        assert_eq!(best, 40);
    }

    #[test]
    fn pulse_table() {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(|_| {});
        let text = read(&cmd_pulse(&sc, dir.path()).unwrap());
        for line in text.lines().skip(1) {
            let row: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert!(row[2].abs() <= 0.25);
            assert_eq!(row[4], row[2] / 4.0);
        }
        let sc = scenario(|c| c.output.format = Format::Json);
        let p = cmd_pulse(&sc, dir.path()).unwrap();
        assert!(p.extension().unwrap() == "json");
        let v: serde_json::Value = serde_json::from_str(&read(&p)).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 11);
    }

    #[test]
    fn verify_default_passes() {
        let sc = scenario(|_| {});
        let report = run_verification(&sc).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn verify_without_field_passes() {
        let sc = scenario(|c| c.pulse.amplitude = 0.0);
        let report = run_verification(&sc).unwrap();
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn coarse_quadrature_fails_gate() {
        let sc = scenario(|c| c.verify.n_quad = 16);
        let report = run_verification(&sc).unwrap();
        assert!(!report.passed());
        let text = report.to_text();
        assert!(text.contains("FAIL superposition_vs_closed_form"), "{text}");
        assert!(text.contains("n_quad"));
    }
}
