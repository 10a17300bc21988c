//! Independent numerical checks of the closed forms: direct momentum
//! quadrature of the superposition, the finite-difference Schrödinger
//! residual, grid normalization and the order-scaling of the truncation error.

use crate::cache::{build_default_cache, QuadratureCache};
use crate::classical::{analytic_position, drift_displacement, integrate_rk4, ClassicalInit, FieldModel};
use crate::error::{Error, Result};
use crate::packet::{
    density_peak, exact_principal_axes, from_tilde, phase_coefficients, plane_wave_phase_unchecked, Axis,
    PacketFrame, PacketSpec,
};
use crate::pulse::{check_kz, GaussianSinePulse, Pulse};
use crate::Vec3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

pub const MIN_QUAD_INTERVALS: usize = 64;
/// Minimum half-width of the momentum integration, in units of the weight width.
pub const MIN_SPAN_WIDTHS: f64 = 6.0;
pub const DEFAULT_SEED: u64 = 0x5eed_2024;
/// Values below this are treated as absent when forming scaling ratios.
pub const SIGNAL_FLOOR: f64 = 1e-12;

/// Width and central momentum of the weight along one separated axis.
fn axis_weight(axis: Axis, spec: &PacketSpec) -> (f64, f64) {
    let (pxt, pzt) = spec.tilde_momentum();
    match axis {
        Axis::XTilde => (pxt, spec.dp_tilde_x),
        Axis::Y => (spec.p0[1], spec.dp_y),
        Axis::ZTilde => (pzt, spec.dp_tilde_z),
    }
}

/// |Ψ|² of one separated axis, from composite Simpson integration of the
/// Gaussian-weighted plane waves over `center ± p_span` with `n_quad`
/// intervals. The phase is the full lab-frame plane-wave phase at `x`, with
/// the other two tilde momenta held at their central values; those only add
/// a constant phase, so the result is the one-dimensional density.
pub fn numeric_superposition(
    axis: Axis,
    x: Vec3,
    t: f64,
    spec: &PacketSpec,
    cache: &QuadratureCache,
    n_quad: usize,
    p_span: f64,
) -> Result<f64> {
    let (center, dp) = axis_weight(axis, spec);
    if n_quad < MIN_QUAD_INTERVALS || !n_quad.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "n_quad must be even and >= {MIN_QUAD_INTERVALS}, got {n_quad}"
        )));
    }
    if p_span.is_nan() || p_span < MIN_SPAN_WIDTHS * dp * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "p_span = {p_span} below {MIN_SPAN_WIDTHS} * dp = {}",
            MIN_SPAN_WIDTHS * dp
        )));
    }
    check_kz(cache.pulse().k() * x[2])?;
    let (pxt, pzt) = spec.tilde_momentum();
    let norm = (2.0 / PI).powf(0.25) / dp.sqrt();
    let h = 2.0 * p_span / n_quad as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..=n_quad {
        let q = center - p_span + j as f64 * h;
        let (tx, ty, tz) = match axis {
            Axis::XTilde => (q, spec.p0[1], pzt),
            Axis::Y => (pxt, q, pzt),
            Axis::ZTilde => (pxt, spec.p0[1], q),
        };
        let (px, pz) = from_tilde((tx, tz));
        let phase = plane_wave_phase_unchecked(x, [px, ty, pz], spec.x0, t, cache);
        let weight = norm * (-((q - center) / dp).powi(2)).exp();
        let simpson = if j == 0 || j == n_quad {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += Complex64::from_polar(simpson * weight, phase);
    }
    let psi = sum * (h / 3.0) / (2.0 * PI).sqrt();
    let value = psi.norm_sqr();
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("non-finite superposition at t = {t}")));
    }
    Ok(value)
}

/// Worst relative mismatch between quadrature and closed form over a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionSummary {
    pub samples: usize,
    pub n_quad: usize,
    pub max_rel_error: f64,
    /// Same samples at `2 n_quad`.
    pub max_rel_error_doubled: f64,
}

/// Compares [`numeric_superposition`] with the closed form at `n_samples`
/// seeded points within two widths of the density peak, cycling through the
/// three axes, at times spread over `[0, t_end]`.
pub fn superposition_check(
    spec: &PacketSpec,
    cache: &QuadratureCache,
    n_samples: usize,
    n_quad: usize,
    span_widths: f64,
    seed: u64,
) -> Result<SuperpositionSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_end = cache.t_end();
    let points: Vec<(Axis, Vec3, f64)> = (0..n_samples)
        .map(|i| {
            let t = rng.gen::<f64>() * t_end;
            let frame = PacketFrame::new(t, spec, cache);
            let eff = frame.effective_times();
            let width = |dp: f64, lambda: f64| 2f64.sqrt() / dp * (1.0 + (0.5 * dp * dp * lambda).powi(2)).sqrt();
            let ox = (rng.gen::<f64>() * 4.0 - 2.0) * width(spec.dp_tilde_x, eff.lambda1);
            let oy = (rng.gen::<f64>() * 4.0 - 2.0) * width(spec.dp_y, t);
            let oz = (rng.gen::<f64>() * 4.0 - 2.0) * width(spec.dp_tilde_z, eff.lambda2);
            let (dx, dz) = from_tilde((ox, oz));
            let peak = density_peak(t, spec, cache);
            (Axis::ALL[i % 3], [peak[0] + dx, peak[1] + oy, peak[2] + dz], t)
        })
        .collect();
    let worst = |n: usize| -> Result<f64> {
        let errs: Vec<f64> = points
            .par_iter()
            .map(|&(axis, x, t)| {
                let dp = axis_weight(axis, spec).1;
                let num = numeric_superposition(axis, x, t, spec, cache, n, span_widths * dp)?;
                let phases = PacketFrame::new(t, spec, cache).phases(x);
                let closed = phases[Axis::ALL.iter().position(|a| *a == axis).unwrap_or(0)].density();
                Ok((num - closed).abs() / closed)
            })
            .collect::<Result<_>>()?;
        Ok(errs.into_iter().fold(0.0, f64::max))
    };
    Ok(SuperpositionSummary {
        samples: n_samples,
        n_quad,
        max_rel_error: worst(n_quad)?,
        max_rel_error_doubled: worst(2 * n_quad)?,
    })
}

/// Radical-inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// `n` points of the (2, 3, 5, 7) Halton sequence, shifted modulo 1 by a
/// seeded random vector. Coordinates lie in the unit hypercube.
pub fn shifted_halton_4d(n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 4] = std::array::from_fn(|_| rng.gen());
    (1..=n as u64)
        .map(|i| {
            let mut u = [halton(i, 2), halton(i, 3), halton(i, 5), halton(i, 7)];
            for (v, s) in u.iter_mut().zip(shift) {
                *v = (*v + s).fract();
            }
            u
        })
        .collect()
}

/// Maps unit-hypercube points to `(x, t)` samples with `|x|, |y| <= xy_bound`,
/// `|kz| <= kz_bound` and `t` in `[margin, t_end - margin]`.
pub fn residual_samples(
    unit: &[[f64; 4]],
    kz_bound: f64,
    xy_bound: f64,
    k: f64,
    t_end: f64,
    margin: f64,
) -> Vec<(Vec3, f64)> {
    unit.iter()
        .map(|u| {
            let x = [
                (2.0 * u[0] - 1.0) * xy_bound,
                (2.0 * u[1] - 1.0) * xy_bound,
                (2.0 * u[2] - 1.0) * kz_bound / k,
            ];
            (x, margin + u[3] * (t_end - 2.0 * margin))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub sample_points: Vec<(Vec3, f64)>,
    /// Max over samples of |i dψ/dt - Hψ| / |ψ|.
    pub residual_norm: f64,
    /// Order-of-magnitude estimate of the expected residual: expansion terms
    /// in kz and A/c², the dropped higher-order phase rates and the
    /// finite-difference error.
    pub budget: f64,
}

/// Finite-difference residual of `ψ = exp(i S)` with `S` the plane-wave phase,
/// in the exact plane-wave Hamiltonian `H = (-i∇ - A(ωt - kz) x̂/c)²/2`.
/// Second-order central differences in t (step `h_t`) and space (`h_x`).
pub fn schrodinger_residual(
    p: Vec3,
    sample_points: &[(Vec3, f64)],
    h_x: f64,
    h_t: f64,
    cache: &QuadratureCache,
) -> Result<ResidualReport> {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let pn = p2.sqrt();
    if !(h_x > 0.0 && h_x * pn <= 0.01) || !(h_t > 0.0 && h_t * p2 <= 0.02) {
        return Err(Error::InvalidParameter(format!(
            "steps h_x = {h_x}, h_t = {h_t} too coarse for |p| = {pn}"
        )));
    }
    let pulse = cache.pulse();
    let (c, omega, k) = (pulse.c(), pulse.omega(), pulse.k());
    let mut kz_max: f64 = 0.0;
    for (x, _) in sample_points {
        check_kz(k * x[2])?;
        kz_max = kz_max.max((k * x[2]).abs());
    }
    let origin = [0.0; 3];
    let residuals: Vec<f64> = sample_points
        .par_iter()
        .map(|&(x, t)| {
            let coeffs = [t - h_t, t, t + h_t].map(|s| phase_coefficients(s, p, cache));
            let phase = |y: Vec3, j: usize| {
                p[0] * (y[0] - origin[0]) + p[1] * (y[1] - origin[1]) + p[2] * (y[2] - origin[2])
                    + coeffs[j].u * k * y[2]
                    + coeffs[j].w
            };
            let psi = |y: Vec3, j: usize| Complex64::from_polar(1.0, phase(y, j));
            let centre = psi(x, 1);
            let dt = (psi(x, 2) - psi(x, 0)) / (2.0 * h_t);
            let mut lap = Complex64::new(0.0, 0.0);
            let mut dx = Complex64::new(0.0, 0.0);
            for axis in 0..3 {
                let mut fwd = x;
                let mut bwd = x;
                fwd[axis] += h_x;
                bwd[axis] -= h_x;
                let (f, b) = (psi(fwd, 1), psi(bwd, 1));
                lap += (f + b - 2.0 * centre) / (h_x * h_x);
                if axis == 0 {
                    dx = (f - b) / (2.0 * h_x);
                }
            }
            let a = pulse.potential(omega * t - k * x[2]);
            let h_psi = -0.5 * lap + Complex64::i() * (a / c) * dx + (a * a / (2.0 * c * c)) * centre;
            (Complex64::i() * dt - h_psi).norm() / centre.norm()
        })
        .collect();
    let residual_norm = residuals.into_iter().fold(0.0, f64::max);
    let a_max = pulse.peak_bound();
    let eta = a_max / (c * c);
    let rate = 0.5 * p2 + 0.5 * a_max * eta;
    let budget = a_max * a_max / (c * c) * kz_max * kz_max
        + 0.5 * p2 * eta * eta
        + 0.125 * c * c * eta.powi(4)
        + h_x * h_x * p2 * p2 / 12.0
        + h_t * h_t * rate.powi(3) / 6.0;
    Ok(ResidualReport {
        sample_points: sample_points.to_vec(),
        residual_norm,
        budget,
    })
}

/// Trapezoidal integral of the density over a box of `box_sigmas` standard
/// deviations per lab axis, centered on the density peak, with `n_grid`
/// nodes per axis.
pub fn normalization_check(
    t: f64,
    spec: &PacketSpec,
    cache: &QuadratureCache,
    box_sigmas: f64,
    n_grid: usize,
) -> Result<f64> {
    if box_sigmas.is_nan() || box_sigmas < 4.0 {
        return Err(Error::InvalidParameter(format!("box_sigmas must be >= 4, got {box_sigmas}")));
    }
    if n_grid < 3 {
        return Err(Error::InvalidParameter(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let centre = density_peak(t, spec, cache);
    let cov = exact_principal_axes(t, spec, cache).covariance;
    let sy2 = (1.0 + (0.5 * spec.dp_y * spec.dp_y * t).powi(2)) / (spec.dp_y * spec.dp_y);
    let sigma = [cov[0][0].sqrt(), sy2.sqrt(), cov[1][1].sqrt()];
    let step: [f64; 3] = std::array::from_fn(|i| 2.0 * box_sigmas * sigma[i] / (n_grid - 1) as f64);
    let node = |axis: usize, i: usize| centre[axis] - box_sigmas * sigma[axis] + i as f64 * step[axis];
    let weight = |i: usize| if i == 0 || i == n_grid - 1 { 0.5 } else { 1.0 };
    let frame = PacketFrame::new(t, spec, cache);
    let planes: Vec<f64> = (0..n_grid)
        .into_par_iter()
        .map(|i| {
            let x = node(0, i);
            let mut plane = 0.0;
            for j in 0..n_grid {
                let y = node(1, j);
                let mut line = 0.0;
                for l in 0..n_grid {
                    line += weight(l) * frame.density([x, y, node(2, l)]);
                }
                plane += weight(j) * line;
            }
            weight(i) * plane
        })
        .collect();
    Ok(planes.iter().sum::<f64>() * step[0] * step[1] * step[2])
}

/// RK4 (exact plane wave) against the closed-form trajectory over the pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalComparison {
    pub max_dx: f64,
    pub max_dz: f64,
    pub drift: f64,
    pub final_velocity: Vec3,
}

impl ClassicalComparison {
    /// `max |z_RK4 - z_analytic| / drift`, or the absolute value without drift.
    pub fn z_relative(&self) -> f64 {
        if self.drift > 0.0 {
            self.max_dz / self.drift
        } else {
            self.max_dz
        }
    }

    pub fn x_relative(&self) -> f64 {
        if self.drift > 0.0 {
            self.max_dx / self.drift
        } else {
            self.max_dx
        }
    }
}

pub fn classical_comparison(
    pulse: Arc<dyn Pulse>,
    init: &ClassicalInit,
    dt: f64,
    model: FieldModel,
) -> Result<ClassicalComparison> {
    let t_end = pulse.support_end();
    let cache = build_default_cache(pulse.clone(), t_end)?;
    let traj = integrate_rk4(init, t_end, dt, pulse.as_ref(), model)?;
    let (mut max_dx, mut max_dz) = (0.0f64, 0.0f64);
    for (t, state) in &traj {
        let a = analytic_position(*t, init, &cache);
        max_dx = max_dx.max((state.x[0] - a[0]).abs());
        max_dz = max_dz.max((state.x[2] - a[2]).abs());
    }
    let last = traj.last().map(|(_, s)| s.v).unwrap_or(init.p);
    Ok(ClassicalComparison {
        max_dx,
        max_dz,
        drift: drift_displacement(&cache, t_end),
        final_velocity: [last[0] - init.p[0], last[1] - init.p[1], last[2] - init.p[2]],
    })
}

/// Settings shared by all rows of an order-scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSetup {
    pub init: ClassicalInit,
    pub dt: f64,
    pub residual_momentum: Vec3,
    /// The residual is evaluated at amplitude `residual_scale * R`.
    pub residual_scale: f64,
    pub samples: Vec<(Vec3, f64)>,
    pub h_x: f64,
    pub h_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub amplitude: f64,
    pub discrepancy: f64,
    pub residual_amplitude: f64,
    pub residual: f64,
}

pub const SCALING_GATE: (f64, f64) = (2.0, 8.0);

/// Ratio of consecutive values, or `None` when either is below
/// [`SIGNAL_FLOOR`].
pub fn scaling_ratio(larger: f64, smaller: f64) -> Option<f64> {
    (larger > SIGNAL_FLOOR && smaller > SIGNAL_FLOOR).then(|| larger / smaller)
}

/// RK4 discrepancy (z, normalized by the drift) and Schrödinger residual for
/// each amplitude. Consecutive ratios must lie in the loose [2, 8] gate.
pub fn order_scaling_check(
    r_values: &[f64],
    base: &GaussianSinePulse,
    setup: &ScalingSetup,
) -> Result<Vec<ScalingRow>> {
    if r_values.len() < 2 || r_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("R values must be strictly descending, >= 2 entries".into()));
    }
    let rows = r_values
        .iter()
        .map(|&r| {
            let pulse = base.with_amplitude(r);
            let cmp = classical_comparison(Arc::new(pulse), &setup.init, setup.dt, FieldModel::PlaneWave)?;
            let res_pulse = base.with_amplitude(r * setup.residual_scale);
            let cache = build_default_cache(Arc::new(res_pulse), res_pulse.support_end())?;
            let res = schrodinger_residual(setup.residual_momentum, &setup.samples, setup.h_x, setup.h_t, &cache)?;
            Ok(ScalingRow {
                amplitude: r,
                discrepancy: cmp.z_relative(),
                residual_amplitude: r * setup.residual_scale,
                residual: res.residual_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = SCALING_GATE;
    for w in rows.windows(2) {
        for (quantity, a, b) in [
            ("classical discrepancy", w[0].discrepancy, w[1].discrepancy),
            ("residual", w[0].residual, w[1].residual),
        ] {
            if let Some(ratio) = scaling_ratio(a, b) {
                if !(lo..=hi).contains(&ratio) {
                    return Err(Error::ScalingViolation {
                        quantity: format!("{quantity} R {} -> {}", w[0].amplitude, w[1].amplitude),
                        ratio,
                        lo,
                        hi,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// One pass/fail line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub measured: f64,
    pub threshold: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: &str, measured: f64, threshold: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            measured,
            threshold: threshold.to_string(),
            passed,
            detail,
        }
    }

    pub fn failed(name: &str, threshold: &str, err: &Error) -> Self {
        Self::new(name, f64::NAN, threshold, false, err.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub gates: Vec<Gate>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            let _ = writeln!(
                out,
                "{} {} measured={:.16e} threshold={} {}",
                if g.passed { "PASS" } else { "FAIL" },
                g.name,
                g.measured,
                g.threshold,
                g.detail
            );
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}
