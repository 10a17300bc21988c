//! Classical electron motion in the pulse: the closed-form trajectory and a
//! fixed-step RK4 Lorentz-force integrator used as its oracle.

use crate::cache::QuadratureCache;
use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::Vec3;

/// |p|/c above which the nonrelativistic treatment is rejected.
pub const MAX_BETA: f64 = 0.3;
/// |p|/c above which a warning is logged.
pub const WARN_BETA: f64 = 0.1;

/// Initial position and velocity (m = 1, so velocity equals momentum).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicalInit {
    pub x0: Vec3,
    pub p: Vec3,
}

impl ClassicalInit {
    pub fn at_rest() -> Self {
        Self::default()
    }

    pub fn validate(&self, c: f64) -> Result<()> {
        let beta = norm(self.p) / c;
        if !beta.is_finite() || beta >= MAX_BETA {
            return Err(Error::InvalidParameter(format!(
                "|p|/c = {beta:.3} outside the nonrelativistic domain (< {MAX_BETA})"
            )));
        }
        if beta > WARN_BETA {
            log::warn!("|p|/c = {beta:.3} exceeds {WARN_BETA}");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassicalState {
    pub x: Vec3,
    pub v: Vec3,
}

/// Field model driving [`lorentz_rhs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldModel {
    /// Exact plane wave: E and B evaluated at the retarded phase `omega t - k z`.
    #[default]
    PlaneWave,
    /// First-order expansion in kz: `E_x = -(omega/c)(A' - kz A'')`,
    /// `B_y = -k A'`, both at phase `omega t`.
    Expanded,
}

pub(crate) fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Closed-form trajectory, first order in kz and second order in the small
/// quantities A/c², p_x/c:
///
/// ```text
/// x = -(1/c)(1 + p_z/c) I1 + (1/c²)(p_z t + z0) A + p_x t + x0
/// y = p_y t + y0
/// z = I2/(2c³) - (p_x/c²) I1 + p_z t + z0
/// ```
pub fn analytic_position(t: f64, init: &ClassicalInit, cache: &QuadratureCache) -> Vec3 {
    let pulse = cache.pulse();
    let c = pulse.c();
    let ints = cache.integrals(t);
    let a = pulse.a_at(t);
    let [x0, y0, z0] = init.x0;
    let [px, py, pz] = init.p;
    [
        -(1.0 / c) * (1.0 + pz / c) * ints.int_a + (pz * t + z0) * a / (c * c) + px * t + x0,
        py * t + y0,
        ints.int_a2 / (2.0 * c * c * c) - px / (c * c) * ints.int_a + pz * t + z0,
    ]
}

/// Time derivative of the classical state under `x'' = E + (v/c) x B`.
pub fn lorentz_rhs(state: &ClassicalState, t: f64, pulse: &dyn Pulse, model: FieldModel) -> ClassicalState {
    let omega = pulse.omega();
    let c = pulse.c();
    let k = pulse.k();
    let [vx, _, vz] = state.v;
    let z = state.x[2];
    let (e_x, b_y) = match model {
        FieldModel::PlaneWave => {
            let ap = pulse.potential_prime(omega * t - k * z);
            (-(omega / c) * ap, -k * ap)
        }
        FieldModel::Expanded => {
            let phase = omega * t;
            let ap = pulse.potential_prime(phase);
            let kz = k * z;
            let app = if kz == 0.0 { 0.0 } else { pulse.potential_second(phase) };
            (-(omega / c) * (ap - kz * app), -k * ap)
        }
    };
    // (v x B)_x = -v_z B_y, (v x B)_z = v_x B_y for B = B_y ŷ
    ClassicalState {
        x: state.v,
        v: [e_x - vz * b_y / c, 0.0, vx * b_y / c],
    }
}

fn axpy(s: &ClassicalState, h: f64, d: &ClassicalState) -> ClassicalState {
    let mut out = *s;
    for i in 0..3 {
        out.x[i] += h * d.x[i];
        out.v[i] += h * d.v[i];
    }
    out
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step(state: &ClassicalState, t: f64, dt: f64, pulse: &dyn Pulse, model: FieldModel) -> ClassicalState {
    let k1 = lorentz_rhs(state, t, pulse, model);
    let k2 = lorentz_rhs(&axpy(state, 0.5 * dt, &k1), t + 0.5 * dt, pulse, model);
    let k3 = lorentz_rhs(&axpy(state, 0.5 * dt, &k2), t + 0.5 * dt, pulse, model);
    let k4 = lorentz_rhs(&axpy(state, dt, &k3), t + dt, pulse, model);
    let mut out = *state;
    for i in 0..3 {
        out.x[i] += dt / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
        out.v[i] += dt / 6.0 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    }
    out
}

/// Default step: a two-hundredth of a carrier period.
pub fn default_step(pulse: &dyn Pulse) -> f64 {
    pulse.carrier_period() / 200.0
}

fn check_step(dt: f64, pulse: &dyn Pulse) -> Result<()> {
    let max = pulse.carrier_period() / 100.0;
    if !(dt.is_finite() && dt > 0.0) || dt > max {
        return Err(Error::StepSizeTooLarge { dt, max });
    }
    Ok(())
}

/// Integrates from t = 0 to `t_end` with `ceil(t_end/dt)` equal steps
/// (so the effective step never exceeds `dt`). Samples include both ends.
pub fn integrate_rk4(
    init: &ClassicalInit,
    t_end: f64,
    dt: f64,
    pulse: &dyn Pulse,
    model: FieldModel,
) -> Result<Vec<(f64, ClassicalState)>> {
    check_step(dt, pulse)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("t_end must be > 0, got {t_end}")));
    }
    let n = steps_for(t_end, dt);
    let h = t_end / n as f64;
    let mut state = ClassicalState {
        x: init.x0,
        v: init.p,
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push((0.0, state));
    for i in 0..n {
        let t = i as f64 * h;
        state = rk4_step(&state, t, h, pulse, model);
        let t_next = if i + 1 == n { t_end } else { (i + 1) as f64 * h };
        out.push((t_next, state));
    }
    Ok(out)
}

/// Number of equal steps no longer than `dt` (up to rounding) covering `span`.
fn steps_for(span: f64, dt: f64) -> usize {
    ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// RK4 states at the requested (ascending, non-negative) times. Each interval
/// between consecutive requested times is split into equal steps no longer
/// than `dt_max`.
pub fn integrate_rk4_at(
    init: &ClassicalInit,
    times: &[f64],
    dt_max: f64,
    pulse: &dyn Pulse,
    model: FieldModel,
) -> Result<Vec<ClassicalState>> {
    check_step(dt_max, pulse)?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sample times must be ascending and >= 0".into()));
    }
    let mut state = ClassicalState {
        x: init.x0,
        v: init.p,
    };
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = steps_for(span, dt_max);
            let h = span / n as f64;
            for i in 0..n {
                state = rk4_step(&state, t + i as f64 * h, h, pulse, model);
            }
            t = target;
        }
        out.push(state);
    }
    Ok(out)
}

/// Ponderomotive drift along the propagation direction, `I2(t_end)/(2c³)`.
/// Meant for `t_end` at or beyond the end of the pulse; earlier times give the
/// drift accumulated so far.
pub fn drift_displacement(cache: &QuadratureCache, t_end: f64) -> f64 {
    let c = cache.pulse().c();
    cache.int_a2(t_end) / (2.0 * c * c * c)
}
