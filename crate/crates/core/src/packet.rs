//! The Gaussian wave packet built from the first-order (in kz) plane-wave
//! solutions of the Schrödinger equation.
//!
//! The plane-wave phase is quadratic in momentum with a single `p_x p_z`
//! cross term. Rotating the x-z plane by pi/4 (the *tilde frame*) separates
//! it into three one-dimensional Gaussian superpositions whose spreading is
//! governed by the effective times `t ∓ I1/c²` (x-tilde, z-tilde) and `t` (y).
//! [`density`] evaluates that product form exactly; [`principal_angle`],
//! [`widths`] and [`width_ratio`] are the first-order closed forms for an
//! axially symmetric packet, and [`exact_principal_axes`] is the exact
//! covariance of the density for comparison.

use crate::cache::QuadratureCache;
use crate::classical::ClassicalInit;
use crate::error::{Error, Result};
use crate::pulse::{check_kz, Pulse};
use crate::Vec3;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};

/// Relative tolerance for deciding that two tilde-frame widths are equal.
const SYMMETRY_TOL: f64 = 1e-12;

/// Momentum-space description of the packet. Widths are given in the tilde
/// frame (x-tilde, y, z-tilde); for an axially symmetric packet they coincide
/// with the lab-frame widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub p0: Vec3,
    pub x0: Vec3,
    pub dp_tilde_x: f64,
    pub dp_y: f64,
    pub dp_tilde_z: f64,
}

impl PacketSpec {
    pub fn new(p0: Vec3, x0: Vec3, dp_tilde_x: f64, dp_y: f64, dp_tilde_z: f64) -> Result<Self> {
        for (name, v) in [("dp_tilde_x", dp_tilde_x), ("dp_y", dp_y), ("dp_tilde_z", dp_tilde_z)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if p0.iter().chain(x0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("p0 and x0 must be finite".into()));
        }
        Ok(Self {
            p0,
            x0,
            dp_tilde_x,
            dp_y,
            dp_tilde_z,
        })
    }

    /// Packet with equal widths in x and z (and hence in x-tilde and z-tilde).
    pub fn symmetric(p0: Vec3, x0: Vec3, dp: f64, dp_y: f64) -> Result<Self> {
        Self::new(p0, x0, dp, dp_y, dp)
    }

    pub fn axially_symmetric(&self) -> bool {
        (self.dp_tilde_x - self.dp_tilde_z).abs() <= SYMMETRY_TOL * self.dp_tilde_x.max(self.dp_tilde_z)
    }

    fn require_symmetry(&self) -> Result<()> {
        if self.axially_symmetric() {
            Ok(())
        } else {
            Err(Error::AxialSymmetryRequired {
                dp_x: self.dp_tilde_x,
                dp_z: self.dp_tilde_z,
            })
        }
    }

    /// The classical initial condition with the same centroid and momentum.
    pub fn classical_init(&self) -> ClassicalInit {
        ClassicalInit {
            x0: self.x0,
            p: self.p0,
        }
    }

    /// Central momentum in the tilde frame, `(p~x, p~z)`.
    pub fn tilde_momentum(&self) -> (f64, f64) {
        to_tilde((self.p0[0], self.p0[2]))
    }
}

/// `u(t)` multiplies `kz` in the plane-wave phase; `w(t)` is the accumulated
/// spatially uniform phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoefficients {
    pub u: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTimes {
    /// `t - I1/c²`, spreading time along x-tilde.
    pub lambda1: f64,
    /// `t + I1/c²`, spreading time along z-tilde.
    pub lambda2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Widths {
    pub x: f64,
    pub z: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSnapshot {
    pub t: f64,
    pub x_max: Vec3,
    /// Lab-frame angle of the X principal axis, measured from the x axis.
    pub theta: f64,
    pub width_x: f64,
    pub width_z: f64,
    pub width_y: f64,
    /// `width_x / width_z`.
    pub ratio: f64,
}

/// Exact principal axes of the x-z density, from its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactAxes {
    /// Lab-frame angle of the axis closest to the x-tilde diagonal.
    pub theta: f64,
    pub width_x: f64,
    pub width_z: f64,
    /// Lab-frame covariance `[[<xx>, <xz>], [<xz>, <zz>]]`.
    pub covariance: [[f64; 2]; 2],
}

/// Result of the one-dimensional Gaussian superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm1d {
    pub amplitude: Complex64,
    pub density: f64,
}

/// Which separated coordinate a one-dimensional factor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    XTilde,
    Y,
    ZTilde,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::XTilde, Axis::Y, Axis::ZTilde];
}

/// One separated factor: its phase is `f(q) = f0 + F (q - q0) - lambda (q - q0)²/2`
/// around the central momentum `q0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisPhase {
    pub axis: Axis,
    /// Coefficient of the momentum in the phase (the position-like term).
    pub slope: f64,
    /// Effective spreading time.
    pub lambda: f64,
    /// Central momentum along this axis.
    pub center: f64,
    pub dp: f64,
}

impl AxisPhase {
    /// f(q0).
    pub fn f0(&self) -> f64 {
        self.center * self.slope - 0.5 * self.center * self.center * self.lambda
    }

    /// f'(q0).
    pub fn f1(&self) -> f64 {
        self.slope - self.center * self.lambda
    }

    /// f''(q0).
    pub fn f2(&self) -> f64 {
        -self.lambda
    }

    pub fn closed_form(&self) -> ClosedForm1d {
        gaussian_closed_form_1d(self.f0(), self.f1(), self.f2(), self.dp)
    }

    /// The density of [`AxisPhase::closed_form`] without the amplitude.
    pub fn density(&self) -> f64 {
        density_1d(self.f1(), self.f2(), self.dp)
    }
}

/// Phase coefficients of the plane wave with momentum `p`, keeping the terms
/// up to `(1/c²)(1 + p_z/c)`:
///
/// ```text
/// u = -(p_x/(omega c)) A + A²/(2 omega c²)
/// w = -|p|² t/2 + (p_x/c)(1 + p_z/c) I1 - (1/(2c²))(1 + p_z/c) I2
/// ```
pub fn phase_coefficients(t: f64, p: Vec3, cache: &QuadratureCache) -> PhaseCoefficients {
    let pulse = cache.pulse();
    let c = pulse.c();
    let omega = pulse.omega();
    let a = pulse.a_at(t);
    let ints = cache.integrals(t);
    let [px, py, pz] = p;
    PhaseCoefficients {
        u: -px / (omega * c) * a + a * a / (2.0 * omega * c * c),
        w: -0.5 * (px * px + py * py + pz * pz) * t + px / c * (1.0 + pz / c) * ints.int_a
            - (1.0 + pz / c) * ints.int_a2 / (2.0 * c * c),
    }
}

/// Real phase of the plane-wave solution, `p·(x - x_ref) + u kz + w`.
pub fn plane_wave_phase(x: Vec3, p: Vec3, x_ref: Vec3, t: f64, cache: &QuadratureCache) -> Result<f64> {
    let k = cache.pulse().k();
    check_kz(k * x[2])?;
    Ok(plane_wave_phase_unchecked(x, p, x_ref, t, cache))
}

pub(crate) fn plane_wave_phase_unchecked(x: Vec3, p: Vec3, x_ref: Vec3, t: f64, cache: &QuadratureCache) -> f64 {
    let k = cache.pulse().k();
    let pc = phase_coefficients(t, p, cache);
    p[0] * (x[0] - x_ref[0]) + p[1] * (x[1] - x_ref[1]) + p[2] * (x[2] - x_ref[2]) + pc.u * k * x[2] + pc.w
}

/// Lab `(x, z)` to tilde `(x~, z~)`, a rotation by pi/4.
pub fn to_tilde(q: (f64, f64)) -> (f64, f64) {
    let (x, z) = q;
    (FRAC_1_SQRT_2 * (x + z), FRAC_1_SQRT_2 * (z - x))
}

pub fn from_tilde(q: (f64, f64)) -> (f64, f64) {
    let (xt, zt) = q;
    (FRAC_1_SQRT_2 * (xt - zt), FRAC_1_SQRT_2 * (xt + zt))
}

/// Trajectory of the packet maximum in the same closed form as the classical
/// trajectory, with the zeroth-order `z` in the `(1/c²) z A` term.
pub fn maximum_position(t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> Vec3 {
    let pulse = cache.pulse();
    let c = pulse.c();
    let a = pulse.a_at(t);
    let ints = cache.integrals(t);
    let [x0, y0, z0] = spec.x0;
    let [px, py, pz] = spec.p0;
    let z_free = pz * t + z0;
    [
        px * t + x0 - (1.0 + pz / c) * ints.int_a / c + z_free * a / (c * c),
        py * t + y0,
        z_free + ints.int_a2 / (2.0 * c.powi(3)) - px * ints.int_a / (c * c),
    ]
}

/// Point where all three exponents of the density vanish: the maximum
/// trajectory with the full `z_m` kept in the `(1/c²) z_m A` term.
pub fn density_peak(t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> Vec3 {
    let pulse = cache.pulse();
    let c = pulse.c();
    let a = pulse.a_at(t);
    let ints = cache.integrals(t);
    let [x0, y0, z0] = spec.x0;
    let [px, py, pz] = spec.p0;
    let z_m = z0 + pz * t + ints.int_a2 / (2.0 * c.powi(3)) - px * ints.int_a / (c * c);
    [
        x0 + px * t - (1.0 + pz / c) * ints.int_a / c + z_m * a / (c * c),
        y0 + py * t,
        z_m,
    ]
}

pub fn effective_times(t: f64, cache: &QuadratureCache) -> EffectiveTimes {
    let c = cache.pulse().c();
    let shift = cache.int_a(t) / (c * c);
    EffectiveTimes {
        lambda1: t - shift,
        lambda2: t + shift,
    }
}

/// `pi/4 + A(t)/(4c²)`: first-order lab angle of the X principal axis of an
/// axially symmetric packet.
pub fn principal_angle(t: f64, pulse: &dyn Pulse) -> f64 {
    let c = pulse.c();
    FRAC_PI_4 + pulse.a_at(t) / (4.0 * c * c)
}

fn free_spread(dp: f64, t: f64) -> f64 {
    let s = 0.5 * dp * dp * t;
    2.0 / (dp * dp) * (1.0 + s * s)
}

/// Coordinate-space widths along the principal axes (first order in A/c²):
///
/// ```text
/// ΔX² = (2/Δp²)(1 + A/2c²)(1 + (Δp² t/2)²)
/// ΔZ² = (2/Δp²)(1 - A/2c²)(1 + (Δp² t/2)²)
/// Δy² = (2/Δp_y²)(1 + (Δp_y² t/2)²)
/// ```
pub fn widths(t: f64, spec: &PacketSpec, pulse: &dyn Pulse) -> Result<Widths> {
    spec.require_symmetry()?;
    let c = pulse.c();
    let shear = pulse.a_at(t) / (2.0 * c * c);
    let base = free_spread(spec.dp_tilde_x, t);
    Ok(Widths {
        x: (base * (1.0 + shear)).sqrt(),
        z: (base * (1.0 - shear)).sqrt(),
        y: free_spread(spec.dp_y, t).sqrt(),
    })
}

/// `1 + A(t)/(2c²)`, the first-order shear ratio ΔX/ΔZ.
pub fn width_ratio(t: f64, spec: &PacketSpec, pulse: &dyn Pulse) -> Result<f64> {
    spec.require_symmetry()?;
    let c = pulse.c();
    Ok(1.0 + pulse.a_at(t) / (2.0 * c * c))
}

/// Probability density of one Gaussian superposition of `exp(i f(p))/sqrt(2 pi)`
/// with weight `exp(-(p - p0)²/dp²)`, for a phase `f` that is quadratic in `p`
/// with value `f0`, slope `f1` and curvature `f2` at `p0`.
pub fn gaussian_closed_form_1d(f0: f64, f1: f64, f2: f64, dp: f64) -> ClosedForm1d {
    let s = 0.5 * dp * dp * f2;
    let denom = Complex64::new(1.0, -s);
    let prefactor = dp.sqrt() / (2.0 * PI).powf(0.25);
    let exponent = Complex64::new(0.0, f0) - Complex64::new((0.5 * dp * f1).powi(2), 0.0) / denom;
    let amplitude = prefactor * denom.powf(-0.5) * exponent.exp();
    ClosedForm1d {
        amplitude,
        density: density_1d(f1, f2, dp),
    }
}

fn density_1d(f1: f64, f2: f64, dp: f64) -> f64 {
    let s = 0.5 * dp * dp * f2;
    let one_plus = 1.0 + s * s;
    dp / (2.0 * PI).sqrt() / one_plus.sqrt() * (-0.5 * dp * dp * f1 * f1 / one_plus).exp()
}

/// Time-dependent quantities of the density, evaluated once so that grids
/// at a fixed time need no further cache queries.
#[derive(Debug, Clone, Copy)]
pub struct PacketFrame {
    pub t: f64,
    spec: PacketSpec,
    c: f64,
    a: f64,
    int_a: f64,
    int_a2: f64,
}

impl PacketFrame {
    pub fn new(t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> Self {
        let pulse = cache.pulse();
        let ints = cache.integrals(t);
        Self {
            t,
            spec: *spec,
            c: pulse.c(),
            a: pulse.a_at(t),
            int_a: ints.int_a,
            int_a2: ints.int_a2,
        }
    }

    pub fn effective_times(&self) -> EffectiveTimes {
        let shift = self.int_a / (self.c * self.c);
        EffectiveTimes {
            lambda1: self.t - shift,
            lambda2: self.t + shift,
        }
    }

    /// The three separated phase factors at lab position `x`.
    pub fn phases(&self, x: Vec3) -> [AxisPhase; 3] {
        let (c, spec) = (self.c, &self.spec);
        let eff = self.effective_times();
        let (xt, zt) = to_tilde((x[0], x[2]));
        let (xt0, zt0) = to_tilde((spec.x0[0], spec.x0[2]));
        let (pxt, pzt) = spec.tilde_momentum();
        let shear = self.a * (xt + zt) / (2.0 * c * c);
        let drift = self.int_a2 / (2.0 * SQRT_2 * c.powi(3));
        let quiver = self.int_a / (SQRT_2 * c);
        [
            AxisPhase {
                axis: Axis::XTilde,
                slope: xt - xt0 - shear + quiver - drift,
                lambda: eff.lambda1,
                center: pxt,
                dp: spec.dp_tilde_x,
            },
            AxisPhase {
                axis: Axis::Y,
                slope: x[1] - spec.x0[1],
                lambda: self.t,
                center: spec.p0[1],
                dp: spec.dp_y,
            },
            AxisPhase {
                axis: Axis::ZTilde,
                slope: zt - zt0 + shear - quiver - drift,
                lambda: eff.lambda2,
                center: pzt,
                dp: spec.dp_tilde_z,
            },
        ]
    }

    pub fn density(&self, x: Vec3) -> f64 {
        self.phases(x).iter().map(AxisPhase::density).product()
    }
}

/// The three separated phase factors at lab position `x` and time `t`.
pub fn separated_phases(x: Vec3, t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> [AxisPhase; 3] {
    PacketFrame::new(t, spec, cache).phases(x)
}

/// Probability density |ψ(x, t)|² in a.u.⁻³. No kz validity check is made
/// here; callers evaluating whole grids check the scenario once.
pub fn density(x: Vec3, t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> f64 {
    PacketFrame::new(t, spec, cache).density(x)
}

/// Exact lab-frame covariance of the x-z density and its principal axes.
pub fn exact_principal_axes(t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> ExactAxes {
    let pulse = cache.pulse();
    let c = pulse.c();
    let alpha = pulse.a_at(t) / (2.0 * c * c);
    let eff = effective_times(t, cache);
    // exponent of each factor is -beta F², i.e. precision 2 beta
    let precision = |dp: f64, lambda: f64| {
        let s = 0.5 * dp * dp * lambda;
        dp * dp / (1.0 + s * s)
    };
    let qx = precision(spec.dp_tilde_x, eff.lambda1);
    let qz = precision(spec.dp_tilde_z, eff.lambda2);
    // F = M (x~, z~)
    let m = [[1.0 - alpha, -alpha], [alpha, 1.0 + alpha]];
    let p11 = qx * m[0][0] * m[0][0] + qz * m[1][0] * m[1][0];
    let p12 = qx * m[0][0] * m[0][1] + qz * m[1][0] * m[1][1];
    let p22 = qx * m[0][1] * m[0][1] + qz * m[1][1] * m[1][1];
    let det = p11 * p22 - p12 * p12;
    let (c11, c12, c22) = (p22 / det, -p12 / det, p11 / det);
    // rotate tilde covariance to the lab frame: (x, z) = R (x~, z~)
    let r = [[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]];
    let ct = [[c11, c12], [c12, c22]];
    let mut lab = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            lab[i][j] = (0..2)
                .flat_map(|k| (0..2).map(move |l| (k, l)))
                .map(|(k, l)| r[i][k] * ct[k][l] * r[j][l])
                .sum();
        }
    }
    let (a, b, d) = (lab[0][0], lab[0][1], lab[1][1]);
    let major = 0.5 * (2.0 * b).atan2(a - d);
    // pick the eigen-direction closest to the x-tilde diagonal
    let candidates = [major, major + 0.5 * PI, major - 0.5 * PI];
    let theta = candidates
        .into_iter()
        .min_by(|u, v| (u - FRAC_PI_4).abs().total_cmp(&(v - FRAC_PI_4).abs()))
        .unwrap_or(major);
    let var = |th: f64| {
        let (s, co) = th.sin_cos();
        a * co * co + 2.0 * b * s * co + d * s * s
    };
    ExactAxes {
        theta,
        width_x: (2.0 * var(theta)).sqrt(),
        width_z: (2.0 * var(theta + 0.5 * PI)).sqrt(),
        covariance: lab,
    }
}

/// Maximum, first-order principal angle and widths at one time.
pub fn snapshot(t: f64, spec: &PacketSpec, cache: &QuadratureCache) -> Result<PacketSnapshot> {
    let pulse = cache.pulse();
    let w = widths(t, spec, pulse)?;
    Ok(PacketSnapshot {
        t,
        x_max: maximum_position(t, spec, cache),
        theta: principal_angle(t, pulse),
        width_x: w.x,
        width_z: w.z,
        width_y: w.y,
        ratio: w.x / w.z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::build_default_cache;
    use crate::classical::analytic_position;
    use crate::pulse::{GaussianSinePulse, ZeroPulse};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn reference_cache() -> QuadratureCache {
        let p = GaussianSinePulse::reference();
        build_default_cache(Arc::new(p), p.support_end()).unwrap()
    }

    fn free_cache() -> QuadratureCache {
        build_default_cache(Arc::new(ZeroPulse::default()), 800.0).unwrap()
    }

    fn rest_spec() -> PacketSpec {
        PacketSpec::symmetric([0.0; 3], [0.0; 3], 0.05, 0.05).unwrap()
    }

    #[test]
    fn free_phase() {
        let cache = free_cache();
        let p = [0.3, -0.1, 0.2];
        let pc = phase_coefficients(50.0, p, &cache);
        assert_eq!(pc.u, 0.0);
        assert!((pc.w + 0.5 * 0.14 * 50.0).abs() < 1e-14);
        let ph = plane_wave_phase([1.0, 2.0, 3.0], p, [0.0; 3], 50.0, &cache).unwrap();
        assert!((ph - (0.3 - 0.2 + 0.6 - 3.5)).abs() < 1e-13);
    }

    #[test]
    fn zero_momentum_phase() {
        let cache = reference_cache();
        let pulse = cache.pulse();
        let (c, omega) = (pulse.c(), pulse.omega());
        let t = 250.0;
        let pc = phase_coefficients(t, [0.0; 3], &cache);
        let a = pulse.a_at(t);
        assert!((pc.u - a * a / (2.0 * omega * c * c)).abs() < 1e-12 * pc.u.abs());
        assert!((pc.w + cache.int_a2(t) / (2.0 * c * c)).abs() < 1e-12 * pc.w.abs());
    }

    #[test]
    fn u_vanishes_where_field_does() {
        let cache = reference_cache();
        let p = GaussianSinePulse::reference();
        let t = (p.phi0 + PI) / p.omega;
        let pc = phase_coefficients(t, [0.2, 0.0, 0.1], &cache);
        assert!(pc.u.abs() < 1e-9, "u = {}", pc.u);
        let ints = cache.integrals(t);
        let c = p.c;
        let w = -0.5 * 0.05 * t + 0.2 / c * (1.0 + 0.1 / c) * ints.int_a - (1.0 + 0.1 / c) * ints.int_a2 / (2.0 * c * c);
        assert!((pc.w - w).abs() < 1e-9 * w.abs());
    }

    #[test]
    fn initial_plane_wave() {
        let cache = reference_cache();
        let ph = plane_wave_phase([2.0, 1.0, -1.0], [0.1, 0.2, 0.3], [0.0; 3], 0.0, &cache).unwrap();
        // A(0) is small but not zero, so only the u kz term survives
        let pc = phase_coefficients(0.0, [0.1, 0.2, 0.3], &cache);
        let k = cache.pulse().k();
        assert!(pc.u.abs() * k < 1e-6);
        assert!((ph - (0.2 + 0.2 - 0.3)).abs() <= pc.u.abs() * k + 1e-15);
    }

    #[test]
    fn phase_rejects_far_z() {
        let cache = reference_cache();
        let z = 0.6 / cache.pulse().k();
        assert!(plane_wave_phase([0.0, 0.0, z], [0.0; 3], [0.0; 3], 1.0, &cache).is_err());
    }

    #[test]
    fn tilde_examples() {
        let (a, b) = to_tilde((1.0, 0.0));
        assert!((a - FRAC_1_SQRT_2).abs() < 1e-16 && (b + FRAC_1_SQRT_2).abs() < 1e-16);
        let (a, b) = to_tilde((1.0, 1.0));
        assert!((a - 2f64.sqrt()).abs() < 1e-15 && b == 0.0);
    }

    proptest! {
        #[test]
        fn tilde_round_trip(x in -1e3f64..1e3, z in -1e3f64..1e3) {
            let (bx, bz) = from_tilde(to_tilde((x, z)));
            prop_assert!((bx - x).abs() <= 4.0 * f64::EPSILON * (x.abs() + z.abs()));
            prop_assert!((bz - z).abs() <= 4.0 * f64::EPSILON * (x.abs() + z.abs()));
        }

        #[test]
        fn maximum_equals_classical(frac in 0.0f64..1.0, px in -2.0f64..2.0, pz in -2.0f64..2.0, z0 in -20.0f64..20.0) {
            let cache = reference_cache();
            let t = frac * cache.t_end();
            let spec = PacketSpec::symmetric([px, 0.3, pz], [1.0, -2.0, z0], 0.05, 0.05).unwrap();
            let m = maximum_position(t, &spec, &cache);
            let a = analytic_position(t, &spec.classical_init(), &cache);
            for i in 0..3 {
                prop_assert!((m[i] - a[i]).abs() <= 1e-12 * a[i].abs().max(1.0));
            }
        }

        #[test]
        fn effective_times_sum(frac in 0.0f64..1.0) {
            let cache = reference_cache();
            let t = frac * cache.t_end();
            let e = effective_times(t, &cache);
            prop_assert!((e.lambda1 + e.lambda2 - 2.0 * t).abs() <= 4.0 * f64::EPSILON * t.max(1.0));
        }

        #[test]
        fn shear_sign_follows_field(frac in 0.0f64..1.0) {
            let cache = reference_cache();
            let pulse = cache.pulse();
            let t = frac * cache.t_end();
            let r = width_ratio(t, &rest_spec(), pulse).unwrap() - 1.0;
            let a = pulse.a_at(t);
            prop_assert!(r.signum() == a.signum() || a == 0.0);
            let dtheta = principal_angle(t, pulse) - FRAC_PI_4;
            prop_assert!((dtheta - a / (4.0 * pulse.c().powi(2))).abs() < 1e-15);
        }

        #[test]
        fn density_positive_and_peaked(frac in 0.0f64..1.0, dx in -60.0f64..60.0, dz in -60.0f64..60.0) {
            let cache = reference_cache();
            let spec = rest_spec();
            let t = frac * cache.t_end();
            let peak = density_peak(t, &spec, &cache);
            let top = density(peak, t, &spec, &cache);
            let off = density([peak[0] + dx, peak[1], peak[2] + dz], t, &spec, &cache);
            prop_assert!(off > 0.0);
            prop_assert!(off <= top);
        }
    }

    #[test]
    fn free_maximum_moves_uniformly() {
        let cache = free_cache();
        let spec = PacketSpec::symmetric([0.1, 0.2, -0.3], [1.0, 1.0, 1.0], 0.05, 0.05).unwrap();
        let m = maximum_position(100.0, &spec, &cache);
        assert_eq!(m, [11.0, 21.0, -29.0]);
    }

    #[test]
    fn rest_packet_drifts_after_pulse() {
        let cache = reference_cache();
        let t = cache.t_end();
        let m = maximum_position(t, &rest_spec(), &cache);
        let drift = crate::classical::drift_displacement(&cache, t);
        assert!(m[0].abs() < 1e-6 * drift);
        assert!((m[2] - drift).abs() < 1e-12 * drift);
    }

    #[test]
    fn peak_density_is_product_of_prefactors() {
        let cache = reference_cache();
        let spec = PacketSpec::new([0.1, 0.0, -0.05], [0.0; 3], 0.05, 0.04, 0.06).unwrap();
        for t in [0.0, 200.0, 368.7, 500.0] {
            let peak = density_peak(t, &spec, &cache);
            let got = density(peak, t, &spec, &cache);
            let expected: f64 = separated_phases(peak, t, &spec, &cache)
                .iter()
                .map(|ax| {
                    let s = 0.5 * ax.dp * ax.dp * ax.lambda;
                    ax.dp / (2.0 * PI).sqrt() / (1.0 + s * s).sqrt()
                })
                .product();
            assert!((got - expected).abs() < 1e-10 * expected, "t {t}: {got} vs {expected}");
        }
    }

    #[test]
    fn density_peak_differs_from_maximum_by_drift_term() {
        let cache = reference_cache();
        let spec = rest_spec();
        let pulse = cache.pulse();
        let c = pulse.c();
        let t = 300.0;
        let m = maximum_position(t, &spec, &cache);
        let d = density_peak(t, &spec, &cache);
        assert_eq!(m[2], d[2]);
        assert!((d[0] - m[0] - m[2] * pulse.a_at(t) / (c * c)).abs() < 1e-9 * d[0].abs().max(1.0));
    }

    #[test]
    fn free_initial_packet_is_isotropic() {
        let cache = free_cache();
        let spec = rest_spec();
        let dp: f64 = 0.05;
        let peak = density(spec.x0, 0.0, &spec, &cache);
        assert!((peak - (dp / (2.0 * PI).sqrt()).powi(3)).abs() < 1e-15);
        let w = 2f64.sqrt() / dp;
        for dir in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.0, 0.8]] {
            let x = [dir[0] * w, dir[1] * w, dir[2] * w];
            let ratio = density(x, 0.0, &spec, &cache) / peak;
            assert!((ratio - (-1f64).exp()).abs() < 1e-14, "{dir:?}: {ratio}");
        }
    }

    #[test]
    fn free_density_matches_textbook_packet() {
        let cache = free_cache();
        let spec = PacketSpec::symmetric([0.2, -0.1, 0.05], [3.0, 0.0, -4.0], 0.05, 0.07).unwrap();
        for &t in &[0.0, 120.0, 650.0] {
            for &(x, y, z) in &[(0.0, 0.0, 0.0), (30.0, -20.0, 10.0), (-15.0, 40.0, 60.0)] {
                let mut expected = 1.0;
                for (i, (dp, q)) in [(0.05, x), (0.07, y), (0.05, z)].into_iter().enumerate() {
                    let width2 = free_spread(dp, t);
                    let centre = spec.x0[i] + spec.p0[i] * t;
                    expected *= (1.0 / (PI * width2)).sqrt() * (-(q - centre).powi(2) / width2).exp();
                }
                let got = density([x, y, z], t, &spec, &cache);
                assert!((got - expected).abs() < 1e-12 * expected, "t {t}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn closed_form_1d_examples() {
        let dp = 0.05;
        let on_peak = gaussian_closed_form_1d(0.3, 0.0, -100.0, dp);
        let s: f64 = 0.5 * dp * dp * -100.0;
        assert!((on_peak.density - dp / (2.0 * PI).sqrt() / (1.0 + s * s).sqrt()).abs() < 1e-16);
        let off = gaussian_closed_form_1d(0.0, 2.0 / dp, 0.0, dp);
        assert!((off.density - dp / (2.0 * PI).sqrt() * (-2f64).exp()).abs() < 1e-16);
        for (f0, f1, f2) in [(0.1, 3.0, -50.0), (2.0, -10.0, 300.0)] {
            let cf = gaussian_closed_form_1d(f0, f1, f2, dp);
            assert!((cf.amplitude.norm_sqr() - cf.density).abs() < 1e-14 * cf.density);
        }
    }

    #[test]
    fn widths_free_spread() {
        let cache = free_cache();
        let spec = rest_spec();
        let w0 = widths(0.0, &spec, cache.pulse()).unwrap();
        let expected = 2f64.sqrt() / 0.05;
        assert!((w0.x - expected).abs() < 1e-12 && (w0.z - expected).abs() < 1e-12 && (w0.y - expected).abs() < 1e-12);
        for t in [10.0, 300.0, 700.0] {
            let w = widths(t, &spec, cache.pulse()).unwrap();
            let law = (2.0 / 0.0025 * (1.0 + (0.5 * 0.0025 * t).powi(2))).sqrt();
            assert!((w.x - law).abs() < 1e-12 * law);
            assert_eq!(w.x, w.z);
        }
    }

    #[test]
    fn widths_asymptotic_slope() {
        let cache = reference_cache();
        let spec = rest_spec();
        let pulse = cache.pulse();
        let t = 1.0e7;
        let w = widths(t, &spec, pulse).unwrap();
        let shear = pulse.a_at(t) / (2.0 * pulse.c().powi(2));
        let slope = 0.05 / 2f64.sqrt() * (1.0 + shear).sqrt();
        assert!((w.x / t - slope).abs() < 1e-6 * slope);
    }

    #[test]
    fn asymmetric_packet_rejected_for_closed_forms() {
        let cache = reference_cache();
        let spec = PacketSpec::new([0.0; 3], [0.0; 3], 0.05, 0.05, 0.06).unwrap();
        assert!(matches!(widths(10.0, &spec, cache.pulse()), Err(Error::AxialSymmetryRequired { .. })));
        assert!(width_ratio(10.0, &spec, cache.pulse()).is_err());
        assert!(snapshot(10.0, &spec, &cache).is_err());
        assert!(density([0.0; 3], 10.0, &spec, &cache) > 0.0);
    }

    #[test]
    fn invalid_widths_rejected() {
        assert!(PacketSpec::new([0.0; 3], [0.0; 3], 0.0, 0.05, 0.05).is_err());
        assert!(PacketSpec::new([0.0; 3], [0.0; 3], 0.05, -1.0, 0.05).is_err());
    }

    #[test]
    fn ratio_consistency_with_widths() {
        let cache = reference_cache();
        let spec = rest_spec();
        let pulse = cache.pulse();
        let c2 = pulse.c().powi(2);
        for i in 0..100 {
            let t = cache.t_end() * i as f64 / 100.0;
            let w = widths(t, &spec, pulse).unwrap();
            let r = width_ratio(t, &spec, pulse).unwrap();
            let a = pulse.a_at(t) / c2;
            assert!((w.x / w.z - r).abs() <= a * a, "t {t}");
        }
    }

    #[test]
    fn snapshot_at_start() {
        let cache = reference_cache();
        let spec = PacketSpec::symmetric([0.0; 3], [1.0, 2.0, 3.0], 0.05, 0.05).unwrap();
        let s = snapshot(0.0, &spec, &cache).unwrap();
        let a0 = cache.pulse().a_at(0.0) / cache.pulse().c().powi(2);
        assert!((s.x_max[0] - 1.0).abs() <= 3.0 * a0.abs() + 1e-15);
        assert_eq!([s.x_max[1], s.x_max[2]], [2.0, 3.0]);
        assert!((s.theta - FRAC_PI_4).abs() < a0.abs() + 1e-15);
        assert!((s.width_x - 2f64.sqrt() / 0.05).abs() < 1e-3);
        assert_eq!(s.ratio, s.width_x / s.width_z);
    }

    #[test]
    fn exact_axes_reduce_to_free_widths() {
        let cache = free_cache();
        let spec = rest_spec();
        for t in [0.0, 400.0] {
            let ax = exact_principal_axes(t, &spec, &cache);
            let w = widths(t, &spec, cache.pulse()).unwrap();
            assert!((ax.width_x - w.x).abs() < 1e-10 * w.x);
            assert!((ax.width_z - w.z).abs() < 1e-10 * w.z);
            assert!(ax.covariance[0][1].abs() < 1e-9 * ax.covariance[0][0]);
        }
    }
}
