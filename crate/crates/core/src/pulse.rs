//! Linearly polarized plane-wave pulses in atomic units.
//!
//! The vector potential points along x and depends on the laser phase
//! `phi = omega t - k z` with `k = omega / c`. All closed forms downstream
//! consume it either directly or through the cumulative integrals held by
//! [`crate::cache::QuadratureCache`].

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Speed of light in atomic units (CODATA 2018).
pub const SPEED_OF_LIGHT_AU: f64 = 137.035_999_084;

/// Angular frequency of 800 nm light in atomic units.
pub const OMEGA_800NM_AU: f64 = 0.056_954;

/// |kz| above which the first-order field expansion is flagged as degraded.
pub const KZ_WARN: f64 = 0.1;

/// |kz| above which the first-order field expansion is rejected.
pub const KZ_LIMIT: f64 = 0.5;

/// Run constants. Only `c` is free: hbar = m = e = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c: SPEED_OF_LIGHT_AU,
        }
    }
}

impl Constants {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        Ok(Self { c })
    }
}

/// Electric and magnetic field components of the x-polarized wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fields {
    pub e_x: f64,
    pub b_y: f64,
}

/// A vector potential `A(phi)` with its phase derivatives.
pub trait Pulse: Send + Sync + std::fmt::Debug {
    /// A(phi) in atomic units.
    fn potential(&self, phase: f64) -> f64;

    /// dA/dphi.
    fn potential_prime(&self, phase: f64) -> f64;

    /// d²A/dphi². Defaults to a fourth-order central difference of
    /// [`Pulse::potential_prime`] with h = 1e-4 rad.
    fn potential_second(&self, phase: f64) -> f64 {
        const H: f64 = 1e-4;
        let f = |d: f64| self.potential_prime(phase + d);
        (-f(2.0 * H) + 8.0 * f(H) - 8.0 * f(-H) + f(-2.0 * H)) / (12.0 * H)
    }

    fn omega(&self) -> f64;

    fn c(&self) -> f64;

    /// Time after which the field is treated as switched off.
    fn support_end(&self) -> f64;

    /// Upper bound on |A| used for validity checks and plots.
    fn peak_bound(&self) -> f64;

    fn k(&self) -> f64 {
        self.omega() / self.c()
    }

    fn carrier_period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    /// A(omega t), the potential seen at z = 0.
    fn a_at(&self, t: f64) -> f64 {
        self.potential(self.omega() * t)
    }

    /// A'(omega t).
    fn a_prime_at(&self, t: f64) -> f64 {
        self.potential_prime(self.omega() * t)
    }
}

/// Classifies `|kz|` against the first-order expansion limits.
///
/// Returns `Ok(true)` when a warning was emitted.
pub fn check_kz(kz: f64) -> Result<bool> {
    let m = kz.abs();
    if m > KZ_LIMIT || !m.is_finite() {
        return Err(Error::ValidityDomainExceeded { kz, limit: KZ_LIMIT });
    }
    if m > KZ_WARN {
        log::warn!("|kz| = {m:.3} exceeds {KZ_WARN}; first-order field expansion is degraded");
        return Ok(true);
    }
    Ok(false)
}

pub fn eval_a(pulse: &dyn Pulse, t: f64) -> f64 {
    pulse.a_at(t)
}

pub fn eval_a_prime(pulse: &dyn Pulse, t: f64) -> f64 {
    pulse.a_prime_at(t)
}

/// Fields of the expanded vector potential `A(omega t) - kz A'(omega t)`:
/// `E_x = -(omega/c)(A' - kz A'')`, `B_y = -k A'`.
pub fn eval_fields(pulse: &dyn Pulse, t: f64, z: f64) -> Result<Fields> {
    let k = pulse.k();
    let kz = k * z;
    check_kz(kz)?;
    let phase = pulse.omega() * t;
    let ap = pulse.potential_prime(phase);
    let app = if kz == 0.0 {
        0.0
    } else {
        pulse.potential_second(phase)
    };
    Ok(Fields {
        e_x: -(pulse.omega() / pulse.c()) * (ap - kz * app),
        b_y: -k * ap,
    })
}

/// Gaussian-enveloped sine:
/// `A(phi) = R c² sin(phi - phi0) exp[-((phi - phi0)/delta_z)²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSinePulse {
    /// Peak dimensionless amplitude, max|A|/c² bound.
    pub amplitude: f64,
    /// Envelope width in radians of phase.
    pub delta_z: f64,
    /// Phase of the envelope centre.
    pub phi0: f64,
    pub omega: f64,
    pub c: f64,
}

impl GaussianSinePulse {
    pub fn new(amplitude: f64, delta_z: f64, phi0: f64, omega: f64, constants: Constants) -> Result<Self> {
        let bad = |what: &str, v: f64| Error::InvalidParameter(format!("{what} = {v}"));
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(bad("amplitude R must be >= 0", amplitude));
        }
        if !(delta_z.is_finite() && delta_z > 0.0) {
            return Err(bad("delta_z must be > 0", delta_z));
        }
        if !(phi0.is_finite() && phi0 > 0.0) {
            return Err(bad("phi0 must be > 0", phi0));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(bad("omega must be > 0", omega));
        }
        Ok(Self {
            amplitude,
            delta_z,
            phi0,
            omega,
            c: constants.c,
        })
    }

    /// The few-cycle example pulse: R = 0.25, delta_z = 6, phi0 = 3.5 delta_z, 800 nm.
    pub fn reference() -> Self {
        Self {
            amplitude: 0.25,
            delta_z: 6.0,
            phi0: 21.0,
            omega: OMEGA_800NM_AU,
            c: SPEED_OF_LIGHT_AU,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    fn scale(&self) -> f64 {
        self.amplitude * self.c * self.c
    }
}

impl Pulse for GaussianSinePulse {
    fn potential(&self, phase: f64) -> f64 {
        let u = phase - self.phi0;
        let env = (-(u / self.delta_z).powi(2)).exp();
        self.scale() * u.sin() * env
    }

    fn potential_prime(&self, phase: f64) -> f64 {
        let u = phase - self.phi0;
        let d2 = self.delta_z * self.delta_z;
        let env = (-u * u / d2).exp();
        self.scale() * env * (u.cos() - 2.0 * u / d2 * u.sin())
    }

    fn potential_second(&self, phase: f64) -> f64 {
        let u = phase - self.phi0;
        let d2 = self.delta_z * self.delta_z;
        let env = (-u * u / d2).exp();
        let (s, c) = u.sin_cos();
        self.scale() * env * (s * (-1.0 - 2.0 / d2 + 4.0 * u * u / (d2 * d2)) - 4.0 * u / d2 * c)
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn c(&self) -> f64 {
        self.c
    }

    fn support_end(&self) -> f64 {
        2.0 * self.phi0 / self.omega
    }

    fn peak_bound(&self) -> f64 {
        self.scale()
    }
}

/// Field-free reference, `A = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPulse {
    pub omega: f64,
    pub c: f64,
    pub duration: f64,
}

impl ZeroPulse {
    pub fn new(omega: f64, c: f64, duration: f64) -> Self {
        Self { omega, c, duration }
    }
}

impl Default for ZeroPulse {
    fn default() -> Self {
        Self::new(OMEGA_800NM_AU, SPEED_OF_LIGHT_AU, 2.0 * 21.0 / OMEGA_800NM_AU)
    }
}

impl Pulse for ZeroPulse {
    fn potential(&self, _phase: f64) -> f64 {
        0.0
    }

    fn potential_prime(&self, _phase: f64) -> f64 {
        0.0
    }

    fn potential_second(&self, _phase: f64) -> f64 {
        0.0
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn c(&self) -> f64 {
        self.c
    }

    fn support_end(&self) -> f64 {
        self.duration
    }

    fn peak_bound(&self) -> f64 {
        0.0
    }
}

/// Sine carrier under a sin² envelope spanning `cycles` carrier periods,
/// zero outside `[0, 2 pi cycles]`. Has no closed-form A''.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sin2Pulse {
    pub amplitude: f64,
    pub cycles: f64,
    pub omega: f64,
    pub c: f64,
}

impl Sin2Pulse {
    fn span(&self) -> f64 {
        2.0 * PI * self.cycles
    }
}

impl Pulse for Sin2Pulse {
    fn potential(&self, phase: f64) -> f64 {
        if !(0.0..=self.span()).contains(&phase) {
            return 0.0;
        }
        let env = (PI * phase / self.span()).sin().powi(2);
        self.amplitude * self.c * self.c * env * phase.sin()
    }

    fn potential_prime(&self, phase: f64) -> f64 {
        if !(0.0..=self.span()).contains(&phase) {
            return 0.0;
        }
        let q = PI / self.span();
        let (s, c) = (q * phase).sin_cos();
        let env = s * s;
        let denv = 2.0 * q * s * c;
        self.amplitude * self.c * self.c * (denv * phase.sin() + env * phase.cos())
    }

    fn omega(&self) -> f64 {
        self.omega
    }

    fn c(&self) -> f64 {
        self.c
    }

    fn support_end(&self) -> f64 {
        self.span() / self.omega
    }

    fn peak_bound(&self) -> f64 {
        self.amplitude * self.c * self.c
    }
}
