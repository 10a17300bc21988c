//! Cumulative integrals of the vector potential on a time grid.
//!
//! Every closed form in this crate consumes `I1(t) = ∫₀ᵗ A dt'` and
//! `I2(t) = ∫₀ᵗ A² dt'`. The cache stores both at the grid nodes; a query
//! between nodes adds a direct Gauss-Kronrod integral from the preceding node,
//! so queried values are smooth in `t` and accurate to quadrature tolerance.
//! The field is treated as switched off after [`Pulse::support_end`]: the
//! integrals are constant beyond it.

use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::quadrature::{integrate, Tolerance};
use std::sync::Arc;

/// Minimum number of grid nodes accepted by [`build_cache`].
pub const MIN_SAMPLES: usize = 16;

/// Default node density.
pub const SAMPLES_PER_PERIOD: usize = 64;

/// The two field functionals at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldIntegrals {
    /// ∫₀ᵗ A dt'
    pub int_a: f64,
    /// ∫₀ᵗ A² dt'
    pub int_a2: f64,
}

#[derive(Debug, Clone)]
pub struct QuadratureCache {
    pulse: Arc<dyn Pulse>,
    t_grid: Vec<f64>,
    int_a: Vec<f64>,
    int_a2: Vec<f64>,
    tol: Tolerance,
}

/// Builds the cache on a uniform grid `0 = t_0 < ... < t_{n-1} = t_end`,
/// integrating each panel adaptively.
pub fn build_cache(pulse: Arc<dyn Pulse>, t_end: f64, n_samples: usize) -> Result<QuadratureCache> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("t_end must be > 0, got {t_end}")));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be >= {MIN_SAMPLES}, got {n_samples}"
        )));
    }
    let tol = Tolerance::default();
    let dt = t_end / (n_samples - 1) as f64;
    let t_grid: Vec<f64> = (0..n_samples)
        .map(|i| if i == n_samples - 1 { t_end } else { i as f64 * dt })
        .collect();
    let mut int_a = Vec::with_capacity(n_samples);
    let mut int_a2 = Vec::with_capacity(n_samples);
    let (mut acc_a, mut acc_a2) = (0.0, 0.0);
    int_a.push(0.0);
    int_a2.push(0.0);
    let stop = pulse.support_end();
    for w in t_grid.windows(2) {
        let (lo, hi) = (w[0].min(stop), w[1].min(stop));
        if hi > lo {
            acc_a += integrate(|t| pulse.a_at(t), lo, hi, tol)?.value;
            acc_a2 += integrate(|t| pulse.a_at(t).powi(2), lo, hi, tol)?.value.max(0.0);
        }
        int_a.push(acc_a);
        int_a2.push(acc_a2);
    }
    Ok(QuadratureCache {
        pulse,
        t_grid,
        int_a,
        int_a2,
        tol,
    })
}

/// Builds a cache spanning `[0, t_end]` with [`SAMPLES_PER_PERIOD`] nodes per
/// carrier period.
pub fn build_default_cache(pulse: Arc<dyn Pulse>, t_end: f64) -> Result<QuadratureCache> {
    let periods = t_end / pulse.carrier_period();
    let n = ((periods * SAMPLES_PER_PERIOD as f64).ceil() as usize + 1).max(MIN_SAMPLES);
    build_cache(pulse, t_end, n)
}

impl QuadratureCache {
    pub fn pulse(&self) -> &dyn Pulse {
        self.pulse.as_ref()
    }

    pub fn pulse_arc(&self) -> Arc<dyn Pulse> {
        Arc::clone(&self.pulse)
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn int_a_nodes(&self) -> &[f64] {
        &self.int_a
    }

    pub fn int_a2_nodes(&self) -> &[f64] {
        &self.int_a2
    }

    pub fn t_end(&self) -> f64 {
        *self.t_grid.last().expect("grid is never empty")
    }

    /// Whether `t` lies on the tabulated span.
    pub fn contains(&self, t: f64) -> bool {
        (0.0..=self.t_end()).contains(&t)
    }

    fn direct(&self, lo: f64, hi: f64) -> FieldIntegrals {
        let p = self.pulse.as_ref();
        let stop = p.support_end();
        let (lo, hi) = (lo.min(stop), hi.min(stop));
        if lo == hi {
            return FieldIntegrals::default();
        }
        // Panels are short; a failure here means the pulse is not smooth on the
        // grid scale, in which case the best estimate is still returned.
        let one = |f: &dyn Fn(f64) -> f64| match integrate(f, lo, hi, self.tol) {
            Ok(e) => e.value,
            Err(err) => {
                log::warn!("cache query [{lo}, {hi}]: {err}");
                crate::quadrature::gk15(&f, lo, hi).0
            }
        };
        FieldIntegrals {
            int_a: one(&|t| p.a_at(t)),
            int_a2: one(&|t| p.a_at(t).powi(2)),
        }
    }

    /// `∫₀ᵗ A` and `∫₀ᵗ A²`. Times outside `[0, t_end]` are integrated directly
    /// from the nearest end of the grid; nothing accumulates past the support.
    pub fn integrals(&self, t: f64) -> FieldIntegrals {
        let n = self.t_grid.len();
        let (node, base) = if t <= 0.0 {
            (0, FieldIntegrals::default())
        } else if t >= self.t_end() {
            (
                n - 1,
                FieldIntegrals {
                    int_a: self.int_a[n - 1],
                    int_a2: self.int_a2[n - 1],
                },
            )
        } else {
            let i = self.t_grid.partition_point(|&g| g <= t) - 1;
            (
                i,
                FieldIntegrals {
                    int_a: self.int_a[i],
                    int_a2: self.int_a2[i],
                },
            )
        };
        let t0 = self.t_grid[node];
        if t == t0 {
            return base;
        }
        let d = self.direct(t0, t);
        FieldIntegrals {
            int_a: base.int_a + d.int_a,
            int_a2: base.int_a2 + d.int_a2,
        }
    }

    pub fn int_a(&self, t: f64) -> f64 {
        self.integrals(t).int_a
    }

    pub fn int_a2(&self, t: f64) -> f64 {
        self.integrals(t).int_a2
    }

    /// Integral of |A| over the grid span, used as a scale for the net-area check.
    pub fn abs_area(&self) -> Result<f64> {
        let p = self.pulse.as_ref();
        let mut acc = 0.0;
        for w in self.t_grid.windows(2) {
            acc += integrate(|t| p.a_at(t).abs(), w[0], w[1], self.tol)?.value;
        }
        Ok(acc)
    }
}
