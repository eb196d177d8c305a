//! The space-time periodic effective magnetic field `B(t, x)` that couples
//! the internal levels of the atom, and the geometry of its unit cell.
//!
//! ```text
//! B1 = alpha cos(k x) cos(w t)
//! B2 = alpha sin(k x) sin(w t)
//! B3 = gamma + nu cos(w t)
//! ```
//!
//! Units have hbar = 1. The field is periodic with period `T = 2 pi / w` in
//! time and wavelength `lambda = 2 pi / k` in space.

use core::f64::consts::TAU;
use core::ops::{Add, Mul, Sub};

use libm::{cos, sin, sqrt};

use crate::error::{Error, Result};

/// Relative degeneracy threshold: `|B|` below `DEGENERACY_REL * energy_scale`
/// counts as a closed gap.
pub const DEGENERACY_REL: f64 = 1e-12;

/// Default grid for [`FieldParams::is_gapped`].
pub const GAP_CHECK_GRID: usize = 256;

/// A three-component field value (or one of its partial derivatives).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BVector {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl BVector {
    pub const fn new(b1: f64, b2: f64, b3: f64) -> Self {
        Self { b1, b2, b3 }
    }

    pub fn dot(&self, o: &BVector) -> f64 {
        self.b1 * o.b1 + self.b2 * o.b2 + self.b3 * o.b3
    }

    pub fn cross(&self, o: &BVector) -> BVector {
        BVector {
            b1: self.b2 * o.b3 - self.b3 * o.b2,
            b2: self.b3 * o.b1 - self.b1 * o.b3,
            b3: self.b1 * o.b2 - self.b2 * o.b1,
        }
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.b1, self.b2, self.b3]
    }

    pub fn is_finite(&self) -> bool {
        self.b1.is_finite() && self.b2.is_finite() && self.b3.is_finite()
    }
}

impl Add for BVector {
    type Output = BVector;
    fn add(self, o: BVector) -> BVector {
        BVector::new(self.b1 + o.b1, self.b2 + o.b2, self.b3 + o.b3)
    }
}

impl Sub for BVector {
    type Output = BVector;
    fn sub(self, o: BVector) -> BVector {
        BVector::new(self.b1 - o.b1, self.b2 - o.b2, self.b3 - o.b3)
    }
}

impl Mul<f64> for BVector {
    type Output = BVector;
    fn mul(self, s: f64) -> BVector {
        BVector::new(self.b1 * s, self.b2 * s, self.b3 * s)
    }
}

/// Partial derivatives of `B` at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldDerivatives {
    pub dt: BVector,
    pub dx: BVector,
}

/// Anything that maps the space-time unit cell smoothly into R^3.
///
/// [`FieldParams`] is the physical instance; the topology oracles accept any
/// implementor so they can be exercised on other maps.
pub trait SpaceTimeField {
    fn sample(&self, t: f64, x: f64) -> BVector;
    fn derivatives(&self, t: f64, x: f64) -> FieldDerivatives;
    /// `(T, lambda)`, the extent of the unit cell.
    fn cell(&self) -> (f64, f64);
    /// `|B|` below this value is treated as a gap closure.
    fn degeneracy_threshold(&self) -> f64;
}

/// The five physical parameters of the dressed-atom field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Rabi amplitude.
    pub alpha: f64,
    /// Amplitude of the detuning modulation.
    pub nu: f64,
    /// Static detuning.
    pub gamma: f64,
    /// Drive angular frequency.
    pub omega_tilde: f64,
    /// Wave number of the coupling lasers.
    pub k: f64,
}

impl Default for FieldParams {
    /// `alpha = nu = omega_tilde = k = 1`, `gamma = 0.5`: the `c1 = +4` phase.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            nu: 1.0,
            gamma: 0.5,
            omega_tilde: 1.0,
            k: 1.0,
        }
    }
}

impl FieldParams {
    /// Validated constructor.
    pub fn new(alpha: f64, nu: f64, gamma: f64, omega_tilde: f64, k: f64) -> Result<Self> {
        let p = Self {
            alpha,
            nu,
            gamma,
            omega_tilde,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.nu, self.gamma, self.omega_tilde, self.k]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("field parameters must be finite"));
        }
        if self.alpha < 0.0 {
            return Err(Error::invalid("alpha must be >= 0"));
        }
        if self.nu < 0.0 {
            return Err(Error::invalid("nu must be >= 0"));
        }
        if self.omega_tilde <= 0.0 {
            return Err(Error::invalid("omega_tilde must be > 0"));
        }
        if self.k <= 0.0 {
            return Err(Error::invalid("k must be > 0"));
        }
        Ok(())
    }

    /// Same parameters with `gamma = ratio * nu`.
    pub fn with_gamma_over_nu(self, ratio: f64) -> Self {
        Self {
            gamma: ratio * self.nu,
            ..self
        }
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega_tilde
    }

    pub fn wavelength(&self) -> f64 {
        TAU / self.k
    }

    /// Detuning `gamma + nu cos(w t)`.
    pub fn detuning(&self, t: f64) -> f64 {
        self.gamma + self.nu * cos(self.omega_tilde * t)
    }

    /// Energy scale used for the degeneracy threshold: `alpha`, or the
    /// largest of `nu` and `|gamma|` when the coupling is switched off.
    pub fn energy_scale(&self) -> f64 {
        if self.alpha > 0.0 {
            self.alpha
        } else {
            self.nu.max(self.gamma.abs())
        }
    }

    pub fn sample(&self, t: f64, x: f64) -> BVector {
        let (st, ct) = (sin(self.omega_tilde * t), cos(self.omega_tilde * t));
        let (sx, cx) = (sin(self.k * x), cos(self.k * x));
        BVector {
            b1: self.alpha * cx * ct,
            b2: self.alpha * sx * st,
            b3: self.gamma + self.nu * ct,
        }
    }

    /// Closed-form `(dB/dt, dB/dx)`.
    pub fn derivatives(&self, t: f64, x: f64) -> FieldDerivatives {
        let (w, k, a) = (self.omega_tilde, self.k, self.alpha);
        let (st, ct) = (sin(w * t), cos(w * t));
        let (sx, cx) = (sin(k * x), cos(k * x));
        FieldDerivatives {
            dt: BVector {
                b1: -a * w * cx * st,
                b2: a * w * sx * ct,
                b3: -self.nu * w * st,
            },
            dx: BVector {
                b1: -a * k * sx * ct,
                b2: a * k * cx * st,
                b3: 0.0,
            },
        }
    }

    /// Minimum of `|B|` over an `n_grid x n_grid` uniform sampling of the
    /// cell (nodes `i T / n`, `j lambda / n`). Only a lower-bound indicator:
    /// the true minimum can sit between nodes.
    pub fn min_gap(&self, n_grid: usize) -> Result<f64> {
        if n_grid < 16 {
            return Err(Error::invalid("min_gap needs n_grid >= 16"));
        }
        let (period, wavelength) = (self.period(), self.wavelength());
        let mut min = f64::INFINITY;
        for i in 0..n_grid {
            let t = period * i as f64 / n_grid as f64;
            for j in 0..n_grid {
                let x = wavelength * j as f64 / n_grid as f64;
                min = min.min(self.sample(t, x).norm());
            }
        }
        Ok(min)
    }

    /// `min_gap` on the default grid is above the degeneracy threshold.
    pub fn is_gapped(&self) -> bool {
        self.min_gap(GAP_CHECK_GRID)
            .map(|g| g > self.degeneracy_threshold())
            .unwrap_or(false)
    }

    /// `Ok(|B|)` or a [`Error::Degenerate`] when the gap closes at `(t, x)`.
    pub fn gap_at(&self, t: f64, x: f64) -> Result<f64> {
        check_gap(self.sample(t, x).norm(), self.degeneracy_threshold(), t, x)
    }
}

pub(crate) fn check_gap(magnitude: f64, threshold: f64, t: f64, x: f64) -> Result<f64> {
    if magnitude <= threshold || !magnitude.is_finite() {
        Err(Error::Degenerate {
            t,
            x,
            magnitude,
            threshold,
        })
    } else {
        Ok(magnitude)
    }
}

impl SpaceTimeField for FieldParams {
    fn sample(&self, t: f64, x: f64) -> BVector {
        FieldParams::sample(self, t, x)
    }

    fn derivatives(&self, t: f64, x: f64) -> FieldDerivatives {
        FieldParams::derivatives(self, t, x)
    }

    fn cell(&self) -> (f64, f64) {
        (self.period(), self.wavelength())
    }

    fn degeneracy_threshold(&self) -> f64 {
        DEGENERACY_REL * self.energy_scale()
    }
}

impl FieldParams {
    pub fn degeneracy_threshold(&self) -> f64 {
        SpaceTimeField::degeneracy_threshold(self)
    }
}

/// Wraps `value` into `[0, period)`. Idempotent, including for values that
/// round up to `period`.
pub fn wrap(value: f64, period: f64) -> f64 {
    let r = value - period * libm::floor(value / period);
    if r >= period || r < 0.0 {
        0.0
    } else {
        r
    }
}
