//! Gauge-invariant geometry of the dressed bands: the synthetic electric
//! field, plaquette Berry phases, the quantum metric `g11` and the forces
//! that drive the classical centre-of-mass motion.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{check_gap, FieldParams};
use crate::linalg::{inner, C64};
use crate::spin::{eigensystem_for, Band, HermitianField};
use crate::HBAR;

/// Link overlaps below this modulus make the plaquette phase meaningless.
pub const MIN_LINK_OVERLAP: f64 = 1e-6;

/// Step used for `dg11/dx`, as a fraction of the wavelength.
pub const METRIC_STEP_FRACTION: f64 = 1e-5;

/// Synthetic electric field on a unit charge,
/// `E = hbar B . (dB/dx x dB/dt) / |B|^3`.
pub fn electric_field(params: &FieldParams, t: f64, x: f64) -> Result<f64> {
    let b = params.sample(t, x);
    let mag = check_gap(b.norm(), params.degeneracy_threshold(), t, x)?;
    let d = params.derivatives(t, x);
    Ok(HBAR * b.dot(&d.dx.cross(&d.dt)) / (mag * mag * mag))
}

/// Berry phase around the closed loop `s0 -> s1 -> s2 -> s3 -> s0`:
/// `-arg(<s0|s1><s1|s2><s2|s3><s3|s0>)`, in `(-pi, pi]`.
///
/// Every state appears once as a bra and once as a ket, so the result does
/// not depend on the phases of the inputs.
pub fn loop_phase(states: [&[C64]; 4]) -> Result<f64> {
    let mut product = C64::new(1.0, 0.0);
    for i in 0..4 {
        let link = inner(states[i], states[(i + 1) % 4]);
        let modulus = link.norm();
        if !(modulus >= MIN_LINK_OVERLAP) {
            return Err(Error::ZeroOverlap { modulus });
        }
        product *= link / modulus;
    }
    let phase = -product.arg();
    Ok(if phase <= -PI { PI } else { phase })
}

/// Berry phase of band `band` around the plaquette with the given corners,
/// traversed in order. For the counter-clockwise `(t, x)` loop
/// `(t,x) -> (t+dt,x) -> (t+dt,x+dx) -> (t,x+dx)` of the top spin-1 band
/// this approximates `E dt dx / hbar`.
pub fn plaquette_curvature(
    field: &HermitianField,
    band: Band,
    corners: [(f64, f64); 4],
) -> Result<f64> {
    let s0 = field.band_state_at(band, corners[0].0, corners[0].1)?;
    let s1 = field.band_state_at(band, corners[1].0, corners[1].1)?;
    let s2 = field.band_state_at(band, corners[2].0, corners[2].1)?;
    let s3 = field.band_state_at(band, corners[3].0, corners[3].1)?;
    loop_phase([&s0.state, &s1.state, &s2.state, &s3.state])
}

/// Corners of the axis-aligned plaquette at `(t, x)` with sides `(dt, dx)`,
/// in the orientation used throughout.
pub fn plaquette_corners(t: f64, x: f64, dt: f64, dx: f64) -> [(f64, f64); 4] {
    [(t, x), (t + dt, x), (t + dt, x + dx), (t, x + dx)]
}

/// `g_xx` of band `band`:
/// `sum_{j != band} |<eta_band| dM/dx |eta_j>|^2 / (eps_j - eps_band)^2`.
pub fn quantum_metric(field: &HermitianField, band: Band, t: f64, x: f64) -> Result<f64> {
    let pos = field.rep.band_position(band)?;
    let params = &field.params;
    let b = params.sample(t, x);
    check_gap(b.norm(), params.degeneracy_threshold(), t, x)?;
    let states = eigensystem_for(&field.rep, &b);
    let dm = field.rep.contract(&params.derivatives(t, x).dx);
    let target = &states[pos];
    let pushed = dm.mul_vec(&target.state);
    let mut g = 0.0;
    for (j, other) in states.iter().enumerate() {
        if j == pos {
            continue;
        }
        let gap = other.energy - target.energy;
        g += inner(&other.state, &pushed).norm_sqr() / (gap * gap);
    }
    Ok(g)
}

/// `g11` of the top spin-1 dressed state.
pub fn quantum_metric_g11(field: &HermitianField, t: f64, x: f64) -> Result<f64> {
    quantum_metric(field, Band::integer(1), t, x)
}

/// The three right-hand-side terms of the classical equation of motion,
/// `m x'' = E - d eps1/dx - (hbar^2 / 2m) d g11/dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub t: f64,
    pub x: f64,
    pub e_field: f64,
    /// `-d eps1 / dx`
    pub grad_eps: f64,
    /// `-(hbar^2 / 2m) d g11 / dx`
    pub grad_metric: f64,
    /// `e_field + grad_eps + grad_metric`
    pub total: f64,
}

/// Force law of an atom of mass `mass` in the top spin-1 dressed state.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceModel {
    field: HermitianField,
    mass: f64,
}

impl ForceModel {
    pub fn new(params: FieldParams, mass: f64) -> Result<Self> {
        params.validate()?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("mass must be > 0"));
        }
        Ok(Self {
            field: HermitianField::spin_one(params),
            mass,
        })
    }

    pub fn params(&self) -> &FieldParams {
        &self.field.params
    }

    pub fn field(&self) -> &HermitianField {
        &self.field
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn g11(&self, t: f64, x: f64) -> Result<f64> {
        quantum_metric_g11(&self.field, t, x)
    }

    /// `eps1 = |B|`
    pub fn top_energy(&self, t: f64, x: f64) -> Result<f64> {
        self.field.params.gap_at(t, x)
    }

    /// `V_eff = (hbar^2 / 2m) g11 + eps1`
    pub fn effective_potential(&self, t: f64, x: f64) -> Result<f64> {
        let eps = self.top_energy(t, x)?;
        Ok(HBAR * HBAR / (2.0 * self.mass) * self.g11(t, x)? + eps)
    }

    /// `-d eps1/dx = -(B . dB/dx) / |B|`
    pub fn grad_eps(&self, t: f64, x: f64) -> Result<f64> {
        let params = &self.field.params;
        let b = params.sample(t, x);
        let mag = check_gap(b.norm(), params.degeneracy_threshold(), t, x)?;
        Ok(-b.dot(&params.derivatives(t, x).dx) / mag)
    }

    /// `d g11/dx` by central differences with one Richardson level.
    pub fn metric_slope(&self, t: f64, x: f64) -> Result<f64> {
        let h = self.field.params.wavelength() * METRIC_STEP_FRACTION;
        let wide = (self.g11(t, x + h)? - self.g11(t, x - h)?) / (2.0 * h);
        let narrow = (self.g11(t, x + 0.5 * h)? - self.g11(t, x - 0.5 * h)?) / h;
        Ok((4.0 * narrow - wide) / 3.0)
    }

    pub fn grad_metric(&self, t: f64, x: f64) -> Result<f64> {
        Ok(-HBAR * HBAR / (2.0 * self.mass) * self.metric_slope(t, x)?)
    }

    pub fn force_components(&self, t: f64, x: f64) -> Result<ForceSample> {
        let e_field = electric_field(&self.field.params, t, x)?;
        let grad_eps = self.grad_eps(t, x)?;
        let grad_metric = self.grad_metric(t, x)?;
        Ok(ForceSample {
            t,
            x,
            e_field,
            grad_eps,
            grad_metric,
            total: e_field + grad_eps + grad_metric,
        })
    }

    /// Acceleration `total / m`.
    pub fn acceleration(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.force_components(t, x)?.total / self.mass)
    }
}
