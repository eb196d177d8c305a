//! Classical centre-of-mass motion in the top dressed band and the
//! trajectory-based measurement of the quantized flux.
//!
//! The measurement mirrors what an experiment would do: release atoms at rest
//! across the unit cell, record `x(t)`, take second differences to get the
//! acceleration, subtract the known `-d eps1/dx` and metric forces, and
//! average what is left (the electric field) over the cell.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::wrap;
use crate::geometry::{electric_field, ForceModel};
use crate::sum::CompensatedSum;
use crate::topology::FluxResult;
use crate::{FieldParams, HBAR};

/// Largest accepted time step, as a fraction of the period.
pub const MAX_DT_FRACTION: f64 = 1.0 / 200.0;

/// Default speed limit in units of `lambda / T`.
pub const DEFAULT_VELOCITY_BOUND: f64 = 100.0;

/// Minimum bin coverage for a reconstruction to make a quantization claim.
pub const MIN_COVERAGE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

/// Fixed-step samples of one atom; `samples[i].t = t0 + i dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mass: f64,
    pub params: FieldParams,
    pub dt: f64,
    pub samples: Vec<PhasePoint>,
}

/// Classic fourth-order Runge-Kutta with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt: f64,
    /// Absolute bound on `|v|`; exceeding it aborts the run.
    pub velocity_bound: f64,
}

impl Integrator {
    /// Step `dt` with the default velocity bound for `params`.
    pub fn new(params: &FieldParams, dt: f64) -> Self {
        Self {
            dt,
            velocity_bound: DEFAULT_VELOCITY_BOUND * params.wavelength() / params.period(),
        }
    }

    pub fn with_velocity_bound(self, velocity_bound: f64) -> Self {
        Self {
            velocity_bound,
            ..self
        }
    }

    /// Integrates `m x'' = F_total(t, x)` from `start` until `t_end`.
    /// `t_end - start.t` must be a whole number of steps.
    pub fn run(&self, model: &ForceModel, start: PhasePoint, t_end: f64) -> Result<Trajectory> {
        let params = *model.params();
        let dt = self.dt;
        if !(dt > 0.0) || dt > params.period() * MAX_DT_FRACTION * (1.0 + 1e-12) {
            return Err(Error::invalid("dt must be in (0, T/200]"));
        }
        let span = t_end - start.t;
        if !(span > 0.0) {
            return Err(Error::invalid("t_end must be after t0"));
        }
        let n_steps = libm::round(span / dt);
        if (n_steps * dt - span).abs() > 1e-9 * span {
            return Err(Error::invalid("t_end - t0 must be a whole number of steps"));
        }
        let n_steps = n_steps as usize;
        let max_step = params.wavelength() / 10.0;

        let accel = |t: f64, x: f64| model.acceleration(t, x);
        let mut samples = Vec::with_capacity(n_steps + 1);
        samples.push(start);
        let (mut x, mut v) = (start.x, start.v);
        for i in 0..n_steps {
            let t = start.t + i as f64 * dt;
            let half = 0.5 * dt;

            let k1x = v;
            let k1v = accel(t, x)?;
            let k2x = v + half * k1v;
            let k2v = accel(t + half, x + half * k1x)?;
            let k3x = v + half * k2v;
            let k3v = accel(t + half, x + half * k2x)?;
            let k4x = v + dt * k3v;
            let k4v = accel(t + dt, x + dt * k3x)?;

            let x_next = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            let v_next = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            let t_next = start.t + (i + 1) as f64 * dt;

            if !(v_next.abs() <= self.velocity_bound) {
                return Err(Error::VelocityBound {
                    t: t_next,
                    speed: v_next.abs(),
                    bound: self.velocity_bound,
                });
            }
            if !((x_next - x).abs() < max_step) {
                return Err(Error::VelocityBound {
                    t: t_next,
                    speed: (x_next - x).abs() / dt,
                    bound: max_step / dt,
                });
            }
            x = x_next;
            v = v_next;
            samples.push(PhasePoint { t: t_next, x, v });
        }
        Ok(Trajectory {
            mass: model.mass(),
            params,
            dt,
            samples,
        })
    }
}

/// [`Integrator::run`] with the default velocity bound.
pub fn integrate_trajectory(
    model: &ForceModel,
    t0: f64,
    x0: f64,
    v0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    Integrator::new(model.params(), dt).run(model, PhasePoint { t: t0, x: x0, v: v0 }, t_end)
}

/// Atoms released at rest from an `n_t x n_x` uniform grid of the unit cell
/// (`t0 = i T / n_t`, `x0 = j lambda / n_x`), each followed for one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n_t: usize,
    pub n_x: usize,
    pub dt: f64,
}

impl EnsembleSpec {
    /// `dt = T / steps_per_period`.
    pub fn per_period(params: &FieldParams, n_t: usize, n_x: usize, steps_per_period: usize) -> Self {
        Self {
            n_t,
            n_x,
            dt: params.period() / steps_per_period as f64,
        }
    }

    /// Initial points in trajectory order (`t` index major).
    pub fn initial_points(&self, params: &FieldParams) -> Vec<PhasePoint> {
        let (period, wavelength) = (params.period(), params.wavelength());
        (0..self.n_t)
            .flat_map(|i| {
                (0..self.n_x).map(move |j| PhasePoint {
                    t: period * i as f64 / self.n_t as f64,
                    x: wavelength * j as f64 / self.n_x as f64,
                    v: 0.0,
                })
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_x
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Integrates trajectory number `index`.
    pub fn integrate_one(&self, model: &ForceModel, index: usize) -> Result<Trajectory> {
        let start = self.initial_points(model.params())[index];
        self.run_from(model, start)
    }

    fn run_from(&self, model: &ForceModel, start: PhasePoint) -> Result<Trajectory> {
        let period = model.params().period();
        // one period in whole steps from t0
        let steps = libm::round(period / self.dt);
        Integrator::new(model.params(), self.dt).run(model, start, start.t + steps * self.dt)
    }

    /// All trajectories, sequentially and in order.
    pub fn integrate(&self, model: &ForceModel) -> Result<Vec<Trajectory>> {
        if self.is_empty() {
            return Err(Error::invalid("ensemble must have at least one trajectory"));
        }
        self.initial_points(model.params())
            .into_iter()
            .map(|p| self.run_from(model, p))
            .collect()
    }
}

/// Folds `(t, x)` into `[0, T) x [0, lambda)`.
pub fn fold(params: &FieldParams, t: f64, x: f64) -> (f64, f64) {
    (wrap(t, params.period()), wrap(x, params.wavelength()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelerationSample {
    /// Folded time.
    pub t: f64,
    /// Folded position.
    pub x: f64,
    pub a: f64,
}

/// Second differences `(x[i+1] - 2 x[i] + x[i-1]) / dt^2` at every interior
/// sample, with `(t, x)` folded into the unit cell. Trajectories shorter
/// than three samples contribute nothing.
pub fn acceleration_profile(trajectories: &[Trajectory]) -> Vec<AccelerationSample> {
    let mut out = Vec::new();
    for traj in trajectories {
        let dt2 = traj.dt * traj.dt;
        for w in traj.samples.windows(3) {
            let a = (w[2].x - 2.0 * w[1].x + w[0].x) / dt2;
            let (t, x) = fold(&traj.params, w[1].t, w[1].x);
            out.push(AccelerationSample { t, x, a });
        }
    }
    out
}

/// Which known forces are removed from `m a` before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subtraction {
    /// `E_est = m a + d eps1/dx + (hbar^2 / 2m) d g11/dx`.
    #[default]
    Full,
    /// `E_est = m a`; the negative control.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionReport {
    pub n_trajectories: usize,
    pub n_samples: usize,
    /// `(T lambda / 2 pi hbar) * mean over bins of E_est`, before rounding.
    pub estimated_flux: f64,
    pub rounded: i64,
    pub residual: f64,
    /// Fraction of bins holding at least one sample.
    pub coverage: f64,
}

impl ReconstructionReport {
    /// The rounded flux, if coverage is high enough to claim it.
    pub fn quantized_value(&self, min_coverage: f64) -> Option<i64> {
        (self.coverage >= min_coverage).then_some(self.rounded)
    }
}

/// Reconstructs the flux from recorded trajectories on an
/// `n_t x n_x` binning of the cell.
pub fn reconstruct_flux(
    trajectories: &[Trajectory],
    model: &ForceModel,
    bins: (usize, usize),
) -> Result<ReconstructionReport> {
    reconstruct_with(trajectories, model, bins, Subtraction::Full)
}

pub fn reconstruct_with(
    trajectories: &[Trajectory],
    model: &ForceModel,
    bins: (usize, usize),
    subtraction: Subtraction,
) -> Result<ReconstructionReport> {
    if let Some(t) = trajectories.iter().find(|t| t.mass != model.mass()) {
        return Err(Error::invalid(alloc::format!(
            "trajectory mass {} differs from model mass {}",
            t.mass,
            model.mass()
        )));
    }
    let samples = acceleration_profile(trajectories);
    reconstruct_from_samples(&samples, trajectories.len(), model, bins, subtraction)
}

/// Bins acceleration samples and averages the estimated electric field.
/// Empty bins are filled with the analytic field at the bin centre and
/// count against coverage.
pub fn reconstruct_from_samples(
    samples: &[AccelerationSample],
    n_trajectories: usize,
    model: &ForceModel,
    (n_t, n_x): (usize, usize),
    subtraction: Subtraction,
) -> Result<ReconstructionReport> {
    if n_t == 0 || n_x == 0 {
        return Err(Error::invalid("bins must be positive"));
    }
    let params = model.params();
    let (period, wavelength) = (params.period(), params.wavelength());
    let mut sums = alloc::vec![CompensatedSum::new(); n_t * n_x];
    let mut counts = alloc::vec![0usize; n_t * n_x];

    for s in samples {
        let (t, x) = fold(params, s.t, s.x);
        let it = ((t / period * n_t as f64) as usize).min(n_t - 1);
        let ix = ((x / wavelength * n_x as f64) as usize).min(n_x - 1);
        let mut e = model.mass() * s.a;
        if subtraction == Subtraction::Full {
            e -= model.grad_eps(t, x)? + model.grad_metric(t, x)?;
        }
        sums[it * n_x + ix].add(e);
        counts[it * n_x + ix] += 1;
    }

    let mut total = CompensatedSum::new();
    let mut filled = 0usize;
    for it in 0..n_t {
        for ix in 0..n_x {
            let k = it * n_x + ix;
            if counts[k] > 0 {
                filled += 1;
                total.add(sums[k].value() / counts[k] as f64);
            } else {
                let tc = (it as f64 + 0.5) * period / n_t as f64;
                let xc = (ix as f64 + 0.5) * wavelength / n_x as f64;
                total.add(electric_field(params, tc, xc)?);
            }
        }
    }
    let n_bins = (n_t * n_x) as f64;
    let estimated_flux = period * wavelength * total.value() / n_bins / (core::f64::consts::TAU * HBAR);
    let flux = FluxResult::from_raw(estimated_flux);
    Ok(ReconstructionReport {
        n_trajectories,
        n_samples: samples.len(),
        estimated_flux,
        rounded: flux.rounded,
        residual: flux.residual,
        coverage: filled as f64 / n_bins,
    })
}
