//! Topological invariants of the dressed bands over the space-time unit cell.
//!
//! Orientation: the cell is parameterized as `(t, x)` with `t` the first
//! coordinate. The winding number integrates `n . (dn/dt x dn/dx)`, the
//! electric field carries `n . (dn/dx x dn/dt)`, so the flux Chern number of
//! the top spin-1 band is `c1 = -2 W`. Plaquettes are traversed
//! `(t, x) -> (t+dt, x) -> (t+dt, x+dx) -> (t, x+dx)`, which reproduces the
//! same sign: `c1 = +4` for `0 < gamma/nu < 1` at `alpha/nu = 1`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use libm::{cos, round, sin};

use crate::error::{Error, Result};
use crate::field::{check_gap, BVector, FieldParams, SpaceTimeField, GAP_CHECK_GRID};
use crate::geometry::{electric_field, loop_phase};
use crate::linalg::C64;
use crate::spin::{eigensystem_for, Band, HermitianField, SpinRep};
use crate::sum::CompensatedSum;
use crate::HBAR;

/// Default tolerance on `|raw - rounded|` for accepting a quantized value.
pub const QUANTIZATION_TOL: f64 = 1e-3;

/// Scan points closer than this to a gap-closing ratio are not computed.
pub const PHASE_BOUNDARY_MARGIN: f64 = 0.05;

/// Values of `gamma/nu` where the gap closes (for any `alpha > 0`).
pub const PHASE_BOUNDARIES: [f64; 3] = [-1.0, 0.0, 1.0];

/// Largest plaquette phase accepted by the lattice method.
pub const MAX_PLAQUETTE_PHASE: f64 = FRAC_PI_2;

/// Uniform periodic discretization of the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n_t: usize,
    pub n_x: usize,
}

impl GridSpec {
    pub fn new(n_t: usize, n_x: usize) -> Result<Self> {
        if n_t < 8 || n_x < 8 {
            return Err(Error::invalid("grid needs at least 8 points per direction"));
        }
        Ok(Self { n_t, n_x })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    /// Node `(i, j)` of a cell of extent `(period, wavelength)`.
    pub fn node(&self, cell: (f64, f64), i: usize, j: usize) -> (f64, f64) {
        (
            cell.0 * i as f64 / self.n_t as f64,
            cell.1 * j as f64 / self.n_x as f64,
        )
    }

    pub fn steps(&self, cell: (f64, f64)) -> (f64, f64) {
        (cell.0 / self.n_t as f64, cell.1 / self.n_x as f64)
    }
}

/// A topological integral and its nearest integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxResult {
    pub raw: f64,
    pub rounded: i64,
    /// `|raw - rounded|`, at most 0.5.
    pub residual: f64,
}

impl FluxResult {
    pub fn from_raw(raw: f64) -> Self {
        let r = round(raw);
        Self {
            raw,
            rounded: r as i64,
            residual: (raw - r).abs(),
        }
    }

    pub fn is_quantized(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

fn warn_if_unquantized(what: &str, result: &FluxResult) {
    if !result.is_quantized(QUANTIZATION_TOL) {
        log::warn!(
            "{what} = {} is not quantized (residual {:e})",
            result.raw,
            result.residual
        );
    }
}

/// Degree of `(t, x) -> B/|B|`,
/// `W = (1/4 pi) iint B . (dB/dt x dB/dx) / |B|^3 dt dx`,
/// by the periodic trapezoid rule.
pub fn winding_number<F: SpaceTimeField + ?Sized>(field: &F, grid: GridSpec) -> Result<FluxResult> {
    let cell = field.cell();
    let (dt, dx) = grid.steps(cell);
    let threshold = field.degeneracy_threshold();
    let mut acc = CompensatedSum::new();
    for i in 0..grid.n_t {
        for j in 0..grid.n_x {
            let (t, x) = grid.node(cell, i, j);
            let b = field.sample(t, x);
            let mag = check_gap(b.norm(), threshold, t, x)?;
            let d = field.derivatives(t, x);
            acc.add(b.dot(&d.dt.cross(&d.dx)) / (mag * mag * mag));
        }
    }
    let result = FluxResult::from_raw(acc.value() * dt * dx / (2.0 * TAU));
    warn_if_unquantized("winding number", &result);
    Ok(result)
}

/// `c1 = (1 / 2 pi hbar) iint E dt dx` of the top spin-1 band, by the
/// periodic trapezoid rule.
pub fn chern_from_flux(params: &FieldParams, grid: GridSpec) -> Result<FluxResult> {
    let cell = (params.period(), params.wavelength());
    let (dt, dx) = grid.steps(cell);
    let mut acc = CompensatedSum::new();
    for i in 0..grid.n_t {
        for j in 0..grid.n_x {
            let (t, x) = grid.node(cell, i, j);
            acc.add(electric_field(params, t, x)?);
        }
    }
    let result = FluxResult::from_raw(acc.value() * dt * dx / (TAU * HBAR));
    warn_if_unquantized("flux Chern number", &result);
    Ok(result)
}

/// Lattice Chern number of one band, with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeChern {
    pub band: Band,
    pub chern: i64,
    /// Sum of plaquette phases over `2 pi`; an integer up to rounding.
    pub raw: f64,
    pub max_abs_phase: f64,
}

/// Sums plaquette phases of a periodic `rows x cols` grid of states.
/// `rows_periodic = false` leaves the last row open (used for the sphere,
/// whose first and last rows are the poles).
fn plaquette_sum(
    states: &[Vec<C64>],
    rows: usize,
    cols: usize,
    rows_periodic: bool,
) -> Result<(f64, f64)> {
    let plaquette_rows = if rows_periodic { rows } else { rows - 1 };
    let at = |i: usize, j: usize| states[(i % rows) * cols + (j % cols)].as_slice();
    let mut acc = CompensatedSum::new();
    let mut max_abs: f64 = 0.0;
    for i in 0..plaquette_rows {
        for j in 0..cols {
            let phase = loop_phase([at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)])?;
            if phase.abs() >= MAX_PLAQUETTE_PHASE {
                return Err(Error::RefineGrid { phase });
            }
            max_abs = max_abs.max(phase.abs());
            acc.add(phase);
        }
    }
    Ok((acc.value() / TAU, max_abs))
}

/// Eigenstates of every band at every node, `out[band][i * n_x + j]`.
fn band_states_on_grid(field: &HermitianField, grid: GridSpec) -> Result<Vec<Vec<Vec<C64>>>> {
    let cell = (field.params.period(), field.params.wavelength());
    let threshold = field.params.degeneracy_threshold();
    let dim = field.rep.dim();
    let mut out: Vec<Vec<Vec<C64>>> = (0..dim)
        .map(|_| Vec::with_capacity(grid.n_t * grid.n_x))
        .collect();
    for i in 0..grid.n_t {
        for j in 0..grid.n_x {
            let (t, x) = grid.node(cell, i, j);
            let b = field.params.sample(t, x);
            check_gap(b.norm(), threshold, t, x)?;
            for (slot, s) in out.iter_mut().zip(eigensystem_for(&field.rep, &b)) {
                slot.push(s.state);
            }
        }
    }
    Ok(out)
}

/// Lattice Chern numbers of all bands, `+J` first.
pub fn chern_lattice_all(field: &HermitianField, grid: GridSpec) -> Result<Vec<LatticeChern>> {
    let states = band_states_on_grid(field, grid)?;
    field
        .rep
        .bands()
        .zip(&states)
        .map(|(band, s)| {
            let (raw, max_abs_phase) = plaquette_sum(s, grid.n_t, grid.n_x, true)?;
            Ok(LatticeChern {
                band,
                chern: round(raw) as i64,
                raw,
                max_abs_phase,
            })
        })
        .collect()
}

/// Lattice (plaquette-sum) Chern number of a single band.
pub fn chern_lattice(field: &HermitianField, band: Band, grid: GridSpec) -> Result<i64> {
    let pos = field.rep.band_position(band)?;
    Ok(chern_lattice_all(field, grid)?[pos].chern)
}

/// Chern number of the sector `J3 = m` for a map of winding `W`: `-2 m W`.
pub fn sector_chern(band: Band, winding: i64) -> i64 {
    -(band.twice() as i64) * winding
}

/// Result of one phase-diagram point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseOutcome {
    Computed(FluxResult),
    /// Within [`PHASE_BOUNDARY_MARGIN`] of a gap-closing ratio; skipped.
    NearBoundary,
    /// The gap closed on a grid node.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub gamma_over_nu: f64,
    pub outcome: PhaseOutcome,
    pub min_gap: f64,
}

impl PhaseRow {
    pub fn flux(&self) -> Option<FluxResult> {
        match self.outcome {
            PhaseOutcome::Computed(f) => Some(f),
            _ => None,
        }
    }
}

pub fn near_phase_boundary(gamma_over_nu: f64) -> bool {
    PHASE_BOUNDARIES
        .iter()
        .any(|b| (gamma_over_nu - b).abs() < PHASE_BOUNDARY_MARGIN)
}

/// `c1` of the top spin-1 band for each `gamma/nu`, in input order.
pub fn phase_diagram(
    base: &FieldParams,
    gamma_over_nu: &[f64],
    grid: GridSpec,
) -> Result<Vec<PhaseRow>> {
    base.validate()?;
    if !(base.nu > 0.0) {
        return Err(Error::invalid("phase diagram needs nu > 0"));
    }
    gamma_over_nu
        .iter()
        .map(|&ratio| {
            let params = base.with_gamma_over_nu(ratio);
            let min_gap = params.min_gap(GAP_CHECK_GRID)?;
            let outcome = if near_phase_boundary(ratio) {
                PhaseOutcome::NearBoundary
            } else {
                match chern_from_flux(&params, grid) {
                    Ok(f) => PhaseOutcome::Computed(f),
                    Err(e) if e.is_degenerate() => PhaseOutcome::Degenerate,
                    Err(e) => return Err(e),
                }
            };
            Ok(PhaseRow {
                gamma_over_nu: ratio,
                outcome,
                min_gap,
            })
        })
        .collect()
}

/// Chern numbers of the two eigenbundles of `H(n) = n . sigma` over the
/// unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonopoleChern {
    /// Eigenvalue `+1`.
    pub upper: i64,
    /// Eigenvalue `-1`.
    pub lower: i64,
}

/// Plaquette Chern numbers on an `n_theta x n_phi` polar grid of the sphere,
/// oriented by the outward normal (`theta` first, then `phi`).
pub fn monopole_sphere_chern(n_theta: usize, n_phi: usize) -> Result<MonopoleChern> {
    if n_theta < 16 || n_phi < 16 {
        return Err(Error::invalid("sphere grid needs at least 16 x 16 points"));
    }
    let rep = SpinRep::spin_half();
    let rows = n_theta + 1;
    let mut upper = Vec::with_capacity(rows * n_phi);
    let mut lower = Vec::with_capacity(rows * n_phi);
    for i in 0..rows {
        let theta = PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            let n = BVector::new(sin(theta) * cos(phi), sin(theta) * sin(phi), cos(theta));
            let mut states = eigensystem_for(&rep, &n).into_iter();
            upper.push(states.next().expect("two bands").state);
            lower.push(states.next().expect("two bands").state);
        }
    }
    let (up, _) = plaquette_sum(&upper, rows, n_phi, false)?;
    let (down, _) = plaquette_sum(&lower, rows, n_phi, false)?;
    Ok(MonopoleChern {
        upper: round(up) as i64,
        lower: round(down) as i64,
    })
}
