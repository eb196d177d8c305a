//! Independent oracles and reusable property checks. Each check returns
//! `Ok(detail)` or `Err(detail)` so the acceptance runner can report it and
//! the per-module test files can assert on it.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topowork_core::dynamics::{
    acceleration_profile, integrate_trajectory, reconstruct_from_samples, AccelerationSample,
    EnsembleSpec, Subtraction, Trajectory,
};
use topowork_core::geometry::{electric_field, loop_phase, plaquette_corners};
use topowork_core::spin::dressed_state_spin1;
use topowork_core::topology::{
    chern_from_flux, chern_lattice, chern_lattice_all, sector_chern, winding_number,
};
use topowork_core::{
    linalg::CMatrix, BVector, Band, FieldParams, ForceModel, GridSpec, HermitianField, SpinRep,
};

pub type Check = Result<String, String>;

pub fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Runs every check, keeping the first failure.
pub fn all<I: IntoIterator<Item = Check>>(checks: I) -> Check {
    let mut n = 0;
    for c in checks {
        c?;
        n += 1;
    }
    Ok(format!("{n} checks"))
}

pub const SEED: u64 = 2024;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `alpha/nu in [0.5, 2]`, `gamma/nu in +-[0.1, 0.9] U +-[1.1, 3]`, with the
/// scales `nu`, `omega_tilde`, `k` drawn from `[0.5, 2]`.
pub fn random_gapped_params(rng: &mut impl Rng) -> FieldParams {
    let nu = rng.random_range(0.5..2.0);
    let alpha = nu * rng.random_range(0.5..2.0);
    let magnitude = if rng.random_bool(0.5) {
        rng.random_range(0.1..0.9)
    } else {
        rng.random_range(1.1..3.0)
    };
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    FieldParams::new(
        alpha,
        nu,
        sign * magnitude * nu,
        rng.random_range(0.5..2.0),
        rng.random_range(0.5..2.0),
    )
    .unwrap()
}

pub fn random_point(rng: &mut impl Rng, p: &FieldParams) -> (f64, f64) {
    (
        rng.random_range(0.0..p.period()),
        rng.random_range(0.0..p.wavelength()),
    )
}

pub fn alpha_one(ratio: f64) -> FieldParams {
    FieldParams::default().with_gamma_over_nu(ratio)
}

// ---------------------------------------------------------------- field

pub fn check_b_periodicity(p: &FieldParams, t: f64, x: f64, m: i32, n: i32) -> Check {
    let base = p.sample(t, x);
    let shifted = p.sample(t + m as f64 * p.period(), x + n as f64 * p.wavelength());
    let scale = p.alpha + p.nu + p.gamma.abs();
    let diff = (shifted - base).norm();
    ensure(
        diff <= 1e-12 * scale,
        format!("|B(t+{m}T, x+{n}L) - B(t,x)| = {diff:e} at ({t}, {x})"),
    )
}

/// Central-difference error of both derivatives at step `h`.
pub fn derivative_error(p: &FieldParams, t: f64, x: f64, h: f64) -> f64 {
    let d = p.derivatives(t, x);
    let fd_t = (p.sample(t + h, x) - p.sample(t - h, x)) * (0.5 / h);
    let fd_x = (p.sample(t, x + h) - p.sample(t, x - h)) * (0.5 / h);
    (fd_t - d.dt).norm().max((fd_x - d.dx).norm())
}

/// Empirical order of the central-difference error as `h` halves, from the
/// maximum error over `points`; also checks `err <= C h^2` pointwise with
/// `C` bounding the third derivatives.
pub fn check_derivative_order(p: &FieldParams, points: &[(f64, f64)]) -> Check {
    let h = 1e-3;
    let c = (p.alpha + p.nu) * p.omega_tilde.max(p.k).powi(3);
    let mut worst = (0.0f64, 0.0f64);
    for &(t, x) in points {
        let (e1, e2) = (derivative_error(p, t, x, h), derivative_error(p, t, x, h / 2.0));
        if e1 > c * h * h || e2 > c * h * h / 4.0 {
            return Err(format!("error {e1:e} above C h^2 = {:e} at ({t}, {x})", c * h * h));
        }
        worst = (worst.0.max(e1), worst.1.max(e2));
    }
    let order = (worst.0 / worst.1).log2();
    ensure(order >= 1.9, format!("derivative order {order:.3} over {} points", points.len()))
}

// ---------------------------------------------------------------- spin

/// Sorted energies of `B . J` are `(J, J-1, ..., -J) |B|`.
pub fn check_spin_levels(two_j: u32, b: &BVector) -> Check {
    let rep = SpinRep::new(two_j).unwrap();
    let field_states = topowork_core::spin::eigensystem_for(&rep, b);
    let mag = b.norm();
    let j = two_j as f64 / 2.0;
    for (k, s) in field_states.iter().enumerate() {
        let expected = (j - k as f64) * mag;
        if (s.energy - expected).abs() > 1e-10 * mag {
            return Err(format!("two_j={two_j} level {k}: {} vs {expected}", s.energy));
        }
        if (norm(&s.state) - 1.0).abs() > 1e-12 {
            return Err(format!("two_j={two_j} level {k} not normalized"));
        }
        let residual = sub(&rep.contract(b).mul_vec(&s.state), &scale(&s.state, s.energy));
        if norm(&residual) > 1e-10 * mag {
            return Err(format!("two_j={two_j} level {k}: residual {:e}", norm(&residual)));
        }
    }
    Ok(format!("two_j={two_j} levels match"))
}

/// `|<eta(formula)|eta(solver)>| = 1` wherever the patch is valid.
pub fn check_dressed_vs_solver(b: &BVector) -> Check {
    let formula = match dressed_state_spin1(b) {
        Ok(s) => s,
        Err(_) => return Ok("outside the z-patch".into()),
    };
    let solver = topowork_core::spin::eigensystem_for(&SpinRep::spin_one(), b);
    let overlap = inner(&formula.state, &solver[0].state).norm();
    ensure(
        (overlap - 1.0).abs() <= 1e-10,
        format!("|<formula|solver>| = {overlap} at {b:?}"),
    )
}

pub fn check_generators(two_j: u32) -> Check {
    let rep = SpinRep::new(two_j).unwrap();
    let [j1, j2, j3] = rep.generators();
    let j = rep.j();
    let i = Complex64::new(0.0, 1.0);
    for g in [j1, j2, j3] {
        if !g.is_hermitian(1e-12) {
            return Err(format!("two_j={two_j}: generator not Hermitian"));
        }
    }
    for (a, b, c) in [(j1, j2, j3), (j2, j3, j1), (j3, j1, j2)] {
        let err = a.commutator(b).sub(&c.scaled(i)).frobenius_norm();
        if err > 1e-10 {
            return Err(format!("two_j={two_j}: commutator error {err:e}"));
        }
    }
    let mut casimir = j1.matmul(j1);
    casimir.add_scaled(1.0, &j2.matmul(j2));
    casimir.add_scaled(1.0, &j3.matmul(j3));
    let target = CMatrix::identity(rep.dim()).scaled(Complex64::new(j * (j + 1.0), 0.0));
    let err = casimir.sub(&target).frobenius_norm();
    if err > 1e-10 {
        return Err(format!("two_j={two_j}: Casimir error {err:e}"));
    }
    for r in 0..rep.dim() {
        for c in 0..rep.dim() {
            let expected = if r == c { j - r as f64 } else { 0.0 };
            if (j3[(r, c)] - Complex64::new(expected, 0.0)).norm() > 0.0 {
                return Err(format!("two_j={two_j}: J3[{r},{c}] = {}", j3[(r, c)]));
            }
        }
    }
    Ok(format!("two_j={two_j} generators valid"))
}

// ---------------------------------------------------------------- geometry

/// Plaquette phase with every corner state multiplied by a phase from
/// `phases`, compared against the unmodified loop.
pub fn check_gauge_invariance(
    field: &HermitianField,
    band: Band,
    corner: (f64, f64),
    size: (f64, f64),
    phases: [f64; 4],
) -> Check {
    let corners = plaquette_corners(corner.0, corner.1, size.0, size.1);
    let states: Vec<Vec<Complex64>> = corners
        .iter()
        .map(|&(t, x)| field.band_state_at(band, t, x).unwrap().state)
        .collect();
    let rotated: Vec<Vec<Complex64>> = states
        .iter()
        .zip(phases)
        .map(|(s, phi)| scale_c(s, Complex64::from_polar(1.0, phi)))
        .collect();
    let a = loop_phase([&states[0], &states[1], &states[2], &states[3]]).unwrap();
    let b = loop_phase([&rotated[0], &rotated[1], &rotated[2], &rotated[3]]).unwrap();
    ensure(
        (a - b).abs() <= 1e-14,
        format!("phase {a:e} vs regauged {b:e} (diff {:e})", (a - b).abs()),
    )
}

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Average of the analytic field over `[t, t+dt] x [x, x+dx]` by 5x5
/// Gauss-Legendre quadrature.
pub fn cell_average_e(p: &FieldParams, t: f64, x: f64, dt: f64, dx: f64) -> f64 {
    let mut acc = 0.0;
    for (u, wu) in GL5 {
        for (v, wv) in GL5 {
            let tt = t + 0.5 * dt * (1.0 + u);
            let xx = x + 0.5 * dx * (1.0 + v);
            acc += wu * wv * electric_field(p, tt, xx).unwrap();
        }
    }
    acc / 4.0
}

/// `max |phase / area - E_ref| / max |E_ref|` over all plaquettes of an
/// `n x n` grid, with `E_ref` the cell average (`cell_centre = false`) or
/// the value at the plaquette centre (`true`).
pub fn curvature_error(p: &FieldParams, n: usize, cell_centre: bool) -> f64 {
    let field = HermitianField::spin_one(*p);
    let (dt, dx) = (p.period() / n as f64, p.wavelength() / n as f64);
    let area = dt * dx;
    // states on the (n+1) x (n+1) node grid, reused across plaquettes
    let states: Vec<Vec<Vec<Complex64>>> = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    field
                        .band_state_at(Band::integer(1), i as f64 * dt, j as f64 * dx)
                        .unwrap()
                        .state
                })
                .collect()
        })
        .collect();
    let mut max_diff: f64 = 0.0;
    let mut max_ref: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let phase = loop_phase([
                &states[i][j],
                &states[i + 1][j],
                &states[i + 1][j + 1],
                &states[i][j + 1],
            ])
            .unwrap();
            let (t, x) = (i as f64 * dt, j as f64 * dx);
            let reference = if cell_centre {
                electric_field(p, t + 0.5 * dt, x + 0.5 * dx).unwrap()
            } else {
                cell_average_e(p, t, x, dt, dx)
            };
            max_diff = max_diff.max((phase / area - reference).abs());
            max_ref = max_ref.max(reference.abs());
        }
    }
    max_diff / max_ref
}

/// Curvature consistency at `n` and `2n`: error at `2n` within `tol`, order
/// at least 1.9.
pub fn check_curvature_consistency(p: &FieldParams, n: usize, tol: f64) -> Check {
    let coarse = curvature_error(p, n, false);
    let fine = curvature_error(p, 2 * n, false);
    let order = (coarse / fine).log2();
    ensure(
        fine <= tol && order >= 1.9,
        format!(
            "max rel error {fine:.3e} at {}x{} ({coarse:.3e} at {n}x{n}), order {order:.2}",
            2 * n,
            2 * n
        ),
    )
}

pub fn check_geometry_periodicity(model: &ForceModel, t: f64, x: f64, m: i32, n: i32) -> Check {
    let p = *model.params();
    let (ts, xs) = (t + m as f64 * p.period(), x + n as f64 * p.wavelength());
    let pairs = [
        ("E", electric_field(&p, t, x).unwrap(), electric_field(&p, ts, xs).unwrap()),
        ("g11", model.g11(t, x).unwrap(), model.g11(ts, xs).unwrap()),
        (
            "V_eff",
            model.effective_potential(t, x).unwrap(),
            model.effective_potential(ts, xs).unwrap(),
        ),
    ];
    for (name, a, b) in pairs {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(format!("{name} not periodic at ({t}, {x}) shift ({m}, {n}): {a} vs {b}"));
        }
    }
    Ok("E, g11, V_eff periodic".into())
}

/// Fluxes at `gamma/nu = +-0.5` cancel.
pub fn check_reflection(grid: usize) -> Check {
    let g = GridSpec::square(grid).unwrap();
    let plus = chern_from_flux(&alpha_one(0.5), g).unwrap();
    let minus = chern_from_flux(&alpha_one(-0.5), g).unwrap();
    ensure(
        (plus.raw + minus.raw).abs() < 1e-9 && plus.rounded == -minus.rounded && plus.rounded != 0,
        format!("flux(+0.5) = {}, flux(-0.5) = {}", plus.raw, minus.raw),
    )
}

/// Pearson correlation of two equally long series.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let (mut va, mut vb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

/// Correlation between the total force and `E` on an `n x n` node grid.
pub fn force_field_correlation(model: &ForceModel, n: usize) -> f64 {
    let p = *model.params();
    let mut total = Vec::with_capacity(n * n);
    let mut e = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let t = p.period() * i as f64 / n as f64;
            let x = p.wavelength() * j as f64 / n as f64;
            let f = model.force_components(t, x).unwrap();
            total.push(f.total);
            e.push(f.e_field);
        }
    }
    correlation(&total, &e)
}

// ---------------------------------------------------------------- topology

pub fn check_winding_quantized(p: &FieldParams, grid: usize, tol: f64) -> Check {
    let w = winding_number(p, GridSpec::square(grid).unwrap()).unwrap();
    ensure(
        w.residual < tol,
        format!(
            "alpha/nu={:.4} gamma/nu={:.4}: W = {} (residual {:.2e})",
            p.alpha / p.nu,
            p.gamma / p.nu,
            w.raw,
            w.residual
        ),
    )
}

/// `chern_from_flux.rounded == chern_lattice(m=+1) == -2 W.rounded`, and
/// the spin-1 bands sum to zero.
pub fn check_cross_method(p: &FieldParams, lattice_grid: usize) -> Check {
    let fine = GridSpec::square(256).unwrap();
    let flux = chern_from_flux(p, fine).unwrap();
    let w = winding_number(p, fine).unwrap();
    let all = chern_lattice_all(&HermitianField::spin_one(*p), GridSpec::square(lattice_grid).unwrap())
        .map_err(|e| format!("lattice failed: {e}"))?;
    let top = all[0].chern;
    let sum: i64 = all.iter().map(|c| c.chern).sum();
    ensure(
        flux.rounded == top && top == -2 * w.rounded && sum == 0,
        format!(
            "gamma/nu={:.3}: flux {} lattice {top} -2W {} band sum {sum}",
            p.gamma / p.nu,
            flux.rounded,
            -2 * w.rounded
        ),
    )
}

pub fn check_band_sum(two_j: u32, p: &FieldParams, grid: usize) -> Check {
    let field = HermitianField::new(SpinRep::new(two_j).unwrap(), *p);
    let all = chern_lattice_all(&field, GridSpec::square(grid).unwrap())
        .map_err(|e| format!("two_j={two_j}: {e}"))?;
    let sum: i64 = all.iter().map(|c| c.chern).sum();
    ensure(sum == 0, format!("two_j={two_j}: band Chern numbers sum to {sum}"))
}

/// `chern_lattice(J, m) == -2 m W` for every level.
pub fn check_sector_rule(two_j: u32, ratio: f64, grid: usize) -> Check {
    let p = alpha_one(ratio);
    let w = winding_number(&p, GridSpec::square(256).unwrap()).unwrap().rounded;
    let field = HermitianField::new(SpinRep::new(two_j).unwrap(), p);
    let all = chern_lattice_all(&field, GridSpec::square(grid).unwrap())
        .map_err(|e| format!("two_j={two_j} gamma/nu={ratio}: {e}"))?;
    for c in &all {
        let expected = sector_chern(c.band, w);
        if c.chern != expected {
            return Err(format!(
                "two_j={two_j} gamma/nu={ratio} m={}: lattice {} vs -2mW {expected}",
                c.band, c.chern
            ));
        }
    }
    Ok(format!(
        "two_j={two_j} gamma/nu={ratio}: {:?}",
        all.iter().map(|c| c.chern).collect::<Vec<_>>()
    ))
}

pub fn check_grid_stability(p: &FieldParams) -> Check {
    let field = HermitianField::spin_one(*p);
    let coarse = chern_lattice(&field, Band::integer(1), GridSpec::square(64).unwrap());
    let fine = chern_lattice(&field, Band::integer(1), GridSpec::square(128).unwrap());
    match (coarse, fine) {
        (Ok(a), Ok(b)) => ensure(a == b, format!("lattice Chern {a} at 64, {b} at 128")),
        (a, b) => Err(format!("lattice failed: {a:?} / {b:?}")),
    }
}

// ---------------------------------------------------------------- dynamics

pub fn default_model() -> ForceModel {
    ForceModel::new(FieldParams::default(), 1.0).unwrap()
}

/// The desk-scale ensemble: 32 x 32 release points, `v0 = 0`, one period,
/// `dt = T / 2000`.
pub fn desk_ensemble(model: &ForceModel) -> Vec<Trajectory> {
    EnsembleSpec::per_period(model.params(), 32, 32, 2000)
        .integrate(model)
        .unwrap()
}

/// End-point errors at `dt = T/500, T/1000, T/2000` against a `T/128000`
/// reference, and the least-squares order.
pub fn integrator_order(model: &ForceModel) -> (Vec<f64>, f64) {
    let p = *model.params();
    let period = p.period();
    let x0 = p.wavelength() / 4.0;
    let end = |steps: f64| {
        let traj = integrate_trajectory(model, 0.0, x0, 0.0, period, period / steps).unwrap();
        let last = traj.samples.last().unwrap();
        (last.x, last.v)
    };
    let reference = end(128_000.0);
    let steps = [500.0, 1000.0, 2000.0];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&s| {
            let (x, v) = end(s);
            (x - reference.0).abs().max((v - reference.1).abs())
        })
        .collect();
    let xs: Vec<f64> = steps.iter().map(|s| (period / s).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    (errors, slope)
}

/// `|Delta(m v^2 / 2) - int F v dt|` over one period, with the work integral
/// by composite Simpson on the recorded samples.
pub fn energy_bookkeeping_error(model: &ForceModel, steps: usize) -> f64 {
    let p = *model.params();
    let period = p.period();
    let traj = integrate_trajectory(model, 0.0, p.wavelength() / 4.0, 0.0, period, period / steps as f64)
        .unwrap();
    let power: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| model.force_components(s.t, s.x).unwrap().total * s.v)
        .collect();
    let h = traj.dt;
    let n = power.len() - 1;
    assert!(n % 2 == 0);
    let mut work = power[0] + power[n];
    for (i, w) in power.iter().enumerate().take(n).skip(1) {
        work += if i % 2 == 1 { 4.0 * w } else { 2.0 * w };
    }
    work *= h / 3.0;
    let (first, last) = (traj.samples[0], traj.samples[n]);
    let kinetic = 0.5 * model.mass() * (last.v * last.v - first.v * first.v);
    (kinetic - work).abs()
}

/// RMS of `a - F/m` relative to the RMS of `F/m` over every acceleration
/// sample.
pub fn acceleration_rms_error(trajectories: &[Trajectory], model: &ForceModel) -> f64 {
    let mut diff = 0.0;
    let mut reference = 0.0;
    for s in acceleration_profile(trajectories) {
        let f = model.acceleration(s.t, s.x).unwrap();
        diff += (s.a - f) * (s.a - f);
        reference += f * f;
    }
    (diff / reference).sqrt()
}

/// Reconstruction from noiseless samples `a = F_total / m` placed at the
/// centres of an `n x n` grid.
pub fn synthetic_reconstruction(model: &ForceModel, n: usize) -> f64 {
    let p = *model.params();
    let mut samples = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let t = (i as f64 + 0.5) * p.period() / n as f64;
            let x = (j as f64 + 0.5) * p.wavelength() / n as f64;
            samples.push(AccelerationSample {
                t,
                x,
                a: model.acceleration(t, x).unwrap(),
            });
        }
    }
    reconstruct_from_samples(&samples, 0, model, (n, n), Subtraction::Full)
        .unwrap()
        .estimated_flux
}

// ---------------------------------------------------------------- vectors

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(v: &[Complex64], s: f64) -> Vec<Complex64> {
    v.iter().map(|z| z * s).collect()
}

pub fn scale_c(v: &[Complex64], s: Complex64) -> Vec<Complex64> {
    v.iter().map(|z| z * s).collect()
}

/// Unit vector on the sphere from polar angles.
pub fn direction(theta: f64, phi: f64) -> BVector {
    BVector::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}
