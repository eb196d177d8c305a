//! Argument parsing and the six subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use topowork_core::dynamics::{
    reconstruct_with, EnsembleSpec, ReconstructionReport, Subtraction, Trajectory, MAX_DT_FRACTION,
    MIN_COVERAGE,
};
use topowork_core::field::GAP_CHECK_GRID;
use topowork_core::topology::{
    chern_from_flux, chern_lattice_all, monopole_sphere_chern, phase_diagram, winding_number,
    FluxResult, PhaseOutcome,
};
use topowork_core::{Band, FieldParams, ForceModel, GridSpec, HermitianField, SpinRep};

use crate::error::CliError;
use crate::format::{read_trajectories, trajectory_table, Cell, Format, Header, Table};

#[derive(Debug, Parser)]
#[command(
    name = "topowork",
    version,
    about = "Quantized work of the synthetic electric field on a dressed three-level atom"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// `B = (alpha cos kx cos wt, alpha sin kx sin wt, gamma + nu cos wt)`
#[derive(Debug, Clone, Copy, Args)]
struct Coupling {
    /// Rabi amplitude alpha (>= 0)
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    alpha: f64,
    /// Detuning modulation nu (>= 0)
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    nu: f64,
    /// Drive angular frequency (> 0)
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    omega: f64,
    /// Wave number k (> 0)
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    k: f64,
}

#[derive(Debug, Clone, Copy, Args)]
struct Physics {
    #[command(flatten)]
    coupling: Coupling,
    /// Static detuning gamma
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    gamma: f64,
}

#[derive(Debug, Clone, Copy, Args)]
struct Mass {
    /// Atom mass (> 0)
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    mass: f64,
}

#[derive(Debug, Clone, Copy, Args)]
struct Ensemble {
    /// Release positions per wavelength
    #[arg(long, default_value_t = 32)]
    nx_init: usize,
    /// Release instants per period
    #[arg(long, default_value_t = 32)]
    nt_init: usize,
    /// Time step as a fraction of the period; 1/dt-frac must be a whole number
    #[arg(long, default_value_t = 0.0005, allow_hyphen_values = true)]
    dt_frac: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flux Chern number of the top spin-1 band over a range of gamma/nu
    PhaseDiagram {
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        gamma_min: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        gamma_max: f64,
        #[arg(long, default_value_t = 41)]
        gamma_steps: usize,
        #[command(flatten)]
        coupling: Coupling,
        /// Quadrature points per direction
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Electric field and force components on a grid over the unit cell
    Profile {
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        mass: Mass,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Winding number, flux and lattice Chern numbers
    Chern {
        #[command(flatten)]
        physics: Physics,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Level m of the spin-J multiplet (half-integers allowed)
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        band: f64,
        /// 2J of the representation used for the lattice Chern number
        #[arg(long, default_value_t = 2)]
        two_j: u32,
    },
    /// Classical trajectories released at rest across the unit cell
    Trajectories {
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        mass: Mass,
        #[command(flatten)]
        ensemble: Ensemble,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Flux reconstructed from trajectories by subtracting the known forces
    Reconstruct {
        #[command(flatten)]
        physics: Physics,
        #[command(flatten)]
        mass: Mass,
        /// Bins as NT,NX
        #[arg(long, default_value = "32,32", value_parser = parse_bins)]
        bins: (usize, usize),
        /// Trajectory CSV written by `trajectories` (same physics flags)
        #[arg(long = "in", conflicts_with = "generate", required_unless_present = "generate")]
        input: Option<PathBuf>,
        /// Integrate the ensemble in-process instead of reading a file
        #[arg(long)]
        generate: bool,
        #[command(flatten)]
        ensemble: Ensemble,
        /// Skip the force subtraction (negative control)
        #[arg(long)]
        no_subtraction: bool,
    },
    /// Chern numbers of the two bands of n . sigma over the sphere
    MonopoleCheck {
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
}

fn parse_bins(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [nt, nx] = parts.as_slice() else {
        return Err("expected NT,NX".into());
    };
    let parse = |v: &str| match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("'{v}' is not a positive integer")),
    };
    Ok((parse(nt)?, parse(nx)?))
}

impl Coupling {
    fn with_gamma(&self, gamma: f64) -> Result<FieldParams, CliError> {
        nonnegative("--alpha", self.alpha)?;
        nonnegative("--nu", self.nu)?;
        positive("--omega", self.omega)?;
        positive("--k", self.k)?;
        if !gamma.is_finite() {
            return Err(CliError::usage("--gamma", "must be finite"));
        }
        Ok(FieldParams::new(self.alpha, self.nu, gamma, self.omega, self.k)?)
    }
}

impl Physics {
    fn params(&self) -> Result<FieldParams, CliError> {
        self.coupling.with_gamma(self.gamma)
    }
}

impl Mass {
    fn value(&self) -> Result<f64, CliError> {
        positive("--mass", self.mass)
    }
}

impl Ensemble {
    fn spec(&self, params: &FieldParams) -> Result<EnsembleSpec, CliError> {
        at_least("--nx-init", self.nx_init, 1)?;
        at_least("--nt-init", self.nt_init, 1)?;
        positive("--dt-frac", self.dt_frac)?;
        if self.dt_frac > MAX_DT_FRACTION {
            return Err(CliError::usage("--dt-frac", format!("must be at most {MAX_DT_FRACTION}")));
        }
        let steps = (1.0 / self.dt_frac).round();
        if ((steps * self.dt_frac) - 1.0).abs() > 1e-9 {
            return Err(CliError::usage(
                "--dt-frac",
                "the period must be a whole number of steps (1/dt-frac an integer)",
            ));
        }
        Ok(EnsembleSpec::per_period(params, self.nt_init, self.nx_init, steps as usize))
    }
}

fn positive(flag: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(flag, format!("{v} must be > 0")))
    }
}

fn nonnegative(flag: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(flag, format!("{v} must be >= 0")))
    }
}

fn at_least(flag: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::usage(flag, format!("{v} must be at least {min}")))
    }
}

fn grid_spec(n: usize) -> Result<GridSpec, CliError> {
    at_least("--grid", n, 8)?;
    Ok(GridSpec::square(n)?)
}

/// Fails with a gap-closure error unless `|B|` stays open on the check grid.
fn require_gap(params: &FieldParams) -> Result<(), CliError> {
    let min = params.min_gap(GAP_CHECK_GRID)?;
    if min > params.degeneracy_threshold() {
        Ok(())
    } else {
        Err(CliError::Degenerate(format!(
            "min |B| = {min:e} on the {GAP_CHECK_GRID}x{GAP_CHECK_GRID} check grid \
             (gamma/nu = {})",
            params.gamma / params.nu
        )))
    }
}

fn flux_json(f: &FluxResult) -> Value {
    json!({ "raw": f.raw, "rounded": f.rounded, "residual": f.residual })
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 runtime or IO failure, 2 usage error,
/// 3 gap closure.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    match execute(cli.command) {
        Ok(summary) => match writeln!(stdout, "{summary}") {
            Ok(()) => 0,
            Err(_) => 1,
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<Value, CliError> {
    match command {
        Command::PhaseDiagram {
            gamma_min,
            gamma_max,
            gamma_steps,
            coupling,
            grid,
            out,
            format,
        } => {
            if !(gamma_min.is_finite() && gamma_max.is_finite()) || gamma_max < gamma_min {
                return Err(CliError::usage("--gamma-max", "must be finite and >= --gamma-min"));
            }
            at_least("--gamma-steps", gamma_steps, 1)?;
            let base = coupling.with_gamma(0.0)?;
            positive("--nu", base.nu)?;
            let g = grid_spec(grid)?;
            let ratios: Vec<f64> = (0..gamma_steps)
                .map(|i| match gamma_steps {
                    1 => gamma_min,
                    n => gamma_min + (gamma_max - gamma_min) * i as f64 / (n - 1) as f64,
                })
                .collect();
            let rows = phase_diagram(&base, &ratios, g)?;

            let mut table = Table::new(&["gamma_over_nu", "c1_raw", "c1_rounded", "residual", "min_gap"]);
            let mut flagged = 0;
            let mut max_residual: f64 = 0.0;
            for row in &rows {
                let (raw, rounded, residual) = match row.outcome {
                    PhaseOutcome::Computed(f) => {
                        max_residual = max_residual.max(f.residual);
                        (Cell::Real(f.raw), Cell::Int(f.rounded), Cell::Real(f.residual))
                    }
                    PhaseOutcome::NearBoundary | PhaseOutcome::Degenerate => {
                        flagged += 1;
                        (Cell::Real(f64::NAN), Cell::Empty, Cell::Real(f64::NAN))
                    }
                };
                table.push(vec![Cell::Real(row.gamma_over_nu), raw, rounded, residual, Cell::Real(row.min_gap)]);
            }
            let mut header = Header::new("phase-diagram");
            header.params(&base);
            header.set("gamma", "swept as gamma_over_nu * nu");
            header.push("gamma_over_nu_range", format!("{gamma_min} to {gamma_max} in {gamma_steps} steps"));
            header.push("grid", grid);
            header.push("flagged_rows", "within 0.05 of gamma/nu in {-1, 0, 1} or gap closed on a node");
            table.write_file(&header, &out, format)?;
            Ok(json!({
                "subcommand": "phase-diagram",
                "rows": rows.len(),
                "flagged": flagged,
                "max_residual": max_residual,
                "out": out.display().to_string(),
            }))
        }

        Command::Profile {
            physics,
            mass,
            grid,
            out,
            format,
        } => {
            let params = physics.params()?;
            let model = ForceModel::new(params, mass.value()?)?;
            let g = grid_spec(grid)?;
            let cell = (params.period(), params.wavelength());
            let mut table = Table::new(&["t", "x", "e_field", "grad_eps", "grad_metric", "total"]);
            let (mut totals, mut fields) = (Vec::new(), Vec::new());
            for i in 0..g.n_t {
                for j in 0..g.n_x {
                    let (t, x) = g.node(cell, i, j);
                    let f = model.force_components(t, x)?;
                    totals.push(f.total);
                    fields.push(f.e_field);
                    table.push(
                        [t, x, f.e_field, f.grad_eps, f.grad_metric, f.total]
                            .map(Cell::Real)
                            .to_vec(),
                    );
                }
            }
            let mut header = Header::new("profile");
            header.params(&params);
            header.push("mass", model.mass());
            header.push("grid", grid);
            header.push("row_order", "t index major, nodes t = i T / grid, x = j lambda / grid");
            table.write_file(&header, &out, format)?;
            Ok(json!({
                "subcommand": "profile",
                "rows": table.rows.len(),
                "correlation_total_e": correlation(&totals, &fields),
                "out": out.display().to_string(),
            }))
        }

        Command::Chern {
            physics,
            grid,
            band,
            two_j,
        } => {
            let params = physics.params()?;
            at_least("--two-j", two_j as usize, 1)?;
            let rep = SpinRep::new(two_j)?;
            let band = Band::from_f64(band)
                .filter(|b| rep.contains(*b))
                .ok_or_else(|| CliError::usage("--band", format!("{band} is not a level of spin {}", rep.j())))?;
            let g = grid_spec(grid)?;
            require_gap(&params)?;

            let w = winding_number(&params, g)?;
            let flux = chern_from_flux(&params, g)?;
            let lattice = chern_lattice_all(&HermitianField::new(rep, params), g)?;
            let level = lattice
                .iter()
                .find(|c| c.band == band)
                .expect("band belongs to the representation");
            // the band's flux Chern number, -2 m W, from the quadrature
            let c1 = FluxResult::from_raw(-(band.twice() as f64) * w.raw);
            Ok(json!({
                "subcommand": "chern",
                "two_j": two_j,
                "band": band.to_string(),
                "winding": flux_json(&w),
                "c1_flux": flux_json(&flux),
                "c1_lattice": level.chern,
                "residuals": {
                    "winding": w.residual,
                    "c1_flux": flux.residual,
                    "c1_lattice": (level.raw - level.chern as f64).abs(),
                },
                "rounded": c1.rounded,
                "residual": c1.residual,
                "consistent": c1.rounded == level.chern,
            }))
        }

        Command::Trajectories {
            physics,
            mass,
            ensemble,
            out,
            format,
        } => {
            let params = physics.params()?;
            let model = ForceModel::new(params, mass.value()?)?;
            let spec = ensemble.spec(&params)?;
            let trajectories = spec.integrate(&model)?;
            let table = trajectory_table(&trajectories);
            let mut header = Header::new("trajectories");
            header.params(&params);
            header.push("mass", model.mass());
            header.push("nt_init", spec.n_t);
            header.push("nx_init", spec.n_x);
            header.push("dt", format!("{:.16e}", spec.dt));
            header.push("v0", 0);
            table.write_file(&header, &out, format)?;
            Ok(json!({
                "subcommand": "trajectories",
                "trajectories": trajectories.len(),
                "samples": table.rows.len(),
                "max_speed": max_speed(&trajectories),
                "out": out.display().to_string(),
            }))
        }

        Command::Reconstruct {
            physics,
            mass,
            bins,
            input,
            generate,
            ensemble,
            no_subtraction,
        } => {
            let params = physics.params()?;
            let model = ForceModel::new(params, mass.value()?)?;
            let trajectories = match (input, generate) {
                (Some(path), false) => read_trajectories(&path, params, model.mass())?,
                (None, true) => ensemble.spec(&params)?.integrate(&model)?,
                _ => return Err(CliError::Usage("exactly one of --in and --generate is required".into())),
            };
            let subtraction = if no_subtraction {
                Subtraction::None
            } else {
                Subtraction::Full
            };
            let report: ReconstructionReport = reconstruct_with(&trajectories, &model, bins, subtraction)?;
            Ok(json!({
                "subcommand": "reconstruct",
                "estimated_flux": report.estimated_flux,
                "rounded": report.rounded,
                "residual": report.residual,
                "coverage": report.coverage,
                "quantized": report.quantized_value(MIN_COVERAGE).is_some(),
                "n_trajectories": report.n_trajectories,
                "n_samples": report.n_samples,
                "subtraction": !no_subtraction,
            }))
        }

        Command::MonopoleCheck { grid } => {
            at_least("--grid", grid, 16)?;
            let m = monopole_sphere_chern(grid, grid)?;
            Ok(json!({
                "subcommand": "monopole-check",
                "chern_upper": m.upper,
                "chern_lower": m.lower,
            }))
        }
    }
}

fn max_speed(trajectories: &[Trajectory]) -> f64 {
    trajectories
        .iter()
        .flat_map(|t| t.samples.iter())
        .map(|s| s.v.abs())
        .fold(0.0, f64::max)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}
