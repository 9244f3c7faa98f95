//! Command-line front end.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, serialize, Config, DEFAULT_CONFIG};

use crate::analytic::pair_evolution;
use crate::error::{Error, Result};
use crate::model::{derive, units, validate_with};
use crate::oracle::{pair_rotation_deviation, superoperator_deviation};
use crate::par;
use crate::quantum::C64;
use crate::sweep::{find_optimum, format_g, presets, run_point, svg_heatmap, sweep_grid, to_csv, write_atomic, Param};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Deviations above these make `oracle` exit with the numerical code.
const SUPEROPERATOR_TOL: f64 = 1e-12;
const PAIR_ROTATION_TOL: f64 = 1e-8;
const FRAME_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "pairwave", version, about = "Simultaneous EPR pairs from a qutrit coupled to resonator pairs")]
struct Cli {
    /// Worker threads for grids and propagation (0 = all cores).
    #[arg(long, global = true, env = "PAIRWAVE_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the validity ratios of the configured point.
    Validate(PointArgs),
    /// Run one point and print its fidelities.
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        /// Run even if a ratio fails hard validation.
        #[arg(long)]
        force: bool,
    },
    /// Run a one- or two-axis grid and write CSV.
    Sweep(SweepArgs),
    /// Print the closed-form pair amplitudes at a given time.
    Analytic {
        #[command(flatten)]
        point: PointArgs,
        /// Evaluate at the EPR time π/(2λ₁) of the configured couplings.
        #[arg(long, conflicts_with = "t")]
        t_op: bool,
        /// Time in ns.
        #[arg(long, required_unless_present = "t_op")]
        t: Option<f64>,
    },
    /// Cross-check the integrators against independent references.
    Oracle {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Config file, or `default` for the built-in reference point.
    #[arg(long, default_value = "default")]
    config: String,
    /// Override a parameter, e.g. `--set c1=10.2`. Repeatable.
    #[arg(long = "set", value_name = "PARAM=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Grid over g_cs/g_m and c₁ on the configured point.
    #[arg(long, conflicts_with = "fig5")]
    fig4: bool,
    /// Grid over c₁ and Ω on the configured point.
    #[arg(long)]
    fig5: bool,
    /// CSV destination; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG heatmap of F_joint (two-axis grids only).
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Run points that fail hard validation.
    #[arg(long)]
    force: bool,
    /// Write wall_s as 0 so reruns give identical bytes.
    #[arg(long)]
    no_timing: bool,
}

/// Parse `argv` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    let workers = cli.workers.unwrap_or(0);
    match par::with_workers(workers, || execute(cli.command, workers)) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USER
            }
        }
    }
}

fn execute(command: Command, workers: usize) -> Result<i32> {
    match command {
        Command::Validate(point) => {
            let (cfg, overrides) = load(&point)?;
            let (spec, _) = cfg.scenario.resolve(&overrides)?;
            println!("{}", validate_with(&spec, cfg.scenario.thresholds));
            Ok(EXIT_OK)
        }
        Command::Simulate { point, force } => {
            let (mut cfg, overrides) = load(&point)?;
            cfg.scenario.force |= force;
            let r = run_point(&cfg.scenario, &overrides)?;
            let line = |k: &str, v: f64| println!("{k:<12} {}", format_g(v, 9));
            line("c1", r.c1());
            line("omega_mhz", r.omega_mhz);
            line("t_op_ns", r.t_op_ns);
            line("F_joint", r.f_joint);
            for (j, f) in r.f_pairs.iter().enumerate() {
                line(&format!("F_pair{}", j + 1), *f);
            }
            line("trace_error", r.trace_error);
            line("min_eig", r.min_eigenvalue);
            println!("{:<12} {}", "steps", r.steps);
            println!("{:<12} {}", "validity", r.validity);
            println!("{:<12} {:.3}", "wall_s", r.wall_seconds);
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => sweep(args, workers),
        Command::Analytic { point, t_op, t } => {
            let (cfg, overrides) = load(&point)?;
            let (spec, _) = cfg.scenario.resolve(&overrides)?;
            let lambda = derive(&spec).lambda;
            let t = if t_op { std::f64::consts::PI / (2.0 * lambda[0]) } else { t.unwrap_or(0.0) };
            println!("t_ns {}", format_g(t, 9));
            for (j, (c, s)) in pair_evolution(&lambda, t).pairs.iter().enumerate() {
                println!(
                    "pair {}  lambda_mhz {}  |10> {}  |01> {}",
                    j + 1,
                    format_g(units::to_mhz(lambda[j]), 6),
                    complex_g(*c),
                    complex_g(*s),
                );
            }
            Ok(EXIT_OK)
        }
        Command::Oracle { seed } => oracle(seed),
    }
}

fn sweep(args: SweepArgs, workers: usize) -> Result<i32> {
    let (mut cfg, overrides) = load(&args.point)?;
    if !overrides.is_empty() {
        let (spec, dt_ps) = cfg.scenario.resolve(&overrides)?;
        cfg.scenario.spec = spec;
        cfg.scenario.dt_ps = dt_ps;
    }
    let axes = if args.fig4 {
        cfg.scenario.force = true;
        presets::detuning_axes()?
    } else if args.fig5 {
        cfg.scenario.force = true;
        presets::drive_axes()?
    } else if cfg.axes.is_empty() {
        return Err(Error::Config("no sweep axes: add [[sweep.axes]] to the config or pass --fig4/--fig5".into()));
    } else {
        cfg.axes.clone()
    };
    cfg.scenario.force |= args.force;

    let table = sweep_grid(&cfg.scenario, &axes, workers)?;
    let csv = to_csv(&table, !args.no_timing);
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.svg {
        let title = format!("F_joint over {}", axes.iter().map(|a| a.param.name()).collect::<Vec<_>>().join(" x "));
        write_atomic(path, svg_heatmap(&table, &title)?.as_bytes())?;
    }
    let failed = table.records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} points failed", table.records.len());
    }
    // Keep stdout clean for the CSV when it goes there.
    let report = |s: String| if args.out.is_some() { println!("{s}") } else { eprintln!("{s}") };
    match find_optimum(&table) {
        Some(opt) => report(format!(
            "optimum: c1 = {}, omega_mhz = {}, gcs_ratio = {}, F_joint = {}",
            format_g(opt.record.c1(), 6),
            format_g(opt.record.omega_mhz, 6),
            format_g(opt.record.gcs_ratio, 6),
            format_g(opt.record.f_joint, 6)
        )),
        None => report("optimum: none (every point failed)".into()),
    }
    Ok(EXIT_OK)
}

fn oracle(seed: u64) -> Result<i32> {
    let superop = superoperator_deviation(6, 5, seed)?;
    let mut rotation: f64 = 0.0;
    for n in 1..=3 {
        rotation = rotation.max(pair_rotation_deviation(n, 20, seed + n as u64, 0.02)?);
    }
    let frame = frame_check()?;
    let mut ok = true;
    for (name, value, tol) in [
        ("superoperator", superop, SUPEROPERATOR_TOL),
        ("pair_rotation", rotation, PAIR_ROTATION_TOL),
        ("frame_vs_rk4", frame, FRAME_TOL),
    ] {
        let pass = value <= tol;
        ok &= pass;
        println!("{name:<14} {:>10.3e}  tol {tol:.0e}  {}", value, if pass { "ok" } else { "FAIL" });
    }
    Ok(if ok { EXIT_OK } else { EXIT_NUMERICAL })
}

/// Exact propagation in the static frame against RK4 at a quarter of the
/// default step, for the reference point without crosstalk at n_max = 1.
fn frame_check() -> Result<f64> {
    use crate::analytic::initial_state;
    use crate::dynamics::{default_step, propagate_state};
    use crate::hamiltonian::build_full;
    use crate::model::SystemSpec;
    use crate::oracle::{frame_propagate, max_diff};

    let mut spec = SystemSpec::reference(12.0)?;
    spec.n_max = 1;
    spec.include_crosstalk = false;
    let h = build_full(&spec)?;
    let psi0 = initial_state(&spec)?;
    let t = 5.0;
    let exact = frame_propagate(&h, &psi0, t)?;
    let rk = propagate_state(&h, &psi0, t, default_step(&h) / 4.0)?.final_state;
    Ok(max_diff(&exact, &rk))
}

fn complex_g(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", format_g(z.re, 9), format_g(z.im.abs(), 9))
}

fn load(point: &PointArgs) -> Result<(Config, Vec<(Param, f64)>)> {
    let text = if point.config == "default" {
        DEFAULT_CONFIG.to_string()
    } else {
        std::fs::read_to_string(Path::new(&point.config))
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", point.config)))?
    };
    let cfg = parse_config(&text)?;
    let overrides = point.overrides.iter().map(|s| parse_override(s)).collect::<Result<_>>()?;
    Ok((cfg, overrides))
}

fn parse_override(s: &str) -> Result<(Param, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("`--set {s}`: expected PARAM=VALUE")))?;
    let value = v
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("`--set {s}`: `{v}` is not a number")))?;
    Ok((k.trim().parse()?, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        assert_eq!(parse_override("c1=10.2").unwrap(), (Param::C1, 10.2));
        assert_eq!(parse_override(" omega_mhz = 110 ").unwrap(), (Param::OmegaMhz, 110.0));
        assert!(parse_override("c1").is_err());
        assert!(parse_override("c1=x").is_err());
        assert!(parse_override("kappa=1").is_err());
    }

    #[test]
    fn flag_errors_are_user_errors() {
        assert_eq!(run(["pairwave", "--bogus"]), EXIT_USER);
        assert_eq!(run(["pairwave", "analytic"]), EXIT_USER);
        assert_eq!(run(["pairwave", "--help"]), EXIT_OK);
        assert_eq!(run(["pairwave", "validate", "--config", "/nonexistent.toml"]), EXIT_USER);
    }

    #[test]
    fn complex_formatting() {
        assert_eq!(complex_g(C64::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(complex_g(C64::new(0.0, 1.0)), "0+1i");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
