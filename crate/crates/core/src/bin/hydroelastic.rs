use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydroelastic::experiments::{
    coin_scenario, convergence_study, run_scenario_with, run_spinning_disk, tessellation_report, CoinParameters,
    FileObserver, RunOptions, Scenario, Sweep, EPSILON_STAR,
};
use hydroelastic::Result;

#[derive(Parser)]
#[command(name = "hydroelastic", version, about = "Pressure-field contact simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trajectory.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
        /// Write a contact-surface snapshot every N steps.
        #[arg(long, value_name = "N")]
        snapshot_every: Option<usize>,
        /// Write every contact constraint of every step to constraints.csv.
        #[arg(long)]
        dump_constraints: bool,
    },
    /// Convergence study over time step or resolution.
    Study {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', conflicts_with = "sweep_dx", required_unless_present = "sweep_dx")]
        sweep_dt: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sweep_dx: Option<Vec<f64>>,
        /// Recording interval shared by all runs (s); defaults to the largest
        /// swept time step, or the scenario time step for resolution sweeps.
        #[arg(long)]
        interval: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Compare polygonal and triangulated tessellations step by step.
    Report {
        config: PathBuf,
        #[arg(long, required = true)]
        tessellation: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Spinning-disk benchmark over several initial slip-to-spin ratios.
    Disk {
        /// Scenario with an [experiment] table; the built-in coin otherwise.
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2,10")]
        eps0: Vec<f64>,
        /// Mesh resolution of the built-in coin (m).
        #[arg(long)]
        resolution: Option<f64>,
        /// Time step of the built-in coin (s).
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn run(config: &Path, out: &Path, snapshot_every: Option<usize>, dump: bool) -> Result<()> {
    let scenario = Scenario::load(config)?;
    prepare(out)?;
    let mut observer = FileObserver::new(out, snapshot_every, dump)?;
    let options = RunOptions { retry_half_step: true };
    let result = run_scenario_with(&scenario, options, &mut observer)?;
    result.record.write_csv(out.join("trajectory.csv"))?;
    std::fs::write(out.join("timing.txt"), result.stats.to_text())?;
    println!(
        "{}: {} steps, {} rows, {} retries",
        scenario.name,
        result.stats.steps,
        result.record.rows.len(),
        result.stats.retries
    );
    if result.stats.retries > 0 {
        eprintln!("warning: {} steps were retried at half the time step", result.stats.retries);
    }
    Ok(())
}

fn study(config: &Path, sweep: Sweep, interval: Option<f64>, out: &Path) -> Result<()> {
    let scenario = Scenario::load(config)?;
    let interval = interval.unwrap_or_else(|| match &sweep {
        Sweep::TimeStep(v) => v.iter().copied().fold(0.0, f64::max),
        Sweep::Resolution(_) => scenario.solver.dt,
    });
    prepare(out)?;
    let result = convergence_study(&scenario, &sweep, interval)?;
    std::fs::write(out.join(format!("study_{}.csv", result.label)), result.to_csv())?;
    for (h, e) in &result.points {
        println!("{} = {h:e}  error = {e:e}", result.label);
    }
    println!("slope {:.4}", result.slope);
    Ok(())
}

fn report(config: &Path, out: &Path) -> Result<()> {
    let scenario = Scenario::load(config)?;
    prepare(out)?;
    let report = tessellation_report(&scenario)?;
    std::fs::write(out.join("tessellation.csv"), report.to_csv())?;
    println!("mean face ratio {:.4}", report.mean_face_ratio());
    println!("max relative force difference {:e}", report.max_force_difference());
    Ok(())
}

fn disk(config: Option<&Path>, eps0: &[f64], resolution: Option<f64>, dt: Option<f64>, out: &Path) -> Result<()> {
    let base = match config {
        Some(p) => Some(Scenario::load(p)?),
        None => None,
    };
    let mut params = CoinParameters::default();
    if let Some(r) = resolution {
        params.resolution = r;
    }
    if let Some(dt) = dt {
        params.dt = dt;
    }
    prepare(out)?;
    let mut csv = String::from("# schema: hydroelastic-disk/1\neps0,eps_star,rel_error,stop_time,retries\n");
    for &e0 in eps0 {
        let scenario = match &base {
            Some(s) => with_initial_ratio(s, e0)?,
            None => coin_scenario(&params, e0),
        };
        let run = run_spinning_disk(&scenario, RunOptions { retry_half_step: true })?;
        let rel = (run.epsilon - EPSILON_STAR) / EPSILON_STAR;
        println!(
            "eps0 = {e0:<5}  eps* = {:.5}  ({:+.2}% vs {EPSILON_STAR})  stopped at t = {:.3} s",
            run.epsilon,
            rel * 100.0,
            run.stop_time
        );
        csv.push_str(&format!(
            "{e0},{},{rel},{},{}\n",
            run.epsilon, run.stop_time, run.result.stats.retries
        ));
    }
    std::fs::write(out.join("disk.csv"), csv)?;
    Ok(())
}

/// Rescale the disk's initial speed so that v₀ = ε₀·ω₀·R along its current
/// direction (+x when at rest).
fn with_initial_ratio(base: &Scenario, e0: f64) -> Result<Scenario> {
    let (idx, exp) = base.disk()?;
    let mut s = base.clone();
    let body = &mut s.bodies[idx];
    let spin = body.angular_velocity[2].abs();
    let v = body.velocity;
    let speed = v[0].hypot(v[1]);
    let dir = if speed > 0.0 { [v[0] / speed, v[1] / speed] } else { [1.0, 0.0] };
    let target = e0 * spin * exp.radius;
    body.velocity = [dir[0] * target, dir[1] * target, v[2]];
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            output,
            snapshot_every,
            dump_constraints,
        } => run(config, &output.out, *snapshot_every, *dump_constraints),
        Command::Study {
            config,
            sweep_dt,
            sweep_dx,
            interval,
            output,
        } => {
            let sweep = match (sweep_dt, sweep_dx) {
                (Some(v), _) => Sweep::TimeStep(v.clone()),
                (None, Some(v)) => Sweep::Resolution(v.clone()),
                (None, None) => unreachable!("clap requires one sweep"),
            };
            study(config, sweep, *interval, &output.out)
        }
        Command::Report { config, output, .. } => report(config, &output.out),
        Command::Disk {
            config,
            eps0,
            resolution,
            dt,
            output,
        } => disk(config.as_deref(), eps0, *resolution, *dt, &output.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
