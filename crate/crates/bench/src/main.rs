use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pmhd_bench::{
    cmd_bench, cmd_convergence, cmd_report, cmd_roofline, cmd_run, cmd_scale, Mode, Overrides, RunConfig, WORKERS_ENV,
};

#[derive(Parser)]
#[command(name = "pmhd", version, about = "Linear-wave MHD runs, throughput benchmarks and roofline reports")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Loop pattern: simd, mdrange, flat1d or team.
    #[arg(long, global = true)]
    policy: Option<String>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evolve the wave and write a snapshot, errors.csv and profile.csv.
    Run,
    /// One period at each configured resolution.
    Convergence,
    /// Throughput over a sweep of cube sizes.
    Bench,
    /// Weak or strong thread scaling.
    Scale,
    /// Counted intensity, measured performance and roofline efficiency.
    Roofline,
    /// Portability report from recorded achieved performances.
    Report,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let env = std::env::var(WORKERS_ENV).ok();
    let flags = Overrides { policy: cli.policy.clone(), workers: cli.workers, out: cli.out.clone() };
    let cfg = RunConfig::resolve(text.as_deref(), env.as_deref(), &flags)?;
    let mode = match cli.command {
        Some(Command::Run) => Mode::Run,
        Some(Command::Convergence) => Mode::Convergence,
        Some(Command::Bench) => Mode::Bench,
        Some(Command::Scale) => Mode::Scale,
        Some(Command::Roofline) => Mode::Roofline,
        Some(Command::Report) => Mode::Report,
        None => cfg.mode,
    };
    let [n1, n2, n3] = cfg.mesh.nx;
    println!("# policy {} workers {} grid {n1}x{n2}x{n3}", cfg.policy, cfg.workers);

    match mode {
        Mode::Run => {
            let s = cmd_run(&cfg)?;
            println!("cycles {}  time {:.6}  wall {:.3} s", s.cycles, s.time, s.wall_s);
            println!("cell-updates/s {:.4e}", s.cell_updates_per_s);
            println!("L1 combined {:.6e}  max |div B| {:.3e}", s.errors.combined, s.div_b);
            println!("named regions cover {:.1}% of cycle time", 100.0 * s.coverage);
            println!("wrote {} and {}", s.snapshot.display(), s.errors_csv.display());
        }
        Mode::Convergence => {
            for r in cmd_convergence(&cfg)? {
                let o = r.order.map_or(String::from("-"), |o| format!("{o:.3}"));
                println!(
                    "n {:4}  cycles {:5}  L1 {:.6e}  div B {:.2e}  order {o}",
                    r.resolution, r.cycles, r.errors.combined, r.div_b
                );
            }
        }
        Mode::Bench => {
            println!("size,policy,workers,cycles,wall_s,cell_updates_per_s");
            for r in cmd_bench(&cfg)? {
                println!("{},{},{},{},{},{}", r.size, r.policy, r.workers, r.cycles, r.wall_s, r.cell_updates_per_s);
            }
            println!("# context only, not asserted here: a single V100 reaches more than 1e8 cell-updates/s");
        }
        Mode::Scale => {
            let rep = cmd_scale(&cfg)?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            for r in &rep.rows {
                println!(
                    "{} workers {:3}  cells {:9}  p80 {:.4e} cell-updates/s  efficiency {:.3}",
                    rep.mode.name(),
                    r.workers,
                    r.cells,
                    r.p80_cell_updates_per_s,
                    r.efficiency
                );
            }
        }
        Mode::Roofline => {
            let s = cmd_roofline(&cfg)?;
            println!("platform {}  T_peak {:.3e} FLOP/s  dram {:.3e} B/s", s.platform.id, s.platform.t_peak, s.platform.bandwidth("dram").unwrap_or(0.0));
            println!("per cycle: {:.4e} FLOP, {:.4e} B, intensity {:.4}", s.flops_per_cycle, s.bytes_per_cycle, s.flops_per_cycle / s.bytes_per_cycle);
            println!("achieved {:.4e} FLOP/s, cap {:.4e}, efficiency {:.4}", s.run.epsilon, s.cap, s.efficiency);
            if s.exceeds_cap {
                eprintln!("warning: achieved performance exceeds the roofline cap");
            }
        }
        Mode::Report => print!("{}", cmd_report(&cfg)?.csv),
    }
    Ok(())
}
