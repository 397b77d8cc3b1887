use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pmhd_core::exec::{Executor, LoopPolicy, ProfileReport};
use pmhd_core::mesh::{max_divergence_b, write_snapshot, Mesh, MeshConfig};
use pmhd_core::mhd::{append_errors_csv, l1_error, linear_wave_problem, L1Errors, Solver, WaveSolution};
use pmhd_core::perf::{
    arch_efficiency, load_platform_table, measure_host, portability_report_csv, reference_platforms,
    reference_v100_intensity, roofline_report_csv, roofline_svg, space_cap, HostMeasureOptions, KernelIntensitySet,
    MeasuredRun, PortabilityRow, RooflinePlatform,
};
use pmhd_core::{Counted, Real};

use crate::config::{RunConfig, ScaleMode};
use crate::stats::{order, percentile};
use crate::{BenchError, IoContext};

fn executor(cfg: &RunConfig, workers: usize) -> Result<Executor, BenchError> {
    Ok(Executor::new(LoopPolicy::new(cfg.policy, workers))?)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, BenchError> {
    fs::create_dir_all(&cfg.out).at(&cfg.out)?;
    Ok(&cfg.out)
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, BenchError> {
    fs::write(&path, text).at(&path)?;
    Ok(path)
}

/// Fraction of the `cycle` region's time spent in the regions nested in it.
/// Expects a report that holds only whole cycles.
pub fn region_coverage(report: &ProfileReport) -> f64 {
    let cycle = report.time("cycle");
    if cycle <= 0.0 {
        return 0.0;
    }
    report.regions.iter().filter(|r| r.name != "cycle").map(|r| r.time_s).sum::<f64>() / cycle
}

struct Problem<T> {
    mesh: Mesh<T>,
    sol: WaveSolution,
    solver: Solver<T>,
}

fn problem<T: Real>(exec: &Executor, cfg: &RunConfig, mesh: &MeshConfig) -> Result<Problem<T>, BenchError> {
    let (mesh, sol) = linear_wave_problem::<T>(exec, mesh, cfg.wave)?;
    let solver = Solver::new(&mesh, cfg.solver);
    Ok(Problem { mesh, sol, solver })
}

/// Runs `n` unbounded cycles, returning the wall time of each.
fn timed_cycles<T: Real>(exec: &Executor, p: &mut Problem<T>, n: u64) -> Result<Vec<f64>, BenchError> {
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let t0 = Instant::now();
        p.solver.cycle(exec, &mut p.mesh, None)?;
        out.push(t0.elapsed().as_secs_f64());
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub cycles: u64,
    pub time: f64,
    pub wall_s: f64,
    pub cells: usize,
    pub cell_updates_per_s: f64,
    pub errors: L1Errors,
    pub div_b: f64,
    /// Share of cycle time inside named kernel regions.
    pub coverage: f64,
    pub profile: ProfileReport,
    pub snapshot: PathBuf,
    pub errors_csv: PathBuf,
}

/// Evolves the wave to `tlim` (one period by default) or the cycle limit and
/// writes `snapshot.pmhd`, `errors.csv` and `profile.csv`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, BenchError> {
    let dir = out_dir(cfg)?.to_path_buf();
    let exec = executor(cfg, cfg.workers)?;
    let mut p = problem::<f64>(&exec, cfg, &cfg.mesh)?;
    let t_end = cfg.tlim.unwrap_or_else(|| p.sol.period());
    exec.profiler().reset();
    let t0 = Instant::now();
    let cycles = p.solver.run_until(&exec, &mut p.mesh, t_end, cfg.cycle_limit)?;
    let wall_s = t0.elapsed().as_secs_f64();

    let cells = p.mesh.active_cells();
    let errors = l1_error(&p.mesh, &p.sol, p.mesh.time);
    let div_b = max_divergence_b(&exec, &p.mesh);
    let snapshot = dir.join("snapshot.pmhd");
    write_snapshot(&snapshot, &p.mesh)?;
    let errors_csv = dir.join("errors.csv");
    append_errors_csv(&errors_csv, cfg.mesh.nx[0], cycles, &errors).at(&errors_csv)?;
    let profile = exec.profiler().report();
    write(dir.join("profile.csv"), &profile.to_csv(None))?;
    let rate = if wall_s > 0.0 { (cells as u64 * cycles) as f64 / wall_s } else { 0.0 };
    Ok(RunSummary {
        cycles,
        time: p.mesh.time,
        wall_s,
        cells,
        cell_updates_per_s: rate,
        errors,
        div_b,
        coverage: region_coverage(&profile),
        profile,
        snapshot,
        errors_csv,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub nx: [usize; 3],
    pub cycles: u64,
    pub errors: L1Errors,
    pub div_b: f64,
    /// Order against the previous row.
    pub order: Option<f64>,
}

/// Grid with `n` cells per period along every axis the wavevector crosses;
/// other axes keep the configured cell count.
pub fn convergence_mesh(cfg: &RunConfig, n: usize) -> MeshConfig {
    let mut m = cfg.mesh.clone();
    for d in 0..3 {
        let w = cfg.wave.wavevector[d].unsigned_abs() as usize;
        if w != 0 {
            m.nx[d] = n * w;
        }
    }
    m.mb = m.nx;
    m
}

/// One period at each resolution; errors are appended to `errors.csv`.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<Vec<ConvergenceRow>, BenchError> {
    let dir = out_dir(cfg)?.to_path_buf();
    let exec = executor(cfg, cfg.workers)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &cfg.resolutions {
        let mesh = convergence_mesh(cfg, n);
        let mut p = problem::<f64>(&exec, cfg, &mesh)?;
        let cycles = p.solver.run_until(&exec, &mut p.mesh, p.sol.period(), cfg.cycle_limit)?;
        let errors = l1_error(&p.mesh, &p.sol, p.mesh.time);
        let path = dir.join("errors.csv");
        append_errors_csv(&path, n, cycles, &errors).at(&path)?;
        let order = rows.last().map(|r| order(r.errors.combined, errors.combined, r.resolution, n));
        rows.push(ConvergenceRow { resolution: n, nx: mesh.nx, cycles, errors, div_b: max_divergence_b(&exec, &p.mesh), order });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub policy: String,
    pub workers: usize,
    pub cycles: u64,
    pub wall_s: f64,
    pub cell_updates_per_s: f64,
}

pub const BENCH_CSV_HEADER: &str = "size,policy,workers,cycles,wall_s,cell_updates_per_s";

/// Throughput over cubes of each configured size, one block each; warm-up
/// cycles are run first and not timed. Writes `bench.csv`.
pub fn cmd_bench(cfg: &RunConfig) -> Result<Vec<BenchRow>, BenchError> {
    let dir = out_dir(cfg)?.to_path_buf();
    let exec = executor(cfg, cfg.workers)?;
    let mut rows = Vec::new();
    let mut csv = format!("{BENCH_CSV_HEADER}\n");
    for &s in &cfg.bench_sizes {
        let mesh = MeshConfig { nx: [s; 3], mb: [s; 3], ..cfg.mesh.clone() };
        let mut p = problem::<f64>(&exec, cfg, &mesh)?;
        timed_cycles(&exec, &mut p, cfg.warmup_cycles)?;
        let wall_s: f64 = timed_cycles(&exec, &mut p, cfg.timed_cycles)?.iter().sum();
        let rate = (s * s * s) as f64 * cfg.timed_cycles as f64 / wall_s;
        let row = BenchRow {
            size: s,
            policy: cfg.policy.name().to_string(),
            workers: cfg.workers,
            cycles: cfg.timed_cycles,
            wall_s,
            cell_updates_per_s: rate,
        };
        let _ = writeln!(csv, "{},{},{},{},{},{}", row.size, row.policy, row.workers, row.cycles, row.wall_s, row.cell_updates_per_s);
        rows.push(row);
    }
    write(dir.join("bench.csv"), &csv)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleRow {
    pub workers: usize,
    pub cells: usize,
    /// Warm-up plus timed cycles, as held by the snapshot.
    pub cycles: u64,
    pub p80_cell_updates_per_s: f64,
    pub efficiency: f64,
    pub snapshot: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReport {
    pub mode: ScaleMode,
    pub rows: Vec<ScaleRow>,
    pub warnings: Vec<String>,
}

pub const SCALE_CSV_HEADER: &str = "mode,workers,cells,cycles,p80_cell_updates_per_s,efficiency";

/// Thread scaling with the 80th percentile of per-cycle throughput.
///
/// Weak mode gives each worker a `scale_cells` cube, stacked along x1 as
/// separate meshblocks; strong mode keeps the configured grid. A single
/// worker baseline always runs first. Writes `scale.csv` and one snapshot per
/// worker count.
pub fn cmd_scale(cfg: &RunConfig) -> Result<ScaleReport, BenchError> {
    let dir = out_dir(cfg)?.to_path_buf();
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut counts = vec![1];
    counts.extend(cfg.worker_counts.iter().copied().filter(|&w| w != 1));
    let mut warnings = Vec::new();
    let mut rows: Vec<ScaleRow> = Vec::new();
    let mut csv = format!("{SCALE_CSV_HEADER}\n");
    for w in counts {
        if w > hw {
            warnings.push(format!("{w} workers exceed the {hw} hardware threads; timings will be oversubscribed"));
        }
        let mesh = match cfg.scale_mode {
            ScaleMode::Weak => {
                let c = cfg.scale_cells;
                let e = cfg.mesh.extent[0];
                MeshConfig { nx: [w * c, c, c], mb: [c; 3], extent: [w as f64 * e, e, e], ..cfg.mesh.clone() }
            }
            ScaleMode::Strong => cfg.mesh.clone(),
        };
        let exec = executor(cfg, w)?;
        let mut p = problem::<f64>(&exec, cfg, &mesh)?;
        timed_cycles(&exec, &mut p, cfg.warmup_cycles)?;
        let cells = mesh.active_cells();
        let per_cycle: Vec<f64> =
            timed_cycles(&exec, &mut p, cfg.timed_cycles)?.iter().map(|t| cells as f64 / t).collect();
        let p80 = percentile(&per_cycle, 80.0).expect("at least one timed cycle");
        let base = rows.first().map_or(p80, |r| r.p80_cell_updates_per_s);
        let efficiency = p80 / (w as f64 * base);
        let snapshot = dir.join(format!("scale_w{w}.pmhd"));
        write_snapshot(&snapshot, &p.mesh)?;
        let row = ScaleRow { workers: w, cells, cycles: p.mesh.cycle, p80_cell_updates_per_s: p80, efficiency, snapshot };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            cfg.scale_mode.name(),
            row.workers,
            row.cells,
            row.cycles,
            row.p80_cell_updates_per_s,
            row.efficiency
        );
        rows.push(row);
    }
    write(dir.join("scale.csv"), &csv)?;
    Ok(ScaleReport { mode: cfg.scale_mode, rows, warnings })
}

#[derive(Clone, Debug)]
pub struct RooflineSummary {
    pub platform: RooflinePlatform,
    pub intensity: KernelIntensitySet,
    pub run: MeasuredRun,
    pub flops_per_cycle: f64,
    pub bytes_per_cycle: f64,
    pub cap: f64,
    pub efficiency: f64,
    pub exceeds_cap: bool,
}

fn find_platform(cfg: &RunConfig) -> Result<RooflinePlatform, BenchError> {
    let table = match &cfg.platform_file {
        Some(path) => load_platform_table(path)?,
        None => reference_platforms(),
    };
    table
        .into_iter()
        .find(|p| p.id == cfg.platform)
        .ok_or_else(|| BenchError::Input(format!("no platform record `{}`", cfg.platform)))
}

/// Counts FLOPs and bytes per cycle, times the same problem, takes the host
/// record (measured when no platform file is given and the id is `host`) and
/// writes `roofline.csv`, `roofline.svg`, `portability.csv` and
/// `profile.csv`.
pub fn cmd_roofline(cfg: &RunConfig) -> Result<RooflineSummary, BenchError> {
    let dir = out_dir(cfg)?.to_path_buf();
    let exec = executor(cfg, cfg.workers)?;
    let n = cfg.timed_cycles;

    let mut counted = problem::<Counted>(&exec, cfg, &cfg.mesh)?;
    exec.profiler().reset();
    exec.profiler().set_counting(true);
    timed_cycles(&exec, &mut counted, n)?;
    exec.profiler().set_counting(false);
    let profile = exec.profiler().report();
    let cyc = profile.get("cycle").expect("cycle region recorded");
    let flops = cyc.flops.unwrap_or(0) as f64 / n as f64;
    let bytes = cyc.bytes().unwrap_or(0) as f64 / n as f64;
    if bytes == 0.0 {
        return Err(BenchError::Input("counting run recorded no memory traffic".into()));
    }
    write(dir.join("profile.csv"), &profile.to_csv(None))?;

    let mut plain = problem::<f64>(&exec, cfg, &cfg.mesh)?;
    timed_cycles(&exec, &mut plain, cfg.warmup_cycles)?;
    let wall: f64 = timed_cycles(&exec, &mut plain, n)?.iter().sum();
    let cells = cfg.mesh.active_cells() as f64;

    let platform = if cfg.platform_file.is_none() && cfg.platform == "host" {
        measure_host(&exec, "host", HostMeasureOptions::default())
    } else {
        find_platform(cfg)?
    };
    let [n1, n2, n3] = cfg.mesh.nx;
    let problem_name = format!("linear-wave-{n1}x{n2}x{n3}");
    let intensity = KernelIntensitySet::new("pmhd", &problem_name).with("dram", flops / bytes);
    let run = MeasuredRun {
        app: "pmhd".into(),
        problem: problem_name,
        platform: platform.id.clone(),
        epsilon: flops * n as f64 / wall,
        cell_updates_per_s: Some(cells * n as f64 / wall),
    };
    let eff = arch_efficiency(&run, &platform, &intensity, "dram")?;

    let ints = [intensity.clone()];
    let runs = [run.clone()];
    write(dir.join("roofline.csv"), &roofline_report_csv(&platform, &ints, &runs)?)?;
    write(dir.join("roofline.svg"), &roofline_svg(&platform, &ints, &runs)?)?;
    let row = PortabilityRow::new(&platform.id, "dram", run.epsilon, eff.cap);
    write(dir.join("portability.csv"), &portability_report_csv(&[row])?)?;
    Ok(RooflineSummary {
        platform,
        intensity,
        run,
        flops_per_cycle: flops,
        bytes_per_cycle: bytes,
        cap: eff.cap,
        efficiency: eff.efficiency,
        exceeds_cap: eff.exceeds_cap,
    })
}

#[derive(Clone, Debug)]
pub struct ReportSummary {
    pub rows: Vec<PortabilityRow>,
    pub csv: String,
}

/// Parses `platform,space,epsilon_gflops[,intensity]` lines; an epsilon of
/// `unsupported` marks a platform the application cannot run on.
fn parse_runs(text: &str) -> Result<Vec<(String, String, Option<f64>, Option<f64>)>, BenchError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (n == 0 && line.starts_with("platform")) {
            continue;
        }
        let err = |msg: &str| BenchError::Config { line: n + 1, msg: msg.to_string() };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(err("expected platform,space,epsilon_gflops[,intensity]"));
        }
        let eps = match cols[2] {
            "unsupported" => None,
            v => Some(v.parse::<f64>().map_err(|_| err("epsilon_gflops is not a number"))? * 1e9),
        };
        let int = match cols.get(3) {
            Some(v) => Some(v.parse::<f64>().map_err(|_| err("intensity is not a number"))?),
            None => None,
        };
        out.push((cols[0].to_string(), cols[1].to_string(), eps, int));
    }
    Ok(out)
}

/// Portability report over recorded achieved performances. Without a runs
/// file the single reference row (0.82 TFLOPS on `tesla-v100`) is used.
/// Intensities default to the shipped reference set. Writes
/// `portability.csv`.
pub fn cmd_report(cfg: &RunConfig) -> Result<ReportSummary, BenchError> {
    let dir = out_dir(cfg)?.to_path_buf();
    let runs = match &cfg.runs_file {
        Some(path) => parse_runs(&fs::read_to_string(path).at(path)?)?,
        None => vec![("tesla-v100".into(), "dram".into(), Some(0.82e12), None)],
    };
    let table = match &cfg.platform_file {
        Some(path) => load_platform_table(path)?,
        None => reference_platforms(),
    };
    let reference = reference_v100_intensity();
    let mut rows = Vec::new();
    for (id, space, eps, int) in runs {
        let plat = table
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| BenchError::Input(format!("no platform record `{id}`")))?;
        let row = match eps {
            None => PortabilityRow::unsupported(&id, &space),
            Some(e) => {
                let i = match int.or_else(|| reference.get(&space)) {
                    Some(i) => i,
                    None => return Err(BenchError::Input(format!("no `{space}` intensity for `{id}`"))),
                };
                PortabilityRow::new(&id, &space, e, space_cap(plat, &space, i)?)
            }
        };
        rows.push(row);
    }
    let csv = portability_report_csv(&rows)?;
    write(dir.join("portability.csv"), &csv)?;
    Ok(ReportSummary { rows, csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_table() {
        let rows = parse_runs("platform,space,epsilon_gflops\nv100, dram, 820\nknl,dram,unsupported\np,l1,3,0.5\n").unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].2, Some(820e9));
        assert_eq!(rows[1].2, None);
        assert_eq!(rows[2].3, Some(0.5));
        assert!(matches!(parse_runs("a,b,c"), Err(BenchError::Config { line: 1, .. })));
    }

    #[test]
    fn coverage_of_empty_report_is_zero() {
        assert_eq!(region_coverage(&ProfileReport::default()), 0.0);
    }
}
