//! `key = value` run configuration.
//!
//! Later keys override earlier ones; `#` starts a comment. Values resolve in
//! the order default, `PMHD_WORKERS`, config file, command-line flag, each
//! overriding the last.

use std::path::PathBuf;
use std::str::FromStr;

use pmhd_core::exec::{LoopPattern, TileExtents};
use pmhd_core::mesh::MeshConfig;
use pmhd_core::mhd::{EmfAverage, RiemannSolver, SolverOptions, WaveSetup};

use crate::BenchError;

pub const WORKERS_ENV: &str = "PMHD_WORKERS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Run,
    Convergence,
    Bench,
    Scale,
    Roofline,
    Report,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "run" => Mode::Run,
            "convergence" => Mode::Convergence,
            "bench" => Mode::Bench,
            "scale" => Mode::Scale,
            "roofline" => Mode::Roofline,
            "report" => Mode::Report,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScaleMode {
    #[default]
    Weak,
    Strong,
}

impl FromStr for ScaleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weak" => Ok(ScaleMode::Weak),
            "strong" => Ok(ScaleMode::Strong),
            _ => Err(format!("unknown scaling mode `{s}` (expected weak or strong)")),
        }
    }
}

impl ScaleMode {
    pub fn name(self) -> &'static str {
        match self {
            ScaleMode::Weak => "weak",
            ScaleMode::Strong => "strong",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub wave: WaveSetup,
    pub policy: LoopPattern,
    pub workers: usize,
    /// Worker counts swept by `scale`.
    pub worker_counts: Vec<usize>,
    pub solver: SolverOptions,
    pub cycle_limit: Option<u64>,
    /// End time; one wave period when unset.
    pub tlim: Option<f64>,
    pub out: PathBuf,
    pub mode: Mode,
    /// Cube edges swept by `bench`.
    pub bench_sizes: Vec<usize>,
    pub warmup_cycles: u64,
    pub timed_cycles: u64,
    pub scale_mode: ScaleMode,
    /// Cube edge of each worker's share in weak scaling.
    pub scale_cells: usize,
    /// Cells per wavelength visited by `convergence`.
    pub resolutions: Vec<usize>,
    pub platform_file: Option<PathBuf>,
    pub platform: String,
    /// Achieved-performance table read by `report`.
    pub runs_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: MeshConfig::default(),
            wave: WaveSetup::default(),
            policy: LoopPattern::SimdNested,
            workers: 1,
            worker_counts: vec![1, 2, 4],
            solver: SolverOptions::default(),
            cycle_limit: None,
            tlim: None,
            out: PathBuf::from("."),
            mode: Mode::Run,
            bench_sizes: vec![8, 16, 32, 64, 128],
            warmup_cycles: 2,
            timed_cycles: 5,
            scale_mode: ScaleMode::Weak,
            scale_cells: 16,
            resolutions: vec![16, 32, 64],
            platform_file: None,
            platform: "host".into(),
            runs_file: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub policy: Option<String>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

fn parse_list<T: FromStr>(v: &str) -> Option<Vec<T>> {
    let out: Option<Vec<T>> = v.split(',').map(|s| s.trim().parse().ok()).collect();
    out.filter(|l| !l.is_empty())
}

fn positive(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Resolves the full precedence chain.
    pub fn resolve(text: Option<&str>, env_workers: Option<&str>, flags: &Overrides) -> Result<Self, BenchError> {
        let mut cfg = RunConfig::default();
        if let Some(w) = env_workers {
            cfg.workers = w
                .trim()
                .parse()
                .ok()
                .and_then(positive)
                .ok_or_else(|| BenchError::Input(format!("{WORKERS_ENV}=`{w}` is not a positive integer")))?;
        }
        if let Some(t) = text {
            cfg.apply_text(t)?;
        }
        if let Some(p) = &flags.policy {
            cfg.set_policy(p).map_err(BenchError::Input)?;
        }
        if let Some(w) = flags.workers {
            cfg.workers = positive(w).ok_or_else(|| BenchError::Input("--workers must be positive".into()))?;
        }
        if let Some(o) = &flags.out {
            cfg.out = o.clone();
        }
        Ok(cfg)
    }

    fn apply_text(&mut self, text: &str) -> Result<(), BenchError> {
        let mut mb: [Option<usize>; 3] = [None; 3];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| BenchError::Config { line: n + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            self.set(key, value, &mut mb).map_err(err)?;
        }
        for d in 0..3 {
            // one block per dimension unless given
            self.mesh.mb[d] = mb[d].unwrap_or(self.mesh.nx[d]);
        }
        Ok(())
    }

    fn set_policy(&mut self, v: &str) -> Result<(), String> {
        let team = match self.policy {
            LoopPattern::TiledTeam { team_size, tile } => Some((team_size, tile)),
            _ => None,
        };
        self.policy = v.parse().map_err(|e: pmhd_core::exec::ExecError| e.to_string())?;
        if let (LoopPattern::TiledTeam { team_size, tile }, Some(t)) = (&mut self.policy, team) {
            (*team_size, *tile) = t;
        }
        Ok(())
    }

    fn team_mut(&mut self) -> Result<(&mut usize, &mut TileExtents), String> {
        match &mut self.policy {
            LoopPattern::TiledTeam { team_size, tile } => Ok((team_size, tile)),
            _ => Err("team parameters need `policy = team` earlier in the file".into()),
        }
    }

    fn set(&mut self, key: &str, v: &str, mb: &mut [Option<usize>; 3]) -> Result<(), String> {
        let bad = || format!("malformed value `{v}` for `{key}`");
        let uint = || v.parse::<usize>().map_err(|_| bad());
        let real = || v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
        let int = || v.parse::<i32>().map_err(|_| bad());
        let path = || (!v.is_empty()).then(|| PathBuf::from(v)).ok_or_else(bad);
        match key {
            "nx1" | "nx2" | "nx3" => self.mesh.nx[key.as_bytes()[2] as usize - b'1' as usize] = uint()?,
            "mb1" | "mb2" | "mb3" => mb[key.as_bytes()[2] as usize - b'1' as usize] = Some(uint()?),
            "ng" => self.mesh.ng = uint()?,
            "x1len" | "x2len" | "x3len" => self.mesh.extent[key.as_bytes()[1] as usize - b'1' as usize] = real()?,
            "gamma" => self.mesh.gamma = real()?,
            "cfl" => self.mesh.cfl = real()?,
            "rho" => self.wave.background.rho = real()?,
            "pressure" => self.wave.background.p = real()?,
            "v1" | "v2" | "v3" => self.wave.background.v[key.as_bytes()[1] as usize - b'1' as usize] = real()?,
            "b1" | "b2" | "b3" => self.wave.background.b[key.as_bytes()[1] as usize - b'1' as usize] = real()?,
            "wave1" | "wave2" | "wave3" => self.wave.wavevector[key.as_bytes()[4] as usize - b'1' as usize] = int()?,
            "amplitude" => self.wave.amplitude = real()?,
            "policy" => self.set_policy(v)?,
            "team_size" => *self.team_mut()?.0 = uint()?,
            "tile_k" => self.team_mut()?.1.k = uint()?,
            "tile_j" => self.team_mut()?.1.j = uint()?,
            "tile_i" => self.team_mut()?.1.i = uint()?,
            "workers" => self.workers = positive(uint()?).ok_or_else(bad)?,
            "worker_counts" => {
                self.worker_counts = parse_list(v).filter(|l: &Vec<usize>| l.iter().all(|&w| w > 0)).ok_or_else(bad)?
            }
            "riemann" => self.solver.riemann = v.parse::<RiemannSolver>()?,
            "emf" => self.solver.emf = v.parse::<EmfAverage>()?,
            "cycle_limit" => self.cycle_limit = Some(v.parse().map_err(|_| bad())?),
            "tlim" => self.tlim = Some(real()?),
            "out" => self.out = path()?,
            "mode" => self.mode = v.parse()?,
            "bench_sizes" => self.bench_sizes = parse_list(v).ok_or_else(bad)?,
            "warmup_cycles" => self.warmup_cycles = v.parse().map_err(|_| bad())?,
            "timed_cycles" => self.timed_cycles = v.parse().ok().filter(|&c| c > 0).ok_or_else(bad)?,
            "scale_mode" => self.scale_mode = v.parse()?,
            "scale_cells" => self.scale_cells = positive(uint()?).ok_or_else(bad)?,
            "resolutions" => self.resolutions = parse_list(v).ok_or_else(bad)?,
            "platform_file" => self.platform_file = Some(path()?),
            "platform" => self.platform = v.to_string(),
            "runs_file" => self.runs_file = Some(path()?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}
