//! `P_max = min over m of min(T_peak, B(m) I(m))` and `e = eps / cap`.

use super::platform::RooflinePlatform;
use super::PerfError;

/// Arithmetic intensities (FLOP per byte) of one application and problem,
/// per memory space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelIntensitySet {
    pub app: String,
    pub problem: String,
    pub intensity: Vec<(String, f64)>,
}

impl KernelIntensitySet {
    pub fn new(app: &str, problem: &str) -> Self {
        KernelIntensitySet { app: app.into(), problem: problem.into(), intensity: Vec::new() }
    }

    pub fn with(mut self, space: &str, intensity: f64) -> Self {
        self.intensity.push((space.to_ascii_lowercase(), intensity));
        self
    }

    pub fn get(&self, space: &str) -> Option<f64> {
        self.intensity.iter().find(|(s, _)| s.eq_ignore_ascii_case(space)).map(|(_, i)| *i)
    }
}

/// Achieved performance of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredRun {
    pub app: String,
    pub problem: String,
    pub platform: String,
    /// FLOP per second.
    pub epsilon: f64,
    pub cell_updates_per_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Binding {
    Compute,
    Bandwidth(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RooflineCap {
    /// FLOP per second.
    pub p_max: f64,
    pub binding: Binding,
}

/// `min(T_peak, B(m) I)` for one space.
pub fn space_cap(plat: &RooflinePlatform, space: &str, intensity: f64) -> Result<f64, PerfError> {
    let b = plat
        .bandwidth(space)
        .ok_or_else(|| PerfError::UnknownSpace { platform: plat.id.clone(), space: space.to_string() })?;
    if !(intensity >= 0.0) {
        return Err(PerfError::Invalid(format!("intensity {intensity} for `{space}`")));
    }
    Ok(plat.t_peak.min(b * intensity))
}

/// Tightest ceiling over every space in `ints`. With no intensities the cap
/// is the compute peak.
pub fn roofline_cap(plat: &RooflinePlatform, ints: &KernelIntensitySet) -> Result<RooflineCap, PerfError> {
    let mut cap = RooflineCap { p_max: plat.t_peak, binding: Binding::Compute };
    for (space, i) in &ints.intensity {
        let c = space_cap(plat, space, *i)?;
        if c < cap.p_max {
            cap = RooflineCap { p_max: c, binding: Binding::Bandwidth(space.clone()) };
        }
    }
    Ok(cap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArchEfficiency {
    pub efficiency: f64,
    /// The cap it was measured against, FLOP per second.
    pub cap: f64,
    /// Achieved performance above the model ceiling; returned unclamped.
    pub exceeds_cap: bool,
}

/// Efficiency against the ceiling of one memory space.
pub fn arch_efficiency(
    run: &MeasuredRun,
    plat: &RooflinePlatform,
    ints: &KernelIntensitySet,
    space: &str,
) -> Result<ArchEfficiency, PerfError> {
    let i = ints
        .get(space)
        .ok_or_else(|| PerfError::Invalid(format!("no `{space}` intensity for {}/{}", ints.app, ints.problem)))?;
    let cap = space_cap(plat, space, i)?;
    if cap == 0.0 {
        return Err(PerfError::ZeroCap(plat.id.clone()));
    }
    if !(run.epsilon >= 0.0) {
        return Err(PerfError::Invalid(format!("achieved performance {}", run.epsilon)));
    }
    let e = run.epsilon / cap;
    Ok(ArchEfficiency { efficiency: e, cap, exceeds_cap: e > 1.0 })
}

/// Reads `app,problem,space,intensity` rows into sets grouped by
/// `(app, problem)` in first-seen order.
pub fn parse_intensity_table(text: &str) -> Result<Vec<KernelIntensitySet>, PerfError> {
    let mut out: Vec<KernelIntensitySet> = Vec::new();
    let mut header_seen = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = n + 1;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if !header_seen {
            if f != ["app", "problem", "space", "intensity"] {
                return Err(PerfError::Parse { row, msg: "expected header `app,problem,space,intensity`".into() });
            }
            header_seen = true;
            continue;
        }
        let [app, problem, space, value] = f[..] else {
            return Err(PerfError::Parse { row, msg: format!("expected 4 fields, got {}", f.len()) });
        };
        let i: f64 = value.parse().map_err(|_| PerfError::Parse { row, msg: format!("bad intensity `{value}`") })?;
        if !(i >= 0.0) {
            return Err(PerfError::Parse { row, msg: format!("negative intensity {i}") });
        }
        match out.iter_mut().find(|s| s.app == app && s.problem == problem) {
            Some(s) => s.intensity.push((space.to_ascii_lowercase(), i)),
            None => out.push(KernelIntensitySet::new(app, problem).with(space, i)),
        }
    }
    Ok(out)
}

/// DRAM intensity of the reference V100 run, back-derived from its 1.13
/// TFLOPS bandwidth ceiling.
pub fn reference_v100_intensity() -> KernelIntensitySet {
    parse_intensity_table(include_str!("../../data/v100_reference_intensity.csv"))
        .expect("bundled table parses")
        .remove(0)
}
