//! Roofline and portability reports as CSV, plus a bare-bones SVG plot.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::platform::RooflinePlatform;
use super::portability::{pp_metric, PlatformEfficiency, PortabilityInput};
use super::roofline::{space_cap, KernelIntensitySet, MeasuredRun};
use super::PerfError;

pub const ROOFLINE_CSV_HEADER: &str = "series,space,intensity,gflops";
pub const PORTABILITY_CSV_HEADER: &str = "platform,space,epsilon_gflops,cap_gflops,efficiency";

struct Series {
    name: String,
    space: String,
    points: Vec<(f64, f64)>,
}

/// Intensity axis range covering every knee and kernel, padded by 16x.
fn intensity_range(plat: &RooflinePlatform, ints: &[KernelIntensitySet]) -> (f64, f64) {
    let knees = plat.bandwidths.iter().map(|b| plat.t_peak / b.bytes_per_s);
    let kernels = ints.iter().flat_map(|s| s.intensity.iter().map(|(_, i)| *i)).filter(|i| *i > 0.0);
    let (lo, hi) = knees.chain(kernels).fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi == 0.0 {
        (1e-2, 1e2)
    } else {
        (lo / 16.0, hi * 16.0)
    }
}

fn series(plat: &RooflinePlatform, ints: &[KernelIntensitySet], runs: &[MeasuredRun]) -> Result<Vec<Series>, PerfError> {
    let (lo, hi) = intensity_range(plat, ints);
    let t = plat.t_peak / 1e9;
    let mut out = Vec::new();
    if plat.bandwidths.is_empty() {
        out.push(Series { name: "ceiling".into(), space: "compute".into(), points: vec![(lo, t), (hi, t)] });
    }
    for b in &plat.bandwidths {
        let bw = b.bytes_per_s / 1e9;
        let knee = plat.t_peak / b.bytes_per_s;
        out.push(Series { name: "ceiling".into(), space: b.space.clone(), points: vec![(lo, bw * lo), (knee, t), (hi, t)] });
    }
    for s in ints {
        for (space, i) in &s.intensity {
            let cap = space_cap(plat, space, *i)? / 1e9;
            out.push(Series { name: format!("kernel:{}/{}", s.app, s.problem), space: space.clone(), points: vec![(*i, cap)] });
        }
    }
    for r in runs {
        let e = r.epsilon / 1e9;
        out.push(Series { name: format!("achieved:{}/{}", r.app, r.problem), space: String::new(), points: vec![(lo, e), (hi, e)] });
    }
    Ok(out)
}

/// Sample points for plotting: each bandwidth ceiling as a two-segment line
/// with its knee at `T_peak / B`, one point per kernel intensity at its cap,
/// and a flat line per measured run. Performance in GFLOPS.
pub fn roofline_report_csv(
    plat: &RooflinePlatform,
    ints: &[KernelIntensitySet],
    runs: &[MeasuredRun],
) -> Result<String, PerfError> {
    let mut out = format!("{ROOFLINE_CSV_HEADER}\n");
    for s in series(plat, ints, runs)? {
        for (i, p) in &s.points {
            let _ = writeln!(out, "{},{},{},{}", s.name, s.space, i, p);
        }
    }
    Ok(out)
}

/// Log-log roofline plot of the same series.
pub fn roofline_svg(plat: &RooflinePlatform, ints: &[KernelIntensitySet], runs: &[MeasuredRun]) -> Result<String, PerfError> {
    let all = series(plat, ints, runs)?;
    let (w, h, m) = (640.0, 420.0, 50.0);
    let (xlo, xhi) = intensity_range(plat, ints);
    let ys = all.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|y| *y > 0.0);
    let (ylo, yhi) = ys.fold((f64::INFINITY, 0.0f64), |(a, b), y| (a.min(y), b.max(y)));
    let (ylo, yhi) = if yhi > 0.0 { (ylo / 2.0, yhi * 2.0) } else { (1e-3, 1.0) };
    let px = |x: f64| m + (x.log10() - xlo.log10()) / (xhi.log10() - xlo.log10()) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y.max(ylo).log10() - ylo.log10()) / (yhi.log10() - ylo.log10()) * (h - 2.0 * m);
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n");
    let _ = writeln!(out, "<rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", w - 2.0 * m, h - 2.0 * m);
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">intensity (FLOP/byte)</text>", w / 2.0, h - 12.0);
    let _ = writeln!(out, "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">GFLOPS</text>", h / 2.0, h / 2.0);
    let _ = writeln!(out, "<text x=\"{m}\" y=\"{}\">{}</text>", m - 8.0, plat.id);
    for (decade, y) in [(xlo, h - m + 14.0), (xhi, h - m + 14.0)] {
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{y}\" text-anchor=\"middle\">{decade:.3e}</text>", px(decade));
    }
    for s in &all {
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            let _ = writeln!(out, "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"crimson\"><title>{} {}</title></circle>", px(x), py(y), s.name, s.space);
        } else if s.name == "ceiling" {
            let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>", pts.join(" "));
            let (x, y) = s.points[0];
            let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", px(x) + 4.0, py(y) - 4.0, s.space);
        } else {
            let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"darkorange\" stroke-dasharray=\"6 4\"/>", pts.join(" "));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One line of the portability report. `None` efficiency marks an
/// unsupported platform.
#[derive(Clone, Debug, PartialEq)]
pub struct PortabilityRow {
    pub platform: String,
    pub space: String,
    pub epsilon_gflops: f64,
    pub cap_gflops: f64,
    pub efficiency: Option<f64>,
}

impl PortabilityRow {
    /// Efficiency is computed from the GFLOPS values as printed, so it can be
    /// recomputed from the row exactly.
    pub fn new(platform: &str, space: &str, epsilon: f64, cap: f64) -> Self {
        let (e, c) = (epsilon / 1e9, cap / 1e9);
        PortabilityRow { platform: platform.into(), space: space.into(), epsilon_gflops: e, cap_gflops: c, efficiency: Some(e / c) }
    }

    pub fn unsupported(platform: &str, space: &str) -> Self {
        PortabilityRow { platform: platform.into(), space: space.into(), epsilon_gflops: 0.0, cap_gflops: 0.0, efficiency: None }
    }
}

/// Rows followed by one `pp_metric_<space>,<value>` line per space, in
/// alphabetical order of the space.
pub fn portability_report_csv(rows: &[PortabilityRow]) -> Result<String, PerfError> {
    let mut out = format!("{PORTABILITY_CSV_HEADER}\n");
    let mut per_space: BTreeMap<&str, PortabilityInput> = BTreeMap::new();
    for r in rows {
        let eff = match r.efficiency {
            Some(e) => {
                let _ = writeln!(out, "{},{},{},{},{}", r.platform, r.space, r.epsilon_gflops, r.cap_gflops, e);
                PlatformEfficiency::Supported(e)
            }
            None => {
                let _ = writeln!(out, "{},{},,,unsupported", r.platform, r.space);
                PlatformEfficiency::Unsupported
            }
        };
        per_space.entry(&r.space).or_default().platforms.push((r.platform.clone(), eff));
    }
    for (space, input) in per_space {
        let _ = writeln!(out, "pp_metric_{space},{}", pp_metric(&input)?);
    }
    Ok(out)
}
