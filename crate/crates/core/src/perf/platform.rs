//! Platform records: peak throughput and per-memory-space bandwidths.
//!
//! CSV schema: a header starting with `id,t_peak_gflops`, then any number of
//! `bw_<space>_gbs` columns, and optional `src_t_peak` / `src_<space>`
//! columns tagging where each number came from. Cells may be a bare number
//! or `column=value`. Empty bandwidth cells mean the space is not modeled on
//! that platform.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::PerfError;

/// Where a platform number came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Provenance {
    #[default]
    Unknown,
    /// Vendor datasheet.
    Vendor,
    /// Measured on the machine.
    Empirical,
    /// Computed from clock, core count and per-cycle width.
    Derived,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Unknown => "unknown",
            Provenance::Vendor => "vendor",
            Provenance::Empirical => "empirical",
            Provenance::Derived => "derived",
        })
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "unknown" => Ok(Provenance::Unknown),
            "vendor" => Ok(Provenance::Vendor),
            "empirical" | "measured" => Ok(Provenance::Empirical),
            "derived" => Ok(Provenance::Derived),
            other => Err(format!("unknown provenance `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bandwidth {
    pub space: String,
    /// Bytes per second.
    pub bytes_per_s: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RooflinePlatform {
    pub id: String,
    /// Double-precision FLOP per second.
    pub t_peak: f64,
    pub t_peak_provenance: Provenance,
    pub bandwidths: Vec<Bandwidth>,
}

impl RooflinePlatform {
    pub fn new(id: impl Into<String>, t_peak: f64) -> Self {
        RooflinePlatform { id: id.into(), t_peak, t_peak_provenance: Provenance::Unknown, bandwidths: Vec::new() }
    }

    pub fn with_bandwidth(mut self, space: &str, bytes_per_s: f64, provenance: Provenance) -> Self {
        self.bandwidths.push(Bandwidth { space: space.to_ascii_lowercase(), bytes_per_s, provenance });
        self
    }

    pub fn bandwidth(&self, space: &str) -> Option<f64> {
        self.bandwidths.iter().find(|b| b.space.eq_ignore_ascii_case(space)).map(|b| b.bytes_per_s)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.t_peak > 0.0 && self.t_peak.is_finite()) {
            return Err(format!("platform `{}`: peak throughput must be positive", self.id));
        }
        for (n, b) in self.bandwidths.iter().enumerate() {
            if !(b.bytes_per_s > 0.0 && b.bytes_per_s.is_finite()) {
                return Err(format!("platform `{}`: bandwidth `{}` must be positive", self.id, b.space));
            }
            if self.bandwidths[..n].iter().any(|o| o.space == b.space) {
                return Err(format!("platform `{}`: duplicate memory space `{}`", self.id, b.space));
            }
        }
        Ok(())
    }
}

/// Parses a decimal number and scales it by `10^shift` with a single
/// rounding.
fn parse_scaled(s: &str, shift: i32) -> Option<f64> {
    let (m, e) = match s.find(['e', 'E']) {
        Some(n) => (&s[..n], s[n + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    m.parse::<f64>().ok()?;
    format!("{m}e{}", e + shift).parse().ok()
}

/// Shortest decimal `d` with `parse_scaled(d, shift) == x`, written without
/// an exponent when that stays short.
fn scaled_decimal(x: f64, shift: i32) -> String {
    let sci = format!("{x:e}");
    let (m, e) = sci.split_once('e').expect("exponent form");
    let e: i32 = e.parse::<i32>().expect("integer exponent") - shift;
    let (sign, m) = m.strip_prefix('-').map_or(("", m), |r| ("-", r));
    let digits: String = m.chars().filter(|c| *c != '.').collect();
    let point = e + 1;
    let body = if point <= -6 || point > 21 {
        format!("{m}e{e}")
    } else if point <= 0 {
        format!("0.{}{digits}", "0".repeat((-point) as usize))
    } else if point as usize >= digits.len() {
        format!("{digits}{}", "0".repeat(point as usize - digits.len()))
    } else {
        format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
    };
    format!("{sign}{body}")
}

enum Column {
    Id,
    Peak,
    PeakSource,
    Bw(String),
    BwSource(String),
}

fn parse_header(line: &str) -> Result<Vec<Column>, PerfError> {
    let bad = |msg: String| PerfError::Parse { row: 1, msg };
    let cols: Vec<Column> = line
        .split(',')
        .map(|c| {
            let c = c.trim().to_ascii_lowercase();
            match c.as_str() {
                "id" => Ok(Column::Id),
                "t_peak_gflops" => Ok(Column::Peak),
                "src_t_peak" => Ok(Column::PeakSource),
                _ => {
                    if let Some(space) = c.strip_prefix("bw_").and_then(|s| s.strip_suffix("_gbs")) {
                        Ok(Column::Bw(space.to_string()))
                    } else if let Some(space) = c.strip_prefix("src_") {
                        Ok(Column::BwSource(space.to_string()))
                    } else {
                        Err(bad(format!("unknown column `{c}`")))
                    }
                }
            }
        })
        .collect::<Result<_, _>>()?;
    if !matches!(cols.as_slice(), [Column::Id, Column::Peak, ..]) {
        return Err(bad("header must start with `id,t_peak_gflops`".into()));
    }
    Ok(cols)
}

fn header_name(c: &Column) -> String {
    match c {
        Column::Id => "id".into(),
        Column::Peak => "t_peak_gflops".into(),
        Column::PeakSource => "src_t_peak".into(),
        Column::Bw(s) => format!("bw_{s}_gbs"),
        Column::BwSource(s) => format!("src_{s}"),
    }
}

/// Parses a platform table. Blank lines and `#` comments are skipped; an
/// empty input yields no platforms. Rows are numbered from 1 at the header.
pub fn parse_platform_table(text: &str) -> Result<Vec<RooflinePlatform>, PerfError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let cols = parse_header(header)?;
    let mut out = Vec::new();
    for (n, line) in lines {
        let row = n + 1;
        let err = |msg: String| PerfError::Parse { row, msg };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() > cols.len() {
            return Err(err(format!("{} fields, header has {}", cells.len(), cols.len())));
        }
        let mut plat = RooflinePlatform::new("", 0.0);
        let mut sources: Vec<(String, Provenance)> = Vec::new();
        for (c, col) in cols.iter().enumerate() {
            let raw = cells.get(c).copied().unwrap_or("");
            let name = header_name(col);
            let value = match raw.split_once('=') {
                Some((k, v)) if k.trim().eq_ignore_ascii_case(&name) => v.trim(),
                Some((k, _)) => return Err(err(format!("field `{}` in column `{name}`", k.trim()))),
                None => raw,
            };
            let number = |required: bool| -> Result<Option<f64>, PerfError> {
                if value.is_empty() {
                    return if required { Err(err(format!("missing `{name}`"))) } else { Ok(None) };
                }
                parse_scaled(value, 9).map(Some).ok_or_else(|| err(format!("`{name}` is not a number: `{value}`")))
            };
            match col {
                Column::Id => {
                    if value.is_empty() {
                        return Err(err("missing `id`".into()));
                    }
                    plat.id = value.to_string();
                }
                Column::Peak => plat.t_peak = number(true)?.expect("required"),
                Column::PeakSource => plat.t_peak_provenance = value.parse().map_err(err)?,
                Column::Bw(space) => {
                    if let Some(bps) = number(false)? {
                        plat = plat.with_bandwidth(space, bps, Provenance::Unknown);
                    }
                }
                Column::BwSource(space) => sources.push((space.clone(), value.parse().map_err(err)?)),
            }
        }
        for (space, p) in sources {
            if let Some(b) = plat.bandwidths.iter_mut().find(|b| b.space == space) {
                b.provenance = p;
            }
        }
        plat.validate().map_err(err)?;
        out.push(plat);
    }
    Ok(out)
}

pub fn load_platform_table(path: &Path) -> Result<Vec<RooflinePlatform>, PerfError> {
    parse_platform_table(&std::fs::read_to_string(path)?)
}

/// Serializes platforms in the schema read by [`parse_platform_table`].
/// Values are written as the shortest decimals that read back to the same
/// bits, so the round trip is exact.
pub fn write_platform_table(platforms: &[RooflinePlatform]) -> String {
    let mut spaces: Vec<String> = Vec::new();
    for p in platforms {
        for b in &p.bandwidths {
            if !spaces.contains(&b.space) {
                spaces.push(b.space.clone());
            }
        }
    }
    let mut out = String::from("id,t_peak_gflops,src_t_peak");
    for s in &spaces {
        out.push_str(&format!(",bw_{s}_gbs,src_{s}"));
    }
    out.push('\n');
    for p in platforms {
        out.push_str(&format!("{},{},{}", p.id, scaled_decimal(p.t_peak, 9), p.t_peak_provenance));
        for s in &spaces {
            match p.bandwidths.iter().find(|b| &b.space == s) {
                Some(b) => out.push_str(&format!(",{},{}", scaled_decimal(b.bytes_per_s, 9), b.provenance)),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Ten devices with their empirical DRAM bandwidths; peaks are clock x cores
/// x double-precision FLOP per cycle.
pub fn reference_platforms() -> Vec<RooflinePlatform> {
    parse_platform_table(include_str!("../../data/platforms.csv")).expect("bundled table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table() {
        let t = reference_platforms();
        assert_eq!(t.len(), 10);
        let v100 = t.iter().find(|p| p.id == "tesla-v100").unwrap();
        assert_eq!(v100.bandwidth("dram"), Some(782e9));
        assert_eq!(v100.t_peak, 7000e9);
        let dram: Vec<f64> = t.iter().map(|p| p.bandwidth("DRAM").unwrap() / 1e9).collect();
        assert_eq!(dram, [97.9, 121.0, 139.0, 147.0, 246.0, 247.0, 494.0, 195.0, 521.0, 782.0]);
        assert!(t.iter().all(|p| p.bandwidths[0].provenance == Provenance::Empirical));
    }

    #[test]
    fn key_value_cells() {
        let t = parse_platform_table("id,t_peak_gflops,bw_dram_gbs\nv100, 7000, bw_dram_gbs=782\n").unwrap();
        assert_eq!(t[0].bandwidth("dram"), Some(782e9));
        assert_eq!(t[0].t_peak, 7e12);
    }

    #[test]
    fn empty_and_errors() {
        assert!(parse_platform_table("").unwrap().is_empty());
        assert!(parse_platform_table("\n# nothing\n").unwrap().is_empty());
        let e = parse_platform_table("id,t_peak_gflops,bw_l1_gbs\na,1,2\nb,x,2\n").unwrap_err();
        assert!(matches!(e, PerfError::Parse { row: 3, .. }), "{e}");
        let e = parse_platform_table("id,t_peak_gflops\n\nc,\n").unwrap_err();
        assert!(matches!(e, PerfError::Parse { row: 3, .. }), "{e}");
        assert!(parse_platform_table("name,peak\n").is_err());
        assert!(parse_platform_table("id,t_peak_gflops,bw_dram_gbs\na,1,-3\n").is_err());
    }

    #[test]
    fn scaled_decimals() {
        for x in [782e9, 97.9e9, 1.0 / 3.0 * 1e12, 5e-324, 1.5e300, 12.345678901234e9, 0.1, 7.0] {
            let s = scaled_decimal(x, 9);
            assert_eq!(parse_scaled(&s, 9), Some(x), "{x} -> {s}");
        }
        assert_eq!(scaled_decimal(3072e9, 9), "3072");
        assert_eq!(scaled_decimal(97.9e9, 9), "97.9");
        assert_eq!(scaled_decimal(1.2e5, 9), "0.00012");
        assert_eq!(parse_scaled("x", 9), None);
        assert_eq!(parse_scaled("1e", 9), None);
    }

    #[test]
    fn round_trip() {
        let mut t = reference_platforms();
        t.push(
            RooflinePlatform::new("host", 12.345678901234e9)
                .with_bandwidth("l1", 1.0 / 3.0 * 1e12, Provenance::Empirical)
                .with_bandwidth("dram", 9.87654321e9, Provenance::Vendor),
        );
        let sorted = |mut v: Vec<RooflinePlatform>| {
            v.iter_mut().for_each(|p| p.bandwidths.sort_by(|a, b| a.space.cmp(&b.space)));
            v
        };
        let back = parse_platform_table(&write_platform_table(&t)).unwrap();
        assert_eq!(sorted(back), sorted(t.clone()));
        assert!(write_platform_table(&t).contains("tesla-v100,7000,vendor,782,empirical"));
    }
}
