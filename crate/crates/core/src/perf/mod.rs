//! Roofline caps, architectural efficiency and the performance-portability
//! metric over platform records and counted kernel intensities.

pub mod microbench;
pub mod platform;
pub mod portability;
pub mod report;
pub mod roofline;

pub use microbench::{fma_peak, llc_bytes, measure_host, stream_triad, HostMeasureOptions};
pub use platform::{
    load_platform_table, parse_platform_table, reference_platforms, write_platform_table, Bandwidth, Provenance,
    RooflinePlatform,
};
pub use portability::{pp_metric, PlatformEfficiency, PortabilityInput};
pub use report::{
    portability_report_csv, roofline_report_csv, roofline_svg, PortabilityRow, PORTABILITY_CSV_HEADER,
    ROOFLINE_CSV_HEADER,
};
pub use roofline::{
    arch_efficiency, parse_intensity_table, reference_v100_intensity, roofline_cap, space_cap, ArchEfficiency,
    Binding, KernelIntensitySet, MeasuredRun, RooflineCap,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerfError {
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("platform `{platform}` has no `{space}` bandwidth")]
    UnknownSpace { platform: String, space: String },
    #[error("roofline cap is zero for platform `{0}`")]
    ZeroCap(String),
    #[error("platform `{0}` is supported but has zero efficiency")]
    ZeroEfficiency(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
