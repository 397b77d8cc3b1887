//! Named profiling regions with optional operation and traffic tallies.

use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::Instant;

use super::counting::{current_tally, OpTally};
use super::ExecError;

/// Accumulated statistics for one named region.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelProfile {
    pub name: String,
    pub calls: u64,
    pub time_s: f64,
    /// Present only for regions recorded in counting mode.
    pub flops: Option<u64>,
    pub bytes_read: Option<u64>,
    pub bytes_written: Option<u64>,
}

impl KernelProfile {
    pub fn bytes(&self) -> Option<u64> {
        Some(self.bytes_read? + self.bytes_written?)
    }
}

struct Open {
    slot: usize,
    start: Instant,
    tally: OpTally,
}

#[derive(Default)]
struct State {
    regions: Vec<KernelProfile>,
    stack: Vec<Open>,
}

/// Region timer shared by all kernels of one executor.
///
/// Regions are opened by the dispatching thread only; worker threads never
/// touch the profiler, so the lock is uncontended.
#[derive(Default)]
pub struct Profiler {
    state: Mutex<State>,
    counting: std::sync::atomic::AtomicBool,
}

impl Profiler {
    /// Enables FLOP and byte tallies on regions closed from now on.
    pub fn set_counting(&self, on: bool) {
        self.counting.store(on, std::sync::atomic::Ordering::Relaxed);
    }

    pub fn counting(&self) -> bool {
        self.counting.load(std::sync::atomic::Ordering::Relaxed)
    }

    pub fn with_region<R>(&self, name: &str, f: impl FnOnce() -> R) -> R {
        {
            let mut st = self.state.lock().unwrap();
            let slot = match st.regions.iter().position(|r| r.name == name) {
                Some(s) => s,
                None => {
                    st.regions.push(KernelProfile { name: name.to_string(), ..Default::default() });
                    st.regions.len() - 1
                }
            };
            st.stack.push(Open { slot, start: Instant::now(), tally: current_tally() });
        }
        let r = f();
        let end = Instant::now();
        let counting = self.counting();
        let mut st = self.state.lock().unwrap();
        let open = st.stack.pop().expect("region stack underflow");
        let prof = &mut st.regions[open.slot];
        prof.calls += 1;
        prof.time_s += end.duration_since(open.start).as_secs_f64();
        if counting {
            let d = current_tally().delta_since(&open.tally);
            *prof.flops.get_or_insert(0) += d.flops();
            prof.bytes_read.get_or_insert(0);
            prof.bytes_written.get_or_insert(0);
        }
        r
    }

    /// Adds streamed element traffic to every open region.
    pub fn note_traffic(&self, elems_read: u64, elems_written: u64, elem_bytes: usize) {
        if !self.counting() {
            return;
        }
        let mut st = self.state.lock().unwrap();
        let open: Vec<usize> = st.stack.iter().map(|o| o.slot).collect();
        for slot in open {
            let p = &mut st.regions[slot];
            *p.bytes_read.get_or_insert(0) += elems_read * elem_bytes as u64;
            *p.bytes_written.get_or_insert(0) += elems_written * elem_bytes as u64;
        }
    }

    pub fn reset(&self) {
        let mut st = self.state.lock().unwrap();
        assert!(st.stack.is_empty(), "reset inside an open region");
        st.regions.clear();
    }

    pub fn report(&self) -> ProfileReport {
        ProfileReport { regions: self.state.lock().unwrap().regions.clone() }
    }
}

/// Snapshot of all regions, in first-entered order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProfileReport {
    pub regions: Vec<KernelProfile>,
}

/// Region names of the main-loop kernels, in pipeline order.
pub const KERNEL_REGIONS: [&str; 7] =
    ["reconstruct", "riemann", "ct_emf", "integrate", "face_to_center", "boundary", "eos"];

impl ProfileReport {
    pub fn get(&self, name: &str) -> Option<&KernelProfile> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn time(&self, name: &str) -> f64 {
        self.get(name).map_or(0.0, |r| r.time_s)
    }

    /// CSV with columns `region, calls, time_s, time_normalized, flops,
    /// bytes, intensity`. Times are normalized to `reference_s`, or to this
    /// report's `riemann` region when `None`. Missing tallies are left empty.
    pub fn to_csv(&self, reference_s: Option<f64>) -> String {
        let reference = reference_s.unwrap_or_else(|| self.time("riemann"));
        let mut out = String::from("region,calls,time_s,time_normalized,flops,bytes,intensity\n");
        for r in &self.regions {
            let norm = if reference > 0.0 { r.time_s / reference } else { 0.0 };
            let (flops, bytes, intensity) = match (r.flops, r.bytes()) {
                (Some(f), Some(b)) => {
                    let i = if b > 0 { f as f64 / b as f64 } else { 0.0 };
                    (f.to_string(), b.to_string(), format!("{i:e}"))
                }
                _ => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{},{:e},{:e},{},{},{}", r.name, r.calls, r.time_s, norm, flops, bytes, intensity);
        }
        out
    }
}

/// FLOP and byte totals of one kernel region, with its arithmetic intensity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpCount {
    pub flops: u64,
    pub bytes: u64,
    /// `flops / bytes`, or 0 when no bytes were moved.
    pub intensity: f64,
    /// False when `bytes == 0` and the intensity is undefined.
    pub intensity_defined: bool,
}

impl OpCount {
    pub fn new(flops: u64, bytes: u64) -> Self {
        if bytes == 0 {
            OpCount { flops, bytes, intensity: 0.0, intensity_defined: false }
        } else {
            OpCount { flops, bytes, intensity: flops as f64 / bytes as f64, intensity_defined: true }
        }
    }
}

/// Extracts the tallies of `kernel` from a counting-mode profile.
pub fn count_kernel_ops(report: &ProfileReport, kernel: &str) -> Result<OpCount, ExecError> {
    let r = report.get(kernel).ok_or_else(|| ExecError::Unsupported(kernel.to_string()))?;
    match (r.flops, r.bytes()) {
        (Some(f), Some(b)) => Ok(OpCount::new(f, b)),
        _ => Err(ExecError::Unsupported(kernel.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn sleeps_accumulate() {
        let p = Profiler::default();
        for _ in 0..2 {
            p.with_region("nap", || std::thread::sleep(Duration::from_millis(10)));
        }
        let r = p.report();
        let nap = r.get("nap").unwrap();
        assert_eq!(nap.calls, 2);
        assert!(nap.time_s >= 0.020 && nap.time_s < 0.200, "{}", nap.time_s);
        assert!(nap.flops.is_none());
    }

    #[test]
    fn nested_time_is_contained() {
        let p = Profiler::default();
        p.with_region("A", || {
            p.with_region("B", || std::thread::sleep(Duration::from_millis(2)));
            std::thread::sleep(Duration::from_millis(1));
        });
        let r = p.report();
        assert!(r.time("A") >= r.time("B"));
        assert!(r.time("B") > 0.0);
    }

    #[test]
    fn normalization_uses_riemann() {
        let report = ProfileReport {
            regions: vec![
                KernelProfile { name: "riemann".into(), calls: 1, time_s: 2.0, ..Default::default() },
                KernelProfile { name: "ct_emf".into(), calls: 1, time_s: 1.0, ..Default::default() },
            ],
        };
        let csv = report.to_csv(None);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "region,calls,time_s,time_normalized,flops,bytes,intensity");
        assert!(lines[1].starts_with("riemann,1,2e0,1e0,"));
        assert!(lines[2].starts_with("ct_emf,1,1e0,5e-1,"));
        let csv = report.to_csv(Some(1.0));
        assert!(csv.lines().nth(1).unwrap().starts_with("riemann,1,2e0,2e0"));
    }

    #[test]
    fn uninstrumented_kernel_is_rejected() {
        let p = Profiler::default();
        p.with_region("plain", || ());
        assert!(matches!(count_kernel_ops(&p.report(), "plain"), Err(ExecError::Unsupported(_))));
        assert!(matches!(count_kernel_ops(&p.report(), "missing"), Err(ExecError::Unsupported(_))));
    }

    #[test]
    fn empty_kernel_has_undefined_intensity() {
        let p = Profiler::default();
        p.set_counting(true);
        p.with_region("empty", || ());
        let c = count_kernel_ops(&p.report(), "empty").unwrap();
        assert_eq!((c.flops, c.bytes, c.intensity, c.intensity_defined), (0, 0, 0.0, false));
    }
}
