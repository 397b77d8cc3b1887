//! Host micro-benchmarks: streaming triad bandwidth and multiply-add peak.

use std::hint::black_box;
use std::time::Instant;

use super::platform::{Provenance, RooflinePlatform};
use crate::exec::{Executor, LoopBounds};
use crate::mesh::SliceWriter;

/// Size of the largest CPU cache reported by sysfs, or 32 MiB.
pub fn llc_bytes() -> usize {
    let mut best = 0;
    for n in 0..8 {
        let Ok(s) = std::fs::read_to_string(format!("/sys/devices/system/cpu/cpu0/cache/index{n}/size")) else {
            continue;
        };
        let s = s.trim();
        let (num, mult) = match s.strip_suffix('K') {
            Some(v) => (v, 1 << 10),
            None => match s.strip_suffix('M') {
                Some(v) => (v, 1 << 20),
                None => (s, 1),
            },
        };
        if let Ok(v) = num.parse::<usize>() {
            best = best.max(v * mult);
        }
    }
    if best == 0 {
        32 << 20
    } else {
        best
    }
}

/// Best-of-`reps` triad `a = b + s c` bandwidth over `elems` doubles per
/// array, in bytes per second (24 bytes per element).
pub fn stream_triad(exec: &Executor, elems: usize, reps: usize) -> f64 {
    let b = vec![1.0f64; elems];
    let c = vec![2.0f64; elems];
    let mut a = vec![0.0f64; elems];
    let chunks = (exec.policy().workers * 4).min(elems.max(1));
    let s = black_box(0.5);
    let mut best = f64::INFINITY;
    for _ in 0..reps.max(1) {
        let w = SliceWriter::new(&mut a);
        let t0 = Instant::now();
        exec.par_for(LoopBounds::extent(chunks, 1, 1), |k, _, _| {
            let (lo, hi) = (k * elems / chunks, (k + 1) * elems / chunks);
            for i in lo..hi {
                // SAFETY: chunks are disjoint.
                unsafe { w.write(i, b[i] + s * c[i]) };
            }
        });
        best = best.min(t0.elapsed().as_secs_f64());
        black_box(&a);
    }
    24.0 * elems as f64 / best
}

/// Multiply-add throughput over independent accumulator chains, in FLOP per
/// second (two per multiply-add).
pub fn fma_peak(exec: &Executor, iters: usize) -> f64 {
    const LANES: usize = 32;
    let units = exec.policy().workers * 2;
    let (x, y) = (black_box(0.999_999_9f64), black_box(1e-7f64));
    let t0 = Instant::now();
    let sum = exec.par_reduce(
        LoopBounds::extent(units, 1, 1),
        0.0,
        |k, _, _| {
            let mut acc = [k as f64; LANES];
            for _ in 0..iters {
                for a in acc.iter_mut() {
                    *a = *a * x + y;
                }
            }
            acc.iter().sum::<f64>()
        },
        |a, b| a + b,
    );
    let secs = t0.elapsed().as_secs_f64();
    black_box(sum);
    (units * iters * LANES * 2) as f64 / secs
}

#[derive(Clone, Copy, Debug)]
pub struct HostMeasureOptions {
    /// Doubles per triad array; defaults to a third of four times the
    /// largest cache, so the three arrays together span 4x that cache.
    pub elems: Option<usize>,
    pub reps: usize,
    pub fma_iters: usize,
}

impl Default for HostMeasureOptions {
    fn default() -> Self {
        HostMeasureOptions { elems: None, reps: 5, fma_iters: 2_000_000 }
    }
}

/// Empirical platform record of this machine with a `dram` space.
pub fn measure_host(exec: &Executor, id: &str, opts: HostMeasureOptions) -> RooflinePlatform {
    let elems = opts.elems.unwrap_or_else(|| (4 * llc_bytes() / 24).max(1 << 20));
    let bw = stream_triad(exec, elems, opts.reps);
    let mut plat = RooflinePlatform::new(id, fma_peak(exec, opts.fma_iters));
    plat.t_peak_provenance = Provenance::Empirical;
    plat.with_bandwidth("dram", bw, Provenance::Empirical)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurements_are_positive() {
        let exec = Executor::serial();
        let p = measure_host(&exec, "host", HostMeasureOptions { elems: Some(1 << 16), reps: 2, fma_iters: 10_000 });
        p.validate().unwrap();
        assert!(p.t_peak > 1e6 && p.bandwidth("dram").unwrap() > 1e6);
        assert!(llc_bytes() > 0);
    }
}
