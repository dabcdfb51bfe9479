//! CPU-time measurement.
//!
//! Solver runs are single-threaded, so the clock of the calling thread is the
//! CPU time consumed by the run, even when several runs share the process.

use std::time::Instant;

/// CPU seconds consumed so far by the calling thread.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Measures thread CPU time and wall time from a starting point.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    cpu_start: f64,
    wall_start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self { cpu_start: thread_cpu_seconds(), wall_start: Instant::now() }
    }

    pub fn cpu_seconds(&self) -> f64 {
        (thread_cpu_seconds() - self.cpu_start).max(0.0)
    }

    pub fn wall_seconds(&self) -> f64 {
        self.wall_start.elapsed().as_secs_f64()
    }
}
