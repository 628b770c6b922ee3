//! Multi-threaded execution of a simulation.
//!
//! Attempts draw from per-attempt random streams, so splitting the attempt range across threads
//! reproduces the single-threaded counts exactly.

use std::num::NonZeroUsize;
use std::thread;

use twotime_core::sim::{SimResult, Simulator};

pub fn default_threads() -> usize {
    thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

pub fn run_parallel(sim: &Simulator, threads: usize) -> SimResult {
    let ranges = sim.partition(threads.max(1));
    thread::scope(|s| {
        let handles: Vec<_> = ranges.into_iter().map(|r| s.spawn(move || sim.run_range(r))).collect();
        let mut total = sim.run_range(0..0);
        for h in handles {
            total.merge(&h.join().expect("simulation worker panicked"));
        }
        total
    })
}
