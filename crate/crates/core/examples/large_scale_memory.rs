//! A solve on a 200000 x 200000 problem. The dense matrix would need 320 GB;
//! the factored run stays within tens of megabytes. The tracking allocator
//! reports the largest single allocation and the peak live heap.

use lowrank_spgd::alloc_track::{self, TrackingAllocator};
use lowrank_spgd::{
    spgd_solve, Distribution, Domain, FactoredLeastSquares, SolverConfig, StepSchedule,
};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn main() -> lowrank_spgd::Result<()> {
    let n = 200_000;
    let k = 5;
    let p = FactoredLeastSquares::random(n, n, &[2.0, 1.0], Distribution::Rademacher, 1)?;

    let mut cfg = SolverConfig::new(
        0.1,
        Domain::Unbounded,
        StepSchedule::inverse_mu_t(n as f64 / k as f64, 100)?,
    );
    cfg.sketch_width = k;
    cfg.rank_budget = 50;
    cfg.trace_every = 25;

    alloc_track::reset();
    let out = spgd_solve(&p, &cfg)?;
    for r in &out.trace {
        println!("t = {:3}: rank {}, objective {:.6}", r.t, r.rank, r.objective.unwrap());
    }
    println!(
        "largest allocation {:.1} MB, peak live {:.1} MB, wall time {:.1?}",
        alloc_track::largest_allocation() as f64 / 1e6,
        alloc_track::peak_live_bytes() as f64 / 1e6,
        out.stats.elapsed
    );
    Ok(())
}
