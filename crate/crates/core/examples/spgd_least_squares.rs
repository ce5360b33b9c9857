//! Solves `½‖W - M‖_F² + λ‖W‖_*` with sketched gradients and watches the
//! distance to the closed-form optimum fall like `1/T`.

use lowrank_spgd::{
    spgd_solve, Distribution, Domain, FactoredLeastSquares, GradientOracle, SolverConfig,
    StepSchedule,
};

fn main() -> lowrank_spgd::Result<()> {
    let p = FactoredLeastSquares::random(30, 25, &[0.5, 0.25], Distribution::Rademacher, 1)?;
    let lambda = 0.1;
    let reference = p.reference_solution(lambda, &Domain::Unbounded);

    for horizon in [100, 1_000, 10_000] {
        let mut cfg = SolverConfig::new(lambda, Domain::Unbounded, StepSchedule::inverse_mu_t(1.0, horizon)?);
        cfg.reference = reference.clone();
        cfg.trace_every = horizon / 4;
        let out = spgd_solve(&p, &cfg)?;
        let last = out.trace.last().unwrap();
        println!(
            "T = {horizon:>5}: objective {:.6}, rank {}, |W - W*|_F^2 = {:.3e}, max rank {}",
            last.objective.unwrap(),
            last.rank,
            last.dist_to_ref.unwrap().powi(2),
            out.stats.max_rank
        );
    }
    Ok(())
}
