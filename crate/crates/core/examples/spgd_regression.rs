use lowrank_spgd::solver::solve_seeds;
use lowrank_spgd::{
    dense_baseline_solve, Domain, GradientOracle, MultivariateRegression, SolverConfig,
    StepSchedule,
};

// Multivariate regression with one sample per step, several seeds in parallel,
// plus the dense full-gradient baseline for comparison.
fn main() -> lowrank_spgd::Result<()> {
    let p = MultivariateRegression::random(20, 15, &[2.0, 1.0, 0.5], 1.0, 0.1, 4)?;
    let lambda = 0.05;
    let mut cfg = SolverConfig::new(lambda, Domain::Unbounded, StepSchedule::inverse_mu_t(1.0, 5_000)?);
    cfg.reference = p.reference_solution(lambda, &Domain::Unbounded);
    cfg.trace_every = 5_000;

    let seeds = [0, 1, 2, 3];
    for (seed, run) in seeds.iter().zip(solve_seeds(&p, &cfg, &seeds)) {
        let run = run?;
        let last = run.trace.last().unwrap();
        println!(
            "seed {seed}: rank {}, distance to optimum {:.4}",
            last.rank,
            last.dist_to_ref.unwrap()
        );
    }

    let dense = dense_baseline_solve(&p, &cfg)?;
    let star = cfg.reference.unwrap().to_dense()?;
    println!("dense baseline vs closed form: {:.1e}", (dense - star).norm());
    Ok(())
}
