//! Keeps a thin SVD current under a stream of low-rank additions and compares
//! it with the dense sum at the end.

use lowrank_spgd::incsvd::{decompose, reorthonormalize};
use lowrank_spgd::{incremental_update, FactoredMatrix, LowRankGradient, UpdateConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lowrank_spgd::Result<()> {
    let (m, n) = (40, 30);
    let cfg = UpdateConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut f = FactoredMatrix::zeros(m, n);
    let mut dense = DMatrix::zeros(m, n);

    for step in 1..=200 {
        let a = DMatrix::from_fn(m, 1, |_, _| rng.random_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0));
        let g = LowRankGradient::new(a, b)?;
        let s = rng.random_range(-0.2..0.2);
        dense += g.to_dense()? * s;
        f = incremental_update(&f, &g, s, &cfg)?;
        if step % 50 == 0 {
            let err = (f.to_dense()? - &dense).norm() / dense.norm();
            println!(
                "step {step:3}: rank {:2}, relative error {err:.2e}, orthonormality {:.2e}",
                f.rank(),
                f.orthonormality_error()
            );
        }
    }

    // An addition inside the current column space adds no new basis vectors.
    let a = f.u().columns(0, 2).into_owned();
    let g = LowRankGradient::new(a, DMatrix::from_element(n, 2, 0.1))?;
    let parts = decompose(&f, &g, 1.0, cfg.residual_tol)?;
    println!("in-span update: p = {}, q = {}", parts.p.ncols(), parts.q.ncols());

    let f = reorthonormalize(&f, &cfg)?;
    println!("after re-orthonormalization: {:.2e}", f.orthonormality_error());
    Ok(())
}
