//! Building factored matrices and doing algebra on them without going dense.

use lowrank_spgd::{FactoredMatrix, LowRankGradient};
use nalgebra::DMatrix;

fn main() -> lowrank_spgd::Result<()> {
    let w = FactoredMatrix::random_with_spectrum(6, 4, &[3.0, 1.0], 1)?;
    println!("shape {:?}, rank {}", w.shape(), w.rank());
    println!("sigma = {:?}", w.sigma().as_slice());
    println!(
        "nuclear {:.4}, frobenius {:.4}, spectral {:.4}",
        w.nuclear_norm(),
        w.frobenius_norm(),
        w.spectral_norm()
    );

    // W Y without forming W
    let y = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
    let wy = w.multiply_right(&y)?;
    let check = (w.to_dense()? * &y - &wy).amax();
    println!("|W Y - dense(W) Y|_max = {check:.1e}");

    let other = FactoredMatrix::random_with_spectrum(6, 4, &[2.0], 2)?;
    println!("<W, X> = {:.6}", w.inner_product(&other)?);
    println!("|W - X|_F^2 = {:.6}", w.distance_sq(&other)?);

    let g = LowRankGradient::new(DMatrix::from_element(6, 1, 1.0), DMatrix::from_element(4, 1, 0.5))?;
    println!("gradient width {}, |G|_F^2 = {}", g.width(), g.frobenius_norm_sq());
    Ok(())
}
