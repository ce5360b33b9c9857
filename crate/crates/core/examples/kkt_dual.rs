//! Dual certificate for the ball-constrained shrinkage step. When the ball
//! binds, the multiplier has a closed form and the duality gap is zero.

use lowrank_spgd::{kkt_dual_check, FactoredMatrix};

fn main() -> lowrank_spgd::Result<()> {
    let y = FactoredMatrix::random_with_spectrum(10, 8, &[3.0, 2.0, 1.0], 2)?;
    for radius in [0.5, 1.0, 2.0, 10.0] {
        let k = kkt_dual_check(&y, 0.5, radius)?;
        println!(
            "R = {radius:>4}: active {:5}, mu* = {:.6}, scale = {:.6}, primal {:.6}, dual {:.6}, gap {:.1e}",
            k.active, k.mu_star, k.scale, k.primal_value, k.dual_value, k.primal_dual_gap
        );
    }
    Ok(())
}
