//! Draws probing matrices from each distribution and measures how far the
//! sample mean of `Y Yᵀ` is from the identity.

use lowrank_spgd::probing::check_isotropy;
use lowrank_spgd::{Distribution, ProbingMatrix};

fn main() -> lowrank_spgd::Result<()> {
    for dist in Distribution::ALL {
        let y = ProbingMatrix::generate(dist, 6, 3, 11)?;
        println!("{dist}: one draw, n = 6, k = 3\n{}", y.matrix());
        for samples in [1_000, 10_000, 100_000] {
            let dev = check_isotropy(dist, 8, 4, samples, 1)?;
            println!("  {samples:>6} samples: max |mean(Y Yᵀ) - I| = {dev:.4}");
        }
    }
    Ok(())
}
