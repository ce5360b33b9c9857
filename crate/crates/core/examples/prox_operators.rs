use lowrank_spgd::prox::{project_frobenius, svs};
use lowrank_spgd::{prox_nuclear, Domain, FactoredMatrix};

fn main() -> lowrank_spgd::Result<()> {
    let y = FactoredMatrix::random_with_spectrum(8, 6, &[4.0, 2.0, 1.0, 0.3], 5)?;
    println!("sigma(Y)            = {:.4?}", y.sigma().as_slice());

    let shrunk = svs(&y, 0.5)?;
    println!("shrink by 0.5       = {:.4?}", shrunk.sigma().as_slice());

    let projected = project_frobenius(&y, 2.0)?;
    println!("project onto R = 2  = {:.4?}", projected.sigma().as_slice());

    // shrink first, then project
    let ball = Domain::frobenius_ball(2.0)?;
    let both = prox_nuclear(&y, 0.25, 2.0, &ball)?;
    println!(
        "prox (lambda eta = 0.5, R = 2) = {:.4?}  |X|_F = {:.6}",
        both.sigma().as_slice(),
        both.frobenius_norm()
    );

    let all_gone = prox_nuclear(&y, 10.0, 1.0, &Domain::Unbounded)?;
    println!("heavy shrinkage leaves rank {}", all_gone.rank());
    Ok(())
}
