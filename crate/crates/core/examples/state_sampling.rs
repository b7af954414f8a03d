//! Draw states from each sampler and print their labels.

use entq::measures::{concurrence_mixed, gme_concurrence_pure};
use entq::states::{
    make_mixed_2q_in_bin, make_pure_2q_with_concurrence, randomize_locally, sample_biseparable_3q,
    sample_ghz_class, sample_haar_pure, sample_w_class, sample_wishart_mixed, RngStream,
};

fn main() -> entq::Result<()> {
    let mut rng = RngStream::new(2024, 0);

    let psi = sample_haar_pure(4, &mut rng)?;
    println!("Haar 2-qubit pure:       C = {:.4}", concurrence_mixed(&psi.projector())?.value);

    let rho = sample_wishart_mixed(4, 4, &mut rng)?;
    println!(
        "Wishart full rank:       C = {:.4}, purity {:.4}",
        concurrence_mixed(&rho)?.value,
        rho.purity()
    );

    let target = make_pure_2q_with_concurrence(0.37, &mut rng)?;
    println!("pure, target C = 0.37:   C = {:.4}", concurrence_mixed(&target.projector())?.value);

    let binned = make_mixed_2q_in_bin(0.6, 0.7, &mut rng)?;
    println!(
        "mixed in (0.6, 0.7]:     C = {:.4}, purity {:.4}",
        concurrence_mixed(&binned)?.value,
        binned.purity()
    );

    for (name, psi) in [
        ("GHZ class", sample_ghz_class(&mut rng)?),
        ("W class", sample_w_class(&mut rng)?),
        ("biseparable", sample_biseparable_3q(&mut rng)?),
    ] {
        let moved = randomize_locally(&psi, &mut rng)?;
        println!(
            "{name:<12} GME = {:.6}  after extra local unitaries {:.6}",
            gme_concurrence_pure(&psi)?.value,
            gme_concurrence_pure(&moved)?.value
        );
    }
    Ok(())
}
