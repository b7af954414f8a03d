//! Concurrence and GME concurrence of a few textbook states.

use entq::measures::{concurrence_mixed, concurrence_pure, gme_concurrence_pure};
use entq::states::{white_noise_mixture, PureState};

fn main() -> entq::Result<()> {
    let bell = PureState::bell_phi_plus();
    println!("C(Phi+)             = {:.6}", concurrence_pure(&bell)?.value);

    let tilted = PureState::from_real(&[0.9f64.sqrt(), 0.0, 0.0, 0.1f64.sqrt()])?;
    println!("C(sqrt.9|00>+...)   = {:.6}", concurrence_pure(&tilted)?.value);

    println!("\nWerner family p*Phi+ + (1-p)*I/4:");
    for i in 0..=10 {
        let p = i as f64 / 10.0;
        let rho = white_noise_mixture(&bell, p)?;
        println!("  p = {p:.1}  C = {:.6}", concurrence_mixed(&rho)?.value);
    }

    println!("\nGME(GHZ) = {:.6}", gme_concurrence_pure(&PureState::ghz())?.value);
    println!("GME(W)   = {:.6}", gme_concurrence_pure(&PureState::w())?.value);
    Ok(())
}
