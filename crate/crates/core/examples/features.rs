//! Correlation features for two qubits and Svetlichny features for three.

use entq::features::{
    pauli_correlations, svetlichny_features_default, svetlichny_value, PAULI_FEATURE_NAMES,
    SVETLICHNY_FEATURE_NAMES,
};
use entq::states::{sample_haar_pure, PureState, RngStream};

fn main() -> entq::Result<()> {
    let t = pauli_correlations(&PureState::bell_phi_plus().projector())?;
    println!("Phi+ correlations:");
    for (name, v) in PAULI_FEATURE_NAMES.iter().zip(t.t) {
        println!("  {name:<5} {v:+.4}");
    }

    let f = svetlichny_features_default(&PureState::ghz())?;
    println!("\nGHZ Svetlichny terms:");
    for (name, v) in SVETLICHNY_FEATURE_NAMES.iter().zip(f.f) {
        println!("  {name:<8} {v:+.4}");
    }
    println!("  <S> = {:+.4}  (local bound 4, quantum bound {:.4})", svetlichny_value(&f), 4.0 * 2f64.sqrt());

    let mut rng = RngStream::new(5, 0);
    let mut best = 0.0f64;
    for _ in 0..2000 {
        let psi = sample_haar_pure(8, &mut rng)?;
        best = best.max(svetlichny_value(&svetlichny_features_default(&psi)?).abs());
    }
    println!("\nlargest |<S>| over 2000 Haar states: {best:.4}");
    Ok(())
}
