//! Measurement-correlation features.
//!
//! Two qubits: the nine Pauli correlations `T_ij = Tr(rho sigma_i ⊗ sigma_j)`,
//! row-major over `i, j ∈ {x, y, z}`.
//!
//! Three qubits: the eight tensor-product terms of the Svetlichny operator,
//! in the order `ABC, ABC', AB'C, A'BC, A'B'C', A'B'C, A'BC', AB'C'`. The
//! features carry no signs; [`svetlichny_value`] applies them.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::qmath::{self, kron, kron_all, sigma_x, sigma_y, sigma_z, ComplexMatrix};
use crate::states::{DensityMatrix, PureState};

pub const PAULI_FEATURE_NAMES: [&str; 9] = [
    "t_xx", "t_xy", "t_xz", "t_yx", "t_yy", "t_yz", "t_zx", "t_zy", "t_zz",
];

pub const SVETLICHNY_FEATURE_NAMES: [&str; 8] = [
    "s_abc", "s_abc'", "s_ab'c", "s_a'bc", "s_a'b'c'", "s_a'b'c", "s_a'bc'", "s_ab'c'",
];

/// Signs of the terms in the Svetlichny operator.
pub const SVETLICHNY_SIGNS: [f64; 8] = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];

/// `(A or A', B or B', C or C')` per term, `true` meaning primed.
const SVETLICHNY_TERMS: [(bool, bool, bool); 8] = [
    (false, false, false),
    (false, false, true),
    (false, true, false),
    (true, false, false),
    (true, true, true),
    (true, true, false),
    (true, false, true),
    (false, true, true),
];

const IMAG_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationFeatures2Q {
    pub t: [f64; 9],
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvetlichnyFeatures3Q {
    pub f: [f64; 8],
}

fn pauli_observables() -> &'static [ComplexMatrix; 9] {
    static OBS: OnceLock<[ComplexMatrix; 9]> = OnceLock::new();
    OBS.get_or_init(|| {
        let p = [sigma_x(), sigma_y(), sigma_z()];
        std::array::from_fn(|k| kron(&p[k / 3], &p[k % 3]))
    })
}

/// Nine Pauli correlations of a two-qubit state.
pub fn pauli_correlations(rho: &DensityMatrix) -> Result<CorrelationFeatures2Q> {
    if rho.dim() != 4 {
        return Err(Error::Precondition("Pauli correlations need a two-qubit state".into()));
    }
    let obs = pauli_observables();
    let mut t = [0.0; 9];
    for (tk, o) in t.iter_mut().zip(obs) {
        *tk = qmath::expectation(rho.matrix(), o)?;
    }
    Ok(CorrelationFeatures2Q { t })
}

/// Same features evaluated directly on a state vector.
pub fn pauli_correlations_pure(psi: &PureState) -> Result<CorrelationFeatures2Q> {
    if psi.qubits() != 2 {
        return Err(Error::Precondition("Pauli correlations need a two-qubit state".into()));
    }
    let obs = pauli_observables();
    let mut t = [0.0; 9];
    for (tk, o) in t.iter_mut().zip(obs) {
        *tk = real_form(psi, o)?;
    }
    Ok(CorrelationFeatures2Q { t })
}

fn real_form(psi: &PureState, o: &ComplexMatrix) -> Result<f64> {
    let z = o.quadratic_form(psi.amplitudes());
    if z.im.abs() >= IMAG_TOL {
        return Err(Error::Numeric(format!("expectation has imaginary residue {:e}", z.im)));
    }
    Ok(z.re)
}

/// Dichotomic measurement settings for the three parties.
#[derive(Clone, Debug)]
pub struct SvetlichnySettings {
    pub a: ComplexMatrix,
    pub a_prime: ComplexMatrix,
    pub b: ComplexMatrix,
    pub b_prime: ComplexMatrix,
    pub c: ComplexMatrix,
    pub c_prime: ComplexMatrix,
}

impl Default for SvetlichnySettings {
    /// `A = B = sigma_x`, `A' = B' = sigma_y`, `C = (sigma_x + sigma_y)/sqrt(2)`,
    /// `C' = (sigma_x - sigma_y)/sqrt(2)`.
    fn default() -> Self {
        let x = sigma_x();
        let y = sigma_y();
        Self {
            a: x.clone(),
            a_prime: y.clone(),
            b: x.clone(),
            b_prime: y.clone(),
            c: (&x + &y).scale_real(FRAC_1_SQRT_2),
            c_prime: (&x - &y).scale_real(FRAC_1_SQRT_2),
        }
    }
}

impl SvetlichnySettings {
    pub fn validate(&self) -> Result<()> {
        let id = ComplexMatrix::identity(2);
        for m in [&self.a, &self.a_prime, &self.b, &self.b_prime, &self.c, &self.c_prime] {
            if m.rows() != 2 || !m.is_square() {
                return Err(Error::Dimension("settings must be 2x2".into()));
            }
            if !m.is_hermitian(1e-10) || (m * m).max_abs_diff(&id) > 1e-10 {
                return Err(Error::Precondition(
                    "settings must be Hermitian and square to the identity".into(),
                ));
            }
        }
        Ok(())
    }

    /// The eight 8x8 term operators in feature order.
    pub fn term_operators(&self) -> Vec<ComplexMatrix> {
        SVETLICHNY_TERMS
            .iter()
            .map(|&(ap, bp, cp)| {
                let a = if ap { &self.a_prime } else { &self.a };
                let b = if bp { &self.b_prime } else { &self.b };
                let c = if cp { &self.c_prime } else { &self.c };
                kron_all([a, b, c])
            })
            .collect()
    }

    /// Signed sum of the term operators.
    pub fn operator(&self) -> ComplexMatrix {
        self.term_operators()
            .iter()
            .zip(SVETLICHNY_SIGNS)
            .fold(ComplexMatrix::zeros(8, 8), |acc, (t, s)| &acc + &t.scale_real(s))
    }
}

fn default_terms() -> &'static [ComplexMatrix] {
    static TERMS: OnceLock<Vec<ComplexMatrix>> = OnceLock::new();
    TERMS.get_or_init(|| SvetlichnySettings::default().term_operators())
}

fn check_3q(qubits: usize) -> Result<()> {
    if qubits != 3 {
        return Err(Error::Precondition("Svetlichny features need a three-qubit state".into()));
    }
    Ok(())
}

/// `f_k = <psi| S_k |psi>` for the eight Svetlichny terms.
pub fn svetlichny_features(psi: &PureState, settings: &SvetlichnySettings) -> Result<SvetlichnyFeatures3Q> {
    check_3q(psi.qubits())?;
    let terms = settings.term_operators();
    let mut f = [0.0; 8];
    for (fk, t) in f.iter_mut().zip(&terms) {
        *fk = real_form(psi, t)?;
    }
    Ok(SvetlichnyFeatures3Q { f })
}

/// [`svetlichny_features`] with the default settings and cached operators.
pub fn svetlichny_features_default(psi: &PureState) -> Result<SvetlichnyFeatures3Q> {
    check_3q(psi.qubits())?;
    let mut f = [0.0; 8];
    for (fk, t) in f.iter_mut().zip(default_terms()) {
        *fk = real_form(psi, t)?;
    }
    Ok(SvetlichnyFeatures3Q { f })
}

/// Svetlichny features of a three-qubit density matrix.
pub fn svetlichny_features_density(
    rho: &DensityMatrix,
    settings: &SvetlichnySettings,
) -> Result<SvetlichnyFeatures3Q> {
    check_3q(rho.qubits())?;
    let terms = settings.term_operators();
    let mut f = [0.0; 8];
    for (fk, t) in f.iter_mut().zip(&terms) {
        *fk = qmath::expectation(rho.matrix(), t)?;
    }
    Ok(SvetlichnyFeatures3Q { f })
}

/// `f1 + f2 + f3 + f4 - f5 - f6 - f7 - f8`
pub fn svetlichny_value(f: &SvetlichnyFeatures3Q) -> f64 {
    f.f.iter().zip(SVETLICHNY_SIGNS).map(|(v, s)| v * s).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::expectation;
    use crate::states::{
        sample_haar_pure, sample_haar_unitary, sample_wishart_mixed, PureState, RngStream,
    };

    #[test]
    fn maximally_mixed_has_no_correlations() {
        let f = pauli_correlations(&DensityMatrix::maximally_mixed(4).unwrap()).unwrap();
        assert_eq!(f.t, [0.0; 9]);
    }

    #[test]
    fn bell_state_correlations() {
        let f = pauli_correlations(&PureState::bell_phi_plus().projector()).unwrap();
        let expected = [1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in f.t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_state_01_correlations() {
        let f = pauli_correlations(&PureState::basis(2, 1).unwrap().projector()).unwrap();
        let mut expected = [0.0; 9];
        expected[8] = -1.0;
        for (a, b) in f.t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_and_projector_agree() {
        let mut r = RngStream::new(1, 0);
        for _ in 0..100 {
            let psi = sample_haar_pure(4, &mut r).unwrap();
            let a = pauli_correlations(&psi.projector()).unwrap();
            let b = pauli_correlations_pure(&psi).unwrap();
            for (x, y) in a.t.iter().zip(b.t) {
                assert!((x - y).abs() < 1e-12);
            }
            let psi = sample_haar_pure(8, &mut r).unwrap();
            let s = SvetlichnySettings::default();
            let a = svetlichny_features(&psi, &s).unwrap();
            let b = svetlichny_features_density(&psi.projector(), &s).unwrap();
            for (x, y) in a.f.iter().zip(b.f) {
                assert!((x - y).abs() < 1e-12);
            }
            assert_eq!(a, svetlichny_features_default(&psi).unwrap());
        }
    }

    #[test]
    fn conjugation_flips_single_y_entries() {
        // T_ij of rho^* equals T_ij of rho, negated whenever exactly one index is y.
        let mut r = RngStream::new(2, 0);
        for _ in 0..50 {
            let rho = sample_wishart_mixed(4, 3, &mut r).unwrap();
            let conj = DensityMatrix::new(rho.matrix().conj()).unwrap();
            let a = pauli_correlations(&rho).unwrap();
            let b = pauli_correlations(&conj).unwrap();
            for k in 0..9 {
                let ys = (k / 3 == 1) as u8 + (k % 3 == 1) as u8;
                let sign = if ys == 1 { -1.0 } else { 1.0 };
                assert!((a.t[k] - sign * b.t[k]).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn default_settings_are_dichotomic() {
        SvetlichnySettings::default().validate().unwrap();
        let mut bad = SvetlichnySettings::default();
        bad.c = sigma_x().scale_real(2.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn computational_basis_gives_zero_features() {
        let f = svetlichny_features_default(&PureState::basis(3, 0).unwrap()).unwrap();
        assert!(f.f.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(svetlichny_value(&f), 0.0);
    }

    #[test]
    fn ghz_features_match_brute_force() {
        let ghz = PureState::ghz();
        let f = svetlichny_features_default(&ghz).unwrap();
        // Independent construction: build each 8x8 term by hand and take Tr(rho O).
        let x = sigma_x();
        let y = sigma_y();
        let h = FRAC_1_SQRT_2;
        let cc = ComplexMatrix::from_fn(2, 2, |i, j| (x[(i, j)] + y[(i, j)]) * h);
        let cp = ComplexMatrix::from_fn(2, 2, |i, j| (x[(i, j)] - y[(i, j)]) * h);
        let terms = [
            (&x, &x, &cc),
            (&x, &x, &cp),
            (&x, &y, &cc),
            (&y, &x, &cc),
            (&y, &y, &cp),
            (&y, &y, &cc),
            (&y, &x, &cp),
            (&x, &y, &cp),
        ];
        let rho = ghz.projector();
        for (k, (a, b, c3)) in terms.iter().enumerate() {
            let o = kron(&kron(a, b), c3);
            let e = expectation(rho.matrix(), &o).unwrap();
            assert!((f.f[k] - e).abs() < 1e-12, "term {k}");
        }
        // <GHZ| x x (x+y)/sqrt2 |GHZ> = 1/sqrt2
        assert!((f.f[0] - h).abs() < 1e-12);
    }

    #[test]
    fn svetlichny_bounds() {
        let mut r = RngStream::new(3, 0);
        let bound = 4.0 * 2f64.sqrt() + 1e-6;
        for _ in 0..10_000 {
            let psi = sample_haar_pure(8, &mut r).unwrap();
            let f = svetlichny_features_default(&psi).unwrap();
            assert!(f.f.iter().all(|v| v.abs() <= 1.0 + 1e-9));
            assert!(svetlichny_value(&f).abs() <= bound);
        }
        for _ in 0..10_000 {
            // Columns of Haar unitaries are Haar-random single-qubit states.
            let us: Vec<ComplexMatrix> = (0..3).map(|_| sample_haar_unitary(2, &mut r).unwrap()).collect();
            let amps: Vec<_> = (0..8)
                .map(|i| us[0][((i >> 2) & 1, 0)] * us[1][((i >> 1) & 1, 0)] * us[2][(i & 1, 0)])
                .collect();
            let psi = PureState::normalized(amps).unwrap();
            let v = svetlichny_value(&svetlichny_features_default(&psi).unwrap());
            assert!(v.abs() <= 4.0 + 1e-6);
        }
    }

    #[test]
    fn wrong_arity_is_rejected() {
        assert!(svetlichny_features_default(&PureState::bell_phi_plus()).is_err());
        assert!(pauli_correlations_pure(&PureState::ghz()).is_err());
        assert!(pauli_correlations(&DensityMatrix::maximally_mixed(8).unwrap()).is_err());
    }
}
