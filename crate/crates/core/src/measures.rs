//! Analytic entanglement labels.
//!
//! * [`concurrence_pure`]: two-qubit pure states, `sqrt(2 (1 - Tr rho_A^2))`.
//! * [`concurrence_mixed`]: Wootters' closed form for two-qubit density matrices.
//! * [`gme_concurrence_pure`]: minimum of the bipartition concurrences of a
//!   three-qubit pure state.
//!
//! For a single-qubit reduction `rho = M M^dagger` (with `M` the 2 x (d/2)
//! reshaped amplitude matrix), `1 - Tr rho^2 = 2 det rho`, and by Cauchy-Binet
//! `det rho = sum_{j<k} |M_0j M_1k - M_0k M_1j|^2`. Summing squared minors
//! gives the same quantity as the purity formula without the catastrophic
//! cancellation of `1 - Tr rho^2` near product states.

use std::fmt;

use crate::error::{Error, Result};
use crate::qmath::{self, kron, sigma_y, ComplexMatrix};
use crate::states::{DensityMatrix, PureState};

/// Out-of-range values within this distance of `[0, 1]` are clamped.
pub const LABEL_CLAMP_TOL: f64 = 1e-9;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Concurrence,
    GmeConcurrence,
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Concurrence => "concurrence",
            LabelKind::GmeConcurrence => "gme_concurrence",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementLabel {
    pub value: f64,
    pub kind: LabelKind,
}

impl EntanglementLabel {
    fn clamped(raw: f64, kind: LabelKind) -> Result<Self> {
        if !raw.is_finite() || raw < -LABEL_CLAMP_TOL || raw > 1.0 + LABEL_CLAMP_TOL {
            return Err(Error::Numeric(format!("{kind} value {raw} outside [0, 1]")));
        }
        Ok(Self {
            value: raw.clamp(0.0, 1.0),
            kind,
        })
    }
}

fn check_pure(psi: &PureState, qubits: usize) -> Result<()> {
    if psi.qubits() != qubits {
        return Err(Error::Precondition(format!(
            "expected a {qubits}-qubit state, got {} qubits",
            psi.qubits()
        )));
    }
    let n2 = psi.norm_sqr();
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(Error::Precondition(format!("state norm^2 is {n2}")));
    }
    Ok(())
}

/// `sqrt(2 (1 - Tr rho_q^2))` for the reduction of `psi` onto qubit `qubit`.
pub fn single_qubit_cut_concurrence(psi: &PureState, qubit: usize) -> f64 {
    let n = psi.qubits();
    assert!(qubit < n);
    let amps = psi.amplitudes();
    let half = amps.len() / 2;
    let shift = n - 1 - qubit;
    // Split index i into (bit of `qubit`, remaining bits) to form the 2 x half matrix M.
    let rest = |i: usize| ((i >> (shift + 1)) << shift) | (i & ((1 << shift) - 1));
    let mut m = [vec![Default::default(); half], vec![Default::default(); half]];
    for (i, &a) in amps.iter().enumerate() {
        m[(i >> shift) & 1][rest(i)] = a;
    }
    let mut det = 0.0;
    for j in 0..half {
        for k in j + 1..half {
            det += (m[0][j] * m[1][k] - m[0][k] * m[1][j]).norm_sqr();
        }
    }
    2.0 * det.sqrt()
}

/// Concurrence of a two-qubit pure state.
pub fn concurrence_pure(psi: &PureState) -> Result<EntanglementLabel> {
    check_pure(psi, 2)?;
    EntanglementLabel::clamped(single_qubit_cut_concurrence(psi, 0), LabelKind::Concurrence)
}

/// `(sigma_y ⊗ sigma_y) rho^* (sigma_y ⊗ sigma_y)`
pub fn spin_flip(m: &ComplexMatrix) -> ComplexMatrix {
    let yy = kron(&sigma_y(), &sigma_y());
    &(&yy * &m.conj()) * &yy
}

/// Square roots of the eigenvalues of `rho rho~`, descending.
///
/// These are the eigenvalues of the Hermitian matrix `sqrt(rho) rho~ sqrt(rho)`,
/// equivalently the singular values of `X = sqrt(rho) sqrt(rho~)`. They are
/// read off the Hermitian block matrix `[[0, X], [X^dagger, 0]]`, whose
/// spectrum is `±sigma_i`, which keeps small values accurate to roundoff
/// instead of to the square root of roundoff.
pub fn wootters_roots(rho: &DensityMatrix) -> Result<[f64; 4]> {
    if rho.dim() != 4 {
        return Err(Error::Precondition(format!(
            "Wootters concurrence needs a 4x4 density matrix, got {}x{}",
            rho.dim(),
            rho.dim()
        )));
    }
    let s = qmath::psd_sqrt(rho.matrix())?;
    // sqrt(rho~) = YY sqrt(rho)^* YY since YY is real, symmetric and unitary.
    let s_flip = spin_flip(&s);
    let x = &s * &s_flip;
    let xh = x.adjoint();
    let block = ComplexMatrix::from_fn(8, 8, |i, j| match (i < 4, j < 4) {
        (true, false) => x[(i, j - 4)],
        (false, true) => xh[(i - 4, j)],
        _ => Default::default(),
    });
    let eig = qmath::hermitian_eig(&block)?;
    let mut roots = [0.0; 4];
    for (k, r) in roots.iter_mut().enumerate() {
        let v = eig.values[7 - k];
        if v < -qmath::PSD_TOL {
            return Err(Error::Numeric(format!("negative singular value {v:e}")));
        }
        *r = v.max(0.0);
    }
    Ok(roots)
}

/// Wootters concurrence `max(0, r1 - r2 - r3 - r4)` of a two-qubit state.
pub fn concurrence_mixed(rho: &DensityMatrix) -> Result<EntanglementLabel> {
    let r = wootters_roots(rho)?;
    let raw = (r[0] - r[1] - r[2] - r[3]).max(0.0);
    EntanglementLabel::clamped(raw, LabelKind::Concurrence)
}

/// Genuine multipartite concurrence of a three-qubit pure state: the
/// minimum over the cuts A|BC, B|AC, C|AB.
pub fn gme_concurrence_pure(psi: &PureState) -> Result<EntanglementLabel> {
    check_pure(psi, 3)?;
    let min = (0..3)
        .map(|q| single_qubit_cut_concurrence(psi, q))
        .fold(f64::INFINITY, f64::min);
    EntanglementLabel::clamped(min, LabelKind::GmeConcurrence)
}
