//! Dense complex linear algebra for the small (2x2 up to 8x8) matrices that
//! describe one to three qubits.
//!
//! Everything here is a pure function of its inputs. Storage is row-major and
//! dense; no attempt is made to scale beyond a few dozen rows.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on `max |m - m^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` are treated as roundoff and clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
/// Largest imaginary residue tolerated in an expectation value.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-9;

const JACOBI_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v><v|`
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |m - m^dagger|`; infinite for non-square input.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `<v| self |v>`
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        self.mul_vec(v)
            .iter()
            .zip(v)
            .map(|(mv, vi)| vi.conj() * mv)
            .sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// The single-qubit Pauli operators together with the identity.
#[derive(Clone, Debug)]
pub struct PauliBasis {
    pub sigma_x: ComplexMatrix,
    pub sigma_y: ComplexMatrix,
    pub sigma_z: ComplexMatrix,
    pub identity: ComplexMatrix,
}

impl PauliBasis {
    pub fn new() -> Self {
        Self {
            sigma_x: sigma_x(),
            sigma_y: sigma_y(),
            sigma_z: sigma_z(),
            identity: ComplexMatrix::identity(2),
        }
    }

    /// `[sigma_x, sigma_y, sigma_z]`
    pub fn xyz(&self) -> [&ComplexMatrix; 3] {
        [&self.sigma_x, &self.sigma_y, &self.sigma_z]
    }
}

impl Default for PauliBasis {
    fn default() -> Self {
        Self::new()
    }
}

fn mat2(a: C64, b: C64, cc: C64, d: C64) -> ComplexMatrix {
    ComplexMatrix {
        rows: 2,
        cols: 2,
        data: vec![a, b, cc, d],
    }
}

pub fn sigma_x() -> ComplexMatrix {
    mat2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

/// `-i|0><1| + i|1><0|`
pub fn sigma_y() -> ComplexMatrix {
    mat2(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma_z() -> ComplexMatrix {
    mat2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// Kronecker product; entry `(i*b.rows + k, j*b.cols + l)` is `a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    ComplexMatrix::from_fn(rows, cols, |r, col| {
        a[(r / b.rows, col / b.cols)] * b[(r % b.rows, col % b.cols)]
    })
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Trace out every subsystem not listed in `keep`.
///
/// `dims` lists subsystem dimensions with subsystem 0 most significant, so
/// for two qubits `keep = [0]` returns the reduced state of qubit A.
pub fn partial_trace(rho: &ComplexMatrix, keep: &[usize], dims: &[usize]) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::Dimension(format!(
            "partial trace of non-square {}x{} matrix",
            rho.rows, rho.cols
        )));
    }
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != rho.rows {
        return Err(Error::Dimension(format!(
            "subsystem dims {dims:?} do not multiply to {}",
            rho.rows
        )));
    }
    if keep.is_empty() {
        return Err(Error::Precondition("keep set must be nonempty".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Precondition(format!(
            "keep set {keep:?} is not a subset of 0..{}",
            dims.len()
        )));
    }

    let n_sub = dims.len();
    let is_kept: Vec<bool> = (0..n_sub).map(|s| kept.contains(&s)).collect();
    let kept_dim: usize = kept.iter().map(|&s| dims[s]).product();

    // Split each full index into its kept and traced parts.
    let split = |mut idx: usize| -> (usize, usize) {
        let mut digits = vec![0usize; n_sub];
        for s in (0..n_sub).rev() {
            digits[s] = idx % dims[s];
            idx /= dims[s];
        }
        let (mut k, mut t) = (0usize, 0usize);
        for s in 0..n_sub {
            if is_kept[s] {
                k = k * dims[s] + digits[s];
            } else {
                t = t * dims[s] + digits[s];
            }
        }
        (k, t)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(split).collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for r in 0..total {
        let (kr, tr) = parts[r];
        for col in 0..total {
            let (kc, tc) = parts[col];
            if tr == tc {
                out[(kr, kc)] += rho[(r, col)];
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V^dagger`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.vectors;
        let n = v.rows;
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * fl[k]).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation zeroes one off-diagonal pair `(p, q)` by first removing the
/// phase of `a[p,q]` and then applying a real Givens rotation. Sweeps stop
/// once the off-diagonal Frobenius norm drops below `1e-12 * ||m||_F`.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Precondition(format!(
            "eigendecomposition of non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let residual = m.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::Precondition(format!(
            "matrix is not Hermitian (residual {residual:e})"
        )));
    }
    let n = m.rows;
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    let cap = 100 * n * n;
    let mut rotations = 0usize;

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    while off_norm(&a) > JACOBI_TOL * scale {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if r == 0.0 || r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                if rotations >= cap {
                    return Err(Error::Numeric(format!(
                        "Jacobi eigensolver did not converge within {cap} rotations"
                    )));
                }
                rotations += 1;
                rotated = true;

                let phase = apq / r;
                let theta = 0.5 * (2.0 * r).atan2(aqq - app);
                let (s, cs) = theta.sin_cos();
                // U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on (p, q).
                let u00 = C64::new(cs, 0.0);
                let u01 = C64::new(s, 0.0);
                let u10 = -phase.conj() * s;
                let u11 = phase.conj() * cs;

                for i in 0..n {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = x * u00 + y * u10;
                    a[(i, q)] = x * u01 + y * u11;
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = x * u00 + y * u10;
                    v[(i, q)] = x * u01 + y * u11;
                }
                for j in 0..n {
                    let (x, y) = (a[(p, j)], a[(q, j)]);
                    a[(p, j)] = x * u00.conj() + y * u10.conj();
                    a[(q, j)] = x * u01.conj() + y * u11.conj();
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// `Re Tr(rho * observable)`.
pub fn expectation(rho: &ComplexMatrix, observable: &ComplexMatrix) -> Result<f64> {
    if !rho.is_square() || !observable.is_square() || rho.rows != observable.rows {
        return Err(Error::Dimension(format!(
            "expectation of {}x{} observable in {}x{} state",
            observable.rows, observable.cols, rho.rows, rho.cols
        )));
    }
    if !observable.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::Precondition("observable is not Hermitian".into()));
    }
    let n = rho.rows;
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += rho[(i, j)] * observable[(j, i)];
        }
    }
    if tr.im.abs() >= EXPECTATION_IMAG_TOL {
        return Err(Error::Numeric(format!(
            "expectation has imaginary residue {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
        })
    }

    pub fn random_hermitian(r: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(r, n, n);
        let ah = a.adjoint();
        (&a + &ah).scale_real(0.5)
    }

    /// Trace-one `A A^dagger` with a full-rank uniform-entry `A`.
    pub fn random_density(r: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(r, n, n);
        let g = &a * &a.adjoint();
        let t = g.trace().re;
        g.scale_real(1.0 / t)
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use proptest::prelude::*;

    fn bell_phi_plus() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::outer(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
    }

    #[test]
    fn new_rejects_bad_shapes_and_nan() {
        assert!(ComplexMatrix::new(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(1, 2, vec![c(1.0, 0.0); 2]).is_ok());
    }

    #[test]
    fn pauli_algebra() {
        let p = PauliBasis::new();
        let id = &p.identity;
        for s in p.xyz() {
            assert!(s.is_hermitian(0.0));
            assert_eq!(s.trace(), c(0.0, 0.0));
            assert!((s * s).max_abs_diff(id) < 1e-15);
            assert!((s * &s.adjoint()).max_abs_diff(id) < 1e-15);
        }
        // sigma_y = -i|0><1| + i|1><0|
        assert_eq!(p.sigma_y[(0, 1)], c(0.0, -1.0));
        assert_eq!(p.sigma_y[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));

        let xx = kron(&sigma_x(), &sigma_x());
        let anti = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i + j == 3 { c(1.0, 0.0) } else { c(0.0, 0.0) }
        });
        assert_eq!(xx, anti);
    }

    #[test]
    fn kron_trace_is_product_of_traces() {
        let mut r = rng(1);
        for _ in 0..50 {
            let a = random_matrix(&mut r, 2, 2);
            let b = random_matrix(&mut r, 2, 2);
            let expected = (a[(0, 0)] + a[(1, 1)]) * (b[(0, 0)] + b[(1, 1)]);
            assert!((kron(&a, &b).trace() - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn kron_is_associative() {
        let mut r = rng(2);
        for _ in 0..20 {
            let a = random_matrix(&mut r, 2, 2);
            let b = random_matrix(&mut r, 2, 3);
            let d = random_matrix(&mut r, 2, 2);
            let left = kron(&kron(&a, &b), &d);
            let right = kron(&a, &kron(&b, &d));
            assert!(left.max_abs_diff(&right) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let reduced = partial_trace(&bell_phi_plus(), &[0], &[2, 2]).unwrap();
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(reduced.max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut r = rng(3);
        let ra = random_density(&mut r, 2);
        let rb = random_density(&mut r, 2);
        let rho = kron(&ra, &rb);
        assert!(partial_trace(&rho, &[0], &[2, 2]).unwrap().max_abs_diff(&ra) < 1e-14);
        assert!(partial_trace(&rho, &[1], &[2, 2]).unwrap().max_abs_diff(&rb) < 1e-14);

        let rc = random_density(&mut r, 2);
        let rho3 = kron(&rho, &rc);
        let ac = partial_trace(&rho3, &[0, 2], &[2, 2, 2]).unwrap();
        assert!(ac.max_abs_diff(&kron(&ra, &rc)) < 1e-14);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut r = rng(4);
        for keep in [&[0usize][..], &[1], &[2], &[0, 1], &[1, 2], &[0, 1, 2]] {
            let rho = random_density(&mut r, 8);
            let red = partial_trace(&rho, keep, &[2, 2, 2]).unwrap();
            assert!((red.trace() - c(1.0, 0.0)).norm() < 1e-12);
        }
        // keeping everything is the identity map
        let rho = random_density(&mut r, 4);
        assert!(partial_trace(&rho, &[0, 1], &[2, 2]).unwrap().max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&rho, &[0], &[2, 3]), Err(Error::Dimension(_))));
        assert!(partial_trace(&rho, &[], &[2, 2]).is_err());
        assert!(partial_trace(&rho, &[2], &[2, 2]).is_err());
        assert!(partial_trace(&ComplexMatrix::zeros(2, 4), &[0], &[2]).is_err());
    }

    #[test]
    fn eig_diagonal_and_pauli() {
        let e = hermitian_eig(&ComplexMatrix::from_real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let e = hermitian_eig(&sigma_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let e = hermitian_eig(&sigma_y()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::Precondition(_))));
        assert!(hermitian_eig(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut r = rng(5);
        for n in [2, 3, 4, 8] {
            for _ in 0..20 {
                let m = random_hermitian(&mut r, n);
                let e = hermitian_eig(&m).unwrap();
                assert!(e.reconstruct().max_abs_diff(&m) < 1e-10, "n={n}");
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
                let sum: f64 = e.values.iter().sum();
                assert!((sum - m.trace().re).abs() < 1e-10);
                let vhv = &e.vectors.adjoint() * &e.vectors;
                assert!(vhv.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-10);
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_and_zero() {
        assert_eq!(hermitian_eig(&ComplexMatrix::zeros(4, 4)).unwrap().values, vec![0.0; 4]);
        let e = hermitian_eig(&ComplexMatrix::identity(8)).unwrap();
        assert!(e.values.iter().all(|&l| l == 1.0));
        let e = hermitian_eig(&bell_phi_plus()).unwrap();
        assert!((e.values[3] - 1.0).abs() < 1e-14);
        assert!(e.values[..3].iter().all(|l| l.abs() < 1e-14));
    }

    #[test]
    fn sqrt_known_cases() {
        assert!(psd_sqrt(&ComplexMatrix::identity(4)).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let s = psd_sqrt(&ComplexMatrix::from_real_diag(&[4.0, 1.0, 0.0, 9.0])).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 1.0, 0.0, 3.0])) < 1e-15);
        assert!(matches!(psd_sqrt(&ComplexMatrix::from_real_diag(&[1.0, -1e-3])), Err(Error::NotPsd(_))));
        // roundoff-sized negatives are clamped
        assert!(psd_sqrt(&ComplexMatrix::from_real_diag(&[1.0, -1e-12])).is_ok());
    }

    #[test]
    fn sqrt_squares_back_and_commutes() {
        let mut r = rng(6);
        for n in [4, 8] {
            for _ in 0..20 {
                let rho = random_density(&mut r, n);
                let s = psd_sqrt(&rho).unwrap();
                assert!(s.is_hermitian(1e-12));
                assert!((&s * &s).max_abs_diff(&rho) < 1e-9);
                assert!((&s * &rho).max_abs_diff(&(&rho * &s)) < 1e-9);
            }
        }
    }

    #[test]
    fn expectation_cases() {
        let xx = kron(&sigma_x(), &sigma_x());
        let mixed = ComplexMatrix::identity(4).scale_real(0.25);
        assert_eq!(expectation(&mixed, &xx).unwrap(), 0.0);
        let zz = kron(&sigma_z(), &sigma_z());
        assert!((expectation(&bell_phi_plus(), &zz).unwrap() - 1.0).abs() < 1e-15);
        assert!(expectation(&mixed, &sigma_x()).is_err());
        let not_herm = ComplexMatrix::from_fn(4, 4, |i, j| c((i * 4 + j) as f64, 0.0));
        assert!(expectation(&mixed, &not_herm).is_err());
    }

    #[test]
    fn expectation_flags_imaginary_residue() {
        // A non-Hermitian "state" paired with sigma_y yields an imaginary trace.
        let bogus = ComplexMatrix::new(2, 2, vec![c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(matches!(expectation(&bogus, &sigma_y()), Err(Error::Numeric(_))));
    }

    #[test]
    fn expectation_matches_elementwise_sum() {
        let mut r = rng(7);
        for _ in 0..50 {
            let rho = random_density(&mut r, 4);
            let o = random_hermitian(&mut r, 4);
            let mut sum = c(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    sum += rho[(j, i)] * o[(i, j)];
                }
            }
            assert!((expectation(&rho, &o).unwrap() - sum.re).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn expectation_is_linear_in_observable(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut r = rng(seed);
            let rho = random_density(&mut r, 4);
            let o1 = random_hermitian(&mut r, 4);
            let o2 = random_hermitian(&mut r, 4);
            let combo = &o1.scale_real(alpha) + &o2.scale_real(beta);
            let lhs = expectation(&rho, &combo).unwrap();
            let rhs = alpha * expectation(&rho, &o1).unwrap() + beta * expectation(&rho, &o2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn eig_values_sum_to_trace(seed in any::<u64>(), n in 2usize..=8) {
            let mut r = rng(seed);
            let m = random_hermitian(&mut r, n);
            let e = hermitian_eig(&m).unwrap();
            let sum: f64 = e.values.iter().sum();
            prop_assert!((sum - m.trace().re).abs() < 1e-10);
            prop_assert!(e.reconstruct().max_abs_diff(&m) < 1e-10);
        }
    }
}
