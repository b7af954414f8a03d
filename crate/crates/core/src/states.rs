//! Seeded sampling of two- and three-qubit states.
//!
//! Every sampler draws from an [`RngStream`], a ChaCha8 generator addressed
//! by `(seed, stream-id)`. Dataset builders hand each row its own stream so
//! the output does not depend on how rows are spread across workers.
//!
//! Basis ordering is big-endian: qubit 0 (A) is the most significant bit, so
//! `|100>` is amplitude index 4.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures;
use crate::qmath::{self, c, kron, ComplexMatrix, C64};

/// Norm tolerance for [`PureState`].
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity, trace and eigenvalue tolerance for [`DensityMatrix`].
pub const DENSITY_TOL: f64 = 1e-10;

/// A reproducible random stream addressed by `(seed, stream_id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    spare_gaussian: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
            spare_gaussian: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.gen()
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, co) = (2.0 * PI * u2).sin_cos();
        self.spare_gaussian = Some(radius * s);
        radius * co
    }

    /// Standard complex Gaussian, `E|z|^2 = 1`.
    pub fn complex_gaussian(&mut self) -> C64 {
        c(self.gaussian(), self.gaussian()) * FRAC_1_SQRT_2
    }

    /// A point drawn uniformly from the `(k-1)`-simplex.
    pub fn dirichlet_uniform(&mut self, k: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..k).map(|_| -(1.0 - self.uniform()).ln()).collect();
        let total: f64 = e.iter().sum();
        e.into_iter().map(|x| x / total).collect()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// A normalized state vector on 2 or 3 qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Wrap amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::Precondition(format!(
                "state norm^2 is {norm2}, expected 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Computational basis state `|index>` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::Domain(format!("basis index {index} out of range")));
        }
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        Self::new(amps)
    }

    /// `(|00> + |11>)/sqrt(2)`
    pub fn bell_phi_plus() -> Self {
        Self::from_real(&[1.0, 0.0, 0.0, 1.0]).expect("valid")
    }

    /// `(|000> + |111>)/sqrt(2)`
    pub fn ghz() -> Self {
        Self::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).expect("valid")
    }

    /// `(|100> + |010> + |001>)/sqrt(3)`
    pub fn w() -> Self {
        Self::from_real(&[0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]).expect("valid")
    }

    /// Tensor product, `self` on the more significant qubits.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Self::normalized(amps)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: ComplexMatrix::outer(&self.amplitudes),
        }
    }

    /// Apply `U_0 ⊗ U_1 ⊗ ...`, one 2x2 unitary per qubit.
    pub fn apply_local(&self, unitaries: &[ComplexMatrix]) -> Result<Self> {
        if unitaries.len() != self.qubits() {
            return Err(Error::Dimension(format!(
                "{} local unitaries for {} qubits",
                unitaries.len(),
                self.qubits()
            )));
        }
        let full = qmath::kron_all(unitaries);
        Self::normalized(full.mul_vec(&self.amplitudes))
    }

    /// Reorder qubits so that new qubit `i` is old qubit `perm[i]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<Self> {
        let n = self.qubits();
        let mut seen = perm.to_vec();
        seen.sort_unstable();
        if seen != (0..n).collect::<Vec<_>>() {
            return Err(Error::Domain(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        let mut amps = vec![c(0.0, 0.0); self.dim()];
        for (old, &a) in self.amplitudes.iter().enumerate() {
            let mut new = 0usize;
            for (i, &p) in perm.iter().enumerate() {
                let bit = (old >> (n - 1 - p)) & 1;
                new |= bit << (n - 1 - i);
            }
            amps[new] = a;
        }
        Self::new(amps)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 4 || dim == 8 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "state dimension {dim} is not 4 (two qubits) or 8 (three qubits)"
        )))
    }
}

/// A validated density matrix on 2 or 3 qubits.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity (all within 1e-10).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        check_dim(matrix.rows())?;
        let residual = matrix.hermiticity_residual();
        if residual > DENSITY_TOL {
            return Err(Error::Precondition(format!(
                "density matrix not Hermitian (residual {residual:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::Precondition(format!("density matrix trace is {tr}")));
        }
        let min = qmath::hermitian_eig(&matrix)?.values[0];
        if min < -DENSITY_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// `Tr rho^2`
    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Convex combination `sum w_k rho_k`; weights must sum to one.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Dimension("weights and states differ in length".into()));
        }
        let dim = states[0].dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            if *w < 0.0 {
                return Err(Error::Domain("negative mixture weight".into()));
            }
            m = &m + &s.matrix.scale_real(*w);
        }
        Self::new(m)
    }
}

/// Haar-random pure state: i.i.d. standard complex Gaussian amplitudes, normalized.
pub fn sample_haar_pure(dim: usize, rng: &mut RngStream) -> Result<PureState> {
    check_dim(dim)?;
    loop {
        let amps: Vec<C64> = (0..dim).map(|_| rng.complex_gaussian()).collect();
        if let Ok(psi) = PureState::normalized(amps) {
            return Ok(psi);
        }
    }
}

fn sample_qubit(rng: &mut RngStream) -> [C64; 2] {
    loop {
        let a = rng.complex_gaussian();
        let b = rng.complex_gaussian();
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n > 0.0 {
            return [a / n, b / n];
        }
    }
}

/// Wishart (induced-measure) mixed state `A A^dagger / Tr(A A^dagger)` with
/// `A` a `dim x rank` complex Gaussian matrix.
pub fn sample_wishart_mixed(dim: usize, rank: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    check_dim(dim)?;
    if rank == 0 || rank > dim {
        return Err(Error::Domain(format!("rank {rank} outside 1..={dim}")));
    }
    let a = ComplexMatrix::from_fn(dim, rank, |_, _| rng.complex_gaussian());
    let g = &a * &a.adjoint();
    let t = g.trace().re;
    DensityMatrix::new(g.scale_real(1.0 / t))
}

/// Wishart draw with rank uniform in `1..=dim`.
pub fn sample_wishart_random_rank(dim: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    let rank = 1 + rng.below(dim);
    sample_wishart_mixed(dim, rank, rng)
}

/// Haar-random `dim x dim` unitary: Ginibre draw, Gram-Schmidt QR, and the
/// phase fix `Q diag(R_ii / |R_ii|)`.
pub fn sample_haar_unitary(dim: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::Domain("unitary dimension must be positive".into()));
    }
    'draw: loop {
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_gaussian());
        let mut q = ComplexMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut col: Vec<C64> = (0..dim).map(|i| g[(i, j)]).collect();
            for k in 0..j {
                let proj: C64 = (0..dim).map(|i| q[(i, k)].conj() * col[i]).sum();
                for (i, v) in col.iter_mut().enumerate() {
                    *v -= proj * q[(i, k)];
                }
            }
            // R_jj = |col| is real positive here, so the phase fix folds into
            // using the Gram-Schmidt vector as-is.
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue 'draw;
            }
            for (i, v) in col.iter().enumerate() {
                q[(i, j)] = v / norm;
            }
        }
        return Ok(q);
    }
}

fn random_local_unitaries(qubits: usize, rng: &mut RngStream) -> Vec<ComplexMatrix> {
    (0..qubits)
        .map(|_| sample_haar_unitary(2, rng).expect("dim 2"))
        .collect()
}

/// Apply independent Haar-random single-qubit unitaries to every qubit.
pub fn randomize_locally(psi: &PureState, rng: &mut RngStream) -> Result<PureState> {
    let us = random_local_unitaries(psi.qubits(), rng);
    psi.apply_local(&us)
}

/// Schmidt form `sqrt(l)|00> + sqrt(1-l)|11>` with concurrence `conc`.
pub fn schmidt_2q(conc: f64) -> Result<PureState> {
    if !(0.0..=1.0).contains(&conc) {
        return Err(Error::Domain(format!("concurrence {conc} outside [0, 1]")));
    }
    // sqrt(1 - c^2) written as sqrt((1-c)(1+c)) to keep precision near c = 1.
    let lambda = 0.5 * (1.0 + ((1.0 - conc) * (1.0 + conc)).sqrt());
    PureState::new(vec![
        c(lambda.sqrt(), 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c((1.0 - lambda).sqrt(), 0.0),
    ])
}

/// Two-qubit pure state with the requested concurrence, in a random local frame.
pub fn make_pure_2q_with_concurrence(conc: f64, rng: &mut RngStream) -> Result<PureState> {
    let psi = schmidt_2q(conc)?;
    randomize_locally(&psi, rng)
}

const MIXED_BIN_ATTEMPTS: usize = 100;
const BISECTION_STEPS: usize = 60;
const MIXED_PURITY_CEILING: f64 = 1.0 - 1e-6;

/// `p |psi><psi| + (1 - p) I/4`
pub fn white_noise_mixture(psi: &PureState, p: f64) -> Result<DensityMatrix> {
    let dim = psi.dim();
    let proj = ComplexMatrix::outer(psi.amplitudes());
    let noise = ComplexMatrix::identity(dim).scale_real((1.0 - p) / dim as f64);
    DensityMatrix::new(&proj.scale_real(p) + &noise)
}

/// Mixed two-qubit state whose Wootters concurrence lies strictly inside
/// `(bin_lo, bin_hi)`.
///
/// A pure state with concurrence at or just above `bin_hi` is mixed with
/// white noise; the mixing weight is bisected towards a label drawn
/// uniformly inside the bin. The bisection runs on the Schmidt form, and the
/// random local frame is applied afterwards (concurrence is invariant under it).
pub fn make_mixed_2q_in_bin(bin_lo: f64, bin_hi: f64, rng: &mut RngStream) -> Result<DensityMatrix> {
    if !(0.0 <= bin_lo && bin_lo < bin_hi && bin_hi <= 1.0) {
        return Err(Error::Domain(format!(
            "invalid concurrence bin [{bin_lo}, {bin_hi})"
        )));
    }
    let width = bin_hi - bin_lo;
    for attempt in 0..MIXED_BIN_ATTEMPTS {
        // Later attempts push the pure-state concurrence further above the bin.
        let reach = (1.0 + attempt as f64) * width;
        let pure_c = (bin_hi + reach * rng.uniform()).min(1.0);
        let target = bin_lo + width * rng.uniform();
        if target <= bin_lo {
            continue;
        }
        let schmidt = schmidt_2q(pure_c)?;

        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let cm = measures::concurrence_mixed(&white_noise_mixture(&schmidt, mid)?)?.value;
            if cm < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = 0.5 * (lo + hi);
        let canonical = white_noise_mixture(&schmidt, p)?;
        let label = measures::concurrence_mixed(&canonical)?.value;
        if !(label > bin_lo && label < bin_hi) || canonical.purity() >= MIXED_PURITY_CEILING {
            continue;
        }
        let us = random_local_unitaries(2, rng);
        let local = kron(&us[0], &us[1]);
        let rotated = &(&local * canonical.matrix()) * &local.adjoint();
        // Re-symmetrize to keep the result Hermitian to machine precision.
        let herm = (&rotated + &rotated.adjoint()).scale_real(0.5);
        return DensityMatrix::new(herm);
    }
    Err(Error::Exhausted(format!(
        "no mixed state found in concurrence bin ({bin_lo}, {bin_hi}) after {MIXED_BIN_ATTEMPTS} attempts"
    )))
}

/// Separable two-qubit state: a product pure state, or a mixture of 2 to 4
/// product pure states with weights uniform on the simplex.
pub fn sample_separable_2q(pure: bool, rng: &mut RngStream) -> Result<DensityMatrix> {
    let k = if pure { 1 } else { 2 + rng.below(3) };
    sample_separable_2q_with_terms(k, rng)
}

pub fn sample_separable_2q_with_terms(k: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    if k == 0 {
        return Err(Error::Domain("mixture needs at least one term".into()));
    }
    let weights = if k == 1 { vec![1.0] } else { rng.dirichlet_uniform(k) };
    let mut m = ComplexMatrix::zeros(4, 4);
    for w in weights {
        let a = sample_qubit(rng);
        let b = sample_qubit(rng);
        let v = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
        m = &m + &ComplexMatrix::outer(&v).scale_real(w);
    }
    DensityMatrix::new(m)
}

/// Generalized Schmidt form
/// `l0|000> + l1 e^{i phi}|100> + l2|101> + l3|110> + l4|111>`.
pub fn acin_form(lambdas: [f64; 5], phi: f64) -> Result<PureState> {
    let [l0, l1, l2, l3, l4] = lambdas;
    let mut amps = vec![c(0.0, 0.0); 8];
    amps[0] = c(l0, 0.0);
    amps[4] = C64::from_polar(l1, phi);
    amps[5] = c(l2, 0.0);
    amps[6] = c(l3, 0.0);
    amps[7] = c(l4, 0.0);
    PureState::normalized(amps)
}

/// `a|100> + b|010> + c|001> + d|000>`
pub fn w_form(a: f64, b: f64, cc: f64, d: f64) -> Result<PureState> {
    let mut amps = vec![c(0.0, 0.0); 8];
    amps[4] = c(a, 0.0);
    amps[2] = c(b, 0.0);
    amps[1] = c(cc, 0.0);
    amps[0] = c(d, 0.0);
    PureState::normalized(amps)
}

const GHZ_FLOOR: f64 = 0.1;
const W_FLOOR: f64 = 0.05;

/// GHZ-class draw in canonical (generalized Schmidt) form, before the random
/// local frame is applied.
pub fn sample_ghz_canonical(rng: &mut RngStream) -> PureState {
    loop {
        let sq = rng.dirichlet_uniform(5);
        let l: Vec<f64> = sq.iter().map(|x| x.sqrt()).collect();
        if l[0] < GHZ_FLOOR || l[4] < GHZ_FLOOR {
            continue;
        }
        let phi = PI * rng.uniform();
        return acin_form([l[0], l[1], l[2], l[3], l[4]], phi).expect("nonzero");
    }
}

/// W-class draw in canonical form, before the random local frame is applied.
pub fn sample_w_canonical(rng: &mut RngStream) -> PureState {
    loop {
        let sq = rng.dirichlet_uniform(4);
        let l: Vec<f64> = sq.iter().map(|x| x.sqrt()).collect();
        if l[..3].iter().any(|&x| x < W_FLOOR) {
            continue;
        }
        return w_form(l[0], l[1], l[2], l[3]).expect("nonzero");
    }
}

pub fn sample_ghz_class(rng: &mut RngStream) -> Result<PureState> {
    let psi = sample_ghz_canonical(rng);
    randomize_locally(&psi, rng)
}

pub fn sample_w_class(rng: &mut RngStream) -> Result<PureState> {
    let psi = sample_w_canonical(rng);
    randomize_locally(&psi, rng)
}

/// Single-qubit state on qubit `cut` tensored with a Haar 2-qubit state on
/// the other pair, or a fully product state with probability 1/4.
pub fn sample_biseparable_3q(rng: &mut RngStream) -> Result<PureState> {
    if rng.uniform() < 0.25 {
        let qs: Vec<[C64; 2]> = (0..3).map(|_| sample_qubit(rng)).collect();
        let amps = (0..8)
            .map(|i| qs[0][(i >> 2) & 1] * qs[1][(i >> 1) & 1] * qs[2][i & 1])
            .collect();
        return PureState::normalized(amps);
    }
    let cut = rng.below(3);
    let single = sample_qubit(rng);
    let pair = sample_haar_pure(4, rng)?;
    product_across_cut(cut, &single, pair.amplitudes())
}

/// `|single>` on qubit `cut`, `pair` on the remaining two qubits (in order).
pub fn product_across_cut(cut: usize, single: &[C64; 2], pair: &[C64]) -> Result<PureState> {
    if cut > 2 || pair.len() != 4 {
        return Err(Error::Domain("cut must be 0, 1 or 2 with a 4-dim pair".into()));
    }
    let others: Vec<usize> = (0..3).filter(|&q| q != cut).collect();
    let amps = (0..8usize)
        .map(|i| {
            let bit = |q: usize| (i >> (2 - q)) & 1;
            single[bit(cut)] * pair[(bit(others[0]) << 1) | bit(others[1])]
        })
        .collect();
    PureState::normalized(amps)
}
